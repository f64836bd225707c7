//! Assembling a single implementing element from an inner 2-local
//! derivation's oracle.
//!
//! With `x_o` the staircase element, the oracle is asked for `a(ij)` at every
//! pair `(e_ij, x_o)`, `i ≠ j`. The off-diagonal part of the result is
//! `Σ_{i≠j} e_ii·a(ji)·e_jj` and the diagonal part is copied from the answer
//! `c` for one fixed pair `(e_{i_o j_o}, x_o)`. Over a commutative base the
//! assembled `ā` satisfies `Δ = ad(ā)`.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::deriv::{Domain, Failure, VerificationReport, WitnessOracle};
use crate::error::{Error, Result};
use crate::matrix::{commutator, pierce_component, Matrix, MatrixRing};
use crate::rings;

pub const DEFAULT_FIXED_PAIR: (usize, usize) = (1, 2);

pub type UnitWitnesses = BTreeMap<(usize, usize), Matrix>;

#[derive(Clone, Debug)]
pub struct ExtractionState {
    pub n: usize,
    /// `a(ij)` for every ordered pair `i ≠ j`.
    pub unit_witnesses: UnitWitnesses,
    /// `Σ_{k≠l} a_kl` with `a_kl = e_kk·a(lk)·e_ll`.
    pub offdiag: Matrix,
    pub fixed_pair: (usize, usize),
    /// The answer `c` for the fixed pair; only its diagonal is used.
    pub diag_source: Matrix,
    pub abar: Matrix,
    /// Distinct oracle calls made.
    pub queries: usize,
    /// Set when the base ring is not commutative and extraction was forced.
    pub forced: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct ExtractOptions {
    pub fixed_pair: (usize, usize),
    pub force: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { fixed_pair: DEFAULT_FIXED_PAIR, force: false }
    }
}

fn check_dim(oracle: &dyn WitnessOracle, n: usize) -> Result<&MatrixRing> {
    let carrier = oracle.carrier();
    if carrier.dim() != n {
        return Err(Error::ShapeMismatch(format!("oracle lives on {carrier}, not dimension {n}")));
    }
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    Ok(carrier)
}

fn off_diagonal_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n - 1));
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                out.push((i, j));
            }
        }
    }
    out
}

/// `a(ij) = select(e_ij, x_o)` for all `i ≠ j`.
pub fn collect_unit_witnesses(oracle: &dyn WitnessOracle, n: usize) -> Result<UnitWitnesses> {
    let carrier = check_dim(oracle, n)?;
    let x_o = carrier.staircase()?;
    off_diagonal_pairs(n)
        .into_par_iter()
        .map(|(i, j)| Ok(((i, j), oracle.select(&carrier.unit(i, j)?, &x_o)?)))
        .collect()
}

/// `Σ_{i≠j} e_ii·a(ji)·e_jj`; note the transposed witness index.
pub fn assemble_offdiagonal(witnesses: &UnitWitnesses, n: usize) -> Result<Matrix> {
    let any = witnesses.values().next().ok_or(Error::MissingWitness(1, 2))?;
    let mut sum = Matrix::zero(any.base(), n);
    for (i, j) in off_diagonal_pairs(n) {
        let a_ji = witnesses.get(&(j, i)).ok_or(Error::MissingWitness(j, i))?;
        sum = &sum + &pierce_component(a_ji, i, j)?;
    }
    Ok(sum)
}

/// The oracle's answer for `(e_{i_o j_o}, x_o)`.
pub fn diagonal_from_fixed_pair(oracle: &dyn WitnessOracle, n: usize, i_o: usize, j_o: usize) -> Result<Matrix> {
    let carrier = check_dim(oracle, n)?;
    if i_o == j_o {
        return Err(Error::PreconditionViolated(format!("fixed pair ({i_o}, {j_o}) must be off-diagonal")));
    }
    oracle.select(&carrier.unit(i_o, j_o)?, &carrier.staircase()?)
}

/// `Σ_i e_ii·c·e_ii`.
pub fn diagonal_part(c: &Matrix) -> Result<Matrix> {
    let mut d = Matrix::zero(c.base(), c.dim());
    for i in 1..=c.dim() {
        d = &d + &pierce_component(c, i, i)?;
    }
    Ok(d)
}

pub fn extract_witness(oracle: &dyn WitnessOracle, n: usize) -> Result<ExtractionState> {
    extract_witness_with(oracle, n, ExtractOptions::default())
}

/// Builds `ā`. Refuses non-commutative bases unless `force` is set, in which
/// case the result is marked as forced and carries no guarantee.
pub fn extract_witness_with(oracle: &dyn WitnessOracle, n: usize, opts: ExtractOptions) -> Result<ExtractionState> {
    let carrier = check_dim(oracle, n)?;
    let base = carrier.base();
    let commutative = rings::is_commutative(base).commutative;
    if !commutative && !opts.force {
        return Err(Error::NonCommutativeBase(base.to_string()));
    }
    let (i_o, j_o) = opts.fixed_pair;
    if i_o == j_o || i_o == 0 || j_o == 0 || i_o > n || j_o > n {
        return Err(Error::PreconditionViolated(format!("invalid fixed pair ({i_o}, {j_o})")));
    }
    let unit_witnesses = collect_unit_witnesses(oracle, n)?;
    let offdiag = assemble_offdiagonal(&unit_witnesses, n)?;
    // (e_{i_o j_o}, x_o) is one of the unit queries already made
    let diag_source = unit_witnesses[&(i_o, j_o)].clone();
    let abar = &offdiag + &diagonal_part(&diag_source)?;
    Ok(ExtractionState {
        n,
        queries: unit_witnesses.len(),
        unit_witnesses,
        offdiag,
        fixed_pair: (i_o, j_o),
        diag_source,
        abar,
        forced: !commutative,
    })
}

/// Compares `ad(ā)` with the oracle's induced map on `domain`.
pub fn verify_extraction(
    state: &ExtractionState,
    oracle: &dyn WitnessOracle,
    domain: &Domain,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let carrier = oracle.carrier();
    let elements = domain.elements(carrier)?;
    let abar = &state.abar;
    let first =
        elements.par_iter().map(|x| Ok((x, oracle.induced(x)?))).collect::<Result<Vec<_>>>()?.into_iter().find_map(
            |(x, delta)| {
                let ad = commutator(abar, x).expect("same carrier");
                (ad != delta).then(|| (x.clone(), ad, delta))
            },
        );
    let mut report = VerificationReport { checked: elements.len() as u64, seed: domain.seed(), ..Default::default() };
    if let Some((x, ad, delta)) = first {
        report.record(Failure::new("ad(abar) = delta", vec![x], delta, ad));
    }
    report.witness = Some(abar.clone());
    report.elapsed = start.elapsed();
    Ok(report)
}

fn sandwich(x: &Matrix, p: usize, q: usize) -> Result<Matrix> {
    pierce_component(x, p, q)
}

/// Evaluates both sides of
/// `Δ(e_ij) = S·e_ij − e_ij·S + a(ij)_ii·e_ij − e_ij·a(ij)_jj`, `S = Σ_{k≠l} a_kl`,
/// and, for every third index `m`, replays the Pierce-component identities
/// that prove it using the witnesses for `(e_im, e_ij)` and `(e_mj, e_ij)`.
pub fn verify_lemma2(oracle: &dyn WitnessOracle, n: usize, i: usize, j: usize) -> Result<VerificationReport> {
    let start = Instant::now();
    let carrier = check_dim(oracle, n)?;
    if i == j {
        return Err(Error::PreconditionViolated(format!("indices ({i}, {j}) must differ")));
    }
    let unit = |p: usize, q: usize| carrier.unit(p, q);
    let witnesses = collect_unit_witnesses(oracle, n)?;
    let s = assemble_offdiagonal(&witnesses, n)?;
    let e_ij = unit(i, j)?;
    let a_ij = &witnesses[&(i, j)];

    let core = &(&s * &e_ij) - &(&e_ij * &s);
    let delta_eij = commutator(a_ij, &e_ij)?;
    let rhs = &(&core + &(&pierce_component(a_ij, i, i)? * &e_ij)) - &(&e_ij * &pierce_component(a_ij, j, j)?);

    let mut report = VerificationReport::default();
    let mut expect = |label: String, inputs: Vec<Matrix>, lhs: Matrix, rhs: Matrix| {
        report.checked += 1;
        if lhs != rhs {
            report.record(Failure::new(label, inputs, rhs, lhs));
        }
    };
    expect(format!("unit-formula ({i},{j})"), vec![e_ij.clone()], delta_eij.clone(), rhs);
    expect(format!("e{i}{i} delta e{i}{i}"), vec![e_ij.clone()], sandwich(&delta_eij, i, i)?, sandwich(&core, i, i)?);
    expect(format!("e{j}{j} delta e{j}{j}"), vec![e_ij.clone()], sandwich(&delta_eij, j, j)?, sandwich(&core, j, j)?);

    for m in (1..=n).filter(|&m| m != i && m != j) {
        let (e_im, e_mj, e_mm) = (unit(i, m)?, unit(m, j)?, unit(m, m)?);
        let (e_ii, e_jj) = (unit(i, i)?, unit(j, j)?);
        let a_im = &witnesses[&(i, m)];
        let a_mj = &witnesses[&(m, j)];

        let b_im = oracle.select(&e_im, &e_ij)?;
        let delta = commutator(&b_im, &e_ij)?;
        expect(
            format!("delta(e{i}{m}) via a({i}{j},{i}{m})"),
            vec![e_im.clone(), e_ij.clone()],
            commutator(&b_im, &e_im)?,
            commutator(a_im, &e_im)?,
        );
        expect(
            format!("e{m}{m} a({i}{j},{i}{m}) e{i}{j}"),
            vec![e_im.clone(), e_ij.clone()],
            &(&e_mm * &b_im) * &e_ij,
            &(&e_mm * a_im) * &e_ij,
        );
        expect(
            format!("e{m}{m} delta e{j}{j}"),
            vec![e_im.clone(), e_ij.clone()],
            sandwich(&delta, m, j)?,
            sandwich(&core, m, j)?,
        );
        expect(
            format!("e{m}{m} delta e{i}{i}"),
            vec![e_im.clone(), e_ij.clone()],
            sandwich(&delta, m, i)?,
            sandwich(&core, m, i)?,
        );

        let b_mj = oracle.select(&e_mj, &e_ij)?;
        let delta = commutator(&b_mj, &e_ij)?;
        expect(
            format!("delta(e{m}{j}) via a({i}{j},{m}{j})"),
            vec![e_mj.clone(), e_ij.clone()],
            commutator(&b_mj, &e_mj)?,
            commutator(a_mj, &e_mj)?,
        );
        expect(
            format!("e{i}{j} a({i}{j},{m}{j}) e{m}{m}"),
            vec![e_mj.clone(), e_ij.clone()],
            &(&e_ij * &b_mj) * &e_mm,
            &(&e_ij * a_mj) * &e_mm,
        );
        expect(
            format!("e{i}{i} delta e{m}{m}"),
            vec![e_mj.clone(), e_ij.clone()],
            &(&e_ii * &delta) * &e_mm,
            sandwich(&core, i, m)?,
        );
        expect(
            format!("e{j}{j} delta e{m}{m}"),
            vec![e_mj.clone(), e_ij.clone()],
            &(&e_jj * &delta) * &e_mm,
            sandwich(&core, j, m)?,
        );
    }
    Ok(report.timed(start))
}

/// Given `[b, x_o] = [c, x_o]`, checks `c^kk − c^ll = b^kk − b^ll` for all
/// `k ≠ l`.
pub fn verify_lemma3(carrier: &MatrixRing, b: &Matrix, c: &Matrix) -> Result<VerificationReport> {
    let start = Instant::now();
    if !carrier.contains(b) || !carrier.contains(c) {
        return Err(Error::ShapeMismatch(format!("arguments must lie in {carrier}")));
    }
    let x_o = carrier.staircase()?;
    if commutator(b, &x_o)? != commutator(c, &x_o)? {
        return Err(Error::PreconditionViolated("[b, x_o] and [c, x_o] differ".into()));
    }
    let base = carrier.base();
    let n = carrier.dim();
    let mut report = VerificationReport::default();
    for k in 1..=n {
        for l in (1..=n).filter(|&l| l != k) {
            report.checked += 1;
            let dc = base.sub(&c.entry(k, k)?, &c.entry(l, l)?);
            let db = base.sub(&b.entry(k, k)?, &b.entry(l, l)?);
            if dc != db {
                report.record(Failure::bare(format!("diagonal difference ({k},{l})"), vec![b.clone(), c.clone()]));
            }
        }
    }
    Ok(report.timed(start))
}
