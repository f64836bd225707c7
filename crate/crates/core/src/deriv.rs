//! Derivations, inner derivations and inner 2-local derivations.
//!
//! An inner 2-local derivation is carried by a [`WitnessOracle`]: for each
//! pair of points it hands back one element implementing the map at both.
//! Everything existential ("there is an `a` with ...") bottoms out in
//! [`witness_search`], a brute-force scan in canonical order.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{commutator, Matrix, MatrixRing};
use crate::rings;

/// Pair checks enumerate every ordered pair up to this carrier size.
pub const EXHAUSTIVE_PAIR_LIMIT: u64 = 1 << 10;
/// Element-wise checks enumerate the carrier up to this size.
pub const EXHAUSTIVE_ELEMENT_LIMIT: u64 = 1 << 16;
pub const SAMPLED_PAIRS: usize = 100_000;
pub const SAMPLED_ELEMENTS: usize = 10_000;
/// Failure records kept per report; `failed` still counts all of them.
pub const FAILURE_LIMIT: usize = 256;

const ELEMENT_STREAM: u64 = 1;
const PAIR_STREAM: u64 = 2;
const CHUNK: usize = 256;

pub type MapFn = Arc<dyn Fn(&Matrix) -> Matrix + Send + Sync>;

/// The finite set a map is checked on.
#[derive(Clone, Debug)]
pub enum Domain {
    /// Every element (and every ordered pair) of the carrier.
    Exhaustive,
    /// All matrix units and the staircase element, plus `count` seeded
    /// random elements (or pairs, for pair checks).
    Sampled { seed: u64, count: usize },
    /// An explicit element list; pair checks use all pairs from it.
    Elements(Arc<Vec<Matrix>>),
}

impl Domain {
    /// Default budget for checks over pairs.
    pub fn pairs_for(carrier: &MatrixRing, seed: u64) -> Domain {
        Domain::pairs_with(carrier, seed, SAMPLED_PAIRS)
    }

    /// As [`Domain::pairs_for`] with `count` sampled pairs above the limit.
    pub fn pairs_with(carrier: &MatrixRing, seed: u64, count: usize) -> Domain {
        match carrier.cardinality() {
            Some(card) if card <= EXHAUSTIVE_PAIR_LIMIT => Domain::Exhaustive,
            _ => Domain::Sampled { seed, count },
        }
    }

    /// Default budget for element-wise checks.
    pub fn elements_for(carrier: &MatrixRing, seed: u64) -> Domain {
        Domain::elements_with(carrier, seed, SAMPLED_ELEMENTS)
    }

    pub fn elements_with(carrier: &MatrixRing, seed: u64, count: usize) -> Domain {
        match carrier.cardinality() {
            Some(card) if card <= EXHAUSTIVE_ELEMENT_LIMIT => Domain::Exhaustive,
            _ => Domain::Sampled { seed, count },
        }
    }

    pub fn from_elements(elements: Vec<Matrix>) -> Domain {
        Domain::Elements(Arc::new(elements))
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Domain::Sampled { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// The elements of this domain, in canonical order for exhaustive domains.
    pub fn elements(&self, carrier: &MatrixRing) -> Result<Vec<Matrix>> {
        match self {
            Domain::Exhaustive => carrier.enumerate(),
            Domain::Elements(list) => Ok(list.as_ref().clone()),
            Domain::Sampled { seed, count } => {
                let mut out = anchors(carrier);
                let mut rng = seeded_rng(*seed, ELEMENT_STREAM);
                out.extend((0..*count).map(|_| carrier.sample(&mut rng)));
                Ok(out)
            }
        }
    }

    /// Ordered pairs for the non-exhaustive variants.
    fn listed_pairs(&self, carrier: &MatrixRing, unordered: bool) -> Result<Vec<(Matrix, Matrix)>> {
        let square = |list: &[Matrix]| {
            let mut out = Vec::new();
            for (i, x) in list.iter().enumerate() {
                let start = if unordered { i } else { 0 };
                for y in &list[start..] {
                    out.push((x.clone(), y.clone()));
                }
            }
            out
        };
        match self {
            Domain::Exhaustive => Ok(square(&carrier.enumerate()?)),
            Domain::Elements(list) => Ok(square(list)),
            Domain::Sampled { seed, count } => {
                let mut out = square(&anchors(carrier));
                let mut rng = seeded_rng(*seed, PAIR_STREAM);
                out.extend((0..*count).map(|_| (carrier.sample(&mut rng), carrier.sample(&mut rng))));
                Ok(out)
            }
        }
    }
}

/// All matrix units plus the staircase element.
pub fn anchors(carrier: &MatrixRing) -> Vec<Matrix> {
    let mut out = carrier.units();
    if let Ok(x) = carrier.staircase() {
        out.push(x);
    }
    out
}

/// One root seed, independent streams per use.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A total map on `M_n(R)` together with the domain it is checked on.
#[derive(Clone)]
pub struct DerivationMap {
    carrier: MatrixRing,
    label: String,
    eval: MapFn,
    domain: Domain,
    witness: Option<Matrix>,
}

impl DerivationMap {
    pub fn new<F>(carrier: MatrixRing, label: impl Into<String>, f: F) -> DerivationMap
    where
        F: Fn(&Matrix) -> Matrix + Send + Sync + 'static,
    {
        let domain = Domain::pairs_for(&carrier, 0);
        DerivationMap { carrier, label: label.into(), eval: Arc::new(f), domain, witness: None }
    }

    pub fn with_domain(mut self, domain: Domain) -> DerivationMap {
        self.domain = domain;
        self
    }

    pub fn evaluate(&self, x: &Matrix) -> Matrix {
        (self.eval)(x)
    }

    pub fn carrier(&self) -> &MatrixRing {
        &self.carrier
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The implementing element, for maps built as inner derivations.
    pub fn witness(&self) -> Option<&Matrix> {
        self.witness.as_ref()
    }

    pub fn as_fn(&self) -> MapFn {
        self.eval.clone()
    }
}

impl std::fmt::Debug for DerivationMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DerivationMap")
            .field("carrier", &self.carrier.to_string())
            .field("label", &self.label)
            .field("domain", &self.domain)
            .finish()
    }
}

/// `ad(a): x ↦ a·x − x·a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InnerDerivation {
    witness: Matrix,
}

impl InnerDerivation {
    pub fn new(witness: Matrix) -> InnerDerivation {
        InnerDerivation { witness }
    }

    pub fn witness(&self) -> &Matrix {
        &self.witness
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        &(&self.witness * x) - &(x * &self.witness)
    }

    pub fn into_map(self) -> DerivationMap {
        let carrier = MatrixRing::new(self.witness.base(), self.witness.dim()).expect("a matrix has a valid carrier");
        let a = self.witness.clone();
        let mut map = DerivationMap::new(carrier, format!("ad({a})"), move |x| self.apply(x));
        map.witness = Some(a);
        map
    }
}

pub fn inner_derivation(a: &Matrix) -> DerivationMap {
    InnerDerivation::new(a.clone()).into_map()
}

pub fn identity_map(carrier: &MatrixRing) -> DerivationMap {
    DerivationMap::new(carrier.clone(), "identity", |x| x.clone())
}

pub fn zero_map(carrier: &MatrixRing) -> DerivationMap {
    let map = DerivationMap::new(carrier.clone(), "zero", |x| Matrix::zero(x.base(), x.dim()));
    DerivationMap { witness: Some(carrier.zero()), ..map }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub check: String,
    pub inputs: Vec<Matrix>,
    pub expected: Option<Matrix>,
    pub got: Option<Matrix>,
}

impl Failure {
    pub fn new(check: impl Into<String>, inputs: Vec<Matrix>, expected: Matrix, got: Matrix) -> Failure {
        Failure { check: check.into(), inputs, expected: Some(expected), got: Some(got) }
    }

    pub fn bare(check: impl Into<String>, inputs: Vec<Matrix>) -> Failure {
        Failure { check: check.into(), inputs, expected: None, got: None }
    }
}

/// Outcome of a check. Passing means no failure was recorded.
#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub checked: u64,
    /// Total failures; only the first [`FAILURE_LIMIT`] are kept in `failures`.
    pub failed: u64,
    pub failures: Vec<Failure>,
    pub witness: Option<Matrix>,
    pub seed: Option<u64>,
    pub elapsed: Duration,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failed == 0 && self.failures.is_empty()
    }

    pub fn record(&mut self, failure: Failure) {
        self.failed += 1;
        if self.failures.len() < FAILURE_LIMIT {
            self.failures.push(failure);
        }
    }

    /// Appends `other`'s counts and failures after this report's.
    pub fn absorb(&mut self, other: VerificationReport) {
        self.checked += other.checked;
        self.failed += other.failed;
        let room = FAILURE_LIMIT.saturating_sub(self.failures.len());
        self.failures.extend(other.failures.into_iter().take(room));
        if self.seed.is_none() {
            self.seed = other.seed;
        }
    }

    pub(crate) fn timed(mut self, start: Instant) -> VerificationReport {
        self.elapsed = start.elapsed();
        self
    }
}

/// Runs `check` over `items` in parallel chunks and merges the results in
/// input order, so the kept failures are the first ones in that order.
pub(crate) fn run_ordered<T, F>(items: &[T], check: F) -> VerificationReport
where
    T: Sync,
    F: Fn(&T, &mut VerificationReport) + Sync,
{
    let parts: Vec<VerificationReport> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut part = VerificationReport::default();
            for item in chunk {
                check(item, &mut part);
            }
            part
        })
        .collect();
    let mut report = VerificationReport::default();
    for part in parts {
        report.absorb(part);
    }
    report
}

/// Checks additivity and the Leibniz rule on every pair of `d`'s domain.
pub fn check_derivation(d: &DerivationMap) -> Result<VerificationReport> {
    let start = Instant::now();
    let carrier = d.carrier();
    let mut report = match d.domain() {
        Domain::Exhaustive => {
            let elements = carrier.enumerate()?;
            let values: Vec<Matrix> = elements.par_iter().map(|x| d.evaluate(x)).collect();
            let idx: Vec<usize> = (0..elements.len()).collect();
            run_ordered(&idx, |&i, part| {
                let (x, dx) = (&elements[i], &values[i]);
                for (y, dy) in elements.iter().zip(&values) {
                    part.checked += 1;
                    let sum = x + y;
                    let expected = dx + dy;
                    let got = &values[sum.canonical_index() as usize];
                    if *got != expected {
                        part.record(Failure::new("additivity", vec![x.clone(), y.clone()], expected, got.clone()));
                    }
                    let prod = x * y;
                    let expected = &(dx * y) + &(x * dy);
                    let got = &values[prod.canonical_index() as usize];
                    if *got != expected {
                        part.record(Failure::new("leibniz", vec![x.clone(), y.clone()], expected, got.clone()));
                    }
                }
            })
        }
        domain => {
            let pairs = domain.listed_pairs(carrier, false)?;
            run_ordered(&pairs, |(x, y), part| {
                part.checked += 1;
                let (dx, dy) = (d.evaluate(x), d.evaluate(y));
                let expected = &dx + &dy;
                let got = d.evaluate(&(x + y));
                if got != expected {
                    part.record(Failure::new("additivity", vec![x.clone(), y.clone()], expected, got));
                }
                let expected = &(&dx * y) + &(x * &dy);
                let got = d.evaluate(&(x * y));
                if got != expected {
                    part.record(Failure::new("leibniz", vec![x.clone(), y.clone()], expected, got));
                }
            })
        }
    };
    report.seed = d.domain().seed();
    report.witness = d.witness().cloned();
    Ok(report.timed(start))
}

/// The canonically least `b` with `[b, x] = target` for every constraint,
/// or `None` if there is none.
///
/// `b ↦ [b, x]` is `Z_m`-linear in the coordinates of `b`, so the scan walks
/// the carrier in canonical order like an odometer and keeps the running
/// commutators up to date by adding one basis image per step.
pub fn witness_search(carrier: &MatrixRing, constraints: &[(Matrix, Matrix)]) -> Result<Option<Matrix>> {
    carrier.cardinality().ok_or(Error::InfiniteRing)?;
    for (x, target) in constraints {
        if !carrier.contains(x) || !carrier.contains(target) {
            return Err(Error::ShapeMismatch(format!("constraint outside {carrier}")));
        }
    }
    let rank = carrier.rank();
    let m = carrier.base().modulus();
    let width = carrier.rank() * constraints.len();

    let mut target = Vec::with_capacity(width);
    for (_, t) in constraints {
        target.extend_from_slice(t.data());
    }
    // images[s] = ([β_s, x_1], ..., [β_s, x_k]) for the s-th basis vector β_s
    let mut images = Vec::with_capacity(rank * width);
    for s in 0..rank {
        let basis = carrier.basis_vector(s);
        for (x, _) in constraints {
            images.extend_from_slice(commutator(&basis, x)?.data());
        }
    }

    let mut digits = vec![0u32; rank];
    let mut current = vec![0u32; width];
    loop {
        if current == target {
            return Ok(Some(carrier.from_element(&carrier.as_ring().element(digits)?)));
        }
        let mut s = rank;
        loop {
            if s == 0 {
                return Ok(None);
            }
            s -= 1;
            digits[s] += 1;
            rings::add_mod(&mut current, &images[s * width..][..width], m);
            if digits[s] < m {
                break;
            }
            // m additions of the same image wrap `current` back around
            digits[s] = 0;
        }
    }
}

pub trait WitnessOracle: Send + Sync {
    fn carrier(&self) -> &MatrixRing;

    /// An element `a` with `Δ(x) = [a, x]` and `Δ(y) = [a, y]`.
    fn select(&self, x: &Matrix, y: &Matrix) -> Result<Matrix>;

    /// The value `Δ(x)` this oracle induces.
    fn induced(&self, x: &Matrix) -> Result<Matrix> {
        commutator(&self.select(x, x)?, x)
    }
}

impl<T: WitnessOracle + ?Sized> WitnessOracle for Arc<T> {
    fn carrier(&self) -> &MatrixRing {
        (**self).carrier()
    }

    fn select(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        (**self).select(x, y)
    }

    fn induced(&self, x: &Matrix) -> Result<Matrix> {
        (**self).induced(x)
    }
}

/// Induces `ad(a)` but answers every pair with the canonically least witness
/// found by search, which is usually not `a`.
#[derive(Clone, Debug)]
pub struct AdversarialOracle {
    carrier: MatrixRing,
    a: Matrix,
}

pub fn adversarial_oracle(a: &Matrix) -> AdversarialOracle {
    let carrier = MatrixRing::new(a.base(), a.dim()).expect("a matrix has a valid carrier");
    AdversarialOracle { carrier, a: a.clone() }
}

impl AdversarialOracle {
    pub fn hidden_witness(&self) -> &Matrix {
        &self.a
    }
}

impl WitnessOracle for AdversarialOracle {
    fn carrier(&self) -> &MatrixRing {
        &self.carrier
    }

    fn select(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        let constraints = [(x.clone(), commutator(&self.a, x)?), (y.clone(), commutator(&self.a, y)?)];
        witness_search(&self.carrier, &constraints)?
            .ok_or_else(|| Error::InconsistentOracle(format!("no witness for ({x}, {y})")))
    }

    fn induced(&self, x: &Matrix) -> Result<Matrix> {
        commutator(&self.a, x)
    }
}

/// Answers every pair with the same element.
#[derive(Clone, Debug)]
pub struct FixedWitnessOracle {
    carrier: MatrixRing,
    w: Matrix,
}

impl FixedWitnessOracle {
    pub fn new(w: &Matrix) -> FixedWitnessOracle {
        let carrier = MatrixRing::new(w.base(), w.dim()).expect("a matrix has a valid carrier");
        FixedWitnessOracle { carrier, w: w.clone() }
    }
}

impl WitnessOracle for FixedWitnessOracle {
    fn carrier(&self) -> &MatrixRing {
        &self.carrier
    }

    fn select(&self, _x: &Matrix, _y: &Matrix) -> Result<Matrix> {
        Ok(self.w.clone())
    }
}

/// The map `x ↦ Δ(x)` of an oracle. Panics if the oracle fails to answer.
pub fn induced_map(oracle: Arc<dyn WitnessOracle>) -> DerivationMap {
    let carrier = oracle.carrier().clone();
    DerivationMap::new(carrier, "induced", move |x| {
        oracle.induced(x).unwrap_or_else(|e| panic!("oracle failed at {x}: {e}"))
    })
}

/// Checks that every answer `select(x, y)` reproduces the induced values at
/// both `x` and `y`, over all ordered pairs of `elements`.
pub fn check_oracle_consistency(oracle: &dyn WitnessOracle, elements: &[Matrix]) -> Result<VerificationReport> {
    let start = Instant::now();
    let values = elements.par_iter().map(|x| oracle.induced(x)).collect::<Result<Vec<_>>>()?;
    let idx: Vec<usize> = (0..elements.len()).collect();
    let errors = std::sync::Mutex::new(None);
    let report = run_ordered(&idx, |&i, part| {
        let x = &elements[i];
        for (j, y) in elements.iter().enumerate() {
            part.checked += 1;
            let w = match oracle.select(x, y) {
                Ok(w) => w,
                Err(e) => {
                    errors.lock().unwrap().get_or_insert(e);
                    return;
                }
            };
            // one record per pair, for the first side that disagrees
            let at_x = commutator(&w, x).expect("same carrier");
            let at_y = commutator(&w, y).expect("same carrier");
            if at_x != values[i] {
                part.record(Failure::new("consistency", vec![x.clone(), y.clone()], values[i].clone(), at_x));
            } else if at_y != values[j] {
                part.record(Failure::new("consistency", vec![x.clone(), y.clone()], values[j].clone(), at_y));
            }
        }
    });
    if let Some(e) = errors.into_inner().unwrap() {
        return Err(e);
    }
    Ok(report.timed(start))
}

/// For every unordered pair `{x, y}` of the map's domain, searches for one
/// element implementing the map at both points.
pub fn check_two_local(delta: &DerivationMap) -> Result<VerificationReport> {
    let start = Instant::now();
    let carrier = delta.carrier();
    carrier.cardinality().ok_or(Error::InfiniteRing)?;
    let search = |x: &Matrix, dx: &Matrix, y: &Matrix, dy: &Matrix| {
        witness_search(carrier, &[(x.clone(), dx.clone()), (y.clone(), dy.clone())])
            .expect("constraints lie in the carrier")
    };
    let mut report = match delta.domain() {
        Domain::Sampled { .. } => {
            let pairs = delta.domain().listed_pairs(carrier, true)?;
            run_ordered(&pairs, |(x, y), part| {
                part.checked += 1;
                if search(x, &delta.evaluate(x), y, &delta.evaluate(y)).is_none() {
                    part.record(Failure::bare("two-local", vec![x.clone(), y.clone()]));
                }
            })
        }
        domain => {
            let elements = domain.elements(carrier)?;
            let values: Vec<Matrix> = elements.par_iter().map(|x| delta.evaluate(x)).collect();
            let idx: Vec<usize> = (0..elements.len()).collect();
            run_ordered(&idx, |&i, part| {
                for j in i..elements.len() {
                    part.checked += 1;
                    if search(&elements[i], &values[i], &elements[j], &values[j]).is_none() {
                        part.record(Failure::bare("two-local", vec![elements[i].clone(), elements[j].clone()]));
                    }
                }
            })
        }
    };
    report.seed = delta.domain().seed();
    Ok(report.timed(start))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapDifference {
    pub at: Matrix,
    pub left: Matrix,
    pub right: Matrix,
}

#[derive(Clone, Debug)]
pub struct MapEquality {
    pub equal: bool,
    pub checked: u64,
    pub first_difference: Option<MapDifference>,
}

/// Compares two maps on every element of `domain`; reports the first
/// difference in domain order.
pub fn maps_equal<F, G>(d1: F, d2: G, domain: &[Matrix]) -> MapEquality
where
    F: Fn(&Matrix) -> Matrix + Sync,
    G: Fn(&Matrix) -> Matrix + Sync,
{
    let first_difference = domain.par_iter().find_map_first(|x| {
        let (left, right) = (d1(x), d2(x));
        (left != right).then(|| MapDifference { at: x.clone(), left, right })
    });
    MapEquality { equal: first_difference.is_none(), checked: domain.len() as u64, first_difference }
}
