//! Subrings generated by two elements, and the check that an additive map
//! agreeing with `[d, ·]` on both generators agrees with it everywhere.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;

use crate::deriv::{witness_search, Failure, VerificationReport, WitnessOracle};
use crate::error::{Error, Result};
use crate::matrix::{commutator, Matrix, MatrixRing};

#[derive(Clone, Debug)]
pub struct GeneratedSubring {
    ambient: MatrixRing,
    x: Matrix,
    y: Matrix,
    unital: bool,
    elements: Vec<Matrix>,
}

impl GeneratedSubring {
    pub fn ambient(&self) -> &MatrixRing {
        &self.ambient
    }

    pub fn generators(&self) -> (&Matrix, &Matrix) {
        (&self.x, &self.y)
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    /// Canonically ordered.
    pub fn elements(&self) -> &[Matrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, z: &Matrix) -> bool {
        self.position(z).is_some()
    }

    fn position(&self, z: &Matrix) -> Option<usize> {
        self.elements.binary_search(z).ok()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ClosureOptions {
    /// Adjoin the identity before closing.
    pub unital: bool,
    /// Maximum closure size; `None` means the ambient cardinality.
    pub budget: Option<usize>,
}

pub fn generate_subring(x: &Matrix, y: &Matrix) -> Result<GeneratedSubring> {
    generate_subring_with(x, y, ClosureOptions::default())
}

/// The least set containing `x`, `y` (and 1 if unital) closed under `+`, `−`
/// and `·`, by worklist iteration.
pub fn generate_subring_with(x: &Matrix, y: &Matrix, opts: ClosureOptions) -> Result<GeneratedSubring> {
    if !x.same_shape(y) {
        return Err(Error::ShapeMismatch("generators differ in shape".into()));
    }
    let ambient = MatrixRing::new(x.base(), x.dim())?;
    let budget = opts
        .budget
        .or_else(|| ambient.cardinality().and_then(|c| usize::try_from(c).ok()))
        .ok_or(Error::InfiniteRing)?;

    let mut seen = BTreeSet::new();
    let mut order: Vec<Matrix> = Vec::new();
    let push = |z: Matrix, seen: &mut BTreeSet<Matrix>, order: &mut Vec<Matrix>| -> Result<()> {
        if seen.insert(z.clone()) {
            if seen.len() > budget {
                return Err(Error::ClosureBudgetExceeded(budget));
            }
            order.push(z);
        }
        Ok(())
    };
    let mut seeds = vec![ambient.zero(), x.clone(), y.clone()];
    if opts.unital {
        seeds.push(ambient.identity());
    }
    for z in seeds {
        push(z, &mut seen, &mut order)?;
    }
    let mut next = 0;
    while next < order.len() {
        let u = order[next].clone();
        push(-&u, &mut seen, &mut order)?;
        for k in 0..=next {
            let v = order[k].clone();
            push(&u + &v, &mut seen, &mut order)?;
            push(&u * &v, &mut seen, &mut order)?;
            push(&v * &u, &mut seen, &mut order)?;
        }
        next += 1;
    }
    Ok(GeneratedSubring {
        ambient,
        x: x.clone(),
        y: y.clone(),
        unital: opts.unital,
        elements: seen.into_iter().collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    X,
    Y,
}

pub fn parse_word(text: &str) -> Result<Vec<Generator>> {
    if text.is_empty() {
        return Err(Error::EmptyWord);
    }
    text.chars()
        .map(|c| match c {
            'x' => Ok(Generator::X),
            'y' => Ok(Generator::Y),
            other => Err(Error::WordSymbol(other)),
        })
        .collect()
}

/// Left-to-right product of the word with `x`, `y` substituted.
pub fn word_eval(word: &[Generator], x: &Matrix, y: &Matrix) -> Result<Matrix> {
    let pick = |g: &Generator| match g {
        Generator::X => x,
        Generator::Y => y,
    };
    let (first, rest) = word.split_first().ok_or(Error::EmptyWord)?;
    Ok(rest.iter().fold(pick(first).clone(), |acc, g| &acc * pick(g)))
}

/// A `d` with `Δ(x) = [d, x]` and `Δ(y) = [d, y]`, searched in the ambient
/// ring.
pub fn generator_witness<F>(s: &GeneratedSubring, delta: F) -> Result<Option<Matrix>>
where
    F: Fn(&Matrix) -> Matrix,
{
    witness_search(&s.ambient, &[(s.x.clone(), delta(&s.x)), (s.y.clone(), delta(&s.y))])
}

/// Checks additivity of `Δ` on `S` first; if that holds, requires
/// `Δ = [d, ·]` on both generators and then verifies it on every element.
/// A non-additive `Δ` is reported through `additivity` failures.
pub fn check_prop10<F>(s: &GeneratedSubring, delta: F, d: &Matrix) -> Result<VerificationReport>
where
    F: Fn(&Matrix) -> Matrix + Sync,
{
    let start = Instant::now();
    let values: Vec<Matrix> = s.elements.par_iter().map(&delta).collect();
    let value = |z: &Matrix| -> &Matrix { &values[s.position(z).expect("closed under +")] };

    let mut report = VerificationReport::default();
    let n = s.elements.len();
    let additivity: Vec<Option<Failure>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (u, v) = (&s.elements[k / n], &s.elements[k % n]);
            let expected = &values[k / n] + &values[k % n];
            let got = value(&(u + v));
            (*got != expected).then(|| Failure::new("additivity", vec![u.clone(), v.clone()], expected, got.clone()))
        })
        .collect();
    report.checked += (n * n) as u64;
    for f in additivity.into_iter().flatten() {
        report.record(f);
    }
    if !report.passed() {
        return Ok(report.timed(start));
    }

    for g in [&s.x, &s.y] {
        if *value(g) != commutator(d, g)? {
            return Err(Error::PreconditionViolated(format!("Δ({g}) ≠ [d, {g}] for d = {d}")));
        }
    }

    let inner: Vec<Option<Failure>> = s
        .elements
        .par_iter()
        .zip(values.par_iter())
        .map(|(p, got)| {
            let expected = commutator(d, p).expect("same carrier");
            (*got != expected).then(|| Failure::new("inner", vec![p.clone()], expected, got.clone()))
        })
        .collect();
    report.checked += n as u64;
    for f in inner.into_iter().flatten() {
        report.record(f);
    }
    report.witness = Some(d.clone());
    Ok(report.timed(start))
}

#[derive(Clone, Debug)]
pub struct Prop10Outcome {
    /// The oracle's witness for the generator pair.
    pub d: Matrix,
    /// Whether `d` lies in the generated subring.
    pub d_in_subring: bool,
    pub report: VerificationReport,
}

/// [`check_prop10`] with `Δ` the oracle's induced map and `d` its answer for
/// the generator pair.
pub fn check_prop10_oracle(s: &GeneratedSubring, oracle: &dyn WitnessOracle) -> Result<Prop10Outcome> {
    let d = oracle.select(&s.x, &s.y)?;
    let values: Vec<Matrix> = s.elements.par_iter().map(|p| oracle.induced(p)).collect::<Result<_>>()?;
    let report = check_prop10(s, |p| values[s.position(p).expect("element of S")].clone(), &d)?;
    Ok(Prop10Outcome { d_in_subring: s.contains(&d), d, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deriv::adversarial_oracle;
    use crate::rings::Ring;

    fn carrier(m: u32, n: usize) -> MatrixRing {
        MatrixRing::new(&Ring::integers_mod(m).unwrap(), n).unwrap()
    }

    #[test]
    fn closure_examples() {
        let c = carrier(2, 2);
        let (e11, e12, e21) = (c.unit(1, 1).unwrap(), c.unit(1, 2).unwrap(), c.unit(2, 1).unwrap());
        let s = generate_subring(&e12, &e21).unwrap();
        assert_eq!(s.elements(), c.enumerate().unwrap().as_slice());
        let s = generate_subring(&e11, &c.zero()).unwrap();
        assert_eq!(s.elements(), &[c.zero(), e11.clone()]);
        let s = generate_subring(&c.zero(), &c.zero()).unwrap();
        assert_eq!(s.elements(), &[c.zero()]);
        let s = generate_subring_with(&c.zero(), &c.zero(), ClosureOptions { unital: true, budget: None }).unwrap();
        assert_eq!(s.len(), 2);
        let err = generate_subring_with(&e12, &e21, ClosureOptions { unital: false, budget: Some(5) });
        assert!(matches!(err, Err(Error::ClosureBudgetExceeded(5))));
    }

    #[test]
    fn closure_is_closed() {
        let c = carrier(4, 2);
        let mut rng = crate::deriv::seeded_rng(11, 0);
        for _ in 0..5 {
            let s = generate_subring(&c.sample(&mut rng), &c.sample(&mut rng)).unwrap();
            for u in s.elements() {
                assert!(s.contains(&-u));
                for v in s.elements() {
                    assert!(s.contains(&(u + v)) && s.contains(&(u * v)));
                }
            }
        }
    }

    #[test]
    fn words() {
        let c = carrier(2, 2);
        let (e11, e12, e21) = (c.unit(1, 1).unwrap(), c.unit(1, 2).unwrap(), c.unit(2, 1).unwrap());
        let ev = |w: &str, x: &Matrix, y: &Matrix| word_eval(&parse_word(w).unwrap(), x, y).unwrap();
        assert_eq!(ev("xy", &e12, &e21), e11);
        assert!(ev("xx", &e12, &c.identity()).is_zero());
        assert_eq!(ev("yxy", &e12, &e21), e21);
        assert!(matches!(parse_word(""), Err(Error::EmptyWord)));
        assert!(matches!(parse_word("xz"), Err(Error::WordSymbol('z'))));
        assert!(matches!(word_eval(&[], &e12, &e21), Err(Error::EmptyWord)));
    }

    #[test]
    fn inner_map_passes() {
        let c = carrier(2, 2);
        let (e11, e12, e21) = (c.unit(1, 1).unwrap(), c.unit(1, 2).unwrap(), c.unit(2, 1).unwrap());
        let s = generate_subring(&e12, &e21).unwrap();
        let r = check_prop10(&s, |p| commutator(&e11, p).unwrap(), &e11).unwrap();
        assert!(r.passed());
        assert_eq!(r.checked, 256 + 16);
    }

    #[test]
    fn oracle_variant() {
        let c = carrier(2, 2);
        let (e12, e21) = (c.unit(1, 2).unwrap(), c.unit(2, 1).unwrap());
        let s = generate_subring(&e12, &e21).unwrap();
        let out = check_prop10_oracle(&s, &adversarial_oracle(&e12)).unwrap();
        assert!(out.report.passed());
        assert!(out.d_in_subring);
    }

    #[test]
    fn identity_is_rejected_after_the_generators() {
        let c = carrier(2, 2);
        let (e12, e21) = (c.unit(1, 2).unwrap(), c.unit(2, 1).unwrap());
        let s = generate_subring(&e12, &e21).unwrap();
        let d = generator_witness(&s, |p| p.clone()).unwrap().expect("a witness exists over Z_2");
        // e22 precedes e11 canonically and also works in characteristic 2
        assert_eq!(d, c.unit(2, 2).unwrap());
        let r = check_prop10(&s, |p| p.clone(), &d).unwrap();
        assert!(!r.passed());
        assert_eq!(r.failures[0].check, "inner");
        assert_eq!(r.failures[0].inputs, vec![c.unit(2, 2).unwrap()]);
    }

    #[test]
    fn non_additive_map_is_reported() {
        let c = carrier(2, 2);
        let (e12, e21) = (c.unit(1, 2).unwrap(), c.unit(2, 1).unwrap());
        let s = generate_subring(&e12, &e21).unwrap();
        let r = check_prop10(&s, |p| if p.is_zero() { p.clone() } else { c.identity() }, &c.zero()).unwrap();
        assert!(!r.passed());
        assert!(r.failures.iter().all(|f| f.check == "additivity"));
    }

    #[test]
    fn generator_mismatch_is_a_precondition_error() {
        let c = carrier(2, 2);
        let (e11, e12, e21) = (c.unit(1, 1).unwrap(), c.unit(1, 2).unwrap(), c.unit(2, 1).unwrap());
        let s = generate_subring(&e12, &e21).unwrap();
        let r = check_prop10(&s, |p| commutator(&e11, p).unwrap(), &c.zero());
        assert!(matches!(r, Err(Error::PreconditionViolated(_))));
    }
}
