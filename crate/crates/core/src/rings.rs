//! Finite base rings with exact arithmetic.
//!
//! Every ring here is a free `Z_m`-module of some rank, so an element is a
//! fixed-length vector of residues mod `m`. The canonical enumeration order
//! is lexicographic on that vector with coordinate 0 most significant, which
//! reproduces the per-kind orders:
//!
//! * `Z_m`: representatives `0..m`.
//! * `Z_m[t]/(t^k)`: coefficient tuples `(c_0, ..., c_{k-1})`, `c_0` first.
//! * `M_n(R)`: row-major entries, entry `(1,1)` most significant.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Coeff = u32;

/// Largest modulus accepted; keeps every product of two residues inside `u32`.
pub const MAX_MODULUS: u32 = u16::MAX as u32;

/// Rings up to this size get an exhaustive commutativity check.
pub const EXHAUSTIVE_COMMUTATIVITY_LIMIT: u64 = 10_000;

const AXIOM_EXHAUSTIVE_LIMIT: u64 = 100;
const AXIOM_SAMPLED_TRIPLES: usize = 10_000;
const AXIOM_SEED: u64 = 0x5eed_a710;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RingKind {
    IntegersMod(u32),
    TruncatedPoly { m: u32, k: usize },
    MatrixOver { inner: Arc<Ring>, n: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ring {
    kind: RingKind,
    modulus: u32,
    rank: usize,
    cardinality: Option<u64>,
    commutative: bool,
}

/// An element of some [`Ring`], stored as its coefficient vector.
///
/// Only meaningful together with the ring that produced it. The derived
/// ordering is the canonical enumeration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingElement(pub(crate) Vec<Coeff>);

impl RingElement {
    pub fn coeffs(&self) -> &[Coeff] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evidence {
    Exhaustive,
    Declared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Commutativity {
    pub commutative: bool,
    pub evidence: Evidence,
}

impl Ring {
    pub fn integers_mod(m: u32) -> Result<Arc<Ring>> {
        check_modulus(m)?;
        Ok(Arc::new(Ring {
            kind: RingKind::IntegersMod(m),
            modulus: m,
            rank: 1,
            cardinality: Some(m as u64),
            commutative: true,
        }))
    }

    /// `Z_m[t]/(t^k)`.
    pub fn truncated_poly(m: u32, k: usize) -> Result<Arc<Ring>> {
        check_modulus(m)?;
        if k == 0 {
            return Err(Error::RingSpec(format!("poly:{m}:0")));
        }
        Ok(Arc::new(Ring {
            kind: RingKind::TruncatedPoly { m, k },
            modulus: m,
            rank: k,
            cardinality: checked_card(m, k),
            commutative: true,
        }))
    }

    pub fn matrix_over(inner: Arc<Ring>, n: usize) -> Result<Arc<Ring>> {
        if n == 0 {
            return Err(Error::DimensionTooSmall { n, min: 1 });
        }
        let rank = inner.rank * n * n;
        Ok(Arc::new(Ring {
            modulus: inner.modulus,
            rank,
            cardinality: checked_card(inner.modulus, rank),
            commutative: n == 1 && inner.commutative,
            kind: RingKind::MatrixOver { inner, n },
        }))
    }

    /// Parses `zmod:<m>`, `poly:<m>:<k>` or `mat:<inner-spec>:<n>` and runs
    /// the axiom self-test on the result.
    pub fn from_spec(spec: &str) -> Result<Arc<Ring>> {
        let ring = Self::parse_spec(spec)?;
        ring.self_test()?;
        Ok(ring)
    }

    fn parse_spec(spec: &str) -> Result<Arc<Ring>> {
        let bad = || Error::RingSpec(spec.to_string());
        let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
        if let Some(rest) = spec.strip_prefix("zmod:") {
            let m = u32::try_from(num(rest)?).map_err(|_| bad())?;
            Self::integers_mod(m).map_err(|_| bad())
        } else if let Some(rest) = spec.strip_prefix("poly:") {
            let (m, k) = rest.split_once(':').ok_or_else(bad)?;
            let m = u32::try_from(num(m)?).map_err(|_| bad())?;
            Self::truncated_poly(m, num(k)? as usize).map_err(|_| bad())
        } else if let Some(rest) = spec.strip_prefix("mat:") {
            let (inner, n) = rest.rsplit_once(':').ok_or_else(bad)?;
            let inner = Self::parse_spec(inner)?;
            Self::matrix_over(inner, num(n)? as usize).map_err(|_| bad())
        } else {
            Err(bad())
        }
    }

    pub fn kind(&self) -> &RingKind {
        &self.kind
    }

    /// The characteristic modulus shared by every coefficient.
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Number of `Z_m` coefficients per element.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cardinality(&self) -> Option<u64> {
        self.cardinality
    }

    /// The declared commutativity flag.
    pub fn declared_commutative(&self) -> bool {
        self.commutative
    }

    pub fn zero(&self) -> RingElement {
        RingElement(vec![0; self.rank])
    }

    pub fn one(&self) -> RingElement {
        let mut v = vec![0; self.rank];
        self.write_one(&mut v);
        RingElement(v)
    }

    fn write_one(&self, out: &mut [Coeff]) {
        match &self.kind {
            RingKind::IntegersMod(m) => out[0] = 1 % m,
            RingKind::TruncatedPoly { m, .. } => out[0] = 1 % m,
            RingKind::MatrixOver { inner, n } => {
                let r = inner.rank;
                for i in 0..*n {
                    inner.write_one(&mut out[(i * n + i) * r..][..r]);
                }
            }
        }
    }

    /// `k · 1` for an integer `k`.
    pub fn from_int(&self, k: i64) -> RingElement {
        let m = self.modulus as i64;
        let k = k.rem_euclid(m) as Coeff;
        let mut e = self.one();
        for c in &mut e.0 {
            *c = ((*c as u64 * k as u64) % m as u64) as Coeff;
        }
        e
    }

    /// Wraps a raw coefficient vector, reducing nothing; every coefficient
    /// must already be a residue.
    pub fn element(&self, coeffs: Vec<Coeff>) -> Result<RingElement> {
        if coeffs.len() != self.rank || coeffs.iter().any(|&c| c >= self.modulus) {
            return Err(Error::ElementParse { text: format!("{coeffs:?}"), ring: self.to_string() });
        }
        Ok(RingElement(coeffs))
    }

    pub fn add(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let mut out = a.0.clone();
        self.add_assign(&mut out, &b.0);
        RingElement(out)
    }

    pub fn sub(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let mut out = a.0.clone();
        self.sub_assign(&mut out, &b.0);
        RingElement(out)
    }

    pub fn neg(&self, a: &RingElement) -> RingElement {
        let mut out = vec![0; self.rank];
        self.sub_assign(&mut out, &a.0);
        RingElement(out)
    }

    pub fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let mut out = vec![0; self.rank];
        self.mul_acc(&mut out, &a.0, &b.0);
        RingElement(out)
    }

    pub fn is_zero(&self, a: &RingElement) -> bool {
        a.0.iter().all(|&c| c == 0)
    }

    pub(crate) fn add_assign(&self, acc: &mut [Coeff], b: &[Coeff]) {
        add_mod(acc, b, self.modulus);
    }

    pub(crate) fn sub_assign(&self, acc: &mut [Coeff], b: &[Coeff]) {
        sub_mod(acc, b, self.modulus);
    }

    /// `out += a * b`.
    pub(crate) fn mul_acc(&self, out: &mut [Coeff], a: &[Coeff], b: &[Coeff]) {
        match &self.kind {
            RingKind::IntegersMod(m) => {
                let m = *m as u64;
                out[0] = ((out[0] as u64 + a[0] as u64 * b[0] as u64) % m) as Coeff;
            }
            RingKind::TruncatedPoly { m, k } => {
                let m = *m as u64;
                for i in 0..*k {
                    if a[i] == 0 {
                        continue;
                    }
                    for j in 0..(*k - i) {
                        let t = out[i + j] as u64 + a[i] as u64 * b[j] as u64;
                        out[i + j] = (t % m) as Coeff;
                    }
                }
            }
            RingKind::MatrixOver { inner, n } => matmul_acc(inner, *n, out, a, b),
        }
    }

    /// Position of `a` in the canonical enumeration.
    pub fn index_of(&self, a: &RingElement) -> u64 {
        coeff_index(&a.0, self.modulus)
    }

    pub fn element_at(&self, index: u64) -> Result<RingElement> {
        let card = self.cardinality.ok_or(Error::InfiniteRing)?;
        if index >= card {
            return Err(Error::IndexOutOfRange { i: index as usize, j: 0, n: card as usize });
        }
        Ok(RingElement(coeffs_at(index, self.modulus, self.rank)))
    }

    /// A uniformly random element.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RingElement {
        RingElement((0..self.rank).map(|_| rng.random_range(0..self.modulus)).collect())
    }

    /// Canonical string form, e.g. `"3"`, `"t^2+t+1"`, `[["1","0"],["0","1"]]`.
    pub fn format(&self, a: &RingElement) -> String {
        match &self.kind {
            RingKind::IntegersMod(_) => a.0[0].to_string(),
            RingKind::TruncatedPoly { .. } => format_poly(&a.0),
            RingKind::MatrixOver { inner, n } => {
                let r = inner.rank;
                let rows: Vec<Vec<String>> = (0..*n)
                    .map(|i| {
                        (0..*n).map(|j| inner.format(&RingElement(a.0[(i * n + j) * r..][..r].to_vec()))).collect()
                    })
                    .collect();
                serde_json::to_string(&rows).expect("string matrix serializes")
            }
        }
    }

    pub fn parse_element(&self, text: &str) -> Result<RingElement> {
        let bad = || Error::ElementParse { text: text.to_string(), ring: self.to_string() };
        let m = self.modulus as u64;
        match &self.kind {
            RingKind::IntegersMod(_) => {
                let v: u64 = text.trim().parse().map_err(|_| bad())?;
                Ok(RingElement(vec![(v % m) as Coeff]))
            }
            RingKind::TruncatedPoly { k, .. } => {
                let mut coeffs = vec![0 as Coeff; *k];
                let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
                for term in compact.split('+') {
                    let (coef, degree) = parse_term(term).ok_or_else(bad)?;
                    if degree >= *k {
                        return Err(bad());
                    }
                    coeffs[degree] = ((coeffs[degree] as u64 + coef % m) % m) as Coeff;
                }
                Ok(RingElement(coeffs))
            }
            RingKind::MatrixOver { inner, n } => {
                let rows: Vec<Vec<String>> = serde_json::from_str(text).map_err(|_| bad())?;
                if rows.len() != *n || rows.iter().any(|r| r.len() != *n) {
                    return Err(bad());
                }
                let mut coeffs = Vec::with_capacity(self.rank);
                for s in rows.iter().flatten() {
                    coeffs.extend(inner.parse_element(s)?.0);
                }
                Ok(RingElement(coeffs))
            }
        }
    }

    /// Validates the ring axioms: exhaustively on every triple for rings of
    /// at most 100 elements, on 10^4 seeded triples otherwise.
    pub fn self_test(&self) -> Result<()> {
        let triples: Vec<[RingElement; 3]> = match self.cardinality {
            Some(card) if card <= AXIOM_EXHAUSTIVE_LIMIT => {
                let all = enumerate_elements(self)?;
                let mut out = Vec::with_capacity(all.len().pow(3));
                for a in &all {
                    for b in &all {
                        for c in &all {
                            out.push([a.clone(), b.clone(), c.clone()]);
                        }
                    }
                }
                out
            }
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(AXIOM_SEED);
                (0..AXIOM_SAMPLED_TRIPLES)
                    .map(|_| [self.sample(&mut rng), self.sample(&mut rng), self.sample(&mut rng)])
                    .collect()
            }
        };
        let one = self.one();
        let zero = self.zero();
        let violated = |axiom| Err(Error::AxiomViolated { axiom, ring: self.to_string() });
        for [a, b, c] in &triples {
            if self.add(&self.add(a, b), c) != self.add(a, &self.add(b, c)) {
                return violated("additive associativity");
            }
            if self.add(a, b) != self.add(b, a) {
                return violated("additive commutativity");
            }
            if self.mul(&self.mul(a, b), c) != self.mul(a, &self.mul(b, c)) {
                return violated("multiplicative associativity");
            }
            if self.mul(a, &self.add(b, c)) != self.add(&self.mul(a, b), &self.mul(a, c)) {
                return violated("left distributivity");
            }
            if self.mul(&self.add(a, b), c) != self.add(&self.mul(a, c), &self.mul(b, c)) {
                return violated("right distributivity");
            }
            if self.mul(&one, a) != *a || self.mul(a, &one) != *a {
                return violated("unit");
            }
            if self.add(a, &self.neg(a)) != zero || self.add(a, &zero) != *a {
                return violated("additive inverse");
            }
        }
        Ok(())
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RingKind::IntegersMod(m) => write!(f, "zmod:{m}"),
            RingKind::TruncatedPoly { m, k } => write!(f, "poly:{m}:{k}"),
            RingKind::MatrixOver { inner, n } => write!(f, "mat:{inner}:{n}"),
        }
    }
}

/// All elements in canonical order; index 0 is zero.
pub fn enumerate_elements(ring: &Ring) -> Result<Vec<RingElement>> {
    let card = ring.cardinality.ok_or(Error::InfiniteRing)?;
    Ok((0..card).map(|i| RingElement(coeffs_at(i, ring.modulus, ring.rank))).collect())
}

/// Exhaustive pairwise check for rings of at most 10^4 elements, the
/// declared flag otherwise.
pub fn is_commutative(ring: &Ring) -> Commutativity {
    match ring.cardinality {
        Some(card) if card <= EXHAUSTIVE_COMMUTATIVITY_LIMIT => {
            let all = enumerate_elements(ring).expect("finite ring enumerates");
            let commutative =
                all.par_iter().enumerate().all(|(i, a)| all[i + 1..].iter().all(|b| ring.mul(a, b) == ring.mul(b, a)));
            Commutativity { commutative, evidence: Evidence::Exhaustive }
        }
        _ => Commutativity { commutative: ring.commutative, evidence: Evidence::Declared },
    }
}

pub fn is_central(ring: &Ring, a: &RingElement) -> Result<bool> {
    let all = enumerate_elements(ring)?;
    Ok(all.par_iter().all(|x| ring.mul(a, x) == ring.mul(x, a)))
}

pub(crate) fn matmul_acc(base: &Ring, n: usize, out: &mut [Coeff], a: &[Coeff], b: &[Coeff]) {
    if let RingKind::IntegersMod(m) = base.kind {
        let m = m as u64;
        for i in 0..n {
            for j in 0..n {
                let mut s = out[i * n + j] as u64;
                for k in 0..n {
                    s += a[i * n + k] as u64 * b[k * n + j] as u64;
                }
                out[i * n + j] = (s % m) as Coeff;
            }
        }
        return;
    }
    let r = base.rank;
    for i in 0..n {
        for k in 0..n {
            let aik = &a[(i * n + k) * r..][..r];
            if aik.iter().all(|&c| c == 0) {
                continue;
            }
            for j in 0..n {
                base.mul_acc(&mut out[(i * n + j) * r..][..r], aik, &b[(k * n + j) * r..][..r]);
            }
        }
    }
}

pub(crate) fn add_mod(acc: &mut [Coeff], b: &[Coeff], m: u32) {
    for (x, &y) in acc.iter_mut().zip(b) {
        let s = *x + y;
        *x = if s >= m { s - m } else { s };
    }
}

pub(crate) fn sub_mod(acc: &mut [Coeff], b: &[Coeff], m: u32) {
    for (x, &y) in acc.iter_mut().zip(b) {
        *x = if *x >= y { *x - y } else { *x + m - y };
    }
}

pub(crate) fn coeff_index(coeffs: &[Coeff], m: u32) -> u64 {
    coeffs.iter().fold(0u64, |acc, &c| acc.wrapping_mul(m as u64).wrapping_add(c as u64))
}

pub(crate) fn coeffs_at(mut index: u64, m: u32, rank: usize) -> Vec<Coeff> {
    let mut v = vec![0; rank];
    for slot in v.iter_mut().rev() {
        *slot = (index % m as u64) as Coeff;
        index /= m as u64;
    }
    v
}

fn check_modulus(m: u32) -> Result<()> {
    if (2..=MAX_MODULUS).contains(&m) {
        Ok(())
    } else {
        Err(Error::RingSpec(format!("modulus {m} outside 2..={MAX_MODULUS}")))
    }
}

fn checked_card(m: u32, rank: usize) -> Option<u64> {
    (m as u64).checked_pow(u32::try_from(rank).ok()?)
}

fn format_poly(coeffs: &[Coeff]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &c)| c != 0)
        .map(|(d, &c)| match (d, c) {
            (0, c) => c.to_string(),
            (1, 1) => "t".to_string(),
            (1, c) => format!("{c}t"),
            (d, 1) => format!("t^{d}"),
            (d, c) => format!("{c}t^{d}"),
        })
        .collect();
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join("+")
    }
}

fn parse_term(term: &str) -> Option<(u64, usize)> {
    match term.split_once('t') {
        None => Some((term.parse().ok()?, 0)),
        Some((coef, rest)) => {
            let coef = if coef.is_empty() { 1 } else { coef.parse().ok()? };
            let degree = if rest.is_empty() { 1 } else { rest.strip_prefix('^')?.parse().ok()? };
            Some((coef, degree))
        }
    }
}
