//! The matrix ring `M_n(R)` over a finite base ring.
//!
//! Indices in the public API are 1-based. Storage is a flat row-major vector
//! of base-ring coefficients, so a matrix is literally an element of the ring
//! `mat:<base>:<n>` and shares its canonical order.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rings::{self, Coeff, Ring, RingElement, RingKind};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    base: Arc<Ring>,
    n: usize,
    data: Vec<Coeff>,
}

impl Matrix {
    pub fn zero(base: &Arc<Ring>, n: usize) -> Matrix {
        Matrix { base: base.clone(), n, data: vec![0; n * n * base.rank()] }
    }

    pub fn identity(base: &Arc<Ring>, n: usize) -> Matrix {
        let mut x = Matrix::zero(base, n);
        let one = base.one();
        for i in 0..n {
            x.entry_mut(i, i).copy_from_slice(one.coeffs());
        }
        x
    }

    /// Builds a matrix from row-major entries.
    pub fn from_entries(base: &Arc<Ring>, n: usize, entries: &[RingElement]) -> Result<Matrix> {
        if entries.len() != n * n {
            return Err(Error::ShapeMismatch(format!("{} entries for a {n}x{n} matrix", entries.len())));
        }
        let data = entries.iter().flat_map(|e| e.coeffs().iter().copied()).collect();
        Ok(Matrix { base: base.clone(), n, data })
    }

    pub(crate) fn from_raw(base: &Arc<Ring>, n: usize, data: Vec<Coeff>) -> Matrix {
        debug_assert_eq!(data.len(), n * n * base.rank());
        Matrix { base: base.clone(), n, data }
    }

    /// Parses a literal: rows of canonical element strings.
    pub fn from_literal<S: AsRef<str>>(base: &Arc<Ring>, rows: &[Vec<S>]) -> Result<Matrix> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("matrix literal must be square and nonempty".into()));
        }
        let entries = rows.iter().flatten().map(|s| base.parse_element(s.as_ref())).collect::<Result<Vec<_>>>()?;
        Matrix::from_entries(base, n, &entries)
    }

    /// Parses a JSON literal such as `[["0","1"],["0","0"]]`.
    pub fn parse(base: &Arc<Ring>, text: &str) -> Result<Matrix> {
        let rows: Vec<Vec<String>> =
            serde_json::from_str(text).map_err(|e| Error::ShapeMismatch(format!("bad matrix literal: {e}")))?;
        Matrix::from_literal(base, &rows)
    }

    pub fn literal(&self) -> Vec<Vec<String>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.base.format(&RingElement(self.entry_slice(i, j).to_vec()))).collect())
            .collect()
    }

    pub fn literal_string(&self) -> String {
        serde_json::to_string(&self.literal()).expect("string matrix serializes")
    }

    pub fn base(&self) -> &Arc<Ring> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Coeff] {
        &self.data
    }

    /// The `(i, j)` entry, 1-based.
    pub fn entry(&self, i: usize, j: usize) -> Result<RingElement> {
        self.check_index(i, j)?;
        Ok(RingElement(self.entry_slice(i - 1, j - 1).to_vec()))
    }

    pub fn set_entry(&mut self, i: usize, j: usize, value: &RingElement) -> Result<()> {
        self.check_index(i, j)?;
        self.entry_mut(i - 1, j - 1).copy_from_slice(value.coeffs());
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&c| c == 0)
    }

    pub fn same_shape(&self, other: &Matrix) -> bool {
        self.n == other.n && self.base == other.base
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return Err(Error::IndexOutOfRange { i, j, n: self.n });
        }
        Ok(())
    }

    fn check_shape(&self, other: &Matrix) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{}x{} over {} vs {}x{} over {}",
                self.n, self.n, self.base, other.n, other.n, other.base
            )))
        }
    }

    // 0-based internal accessors
    pub(crate) fn entry_slice(&self, i: usize, j: usize) -> &[Coeff] {
        let r = self.base.rank();
        &self.data[(i * self.n + j) * r..][..r]
    }

    fn entry_mut(&mut self, i: usize, j: usize) -> &mut [Coeff] {
        let r = self.base.rank();
        &mut self.data[(i * self.n + j) * r..][..r]
    }

    /// Canonical index inside `M_n(R)`.
    pub fn canonical_index(&self) -> u64 {
        rings::coeff_index(&self.data, self.base.modulus())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.literal_string())
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.literal_string())
    }
}

impl PartialOrd for Matrix {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Matrix {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.n, &self.data).cmp(&(other.n, &other.data))
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert!(self.same_shape(rhs), "matrix shape mismatch");
        let mut out = self.clone();
        rings::add_mod(&mut out.data, &rhs.data, self.base.modulus());
        out
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert!(self.same_shape(rhs), "matrix shape mismatch");
        let mut out = self.clone();
        rings::sub_mod(&mut out.data, &rhs.data, self.base.modulus());
        out
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        let mut out = Matrix::zero(&self.base, self.n);
        rings::sub_mod(&mut out.data, &self.data, self.base.modulus());
        out
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert!(self.same_shape(rhs), "matrix shape mismatch");
        let mut out = Matrix::zero(&self.base, self.n);
        rings::matmul_acc(&self.base, self.n, &mut out.data, &self.data, &rhs.data);
        out
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(self, rhs: Matrix) -> Matrix {
        &self + &rhs
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(self, rhs: Matrix) -> Matrix {
        &self - &rhs
    }
}

impl Mul for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: Matrix) -> Matrix {
        &self * &rhs
    }
}

/// The carrier `M_n(R)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixRing {
    base: Arc<Ring>,
    n: usize,
    ring: Arc<Ring>,
}

impl MatrixRing {
    pub fn new(base: &Arc<Ring>, n: usize) -> Result<MatrixRing> {
        let ring = Ring::matrix_over(base.clone(), n)?;
        Ok(MatrixRing { base: base.clone(), n, ring })
    }

    pub fn base(&self) -> &Arc<Ring> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `M_n(R)` as a ring descriptor in its own right.
    pub fn as_ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn cardinality(&self) -> Option<u64> {
        self.ring.cardinality()
    }

    /// Number of `Z_m` coordinates of an element.
    pub fn rank(&self) -> usize {
        self.ring.rank()
    }

    pub fn contains(&self, x: &Matrix) -> bool {
        x.n == self.n && x.base == self.base
    }

    pub fn zero(&self) -> Matrix {
        Matrix::zero(&self.base, self.n)
    }

    pub fn identity(&self) -> Matrix {
        Matrix::identity(&self.base, self.n)
    }

    pub fn unit(&self, i: usize, j: usize) -> Result<Matrix> {
        matrix_unit(&self.base, self.n, i, j)
    }

    /// Every `e_ij`, row-major in `(i, j)`.
    pub fn units(&self) -> Vec<Matrix> {
        let mut out = Vec::with_capacity(self.n * self.n);
        for i in 1..=self.n {
            for j in 1..=self.n {
                out.push(self.unit(i, j).expect("index in range"));
            }
        }
        out
    }

    pub fn staircase(&self) -> Result<Matrix> {
        staircase(&self.base, self.n)
    }

    pub fn enumerate(&self) -> Result<Vec<Matrix>> {
        let card = self.cardinality().ok_or(Error::InfiniteRing)?;
        let (m, rank) = (self.base.modulus(), self.rank());
        Ok((0..card).map(|i| Matrix::from_raw(&self.base, self.n, rings::coeffs_at(i, m, rank))).collect())
    }

    pub fn element_at(&self, index: u64) -> Result<Matrix> {
        let e = self.ring.element_at(index)?;
        Ok(Matrix::from_raw(&self.base, self.n, e.0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix {
        Matrix::from_raw(&self.base, self.n, self.ring.sample(rng).0)
    }

    pub fn to_element(&self, x: &Matrix) -> RingElement {
        RingElement(x.data.clone())
    }

    pub fn from_element(&self, e: &RingElement) -> Matrix {
        Matrix::from_raw(&self.base, self.n, e.0.clone())
    }

    /// A matrix whose only nonzero coordinate is coordinate `s` (set to 1).
    pub(crate) fn basis_vector(&self, s: usize) -> Matrix {
        let mut data = vec![0; self.rank()];
        data[s] = 1;
        Matrix::from_raw(&self.base, self.n, data)
    }
}

impl fmt::Display for MatrixRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M_{}({})", self.n, self.base)
    }
}

/// `e_ij`: the unit of the base ring at `(i, j)`, zero elsewhere.
pub fn matrix_unit(base: &Arc<Ring>, n: usize, i: usize, j: usize) -> Result<Matrix> {
    let mut x = Matrix::zero(base, n);
    x.set_entry(i, j, &base.one())?;
    Ok(x)
}

/// `e_ii · x · e_jj`: keeps entry `(i, j)` and zeroes the rest.
pub fn pierce_component(x: &Matrix, i: usize, j: usize) -> Result<Matrix> {
    x.check_index(i, j)?;
    let mut out = Matrix::zero(&x.base, x.n);
    out.entry_mut(i - 1, j - 1).copy_from_slice(x.entry_slice(i - 1, j - 1));
    Ok(out)
}

/// `E_II·x·E_JJ` for the block units of `M_{2m}(R)`, computed by masking.
pub fn block_component(x: &Matrix, m: usize, bi: usize, bj: usize) -> Result<Matrix> {
    if x.n != 2 * m || !(1..=2).contains(&bi) || !(1..=2).contains(&bj) {
        return Err(Error::IndexOutOfRange { i: bi, j: bj, n: 2 });
    }
    let mut out = Matrix::zero(&x.base, x.n);
    for i in 0..m {
        for j in 0..m {
            let (r, c) = ((bi - 1) * m + i, (bj - 1) * m + j);
            out.entry_mut(r, c).copy_from_slice(x.entry_slice(r, c));
        }
    }
    Ok(out)
}

/// `x_o = Σ_{k<n} e_{k,k+1}`.
pub fn staircase(base: &Arc<Ring>, n: usize) -> Result<Matrix> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    let mut x = Matrix::zero(base, n);
    for k in 1..n {
        x.set_entry(k, k + 1, &base.one())?;
    }
    Ok(x)
}

/// `[a, x] = a·x − x·a`.
pub fn commutator(a: &Matrix, x: &Matrix) -> Result<Matrix> {
    a.check_shape(x)?;
    Ok(&(a * x) - &(x * a))
}

/// Reinterprets `x ∈ M_{2m}(R)` as a 2×2 matrix over `M_m(R)`; block
/// `(I, J)` holds rows `(I−1)m+1..Im` and columns `(J−1)m+1..Jm`.
pub fn block_view(x: &Matrix, m: usize) -> Result<Matrix> {
    if m == 0 || x.n != 2 * m {
        return Err(Error::ShapeMismatch(format!("cannot split dimension {} into 2x2 blocks of size {m}", x.n)));
    }
    let block_ring = Ring::matrix_over(x.base.clone(), m)?;
    let r = x.base.rank();
    let mut data = Vec::with_capacity(x.data.len());
    for bi in 0..2 {
        for bj in 0..2 {
            for i in 0..m {
                for j in 0..m {
                    data.extend_from_slice(x.entry_slice(bi * m + i, bj * m + j));
                }
            }
        }
    }
    debug_assert_eq!(data.len(), 4 * m * m * r);
    Ok(Matrix::from_raw(&block_ring, 2, data))
}

/// Inverse of [`block_view`].
pub fn block_flatten(x: &Matrix) -> Result<Matrix> {
    let RingKind::MatrixOver { inner, n: m } = x.base.kind() else {
        return Err(Error::ShapeMismatch(format!("entries of {} are not matrices", x.base)));
    };
    let (m, big) = (*m, x.n * *m);
    let r = inner.rank();
    let mut out = Matrix::zero(inner, big);
    for bi in 0..x.n {
        for bj in 0..x.n {
            let block = x.entry_slice(bi, bj);
            for i in 0..m {
                for j in 0..m {
                    out.entry_mut(bi * m + i, bj * m + j).copy_from_slice(&block[(i * m + j) * r..][..r]);
                }
            }
        }
    }
    Ok(out)
}

/// The corner `\bar{M}_m(R) = e·M_n(R)·e` with `e = Σ_{i≤m} e_ii`.
#[derive(Clone, Debug)]
pub struct CornerContext {
    m: usize,
    n: usize,
    e: Matrix,
}

impl CornerContext {
    pub fn new(base: &Arc<Ring>, m: usize, n: usize) -> Result<CornerContext> {
        if m == 0 || m > n {
            return Err(Error::ShapeMismatch(format!("corner size {m} in dimension {n}")));
        }
        let mut e = Matrix::zero(base, n);
        for i in 1..=m {
            e.set_entry(i, i, &base.one())?;
        }
        Ok(CornerContext { m, n, e })
    }

    pub fn corner_dim(&self) -> usize {
        self.m
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn idempotent(&self) -> &Matrix {
        &self.e
    }

    /// Whether `x` is supported on the top-left `m×m` block.
    pub fn supports(&self, x: &Matrix) -> bool {
        x.n == self.n
            && (0..self.n)
                .all(|i| (0..self.n).all(|j| (i < self.m && j < self.m) || x.entry_slice(i, j).iter().all(|&c| c == 0)))
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.n != self.n || x.base != self.e.base {
            return Err(Error::ShapeMismatch(format!("expected a {0}x{0} matrix over {1}", self.n, self.e.base)));
        }
        Ok(())
    }
}

/// `e·x·e`, still as an `n×n` matrix.
pub fn corner_compress(x: &Matrix, ctx: &CornerContext) -> Result<Matrix> {
    ctx.check(x)?;
    Ok(&(&ctx.e * x) * &ctx.e)
}

/// The top-left `m×m` block of `x` as a matrix of `M_m(R)`.
pub fn corner_extract(x: &Matrix, ctx: &CornerContext) -> Result<Matrix> {
    ctx.check(x)?;
    let mut out = Matrix::zero(&x.base, ctx.m);
    for i in 0..ctx.m {
        for j in 0..ctx.m {
            out.entry_mut(i, j).copy_from_slice(x.entry_slice(i, j));
        }
    }
    Ok(out)
}

/// Places an `m×m` matrix in the top-left corner of an `n×n` zero matrix.
pub fn corner_embed(y: &Matrix, ctx: &CornerContext) -> Result<Matrix> {
    if y.n != ctx.m || y.base != ctx.e.base {
        return Err(Error::ShapeMismatch(format!("expected a {0}x{0} corner matrix", ctx.m)));
    }
    let mut out = Matrix::zero(&y.base, ctx.n);
    for i in 0..ctx.m {
        for j in 0..ctx.m {
            out.entry_mut(i, j).copy_from_slice(y.entry_slice(i, j));
        }
    }
    Ok(out)
}
