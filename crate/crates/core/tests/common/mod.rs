//! Reference arithmetic for tests: flat matrices over `Z_m[t]/(t^k)` (`k = 1`
//! is `Z_m`), computed with schoolbook loops and nothing from the library
//! except reading coefficients out of its matrices.
#![allow(dead_code)]

use adlocal::Matrix;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Naive {
    pub m: u64,
    pub k: usize,
    pub n: usize,
    /// Row-major entries, `k` coefficients each (constant term first).
    pub c: Vec<u64>,
}

impl Naive {
    pub fn zero(m: u64, k: usize, n: usize) -> Naive {
        Naive { m, k, n, c: vec![0; n * n * k] }
    }

    pub fn identity(m: u64, k: usize, n: usize) -> Naive {
        let mut out = Naive::zero(m, k, n);
        for i in 0..n {
            out.c[(i * n + i) * k] = 1 % m;
        }
        out
    }

    /// `e_ij`, 1-based.
    pub fn unit(m: u64, k: usize, n: usize, i: usize, j: usize) -> Naive {
        let mut out = Naive::zero(m, k, n);
        out.c[((i - 1) * n + (j - 1)) * k] = 1 % m;
        out
    }

    pub fn from(x: &Matrix) -> Naive {
        let base = x.base();
        let (m, k, n) = (base.modulus() as u64, base.rank(), x.dim());
        let mut c = Vec::with_capacity(n * n * k);
        for i in 1..=n {
            for j in 1..=n {
                c.extend(x.entry(i, j).unwrap().coeffs().iter().map(|&v| v as u64));
            }
        }
        Naive { m, k, n, c }
    }

    pub fn add(&self, o: &Naive) -> Naive {
        let c = self.c.iter().zip(&o.c).map(|(a, b)| (a + b) % self.m).collect();
        Naive { c, ..*self }
    }

    pub fn sub(&self, o: &Naive) -> Naive {
        let c = self.c.iter().zip(&o.c).map(|(a, b)| (a + self.m - b) % self.m).collect();
        Naive { c, ..*self }
    }

    pub fn mul(&self, o: &Naive) -> Naive {
        let (n, k, m) = (self.n, self.k, self.m);
        let mut c = vec![0u64; n * n * k];
        for i in 0..n {
            for l in 0..n {
                let a = &self.c[(i * n + l) * k..][..k];
                if a.iter().all(|&v| v == 0) {
                    continue;
                }
                for j in 0..n {
                    let b = &o.c[(l * n + j) * k..][..k];
                    let out = &mut c[(i * n + j) * k..][..k];
                    for p in 0..k {
                        for q in 0..k - p {
                            out[p + q] = (out[p + q] + a[p] * b[q]) % m;
                        }
                    }
                }
            }
        }
        Naive { c, ..*self }
    }

    /// `a·x − x·a`.
    pub fn comm(&self, x: &Naive) -> Naive {
        self.mul(x).sub(&x.mul(self))
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0)
    }

    /// Top-left embedding into dimension `big`.
    pub fn embed(&self, big: usize) -> Naive {
        let mut out = Naive::zero(self.m, self.k, big);
        for i in 0..self.n {
            for j in 0..self.n {
                for p in 0..self.k {
                    out.c[(i * big + j) * self.k + p] = self.c[(i * self.n + j) * self.k + p];
                }
            }
        }
        out
    }

    /// The coefficient of `t^0` at `(i, j)`, 1-based.
    pub fn scalar(&self, i: usize, j: usize) -> u64 {
        self.c[((i - 1) * self.n + (j - 1)) * self.k]
    }

    /// Entry `(i, j)` as its coefficient slice, 1-based.
    pub fn at(&self, i: usize, j: usize) -> &[u64] {
        &self.c[((i - 1) * self.n + (j - 1)) * self.k..][..self.k]
    }

    /// Zero outside rows and columns `1..=m`.
    pub fn supported_in(&self, m: usize) -> bool {
        (1..=self.n).all(|i| (1..=self.n).all(|j| (i <= m && j <= m) || self.at(i, j).iter().all(|&v| v == 0)))
    }

    /// Position in lexicographic order with the first coordinate most
    /// significant.
    pub fn index(&self) -> u64 {
        self.c.iter().fold(0, |acc, &v| acc * self.m + v)
    }
}

pub fn staircase(m: u64, k: usize, n: usize) -> Naive {
    (1..n).fold(Naive::zero(m, k, n), |acc, i| acc.add(&Naive::unit(m, k, n, i, i + 1)))
}
