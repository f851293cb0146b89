//! Banded LU factorisation with partial pivoting (LAPACK `gbtf2` layout).

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored
/// column-major with `kl` extra rows for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, ab: vec![0.0; ldab * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        (self.kl + self.ku + r - c) + c * self.ldab
    }

    /// Whether `(r, c)` lies inside the declared band.
    pub fn in_band(&self, r: usize, c: usize) -> bool {
        r <= c + self.kl && c <= r + self.ku
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(self.in_band(r, c), "({r},{c}) outside band");
        let i = self.idx(r, c);
        self.ab[i] = v;
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(self.in_band(r, c), "({r},{c}) outside band");
        let i = self.idx(r, c);
        self.ab[i] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if self.in_band(r, c) {
            self.ab[self.idx(r, c)]
        } else {
            0.0
        }
    }

    /// Factorise in place; returns the pivot sequence.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        let scale = self.ab.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let mut jp = 0usize;
            let mut best = 0.0f64;
            for i in 0..=km {
                let v = self.ab[self.idx(j + i, j)].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            if best <= 1e-300 * scale || !best.is_finite() {
                return Err(Error::SingularJacobian(format!("zero pivot in band column {j}")));
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + jp, c);
                    self.ab.swap(a, b);
                }
            }
            let piv = self.ab[self.idx(j, j)];
            for i in 1..=km {
                let k = self.idx(j + i, j);
                self.ab[k] /= piv;
            }
            for c in (j + 1)..=ju {
                let ujc = self.ab[self.idx(j, c)];
                if ujc == 0.0 {
                    continue;
                }
                for i in 1..=km {
                    let l = self.ab[self.idx(j + i, j)];
                    let k = self.idx(j + i, c);
                    self.ab[k] -= l * ujc;
                }
            }
        }
        Ok(BandLu { m: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &mut [f64]) {
        let a = &self.m;
        let n = a.n;
        let kv = a.kl + a.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = a.kl.min(n - 1 - j);
            let bj = b[j];
            for i in 1..=km {
                b[j + i] -= a.ab[a.idx(j + i, j)] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= a.ab[a.idx(j, j)];
            let bj = b[j];
            for i in j.saturating_sub(kv)..j {
                b[i] -= a.ab[a.idx(i, j)] * bj;
            }
        }
    }
}
