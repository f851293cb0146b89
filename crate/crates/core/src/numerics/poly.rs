//! Dense univariate polynomials with `f64` coefficients.

use std::ops::{Add, Mul, Neg, Sub};

/// Coefficients in ascending order: `c[0] + c[1] x + …`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn monomial(k: usize, c: f64) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        Self::new(v)
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    /// Substitute `x -> a + b x`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Self {
        let lin = Poly::new(vec![a, b]);
        let mut out = Poly::zero();
        for &c in self.coeffs.iter().rev() {
            out = &(&out * &lin) + &Poly::constant(c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Real roots inside `[a, b]` located by sign changes on a fine grid
    /// and polished by bisection.
    pub fn real_roots_in(&self, a: f64, b: f64, samples: usize) -> Vec<f64> {
        let mut roots = Vec::new();
        let h = (b - a) / samples as f64;
        let mut x0 = a;
        let mut f0 = self.eval(a);
        for i in 1..=samples {
            let x1 = a + h * i as f64;
            let f1 = self.eval(x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0 * f1 < 0.0 {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    let fm = self.eval(m);
                    if fm == 0.0 || hi - lo < 1e-15 * (1.0 + m.abs()) {
                        lo = m;
                        hi = m;
                        break;
                    }
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = m;
                        flo = fm;
                    } else {
                        hi = m;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x0 = x1;
            f0 = f1;
        }
        if f0 == 0.0 {
            roots.push(b);
        }
        roots
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut v = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly::new(v)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_arithmetic() {
        let p = Poly::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.eval(2.0), 17.0);
        assert_eq!(p.derivative(), Poly::new(vec![2.0, 6.0]));
        assert_eq!((&p * &Poly::new(vec![0.0, 1.0])).coeffs, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!((&p - &p), Poly::zero());
    }

    #[test]
    fn roots_of_cubic() {
        let p = Poly::new(vec![-6.0, 11.0, -6.0, 1.0]);
        let r = p.real_roots_in(0.0, 4.0, 1000);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn affine_composition_agrees(c in proptest::collection::vec(-3.0f64..3.0, 1..6), a in -2.0f64..2.0, b in -2.0f64..2.0, x in -2.0f64..2.0) {
            let p = Poly::new(c);
            let q = p.compose_affine(a, b);
            prop_assert!((q.eval(x) - p.eval(a + b * x)).abs() < 1e-9 * (1.0 + p.eval(a + b * x).abs()));
        }
    }
}
