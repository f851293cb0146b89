//! Thin helpers over `dashu-float` for the extended-precision loops.

use dashu_float::round::mode::HalfEven;
use dashu_float::{Context, FBig};

use crate::numerics::quadrature::gauss_legendre;

/// Binary floating point with a per-value precision in bits.
pub type Big = FBig<HalfEven, 2>;

pub fn big(x: f64, prec: usize) -> Big {
    Big::try_from(x).expect("finite f64").with_precision(prec).value()
}

pub fn big_int(i: i64, prec: usize) -> Big {
    Big::from(i).with_precision(prec).value()
}

pub fn to_f64(x: &Big) -> f64 {
    x.to_f64().value()
}

pub fn sqrt(x: &Big, prec: usize) -> Big {
    Context::<HalfEven>::new(prec).sqrt(x.repr()).value()
}

/// Bits needed for `digits` significant decimal digits.
pub fn bits_for_digits(digits: usize) -> usize {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 8
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` at `prec` bits, by
/// Newton refinement of the double-precision rule.
pub fn gauss_legendre_big(n: usize, prec: usize) -> (Vec<Big>, Vec<Big>) {
    let seed = gauss_legendre(n).expect("n >= 1");
    let one = big_int(1, prec);
    let two = big_int(2, prec);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    // Legendre P_n and P_n' by the three-term recurrence.
    let eval = |x: &Big| -> (Big, Big) {
        let mut p0 = one.clone();
        let mut p1 = x.clone();
        for k in 2..=n {
            let kb = big_int(k as i64, prec);
            let a = big_int(2 * k as i64 - 1, prec);
            let b = big_int(k as i64 - 1, prec);
            let p2 = (&a * x * &p1 - &b * &p0) / &kb;
            p0 = p1;
            p1 = p2;
        }
        let nb = big_int(n as i64, prec);
        let dp = &nb * (x * &p1 - &p0) / (x * x - &one);
        (p1, dp)
    };
    let tol = Big::from(1).with_precision(prec).value() * big(2f64.powi(-(prec as i32 - 8)), prec);
    for &x0 in &seed.nodes {
        let mut x = big(x0, prec);
        for _ in 0..12 {
            let (p, dp) = eval(&x);
            let step = p / dp;
            let done = step.clone() * step.clone() < tol.clone() * tol.clone();
            x -= step;
            if done {
                break;
            }
        }
        let (_, dp) = eval(&x);
        let w = &two / ((&one - &x * &x) * &dp * &dp);
        nodes.push(x);
        weights.push(w);
    }
    (nodes, weights)
}
