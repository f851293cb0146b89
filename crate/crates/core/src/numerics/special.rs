//! Airy function, complete elliptic integrals and the theta function ϑ₃.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{domain, Error, Result};

/// Ai(0).
pub const AI0: f64 = 0.355_028_053_887_817_24;
/// −Ai'(0).
pub const AIP0_NEG: f64 = 0.258_819_403_792_806_8;

/// Right end of the Maclaurin region; beyond it the Bessel-K integral
/// (positive side) or Taylor continuation of the ODE (negative side) is used.
const SERIES_RADIUS: f64 = 2.0;
/// Past this point on the negative axis the oscillatory asymptotic series
/// takes over from ODE continuation.
const CONTINUATION_LIMIT: f64 = -30.0;

/// Advance the Airy ODE `y'' = x y` from `x0` by `h` using the exact local
/// Taylor series. Returns `(y, y')` at `x0 + h`.
fn airy_taylor_step(x0: f64, y: f64, yp: f64, h: f64) -> (f64, f64) {
    // (n+2)(n+1) a_{n+2} = x0 a_n + a_{n-1}
    let mut a = [0.0f64; 3]; // a_{n-1}, a_n, a_{n+1}
    a[1] = y;
    a[2] = yp;
    let mut val = y + yp * h;
    let mut der = yp;
    let mut hp = h; // h^{n+1}
    let scale = y.abs() + yp.abs();
    // Every third coefficient can vanish, so require three small terms in a row.
    let mut small = 0;
    for n in 0..200usize {
        let next = (x0 * a[1] + a[0]) / (((n + 2) * (n + 1)) as f64);
        let hn1 = hp; // h^{n+1}
        hp *= h;
        let term = next * hp;
        val += term;
        der += (n + 2) as f64 * next * hn1;
        a = [a[1], a[2], next];
        if term.abs() < 1e-18 * scale && (next * hn1).abs() < 1e-18 * scale {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    (val, der)
}

/// `K_ν(z) = ∫_0^∞ exp(-z cosh t) cosh(ν t) dt`, scaled by `e^{z}`.
fn bessel_k_scaled(nu: f64, z: f64) -> f64 {
    let h = 0.08;
    let t_max = (1.0 + 45.0 / z).acosh();
    let n = (t_max / h).ceil() as usize;
    let mut sum = 0.5;
    for i in 1..=n {
        let t = h * i as f64;
        sum += (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    }
    sum * h
}

/// Modulus and phase series for Ai on the far negative axis.
fn airy_negative_asymptotic(x: f64) -> (f64, f64) {
    let m = -x;
    let zeta = 2.0 / 3.0 * m.powf(1.5);
    let mut u = 1.0f64;
    let (mut p, mut q) = (1.0, 0.0);
    let (mut pd, mut qd) = (1.0, 0.0);
    let mut v;
    let mut zp = 1.0;
    for k in 1..30usize {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        v = -u * (6.0 * kf + 1.0) / (6.0 * kf - 1.0);
        zp /= zeta;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * u * zp;
            pd += sign * v * zp;
        } else {
            q += sign * u * zp;
            qd += sign * v * zp;
        }
        if (u * zp).abs() < 1e-17 {
            break;
        }
    }
    let arg = zeta - PI / 4.0;
    let (sn, cs) = arg.sin_cos();
    let ai = (cs * p + sn * q) / (PI.sqrt() * m.powf(0.25));
    let aip = m.powf(0.25) / PI.sqrt() * (sn * pd - cs * qd);
    (ai, aip)
}

/// Airy function and its derivative, `(Ai(s), Ai'(s))`.
pub fn airy_pair(s: f64) -> (f64, f64) {
    if s.abs() <= SERIES_RADIUS {
        return airy_taylor_step(0.0, AI0, -AIP0_NEG, s);
    }
    if s > 0.0 {
        let zeta = 2.0 / 3.0 * s.powf(1.5);
        let e = (-zeta).exp();
        let ai = (s / 3.0).sqrt() / PI * bessel_k_scaled(1.0 / 3.0, zeta) * e;
        let aip = -s / (PI * 3f64.sqrt()) * bessel_k_scaled(2.0 / 3.0, zeta) * e;
        return (ai, aip);
    }
    if s < CONTINUATION_LIMIT {
        return airy_negative_asymptotic(s);
    }
    let (mut y, mut yp) = airy_taylor_step(0.0, AI0, -AIP0_NEG, -SERIES_RADIUS);
    let mut x = -SERIES_RADIUS;
    let steps = ((x - s) / 0.5).ceil() as usize;
    let h = (s - x) / steps as f64;
    for _ in 0..steps {
        (y, yp) = airy_taylor_step(x, y, yp, h);
        x += h;
    }
    (y, yp)
}

/// Airy function Ai(s).
pub fn airy(s: f64) -> f64 {
    airy_pair(s).0
}

/// Complete elliptic integrals `(K(s), E(s))` of modulus `s` via the AGM.
pub fn complete_elliptic(s: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&s) {
        return domain(format!("elliptic modulus must lie in [0,1), got {s}"));
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - s * s).sqrt();
    let mut c = s;
    let mut pow2 = 0.5;
    let mut sum = pow2 * c * c;
    for _ in 0..64 {
        if c.abs() < 1e-17 * a {
            break;
        }
        let an = 0.5 * (a + b);
        c = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = an;
        pow2 *= 2.0;
        sum += pow2 * c * c;
    }
    let k = FRAC_PI_2 / a;
    Ok((k, k * (1.0 - sum)))
}

/// ϑ₃ and its first two `z`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    /// Bound on the neglected tail of the series.
    pub tail_bound: f64,
}

/// Terms with `n > n_max` contribute at most this bound (to the value
/// and to the derivatives up to second order).
fn theta_tail(n_max: usize, tau_im: f64) -> f64 {
    let n1 = (n_max + 1) as f64;
    let q1 = (-PI * n1 * n1 * tau_im).exp();
    let ratio = (-PI * (2.0 * n1 + 1.0) * tau_im).exp();
    let w = 2.0 * PI * n1;
    2.0 * q1 * (1.0 + w * w) / (1.0 - ratio).max(1e-300)
}

/// `ϑ(z; iτ) = Σ_n exp(-π n² τ + 2π i n z)` for real `z`, `τ > 0`.
pub fn theta3_full(z: f64, tau_im: f64) -> Result<ThetaValue> {
    if !(tau_im > 0.0) || !tau_im.is_finite() {
        return domain(format!("theta needs Im τ > 0, got {tau_im}"));
    }
    let (mut v, mut d1, mut d2) = (1.0, 0.0, 0.0);
    let mut n = 0usize;
    loop {
        n += 1;
        let nf = n as f64;
        let q = (-PI * nf * nf * tau_im).exp();
        let w = 2.0 * PI * nf;
        let (sn, cs) = (w * z).sin_cos();
        v += 2.0 * q * cs;
        d1 -= 2.0 * q * w * sn;
        d2 -= 2.0 * q * w * w * cs;
        let tail = theta_tail(n, tau_im);
        if tail < 1e-17 {
            return Ok(ThetaValue { value: v, d1, d2, tail_bound: tail });
        }
        if n > 100_000 {
            return Err(Error::Accuracy(format!("theta series too slow for Im τ = {tau_im}")));
        }
    }
}

pub fn theta3(z: f64, tau_im: f64) -> Result<f64> {
    theta3_full(z, tau_im).map(|t| t.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::adaptive_legendre;
    use approx::assert_relative_eq;

    // Reference values from an independent arbitrary-precision evaluation.
    const AIRY_REF: &[(f64, f64, f64)] = &[
        (-20.0, -0.1764061270779846895901923, 0.8928628567364712383984099),
        (-15.0, 0.2782174908708289295276215, 0.2723742043086420208257839),
        (-10.0, 0.04024123848644319068943031, 0.9962650441327900559045725),
        (-7.3, 0.3357703705151472769671717, -0.1800958044832936598516171),
        (-5.0, 0.3507610090241143197880163, 0.3271928185544431367948787),
        (-3.0, -0.3788142936776580743472439, 0.3145837692165988136507873),
        (-2.0, 0.2274074282016855759919244, 0.6182590207416910414062643),
        (-1.0, 0.5355608832923521187995166, -0.01016056711664520939504547),
        (0.5, 0.2316936064808334897691253, -0.224910532664683893135997),
        (1.0, 0.1352924163128814155241474, -0.1591474412967932127875003),
        (2.0, 0.03492413042327437913532208, -0.05309038443365363170399919),
        (3.0, 0.006591139357460719144257448, -0.01191297670595131847376323),
        (5.0, 0.000108344428136074417349865, -0.0002474138908684624760002362),
        (8.0, 4.692207616099231625649082e-8, -1.341439297906786574291154e-7),
        (10.0, 1.104753255289868593355021e-10, -3.520633676738923636620645e-10),
        (15.0, 2.164962520737992298989454e-18, -8.420567954017772766124393e-18),
        (20.0, 1.69167286867054031355356e-27, -7.586391625748354960515372e-27),
    ];

    #[test]
    fn airy_reference_values() {
        for &(s, ai, aip) in AIRY_REF {
            let (a, ap) = airy_pair(s);
            assert_relative_eq!(a, ai, max_relative = 1e-10);
            assert_relative_eq!(ap, aip, max_relative = 1e-10);
        }
    }

    #[test]
    fn airy_at_zero_matches_gamma_formula() {
        let g = statrs::function::gamma::gamma(2.0 / 3.0);
        assert_relative_eq!(airy(0.0), 1.0 / (3f64.powf(2.0 / 3.0) * g), max_relative = 1e-14);
    }

    #[test]
    fn airy_decays_on_positive_axis() {
        assert!(airy(10.0) < airy(5.0) && airy(5.0) < airy(1.0));
    }

    #[test]
    fn airy_satisfies_ode() {
        let h = 1e-2;
        for s in [-2.0, 0.0, 2.0] {
            let f = |k: f64| airy(s + k * h);
            let d2 = (-f(2.0) + 16.0 * f(1.0) - 30.0 * f(0.0) + 16.0 * f(-1.0) - f(-2.0)) / (12.0 * h * h);
            assert!((d2 - s * airy(s)).abs() < 1e-8, "s={s}");
        }
    }

    #[test]
    fn far_negative_asymptotic_joins_continuation() {
        let x = CONTINUATION_LIMIT;
        let (a1, d1) = airy_negative_asymptotic(x);
        let (mut y, mut yp) = airy_taylor_step(0.0, AI0, -AIP0_NEG, -SERIES_RADIUS);
        let mut xx = -SERIES_RADIUS;
        while xx > x + 1e-12 {
            (y, yp) = airy_taylor_step(xx, y, yp, -0.5);
            xx -= 0.5;
        }
        assert!((a1 - y).abs() < 1e-11 && (d1 - yp).abs() < 1e-10);
    }

    #[test]
    fn elliptic_degenerate_and_domain() {
        let (k, e) = complete_elliptic(0.0).unwrap();
        assert_relative_eq!(k, FRAC_PI_2, max_relative = 1e-15);
        assert_relative_eq!(e, FRAC_PI_2, max_relative = 1e-15);
        assert!(complete_elliptic(1.0).is_err());
        assert!(complete_elliptic(-0.1).is_err());
    }

    #[test]
    fn legendre_relation() {
        let s = 0.6f64;
        let sp = (1.0 - s * s).sqrt();
        let (k, e) = complete_elliptic(s).unwrap();
        let (kp, ep) = complete_elliptic(sp).unwrap();
        assert!((e * kp + ep * k - k * kp - FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn elliptic_against_quadrature() {
        let s = 0.9f64;
        let kq =
            adaptive_legendre(&|t: f64| 1.0 / (1.0 - s * s * t.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2, 1e-14).unwrap();
        let eq = adaptive_legendre(&|t: f64| (1.0 - s * s * t.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2, 1e-14).unwrap();
        let (k, e) = complete_elliptic(s).unwrap();
        assert_relative_eq!(k, kq, max_relative = 1e-12);
        assert_relative_eq!(e, eq, max_relative = 1e-12);
        assert_relative_eq!(k, 2.280549138422770204613751944555530438743, max_relative = 1e-13);
        assert_relative_eq!(e, 1.171697052781614141185913957957410257425, max_relative = 1e-13);
    }

    #[test]
    fn theta_periodicity_and_zero() {
        let a = theta3(0.3, 0.8).unwrap();
        let b = theta3(1.3, 0.8).unwrap();
        assert!((a - b).abs() < 1e-14);
        // ϑ₃(1/2 + τ/2; τ) = 0 at τ = i: move the imaginary shift into the
        // series by pairing n with -n-1.
        let mut sum = 0.0;
        for n in -30i32..=30 {
            let nf = n as f64;
            // exp(πi n² i + 2πi n (1/2 + i/2)) = (-1)^n exp(-π n² - π n)
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (-PI * nf * nf - PI * nf).exp();
        }
        assert!(sum.abs() < 1e-12);
        assert!(theta3(0.1, 0.0).is_err());
    }

    #[test]
    fn theta_at_origin() {
        // Direct summation oracle.
        let direct: f64 = (-40i32..=40).map(|n| (-PI * (n * n) as f64).exp()).sum();
        assert_relative_eq!(theta3(0.0, 1.0).unwrap(), direct, max_relative = 1e-15);
        assert_relative_eq!(theta3(0.0, 1.0).unwrap(), 1.086434811213308014575316121510, max_relative = 1e-15);
    }

    #[test]
    fn theta_derivatives_match_differences() {
        let h = 1e-4;
        for &(z, t) in &[(0.1, 0.5), (0.37, 0.2), (0.8, 1.3)] {
            let th = theta3_full(z, t).unwrap();
            let fp = theta3(z + h, t).unwrap();
            let fm = theta3(z - h, t).unwrap();
            assert!((th.d1 - (fp - fm) / (2.0 * h)).abs() < 1e-6);
            assert!((th.d2 - (fp - 2.0 * th.value + fm) / (h * h)).abs() < 1e-4);
        }
    }
}
