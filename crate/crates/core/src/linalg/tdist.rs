//! Student's t distribution with real-valued degrees of freedom.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 200_000;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Upper tail `P(T > x)` for `x ≥ 0`, computed without cancellation.
fn upper_tail(x: f64, nu: f64) -> f64 {
    let x2 = x * x;
    // I_{ν/(ν+x²)}(ν/2, 1/2) / 2, with the argument's complement passed exactly
    let z = nu / (nu + x2);
    let zc = x2 / (nu + x2);
    let (a, b) = (0.5 * nu, 0.5);
    let ln_front = a * z.ln() + b * zc.ln() - ln_beta(a, b);
    let ib = if z < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, z) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, zc) / b
    };
    0.5 * ib
}

pub fn t_cdf(x: f64, nu: f64) -> f64 {
    if x == 0.0 {
        0.5
    } else if x > 0.0 {
        1.0 - upper_tail(x, nu)
    } else {
        upper_tail(-x, nu)
    }
}

pub fn t_pdf(x: f64, nu: f64) -> f64 {
    let ln = ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p();
    ln.exp()
}

/// Quantile of Student's t with `nu > 0` (real) degrees of freedom.
///
/// Brackets the root of the upper tail, then runs Newton steps that fall back
/// to bisection whenever they leave the bracket.
pub fn t_quantile(p: f64, nu: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            what: "probability",
            value: p,
        });
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain {
            what: "degrees of freedom",
            value: nu,
        });
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // work with the upper tail q = P(T > x) so that p near 1 keeps precision
    let (q, sign) = if p > 0.5 { (1.0 - p, 1.0) } else { (p, -1.0) };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while upper_tail(hi, nu) > q {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Domain {
                what: "probability",
                value: p,
            });
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = upper_tail(x, nu) - q;
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = f / t_pdf(x, nu);
        let mut next = x + step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || hi - lo <= 1e-15 * hi {
            x = next;
            break;
        }
        x = next;
    }
    Ok(sign * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn median_is_zero() {
        for nu in [0.3, 1.0, 7.5, 1e6] {
            assert_eq!(t_quantile(0.5, nu).unwrap(), 0.0);
        }
    }

    #[test]
    fn cauchy_closed_form() {
        for p in [0.6, 0.9, 0.975, 0.999] {
            let want = (PI * (p - 0.5)).tan();
            let got = t_quantile(p, 1.0).unwrap();
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{p}: {got} vs {want}");
        }
        assert!((t_quantile(0.975, 1.0).unwrap() - 12.706_204_736_174_7).abs() < 1e-9);
    }

    #[test]
    fn nu_two_closed_form() {
        // F⁻¹(p) = (2p−1)/sqrt(2p(1−p)) for ν = 2
        for p in [0.55f64, 0.8, 0.95, 0.9999] {
            let want = (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
            assert!((t_quantile(p, 2.0).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn odd_symmetry() {
        for nu in [0.7, 3.0, 41.3] {
            for p in [0.01, 0.2, 0.4] {
                let a = t_quantile(p, nu).unwrap();
                let b = t_quantile(1.0 - p, nu).unwrap();
                assert!((a + b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(t_quantile(0.0, 3.0).is_err());
        assert!(t_quantile(1.0, 3.0).is_err());
        assert!(t_quantile(0.3, 0.0).is_err());
        assert!(t_quantile(0.3, -2.0).is_err());
        assert!(t_quantile(f64::NAN, 2.0).is_err());
    }

    #[test]
    fn cdf_inverts_quantile() {
        for nu in [0.5, 1.0, 2.5, 10.0, 250.0, 1e5] {
            for p in [0.001, 0.05, 0.3, 0.7, 0.975, 0.9995] {
                let x = t_quantile(p, nu).unwrap();
                assert!((t_cdf(x, nu) - p).abs() < 1e-12, "nu={nu} p={p}");
            }
        }
    }
}
