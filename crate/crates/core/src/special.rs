//! Regularized incomplete beta function and its inverse.

use statrs::function::gamma::ln_gamma;

const CF_MAX_ITER: usize = 200_000;
const CF_EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;

/// Tolerance on the quantile argument `x` when inverting [`beta_reg`].
pub const QUANTILE_TOL: f64 = 1e-10;

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `I_x(a, b)` for `a, b > 0` and `x` in `[0, 1]`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_cf(a, b, x) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b).clamp(0.0, 1.0)
    }
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
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
    for m in 1..=CF_MAX_ITER {
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
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Inverse of `x -> I_x(a, b)`: the `p`-quantile of Beta(a, b).
///
/// Safeguarded Newton iteration inside a shrinking bisection bracket;
/// terminates once the bracket or step is below [`QUANTILE_TOL`] (relative to
/// `x` for tiny quantiles).
pub fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_norm = ln_beta(a, b);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = (a / (a + b)).clamp(1e-12, 1.0 - 1e-12);
    for _ in 0..400 {
        let f = beta_reg(a, b, x) - p;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo < QUANTILE_TOL * 1e-2 * x.max(1e-280) {
            break;
        }
        let ln_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_norm;
        let pdf = ln_pdf.exp();
        let newton = if pdf.is_finite() && pdf > 0.0 {
            x - f / pdf
        } else {
            f64::NAN
        };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() < QUANTILE_TOL * 1e-2 * x.max(1e-280) {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_case_is_identity() {
        for &x in &[0.0, 0.1, 0.25, 0.5, 0.9, 1.0] {
            assert!((beta_reg(1.0, 1.0, x) - x).abs() < 1e-14);
            assert!((beta_quantile(1.0, 1.0, x) - x).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_forms() {
        // I_x(a, 1) = x^a and I_x(1, b) = 1 - (1 - x)^b.
        let x: f64 = 0.37;
        assert!((beta_reg(3.5, 1.0, x) - x.powf(3.5)).abs() < 1e-13);
        assert!((beta_reg(1.0, 4.0, x) - (1.0 - (1.0 - x).powi(4))).abs() < 1e-13);
        assert!((beta_quantile(2.0, 1.0, 0.25) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn symmetric_median() {
        assert!((beta_quantile(7.0, 7.0, 0.5) - 0.5).abs() < 1e-10);
        assert!((beta_reg(280.0, 280.0, 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &(a, b) in &[(0.5, 0.5), (2.0, 5.0), (280.0, 203.0), (0.2, 1.8), (1e6, 3e6)] {
            for &p in &[0.001, 0.025, 0.5, 0.975, 0.999] {
                let q = beta_quantile(a, b, p);
                assert!((beta_reg(a, b, q) - p).abs() < 1e-8, "a={a} b={b} p={p}");
            }
        }
    }

    #[test]
    fn extreme_concentration() {
        let q = beta_quantile(1e9, 1.0, 0.025);
        assert!(q > 1.0 - 1e-8 && q <= 1.0);
    }
}
