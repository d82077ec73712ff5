//! Gaussian tail and exponential integral.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `Ei(x)` for `x < 0`, i.e. `-E1(-x)`.
pub fn expint_ei(x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::Domain(format!("Ei({x}) is only provided for x < 0")));
    }
    let z = -x;
    Ok(-scaled_e1(z) * (-z).exp())
}

/// `e^z E1(z)` for `z > 0`, finite for every positive `z`.
///
/// Power series up to `z = 1`, modified Lentz evaluation of the continued
/// fraction beyond.
pub fn scaled_e1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z <= 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            term *= -z / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        return z.exp() * (-EULER_GAMMA - z.ln() - sum);
    }
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `e^z E1(z) = ∫_0^∞ e^{-t}/(z+t) dt` by adaptive Simpson on `t = u/(1-u)`.
    fn scaled_e1_oracle(z: f64) -> f64 {
        let f = |u: f64| {
            if u >= 1.0 {
                return 0.0;
            }
            let t = u / (1.0 - u);
            (-t).exp() / (z + t) / ((1.0 - u) * (1.0 - u))
        };
        adaptive_simpson(&f, 0.0, 1.0, 1e-14 / (1.0 + z), 60)
    }

    fn e1_oracle(z: f64) -> f64 {
        scaled_e1_oracle(z) * (-z).exp()
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
            let m = 0.5 * (a + b);
            let fm = f(m);
            (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
        }
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            fa: f64,
            b: f64,
            fb: f64,
            eps: f64,
            whole: f64,
            m: f64,
            fm: f64,
            depth: u32,
        ) -> f64 {
            let (lm, flm, left) = simpson(f, a, fa, m, fm);
            let (rm, frm, right) = simpson(f, m, fm, b, fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * eps {
                return left + right + delta / 15.0;
            }
            rec(f, a, fa, m, fm, eps / 2.0, left, lm, flm, depth - 1)
                + rec(f, m, fm, b, fb, eps / 2.0, right, rm, frm, depth - 1)
        }
        let (fa, fb) = (f(a), f(b));
        let (m, fm, whole) = simpson(f, a, fa, b, fb);
        rec(f, a, fa, b, fb, eps, whole, m, fm, depth)
    }

    #[test]
    fn q_function_values() {
        assert_eq!(q_function(0.0), 0.5);
        for x in [0.1, 0.7, 1.3, 2.5, 4.0] {
            assert!((q_function(-x) - (1.0 - q_function(x))).abs() < 1e-15);
        }
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((q_function(5.0) / 2.866_515_718_791_939e-7 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ei_minus_one() {
        let ei = expint_ei(-1.0).unwrap();
        assert!((ei + 0.219_383_934_395_520_3).abs() < 1e-15);
        assert!((ei + e1_oracle(1.0)).abs() < 1e-12);
    }

    #[test]
    fn ei_matches_quadrature_across_branches() {
        for z in [1e-6, 1e-3, 0.05, 0.5, 0.999, 1.0, 1.001, 2.0, 7.5, 30.0, 120.0] {
            let ei = expint_ei(-z).unwrap();
            let oracle = -e1_oracle(z);
            assert!(
                ((ei - oracle) / oracle).abs() < 1e-10,
                "z={z}: {ei} vs {oracle}"
            );
        }
    }

    #[test]
    fn ei_domain() {
        assert!(expint_ei(0.0).is_err());
        assert!(expint_ei(1.0).is_err());
        assert!(expint_ei(f64::NAN).is_err());
    }

    #[test]
    fn scaled_e1_large_argument_asymptote() {
        // e^z E1(z) ~ 1/z (1 - 1/z + 2/z² - 6/z³)
        let z = 1e4;
        let asym = (1.0 - 1.0 / z + 2.0 / (z * z) - 6.0 / (z * z * z)) / z;
        assert!((scaled_e1(z) / asym - 1.0).abs() < 1e-14);
        assert!(scaled_e1(1e300).is_finite());
    }
}
