//! Gauss–Legendre quadrature.

use std::sync::OnceLock;

/// Dyadic panels of the θ rule, halving towards `θ = 0`.
pub const THETA_PANELS: usize = 24;
/// Gauss–Legendre nodes per panel.
pub const PANEL_NODES: usize = 16;

/// Nodes and weights of the `n`-point rule on `[-1, 1]`, by Newton iteration
/// on the three-term Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for k in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (k as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[k] = -z;
        x[n - 1 - k] = z;
        let wk = 2.0 / ((1.0 - z * z) * dp * dp);
        w[k] = wk;
        w[n - 1 - k] = wk;
    }
    (x, w)
}

/// Composite rule on `(0, π/2)`: panels `[π/2^{k+2}, π/2^{k+1}]` for
/// `k < THETA_PANELS` plus one innermost panel down to zero. The MGF
/// integrands switch from 0 to 1 near `θ ≈ √(gσ²)`, which for large joint
/// orders at low SNR sits far below any fixed-step grid.
fn theta_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(PANEL_NODES);
        let mut nodes = Vec::with_capacity((THETA_PANELS + 1) * PANEL_NODES);
        let mut weights = Vec::with_capacity(nodes.capacity());
        let mut hi = std::f64::consts::FRAC_PI_2;
        for k in 0..=THETA_PANELS {
            let lo = if k == THETA_PANELS { 0.0 } else { hi / 2.0 };
            let (mid, half) = ((hi + lo) / 2.0, (hi - lo) / 2.0);
            for (t, v) in x.iter().zip(&w) {
                nodes.push(mid + half * t);
                weights.push(half * v);
            }
            hi = lo;
        }
        (nodes, weights)
    })
}

/// `∫_0^{π/2} f(θ) dθ` with the graded composite rule.
pub fn integrate_theta(mut f: impl FnMut(f64) -> f64) -> f64 {
    let (x, w) = theta_rule();
    x.iter().zip(w).map(|(&t, &v)| v * f(t)).sum()
}
