//! Ordered Rayleigh power gains.
//!
//! Under instantaneous ordering (ICO) the L devices see i.i.d. `Exp(σ²)`
//! power gains ranked in descending order, so device `i` observes the i-th
//! maximum. Under statistical ordering (SCO) each device keeps its own
//! exponential gain with variance `σ_i²`, the variances themselves being
//! strictly decreasing in `i`.
//!
//! Ranks are 1-based throughout this module: rank 1 is the strongest device.

use crate::error::{Error, Result};
use crate::numeric::{binomial, CompensatedSum};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelOrdering {
    Ico,
    Sco,
}

impl std::fmt::Display for ChannelOrdering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChannelOrdering::Ico => "ico",
            ChannelOrdering::Sco => "sco",
        })
    }
}

/// Channel statistics of the L devices sharing one resource block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OrderedGainModel {
    Ico { devices: usize, sigma2: f64 },
    Sco { sigma2: Vec<f64> },
}

fn check_rank(devices: usize, rank: usize) -> Result<()> {
    if rank == 0 || rank > devices {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside 1..={devices}"
        )));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("power gain {gamma} must be >= 0")));
    }
    Ok(())
}

/// Density of the `rank`-th largest of `devices` i.i.d. `Exp(sigma2)` gains.
///
/// The alternating expansion
/// `L C(L-1, L-i) Σ_p (-1)^p C(L-i, p) e^{-(i+p)γ/σ²} / σ²` is evaluated in
/// its factored form `L C(L-1, L-i) e^{-iγ/σ²} (1 - e^{-γ/σ²})^{L-i} / σ²`,
/// which has no cancellation near `γ = 0`.
pub fn ith_max_pdf(devices: usize, rank: usize, sigma2: f64, gamma: f64) -> Result<f64> {
    check_rank(devices, rank)?;
    check_gamma(gamma)?;
    let (l, i) = (devices, rank);
    let x = gamma / sigma2;
    let lead = l as f64 * binomial(l - 1, l - i);
    Ok(lead * (-(i as f64) * x).exp() * (-(-x).exp_m1()).powi((l - i) as i32) / sigma2)
}

/// CDF of the `rank`-th largest of `devices` i.i.d. `Exp(sigma2)` gains.
///
/// Evaluated as the binomial tail `Σ_{k<i} C(L,k) e^{-kγ/σ²} (1-e^{-γ/σ²})^{L-k}`
/// (at most `i-1` gains exceed `γ`), a sum of positive terms equal to the
/// double alternating sum over `j` and `p`.
pub fn ith_max_cdf(devices: usize, rank: usize, sigma2: f64, gamma: f64) -> Result<f64> {
    check_rank(devices, rank)?;
    check_gamma(gamma)?;
    let (l, i) = (devices, rank);
    let x = gamma / sigma2;
    let u = -(-x).exp_m1();
    let v = (-x).exp();
    let s: CompensatedSum = (0..i)
        .map(|k| binomial(l, k) * v.powi(k as i32) * u.powi((l - k) as i32))
        .collect();
    Ok(s.value().clamp(0.0, 1.0))
}

/// Survival function `1 - cdf`, as the complementary binomial tail
/// `Σ_{k>=i} C(L,k) e^{-kγ/σ²} (1-e^{-γ/σ²})^{L-k}`; keeps relative accuracy
/// where the CDF rounds to one.
pub fn ith_max_sf(devices: usize, rank: usize, sigma2: f64, gamma: f64) -> Result<f64> {
    check_rank(devices, rank)?;
    check_gamma(gamma)?;
    let (l, i) = (devices, rank);
    let x = gamma / sigma2;
    let u = -(-x).exp_m1();
    let v = (-x).exp();
    let s: CompensatedSum = (i..=l)
        .map(|k| binomial(l, k) * v.powi(k as i32) * u.powi((l - k) as i32))
        .collect();
    Ok(s.value().clamp(0.0, 1.0))
}

/// Moment-generating function `E[exp(s·γ)]` of the `rank`-th largest gain.
///
/// Defined while every denominator `p + i - s·σ²` stays positive, i.e. for
/// `s < rank / sigma2`. The alternating expansion
/// `L C(L-1, L-i) Σ_p (-1)^p C(L-i, p) / (p + i - sσ²)` is a finite
/// difference of `1/(k - sσ²)`, which collapses to the product
/// `L C(L-1, L-i) (L-i)! / Π_p (p + i - sσ²)` and keeps full precision
/// deep into the high-SNR tail.
pub fn ith_max_mgf(devices: usize, rank: usize, sigma2: f64, s: f64) -> Result<f64> {
    check_rank(devices, rank)?;
    let (l, i) = (devices, rank);
    let c = -s * sigma2;
    if i as f64 + c <= 0.0 {
        return Err(Error::Domain(format!(
            "MGF pole: s = {s} >= rank/sigma2 = {}",
            i as f64 / sigma2
        )));
    }
    // L C(L-1, L-i) (L-i)! = L! / (i-1)!, folded into the product term by term.
    let mut acc = 1.0;
    for p in 0..=l - i {
        acc *= (l - p) as f64 / ((p + i) as f64 + c);
    }
    Ok(acc)
}

/// Draws `h ~ CN(0, sigma2)`.
#[inline]
pub fn sample_rayleigh<R: Rng + ?Sized>(rng: &mut R, sigma2: f64) -> Complex64 {
    let a = (sigma2 / 2.0).sqrt();
    Complex64::new(
        a * rng.sample::<f64, _>(StandardNormal),
        a * rng.sample::<f64, _>(StandardNormal),
    )
}

impl OrderedGainModel {
    pub fn ico(devices: usize, sigma2: f64) -> Result<Self> {
        if devices == 0 {
            return Err(Error::InvalidArgument("at least one device required".into()));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!("variance {sigma2} must be > 0")));
        }
        Ok(OrderedGainModel::Ico { devices, sigma2 })
    }

    pub fn sco(sigma2: Vec<f64>) -> Result<Self> {
        if sigma2.is_empty() {
            return Err(Error::InvalidArgument("at least one device required".into()));
        }
        if sigma2.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument("variances must be > 0".into()));
        }
        if sigma2.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidArgument(
                "statistical ordering needs strictly decreasing variances".into(),
            ));
        }
        Ok(OrderedGainModel::Sco { sigma2 })
    }

    pub fn devices(&self) -> usize {
        match self {
            OrderedGainModel::Ico { devices, .. } => *devices,
            OrderedGainModel::Sco { sigma2 } => sigma2.len(),
        }
    }

    pub fn ordering(&self) -> ChannelOrdering {
        match self {
            OrderedGainModel::Ico { .. } => ChannelOrdering::Ico,
            OrderedGainModel::Sco { .. } => ChannelOrdering::Sco,
        }
    }

    /// `σ²` (ICO) or `σ_rank²` (SCO).
    pub fn variance(&self, rank: usize) -> Result<f64> {
        check_rank(self.devices(), rank)?;
        Ok(match self {
            OrderedGainModel::Ico { sigma2, .. } => *sigma2,
            OrderedGainModel::Sco { sigma2 } => sigma2[rank - 1],
        })
    }

    pub fn pdf(&self, rank: usize, gamma: f64) -> Result<f64> {
        match self {
            OrderedGainModel::Ico { devices, sigma2 } => ith_max_pdf(*devices, rank, *sigma2, gamma),
            OrderedGainModel::Sco { .. } => {
                let s2 = self.variance(rank)?;
                check_gamma(gamma)?;
                Ok((-gamma / s2).exp() / s2)
            }
        }
    }

    pub fn cdf(&self, rank: usize, gamma: f64) -> Result<f64> {
        match self {
            OrderedGainModel::Ico { devices, sigma2 } => ith_max_cdf(*devices, rank, *sigma2, gamma),
            OrderedGainModel::Sco { .. } => {
                let s2 = self.variance(rank)?;
                check_gamma(gamma)?;
                Ok(-(-gamma / s2).exp_m1())
            }
        }
    }

    pub fn mgf(&self, rank: usize, s: f64) -> Result<f64> {
        match self {
            OrderedGainModel::Ico { devices, sigma2 } => ith_max_mgf(*devices, rank, *sigma2, s),
            OrderedGainModel::Sco { .. } => {
                let s2 = self.variance(rank)?;
                if 1.0 - s * s2 <= 0.0 {
                    return Err(Error::Domain(format!("MGF pole at s = {s}")));
                }
                Ok(1.0 / (1.0 - s * s2))
            }
        }
    }

    /// Fills `out` with one complex channel per device. ICO draws i.i.d.
    /// coefficients and sorts them by descending power (stable sort); SCO
    /// draws each device from its own variance.
    pub fn sample_channels<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [Complex64]) {
        match self {
            OrderedGainModel::Ico { devices, sigma2 } => {
                debug_assert_eq!(out.len(), *devices);
                for h in out.iter_mut() {
                    *h = sample_rayleigh(rng, *sigma2);
                }
                out.sort_by(|a, b| b.norm_sqr().total_cmp(&a.norm_sqr()));
            }
            OrderedGainModel::Sco { sigma2 } => {
                debug_assert_eq!(out.len(), sigma2.len());
                for (h, &s2) in out.iter_mut().zip(sigma2) {
                    *h = sample_rayleigh(rng, s2);
                }
            }
        }
    }

    /// Power gains `|h_i|²`, one per device, in device order.
    pub fn sample_gains<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut h = vec![Complex64::new(0.0, 0.0); self.devices()];
        self.sample_channels(rng, &mut h);
        h.iter().map(|c| c.norm_sqr()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn survival_complements_cdf() {
        for l in 1..=6 {
            for i in 1..=l {
                for g in [0.0, 0.3, 1.0, 4.0] {
                    let c = ith_max_cdf(l, i, 1.3, g).unwrap();
                    let s = ith_max_sf(l, i, 1.3, g).unwrap();
                    assert!((c + s - 1.0).abs() < 1e-14);
                }
            }
        }
        // Largest of two: P(γ > x) = 1 - (1 - e^{-x})².
        let x = 40.0f64;
        let exact = 2.0 * (-x).exp() - (-2.0 * x).exp();
        assert!((ith_max_sf(2, 1, 1.0, x).unwrap() / exact - 1.0).abs() < 1e-14);
    }

    /// Alternating binomial expansion of the i-th maximum density.
    fn pdf_alternating(l: usize, i: usize, s2: f64, g: f64) -> f64 {
        let lead = l as f64 * binomial(l - 1, l - i);
        let s: f64 = (0..=l - i)
            .map(|p| {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(l - i, p) * (-((i + p) as f64) * g / s2).exp()
            })
            .sum();
        lead * s / s2
    }

    /// Double alternating sum for the CDF over `j = L-i+1..=L`, `p = 0..=L-j`.
    fn cdf_double_sum(l: usize, i: usize, s2: f64, g: f64) -> f64 {
        let u = 1.0 - (-g / s2).exp();
        let mut s = 0.0;
        for j in (l - i + 1)..=l {
            for p in 0..=(l - j) {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * binomial(l, j) * binomial(l - j, p) * u.powi((j + p) as i32);
            }
        }
        s
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn single_device_is_exponential() {
        for g in [0.0, 0.3, 1.0, 4.0] {
            assert!((ith_max_pdf(1, 1, 1.0, g).unwrap() - (-g).exp()).abs() < 1e-15);
            let s2 = 2.5;
            let cdf = ith_max_cdf(1, 1, s2, g).unwrap();
            assert!((cdf - (1.0 - (-g / s2).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn pdf_and_cdf_match_alternating_expansions() {
        for l in 1..=6 {
            for i in 1..=l {
                for g in [0.01, 0.2, 1.0, 3.0, 9.0] {
                    let a = ith_max_pdf(l, i, 1.7, g).unwrap();
                    let b = pdf_alternating(l, i, 1.7, g);
                    assert!((a - b).abs() <= 1e-13 + 1e-11 * b, "L={l} i={i} g={g}");
                    let a = ith_max_cdf(l, i, 1.7, g).unwrap();
                    let b = cdf_double_sum(l, i, 1.7, g);
                    assert!((a - b).abs() <= 1e-13 + 1e-11 * b, "L={l} i={i} g={g}");
                }
            }
        }
    }

    #[test]
    fn normalisation_identities() {
        for l in 1..=6 {
            for i in 1..=l {
                let area = simpson(|g| ith_max_pdf(l, i, 1.0, g).unwrap(), 0.0, 60.0, 200_000);
                assert!((area - 1.0).abs() < 1e-9, "L={l} i={i} area={area}");
                assert!((ith_max_cdf(l, i, 1.0, 200.0).unwrap() - 1.0).abs() < 1e-12);
                assert_eq!(ith_max_cdf(l, i, 1.0, 0.0).unwrap(), 0.0);
                assert!((ith_max_mgf(l, i, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cdf_derivative_is_pdf() {
        for l in 2..=6 {
            for i in 1..=l {
                for g in [0.2, 0.7, 1.5, 3.0] {
                    let h = 1e-4;
                    let d = (ith_max_cdf(l, i, 1.3, g + h).unwrap()
                        - ith_max_cdf(l, i, 1.3, g - h).unwrap())
                        / (2.0 * h);
                    let p = ith_max_pdf(l, i, 1.3, g).unwrap();
                    assert!(((d - p) / p).abs() < 1e-6, "L={l} i={i} g={g}");
                }
            }
        }
    }

    #[test]
    fn mixture_over_ranks_is_exponential() {
        for l in 1..=6 {
            for g in [0.0, 0.4, 1.1, 2.5] {
                let mix: f64 = (1..=l).map(|i| ith_max_pdf(l, i, 2.0, g).unwrap()).sum::<f64>() / l as f64;
                let exp = (-g / 2.0).exp() / 2.0;
                assert!((mix - exp).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mgf_exponential_and_pole() {
        assert!((ith_max_mgf(1, 1, 1.0, -1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(ith_max_mgf(3, 1, 1.0, 1.0).is_err());
        assert!(ith_max_mgf(3, 2, 0.5, 1.0).is_ok());
        let m = OrderedGainModel::sco(vec![2.0, 1.0]).unwrap();
        assert!((m.mgf(1, -0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mgf_product_matches_alternating_expansion() {
        for l in 1..=6 {
            for i in 1..=l {
                for s in [-0.01, -0.3, -2.0, -15.0, 0.4] {
                    let sigma2 = 1.3;
                    let lead = l as f64 * binomial(l - 1, l - i);
                    let alt: f64 = (0..=l - i)
                        .map(|p| {
                            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                            sign * binomial(l - i, p) / ((p + i) as f64 - s * sigma2)
                        })
                        .sum::<f64>()
                        * lead;
                    let prod = ith_max_mgf(l, i, sigma2, s).unwrap();
                    assert!((prod - alt).abs() < 1e-10 * alt.abs().max(1e-3), "L={l} i={i} s={s}");
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(ith_max_pdf(3, 1, 1.0, -0.1).is_err());
        assert!(ith_max_cdf(3, 1, 1.0, -0.1).is_err());
        assert!(ith_max_pdf(3, 4, 1.0, 0.1).is_err());
        assert!(ith_max_pdf(3, 0, 1.0, 0.1).is_err());
        assert!(OrderedGainModel::sco(vec![1.0, 1.0]).is_err());
        assert!(OrderedGainModel::sco(vec![1.0, 2.0]).is_err());
        assert!(OrderedGainModel::ico(3, 0.0).is_err());
    }

    #[test]
    fn ico_samples_are_descending() {
        let m = OrderedGainModel::ico(5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let g = m.sample_gains(&mut rng);
            assert!(g.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn ico_two_device_max_mean() {
        let m = OrderedGainModel::ico(2, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let g = m.sample_gains(&mut rng)[0];
            s += g;
            s2 += g * g;
        }
        let mean = s / n as f64;
        let sd = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 1.5 * 1.5).abs() < 3.0 * sd, "mean={mean}");
    }

    #[test]
    fn sco_sample_means() {
        let m = OrderedGainModel::sco(vec![4.0, 2.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 300_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            for (s, g) in sums.iter_mut().zip(m.sample_gains(&mut rng)) {
                *s += g;
            }
        }
        for (s, v) in sums.iter().zip([4.0, 2.0, 1.0]) {
            // Exp(v) has standard deviation v.
            assert!((s / n as f64 - v).abs() < 3.0 * v / (n as f64).sqrt());
        }
    }

    #[test]
    fn pdf_matches_histogram_of_second_of_three() {
        let (l, i) = (3, 2);
        let m = OrderedGainModel::ico(l, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 1_000_000;
        let width = 0.1;
        let bins = 30;
        let mut hist = vec![0usize; bins];
        for _ in 0..n {
            let g = m.sample_gains(&mut rng)[i - 1];
            let b = (g / width) as usize;
            if b < bins {
                hist[b] += 1;
            }
        }
        for (b, &count) in hist.iter().enumerate() {
            let lo = b as f64 * width;
            let p = simpson(|g| ith_max_pdf(l, i, 1.0, g).unwrap(), lo, lo + width, 50);
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            let emp = count as f64 / n as f64;
            assert!((emp - p).abs() < 3.5 * sd, "bin {b}: {emp} vs {p}");
        }
    }

    #[test]
    fn cdf_matches_sampling_third_of_four() {
        let m = OrderedGainModel::ico(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| m.sample_gains(&mut rng)[2] <= 1.0).count();
        let p = ith_max_cdf(4, 3, 1.0, 1.0).unwrap();
        let emp = hits as f64 / n as f64;
        assert!((emp - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn mgf_matches_sampling_max_of_three() {
        let m = OrderedGainModel::ico(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = (-0.5 * m.sample_gains(&mut rng)[0]).exp();
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let sd = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let mgf = ith_max_mgf(3, 1, 1.0, -0.5).unwrap();
        assert!((mean - mgf).abs() < 3.0 * sd, "{mean} vs {mgf}");
    }
}
