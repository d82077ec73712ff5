//! Conventional downlink power-domain NOMA.
//!
//! Device indices are 0-based here: device 0 has the strongest channel and
//! the smallest power share, device `L-1` the largest share. Device `i`
//! cancels devices `L-1, L-2, ..., i+1` before detecting its own symbol.

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const SUM_TOLERANCE: f64 = 1e-9;

/// Power allocation coefficients, strictly increasing and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PowerAllocation {
    alphas: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidPowerAllocation("empty allocation".into()));
        }
        if alphas.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidPowerAllocation(
                "every coefficient must be positive".into(),
            ));
        }
        if alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPowerAllocation(
                "coefficients must be strictly increasing".into(),
            ));
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidPowerAllocation(format!(
                "coefficients sum to {sum}, expected 1"
            )));
        }
        Ok(PowerAllocation { alphas })
    }

    /// Rescales `raw` to unit sum before validating. Tabulated allocations
    /// are rounded to four decimals and do not always sum to one exactly.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidPowerAllocation("non-positive total".into()));
        }
        Self::new(raw.into_iter().map(|a| a / sum).collect())
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn devices(&self) -> usize {
        self.alphas.len()
    }

    /// Power penalty of each device relative to an interference-free link
    /// using the full transmit power, in dB.
    pub fn penalty_db(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| -10.0 * a.log10()).collect()
    }
}

impl TryFrom<Vec<f64>> for PowerAllocation {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        PowerAllocation::new(v)
    }
}

impl From<PowerAllocation> for Vec<f64> {
    fn from(pa: PowerAllocation) -> Self {
        pa.alphas
    }
}

/// Verdict of the finite-alphabet detectability constraint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// Lower bound each coefficient must exceed (zero for device 0).
    pub bounds: Vec<f64>,
    /// `alpha_i - bound_i`.
    pub margins: Vec<f64>,
}

/// Per-axis layout of a unit-energy QAM: half spacing and the largest
/// coordinate on the in-phase and quadrature axes (zero for an empty axis).
struct AxisGeometry {
    half_spacing: f64,
    peak: [f64; 2],
}

impl AxisGeometry {
    fn of(m: u64) -> Result<Self> {
        let c = Constellation::qam(m)?;
        let d = c.half_spacing();
        let (bi, bq) = c.axis_bits();
        Ok(AxisGeometry {
            half_spacing: d,
            peak: [((1u64 << bi) - 1) as f64 * d, ((1u64 << bq) - 1) as f64 * d],
        })
    }

    /// Amplitude a device needs so its half spacing exceeds `interference`
    /// on every axis it uses.
    fn required_amplitude(&self, interference: &[f64; 2]) -> f64 {
        (0..2)
            .filter(|&k| self.peak[k] > 0.0)
            .map(|k| interference[k] / self.half_spacing)
            .fold(0.0, f64::max)
    }
}

/// Checks that every device's half spacing, scaled by `sqrt(alpha_i)`, exceeds
/// the peak interference `sum_{j<i} sqrt(alpha_j) max|x_j|` on each axis it
/// uses. For square orders this is
/// `alpha_i > (M_i - 1) (sum_{j<i} sqrt(alpha_j / (M_j - 1)) (sqrt(M_j) - 1))^2`.
pub fn check_pa_feasible(pa: &PowerAllocation, orders: &[u64]) -> Result<Feasibility> {
    if orders.len() != pa.devices() {
        return Err(Error::LengthMismatch {
            expected: pa.devices(),
            actual: orders.len(),
        });
    }
    let alphas = pa.alphas();
    let mut interference = [0.0; 2];
    let mut bounds = Vec::with_capacity(alphas.len());
    for (&a, &m) in alphas.iter().zip(orders) {
        let g = AxisGeometry::of(m)?;
        bounds.push(g.required_amplitude(&interference).powi(2));
        for k in 0..2 {
            interference[k] += a.sqrt() * g.peak[k];
        }
    }
    let margins: Vec<f64> = alphas.iter().zip(&bounds).map(|(a, b)| a - b).collect();
    Ok(Feasibility {
        feasible: margins.iter().all(|&m| m > 0.0),
        bounds,
        margins,
    })
}

/// Builds a feasible allocation by placing each amplitude a factor `margin`
/// above its detectability bound, then normalising.
///
/// The constraint is homogeneous of degree one in the coefficient vector, so
/// the final rescaling keeps every inequality. When a bound falls below the
/// previous amplitude, the previous amplitude is used instead so the shares
/// stay strictly increasing.
pub fn generate_pa(orders: &[u64], margin: f64) -> Result<PowerAllocation> {
    if !(margin > 1.0) {
        return Err(Error::InvalidArgument(format!("margin {margin} must exceed 1")));
    }
    if orders.is_empty() {
        return Err(Error::InvalidArgument("no devices".into()));
    }
    let mut amps: Vec<f64> = Vec::with_capacity(orders.len());
    let mut interference = [0.0; 2];
    for (i, &m) in orders.iter().enumerate() {
        let g = AxisGeometry::of(m)?;
        let a = if i == 0 {
            1.0
        } else {
            margin * g.required_amplitude(&interference).max(amps[i - 1])
        };
        for k in 0..2 {
            interference[k] += a * g.peak[k];
        }
        amps.push(a);
    }
    let total: f64 = amps.iter().map(|a| a * a).sum();
    let alphas: Vec<f64> = amps.iter().map(|a| a * a / total).collect();
    if alphas[0] < 1e-12 {
        return Err(Error::InfeasibleConfiguration(format!(
            "weakest share {:.3e} vanishes; no practical allocation for {} devices",
            alphas[0],
            orders.len()
        )));
    }
    PowerAllocation::new(alphas)
}

/// Closest [`generate_pa`] output to a reference allocation over a grid of
/// margins, measured by the largest relative coefficient error.
pub fn closest_margin(
    orders: &[u64],
    reference: &[f64],
    margins: impl IntoIterator<Item = f64>,
) -> Option<(f64, PowerAllocation, f64)> {
    margins
        .into_iter()
        .filter_map(|t| {
            let pa = generate_pa(orders, t).ok()?;
            let err = pa
                .alphas()
                .iter()
                .zip(reference)
                .map(|(a, r)| ((a - r) / r).abs())
                .fold(0.0, f64::max);
            Some((t, pa, err))
        })
        .min_by(|a, b| a.2.total_cmp(&b.2))
}

/// `sum_i sqrt(alpha_i) x_i`.
pub fn superpose(symbols: &[Complex64], pa: &PowerAllocation) -> Result<Complex64> {
    if symbols.len() != pa.devices() {
        return Err(Error::LengthMismatch {
            expected: pa.devices(),
            actual: symbols.len(),
        });
    }
    Ok(symbols
        .iter()
        .zip(pa.alphas())
        .map(|(x, a)| x * a.sqrt())
        .sum())
}

/// One detect-and-subtract stage of the canceller.
#[derive(Debug, Clone, PartialEq)]
pub struct SicStage {
    pub device: usize,
    /// Signal entering the stage.
    pub residual: Complex64,
    pub detected: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SicTrace {
    /// Stages in cancellation order (device L-1 first).
    pub stages: Vec<SicStage>,
}

impl SicTrace {
    /// `delta_j = |x_j - x̂_j|²` for each cancelled device, in stage order.
    pub fn deltas(&self, transmitted: &[u32], constellations: &[Constellation]) -> Vec<f64> {
        self.stages
            .iter()
            .map(|s| {
                let c = &constellations[s.device];
                (c.point(transmitted[s.device]) - c.point(s.detected)).norm_sqr()
            })
            .collect()
    }
}

/// Successive interference canceller for a fixed allocation and alphabet set.
#[derive(Debug, Clone)]
pub struct SicReceiver {
    pa: PowerAllocation,
    constellations: Vec<Constellation>,
    amplitudes: Vec<f64>,
}

impl SicReceiver {
    pub fn new(pa: PowerAllocation, constellations: Vec<Constellation>) -> Result<Self> {
        if constellations.len() != pa.devices() {
            return Err(Error::LengthMismatch {
                expected: pa.devices(),
                actual: constellations.len(),
            });
        }
        let amplitudes = pa.alphas().iter().map(|a| a.sqrt()).collect();
        Ok(SicReceiver {
            pa,
            constellations,
            amplitudes,
        })
    }

    pub fn pa(&self) -> &PowerAllocation {
        &self.pa
    }

    pub fn constellations(&self) -> &[Constellation] {
        &self.constellations
    }

    /// Runs the canceller at `device` and returns its own detected label.
    /// `detected[j]` receives the decision for every cancelled device `j > device`.
    /// Decisions use the per-axis slicer; `gain` must be non-zero.
    #[inline]
    pub fn detect_into(&self, y: Complex64, gain: Complex64, device: usize, detected: &mut [u32]) -> u32 {
        let mut residual = y;
        for j in (device + 1..self.amplitudes.len()).rev() {
            let g = gain * self.amplitudes[j];
            let c = &self.constellations[j];
            let d = c.slice(residual, g);
            detected[j] = d;
            residual -= g * c.point(d);
        }
        self.constellations[device].slice(residual, gain * self.amplitudes[device])
    }

    /// Full canceller with exhaustive ML decisions at every stage.
    pub fn receive(&self, y: Complex64, gain: Complex64, device: usize) -> Result<(Vec<u8>, SicTrace)> {
        if device >= self.amplitudes.len() {
            return Err(Error::InvalidArgument(format!("no device {device}")));
        }
        let mut residual = y;
        let mut trace = SicTrace::default();
        for j in (device + 1..self.amplitudes.len()).rev() {
            let g = gain * self.amplitudes[j];
            let c = &self.constellations[j];
            let det = c.ml_detect(residual, g)?;
            trace.stages.push(SicStage {
                device: j,
                residual,
                detected: det.index as u32,
            });
            residual -= g * c.point(det.index as u32);
        }
        let own = self.constellations[device].ml_detect(residual, gain * self.amplitudes[device])?;
        Ok((own.bits, trace))
    }
}

/// One-shot form of [`SicReceiver::receive`].
pub fn sic_receive(
    y: Complex64,
    gain: Complex64,
    pa: &PowerAllocation,
    constellations: &[Constellation],
    device: usize,
) -> Result<(Vec<u8>, SicTrace)> {
    SicReceiver::new(pa.clone(), constellations.to_vec())?.receive(y, gain, device)
}

/// SINR of `device` given its power gain and the residual energies
/// `later_deltas[k] = delta_{device+1+k}` left by imperfect cancellation.
///
/// `rho α_i γ / (rho γ Σ_{j>i} α_j δ_j + rho γ Σ_{p<i} α_p + 1)`.
pub fn sinr_conventional(
    pa: &PowerAllocation,
    device: usize,
    gamma: f64,
    rho: f64,
    later_deltas: &[f64],
) -> Result<f64> {
    let alphas = pa.alphas();
    if device >= alphas.len() {
        return Err(Error::InvalidArgument(format!("no device {device}")));
    }
    let later = &alphas[device + 1..];
    if later_deltas.len() != later.len() {
        return Err(Error::LengthMismatch {
            expected: later.len(),
            actual: later_deltas.len(),
        });
    }
    Ok(sinr_unchecked(alphas, device, gamma, rho, later_deltas))
}

#[inline]
pub(crate) fn sinr_unchecked(alphas: &[f64], device: usize, gamma: f64, rho: f64, later_deltas: &[f64]) -> f64 {
    let residual: f64 = alphas[device + 1..]
        .iter()
        .zip(later_deltas)
        .map(|(a, d)| a * d)
        .sum();
    let weaker: f64 = alphas[..device].iter().sum();
    rho * alphas[device] * gamma / (rho * gamma * (residual + weaker) + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::build_qam;

    fn table_i_l3_m4() -> PowerAllocation {
        PowerAllocation::normalized(vec![0.0261, 0.1948, 0.7791]).unwrap()
    }

    #[test]
    fn allocation_invariants() {
        assert!(PowerAllocation::new(vec![0.2, 0.8]).is_ok());
        assert!(PowerAllocation::new(vec![0.5, 0.5]).is_err());
        assert!(PowerAllocation::new(vec![0.3, 0.6]).is_err());
        assert!(PowerAllocation::new(vec![0.0, 1.0]).is_err());
        assert!(PowerAllocation::new(vec![]).is_err());
        assert!(PowerAllocation::new(vec![1.0]).is_ok());
        let pa = PowerAllocation::normalized(vec![0.0001, 0.0037, 0.0586, 0.9377]).unwrap();
        assert!((pa.alphas().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_i_proposed_l3_m4_is_feasible() {
        let f = check_pa_feasible(&table_i_l3_m4(), &[4, 4, 4]).unwrap();
        assert!(f.feasible);
        assert!(f.margins.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn commonly_used_pa_fails_for_sixteen_qam() {
        let pa = PowerAllocation::new(vec![0.05, 0.25, 0.7]).unwrap();
        let f = check_pa_feasible(&pa, &[16, 16, 16]).unwrap();
        assert!(!f.feasible);
        assert!((f.bounds[1] - 0.45).abs() < 1e-12);
        assert!(f.margins[1] < 0.0);
    }

    #[test]
    fn equal_step_allocation_fails_for_qpsk() {
        let pa = PowerAllocation::normalized(vec![1.0, 2.0, 3.0]).unwrap();
        let f = check_pa_feasible(&pa, &[4, 4, 4]).unwrap();
        assert!((f.bounds[1] - 1.0 / 6.0).abs() < 1e-12);
        let expected = 3.0 * ((1.0f64 / 18.0).sqrt() + (1.0f64 / 9.0).sqrt()).powi(2);
        assert!((f.bounds[2] - expected).abs() < 1e-12);
        assert!(f.bounds[2] > 0.97 && f.bounds[2] < 0.972);
        assert!(!f.feasible);
    }

    #[test]
    fn bpsk_bound_uses_real_axis_geometry() {
        let f = check_pa_feasible(&PowerAllocation::new(vec![0.2, 0.8]).unwrap(), &[2, 2]).unwrap();
        assert!(f.feasible);
        assert!((f.bounds[1] - 0.2).abs() < 1e-12);
        let close = PowerAllocation::new(vec![0.45, 0.55]).unwrap();
        assert!((check_pa_feasible(&close, &[2, 2]).unwrap().margins[1] - 0.1).abs() < 1e-12);
        // A QPSK layer under a BPSK one only loads the in-phase axis.
        let f = check_pa_feasible(&PowerAllocation::new(vec![0.2, 0.8]).unwrap(), &[4, 2]).unwrap();
        assert!((f.bounds[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_device_is_trivially_feasible() {
        let pa = PowerAllocation::new(vec![1.0]).unwrap();
        let f = check_pa_feasible(&pa, &[64]).unwrap();
        assert!(f.feasible);
        assert_eq!(f.bounds, vec![0.0]);
    }

    #[test]
    fn feasibility_is_scale_invariant() {
        // Unnormalised amplitudes scaled by any positive constant keep the verdict.
        let raw = [0.0261, 0.1948, 0.7791];
        for c in [0.1, 0.5, 3.0, 40.0] {
            let pa = PowerAllocation::normalized(raw.iter().map(|a| a * c).collect()).unwrap();
            assert!(check_pa_feasible(&pa, &[4, 4, 4]).unwrap().feasible);
        }
    }

    #[test]
    fn generated_allocations_are_feasible() {
        for orders in [vec![4, 4], vec![4, 4, 4], vec![16, 16, 16], vec![2, 4, 16], vec![2, 2, 2], vec![64, 16]] {
            for t in [1.01, 1.5, 2.0, 3.0] {
                let pa = generate_pa(&orders, t).unwrap();
                let f = check_pa_feasible(&pa, &orders).unwrap();
                assert!(f.feasible, "{orders:?} t={t}");
            }
        }
        assert!(generate_pa(&[4, 4], 1.0).is_err());
    }

    #[test]
    fn two_device_qpsk_margin() {
        let pa = generate_pa(&[4, 4], 2.0).unwrap();
        let a = pa.alphas();
        assert!((a[1] / a[0] - 4.0).abs() < 1e-12);
        assert!(check_pa_feasible(&pa, &[4, 4]).unwrap().margins[1] > 0.0);
    }

    #[test]
    fn five_devices_starve_the_first() {
        let pa = generate_pa(&[4; 5], 2.0).unwrap();
        let first_db = 10.0 * pa.alphas()[0].log10();
        // 1 / (1 + 4 (1 + 9 + 81 + 729)) = 1/3281
        assert!((pa.alphas()[0] - 1.0 / 3281.0).abs() < 1e-15);
        assert!(first_db < -35.0);
        let pa = generate_pa(&[4; 5], 3.0).unwrap();
        assert!(pa.alphas()[0] < 1e-4);
        // Eight 64-QAM devices at a generous margin leave nothing for the first.
        assert!(matches!(
            generate_pa(&[64; 8], 4.0),
            Err(Error::InfeasibleConfiguration(_))
        ));
    }

    #[test]
    fn table_i_proximity_is_reported() {
        let reference = [0.0261, 0.1948, 0.7791];
        let (t, pa, err) = closest_margin(&[4, 4, 4], &reference, (101..=600).map(|k| k as f64 / 100.0)).unwrap();
        assert!(check_pa_feasible(&pa, &[4, 4, 4]).unwrap().feasible);
        // A single margin cannot reproduce all three tabulated shares.
        assert!(t > 1.0 && err > 0.1);
    }

    #[test]
    fn superpose_identity_and_energy() {
        let pa = PowerAllocation::new(vec![1.0]).unwrap();
        let x = Complex64::new(0.3, -0.7);
        assert_eq!(superpose(&[x], &pa).unwrap(), x);
        assert!(superpose(&[x, x], &pa).is_err());

        // Average energy over every composite of three 4-QAM devices.
        let pa = table_i_l3_m4();
        let c = build_qam(4).unwrap();
        let mut e = 0.0;
        for k in 0..64u32 {
            let syms = [c.point(k & 3), c.point((k >> 2) & 3), c.point(k >> 4)];
            e += superpose(&syms, &pa).unwrap().norm_sqr();
        }
        assert!((e / 64.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composites_stay_in_strongest_device_quadrant() {
        let pa = table_i_l3_m4();
        let c = build_qam(4).unwrap();
        for k in 0..64u32 {
            let own = k >> 4;
            let syms = [c.point(k & 3), c.point((k >> 2) & 3), c.point(own)];
            let s = superpose(&syms, &pa).unwrap();
            let p = c.point(own);
            assert!(s.re * p.re > 0.0 && s.im * p.im > 0.0, "composite {k}");
        }
    }

    fn enumerate_sic(pa: &PowerAllocation, m: u64) -> usize {
        let c = build_qam(m).unwrap();
        let l = pa.devices();
        let cs = vec![c.clone(); l];
        let rx = SicReceiver::new(pa.clone(), cs.clone()).unwrap();
        let gain = Complex64::new(0.8, 0.6);
        let total = (m as u32).pow(l as u32);
        let mut errors = 0;
        for k in 0..total {
            let labels: Vec<u32> = (0..l).map(|d| (k / (m as u32).pow(d as u32)) % m as u32).collect();
            let syms: Vec<Complex64> = labels.iter().map(|&x| c.point(x)).collect();
            let y = gain * superpose(&syms, pa).unwrap();
            for dev in 0..l {
                let (bits, trace) = rx.receive(y, gain, dev).unwrap();
                assert_eq!(trace.stages.len(), l - dev - 1);
                if bits != c.bit_label(labels[dev] as usize) {
                    errors += 1;
                }
            }
        }
        errors
    }

    #[test]
    fn zero_noise_sic_exact_under_feasible_allocation() {
        assert_eq!(enumerate_sic(&table_i_l3_m4(), 4), 0);
        let pa = PowerAllocation::normalized(vec![0.0012, 0.0588, 0.94]).unwrap();
        assert_eq!(enumerate_sic(&pa, 16), 0);
    }

    #[test]
    fn zero_noise_sic_fails_under_infeasible_allocation() {
        let pa = PowerAllocation::new(vec![0.05, 0.25, 0.7]).unwrap();
        assert!(enumerate_sic(&pa, 16) > 0);
    }

    #[test]
    fn strongest_share_device_runs_no_stages() {
        let pa = table_i_l3_m4();
        let c = build_qam(4).unwrap();
        let (_, trace) = sic_receive(Complex64::new(0.5, 0.5), Complex64::new(1.0, 0.0), &pa, &[c.clone(), c.clone(), c], 2).unwrap();
        assert!(trace.stages.is_empty());
    }

    #[test]
    fn sic_rejects_zero_gain() {
        let pa = table_i_l3_m4();
        let c = build_qam(4).unwrap();
        let r = sic_receive(Complex64::new(0.5, 0.5), Complex64::new(0.0, 0.0), &pa, &[c.clone(), c.clone(), c], 0);
        assert_eq!(r.unwrap_err(), Error::DegenerateChannel);
    }

    #[test]
    fn deltas_take_qpsk_distance_values() {
        let c = build_qam(4).unwrap();
        let cs = vec![c.clone(); 3];
        let trace = SicTrace {
            stages: vec![
                SicStage { device: 2, residual: Complex64::new(0.0, 0.0), detected: 0 },
                SicStage { device: 1, residual: Complex64::new(0.0, 0.0), detected: 1 },
            ],
        };
        let d = trace.deltas(&[0, 2, 3], &cs);
        // label 3 vs 0: opposite corner; label 2 vs 1: opposite corner too.
        assert!((d[0] - 4.0).abs() < 1e-12);
        assert!((d[1] - 4.0).abs() < 1e-12);
        let d = trace.deltas(&[0, 1, 1], &cs);
        assert!((d[0] - 2.0).abs() < 1e-12);
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn sinr_special_cases() {
        let pa = table_i_l3_m4();
        let a = pa.alphas().to_vec();
        let (g, rho) = (1.7, 50.0);
        let s = sinr_conventional(&pa, 0, g, rho, &[0.0, 0.0]).unwrap();
        assert!((s - rho * a[0] * g).abs() < 1e-12);
        let s = sinr_conventional(&pa, 2, g, rho, &[]).unwrap();
        assert!((s - rho * a[2] * g / (rho * g * (a[0] + a[1]) + 1.0)).abs() < 1e-12);
        let s = sinr_conventional(&pa, 2, g, 1e12, &[]).unwrap();
        assert!((s - a[2] / (1.0 - a[2])).abs() < 1e-9);
        assert!(sinr_conventional(&pa, 0, g, rho, &[0.0]).is_err());
    }
}
