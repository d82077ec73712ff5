//! Closed-form KPIs.
//!
//! BIMA ergodic capacity, outage and bit error probability under both channel
//! orderings, plus the conventional-NOMA rate and the two-device 4-QAM BER
//! benchmark. Device ranks are 1-based as in [`crate::order_stats`].

pub mod quadrature;
pub mod special;

use crate::error::{Error, Result};
use crate::noma::{sinr_conventional, PowerAllocation};
use crate::numeric::{binomial, is_power_of_two, CompensatedSum, DoubleDouble};
use crate::order_stats::OrderedGainModel;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LOG2_E, PI};

/// Below this `ρσ²` the ergodic capacity is reported as zero.
pub const EC_UNDERFLOW: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Bima,
    Conv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Ec,
    Op,
    Ber,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Bima => "bima",
            Scheme::Conv => "conv",
        })
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Ec => "ec",
            Metric::Op => "op",
            Metric::Ber => "ber",
        })
    }
}

/// One point of an analytic KPI curve.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiRequest {
    pub scheme: Scheme,
    pub metric: Metric,
    pub model: OrderedGainModel,
    /// 1-based device rank.
    pub rank: usize,
    pub orders: Vec<u64>,
    /// Linear transmit SNR.
    pub rho: f64,
    /// Target rate in bit/s/Hz, required for outage.
    pub target_rate: Option<f64>,
    /// Conventional NOMA only.
    pub pa: Option<PowerAllocation>,
}

/// Dispatches a request to the matching closed form.
pub fn evaluate(req: &KpiRequest) -> Result<f64> {
    if !(req.rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("rho {} must be >= 0", req.rho)));
    }
    match (req.scheme, req.metric) {
        (Scheme::Bima, Metric::Ec) => bima_ec(&req.model, &req.orders, req.rank, req.rho),
        (Scheme::Bima, Metric::Op) => {
            let target = req
                .target_rate
                .ok_or_else(|| Error::InvalidArgument("outage needs a target rate".into()))?;
            bima_op(&req.model, &req.orders, req.rank, req.rho, target)
        }
        (Scheme::Bima, Metric::Ber) => bima_ber(&req.model, &req.orders, req.rank, req.rho),
        (Scheme::Conv, Metric::Ber) => {
            let pa = req
                .pa
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("conventional NOMA needs a power allocation".into()))?;
            conv_ber_2user_4qam(req.rank, pa, &req.model, &req.orders, req.rho)
        }
        (Scheme::Conv, m) => Err(Error::NotAvailable(format!(
            "no closed form for conventional NOMA {m}; use the Monte Carlo engine"
        ))),
    }
}

fn joint_bits(orders: &[u64], rank: usize, devices: usize) -> Result<(u32, u32)> {
    if orders.len() != devices {
        return Err(Error::LengthMismatch {
            expected: devices,
            actual: orders.len(),
        });
    }
    if rank == 0 || rank > orders.len() {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside 1..={}",
            orders.len()
        )));
    }
    let mut total = 0u32;
    for &m in orders {
        if !is_power_of_two(m) {
            return Err(Error::InvalidOrder(m));
        }
        total += m.trailing_zeros();
    }
    Ok((orders[rank - 1].trailing_zeros(), total))
}

/// `log2 M_i / log2 M_bw`, the device's share of every joint symbol.
pub fn rate_fraction(orders: &[u64], rank: usize) -> Result<f64> {
    let (own, total) = joint_bits(orders, rank, orders.len())?;
    Ok(own as f64 / total as f64)
}

/// Instantaneous BIMA rate for `snr_term = ρ γ_i`.
pub fn bima_rate(orders: &[u64], rank: usize, snr_term: f64) -> Result<f64> {
    if !(snr_term >= 0.0) {
        return Err(Error::Domain(format!("SNR {snr_term} must be >= 0")));
    }
    Ok(rate_fraction(orders, rank)? * snr_term.ln_1p() * LOG2_E)
}

/// BIMA ergodic capacity.
///
/// SCO: `frac · log2(e) · e^{1/(ρσ_i²)} E1(1/(ρσ_i²))`.
/// ICO: the same kernel per term of the order-statistics density,
/// `frac · L C(L-1,L-i) Σ_p (-1)^p C(L-i,p) / (i+p) · log2(e) e^{x_p} E1(x_p)`
/// with `x_p = (i+p)/(ρσ²)`.
pub fn bima_ec(model: &OrderedGainModel, orders: &[u64], rank: usize, rho: f64) -> Result<f64> {
    let (own, total) = joint_bits(orders, rank, model.devices())?;
    let frac = own as f64 / total as f64;
    let sigma2 = model.variance(rank)?;
    let snr = rho * sigma2;
    if snr < EC_UNDERFLOW {
        return Ok(0.0);
    }
    let kernel = |k: f64| LOG2_E * special::scaled_e1(k / snr);
    let ec = match model {
        OrderedGainModel::Sco { .. } => kernel(1.0),
        OrderedGainModel::Ico { devices, .. } => {
            let (l, i) = (*devices, rank);
            let lead = l as f64 * binomial(l - 1, l - i);
            let sum: CompensatedSum = (0..=l - i)
                .map(|p| {
                    let k = (i + p) as f64;
                    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                    sign * binomial(l - i, p) / k * kernel(k)
                })
                .collect();
            lead * sum.value()
        }
    };
    Ok((frac * ec).max(0.0))
}

/// Sum of the per-device ergodic capacities.
pub fn sum_ec(model: &OrderedGainModel, orders: &[u64], rho: f64) -> Result<f64> {
    (1..=model.devices()).map(|r| bima_ec(model, orders, r, rho)).sum()
}

/// Power-gain threshold `φ_i = (2^{Ŕ_i log2 M_bw / log2 M_i} - 1) / ρ` below
/// which the device is in outage.
pub fn outage_threshold(orders: &[u64], rank: usize, rho: f64, target_rate: f64) -> Result<f64> {
    if !(target_rate >= 0.0) {
        return Err(Error::InvalidArgument(format!("target rate {target_rate} must be >= 0")));
    }
    let frac = rate_fraction(orders, rank)?;
    let needed = (target_rate / frac * std::f64::consts::LN_2).exp_m1();
    Ok(if needed == 0.0 { 0.0 } else { needed / rho })
}

/// BIMA outage probability `F_{γ_i}(φ_i)`.
pub fn bima_op(
    model: &OrderedGainModel,
    orders: &[u64],
    rank: usize,
    rho: f64,
    target_rate: f64,
) -> Result<f64> {
    joint_bits(orders, rank, model.devices())?;
    let phi = outage_threshold(orders, rank, rho, target_rate)?;
    if phi.is_infinite() {
        return Ok(1.0);
    }
    model.cdf(rank, phi)
}

/// Nearest-neighbour constants of the joint alphabet: the multiplier `Ξ`
/// (square or rectangular case) and `g = 3ρ / (2(M_bw - 1))`.
pub fn ber_constants(joint_order: u64, rho: f64) -> Result<(f64, f64)> {
    if !is_power_of_two(joint_order) {
        return Err(Error::InvalidOrder(joint_order));
    }
    let bits = joint_order.trailing_zeros() as f64;
    let m = joint_order as f64;
    let xi = if joint_order.trailing_zeros().is_multiple_of(2) {
        4.0 * (m.sqrt() - 1.0) / (m.sqrt() * bits)
    } else {
        4.0 / bits
    };
    Ok((xi, 3.0 * rho / (2.0 * (m - 1.0))))
}

fn joint_order(orders: &[u64]) -> u64 {
    orders.iter().product()
}

/// Conditional BER of the joint symbol for a known power gain,
/// `Ξ Q(√(3ργ/(M_bw - 1)))`.
pub fn bima_ber_conditional(joint_order: u64, rho: f64, gamma: f64) -> Result<f64> {
    let (xi, g) = ber_constants(joint_order, rho)?;
    Ok(xi * special::q_function((2.0 * g * gamma).sqrt()))
}

/// Closed-form average BIMA BER.
///
/// Each term `(1/k)(1 - √(a/(k+a)))` is rewritten as `1/((k+a)(1+√(a/(k+a))))`
/// and the ICO alternating sum is accumulated in double-double precision: it
/// cancels down to `O(a^{-(L-i+1)})` at high SNR.
pub fn bima_ber(model: &OrderedGainModel, orders: &[u64], rank: usize, rho: f64) -> Result<f64> {
    joint_bits(orders, rank, model.devices())?;
    let (xi, g) = ber_constants(joint_order(orders), rho)?;
    let a = g * model.variance(rank)?;
    let term = |k: f64| -> DoubleDouble {
        let dk = DoubleDouble::from_f64(k);
        let da = DoubleDouble::from_f64(a);
        let ka = dk.add(da);
        let r = da.div(ka).sqrt();
        let one = DoubleDouble::from_f64(1.0);
        one.div(ka.mul(one.add(r)))
    };
    let value = match model {
        OrderedGainModel::Sco { .. } => term(1.0).to_f64(),
        OrderedGainModel::Ico { devices, .. } => {
            let (l, i) = (*devices, rank);
            let lead = l as f64 * binomial(l - 1, l - i);
            let mut acc = DoubleDouble::from_f64(0.0);
            for p in 0..=l - i {
                let t = term((i + p) as f64).mul(DoubleDouble::from_f64(binomial(l - i, p)));
                acc = if p % 2 == 0 { acc.add(t) } else { acc.sub(t) };
            }
            lead * acc.to_f64()
        }
    };
    Ok((0.5 * xi * value).clamp(0.0, 1.0))
}

/// Average BIMA BER by 200-point Gauss–Legendre integration of
/// `(Ξ/π) ∫_0^{π/2} MGF_{γ_i}(-g/sin²θ) dθ`.
pub fn bima_ber_quadrature(model: &OrderedGainModel, orders: &[u64], rank: usize, rho: f64) -> Result<f64> {
    joint_bits(orders, rank, model.devices())?;
    let (xi, g) = ber_constants(joint_order(orders), rho)?;
    let mut err = None;
    let integral = quadrature::integrate_theta(|t| {
        let s2 = t.sin().powi(2);
        model.mgf(rank, -g / s2).unwrap_or_else(|e| {
            err = Some(e);
            0.0
        })
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(xi * integral / PI)
}

/// Conventional NOMA instantaneous rate `log2(1 + SINR)` for 1-based `rank`.
pub fn conv_rate(
    pa: &PowerAllocation,
    rank: usize,
    gamma: f64,
    rho: f64,
    later_deltas: &[f64],
) -> Result<f64> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank is 1-based".into()));
    }
    Ok(sinr_conventional(pa, rank - 1, gamma, rho, later_deltas)?.ln_1p() * LOG2_E)
}

/// Weights `ν_λ` and squared distances `ς_λ` of the two-device 4-QAM BER.
///
/// Rank 1 (cancels device 2 first) has five terms, rank 2 two.
pub fn conv_ber_coefficients(rank: usize, pa: &PowerAllocation) -> Result<Vec<(f64, f64)>> {
    let a = pa.alphas();
    if a.len() != 2 {
        return Err(Error::NotAvailable(format!(
            "BER coefficients exist for two devices only, got {}",
            a.len()
        )));
    }
    let (s1, s2) = (a[0].sqrt(), a[1].sqrt());
    match rank {
        1 => Ok(vec![
            (-0.5, (s2 + s1).powi(2)),
            (0.5, (s2 - s1).powi(2)),
            (1.0, a[0]),
            (0.5, (2.0 * s2 + s1).powi(2)),
            (-0.5, (2.0 * s2 - s1).powi(2)),
        ]),
        2 => Ok(vec![(0.5, (s2 + s1).powi(2)), (0.5, (s2 - s1).powi(2))]),
        _ => Err(Error::InvalidArgument(format!("rank {rank} outside 1..=2"))),
    }
}

/// Two-device 4-QAM conventional NOMA BER,
/// `Σ_λ ν_λ (1/π) ∫_0^{π/2} MGF_{γ_i}(-ς_λ ρ / (2 sin²θ)) dθ`.
pub fn conv_ber_2user_4qam(
    rank: usize,
    pa: &PowerAllocation,
    model: &OrderedGainModel,
    orders: &[u64],
    rho: f64,
) -> Result<f64> {
    if orders != [4, 4] || model.devices() != 2 {
        return Err(Error::NotAvailable(format!(
            "closed-form conventional BER covers two 4-QAM devices only, got orders {orders:?}"
        )));
    }
    let coeffs = conv_ber_coefficients(rank, pa)?;
    let mut total = CompensatedSum::default();
    for (nu, vs) in coeffs {
        let mut err = None;
        let integral = quadrature::integrate_theta(|t| {
            let s2 = t.sin().powi(2);
            model.mgf(rank, -vs * rho / (2.0 * s2)).unwrap_or_else(|e| {
                err = Some(e);
                0.0
            })
        });
        if let Some(e) = err {
            return Err(e);
        }
        total.add(nu * integral / PI);
    }
    Ok(total.value().clamp(0.0, 1.0))
}
