//! Waveform-level Monte Carlo engine.
//!
//! Every SNR point is simulated in fixed-size blocks of symbols. Block `b` of
//! point `k` draws its channels from one ChaCha stream and its bits and noise
//! from another, both keyed by `(seed, k, b)`, so
//!
//! * results do not depend on the thread count or on [`Execution`];
//! * BIMA and conventional NOMA runs with the same seed see identical
//!   channels, labels and noise (a paired comparison).
//!
//! Blocks are launched in rounds; the stopping rule is evaluated only
//! between rounds, on tallies merged in block order.

use crate::analytic::{self, Metric, Scheme};
use crate::bima::{joint_constellation, MultiaccessInterleaver};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::noma::{sinr_unchecked, SicReceiver};
use crate::numeric::db_to_linear;
use crate::order_stats::ChannelOrdering;
use crate::scenario::Scenario;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::LOG2_E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    /// Blocks and SNR points spread over the rayon pool. Without the
    /// `parallel` feature this runs sequentially.
    #[default]
    Parallel,
    Sequential,
}

/// Trial budget per SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    /// Bit errors (BER) or outage events (OP) wanted per device.
    pub min_events: u64,
    /// BER cap: bits per device.
    pub max_bits: u64,
    /// Symbol cap for every metric.
    pub max_symbols: u64,
    /// Symbols always simulated; sets the ergodic-capacity accuracy.
    pub min_symbols: u64,
    pub block_symbols: u64,
    pub blocks_per_round: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            min_events: 100,
            max_bits: 100_000_000,
            max_symbols: 100_000_000,
            min_symbols: 100_000,
            block_symbols: 4096,
            blocks_per_round: 16,
        }
    }
}

impl Budget {
    /// Exactly `symbols` symbols per point, rounded up to whole blocks.
    pub fn fixed(symbols: u64) -> Self {
        Budget {
            min_events: 0,
            max_bits: u64::MAX,
            max_symbols: symbols,
            min_symbols: symbols,
            ..Budget::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.block_symbols == 0 || self.blocks_per_round == 0 || self.max_symbols == 0 {
            return Err(Error::InvalidArgument("budget sizes must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub scenario: Scenario,
    /// Transmit SNR `ρ` in dB.
    pub rho_db: Vec<f64>,
    pub seed: u64,
    pub budget: Budget,
    pub execution: Execution,
    /// Receiver noise variance. Rates are always computed for unit noise;
    /// only the waveform is scaled, so zero gives noiseless detection.
    pub noise_variance: f64,
}

impl SweepPlan {
    pub fn new(scenario: Scenario, rho_db: Vec<f64>, seed: u64) -> Self {
        SweepPlan {
            scenario,
            rho_db,
            seed,
            budget: Budget::default(),
            execution: Execution::default(),
            noise_variance: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rho_db.is_empty() {
            return Err(Error::InvalidArgument("empty SNR grid".into()));
        }
        if self.rho_db.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument("SNR grid must be finite".into()));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::InvalidArgument("noise variance must be >= 0".into()));
        }
        self.budget.validate()
    }
}

/// `start, start + step, ...` up to and including `stop`.
pub fn db_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::InvalidArgument(format!(
            "bad grid {start}:{step}:{stop}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Simulated,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::Analytic => "analytic",
            Provenance::Simulated => "simulated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiPoint {
    pub rho_db: f64,
    pub value: f64,
    pub stderr: f64,
    /// Bits (BER) or symbols (OP, EC); zero for closed forms.
    pub trials: u64,
    /// Error or outage events behind a BER/OP estimate.
    pub events: Option<u64>,
    /// The budget ran out before `min_events` events were seen.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiCurve {
    pub scheme: Scheme,
    pub metric: Metric,
    /// 1-based device rank.
    pub device: usize,
    pub ordering: ChannelOrdering,
    pub provenance: Provenance,
    pub points: Vec<KpiPoint>,
}

impl KpiCurve {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn rho_db(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rho_db).collect()
    }

    pub fn any_low_confidence(&self) -> bool {
        self.points.iter().any(|p| p.low_confidence)
    }
}

/// Which KPIs a run estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSet {
    pub ber: bool,
    pub op: bool,
    pub ec: bool,
}

impl MetricSet {
    pub const ALL: MetricSet = MetricSet { ber: true, op: true, ec: true };

    pub fn only(metric: Metric) -> Self {
        MetricSet {
            ber: metric == Metric::Ber,
            op: metric == Metric::Op,
            ec: metric == Metric::Ec,
        }
    }
}

/// Simulated curves of one scheme, one per device and requested metric.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationOutput {
    pub ber: Vec<KpiCurve>,
    pub op: Vec<KpiCurve>,
    pub ec: Vec<KpiCurve>,
}

impl SimulationOutput {
    pub fn curves(&self) -> impl Iterator<Item = &KpiCurve> {
        self.ber.iter().chain(&self.op).chain(&self.ec)
    }

    pub fn any_low_confidence(&self) -> bool {
        self.curves().any(KpiCurve::any_low_confidence)
    }
}

enum Chain {
    Bima {
        itl: MultiaccessInterleaver,
        joint: Constellation,
        /// Joint-label bits owned by each device.
        masks: Vec<u32>,
        fractions: Vec<f64>,
    },
    Conv {
        rx: SicReceiver,
        alphas: Vec<f64>,
        amplitudes: Vec<f64>,
    },
}

struct Engine<'a> {
    plan: &'a SweepPlan,
    chain: Chain,
    constellations: Vec<Constellation>,
    metrics: MetricSet,
    noise_sd: f64,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    symbols: u64,
    bit_errors: Vec<u64>,
    outages: Vec<u64>,
    rate_sum: Vec<f64>,
    rate_sq: Vec<f64>,
}

impl Tally {
    fn new(l: usize) -> Self {
        Tally {
            symbols: 0,
            bit_errors: vec![0; l],
            outages: vec![0; l],
            rate_sum: vec![0.0; l],
            rate_sq: vec![0.0; l],
        }
    }

    fn merge(&mut self, o: &Tally) {
        self.symbols += o.symbols;
        for d in 0..self.bit_errors.len() {
            self.bit_errors[d] += o.bit_errors[d];
            self.outages[d] += o.outages[d];
            self.rate_sum[d] += o.rate_sum[d];
            self.rate_sq[d] += o.rate_sq[d];
        }
    }
}

const CHANNEL_STREAM: u64 = 0x6368_616e;
const DATA_STREAM: u64 = 0x6461_7461;

fn block_rng(seed: u64, kind: u64, point: usize, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ kind.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(((point as u64) << 40) | block);
    rng
}

fn map_indexed<T: Send>(exec: Execution, n: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

impl<'a> Engine<'a> {
    fn new(plan: &'a SweepPlan, scheme: Scheme, metrics: MetricSet) -> Result<Self> {
        plan.validate()?;
        let sc = &plan.scenario;
        let constellations = sc
            .orders
            .iter()
            .map(|&m| Constellation::qam(m))
            .collect::<Result<Vec<_>>>()?;
        let chain = match scheme {
            Scheme::Bima => {
                let itl = MultiaccessInterleaver::build(&sc.orders, sc.interleaver_seed)?;
                let joint = joint_constellation(&itl)?;
                let masks = (0..sc.devices())
                    .map(|d| {
                        let mut own = 0u32;
                        for b in 0..itl.device_bits(d) {
                            own |= 1 << b;
                        }
                        // Scatter the device's label bits into joint positions.
                        let mut labels = vec![0u32; sc.devices()];
                        labels[d] = own;
                        itl.joint_label(&labels)
                    })
                    .collect();
                let fractions = (1..=sc.devices())
                    .map(|r| analytic::rate_fraction(&sc.orders, r))
                    .collect::<Result<Vec<_>>>()?;
                Chain::Bima {
                    itl,
                    joint,
                    masks,
                    fractions,
                }
            }
            Scheme::Conv => {
                let pa = sc.pa.clone().ok_or_else(|| {
                    Error::InvalidArgument("conventional NOMA needs a power allocation".into())
                })?;
                let alphas = pa.alphas().to_vec();
                let amplitudes = alphas.iter().map(|a| a.sqrt()).collect();
                Chain::Conv {
                    rx: SicReceiver::new(pa, constellations.clone())?,
                    alphas,
                    amplitudes,
                }
            }
        };
        Ok(Engine {
            plan,
            chain,
            constellations,
            metrics,
            noise_sd: (plan.noise_variance / 2.0).sqrt(),
        })
    }

    fn run_block(&self, point: usize, block: u64) -> Tally {
        let sc = &self.plan.scenario;
        let l = sc.devices();
        let rho = db_to_linear(self.plan.rho_db[point]);
        let sqrt_rho = rho.sqrt();
        let mut ch_rng = block_rng(self.plan.seed, CHANNEL_STREAM, point, block);
        let mut data_rng = block_rng(self.plan.seed, DATA_STREAM, point, block);
        let mut tally = Tally::new(l);
        let mut h = vec![Complex64::new(0.0, 0.0); l];
        let mut labels = vec![0u32; l];
        let mut noise = vec![Complex64::new(0.0, 0.0); l];
        let mut detected = vec![0u32; l];
        let mut deltas = vec![0.0; l];
        let need_rate = self.metrics.op || self.metrics.ec;

        for _ in 0..self.plan.budget.block_symbols {
            sc.model.sample_channels(&mut ch_rng, &mut h);
            for (lab, &m) in labels.iter_mut().zip(&sc.orders) {
                *lab = data_rng.random_range(0..m as u32);
            }
            for n in noise.iter_mut() {
                let re: f64 = data_rng.sample(StandardNormal);
                let im: f64 = data_rng.sample(StandardNormal);
                *n = Complex64::new(re, im) * self.noise_sd;
            }

            match &self.chain {
                Chain::Bima {
                    itl,
                    joint,
                    masks,
                    fractions,
                } => {
                    let jl = itl.joint_label(&labels);
                    let x = joint.point(jl);
                    for d in 0..l {
                        let gamma = h[d].norm_sqr();
                        if self.metrics.ber {
                            let g = h[d] * sqrt_rho;
                            let decided = joint.slice(g * x + noise[d], g);
                            tally.bit_errors[d] += ((decided ^ jl) & masks[d]).count_ones() as u64;
                        }
                        if need_rate {
                            let r = fractions[d] * (rho * gamma).ln_1p() * LOG2_E;
                            self.account_rate(&mut tally, d, r);
                        }
                    }
                }
                Chain::Conv {
                    rx,
                    alphas,
                    amplitudes,
                } => {
                    let s: Complex64 = labels
                        .iter()
                        .zip(&self.constellations)
                        .zip(amplitudes)
                        .map(|((&lab, c), a)| c.point(lab) * a)
                        .sum();
                    for d in 0..l {
                        let g = h[d] * sqrt_rho;
                        let own = rx.detect_into(g * s + noise[d], g, d, &mut detected);
                        if self.metrics.ber {
                            tally.bit_errors[d] += (own ^ labels[d]).count_ones() as u64;
                        }
                        if need_rate {
                            for j in d + 1..l {
                                let c = &self.constellations[j];
                                deltas[j - d - 1] = (c.point(labels[j]) - c.point(detected[j])).norm_sqr();
                            }
                            let sinr = sinr_unchecked(alphas, d, h[d].norm_sqr(), rho, &deltas[..l - d - 1]);
                            self.account_rate(&mut tally, d, sinr.ln_1p() * LOG2_E);
                        }
                    }
                }
            }
        }
        tally.symbols = self.plan.budget.block_symbols;
        tally
    }

    #[inline]
    fn account_rate(&self, tally: &mut Tally, d: usize, r: f64) {
        if r < self.plan.scenario.targets[d] {
            tally.outages[d] += 1;
        }
        tally.rate_sum[d] += r;
        tally.rate_sq[d] += r * r;
    }

    fn bits(&self, d: usize) -> u64 {
        self.plan.scenario.orders[d].trailing_zeros() as u64
    }

    fn finished(&self, t: &Tally) -> bool {
        let b = &self.plan.budget;
        if t.symbols >= b.max_symbols {
            return true;
        }
        if t.symbols < b.min_symbols {
            return false;
        }
        (0..t.bit_errors.len()).all(|d| {
            let ber_done = !self.metrics.ber
                || t.bit_errors[d] >= b.min_events
                || t.symbols * self.bits(d) >= b.max_bits;
            let op_done = !self.metrics.op || t.outages[d] >= b.min_events;
            ber_done && op_done
        })
    }

    fn run_point(&self, point: usize) -> Tally {
        let b = &self.plan.budget;
        let mut total = Tally::new(self.plan.scenario.devices());
        let mut next_block = 0u64;
        while !self.finished(&total) {
            let round = map_indexed(self.plan.execution, b.blocks_per_round, |k| {
                self.run_block(point, next_block + k)
            });
            for t in &round {
                total.merge(t);
            }
            next_block += b.blocks_per_round;
        }
        total
    }
}

fn binomial_point(rho_db: f64, events: u64, trials: u64, min_events: u64) -> KpiPoint {
    let p = events as f64 / trials as f64;
    KpiPoint {
        rho_db,
        value: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
        events: Some(events),
        low_confidence: events < min_events,
    }
}

/// Runs one scheme over the whole grid and returns the requested curves.
pub fn simulate(plan: &SweepPlan, scheme: Scheme, metrics: MetricSet) -> Result<SimulationOutput> {
    let engine = Engine::new(plan, scheme, metrics)?;
    let tallies = map_indexed(plan.execution, plan.rho_db.len() as u64, |k| engine.run_point(k as usize));
    let l = plan.scenario.devices();
    let ordering = plan.scenario.model.ordering();
    let min_events = plan.budget.min_events;
    let curve = |metric, d: usize, f: &dyn Fn(&Tally, f64) -> KpiPoint| KpiCurve {
        scheme,
        metric,
        device: d + 1,
        ordering,
        provenance: Provenance::Simulated,
        points: tallies
            .iter()
            .zip(&plan.rho_db)
            .map(|(t, &r)| f(t, r))
            .collect(),
    };
    let mut out = SimulationOutput::default();
    for d in 0..l {
        if metrics.ber {
            let bits = engine.bits(d);
            out.ber.push(curve(Metric::Ber, d, &|t, r| {
                binomial_point(r, t.bit_errors[d], t.symbols * bits, min_events)
            }));
        }
        if metrics.op {
            out.op.push(curve(Metric::Op, d, &|t, r| {
                binomial_point(r, t.outages[d], t.symbols, min_events)
            }));
        }
        if metrics.ec {
            out.ec.push(curve(Metric::Ec, d, &|t, r| {
                let n = t.symbols as f64;
                let mean = t.rate_sum[d] / n;
                let var = ((t.rate_sq[d] - n * mean * mean) / (n - 1.0).max(1.0)).max(0.0);
                KpiPoint {
                    rho_db: r,
                    value: mean,
                    stderr: (var / n).sqrt(),
                    trials: t.symbols,
                    events: None,
                    low_confidence: false,
                }
            }));
        }
    }
    Ok(out)
}

pub fn simulate_ber(plan: &SweepPlan, scheme: Scheme) -> Result<Vec<KpiCurve>> {
    Ok(simulate(plan, scheme, MetricSet::only(Metric::Ber))?.ber)
}

pub fn simulate_op(plan: &SweepPlan, scheme: Scheme) -> Result<Vec<KpiCurve>> {
    Ok(simulate(plan, scheme, MetricSet::only(Metric::Op))?.op)
}

pub fn simulate_ec(plan: &SweepPlan, scheme: Scheme) -> Result<Vec<KpiCurve>> {
    Ok(simulate(plan, scheme, MetricSet::only(Metric::Ec))?.ec)
}

/// Closed-form curves over the plan's grid, one per device. Conventional
/// NOMA only has the two-device 4-QAM BER.
pub fn analytic_curves(plan: &SweepPlan, scheme: Scheme, metric: Metric) -> Result<Vec<KpiCurve>> {
    plan.validate()?;
    let sc = &plan.scenario;
    (1..=sc.devices())
        .map(|rank| {
            let points = plan
                .rho_db
                .iter()
                .map(|&db| {
                    let req = analytic::KpiRequest {
                        scheme,
                        metric,
                        model: sc.model.clone(),
                        rank,
                        orders: sc.orders.clone(),
                        rho: db_to_linear(db),
                        target_rate: Some(sc.targets[rank - 1]),
                        pa: sc.pa.clone(),
                    };
                    Ok(KpiPoint {
                        rho_db: db,
                        value: analytic::evaluate(&req)?,
                        stderr: 0.0,
                        trials: 0,
                        events: None,
                        low_confidence: false,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(KpiCurve {
                scheme,
                metric,
                device: rank,
                ordering: sc.model.ordering(),
                provenance: Provenance::Analytic,
                points,
            })
        })
        .collect()
}

/// Negated least-squares slope of `log10(value)` against `log10(ρ)` over
/// the top decade (10 dB) of the curve's grid.
pub fn estimate_diversity(curve: &KpiCurve) -> Result<f64> {
    let top = curve
        .points
        .iter()
        .map(|p| p.rho_db)
        .fold(f64::NEG_INFINITY, f64::max);
    let fit: Vec<&KpiPoint> = curve.points.iter().filter(|p| p.rho_db >= top - 10.0 - 1e-9).collect();
    if fit.len() < 2 {
        return Err(Error::FitRange("need at least two points in the top decade".into()));
    }
    if let Some(p) = fit.iter().find(|p| !(p.value > 0.0)) {
        return Err(Error::FitRange(format!("non-positive value at {} dB", p.rho_db)));
    }
    let xs: Vec<f64> = fit.iter().map(|p| p.rho_db / 10.0).collect();
    let ys: Vec<f64> = fit.iter().map(|p| p.value.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(-sxy / sxx)
}
