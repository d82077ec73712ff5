//! Scenario configuration files.
//!
//! A config is a TOML document. Everything is checked when it is loaded, so a
//! sweep never starts from an invalid scenario; every rejection names the
//! offending field.

use bima_core::analytic::{Metric, Scheme};
use bima_core::montecarlo::{db_grid, Budget, Execution, MetricSet};
use bima_core::noma::{generate_pa, PowerAllocation};
use bima_core::order_stats::{ChannelOrdering, OrderedGainModel};
use bima_core::scenario::{
    default_conv_pa, default_sco_variances, default_targets, reference_allocation, Scenario,
    DEFAULT_PA_MARGIN,
};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::PathBuf;

/// A rejected config: the dotted path of the field and what is wrong with it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Modulation order per device, weakest first.
    pub orders: Vec<u64>,
    pub channel: ChannelConfig,
    /// Target rate per device in bit/s/Hz. Defaults to `M_i / L`.
    pub targets: Option<Vec<f64>>,
    /// Conventional NOMA allocations. Each one gets its own conventional run.
    #[serde(default)]
    pub pa: Vec<PaConfig>,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub ordering: ChannelOrdering,
    /// ICO: common variance of every link (default 1).
    pub variance: Option<f64>,
    /// SCO: per-device variances, strictly decreasing. Defaults to 3 dB
    /// steps ending at 0 dB.
    pub variances: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaSource {
    /// Published allocation if tabulated, otherwise `generated` with the
    /// default margin.
    Auto,
    /// Published constellation-aware allocation.
    Table,
    /// Published constellation-agnostic allocation.
    Common,
    /// Each amplitude `margin` times its detectability bound.
    Generated,
    Explicit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaConfig {
    pub label: Option<String>,
    pub source: PaSource,
    pub margin: Option<f64>,
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RhoGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Transmit SNR in dB.
    pub rho_db: RhoGrid,
    pub seed: u64,
    #[serde(default)]
    pub interleaver_seed: u64,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "all_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub execution: Execution,
}

fn all_schemes() -> Vec<Scheme> {
    vec![Scheme::Bima, Scheme::Conv]
}

fn all_metrics() -> Vec<Metric> {
    vec![Metric::Ber, Metric::Op, Metric::Ec]
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// A conventional NOMA allocation ready to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPa {
    pub label: String,
    pub pa: PowerAllocation,
}

/// A validated config.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    /// Scenario without an allocation; runs attach one.
    pub scenario: Scenario,
    pub allocations: Vec<LabeledPa>,
    pub rho_db: Vec<f64>,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub metrics: Vec<Metric>,
    pub execution: Execution,
    pub budget: Budget,
    pub out_dir: Option<PathBuf>,
    /// Hex SHA-256 of the config text.
    pub config_sha256: String,
}

impl Experiment {
    pub fn metric_set(&self) -> MetricSet {
        MetricSet {
            ber: self.metrics.contains(&Metric::Ber),
            op: self.metrics.contains(&Metric::Op),
            ec: self.metrics.contains(&Metric::Ec),
        }
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Parses and validates a config.
pub fn load(text: &str) -> Result<Experiment, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let field = match e.span() {
            Some(span) => format!("line {}", text[..span.start].lines().count().max(1)),
            None => "config".into(),
        };
        ConfigError::new(field, msg)
    })?;
    cfg.validate(sha256_hex(text))
}

impl ScenarioConfig {
    fn validate(self, config_sha256: String) -> Result<Experiment, ConfigError> {
        if self.name.trim().is_empty() {
            return Err(ConfigError::new("name", "must not be empty"));
        }
        if self
            .name
            .chars()
            .any(|c| !(c.is_ascii_alphanumeric() || c == '-' || c == '_'))
        {
            return Err(ConfigError::new("name", "use letters, digits, '-' and '_' only"));
        }
        let orders = self.orders.clone();
        let l = orders.len();
        if l == 0 {
            return Err(ConfigError::new("orders", "at least one device is required"));
        }
        if let Some((k, m)) = orders.iter().enumerate().find(|(_, m)| !(m.is_power_of_two() && **m >= 2)) {
            return Err(ConfigError::new(
                format!("orders[{k}]"),
                format!("{m} is not a power of two >= 2"),
            ));
        }
        if orders.iter().map(|m| m.trailing_zeros()).sum::<u32>() > 24 {
            return Err(ConfigError::new(
                "orders",
                "joint constellation exceeds 2^24 points",
            ));
        }
        let model = self.channel.model(l)?;
        let targets = match &self.targets {
            Some(t) => {
                if t.len() != l {
                    return Err(ConfigError::new(
                        "targets",
                        format!("expected {l} entries, got {}", t.len()),
                    ));
                }
                if let Some(k) = t.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(ConfigError::new(format!("targets[{k}]"), "must be finite and >= 0"));
                }
                t.clone()
            }
            None => default_targets(&orders),
        };
        let scenario = Scenario::new(orders.clone(), model, targets, None, self.sweep.interleaver_seed)
            .map_err(|e| ConfigError::new("orders", e))?;

        let rho_db = match &self.sweep.rho_db {
            RhoGrid::List(v) => v.clone(),
            RhoGrid::Range { start, stop, step } => {
                db_grid(*start, *stop, *step).map_err(|e| ConfigError::new("sweep.rho_db", e))?
            }
        };
        if rho_db.is_empty() {
            return Err(ConfigError::new("sweep.rho_db", "empty grid"));
        }
        if rho_db.iter().any(|r| !r.is_finite()) {
            return Err(ConfigError::new("sweep.rho_db", "values must be finite"));
        }
        if rho_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::new("sweep.rho_db", "values must be strictly increasing"));
        }
        let schemes = dedup(&self.sweep.schemes);
        if schemes.is_empty() {
            return Err(ConfigError::new("sweep.schemes", "at least one scheme is required"));
        }
        let metrics = dedup(&self.sweep.metrics);
        if metrics.is_empty() {
            return Err(ConfigError::new("sweep.metrics", "at least one metric is required"));
        }
        validate_budget(&self.budget)?;

        let allocations = if schemes.contains(&Scheme::Conv) {
            let specs = if self.pa.is_empty() {
                vec![PaConfig {
                    label: None,
                    source: PaSource::Auto,
                    margin: None,
                    alphas: None,
                }]
            } else {
                self.pa.clone()
            };
            let mut out: Vec<LabeledPa> = Vec::with_capacity(specs.len());
            for (k, spec) in specs.iter().enumerate() {
                let pa = spec.resolve(&orders, k)?;
                let label = match (&spec.label, specs.len()) {
                    (Some(s), _) => s.clone(),
                    (None, 1) => String::new(),
                    (None, _) => format!("pa{k}"),
                };
                if label.chars().any(|c| !(c.is_ascii_alphanumeric() || c == '-' || c == '_')) {
                    return Err(ConfigError::new(
                        format!("pa[{k}].label"),
                        "use letters, digits, '-' and '_' only",
                    ));
                }
                if out.iter().any(|p| p.label == label) {
                    return Err(ConfigError::new(format!("pa[{k}].label"), format!("duplicate label {label:?}")));
                }
                out.push(LabeledPa { label, pa });
            }
            out
        } else {
            if !self.pa.is_empty() {
                return Err(ConfigError::new(
                    "pa",
                    "allocations given but the conventional scheme is not in sweep.schemes",
                ));
            }
            Vec::new()
        };

        Ok(Experiment {
            name: self.name,
            scenario,
            allocations,
            rho_db,
            seed: self.sweep.seed,
            schemes,
            metrics,
            execution: self.sweep.execution,
            budget: self.budget,
            out_dir: self.output.dir,
            config_sha256,
        })
    }
}

fn dedup<T: PartialEq + Copy>(v: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for &x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn validate_budget(b: &Budget) -> Result<(), ConfigError> {
    for (name, v) in [
        ("max_symbols", b.max_symbols),
        ("max_bits", b.max_bits),
        ("block_symbols", b.block_symbols),
        ("blocks_per_round", b.blocks_per_round),
    ] {
        if v == 0 {
            return Err(ConfigError::new(format!("budget.{name}"), "must be >= 1"));
        }
    }
    if b.min_symbols > b.max_symbols {
        return Err(ConfigError::new("budget.min_symbols", "exceeds budget.max_symbols"));
    }
    Ok(())
}

impl ChannelConfig {
    fn model(&self, devices: usize) -> Result<OrderedGainModel, ConfigError> {
        match self.ordering {
            ChannelOrdering::Ico => {
                if self.variances.is_some() {
                    return Err(ConfigError::new(
                        "channel.variances",
                        "per-device variances need ordering = \"sco\"; use channel.variance",
                    ));
                }
                OrderedGainModel::ico(devices, self.variance.unwrap_or(1.0))
                    .map_err(|e| ConfigError::new("channel.variance", e))
            }
            ChannelOrdering::Sco => {
                if self.variance.is_some() {
                    return Err(ConfigError::new(
                        "channel.variance",
                        "a common variance needs ordering = \"ico\"; use channel.variances",
                    ));
                }
                let v = match &self.variances {
                    Some(v) if v.len() != devices => {
                        return Err(ConfigError::new(
                            "channel.variances",
                            format!("expected {devices} entries, got {}", v.len()),
                        ))
                    }
                    Some(v) => v.clone(),
                    None => default_sco_variances(devices),
                };
                OrderedGainModel::sco(v).map_err(|e| ConfigError::new("channel.variances", e))
            }
        }
    }
}

impl PaConfig {
    fn resolve(&self, orders: &[u64], k: usize) -> Result<PowerAllocation, ConfigError> {
        let field = |f: &str| format!("pa[{k}].{f}");
        let l = orders.len();
        let uniform = orders.iter().all(|&m| m == orders[0]);
        if self.margin.is_some() && self.source != PaSource::Generated {
            return Err(ConfigError::new(field("margin"), "only used with source = \"generated\""));
        }
        if self.alphas.is_some() && self.source != PaSource::Explicit {
            return Err(ConfigError::new(field("alphas"), "only used with source = \"explicit\""));
        }
        let tabulated = |common: bool| -> Result<PowerAllocation, ConfigError> {
            if l == 1 {
                return PowerAllocation::new(vec![1.0]).map_err(|e| ConfigError::new(field("source"), e));
            }
            let row = uniform
                .then(|| reference_allocation(l, orders[0]))
                .flatten()
                .ok_or_else(|| {
                    ConfigError::new(field("source"), format!("no published allocation for orders {orders:?}"))
                })?;
            let raw = if common { row.common } else { Some(row.proposed) };
            let raw = raw.ok_or_else(|| {
                ConfigError::new(
                    field("source"),
                    format!("no published constellation-agnostic allocation for L={l}, M={}", orders[0]),
                )
            })?;
            PowerAllocation::normalized(raw.to_vec()).map_err(|e| ConfigError::new(field("source"), e))
        };
        match self.source {
            PaSource::Auto if uniform => {
                default_conv_pa(l, orders[0]).map_err(|e| ConfigError::new(field("source"), e))
            }
            PaSource::Auto => {
                generate_pa(orders, DEFAULT_PA_MARGIN).map_err(|e| ConfigError::new(field("source"), e))
            }
            PaSource::Table => tabulated(false),
            PaSource::Common => tabulated(true),
            PaSource::Generated => {
                let t = self
                    .margin
                    .ok_or_else(|| ConfigError::new(field("margin"), "required with source = \"generated\""))?;
                generate_pa(orders, t).map_err(|e| ConfigError::new(field("margin"), e))
            }
            PaSource::Explicit => {
                let a = self
                    .alphas
                    .clone()
                    .ok_or_else(|| ConfigError::new(field("alphas"), "required with source = \"explicit\""))?;
                if a.len() != l {
                    return Err(ConfigError::new(
                        field("alphas"),
                        format!("expected {l} entries, got {}", a.len()),
                    ));
                }
                PowerAllocation::new(a).map_err(|e| ConfigError::new(field("alphas"), e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
orders = [4, 4, 4]
[channel]
ordering = "ico"
[sweep]
rho_db = { start = 0.0, stop = 20.0, step = 10.0 }
seed = 1
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let e = load(MINIMAL).unwrap();
        assert_eq!(e.rho_db, vec![0.0, 10.0, 20.0]);
        assert_eq!(e.scenario.targets, vec![4.0 / 3.0; 3]);
        assert_eq!(e.allocations.len(), 1);
        assert_eq!(e.allocations[0].label, "");
        assert!((e.allocations[0].pa.alphas()[0] - 0.0261).abs() < 1e-3);
        assert_eq!(e.metric_set(), MetricSet::ALL);
        assert_eq!(e.config_sha256.len(), 64);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let err = load(&MINIMAL.replace("seed = 1", "seed = 1\nsed = 2")).unwrap_err();
        assert!(err.message.contains("sed"), "{err}");
    }

    #[test]
    fn bad_order_names_its_index() {
        let err = load(&MINIMAL.replace("[4, 4, 4]", "[4, 12, 4]")).unwrap_err();
        assert_eq!(err.field, "orders[1]");
    }

    #[test]
    fn sco_variances_must_decrease() {
        let text = MINIMAL.replace("ordering = \"ico\"", "ordering = \"sco\"\nvariances = [1.0, 1.0, 1.0]");
        assert_eq!(load(&text).unwrap_err().field, "channel.variances");
    }

    #[test]
    fn missing_common_allocation_is_reported() {
        let text = MINIMAL.replace("[4, 4, 4]", "[64, 64, 64]") + "[[pa]]\nsource = \"common\"\n";
        assert_eq!(load(&text).unwrap_err().field, "pa[0].source");
    }

    #[test]
    fn explicit_allocation_is_validated() {
        let text = MINIMAL.to_string() + "[[pa]]\nsource = \"explicit\"\nalphas = [0.5, 0.3, 0.2]\n";
        assert_eq!(load(&text).unwrap_err().field, "pa[0].alphas");
    }
}
