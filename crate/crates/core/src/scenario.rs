//! Scenario description shared by the simulator and the closed forms, plus
//! the reference allocation, scenario and complexity tables.

use crate::error::{Error, Result};
use crate::noma::PowerAllocation;
use crate::numeric::is_power_of_two;
use crate::order_stats::{ChannelOrdering, OrderedGainModel};

/// One downlink resource block.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub orders: Vec<u64>,
    pub model: OrderedGainModel,
    /// Target rate per device in bit/s/Hz.
    pub targets: Vec<f64>,
    /// Conventional NOMA allocation; BIMA ignores it.
    pub pa: Option<PowerAllocation>,
    pub interleaver_seed: u64,
}

impl Scenario {
    pub fn new(
        orders: Vec<u64>,
        model: OrderedGainModel,
        targets: Vec<f64>,
        pa: Option<PowerAllocation>,
        interleaver_seed: u64,
    ) -> Result<Self> {
        let l = orders.len();
        if l == 0 {
            return Err(Error::InvalidArgument("no devices".into()));
        }
        if let Some(&m) = orders.iter().find(|&&m| !is_power_of_two(m)) {
            return Err(Error::InvalidOrder(m));
        }
        for n in [model.devices(), targets.len()] {
            if n != l {
                return Err(Error::LengthMismatch { expected: l, actual: n });
            }
        }
        if let Some(pa) = &pa {
            if pa.devices() != l {
                return Err(Error::LengthMismatch {
                    expected: l,
                    actual: pa.devices(),
                });
            }
        }
        if targets.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidArgument("target rates must be >= 0".into()));
        }
        Ok(Scenario {
            orders,
            model,
            targets,
            pa,
            interleaver_seed,
        })
    }

    pub fn devices(&self) -> usize {
        self.orders.len()
    }

    pub fn bit_loads(&self) -> Vec<f64> {
        self.orders.iter().map(|m| m.trailing_zeros() as f64).collect()
    }
}

/// `Ŕ_i = M_i / L`.
pub fn default_targets(orders: &[u64]) -> Vec<f64> {
    let l = orders.len() as f64;
    orders.iter().map(|&m| m as f64 / l).collect()
}

/// Statistical-ordering variances: the weakest device at 0 dB and each
/// stronger neighbour 3 dB above it, `σ_i² = σ_{i+1}² + 3 dB`.
pub fn default_sco_variances(devices: usize) -> Vec<f64> {
    (0..devices)
        .map(|i| 10f64.powf(0.3 * (devices - 1 - i) as f64))
        .collect()
}

/// Published power allocations for `devices` users of order `order`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceAllocation {
    pub devices: usize,
    pub order: u64,
    /// Constellation-aware allocation.
    pub proposed: &'static [f64],
    /// Constellation-agnostic allocation from earlier work, when tabulated.
    pub common: Option<&'static [f64]>,
}

pub const REFERENCE_ALLOCATIONS: [ReferenceAllocation; 6] = [
    ReferenceAllocation { devices: 3, order: 4, proposed: &[0.0261, 0.1948, 0.7791], common: Some(&[0.1667, 0.3333, 0.5]) },
    ReferenceAllocation { devices: 3, order: 16, proposed: &[0.0012, 0.0588, 0.9400], common: Some(&[0.05, 0.25, 0.7]) },
    ReferenceAllocation { devices: 3, order: 64, proposed: &[0.0001, 0.0154, 0.9845], common: None },
    ReferenceAllocation { devices: 4, order: 4, proposed: &[0.0063, 0.0473, 0.1893, 0.7571], common: Some(&[0.1, 0.2, 0.3, 0.4]) },
    ReferenceAllocation { devices: 4, order: 16, proposed: &[0.0001, 0.0037, 0.0586, 0.9377], common: Some(&[0.02, 0.05, 0.18, 0.75]) },
    ReferenceAllocation { devices: 4, order: 64, proposed: &[0.0001, 0.0037, 0.0586, 0.9377], common: None },
];

pub fn reference_allocation(devices: usize, order: u64) -> Option<&'static ReferenceAllocation> {
    REFERENCE_ALLOCATIONS
        .iter()
        .find(|r| r.devices == devices && r.order == order)
}

/// Published comparison scenarios: `(L, M, ordering, figure id)`.
pub const REFERENCE_SCENARIOS: [(usize, u64, ChannelOrdering, &str); 6] = [
    (3, 4, ChannelOrdering::Ico, "fig5"),
    (3, 16, ChannelOrdering::Ico, "fig6"),
    (4, 4, ChannelOrdering::Sco, "fig7"),
    (4, 16, ChannelOrdering::Ico, "fig8"),
    (4, 16, ChannelOrdering::Sco, "fig9"),
    (5, 4, ChannelOrdering::Ico, "fig10"),
];

/// Published fairness scenarios: `(L, M, ordering, figure id)`.
pub const REFERENCE_FAIRNESS_SCENARIOS: [(usize, u64, ChannelOrdering, &str); 5] = [
    (3, 4, ChannelOrdering::Sco, "fig11"),
    (3, 16, ChannelOrdering::Sco, "fig12"),
    (4, 4, ChannelOrdering::Ico, "fig13"),
    (4, 16, ChannelOrdering::Ico, "fig14"),
    (5, 4, ChannelOrdering::Sco, "fig15"),
];

/// Margin used by [`default_conv_pa`] when no published allocation exists.
pub const DEFAULT_PA_MARGIN: f64 = 2.0;

/// Published proposed allocation for `devices` users of order `order`,
/// normalised, or [`generate_pa`](crate::noma::generate_pa) with
/// [`DEFAULT_PA_MARGIN`] when the pair is not tabulated.
pub fn default_conv_pa(devices: usize, order: u64) -> Result<PowerAllocation> {
    match reference_allocation(devices, order) {
        Some(r) => PowerAllocation::normalized(r.proposed.to_vec()),
        None => crate::noma::generate_pa(&vec![order; devices], DEFAULT_PA_MARGIN),
    }
}

/// Gain model used by the published scenarios: unit variance for ICO,
/// [`default_sco_variances`] for SCO.
pub fn default_model(devices: usize, ordering: ChannelOrdering) -> Result<OrderedGainModel> {
    match ordering {
        ChannelOrdering::Ico => OrderedGainModel::ico(devices, 1.0),
        ChannelOrdering::Sco => OrderedGainModel::sco(default_sco_variances(devices)),
    }
}

/// Equal-order scenario with the published defaults: targets `M/L`,
/// [`default_model`] and [`default_conv_pa`].
pub fn reference_scenario(
    devices: usize,
    order: u64,
    ordering: ChannelOrdering,
    interleaver_seed: u64,
) -> Result<Scenario> {
    let orders = vec![order; devices];
    Scenario::new(
        orders.clone(),
        default_model(devices, ordering)?,
        default_targets(&orders),
        Some(default_conv_pa(devices, order)?),
        interleaver_seed,
    )
}

/// Published receiver complexity row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceComplexity {
    pub devices: usize,
    pub order: u64,
    pub bima_each: u64,
    pub bima_total: u64,
    pub conv_first: u64,
    pub conv_last: u64,
    pub conv_total: u64,
}

pub const REFERENCE_COMPLEXITY: [ReferenceComplexity; 6] = [
    ReferenceComplexity { devices: 3, order: 2, bima_each: 32, bima_total: 96, conv_first: 28, conv_last: 8, conv_total: 54 },
    ReferenceComplexity { devices: 3, order: 4, bima_each: 256, bima_total: 768, conv_first: 52, conv_last: 16, conv_total: 102 },
    ReferenceComplexity { devices: 4, order: 2, bima_each: 64, bima_total: 256, conv_first: 38, conv_last: 8, conv_total: 92 },
    ReferenceComplexity { devices: 4, order: 4, bima_each: 768, bima_total: 3072, conv_first: 70, conv_last: 16, conv_total: 172 },
    ReferenceComplexity { devices: 5, order: 2, bima_each: 128, bima_total: 640, conv_first: 48, conv_last: 8, conv_total: 140 },
    ReferenceComplexity { devices: 5, order: 4, bima_each: 4096, bima_total: 20480, conv_first: 88, conv_last: 16, conv_total: 260 },
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sco_defaults_decrease_in_3db_steps() {
        let v = default_sco_variances(4);
        assert!((v[3] - 1.0).abs() < 1e-15);
        for w in v.windows(2) {
            assert!((10.0 * (w[0] / w[1]).log10() - 3.0).abs() < 1e-12);
        }
        assert!(OrderedGainModel::sco(v).is_ok());
    }

    #[test]
    fn targets_default_to_order_over_devices() {
        assert_eq!(default_targets(&[4, 4, 4]), vec![4.0 / 3.0; 3]);
        assert_eq!(default_targets(&[16; 4]), vec![4.0; 4]);
    }

    #[test]
    fn scenario_validation() {
        let m = OrderedGainModel::ico(3, 1.0).unwrap();
        assert!(Scenario::new(vec![4; 3], m.clone(), vec![1.0; 3], None, 0).is_ok());
        assert!(Scenario::new(vec![4; 2], m.clone(), vec![1.0; 2], None, 0).is_err());
        assert!(Scenario::new(vec![4, 4, 5], m.clone(), vec![1.0; 3], None, 0).is_err());
        let pa = PowerAllocation::new(vec![0.2, 0.8]).unwrap();
        assert!(Scenario::new(vec![4; 3], m, vec![1.0; 3], Some(pa), 0).is_err());
    }

    #[test]
    fn reference_rows_normalise() {
        for r in REFERENCE_ALLOCATIONS {
            assert_eq!(r.proposed.len(), r.devices);
            assert!(PowerAllocation::normalized(r.proposed.to_vec()).is_ok());
        }
        assert!(reference_allocation(5, 4).is_none());
    }

    #[test]
    fn reference_scenarios_build() {
        for (l, m, ord, _) in REFERENCE_SCENARIOS.iter().chain(&REFERENCE_FAIRNESS_SCENARIOS) {
            let sc = reference_scenario(*l, *m, *ord, 3).unwrap();
            assert_eq!(sc.model.ordering(), *ord);
            assert_eq!(sc.pa.unwrap().devices(), *l);
        }
        let pa = default_conv_pa(3, 4).unwrap();
        assert!((pa.alphas()[0] - 0.0261).abs() < 1e-3);
    }
}
