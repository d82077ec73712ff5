//! Jain's and proportional fairness indices over per-device KPI vectors.

use crate::error::{Error, Result};
use serde::Serialize;

/// `(Σ R)² / (L Σ R²)`, in `[1/L, 1]`. An all-zero vector scores 0.
pub fn jfi_capacity(rates: &[f64]) -> f64 {
    let l = rates.len() as f64;
    let s: f64 = rates.iter().sum();
    let s2: f64 = rates.iter().map(|r| r * r).sum();
    if s2 == 0.0 {
        return 0.0;
    }
    s * s / (l * s2)
}

fn weighted_success(failure: &[f64], weights: &[f64]) -> f64 {
    let num: f64 = failure.iter().zip(weights).map(|(p, w)| (1.0 - p) * w).sum();
    let den: f64 = weights.iter().map(|w| w * w).sum();
    if den == 0.0 {
        return 0.0;
    }
    num * num / den
}

/// `(Σ (1 - P_i^out) Ŕ_i)² / Σ Ŕ_i²`. Not divided by `L`, so the range is
/// `[0, L]` for equal targets.
pub fn jfi_outage(outage: &[f64], targets: &[f64]) -> f64 {
    weighted_success(outage, targets)
}

/// `(Σ (1 - P_i^e) log2 M_i)² / Σ (log2 M_i)²`, unnormalised like [`jfi_outage`].
pub fn jfi_ber(ber: &[f64], bit_loads: &[f64]) -> f64 {
    weighted_success(ber, bit_loads)
}

/// `1 - (max - min)/(max + min)` for a higher-is-better KPI; 0 when
/// `max + min = 0`.
pub fn pfi(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let den = max + min;
    if !(den > 0.0) {
        return 0.0;
    }
    1.0 - (max - min) / den
}

/// Per-device KPIs of one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessInput {
    pub rates: Vec<f64>,
    pub outage: Vec<f64>,
    pub ber: Vec<f64>,
    pub targets: Vec<f64>,
    pub bit_loads: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FairnessReport {
    pub jfi_ec: f64,
    pub jfi_op: f64,
    pub jfi_ber: f64,
    /// `jfi_op / L`.
    pub jfi_op_normalized: f64,
    /// `jfi_ber / L`.
    pub jfi_ber_normalized: f64,
    pub pfi_ec: f64,
    pub pfi_op: f64,
    pub pfi_ber: f64,
}

impl FairnessInput {
    pub fn validate(&self) -> Result<()> {
        let l = self.rates.len();
        if l < 2 {
            return Err(Error::InvalidArgument("fairness needs at least two devices".into()));
        }
        for v in [&self.outage, &self.ber, &self.targets, &self.bit_loads] {
            if v.len() != l {
                return Err(Error::LengthMismatch {
                    expected: l,
                    actual: v.len(),
                });
            }
        }
        if self
            .outage
            .iter()
            .chain(&self.ber)
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::InvalidArgument("probabilities must lie in [0, 1]".into()));
        }
        if self.rates.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidArgument("rates must be >= 0".into()));
        }
        Ok(())
    }

    pub fn report(&self) -> Result<FairnessReport> {
        self.validate()?;
        let l = self.rates.len() as f64;
        let success = |p: &[f64]| p.iter().map(|x| 1.0 - x).collect::<Vec<_>>();
        let jfi_op = jfi_outage(&self.outage, &self.targets);
        let jfi_b = jfi_ber(&self.ber, &self.bit_loads);
        Ok(FairnessReport {
            jfi_ec: jfi_capacity(&self.rates),
            jfi_op,
            jfi_ber: jfi_b,
            jfi_op_normalized: jfi_op / l,
            jfi_ber_normalized: jfi_b / l,
            pfi_ec: pfi(&self.rates),
            pfi_op: pfi(&success(&self.outage)),
            pfi_ber: pfi(&success(&self.ber)),
        })
    }
}

impl FairnessReport {
    /// Indices of a perfectly fair operating point with `devices` equal
    /// loads and error-free links.
    pub fn ideal(devices: usize) -> Self {
        let l = devices as f64;
        FairnessReport {
            jfi_ec: 1.0,
            jfi_op: l,
            jfi_ber: l,
            jfi_op_normalized: 1.0,
            jfi_ber_normalized: 1.0,
            pfi_ec: 1.0,
            pfi_op: 1.0,
            pfi_ber: 1.0,
        }
    }

    /// `(name, value)` pairs in a fixed order.
    pub fn entries(&self) -> [(&'static str, f64); 8] {
        [
            ("jfi_ec", self.jfi_ec),
            ("jfi_op", self.jfi_op),
            ("jfi_ber", self.jfi_ber),
            ("jfi_op_normalized", self.jfi_op_normalized),
            ("jfi_ber_normalized", self.jfi_ber_normalized),
            ("pfi_ec", self.pfi_ec),
            ("pfi_op", self.pfi_op),
            ("pfi_ber", self.pfi_ber),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jain_capacity_values() {
        assert!((jfi_capacity(&[2.0, 2.0, 2.0]) - 1.0).abs() < 1e-15);
        assert!((jfi_capacity(&[0.0, 5.0, 0.0, 0.0]) - 0.25).abs() < 1e-15);
        assert!((jfi_capacity(&[1.0, 2.0, 3.0]) - 6.0 / 7.0).abs() < 1e-15);
        assert_eq!(jfi_capacity(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn jain_outage_values() {
        assert_eq!(jfi_outage(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]), 0.0);
        assert!((jfi_outage(&[0.0; 4], &[1.5; 4]) - 4.0).abs() < 1e-14);
        assert!((jfi_outage(&[0.0, 1.0], &[1.0, 1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jain_ber_values() {
        assert!((jfi_ber(&[0.0; 3], &[2.0; 3]) - 3.0).abs() < 1e-14);
        assert_eq!(jfi_ber(&[1.0, 1.0], &[2.0, 2.0]), 0.0);
        assert!((jfi_ber(&[0.0, 1.0], &[2.0, 2.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn proportional_values() {
        assert_eq!(pfi(&[0.3, 0.3, 0.3]), 1.0);
        assert_eq!(pfi(&[0.0, 0.4]), 0.0);
        assert!((pfi(&[0.25, 0.75]) - 0.5).abs() < 1e-15);
        assert_eq!(pfi(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn report_normalisation() {
        let input = FairnessInput {
            rates: vec![1.0, 1.0, 1.0],
            outage: vec![0.0; 3],
            ber: vec![0.0; 3],
            targets: vec![4.0 / 3.0; 3],
            bit_loads: vec![2.0; 3],
        };
        let r = input.report().unwrap();
        let ideal = FairnessReport::ideal(3);
        for ((_, a), (_, b)) in r.entries().iter().zip(ideal.entries()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn report_validation() {
        let mut input = FairnessInput {
            rates: vec![1.0, 2.0],
            outage: vec![0.1, 0.2],
            ber: vec![0.1, 1.2],
            targets: vec![1.0, 1.0],
            bit_loads: vec![2.0, 2.0],
        };
        assert!(input.report().is_err());
        input.ber = vec![0.1];
        assert!(input.report().is_err());
        input.ber = vec![0.1, 0.2];
        assert!(input.report().is_ok());
        input.rates = vec![1.0];
        assert!(input.report().is_err());
    }
}
