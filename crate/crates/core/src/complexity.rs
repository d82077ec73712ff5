//! Receiver complexity in complex operations.
//!
//! An ML search over an `M`-point alphabet costs `4M`; one SIC stage costs
//! the search plus two operations for regeneration and subtraction.

use crate::analytic::Scheme;
use crate::error::{Error, Result};
use crate::numeric::is_power_of_two;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityReport {
    pub scheme: Scheme,
    pub devices: usize,
    pub orders: Vec<u64>,
    pub per_device: Vec<u64>,
    pub max: u64,
    pub min: u64,
    pub total: u64,
}

fn validate(orders: &[u64]) -> Result<()> {
    if orders.is_empty() {
        return Err(Error::InvalidArgument("no devices".into()));
    }
    if let Some(&m) = orders.iter().find(|&&m| !is_power_of_two(m)) {
        return Err(Error::InvalidOrder(m));
    }
    if orders.iter().map(|m| m.trailing_zeros()).sum::<u32>() > 62 {
        return Err(Error::InvalidArgument("joint alphabet overflows 64 bits".into()));
    }
    Ok(())
}

fn report(scheme: Scheme, orders: &[u64], per_device: Vec<u64>) -> ComplexityReport {
    ComplexityReport {
        scheme,
        devices: orders.len(),
        orders: orders.to_vec(),
        max: per_device.iter().copied().max().unwrap_or(0),
        min: per_device.iter().copied().min().unwrap_or(0),
        total: per_device.iter().sum(),
        per_device,
    }
}

/// Every device runs one ML search over the joint alphabet: `4 Π M_i`.
pub fn bima_complexity(orders: &[u64]) -> Result<ComplexityReport> {
    validate(orders)?;
    let m_bw: u64 = orders.iter().product();
    Ok(report(Scheme::Bima, orders, vec![4 * m_bw; orders.len()]))
}

/// Device `i` pays `4M_i + Σ_{j>i} (4M_j + 2)`.
pub fn conv_complexity(orders: &[u64]) -> Result<ComplexityReport> {
    validate(orders)?;
    let per_device = (0..orders.len())
        .map(|i| 4 * orders[i] + orders[i + 1..].iter().map(|m| 4 * m + 2).sum::<u64>())
        .collect();
    Ok(report(Scheme::Conv, orders, per_device))
}

/// Markdown table with one row per report: scheme, L, M, max, min, total.
pub fn markdown_table(reports: &[ComplexityReport]) -> String {
    let mut out = String::from("| Scheme | L | M | Max device | Min device | Total |\n|---|---|---|---|---|---|\n");
    for r in reports {
        let orders = if r.orders.iter().all(|&m| m == r.orders[0]) {
            r.orders[0].to_string()
        } else {
            r.orders.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
        };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            r.scheme.to_string().to_uppercase(),
            r.devices,
            orders,
            r.max,
            r.min,
            r.total
        ));
    }
    out
}
