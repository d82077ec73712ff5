//! Feasibility and complexity reports.

use crate::config::Experiment;
use crate::CliError;
use bima_core::complexity::{bima_complexity, conv_complexity, ComplexityReport};
use bima_core::noma::{check_pa_feasible, PowerAllocation};
use bima_core::scenario::{REFERENCE_ALLOCATIONS, REFERENCE_COMPLEXITY};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceFeasibility {
    /// 1-based, weakest first.
    pub device: usize,
    pub alpha: f64,
    pub bound: f64,
    pub margin: f64,
    /// Loss against an interference-free link at full power.
    pub penalty_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub orders: Vec<u64>,
    pub devices: Vec<DeviceFeasibility>,
}

pub fn feasibility_report(pa: &PowerAllocation, orders: &[u64]) -> Result<FeasibilityReport, CliError> {
    let f = check_pa_feasible(pa, orders)?;
    let devices = pa
        .alphas()
        .iter()
        .zip(&f.bounds)
        .zip(&f.margins)
        .zip(pa.penalty_db())
        .enumerate()
        .map(|(k, (((&alpha, &bound), &margin), penalty_db))| DeviceFeasibility {
            device: k + 1,
            alpha,
            bound,
            margin,
            penalty_db,
        })
        .collect();
    Ok(FeasibilityReport {
        feasible: f.feasible,
        orders: orders.to_vec(),
        devices,
    })
}

pub fn feasibility_markdown(label: &str, rep: &FeasibilityReport) -> String {
    let mut s = format!(
        "{label}: {}\n\n| device | M | alpha | bound | margin | penalty_db |\n|---|---|---|---|---|---|\n",
        if rep.feasible { "feasible" } else { "INFEASIBLE" }
    );
    for (d, m) in rep.devices.iter().zip(&rep.orders) {
        s.push_str(&format!(
            "| {} | {} | {:.6} | {:.6} | {:+.6} | {:.2} |\n",
            d.device, m, d.alpha, d.bound, d.margin, d.penalty_db
        ));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct LabeledFeasibility {
    pub label: String,
    pub report: FeasibilityReport,
}

/// Feasibility of every conventional allocation in a config.
pub fn check_pa(exp: &Experiment) -> Result<Vec<LabeledFeasibility>, CliError> {
    if exp.allocations.is_empty() {
        return Err(CliError::Usage(
            "config has no conventional NOMA allocation (add \"conv\" to sweep.schemes)".into(),
        ));
    }
    exp.allocations
        .iter()
        .map(|p| {
            Ok(LabeledFeasibility {
                label: if p.label.is_empty() { "conv".into() } else { p.label.clone() },
                report: feasibility_report(&p.pa, &exp.scenario.orders)?,
            })
        })
        .collect()
}

pub fn complexity_markdown(reports: &[ComplexityReport]) -> String {
    let l = reports.first().map_or(0, |r| r.devices);
    let mut s = format!(
        "| scheme | orders | {} | max | min | total |\n|---|---|{}---|---|---|\n",
        (1..=l).map(|i| format!("device {i}")).collect::<Vec<_>>().join(" | "),
        "---|".repeat(l)
    );
    for r in reports {
        s.push_str(&format!(
            "| {} | {:?} | {} | {} | {} | {} |\n",
            r.scheme,
            r.orders,
            r.per_device.iter().map(u64::to_string).collect::<Vec<_>>().join(" | "),
            r.max,
            r.min,
            r.total
        ));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct AllocationRow {
    pub devices: usize,
    pub order: u64,
    pub proposed: Vec<f64>,
    pub proposed_feasibility: FeasibilityReport,
    pub common: Option<Vec<f64>>,
    pub common_feasibility: Option<FeasibilityReport>,
}

/// Published allocations, normalised, with their feasibility verdicts.
pub fn allocation_table() -> Result<Vec<AllocationRow>, CliError> {
    REFERENCE_ALLOCATIONS
        .iter()
        .map(|r| {
            let orders = vec![r.order; r.devices];
            let proposed = PowerAllocation::normalized(r.proposed.to_vec())?;
            let common = r.common.map(|c| PowerAllocation::normalized(c.to_vec())).transpose()?;
            Ok(AllocationRow {
                devices: r.devices,
                order: r.order,
                proposed: proposed.alphas().to_vec(),
                proposed_feasibility: feasibility_report(&proposed, &orders)?,
                common_feasibility: common.as_ref().map(|c| feasibility_report(c, &orders)).transpose()?,
                common: common.map(|c| c.alphas().to_vec()),
            })
        })
        .collect()
}

pub fn allocation_table_markdown(rows: &[AllocationRow]) -> String {
    let verdict = |f: &FeasibilityReport| if f.feasible { "feasible" } else { "infeasible" };
    let mut s = String::from("| L | M | proposed | verdict | common | verdict |\n|---|---|---|---|---|---|\n");
    for r in rows {
        let (common, cv) = match (&r.common, &r.common_feasibility) {
            (Some(c), Some(f)) => (format!("{c:.4?}"), verdict(f)),
            _ => ("-".to_string(), "-"),
        };
        s.push_str(&format!(
            "| {} | {} | {:.4?} | {} | {} | {} |\n",
            r.devices,
            r.order,
            r.proposed,
            verdict(&r.proposed_feasibility),
            common,
            cv
        ));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexityRow {
    pub devices: usize,
    pub order: u64,
    pub bima: ComplexityReport,
    pub conv: ComplexityReport,
    /// Published `(bima each, bima total, conv first, conv last, conv total)`.
    pub published: [u64; 5],
    pub matches: bool,
}

/// Receiver complexity for the published `(L, M)` pairs next to the
/// published counts.
pub fn complexity_table() -> Result<Vec<ComplexityRow>, CliError> {
    REFERENCE_COMPLEXITY
        .iter()
        .map(|r| {
            let orders = vec![r.order; r.devices];
            let bima = bima_complexity(&orders)?;
            let conv = conv_complexity(&orders)?;
            let published = [r.bima_each, r.bima_total, r.conv_first, r.conv_last, r.conv_total];
            let computed = [bima.per_device[0], bima.total, conv.per_device[0], conv.per_device[r.devices - 1], conv.total];
            Ok(ComplexityRow {
                devices: r.devices,
                order: r.order,
                matches: computed == published,
                bima,
                conv,
                published,
            })
        })
        .collect()
}

pub fn complexity_table_markdown(rows: &[ComplexityRow]) -> String {
    let mut s = String::from(
        "| L | M | BIMA each | BIMA total | conv first | conv last | conv total | published | match |\n|---|---|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        s.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {:?} | {} |\n",
            r.devices,
            r.order,
            r.bima.per_device[0],
            r.bima.total,
            r.conv.per_device[0],
            r.conv.per_device[r.devices - 1],
            r.conv.total,
            r.published,
            if r.matches { "yes" } else { "no" }
        ));
    }
    s
}
