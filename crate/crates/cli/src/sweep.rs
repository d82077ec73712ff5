//! Sweep execution and file emission.
//!
//! Per run (BIMA, or conventional NOMA with one allocation) and metric the
//! sweep writes `<run>_<metric>.csv` holding the analytic curves where a
//! closed form exists and the simulated curves always. Fairness indices go
//! to `fairness.csv`, receiver complexity to `complexity.{json,md}`, the
//! cross-scheme comparison to `summary.md`, and everything is indexed by
//! `manifest.json`. Nothing time- or path-dependent is written, so reruns
//! are byte-identical.

use crate::config::{Experiment, LabeledPa};
use crate::report::{complexity_markdown, feasibility_report, FeasibilityReport};
use crate::{CliError, Stamp};
use bima_core::analytic::{Metric, Scheme};
use bima_core::complexity::{bima_complexity, conv_complexity, ComplexityReport};
use bima_core::fairness::{FairnessInput, FairnessReport};
use bima_core::montecarlo::{analytic_curves, simulate, KpiCurve, Provenance, SimulationOutput, SweepPlan};
use bima_core::order_stats::ChannelOrdering;
use bima_core::Error as CoreError;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

/// One scheme/allocation pair of a sweep.
#[derive(Debug, Clone)]
pub struct Run {
    pub label: String,
    pub scheme: Scheme,
    pub pa: Option<LabeledPa>,
}

pub fn runs(exp: &Experiment) -> Vec<Run> {
    let mut out = Vec::new();
    for &scheme in &exp.schemes {
        match scheme {
            Scheme::Bima => out.push(Run {
                label: "bima".into(),
                scheme,
                pa: None,
            }),
            Scheme::Conv => {
                for p in &exp.allocations {
                    let label = if p.label.is_empty() {
                        "conv".to_string()
                    } else {
                        format!("conv-{}", p.label)
                    };
                    out.push(Run {
                        label,
                        scheme,
                        pa: Some(p.clone()),
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RunEntry {
    pub label: String,
    pub scheme: Scheme,
    pub alphas: Option<Vec<f64>>,
    pub feasibility: Option<FeasibilityReport>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub metric: Metric,
    pub device: usize,
    pub rho_db: f64,
    /// Simulated value per run label.
    pub values: BTreeMap<String, f64>,
    /// Run with the lowest BER/OP or the highest EC.
    pub best: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowConfidencePoint {
    pub run: String,
    pub metric: Metric,
    pub device: usize,
    pub rho_db: f64,
    pub events: Option<u64>,
    pub trials: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub provenance: Stamp,
    pub orders: Vec<u64>,
    pub ordering: ChannelOrdering,
    pub variances: Vec<f64>,
    pub targets: Vec<f64>,
    pub rho_db: Vec<f64>,
    pub budget: bima_core::montecarlo::Budget,
    pub runs: Vec<RunEntry>,
    pub fairness_file: Option<String>,
    pub complexity_files: Vec<String>,
    pub summary_file: String,
    pub comparisons: Vec<Comparison>,
    pub low_confidence: Vec<LowConfidencePoint>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn low_confidence(&self) -> bool {
        !self.low_confidence.is_empty()
    }
}

struct RunResult {
    run: Run,
    analytic: HashMap<Metric, Vec<KpiCurve>>,
    simulated: SimulationOutput,
}

impl RunResult {
    fn simulated(&self, metric: Metric) -> &[KpiCurve] {
        match metric {
            Metric::Ber => &self.simulated.ber,
            Metric::Op => &self.simulated.op,
            Metric::Ec => &self.simulated.ec,
        }
    }
}

fn plan(exp: &Experiment, run: &Run) -> SweepPlan {
    let mut sc = exp.scenario.clone();
    sc.pa = run.pa.as_ref().map(|p| p.pa.clone());
    let mut plan = SweepPlan::new(sc, exp.rho_db.clone(), exp.seed);
    plan.budget = exp.budget;
    plan.execution = exp.execution;
    plan
}

fn execute(exp: &Experiment, run: &Run) -> Result<RunResult, CliError> {
    let plan = plan(exp, run);
    let simulated = simulate(&plan, run.scheme, exp.metric_set())?;
    let mut analytic = HashMap::new();
    for &metric in &exp.metrics {
        match analytic_curves(&plan, run.scheme, metric) {
            Ok(c) => {
                analytic.insert(metric, c);
            }
            Err(CoreError::NotAvailable(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(RunResult {
        run: run.clone(),
        analytic,
        simulated,
    })
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn curves_csv(stamp: &Stamp, run: &Run, metric: Metric, curves: &[&KpiCurve]) -> Result<Vec<u8>, CliError> {
    let mut buf = stamp.comment_lines().into_bytes();
    buf.extend_from_slice(format!("# run = {}\n# scheme = {}\n# metric = {}\n", run.label, run.scheme, metric).as_bytes());
    if let Some(p) = &run.pa {
        buf.extend_from_slice(format!("# alphas = {:?}\n", p.pa.alphas()).as_bytes());
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["rho_db", "device", "value", "stderr", "provenance"])?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                p.rho_db.to_string(),
                c.device.to_string(),
                p.value.to_string(),
                p.stderr.to_string(),
                c.provenance.to_string(),
            ])?;
        }
    }
    w.into_inner().map_err(|e| CliError::io("csv buffer", e.into_error()))
}

fn fairness_rows(exp: &Experiment, r: &RunResult) -> Result<Vec<(Provenance, f64, FairnessReport)>, CliError> {
    let sc = &exp.scenario;
    let mut rows = Vec::new();
    let sources: Vec<(Provenance, [&[KpiCurve]; 3])> = {
        let mut s = vec![(
            Provenance::Simulated,
            [r.simulated(Metric::Ec), r.simulated(Metric::Op), r.simulated(Metric::Ber)],
        )];
        if let (Some(ec), Some(op), Some(ber)) = (
            r.analytic.get(&Metric::Ec),
            r.analytic.get(&Metric::Op),
            r.analytic.get(&Metric::Ber),
        ) {
            s.insert(0, (Provenance::Analytic, [ec.as_slice(), op.as_slice(), ber.as_slice()]));
        }
        s
    };
    for (prov, [ec, op, ber]) in sources {
        for (k, &db) in exp.rho_db.iter().enumerate() {
            let at = |c: &[KpiCurve]| c.iter().map(|c| c.points[k].value).collect::<Vec<_>>();
            let input = FairnessInput {
                rates: at(ec),
                outage: at(op),
                ber: at(ber),
                targets: sc.targets.clone(),
                bit_loads: sc.bit_loads(),
            };
            rows.push((prov, db, input.report()?));
        }
    }
    Ok(rows)
}

fn fairness_csv(stamp: &Stamp, rows: &[(String, Provenance, f64, FairnessReport)]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(stamp.comment_lines().into_bytes());
    let mut header = vec!["run".to_string(), "provenance".into(), "rho_db".into()];
    header.extend(FairnessReport::ideal(2).entries().iter().map(|(n, _)| n.to_string()));
    w.write_record(&header)?;
    for (run, prov, db, rep) in rows {
        let mut rec = vec![run.clone(), prov.to_string(), db.to_string()];
        rec.extend(rep.entries().iter().map(|(_, v)| v.to_string()));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| CliError::io("csv buffer", e.into_error()))
}

fn comparisons(exp: &Experiment, results: &[RunResult]) -> Vec<Comparison> {
    let mut out = Vec::new();
    for &metric in &exp.metrics {
        for device in 1..=exp.scenario.devices() {
            for (k, &db) in exp.rho_db.iter().enumerate() {
                let values: BTreeMap<String, f64> = results
                    .iter()
                    .map(|r| (r.run.label.clone(), r.simulated(metric)[device - 1].points[k].value))
                    .collect();
                let better = |a: f64, b: f64| match metric {
                    Metric::Ec => a > b,
                    _ => a < b,
                };
                let best = results
                    .iter()
                    .map(|r| (&r.run.label, values[&r.run.label]))
                    .fold(None::<(&String, f64)>, |acc, (l, v)| match acc {
                        Some((_, bv)) if !better(v, bv) => acc,
                        _ => Some((l, v)),
                    })
                    .map(|(l, _)| l.clone())
                    .unwrap_or_default();
                out.push(Comparison {
                    metric,
                    device,
                    rho_db: db,
                    values,
                    best,
                });
            }
        }
    }
    out
}

fn summary_markdown(exp: &Experiment, stamp: &Stamp, results: &[RunResult], comps: &[Comparison]) -> String {
    let mut s = stamp.markdown_comment();
    s.push_str(&format!("# {}\n\n", exp.name));
    s.push_str(&format!(
        "Orders {:?}, {} ordering, rho {} to {} dB. Simulated values.\n",
        exp.scenario.orders,
        exp.scenario.model.ordering(),
        exp.rho_db[0],
        exp.rho_db[exp.rho_db.len() - 1]
    ));
    let labels: Vec<&str> = results.iter().map(|r| r.run.label.as_str()).collect();
    let picks: Vec<f64> = {
        let mut v = vec![exp.rho_db[0]];
        if exp.rho_db.len() > 2 {
            v.push(exp.rho_db[exp.rho_db.len() / 2]);
        }
        if exp.rho_db.len() > 1 {
            v.push(exp.rho_db[exp.rho_db.len() - 1]);
        }
        v
    };
    for &metric in &exp.metrics {
        s.push_str(&format!("\n## {}\n\n| rho_db | device | {} | best |\n", metric.to_string().to_uppercase(), labels.join(" | ")));
        s.push_str(&format!("|---|---|{}---|\n", "---|".repeat(labels.len())));
        for c in comps.iter().filter(|c| c.metric == metric && picks.contains(&c.rho_db)) {
            let cells: Vec<String> = labels.iter().map(|l| format!("{:.4e}", c.values[*l])).collect();
            s.push_str(&format!("| {} | {} | {} | {} |\n", c.rho_db, c.device, cells.join(" | "), c.best));
        }
    }
    s
}

/// Runs every scheme/allocation of `exp` and writes the outputs to `out_dir`.
pub fn run_sweep(exp: &Experiment, out_dir: &Path) -> Result<Manifest, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let stamp = Stamp::of(exp);
    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    let mut results = Vec::new();

    for run in runs(exp) {
        let feasibility = match &run.pa {
            Some(p) => {
                let rep = feasibility_report(&p.pa, &exp.scenario.orders)?;
                if !rep.feasible {
                    let worst = rep
                        .devices
                        .iter()
                        .min_by(|a, b| a.margin.total_cmp(&b.margin))
                        .map(|d| format!("device {} margin {:.4}", d.device, d.margin))
                        .unwrap_or_default();
                    warnings.push(format!(
                        "{}: allocation {:?} violates the detectability constraint ({worst}); SIC errors will floor its curves",
                        run.label,
                        p.pa.alphas()
                    ));
                }
                Some(rep)
            }
            None => None,
        };
        let result = execute(exp, &run)?;
        let mut files = Vec::new();
        for &metric in &exp.metrics {
            let mut curves: Vec<&KpiCurve> = result.analytic.get(&metric).map(|v| v.iter().collect()).unwrap_or_default();
            curves.extend(result.simulated(metric));
            let name = format!("{}_{}.csv", run.label, metric);
            write(&out_dir.join(&name), &curves_csv(&stamp, &run, metric, &curves)?)?;
            files.push(name);
        }
        entries.push(RunEntry {
            label: run.label.clone(),
            scheme: run.scheme,
            alphas: run.pa.as_ref().map(|p| p.pa.alphas().to_vec()),
            feasibility,
            files,
        });
        results.push(result);
    }

    let fairness_file = if exp.metric_set() == bima_core::montecarlo::MetricSet::ALL && exp.scenario.devices() >= 2 {
        let mut rows = Vec::new();
        for r in &results {
            for (prov, db, rep) in fairness_rows(exp, r)? {
                rows.push((r.run.label.clone(), prov, db, rep));
            }
        }
        write(&out_dir.join("fairness.csv"), &fairness_csv(&stamp, &rows)?)?;
        Some("fairness.csv".to_string())
    } else {
        if exp.scenario.devices() >= 2 {
            warnings.push("fairness indices need all three metrics; fairness.csv skipped".into());
        }
        None
    };

    let complexity = complexity_reports(&exp.scenario.orders)?;
    write(&out_dir.join("complexity.json"), &json_bytes(&ComplexityFile { provenance: &stamp, reports: &complexity })?)?;
    write(&out_dir.join("complexity.md"), (stamp.markdown_comment() + &complexity_markdown(&complexity)).as_bytes())?;

    let comps = comparisons(exp, &results);
    write(&out_dir.join("summary.md"), summary_markdown(exp, &stamp, &results, &comps).as_bytes())?;

    let mut low_confidence = Vec::new();
    for r in &results {
        for c in r.simulated.curves() {
            for p in c.points.iter().filter(|p| p.low_confidence) {
                low_confidence.push(LowConfidencePoint {
                    run: r.run.label.clone(),
                    metric: c.metric,
                    device: c.device,
                    rho_db: p.rho_db,
                    events: p.events,
                    trials: p.trials,
                });
            }
        }
    }
    if !low_confidence.is_empty() {
        warnings.push(format!(
            "{} simulated points ran out of budget before min_events = {} events",
            low_confidence.len(),
            exp.budget.min_events
        ));
    }

    let sc = &exp.scenario;
    let manifest = Manifest {
        name: exp.name.clone(),
        provenance: stamp,
        orders: sc.orders.clone(),
        ordering: sc.model.ordering(),
        variances: (1..=sc.devices()).map(|i| sc.model.variance(i)).collect::<Result<_, _>>()?,
        targets: sc.targets.clone(),
        rho_db: exp.rho_db.clone(),
        budget: exp.budget,
        runs: entries,
        fairness_file,
        complexity_files: vec!["complexity.json".into(), "complexity.md".into()],
        summary_file: "summary.md".into(),
        comparisons: comps,
        low_confidence,
        warnings,
    };
    write(&out_dir.join("manifest.json"), &json_bytes(&manifest)?)?;
    Ok(manifest)
}

#[derive(Serialize)]
pub struct ComplexityFile<'a> {
    pub provenance: &'a Stamp,
    pub reports: &'a [ComplexityReport],
}

pub fn complexity_reports(orders: &[u64]) -> Result<Vec<ComplexityReport>, CliError> {
    Ok(vec![bima_complexity(orders)?, conv_complexity(orders)?])
}

pub fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}
