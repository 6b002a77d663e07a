//! Experiment driver behind the `noma-secrecy` binary.
//!
//! Each runner takes an [`ExperimentSpec`], evaluates every sweep point (in parallel on
//! the current rayon pool, gathered in axis order) and returns CSV tables:
//!
//! - main table: one row per (sweep value, allocator, user)
//! - summary table: one row per (sweep value, allocator) with sums
//! - trace table (`optimize` only): one row per outer iteration of the proposed solver
//!
//! Floats are written with nine significant digits. Cluster and user indices are
//! zero-based, users ordered strongest first.

mod spec;
mod table;

pub use spec::{random_betas, AllocationSpec, ExperimentSpec, RandomClusters, Resolved, Sweep, SweepAxis};
pub use table::{fmt_float, Table};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::model::{DownlinkPower, UplinkPower};
use crate::montecarlo::{error_decomposition_check, ergodic_rate_oracle, moment_suite, MomentRow};
use crate::optim::{allocate_ee, allocate_se, allocate_tdma, fixed_downlink, Allocation, Scheme, SolverOptions};
use crate::rates::{energy_efficiency, secrecy_report, total_power, RateReport};

/// Objective of `optimize`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Se,
    Ee,
}

/// Tables produced by one command plus the resolved scenario record.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub main: Table,
    pub summary: Table,
    pub trace: Option<Table>,
    /// JSON record of the seed and every resolved point (gains included).
    pub scenario: String,
}

impl ExperimentOutput {
    /// Writes `path` plus the `.summary.csv`, `.trace.csv` and `.scenario.json` companions.
    pub fn write(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let mut written = vec![path.to_path_buf()];
        std::fs::write(path, self.main.to_csv()?)?;
        let summary = companion(path, "summary.csv");
        std::fs::write(&summary, self.summary.to_csv()?)?;
        written.push(summary);
        if let Some(trace) = &self.trace {
            let p = companion(path, "trace.csv");
            std::fs::write(&p, trace.to_csv()?)?;
            written.push(p);
        }
        let scenario = companion(path, "scenario.json");
        std::fs::write(&scenario, &self.scenario)?;
        written.push(scenario);
        Ok(written)
    }
}

/// `out/run.csv` -> `out/run.<suffix>`.
pub fn companion(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Serialize)]
struct ScenarioRecord<'a> {
    scenario: &'a str,
    command: &'a str,
    seed: u64,
    trials: usize,
    axis: Option<&'static str>,
    points: &'a [Resolved],
}

fn scenario_json(spec: &ExperimentSpec, command: &str, points: &[Resolved]) -> Result<String> {
    let record = ScenarioRecord {
        scenario: &spec.scenario,
        command,
        seed: spec.seed,
        trials: spec.trials,
        axis: spec.sweep.as_ref().map(|s| s.axis.name()),
        points,
    };
    Ok(serde_json::to_string_pretty(&record)? + "\n")
}

fn axis_cells(spec: &ExperimentSpec, point: &Resolved) -> [String; 3] {
    [
        spec.scenario.clone(),
        spec.sweep.as_ref().map(|s| s.axis.name()).unwrap_or("none").to_string(),
        point.axis_value.map(fmt_float).unwrap_or_default(),
    ]
}

const KEY: [&str; 4] = ["scenario", "axis", "axis_value", "allocator"];
const USER_COLS: [&str; 7] = ["cluster", "user", "p", "q", "legit", "eaves", "secrecy"];

fn header(extra: &[&'static str]) -> Vec<&'static str> {
    KEY.iter().chain(extra).copied().collect()
}

fn user_rows(key: &[String], p: &UplinkPower, q: &DownlinkPower, report: &RateReport, out: &mut Vec<Vec<String>>) {
    for (m, row) in report.secrecy.iter().enumerate() {
        for k in 0..row.len() {
            let mut r = key.to_vec();
            r.extend([
                m.to_string(),
                k.to_string(),
                fmt_float(p.get(m, k)),
                fmt_float(q.user(m, k)),
                fmt_float(report.legit[m][k]),
                fmt_float(report.eaves[m][k]),
                fmt_float(report.secrecy[m][k]),
            ]);
            out.push(r);
        }
    }
}

fn key_with(spec: &ExperimentSpec, point: &Resolved, allocator: &str) -> Vec<String> {
    let mut k = axis_cells(spec, point).to_vec();
    k.push(allocator.to_string());
    k
}

fn given_or_fixed(point: &Resolved) -> Result<(&'static str, UplinkPower, DownlinkPower)> {
    Ok(match &point.allocation {
        Some((p, q)) => ("given", p.clone(), q.clone()),
        None => (
            "fixed",
            UplinkPower::from_cap(&point.config, &point.budget.uplink),
            fixed_downlink(&point.config, point.budget.downlink_total, point.an_fraction)?,
        ),
    })
}

fn solver_options(point: &Resolved) -> SolverOptions {
    SolverOptions {
        an_fraction: point.an_fraction,
        ..SolverOptions::default()
    }
}

fn par_points<T: Send>(points: &[Resolved], f: impl Fn(&Resolved) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    points.par_iter().map(f).collect()
}

/// Closed-form rates of the given allocation, or of full uplink power with the fixed
/// downlink split.
pub fn run_rates(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let points = spec.points()?;
    let results = par_points(&points, |point| {
        let (name, p, q) = given_or_fixed(point)?;
        let report = secrecy_report(&point.config, &p, &q)?;
        let ee = energy_efficiency(&report, &p, &q, point.p_f)?;
        let key = key_with(spec, point, name);
        let mut rows = Vec::new();
        user_rows(&key, &p, &q, &report, &mut rows);
        let mut s = key;
        s.extend([
            fmt_float(report.sum_secrecy),
            fmt_float(ee),
            fmt_float(q.an_total()),
            fmt_float(total_power(&p, &q, point.p_f)),
        ]);
        Ok((rows, s))
    })?;
    let mut main = Table::new(header(&USER_COLS));
    let mut summary = Table::new(header(&["sum_secrecy", "ee", "an_power", "total_power"]));
    for (rows, s) in results {
        main.rows.extend(rows);
        summary.rows.push(s);
    }
    Ok(ExperimentOutput {
        main,
        summary,
        trace: None,
        scenario: scenario_json(spec, "rates", &points)?,
    })
}

/// Relative gap allowed between closed-form and simulated rates.
pub const RATE_REL_TOL: f64 = 0.05;

// Moments must sit inside 3 standard errors. Closed-form rates are approximations of the
// ergodic rate, so they are judged by relative gap instead.
fn status(kind: &str, z: f64, gap: f64) -> &'static str {
    let ok = if kind == "rate" { gap <= RATE_REL_TOL } else { z <= 3.0 };
    if z.is_nan() {
        "degenerate"
    } else if ok {
        "pass"
    } else {
        "fail"
    }
}

fn rel_gap(closed: f64, mc: f64) -> f64 {
    if closed == mc {
        0.0
    } else {
        (closed - mc).abs() / mc.abs()
    }
}

/// Closed-form moments and rates next to Monte Carlo estimates. Moment rows pass inside
/// 3 standard errors, rate rows within [`RATE_REL_TOL`] relative gap.
pub fn run_validate(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let points = spec.points()?;
    let cols = [
        "kind", "name", "cluster", "user", "other", "closed_form", "monte_carlo", "std_err", "z_score",
        "rel_gap", "status",
    ];
    let results = par_points(&points, |point| {
        let cfg = &point.config;
        let (name, p, q) = given_or_fixed(point)?;
        let key = key_with(spec, point, name);
        let mut rows = Vec::new();
        let mut worst_secrecy_gap: f64 = 0.0;
        let mut fails = 0;
        let mut degenerate = 0;
        let mut push = |kind: &str, r: &MomentRow, rows: &mut Vec<Vec<String>>| {
            let z = r.z_score();
            let gap = rel_gap(r.closed_form, r.mean);
            let st = status(kind, z, gap);
            fails += (st == "fail") as usize;
            degenerate += (st == "degenerate") as usize;
            let mut row = key.clone();
            row.extend([
                kind.to_string(),
                r.name.to_string(),
                r.cluster.to_string(),
                r.user.map(|u| u.to_string()).unwrap_or_default(),
                r.other.map(|u| u.to_string()).unwrap_or_default(),
                fmt_float(r.closed_form),
                fmt_float(r.mean),
                fmt_float(r.std_err),
                fmt_float(z),
                fmt_float(gap),
                st.to_string(),
            ]);
            rows.push(row);
        };
        for r in moment_suite(cfg, &p, &q, spec.trials, spec.seed)? {
            push("moment", &r, &mut rows);
        }
        for r in error_decomposition_check(cfg, &p, spec.trials, spec.seed)? {
            push("decomposition", &r, &mut rows);
        }
        let closed = secrecy_report(cfg, &p, &q)?;
        let mc = ergodic_rate_oracle(cfg, &p, &q, spec.trials, spec.seed)?;
        for (m, k) in cfg.users() {
            let triples = [
                ("legit", closed.legit[m][k], mc.report.legit[m][k], mc.legit_se[m][k]),
                ("eaves", closed.eaves[m][k], mc.report.eaves[m][k], mc.eaves_se[m][k]),
                ("secrecy", closed.secrecy[m][k], mc.report.secrecy[m][k], mc.gap_se[m][k]),
            ];
            for (rate, c, e, se) in triples {
                let r = MomentRow {
                    name: rate,
                    cluster: m,
                    user: Some(k),
                    other: None,
                    closed_form: c,
                    mean: e,
                    std_err: se,
                };
                if rate == "secrecy" {
                    worst_secrecy_gap = worst_secrecy_gap.max(rel_gap(c, e));
                }
                push("rate", &r, &mut rows);
            }
        }
        let mut s = key.clone();
        s.extend([
            spec.trials.to_string(),
            fails.to_string(),
            degenerate.to_string(),
            fmt_float(worst_secrecy_gap),
            fmt_float(closed.sum_secrecy),
            fmt_float(mc.report.sum_secrecy),
        ]);
        Ok((rows, s))
    })?;
    let mut main = Table::new(header(&cols));
    let mut summary = Table::new(header(&[
        "trials",
        "failed",
        "degenerate",
        "max_secrecy_rel_gap",
        "closed_sum_secrecy",
        "mc_sum_secrecy",
    ]));
    for (rows, s) in results {
        main.rows.extend(rows);
        summary.rows.push(s);
    }
    Ok(ExperimentOutput {
        main,
        summary,
        trace: None,
        scenario: scenario_json(spec, "validate", &points)?,
    })
}

fn allocate(point: &Resolved, scheme: Scheme, mode: Mode) -> Result<Allocation> {
    let opts = solver_options(point);
    match mode {
        Mode::Se => allocate_se(&point.config, &point.budget, scheme, &opts),
        Mode::Ee => allocate_ee(&point.config, &point.budget, point.p_f, scheme, &opts),
    }
}

fn allocation_ee(point: &Resolved, a: &Allocation) -> Result<f64> {
    match a.report.ee {
        Some(ee) => Ok(ee),
        None => energy_efficiency(&a.report, &a.p, &a.q, point.p_f),
    }
}

/// Proposed allocation for `mode` and the three baselines, with the proposed solver's trace.
pub fn run_optimize(spec: &ExperimentSpec, mode: Mode) -> Result<ExperimentOutput> {
    let points = spec.points()?;
    let results = par_points(&points, |point| {
        let mut rows = Vec::new();
        let mut sums = Vec::new();
        let mut trace = Vec::new();
        for scheme in Scheme::ALL {
            let a = allocate(point, scheme, mode)?;
            let key = key_with(spec, point, scheme.name());
            user_rows(&key, &a.p, &a.q, &a.report, &mut rows);
            let mut s = key.clone();
            s.extend([
                fmt_float(a.report.sum_secrecy),
                fmt_float(allocation_ee(point, &a)?),
                fmt_float(total_power(&a.p, &a.q, point.p_f)),
                a.trace.converged.to_string(),
                a.trace.outer_values.len().saturating_sub(1).to_string(),
            ]);
            sums.push(s);
            if scheme == Scheme::Proposed {
                let t = &a.trace;
                for (i, v) in t.outer_values.iter().enumerate() {
                    let mut r = key.clone();
                    let cell = |xs: &[f64], j: Option<usize>| j.and_then(|j| xs.get(j)).map(|x| fmt_float(*x)).unwrap_or_default();
                    let (eps, lambda, sub) = match mode {
                        // outer_values[0] is the starting point
                        Mode::Se => (cell(&t.eps_star, i.checked_sub(1)), String::new(), String::new()),
                        Mode::Ee => (String::new(), cell(&t.lambda_sequence, Some(i)), cell(&t.subtractive_values, Some(i))),
                    };
                    r.extend([i.to_string(), fmt_float(*v), eps, lambda, sub]);
                    trace.push(r);
                }
            }
        }
        Ok((rows, sums, trace))
    })?;
    let mut main = Table::new(header(&USER_COLS));
    let mut summary = Table::new(header(&["sum_secrecy", "ee", "total_power", "converged", "outer_rounds"]));
    let mut trace = Table::new(header(&["iteration", "objective", "eps_star", "lambda", "subtractive"]));
    for (rows, sums, t) in results {
        main.rows.extend(rows);
        summary.rows.extend(sums);
        trace.rows.extend(t);
    }
    let command = match mode {
        Mode::Se => "optimize-se",
        Mode::Ee => "optimize-ee",
    };
    Ok(ExperimentOutput {
        main,
        summary,
        trace: Some(trace),
        scenario: scenario_json(spec, command, &points)?,
    })
}

/// Every allocator at every sweep point, SE and EE, plus the TDMA-OMA comparison.
///
/// SE columns come from SE-maximizing allocations and EE columns from EE-maximizing
/// ones; per-user rows are the SE allocations. OMA rows are time averages over slots.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let points = spec.points()?;
    let results = par_points(&points, |point| {
        let mut rows = Vec::new();
        let mut sums = Vec::new();
        for scheme in Scheme::ALL {
            let se = allocate(point, scheme, Mode::Se)?;
            let ee = allocate(point, scheme, Mode::Ee)?;
            let key = key_with(spec, point, scheme.name());
            user_rows(&key, &se.p, &se.q, &se.report, &mut rows);
            let mut s = key;
            s.extend([fmt_float(se.report.sum_secrecy), fmt_float(allocation_ee(point, &ee)?)]);
            sums.push(s);
        }
        let layout_ok = point.config.clusters().iter().all(|c| c.len() == point.config.cluster_size(0));
        if layout_ok {
            let opts = solver_options(point);
            let se = allocate_tdma(&point.config, &point.budget, Scheme::Proposed, None, &opts)?;
            let ee = allocate_tdma(&point.config, &point.budget, Scheme::Proposed, Some(point.p_f), &opts)?;
            let key = key_with(spec, point, "oma");
            let n_slots = se.slots.len() as f64;
            for m in 0..point.config.n_clusters() {
                for (t, slot) in se.slots.iter().enumerate() {
                    let mut r = key.clone();
                    r.extend([
                        m.to_string(),
                        t.to_string(),
                        fmt_float(slot.p.get(m, 0)),
                        fmt_float(slot.q.user(m, 0)),
                        fmt_float(slot.report.legit[m][0] / n_slots),
                        fmt_float(slot.report.eaves[m][0] / n_slots),
                        fmt_float(slot.report.secrecy[m][0] / n_slots),
                    ]);
                    rows.push(r);
                }
            }
            let mut s = key;
            s.extend([fmt_float(se.sum_secrecy), fmt_float(ee.ee.unwrap_or(f64::NAN))]);
            sums.push(s);
        } else {
            log::warn!("skipping OMA at {:?}: clusters differ in size", point.axis_value);
        }
        Ok((rows, sums))
    })?;
    let mut main = Table::new(header(&USER_COLS));
    let mut summary = Table::new(header(&["se", "ee"]));
    for (rows, sums) in results {
        main.rows.extend(rows);
        summary.rows.extend(sums);
    }
    Ok(ExperimentOutput {
        main,
        summary,
        trace: None,
        scenario: scenario_json(spec, "sweep", &points)?,
    })
}
