//! Power allocation: alternating uplink/downlink DC programming for the sum secrecy
//! rate, Dinkelbach iterations for energy efficiency, and the baseline allocators.
//!
//! Inside the solvers the objective is the smooth, unclamped `sum (R - R^e)`; the
//! per-user `[.]^+` clamp is applied once to the final report.

mod dc;
mod objective;

pub use dc::{
    downlink_dc_loop, downlink_dc_step, uplink_dc_loop, uplink_dc_step,
    uplink_dc_step_per_cluster, DcStep, InnerOptions, Phase,
};
pub use objective::{
    downlink_coefficients, downlink_objective, downlink_problem, uplink_coefficients,
    uplink_objective, uplink_problem, DownlinkCoefficients, LogAffineObjective,
    UplinkCoefficients,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelOptions;
use crate::model::{compute_rho, DownlinkPower, PowerBudget, SystemConfig, UplinkPower};
use crate::rates::{
    energy_efficiency, oma_report, secrecy_gap_sum, secrecy_report, tdma_slots, total_power,
    RateReport,
};
use crate::model::UplinkCap;

/// Share of the downlink budget reserved for AN in the fixed split.
pub const DEFAULT_AN_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Outer alternating loop stops when `|R_d - R_u| <= outer_tol`.
    pub outer_tol: f64,
    pub max_outer: usize,
    pub inner: InnerOptions,
    /// Dinkelbach stops when the subtractive objective is at most this.
    pub dinkelbach_tol: f64,
    pub max_dinkelbach: usize,
    /// AN share of the starting downlink split.
    pub an_fraction: f64,
    pub kernel: KernelOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            outer_tol: 1e-3,
            max_outer: 30,
            inner: InnerOptions::default(),
            dinkelbach_tol: 1e-6,
            max_dinkelbach: 50,
            an_fraction: DEFAULT_AN_FRACTION,
            kernel: KernelOptions::default(),
        }
    }
}

/// Which variables an allocator optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Alternating uplink and downlink DC programming.
    Proposed,
    /// Full uplink power, optimized downlink.
    DownlinkOnly,
    /// Fixed downlink split, optimized uplink.
    UplinkOnly,
    /// Full uplink power and the fixed downlink split.
    Fixed,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::DownlinkOnly, Scheme::UplinkOnly, Scheme::Fixed];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::DownlinkOnly => "downlink",
            Scheme::UplinkOnly => "uplink",
            Scheme::Fixed => "fixed",
        }
    }
}

/// Record of one solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverTrace {
    /// Penalized objective at the start and after every outer round. For an EE solve
    /// these are the ratios reached after each Dinkelbach iteration.
    pub outer_values: Vec<f64>,
    /// `R_d - R_u` per outer round; its sign is kept.
    pub eps_star: Vec<f64>,
    /// Number of DC iterations in each inner loop, in execution order.
    pub inner_iteration_counts: Vec<usize>,
    pub steps: Vec<DcStep>,
    pub converged: bool,
    /// Dinkelbach parameters, starting with 0 (EE only).
    pub lambda_sequence: Vec<f64>,
    /// Subtractive objective `SE - lambda * P_total` after each Dinkelbach iteration.
    pub subtractive_values: Vec<f64>,
}

/// A power allocation with its clamped rate report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub scheme: Scheme,
    pub p: UplinkPower,
    pub q: DownlinkPower,
    pub report: RateReport,
    pub trace: SolverTrace,
}

/// `(1 - f) Q_max` shared equally by all users and `f Q_max` equally by the clusters' AN.
pub fn fixed_downlink(cfg: &SystemConfig, q_max: f64, an_fraction: f64) -> Result<DownlinkPower> {
    if !(0.0..=1.0).contains(&an_fraction) {
        return Err(Error::InvalidArgument(format!("AN fraction {an_fraction} outside [0, 1]")));
    }
    let per_user = (1.0 - an_fraction) * q_max / cfg.n_users() as f64;
    let per_an = an_fraction * q_max / cfg.n_clusters() as f64;
    let rows = cfg
        .clusters()
        .iter()
        .map(|c| std::iter::once(per_an).chain(std::iter::repeat_n(per_user, c.len())).collect())
        .collect();
    DownlinkPower::new(cfg, rows)
}

/// `sum (R - R^e) - lambda (sum P + sum Q + p_f)`.
pub fn penalized_objective(
    cfg: &SystemConfig,
    p: &UplinkPower,
    q: &DownlinkPower,
    lambda: f64,
    p_f: f64,
) -> Result<f64> {
    let gap = secrecy_gap_sum(cfg, p, q)?;
    if lambda == 0.0 {
        return Ok(gap);
    }
    Ok(gap - lambda * total_power(p, q, p_f))
}

struct Run<'a> {
    cfg: &'a SystemConfig,
    cap: &'a UplinkCap,
    q_max: f64,
    opts: &'a SolverOptions,
}

impl Run<'_> {
    fn uplink(&self, p: &UplinkPower, q: &DownlinkPower, lambda: f64, trace: &mut SolverTrace) -> Result<UplinkPower> {
        let (p, steps) = uplink_dc_loop(self.cfg, q, p, self.cap, lambda, &self.opts.inner, &self.opts.kernel)?;
        trace.inner_iteration_counts.push(steps.len());
        trace.steps.extend(steps);
        Ok(p)
    }

    fn downlink(&self, p: &UplinkPower, q: &DownlinkPower, lambda: f64, trace: &mut SolverTrace) -> Result<DownlinkPower> {
        let rho = compute_rho(self.cfg, p);
        let (q, steps) = downlink_dc_loop(self.cfg, &rho, q, self.q_max, lambda, &self.opts.inner, &self.opts.kernel)?;
        trace.inner_iteration_counts.push(steps.len());
        trace.steps.extend(steps);
        Ok(q)
    }

    /// Solves one (possibly penalized) SE problem for `scheme` from `(p, q)`.
    /// Returns whether the outer loop met its tolerance.
    fn solve(
        &self,
        scheme: Scheme,
        lambda: f64,
        p_f: f64,
        p: &mut UplinkPower,
        q: &mut DownlinkPower,
        trace: &mut SolverTrace,
        record_outer: bool,
    ) -> Result<bool> {
        let value = |p: &UplinkPower, q: &DownlinkPower| penalized_objective(self.cfg, p, q, lambda, p_f);
        if record_outer {
            trace.outer_values.push(value(p, q)?);
        }
        match scheme {
            Scheme::Fixed => Ok(true),
            Scheme::DownlinkOnly => {
                *q = self.downlink(p, q, lambda, trace)?;
                if record_outer {
                    trace.outer_values.push(value(p, q)?);
                }
                Ok(true)
            }
            Scheme::UplinkOnly => {
                *p = self.uplink(p, q, lambda, trace)?;
                if record_outer {
                    trace.outer_values.push(value(p, q)?);
                }
                Ok(true)
            }
            Scheme::Proposed => {
                for _ in 0..self.opts.max_outer {
                    *p = self.uplink(p, q, lambda, trace)?;
                    let r_u = value(p, q)?;
                    *q = self.downlink(p, q, lambda, trace)?;
                    let r_d = value(p, q)?;
                    let eps = r_d - r_u;
                    trace.eps_star.push(eps);
                    if record_outer {
                        trace.outer_values.push(r_d);
                    }
                    log::debug!("outer round: R_u = {r_u:.9}, R_d = {r_d:.9}, eps* = {eps:.3e}");
                    if eps.abs() <= self.opts.outer_tol {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }
}

fn start_point(cfg: &SystemConfig, budget: &PowerBudget, opts: &SolverOptions) -> Result<(UplinkPower, DownlinkPower)> {
    budget.validate(cfg)?;
    Ok((
        UplinkPower::from_cap(cfg, &budget.uplink),
        fixed_downlink(cfg, budget.downlink_total, opts.an_fraction)?,
    ))
}

/// Sum secrecy rate allocation for `scheme`, starting from full uplink power and the
/// fixed downlink split.
pub fn allocate_se(cfg: &SystemConfig, budget: &PowerBudget, scheme: Scheme, opts: &SolverOptions) -> Result<Allocation> {
    let (mut p, mut q) = start_point(cfg, budget, opts)?;
    let run = Run {
        cfg,
        cap: &budget.uplink,
        q_max: budget.downlink_total,
        opts,
    };
    let mut trace = SolverTrace::default();
    trace.converged = run.solve(scheme, 0.0, 0.0, &mut p, &mut q, &mut trace, true)?;
    let report = secrecy_report(cfg, &p, &q)?;
    Ok(Allocation {
        scheme,
        p,
        q,
        report,
        trace,
    })
}

/// Proposed SE allocation: alternating uplink/downlink DC programming.
pub fn maximize_se(cfg: &SystemConfig, budget: &PowerBudget, opts: &SolverOptions) -> Result<Allocation> {
    allocate_se(cfg, budget, Scheme::Proposed, opts)
}

/// Energy-efficient allocation for `scheme` by Dinkelbach iterations. Each parametric
/// subproblem is warm-started at the previous solution, so the subtractive objective
/// stays nonnegative and `lambda` never decreases.
pub fn allocate_ee(
    cfg: &SystemConfig,
    budget: &PowerBudget,
    p_f: f64,
    scheme: Scheme,
    opts: &SolverOptions,
) -> Result<Allocation> {
    if !(p_f > 0.0 && p_f.is_finite()) {
        return Err(Error::InvalidArgument(format!("circuit power must be positive, got {p_f}")));
    }
    let (mut p, mut q) = start_point(cfg, budget, opts)?;
    let run = Run {
        cfg,
        cap: &budget.uplink,
        q_max: budget.downlink_total,
        opts,
    };
    let mut trace = SolverTrace::default();
    let mut lambda = 0.0;
    trace.lambda_sequence.push(lambda);
    let mut converged = false;
    for _ in 0..opts.max_dinkelbach {
        run.solve(scheme, lambda, p_f, &mut p, &mut q, &mut trace, false)?;
        let se = secrecy_gap_sum(cfg, &p, &q)?;
        let power = total_power(&p, &q, p_f);
        let f = se - lambda * power;
        trace.subtractive_values.push(f);
        lambda = se / power;
        trace.outer_values.push(lambda);
        log::debug!("dinkelbach: F = {f:.3e}, lambda = {lambda:.9}");
        if f <= opts.dinkelbach_tol {
            converged = true;
            break;
        }
        trace.lambda_sequence.push(lambda);
    }
    trace.converged = converged;
    let report = secrecy_report(cfg, &p, &q)?;
    let ee = energy_efficiency(&report, &p, &q, p_f)?;
    Ok(Allocation {
        scheme,
        p,
        q,
        report: report.with_ee(ee),
        trace,
    })
}

/// Proposed EE allocation: Dinkelbach over the alternating SE machinery.
pub fn maximize_ee(cfg: &SystemConfig, budget: &PowerBudget, p_f: f64, opts: &SolverOptions) -> Result<Allocation> {
    allocate_ee(cfg, budget, p_f, Scheme::Proposed, opts)
}

/// Full uplink power and the 80/20 downlink split.
pub fn baseline_fixed(cfg: &SystemConfig, budget: &PowerBudget) -> Result<Allocation> {
    allocate_se(cfg, budget, Scheme::Fixed, &SolverOptions::default())
}

/// Full uplink power, one downlink DC loop.
pub fn baseline_downlink_se(cfg: &SystemConfig, budget: &PowerBudget, opts: &SolverOptions) -> Result<Allocation> {
    allocate_se(cfg, budget, Scheme::DownlinkOnly, opts)
}

/// Fixed downlink split, one uplink DC loop.
pub fn baseline_uplink_se(cfg: &SystemConfig, budget: &PowerBudget, opts: &SolverOptions) -> Result<Allocation> {
    allocate_se(cfg, budget, Scheme::UplinkOnly, opts)
}

/// TDMA comparison: each slot serves one user per cluster with the full budgets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TdmaAllocation {
    pub slots: Vec<Allocation>,
    /// Time-averaged sum secrecy rate.
    pub sum_secrecy: f64,
    /// Time-averaged secrecy rate over time-averaged consumed power.
    pub ee: Option<f64>,
}

fn slot_budget(budget: &PowerBudget, t: usize) -> PowerBudget {
    let uplink = match &budget.uplink {
        UplinkCap::Uniform(v) => UplinkCap::Uniform(*v),
        UplinkCap::PerUser(rows) => UplinkCap::PerUser(rows.iter().map(|r| vec![r[t]]).collect()),
    };
    PowerBudget {
        uplink,
        downlink_total: budget.downlink_total,
    }
}

/// Optimizes every TDMA slot of `cfg` with `scheme` and averages the slot rates.
/// With `p_f` given, slots are optimized for EE and the time-averaged EE is reported.
pub fn allocate_tdma(
    cfg: &SystemConfig,
    budget: &PowerBudget,
    scheme: Scheme,
    p_f: Option<f64>,
    opts: &SolverOptions,
) -> Result<TdmaAllocation> {
    let slot_cfgs = tdma_slots(cfg)?;
    let mut slots = Vec::with_capacity(slot_cfgs.len());
    for (t, c) in slot_cfgs.iter().enumerate() {
        let b = slot_budget(budget, t);
        let mut a = match p_f {
            Some(pf) => allocate_ee(c, &b, pf, scheme, opts)?,
            None => allocate_se(c, &b, scheme, opts)?,
        };
        let ee = a.report.ee;
        a.report = oma_report(c, &a.p, &a.q)?;
        a.report.ee = ee;
        slots.push(a);
    }
    let n = slots.len() as f64;
    let sum_secrecy = slots.iter().map(|s| s.report.sum_secrecy).sum::<f64>() / n;
    let ee = p_f.map(|pf| {
        let power = slots.iter().map(|s| total_power(&s.p, &s.q, pf)).sum::<f64>() / n;
        sum_secrecy / power
    });
    Ok(TdmaAllocation {
        slots,
        sum_secrecy,
        ee,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_cell(nt: usize, seed: u64) -> SystemConfig {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let betas = (0..4)
            .map(|_| {
                let mut c: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..100.0)).collect();
                c.sort_by(|a, b| b.total_cmp(a));
                c
            })
            .collect();
        SystemConfig::from_betas(nt, betas, 4, 300, 10.0).unwrap()
    }

    #[test]
    fn fixed_split_arithmetic() {
        let cfg = reference_cell(64, 1);
        let b = PowerBudget::uniform(1.0, 100.0);
        let a = baseline_fixed(&cfg, &b).unwrap();
        for m in 0..4 {
            assert!((a.q.an(m) - 5.0).abs() < 1e-12);
            for k in 0..3 {
                assert!((a.q.user(m, k) - 80.0 / 12.0).abs() < 1e-12);
                assert_eq!(a.p.get(m, k), 1.0);
            }
        }
        assert!((a.q.total() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn single_user_without_eavesdropper() {
        let cfg = SystemConfig::from_betas(16, vec![vec![5.0]], 1, 300, 0.0).unwrap();
        let b = PowerBudget::uniform(2.0, 10.0);
        let a = maximize_se(&cfg, &b, &SolverOptions::default()).unwrap();
        assert!((a.p.get(0, 0) - 2.0).abs() < 1e-6, "{:?}", a.p);
        assert!(a.q.an(0) < 1e-6, "{:?}", a.q);
        assert!((a.q.user(0, 0) - 10.0).abs() < 1e-6);
        // grid search over the user/AN split confirms the corner
        let best = (0..=1000)
            .map(|i| {
                let u = 10.0 * i as f64 / 1000.0;
                let q = DownlinkPower::new(&cfg, vec![vec![10.0 - u, u]]).unwrap();
                secrecy_report(&cfg, &a.p, &q).unwrap().sum_secrecy
            })
            .fold(f64::MIN, f64::max);
        assert!(a.report.sum_secrecy >= best - 1e-9);
    }

    #[test]
    fn trace_is_monotone_and_dominates_baselines() {
        let cfg = reference_cell(64, 2);
        let b = PowerBudget::uniform(1.0, 100.0);
        let opts = SolverOptions::default();
        let a = maximize_se(&cfg, &b, &opts).unwrap();
        for w in a.trace.outer_values.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        assert!(a.trace.steps.iter().all(|s| s.after >= s.before - 1e-9));
        let fixed = baseline_fixed(&cfg, &b).unwrap();
        let up = baseline_uplink_se(&cfg, &b, &opts).unwrap();
        assert!(up.report.sum_secrecy >= fixed.report.sum_secrecy - 1e-6);
        assert!(a.report.sum_secrecy >= fixed.report.sum_secrecy - 1e-6);
        assert_eq!(up.q, fixed.q);
    }

    #[test]
    fn dinkelbach_lambda_nondecreasing() {
        let cfg = reference_cell(32, 3);
        let b = PowerBudget::uniform(1.0, 100.0);
        let opts = SolverOptions::default();
        let ee = maximize_ee(&cfg, &b, 10f64.powf(-0.5), &opts).unwrap();
        assert!(ee.trace.converged);
        assert_eq!(ee.trace.lambda_sequence[0], 0.0);
        for w in ee.trace.lambda_sequence.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(ee.trace.subtractive_values.last().unwrap().abs() <= 1e-6);
        let se = maximize_se(&cfg, &b, &opts).unwrap();
        let se_ee = energy_efficiency(&se.report, &se.p, &se.q, 10f64.powf(-0.5)).unwrap();
        assert!(ee.report.ee.unwrap() >= se_ee - 1e-9);
    }

    #[test]
    fn rejects_bad_budgets() {
        let cfg = reference_cell(16, 4);
        assert!(maximize_se(&cfg, &PowerBudget::uniform(0.0, 1.0), &SolverOptions::default()).is_err());
        assert!(maximize_ee(&cfg, &PowerBudget::uniform(1.0, 1.0), 0.0, &SolverOptions::default()).is_err());
    }
}
