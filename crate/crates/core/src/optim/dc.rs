//! Single DC iterations and the inner loops built from them.

use serde::Serialize;

use crate::error::Result;
use crate::kernel::{maximize, ConcaveProblem, FeasibleSet, KernelOptions};
use crate::model::{DownlinkPower, EstimationQuality, SystemConfig, UplinkCap, UplinkPower};

use super::objective::{downlink_problem, uplink_problem, LogAffineObjective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Uplink,
    Downlink,
}

/// One DC iteration: the surrogate built at `before`'s point was maximized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcStep {
    pub phase: Phase,
    /// True (penalized) phase objective at the previous point.
    pub before: f64,
    /// True objective at the returned point; equals `before` when the step is rejected.
    pub after: f64,
    /// `false` when the surrogate maximizer lowered the true objective and was discarded.
    pub accepted: bool,
    pub kernel_iterations: usize,
    pub kernel_converged: bool,
}

fn dc_iterate(
    obj: &LogAffineObjective,
    set: FeasibleSet,
    prev: &[f64],
    phase: Phase,
    kernel: &KernelOptions,
) -> Result<(Vec<f64>, DcStep)> {
    let before = obj.value(prev);
    let surrogate = obj.surrogate_at(prev);
    let problem = ConcaveProblem {
        objective: &surrogate,
        feasible_set: set,
    };
    let res = maximize(&problem, prev, kernel)?;
    let after = obj.value(&res.point);
    let accepted = after >= before;
    let step = DcStep {
        phase,
        before,
        after: if accepted { after } else { before },
        accepted,
        kernel_iterations: res.iterations,
        kernel_converged: res.converged,
    };
    Ok((if accepted { res.point } else { prev.to_vec() }, step))
}

fn uplink_box(cfg: &SystemConfig, cap: &UplinkCap) -> FeasibleSet {
    FeasibleSet::Box {
        lower: vec![0.0; cfg.n_users()],
        upper: cap.to_flat(cfg),
    }
}

/// One uplink DC iteration with downlink powers `q` fixed and penalty `-lambda sum P`.
pub fn uplink_dc_step(
    cfg: &SystemConfig,
    q: &DownlinkPower,
    p_prev: &UplinkPower,
    cap: &UplinkCap,
    lambda: f64,
    kernel: &KernelOptions,
) -> Result<(UplinkPower, DcStep)> {
    let obj = uplink_problem(cfg, q).with_penalty(lambda);
    let (x, step) = dc_iterate(&obj, uplink_box(cfg, cap), &p_prev.to_flat(), Phase::Uplink, kernel)?;
    Ok((UplinkPower::from_flat(cfg, &x), step))
}

/// The same iteration solved cluster by cluster. The uplink objective separates over
/// clusters because each user's estimate depends only on its own cluster's pilots.
pub fn uplink_dc_step_per_cluster(
    cfg: &SystemConfig,
    q: &DownlinkPower,
    p_prev: &UplinkPower,
    cap: &UplinkCap,
    lambda: f64,
    kernel: &KernelOptions,
) -> Result<(UplinkPower, Vec<DcStep>)> {
    let full = uplink_problem(cfg, q).with_penalty(lambda);
    let mut p = p_prev.clone();
    let mut steps = Vec::with_capacity(cfg.n_clusters());
    let mut start = 0;
    for m in 0..cfg.n_clusters() {
        let k = cfg.cluster_size(m);
        let obj = full.restrict(start..start + k);
        let set = FeasibleSet::Box {
            lower: vec![0.0; k],
            upper: cap.cluster(cfg, m),
        };
        let (x, step) = dc_iterate(&obj, set, p_prev.cluster(m), Phase::Uplink, kernel)?;
        p = p.with_cluster(m, &x);
        steps.push(step);
        start += k;
    }
    Ok((p, steps))
}

/// One downlink DC iteration with estimation quality fixed and penalty `-lambda sum Q`.
pub fn downlink_dc_step(
    cfg: &SystemConfig,
    rho: &EstimationQuality,
    q_prev: &DownlinkPower,
    q_max: f64,
    lambda: f64,
    kernel: &KernelOptions,
) -> Result<(DownlinkPower, DcStep)> {
    let obj = downlink_problem(cfg, rho).with_penalty(lambda);
    let set = FeasibleSet::CappedSimplex { cap: q_max };
    let (x, step) = dc_iterate(&obj, set, &q_prev.to_flat(), Phase::Downlink, kernel)?;
    Ok((DownlinkPower::from_flat(cfg, &x), step))
}

/// Stopping rule shared by both inner loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    /// Stop once the true objective improves by less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 50,
        }
    }
}

/// Repeats uplink DC steps until the improvement drops below `inner.tol`.
pub fn uplink_dc_loop(
    cfg: &SystemConfig,
    q: &DownlinkPower,
    p0: &UplinkPower,
    cap: &UplinkCap,
    lambda: f64,
    inner: &InnerOptions,
    kernel: &KernelOptions,
) -> Result<(UplinkPower, Vec<DcStep>)> {
    let mut p = p0.clone();
    let mut steps = Vec::new();
    for _ in 0..inner.max_iter {
        let (next, step) = uplink_dc_step(cfg, q, &p, cap, lambda, kernel)?;
        let done = !step.accepted || step.after - step.before < inner.tol;
        p = next;
        steps.push(step);
        if done {
            break;
        }
    }
    Ok((p, steps))
}

/// Repeats downlink DC steps until the improvement drops below `inner.tol`.
pub fn downlink_dc_loop(
    cfg: &SystemConfig,
    rho: &EstimationQuality,
    q0: &DownlinkPower,
    q_max: f64,
    lambda: f64,
    inner: &InnerOptions,
    kernel: &KernelOptions,
) -> Result<(DownlinkPower, Vec<DcStep>)> {
    let mut q = q0.clone();
    let mut steps = Vec::new();
    for _ in 0..inner.max_iter {
        let (next, step) = downlink_dc_step(cfg, rho, &q, q_max, lambda, kernel)?;
        let done = !step.accepted || step.after - step.before < inner.tol;
        q = next;
        steps.push(step);
        if done {
            break;
        }
    }
    Ok((q, steps))
}
