//! Uplink and downlink objectives written as sums of `log2(affine)` terms.
//!
//! With the other link's powers held fixed, each user's rate is a difference of two
//! logarithms of affine functions, which is what makes both subproblems DC.

use serde::Serialize;

use crate::error::Result;
use crate::kernel::ConcaveObjective;
use crate::model::{DownlinkPower, EstimationQuality, SystemConfig, UplinkPower};
use crate::rates::other_cluster_power;

const INV_LN2: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, Clone, PartialEq)]
struct LogTerm {
    weight: f64,
    /// Sparse coefficients `(index, c)`.
    coeffs: Vec<(usize, f64)>,
    constant: f64,
}

impl LogTerm {
    fn arg(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|(i, c)| c * x[*i]).sum::<f64>()
    }
}

/// `sum_t w_t log2(c_t . x + d_t) + l . x + offset`.
///
/// Terms with positive weight form the concave part; negative-weight terms are the
/// subtracted concave part that DC programming linearizes.
#[derive(Debug, Clone, PartialEq)]
pub struct LogAffineObjective {
    dim: usize,
    terms: Vec<LogTerm>,
    linear: Vec<f64>,
    offset: f64,
}

impl LogAffineObjective {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
            linear: vec![0.0; dim],
            offset: 0.0,
        }
    }

    fn push(&mut self, weight: f64, coeffs: Vec<(usize, f64)>, constant: f64) {
        self.terms.push(LogTerm {
            weight,
            coeffs,
            constant,
        });
    }

    /// Adds `-lambda * sum x`.
    pub fn with_penalty(mut self, lambda: f64) -> Self {
        for l in &mut self.linear {
            *l -= lambda;
        }
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let logs: f64 = self
            .terms
            .iter()
            .map(|t| t.weight * t.arg(x).log2())
            .sum();
        logs + dot(&self.linear, x) + self.offset
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.linear.clone();
        for t in &self.terms {
            let s = t.weight * INV_LN2 / t.arg(x);
            for (i, c) in &t.coeffs {
                g[*i] += s * c;
            }
        }
        g
    }

    /// Concave minorant that touches the objective at `x_prev`: the subtracted
    /// logarithms are replaced by their tangent planes.
    pub fn surrogate_at(&self, x_prev: &[f64]) -> LogAffineObjective {
        let mut out = LogAffineObjective::new(self.dim);
        out.linear = self.linear.clone();
        out.offset = self.offset;
        for t in &self.terms {
            if t.weight >= 0.0 {
                out.terms.push(t.clone());
                continue;
            }
            let a = t.arg(x_prev);
            out.offset += t.weight * a.log2();
            let s = t.weight * INV_LN2 / a;
            for (i, c) in &t.coeffs {
                out.linear[*i] += s * c;
                out.offset -= s * c * x_prev[*i];
            }
        }
        out
    }

    /// Keeps the terms that only touch indices in `range` and renumbers them from zero.
    pub fn restrict(&self, range: std::ops::Range<usize>) -> LogAffineObjective {
        let mut out = LogAffineObjective::new(range.len());
        out.linear = self.linear[range.clone()].to_vec();
        for t in &self.terms {
            if t.coeffs.iter().all(|(i, _)| range.contains(i)) {
                let coeffs = t.coeffs.iter().map(|(i, c)| (i - range.start, *c)).collect();
                out.push(t.weight, coeffs, t.constant);
            }
        }
        out
    }

    /// DC decomposition `self = concave - subtracted`: positive-weight log terms with the
    /// linear part, and the negated negative-weight terms. Both parts are concave.
    pub fn split(&self) -> (LogAffineObjective, LogAffineObjective) {
        let mut concave = LogAffineObjective::new(self.dim);
        let mut subtracted = LogAffineObjective::new(self.dim);
        concave.linear = self.linear.clone();
        concave.offset = self.offset;
        for t in &self.terms {
            if t.weight >= 0.0 {
                concave.push(t.weight, t.coeffs.clone(), t.constant);
            } else {
                subtracted.push(-t.weight, t.coeffs.clone(), t.constant);
            }
        }
        (concave, subtracted)
    }

    /// Smallest log argument at `x`.
    pub fn min_arg(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.arg(x))
            .fold(f64::INFINITY, f64::min)
    }
}

impl ConcaveObjective for LogAffineObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }

    fn domain_margin(&self, x: &[f64]) -> f64 {
        self.min_arg(x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uplink DC coefficients of user `(m, k)` for fixed downlink powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UplinkCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

pub fn uplink_coefficients(cfg: &SystemConfig, q: &DownlinkPower, m: usize, k: usize) -> UplinkCoefficients {
    let beta = cfg.beta(m, k);
    let nt = cfg.n_antennas() as f64;
    let qk = q.user(m, k);
    let stronger: f64 = q.row(m)[1..=k].iter().sum();
    UplinkCoefficients {
        a1: qk * beta * nt,
        a2: beta * ((nt - 1.0) * stronger - q.an(m) - qk),
        a3: beta * (qk + stronger + q.an(m)) + beta * other_cluster_power(q, m) + 1.0,
    }
}

/// Downlink DC coefficients of user `(m, k)` for fixed estimation quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DownlinkCoefficients {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

pub fn downlink_coefficients(
    cfg: &SystemConfig,
    rho: &EstimationQuality,
    m: usize,
    k: usize,
) -> DownlinkCoefficients {
    let beta = cfg.beta(m, k);
    let nt = cfg.n_antennas() as f64;
    let r = rho.get(m, k);
    DownlinkCoefficients {
        b1: r * beta * nt,
        b2: beta * (1.0 - r),
        b3: beta * (r * nt + 1.0 - r),
    }
}

fn offsets(cfg: &SystemConfig, extra: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(cfg.n_clusters());
    let mut acc = 0;
    for c in cfg.clusters() {
        out.push(acc);
        acc += c.len() + extra;
    }
    out
}

/// Legitimate sum rate as a function of the flat uplink powers, `sum pre (log2 f1 - log2 f2)`.
///
/// `f1 = (a1 + a2) beta tau P_k + a3 tau sum_i beta_i P_i + a3` and `f2` is the same
/// without `a1`; `f2` equals `(I1 + I2 + I3 + 1)(1 + tau sum beta P)`.
pub fn uplink_problem(cfg: &SystemConfig, q: &DownlinkPower) -> LogAffineObjective {
    let tau = cfg.pilot_len() as f64;
    let pre = cfg.prefactor();
    let off = offsets(cfg, 0);
    let mut obj = LogAffineObjective::new(cfg.n_users());
    for (m, k) in cfg.users() {
        let UplinkCoefficients { a1, a2, a3 } = uplink_coefficients(cfg, q, m, k);
        let beta = cfg.beta(m, k);
        let base: Vec<(usize, f64)> = cfg.clusters()[m]
            .betas
            .iter()
            .enumerate()
            .map(|(i, b)| (off[m] + i, a3 * tau * b))
            .collect();
        let mut c1 = base.clone();
        let mut c2 = base;
        c1[k].1 += (a1 + a2) * beta * tau;
        c2[k].1 += a2 * beta * tau;
        obj.push(pre, c1, a3);
        obj.push(-pre, c2, a3);
    }
    obj
}

/// Secrecy-gap sum as a function of the flat downlink powers,
/// `sum pre (g1 - g2 + g3 - g4)`.
pub fn downlink_problem(cfg: &SystemConfig, rho: &EstimationQuality) -> LogAffineObjective {
    let pre = cfg.prefactor();
    let be = cfg.eav_gain();
    let off = offsets(cfg, 1);
    let dim = off.last().unwrap() + cfg.cluster_size(cfg.n_clusters() - 1) + 1;
    let mut obj = LogAffineObjective::new(dim);
    for (m, k) in cfg.users() {
        let DownlinkCoefficients { b1, b2, b3 } = downlink_coefficients(cfg, rho, m, k);
        let beta = cfg.beta(m, k);
        let own = off[m];
        let mut legit = Vec::new();
        for (j, c) in cfg.clusters().iter().enumerate() {
            if j == m {
                legit.push((own, b2));
                for i in 0..k {
                    legit.push((own + 1 + i, b3));
                }
                legit.push((own + 1 + k, b1 + b2));
            } else {
                legit.extend((0..=c.len()).map(|i| (off[j] + i, beta)));
            }
        }
        let mut without_signal = legit.clone();
        let pos = without_signal.iter().position(|(i, _)| *i == own + 1 + k).unwrap();
        without_signal[pos].1 = b2;
        obj.push(pre, legit, 1.0);
        obj.push(-pre, without_signal, 1.0);

        if be > 0.0 {
            let all: Vec<(usize, f64)> = (0..dim).map(|i| (i, be)).collect();
            let rest: Vec<(usize, f64)> = all.iter().copied().filter(|(i, _)| *i != own + 1 + k).collect();
            obj.push(pre, rest, 1.0);
            obj.push(-pre, all, 1.0);
        }
    }
    obj
}

/// Value and gradient of the uplink objective at `p`.
pub fn uplink_objective(cfg: &SystemConfig, q: &DownlinkPower, p: &UplinkPower) -> Result<(f64, Vec<f64>)> {
    let obj = uplink_problem(cfg, q);
    let x = p.to_flat();
    check_domain(&obj, &x)?;
    Ok(obj.value_and_gradient(&x))
}

/// Value and gradient of the downlink objective at `q`.
pub fn downlink_objective(
    cfg: &SystemConfig,
    rho: &EstimationQuality,
    q: &DownlinkPower,
) -> Result<(f64, Vec<f64>)> {
    let obj = downlink_problem(cfg, rho);
    let x = q.to_flat();
    check_domain(&obj, &x)?;
    Ok(obj.value_and_gradient(&x))
}

fn check_domain(obj: &LogAffineObjective, x: &[f64]) -> Result<()> {
    if obj.min_arg(x) > 0.0 {
        Ok(())
    } else {
        Err(crate::error::Error::NonFinite { point: x.to_vec() })
    }
}
