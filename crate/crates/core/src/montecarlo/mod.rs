//! Monte Carlo simulation of uplink training, MRT precoding with AN, and downlink
//! reception. Every closed-form expectation used by [`crate::rates`] has an empirical
//! counterpart here.
//!
//! Trials are split into fixed-size chunks. Trial `t` draws from its own ChaCha stream
//! `(seed, t)`, each chunk is reduced sequentially and the chunk partials are summed
//! in chunk order, so results are bit-identical for any rayon pool size.

mod channel;

pub use channel::{
    an_vector, complex_normal, complex_normal_vec, draw_realization, error_decomposition, inner,
    mmse_estimate, mrt_precoder, norm, norm_sqr, CVec, ChannelRealization, ClusterEstimates,
    DecompositionSample, EstimateSet,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{compute_rho, DownlinkPower, SystemConfig, UplinkPower};
use crate::rates::{chi_mean, RateReport};

/// Trials per deterministic reduction block.
pub const CHUNK: usize = 64;

/// RNG for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Running sums of a fixed-width vector of per-trial statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl SampleStats {
    fn new(width: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; width],
            sumsq: vec![0.0; width],
        }
    }

    fn push(&mut self, sample: &[f64]) {
        self.n += 1;
        for ((s, s2), x) in self.sum.iter_mut().zip(&mut self.sumsq).zip(sample) {
            *s += x;
            *s2 += x * x;
        }
    }

    fn merge(&mut self, other: &SampleStats) {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            *a += b;
        }
    }

    pub fn width(&self) -> usize {
        self.sum.len()
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n as f64
    }

    /// Standard error of the mean; `NaN` with fewer than two trials.
    pub fn std_err(&self, i: usize) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let mean = self.mean(i);
        let var = ((self.sumsq[i] - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Runs `n_trials` independent trials; `trial` fills one sample vector of length `width`.
pub fn run_trials<F>(n_trials: usize, seed: u64, width: usize, trial: F) -> Result<SampleStats>
where
    F: Fn(&mut ChaCha8Rng, &mut Vec<f64>) -> Result<()> + Sync,
{
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
    }
    let n_chunks = n_trials.div_ceil(CHUNK);
    let partials = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = SampleStats::new(width);
            let mut sample = Vec::with_capacity(width);
            for t in c * CHUNK..((c + 1) * CHUNK).min(n_trials) {
                let mut rng = trial_rng(seed, t as u64);
                sample.clear();
                trial(&mut rng, &mut sample)?;
                debug_assert_eq!(sample.len(), width);
                acc.push(&sample);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = SampleStats::new(width);
    for p in &partials {
        total.merge(p);
    }
    Ok(total)
}

/// One empirical statistic next to its closed-form expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub name: &'static str,
    pub cluster: usize,
    pub user: Option<usize>,
    /// Second cluster index for cross-cluster statistics.
    pub other: Option<usize>,
    pub closed_form: f64,
    pub mean: f64,
    pub std_err: f64,
}

impl MomentRow {
    /// `|mean - closed_form| / std_err`; `NaN` when the band is degenerate.
    pub fn z_score(&self) -> f64 {
        if self.std_err.is_nan() {
            return f64::NAN;
        }
        let gap = (self.mean - self.closed_form).abs();
        if self.std_err == 0.0 {
            return if gap == 0.0 { 0.0 } else { f64::INFINITY };
        }
        gap / self.std_err
    }

    pub fn within(&self, n_sigma: f64) -> bool {
        self.z_score() <= n_sigma
    }
}

struct RowSpec {
    name: &'static str,
    cluster: usize,
    user: Option<usize>,
    other: Option<usize>,
    closed_form: f64,
}

fn finish_rows(specs: Vec<RowSpec>, stats: &SampleStats) -> Vec<MomentRow> {
    specs
        .into_iter()
        .enumerate()
        .map(|(i, s)| MomentRow {
            name: s.name,
            cluster: s.cluster,
            user: s.user,
            other: s.other,
            closed_form: s.closed_form,
            mean: stats.mean(i),
            std_err: stats.std_err(i),
        })
        .collect()
}

/// Empirical moments behind `kappa`, `I1..I3` and the eavesdropper terms.
///
/// Rows:
/// - `hhat_norm`: `E||h_hat||` (unit-variance estimate) vs `Gamma(N_t+1/2)/Gamma(N_t)`
/// - `hhat_mmse_energy`: `E||h_hat||^2` of the MMSE estimate vs `N_t S/(1+S)`
/// - `g_w`, `g_z`: `E|g^H w_m|^2`, `E|g^H z_m|^2` vs 1
/// - `h_w_mean`: `E[h^H w_m]` vs `sqrt(rho) Gamma(N_t+1/2)/Gamma(N_t)`
/// - `h_w_energy`: `E|h^H w_m|^2` vs `rho N_t + 1 - rho`
/// - `h_z_energy`: `E|h^H z_m|^2` vs `1 - rho`
/// - `h_wj_energy`, `h_zj_energy`: other-cluster beams, vs 1
/// - `im2`, `im3`: the interference blocks evaluated per draw vs their closed forms
pub fn moment_suite(
    cfg: &SystemConfig,
    p: &UplinkPower,
    q: &DownlinkPower,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<MomentRow>> {
    let rho = compute_rho(cfg, p);
    let nt = cfg.n_antennas() as f64;
    let chi = chi_mean(cfg.n_antennas());
    let n_clusters = cfg.n_clusters();

    let mut specs = Vec::new();
    for m in 0..n_clusters {
        let s = crate::model::cluster_pilot_snr(cfg, p.cluster(m), m);
        let row = |name, closed_form| RowSpec {
            name,
            cluster: m,
            user: None,
            other: None,
            closed_form,
        };
        specs.push(row("hhat_norm", chi));
        specs.push(row("hhat_mmse_energy", nt * s / (1.0 + s)));
        specs.push(row("g_w", 1.0));
        specs.push(row("g_z", 1.0));
    }
    for (m, k) in cfg.users() {
        let r = rho.get(m, k);
        let terms = crate::rates::sinr_terms(cfg, &rho, q, m, k)?;
        let row = |name, closed_form| RowSpec {
            name,
            cluster: m,
            user: Some(k),
            other: None,
            closed_form,
        };
        specs.push(row("h_w_mean", r.sqrt() * chi));
        specs.push(row("h_w_energy", r * nt + 1.0 - r));
        specs.push(row("h_z_energy", 1.0 - r));
        specs.push(row("im2", terms.im2));
        specs.push(row("im3", terms.im3));
        for j in (0..n_clusters).filter(|j| *j != m) {
            for name in ["h_wj_energy", "h_zj_energy"] {
                specs.push(RowSpec {
                    name,
                    cluster: m,
                    user: Some(k),
                    other: Some(j),
                    closed_form: 1.0,
                });
            }
        }
    }

    let stats = run_trials(n_trials, seed, specs.len(), |rng, out| {
        let real = draw_realization(cfg, rng);
        let set = EstimateSet::build(cfg, p, &real, rng)?;
        for m in 0..n_clusters {
            out.push(norm(&set.estimates.unit_variance(m)));
            out.push(norm_sqr(&set.estimates.h_hat[m]));
            out.push(inner(&real.g, &set.w[m]).norm_sqr());
            out.push(inner(&real.g, &set.z[m]).norm_sqr());
        }
        for (m, k) in cfg.users() {
            let h = &real.h[m][k];
            let beta = cfg.beta(m, k);
            let hw: Vec<f64> = set.w.iter().map(|w| inner(h, w).norm_sqr()).collect();
            let hz: Vec<f64> = set.z.iter().map(|z| inner(h, z).norm_sqr()).collect();
            out.push(inner(h, &set.w[m]).re);
            out.push(hw[m]);
            out.push(hz[m]);
            let stronger: f64 = q.row(m)[1..=k].iter().sum();
            out.push(beta * (stronger * hw[m] + q.an(m) * hz[m]));
            let mut inter = 0.0;
            for j in (0..n_clusters).filter(|j| *j != m) {
                let data: f64 = q.row(j)[1..].iter().sum();
                inter += data * hw[j] + q.an(j) * hz[j];
            }
            out.push(beta * inter);
            for j in (0..n_clusters).filter(|j| *j != m) {
                out.push(hw[j]);
                out.push(hz[j]);
            }
        }
        Ok(())
    })?;
    Ok(finish_rows(specs, &stats))
}

/// Empirical check of the estimate/error split for every user.
///
/// Rows `correlation` (vs `sqrt(rho)`), `error_cross` (vs 0) and `error_energy` (vs 1).
pub fn error_decomposition_check(
    cfg: &SystemConfig,
    p: &UplinkPower,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<MomentRow>> {
    let rho = compute_rho(cfg, p);
    let mut specs = Vec::new();
    for (m, k) in cfg.users() {
        for (name, closed_form) in [
            ("correlation", rho.get(m, k).sqrt()),
            ("error_cross", 0.0),
            ("error_energy", 1.0),
        ] {
            specs.push(RowSpec {
                name,
                cluster: m,
                user: Some(k),
                other: None,
                closed_form,
            });
        }
    }
    let stats = run_trials(n_trials, seed, specs.len(), |rng, out| {
        let real = draw_realization(cfg, rng);
        let est = mmse_estimate(cfg, p, &real, rng);
        for (m, k) in cfg.users() {
            let s = error_decomposition(&real, &est, &rho, m, k);
            out.extend([s.correlation, s.error_cross, s.error_energy]);
        }
        Ok(())
    })?;
    Ok(finish_rows(specs, &stats))
}

/// Empirical ergodic rates from instantaneous SINRs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicEstimate {
    /// Means of the instantaneous rates; secrecy is `[E R - E R^e]^+`.
    pub report: RateReport,
    pub legit_se: Vec<Vec<f64>>,
    pub eaves_se: Vec<Vec<f64>>,
    /// Standard error of the per-draw difference `R - R^e`.
    pub gap_se: Vec<Vec<f64>>,
    /// `E[[R - R^e]^+]`, the quantity the closed form approximates with the clamp outside.
    pub clamped_secrecy: Vec<Vec<f64>>,
    pub n_trials: usize,
}

/// Averages `log2(1 + SINR)` over draws for every user and for the eavesdropper.
///
/// Users know their realized effective gains and cancel the weaker users' signals
/// perfectly, so residual intra-cluster interference comes only from users `i < k`.
/// The eavesdropper treats every other stream in the cell as interference.
pub fn ergodic_rate_oracle(
    cfg: &SystemConfig,
    p: &UplinkPower,
    q: &DownlinkPower,
    n_trials: usize,
    seed: u64,
) -> Result<ErgodicEstimate> {
    let n_users = cfg.n_users();
    let n_clusters = cfg.n_clusters();
    let be = cfg.eav_gain();
    let data_power: Vec<f64> = (0..n_clusters).map(|m| q.row(m)[1..].iter().sum()).collect();

    let stats = run_trials(n_trials, seed, 4 * n_users, |rng, out| {
        let real = draw_realization(cfg, rng);
        let set = EstimateSet::build(cfg, p, &real, rng)?;
        let gw: Vec<f64> = set.w.iter().map(|w| inner(&real.g, w).norm_sqr()).collect();
        let gz: Vec<f64> = set.z.iter().map(|z| inner(&real.g, z).norm_sqr()).collect();
        for (m, k) in cfg.users() {
            let h = &real.h[m][k];
            let beta = cfg.beta(m, k);
            let qk = q.user(m, k);
            let hw: Vec<f64> = set.w.iter().map(|w| inner(h, w).norm_sqr()).collect();
            let hz: Vec<f64> = set.z.iter().map(|z| inner(h, z).norm_sqr()).collect();

            let stronger: f64 = q.row(m)[1..=k].iter().sum();
            let mut interference = stronger * hw[m] + q.an(m) * hz[m];
            let mut eaves_interference = (data_power[m] - qk) * gw[m] + q.an(m) * gz[m];
            for j in (0..n_clusters).filter(|j| *j != m) {
                interference += data_power[j] * hw[j] + q.an(j) * hz[j];
                eaves_interference += data_power[j] * gw[j] + q.an(j) * gz[j];
            }
            let sinr = qk * beta * hw[m] / (beta * interference + 1.0);
            let sinr_e = qk * be * gw[m] / (be * eaves_interference + 1.0);
            let r = sinr.ln_1p() / std::f64::consts::LN_2;
            let re = sinr_e.ln_1p() / std::f64::consts::LN_2;
            out.extend([r, re, r - re, (r - re).max(0.0)]);
        }
        Ok(())
    })?;

    let pre = cfg.prefactor();
    let shape = |offset: usize, f: &dyn Fn(usize) -> f64| -> Vec<Vec<f64>> {
        let mut idx = 0;
        cfg.clusters()
            .iter()
            .map(|c| {
                (0..c.len())
                    .map(|_| {
                        let v = pre * f(4 * idx + offset);
                        idx += 1;
                        v
                    })
                    .collect()
            })
            .collect()
    };
    let mean = |i| stats.mean(i);
    let se = |i| stats.std_err(i);
    Ok(ErgodicEstimate {
        report: RateReport::from_rates(shape(0, &mean), shape(1, &mean)),
        legit_se: shape(0, &se),
        eaves_se: shape(1, &se),
        gap_se: shape(2, &se),
        clamped_secrecy: shape(3, &mean),
        n_trials,
    })
}
