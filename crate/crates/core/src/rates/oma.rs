//! One-user-per-cluster (OMA) rates and a TDMA split of a NOMA layout.

use crate::error::{Error, Result};
use crate::model::{DownlinkPower, SystemConfig, UplinkPower};

use super::RateReport;

fn rate(pre: f64, sinr: f64) -> f64 {
    pre * sinr.ln_1p() / std::f64::consts::LN_2
}

/// OMA rates for a layout with exactly one user per cluster.
///
/// `q` rows are `[Q_{m,0}, Q_m]`. Evaluated from the OMA expressions directly, not
/// through the NOMA path, so it doubles as an independent check of the K = 1 reduction.
/// Sums are taken in the same order as the NOMA path, so the two agree bit for bit.
pub fn oma_report(cfg: &SystemConfig, p: &UplinkPower, q: &DownlinkPower) -> Result<RateReport> {
    if cfg.clusters().iter().any(|c| c.len() != 1) {
        return Err(Error::InvalidArgument(
            "OMA layout requires exactly one user per cluster".into(),
        ));
    }
    let n = cfg.n_clusters();
    let tau = cfg.pilot_len() as f64;
    let nt = cfg.n_antennas() as f64;
    let be = cfg.eav_gain();
    let pre = cfg.prefactor();
    let data: Vec<f64> = (0..n).map(|m| q.user(m, 0)).collect();
    let an: Vec<f64> = (0..n).map(|m| q.an(m)).collect();

    let mut legit = Vec::with_capacity(n);
    let mut eaves = Vec::with_capacity(n);
    for m in 0..n {
        let beta = cfg.beta(m, 0);
        let snr = p.get(m, 0) * beta * tau;
        let rho = snr / (snr + 1.0);
        let qm = data[m];
        // data and AN of every other cluster
        let other: f64 = (0..n).filter(|j| *j != m).map(|j| an[j] + data[j]).sum();

        let kappa = qm * beta * rho * nt;
        let self_leak = qm * beta * (1.0 - rho);
        let an_leak = beta * (an[m] * (1.0 - rho));
        let inter = beta * other;
        legit.push(vec![rate(pre, kappa / (self_leak + an_leak + inter + 1.0))]);

        let e = qm * be / (be * an[m] + be * other + 1.0);
        eaves.push(vec![rate(pre, e)]);
    }
    Ok(RateReport::from_rates(legit, eaves))
}

/// Splits a layout with `K` users in every cluster into `K` TDMA slots; slot `t`
/// serves the `t`-th user of each cluster alone. Pilot and coherence lengths carry over.
pub fn tdma_slots(cfg: &SystemConfig) -> Result<Vec<SystemConfig>> {
    let k = cfg.cluster_size(0);
    if cfg.clusters().iter().any(|c| c.len() != k) {
        return Err(Error::InvalidArgument(
            "TDMA split needs the same number of users in every cluster".into(),
        ));
    }
    (0..k)
        .map(|t| {
            let betas = cfg.clusters().iter().map(|c| vec![c.betas[t]]).collect();
            SystemConfig::from_betas(
                cfg.n_antennas(),
                betas,
                cfg.pilot_len(),
                cfg.coherence_len(),
                cfg.eav_gain(),
            )
        })
        .collect()
}

/// Time-averaged sum secrecy rate over equally long TDMA slots.
pub fn tdma_sum_secrecy(slot_reports: &[RateReport]) -> f64 {
    if slot_reports.is_empty() {
        return 0.0;
    }
    slot_reports.iter().map(|r| r.sum_secrecy).sum::<f64>() / slot_reports.len() as f64
}
