//! Closed-form ergodic rates.
//!
//! The legitimate rate of user `(m, k)` is `(1 - tau/T) log2(1 + kappa / (I1 + I2 + I3 + 1))`
//! where `kappa` is the coherent desired-signal power, `I1` the leakage caused by channel
//! estimation error, `I2` the residual intra-cluster interference after SIC plus AN
//! leakage, and `I3` the power arriving from other clusters. The eavesdropper sees no
//! array gain, so its rate does not depend on the antenna count or on `rho`.

mod asymptotic;
mod oma;

pub use asymptotic::{
    asymptotic_high_power, asymptotic_large_nt, large_nt_secrecy_limit, HighPowerLimit,
    LargeAntennaLimit, PowerFractions,
};
pub use oma::{oma_report, tdma_slots, tdma_sum_secrecy};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{compute_rho, DownlinkPower, EstimationQuality, SystemConfig, UplinkPower};

/// How the coherent gain `|E[h^H w]|^2 / rho` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum KappaModel {
    /// Large-array form `N_t`, used by every closed form and solver.
    #[default]
    Asymptotic,
    /// Exact `Gamma(N_t + 1/2)^2 / Gamma(N_t)^2`; leakage `I1` is adjusted to match.
    ExactGamma,
}

/// `Gamma(n + 1/2) / Gamma(n)`, the mean of a unit-variance complex Gaussian vector norm.
///
/// Computed by the recursion `r(n + 1) = r(n) (n + 1/2) / n` from `r(1) = sqrt(pi)/2`.
pub fn chi_mean(n: usize) -> f64 {
    assert!(n >= 1, "chi_mean needs n >= 1");
    let mut r = std::f64::consts::PI.sqrt() / 2.0;
    for i in 1..n {
        let i = i as f64;
        r *= (i + 0.5) / i;
    }
    r
}

/// Desired-signal power and the three interference blocks of one user's SINR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrDecomposition {
    pub kappa: f64,
    /// Desired-signal leakage from estimation error.
    pub im1: f64,
    /// Intra-cluster interference after SIC and AN leakage.
    pub im2: f64,
    /// Inter-cluster interference and AN.
    pub im3: f64,
}

impl SinrDecomposition {
    pub fn sinr(&self) -> f64 {
        self.kappa / (self.im1 + self.im2 + self.im3 + 1.0)
    }
}

/// Total downlink power of every cluster except `m`, AN included.
pub(crate) fn other_cluster_power(q: &DownlinkPower, m: usize) -> f64 {
    q.rows()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != m)
        .map(|(_, r)| r.iter().sum::<f64>())
        .sum()
}

/// Sum of the downlink powers of the users stronger than `k` in cluster `m`.
pub(crate) fn stronger_user_power(q: &DownlinkPower, m: usize, k: usize) -> f64 {
    q.row(m)[1..=k].iter().sum()
}

pub fn sinr_terms(
    cfg: &SystemConfig,
    rho: &EstimationQuality,
    q: &DownlinkPower,
    m: usize,
    k: usize,
) -> Result<SinrDecomposition> {
    sinr_terms_with(cfg, rho, q, m, k, KappaModel::Asymptotic)
}

pub fn sinr_terms_with(
    cfg: &SystemConfig,
    rho: &EstimationQuality,
    q: &DownlinkPower,
    m: usize,
    k: usize,
    model: KappaModel,
) -> Result<SinrDecomposition> {
    cfg.check_indices(m, k)?;
    let nt = cfg.n_antennas() as f64;
    let beta = cfg.beta(m, k);
    let r = rho.get(m, k);
    let qk = q.user(m, k);
    let (gain, im1) = match model {
        KappaModel::Asymptotic => (nt, qk * beta * (1.0 - r)),
        KappaModel::ExactGamma => {
            let g = chi_mean(cfg.n_antennas()).powi(2);
            (g, qk * beta * (r * (nt - g) + 1.0 - r))
        }
    };
    let kappa = qk * beta * r * gain;
    let im2 = beta * (stronger_user_power(q, m, k) * (r * nt + 1.0 - r) + q.an(m) * (1.0 - r));
    let im3 = beta * other_cluster_power(q, m);
    Ok(SinrDecomposition {
        kappa,
        im1,
        im2,
        im3,
    })
}

pub fn legit_rate(
    cfg: &SystemConfig,
    rho: &EstimationQuality,
    q: &DownlinkPower,
    m: usize,
    k: usize,
) -> Result<f64> {
    let terms = sinr_terms(cfg, rho, q, m, k)?;
    Ok(cfg.prefactor() * terms.sinr().ln_1p() / std::f64::consts::LN_2)
}

/// Eavesdropper SINR against user `(m, k)`; every other stream in the cell interferes.
pub fn eaves_sinr(cfg: &SystemConfig, q: &DownlinkPower, m: usize, k: usize) -> Result<f64> {
    cfg.check_indices(m, k)?;
    let be = cfg.eav_gain();
    let qk = q.user(m, k);
    let own_cluster_rest: f64 = q
        .row(m)
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k + 1)
        .map(|(_, v)| v)
        .sum();
    Ok(qk * be / (be * own_cluster_rest + be * other_cluster_power(q, m) + 1.0))
}

pub fn eaves_rate(cfg: &SystemConfig, q: &DownlinkPower, m: usize, k: usize) -> Result<f64> {
    Ok(cfg.prefactor() * eaves_sinr(cfg, q, m, k)?.ln_1p() / std::f64::consts::LN_2)
}

/// Per-user legitimate, eavesdropping and secrecy rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub legit: Vec<Vec<f64>>,
    pub eaves: Vec<Vec<f64>>,
    pub secrecy: Vec<Vec<f64>>,
    pub sum_secrecy: f64,
    pub ee: Option<f64>,
}

impl RateReport {
    /// Clamps `legit - eaves` at zero per user and sums.
    pub fn from_rates(legit: Vec<Vec<f64>>, eaves: Vec<Vec<f64>>) -> Self {
        let secrecy: Vec<Vec<f64>> = legit
            .iter()
            .zip(&eaves)
            .map(|(l, e)| l.iter().zip(e).map(|(a, b)| (a - b).max(0.0)).collect())
            .collect();
        let sum_secrecy = secrecy.iter().flatten().sum();
        Self {
            legit,
            eaves,
            secrecy,
            sum_secrecy,
            ee: None,
        }
    }

    pub fn with_ee(mut self, ee: f64) -> Self {
        self.ee = Some(ee);
        self
    }

    pub fn n_users(&self) -> usize {
        self.secrecy.iter().map(Vec::len).sum()
    }

    pub fn mean_secrecy(&self) -> f64 {
        self.sum_secrecy / self.n_users() as f64
    }
}

pub fn secrecy_report_with_rho(
    cfg: &SystemConfig,
    rho: &EstimationQuality,
    q: &DownlinkPower,
) -> Result<RateReport> {
    let mut legit = Vec::with_capacity(cfg.n_clusters());
    let mut eaves = Vec::with_capacity(cfg.n_clusters());
    for (m, c) in cfg.clusters().iter().enumerate() {
        let mut l = Vec::with_capacity(c.len());
        let mut e = Vec::with_capacity(c.len());
        for k in 0..c.len() {
            l.push(legit_rate(cfg, rho, q, m, k)?);
            e.push(eaves_rate(cfg, q, m, k)?);
        }
        legit.push(l);
        eaves.push(e);
    }
    Ok(RateReport::from_rates(legit, eaves))
}

pub fn secrecy_report(cfg: &SystemConfig, p: &UplinkPower, q: &DownlinkPower) -> Result<RateReport> {
    secrecy_report_with_rho(cfg, &compute_rho(cfg, p), q)
}

/// Unclamped `sum (R - R^e)`, the smooth objective the solvers work on.
pub fn secrecy_gap_sum(cfg: &SystemConfig, p: &UplinkPower, q: &DownlinkPower) -> Result<f64> {
    let rho = compute_rho(cfg, p);
    let mut total = 0.0;
    for (m, k) in cfg.users() {
        total += legit_rate(cfg, &rho, q, m, k)? - eaves_rate(cfg, q, m, k)?;
    }
    Ok(total)
}

/// Total consumed power `sum P + sum Q + P_f`.
pub fn total_power(p: &UplinkPower, q: &DownlinkPower, p_f: f64) -> f64 {
    p.total() + q.total() + p_f
}

/// `sum_secrecy / (sum P + sum Q + P_f)`.
pub fn energy_efficiency(
    report: &RateReport,
    p: &UplinkPower,
    q: &DownlinkPower,
    p_f: f64,
) -> Result<f64> {
    if !(p_f > 0.0 && p_f.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "circuit power must be positive, got {p_f}"
        )));
    }
    Ok(report.sum_secrecy / total_power(p, q, p_f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_user(nt: usize, tau: usize, t: usize) -> SystemConfig {
        SystemConfig::from_betas(nt, vec![vec![1.0]], tau, t, 1.0).unwrap()
    }

    #[test]
    fn zero_desired_power_has_no_signal() {
        let cfg = single_user(16, 1, 10);
        let rho = EstimationQuality::from_rows(&cfg, vec![vec![0.4]]).unwrap();
        let q = DownlinkPower::new(&cfg, vec![vec![1.0, 0.0]]).unwrap();
        let t = sinr_terms(&cfg, &rho, &q, 0, 0).unwrap();
        assert_eq!(t.kappa, 0.0);
        assert_eq!(t.im1, 0.0);
        assert_eq!(legit_rate(&cfg, &rho, &q, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn perfect_estimation_kills_leakage() {
        let cfg = SystemConfig::from_betas(16, vec![vec![2.0, 1.0]], 1, 10, 1.0).unwrap();
        let rho = EstimationQuality::from_rows(&cfg, vec![vec![1.0, 1.0]]).unwrap();
        let q = DownlinkPower::new(&cfg, vec![vec![3.0, 1.0, 1.0]]).unwrap();
        let t = sinr_terms(&cfg, &rho, &q, 0, 1).unwrap();
        assert_eq!(t.im1, 0.0);
        // only the stronger-user term survives: beta * Q_1 * N_t
        assert_eq!(t.im2, 16.0);
    }

    #[test]
    fn hand_computed_decomposition() {
        let cfg = single_user(100, 1, 2);
        let rho = EstimationQuality::from_rows(&cfg, vec![vec![0.5]]).unwrap();
        let q = DownlinkPower::new(&cfg, vec![vec![0.0, 1.0]]).unwrap();
        let t = sinr_terms(&cfg, &rho, &q, 0, 0).unwrap();
        assert!((t.kappa - 50.0).abs() < 1e-12);
        assert!((t.im1 - 0.5).abs() < 1e-12);
        assert_eq!(t.im2, 0.0);
        assert_eq!(t.im3, 0.0);
        let r = legit_rate(&cfg, &rho, &q, 0, 0).unwrap();
        assert!((r - 0.5 * (1.0 + 50.0 / 1.5f64).log2()).abs() < 1e-12);
        assert!((r - 2.5508).abs() < 1e-4);
    }

    #[test]
    fn index_out_of_range() {
        let cfg = single_user(4, 1, 2);
        let rho = EstimationQuality::from_rows(&cfg, vec![vec![0.5]]).unwrap();
        let q = DownlinkPower::zeros(&cfg);
        assert!(matches!(
            sinr_terms(&cfg, &rho, &q, 0, 1),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn inter_cluster_power_reduces_rate() {
        let cfg = SystemConfig::from_betas(32, vec![vec![2.0], vec![1.0]], 2, 10, 1.0).unwrap();
        let rho = EstimationQuality::from_rows(&cfg, vec![vec![0.6], vec![0.6]]).unwrap();
        let q1 = DownlinkPower::new(&cfg, vec![vec![0.0, 1.0], vec![0.5, 1.0]]).unwrap();
        let q2 = DownlinkPower::new(&cfg, vec![vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let a = sinr_terms(&cfg, &rho, &q1, 0, 0).unwrap();
        let b = sinr_terms(&cfg, &rho, &q2, 0, 0).unwrap();
        assert!((b.im3 - 2.0 * a.im3).abs() < 1e-12);
        assert!(legit_rate(&cfg, &rho, &q2, 0, 0).unwrap() < legit_rate(&cfg, &rho, &q1, 0, 0).unwrap());
    }

    #[test]
    fn eaves_rate_example() {
        let cfg = SystemConfig::from_betas(8, vec![vec![2.0, 1.0]], 1, 2, 1.0).unwrap();
        let q = DownlinkPower::new(&cfg, vec![vec![2.0, 4.0, 2.0]]).unwrap();
        let r = eaves_rate(&cfg, &q, 0, 0).unwrap();
        assert!((r - 0.5 * 1.8f64.log2()).abs() < 1e-12);
        assert!((r - 0.4240).abs() < 1e-4);

        let silent = cfg.with_eav_gain(0.0).unwrap();
        assert_eq!(eaves_rate(&silent, &q, 0, 1).unwrap(), 0.0);
        let q0 = DownlinkPower::new(&cfg, vec![vec![2.0, 0.0, 2.0]]).unwrap();
        assert_eq!(eaves_rate(&cfg, &q0, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn eaves_rate_ignores_antenna_count() {
        let base = SystemConfig::from_betas(8, vec![vec![5.0, 1.0], vec![3.0, 2.0]], 2, 50, 4.0).unwrap();
        let q = DownlinkPower::new(&base, vec![vec![1.0, 2.0, 3.0], vec![0.5, 1.0, 1.5]]).unwrap();
        let r8 = eaves_rate(&base, &q, 1, 1).unwrap();
        for nt in [64, 512] {
            let cfg = base.with_n_antennas(nt).unwrap();
            assert_eq!(eaves_rate(&cfg, &q, 1, 1).unwrap(), r8);
        }
    }

    #[test]
    fn secrecy_is_clamped() {
        let r = RateReport::from_rates(vec![vec![0.3, 1.0]], vec![vec![0.5, 0.25]]);
        assert_eq!(r.secrecy, vec![vec![0.0, 0.75]]);
        assert_eq!(r.sum_secrecy, 0.75);
    }

    #[test]
    fn symmetric_clusters_get_identical_rates() {
        let cfg = SystemConfig::from_betas(32, vec![vec![9.0, 3.0]; 3], 3, 300, 2.0).unwrap();
        let p = UplinkPower::uniform(&cfg, 1.0);
        let q = DownlinkPower::new(&cfg, vec![vec![1.0, 2.0, 3.0]; 3]).unwrap();
        let rep = secrecy_report(&cfg, &p, &q).unwrap();
        assert_eq!(rep.secrecy[0], rep.secrecy[1]);
        assert_eq!(rep.secrecy[1], rep.secrecy[2]);
    }

    #[test]
    fn report_recomposes_from_rate_ops() {
        let cfg = SystemConfig::from_betas(64, vec![vec![80.0, 20.0, 5.0], vec![50.0, 40.0]], 2, 300, 10.0)
            .unwrap();
        let p = UplinkPower::new(&cfg, vec![vec![1.0, 0.3, 0.7], vec![0.2, 0.9]]).unwrap();
        let q = DownlinkPower::new(&cfg, vec![vec![2.0, 3.0, 5.0, 7.0], vec![1.0, 4.0, 6.0]]).unwrap();
        let rho = compute_rho(&cfg, &p);
        let rep = secrecy_report(&cfg, &p, &q).unwrap();
        let mut sum = 0.0;
        for (m, k) in cfg.users() {
            let l = legit_rate(&cfg, &rho, &q, m, k).unwrap();
            let e = eaves_rate(&cfg, &q, m, k).unwrap();
            assert_eq!(rep.legit[m][k], l);
            assert_eq!(rep.eaves[m][k], e);
            assert_eq!(rep.secrecy[m][k], (l - e).max(0.0));
            sum += (l - e).max(0.0);
        }
        assert!((rep.sum_secrecy - sum).abs() < 1e-12);
    }

    #[test]
    fn energy_efficiency_arithmetic() {
        let cfg = SystemConfig::from_betas(8, vec![vec![1.0]], 1, 10, 1.0).unwrap();
        let p = UplinkPower::new(&cfg, vec![vec![0.5]]).unwrap();
        let q = DownlinkPower::new(&cfg, vec![vec![0.25, 0.75]]).unwrap();
        let rep = RateReport::from_rates(vec![vec![2.0]], vec![vec![0.0]]);
        assert!((energy_efficiency(&rep, &p, &q, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(energy_efficiency(&rep, &p, &q, 1.0).unwrap() < 1.0);
        let zero = RateReport::from_rates(vec![vec![0.0]], vec![vec![0.0]]);
        assert_eq!(energy_efficiency(&zero, &p, &q, 0.5).unwrap(), 0.0);
        assert!(energy_efficiency(&rep, &p, &q, 0.0).is_err());
    }

    #[test]
    fn chi_mean_values() {
        assert!((chi_mean(1) - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((chi_mean(1) - 0.886_226_925_452_758).abs() < 1e-14);
        // Gamma(2.5)/Gamma(2) = 1.329340388...
        assert!((chi_mean(2) - 1.329_340_388_179_137).abs() < 1e-14);
        // squared ratio approaches n - 1/4
        let n = 400;
        assert!((chi_mean(n).powi(2) - (n as f64 - 0.25)).abs() < 1e-3);
    }

    #[test]
    fn exact_kappa_keeps_total_received_power() {
        let cfg = SystemConfig::from_betas(16, vec![vec![3.0]], 1, 10, 1.0).unwrap();
        let rho = EstimationQuality::from_rows(&cfg, vec![vec![0.7]]).unwrap();
        let q = DownlinkPower::new(&cfg, vec![vec![0.0, 2.0]]).unwrap();
        let a = sinr_terms_with(&cfg, &rho, &q, 0, 0, KappaModel::Asymptotic).unwrap();
        let b = sinr_terms_with(&cfg, &rho, &q, 0, 0, KappaModel::ExactGamma).unwrap();
        assert!(((a.kappa + a.im1) - (b.kappa + b.im1)).abs() < 1e-9);
        assert!(b.kappa < a.kappa);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
            (1usize..4, 1usize..4).prop_flat_map(|(m, k)| {
                (
                    proptest::collection::vec(proptest::collection::vec(0.5f64..100.0, k), m),
                    proptest::collection::vec(proptest::collection::vec(0.0f64..2.0, k), m),
                    proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, k + 1), m),
                )
            })
        }

        fn sorted(mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
            for row in &mut b {
                row.sort_by(|x, y| y.partial_cmp(x).unwrap());
            }
            b
        }

        proptest! {
            // The legit SINR for a fixed rho has the form (aN)/(bN + c) with c > 0,
            // so it is strictly increasing in N whenever a > 0.
            #[test]
            fn legit_rate_nondecreasing_in_antennas((b, p, q) in instance()) {
                let m = b.len();
                let small = SystemConfig::from_betas(8, sorted(b), m, 300, 10.0).unwrap();
                let p = UplinkPower::new(&small, p).unwrap();
                let q = DownlinkPower::new(&small, q).unwrap();
                let rho = compute_rho(&small, &p);
                let mut prev: Option<Vec<f64>> = None;
                for nt in [8, 32, 128, 512] {
                    let cfg = small.with_n_antennas(nt).unwrap();
                    let rates: Vec<f64> = cfg
                        .users()
                        .map(|(m, k)| legit_rate(&cfg, &rho, &q, m, k).unwrap())
                        .collect();
                    if let Some(prev) = &prev {
                        for (a, b) in prev.iter().zip(&rates) {
                            prop_assert!(b >= a);
                        }
                    }
                    prev = Some(rates);
                }
            }

            #[test]
            fn secrecy_is_max_of_gap((b, p, q) in instance()) {
                let m = b.len();
                let cfg = SystemConfig::from_betas(64, sorted(b), m, 300, 10.0).unwrap();
                let p = UplinkPower::new(&cfg, p).unwrap();
                let q = DownlinkPower::new(&cfg, q).unwrap();
                let rep = secrecy_report(&cfg, &p, &q).unwrap();
                let mut sum = 0.0;
                for (m, k) in cfg.users() {
                    prop_assert_eq!(rep.secrecy[m][k], (rep.legit[m][k] - rep.eaves[m][k]).max(0.0));
                    sum += rep.secrecy[m][k];
                }
                prop_assert!((rep.sum_secrecy - sum).abs() < 1e-12);
            }
        }
    }
}
