//! Static system description, power-allocation variables and the estimation-quality map.
//!
//! Users inside a cluster are indexed from zero in decreasing order of large-scale
//! gain, so user `0` is the strongest user and performs the most interference
//! cancellation. Downlink power rows carry the artificial-noise power in slot `0`
//! followed by one slot per user.
//!
//! All powers here are linear (watts); [`db_to_linear`] and [`linear_to_db`] are
//! meant for the experiment boundary only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One cluster: the large-scale gains of its users, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub betas: Vec<f64>,
}

impl ClusterConfig {
    pub fn new(betas: Vec<f64>) -> Self {
        Self { betas }
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }
}

/// Validated description of the cell: antennas, clusters, pilot/coherence lengths
/// and the eavesdropper's large-scale gain.
///
/// Construct it with [`SystemConfig::new`]; the fields are private so every value
/// in circulation satisfies `T >= tau >= M`, `K_m >= 1` and sorted gains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    n_antennas: usize,
    clusters: Vec<ClusterConfig>,
    pilot_len: usize,
    coherence_len: usize,
    eav_gain: f64,
}

#[derive(Deserialize)]
struct RawSystemConfig {
    n_antennas: usize,
    clusters: Vec<ClusterConfig>,
    pilot_len: usize,
    coherence_len: usize,
    eav_gain: f64,
}

impl<'de> Deserialize<'de> for SystemConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSystemConfig::deserialize(d)?;
        SystemConfig::new(
            raw.n_antennas,
            raw.clusters,
            raw.pilot_len,
            raw.coherence_len,
            raw.eav_gain,
        )
        .map_err(serde::de::Error::custom)
    }
}

impl SystemConfig {
    pub fn new(
        n_antennas: usize,
        clusters: Vec<ClusterConfig>,
        pilot_len: usize,
        coherence_len: usize,
        eav_gain: f64,
    ) -> Result<Self> {
        let cfg = Self {
            n_antennas,
            clusters,
            pilot_len,
            coherence_len,
            eav_gain,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Convenience constructor from nested gain lists.
    pub fn from_betas(
        n_antennas: usize,
        betas: Vec<Vec<f64>>,
        pilot_len: usize,
        coherence_len: usize,
        eav_gain: f64,
    ) -> Result<Self> {
        let clusters = betas.into_iter().map(ClusterConfig::new).collect();
        Self::new(n_antennas, clusters, pilot_len, coherence_len, eav_gain)
    }

    fn validate(&self) -> Result<()> {
        let m = self.clusters.len();
        if self.n_antennas == 0 {
            return Err(Error::InvalidConfig("n_antennas must be positive".into()));
        }
        if m == 0 {
            return Err(Error::InvalidConfig("at least one cluster is required".into()));
        }
        if self.pilot_len < m {
            return Err(Error::InvalidConfig(format!(
                "pilot length {} is shorter than the number of clusters {}",
                self.pilot_len, m
            )));
        }
        if self.coherence_len < self.pilot_len {
            return Err(Error::InvalidConfig(format!(
                "coherence length {} is shorter than pilot length {}",
                self.coherence_len, self.pilot_len
            )));
        }
        if !(self.eav_gain >= 0.0 && self.eav_gain.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eavesdropper gain must be finite and nonnegative, got {}",
                self.eav_gain
            )));
        }
        for (idx, cluster) in self.clusters.iter().enumerate() {
            if cluster.is_empty() {
                return Err(Error::InvalidConfig(format!("cluster {idx} has no users")));
            }
            if let Some(b) = cluster.betas.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
                return Err(Error::InvalidConfig(format!(
                    "cluster {idx} has a non-positive or non-finite gain {b}"
                )));
            }
            if cluster.betas.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::InvalidConfig(format!(
                    "cluster {idx} gains are not sorted in non-increasing order"
                )));
            }
        }
        Ok(())
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn clusters(&self) -> &[ClusterConfig] {
        &self.clusters
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_size(&self, m: usize) -> usize {
        self.clusters[m].len()
    }

    pub fn n_users(&self) -> usize {
        self.clusters.iter().map(ClusterConfig::len).sum()
    }

    pub fn beta(&self, m: usize, k: usize) -> f64 {
        self.clusters[m].betas[k]
    }

    pub fn pilot_len(&self) -> usize {
        self.pilot_len
    }

    pub fn coherence_len(&self) -> usize {
        self.coherence_len
    }

    pub fn eav_gain(&self) -> f64 {
        self.eav_gain
    }

    /// Fraction of the coherence interval left for data, `1 - tau/T`.
    pub fn prefactor(&self) -> f64 {
        1.0 - self.pilot_len as f64 / self.coherence_len as f64
    }

    pub fn with_n_antennas(&self, n_antennas: usize) -> Result<Self> {
        Self::new(
            n_antennas,
            self.clusters.clone(),
            self.pilot_len,
            self.coherence_len,
            self.eav_gain,
        )
    }

    pub fn with_eav_gain(&self, eav_gain: f64) -> Result<Self> {
        Self::new(
            self.n_antennas,
            self.clusters.clone(),
            self.pilot_len,
            self.coherence_len,
            eav_gain,
        )
    }

    pub fn check_indices(&self, m: usize, k: usize) -> Result<()> {
        if m < self.n_clusters() && k < self.cluster_size(m) {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { cluster: m, user: k })
        }
    }

    /// `(cluster, user)` pairs in cluster-major order.
    pub fn users(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(m, c)| (0..c.len()).map(move |k| (m, k)))
    }
}

fn check_shape(rows: &[Vec<f64>], cfg: &SystemConfig, extra: usize) -> Result<()> {
    if rows.len() != cfg.n_clusters()
        || rows
            .iter()
            .zip(cfg.clusters())
            .any(|(r, c)| r.len() != c.len() + extra)
    {
        return Err(Error::ShapeMismatch);
    }
    Ok(())
}

fn check_nonnegative(rows: &[Vec<f64>], what: &str) -> Result<()> {
    if rows.iter().flatten().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "{what} entries must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// Uplink pilot powers `P[m][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UplinkPower(Vec<Vec<f64>>);

impl UplinkPower {
    pub fn new(cfg: &SystemConfig, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(&rows, cfg, 0)?;
        check_nonnegative(&rows, "uplink power")?;
        Ok(Self(rows))
    }

    pub fn uniform(cfg: &SystemConfig, value: f64) -> Self {
        Self(cfg.clusters().iter().map(|c| vec![value; c.len()]).collect())
    }

    pub fn from_cap(cfg: &SystemConfig, cap: &UplinkCap) -> Self {
        Self(
            cfg.clusters()
                .iter()
                .enumerate()
                .map(|(m, c)| (0..c.len()).map(|k| cap.upper(m, k)).collect())
                .collect(),
        )
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.0[m][k]
    }

    pub fn cluster(&self, m: usize) -> &[f64] {
        &self.0[m]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().flatten().sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }

    /// Inverse of [`UplinkPower::to_flat`]; entries are taken as-is.
    pub fn from_flat(cfg: &SystemConfig, flat: &[f64]) -> Self {
        let mut it = flat.iter().copied();
        Self(
            cfg.clusters()
                .iter()
                .map(|c| it.by_ref().take(c.len()).collect())
                .collect(),
        )
    }

    pub fn with_cluster(&self, m: usize, values: &[f64]) -> Self {
        let mut rows = self.0.clone();
        rows[m].copy_from_slice(values);
        Self(rows)
    }
}

/// Downlink powers: row `m` is `[Q_{m,0} (AN), Q_{m,1}, ..., Q_{m,K_m}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownlinkPower(Vec<Vec<f64>>);

impl DownlinkPower {
    pub fn new(cfg: &SystemConfig, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(&rows, cfg, 1)?;
        check_nonnegative(&rows, "downlink power")?;
        Ok(Self(rows))
    }

    /// Builds rows from per-cluster AN powers and per-user powers.
    pub fn from_parts(cfg: &SystemConfig, an: &[f64], users: &[Vec<f64>]) -> Result<Self> {
        if an.len() != users.len() {
            return Err(Error::ShapeMismatch);
        }
        let rows = an
            .iter()
            .zip(users)
            .map(|(a, u)| std::iter::once(*a).chain(u.iter().copied()).collect())
            .collect();
        Self::new(cfg, rows)
    }

    pub fn zeros(cfg: &SystemConfig) -> Self {
        Self(cfg.clusters().iter().map(|c| vec![0.0; c.len() + 1]).collect())
    }

    /// Power of user `k` (zero-based) in cluster `m`.
    pub fn user(&self, m: usize, k: usize) -> f64 {
        self.0[m][k + 1]
    }

    pub fn an(&self, m: usize) -> f64 {
        self.0[m][0]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.0[m]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn cluster_total(&self, m: usize) -> f64 {
        self.0[m].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().flatten().sum()
    }

    pub fn an_total(&self) -> f64 {
        self.0.iter().map(|r| r[0]).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(
            self.0
                .iter()
                .map(|r| r.iter().map(|v| v * c).collect())
                .collect(),
        )
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }

    pub fn from_flat(cfg: &SystemConfig, flat: &[f64]) -> Self {
        let mut it = flat.iter().copied();
        Self(
            cfg.clusters()
                .iter()
                .map(|c| it.by_ref().take(c.len() + 1).collect())
                .collect(),
        )
    }
}

/// Per-user fraction `rho[m][k]` of channel energy captured by the cluster estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationQuality(Vec<Vec<f64>>);

impl EstimationQuality {
    /// Wraps externally supplied values; each must lie in `[0, 1]`.
    pub fn from_rows(cfg: &SystemConfig, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(&rows, cfg, 0)?;
        if rows.iter().flatten().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidArgument("rho must lie in [0, 1]".into()));
        }
        Ok(Self(rows))
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.0[m][k]
    }

    pub fn cluster(&self, m: usize) -> &[f64] {
        &self.0[m]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }
}

/// Effective pilot SNR of cluster `m`: `tau * sum_k P_{m,k} beta_{m,k}`.
pub fn cluster_pilot_snr(cfg: &SystemConfig, p: &[f64], m: usize) -> f64 {
    let tau = cfg.pilot_len() as f64;
    p.iter()
        .zip(&cfg.clusters()[m].betas)
        .map(|(pk, bk)| pk * bk * tau)
        .sum()
}

/// `rho_{m,k} = P_{m,k} beta_{m,k} tau / (1 + sum_i P_{m,i} beta_{m,i} tau)`.
pub fn compute_rho(cfg: &SystemConfig, p: &UplinkPower) -> EstimationQuality {
    let tau = cfg.pilot_len() as f64;
    EstimationQuality(
        cfg.clusters()
            .iter()
            .enumerate()
            .map(|(m, c)| {
                let denom = 1.0 + cluster_pilot_snr(cfg, p.cluster(m), m);
                c.betas
                    .iter()
                    .zip(p.cluster(m))
                    .map(|(b, pk)| pk * b * tau / denom)
                    .collect()
            })
            .collect(),
    )
}

/// Per-user uplink power cap. The common case is one value for all users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UplinkCap {
    Uniform(f64),
    PerUser(Vec<Vec<f64>>),
}

impl UplinkCap {
    pub fn upper(&self, m: usize, k: usize) -> f64 {
        match self {
            UplinkCap::Uniform(v) => *v,
            UplinkCap::PerUser(rows) => rows[m][k],
        }
    }

    pub fn to_flat(&self, cfg: &SystemConfig) -> Vec<f64> {
        cfg.users().map(|(m, k)| self.upper(m, k)).collect()
    }

    pub fn cluster(&self, cfg: &SystemConfig, m: usize) -> Vec<f64> {
        (0..cfg.cluster_size(m)).map(|k| self.upper(m, k)).collect()
    }
}

/// Uplink cap plus total downlink budget `Q_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub uplink: UplinkCap,
    pub downlink_total: f64,
}

impl PowerBudget {
    pub fn uniform(p_max: f64, q_max: f64) -> Self {
        Self {
            uplink: UplinkCap::Uniform(p_max),
            downlink_total: q_max,
        }
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if !(self.downlink_total > 0.0 && self.downlink_total.is_finite()) {
            return Err(Error::InvalidArgument("downlink budget must be positive".into()));
        }
        match &self.uplink {
            UplinkCap::Uniform(v) if !(*v > 0.0 && v.is_finite()) => {
                Err(Error::InvalidArgument("uplink cap must be positive".into()))
            }
            UplinkCap::PerUser(rows) => {
                check_shape(rows, cfg, 0)?;
                if rows.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidArgument("uplink caps must be positive".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cluster() -> Result<SystemConfig> {
        SystemConfig::from_betas(64, vec![vec![4.0, 2.0], vec![3.0, 1.0]], 2, 300, 1.0)
    }

    #[test]
    fn accepts_valid_config() {
        let cfg = two_cluster().unwrap();
        assert_eq!(cfg.n_clusters(), 2);
        assert_eq!(cfg.n_users(), 4);
    }

    #[test]
    fn rejects_short_pilot() {
        let err = SystemConfig::from_betas(8, vec![vec![1.0]; 3], 2, 300, 1.0).unwrap_err();
        assert!(err.to_string().contains("pilot length"));
    }

    #[test]
    fn rejects_unsorted_gains() {
        let err = SystemConfig::from_betas(8, vec![vec![1.0, 2.0]], 1, 300, 1.0).unwrap_err();
        assert!(err.to_string().contains("sorted"));
    }

    #[test]
    fn rejects_other_violations() {
        assert!(SystemConfig::from_betas(8, vec![], 1, 300, 1.0).is_err());
        assert!(SystemConfig::from_betas(8, vec![vec![]], 1, 300, 1.0).is_err());
        assert!(SystemConfig::from_betas(8, vec![vec![1.0]], 4, 3, 1.0).is_err());
        assert!(SystemConfig::from_betas(0, vec![vec![1.0]], 1, 3, 1.0).is_err());
        assert!(SystemConfig::from_betas(8, vec![vec![0.0]], 1, 3, 1.0).is_err());
        assert!(SystemConfig::from_betas(8, vec![vec![1.0]], 1, 3, -1.0).is_err());
    }

    #[test]
    fn deserialization_validates() {
        let ok = r#"{"n_antennas":4,"clusters":[{"betas":[2.0,1.0]}],"pilot_len":1,"coherence_len":10,"eav_gain":1.0}"#;
        assert!(serde_json::from_str::<SystemConfig>(ok).is_ok());
        let bad = r#"{"n_antennas":4,"clusters":[{"betas":[1.0,2.0]}],"pilot_len":1,"coherence_len":10,"eav_gain":1.0}"#;
        assert!(serde_json::from_str::<SystemConfig>(bad).is_err());
    }

    #[test]
    fn rho_zero_power() {
        let cfg = SystemConfig::from_betas(8, vec![vec![3.0]], 1, 10, 1.0).unwrap();
        let rho = compute_rho(&cfg, &UplinkPower::uniform(&cfg, 0.0));
        assert_eq!(rho.get(0, 0), 0.0);
    }

    #[test]
    fn rho_approaches_one() {
        let cfg = SystemConfig::from_betas(8, vec![vec![3.0]], 1, 10, 1.0).unwrap();
        let rho = compute_rho(&cfg, &UplinkPower::uniform(&cfg, 1e12));
        assert!(rho.get(0, 0) < 1.0);
        assert!(1.0 - rho.get(0, 0) < 1e-11);
    }

    #[test]
    fn rho_two_users() {
        let cfg = SystemConfig::from_betas(8, vec![vec![4.0, 2.0]], 2, 10, 1.0).unwrap();
        let p = UplinkPower::new(&cfg, vec![vec![1.0, 0.5]]).unwrap();
        let rho = compute_rho(&cfg, &p);
        assert!((rho.get(0, 0) - 8.0 / 11.0).abs() < 1e-15);
        assert!((rho.get(0, 1) - 2.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn db_conversions() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-12);
        assert!((linear_to_db(0.5) + 3.010_299_956_639_812).abs() < 1e-12);
    }

    #[test]
    fn flat_round_trip() {
        let cfg = two_cluster().unwrap();
        let q = DownlinkPower::new(&cfg, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(DownlinkPower::from_flat(&cfg, &q.to_flat()), q);
        assert_eq!(q.user(1, 1), 6.0);
        assert_eq!(q.an(1), 4.0);
        assert!(DownlinkPower::new(&cfg, vec![vec![1.0, 2.0]]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cluster_inputs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (1usize..5).prop_flat_map(|k| {
                (
                    proptest::collection::vec(0.01f64..100.0, k),
                    proptest::collection::vec(0.0f64..10.0, k),
                )
            })
        }

        proptest! {
            #[test]
            fn rho_sum_below_one((mut betas, p) in cluster_inputs(), tau in 1usize..8) {
                betas.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let cfg = SystemConfig::from_betas(8, vec![betas], tau, 300, 1.0).unwrap();
                let p = UplinkPower::new(&cfg, vec![p]).unwrap();
                let rho = compute_rho(&cfg, &p);
                let s = cluster_pilot_snr(&cfg, p.cluster(0), 0);
                let sum: f64 = rho.cluster(0).iter().sum();
                prop_assert!(sum < 1.0);
                prop_assert!((sum - s / (1.0 + s)).abs() <= 1e-12);
            }

            #[test]
            fn rho_grows_when_cluster_scales((mut betas, p) in cluster_inputs(), c in 1.01f64..10.0) {
                betas.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let cfg = SystemConfig::from_betas(8, vec![betas], 1, 300, 1.0).unwrap();
                let base = UplinkPower::new(&cfg, vec![p.clone()]).unwrap();
                let scaled = UplinkPower::new(&cfg, vec![p.iter().map(|v| v * c).collect()]).unwrap();
                let r0 = compute_rho(&cfg, &base);
                let r1 = compute_rho(&cfg, &scaled);
                for k in 0..p.len() {
                    if p[k] > 0.0 {
                        prop_assert!(r1.get(0, k) > r0.get(0, k));
                    }
                }
            }
        }
    }
}
