use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{db_to_linear, DownlinkPower, PowerBudget, SystemConfig, UplinkPower};

/// Randomly drawn gains: `n_clusters` clusters of `users_per_cluster` users with gains
/// uniform on `(0, max_gain]`, sorted strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomClusters {
    pub n_clusters: usize,
    pub users_per_cluster: usize,
    #[serde(default = "default_max_gain")]
    pub max_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NAntennas,
    QMaxDb,
    PMaxDb,
    UsersPerCluster,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::NAntennas => "n_antennas",
            SweepAxis::QMaxDb => "q_max_db",
            SweepAxis::PMaxDb => "p_max_db",
            SweepAxis::UsersPerCluster => "users_per_cluster",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Explicit linear powers for `rates` and `validate`; rows as in [`UplinkPower`] and
/// [`DownlinkPower`] (AN first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSpec {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

/// JSON experiment description. Power budgets are in dB; everything else is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: String,
    pub n_antennas: usize,
    /// Explicit gains per cluster, strongest first. Exclusive with `random_clusters`.
    #[serde(default)]
    pub clusters: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub random_clusters: Option<RandomClusters>,
    /// Defaults to the number of clusters.
    #[serde(default)]
    pub pilot_len: Option<usize>,
    #[serde(default = "default_coherence")]
    pub coherence_len: usize,
    #[serde(default = "default_eav_gain")]
    pub eav_gain: f64,
    #[serde(default)]
    pub p_max_db: f64,
    #[serde(default = "default_q_max_db")]
    pub q_max_db: f64,
    #[serde(default = "default_p_f_db")]
    pub p_f_db: f64,
    #[serde(default = "default_an_fraction")]
    pub an_fraction: f64,
    #[serde(default)]
    pub allocation: Option<AllocationSpec>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_max_gain() -> f64 {
    100.0
}
fn default_coherence() -> usize {
    300
}
fn default_eav_gain() -> f64 {
    10.0
}
fn default_q_max_db() -> f64 {
    20.0
}
fn default_p_f_db() -> f64 {
    -5.0
}
fn default_an_fraction() -> f64 {
    0.2
}
fn default_trials() -> usize {
    1000
}

/// Gains uniform on `(0, max_gain]`, sorted in non-increasing order within each cluster.
pub fn random_betas(n_clusters: usize, users_per_cluster: usize, max_gain: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_clusters)
        .map(|_| {
            let mut c: Vec<f64> = (0..users_per_cluster)
                .map(|_| max_gain * (1.0 - rng.random::<f64>()))
                .collect();
            c.sort_by(|a, b| b.total_cmp(a));
            c
        })
        .collect()
}

/// One fully resolved experiment point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    /// Sweep coordinate, `None` without a sweep.
    pub axis_value: Option<f64>,
    pub config: SystemConfig,
    pub budget: PowerBudget,
    pub p_f: f64,
    pub an_fraction: f64,
    /// Explicit allocation if the spec gave one.
    #[serde(skip)]
    pub allocation: Option<(UplinkPower, DownlinkPower)>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        match (&self.clusters, &self.random_clusters) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "give either clusters or random_clusters, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidConfig("clusters or random_clusters is required".into()))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.an_fraction) {
            return Err(Error::InvalidConfig(format!("an_fraction {} outside [0, 1]", self.an_fraction)));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::InvalidConfig("sweep needs at least one value".into()));
            }
            if sweep.values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig("sweep values must be strictly increasing".into()));
            }
            let integral = matches!(sweep.axis, SweepAxis::NAntennas | SweepAxis::UsersPerCluster);
            if integral && sweep.values.iter().any(|v| !(v.fract() == 0.0 && *v >= 1.0)) {
                return Err(Error::InvalidConfig(format!(
                    "{} values must be positive integers",
                    sweep.axis.name()
                )));
            }
            if sweep.axis == SweepAxis::UsersPerCluster && self.random_clusters.is_none() {
                return Err(Error::InvalidConfig(
                    "a users_per_cluster sweep needs random_clusters".into(),
                ));
            }
            if self.allocation.is_some() {
                return Err(Error::InvalidConfig("an explicit allocation cannot be swept".into()));
            }
        }
        // surfaces configuration errors before any work starts
        self.points()?;
        Ok(())
    }

    /// Resolves every sweep point (or the single point without a sweep).
    pub fn points(&self) -> Result<Vec<Resolved>> {
        match &self.sweep {
            None => Ok(vec![self.resolve(None)?]),
            Some(s) => s.values.iter().map(|v| self.resolve(Some((s.axis, *v)))).collect(),
        }
    }

    fn resolve(&self, coord: Option<(SweepAxis, f64)>) -> Result<Resolved> {
        let mut n_antennas = self.n_antennas;
        let mut p_max_db = self.p_max_db;
        let mut q_max_db = self.q_max_db;
        let mut users = self.random_clusters.as_ref().map(|r| r.users_per_cluster);
        match coord {
            Some((SweepAxis::NAntennas, v)) => n_antennas = v as usize,
            Some((SweepAxis::PMaxDb, v)) => p_max_db = v,
            Some((SweepAxis::QMaxDb, v)) => q_max_db = v,
            Some((SweepAxis::UsersPerCluster, v)) => users = Some(v as usize),
            None => {}
        }
        let betas = match (&self.clusters, &self.random_clusters) {
            (Some(c), _) => c.clone(),
            (None, Some(r)) => random_betas(r.n_clusters, users.unwrap_or(r.users_per_cluster), r.max_gain, self.seed),
            (None, None) => unreachable!("checked in validate"),
        };
        let pilot_len = self.pilot_len.unwrap_or(betas.len());
        let config = SystemConfig::from_betas(n_antennas, betas, pilot_len, self.coherence_len, self.eav_gain)?;
        let budget = PowerBudget::uniform(db_to_linear(p_max_db), db_to_linear(q_max_db));
        budget.validate(&config)?;
        let allocation = match &self.allocation {
            Some(a) => Some((
                UplinkPower::new(&config, a.p.clone())?,
                DownlinkPower::new(&config, a.q.clone())?,
            )),
            None => None,
        };
        Ok(Resolved {
            axis_value: coord.map(|(_, v)| v),
            config,
            budget,
            p_f: db_to_linear(self.p_f_db),
            an_fraction: self.an_fraction,
            allocation,
        })
    }
}
