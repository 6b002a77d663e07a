use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DownlinkPower, EstimationQuality, SystemConfig};

use super::{eaves_rate, other_cluster_power, stronger_user_power};

/// Limit of the legitimate rate as the antenna count grows without bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LargeAntennaLimit {
    Bounded(f64),
    /// No residual intra-cluster interference (strongest user): the rate grows without bound.
    Unbounded,
}

impl LargeAntennaLimit {
    pub fn value(&self) -> Option<f64> {
        match self {
            LargeAntennaLimit::Bounded(v) => Some(*v),
            LargeAntennaLimit::Unbounded => None,
        }
    }
}

/// `(1 - tau/T) log2(1 + Q_{m,k} / sum_{i<k} Q_{m,i})`.
pub fn asymptotic_large_nt(
    cfg: &SystemConfig,
    q: &DownlinkPower,
    m: usize,
    k: usize,
) -> Result<LargeAntennaLimit> {
    cfg.check_indices(m, k)?;
    if k == 0 {
        return Ok(LargeAntennaLimit::Unbounded);
    }
    let qk = q.user(m, k);
    let stronger = stronger_user_power(q, m, k);
    if stronger == 0.0 {
        return Ok(if qk > 0.0 {
            LargeAntennaLimit::Unbounded
        } else {
            LargeAntennaLimit::Bounded(0.0)
        });
    }
    Ok(LargeAntennaLimit::Bounded(
        cfg.prefactor() * (qk / stronger).ln_1p() / std::f64::consts::LN_2,
    ))
}

/// Large-array secrecy limit: the legitimate limit minus the antenna-independent
/// eavesdropping rate, clamped at zero.
pub fn large_nt_secrecy_limit(
    cfg: &SystemConfig,
    q: &DownlinkPower,
    m: usize,
    k: usize,
) -> Result<LargeAntennaLimit> {
    Ok(match asymptotic_large_nt(cfg, q, m, k)? {
        LargeAntennaLimit::Bounded(v) => {
            LargeAntennaLimit::Bounded((v - eaves_rate(cfg, q, m, k)?).max(0.0))
        }
        LargeAntennaLimit::Unbounded => LargeAntennaLimit::Unbounded,
    })
}

/// Downlink power fractions `sigma[m][i]` (slot 0 is AN) summing to one over the cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerFractions(DownlinkPower);

impl PowerFractions {
    pub fn new(cfg: &SystemConfig, rows: Vec<Vec<f64>>) -> Result<Self> {
        let q = DownlinkPower::new(cfg, rows)?;
        let total = q.total();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "power fractions must sum to 1 (got {total})"
            )));
        }
        Ok(Self(q))
    }

    /// Normalizes a nonnegative allocation into fractions.
    pub fn normalized(q: &DownlinkPower) -> Result<Self> {
        let total = q.total();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("cannot normalize a zero allocation".into()));
        }
        Ok(Self(q.scaled(1.0 / total)))
    }

    pub fn as_power(&self) -> &DownlinkPower {
        &self.0
    }

    /// Allocation `sigma * q_total`.
    pub fn at_total(&self, q_total: f64) -> DownlinkPower {
        self.0.scaled(q_total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HighPowerLimit {
    pub legit: f64,
    pub eaves: f64,
}

impl HighPowerLimit {
    pub fn secrecy(&self) -> f64 {
        (self.legit - self.eaves).max(0.0)
    }
}

/// Rate limits as the total downlink power grows with fixed fractions `sigma`.
///
/// Both limits carry the same inter-cluster term, so the secrecy limit depends on
/// the other clusters only through that shared sum.
pub fn asymptotic_high_power(
    cfg: &SystemConfig,
    rho: &EstimationQuality,
    sigma: &PowerFractions,
) -> Result<Vec<Vec<HighPowerLimit>>> {
    let s = &sigma.0;
    let nt = cfg.n_antennas() as f64;
    let pre = cfg.prefactor();
    let log2_1p = |x: f64| x.ln_1p() / std::f64::consts::LN_2;
    Ok(cfg
        .clusters()
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let inter = other_cluster_power(s, m);
            (0..c.len())
                .map(|k| {
                    let r = rho.get(m, k);
                    let sk = s.user(m, k);
                    let intra = stronger_user_power(s, m, k) * (r * nt + 1.0 - r) + s.an(m) * (1.0 - r);
                    let legit_den = sk * (1.0 - r) + intra + inter;
                    let eaves_den = (s.cluster_total(m) - sk) + inter;
                    HighPowerLimit {
                        legit: pre * log2_1p(ratio(sk * r * nt, legit_den)),
                        eaves: pre * log2_1p(ratio(sk, eaves_den)),
                    }
                })
                .collect()
        })
        .collect())
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}
