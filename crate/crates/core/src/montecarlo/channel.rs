//! Channel draws, uplink MMSE estimation, MRT precoding and AN vectors for one realization.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{cluster_pilot_snr, EstimationQuality, SystemConfig, UplinkPower};

pub type CVec = Vec<Complex64>;

/// One `CN(0, 1)` sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    (0..n).map(|_| complex_normal(rng)).collect()
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(Complex64::norm_sqr).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    norm_sqr(a).sqrt()
}

fn scaled(a: &[Complex64], c: f64) -> CVec {
    a.iter().map(|x| x * c).collect()
}

/// Small-scale fading of every user and of the eavesdropper.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `h[m][k]`, length `N_t`, i.i.d. `CN(0, 1)` entries.
    pub h: Vec<Vec<CVec>>,
    /// Eavesdropper fading `g`.
    pub g: CVec,
    /// Token drawn with the realization; identifies the draw in logs.
    pub noise_seed: u64,
}

pub fn draw_realization<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let nt = cfg.n_antennas();
    let h = cfg
        .clusters()
        .iter()
        .map(|c| (0..c.len()).map(|_| complex_normal_vec(rng, nt)).collect())
        .collect();
    let g = complex_normal_vec(rng, nt);
    let noise_seed = rng.random();
    ChannelRealization { h, g, noise_seed }
}

/// Per-cluster MMSE estimates of the effective cluster channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterEstimates {
    /// `sqrt(S_m) / (1 + S_m) * y_m` with `S_m = tau sum_k P beta`.
    pub h_hat: Vec<CVec>,
    pub pilot_snr: Vec<f64>,
}

impl ClusterEstimates {
    /// Estimate rescaled to unit per-entry variance, the vector that appears in
    /// `h_{m,k} = sqrt(rho) h_hat + sqrt(1 - rho) eps`. Zero when the cluster sent no pilot power.
    pub fn unit_variance(&self, m: usize) -> CVec {
        let s = self.pilot_snr[m];
        if s == 0.0 {
            return vec![Complex64::new(0.0, 0.0); self.h_hat[m].len()];
        }
        scaled(&self.h_hat[m], ((1.0 + s) / s).sqrt())
    }
}

/// Forms `y_m = sum_k sqrt(P beta tau) h_{m,k} + n_m` and applies the MMSE scaling.
///
/// The projected pilot noise `n_m` is drawn directly as `CN(0, I)`; with orthonormal
/// pilots this has the same distribution as projecting a full `N_t x tau` noise matrix.
pub fn mmse_estimate<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    p: &UplinkPower,
    realization: &ChannelRealization,
    rng: &mut R,
) -> ClusterEstimates {
    let nt = cfg.n_antennas();
    let tau = cfg.pilot_len() as f64;
    let mut h_hat = Vec::with_capacity(cfg.n_clusters());
    let mut pilot_snr = Vec::with_capacity(cfg.n_clusters());
    for (m, c) in cfg.clusters().iter().enumerate() {
        let mut y = complex_normal_vec(rng, nt);
        for (k, beta) in c.betas.iter().enumerate() {
            let amp = (p.get(m, k) * beta * tau).sqrt();
            if amp > 0.0 {
                for (yi, hi) in y.iter_mut().zip(&realization.h[m][k]) {
                    *yi += hi * amp;
                }
            }
        }
        let s = cluster_pilot_snr(cfg, p.cluster(m), m);
        h_hat.push(scaled(&y, s.sqrt() / (1.0 + s)));
        pilot_snr.push(s);
    }
    ClusterEstimates { h_hat, pilot_snr }
}

/// `w_m = h_hat_m / ||h_hat_m||`.
pub fn mrt_precoder(estimates: &ClusterEstimates) -> Result<Vec<CVec>> {
    estimates
        .h_hat
        .iter()
        .enumerate()
        .map(|(m, h)| {
            let n = norm(h);
            if n > 0.0 {
                Ok(scaled(h, 1.0 / n))
            } else {
                Err(Error::DegenerateEstimate { cluster: m })
            }
        })
        .collect()
}

/// Random unit-norm vector in the orthogonal complement of each `h_hat_m`.
pub fn an_vector<R: Rng + ?Sized>(estimates: &ClusterEstimates, rng: &mut R) -> Result<Vec<CVec>> {
    estimates
        .h_hat
        .iter()
        .enumerate()
        .map(|(m, h)| {
            if h.len() < 2 {
                return Err(Error::EmptyNullSpace);
            }
            let hn2 = norm_sqr(h);
            if hn2 == 0.0 {
                return Err(Error::DegenerateEstimate { cluster: m });
            }
            // two passes of Gram-Schmidt keep the residual inner product at rounding level
            let mut v = complex_normal_vec(rng, h.len());
            for _ in 0..2 {
                let c = inner(h, &v) / hn2;
                for (vi, hi) in v.iter_mut().zip(h) {
                    *vi -= hi * c;
                }
            }
            let n = norm(&v);
            Ok(scaled(&v, 1.0 / n))
        })
        .collect()
}

/// Estimates, precoders and AN vectors of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSet {
    pub estimates: ClusterEstimates,
    pub w: Vec<CVec>,
    pub z: Vec<CVec>,
}

impl EstimateSet {
    pub fn build<R: Rng + ?Sized>(
        cfg: &SystemConfig,
        p: &UplinkPower,
        realization: &ChannelRealization,
        rng: &mut R,
    ) -> Result<Self> {
        let estimates = mmse_estimate(cfg, p, realization, rng);
        let w = mrt_precoder(&estimates)?;
        let z = an_vector(&estimates, rng)?;
        Ok(Self { estimates, w, z })
    }
}

/// Per-draw view of `h_{m,k} = sqrt(rho) h_hat + sqrt(1 - rho) eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionSample {
    /// `Re(h_hat^H h_{m,k}) / N_t`, mean `sqrt(rho)`.
    pub correlation: f64,
    /// `Re(eps^H h_hat) / N_t`, mean zero.
    pub error_cross: f64,
    /// `||eps||^2 / N_t`, mean one.
    pub error_energy: f64,
}

pub fn error_decomposition(
    realization: &ChannelRealization,
    estimates: &ClusterEstimates,
    rho: &EstimationQuality,
    m: usize,
    k: usize,
) -> DecompositionSample {
    let h = &realization.h[m][k];
    let nt = h.len() as f64;
    let hhat = estimates.unit_variance(m);
    let r = rho.get(m, k);
    let correlation = inner(&hhat, h).re / nt;
    let (error_cross, error_energy) = if r < 1.0 {
        let a = r.sqrt();
        let b = (1.0 - r).sqrt();
        let eps: CVec = h.iter().zip(&hhat).map(|(hi, ei)| (hi - ei * a) / b).collect();
        (inner(&eps, &hhat).re / nt, norm_sqr(&eps) / nt)
    } else {
        (0.0, 1.0)
    };
    DecompositionSample {
        correlation,
        error_cross,
        error_energy,
    }
}
