//! Empirical semivariance of relocation tracks, theoretical semivariance of
//! movement models, pseudo-likelihood fitting and AIC model selection.

mod fit;
mod model;

pub use fit::{
    fit_svf_model, fit_svf_model_with, fit_report_json, pseudo_log_likelihood, select_model,
    FitOptions, FitResult,
};
pub use model::{theoretical_svf, Family, MovementModel};

use thiserror::Error;

use crate::data::{DataError, Trajectory};
use crate::ingest::median_sampling_interval;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariogramError {
    #[error("sampling is not regular: interval {interval}s at index {index} is not a multiple of the {step}s step")]
    UnevenSampling { index: usize, interval: i64, step: f64 },
    #[error("trajectory too short for semivariance estimation")]
    TooShort,
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("all semivariance estimates are zero")]
    DegenerateVariogram,
    #[error("need at least {needed} usable lags, found {found}")]
    InsufficientLags { needed: usize, found: usize },
    #[error("optimizer failed to converge from every start")]
    NonConvergence,
    #[error("{0} models have no anisotropic form")]
    UnsupportedAnisotropy(Family),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Method-of-moments semivariance at integral multiples of the sampling step.
///
/// Besides the scalar estimate (half the mean squared displacement, summed
/// over both axes) the per-axis components are kept, which anisotropic fits
/// need.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalVariogram {
    /// Sampling step `t_d` in seconds.
    pub step: f64,
    pub lags: Vec<f64>,
    pub gamma_hat: Vec<f64>,
    pub pair_count: Vec<u64>,
    pub gamma_xx: Vec<f64>,
    pub gamma_yy: Vec<f64>,
    pub gamma_xy: Vec<f64>,
}

impl EmpiricalVariogram {
    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    /// Builds a variogram from scalar ordinates alone, splitting each value
    /// evenly between the axes.
    pub fn from_scalar(step: f64, lags: Vec<f64>, gamma_hat: Vec<f64>, pair_count: Vec<u64>) -> Self {
        let half: Vec<f64> = gamma_hat.iter().map(|g| g / 2.0).collect();
        Self {
            step,
            gamma_xy: vec![0.0; lags.len()],
            gamma_xx: half.clone(),
            gamma_yy: half,
            lags,
            gamma_hat,
            pair_count,
        }
    }

    /// `tau_seconds,gamma_m2,pair_count` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau_seconds,gamma_m2,pair_count\n");
        for ((t, g), n) in self.lags.iter().zip(&self.gamma_hat).zip(&self.pair_count) {
            out.push_str(&format!("{t},{g},{n}\n"));
        }
        out
    }
}

/// Places each relocation on the regular time grid, returning grid indices.
/// Intervals must be within 1% of an integral number of steps; gaps of whole
/// steps (missed fixes) are allowed.
fn grid_positions(traj: &Trajectory, step: f64) -> Result<Vec<usize>, VariogramError> {
    let pts = traj.points();
    let mut pos = Vec::with_capacity(pts.len());
    let mut g = 0usize;
    pos.push(0);
    for (i, w) in pts.windows(2).enumerate() {
        let dt = w[1].t - w[0].t;
        let k = (dt as f64 / step).round();
        if k < 1.0 || (dt as f64 - k * step).abs() > 0.01 * step {
            return Err(VariogramError::UnevenSampling { index: i + 1, interval: dt, step });
        }
        g += k as usize;
        pos.push(g);
    }
    Ok(pos)
}

/// Empirical semivariance for lags `k·t_d` up to `max_lag_fraction` of the
/// sampling duration. Lags without any pair are left out.
pub fn empirical_svf(
    traj: &Trajectory,
    max_lag_fraction: f64,
) -> Result<EmpiricalVariogram, VariogramError> {
    if !(max_lag_fraction > 0.0 && max_lag_fraction <= 1.0) {
        return Err(VariogramError::InvalidParams(format!(
            "max_lag_fraction {max_lag_fraction} outside (0, 1]"
        )));
    }
    if traj.len() < 2 {
        return Err(VariogramError::TooShort);
    }
    let step = median_sampling_interval(traj)?;
    let pos = grid_positions(traj, step)?;
    let span = *pos.last().unwrap();
    let max_k = ((max_lag_fraction * traj.duration() as f64 / step) + 1e-9).floor() as usize;
    let max_k = max_k.min(span);
    if max_k == 0 {
        return Err(VariogramError::TooShort);
    }

    let mut slots: Vec<Option<[f64; 2]>> = vec![None; span + 1];
    for (p, &g) in traj.points().iter().zip(&pos) {
        slots[g] = Some([p.x, p.y]);
    }

    let mut ev = EmpiricalVariogram {
        step,
        lags: Vec::new(),
        gamma_hat: Vec::new(),
        pair_count: Vec::new(),
        gamma_xx: Vec::new(),
        gamma_yy: Vec::new(),
        gamma_xy: Vec::new(),
    };
    for k in 1..=max_k {
        let (mut sxx, mut syy, mut sxy, mut n) = (0.0, 0.0, 0.0, 0u64);
        for (a, b) in slots.iter().zip(&slots[k..]) {
            if let (Some(a), Some(b)) = (a, b) {
                let dx = b[0] - a[0];
                let dy = b[1] - a[1];
                sxx += dx * dx;
                syy += dy * dy;
                sxy += dx * dy;
                n += 1;
            }
        }
        if n == 0 {
            continue;
        }
        let norm = 1.0 / (2.0 * n as f64);
        ev.lags.push(k as f64 * step);
        ev.gamma_xx.push(sxx * norm);
        ev.gamma_yy.push(syy * norm);
        ev.gamma_xy.push(sxy * norm);
        ev.gamma_hat.push((sxx + syy) * norm);
        ev.pair_count.push(n);
    }
    if ev.is_empty() {
        return Err(VariogramError::TooShort);
    }
    Ok(ev)
}
