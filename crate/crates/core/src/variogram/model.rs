//! Movement model families and their theoretical semivariance functions.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::VariogramError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Family {
    Iid,
    Brownian,
    Ou,
    Ouf,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Iid, Family::Brownian, Family::Ou, Family::Ouf];

    pub fn name(self) -> &'static str {
        match self {
            Family::Iid => "IID",
            Family::Brownian => "BM",
            Family::Ou => "OU",
            Family::Ouf => "OUF",
        }
    }

    /// Whether the family has a finite stationary variance (a home range).
    pub fn is_range_resident(self) -> bool {
        !matches!(self, Family::Brownian)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "IID" => Ok(Family::Iid),
            "BM" | "BROWNIAN" => Ok(Family::Brownian),
            "OU" => Ok(Family::Ou),
            "OUF" => Ok(Family::Ouf),
            other => Err(format!("unknown model family `{other}`")),
        }
    }
}

/// A continuous-time Gaussian movement model.
///
/// `sigma2` holds the position variances along the two principal axes, which
/// are rotated by `theta` from the x axis. The semivariance of the planar
/// process is the trace of its increment covariance, so a model's sill is
/// `sigma2[0] + sigma2[1]`. Brownian motion carries its diffusion rate in
/// `diffusion` (m²/s, so that the semivariance is `D·τ`) and ignores
/// `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovementModel {
    pub family: Family,
    pub sigma2: [f64; 2],
    pub theta: f64,
    pub tau_p: Option<f64>,
    pub tau_v: Option<f64>,
    pub diffusion: Option<f64>,
    pub mu: [f64; 2],
}

impl MovementModel {
    fn isotropic(family: Family, sill: f64) -> Self {
        Self {
            family,
            sigma2: [sill / 2.0, sill / 2.0],
            theta: 0.0,
            tau_p: None,
            tau_v: None,
            diffusion: None,
            mu: [0.0, 0.0],
        }
    }

    /// Isotropic IID model whose semivariance plateaus at `sill`.
    pub fn iid(sill: f64) -> Self {
        Self::isotropic(Family::Iid, sill)
    }

    pub fn brownian(diffusion: f64) -> Self {
        Self { diffusion: Some(diffusion), ..Self::isotropic(Family::Brownian, 0.0) }
    }

    pub fn ou(sill: f64, tau_p: f64) -> Self {
        Self { tau_p: Some(tau_p), ..Self::isotropic(Family::Ou, sill) }
    }

    pub fn ouf(sill: f64, tau_p: f64, tau_v: f64) -> Self {
        Self { tau_p: Some(tau_p), tau_v: Some(tau_v), ..Self::isotropic(Family::Ouf, sill) }
    }

    /// Replaces the variance structure with per-axis variances rotated by
    /// `theta`.
    pub fn with_axes(mut self, sigma2: [f64; 2], theta: f64) -> Self {
        self.sigma2 = sigma2;
        self.theta = theta;
        self
    }

    pub fn with_mean(mut self, mu: [f64; 2]) -> Self {
        self.mu = mu;
        self
    }

    pub fn sill(&self) -> f64 {
        self.sigma2[0] + self.sigma2[1]
    }

    pub fn is_isotropic(&self) -> bool {
        self.sigma2[0] == self.sigma2[1]
    }

    /// Stationary position covariance `R(θ) diag(σ²) R(θ)ᵀ`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        let [a, b] = self.sigma2;
        let xy = (a - b) * c * s;
        [[a * c * c + b * s * s, xy], [xy, a * s * s + b * c * c]]
    }

    pub fn validate(&self) -> Result<(), VariogramError> {
        let bad = |why: &str| Err(VariogramError::InvalidParams(why.to_string()));
        if !self.mu.iter().all(|m| m.is_finite()) {
            return bad("mean must be finite");
        }
        if self.family == Family::Brownian {
            return match self.diffusion {
                Some(d) if d > 0.0 && d.is_finite() => Ok(()),
                _ => bad("Brownian motion needs a positive diffusion rate"),
            };
        }
        if !self.sigma2.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return bad("per-axis variances must be positive");
        }
        if !(self.theta.is_finite() && (0.0..PI).contains(&self.theta)) {
            return bad("theta must lie in [0, pi)");
        }
        match self.family {
            Family::Iid => Ok(()),
            Family::Ou => match self.tau_p {
                Some(t) if t > 0.0 && t.is_finite() => Ok(()),
                _ => bad("OU needs a positive tau_p"),
            },
            Family::Ouf => match (self.tau_p, self.tau_v) {
                (Some(p), Some(v)) if v > 0.0 && v < p && p.is_finite() => Ok(()),
                _ => bad("OUF needs 0 < tau_v < tau_p"),
            },
            Family::Brownian => unreachable!(),
        }
    }

    /// Normalized semivariance shape `γ(τ)/sill` for the stationary
    /// families; for Brownian motion this is `D·τ` itself.
    pub(crate) fn shape(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        match self.family {
            Family::Iid => 1.0,
            Family::Brownian => self.diffusion.unwrap_or(0.0) * tau,
            Family::Ou => -(-tau / self.tau_p.unwrap()).exp_m1(),
            Family::Ouf => ouf_shape(tau, self.tau_p.unwrap(), self.tau_v.unwrap()),
        }
    }

    /// Semivariance of the planar process at lag `tau` (no validation).
    pub(crate) fn gamma(&self, tau: f64) -> f64 {
        match self.family {
            Family::Brownian => self.shape(tau),
            _ => self.sill() * self.shape(tau),
        }
    }
}

/// `1 - (τp e^{-τ/τp} - τv e^{-τ/τv}) / (τp - τv)`, the OUF (integrated OU
/// velocity with mean reversion) semivariance shape.
fn ouf_shape(tau: f64, tau_p: f64, tau_v: f64) -> f64 {
    let gap = tau_p - tau_v;
    if gap.abs() <= 1e-9 * tau_p {
        // confluent limit τv → τp
        let u = tau / tau_p;
        return 1.0 - (-u).exp() * (1.0 + u);
    }
    // 1 - acf, written to avoid cancellation when τ is small
    let ep = (-tau / tau_p).exp_m1();
    let ev = (-tau / tau_v).exp_m1();
    -(tau_p * ep - tau_v * ev) / gap
}

/// Theoretical semivariance `γ(τ)` in m².
pub fn theoretical_svf(model: &MovementModel, tau: f64) -> Result<f64, VariogramError> {
    model.validate()?;
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(VariogramError::InvalidParams(format!("lag {tau} must be >= 0")));
    }
    Ok(model.gamma(tau))
}
