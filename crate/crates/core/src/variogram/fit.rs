//! Pseudo-maximum-likelihood fitting of semivariance models.
//!
//! Each empirical ordinate `γ̂(τ)` is treated as Gaussian with mean `γ(τ; θ)`
//! and variance `2 γ(τ; θ)² / n(τ)`. Anisotropic models add a gain from the
//! normalized shape components, which is zero whenever the axes coincide.

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::json;

use super::model::{Family, MovementModel};
use super::{EmpiricalVariogram, VariogramError};
use crate::optim::{nelder_mead, NelderMeadOptions};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Lags supported by fewer pairs are left out of the likelihood.
    pub min_pairs: u64,
    pub starts: usize,
    pub rel_tol: f64,
    pub min_lags: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { min_pairs: 30, starts: 8, rel_tol: 1e-8, min_lags: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: MovementModel,
    pub log_pl: f64,
    /// Parameter count, including the two mean-location coordinates.
    pub k: usize,
    pub aic: f64,
    pub delta_aic: f64,
}

impl FitResult {
    fn new(model: MovementModel, log_pl: f64, k: usize) -> Self {
        let aic = 2.0 * k as f64 - 2.0 * log_pl;
        Self { model, log_pl, k, aic, delta_aic: 0.0 }
    }
}

/// Lag subset entering the likelihood.
struct Ordinates {
    tau: Vec<f64>,
    n: Vec<f64>,
    g: Vec<f64>,
    r1: Vec<f64>,
    r2: Vec<f64>,
}

impl Ordinates {
    fn select(ev: &EmpiricalVariogram, min_pairs: u64) -> Self {
        let mut o = Ordinates { tau: vec![], n: vec![], g: vec![], r1: vec![], r2: vec![] };
        for i in 0..ev.len() {
            if ev.pair_count[i] >= min_pairs && ev.lags[i] > 0.0 {
                o.tau.push(ev.lags[i]);
                o.n.push(ev.pair_count[i] as f64);
                o.g.push(ev.gamma_hat[i]);
                let g = ev.gamma_hat[i];
                let inv = if g > 0.0 { 1.0 / g } else { 0.0 };
                o.r1.push((ev.gamma_xx[i] - ev.gamma_yy[i]) * inv);
                o.r2.push(2.0 * ev.gamma_xy[i] * inv);
            }
        }
        o
    }

    fn len(&self) -> usize {
        self.tau.len()
    }
}

fn gauss_term(obs: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln()) - (obs - mean).powi(2) / (2.0 * var)
}

fn scalar_ll(model: &MovementModel, o: &Ordinates) -> f64 {
    let mut ll = 0.0;
    for i in 0..o.len() {
        let g = model.gamma(o.tau[i]);
        ll += gauss_term(o.g[i], g, 2.0 * g * g / o.n[i]);
    }
    ll
}

/// Likelihood of the scale-free shape ratios `(γ̂_xx − γ̂_yy)/γ̂` and
/// `2γ̂_xy/γ̂` under the model, minus their likelihood under isotropy. The
/// ratios depend only on the normalized covariance, so the gain is a function
/// of eccentricity and orientation alone and vanishes for isotropic models.
fn shape_gain(model: &MovementModel, o: &Ordinates) -> f64 {
    let c = model.covariance();
    let tr = c[0][0] + c[1][1];
    let (a, b, x) = (c[0][0] / tr, c[1][1] / tr, c[0][1] / tr);
    let m1 = a - b;
    let m2 = 2.0 * x;
    let v1 = 2.0 * (a * a + b * b - 2.0 * x * x);
    let v2 = 4.0 * (a * b + x * x);
    let mut gain = 0.0;
    for i in 0..o.len() {
        let n = o.n[i];
        gain += gauss_term(o.r1[i], m1, v1 / n) + gauss_term(o.r2[i], m2, v2 / n)
            - gauss_term(o.r1[i], 0.0, 1.0 / n)
            - gauss_term(o.r2[i], 0.0, 1.0 / n);
    }
    gain
}

fn log_pl(model: &MovementModel, o: &Ordinates) -> f64 {
    let ll = scalar_ll(model, o);
    if model.is_isotropic() && model.theta == 0.0 {
        ll
    } else {
        ll + shape_gain(model, o)
    }
}

/// Gaussian pseudo-log-likelihood of `model` given `ev`, over the lags with
/// at least `min_pairs` pairs.
pub fn pseudo_log_likelihood(model: &MovementModel, ev: &EmpiricalVariogram, min_pairs: u64) -> f64 {
    let o = Ordinates::select(ev, min_pairs);
    log_pl(model, &o)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unconstrained parameter vector ↔ model.
struct Layout {
    family: Family,
    anisotropic: bool,
}

impl Layout {
    fn timescale_dims(&self) -> usize {
        match self.family {
            Family::Iid | Family::Brownian => 0,
            Family::Ou => 1,
            Family::Ouf => 2,
        }
    }

    fn free_params(&self) -> usize {
        1 + self.timescale_dims() + if self.anisotropic { 2 } else { 0 }
    }

    fn decode(&self, x: &[f64]) -> Option<MovementModel> {
        let scale = x[0].exp();
        let mut m = match self.family {
            Family::Iid => MovementModel::iid(scale),
            Family::Brownian => MovementModel::brownian(scale),
            Family::Ou => MovementModel::ou(scale, x[1].exp()),
            Family::Ouf => {
                let tp = x[1].exp();
                MovementModel::ouf(scale, tp, tp * sigmoid(x[2]))
            }
        };
        if self.anisotropic {
            let k = 1 + self.timescale_dims();
            let (p, q) = (x[k], x[k + 1]);
            let e = p.hypot(q).tanh();
            let theta = (0.5 * q.atan2(p)).rem_euclid(PI);
            m = m.with_axes([scale * (1.0 + e) / 2.0, scale * (1.0 - e) / 2.0], theta);
        }
        m.validate().ok().map(|_| m)
    }

    fn encode(&self, scale: f64, tau_p: f64, tv_ratio: f64, shape: (f64, f64)) -> Vec<f64> {
        let mut x = vec![scale.ln()];
        match self.family {
            Family::Iid | Family::Brownian => {}
            Family::Ou => x.push(tau_p.ln()),
            Family::Ouf => {
                x.push(tau_p.ln());
                x.push(logit(tv_ratio));
            }
        }
        if self.anisotropic {
            x.push(shape.0);
            x.push(shape.1);
        }
        x
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Empirical anisotropy guess `(p, q)` from the pair-weighted shape ratios.
fn shape_guess(o: &Ordinates) -> (f64, f64) {
    let tot: f64 = o.n.iter().sum();
    if tot <= 0.0 {
        return (0.0, 0.0);
    }
    let d1: f64 = o.r1.iter().zip(&o.n).map(|(r, n)| r * n).sum::<f64>() / tot;
    let d2: f64 = o.r2.iter().zip(&o.n).map(|(r, n)| r * n).sum::<f64>() / tot;
    let e = d1.hypot(d2).min(0.95);
    if e < 1e-6 {
        return (0.0, 0.0);
    }
    let r = e.atanh();
    (r * d1 / d1.hypot(d2), r * d2 / d1.hypot(d2))
}

/// Quantile-based starting points, `opts.starts` of them.
fn starts(layout: &Layout, o: &Ordinates, count: usize) -> Vec<Vec<f64>> {
    let mut sorted = o.g.clone();
    sorted.sort_by(f64::total_cmp);
    let positive_min = sorted.iter().copied().find(|g| *g > 0.0).unwrap_or(1.0);
    let q = |p: f64| quantile(&sorted, p).max(positive_min);
    let sills = [q(0.9), q(1.0), q(0.75), 1.25 * q(1.0)];
    let tau_max = *o.tau.last().unwrap();
    // lag where γ̂ first reaches 63% of the upper plateau
    let plateau = q(0.9);
    let tau63 = o
        .tau
        .iter()
        .zip(&o.g)
        .find(|(_, g)| **g >= (1.0 - (-1.0f64).exp()) * plateau)
        .map(|(t, _)| *t)
        .unwrap_or(tau_max);
    let shape = if layout.anisotropic { shape_guess(o) } else { (0.0, 0.0) };

    let mut out = Vec::with_capacity(count);
    for s in 0..count {
        let aniso = if s % 2 == 0 { shape } else { (0.0, 0.0) };
        let x = match layout.family {
            Family::Iid => {
                let p = 0.3 + 0.7 * s as f64 / count.max(2).saturating_sub(1) as f64;
                layout.encode(q(p.min(1.0)), 1.0, 0.5, aniso)
            }
            Family::Brownian => {
                let mut rates: Vec<f64> =
                    o.tau.iter().zip(&o.g).filter(|(_, g)| **g > 0.0).map(|(t, g)| g / t).collect();
                rates.sort_by(f64::total_cmp);
                let d = if rates.is_empty() {
                    positive_min / tau_max
                } else {
                    quantile(&rates, s as f64 / count.max(2).saturating_sub(1) as f64)
                };
                layout.encode(d, 1.0, 0.5, aniso)
            }
            Family::Ou => {
                let mult = [1.0, 0.3, 3.0, 0.1][s / 2 % 4];
                layout.encode(sills[s % 2 + (s / 8) % 2 * 2], tau63 * mult, 0.5, aniso)
            }
            Family::Ouf => {
                let (mult, ratio) = [(1.0, 0.1), (1.0, 0.01), (0.5, 0.3), (3.0, 0.05)][s / 2 % 4];
                layout.encode(sills[s % 2 + (s / 8) % 2 * 2], tau63 * mult, ratio, aniso)
            }
        };
        out.push(x);
    }
    out
}

fn param_count(family: Family, anisotropic: bool) -> usize {
    let core = match family {
        Family::Iid | Family::Brownian => 1,
        Family::Ou => 2,
        Family::Ouf => 3,
    };
    core + 2 + if anisotropic { 2 } else { 0 }
}

pub fn fit_svf_model(
    ev: &EmpiricalVariogram,
    family: Family,
    anisotropic: bool,
) -> Result<FitResult, VariogramError> {
    fit_svf_model_with(ev, family, anisotropic, &FitOptions::default())
}

/// Maximizes the pseudo-log-likelihood over the model's parameters with a
/// multi-start Nelder-Mead search in log-transformed coordinates.
pub fn fit_svf_model_with(
    ev: &EmpiricalVariogram,
    family: Family,
    anisotropic: bool,
    opts: &FitOptions,
) -> Result<FitResult, VariogramError> {
    if anisotropic && family == Family::Brownian {
        return Err(VariogramError::UnsupportedAnisotropy(family));
    }
    let o = Ordinates::select(ev, opts.min_pairs);
    if o.len() < opts.min_lags {
        return Err(VariogramError::InsufficientLags { needed: opts.min_lags, found: o.len() });
    }
    if o.g.iter().all(|&g| g == 0.0) {
        return Err(VariogramError::DegenerateVariogram);
    }
    let layout = Layout { family, anisotropic };
    let objective = |x: &[f64]| match layout.decode(x) {
        Some(m) => -log_pl(&m, &o),
        None => f64::INFINITY,
    };
    let nm = NelderMeadOptions { rel_tol: opts.rel_tol, ..Default::default() };

    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in starts(&layout, &o, opts.starts.max(1)) {
        let m = nelder_mead(objective, &x0, &nm);
        if !m.value.is_finite() {
            continue;
        }
        // restart from the optimum to escape a collapsed simplex
        let m = nelder_mead(objective, &m.x, &NelderMeadOptions { initial_step: 0.1, ..nm });
        if m.converged && m.value.is_finite() && best.as_ref().is_none_or(|(_, v)| m.value < *v) {
            best = Some((m.x, m.value));
        }
    }
    let (x, value) = best.ok_or(VariogramError::NonConvergence)?;
    debug_assert_eq!(x.len(), layout.free_params());
    let model = layout.decode(&x).ok_or(VariogramError::NonConvergence)?;
    Ok(FitResult::new(model, -value, param_count(family, anisotropic)))
}

/// Sorts fits by ascending AIC (ties keep input order) and fills in
/// `delta_aic`.
pub fn select_model(mut fits: Vec<FitResult>) -> Vec<FitResult> {
    fits.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    if let Some(min) = fits.first().map(|f| f.aic) {
        for f in &mut fits {
            f.delta_aic = f.aic - min;
        }
    }
    fits
}

/// Ranked fits as a JSON array of `{family, params, aic, delta_aic, ...}`.
pub fn fit_report_json(animal_id: &str, ranked: &[FitResult]) -> serde_json::Value {
    let rows: Vec<_> = ranked
        .iter()
        .map(|f| {
            let m = &f.model;
            json!({
                "family": m.family.name(),
                "anisotropic": !(m.is_isotropic() && m.theta == 0.0),
                "params": {
                    "sill_m2": if m.family == Family::Brownian { None } else { Some(m.sill()) },
                    "sigma2_m2": if m.family == Family::Brownian { None } else { Some(m.sigma2) },
                    "theta_rad": m.theta,
                    "tau_p_s": m.tau_p,
                    "tau_v_s": m.tau_v,
                    "diffusion_m2_per_s": m.diffusion,
                    "mu_m": m.mu,
                },
                "log_pl": f.log_pl,
                "k": f.k,
                "aic": f.aic,
                "delta_aic": f.delta_aic,
            })
        })
        .collect();
    json!({ "animal_id": animal_id, "fits": rows })
}
