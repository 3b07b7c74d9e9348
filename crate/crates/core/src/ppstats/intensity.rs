//! Log-linear multitype intensities fitted by Berman-Turner quadrature.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::PpError;
use crate::data::{MarkedPoint, MarkedPointPattern, Window};
use crate::rng::seeded;

pub const MAX_IRLS_ITERATIONS: usize = 100;
pub const IRLS_TOL: f64 = 1e-8;

/// `λ_m(x, y) = exp(α + β x + γ y)` for one mark, with standard errors when
/// fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkIntensity {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub se: Option<[f64; 3]>,
}

impl MarkIntensity {
    pub fn constant(rate: f64) -> Self {
        Self { alpha: rate.ln(), beta: 0.0, gamma: 0.0, se: None }
    }

    pub fn log_linear(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma, se: None }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        (self.alpha + self.beta * x + self.gamma * y).exp()
    }
}

/// Per-mark intensities on a window. A mark may carry a torus shift, in which
/// case its intensity is read at the wrapped, inverse-shifted location.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityModel {
    marks: Vec<MarkIntensity>,
    shifts: Vec<[f64; 2]>,
    window: Window,
    fitted: bool,
}

impl IntensityModel {
    pub fn new(window: Window, marks: Vec<MarkIntensity>) -> Result<Self, PpError> {
        for m in &marks {
            if !(m.alpha.is_finite() && m.beta.is_finite() && m.gamma.is_finite()) {
                return Err(PpError::InvalidIntensity);
            }
        }
        let shifts = vec![[0.0; 2]; marks.len()];
        Ok(Self { marks, shifts, window, fitted: false })
    }

    /// Constant rate per mark.
    pub fn homogeneous(window: Window, rates: &[f64]) -> Result<Self, PpError> {
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(PpError::InvalidIntensity);
        }
        Self::new(window, rates.iter().map(|&r| MarkIntensity::constant(r)).collect())
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn mark_count(&self) -> usize {
        self.marks.len()
    }

    pub fn coefficients(&self, m: usize) -> &MarkIntensity {
        &self.marks[m]
    }

    pub fn shift_of(&self, m: usize) -> [f64; 2] {
        self.shifts[m]
    }

    /// `λ_m(x, y)`.
    pub fn intensity(&self, m: usize, x: f64, y: f64) -> f64 {
        let [dx, dy] = self.shifts[m];
        if dx == 0.0 && dy == 0.0 {
            self.marks[m].eval(x, y)
        } else {
            let (ux, uy) = self.window.wrap(x - dx, y - dy);
            self.marks[m].eval(ux, uy)
        }
    }

    /// Adds `(dx, dy)` to the torus shift of mark `m`.
    pub fn shifted(&self, m: usize, dx: f64, dy: f64) -> Self {
        let mut out = self.clone();
        let s = &mut out.shifts[m];
        s[0] = (s[0] + dx).rem_euclid(self.window.width());
        s[1] = (s[1] + dy).rem_euclid(self.window.height());
        if s[0] == 0.0 && s[1] == 0.0 {
            *s = [0.0; 2];
        }
        out
    }
}

/// Fits `λ_m(x, y) = exp(α_m + β_m x + γ_m y)` separately for each mark by
/// maximizing the Berman-Turner quadrature approximation of the Poisson
/// log-likelihood. Dummy points sit at the centers of a `quad_resolution`²
/// grid; each cell's area is shared equally by the data and dummy points in
/// it.
pub fn fit_intensity(p: &MarkedPointPattern, quad_resolution: usize) -> Result<IntensityModel, PpError> {
    if quad_resolution == 0 {
        return Err(PpError::InvalidQuadrature);
    }
    let w = *p.window();
    let mut coefs = Vec::with_capacity(p.marks().len());
    for (m, name) in p.marks().iter().enumerate() {
        let pts = p.coords_of(m);
        if pts.len() < 4 {
            return Err(PpError::InsufficientPoints(name.clone()));
        }
        coefs.push(fit_one(&pts, &w, quad_resolution).ok_or_else(|| PpError::NotConverged(name.clone()))?);
    }
    let mut model = IntensityModel::new(w, coefs)?;
    model.fitted = true;
    Ok(model)
}

fn fit_one(pts: &[[f64; 2]], w: &Window, q: usize) -> Option<MarkIntensity> {
    let (cx, cy) = (0.5 * (w.x_min + w.x_max), 0.5 * (w.y_min + w.y_max));
    let s = 0.5 * w.width().max(w.height());
    let (dx, dy) = (w.width() / q as f64, w.height() / q as f64);
    let cell_of = |x: f64, y: f64| {
        let i = (((x - w.x_min) / dx) as usize).min(q - 1);
        let j = (((y - w.y_min) / dy) as usize).min(q - 1);
        j * q + i
    };
    let mut count = vec![1usize; q * q];
    for p in pts {
        count[cell_of(p[0], p[1])] += 1;
    }
    // (u, v, weight, indicator)
    let mut quad: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(pts.len() + q * q);
    let cell_area = dx * dy;
    for p in pts {
        let c = count[cell_of(p[0], p[1])];
        quad.push(((p[0] - cx) / s, (p[1] - cy) / s, cell_area / c as f64, 1.0));
    }
    for j in 0..q {
        for i in 0..q {
            let x = w.x_min + (i as f64 + 0.5) * dx;
            let y = w.y_min + (j as f64 + 0.5) * dy;
            quad.push(((x - cx) / s, (y - cy) / s, cell_area / count[j * q + i] as f64, 0.0));
        }
    }

    let deviance = |b: &[f64; 3]| {
        quad.iter()
            .map(|&(u, v, wt, z)| {
                let mu = (b[0] + b[1] * u + b[2] * v).exp();
                let y = z / wt;
                let ylog = if y > 0.0 { y * (y / mu).ln() } else { 0.0 };
                2.0 * wt * (ylog - (y - mu))
            })
            .sum::<f64>()
    };
    let mut b = [(pts.len() as f64 / w.area()).ln(), 0.0, 0.0];
    let mut dev = deviance(&b);
    let mut info = [[0.0; 3]; 3];
    let mut converged = false;
    for _ in 0..MAX_IRLS_ITERATIONS {
        let mut a = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for &(u, v, wt, z) in &quad {
            let eta = b[0] + b[1] * u + b[2] * v;
            let mu = eta.exp();
            let y = z / wt;
            let ww = wt * mu;
            let work = eta + (y - mu) / mu;
            let x = [1.0, u, v];
            for r in 0..3 {
                rhs[r] += ww * x[r] * work;
                for c in 0..3 {
                    a[r][c] += ww * x[r] * x[c];
                }
            }
        }
        let nb = solve3(&a, &rhs)?;
        let nd = deviance(&nb);
        if !nd.is_finite() {
            return None;
        }
        let change = (nd - dev).abs() / (nd.abs() + 0.1);
        b = nb;
        dev = nd;
        info = a;
        if change < IRLS_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    // back to raw coordinates: η = a + b (x - cx)/s + c (y - cy)/s
    let t = [[1.0, -cx / s, -cy / s], [0.0, 1.0 / s, 0.0], [0.0, 0.0, 1.0 / s]];
    let raw = [t[0][0] * b[0] + t[0][1] * b[1] + t[0][2] * b[2], b[1] / s, b[2] / s];
    let se = invert3(&info).map(|cov| {
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            let mut v = 0.0;
            for a in 0..3 {
                for c in 0..3 {
                    v += t[r][a] * cov[a][c] * t[r][c];
                }
            }
            *o = v.max(0.0).sqrt();
        }
        out
    });
    Some(MarkIntensity { alpha: raw[0], beta: raw[1], gamma: raw[2], se })
}

fn invert3(a: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if !det.is_finite() || det.abs() < 1e-300 {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            // cofactor of (c, r)
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            *v = (a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1]) / det;
        }
    }
    Some(inv)
}

fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let inv = invert3(a)?;
    let mut x = [0.0; 3];
    for r in 0..3 {
        x[r] = inv[r][0] * b[0] + inv[r][1] * b[1] + inv[r][2] * b[2];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Independent Poisson processes, one per mark, simulated on `window` by
/// thinning a homogeneous process at each mark's maximal rate.
pub fn simulate_poisson(
    model: &IntensityModel,
    marks: &[String],
    seed: u64,
) -> Result<MarkedPointPattern, PpError> {
    let w = *model.window();
    let mut rng = seeded(seed);
    let mut points = Vec::new();
    for m in 0..model.mark_count() {
        let lmax = [
            (w.x_min, w.y_min),
            (w.x_max, w.y_min),
            (w.x_min, w.y_max),
            (w.x_max, w.y_max),
        ]
        .iter()
        .map(|&(x, y)| model.coefficients(m).eval(x, y))
        .fold(0.0, f64::max);
        let mean = lmax * w.area();
        let n = if mean > 0.0 {
            Poisson::new(mean).map_err(|_| PpError::InvalidIntensity)?.sample(&mut rng) as usize
        } else {
            0
        };
        for _ in 0..n {
            let x = w.x_min + rng.random::<f64>() * w.width();
            let y = w.y_min + rng.random::<f64>() * w.height();
            if rng.random::<f64>() * lmax < model.intensity(m, x, y) {
                points.push(MarkedPoint { x, y, mark: m });
            }
        }
    }
    Ok(MarkedPointPattern::new(points, marks.to_vec(), w)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("m{i}")).collect()
    }

    #[test]
    fn homogeneous_fit_matches_analytic_mle() {
        let model = IntensityModel::homogeneous(Window::unit(), &[100.0]).unwrap();
        let (mut hits, mut mean_alpha) = (0, 0.0);
        for seed in 0..20 {
            let p = simulate_poisson(&model, &names(1), seed).unwrap();
            let fit = fit_intensity(&p, 32).unwrap();
            let c = fit.coefficients(0);
            let se = c.se.unwrap();
            assert!((c.alpha - 100f64.ln()).abs() < 4.0 * se[0], "{c:?}");
            mean_alpha += c.alpha / 20.0;
            if c.beta.abs() < 2.0 * se[1] && c.gamma.abs() < 2.0 * se[2] {
                hits += 1;
            }
        }
        assert!((mean_alpha - 4.605).abs() < 0.25, "{mean_alpha}");
        // slopes are null; each is inside 2 SE about 95% of the time
        assert!(hits >= 15, "{hits}");
    }

    #[test]
    fn fitted_mass_matches_count() {
        let model = IntensityModel::homogeneous(Window::unit(), &[100.0]).unwrap();
        let p = simulate_poisson(&model, &names(1), 3).unwrap();
        // the score equation for α makes the fitted mass equal n
        let n = p.len() as f64;
        let fit = fit_intensity(&p, 32).unwrap();
        let q = 64;
        let total: f64 = (0..q * q)
            .map(|k| {
                let x = ((k % q) as f64 + 0.5) / q as f64;
                let y = ((k / q) as f64 + 0.5) / q as f64;
                fit.intensity(0, x, y) / (q * q) as f64
            })
            .sum();
        assert!((total / n - 1.0).abs() < 0.02, "{total} vs {n}");
    }

    #[test]
    fn log_linear_trend_recovered() {
        let truth = IntensityModel::new(Window::unit(), vec![MarkIntensity::log_linear(4.0, 1.0, 0.0)]).unwrap();
        let (mut a, mut b) = (0.0, 0.0);
        for seed in 0..50 {
            let p = simulate_poisson(&truth, &names(1), 100 + seed).unwrap();
            let c = *fit_intensity(&p, 32).unwrap().coefficients(0);
            a += c.alpha / 50.0;
            b += c.beta / 50.0;
        }
        assert!((a - 4.0).abs() < 0.1 && (b - 1.0).abs() < 0.1, "{a} {b}");
    }

    #[test]
    fn marks_are_fitted_separately() {
        let w = Window::new(0.0, 10.0, 0.0, 10.0).unwrap();
        let model = IntensityModel::homogeneous(w, &[2.0, 3.0]).unwrap();
        let p = simulate_poisson(&model, &names(2), 9).unwrap();
        let moved: Vec<MarkedPoint> = p
            .points()
            .iter()
            .map(|q| if q.mark == 1 { MarkedPoint { x: q.x * 0.5, y: q.y * 0.25 + 1.0, mark: 1 } } else { *q })
            .collect();
        let p2 = MarkedPointPattern::new(moved, names(2), w).unwrap();
        let a = fit_intensity(&p, 16).unwrap();
        let b = fit_intensity(&p2, 16).unwrap();
        assert_eq!(a.coefficients(0), b.coefficients(0));
        assert_ne!(a.coefficients(1), b.coefficients(1));
    }

    #[test]
    fn too_few_points() {
        let p = MarkedPointPattern::from_labelled(
            [(0.1, 0.1, "a"), (0.2, 0.2, "a"), (0.3, 0.5, "a")],
            Window::unit(),
        )
        .unwrap();
        assert_eq!(fit_intensity(&p, 8), Err(PpError::InsufficientPoints("a".into())));
    }

    #[test]
    fn shifted_intensity_follows_the_torus() {
        let m = IntensityModel::new(Window::unit(), vec![MarkIntensity::log_linear(0.0, 1.0, 2.0)]).unwrap();
        let s = m.shifted(0, 0.3, 0.0);
        assert!((s.intensity(0, 0.4, 0.5) - m.intensity(0, 0.1, 0.5)).abs() < 1e-12);
        assert!((s.intensity(0, 0.1, 0.5) - m.intensity(0, 0.8, 0.5)).abs() < 1e-12);
        assert_eq!(m.shifted(0, 0.0, 0.0), m);
    }
}
