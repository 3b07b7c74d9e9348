//! Gaussian kernel density estimation on a regular grid, with the
//! reference-rule bandwidth and its autocorrelation-aware variant.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{DensityGrid, HomeRangeError};
use crate::data::{Trajectory, Window};
use crate::variogram::{Family, FitResult};

/// Kernel contributions beyond this squared Mahalanobis distance are
/// dropped (`e^{-50} ≈ 2e-22` relative to the peak).
const CUTOFF_M2: f64 = 100.0;

pub const DEFAULT_GRID: usize = 256;

/// Symmetric positive-definite 2×2 bandwidth matrix (m²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth(pub [[f64; 2]; 2]);

impl Bandwidth {
    pub fn isotropic(var: f64) -> Self {
        Bandwidth([[var, 0.0], [0.0, var]])
    }

    pub fn det(&self) -> f64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn scaled(&self, k: f64) -> Self {
        let m = self.0;
        Bandwidth([[k * m[0][0], k * m[0][1]], [k * m[1][0], k * m[1][1]]])
    }

    pub fn is_positive_definite(&self) -> bool {
        let m = self.0;
        m.iter().flatten().all(|v| v.is_finite())
            && m[0][1] == m[1][0]
            && m[0][0] > 0.0
            && self.det() > 0.0
    }

    /// Largest marginal standard deviation.
    pub fn max_marginal_sd(&self) -> f64 {
        self.0[0][0].max(self.0[1][1]).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: DEFAULT_GRID, ny: DEFAULT_GRID }
    }
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self { nx: n, ny: n }
    }
}

fn sample_covariance(pts: &[[f64; 2]]) -> [[f64; 2]; 2] {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let d = n - 1.0;
    [[sxx / d, sxy / d], [sxy / d, syy / d]]
}

/// Gaussian reference rule with bandwidth shape tied to the data:
/// `Λ = n^{-1/3} Σ̂`.
pub fn kde_bandwidth(traj: &Trajectory) -> Result<Bandwidth, HomeRangeError> {
    if traj.len() < 10 {
        return Err(HomeRangeError::TooFewPoints { found: traj.len(), needed: 10 });
    }
    let pts: Vec<[f64; 2]> = traj.coords().collect();
    let cov = Bandwidth(sample_covariance(&pts));
    let tr = cov.0[0][0] + cov.0[1][1];
    if !(tr > 0.0) || cov.det() <= 1e-12 * tr * tr {
        return Err(HomeRangeError::SingularCovariance);
    }
    Ok(cov.scaled((traj.len() as f64).powf(-1.0 / 3.0)))
}

/// Grid window: bounding box of the data padded by 1% of its extent, then
/// by four marginal bandwidths.
fn grid_window(pts: &[[f64; 2]], bw: &Bandwidth) -> Window {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let pad = 4.0 * bw.max_marginal_sd();
    let px = 0.01 * (x1 - x0) + pad;
    let py = 0.01 * (y1 - y0) + pad;
    Window { x_min: x0 - px, x_max: x1 + px, y_min: y0 - py, y_max: y1 + py }
}

/// Evaluates the kernel density estimate of `pts` with bandwidth `bw` at the
/// cell centers of an `nx × ny` grid over `window`.
pub fn kde_on_window(pts: &[[f64; 2]], bw: &Bandwidth, window: Window, grid: GridSpec) -> DensityGrid {
    let m = bw.0;
    let det = bw.det();
    // Λ^{-1}
    let (ia, ib, ic) = (m[1][1] / det, -m[0][1] / det, m[0][0] / det);
    let norm = 1.0 / (2.0 * PI * det.sqrt() * pts.len() as f64);
    let (nx, ny) = (grid.nx, grid.ny);
    let dx = window.width() / nx as f64;
    let dy = window.height() / ny as f64;
    // half-extents of the cutoff ellipse
    let rx = (CUTOFF_M2 * m[0][0]).sqrt();
    let ry = (CUTOFF_M2 * m[1][1]).sqrt();

    let mut values = vec![0.0; nx * ny];
    values.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let cy = window.y_min + (j as f64 + 0.5) * dy;
        for p in pts {
            let qy = cy - p[1];
            if qy.abs() > ry {
                continue;
            }
            let lo = (((p[0] - rx - window.x_min) / dx - 0.5).floor().max(0.0)) as usize;
            let hi = (((p[0] + rx - window.x_min) / dx - 0.5).ceil().max(0.0) as usize).min(nx - 1);
            for (i, v) in row.iter_mut().enumerate().take(hi + 1).skip(lo) {
                let qx = window.x_min + (i as f64 + 0.5) * dx - p[0];
                let m2 = ia * qx * qx + 2.0 * ib * qx * qy + ic * qy * qy;
                if m2 <= CUTOFF_M2 {
                    *v += (-0.5 * m2).exp();
                }
            }
        }
        for v in row.iter_mut() {
            *v *= norm;
        }
    });
    DensityGrid { window, nx, ny, values }
}

/// Kernel density estimate of the relocations on a grid covering the data
/// padded by four marginal bandwidths.
pub fn kde_density(traj: &Trajectory, bw: &Bandwidth, grid: GridSpec) -> Result<DensityGrid, HomeRangeError> {
    if !bw.is_positive_definite() {
        return Err(HomeRangeError::InvalidBandwidth);
    }
    if grid.nx == 0 || grid.ny == 0 {
        return Err(HomeRangeError::InvalidGrid);
    }
    let pts: Vec<[f64; 2]> = traj.coords().collect();
    let window = grid_window(&pts, bw);
    Ok(kde_on_window(&pts, bw, window, grid))
}

/// Effective sample size implied by a fitted movement model.
pub fn effective_sample_size(traj: &Trajectory, fit: &FitResult) -> Result<f64, HomeRangeError> {
    let n = traj.len() as f64;
    match fit.model.family {
        Family::Iid => Ok(n),
        Family::Ou | Family::Ouf => {
            let tau = fit.model.tau_p.ok_or(HomeRangeError::UnsupportedFamily(fit.model.family))?;
            Ok((traj.duration() as f64 / tau).clamp(1.0, n))
        }
        Family::Brownian => Err(HomeRangeError::UnsupportedFamily(Family::Brownian)),
    }
}

/// AKDE bandwidth `n_eff^{-1/3} Σ_model`.
pub fn akde_bandwidth(traj: &Trajectory, fit: &FitResult) -> Result<Bandwidth, HomeRangeError> {
    let n_eff = effective_sample_size(traj, fit)?;
    Ok(Bandwidth(fit.model.covariance()).scaled(n_eff.powf(-1.0 / 3.0)))
}

/// Autocorrelated KDE: the relocations smoothed with a bandwidth built from
/// the fitted model's covariance and its effective sample size.
pub fn akde_density(traj: &Trajectory, fit: &FitResult, grid: GridSpec) -> Result<DensityGrid, HomeRangeError> {
    let bw = akde_bandwidth(traj, fit)?;
    kde_density(traj, &bw, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{validate_trajectory, Relocation};
    use crate::variogram::MovementModel;

    fn traj(pts: &[[f64; 2]]) -> Trajectory {
        validate_trajectory(
            pts.iter().enumerate().map(|(i, p)| Relocation::new(i as i64 * 3600, p[0], p[1])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn reference_rule_formula() {
        // 1000 points with sample covariance exactly 100·I: the 4 corners of a
        // square repeated, scaled
        let n = 1000;
        let base = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
        let s = (100.0 * (n as f64 - 1.0) / n as f64).sqrt();
        let pts: Vec<[f64; 2]> = (0..n).map(|i| [base[i % 4][0] * s, base[i % 4][1] * s]).collect();
        let bw = kde_bandwidth(&traj(&pts)).unwrap();
        for (a, b) in bw.0.iter().flatten().zip([10.0, 0.0, 0.0, 10.0]) {
            assert!((a - b).abs() < 1e-9, "{:?}", bw);
        }
    }

    #[test]
    fn singular_and_small_inputs() {
        let same = vec![[2.0, 3.0]; 20];
        assert_eq!(kde_bandwidth(&traj(&same)), Err(HomeRangeError::SingularCovariance));
        let line: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert_eq!(kde_bandwidth(&traj(&line)), Err(HomeRangeError::SingularCovariance));
        assert!(matches!(kde_bandwidth(&traj(&same[..5])), Err(HomeRangeError::TooFewPoints { .. })));
        let bad = Bandwidth([[1.0, 2.0], [2.0, 1.0]]);
        assert_eq!(kde_density(&traj(&same), &bad, GridSpec::default()), Err(HomeRangeError::InvalidBandwidth));
    }

    #[test]
    fn single_point_is_normalized_gaussian() {
        let tr = traj(&[[10.0, -5.0]]);
        let g = kde_density(&tr, &Bandwidth([[4.0, 1.0], [1.0, 2.0]]), GridSpec::default()).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-3, "{}", g.integral());
        let (i, j) = g.argmax();
        let (cx, cy) = g.cell_center(i, j);
        let (dx, dy) = g.cell_size();
        assert!((cx - 10.0).abs() <= dx && (cy + 5.0).abs() <= dy);
    }

    #[test]
    fn symmetric_pair_gives_symmetric_density() {
        let tr = traj(&[[-3.0, 1.0], [3.0, -1.0]]);
        let g = kde_density(&tr, &Bandwidth::isotropic(2.0), GridSpec::square(64)).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let a = g.value(i, j);
                let b = g.value(g.nx - 1 - i, g.ny - 1 - j);
                assert!((a - b).abs() < 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn akde_bandwidth_scaling() {
        let pts: Vec<[f64; 2]> = (0..1000).map(|i| [(i as f64).sin() * 50.0, (i as f64 * 0.7).cos() * 30.0]).collect();
        let tr = traj(&pts);
        let t = tr.duration() as f64;
        let model = MovementModel::ou(2.0, t / 8.0);
        let fit = FitResult { model, log_pl: 0.0, k: 4, aic: 0.0, delta_aic: 0.0 };
        let n_eff = effective_sample_size(&tr, &fit).unwrap();
        assert!((n_eff - 8.0).abs() < 1e-9);
        // Λ = 8^{-1/3} Σ: each variance entry is the model's halved
        let ak = akde_bandwidth(&tr, &fit).unwrap();
        let cov = model.covariance();
        assert!((ak.0[0][0] - cov[0][0] / 2.0).abs() < 1e-12 && (ak.0[1][1] - cov[1][1] / 2.0).abs() < 1e-12);
        // against n = 1000 independent fixes the bandwidth grows by (1000/8)^{1/3} = 5
        let iid = FitResult { model: MovementModel::iid(2.0), ..fit.clone() };
        let kd = akde_bandwidth(&tr, &iid).unwrap();
        assert!((ak.0[0][0] / kd.0[0][0] - 5.0).abs() < 1e-9);
        let bm = FitResult { model: MovementModel::brownian(1.0), ..fit };
        assert_eq!(akde_density(&tr, &bm, GridSpec::default()), Err(HomeRangeError::UnsupportedFamily(Family::Brownian)));
    }

    #[test]
    fn iid_akde_equals_kde_with_model_covariance() {
        let pts: Vec<[f64; 2]> = (0..300).map(|i| [(i as f64 * 1.3).sin() * 40.0, (i as f64 * 0.37).cos() * 25.0]).collect();
        let tr = traj(&pts);
        let model = MovementModel::iid(0.0).with_axes([900.0, 300.0], 0.4);
        let fit = FitResult { model, log_pl: 0.0, k: 3, aic: 0.0, delta_aic: 0.0 };
        let ak = akde_density(&tr, &fit, GridSpec::square(128)).unwrap();
        let bw = Bandwidth(model.covariance()).scaled(300f64.powf(-1.0 / 3.0));
        let kd = kde_density(&tr, &bw, GridSpec::square(128)).unwrap();
        assert_eq!(ak.window, kd.window);
        for (a, b) in ak.values.iter().zip(&kd.values) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
