//! Multitype point-pattern statistics: log-linear intensities and the
//! inhomogeneous cross-type K, L, F, G and J functions with border
//! (reduced-sample) edge correction.

mod estimators;
mod intensity;

pub use estimators::{
    fhat_inhom, fhat_inhom_with, ghat_cross, jhat_cross, khat_cross, lambda_tilde, lhat_cross, summary_curve,
    J_TRUNCATION, LAMBDA_TILDE_GRID, REFERENCE_GRID,
};
pub use intensity::{fit_intensity, simulate_poisson, IntensityModel, MarkIntensity};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::data::{DataError, Window};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PpError {
    #[error("mark {0} has fewer than 4 points")]
    InsufficientPoints(String),
    #[error("intensity fit for mark {0} did not converge")]
    NotConverged(String),
    #[error("mark {0} has no points")]
    EmptyComponent(String),
    #[error("cross-type statistics need two distinct marks")]
    SameMark,
    #[error("intensity must be finite and positive")]
    InvalidIntensity,
    #[error("quadrature grid needs at least one cell")]
    InvalidQuadrature,
    #[error("distance grid must start at 0 and increase strictly")]
    InvalidRGrid,
    #[error("curves are on different distance grids")]
    GridMismatch,
    #[error("J is undefined at every distance")]
    DivisionDomain,
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CurveKind {
    K,
    L,
    F,
    G,
    J,
}

impl CurveKind {
    /// Value under independent homogeneous Poisson components, where it does
    /// not depend on the intensity.
    pub fn poisson_value(self, r: f64) -> Option<f64> {
        match self {
            CurveKind::K => Some(std::f64::consts::PI * r * r),
            CurveKind::L => Some(r),
            CurveKind::J => Some(1.0),
            CurveKind::F | CurveKind::G => None,
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CurveKind::K => "K",
            CurveKind::L => "L",
            CurveKind::F => "F",
            CurveKind::G => "G",
            CurveKind::J => "J",
        };
        f.write_str(s)
    }
}

impl FromStr for CurveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "K" => Ok(CurveKind::K),
            "L" => Ok(CurveKind::L),
            "F" => Ok(CurveKind::F),
            "G" => Ok(CurveKind::G),
            "J" => Ok(CurveKind::J),
            _ => Err(format!("unknown summary function {s:?}")),
        }
    }
}

/// Estimated summary function on a distance grid. `None` marks distances
/// where the estimator is undefined (no eligible reference points, or a
/// truncated J tail).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryCurve {
    pub kind: CurveKind,
    pub mark_i: String,
    pub mark_j: String,
    pub r: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

impl SummaryCurve {
    pub fn at(&self, k: usize) -> Option<f64> {
        self.values[k]
    }

    /// Value at the grid distance closest to `r`.
    pub fn value_near(&self, r: f64) -> Option<f64> {
        let k = (0..self.r.len()).min_by(|&a, &b| (self.r[a] - r).abs().total_cmp(&(self.r[b] - r).abs()))?;
        self.values[k]
    }

    pub fn same_grid(&self, other: &SummaryCurve) -> bool {
        self.r == other.r
    }

    /// Rows of `r_m,value,kind,mark_i,mark_j`, undefined values left empty.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (r, v) in self.r.iter().zip(&self.values) {
            let v = v.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{r},{v},{},{},{}\n", self.kind, self.mark_i, self.mark_j));
        }
        out
    }
}

pub const CURVE_CSV_HEADER: &str = "r_m,value,kind,mark_i,mark_j";

pub fn curves_csv(curves: &[SummaryCurve]) -> String {
    let mut out = format!("{CURVE_CSV_HEADER}\n");
    for c in curves {
        out.push_str(&c.csv_rows());
    }
    out
}

/// `n` evenly spaced distances from 0 to a quarter of the shorter window side.
pub fn default_r_grid(window: &Window, n: usize) -> Vec<f64> {
    r_grid(0.25 * window.width().min(window.height()), n)
}

pub fn r_grid(r_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| r_max * k as f64 / (n - 1) as f64).collect()
}

pub(crate) fn check_r_grid(r: &[f64]) -> Result<(), PpError> {
    let ok = r.first() == Some(&0.0)
        && r.iter().all(|v| v.is_finite())
        && r.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(PpError::InvalidRGrid)
    }
}

/// Uniform bucket grid for fixed-radius neighbour queries.
pub(crate) struct SpatialHash<'a> {
    pts: &'a [[f64; 2]],
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> SpatialHash<'a> {
    const MAX_CELLS_PER_AXIS: usize = 1024;

    pub(crate) fn new(pts: &'a [[f64; 2]], window: &Window, radius: f64) -> Self {
        let extent = window.width().max(window.height());
        let cell = radius.max(extent / Self::MAX_CELLS_PER_AXIS as f64);
        let nx = ((window.width() / cell).ceil() as usize).max(1);
        let ny = ((window.height() / cell).ceil() as usize).max(1);
        let mut h = SpatialHash { pts, x0: window.x_min, y0: window.y_min, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for (k, p) in pts.iter().enumerate() {
            let (i, j) = h.cell_of(p[0], p[1]);
            h.buckets[j * nx + i].push(k);
        }
        h
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.x0) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((y - self.y0) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Points within `r` of `(x, y)` as `(distance, index)`, sorted by
    /// distance then index.
    pub(crate) fn within(&self, x: f64, y: f64, r: f64, out: &mut Vec<(f64, usize)>) {
        out.clear();
        let reach = (r / self.cell).ceil() as isize;
        let (ci, cj) = self.cell_of(x, y);
        let (ci, cj) = (ci as isize, cj as isize);
        for j in (cj - reach).max(0)..=(cj + reach).min(self.ny as isize - 1) {
            for i in (ci - reach).max(0)..=(ci + reach).min(self.nx as isize - 1) {
                for &k in &self.buckets[j as usize * self.nx + i as usize] {
                    let d = distance([x, y], self.pts[k]);
                    if d <= r {
                        out.push((d, k));
                    }
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
}

#[inline]
pub(crate) fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}
