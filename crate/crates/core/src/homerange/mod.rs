//! Home-range estimators: trimmed minimum convex polygons and probability
//! level sets of (autocorrelated) kernel density estimates.

mod kde;
mod mcp;

pub use kde::{
    akde_bandwidth, akde_density, effective_sample_size, kde_bandwidth, kde_density, kde_on_window,
    Bandwidth, GridSpec, DEFAULT_GRID,
};
pub use mcp::{convex_hull, mcp_estimate, polygon_area};

use std::fmt;

use serde_json::json;
use thiserror::Error;

use crate::data::{Crs, Window};
use crate::variogram::Family;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomeRangeError {
    #[error("retained relocations are collinear or coincident")]
    DegenerateGeometry,
    #[error("probability level {0} is out of range")]
    InvalidLevel(f64),
    #[error("sample covariance is singular")]
    SingularCovariance,
    #[error("bandwidth matrix is not symmetric positive definite")]
    InvalidBandwidth,
    #[error("grid must have at least one cell per axis")]
    InvalidGrid,
    #[error("need at least {needed} relocations, found {found}")]
    TooFewPoints { found: usize, needed: usize },
    #[error("density grid integrates to {0}, not 1")]
    UnnormalizedGrid(f64),
    #[error("{0} model has no finite home range")]
    UnsupportedFamily(Family),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mcp,
    Kde,
    Akde,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mcp => "MCP",
            Method::Kde => "KDE",
            Method::Akde => "AKDE",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Density values at the cell centers of a regular grid, stored row by row
/// (`y` outer, `x` inner), in m⁻².
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl DensityGrid {
    /// Samples `f` at the cell centers.
    pub fn from_fn(window: Window, grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut g = DensityGrid { window, nx: grid.nx, ny: grid.ny, values: vec![0.0; grid.nx * grid.ny] };
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = g.cell_center(i, j);
                g.values[j * g.nx + i] = f(x, y);
            }
        }
        g
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (self.window.width() / self.nx as f64, self.window.height() / self.ny as f64)
    }

    pub fn cell_area(&self) -> f64 {
        let (dx, dy) = self.cell_size();
        dx * dy
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        let (dx, dy) = self.cell_size();
        (self.window.x_min + (i as f64 + 0.5) * dx, self.window.y_min + (j as f64 + 0.5) * dy)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// Cell containing `(x, y)`, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !self.window.contains(x, y) {
            return None;
        }
        let (dx, dy) = self.cell_size();
        let i = (((x - self.window.x_min) / dx) as usize).min(self.nx - 1);
        let j = (((y - self.window.y_min) / dy) as usize).min(self.ny - 1);
        Some((i, j))
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn argmax(&self) -> (usize, usize) {
        let k = (0..self.values.len()).max_by(|&a, &b| self.values[a].total_cmp(&self.values[b])).unwrap_or(0);
        (k % self.nx, k / self.nx)
    }

    /// Probability mass centroid.
    pub fn mass_center(&self) -> (f64, f64) {
        let (mut sx, mut sy, mut s) = (0.0, 0.0, 0.0);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.cell_center(i, j);
                let v = self.value(i, j);
                sx += v * x;
                sy += v * y;
                s += v;
            }
        }
        (sx / s, sy / s)
    }
}

/// Grid cells inside a density level set.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMask {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub inside: Vec<bool>,
    /// Density threshold `ĉ`: the smallest included cell value.
    pub threshold: f64,
}

impl CellMask {
    pub fn count(&self) -> usize {
        self.inside.iter().filter(|b| **b).count()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        if !self.window.contains(x, y) {
            return false;
        }
        let i = (((x - self.window.x_min) / self.window.width() * self.nx as f64) as usize).min(self.nx - 1);
        let j = (((y - self.window.y_min) / self.window.height() * self.ny as f64) as usize).min(self.ny - 1);
        self.inside[j * self.nx + i]
    }

    /// Row-run rectangles covering the included cells, as closed rings.
    pub fn rectangles(&self) -> Vec<Vec<[f64; 2]>> {
        let dx = self.window.width() / self.nx as f64;
        let dy = self.window.height() / self.ny as f64;
        let mut out = Vec::new();
        for j in 0..self.ny {
            let y0 = self.window.y_min + j as f64 * dy;
            let y1 = y0 + dy;
            let mut i = 0;
            while i < self.nx {
                if !self.inside[j * self.nx + i] {
                    i += 1;
                    continue;
                }
                let start = i;
                while i < self.nx && self.inside[j * self.nx + i] {
                    i += 1;
                }
                let x0 = self.window.x_min + start as f64 * dx;
                let x1 = self.window.x_min + i as f64 * dx;
                out.push(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Counter-clockwise convex ring (not closed).
    Polygon(Vec<[f64; 2]>),
    Mask(CellMask),
}

impl Region {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Region::Polygon(ring) => mcp::convex_contains(ring, [x, y]),
            Region::Mask(m) => m.contains(x, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomeRangeEstimate {
    pub method: Method,
    pub level: f64,
    pub region: Region,
    /// m²
    pub area: f64,
}

/// Normalization tolerance on the grid integral.
pub const NORMALIZATION_TOL: f64 = 1e-3;

/// Smallest set of highest-density cells whose probability reaches `level`.
/// Equal densities are taken in cell order.
pub fn level_set(grid: &DensityGrid, level: f64, method: Method) -> Result<HomeRangeEstimate, HomeRangeError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(HomeRangeError::InvalidLevel(level));
    }
    let total = grid.integral();
    if !((total - 1.0).abs() <= NORMALIZATION_TOL) || grid.values.iter().any(|v| !(*v >= 0.0)) {
        return Err(HomeRangeError::UnnormalizedGrid(total));
    }
    let cell = grid.cell_area();
    let mut order: Vec<usize> = (0..grid.values.len()).collect();
    order.sort_by(|&a, &b| grid.values[b].total_cmp(&grid.values[a]));
    let mut inside = vec![false; grid.values.len()];
    let mut cum = 0.0;
    let mut count = 0usize;
    let mut threshold = f64::INFINITY;
    for &k in &order {
        if cum >= level {
            break;
        }
        inside[k] = true;
        cum += grid.values[k] * cell;
        threshold = grid.values[k];
        count += 1;
    }
    let mask = CellMask { window: grid.window, nx: grid.nx, ny: grid.ny, inside, threshold };
    Ok(HomeRangeEstimate { method, level, region: Region::Mask(mask), area: count as f64 * cell })
}

/// One GeoJSON feature per estimate, in planar coordinates.
pub fn geojson(animal_id: &str, crs: Crs, estimates: &[HomeRangeEstimate]) -> serde_json::Value {
    let features: Vec<_> = estimates
        .iter()
        .map(|e| {
            let geometry = match &e.region {
                Region::Polygon(ring) => {
                    let mut closed = ring.clone();
                    if let Some(first) = ring.first() {
                        closed.push(*first);
                    }
                    json!({ "type": "Polygon", "coordinates": [closed] })
                }
                Region::Mask(m) => {
                    let polys: Vec<_> = m.rectangles().into_iter().map(|r| vec![r]).collect();
                    json!({ "type": "MultiPolygon", "coordinates": polys })
                }
            };
            json!({
                "type": "Feature",
                "geometry": geometry,
                "properties": {
                    "animal_id": animal_id,
                    "method": e.method.name(),
                    "level": e.level,
                    "area_km2": e.area * 1e-6,
                    "crs": crs,
                },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

/// `animal_id,method,level,area_km2` rows.
pub fn area_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a HomeRangeEstimate)>) -> String {
    let mut out = String::from("animal_id,method,level,area_km2\n");
    for (id, e) in rows {
        out.push_str(&format!("{},{},{},{:.6}\n", id, e.method.name(), e.level, e.area * 1e-6));
    }
    out
}
