//! Shared domain types: relocations, trajectories, observation windows and
//! marked point patterns.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("empty input")]
    EmptyInput,
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(i64),
    #[error("non-finite coordinate at index {0}")]
    NonFiniteCoordinate(usize),
    #[error("trajectory too short: {0} relocations, need at least {1}")]
    TooShort(usize, usize),
    #[error("invalid window: x [{x_min}, {x_max}], y [{y_min}, {y_max}]")]
    InvalidWindow { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
    #[error("point {index} at ({x}, {y}) lies outside the window")]
    PointOutsideWindow { index: usize, x: f64, y: f64 },
    #[error("unknown mark `{0}`")]
    UnknownMark(String),
    #[error("duplicate mark `{0}` in mark set")]
    DuplicateMark(String),
}

/// One planar fix: seconds since the epoch (UTC) and coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relocation {
    pub t: i64,
    pub x: f64,
    pub y: f64,
}

impl Relocation {
    pub fn new(t: i64, x: f64, y: f64) -> Self {
        Self { t, x, y }
    }
}

/// How planar coordinates relate to geographic ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Crs {
    /// Coordinates are already planar meters (simulated or pre-projected data).
    Identity,
    /// Spherical transverse Mercator centered on (`lon0`, `lat0`) degrees.
    TransverseMercator { lon0: f64, lat0: f64, radius: f64 },
}

/// Time-ordered relocations of one animal.
///
/// Construction goes through [`Trajectory::new`] (or [`validate_trajectory`]),
/// which sorts by time and rejects duplicate timestamps and non-finite
/// coordinates, so a `Trajectory` value is always strictly increasing in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    animal_id: String,
    crs: Crs,
    points: Vec<Relocation>,
}

impl Trajectory {
    pub fn new(
        animal_id: impl Into<String>,
        crs: Crs,
        mut points: Vec<Relocation>,
    ) -> Result<Self, DataError> {
        if points.is_empty() {
            return Err(DataError::EmptyInput);
        }
        if let Some(i) = points.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(DataError::NonFiniteCoordinate(i));
        }
        points.sort_by_key(|p| p.t);
        if let Some(w) = points.windows(2).find(|w| w[0].t == w[1].t) {
            return Err(DataError::DuplicateTimestamp(w[0].t));
        }
        Ok(Self { animal_id: animal_id.into(), crs, points })
    }

    pub fn animal_id(&self) -> &str {
        &self.animal_id
    }

    pub fn crs(&self) -> Crs {
        self.crs
    }

    pub fn points(&self) -> &[Relocation] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sampling duration `t_n - t_1` in seconds.
    pub fn duration(&self) -> i64 {
        self.points.last().unwrap().t - self.points[0].t
    }

    /// Errors unless the trajectory holds at least `min` relocations.
    pub fn require_len(&self, min: usize) -> Result<(), DataError> {
        if self.points.len() < min {
            Err(DataError::TooShort(self.points.len(), min))
        } else {
            Ok(())
        }
    }

    pub fn coords(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.points.iter().map(|p| [p.x, p.y])
    }

    /// Same relocations translated by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| Relocation::new(p.t, p.x + dx, p.y + dy))
            .collect();
        Self { animal_id: self.animal_id.clone(), crs: self.crs, points }
    }
}

/// Sorts `raw` by time and checks it, yielding an anonymous planar trajectory.
pub fn validate_trajectory(raw: Vec<Relocation>) -> Result<Trajectory, DataError> {
    Trajectory::new("", Crs::Identity, raw)
}

/// Axis-aligned rectangular observation window, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, DataError> {
        let ok = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite())
            && x_min < x_max
            && y_min < y_max;
        if ok {
            Ok(Self { x_min, x_max, y_min, y_max })
        } else {
            Err(DataError::InvalidWindow { x_min, x_max, y_min, y_max })
        }
    }

    pub fn unit() -> Self {
        Self { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }
    }

    /// Tight bounding box of `points`, pushed out on every side by 1% of the
    /// extent along that axis.
    pub fn around<I: IntoIterator<Item = [f64; 2]>>(points: I) -> Result<Self, DataError> {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        let mut any = false;
        for [x, y] in points {
            any = true;
            b[0] = b[0].min(x);
            b[1] = b[1].max(x);
            b[2] = b[2].min(y);
            b[3] = b[3].max(y);
        }
        if !any {
            return Err(DataError::EmptyInput);
        }
        let px = 0.01 * (b[1] - b[0]);
        let py = 0.01 * (b[3] - b[2]);
        Self::new(b[0] - px, b[1] + px, b[2] - py, b[3] + py)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Distance from an interior point to the nearest window edge.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        (x - self.x_min)
            .min(self.x_max - x)
            .min(y - self.y_min)
            .min(self.y_max - y)
    }

    /// Wraps a point onto the window torus.
    pub fn wrap(&self, x: f64, y: f64) -> (f64, f64) {
        let wx = (x - self.x_min).rem_euclid(self.width()) + self.x_min;
        let wy = (y - self.y_min).rem_euclid(self.height()) + self.y_min;
        (wx, wy)
    }

    pub fn expanded(&self, by: f64) -> Self {
        Self {
            x_min: self.x_min - by,
            x_max: self.x_max + by,
            y_min: self.y_min - by,
            y_max: self.y_max + by,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub x: f64,
    pub y: f64,
    /// Index into the pattern's mark set.
    pub mark: usize,
}

/// Planar points carrying discrete labels, observed inside a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkedPointPattern {
    points: Vec<MarkedPoint>,
    marks: Vec<String>,
    window: Window,
}

impl MarkedPointPattern {
    pub fn new(
        points: Vec<MarkedPoint>,
        marks: Vec<String>,
        window: Window,
    ) -> Result<Self, DataError> {
        for (k, m) in marks.iter().enumerate() {
            if marks[..k].contains(m) {
                return Err(DataError::DuplicateMark(m.clone()));
            }
        }
        for (index, p) in points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(DataError::NonFiniteCoordinate(index));
            }
            if !window.contains(p.x, p.y) {
                return Err(DataError::PointOutsideWindow { index, x: p.x, y: p.y });
            }
            if p.mark >= marks.len() {
                return Err(DataError::UnknownMark(format!("#{}", p.mark)));
            }
        }
        Ok(Self { points, marks, window })
    }

    /// Builds a pattern from labelled coordinates, declaring marks in order of
    /// first appearance.
    pub fn from_labelled<S: AsRef<str>>(
        labelled: impl IntoIterator<Item = (f64, f64, S)>,
        window: Window,
    ) -> Result<Self, DataError> {
        let mut marks: Vec<String> = Vec::new();
        let mut points = Vec::new();
        for (x, y, label) in labelled {
            let label = label.as_ref();
            let mark = match marks.iter().position(|m| m == label) {
                Some(k) => k,
                None => {
                    marks.push(label.to_string());
                    marks.len() - 1
                }
            };
            points.push(MarkedPoint { x, y, mark });
        }
        Self::new(points, marks, window)
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    pub fn marks(&self) -> &[String] {
        &self.marks
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mark_index(&self, mark: &str) -> Result<usize, DataError> {
        self.marks
            .iter()
            .position(|m| m == mark)
            .ok_or_else(|| DataError::UnknownMark(mark.to_string()))
    }

    /// Coordinates of the points carrying mark index `m`, in pattern order.
    pub fn coords_of(&self, m: usize) -> Vec<[f64; 2]> {
        self.points.iter().filter(|p| p.mark == m).map(|p| [p.x, p.y]).collect()
    }

    pub fn count_of(&self, m: usize) -> usize {
        self.points.iter().filter(|p| p.mark == m).count()
    }

    pub(crate) fn from_parts_unchecked(
        points: Vec<MarkedPoint>,
        marks: Vec<String>,
        window: Window,
    ) -> Self {
        Self { points, marks, window }
    }
}

/// The sub-pattern of points labelled `mark`, keeping the mark set and window.
pub fn split_by_mark(
    pattern: &MarkedPointPattern,
    mark: &str,
) -> Result<MarkedPointPattern, DataError> {
    let m = pattern.mark_index(mark)?;
    let points = pattern.points.iter().copied().filter(|p| p.mark == m).collect();
    Ok(MarkedPointPattern::from_parts_unchecked(
        points,
        pattern.marks.clone(),
        pattern.window,
    ))
}
