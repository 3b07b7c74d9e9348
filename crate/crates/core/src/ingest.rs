//! Collar CSV parsing and projection of geographic fixes to local planar
//! coordinates.
//!
//! The projection is a spherical transverse Mercator whose central meridian
//! and origin latitude are the centroid of all fixes, so projected
//! coordinates are meters relative to the middle of the data set.

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Crs, DataError, Relocation, Trajectory};

/// Mean Earth radius (IUGG), meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Directive line marking a CSV whose coordinate columns are already planar
/// meters.
pub const IDENTITY_DIRECTIVE: &str = "#crs=identity";

pub const CSV_HEADER: [&str; 4] = ["animal_id", "timestamp", "lon", "lat"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("missing or malformed header, expected `animal_id,timestamp,lon,lat`")]
    MissingHeader,
    #[error("line {line}: {reason}")]
    BadRow { line: u64, reason: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("malformed trajectory JSON: {0}")]
    Json(String),
}

/// One parsed collar row. `t` is `timestamp` converted to UTC epoch seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFix {
    pub animal_id: String,
    pub timestamp: String,
    pub t: i64,
    pub lon: f64,
    pub lat: f64,
}

/// Parses an ISO-8601 timestamp. Values without an offset are taken as UTC;
/// fractional seconds are truncated.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    if let Ok(dt) = DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f%:z") {
        return Some(dt.timestamp());
    }
    None
}

pub fn format_timestamp(t: i64) -> String {
    DateTime::from_timestamp(t, 0)
        .map(|d| d.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| t.to_string())
}

/// UTC calendar month `(year, month)` of an epoch time.
pub fn calendar_month(t: i64) -> (i32, u32) {
    use chrono::Datelike;
    DateTime::from_timestamp(t, 0).map(|d| (d.year(), d.month())).unwrap_or((1970, 1))
}

struct Rows {
    identity: bool,
    rows: Vec<(u64, String, String, f64, f64)>,
}

fn read_rows(csv_text: &str) -> Result<Rows, IngestError> {
    let trimmed = csv_text.trim_start();
    let (identity, body) = match trimmed.strip_prefix(IDENTITY_DIRECTIVE) {
        Some(rest) => (true, rest.trim_start_matches(['\r', '\n'])),
        None => (false, csv_text),
    };
    // Line offset of the body relative to the original text.
    let offset = if identity { 1 } else { 0 };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut records = reader.records();
    match records.next() {
        Some(Ok(h)) if h.iter().eq(CSV_HEADER.iter().copied()) => {}
        _ => return Err(IngestError::MissingHeader),
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| IngestError::BadRow {
            line: e.position().map(|p| p.line()).unwrap_or(0) + offset,
            reason: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0) + offset;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let bad = |reason: String| IngestError::BadRow { line, reason };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", rec.len())));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(bad("empty animal_id".into()));
        }
        let lon: f64 = rec[2].parse().map_err(|_| bad(format!("bad lon `{}`", &rec[2])))?;
        let lat: f64 = rec[3].parse().map_err(|_| bad(format!("bad lat `{}`", &rec[3])))?;
        if !lon.is_finite() || !lat.is_finite() {
            return Err(bad("non-finite coordinate".into()));
        }
        rows.push((line, id, rec[1].to_string(), lon, lat));
    }
    Ok(Rows { identity, rows })
}

/// Parses `animal_id,timestamp,lon,lat` collar data.
pub fn parse_relocations(csv_text: &str) -> Result<Vec<RawFix>, IngestError> {
    let parsed = read_rows(csv_text)?;
    parsed
        .rows
        .into_iter()
        .map(|(line, animal_id, timestamp, lon, lat)| {
            let bad = |reason: String| IngestError::BadRow { line, reason };
            if !(-90.0..=90.0).contains(&lat) {
                return Err(bad(format!("latitude {lat} outside [-90, 90]")));
            }
            if !(-180.0..=180.0).contains(&lon) {
                return Err(bad(format!("longitude {lon} outside [-180, 180]")));
            }
            let t = parse_timestamp(&timestamp)
                .ok_or_else(|| bad(format!("bad timestamp `{timestamp}`")))?;
            Ok(RawFix { animal_id, timestamp, t, lon, lat })
        })
        .collect()
}

/// Spherical transverse Mercator with unit scale on the central meridian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseMercator {
    pub lon0: f64,
    pub lat0: f64,
    pub radius: f64,
}

impl TransverseMercator {
    pub fn new(lon0: f64, lat0: f64) -> Self {
        Self { lon0, lat0, radius: EARTH_RADIUS_M }
    }

    pub fn forward(&self, lon: f64, lat: f64) -> (f64, f64) {
        let phi = lat.to_radians();
        let dl = (lon - self.lon0).to_radians();
        let b = phi.cos() * dl.sin();
        let x = self.radius * b.atanh();
        let y = self.radius * (phi.tan().atan2(dl.cos()) - self.lat0.to_radians());
        (x, y)
    }

    pub fn inverse(&self, x: f64, y: f64) -> (f64, f64) {
        let d = y / self.radius + self.lat0.to_radians();
        let xr = x / self.radius;
        let lat = (d.sin() / xr.cosh()).asin();
        let lon = self.lon0.to_radians() + xr.sinh().atan2(d.cos());
        (lon.to_degrees(), lat.to_degrees())
    }

    pub fn crs(&self) -> Crs {
        Crs::TransverseMercator { lon0: self.lon0, lat0: self.lat0, radius: self.radius }
    }
}

/// Projects all fixes around their common centroid and groups them into one
/// trajectory per animal.
pub fn project_to_plane(fixes: &[RawFix]) -> Result<BTreeMap<String, Trajectory>, IngestError> {
    if fixes.is_empty() {
        return Err(DataError::EmptyInput.into());
    }
    let n = fixes.len() as f64;
    let lon0 = fixes.iter().map(|f| f.lon).sum::<f64>() / n;
    let lat0 = fixes.iter().map(|f| f.lat).sum::<f64>() / n;
    let tm = TransverseMercator::new(lon0, lat0);
    let mut grouped: BTreeMap<String, Vec<Relocation>> = BTreeMap::new();
    for f in fixes {
        let (x, y) = tm.forward(f.lon, f.lat);
        grouped.entry(f.animal_id.clone()).or_default().push(Relocation::new(f.t, x, y));
    }
    grouped
        .into_iter()
        .map(|(id, pts)| {
            let tr = Trajectory::new(id.clone(), tm.crs(), pts)?;
            Ok((id, tr))
        })
        .collect()
}

/// Reads collar CSV text into per-animal trajectories. Files starting with
/// [`IDENTITY_DIRECTIVE`] carry planar meters in the coordinate columns and
/// are not projected.
pub fn read_trajectories(csv_text: &str) -> Result<BTreeMap<String, Trajectory>, IngestError> {
    let parsed = read_rows(csv_text)?;
    if !parsed.identity {
        return project_to_plane(&parse_relocations(csv_text)?);
    }
    let mut grouped: BTreeMap<String, Vec<Relocation>> = BTreeMap::new();
    for (line, id, ts, x, y) in parsed.rows {
        let t = parse_timestamp(&ts)
            .ok_or_else(|| IngestError::BadRow { line, reason: format!("bad timestamp `{ts}`") })?;
        grouped.entry(id).or_default().push(Relocation::new(t, x, y));
    }
    if grouped.is_empty() {
        return Err(DataError::EmptyInput.into());
    }
    grouped
        .into_iter()
        .map(|(id, pts)| Ok((id.clone(), Trajectory::new(id, Crs::Identity, pts)?)))
        .collect()
}

/// Writes trajectories in the collar CSV layout. Planar trajectories get the
/// identity directive; projected ones are written back as lon/lat.
pub fn write_trajectories_csv<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>) -> String {
    let trajs: Vec<&Trajectory> = trajs.into_iter().collect();
    let identity = trajs.iter().all(|t| t.crs() == Crs::Identity);
    let mut out = String::new();
    if identity {
        out.push_str(IDENTITY_DIRECTIVE);
        out.push('\n');
    }
    out.push_str(&CSV_HEADER.join(","));
    out.push('\n');
    for tr in trajs {
        for p in tr.points() {
            let (a, b) = match tr.crs() {
                Crs::Identity => (p.x, p.y),
                Crs::TransverseMercator { lon0, lat0, radius } => {
                    TransverseMercator { lon0, lat0, radius }.inverse(p.x, p.y)
                }
            };
            out.push_str(&format!(
                "{},{},{},{}\n",
                tr.animal_id(),
                format_timestamp(p.t),
                a,
                b
            ));
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct TrajectoryJson {
    animal_id: String,
    crs: Crs,
    points: Vec<(i64, f64, f64)>,
}

pub fn trajectory_to_json(tr: &Trajectory) -> serde_json::Value {
    let dto = TrajectoryJson {
        animal_id: tr.animal_id().to_string(),
        crs: tr.crs(),
        points: tr.points().iter().map(|p| (p.t, p.x, p.y)).collect(),
    };
    serde_json::to_value(dto).expect("trajectory serializes")
}

pub fn trajectory_from_json(v: serde_json::Value) -> Result<Trajectory, IngestError> {
    let dto: TrajectoryJson =
        serde_json::from_value(v).map_err(|e| IngestError::Json(e.to_string()))?;
    let pts = dto.points.into_iter().map(|(t, x, y)| Relocation::new(t, x, y)).collect();
    Ok(Trajectory::new(dto.animal_id, dto.crs, pts)?)
}

/// Median of successive time differences, in seconds.
pub fn median_sampling_interval(traj: &Trajectory) -> Result<f64, DataError> {
    traj.require_len(2)?;
    let mut d: Vec<i64> = traj.points().windows(2).map(|w| w[1].t - w[0].t).collect();
    d.sort_unstable();
    let m = d.len();
    Ok(if m % 2 == 1 {
        d[m / 2] as f64
    } else {
        (d[m / 2 - 1] + d[m / 2]) as f64 / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calendar_months() {
        assert_eq!(calendar_month(0), (1970, 1));
        assert_eq!(calendar_month(parse_timestamp("2021-02-28T23:59:59Z").unwrap()), (2021, 2));
        assert_eq!(calendar_month(parse_timestamp("2021-03-01T00:00:00Z").unwrap()), (2021, 3));
    }

    const HEADER: &str = "animal_id,timestamp,lon,lat\n";

    /// Great-circle distance on the sphere of radius [`EARTH_RADIUS_M`].
    fn haversine(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
        let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
        let dp = p2 - p1;
        let dl = (lon2 - lon1).to_radians();
        let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_M * a.sqrt().asin()
    }

    #[test]
    fn parses_valid_row() {
        let fixes = parse_relocations(&format!("{HEADER}b1,2016-05-01T12:00:00Z,-88.1,31.2\n")).unwrap();
        assert_eq!(fixes.len(), 1);
        assert_eq!(fixes[0].t, 1_462_104_000);
        assert_eq!(fixes[0].animal_id, "b1");
    }

    #[test]
    fn naive_timestamps_are_utc() {
        assert_eq!(parse_timestamp("2016-05-01 12:00:00"), Some(1_462_104_000));
        assert_eq!(parse_timestamp("2016-05-01T14:00:00+02:00"), Some(1_462_104_000));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn range_and_header_errors() {
        let err = parse_relocations(&format!("{HEADER}b1,2016-05-01T12:00:00Z,-88.1,91\n"));
        assert!(matches!(err, Err(IngestError::BadRow { line: 2, .. })), "{err:?}");
        assert_eq!(parse_relocations(""), Err(IngestError::MissingHeader));
        assert_eq!(parse_relocations("a,b,c\n"), Err(IngestError::MissingHeader));
        let err = parse_relocations(&format!("{HEADER}b1,2016-05-01T12:00:00Z,-88.1,31\nb1,nope,1,1\n"));
        assert!(matches!(err, Err(IngestError::BadRow { line: 3, .. })), "{err:?}");
    }

    #[test]
    fn center_maps_to_origin() {
        let fix = RawFix { animal_id: "a".into(), timestamp: String::new(), t: 0, lon: -88.0, lat: 31.0 };
        let trajs = project_to_plane(&[fix]).unwrap();
        let p = trajs["a"].points()[0];
        assert!(p.x.abs() < 1e-6 && p.y.abs() < 1e-6);
        assert_eq!(project_to_plane(&[]).unwrap_err(), IngestError::Data(DataError::EmptyInput));
    }

    #[test]
    fn meridional_spacing_matches_great_circle() {
        let mk = |t, lat| RawFix { animal_id: "a".into(), timestamp: String::new(), t, lon: -88.0, lat };
        let trajs = project_to_plane(&[mk(0, 31.0), mk(1, 31.01)]).unwrap();
        let p = trajs["a"].points();
        let dy = p[1].y - p[0].y;
        let oracle = haversine(-88.0, 31.0, -88.0, 31.01);
        assert!((oracle - 1111.95).abs() < 0.01, "oracle {oracle}");
        assert!((dy - oracle).abs() < 5.0, "dy {dy} vs {oracle}");
    }

    #[test]
    fn groups_by_animal() {
        let text = format!(
            "{HEADER}a,2016-05-01T00:00:00Z,-88.0,31.0\nb,2016-05-01T00:00:00Z,-88.01,31.0\na,2016-05-01T01:00:00Z,-88.0,31.01\n"
        );
        let trajs = project_to_plane(&parse_relocations(&text).unwrap()).unwrap();
        assert_eq!(trajs.len(), 2);
        assert_eq!(trajs["a"].len(), 2);
        assert_eq!(trajs["b"].len(), 1);
    }

    #[test]
    fn round_trip_and_distance_properties() {
        let tm = TransverseMercator::new(-88.0, 31.0);
        // points up to ~200 km from center
        for &(dlon, dlat) in &[(0.0, 0.0), (1.5, 1.2), (-2.0, -1.7), (0.3, -1.8), (-1.9, 0.4)] {
            let (x, y) = tm.forward(-88.0 + dlon, 31.0 + dlat);
            let (lon, lat) = tm.inverse(x, y);
            assert!((lon - (-88.0 + dlon)).abs() < 1e-9 && (lat - (31.0 + dlat)).abs() < 1e-9);
        }
        // within 50 km of center planar distance agrees with the sphere to 0.1 %
        for &(a, b) in &[((0.2, 0.1), (-0.2, -0.25)), ((0.4, 0.0), (-0.1, 0.3)), ((0.0, -0.4), (0.05, 0.4))] {
            let ((l1, p1), (l2, p2)) = ((-88.0 + a.0, 31.0 + a.1), (-88.0 + b.0, 31.0 + b.1));
            let (x1, y1) = tm.forward(l1, p1);
            let (x2, y2) = tm.forward(l2, p2);
            let planar = (x1 - x2).hypot(y1 - y2);
            let sphere = haversine(l1, p1, l2, p2);
            assert!((planar - sphere).abs() / sphere < 1e-3, "{planar} vs {sphere}");
        }
    }

    #[test]
    fn identity_csv_round_trip() {
        let tr = Trajectory::new(
            "sim",
            Crs::Identity,
            vec![Relocation::new(0, 1.5, -2.25), Relocation::new(3600, 1e5, 7.0)],
        )
        .unwrap();
        let text = write_trajectories_csv([&tr]);
        assert!(text.starts_with(IDENTITY_DIRECTIVE));
        let back = read_trajectories(&text).unwrap();
        assert_eq!(back["sim"], tr);
        let json = trajectory_to_json(&tr);
        assert_eq!(json["points"][1][0], 3600);
        assert_eq!(trajectory_from_json(json).unwrap(), tr);
    }

    #[test]
    fn median_interval() {
        let mk = |ts: &[i64]| {
            crate::data::validate_trajectory(ts.iter().map(|&t| Relocation::new(t, 0.0, 0.0)).collect())
                .unwrap()
        };
        assert_eq!(median_sampling_interval(&mk(&[0, 3600, 7200])).unwrap(), 3600.0);
        assert_eq!(median_sampling_interval(&mk(&[0, 3600, 7200, 7201])).unwrap(), 3600.0);
        assert_eq!(median_sampling_interval(&mk(&[0, 10])).unwrap(), 10.0);
        assert_eq!(median_sampling_interval(&mk(&[0])), Err(DataError::TooShort(1, 2)));
    }
}
