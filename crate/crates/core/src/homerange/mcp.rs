//! Minimum convex polygons with centroid-distance trimming.

use super::{HomeRangeError, HomeRangeEstimate, Method, Region};
use crate::data::Trajectory;

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by Andrew's monotone chain, counter-clockwise, without
/// collinear vertices.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Shoelace area of a simple polygon (absolute value).
pub fn polygon_area(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let [x0, y0] = ring[i];
        let [x1, y1] = ring[(i + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    0.5 * twice.abs()
}

/// Point-in-convex-polygon test for a counter-clockwise ring (boundary
/// counts as inside).
pub(crate) fn convex_contains(ring: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = ring.len();
    n >= 3 && (0..n).all(|i| cross(ring[i], ring[(i + 1) % n], p) >= 0.0)
}

/// MCP home range: keep the `⌈level·n⌉` relocations nearest the centroid of
/// all relocations (earlier fixes win distance ties) and take their hull.
pub fn mcp_estimate(traj: &Trajectory, level: f64) -> Result<HomeRangeEstimate, HomeRangeError> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(HomeRangeError::InvalidLevel(level));
    }
    let pts: Vec<[f64; 2]> = traj.coords().collect();
    let n = pts.len();
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n as f64;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n as f64;
    let keep = ((level * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let d2: Vec<f64> = pts.iter().map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal distances keep time order
    order.sort_by(|&a, &b| d2[a].total_cmp(&d2[b]));
    let retained: Vec<[f64; 2]> = order[..keep].iter().map(|&i| pts[i]).collect();
    let hull = convex_hull(&retained);
    let area = polygon_area(&hull);
    if hull.len() < 3 || area <= 0.0 {
        return Err(HomeRangeError::DegenerateGeometry);
    }
    Ok(HomeRangeEstimate { method: Method::Mcp, level, region: Region::Polygon(hull), area })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{validate_trajectory, Relocation};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn traj(pts: &[[f64; 2]]) -> Trajectory {
        validate_trajectory(
            pts.iter().enumerate().map(|(i, p)| Relocation::new(i as i64, p[0], p[1])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn unit_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(mcp_estimate(&traj(&sq), 1.0).unwrap().area, 1.0);
        let mut with_center = sq.to_vec();
        with_center.push([0.5, 0.5]);
        let est = mcp_estimate(&traj(&with_center), 1.0).unwrap();
        assert_eq!(est.area, 1.0);
        match est.region {
            Region::Polygon(ring) => assert_eq!(ring.len(), 4),
            _ => panic!("expected polygon"),
        }
    }

    #[test]
    fn degenerate_inputs() {
        let line = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        assert_eq!(mcp_estimate(&traj(&line), 1.0), Err(HomeRangeError::DegenerateGeometry));
        let same = [[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        assert_eq!(mcp_estimate(&traj(&same), 1.0), Err(HomeRangeError::DegenerateGeometry));
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(mcp_estimate(&traj(&sq), 0.0), Err(HomeRangeError::InvalidLevel(0.0)));
    }

    #[test]
    fn distance_ties_keep_earlier_fixes() {
        // centroid (0, 0); four points at distance 1, plus two far ones
        let pts = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [5.0, 5.0], [-5.0, -5.0]];
        // keep ⌈0.5·6⌉ = 3 → the first three unit points
        let est = mcp_estimate(&traj(&pts), 0.5).unwrap();
        assert_eq!(est.area, 1.0);
    }

    /// Brute force: same trimming rule, area via the gift-wrapping hull.
    fn brute_force_area(pts: &[[f64; 2]], level: f64) -> f64 {
        let n = pts.len();
        let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n as f64;
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            let da = (pts[a][0] - cx).powi(2) + (pts[a][1] - cy).powi(2);
            let db = (pts[b][0] - cx).powi(2) + (pts[b][1] - cy).powi(2);
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        let keep = ((level * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
        let kept: Vec<[f64; 2]> = idx[..keep].iter().map(|&i| pts[i]).collect();
        // gift wrapping
        let start = (0..kept.len())
            .min_by(|&a, &b| kept[a][0].partial_cmp(&kept[b][0]).unwrap().then(kept[a][1].partial_cmp(&kept[b][1]).unwrap()))
            .unwrap();
        let mut ring = vec![kept[start]];
        let mut cur = start;
        loop {
            let mut next = (cur + 1) % kept.len();
            for j in 0..kept.len() {
                if cross(kept[cur], kept[next], kept[j]) < 0.0 {
                    next = j;
                }
            }
            if next == start {
                break;
            }
            ring.push(kept[next]);
            cur = next;
        }
        polygon_area(&ring)
    }

    #[test]
    fn uniform_square_trimmed_area() {
        for seed in 0..20u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<[f64; 2]> = (0..1000).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
            let est = mcp_estimate(&traj(&pts), 0.95).unwrap();
            assert!(est.area > 0.70 && est.area < 1.0, "seed {seed}: {}", est.area);
            let oracle = brute_force_area(&pts, 0.95);
            assert!((est.area - oracle).abs() < 1e-12, "{} vs {oracle}", est.area);
        }
    }

    proptest! {
        #[test]
        fn area_monotone_in_level(pts in prop::collection::vec((-100i32..100, -100i32..100), 8..60)) {
            let pts: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x as f64, y as f64]).collect();
            let tr = traj(&pts);
            let mut last = 0.0;
            for level in [0.5, 0.6, 0.75, 0.9, 0.95, 1.0] {
                if let Ok(e) = mcp_estimate(&tr, level) {
                    prop_assert!(e.area >= last);
                    last = e.area;
                }
            }
        }

        #[test]
        fn translation_moves_hull(pts in prop::collection::vec((-100i32..100, -100i32..100), 8..40), a in -1000i32..1000, b in -1000i32..1000) {
            let pts: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x as f64, y as f64]).collect();
            let tr = traj(&pts);
            let moved = tr.translated(a as f64, b as f64);
            if let (Ok(e0), Ok(e1)) = (mcp_estimate(&tr, 1.0), mcp_estimate(&moved, 1.0)) {
                let (Region::Polygon(r0), Region::Polygon(r1)) = (e0.region, e1.region) else { unreachable!() };
                prop_assert_eq!(r0.len(), r1.len());
                for (p, q) in r0.iter().zip(&r1) {
                    prop_assert_eq!(p[0] + a as f64, q[0]);
                    prop_assert_eq!(p[1] + b as f64, q[1]);
                }
            }
        }
    }
}
