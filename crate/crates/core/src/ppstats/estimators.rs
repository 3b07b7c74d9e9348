//! Border-corrected estimators of the inhomogeneous cross-type summary
//! functions. Neighbours come from a spatial hash, sorted by distance, so a
//! single pass over the distance grid accumulates each reference point's
//! contribution.

use rayon::prelude::*;

use super::{check_r_grid, CurveKind, IntensityModel, PpError, SpatialHash, SummaryCurve};
use crate::data::{MarkedPointPattern, Window};

/// Reference points per axis for the empty-space function.
pub const REFERENCE_GRID: usize = 128;
/// Evaluation points per axis when bounding `λ̃_j` from below.
pub const LAMBDA_TILDE_GRID: usize = 128;
/// J is cut at the first distance where `1 - F̂` falls below this.
pub const J_TRUNCATION: f64 = 0.025;

fn distinct_marks(p: &MarkedPointPattern, i: usize, j: usize) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>), PpError> {
    if i == j {
        return Err(PpError::SameMark);
    }
    let zi = nonempty(p, i)?;
    let zj = nonempty(p, j)?;
    Ok((zi, zj))
}

fn nonempty(p: &MarkedPointPattern, m: usize) -> Result<Vec<[f64; 2]>, PpError> {
    let name = p.marks().get(m).ok_or_else(|| PpError::EmptyComponent(format!("#{m}")))?;
    let pts = p.coords_of(m);
    if pts.is_empty() {
        return Err(PpError::EmptyComponent(name.clone()));
    }
    Ok(pts)
}

fn curve(p: &MarkedPointPattern, kind: CurveKind, i: Option<usize>, j: usize, r: &[f64], values: Vec<Option<f64>>) -> SummaryCurve {
    SummaryCurve {
        kind,
        mark_i: i.map(|i| p.marks()[i].clone()).unwrap_or_default(),
        mark_j: p.marks()[j].clone(),
        r: r.to_vec(),
        values,
    }
}

/// Cross-type inhomogeneous K function.
///
/// `K̂(r) = Σ_{v ∈ Z_i, b(v) ≥ r} Σ_{z ∈ Z_j, ‖z − v‖ ≤ r} 1 / (λ_i(v) λ_j(z))`
/// divided by `|W| · (#eligible / #Z_i)`.
pub fn khat_cross(
    p: &MarkedPointPattern,
    lambda: &IntensityModel,
    i: usize,
    j: usize,
    r: &[f64],
) -> Result<SummaryCurve, PpError> {
    check_r_grid(r)?;
    let (zi, zj) = distinct_marks(p, i, j)?;
    let w = p.window();
    let r_max = *r.last().unwrap();
    let lj: Vec<f64> = zj.iter().map(|z| lambda.intensity(j, z[0], z[1])).collect();
    let hash = SpatialHash::new(&zj, w, r_max);
    let mut total = vec![0.0; r.len()];
    let mut eligible = vec![0usize; r.len()];
    let mut nb = Vec::new();
    for v in &zi {
        let li = lambda.intensity(i, v[0], v[1]);
        let bd = w.boundary_distance(v[0], v[1]);
        hash.within(v[0], v[1], r_max, &mut nb);
        let mut inner = 0.0;
        let mut k = 0;
        for (ri, &rr) in r.iter().enumerate() {
            if bd < rr {
                break;
            }
            while k < nb.len() && nb[k].0 <= rr {
                inner += 1.0 / (li * lj[nb[k].1]);
                k += 1;
            }
            total[ri] += inner;
            eligible[ri] += 1;
        }
    }
    let n = zi.len() as f64;
    let values = total
        .iter()
        .zip(&eligible)
        .map(|(&t, &e)| (e > 0).then(|| t / (w.area() * (e as f64 / n))))
        .collect();
    Ok(curve(p, CurveKind::K, Some(i), j, r, values))
}

/// `L̂ = √(K̂ / π)`.
pub fn lhat_cross(
    p: &MarkedPointPattern,
    lambda: &IntensityModel,
    i: usize,
    j: usize,
    r: &[f64],
) -> Result<SummaryCurve, PpError> {
    let mut c = khat_cross(p, lambda, i, j, r)?;
    c.kind = CurveKind::L;
    for v in c.values.iter_mut().flatten() {
        *v = (*v / std::f64::consts::PI).sqrt();
    }
    Ok(c)
}

/// Lower bound `λ̃_j` of the mark-`j` intensity: the minimum over a regular
/// grid of the window and over the data points.
pub fn lambda_tilde(lambda: &IntensityModel, j: usize, pts: &[[f64; 2]], window: &Window) -> Result<f64, PpError> {
    let n = LAMBDA_TILDE_GRID;
    let (dx, dy) = (window.width() / n as f64, window.height() / n as f64);
    let mut lo = f64::INFINITY;
    for b in 0..n {
        for a in 0..n {
            let x = window.x_min + (a as f64 + 0.5) * dx;
            let y = window.y_min + (b as f64 + 0.5) * dy;
            lo = lo.min(lambda.intensity(j, x, y));
        }
    }
    for p in pts {
        lo = lo.min(lambda.intensity(j, p[0], p[1]));
    }
    if lo > 0.0 && lo.is_finite() {
        Ok(lo)
    } else {
        Err(PpError::InvalidIntensity)
    }
}

/// Running products `Π_{z within r} (1 − λ̃/λ_j(z))` for one reference point,
/// added into `sum`/`count` at every distance where the point is eligible.
fn accumulate_products(
    v: [f64; 2],
    w: &Window,
    r: &[f64],
    hash: &SpatialHash,
    factors: &[f64],
    nb: &mut Vec<(f64, usize)>,
    sum: &mut [f64],
    count: &mut [usize],
) {
    let bd = w.boundary_distance(v[0], v[1]);
    hash.within(v[0], v[1], *r.last().unwrap(), nb);
    let mut prod = 1.0;
    let mut k = 0;
    for (ri, &rr) in r.iter().enumerate() {
        if bd < rr {
            break;
        }
        while k < nb.len() && nb[k].0 <= rr {
            prod *= factors[nb[k].1];
            k += 1;
        }
        sum[ri] += prod;
        count[ri] += 1;
    }
}

fn one_minus_to_cdf(sum: &[f64], count: &[usize]) -> Vec<Option<f64>> {
    sum.iter().zip(count).map(|(&s, &c)| (c > 0).then(|| 1.0 - s / c as f64)).collect()
}

fn factors(lambda: &IntensityModel, j: usize, zj: &[[f64; 2]], w: &Window) -> Result<Vec<f64>, PpError> {
    let lt = lambda_tilde(lambda, j, zj, w)?;
    Ok(zj.iter().map(|z| 1.0 - lt / lambda.intensity(j, z[0], z[1])).collect())
}

/// Inhomogeneous empty-space function of mark `j` on the default
/// `REFERENCE_GRID`² reference points.
pub fn fhat_inhom(p: &MarkedPointPattern, lambda: &IntensityModel, j: usize, r: &[f64]) -> Result<SummaryCurve, PpError> {
    fhat_inhom_with(p, lambda, j, r, REFERENCE_GRID)
}

/// `1 − F̂(r)` is the mean, over reference points at least `r` from the
/// boundary, of `Π_{z ∈ Z_j, ‖z − v‖ ≤ r} (1 − λ̃_j / λ_j(z))`. An empty
/// mark gives `F̂ ≡ 0`.
pub fn fhat_inhom_with(
    p: &MarkedPointPattern,
    lambda: &IntensityModel,
    j: usize,
    r: &[f64],
    reference_grid: usize,
) -> Result<SummaryCurve, PpError> {
    check_r_grid(r)?;
    if j >= p.marks().len() {
        return Err(PpError::EmptyComponent(format!("#{j}")));
    }
    let w = *p.window();
    let zj = p.coords_of(j);
    let f = if zj.is_empty() { Vec::new() } else { factors(lambda, j, &zj, &w)? };
    let hash = SpatialHash::new(&zj, &w, *r.last().unwrap());
    let n = reference_grid.max(1);
    let (dx, dy) = (w.width() / n as f64, w.height() / n as f64);
    // one task per row of reference points; rows are combined in order so
    // the result does not depend on the thread count
    let rows: Vec<(Vec<f64>, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|b| {
            let mut sum = vec![0.0; r.len()];
            let mut count = vec![0usize; r.len()];
            let mut nb = Vec::new();
            let y = w.y_min + (b as f64 + 0.5) * dy;
            for a in 0..n {
                let x = w.x_min + (a as f64 + 0.5) * dx;
                accumulate_products([x, y], &w, r, &hash, &f, &mut nb, &mut sum, &mut count);
            }
            (sum, count)
        })
        .collect();
    let mut sum = vec![0.0; r.len()];
    let mut count = vec![0usize; r.len()];
    for (s, c) in rows {
        for k in 0..r.len() {
            sum[k] += s[k];
            count[k] += c[k];
        }
    }
    Ok(curve(p, CurveKind::F, None, j, r, one_minus_to_cdf(&sum, &count)))
}

/// Cross-type inhomogeneous nearest-neighbour function: as the empty-space
/// function but with the eligible `i`-points as reference points.
pub fn ghat_cross(
    p: &MarkedPointPattern,
    lambda: &IntensityModel,
    i: usize,
    j: usize,
    r: &[f64],
) -> Result<SummaryCurve, PpError> {
    check_r_grid(r)?;
    if i == j {
        return Err(PpError::SameMark);
    }
    let zi = nonempty(p, i)?;
    if j >= p.marks().len() {
        return Err(PpError::EmptyComponent(format!("#{j}")));
    }
    let w = *p.window();
    let zj = p.coords_of(j);
    let f = if zj.is_empty() { Vec::new() } else { factors(lambda, j, &zj, &w)? };
    let hash = SpatialHash::new(&zj, &w, *r.last().unwrap());
    let mut sum = vec![0.0; r.len()];
    let mut count = vec![0usize; r.len()];
    let mut nb = Vec::new();
    for v in &zi {
        accumulate_products(*v, &w, r, &hash, &f, &mut nb, &mut sum, &mut count);
    }
    Ok(curve(p, CurveKind::G, Some(i), j, r, one_minus_to_cdf(&sum, &count)))
}

/// `Ĵ = (1 − Ĝ) / (1 − F̂)`, cut from the first distance where `1 − F̂` drops
/// below `J_TRUNCATION`.
pub fn jhat_cross(f: &SummaryCurve, g: &SummaryCurve) -> Result<SummaryCurve, PpError> {
    if !f.same_grid(g) {
        return Err(PpError::GridMismatch);
    }
    let mut values = Vec::with_capacity(f.r.len());
    let mut cut = false;
    for (fv, gv) in f.values.iter().zip(&g.values) {
        if let Some(fv) = fv {
            if 1.0 - fv < J_TRUNCATION {
                cut = true;
            }
        }
        let v = match (cut, fv, gv) {
            (false, Some(fv), Some(gv)) => Some((1.0 - gv) / (1.0 - fv)),
            _ => None,
        };
        values.push(v);
    }
    if values.iter().all(Option::is_none) {
        return Err(PpError::DivisionDomain);
    }
    Ok(SummaryCurve { kind: CurveKind::J, mark_i: g.mark_i.clone(), mark_j: g.mark_j.clone(), r: f.r.clone(), values })
}

/// Any supported cross-type summary for marks `i → j`. For `F` only `j`
/// matters.
pub fn summary_curve(
    p: &MarkedPointPattern,
    lambda: &IntensityModel,
    i: usize,
    j: usize,
    kind: CurveKind,
    r: &[f64],
) -> Result<SummaryCurve, PpError> {
    match kind {
        CurveKind::K => khat_cross(p, lambda, i, j, r),
        CurveKind::L => lhat_cross(p, lambda, i, j, r),
        CurveKind::F => fhat_inhom(p, lambda, j, r),
        CurveKind::G => ghat_cross(p, lambda, i, j, r),
        CurveKind::J => {
            let g = ghat_cross(p, lambda, i, j, r)?;
            let f = fhat_inhom(p, lambda, j, r)?;
            let mut jc = jhat_cross(&f, &g)?;
            jc.mark_i = p.marks()[i].clone();
            Ok(jc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MarkedPoint;
    use crate::ppstats::{default_r_grid, fit_intensity, r_grid, simulate_poisson, MarkIntensity};
    use crate::rng::seeded;
    use rand::Rng;
    use std::f64::consts::PI;

    fn names() -> Vec<String> {
        vec!["i".into(), "j".into()]
    }

    fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
        ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])).sqrt()
    }

    // Naive double loops, written independently of the hashed estimators.

    fn brute_k(p: &MarkedPointPattern, lam: &IntensityModel, r: &[f64]) -> Vec<Option<f64>> {
        let w = p.window();
        let (zi, zj) = (p.coords_of(0), p.coords_of(1));
        r.iter()
            .map(|&rr| {
                let mut total = 0.0;
                let mut elig = 0;
                for v in &zi {
                    if w.boundary_distance(v[0], v[1]) < rr {
                        continue;
                    }
                    elig += 1;
                    let mut inner = 0.0;
                    for z in &zj {
                        if dist(*v, *z) <= rr {
                            inner += 1.0 / (lam.intensity(0, v[0], v[1]) * lam.intensity(1, z[0], z[1]));
                        }
                    }
                    total += inner;
                }
                (elig > 0).then(|| total / (w.area() * (elig as f64 / zi.len() as f64)))
            })
            .collect()
    }

    fn brute_products(refs: &[[f64; 2]], zj: &[[f64; 2]], lam: &IntensityModel, lt: f64, w: &Window, r: &[f64]) -> Vec<Option<f64>> {
        r.iter()
            .map(|&rr| {
                let mut s = 0.0;
                let mut c = 0;
                for v in refs {
                    if w.boundary_distance(v[0], v[1]) < rr {
                        continue;
                    }
                    c += 1;
                    let mut prod = 1.0;
                    for z in zj {
                        if dist(*v, *z) <= rr {
                            prod *= 1.0 - lt / lam.intensity(1, z[0], z[1]);
                        }
                    }
                    s += prod;
                }
                (c > 0).then(|| 1.0 - s / c as f64)
            })
            .collect()
    }

    fn grid_refs(w: &Window, n: usize) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for b in 0..n {
            for a in 0..n {
                out.push([
                    w.x_min + (a as f64 + 0.5) * w.width() / n as f64,
                    w.y_min + (b as f64 + 0.5) * w.height() / n as f64,
                ]);
            }
        }
        out
    }

    fn brute_lambda_tilde(lam: &IntensityModel, zj: &[[f64; 2]], w: &Window) -> f64 {
        grid_refs(w, LAMBDA_TILDE_GRID)
            .iter()
            .chain(zj)
            .map(|p| lam.intensity(1, p[0], p[1]))
            .fold(f64::INFINITY, f64::min)
    }

    fn random_pattern(seed: u64, max_n: usize) -> MarkedPointPattern {
        let mut rng = seeded(seed);
        let w = Window::new(0.0, 2.0, 0.0, 1.0).unwrap();
        let n = rng.random_range(8..=max_n);
        let pts = (0..n)
            .map(|k| MarkedPoint { x: rng.random::<f64>() * 2.0, y: rng.random::<f64>(), mark: usize::from(k % 2 == 1) })
            .collect();
        MarkedPointPattern::new(pts, names(), w).unwrap()
    }

    fn poisson_pair(seed: u64, rate: f64) -> (MarkedPointPattern, IntensityModel) {
        let lam = IntensityModel::homogeneous(Window::unit(), &[rate, rate]).unwrap();
        (simulate_poisson(&lam, &names(), seed).unwrap(), lam)
    }

    fn rel_close(a: &[Option<f64>], b: &[Option<f64>], tol: f64) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|(x, y)| match (x, y) {
                (Some(x), Some(y)) => (x - y).abs() <= tol * x.abs().max(y.abs()).max(1e-300),
                (None, None) => true,
                _ => false,
            })
    }

    #[test]
    fn single_pair_k() {
        let p = MarkedPointPattern::from_labelled([(0.5, 0.5, "i"), (0.5, 0.6, "j")], Window::unit()).unwrap();
        let lam = IntensityModel::homogeneous(Window::unit(), &[1.0, 1.0]).unwrap();
        let k = khat_cross(&p, &lam, 0, 1, &[0.0, 0.05, 0.2]).unwrap();
        assert_eq!(k.values, vec![Some(0.0), Some(0.0), Some(1.0)]);
        let l = lhat_cross(&p, &lam, 0, 1, &[0.0, 0.2]).unwrap();
        assert!((l.values[1].unwrap() - (1.0 / PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn estimators_match_brute_force_exactly_when_homogeneous() {
        for seed in 0..50 {
            let p = random_pattern(seed, 50);
            let w = *p.window();
            let lam = IntensityModel::homogeneous(w, &[7.0, 3.0]).unwrap();
            let r = r_grid(0.6, 31);
            assert_eq!(khat_cross(&p, &lam, 0, 1, &r).unwrap().values, brute_k(&p, &lam, &r), "K seed {seed}");
            let zj = p.coords_of(1);
            let lt = brute_lambda_tilde(&lam, &zj, &w);
            let f = fhat_inhom_with(&p, &lam, 1, &r, 32).unwrap();
            assert_eq!(f.values, brute_products(&grid_refs(&w, 32), &zj, &lam, lt, &w, &r), "F seed {seed}");
            let g = ghat_cross(&p, &lam, 0, 1, &r).unwrap();
            assert_eq!(g.values, brute_products(&p.coords_of(0), &zj, &lam, lt, &w, &r), "G seed {seed}");
        }
    }

    #[test]
    fn unit_intensity_k_is_the_pair_count() {
        let p = random_pattern(77, 50);
        let w = *p.window();
        let lam = IntensityModel::homogeneous(w, &[1.0, 1.0]).unwrap();
        let r = [0.0, 0.1, 0.3];
        let k = khat_cross(&p, &lam, 0, 1, &r).unwrap();
        // plain integer pair counts
        for (idx, &rr) in r.iter().enumerate() {
            let zi = p.coords_of(0);
            let elig: Vec<_> = zi.iter().filter(|v| w.boundary_distance(v[0], v[1]) >= rr).collect();
            let pairs = elig.iter().map(|v| p.coords_of(1).iter().filter(|z| dist(**v, **z) <= rr).count()).sum::<usize>();
            let expect = pairs as f64 / (w.area() * elig.len() as f64 / zi.len() as f64);
            assert_eq!(k.values[idx], (!elig.is_empty()).then_some(expect));
        }
    }

    #[test]
    fn estimators_match_brute_force_with_fitted_intensity() {
        let mut checked = 0;
        for seed in 0..80 {
            let truth = IntensityModel::new(
                Window::new(0.0, 2.0, 0.0, 1.0).unwrap(),
                vec![MarkIntensity::log_linear(2.3, 0.5, -0.3), MarkIntensity::log_linear(2.0, -0.4, 0.8)],
            )
            .unwrap();
            let p = simulate_poisson(&truth, &names(), 500 + seed).unwrap();
            if p.count_of(0) < 4 || p.count_of(1) < 4 || p.len() > 50 || checked == 50 {
                continue;
            }
            checked += 1;
            let lam = fit_intensity(&p, 16).unwrap();
            let w = *p.window();
            let r = r_grid(0.6, 31);
            assert!(rel_close(&khat_cross(&p, &lam, 0, 1, &r).unwrap().values, &brute_k(&p, &lam, &r), 1e-12));
            let zj = p.coords_of(1);
            let lt = brute_lambda_tilde(&lam, &zj, &w);
            assert_eq!(lt, lambda_tilde(&lam, 1, &zj, &w).unwrap());
            let f = fhat_inhom_with(&p, &lam, 1, &r, 32).unwrap();
            assert!(rel_close(&f.values, &brute_products(&grid_refs(&w, 32), &zj, &lam, lt, &w, &r), 1e-12));
            let g = ghat_cross(&p, &lam, 0, 1, &r).unwrap();
            assert!(rel_close(&g.values, &brute_products(&p.coords_of(0), &zj, &lam, lt, &w, &r), 1e-12));
        }
        assert!(checked >= 20, "{checked}");
    }

    #[test]
    fn empty_mark_and_trivial_cases() {
        let w = Window::unit();
        let p = MarkedPointPattern::new(vec![MarkedPoint { x: 0.5, y: 0.5, mark: 0 }], names(), w).unwrap();
        let lam = IntensityModel::homogeneous(w, &[1.0, 1.0]).unwrap();
        let r = r_grid(0.25, 6);
        let f = fhat_inhom(&p, &lam, 1, &r).unwrap();
        assert!(f.values.iter().all(|v| *v == Some(0.0)));
        let g = ghat_cross(&p, &lam, 0, 1, &r).unwrap();
        assert!(g.values.iter().all(|v| *v == Some(0.0)));
        assert_eq!(khat_cross(&p, &lam, 0, 1, &r), Err(PpError::EmptyComponent("j".into())));
        assert_eq!(khat_cross(&p, &lam, 0, 0, &r), Err(PpError::SameMark));
    }

    #[test]
    fn g_steps_at_the_single_neighbour() {
        let p = MarkedPointPattern::from_labelled([(0.5, 0.5, "i"), (0.5, 0.4, "j")], Window::unit()).unwrap();
        let lam = IntensityModel::homogeneous(Window::unit(), &[1.0, 1.0]).unwrap();
        let g = ghat_cross(&p, &lam, 0, 1, &[0.0, 0.05, 0.099, 0.1001, 0.2]).unwrap();
        assert_eq!(g.values, vec![Some(0.0), Some(0.0), Some(0.0), Some(1.0), Some(1.0)]);
    }

    #[test]
    fn border_eligibility_truncates() {
        let p = MarkedPointPattern::from_labelled([(0.1, 0.5, "i"), (0.5, 0.5, "j")], Window::unit()).unwrap();
        let lam = IntensityModel::homogeneous(Window::unit(), &[1.0, 1.0]).unwrap();
        let k = khat_cross(&p, &lam, 0, 1, &[0.0, 0.1, 0.2]).unwrap();
        assert_eq!(k.values[2], None);
        assert!(k.values[1].is_some());
    }

    #[test]
    fn j_arithmetic_and_truncation() {
        let mk = |kind, v: Vec<Option<f64>>| SummaryCurve { kind, mark_i: "a".into(), mark_j: "b".into(), r: (0..v.len()).map(|k| k as f64).collect(), values: v };
        let f = mk(CurveKind::F, vec![Some(0.0), Some(0.5), Some(0.98), Some(0.5)]);
        let g = mk(CurveKind::G, vec![Some(0.0), Some(0.9), Some(0.99), Some(0.5)]);
        let j = jhat_cross(&f, &g).unwrap();
        assert_eq!(j.values[0], Some(1.0));
        assert!((j.values[1].unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(&j.values[2..], &[None, None]);
        let same = jhat_cross(&f, &f).unwrap();
        assert_eq!(&same.values[..2], &[Some(1.0), Some(1.0)]);
        let all_cut = mk(CurveKind::F, vec![Some(0.99); 4]);
        assert_eq!(jhat_cross(&all_cut, &g), Err(PpError::DivisionDomain));
        let other = SummaryCurve { r: vec![0.0, 2.0, 3.0, 4.0], ..g.clone() };
        assert_eq!(jhat_cross(&f, &other), Err(PpError::GridMismatch));
    }

    #[test]
    fn homogeneous_f_is_the_reduced_sample_estimator() {
        let (p, lam) = poisson_pair(5, 50.0);
        let r = r_grid(0.2, 11);
        let f = fhat_inhom_with(&p, &lam, 1, &r, 40).unwrap();
        let w = p.window();
        let zj = p.coords_of(1);
        for (k, &rr) in r.iter().enumerate() {
            let refs: Vec<_> = grid_refs(w, 40).into_iter().filter(|v| w.boundary_distance(v[0], v[1]) >= rr).collect();
            let empty = refs.iter().filter(|v| zj.iter().all(|z| dist(**v, *z) > rr)).count();
            assert_eq!(f.values[k], Some(1.0 - empty as f64 / refs.len() as f64));
        }
    }

    #[test]
    fn monotone_when_every_reference_is_eligible() {
        // all i-points at least r_max from the edge
        let mut rng = seeded(8);
        let w = Window::unit();
        let mut pts: Vec<MarkedPoint> = (0..40).map(|_| MarkedPoint { x: 0.3 + 0.4 * rng.random::<f64>(), y: 0.3 + 0.4 * rng.random::<f64>(), mark: 0 }).collect();
        pts.extend((0..60).map(|_| MarkedPoint { x: rng.random(), y: rng.random(), mark: 1 }));
        let p = MarkedPointPattern::new(pts, names(), w).unwrap();
        let lam = fit_intensity(&p, 16).unwrap();
        let r = r_grid(0.25, 51);
        for c in [khat_cross(&p, &lam, 0, 1, &r).unwrap(), ghat_cross(&p, &lam, 0, 1, &r).unwrap()] {
            let v: Vec<f64> = c.values.iter().map(|v| v.unwrap()).collect();
            assert!(v.windows(2).all(|w| w[1] >= w[0]), "{:?}", c.kind);
            if c.kind == CurveKind::G {
                assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
            }
        }
    }

    #[test]
    fn reference_grid_is_converged() {
        let (p, lam) = poisson_pair(21, 200.0);
        let r = default_r_grid(p.window(), 26);
        let a = fhat_inhom_with(&p, &lam, 1, &r, 128).unwrap();
        let b = fhat_inhom_with(&p, &lam, 1, &r, 256).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x.unwrap() - y.unwrap()).abs() < 0.01);
        }
    }

    #[test]
    fn poisson_null_k_l_f_g_j() {
        let seeds = 200;
        let r = [0.0, 0.03, 0.1];
        let (mut k, mut l, mut f, mut g, mut j, mut swap) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for seed in 0..seeds {
            let (p, lam) = poisson_pair(1000 + seed, 200.0);
            k += khat_cross(&p, &lam, 0, 1, &r).unwrap().values[2].unwrap();
            swap += khat_cross(&p, &lam, 1, 0, &r).unwrap().values[2].unwrap();
            l += lhat_cross(&p, &lam, 0, 1, &r).unwrap().values[2].unwrap();
            let fc = fhat_inhom(&p, &lam, 1, &r).unwrap();
            let gc = ghat_cross(&p, &lam, 0, 1, &r).unwrap();
            f += fc.values[1].unwrap();
            g += gc.values[1].unwrap();
            j += jhat_cross(&fc, &gc).unwrap().values[1].unwrap();
        }
        let n = seeds as f64;
        let pi_r2 = PI * 0.01;
        assert!(((k / n) / pi_r2 - 1.0).abs() < 0.05, "K {}", k / n);
        assert!(((swap / k) - 1.0).abs() < 0.1, "swap {}", swap / k);
        assert!((l / n - 0.1).abs() < 0.005, "L {}", l / n);
        let f_theory = 1.0 - (-200.0 * PI * 0.03f64 * 0.03).exp();
        assert!((f / n - f_theory).abs() < 0.03, "F {} vs {f_theory}", f / n);
        assert!((g / n - f / n).abs() < 0.03, "G {} F {}", g / n, f / n);
        assert!((j / n - 1.0).abs() < 0.15, "J {}", j / n);
    }
}
