//! Monte Carlo envelope tests of independence between two marks, with the
//! null simulated by random torus shifts of one component.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::data::{MarkedPoint, MarkedPointPattern};
use crate::ppstats::{fit_intensity, r_grid, summary_curve, CurveKind, IntensityModel, PpError, SummaryCurve};
use crate::rng::{derive_seed, seeded};

/// Below this many simulations the global tests have little power.
pub const LOW_POWER_S: usize = 19;
/// Share of simulated curves that must be defined at a distance for it to
/// enter the global tests.
pub const MIN_DEFINED_SHARE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvelopeError {
    #[error("curves are on different distance grids")]
    GridMismatch,
    #[error("need at least one simulated curve")]
    NoSimulations,
    #[error("observed and simulated curves share no defined distances")]
    NoCommonDomain,
    #[error("{0} has no intensity-free null value")]
    NoTheoreticalValue(CurveKind),
    #[error(transparent)]
    Pp(#[from] PpError),
}

/// Translates the points of `mark` by `(dx, dy)` on the window torus and
/// shifts that mark's intensity with them.
pub fn random_shift(
    p: &MarkedPointPattern,
    lambda: &IntensityModel,
    mark: usize,
    shift: (f64, f64),
) -> (MarkedPointPattern, IntensityModel) {
    let w = *p.window();
    let (dx, dy) = shift;
    let points = p
        .points()
        .iter()
        .map(|q| {
            if q.mark == mark {
                let (x, y) = w.wrap(q.x + dx, q.y + dy);
                MarkedPoint { x, y, mark }
            } else {
                *q
            }
        })
        .collect();
    (
        MarkedPointPattern::from_parts_unchecked(points, p.marks().to_vec(), w),
        lambda.shifted(mark, dx, dy),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// Pointwise mean of the simulated curves.
    SimMean,
    /// Null values on the curve's distance grid.
    Theoretical(Vec<f64>),
}

impl Reference {
    /// The intensity-free Poisson value of `kind` on `r`.
    pub fn theoretical(kind: CurveKind, r: &[f64]) -> Result<Self, EnvelopeError> {
        r.iter()
            .map(|&x| kind.poisson_value(x))
            .collect::<Option<Vec<_>>>()
            .map(Reference::Theoretical)
            .ok_or(EnvelopeError::NoTheoreticalValue(kind))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalTest {
    pub statistic: f64,
    pub p_value: f64,
    /// Fewer than `LOW_POWER_S` simulations.
    pub low_power: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub observed: SummaryCurve,
    pub lo: Vec<Option<f64>>,
    pub hi: Vec<Option<f64>>,
    pub sim_mean: Vec<Option<f64>>,
    /// Simulated curves defined at each distance.
    pub defined_count: Vec<usize>,
    pub s: usize,
    pub pointwise_alpha: f64,
    /// Last grid index entering the global tests.
    pub test_range: usize,
    pub r_max: f64,
    pub mad: Option<GlobalTest>,
    pub dclf: Option<GlobalTest>,
}

impl EnvelopeResult {
    /// Distances within the test range where the observed curve falls below
    /// and above the envelope.
    pub fn excursions(&self) -> (usize, usize) {
        let (mut below, mut above) = (0, 0);
        for k in 0..=self.test_range {
            if let (Some(o), Some(lo), Some(hi)) = (self.observed.values[k], self.lo[k], self.hi[k]) {
                below += usize::from(o < lo);
                above += usize::from(o > hi);
            }
        }
        (below, above)
    }

    /// `r_m,obs,lo,hi,sim_mean,defined_count` with a header.
    pub fn to_csv(&self) -> String {
        let f = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut out = String::from("r_m,obs,lo,hi,sim_mean,defined_count\n");
        for k in 0..self.observed.r.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.observed.r[k],
                f(self.observed.values[k]),
                f(self.lo[k]),
                f(self.hi[k]),
                f(self.sim_mean[k]),
                self.defined_count[k]
            ));
        }
        out
    }

    pub fn report_json(&self) -> serde_json::Value {
        json!({
            "kind": self.observed.kind,
            "pair": [self.observed.mark_i, self.observed.mark_j],
            "S": self.s,
            "r_max": self.r_max,
            "pointwise_alpha": self.pointwise_alpha,
            "mad_p": self.mad.map(|t| t.p_value),
            "dclf_p": self.dclf.map(|t| t.p_value),
        })
    }
}

fn check_grids(obs: &SummaryCurve, sims: &[SummaryCurve]) -> Result<(), EnvelopeError> {
    if sims.is_empty() {
        return Err(EnvelopeError::NoSimulations);
    }
    if sims.iter().any(|s| !s.same_grid(obs)) {
        return Err(EnvelopeError::GridMismatch);
    }
    Ok(())
}

/// Last index of the leading stretch of distances where the observed curve
/// and at least `MIN_DEFINED_SHARE` of the simulations are defined.
fn common_range(obs: &SummaryCurve, sims: &[SummaryCurve]) -> Result<usize, EnvelopeError> {
    let need = (MIN_DEFINED_SHARE * sims.len() as f64).ceil() as usize;
    let mut last = None;
    for k in 0..obs.r.len() {
        let defined = sims.iter().filter(|s| s.values[k].is_some()).count();
        if obs.values[k].is_none() || defined < need {
            break;
        }
        last = Some(k);
    }
    last.ok_or(EnvelopeError::NoCommonDomain)
}

/// Pointwise min/max band of the simulated curves, ignoring undefined values.
pub fn pointwise_envelope(obs: &SummaryCurve, sims: &[SummaryCurve]) -> Result<EnvelopeResult, EnvelopeError> {
    check_grids(obs, sims)?;
    let n = obs.r.len();
    let (mut lo, mut hi, mut mean, mut count) = (vec![None; n], vec![None; n], vec![None; n], vec![0; n]);
    for k in 0..n {
        let vals: Vec<f64> = sims.iter().filter_map(|s| s.values[k]).collect();
        count[k] = vals.len();
        if !vals.is_empty() {
            lo[k] = Some(vals.iter().copied().fold(f64::INFINITY, f64::min));
            hi[k] = Some(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            mean[k] = Some(vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    let test_range = common_range(obs, sims).unwrap_or(0);
    Ok(EnvelopeResult {
        observed: obs.clone(),
        lo,
        hi,
        sim_mean: mean,
        defined_count: count,
        s: sims.len(),
        pointwise_alpha: 2.0 / (sims.len() as f64 + 1.0),
        test_range,
        r_max: obs.r[test_range],
        mad: None,
        dclf: None,
    })
}

fn reference_values(reference: &Reference, sims: &[SummaryCurve], n: usize) -> Result<Vec<Option<f64>>, EnvelopeError> {
    match reference {
        Reference::Theoretical(v) if v.len() == n => Ok(v.iter().map(|x| Some(*x)).collect()),
        Reference::Theoretical(_) => Err(EnvelopeError::GridMismatch),
        Reference::SimMean => Ok((0..n)
            .map(|k| {
                let vals: Vec<f64> = sims.iter().filter_map(|s| s.values[k]).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect()),
    }
}

fn rank_p(obs: f64, sims: &[f64]) -> f64 {
    let ge = sims.iter().filter(|&&v| v >= obs).count();
    (1 + ge) as f64 / (sims.len() + 1) as f64
}

fn deviations(c: &SummaryCurve, reference: &[Option<f64>], last: usize) -> Vec<Option<f64>> {
    (0..=last)
        .map(|k| match (c.values[k], reference[k]) {
            (Some(v), Some(e)) => Some(v - e),
            _ => None,
        })
        .collect()
}

fn mad_stat(d: &[Option<f64>]) -> f64 {
    d.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

/// Trapezoid rule over consecutive defined distances.
fn dclf_stat(d: &[Option<f64>], r: &[f64]) -> f64 {
    let mut q = 0.0;
    for k in 1..d.len() {
        if let (Some(a), Some(b)) = (d[k - 1], d[k]) {
            q += 0.5 * (a * a + b * b) * (r[k] - r[k - 1]);
        }
    }
    q
}

fn global_test(
    obs: &SummaryCurve,
    sims: &[SummaryCurve],
    reference: &Reference,
    stat: impl Fn(&[Option<f64>]) -> f64,
) -> Result<GlobalTest, EnvelopeError> {
    check_grids(obs, sims)?;
    let last = common_range(obs, sims)?;
    let e = reference_values(reference, sims, obs.r.len())?;
    let t_obs = stat(&deviations(obs, &e, last));
    let t_sims: Vec<f64> = sims.iter().map(|s| stat(&deviations(s, &e, last))).collect();
    Ok(GlobalTest { statistic: t_obs, p_value: rank_p(t_obs, &t_sims), low_power: sims.len() < LOW_POWER_S })
}

/// Maximum absolute deviation test over the common defined range.
pub fn mad_test(obs: &SummaryCurve, sims: &[SummaryCurve], reference: &Reference) -> Result<GlobalTest, EnvelopeError> {
    global_test(obs, sims, reference, mad_stat)
}

/// Integrated squared deviation (DCLF) test over the common defined range.
pub fn dclf_test(obs: &SummaryCurve, sims: &[SummaryCurve], reference: &Reference) -> Result<GlobalTest, EnvelopeError> {
    let r = obs.r.clone();
    global_test(obs, sims, reference, |d| dclf_stat(d, &r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionOptions {
    /// Explicit distance grid; overrides `r_max` and `n_r`.
    pub r: Option<Vec<f64>>,
    /// Largest distance; defaults to a quarter of the shorter window side.
    pub r_max: Option<f64>,
    pub n_r: usize,
    pub quad_resolution: usize,
    /// Use the intensity-free null value instead of the simulation mean.
    pub theoretical_reference: bool,
}

impl Default for InteractionOptions {
    fn default() -> Self {
        Self { r: None, r_max: None, n_r: 101, quad_resolution: 64, theoretical_reference: false }
    }
}

impl InteractionOptions {
    fn grid(&self, p: &MarkedPointPattern) -> Vec<f64> {
        if let Some(r) = &self.r {
            return r.clone();
        }
        let w = p.window();
        let r_max = self.r_max.unwrap_or(0.25 * w.width().min(w.height()));
        r_grid(r_max, self.n_r)
    }
}

/// Observed curve plus `s` curves for independent uniform torus shifts of
/// mark `j`, under an intensity fitted once to the observed pattern.
pub fn simulate_null_curves(
    p: &MarkedPointPattern,
    i: usize,
    j: usize,
    kind: CurveKind,
    s: usize,
    seed: u64,
    opts: &InteractionOptions,
) -> Result<(SummaryCurve, Vec<SummaryCurve>), EnvelopeError> {
    if s == 0 {
        return Err(EnvelopeError::NoSimulations);
    }
    let lambda = fit_intensity(p, opts.quad_resolution)?;
    let r = opts.grid(p);
    let obs = summary_curve(p, &lambda, i, j, kind, &r)?;
    let w = *p.window();
    let sims = (0..s)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded(derive_seed(seed, k as u64));
            let shift = (rng.random::<f64>() * w.width(), rng.random::<f64>() * w.height());
            let (ps, ls) = random_shift(p, &lambda, j, shift);
            match summary_curve(&ps, &ls, i, j, kind, &r) {
                Ok(c) => Ok(c),
                // a shift can leave J undefined everywhere
                Err(PpError::DivisionDomain) => Ok(SummaryCurve { values: vec![None; r.len()], ..obs.clone() }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((obs, sims))
}

/// Envelope plus MAD and DCLF tests of independence between marks `i` and
/// `j`.
pub fn run_interaction_test(
    p: &MarkedPointPattern,
    i: usize,
    j: usize,
    kind: CurveKind,
    s: usize,
    seed: u64,
    opts: &InteractionOptions,
) -> Result<EnvelopeResult, EnvelopeError> {
    let (obs, sims) = simulate_null_curves(p, i, j, kind, s, seed, opts)?;
    let reference = if opts.theoretical_reference {
        Reference::theoretical(kind, &obs.r)?
    } else {
        Reference::SimMean
    };
    let mut env = pointwise_envelope(&obs, &sims)?;
    env.mad = Some(mad_test(&obs, &sims, &reference)?);
    env.dclf = Some(dclf_test(&obs, &sims, &reference)?);
    Ok(env)
}
