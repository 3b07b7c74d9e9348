//! The pipeline stages behind each subcommand. Every stage reads the collar
//! CSV named in the config, recomputes what it needs and writes its files
//! under the output path. Per-animal and per-pair failures are recorded in
//! the outputs instead of aborting the run.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use ranger_core::envelope::{run_interaction_test, EnvelopeResult, InteractionOptions};
use ranger_core::homerange::{
    akde_density, area_csv, geojson, kde_bandwidth, kde_density, level_set, mcp_estimate, GridSpec,
    HomeRangeEstimate, Method, Region,
};
use ranger_core::ingest::{calendar_month, read_trajectories, trajectory_to_json, write_trajectories_csv};
use ranger_core::ppstats::CurveKind;
use ranger_core::rng::derive_seed;
use ranger_core::sim::{simulate, SimSpec};
use ranger_core::variogram::{
    empirical_svf, fit_report_json, fit_svf_model_with, select_model, theoretical_svf, EmpiricalVariogram, Family,
    FitOptions, FitResult, MovementModel,
};
use ranger_core::{Crs, MarkedPointPattern, Trajectory, Window};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::plot::{Layer, Plot};

/// How shared core-range use is decided; echoed into every p-value table.
pub const PAIRING_RULE: &str = "a calendar month (UTC) counts as shared when each animal has at least one \
relocation inside the other's 50% KDE core range during that month";

type Errors = BTreeMap<String, Value>;

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    text.push('\n');
    write_file(path, &text)
}

/// Animal ids made safe for file names.
pub fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

pub fn load(cfg: &RunConfig) -> Result<BTreeMap<String, Trajectory>, CliError> {
    let path = cfg.input()?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(read_trajectories(&text)?)
}

/// Fails with the first error only when every item failed.
fn all_failed(errors: &BTreeMap<String, CliError>, total: usize) -> Result<(), CliError> {
    match errors.values().next() {
        Some(e) if errors.len() == total => Err(e.clone()),
        _ => Ok(()),
    }
}

fn report_errors(stage: &str, errors: &BTreeMap<String, CliError>) {
    for (item, e) in errors {
        eprintln!("{stage}: {item}: {e}");
    }
}

fn errors_json(errors: &BTreeMap<String, CliError>) -> Value {
    Value::Object(errors.iter().map(|(k, e)| (k.clone(), e.to_json())).collect())
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out()?;
    let trajs = load(cfg)?;
    let arr: Vec<Value> = trajs.values().map(trajectory_to_json).collect();
    write_json(out, &Value::Array(arr))
}

/// Parameters of `ranger simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateArgs {
    pub model: MovementModel,
    pub step: i64,
    pub steps: usize,
    pub animals: usize,
    pub seed: u64,
    pub start: i64,
    pub out: PathBuf,
}

/// Animal `k` of `n`, named so that names sort in simulation order.
fn sim_id(k: usize, n: usize) -> String {
    let width = n.to_string().len().max(2);
    format!("sim{:0width$}", k + 1)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    if args.animals == 0 || args.steps < 2 || args.step <= 0 {
        return Err(CliError::Usage("need at least one animal, two steps and a positive step".into()));
    }
    let trajs = (0..args.animals)
        .into_par_iter()
        .map(|k| {
            let spec = SimSpec::regular(args.model, args.start, args.step, args.steps, derive_seed(args.seed, k as u64));
            let tr = simulate(&spec)?;
            Ok(Trajectory::new(sim_id(k, args.animals), Crs::Identity, tr.points().to_vec())?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_file(&args.out, &write_trajectories_csv(&trajs))
}

fn per_animal<T: Send>(
    trajs: &BTreeMap<String, Trajectory>,
    f: impl Fn(&Trajectory) -> Result<T, CliError> + Sync,
) -> (BTreeMap<String, T>, BTreeMap<String, CliError>) {
    let results: Vec<(String, Result<T, CliError>)> =
        trajs.par_iter().map(|(id, tr)| (id.clone(), f(tr))).collect();
    let mut ok = BTreeMap::new();
    let mut err = BTreeMap::new();
    for (id, r) in results {
        match r {
            Ok(v) => {
                ok.insert(id, v);
            }
            Err(e) => {
                err.insert(id, e);
            }
        }
    }
    (ok, err)
}

fn svf_plot(id: &str, ev: &EmpiricalVariogram, best: Option<&FitResult>) -> Plot {
    let days = 86_400.0;
    let mut layers = vec![Layer::Markers {
        points: ev.lags.iter().zip(&ev.gamma_hat).map(|(t, g)| [t / days, *g]).collect(),
        color: "black",
        label: "empirical".into(),
    }];
    if let Some(f) = best {
        let points = ev
            .lags
            .iter()
            .map(|&t| [t / days, theoretical_svf(&f.model, t).unwrap_or(f64::NAN)])
            .collect();
        layers.push(Layer::Line { points, color: "firebrick", dashed: false, label: format!("{} fit", f.model.family) });
    }
    Plot {
        title: format!("Semivariance: {id}"),
        x_label: "lag (days)".into(),
        y_label: "semivariance (m²)".into(),
        layers,
    }
}

pub fn cmd_svf(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out()?;
    let trajs = load(cfg)?;
    let (evs, errors) = per_animal(&trajs, |tr| Ok(empirical_svf(tr, cfg.max_lag_fraction)?));
    for (id, ev) in &evs {
        let stem = file_stem(id);
        write_file(&out.join(format!("{stem}_svf.csv")), &ev.to_csv())?;
        write_file(&out.join(format!("{stem}_svf.svg")), &svf_plot(id, ev, None).to_svg())?;
    }
    write_json(&out.join("errors.json"), &errors_json(&errors))?;
    report_errors("svf", &errors);
    all_failed(&errors, trajs.len())
}

/// Ranked fits of every configured family. Families that fail to fit are
/// listed separately; the animal fails only when none fits.
pub struct AnimalFit {
    pub ev: EmpiricalVariogram,
    pub ranked: Vec<FitResult>,
    pub family_errors: BTreeMap<String, CliError>,
}

impl AnimalFit {
    /// Best-ranked fit with a finite home range.
    pub fn best_resident(&self) -> Option<&FitResult> {
        self.ranked.iter().find(|f| f.model.family.is_range_resident())
    }
}

pub fn fit_animal(tr: &Trajectory, cfg: &RunConfig) -> Result<AnimalFit, CliError> {
    let ev = empirical_svf(tr, cfg.max_lag_fraction)?;
    let opts = FitOptions { min_pairs: cfg.min_pairs, ..Default::default() };
    let mut fits = Vec::new();
    let mut family_errors = BTreeMap::new();
    for fam in cfg.family_list()? {
        let aniso = cfg.anisotropic && fam != Family::Brownian;
        match fit_svf_model_with(&ev, fam, aniso, &opts) {
            Ok(f) => fits.push(f),
            Err(e) => {
                family_errors.insert(fam.name().to_string(), e.into());
            }
        }
    }
    if fits.is_empty() {
        return Err(family_errors.into_values().next().unwrap_or(CliError::Usage("no families".into())));
    }
    Ok(AnimalFit { ev, ranked: select_model(fits), family_errors })
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out()?;
    let trajs = load(cfg)?;
    let (fits, errors) = per_animal(&trajs, |tr| fit_animal(tr, cfg));
    let animals: Vec<Value> = fits
        .iter()
        .map(|(id, af)| {
            let mut v = fit_report_json(id, &af.ranked);
            v["family_errors"] = errors_json(&af.family_errors);
            v
        })
        .collect();
    write_json(&out.join("fits.json"), &json!({ "animals": animals, "errors": errors_json(&errors) }))?;
    for (id, af) in &fits {
        let stem = file_stem(id);
        write_file(&out.join(format!("{stem}_fit.svg")), &svf_plot(id, &af.ev, af.ranked.first()).to_svg())?;
    }
    report_errors("fit", &errors);
    all_failed(&errors, trajs.len())
}

/// All configured home-range estimates for one animal. A failing method is
/// recorded without dropping the others.
pub fn homeranges(tr: &Trajectory, cfg: &RunConfig) -> (Vec<HomeRangeEstimate>, BTreeMap<String, CliError>) {
    let mut est = Vec::new();
    let mut errors = BTreeMap::new();
    let grid = GridSpec::square(cfg.kde_grid);
    for method in cfg.method_list().unwrap_or_default() {
        let density = match method {
            Method::Mcp => {
                for &level in &cfg.levels {
                    match mcp_estimate(tr, level) {
                        Ok(e) => est.push(e),
                        Err(e) => {
                            errors.insert(format!("{method}/{level}"), e.into());
                        }
                    }
                }
                continue;
            }
            Method::Kde => kde_bandwidth(tr).and_then(|bw| kde_density(tr, &bw, grid)).map_err(CliError::from),
            Method::Akde => fit_animal(tr, cfg).and_then(|af| {
                let best = af
                    .best_resident()
                    .ok_or_else(|| CliError::Numerical("no range-resident model fitted".into()))?;
                Ok(akde_density(tr, best, grid)?)
            }),
        };
        match density {
            Ok(g) => {
                for &level in &cfg.levels {
                    match level_set(&g, level, method) {
                        Ok(e) => est.push(e),
                        Err(e) => {
                            errors.insert(format!("{method}/{level}"), e.into());
                        }
                    }
                }
            }
            Err(e) => {
                errors.insert(method.to_string(), e);
            }
        }
    }
    (est, errors)
}

pub fn cmd_homerange(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out()?;
    let trajs = load(cfg)?;
    let results: Vec<(String, Vec<HomeRangeEstimate>, BTreeMap<String, CliError>)> = trajs
        .par_iter()
        .map(|(id, tr)| {
            let (e, err) = homeranges(tr, cfg);
            (id.clone(), e, err)
        })
        .collect();
    let mut rows = Vec::new();
    let mut errors = BTreeMap::new();
    let mut failed = 0;
    for (id, est, err) in &results {
        let crs = trajs[id].crs();
        write_json(&out.join(format!("{}_homerange.geojson", file_stem(id))), &geojson(id, crs, est))?;
        rows.extend(est.iter().map(|e| (id.as_str(), e)));
        if est.is_empty() {
            failed += 1;
        }
        for (k, e) in err {
            errors.insert(format!("{id}/{k}"), e.clone());
        }
    }
    write_file(&out.join("areas.csv"), &area_csv(rows))?;
    write_json(&out.join("errors.json"), &errors_json(&errors))?;
    report_errors("homerange", &errors);
    if failed == trajs.len() {
        if let Some(e) = errors.values().next() {
            return Err(e.clone());
        }
    }
    Ok(())
}

/// Calendar months `(year, month)` in which `tr` has a relocation inside
/// `region`.
fn months_inside(tr: &Trajectory, region: &Region) -> BTreeSet<(i32, u32)> {
    tr.points().iter().filter(|p| region.contains(p.x, p.y)).map(|p| calendar_month(p.t)).collect()
}

/// Months in which each of `a` and `b` visits the other's core range.
pub fn shared_months(a: &Trajectory, core_a: &Region, b: &Trajectory, core_b: &Region) -> Vec<(i32, u32)> {
    let a_in_b = months_inside(a, core_b);
    let b_in_a = months_inside(b, core_a);
    a_in_b.intersection(&b_in_a).copied().collect()
}

/// 50% KDE core range.
pub fn core_range(tr: &Trajectory, cfg: &RunConfig) -> Result<Region, CliError> {
    let bw = kde_bandwidth(tr)?;
    let g = kde_density(tr, &bw, GridSpec::square(cfg.kde_grid))?;
    Ok(level_set(&g, 0.5, Method::Kde)?.region)
}

/// Two-mark pattern of the pair's relocations.
pub fn pair_pattern(a: &Trajectory, b: &Trajectory, cfg: &RunConfig) -> Result<MarkedPointPattern, CliError> {
    let labelled: Vec<(f64, f64, &str)> = a
        .points()
        .iter()
        .map(|p| (p.x, p.y, a.animal_id()))
        .chain(b.points().iter().map(|p| (p.x, p.y, b.animal_id())))
        .collect();
    let window = match cfg.window {
        Some(w) => Window::new(w[0], w[1], w[2], w[3])?,
        None => Window::around(labelled.iter().map(|&(x, y, _)| [x, y]))?,
    };
    Ok(MarkedPointPattern::from_labelled(labelled, window)?)
}

fn envelope_plot(env: &EnvelopeResult, from: &str, to: &str) -> Plot {
    let r = &env.observed.r;
    let nan = |v: &Option<f64>| v.unwrap_or(f64::NAN);
    let kind = env.observed.kind;
    Plot {
        title: format!("{kind} {from} → {to}, S = {}", env.s),
        x_label: "r (m)".into(),
        y_label: kind.to_string(),
        layers: vec![
            Layer::Band {
                x: r.clone(),
                lo: env.lo.iter().map(nan).collect(),
                hi: env.hi.iter().map(nan).collect(),
                color: "gray",
                label: "envelope".into(),
            },
            Layer::Line {
                points: r.iter().zip(&env.sim_mean).map(|(x, v)| [*x, nan(v)]).collect(),
                color: "steelblue",
                dashed: true,
                label: "simulation mean".into(),
            },
            Layer::Line {
                points: r.iter().zip(&env.observed.values).map(|(x, v)| [*x, nan(v)]).collect(),
                color: "black",
                dashed: false,
                label: "observed".into(),
            },
        ],
    }
}

fn month_label((y, m): (i32, u32)) -> String {
    format!("{y:04}-{m:02}")
}

/// Runs the four L/J tests of one qualifying pair, writing envelopes under
/// `dir`, and returns the pair's entry in the p-value table.
fn interact_pair(
    a: &Trajectory,
    b: &Trajectory,
    months: &[(i32, u32)],
    pair_seed: u64,
    cfg: &RunConfig,
    dir: &Path,
) -> Result<Value, CliError> {
    let (ia, ib) = (a.animal_id(), b.animal_id());
    let mut entry = json!({
        "animals": [ia, ib],
        "shared_months": months.iter().map(|m| month_label(*m)).collect::<Vec<_>>(),
    });
    let p = match pair_pattern(a, b, cfg) {
        Ok(p) => p,
        Err(e) => {
            entry["error"] = e.to_json();
            return Ok(entry);
        }
    };
    let opts = InteractionOptions {
        r: None,
        r_max: cfg.r_max,
        n_r: cfg.n_r,
        quad_resolution: cfg.quad_resolution,
        theoretical_reference: cfg.theoretical_reference,
    };
    let mut pvalues: BTreeMap<String, BTreeMap<String, BTreeMap<String, Option<f64>>>> = BTreeMap::new();
    let mut errors = Errors::new();
    let mut envelopes = BTreeMap::new();
    let mut low_power = false;
    let directions = [(0usize, 1usize, ia, ib), (1, 0, ib, ia)];
    for (t, (kind, (i, j, from, to))) in [CurveKind::L, CurveKind::J]
        .into_iter()
        .flat_map(|k| directions.iter().map(move |d| (k, *d)))
        .enumerate()
    {
        let dir_key = format!("{from}->{to}");
        let seed = derive_seed(pair_seed, t as u64);
        let table = pvalues.entry(kind.to_string()).or_default();
        match run_interaction_test(&p, i, j, kind, cfg.simulations, seed, &opts) {
            Ok(env) => {
                let stem = format!("{}__{}_{kind}", file_stem(from), file_stem(to));
                write_file(&dir.join(format!("{stem}.csv")), &env.to_csv())?;
                write_file(&dir.join(format!("{stem}.svg")), &envelope_plot(&env, from, to).to_svg())?;
                let (below, above) = env.excursions();
                let mad = env.mad.expect("global tests run");
                let dclf = env.dclf.expect("global tests run");
                low_power |= mad.low_power;
                table.entry("MAD".into()).or_default().insert(dir_key.clone(), Some(mad.p_value));
                table.entry("DCLF".into()).or_default().insert(dir_key.clone(), Some(dclf.p_value));
                envelopes.insert(
                    format!("{kind}/{dir_key}"),
                    json!({
                        "csv": format!("{stem}.csv"),
                        "svg": format!("{stem}.svg"),
                        "r_max": env.r_max,
                        "test_range_max_r": env.observed.r[env.test_range],
                        "pointwise_alpha": env.pointwise_alpha,
                        "mad_statistic": mad.statistic,
                        "dclf_statistic": dclf.statistic,
                        "points_below_envelope": below,
                        "points_above_envelope": above,
                    }),
                );
            }
            Err(e) => {
                let e = CliError::from(e);
                for stat in ["MAD", "DCLF"] {
                    table.entry(stat.into()).or_default().insert(dir_key.clone(), None);
                }
                errors.insert(format!("{kind}/{dir_key}"), e.to_json());
            }
        }
    }
    entry["pvalues"] = serde_json::to_value(&pvalues).expect("p-values serialize");
    entry["envelopes"] = Value::Object(envelopes.into_iter().collect());
    entry["low_power"] = json!(low_power);
    entry["errors"] = Value::Object(errors.into_iter().collect());
    Ok(entry)
}

pub fn cmd_interact(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out()?;
    let trajs = load(cfg)?;
    let (cores, core_errors) = per_animal(&trajs, |tr| core_range(tr, cfg));
    let ids: Vec<&String> = cores.keys().collect();
    let mut candidates = Vec::new();
    for (x, a) in ids.iter().enumerate() {
        for b in &ids[x + 1..] {
            candidates.push((*a, *b));
        }
    }
    let months: Vec<Vec<(i32, u32)>> = candidates
        .par_iter()
        .map(|(a, b)| shared_months(&trajs[*a], &cores[*a], &trajs[*b], &cores[*b]))
        .collect();

    let mut pairs = Vec::new();
    let mut not_qualifying = Vec::new();
    let mut failed = 0;
    for (q, ((a, b), m)) in candidates.iter().zip(&months).enumerate() {
        if m.len() < cfg.min_shared_months {
            not_qualifying.push(json!({ "animals": [a, b], "shared_month_count": m.len() }));
            continue;
        }
        let entry = interact_pair(&trajs[*a], &trajs[*b], m, derive_seed(cfg.seed, q as u64), cfg, &out.join("envelopes"))?;
        if entry.get("error").is_some() || entry["errors"].as_object().is_some_and(|e| e.len() == 4) {
            failed += 1;
            eprintln!("interact: {a}/{b}: failed");
        }
        pairs.push(entry);
    }
    report_errors("interact", &core_errors);
    let table = json!({
        "S": cfg.simulations,
        "seed": cfg.seed,
        "pairing_rule": {
            "flagged": true,
            "definition": PAIRING_RULE,
            "min_shared_months": cfg.min_shared_months,
            "core_level": 0.5,
        },
        "pairs": pairs,
        "not_qualifying": not_qualifying,
        "animal_errors": errors_json(&core_errors),
    });
    write_json(&out.join("pvalues.json"), &table)?;
    all_failed(&core_errors, trajs.len())?;
    if failed > 0 && failed == pairs.len() {
        return Err(CliError::Numerical("every qualifying pair failed".into()));
    }
    Ok(())
}

/// Files under `dir`, relative and sorted.
fn list_files(dir: &Path) -> Vec<String> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<String>) {
        let Ok(rd) = fs::read_dir(dir) else { return };
        for e in rd.flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(base, &p, out);
            } else if let Ok(rel) = p.strip_prefix(base) {
                out.push(rel.to_string_lossy().replace('\\', "/"));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// Runs every stage into subdirectories of the output and writes an index.
pub fn cmd_report(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out()?.to_path_buf();
    let stage_cfg = |sub: &str| RunConfig { out: Some(out.join(sub)), ..cfg.clone() };
    let mut ingest_cfg = stage_cfg("");
    ingest_cfg.out = Some(out.join("trajectories.json"));
    cmd_ingest(&ingest_cfg)?;

    type Stage = fn(&RunConfig) -> Result<(), CliError>;
    let stages: [(&str, Stage); 4] =
        [("svf", cmd_svf), ("fit", cmd_fit), ("homerange", cmd_homerange), ("interact", cmd_interact)];
    let mut sections = serde_json::Map::new();
    let mut stage_errors = serde_json::Map::new();
    let mut first_err = None;
    for (name, run) in stages {
        if let Err(e) = run(&stage_cfg(name)) {
            stage_errors.insert(name.into(), e.to_json());
            first_err.get_or_insert(e);
        }
        sections.insert(name.into(), json!(list_files(&out.join(name))));
    }
    let input_name = cfg.input()?.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let index = json!({
        "input": input_name,
        "trajectories": "trajectories.json",
        "sections": sections,
        "stage_errors": stage_errors,
        "config": {
            "levels": cfg.levels,
            "simulations": cfg.simulations,
            "seed": cfg.seed,
            "r_max": cfg.r_max,
            "n_r": cfg.n_r,
            "kde_grid": cfg.kde_grid,
            "quad_resolution": cfg.quad_resolution,
            "families": cfg.families,
            "methods": cfg.methods,
            "anisotropic": cfg.anisotropic,
            "max_lag_fraction": cfg.max_lag_fraction,
            "min_pairs": cfg.min_pairs,
            "min_shared_months": cfg.min_shared_months,
            "theoretical_reference": cfg.theoretical_reference,
            "window": cfg.window,
        },
    });
    write_json(&out.join("index.json"), &index)?;
    write_file(&out.join("index.html"), &index_html(&input_name, &sections, &stage_errors))?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn index_html(input: &str, sections: &serde_json::Map<String, Value>, errors: &serde_json::Map<String, Value>) -> String {
    let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let mut h = format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>ranger report: {0}</title></head><body>\n<h1>ranger report: {0}</h1>\n<p><a href=\"trajectories.json\">trajectories.json</a> · <a href=\"index.json\">index.json</a></p>\n",
        esc(input)
    );
    for (name, files) in sections {
        h.push_str(&format!("<h2>{name}</h2>\n"));
        if let Some(e) = errors.get(name) {
            h.push_str(&format!("<p>stage failed ({}): {}</p>\n", e["class"].as_str().unwrap_or(""), esc(e["message"].as_str().unwrap_or(""))));
        }
        h.push_str("<ul>\n");
        for f in files.as_array().into_iter().flatten().filter_map(|f| f.as_str()) {
            let href = format!("{name}/{f}");
            if f.ends_with(".svg") {
                h.push_str(&format!("<li><a href=\"{0}\">{1}</a><br><img src=\"{0}\" width=\"480\"></li>\n", esc(&href), esc(f)));
            } else {
                h.push_str(&format!("<li><a href=\"{}\">{}</a></li>\n", esc(&href), esc(f)));
            }
        }
        h.push_str("</ul>\n");
    }
    h.push_str("</body></html>\n");
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use ranger_core::Relocation;

    fn track(id: &str, pts: &[(i64, f64, f64)]) -> Trajectory {
        Trajectory::new(id, Crs::Identity, pts.iter().map(|&(t, x, y)| Relocation::new(t, x, y)).collect()).unwrap()
    }

    #[test]
    fn ids_and_stems() {
        assert_eq!(sim_id(0, 3), "sim01");
        assert_eq!(sim_id(99, 100), "sim100");
        assert_eq!(file_stem("bear 7/a"), "bear_7_a");
    }

    #[test]
    fn shared_months_need_visits_both_ways() {
        const DAY: i64 = 86_400;
        // Jan 2020 and Feb 2020 in epoch seconds
        let jan = 1_577_836_800;
        let feb = jan + 31 * DAY;
        let core_a = Region::Polygon(vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]);
        let core_b = Region::Polygon(vec![[5.0, 5.0], [15.0, 5.0], [15.0, 15.0], [5.0, 15.0]]);
        // a visits b's core in Jan and Feb; b visits a's core only in Feb
        let a = track("a", &[(jan, 6.0, 6.0), (feb, 7.0, 7.0)]);
        let b = track("b", &[(jan, 14.0, 14.0), (feb, 6.0, 6.0)]);
        assert_eq!(shared_months(&a, &core_a, &b, &core_b), vec![(2020, 2)]);
        assert_eq!(month_label((2020, 2)), "2020-02");
    }

    #[test]
    fn pair_pattern_uses_padded_box_or_override() {
        let a = track("a", &[(0, 0.0, 0.0), (60, 100.0, 0.0)]);
        let b = track("b", &[(0, 0.0, 50.0)]);
        let p = pair_pattern(&a, &b, &RunConfig::default()).unwrap();
        assert_eq!(p.marks(), ["a", "b"]);
        assert_eq!(p.window().x_min, -1.0);
        assert_eq!(p.window().y_max, 50.5);
        let cfg = RunConfig { window: Some([0.0, 10.0, 0.0, 10.0]), ..Default::default() };
        assert_eq!(pair_pattern(&a, &b, &cfg).unwrap_err().exit_code(), 2);
    }
}
