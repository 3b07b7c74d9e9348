//! `ranger`: collar CSV in; semivariograms, model fits, home ranges and
//! interaction tests out.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ranger_core::ingest::parse_timestamp;
use ranger_core::variogram::{Family, MovementModel};

pub use commands::SimulateArgs;
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ranger", version, about = "Home ranges and spatial interaction from GPS relocations")]
struct Cli {
    /// TOML file of run settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and project a collar CSV into trajectories JSON.
    Ingest(PipelineArgs),
    /// Simulate movement tracks as a planar collar CSV.
    Simulate(SimulateFlags),
    /// Empirical semivariance per animal (CSV and SVG).
    Svf(PipelineArgs),
    /// Fit and rank movement models per animal.
    Fit(PipelineArgs),
    /// MCP, KDE and AKDE home ranges per animal.
    Homerange(PipelineArgs),
    /// Envelope tests of interaction for pairs sharing core ranges.
    Interact(PipelineArgs),
    /// Run every stage and index the results.
    Report(PipelineArgs),
}

#[derive(Debug, Args, Default)]
struct PipelineArgs {
    /// Collar CSV (`animal_id,timestamp,lon,lat`).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory (a file for `ingest`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    /// Monte Carlo simulations per test.
    #[arg(long)]
    simulations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    kde_grid: Option<usize>,
    #[arg(long)]
    quad_resolution: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    anisotropic: bool,
    #[arg(long)]
    max_lag_fraction: Option<f64>,
    #[arg(long)]
    min_pairs: Option<u64>,
    #[arg(long)]
    min_shared_months: Option<usize>,
    /// Measure deviations from the Poisson value instead of the simulation mean.
    #[arg(long)]
    theoretical_reference: bool,
    /// Observation window `x_min,x_max,y_min,y_max` in meters.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    window: Option<Vec<f64>>,
}

impl PipelineArgs {
    fn apply(self, mut c: RunConfig) -> RunConfig {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v.into(); } )* };
        }
        set!(levels, simulations, seed, n_r, kde_grid, quad_resolution, families, methods, max_lag_fraction, min_pairs, min_shared_months);
        if self.input.is_some() {
            c.input = self.input;
        }
        if self.out.is_some() {
            c.out = self.out;
        }
        if self.r_max.is_some() {
            c.r_max = self.r_max;
        }
        if let Some(w) = self.window {
            c.window = Some([w[0], w[1], w[2], w[3]]);
        }
        c.anisotropic |= self.anisotropic;
        c.theoretical_reference |= self.theoretical_reference;
        c
    }
}

#[derive(Debug, Args)]
struct SimulateFlags {
    #[arg(long, value_parser = parse_family)]
    model: Family,
    /// Stationary variance summed over both axes (m²).
    #[arg(long, default_value_t = 1e6)]
    sill: f64,
    /// Per-axis variances `a,b` (m²); overrides an isotropic sill.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    sigma2: Option<Vec<f64>>,
    /// Orientation of the first axis (radians).
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Position autocorrelation time (s).
    #[arg(long, default_value_t = 86_400.0)]
    tau_p: f64,
    /// Velocity autocorrelation time (s), OUF only.
    #[arg(long)]
    tau_v: Option<f64>,
    /// Diffusion rate (m²/s), Brownian only.
    #[arg(long)]
    diffusion: Option<f64>,
    /// Sampling interval (s).
    #[arg(long, default_value_t = 3600)]
    step: i64,
    #[arg(long, default_value_t = 4800)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    animals: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Home-range center `x,y` (m).
    #[arg(long, value_delimiter = ',', num_args = 2, allow_negative_numbers = true)]
    mean: Option<Vec<f64>>,
    /// First fix time (ISO-8601).
    #[arg(long, default_value = "2020-01-01T00:00:00Z")]
    start: String,
    #[arg(long)]
    out: PathBuf,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

impl SimulateFlags {
    fn resolve(self, cfg: &RunConfig) -> Result<SimulateArgs, CliError> {
        let usage = |m: &str| CliError::Usage(m.to_string());
        let base = match self.model {
            Family::Iid => MovementModel::iid(self.sill),
            Family::Ou => MovementModel::ou(self.sill, self.tau_p),
            Family::Ouf => MovementModel::ouf(self.sill, self.tau_p, self.tau_v.ok_or_else(|| usage("OUF needs --tau-v"))?),
            Family::Brownian => MovementModel::brownian(self.diffusion.ok_or_else(|| usage("BM needs --diffusion"))?),
        };
        let mut model = match self.sigma2 {
            Some(s) => base.with_axes([s[0], s[1]], self.theta),
            None if self.theta != 0.0 => base.with_axes(base.sigma2, self.theta),
            None => base,
        };
        if let Some(m) = self.mean {
            model = model.with_mean([m[0], m[1]]);
        }
        model.validate()?;
        let start = parse_timestamp(&self.start).ok_or_else(|| usage(&format!("bad --start `{}`", self.start)))?;
        Ok(SimulateArgs {
            model,
            step: self.step,
            steps: self.steps,
            animals: self.animals,
            seed: self.seed.unwrap_or(cfg.seed),
            start,
            out: self.out,
        })
    }
}

fn dispatch(command: Command, base: RunConfig) -> Result<(), CliError> {
    let pipeline = |args: PipelineArgs| -> Result<RunConfig, CliError> {
        let cfg = args.apply(base.clone());
        cfg.validate()?;
        Ok(cfg)
    };
    match command {
        Command::Ingest(a) => commands::cmd_ingest(&pipeline(a)?),
        Command::Simulate(a) => commands::cmd_simulate(&a.resolve(&base)?),
        Command::Svf(a) => commands::cmd_svf(&pipeline(a)?),
        Command::Fit(a) => commands::cmd_fit(&pipeline(a)?),
        Command::Homerange(a) => commands::cmd_homerange(&pipeline(a)?),
        Command::Interact(a) => commands::cmd_interact(&pipeline(a)?),
        Command::Report(a) => commands::cmd_report(&pipeline(a)?),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.threads.or(base.threads) {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli.command, base))
        }
        None => dispatch(cli.command, base),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ranger: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["ranger", "fit", "--input", "x.csv", "--levels", "0.9,0.5", "--seed", "3"]).unwrap();
        let Command::Fit(args) = cli.command else { panic!() };
        let base = RunConfig { seed: 1, simulations: 7, ..Default::default() };
        let c = args.apply(base);
        assert_eq!((c.seed, c.simulations, c.levels), (3, 7, vec![0.9, 0.5]));
        assert_eq!(c.input, Some(PathBuf::from("x.csv")));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["ranger", "nonsense"]), 1);
        assert_eq!(run(["ranger", "fit", "--levels", "abc"]), 1);
        assert_eq!(run(["ranger", "fit", "--levels", "1.5", "--input", "x", "--out", "y"]), 1);
        assert_eq!(run(["ranger", "fit"]), 1);
        assert_eq!(run(["ranger", "simulate", "--model", "OUF", "--out", "x.csv"]), 1);
        assert_eq!(run(["ranger", "--help"]), 0);
    }

    #[test]
    fn missing_input_is_a_data_error() {
        assert_eq!(run(["ranger", "svf", "--input", "/nonexistent/ranger.csv", "--out", "/tmp/x"]), 2);
    }
}
