//! Argument parsing and the file-writing side of every subcommand.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::commands::{execute, Artifacts, Command, ShapeDocument};
use crate::config::{EstimatorConfig, ExperimentConfig, ToleranceConfig};
use crate::svg::{render_shape_svg, RenderOptions};

#[derive(Debug, Parser)]
#[command(name = "crystal-fpp", version, about = "First-passage percolation experiments on crystal lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Describe a lattice: edges, voltages, edge connectivity.
    Lattice(ExperimentArgs),
    /// Build the quotient by a kernel and verify the commuting diagram.
    Quotient(ExperimentArgs),
    /// Estimate the time constant in one or more directions.
    Mu(ExperimentArgs),
    /// Estimate the limit shape.
    Shape(ExperimentArgs),
    /// Compare point-to-affine passage on the cover with the quotient.
    Monotonicity(ExperimentArgs),
    /// Check the lifting inequality on finite windows.
    LiftCheck(ExperimentArgs),
    /// Scan Bernoulli parameters for positivity of the time constant.
    Positivity(ExperimentArgs),
    /// Draw a saved shape estimate as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// TOML experiment file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in lattice: cubic<d> (e.g. cubic2), triangular, honeycomb, honeycomb-shifted, diamond.
    #[arg(long)]
    pub preset: Option<String>,
    /// Lattice file in the format written by the `lattice` command.
    #[arg(long)]
    pub lattice_file: Option<PathBuf>,
    /// Kernel generator as comma-separated integers; repeat for more.
    #[arg(long, allow_hyphen_values = true)]
    pub kernel: Vec<String>,
    /// Edge-time law, e.g. `exponential:1`, `bernoulli:0.3`.
    #[arg(long)]
    pub dist: Option<String>,
    /// Base seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub threads: Option<usize>,
    /// Largest scale multiple [default: 20].
    #[arg(long)]
    pub k_max: Option<u64>,
    /// Independent configurations per estimate [default: 100].
    #[arg(long)]
    pub replicas: Option<u32>,
    /// Number of shape directions [default: 16].
    #[arg(long)]
    pub dirs: Option<usize>,
    /// Rational direction such as `1,-1/2`; repeat for more.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Vec<String>,
    /// Lifting-check thresholds [default: 0,1,2].
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    /// Bernoulli parameters for positivity [default: 0,0.1,...,1].
    #[arg(long, value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    /// Quotient translation index of the lifting target.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x1: Option<Vec<i64>>,
    /// Base vertex of the lifting target [default: 0].
    #[arg(long)]
    pub x1_base: Option<usize>,
    /// `exhaustive` or `monte_carlo`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Largest number of exhaustive configurations [default: 1048576].
    #[arg(long)]
    pub budget: Option<u64>,
    /// Quotient window radius for the lifting check [default: largest |x1| entry].
    #[arg(long)]
    pub sub_radius: Option<i64>,
    /// Largest denominator of shape directions [default: 4].
    #[arg(long)]
    pub max_denominator: Option<i64>,
    /// Verdict slack in standard errors [default: 3].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Estimates below this count as zero [default: 0.02].
    #[arg(long)]
    pub zero_threshold: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// `shape.json` written by the shape command.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub label: Option<String>,
}

fn parse_ints(s: &str) -> Result<Vec<i64>> {
    s.split(',').map(|t| t.trim().parse::<i64>().with_context(|| format!("`{t}` is not an integer"))).collect()
}

impl ExperimentArgs {
    /// The merged configuration: the file if given, overridden by flags.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let kernel = if self.kernel.is_empty() {
            None
        } else {
            Some(self.kernel.iter().map(|k| parse_ints(k).with_context(|| format!("--kernel {k}"))).collect::<Result<Vec<_>>>()?)
        };
        let flags = ExperimentConfig {
            preset: self.preset.clone(),
            lattice_file: self.lattice_file.clone(),
            kernel,
            distribution: self.dist.clone(),
            base_seed: self.seed,
            output: self.out.clone(),
            threads: self.threads,
            estimator: EstimatorConfig {
                k_max: self.k_max,
                replicas: self.replicas,
                n_dirs: self.dirs,
                directions: (!self.direction.is_empty()).then(|| self.direction.clone()),
                t_grid: self.t_grid.clone(),
                p_grid: self.p_grid.clone(),
                x1: self.x1.clone(),
                x1_base: self.x1_base,
                mode: self.mode.clone(),
                budget: self.budget,
                sub_radius: self.sub_radius,
                max_denominator: self.max_denominator,
            },
            tolerance: ToleranceConfig { std_errors: self.tol, zero_threshold: self.zero_threshold },
        };
        if self.preset.is_some() && self.lattice_file.is_some() {
            bail!("--preset conflicts with --lattice-file; give one");
        }
        let file = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        Ok(file.overridden_by(flags))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    Failed,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let (command, args) = match cli.command {
        Sub::Lattice(a) => (Command::Lattice, a),
        Sub::Quotient(a) => (Command::Quotient, a),
        Sub::Mu(a) => (Command::Mu, a),
        Sub::Shape(a) => (Command::Shape, a),
        Sub::Monotonicity(a) => (Command::Monotonicity, a),
        Sub::LiftCheck(a) => (Command::LiftCheck, a),
        Sub::Positivity(a) => (Command::Positivity, a),
        Sub::Render(a) => return render(&a).map(|()| Outcome::Passed),
    };
    run_experiment(command, &args.config()?)
}

/// Runs one experiment and writes its files. Errors leave the output
/// directory untouched.
pub fn run_experiment(command: Command, config: &ExperimentConfig) -> Result<Outcome> {
    let started = Instant::now();
    let exp = config.resolve()?;
    let artifacts = match exp.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| execute(command, &exp))?,
        None => execute(command, &exp)?,
    };
    let summary = summary_text(command, config, &artifacts, started.elapsed().as_secs_f64())?;
    write_outputs(&exp.output, &artifacts, &summary)?;
    println!("{summary}");
    Ok(if artifacts.passed { Outcome::Passed } else { Outcome::Failed })
}

fn summary_text(command: Command, config: &ExperimentConfig, a: &Artifacts, wall: f64) -> Result<String> {
    let mut s = format!("command: {}\nverdict: {}\n\n[results]\n", command.name(), if a.passed { "PASS" } else { "FAIL" });
    for (k, v) in &a.summary {
        s.push_str(&format!("{k}: {v}\n"));
    }
    s.push_str(&format!("\n[provenance]\nversion: crystal-fpp {}\n", env!("CARGO_PKG_VERSION")));
    for (k, v) in &a.provenance {
        s.push_str(&format!("{k}: {v}\n"));
    }
    let files: Vec<&str> = a.files.iter().map(|(n, _)| n.as_str()).collect();
    s.push_str(&format!("files: summary.txt {}\n", files.join(" ")));
    s.push_str("\n[config]\n");
    s.push_str(&toml::to_string(config).context("echoing config")?);
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    s.push_str(&format!("\ntimestamp: {stamp} (wall time {wall:.2} s)\n"));
    Ok(s)
}

fn write_outputs(dir: &Path, a: &Artifacts, summary: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, contents) in &a.files {
        let path = dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    }
    let path = dir.join("summary.txt");
    std::fs::write(&path, summary).with_context(|| format!("writing {}", path.display()))
}

fn render(args: &RenderArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let doc: ShapeDocument = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.input.display()))?;
    let mut options = RenderOptions { overlay: doc.overlay, ..Default::default() };
    if let Some(label) = &args.label {
        options.label = label.clone();
    }
    let svg = render_shape_svg(&doc.shape, &options)?;
    std::fs::write(&args.out, svg).with_context(|| format!("writing {}", args.out.display()))
}
