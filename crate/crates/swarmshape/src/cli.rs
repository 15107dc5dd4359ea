//! The `swarmshape` command line.
//!
//! Exit codes: 0 success, 2 usage or invalid parameters, 3 unreadable or
//! malformed files, 4 scorer or model failure, 5 optimization or planning
//! failure, 6 a simulation phase did not converge (the trajectory is still
//! written), 7 a trajectory failed the safety audit.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarmshape_core::navsim::{ground_grid, simulate_show, SimError};
use swarmshape_core::optimizer::{improvement_metrics, run_optimization, MetricsError, OptimizeError};
use swarmshape_core::raster::{render_formation, solid_color_image};
use swarmshape_core::showplan::{build_show_plan, PlanError, ShowPlan};
use swarmshape_core::similarity::{enrich_prompt, select_color};
use swarmshape_core::{NamedColor, ScoreError};

use crate::audit::audit;
use crate::config::{Backend, BackendKind, ConfigError, MetricKind, RunConfig};
use crate::format::{self, FormatError, FormationRecord};
use crate::plot::frame_images;

#[derive(Debug, Parser)]
#[command(name = "swarmshape", version, about = "Turn a word into a drone-show formation")]
pub struct Cli {
    #[command(flatten)]
    pub shared: Shared,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Shared {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Neural model bundle. Falls back to the config file, then to the
    /// SWARMSHAPE_MODEL_DIR environment variable.
    #[arg(long, global = true)]
    pub model_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,
    /// Target silhouette (PNG) for the template backend.
    #[arg(long, global = true)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the enriched prompt for a word.
    Enrich {
        word: String,
        /// Use this color instead of asking the scorer.
        #[arg(long)]
        color: Option<String>,
    },
    /// Search for the formation that best matches a word.
    Optimize(OptimizeArgs),
    /// Turn a formation into per-drone goals in the show plane.
    Plan(PlanArgs),
    /// Fly one or more plans in sequence.
    Simulate(SimulateArgs),
    /// Improvement metrics over optimization logs.
    Metrics {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
    /// Render a formation, or a solid color, to PNG.
    Render {
        formation: Option<PathBuf>,
        #[arg(long, conflicts_with = "formation", required_unless_present = "formation")]
        solid: Option<String>,
        /// Fill color; defaults to the formation's own.
        #[arg(long)]
        color: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a trajectory for separation violations.
    Audit { trajectory: PathBuf },
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    pub word: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub color: Option<String>,
    #[arg(long)]
    pub robots: Option<usize>,
    #[arg(long)]
    pub pool_size: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub elites: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    pub formation: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of drones; defaults to the formation size.
    #[arg(long)]
    pub drones: Option<usize>,
    #[arg(long)]
    pub distance: Option<f64>,
    #[arg(long)]
    pub base_height: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    /// Ground grid spacing, meters.
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricKind>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(required = true)]
    pub plans: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write front/top view PNGs of the frames here.
    #[arg(long)]
    pub plots: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub plot_every: usize,
    #[arg(long)]
    pub timestep: Option<f64>,
    #[arg(long)]
    pub max_time: Option<f64>,
    /// Ground grid spacing, meters. Must match the one used for planning.
    #[arg(long)]
    pub spacing: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("phase {0} did not reach its goals within the time limit")]
    Unconverged(usize),
    #[error("minimum separation {min:.6} m is below two radii ({limit:.6} m)")]
    Unsafe { min: f64, limit: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Format(_) => 3,
            CliError::Config(e) => match e {
                ConfigError::Format(_) => 3,
                ConfigError::Score(_) => 4,
                _ => 2,
            },
            CliError::Score(_) => 4,
            CliError::Optimize(e) => match e {
                OptimizeError::Config(_) | OptimizeError::Prompt(_) => 2,
                OptimizeError::Score(_) => 4,
                _ => 5,
            },
            CliError::Plan(PlanError::InvalidGeometry(_)) => 2,
            CliError::Plan(_) => 5,
            CliError::Sim(e) => match e {
                SimError::InvalidParameter(_) | SimError::TimestepTooLong | SimError::SpacingTooSmall { .. } => 2,
                SimError::SizeMismatch { .. } | SimError::NoPlans => 3,
                SimError::Plan(_) => 5,
            },
            CliError::Metrics(_) => 3,
            CliError::Unconverged(_) => 6,
            CliError::Unsafe { .. } => 7,
        }
    }
}

fn parse_color(name: &str) -> Result<NamedColor, CliError> {
    name.parse()
        .map_err(|_| CliError::Config(ConfigError::UnknownColor(name.to_owned())))
}

fn create_dir(dir: &Path) -> Result<(), FormatError> {
    fs::create_dir_all(dir).map_err(|source| FormatError::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn load_config(shared: &Shared) -> Result<RunConfig, CliError> {
    let mut config = match &shared.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if shared.model_dir.is_some() {
        config.model_dir = shared.model_dir.clone();
    }
    if shared.backend.is_some() {
        config.backend = shared.backend;
    }
    if shared.mask.is_some() {
        config.mask = shared.mask.clone();
    }
    Ok(config)
}

/// Parses `args` (including the program name), runs the command and
/// reports errors on stderr.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(&cli.shared)?;
    match cli.command {
        Command::Enrich { word, color } => cmd_enrich(&config, &word, color.as_deref()),
        Command::Optimize(args) => cmd_optimize(config, args),
        Command::Plan(args) => cmd_plan(config, args),
        Command::Simulate(args) => cmd_simulate(config, args),
        Command::Metrics { logs } => cmd_metrics(&logs),
        Command::Render {
            formation,
            solid,
            color,
            out,
        } => cmd_render(formation.as_deref(), solid.as_deref(), color.as_deref(), &out),
        Command::Audit { trajectory } => cmd_audit(&trajectory),
    }
}

fn cmd_enrich(config: &RunConfig, word: &str, color: Option<&str>) -> Result<(), CliError> {
    let color = match color.map(parse_color).transpose()? {
        Some(c) => c,
        None => {
            if config.backend_kind() == BackendKind::Template {
                return Err(CliError::Score(ScoreError::BackendUnsupported));
            }
            select_color(word, &Backend::open(config)?)?
        }
    };
    let prompt = enrich_prompt(word, color).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("{}", prompt.text());
    Ok(())
}

fn cmd_optimize(mut config: RunConfig, args: OptimizeArgs) -> Result<(), CliError> {
    let opt = &mut config.optimizer;
    for (slot, value) in [
        (&mut opt.robots, args.robots),
        (&mut opt.pool_size, args.pool_size),
        (&mut opt.iterations, args.iterations),
        (&mut opt.elites, args.elites),
    ] {
        if let Some(v) = value {
            *slot = v;
        }
    }
    if args.color.is_some() {
        config.color = args.color;
    }
    let word = args
        .word
        .or_else(|| config.word.clone())
        .ok_or_else(|| CliError::Usage("no word given (argument or config \"word\")".into()))?;
    let seed = args
        .seed
        .or(config.seed)
        .ok_or_else(|| CliError::Usage("--seed is required (or \"seed\" in the config)".into()))?;
    let out = args
        .out
        .or_else(|| config.output.clone())
        .ok_or_else(|| CliError::Usage("--out is required (or \"output\" in the config)".into()))?;
    let color = config.color()?;
    let opt_config = config.optimizer.to_config(seed);
    opt_config.validate().map_err(OptimizeError::from)?;

    let backend = Backend::open(&config)?;
    let outcome = run_optimization(&word, &opt_config, &backend, color, crate::render_parallel)?;
    let color = outcome.prompt.color();

    let images = out.join("images");
    create_dir(&images)?;
    let record = FormationRecord::from_candidate(&outcome.best, color, outcome.prompt.text());
    format::save_formation(&out.join("best.json"), &record)?;
    format::save_log_csv(&out.join("log.csv"), &outcome.log)?;
    let rendered = crate::render_parallel(&outcome.log.snapshots, color);
    for (record, image) in outcome.log.records.iter().zip(&rendered) {
        format::save_png(&images.join(format!("iter_{:02}.png", record.iteration)), image)?;
    }
    let first = outcome.log.records.first().map_or(0.0, |r| r.best_score);
    println!(
        "{}: best score {:.6} (initial {:.6}) after {} iterations",
        outcome.prompt.text(),
        outcome.best.score.value(),
        first,
        opt_config.iterations
    );
    Ok(())
}

fn cmd_plan(mut config: RunConfig, args: PlanArgs) -> Result<(), CliError> {
    let plane = &mut config.plane;
    for (slot, value) in [
        (&mut plane.distance, args.distance),
        (&mut plane.base_height, args.base_height),
        (&mut plane.width, args.width),
        (&mut config.sim.grid_spacing, args.spacing),
    ] {
        if let Some(v) = value {
            *slot = v;
        }
    }
    if let Some(m) = args.metric {
        config.metric = m;
    }
    let plane = config.plane.to_plane();
    plane.validate()?;
    let source = format::load_formation(&args.formation)?;
    let drones = args.drones.unwrap_or(source.formation.len());
    if drones == 0 {
        return Err(CliError::Usage("--drones must be positive".into()));
    }
    let starts = ground_grid(
        drones,
        config.sim.grid_spacing,
        config.sim.agent_radius,
        (0.0, plane.distance),
    )?;
    let plan = build_show_plan(&source.formation, source.color, &starts, &plane, config.metric.into())?;
    format::save_plan(&args.out, &plan, &source)?;
    println!("{} goals for {} in the plane y = {}", plan.len(), source.prompt, plane.distance);
    Ok(())
}

/// Ground grid the first plan was built from: same spacing and radius,
/// centered under the show plane.
fn starts_for(plan: &ShowPlan, config: &RunConfig) -> Result<Vec<swarmshape_core::Point3>, CliError> {
    let y = plan.goals.iter().map(|g| g.y).sum::<f64>() / plan.len().max(1) as f64;
    Ok(ground_grid(
        plan.len(),
        config.sim.grid_spacing,
        config.sim.agent_radius,
        (0.0, format::sig9(y)),
    )?)
}

fn cmd_simulate(mut config: RunConfig, args: SimulateArgs) -> Result<(), CliError> {
    for (slot, value) in [
        (&mut config.sim.timestep, args.timestep),
        (&mut config.sim.max_sim_time, args.max_time),
        (&mut config.sim.grid_spacing, args.spacing),
    ] {
        if let Some(v) = value {
            *slot = v;
        }
    }
    let plans = args
        .plans
        .iter()
        .map(|p| format::load_plan(p).map(|(plan, _)| plan))
        .collect::<Result<Vec<_>, _>>()?;
    let sim = config.sim.to_config();
    let starts = starts_for(&plans[0], &config)?;
    let trajectory = simulate_show(&starts, &plans, &sim)?;
    format::save_trajectory(&args.out, &trajectory)?;
    if let Some(dir) = &args.plots {
        create_dir(dir)?;
        for (k, img) in frame_images(&trajectory, args.plot_every) {
            format::save_rgb(&dir.join(format!("frame_{k:05}.png")), &img)?;
        }
    }
    let last_t = trajectory.frames.last().map_or(0.0, |f| f.t);
    println!(
        "{} drones, {} phases, {} frames ({last_t:.2} s), min clearance {:.4} m",
        starts.len(),
        trajectory.phases.len(),
        trajectory.frames.len(),
        trajectory.min_clearance()
    );
    match trajectory.phases.iter().position(|p| !p.converged) {
        Some(i) => Err(CliError::Unconverged(i)),
        None => Ok(()),
    }
}

fn cmd_metrics(paths: &[PathBuf]) -> Result<(), CliError> {
    let logs = paths
        .iter()
        .map(|p| format::load_log_csv(p))
        .collect::<Result<Vec<_>, _>>()?;
    let (per_log, aoi) = improvement_metrics(&logs)?;
    for (path, p) in paths.iter().zip(&per_log) {
        println!("{}\tP_w {:.2}%", path.display(), 100.0 * p);
    }
    println!("AoI {:.2}%", 100.0 * aoi);
    Ok(())
}

fn cmd_render(formation: Option<&Path>, solid: Option<&str>, color: Option<&str>, out: &Path) -> Result<(), CliError> {
    let image = match (formation, solid) {
        (_, Some(name)) => solid_color_image(parse_color(name)?),
        (Some(path), None) => {
            let record = format::load_formation(path)?;
            let color = color.map(parse_color).transpose()?.unwrap_or(record.color);
            render_formation(&record.formation, color)
        }
        (None, None) => return Err(CliError::Usage("give a formation file or --solid".into())),
    };
    format::save_png(out, &image)?;
    Ok(())
}

fn cmd_audit(path: &Path) -> Result<(), CliError> {
    let t = format::load_trajectory(path)?;
    let r = audit(&t);
    println!("drones            {}", r.drones);
    println!("frames            {}", r.frames);
    println!("radius            {:.6} m", r.radius);
    println!("min separation    {:.6} m (frame {})", r.min_separation, r.min_frame);
    println!("max speed         {:.6} m/s", r.max_speed);
    println!("converged         {}", r.converged);
    if r.is_safe() {
        println!("ok");
        Ok(())
    } else {
        Err(CliError::Unsafe {
            min: r.min_separation,
            limit: 2.0 * r.radius,
        })
    }
}
