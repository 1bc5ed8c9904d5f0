use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use photon_bound::cli::{
    load_runspec, reproduce, run_in, Recipe, RecipeOptions, RunReport, RunSpec, SweepParameter, SweepTask, TaskSpec,
    DEFAULT_OUTPUT_DIR, OUT_DIR_ENV,
};
use photon_bound::scattering::Mode;
use photon_bound::Error;

#[derive(Parser)]
#[command(name = "photon-bound", version, about = "Bound states, transmission and photon correlations of chirally coupled emitters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output directory (default: the config's output_dir, then $PHOTON_BOUND_OUT_DIR, then ./photon-bound-out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Transmission evaluation mode
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Absolute tolerance for "on the real axis"
    #[arg(long, global = true)]
    tol_real: Option<f64>,
    /// Absolute tolerance for matching eigenvalues of M and M_tot
    #[arg(long, global = true)]
    tol_match: Option<f64>,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON run description
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of the config in order
    Run(ConfigArg),
    /// Eigenvalues, classification and spin matrices
    Spectrum(ConfigArg),
    /// Sampled transmission coefficient and its trajectory
    Transmission(ConfigArg),
    /// Winding number and the Levinson check
    Winding(ConfigArg),
    /// Bound-state table and wavefunctions
    Boundstates(ConfigArg),
    /// Two-photon correlation of a single emitter
    G2(ConfigArg),
    /// Parameter sweep with threshold refinement
    Sweep(SweepArgs),
    /// Regenerate a fixed data set
    Reproduce {
        /// fig3a, fig3b or figS1
        #[arg(value_parser = parse_recipe)]
        recipe: Recipe,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// gamma_ratio, gamma, gamma_prime or separation
    #[arg(long, value_parser = parse_parameter)]
    parameter: Option<SweepParameter>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Also compute the winding number at every point
    #[arg(long)]
    winding: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_recipe(s: &str) -> Result<Recipe, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_parameter(s: &str) -> Result<SweepParameter, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn output_dir(common: &Common, spec: Option<&RunSpec>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| spec.and_then(|s| s.output_dir.clone()))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn load(path: &Path, common: &Common) -> Result<RunSpec, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut spec = load_runspec(&text)?;
    if let Some(mode) = common.mode {
        spec.mode = mode;
        for task in &mut spec.tasks {
            if let TaskSpec::Transmission { mode: m, .. } = task {
                *m = Some(mode);
            }
        }
    }
    let tol = &mut spec.tolerances;
    tol.tol_real = common.tol_real.or(tol.tol_real);
    tol.tol_match = common.tol_match.or(tol.tol_match);
    Ok(spec)
}

/// Keeps the config's tasks of kind `name`, or adds one with defaults.
fn only(mut spec: RunSpec, name: &str) -> RunSpec {
    spec.tasks.retain(|t| t.name() == name);
    if spec.tasks.is_empty() {
        spec.tasks.extend(TaskSpec::default_for(name));
    }
    spec
}

fn sweep_spec(mut spec: RunSpec, args: &SweepArgs) -> Result<RunSpec, Error> {
    let existing = spec.tasks.iter().find(|t| t.name() == "sweep").cloned();
    let (mut parameter, mut range, mut steps, mut task) = match existing {
        Some(TaskSpec::Sweep { parameter, range, steps, task }) => (Some(parameter), Some(range), Some(steps), task),
        _ => (None, None, None, SweepTask::Spectrum),
    };
    parameter = args.parameter.or(parameter);
    if let (Some(a), Some(b)) = (args.from, args.to) {
        range = Some([a, b]);
    }
    steps = args.steps.or(steps);
    if args.winding {
        task = SweepTask::Winding;
    }
    let (Some(parameter), Some(range), Some(steps)) = (parameter, range, steps) else {
        return Err(Error::Validation(vec![
            "sweep needs --parameter, --from, --to and --steps or a sweep task in the config".into(),
        ]));
    };
    spec.tasks = vec![TaskSpec::Sweep { parameter, range, steps, task }];
    // re-validate the assembled spec
    let text = serde_json::to_string(&spec).map_err(|e| Error::Io(e.to_string()))?;
    load_runspec(&text)
}

fn execute(cli: &Cli) -> Result<RunReport, (Error, u8)> {
    let spec_failure = |e: Error| (e, 1u8);
    let task_failure = |e: Error| (e, 2u8);
    let spec = match &cli.command {
        Command::Reproduce { recipe } => {
            let options = RecipeOptions {
                mode: cli.common.mode.unwrap_or(Mode::Markov),
                tolerances: photon_bound::cli::ToleranceSpec {
                    tol_real: cli.common.tol_real,
                    tol_match: cli.common.tol_match,
                    count_bic: None,
                },
            };
            return reproduce(*recipe, &output_dir(&cli.common, None), &options).map_err(task_failure);
        }
        Command::Run(c) => load(&c.config, &cli.common).map_err(spec_failure)?,
        Command::Spectrum(c) => only(load(&c.config, &cli.common).map_err(spec_failure)?, "spectrum"),
        Command::Transmission(c) => only(load(&c.config, &cli.common).map_err(spec_failure)?, "transmission"),
        Command::Winding(c) => only(load(&c.config, &cli.common).map_err(spec_failure)?, "winding"),
        Command::Boundstates(c) => only(load(&c.config, &cli.common).map_err(spec_failure)?, "boundstates"),
        Command::G2(c) => {
            let spec = only(load(&c.config, &cli.common).map_err(spec_failure)?, "g2");
            let text = serde_json::to_string(&spec).map_err(|e| spec_failure(Error::Io(e.to_string())))?;
            load_runspec(&text).map_err(spec_failure)?
        }
        Command::Sweep(args) => {
            let spec = load(&args.config.config, &cli.common).map_err(spec_failure)?;
            sweep_spec(spec, args).map_err(spec_failure)?
        }
    };
    run_in(&spec, &output_dir(&cli.common, Some(&spec))).map_err(task_failure)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", report.output_dir.join(&f.path).display());
            }
            for t in report.failures() {
                eprintln!("task {} ({}) failed: {}", t.index, t.task, t.error.as_deref().unwrap_or(""));
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err((e, code)) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
