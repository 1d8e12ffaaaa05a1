use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ratioshift_cli::config::{resolve_seed, RunConfig, TailName, SEED_ENV};
use ratioshift_cli::{commands, CliError, Outcome, SpecFile};
use ratioshift_core::{build_measure_spec, Mode};

#[derive(Parser)]
#[command(name = "ratioshift", version, about = "Construct, verify and sample perturbed golden-mean shift measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Build the level parameters and validate every condition.
    Construct,
    /// Nonsingularity, exactness and conservativity checks for a spec.
    Verify,
    /// Monte-Carlo and geometric experiments.
    Experiment {
        #[command(subcommand)]
        kind: Experiment,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Analytic against direct derivative on random windows.
    Rn,
    /// Ratio-set evidence for a lattice target.
    RatioSet,
    /// Partition areas, adjacency, pushforward and coding round trips.
    Torus,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "full" => Ok(Mode::Full),
        "desk" => Ok(Mode::Desk),
        _ => Err(format!("unknown profile {s:?} (expected full or desk)")),
    }
}

#[derive(Args)]
struct Flags {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Measure file written by `construct`; otherwise the measure is built from the flags.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Directory for the report, spec and CSV series.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    levels: Option<usize>,
    #[arg(long, global = true, value_parser = parse_mode)]
    profile: Option<Mode>,
    #[arg(long, global = true)]
    lambda1: Option<f64>,
    #[arg(long, global = true, value_enum)]
    tail: Option<TailName>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Target level j of the ratio-set experiment.
    #[arg(long, global = true)]
    j: Option<usize>,
    /// One-based digits of the conditioning cylinder.
    #[arg(long, global = true)]
    cylinder: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    cylinder_start: Option<i64>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

impl Flags {
    fn apply(&self, c: &mut RunConfig) {
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => { $(if let Some(v) = &self.$flag { c.$field = v.clone(); })* };
        }
        set!(levels => levels, profile => profile, lambda1 => lambda1, tail => tail, eps => eps, depth => depth, j => target, cylinder => cylinder, cylinder_start => cylinder_start, tolerance => tolerance);
        if self.samples.is_some() {
            c.samples = self.samples;
        }
        if self.horizon.is_some() {
            c.horizon = self.horizon;
        }
    }
}

fn load_spec(flags: &Flags, config: &RunConfig) -> Result<SpecFile, CliError> {
    if let Some(path) = &flags.spec {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        return SpecFile::read(&text);
    }
    let profile = config.profile();
    let (_, params) = build_measure_spec(config.levels, &profile)?;
    Ok(SpecFile::new(profile.clone(), config.tail_rule(&profile), params))
}

fn write_outputs(dir: &Path, outcome: &Outcome) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), outcome.report.to_json())?;
    for (name, body) in &outcome.files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let flags = &cli.flags;
    let mut config = match &flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    flags.apply(&mut config);
    let env = std::env::var(SEED_ENV).ok();
    let seed = resolve_seed(&mut config, flags.seed, env.as_deref())?;
    if let Some(n) = flags.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let outcome = match cli.command {
        Command::Construct => commands::construct(&config, seed)?,
        Command::Verify => commands::verify(&config, &load_spec(flags, &config)?, seed)?,
        Command::Experiment { kind: Experiment::Rn } => commands::experiment_rn(&config, &load_spec(flags, &config)?, seed)?,
        Command::Experiment { kind: Experiment::RatioSet } => commands::experiment_ratio_set(&config, &load_spec(flags, &config)?, seed)?,
        Command::Experiment { kind: Experiment::Torus } => commands::experiment_torus(&config, seed)?,
    };
    if let Some(dir) = &flags.out {
        write_outputs(dir, &outcome)?;
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.report.to_json());
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
