use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use opal::experiment::{error_record, run_replications, OutputFormat, RunConfig, ScenarioKind, TrajectoryRecord};
use opal::solver::StepRule;
use opal::Error;

/// Closed-loop learning and decision making under Wasserstein ambiguity.
#[derive(Debug, Parser)]
#[command(name = "opal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a seeded experiment and write its trajectory.
    Run(Box<RunArgs>),
    /// Check a config file without running it.
    Validate {
        /// Path to a TOML config file.
        config: PathBuf,
    },
    /// Convert a JSON trajectory record to CSV or JSON.
    Export {
        /// JSON trajectory written by `opal run --format json`.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scenario {
    Oscillator,
    Allocation,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rule {
    InverseLipschitz,
    Monotone,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    t0: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    a0_const: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, value_enum)]
    step_rule: Option<Rule>,
    #[arg(long)]
    inner_steps: Option<usize>,
    /// Trajectory path. Defaults to `<OPAL_OUTPUT_DIR>/<scenario>.<format>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    replications: Option<usize>,
    /// Record regret diagnostics alongside each row.
    #[arg(long)]
    regret: bool,
    #[arg(long)]
    regret_samples: Option<usize>,
    /// Default directory for trajectory files.
    #[arg(long, env = "OPAL_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.scenario {
            c.scenario = match s {
                Scenario::Oscillator => ScenarioKind::Oscillator,
                Scenario::Allocation => ScenarioKind::Allocation,
            };
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            )*};
        }
        set!(horizon, seed, beta, theta, t0, a0_const, d, inner_steps, replications, regret_samples);
        if self.mu.is_some() {
            c.mu = self.mu;
        }
        if let Some(r) = self.step_rule {
            c.step_rule = match r {
                Rule::InverseLipschitz => StepRule::InverseLipschitz,
                Rule::Monotone => StepRule::Monotone,
            };
        }
        if let Some(f) = self.format {
            c.format = f.into();
        }
        if let Some(out) = &self.out {
            c.out = Some(out.to_string_lossy().into_owned());
        }
        c.regret |= self.regret;
        Ok(c)
    }

    fn output_path(&self, c: &RunConfig) -> PathBuf {
        match &c.out {
            Some(p) => PathBuf::from(p),
            None => self.output_dir.join(format!("{}.{}", c.scenario, c.format.extension())),
        }
    }
}

/// `base.csv` becomes `base.rep3.csv` for replication 3.
fn replication_path(base: &Path, index: usize) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.rep{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}.rep{index}"),
    };
    base.with_file_name(name)
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("{}", error_record(e));
    ExitCode::FAILURE
}

fn run(args: &RunArgs) -> ExitCode {
    let config = match args.config() {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let outputs = match run_replications(&config) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let base = args.output_path(&config);
    let mut truncated = false;
    for (i, output) in outputs.iter().enumerate() {
        let path = if outputs.len() == 1 { base.clone() } else { replication_path(&base, i) };
        if let Err(e) = output.record.write(&path, config.format) {
            return fail(&e);
        }
        if let Some(t) = &output.record.truncated {
            eprintln!("{}", serde_json::json!({ "error": t.kind, "step": t.step, "message": t.message }));
            truncated = true;
        }
    }
    let summaries: Vec<_> = outputs.iter().map(|o| &o.summary).collect();
    let text = if summaries.len() == 1 {
        serde_json::to_string_pretty(summaries[0])
    } else {
        serde_json::to_string_pretty(&summaries)
    };
    println!("{}", text.expect("summary serializes"));
    if truncated {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn validate(path: &Path) -> ExitCode {
    let config = match RunConfig::from_file(path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let violations: Vec<_> = config
        .violations()
        .into_iter()
        .map(|(field, reason)| serde_json::json!({ "field": field, "reason": reason }))
        .collect();
    let ok = violations.is_empty();
    println!("{}", serde_json::json!({ "valid": ok, "violations": violations }));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn export(input: &Path, format: Format, out: &Path) -> ExitCode {
    let result = std::fs::read_to_string(input)
        .map_err(Error::from)
        .and_then(|text| TrajectoryRecord::from_json(&text))
        .and_then(|record| record.write(out, format.into()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => run(args),
        Command::Validate { config } => validate(config),
        Command::Export { input, format, out } => export(input, *format, out),
    }
}
