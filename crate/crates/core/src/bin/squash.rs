use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use squashing::scenario::{
    self, Analysis, AnalysisResult, MapSpec, Report, Scenario, StateSpec, SweepConfig, SweepTable, ThresholdOutcome,
};
use squashing::{Error, Result};

#[derive(Parser)]
#[command(name = "squash", version, about = "Entanglement verification with positive squashing maps")]
struct Cli {
    /// TOML scenario (or sweep) description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic step; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Photon-number truncation; overrides the config.
    #[arg(long = "n-max", global = true)]
    n_max: Option<usize>,
    /// Output file; stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Record wall time in the report (makes reruns differ).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Click data, reconstruction and entanglement verdict.
    VerifyTomography {
        /// Use two photons in a Werner polarization state instead of the config state.
        #[arg(long)]
        werner: Option<f64>,
    },
    /// Ion-trap separability boundaries for qubit and qutrit data.
    IonTrapThreshold {
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Inclusion certificates and the squasher for the polarization model.
    PolarizationCertify,
    /// Negativity, PPT test and witnesses of the configured state.
    Negativity {
        #[arg(long)]
        werner: Option<f64>,
    },
    /// Negativity lower bounds through the configured local maps.
    Bound,
    /// Diamond norm of a map, e.g. `transpose:2`, `identity:3`, `depolarizing:2:0.3`.
    DiamondNorm {
        #[arg(long)]
        map: Option<String>,
    },
    /// Parameter sweep from a sweep config.
    Sweep,
    /// Every analysis listed in the config.
    Run,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::VerifyTomography { .. } => "verify-tomography",
            Command::IonTrapThreshold { .. } => "ion-trap-threshold",
            Command::PolarizationCertify => "polarization-certify",
            Command::Negativity { .. } => "negativity",
            Command::Bound => "bound",
            Command::DiamondNorm { .. } => "diamond-norm",
            Command::Sweep => "sweep",
            Command::Run => "run",
        }
    }
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse_map(s: &str) -> Result<MapSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .ok_or_else(|| Error::Config(format!("map `{s}` is missing a field")))?
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("map `{s}`: {e}")))
    };
    let dim = |i: usize| -> Result<usize> {
        let v = num(i)?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::Config(format!("map `{s}`: bad dimension")));
        }
        Ok(v as usize)
    };
    match parts[0] {
        "identity" => Ok(MapSpec::Identity { dim: dim(1)? }),
        "transpose" => Ok(MapSpec::Transpose { dim: dim(1)? }),
        "depolarizing" => Ok(MapSpec::Depolarizing { dim: dim(1)?, p: num(2)? }),
        "transpose-mixture" => Ok(MapSpec::TransposeMixture { q: num(1)? }),
        other => Err(Error::Config(format!("unknown map kind `{other}`"))),
    }
}

fn kind_matches(cmd: &Command, a: &Analysis) -> bool {
    matches!(
        (cmd, a),
        (Command::VerifyTomography { .. }, Analysis::TomographyTest { .. })
            | (Command::IonTrapThreshold { .. }, Analysis::Threshold { .. })
            | (Command::PolarizationCertify, Analysis::SquashCheck)
            | (Command::Negativity { .. }, Analysis::Negativity)
            | (Command::Bound, Analysis::Bounds { .. })
            | (Command::DiamondNorm { .. }, Analysis::DiamondNorm { .. })
            | (Command::Run, _)
    )
}

fn build_scenario(cli: &Cli) -> Result<Scenario> {
    let mut s = match &cli.config {
        Some(p) => Scenario::from_toml(&read_config(p)?)?,
        None => Scenario::default(),
    };
    if let Some(seed) = cli.seed {
        s.seed = Some(seed);
    }
    if let Some(n) = cli.n_max {
        s.model.n_max = n;
    } else if cli.config.is_none() && matches!(cli.command, Command::PolarizationCertify) {
        s.model.n_max = 5;
    }
    let cmd = &cli.command;
    s.analyses.retain(|a| kind_matches(cmd, a));
    match cmd {
        Command::VerifyTomography { werner } | Command::Negativity { werner } => {
            if let Some(p) = werner {
                s.state = Some(StateSpec::Werner { p: *p });
            }
        }
        Command::DiamondNorm { map: Some(m) } => {
            s.analyses = vec![Analysis::DiamondNorm { map: parse_map(m)? }];
        }
        _ => {}
    }
    if s.analyses.is_empty() {
        let default = match cmd {
            Command::VerifyTomography { .. } => {
                if s.state.is_none() {
                    s.state = Some(StateSpec::photon_pair());
                }
                Analysis::TomographyTest { expectations: None }
            }
            Command::IonTrapThreshold { lo, hi, tol } => Analysis::Threshold {
                lo: *lo,
                hi: *hi,
                tol: *tol,
            },
            Command::PolarizationCertify => Analysis::SquashCheck,
            Command::Negativity { .. } => Analysis::Negativity,
            Command::Bound => return Err(Error::Config("bound needs map_a and map_b in a config file".into())),
            Command::DiamondNorm { .. } => {
                return Err(Error::Config("diamond-norm needs --map or a config entry".into()))
            }
            Command::Run | Command::Sweep => return Err(Error::Config("the config lists no analyses".into())),
        };
        s.analyses.push(default);
    }
    Ok(s)
}

fn threshold_csv(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::InvalidArgument(e.to_string());
    w.write_record(["model", "mode", "threshold", "lo", "hi"]).map_err(fail)?;
    for r in &report.results {
        let AnalysisResult::Threshold(t) = r else {
            return Err(Error::Config("csv output is available for thresholds and sweeps only".into()));
        };
        for run in &t.runs {
            let model = serde_json::to_value(run.model).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let mode = serde_json::to_value(run.mode).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let (th, lo, hi) = match &run.result {
                ThresholdOutcome::Found { threshold, lo, hi, .. } => {
                    (threshold.value.to_string(), lo.to_string(), hi.to_string())
                }
                ThresholdOutcome::NoBoundaryInRange { .. } => (String::new(), String::new(), String::new()),
            };
            let model = model.as_str().unwrap_or_default().to_string();
            let mode = mode.as_str().unwrap_or_default().to_string();
            w.write_record([model, mode, th, lo, hi]).map_err(fail)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[derive(Serialize)]
struct SweepReport<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    inputs: &'a SweepConfig,
    table: &'a SweepTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn run(cli: &Cli) -> Result<String> {
    let start = Instant::now();
    let elapsed = |on: bool| on.then(|| start.elapsed().as_secs_f64());
    if let Command::Sweep = cli.command {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| Error::Config("sweep needs --config".into()))?;
        let mut cfg = SweepConfig::from_toml(&read_config(path)?)?;
        if let Some(seed) = cli.seed {
            cfg.seed = Some(seed);
        }
        if let Some(n) = cli.n_max {
            cfg.model.n_max = n;
        }
        let table = scenario::sweep(&cfg)?;
        return match cli.format.unwrap_or(Format::Csv) {
            Format::Csv => table.to_csv(),
            Format::Json => to_json(&SweepReport {
                tool: "squash",
                version: scenario::VERSION,
                command: "sweep",
                inputs: &cfg,
                table: &table,
                wall_time_seconds: elapsed(cli.timing),
            }),
        };
    }
    let s = build_scenario(cli)?;
    let mut report = scenario::run_scenario(&s, cli.command.name())?;
    report.wall_time_seconds = elapsed(cli.timing);
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => report.to_json(),
        Format::Csv => threshold_csv(&report),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|mut text| {
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match &cli.out {
            Some(p) => std::fs::write(p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("squash: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
