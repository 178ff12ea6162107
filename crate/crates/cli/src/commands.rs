use std::io::Write;
use std::path::{Path, PathBuf};

use acfdi::attackgen::{AttackMode, AttackVector};
use acfdi::impact::ReportFormat;
use acfdi::stateest::{measurements_to_csv, parse_measurements_csv, EstimationResult, NoiseSigmas};
use clap::{Args, Parser, Subcommand};

use crate::config::{load_case, ScenarioConfig, TargetSpec, ZoneSpec};
use crate::error::CliError;
use crate::pipeline;

#[derive(Debug, Parser)]
#[command(name = "acfdi", version, about = "AC false-data-injection attack studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the base-case power flow.
    Pf {
        case: String,
        #[command(flatten)]
        common: Common,
    },
    /// Build an attack zone from focal buses or check an explicit one.
    Zone {
        case: String,
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["interior", "boundary"])]
        focal: Vec<u32>,
        #[arg(long, value_delimiter = ',', requires = "boundary")]
        interior: Vec<u32>,
        #[arg(long, value_delimiter = ',', requires = "interior")]
        boundary: Vec<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Design an attack on a zone.
    Attack {
        case: String,
        zone: PathBuf,
        /// Target branch as FROM:TO in case orientation; repeatable.
        #[arg(long = "target", required = true, value_parser = parse_pair)]
        targets: Vec<(u32, u32)>,
        /// One factor for all targets, or one per target.
        #[arg(long, value_delimiter = ',', default_value = "1.3")]
        lambda: Vec<f64>,
        #[arg(long, default_value = "optimal")]
        mode: AttackMode,
        /// Arbitrary-mode start seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Generate measurements at the base state, optionally attacked.
    Measure {
        case: String,
        #[arg(long)]
        attack: Option<PathBuf>,
        /// Noise seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        noiseless: bool,
        #[command(flatten)]
        common: Common,
    },
    /// WLS state estimation on a measurement CSV.
    Estimate {
        case: String,
        measurements: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Build impact reports from attack vectors and estimates.
    Impact {
        case: String,
        #[arg(long)]
        clean: PathBuf,
        /// Attack vector JSON; pair each with an --estimate.
        #[arg(long = "attack", required = true)]
        attacks: Vec<PathBuf>,
        /// Estimate of the corresponding attacked measurements.
        #[arg(long = "estimate", required = true)]
        estimates: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "json,csv,svg")]
        format: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Scenario orchestration.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioAction {
    /// Run the full pipeline from a JSON config.
    Run {
        config: PathBuf,
        /// Sweep seeds 1..=N for noise and arbitrary starts.
        #[arg(long)]
        seeds: Option<u64>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write to this file instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Scenario config supplying solver, noise and layout settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s
        .split_once(':')
        .or_else(|| s.split_once('-'))
        .ok_or_else(|| format!("expected FROM:TO, got {s:?}"))?;
    Ok((
        a.trim().parse().map_err(|_| format!("bad bus {a:?}"))?,
        b.trim().parse().map_err(|_| format!("bad bus {b:?}"))?,
    ))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn emit(output: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, content).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

/// Settings for one-stage commands: a loaded config, or defaults around
/// placeholders that the stage does not read.
fn settings(config: &Option<PathBuf>) -> Result<ScenarioConfig, CliError> {
    match config {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::from_json(
            r#"{"case_path": "", "zone": {"focal": []}, "targets": [{"from": 0, "to": 0, "lambda": 1}]}"#,
        )?),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let here = Path::new(".");
    match cli.command {
        Command::Pf { case, common } => {
            let cfg = settings(&common.config)?;
            let grid = load_case(&case, here)?;
            let pf = pipeline::power_flow(&grid, &cfg.power_flow)?;
            emit(&common.output, &pipeline::power_flow_json(&pf))
        }
        Command::Zone {
            case,
            focal,
            interior,
            boundary,
            common,
        } => {
            let grid = load_case(&case, here)?;
            let spec = if focal.is_empty() {
                ZoneSpec {
                    focal: None,
                    interior: Some(interior.into_iter().collect()),
                    boundary: Some(boundary.into_iter().collect()),
                }
            } else {
                ZoneSpec {
                    focal: Some(focal.into_iter().collect()),
                    interior: None,
                    boundary: None,
                }
            };
            let zone = pipeline::zone(&grid, &spec)?;
            emit(&common.output, &pipeline::zone_json(&zone))
        }
        Command::Attack {
            case,
            zone,
            targets,
            lambda,
            mode,
            seed,
            common,
        } => {
            let cfg = settings(&common.config)?;
            let grid = load_case(&case, here)?;
            let zone = read_json(&zone)?;
            if lambda.len() != 1 && lambda.len() != targets.len() {
                return Err(CliError::config("give one --lambda or one per --target"));
            }
            let specs: Vec<TargetSpec> = targets
                .iter()
                .enumerate()
                .map(|(i, &(from, to))| TargetSpec {
                    from,
                    to,
                    lambda: lambda[if lambda.len() == 1 { 0 } else { i }],
                })
                .collect();
            let targets = pipeline::resolve_targets(&grid, &specs)?;
            let pf = pipeline::power_flow(&grid, &cfg.power_flow)?;
            let layout = pipeline::layout(&grid, &cfg.measurement_kinds);
            let av = pipeline::attack(&grid, &pf.state, &zone, targets, mode, &cfg.solver, seed, &layout)?;
            emit(&common.output, &pipeline::attack_json(&av))
        }
        Command::Measure {
            case,
            attack,
            seed,
            noiseless,
            common,
        } => {
            let cfg = settings(&common.config)?;
            let grid = load_case(&case, here)?;
            let av: Option<AttackVector> = attack.as_deref().map(read_json).transpose()?;
            let base = match &av {
                Some(av) => av.x_base.clone(),
                None => pipeline::power_flow(&grid, &cfg.power_flow)?.state,
            };
            let sigmas = if noiseless { NoiseSigmas::noiseless() } else { cfg.noise };
            let layout = pipeline::layout(&grid, &cfg.measurement_kinds);
            let ms = pipeline::measure(&grid, &base, &layout, &sigmas, seed, av.as_ref())?;
            emit(&common.output, &measurements_to_csv(&grid, &ms))
        }
        Command::Estimate {
            case,
            measurements,
            common,
        } => {
            let cfg = settings(&common.config)?;
            let grid = load_case(&case, here)?;
            let ms = parse_measurements_csv(&grid, &read(&measurements)?)?;
            let res = pipeline::estimate(&grid, &ms, &cfg.estimator)?;
            emit(&common.output, &pipeline::estimate_json(&res))
        }
        Command::Impact {
            case,
            clean,
            attacks,
            estimates,
            format,
            out,
            config,
        } => {
            if attacks.len() != estimates.len() {
                return Err(CliError::config("each --attack needs a matching --estimate"));
            }
            let loaded = config.as_deref().map(ScenarioConfig::load).transpose()?;
            let mut cfg = settings(&config)?;
            cfg.output.formats = format
                .iter()
                .map(|f| f.parse::<ReportFormat>())
                .collect::<Result<_, _>>()?;
            let grid = load_case(&case, here)?;
            let clean: EstimationResult = read_json(&clean)?;
            let mut reports = Vec::new();
            for (a, e) in attacks.iter().zip(&estimates) {
                let av: AttackVector = read_json(a)?;
                let est: EstimationResult = read_json(e)?;
                reports.push(pipeline::impact(&grid, &av, &clean, &est, &cfg.bdd, loaded.as_ref())?);
            }
            let artifacts = pipeline::impact_artifacts(&reports, &cfg)?;
            pipeline::write_artifacts(&out, &artifacts)
        }
        Command::Scenario {
            action: ScenarioAction::Run { config, seeds, out },
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let base_dir = config.parent().map(Path::to_path_buf).unwrap_or_default();
            let out = out.unwrap_or_else(|| crate::config::resolve_path(&cfg.output.dir, &base_dir));
            match seeds {
                None => {
                    let outcome = pipeline::run_scenario(&cfg, &base_dir)?;
                    pipeline::write_artifacts(&out, &outcome.artifacts)?;
                    for r in &outcome.reports {
                        println!("{}", summary_line(r));
                    }
                }
                Some(n) => {
                    if n == 0 {
                        return Err(CliError::config("--seeds must be at least 1"));
                    }
                    let runs = pipeline::run_sweep(&cfg, &base_dir, n)?;
                    for (s, o) in &runs {
                        pipeline::write_artifacts(&out.join(pipeline::seed_dir(*s)), &o.artifacts)?;
                    }
                    let (json, csv) = pipeline::sweep_summary(&runs);
                    pipeline::write_artifacts(
                        &out,
                        &[
                            acfdi::impact::Artifact {
                                name: "summary.json".into(),
                                content: json,
                            },
                            acfdi::impact::Artifact {
                                name: "summary.csv".into(),
                                content: csv,
                            },
                        ],
                    )?;
                    for (s, o) in &runs {
                        for r in &o.reports {
                            println!("seed {s}: {}", summary_line(r));
                        }
                    }
                }
            }
            Ok(())
        }
    }
}

fn summary_line(r: &acfdi::impact::ImpactReport) -> String {
    let mode = r.mode.map(|m| m.to_string()).unwrap_or_else(|| "attacked".into());
    let targets: Vec<String> = r
        .targets
        .iter()
        .map(|t| format!("{} P {:.4} p.u. (x{:.3})", t.outcome.label, t.outcome.attacked_pf, t.overload_factor))
        .collect();
    format!(
        "{mode}: {}; J {:.6e} -> {:.6e}; detected {}",
        targets.join(", "),
        r.residuals.j_clean,
        r.residuals.j_attacked,
        r.attacked_verdict.detected
    )
}
