//! Pipeline stages shared by the subcommands and `scenario run`. Each
//! stage has one serialized form so the subcommands can reproduce a
//! scenario's artifacts from each other's outputs.

use std::collections::BTreeMap;
use std::path::Path;

use acfdi::acpf::{solve_power_flow, PowerFlowOptions, PowerFlowSolution};
use acfdi::attackgen::{apply_attack, design_attack, AttackMode, AttackSpec, AttackVector, OverloadTarget};
use acfdi::impact::{compute_impact, render_reports, Artifact, ImpactReport};
use acfdi::stateest::{
    generate_measurements, measurements_to_csv, wls_estimate, BddPolicy, EstimationResult, MeasurementKind,
    MeasurementLayout, MeasurementSet, NoiseSigmas, WlsOptions,
};
use acfdi::zone::{build_zone, validate_zone, AttackZone};
use acfdi::{Grid, StateVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_case, ScenarioConfig, SolverConfig, TargetSpec, ZoneSpec};
use crate::error::CliError;

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("artifact serializes") + "\n"
}

pub fn power_flow(grid: &Grid, opts: &PowerFlowOptions) -> Result<PowerFlowSolution, CliError> {
    Ok(solve_power_flow(grid, opts)?)
}

pub fn power_flow_json(sol: &PowerFlowSolution) -> String {
    pretty(sol)
}

pub fn zone(grid: &Grid, spec: &ZoneSpec) -> Result<AttackZone, CliError> {
    Ok(match (&spec.focal, &spec.interior, &spec.boundary) {
        (Some(focal), None, None) => build_zone(&grid.case, focal)?,
        (None, Some(interior), Some(boundary)) => validate_zone(&grid.case, interior, boundary)?,
        _ => return Err(CliError::config("zone needs either focal, or interior and boundary")),
    })
}

pub fn zone_json(zone: &AttackZone) -> String {
    pretty(zone)
}

/// Map `from-to` pairs to case branches. Targets meter the from end in
/// the case's own orientation.
pub fn resolve_targets(grid: &Grid, targets: &[TargetSpec]) -> Result<Vec<OverloadTarget>, CliError> {
    targets
        .iter()
        .map(|t| {
            let k = grid
                .case
                .find_branch(t.from, t.to)
                .ok_or_else(|| CliError::config(format!("no in-service branch {}-{}", t.from, t.to)))?;
            let br = &grid.case.branches[k];
            if br.from != t.from {
                return Err(CliError::config(format!(
                    "target {}-{} is oriented {}-{} in the case; targets use case orientation",
                    t.from, t.to, br.from, br.to
                )));
            }
            Ok(OverloadTarget {
                branch: k,
                lambda: t.lambda,
            })
        })
        .collect()
}

pub fn layout(grid: &Grid, kinds: &std::collections::BTreeSet<MeasurementKind>) -> MeasurementLayout {
    MeasurementLayout::with_kinds(grid, kinds)
}

#[allow(clippy::too_many_arguments)]
pub fn attack(
    grid: &Grid,
    base: &StateVector,
    zone: &AttackZone,
    targets: Vec<OverloadTarget>,
    mode: AttackMode,
    solver: &SolverConfig,
    seed: u64,
    layout: &MeasurementLayout,
) -> Result<AttackVector, CliError> {
    let spec = AttackSpec {
        zone: zone.clone(),
        targets,
        mode,
        params: solver.params(seed),
    };
    Ok(design_attack(grid, base, &spec, layout)?)
}

pub fn attack_json(av: &AttackVector) -> String {
    av.to_json() + "\n"
}

/// Measurements at `state`, corrupted by `attack` when given.
pub fn measure(
    grid: &Grid,
    state: &StateVector,
    layout: &MeasurementLayout,
    sigmas: &NoiseSigmas,
    seed: u64,
    attack: Option<&AttackVector>,
) -> Result<MeasurementSet, CliError> {
    let ms = generate_measurements(grid, state, layout, sigmas, seed)?;
    Ok(match attack {
        Some(av) => apply_attack(&ms, av)?,
        None => ms,
    })
}

pub fn estimate(grid: &Grid, ms: &MeasurementSet, opts: &WlsOptions) -> Result<EstimationResult, CliError> {
    Ok(wls_estimate(grid, ms, None, opts)?)
}

pub fn estimate_json(res: &EstimationResult) -> String {
    pretty(res)
}

pub fn metadata(config: Option<&ScenarioConfig>) -> serde_json::Value {
    match config {
        Some(c) => serde_json::json!({ "config": serde_json::to_value(c).expect("config serializes") }),
        None => serde_json::Value::Null,
    }
}

pub fn impact(
    grid: &Grid,
    av: &AttackVector,
    clean: &EstimationResult,
    attacked: &EstimationResult,
    policy: &BddPolicy,
    config: Option<&ScenarioConfig>,
) -> Result<ImpactReport, CliError> {
    let mut report = compute_impact(grid, &av.x_base, av, clean, attacked, policy)?;
    report.metadata = metadata(config);
    Ok(report)
}

pub fn impact_artifacts(reports: &[ImpactReport], config: &ScenarioConfig) -> Result<Vec<Artifact>, CliError> {
    let mut out = Vec::new();
    for &format in &config.output.formats {
        out.extend(render_reports(reports, format)?);
    }
    Ok(out)
}

pub struct ScenarioOutcome {
    pub reports: Vec<ImpactReport>,
    pub attacks: Vec<AttackVector>,
    pub artifacts: Vec<Artifact>,
}

impl ScenarioOutcome {
    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

fn artifact(name: impl Into<String>, content: String) -> Artifact {
    Artifact {
        name: name.into(),
        content,
    }
}

/// parse → power flow → zone → attack per mode → measurements →
/// clean and attacked estimates → impact → render, all in memory.
pub fn run_scenario(config: &ScenarioConfig, base_dir: &Path) -> Result<ScenarioOutcome, CliError> {
    config.check_shape()?;
    let grid = load_case(&config.case_path, base_dir)?;
    let pf = power_flow(&grid, &config.power_flow)?;
    let base = &pf.state;
    let zone = zone(&grid, &config.zone)?;
    let targets = resolve_targets(&grid, &config.targets)?;
    let layout = layout(&grid, &config.measurement_kinds);

    let mut artifacts = vec![
        artifact("config.resolved.json", config.to_json() + "\n"),
        artifact("pf.json", power_flow_json(&pf)),
        artifact("zone.json", zone_json(&zone)),
    ];
    let clean_ms = measure(&grid, base, &layout, &config.noise, config.seeds.noise, None)?;
    let clean = estimate(&grid, &clean_ms, &config.estimator)?;
    artifacts.push(artifact("measurements_clean.csv", measurements_to_csv(&grid, &clean_ms)));
    artifacts.push(artifact("estimate_clean.json", estimate_json(&clean)));

    let mut reports = Vec::new();
    let mut attacks = Vec::new();
    for mode in config.mode.modes() {
        let av = attack(
            &grid,
            base,
            &zone,
            targets.clone(),
            mode,
            &config.solver,
            config.seeds.arbitrary_start,
            &layout,
        )?;
        let attacked_ms = measure(&grid, base, &layout, &config.noise, config.seeds.noise, Some(&av))?;
        let attacked = estimate(&grid, &attacked_ms, &config.estimator)?;
        let report = impact(&grid, &av, &clean, &attacked, &config.bdd, Some(config))?;
        artifacts.push(artifact(format!("attack_{mode}.json"), attack_json(&av)));
        artifacts.push(artifact(format!("measurements_{mode}.csv"), measurements_to_csv(&grid, &attacked_ms)));
        artifacts.push(artifact(format!("estimate_{mode}.json"), estimate_json(&attacked)));
        reports.push(report);
        attacks.push(av);
    }
    artifacts.extend(impact_artifacts(&reports, config)?);
    Ok(ScenarioOutcome {
        reports,
        attacks,
        artifacts,
    })
}

/// One row of a seed sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub mode: String,
    pub target_pf: Vec<f64>,
    pub j_clean: f64,
    pub j_attacked: f64,
    pub j_relative_change: f64,
    pub shift_error: f64,
    pub attack_deviation_norm: f64,
    pub residual_change_norm: f64,
    pub estimate_deviation_norm: f64,
    pub clean_detected: bool,
    pub attacked_detected: bool,
}

impl SweepRow {
    pub fn from_report(seed: u64, r: &ImpactReport) -> Self {
        let res = &r.residuals;
        SweepRow {
            seed,
            mode: r.mode.map(|m| m.to_string()).unwrap_or_else(|| "attacked".into()),
            target_pf: r.targets.iter().map(|t| t.outcome.attacked_pf).collect(),
            j_clean: res.j_clean,
            j_attacked: res.j_attacked,
            j_relative_change: (res.j_attacked - res.j_clean).abs() / res.j_clean.abs().max(f64::MIN_POSITIVE),
            shift_error: res.shift_error,
            attack_deviation_norm: r.attack_deviation_norm,
            residual_change_norm: res.residual_change_norm,
            estimate_deviation_norm: res.estimate_deviation_norm,
            clean_detected: r.clean_verdict.detected,
            attacked_detected: r.attacked_verdict.detected,
        }
    }
}

pub fn seed_dir(seed: u64) -> String {
    format!("seed_{seed:03}")
}

/// Seeds 1..=n, run in parallel; noise and arbitrary-start seeds both
/// take the sweep seed. Results come back in seed order.
pub fn run_sweep(
    config: &ScenarioConfig,
    base_dir: &Path,
    n: u64,
) -> Result<Vec<(u64, ScenarioOutcome)>, CliError> {
    (1..=n)
        .into_par_iter()
        .map(|s| run_scenario(&config.with_seed(s), base_dir).map(|o| (s, o)))
        .collect()
}

pub fn sweep_summary(runs: &[(u64, ScenarioOutcome)]) -> (String, String) {
    let rows: Vec<SweepRow> = runs
        .iter()
        .flat_map(|(s, o)| o.reports.iter().map(move |r| SweepRow::from_report(*s, r)))
        .collect();
    let mut by_mode: BTreeMap<&str, Vec<&SweepRow>> = BTreeMap::new();
    for r in &rows {
        by_mode.entry(r.mode.as_str()).or_default().push(r);
    }
    let stats: BTreeMap<&str, serde_json::Value> = by_mode
        .iter()
        .map(|(mode, rs)| {
            let mean = |f: &dyn Fn(&SweepRow) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64;
            (
                *mode,
                serde_json::json!({
                    "runs": rs.len(),
                    "attacked_detected": rs.iter().filter(|r| r.attacked_detected).count(),
                    "mean_j_relative_change": mean(&|r| r.j_relative_change),
                    "mean_attack_deviation_norm": mean(&|r| r.attack_deviation_norm),
                    "mean_residual_change_norm": mean(&|r| r.residual_change_norm),
                    "mean_estimate_deviation_norm": mean(&|r| r.estimate_deviation_norm),
                }),
            )
        })
        .collect();
    let json = pretty(&serde_json::json!({ "runs": rows, "by_mode": stats }));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "seed",
        "mode",
        "target_pf_pu",
        "j_clean",
        "j_attacked",
        "j_relative_change",
        "shift_error",
        "attack_deviation_norm",
        "residual_change_norm",
        "estimate_deviation_norm",
        "clean_detected",
        "attacked_detected",
    ])
    .expect("in-memory write");
    for r in &rows {
        let pf = r.target_pf.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
        w.write_record([
            r.seed.to_string(),
            r.mode.clone(),
            pf,
            r.j_clean.to_string(),
            r.j_attacked.to_string(),
            r.j_relative_change.to_string(),
            r.shift_error.to_string(),
            r.attack_deviation_norm.to_string(),
            r.residual_change_norm.to_string(),
            r.estimate_deviation_norm.to_string(),
            r.clean_detected.to_string(),
            r.attacked_detected.to_string(),
        ])
        .expect("in-memory write");
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv");
    (json, csv)
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.content).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}
