//! Scenario configuration: one JSON document, every field but the case,
//! zone and targets optional.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use acfdi::acpf::PowerFlowOptions;
use acfdi::attackgen::{AttackMode, SolverParams};
use acfdi::impact::ReportFormat;
use acfdi::stateest::{BddPolicy, MeasurementKind, NoiseSigmas, WlsOptions};
use acfdi::{cases, Grid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Optimal,
    Arbitrary,
    #[default]
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<AttackMode> {
        match self {
            ModeSelection::Optimal => vec![AttackMode::Optimal],
            ModeSelection::Arbitrary => vec![AttackMode::Arbitrary],
            ModeSelection::Both => vec![AttackMode::Optimal, AttackMode::Arbitrary],
        }
    }
}

/// Either `focal` (grown into a zone) or `interior` with `boundary`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal: Option<BTreeSet<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior: Option<BTreeSet<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BTreeSet<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub from: u32,
    pub to: u32,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub noise: u64,
    pub arbitrary_start: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            noise: 1,
            arbitrary_start: 1,
        }
    }
}

/// Attack solver settings; the arbitrary-mode seed lives in [`Seeds`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol_eq: f64,
    pub tol_opt: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub overload_margin: f64,
    pub bound_widening: f64,
    pub perturb_vm: f64,
    pub perturb_va: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = SolverParams::default();
        SolverConfig {
            tol_eq: p.tol_eq,
            tol_opt: p.tol_opt,
            max_outer: p.max_outer,
            max_inner: p.max_inner,
            penalty_init: p.penalty_init,
            penalty_growth: p.penalty_growth,
            overload_margin: p.overload_margin,
            bound_widening: p.bound_widening,
            perturb_vm: p.perturb_vm,
            perturb_va: p.perturb_va,
        }
    }
}

impl SolverConfig {
    pub fn params(&self, seed: u64) -> SolverParams {
        SolverParams {
            tol_eq: self.tol_eq,
            tol_opt: self.tol_opt,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            penalty_init: self.penalty_init,
            penalty_growth: self.penalty_growth,
            overload_margin: self.overload_margin,
            bound_widening: self.bound_widening,
            perturb_vm: self.perturb_vm,
            perturb_va: self.perturb_va,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Relative paths resolve against the config file's directory.
    pub dir: String,
    pub formats: Vec<ReportFormat>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: "out".into(),
            formats: vec![ReportFormat::Json, ReportFormat::Csv, ReportFormat::Svg],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// A MATPOWER file, or `builtin:case39`.
    pub case_path: String,
    pub zone: ZoneSpec,
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub mode: ModeSelection,
    #[serde(default)]
    pub noise: NoiseSigmas,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub power_flow: PowerFlowOptions,
    #[serde(default)]
    pub estimator: WlsOptions,
    #[serde(default)]
    pub bdd: BddPolicy,
    /// Measurement kinds in the layout; all kinds when absent.
    #[serde(default = "all_kinds")]
    pub measurement_kinds: BTreeSet<MeasurementKind>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn all_kinds() -> BTreeSet<MeasurementKind> {
    MeasurementKind::ALL.into_iter().collect()
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::config(format!("scenario: {e}")))?;
        cfg.check_shape()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks that need no case data.
    pub fn check_shape(&self) -> Result<(), CliError> {
        let z = &self.zone;
        match (&z.focal, &z.interior, &z.boundary) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            _ => return Err(CliError::config("zone needs either focal, or interior and boundary")),
        }
        if self.targets.is_empty() {
            return Err(CliError::config("at least one target is required"));
        }
        for t in &self.targets {
            if !(t.lambda > 0.0 && t.lambda.is_finite()) {
                return Err(CliError::config(format!("target {}-{}: lambda must be positive", t.from, t.to)));
            }
        }
        if self.measurement_kinds.is_empty() {
            return Err(CliError::config("measurement_kinds is empty"));
        }
        self.noise.validate()?;
        self.bdd.validate()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seeds = Seeds {
            noise: seed,
            arbitrary_start: seed,
        };
        c
    }
}

/// Load a case from a path or a `builtin:` name.
pub fn load_case(spec: &str, base_dir: &Path) -> Result<Grid, CliError> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let text = cases::builtin(name).ok_or_else(|| CliError::config(format!("unknown builtin case {name:?}")))?;
        return Ok(Grid::from_matpower(text)?);
    }
    let path = resolve_path(spec, base_dir);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    Grid::from_matpower(&text).map_err(|e| CliError::new(Status::Config, format!("{}: {e}", path.display())))
}

pub fn resolve_path(p: &str, base_dir: &Path) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    }
}
