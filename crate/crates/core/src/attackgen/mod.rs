//! Attack design: the attacked interior state and the measurement-space
//! vector that keeps every corrupted measurement consistent with it.

mod solver;
mod vector;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::acpf::{branch_flow, StateVector};
use crate::netmodel::Grid;
use crate::stateest::MeasurementLayout;
use crate::zone::AttackZone;

pub use solver::{SolverParams, SolverReport};
pub use vector::{apply_attack, assemble_attack_vector, compute_falsified_injections, mixed_state};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AttackError {
    #[error("invalid attack spec: {0}")]
    InvalidSpec(String),
    #[error("attack design is infeasible (max violation {max_violation:e})")]
    Infeasible { max_violation: f64 },
    #[error("attack design did not converge in {stage} (max violation {max_violation:e})")]
    NotConverged { stage: &'static str, max_violation: f64 },
    #[error("attacked state differs from base outside the interior at bus {0}")]
    StateOutsideInterior(u32),
    #[error("layout lacks affected measurement {0}")]
    MissingMeasurement(String),
    #[error("measurement set has no measurement {0}")]
    UnknownMeasurement(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMode {
    Optimal,
    Arbitrary,
}

impl AttackMode {
    pub fn name(self) -> &'static str {
        match self {
            AttackMode::Optimal => "optimal",
            AttackMode::Arbitrary => "arbitrary",
        }
    }
}

impl std::fmt::Display for AttackMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AttackMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "optimal" => Ok(AttackMode::Optimal),
            "arbitrary" => Ok(AttackMode::Arbitrary),
            _ => Err(format!("unknown attack mode {s:?}")),
        }
    }
}

/// Push the from-end active flow of `branch` (case index, case
/// orientation) to at least `lambda` times its base value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverloadTarget {
    pub branch: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub zone: AttackZone,
    pub targets: Vec<OverloadTarget>,
    pub mode: AttackMode,
    #[serde(default)]
    pub params: SolverParams,
}

impl AttackSpec {
    pub fn validate(&self, grid: &Grid) -> Result<(), AttackError> {
        let bad = |m: String| Err(AttackError::InvalidSpec(m));
        if self.zone.interior.is_empty() {
            return bad("zone has no interior bus".into());
        }
        for &b in self.zone.interior.iter().chain(&self.zone.boundary) {
            if grid.case.bus_index(b).is_none() {
                return bad(format!("unknown zone bus {b}"));
            }
        }
        for t in &self.targets {
            if !(t.lambda > 0.0 && t.lambda.is_finite()) {
                return bad(format!("lambda must be positive, got {}", t.lambda));
            }
            if t.branch >= grid.case.branches.len() || grid.model.branch_slot[t.branch].is_none() {
                return bad(format!("target branch {} is not an in-service branch", t.branch));
            }
            if !self.zone.is_interior_line(t.branch) {
                return bad(format!(
                    "target branch {} is not an interior line of the zone",
                    grid.case.branch_label(t.branch)
                ));
            }
        }
        let p = &self.params;
        let positive = [p.tol_eq, p.tol_opt, p.penalty_init];
        if positive.iter().any(|v| !(*v > 0.0)) || !(p.penalty_growth > 1.0) || p.max_outer == 0 || p.max_inner == 0 {
            return bad("solver tolerances and penalties must be positive, growth > 1".into());
        }
        if !(p.overload_margin >= 0.0) || !(p.bound_widening >= 0.0) || !(p.perturb_vm >= 0.0) || !(p.perturb_va >= 0.0) {
            return bad("margins and perturbation scales must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionPair {
    pub p: f64,
    pub q: f64,
}

/// Summary of one overload target at the designed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub branch: usize,
    pub label: String,
    pub lambda: f64,
    pub base_pf: f64,
    pub attacked_pf: f64,
}

/// Attacked state pair and the additive measurement deltas. Deltas are
/// listed for every affected measurement present in the layout; absent
/// ids are implicitly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackVector {
    pub mode: Option<AttackMode>,
    pub zone: AttackZone,
    pub x_base: StateVector,
    pub x_attacked: StateVector,
    pub deltas: BTreeMap<String, f64>,
    pub falsified_injections: BTreeMap<u32, InjectionPair>,
    #[serde(default)]
    pub targets: Vec<TargetOutcome>,
    #[serde(default)]
    pub solver: Option<SolverReport>,
}

impl AttackVector {
    /// The additive inverse: same states swapped, deltas negated.
    pub fn negated(&self) -> AttackVector {
        let mut out = self.clone();
        out.deltas.values_mut().for_each(|d| *d = -*d);
        std::mem::swap(&mut out.x_base, &mut out.x_attacked);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("attack vector serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// ‖x_attacked − x_base‖₂ over interior angles and magnitudes.
    pub fn deviation_norm(&self) -> f64 {
        self.zone
            .interior
            .iter()
            .filter_map(|&b| Some((self.x_base.get(b)?, self.x_attacked.get(b)?)))
            .map(|((v0, a0), (v1, a1))| (v1 - v0).powi(2) + (a1 - a0).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Solve for the attacked state and assemble its vector against `layout`.
pub fn design_attack(
    grid: &Grid,
    base: &StateVector,
    spec: &AttackSpec,
    layout: &MeasurementLayout,
) -> Result<AttackVector, AttackError> {
    spec.validate(grid)?;
    if !base.is_valid_for(&grid.case) {
        return Err(AttackError::InvalidSpec("base state does not match the case".into()));
    }
    let outcome = solver::solve(grid, base, spec)?;
    let mut av = assemble_attack_vector(grid, base, &outcome.x_attacked, &spec.zone, layout)?;
    av.mode = Some(spec.mode);
    av.targets = spec
        .targets
        .iter()
        .map(|t| {
            let stamp = grid.model.branch(t.branch).expect("validated target");
            TargetOutcome {
                branch: t.branch,
                label: grid.case.branch_label(t.branch).to_string(),
                lambda: t.lambda,
                base_pf: branch_flow(base, stamp).pf,
                attacked_pf: branch_flow(&outcome.x_attacked, stamp).pf,
            }
        })
        .collect();
    log::info!(
        "{} attack: deviation {:.6}, {} outer rounds, violation {:e}",
        spec.mode,
        outcome.report.deviation_norm,
        outcome.report.outer_iterations,
        outcome.report.max_violation
    );
    av.solver = Some(outcome.report);
    Ok(av)
}
