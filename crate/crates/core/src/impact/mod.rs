//! Impact of an attack on line loading, injections, state estimates and
//! residuals, with JSON, CSV and SVG renderings.

mod render;
mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::acpf::{all_branch_flows, branch_flow, injection_at, BranchFlow, StateVector};
use crate::attackgen::{mixed_state, AttackMode, AttackVector, TargetOutcome};
use crate::netmodel::Grid;
use crate::stateest::{run_bdd, BddPolicy, BddVerdict, EstimationError, EstimationResult};

pub use render::{render_report, render_reports, Artifact, ReportFormat};

pub const SCHEMA: &str = "impact/1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImpactError {
    #[error("unknown report format {0:?}")]
    UnknownFormat(String),
    #[error("estimation results cover different measurements")]
    MeasurementMismatch,
    #[error("estimation did not converge")]
    NotConverged,
    #[error("nothing to render")]
    Empty,
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineClass {
    Interior,
    Frozen,
    Tie,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusRole {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchImpact {
    pub branch: usize,
    pub label: String,
    pub from: u32,
    pub to: u32,
    pub class: LineClass,
    pub base: BranchFlow,
    pub attacked: BranchFlow,
    /// From-end active and reactive change, p.u.
    pub delta_p: f64,
    pub delta_q: f64,
    /// Rating in p.u. of apparent power.
    pub rating: Option<f64>,
    pub loading_base: Option<f64>,
    pub loading_attacked: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusImpact {
    pub bus: u32,
    pub role: BusRole,
    pub base_p: f64,
    pub base_q: f64,
    /// Reported injection: falsified inside the zone, base outside it.
    pub attacked_p: f64,
    pub attacked_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDeviation {
    pub bus: u32,
    pub role: BusRole,
    pub vm_base: f64,
    pub vm_attacked: f64,
    pub va_base_deg: f64,
    pub va_attacked_deg: f64,
    pub dvm: f64,
    pub dva_deg: f64,
}

/// One state variable of a zone bus: `V27` or `θ27`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateBar {
    pub bus: u32,
    /// `"vm"` (p.u.) or `"va"` (rad).
    pub var: String,
    /// |r_attacked − r_clean| of the direct measurement of this state.
    pub residual_change: Option<f64>,
    /// |x̂_attacked − x_base| of this state.
    pub estimate_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub j_clean: f64,
    pub j_attacked: f64,
    pub dof: i64,
    /// ‖r_attacked − r_clean‖₂ over all measurements.
    pub residual_change_norm: f64,
    /// ‖x̂_attacked − x_base‖₂ over zone-bus states.
    pub estimate_deviation_norm: f64,
    /// ‖x̂_attacked − x̂_clean − (x_attacked − x_base)‖∞.
    pub shift_error: f64,
    pub bars: Vec<StateBar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetImpact {
    #[serde(flatten)]
    pub outcome: TargetOutcome,
    /// attacked_pf / base_pf.
    pub overload_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub schema: String,
    pub mode: Option<AttackMode>,
    pub metadata: serde_json::Value,
    pub branches: Vec<BranchImpact>,
    pub buses: Vec<BusImpact>,
    pub deviations: Vec<StateDeviation>,
    pub deltas: BTreeMap<String, f64>,
    pub targets: Vec<TargetImpact>,
    pub residuals: ResidualSummary,
    pub clean_verdict: BddVerdict,
    pub attacked_verdict: BddVerdict,
    /// Labels of branches without a rating; their loading is omitted.
    pub unrated: Vec<String>,
    /// Interior state deviation norm of the attack itself.
    pub attack_deviation_norm: f64,
}

impl ImpactReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn branch(&self, from: u32, to: u32) -> Option<&BranchImpact> {
        self.branches
            .iter()
            .find(|b| (b.from, b.to) == (from, to) || (b.from, b.to) == (to, from))
    }

    pub fn bus(&self, id: u32) -> Option<&BusImpact> {
        self.buses.iter().find(|b| b.bus == id)
    }
}

/// Flows of every in-service branch (admittance-model order) with the
/// interior at `x_attacked` and every other bus held at `base`.
pub fn replay_attacked_flows(grid: &Grid, base: &StateVector, av: &AttackVector) -> Vec<BranchFlow> {
    all_branch_flows(&grid.model, &mixed_state(base, &av.x_attacked, &av.zone))
}

fn loading(flow: &BranchFlow, rating: Option<f64>) -> Option<f64> {
    rating.map(|r| 100.0 * flow.sf.max(flow.st) / r)
}

pub fn compute_impact(
    grid: &Grid,
    base: &StateVector,
    av: &AttackVector,
    clean: &EstimationResult,
    attacked: &EstimationResult,
    policy: &BddPolicy,
) -> Result<ImpactReport, ImpactError> {
    if !clean.converged || !attacked.converged {
        return Err(ImpactError::NotConverged);
    }
    if clean.ids != attacked.ids {
        return Err(ImpactError::MeasurementMismatch);
    }
    let case = &grid.case;
    let zone = &av.zone;
    let mixed = mixed_state(base, &av.x_attacked, zone);
    let role = |b: u32| {
        if zone.interior.contains(&b) {
            BusRole::Interior
        } else if zone.boundary.contains(&b) {
            BusRole::Boundary
        } else {
            BusRole::Exterior
        }
    };
    let class = |k: usize| {
        if zone.interior_lines.contains(&k) {
            LineClass::Interior
        } else if zone.frozen_lines.contains(&k) {
            LineClass::Frozen
        } else if zone.tie_lines.contains(&k) {
            LineClass::Tie
        } else {
            LineClass::Exterior
        }
    };

    let mut branches = Vec::new();
    let mut unrated = Vec::new();
    for stamp in &grid.model.branches {
        let k = stamp.branch;
        let br = &case.branches[k];
        let fb = branch_flow(base, stamp);
        let fa = branch_flow(&mixed, stamp);
        if br.rating.is_none() {
            unrated.push(case.branch_label(k).to_string());
        }
        branches.push(BranchImpact {
            branch: k,
            label: case.branch_label(k).to_string(),
            from: br.from,
            to: br.to,
            class: class(k),
            delta_p: fa.pf - fb.pf,
            delta_q: fa.qf - fb.qf,
            rating: br.rating,
            loading_base: loading(&fb, br.rating),
            loading_attacked: loading(&fa, br.rating),
            base: fb,
            attacked: fa,
        });
    }
    branches.sort_by_key(|b| (b.from, b.to, b.branch));

    let buses = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, bus)| {
            let s0 = injection_at(&grid.model, base, i);
            let (ap, aq) = match av.falsified_injections.get(&bus.id) {
                Some(f) => (f.p, f.q),
                None => {
                    let s = injection_at(&grid.model, &mixed, i);
                    (s.re, s.im)
                }
            };
            BusImpact {
                bus: bus.id,
                role: role(bus.id),
                base_p: s0.re,
                base_q: s0.im,
                attacked_p: ap,
                attacked_q: aq,
            }
        })
        .collect();

    let deviations = zone
        .buses()
        .into_iter()
        .map(|b| {
            let (v0, a0) = base.get(b).expect("zone bus exists");
            let (v1, a1) = mixed.get(b).expect("zone bus exists");
            StateDeviation {
                bus: b,
                role: role(b),
                vm_base: v0,
                vm_attacked: v1,
                va_base_deg: a0.to_degrees(),
                va_attacked_deg: a1.to_degrees(),
                dvm: v1 - v0,
                dva_deg: (a1 - a0).to_degrees(),
            }
        })
        .collect();

    let residuals = residual_summary(clean, attacked, base, av);
    let targets = av
        .targets
        .iter()
        .map(|t| TargetImpact {
            overload_factor: t.attacked_pf / t.base_pf,
            outcome: t.clone(),
        })
        .collect();

    Ok(ImpactReport {
        schema: SCHEMA.to_string(),
        mode: av.mode,
        metadata: serde_json::Value::Null,
        branches,
        buses,
        deviations,
        deltas: av.deltas.clone(),
        targets,
        residuals,
        clean_verdict: run_bdd(clean, policy)?,
        attacked_verdict: run_bdd(attacked, policy)?,
        unrated,
        attack_deviation_norm: av.deviation_norm(),
    })
}

fn residual_summary(
    clean: &EstimationResult,
    attacked: &EstimationResult,
    base: &StateVector,
    av: &AttackVector,
) -> ResidualSummary {
    let residual_change_norm = clean
        .residuals
        .iter()
        .zip(&attacked.residuals)
        .map(|(c, a)| (a - c).powi(2))
        .sum::<f64>()
        .sqrt();
    let residual_of = |res: &EstimationResult, id: &str| {
        res.ids.iter().position(|i| i == id).map(|p| res.residuals[p])
    };
    let mut bars = Vec::new();
    let mut dev2 = 0.0;
    for b in av.zone.buses() {
        let (v0, a0) = base.get(b).expect("zone bus exists");
        let (va, aa) = attacked.x_hat.get(b).expect("zone bus exists");
        for (var, id, dev) in [
            ("vm", format!("Vmag:{b}"), (va - v0).abs()),
            ("va", format!("Vang:{b}"), (aa - a0).abs()),
        ] {
            dev2 += dev * dev;
            let change = residual_of(attacked, &id)
                .zip(residual_of(clean, &id))
                .map(|(a, c)| (a - c).abs());
            bars.push(StateBar {
                bus: b,
                var: var.to_string(),
                residual_change: change,
                estimate_deviation: dev,
            });
        }
    }
    let mut shift_error = 0.0f64;
    for i in 0..base.len() {
        let expected_vm = av.x_attacked.vm[i] - av.x_base.vm[i];
        let expected_va = av.x_attacked.va[i] - av.x_base.va[i];
        shift_error = shift_error
            .max((attacked.x_hat.vm[i] - clean.x_hat.vm[i] - expected_vm).abs())
            .max((attacked.x_hat.va[i] - clean.x_hat.va[i] - expected_va).abs());
    }
    ResidualSummary {
        j_clean: clean.objective,
        j_attacked: attacked.objective,
        dof: clean.dof,
        residual_change_norm,
        estimate_deviation_norm: dev2.sqrt(),
        shift_error,
        bars,
    }
}
