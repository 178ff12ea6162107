use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::EstimationError;
use crate::acpf::{branch_flow, branch_flow_partials, injection_at, injection_partials, PowerPartial, StateVector};
use crate::netmodel::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MeasurementKind {
    Pflow,
    Qflow,
    Pinj,
    Qinj,
    Vmag,
    Vang,
}

impl MeasurementKind {
    pub const ALL: [MeasurementKind; 6] = [
        MeasurementKind::Pflow,
        MeasurementKind::Qflow,
        MeasurementKind::Pinj,
        MeasurementKind::Qinj,
        MeasurementKind::Vmag,
        MeasurementKind::Vang,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasurementKind::Pflow => "Pflow",
            MeasurementKind::Qflow => "Qflow",
            MeasurementKind::Pinj => "Pinj",
            MeasurementKind::Qinj => "Qinj",
            MeasurementKind::Vmag => "Vmag",
            MeasurementKind::Vang => "Vang",
        }
    }

    pub fn is_flow(self) -> bool {
        matches!(self, MeasurementKind::Pflow | MeasurementKind::Qflow)
    }

    fn is_active(self) -> bool {
        matches!(self, MeasurementKind::Pflow | MeasurementKind::Pinj)
    }
}

impl fmt::Display for MeasurementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasurementKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        MeasurementKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown measurement kind {s:?}"))
    }
}

/// Where a measurement is taken. Flow measurements name the case branch
/// and the bus at the metered end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Location {
    Bus { bus: u32 },
    BranchEnd { branch: usize, at: u32 },
}

/// Canonical id: `Vmag:27`, `Pinj:3`, `Pflow:26-27@26`.
pub fn measurement_id(grid: &Grid, kind: MeasurementKind, location: Location) -> String {
    match location {
        Location::Bus { bus } => format!("{kind}:{bus}"),
        Location::BranchEnd { branch, at } => format!("{kind}:{}", location_label(grid, branch, at)),
    }
}

pub fn location_label(grid: &Grid, branch: usize, at: u32) -> String {
    format!("{}@{at}", grid.case.branch_label(branch))
}

pub fn location_string(grid: &Grid, location: Location) -> String {
    match location {
        Location::Bus { bus } => bus.to_string(),
        Location::BranchEnd { branch, at } => location_label(grid, branch, at),
    }
}

/// Parse a location string for `kind` against the grid.
pub fn parse_location(grid: &Grid, kind: MeasurementKind, s: &str) -> Result<Location, String> {
    if kind.is_flow() {
        let (label, at) = s.rsplit_once('@').ok_or_else(|| format!("flow location {s:?} lacks '@bus'"))?;
        let at: u32 = at.parse().map_err(|_| format!("bad bus in location {s:?}"))?;
        let branch = grid
            .case
            .branch_by_label(label)
            .ok_or_else(|| format!("unknown branch {label:?}"))?;
        let br = &grid.case.branches[branch];
        if !br.in_service {
            return Err(format!("branch {label} is out of service"));
        }
        if at != br.from && at != br.to {
            return Err(format!("bus {at} is not an end of branch {label}"));
        }
        Ok(Location::BranchEnd { branch, at })
    } else {
        let bus: u32 = s.parse().map_err(|_| format!("bad bus location {s:?}"))?;
        if grid.case.bus_index(bus).is_none() {
            return Err(format!("unknown bus {bus}"));
        }
        Ok(Location::Bus { bus })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Bus(usize),
    Flow { slot: usize, from_end: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementPoint {
    pub id: String,
    pub kind: MeasurementKind,
    pub location: Location,
    target: Target,
}

impl MeasurementPoint {
    pub fn new(grid: &Grid, kind: MeasurementKind, location: Location) -> Result<Self, String> {
        let target = match (kind.is_flow(), location) {
            (true, Location::BranchEnd { branch, at }) => {
                let slot = grid
                    .model
                    .branch_slot
                    .get(branch)
                    .copied()
                    .flatten()
                    .ok_or_else(|| format!("branch {branch} is not in service"))?;
                let br = &grid.case.branches[branch];
                if at != br.from && at != br.to {
                    return Err(format!("bus {at} is not an end of branch {branch}"));
                }
                Target::Flow {
                    slot,
                    from_end: at == br.from,
                }
            }
            (false, Location::Bus { bus }) => {
                Target::Bus(grid.case.bus_index(bus).ok_or_else(|| format!("unknown bus {bus}"))?)
            }
            _ => return Err(format!("{kind} measurement cannot sit at {location:?}")),
        };
        Ok(MeasurementPoint {
            id: measurement_id(grid, kind, location),
            kind,
            location,
            target,
        })
    }
}

/// Ordered measurement configuration without values.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLayout {
    pub points: Vec<MeasurementPoint>,
}

impl MeasurementLayout {
    /// Every kind: P/Q flows at both ends of every in-service branch, then
    /// P/Q injections, magnitudes and angles at every bus.
    pub fn full(grid: &Grid) -> Self {
        Self::with_kinds(grid, &MeasurementKind::ALL.into_iter().collect())
    }

    /// The full layout restricted to the given kinds.
    pub fn with_kinds(grid: &Grid, kinds: &BTreeSet<MeasurementKind>) -> Self {
        let mut points = Vec::new();
        for kind in MeasurementKind::ALL.into_iter().filter(|k| kinds.contains(k)) {
            if kind.is_flow() {
                for (k, br) in grid.case.in_service_branches() {
                    for at in [br.from, br.to] {
                        points.push(MeasurementPoint::new(grid, kind, Location::BranchEnd { branch: k, at }).unwrap());
                    }
                }
            } else {
                for bus in &grid.case.buses {
                    points.push(MeasurementPoint::new(grid, kind, Location::Bus { bus: bus.id }).unwrap());
                }
            }
        }
        MeasurementLayout { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kinds(&self) -> BTreeSet<MeasurementKind> {
        self.points.iter().map(|p| p.kind).collect()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p.id == id)
    }
}

/// Estimator state ordering: non-slack angles in bus order, then every
/// magnitude in bus order.
#[derive(Debug, Clone, PartialEq)]
pub struct StateIndex {
    pub slack: usize,
    n_bus: usize,
}

impl StateIndex {
    pub fn new(grid: &Grid) -> Self {
        StateIndex {
            slack: grid.case.slack_index(),
            n_bus: grid.n_bus(),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.n_bus - 1
    }

    pub fn angle_col(&self, bus: usize) -> Option<usize> {
        match bus.cmp(&self.slack) {
            std::cmp::Ordering::Less => Some(bus),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(bus - 1),
        }
    }

    pub fn mag_col(&self, bus: usize) -> usize {
        self.n_bus - 1 + bus
    }

    pub fn to_vector(&self, state: &StateVector) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for i in 0..self.n_bus {
            if let Some(c) = self.angle_col(i) {
                x[c] = state.va[i];
            }
            x[self.mag_col(i)] = state.vm[i];
        }
        x
    }

    pub fn apply(&self, state: &mut StateVector, x: &[f64]) {
        for i in 0..self.n_bus {
            state.va[i] = self.angle_col(i).map_or(0.0, |c| x[c]);
            state.vm[i] = x[self.mag_col(i)];
        }
    }
}

fn pick(kind: MeasurementKind, s: num_complex::Complex64) -> f64 {
    if kind.is_active() {
        s.re
    } else {
        s.im
    }
}

/// Value of one measurement function at the state.
pub fn eval_point(grid: &Grid, state: &StateVector, point: &MeasurementPoint) -> f64 {
    match (point.kind, point.target) {
        (MeasurementKind::Vmag, Target::Bus(i)) => state.vm[i],
        (MeasurementKind::Vang, Target::Bus(i)) => state.va[i],
        (kind, Target::Bus(i)) => pick(kind, injection_at(&grid.model, state, i)),
        (kind, Target::Flow { slot, from_end }) => {
            let f = branch_flow(state, &grid.model.branches[slot]);
            match (kind, from_end) {
                (MeasurementKind::Pflow, true) => f.pf,
                (MeasurementKind::Pflow, false) => f.pt,
                (_, true) => f.qf,
                (_, false) => f.qt,
            }
        }
    }
}

/// h(x) in layout order.
pub fn eval_h(grid: &Grid, state: &StateVector, layout: &MeasurementLayout) -> Vec<f64> {
    layout.points.iter().map(|p| eval_point(grid, state, p)).collect()
}

/// ∂h/∂x in layout order, columns per [`StateIndex`].
pub fn eval_jacobian(grid: &Grid, state: &StateVector, layout: &MeasurementLayout) -> DMatrix<f64> {
    let index = StateIndex::new(grid);
    let mut h = DMatrix::zeros(layout.len(), index.dim());
    let mut fill = |row: usize, kind: MeasurementKind, partials: &[PowerPartial]| {
        for p in partials {
            if let Some(c) = index.angle_col(p.bus) {
                h[(row, c)] += pick(kind, p.d_angle);
            }
            h[(row, index.mag_col(p.bus))] += pick(kind, p.d_mag);
        }
    };
    for (row, point) in layout.points.iter().enumerate() {
        match (point.kind, point.target) {
            (MeasurementKind::Vmag, Target::Bus(i)) => fill(
                row,
                MeasurementKind::Pinj,
                &[PowerPartial {
                    bus: i,
                    d_angle: 0.0.into(),
                    d_mag: 1.0.into(),
                }],
            ),
            (MeasurementKind::Vang, Target::Bus(i)) => fill(
                row,
                MeasurementKind::Pinj,
                &[PowerPartial {
                    bus: i,
                    d_angle: 1.0.into(),
                    d_mag: 0.0.into(),
                }],
            ),
            (kind, Target::Bus(i)) => fill(row, kind, &injection_partials(&grid.model, state, i)),
            (kind, Target::Flow { slot, from_end }) => {
                fill(row, kind, &branch_flow_partials(state, &grid.model.branches[slot], from_end))
            }
        }
    }
    h
}

/// Per-kind measurement standard deviations, p.u. (radians for angles).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSigmas {
    pub flow: f64,
    pub injection: f64,
    pub vmag: f64,
    pub vang: f64,
}

impl Default for NoiseSigmas {
    fn default() -> Self {
        NoiseSigmas {
            flow: 0.008,
            injection: 0.008,
            vmag: 0.004,
            vang: 0.002,
        }
    }
}

impl NoiseSigmas {
    pub fn noiseless() -> Self {
        NoiseSigmas {
            flow: 0.0,
            injection: 0.0,
            vmag: 0.0,
            vang: 0.0,
        }
    }

    pub fn sigma(&self, kind: MeasurementKind) -> f64 {
        match kind {
            MeasurementKind::Pflow | MeasurementKind::Qflow => self.flow,
            MeasurementKind::Pinj | MeasurementKind::Qinj => self.injection,
            MeasurementKind::Vmag => self.vmag,
            MeasurementKind::Vang => self.vang,
        }
    }

    /// Weighting variance: σ², or the default σ² of the kind when σ = 0.
    pub fn variance(&self, kind: MeasurementKind) -> f64 {
        let s = self.sigma(kind);
        let s = if s > 0.0 { s } else { NoiseSigmas::default().sigma(kind) };
        s * s
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        for kind in MeasurementKind::ALL {
            let s = self.sigma(kind);
            if !(s >= 0.0 && s.is_finite()) {
                return Err(EstimationError::InvalidSigma { kind, sigma: s });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub point: MeasurementPoint,
    pub value: f64,
    pub variance: f64,
}

/// Measured values z with their variances, in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub measurements: Vec<Measurement>,
    /// Estimator state dimension n.
    pub n_state: usize,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn layout(&self) -> MeasurementLayout {
        MeasurementLayout {
            points: self.measurements.iter().map(|m| m.point.clone()).collect(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.measurements.iter().map(|m| m.value).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Measurement> {
        self.measurements.iter().find(|m| m.point.id == id)
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut Measurement> {
        self.measurements.iter_mut().find(|m| m.point.id == id)
    }
}

/// z = h(state) + N(0, σ_kind²), seeded per call.
pub fn generate_measurements(
    grid: &Grid,
    state: &StateVector,
    layout: &MeasurementLayout,
    sigmas: &NoiseSigmas,
    seed: u64,
) -> Result<MeasurementSet, EstimationError> {
    sigmas.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measurements = layout
        .points
        .iter()
        .map(|p| {
            let draw: f64 = StandardNormal.sample(&mut rng);
            let sigma = sigmas.sigma(p.kind);
            let exact = eval_point(grid, state, p);
            Measurement {
                point: p.clone(),
                value: if sigma > 0.0 { exact + sigma * draw } else { exact },
                variance: sigmas.variance(p.kind),
            }
        })
        .collect();
    Ok(MeasurementSet {
        measurements,
        n_state: StateIndex::new(grid).dim(),
    })
}
