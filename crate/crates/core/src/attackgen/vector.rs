use std::collections::{BTreeMap, HashMap};

use super::{AttackError, AttackVector, InjectionPair};
use crate::acpf::{branch_flow, injection_at, StateVector};
use crate::netmodel::Grid;
use crate::stateest::{measurement_id, Location, MeasurementKind, MeasurementLayout, MeasurementSet};
use crate::zone::AttackZone;

fn check_outside_interior(base: &StateVector, x_attacked: &StateVector, zone: &AttackZone) -> Result<(), AttackError> {
    if base.bus != x_attacked.bus {
        return Err(AttackError::InvalidSpec("state vectors cover different buses".into()));
    }
    for (i, &b) in base.bus.iter().enumerate() {
        if !zone.interior.contains(&b) && (base.vm[i] != x_attacked.vm[i] || base.va[i] != x_attacked.va[i]) {
            return Err(AttackError::StateOutsideInterior(b));
        }
    }
    Ok(())
}

/// Interior buses from `x_attacked`, every other bus from `base`.
pub fn mixed_state(base: &StateVector, x_attacked: &StateVector, zone: &AttackZone) -> StateVector {
    let mut s = base.clone();
    for (i, &b) in base.bus.iter().enumerate() {
        if zone.interior.contains(&b) {
            if let Some((vm, va)) = x_attacked.get(b) {
                s.vm[i] = vm;
                s.va[i] = va;
            }
        }
    }
    s
}

/// Injections the attacker reports at zone buses: the base injection
/// plus the change of every incident interior-line flow.
pub fn compute_falsified_injections(
    grid: &Grid,
    base: &StateVector,
    x_attacked: &StateVector,
    zone: &AttackZone,
) -> Result<BTreeMap<u32, InjectionPair>, AttackError> {
    check_outside_interior(base, x_attacked, zone)?;
    let model = &grid.model;
    let mut out = BTreeMap::new();
    for bus in zone.buses() {
        if zone.zero_injection.contains(&bus) {
            out.insert(bus, InjectionPair { p: 0.0, q: 0.0 });
            continue;
        }
        let s0 = injection_at(model, base, grid.case.bus_index(bus).expect("zone bus exists"));
        let (dp, dq) = incident_change(grid, base, x_attacked, zone, bus);
        out.insert(bus, InjectionPair { p: s0.re + dp, q: s0.im + dq });
    }
    Ok(out)
}

/// Σ over interior lines incident to `bus` of the flow change at its end.
fn incident_change(grid: &Grid, base: &StateVector, x_attacked: &StateVector, zone: &AttackZone, bus: u32) -> (f64, f64) {
    let k = grid.case.bus_index(bus).expect("zone bus exists");
    let (mut p, mut q) = (0.0, 0.0);
    for &l in &zone.interior_lines {
        let stamp = grid.model.branch(l).expect("interior line is in service");
        if stamp.from != k && stamp.to != k {
            continue;
        }
        let (pa, qa) = branch_flow(x_attacked, stamp).at_end(stamp, k);
        let (pb, qb) = branch_flow(base, stamp).at_end(stamp, k);
        p += pa - pb;
        q += qa - qb;
    }
    (p, q)
}

/// Measurement deltas for the state change `base → x_attacked`. Every
/// affected measurement of a kind the layout carries must be present.
pub fn assemble_attack_vector(
    grid: &Grid,
    base: &StateVector,
    x_attacked: &StateVector,
    zone: &AttackZone,
    layout: &MeasurementLayout,
) -> Result<AttackVector, AttackError> {
    use MeasurementKind::*;

    let falsified = compute_falsified_injections(grid, base, x_attacked, zone)?;
    let mut affected: Vec<(MeasurementKind, Location, f64)> = Vec::new();
    for &bus in &zone.interior {
        let (v0, a0) = base.get(bus).expect("zone bus exists");
        let (v1, a1) = x_attacked.get(bus).expect("zone bus exists");
        affected.push((Vmag, Location::Bus { bus }, v1 - v0));
        affected.push((Vang, Location::Bus { bus }, a1 - a0));
    }
    for &l in &zone.interior_lines {
        let stamp = grid.model.branch(l).expect("interior line is in service");
        let fa = branch_flow(x_attacked, stamp);
        let fb = branch_flow(base, stamp);
        let br = &grid.case.branches[l];
        affected.push((Pflow, Location::BranchEnd { branch: l, at: br.from }, fa.pf - fb.pf));
        affected.push((Qflow, Location::BranchEnd { branch: l, at: br.from }, fa.qf - fb.qf));
        affected.push((Pflow, Location::BranchEnd { branch: l, at: br.to }, fa.pt - fb.pt));
        affected.push((Qflow, Location::BranchEnd { branch: l, at: br.to }, fa.qt - fb.qt));
    }
    // Injection deltas are the incident interior-line changes. At
    // zero-injection buses this differs from the nominal (0, 0) report only
    // by the power-flow and solver residuals, and keeps z + a consistent.
    for &bus in falsified.keys() {
        let (dp, dq) = incident_change(grid, base, x_attacked, zone, bus);
        affected.push((Pinj, Location::Bus { bus }, dp));
        affected.push((Qinj, Location::Bus { bus }, dq));
    }

    let kinds = layout.kinds();
    let mut deltas = BTreeMap::new();
    for (kind, location, delta) in affected {
        if !kinds.contains(&kind) {
            continue;
        }
        let id = measurement_id(grid, kind, location);
        if layout.position(&id).is_none() {
            return Err(AttackError::MissingMeasurement(id));
        }
        deltas.insert(id, delta);
    }
    Ok(AttackVector {
        mode: None,
        zone: zone.clone(),
        x_base: base.clone(),
        x_attacked: x_attacked.clone(),
        deltas,
        falsified_injections: falsified,
        targets: Vec::new(),
        solver: None,
    })
}

/// z_a = z + a. Variances and ordering are kept.
pub fn apply_attack(ms: &MeasurementSet, av: &AttackVector) -> Result<MeasurementSet, AttackError> {
    let index: HashMap<&str, usize> = ms
        .measurements
        .iter()
        .enumerate()
        .map(|(i, m)| (m.point.id.as_str(), i))
        .collect();
    let mut out = ms.clone();
    for (id, delta) in &av.deltas {
        let &i = index
            .get(id.as_str())
            .ok_or_else(|| AttackError::UnknownMeasurement(id.clone()))?;
        out.measurements[i].value += delta;
    }
    Ok(out)
}
