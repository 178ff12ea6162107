//! Attack zones: interior buses whose states the attacker changes,
//! enclosed by boundary buses whose states stay fixed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::netmodel::NetworkCase;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ZoneError {
    #[error("empty focal set")]
    EmptyFocal,
    #[error("empty zone")]
    EmptyZone,
    #[error("unknown bus {0}")]
    UnknownBus(u32),
    #[error("focal set contains the slack bus {0}")]
    FocalContainsSlack(u32),
    #[error("zone expansion reaches the slack bus {0}")]
    ExpansionReachesSlack(u32),
    #[error("slack bus {0} cannot be an interior bus")]
    SlackInZone(u32),
    #[error("bus {0} is both interior and boundary")]
    Overlap(u32),
    #[error("boundary bus {0} has zero injection")]
    ZeroInjectionBoundary(u32),
    #[error("bus {exterior} is an exterior neighbor of interior bus {interior}")]
    ExteriorNeighbor { interior: u32, exterior: u32 },
}

/// Bus partition and line classification of an attack zone. Line sets
/// hold case branch indices in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackZone {
    pub focal: BTreeSet<u32>,
    pub interior: BTreeSet<u32>,
    pub boundary: BTreeSet<u32>,
    /// Boundary buses with no branch to the interior.
    pub inert: BTreeSet<u32>,
    /// Interior buses with neither load nor generation.
    pub zero_injection: BTreeSet<u32>,
    /// Both ends in the zone, at least one interior.
    pub interior_lines: Vec<usize>,
    /// Both ends on the boundary.
    pub frozen_lines: Vec<usize>,
    /// One end on the boundary, the other outside the zone.
    pub tie_lines: Vec<usize>,
}

impl AttackZone {
    pub fn contains(&self, bus: u32) -> bool {
        self.interior.contains(&bus) || self.boundary.contains(&bus)
    }

    /// All zone buses in ascending id order.
    pub fn buses(&self) -> BTreeSet<u32> {
        self.interior.union(&self.boundary).copied().collect()
    }

    pub fn is_interior_line(&self, branch: usize) -> bool {
        self.interior_lines.binary_search(&branch).is_ok()
    }
}

/// Grow a zone from focal buses: zero-injection neighbors of interior
/// buses join the interior until a fixed point; remaining neighbors form
/// the boundary.
pub fn build_zone(case: &NetworkCase, focal: &BTreeSet<u32>) -> Result<AttackZone, ZoneError> {
    if focal.is_empty() {
        return Err(ZoneError::EmptyFocal);
    }
    let slack = case.slack_id();
    for &b in focal {
        if case.bus_index(b).is_none() {
            return Err(ZoneError::UnknownBus(b));
        }
        if b == slack {
            return Err(ZoneError::FocalContainsSlack(b));
        }
    }
    let adjacency = case.adjacency();
    let neighbors = |id: u32| -> Vec<u32> {
        adjacency[case.bus_index(id).unwrap()]
            .iter()
            .map(|&j| case.buses[j].id)
            .collect()
    };

    let mut interior = focal.clone();
    let mut frontier: Vec<u32> = focal.iter().copied().collect();
    while let Some(bus) = frontier.pop() {
        for nb in neighbors(bus) {
            if interior.contains(&nb) || case.has_injection(nb) {
                continue;
            }
            if nb == slack {
                return Err(ZoneError::ExpansionReachesSlack(nb));
            }
            interior.insert(nb);
            frontier.push(nb);
        }
    }
    let boundary: BTreeSet<u32> = interior
        .iter()
        .flat_map(|&b| neighbors(b))
        .filter(|nb| !interior.contains(nb))
        .collect();

    let mut zone = classify(case, interior, boundary)?;
    zone.focal = focal.clone();
    Ok(zone)
}

/// Check an explicitly declared interior/boundary partition.
pub fn validate_zone(
    case: &NetworkCase,
    interior: &BTreeSet<u32>,
    boundary: &BTreeSet<u32>,
) -> Result<AttackZone, ZoneError> {
    if interior.is_empty() {
        return Err(ZoneError::EmptyZone);
    }
    for &b in interior.iter().chain(boundary) {
        if case.bus_index(b).is_none() {
            return Err(ZoneError::UnknownBus(b));
        }
    }
    if let Some(&b) = interior.intersection(boundary).next() {
        return Err(ZoneError::Overlap(b));
    }
    classify(case, interior.clone(), boundary.clone())
}

fn classify(
    case: &NetworkCase,
    interior: BTreeSet<u32>,
    boundary: BTreeSet<u32>,
) -> Result<AttackZone, ZoneError> {
    let slack = case.slack_id();
    if interior.contains(&slack) {
        return Err(ZoneError::SlackInZone(slack));
    }
    if let Some(&b) = boundary.iter().find(|&&b| !case.has_injection(b)) {
        return Err(ZoneError::ZeroInjectionBoundary(b));
    }

    let mut interior_lines = Vec::new();
    let mut frozen_lines = Vec::new();
    let mut tie_lines = Vec::new();
    let mut touched = BTreeSet::new();
    for (k, br) in case.in_service_branches() {
        let fi = interior.contains(&br.from);
        let ti = interior.contains(&br.to);
        let fb = boundary.contains(&br.from);
        let tb = boundary.contains(&br.to);
        match (fi, ti, fb, tb) {
            (true, false, false, false) => {
                return Err(ZoneError::ExteriorNeighbor {
                    interior: br.from,
                    exterior: br.to,
                })
            }
            (false, true, false, false) => {
                return Err(ZoneError::ExteriorNeighbor {
                    interior: br.to,
                    exterior: br.from,
                })
            }
            (true, _, _, _) | (_, true, _, _) => {
                interior_lines.push(k);
                if fb {
                    touched.insert(br.from);
                }
                if tb {
                    touched.insert(br.to);
                }
            }
            (false, false, true, true) => frozen_lines.push(k),
            (false, false, true, false) | (false, false, false, true) => tie_lines.push(k),
            _ => {}
        }
    }
    let inert = boundary.difference(&touched).copied().collect();
    let zero_injection = interior.iter().copied().filter(|&b| !case.has_injection(b)).collect();
    Ok(AttackZone {
        focal: BTreeSet::new(),
        interior,
        boundary,
        inert,
        zero_injection,
        interior_lines,
        frozen_lines,
        tie_lines,
    })
}
