#![allow(dead_code)]

pub mod oracles;

use std::collections::BTreeSet;

use acfdi::acpf::{solve_power_flow, PowerFlowOptions};
use acfdi::zone::{build_zone, validate_zone, AttackZone};
use acfdi::{Grid, StateVector};

/// Operating point columns of the reference 39-bus study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Before,
    Optimal,
    Arbitrary,
}

pub const COLUMNS: [Column; 3] = [Column::Before, Column::Optimal, Column::Arbitrary];

/// Bus, then (Vm p.u., Va deg) for before / optimal / arbitrary.
pub const VOLTAGES: [(u32, [(f64, f64); 3]); 12] = [
    (3, [(1.0307, -12.2763), (1.0307, -12.2764), (1.0307, -12.2764)]),
    (15, [(1.0161, -11.3453), (1.0161, -11.3454), (1.0162, -11.3454)]),
    (16, [(1.0325, -10.0333), (1.0325, -10.0333), (1.0325, -10.0333)]),
    (17, [(1.0342, -11.1164), (1.0342, -11.1659), (1.014, -13.1662)]),
    (18, [(1.0315, -11.9861), (1.0316, -11.9655), (1.0167, -13.634)]),
    (21, [(1.0323, -7.6287), (1.0323, -7.6287), (1.0323, -7.6287)]),
    (24, [(1.0380, -9.9137), (1.0380, -9.9138), (1.0380, -9.9138)]),
    (25, [(1.0576, -8.3692), (1.0576, -8.3692), (1.0577, -8.3692)]),
    (26, [(1.0525, -9.4387), (1.0533, -9.137), (1.0081, -8.9311)]),
    (27, [(1.0383, -11.3621), (1.0381, -11.6541), (0.9749, -18.5778)]),
    (28, [(1.0503, -5.9283), (1.0504, -5.9284), (1.0328, -5.2174)]),
    (29, [(1.0501, -3.1698), (1.0501, -3.1699), (1.0501, -3.1699)]),
];

/// Bus, then (P, Q) injection p.u. for before / optimal / arbitrary.
pub const INJECTIONS: [(u32, [(f64, f64); 3]); 8] = [
    (3, [(-3.22, -0.024), (-3.2487, -0.0217), (-0.8675, 0.9514)]),
    (16, [(-3.29, -0.323), (-3.1866, -0.3222), (1.0409, 1.8335)]),
    (18, [(-1.58, -0.3), (-1.3926, -0.3101), (-2.9305, -0.639)]),
    (25, [(-2.24, -0.472), (-2.422, -0.4801), (-2.4141, 0.9969)]),
    (26, [(-1.39, -0.17), (-0.2226, -0.1528), (7.7404, -1.4558)]),
    (27, [(-2.81, -0.755), (-3.8398, -0.7094), (-16.7259, -1.9921)]),
    (28, [(-2.06, -0.276), (-2.1829, -0.2878), (-1.185, -0.9875)]),
    (29, [(-2.835, -0.269), (-2.9275, -0.2822), (-3.8308, 1.7312)]),
];

pub type FlowRow = (u32, u32, [(f64, f64); 3]);

/// From, to, then from-end (P, Q) p.u. for before / optimal / arbitrary.
pub const FLOWS: [FlowRow; 21] = [
    (2, 3, [(3.1991, 0.8859), (3.1991, 0.8859), (3.1991, 0.8859)]),
    (2, 25, [(-2.4459, 0.8297), (-2.4459, 0.8297), (-2.4459, 0.8297)]),
    (3, 4, [(0.3734, 1.1306), (0.3734, 1.1306), (0.3734, 1.1306)]),
    (3, 18, [(-0.4076, -0.1459), (-0.4363, -0.1435), (1.9449, 0.8295)]),
    (14, 15, [(0.5031, -0.4068), (0.5031, -0.4068), (0.5031, -0.4068)]),
    (15, 16, [(-2.6974, -1.5666), (-2.6974, -1.5666), (-2.6974, -1.5666)]),
    (16, 17, [(2.2402, -0.4254), (2.3436, -0.4246), (6.5711, 1.7311)]),
    (16, 19, [(-4.513, -0.542), (-4.513, -0.542), (-4.513, -0.542)]),
    (16, 21, [(-3.296, 0.1444), (-3.296, 0.1444), (-3.296, 0.1444)]),
    (16, 24, [(-0.4268, -0.9733), (-0.4268, -0.9733), (-0.4268, -0.9733)]),
    (17, 18, [(1.9904, 0.1105), (1.8313, 0.1139), (0.9912, -0.4829)]),
    (17, 27, [(0.2464, -0.4356), (0.5086, -0.4421), (5.5494, 1.9669)]),
    (21, 22, [(-6.0442, -0.8726), (-6.0442, -0.8726), (-6.0442, -0.8726)]),
    (23, 24, [(3.5384, -0.005), (3.5384, -0.005), (3.5384, -0.005)]),
    (25, 26, [(0.6541, -0.1881), (0.4722, -0.1962), (0.48, 1.2808)]),
    (25, 37, [(-5.3834, 0.6545), (-5.3834, 0.6545), (-5.3834, 0.6545)]),
    (26, 27, [(2.573, 0.6821), (3.3466, 0.7074), (11.4067, 2.0141)]),
    (26, 28, [(-1.4082, -0.2121), (-1.2867, -0.2151), (-1.4543, -0.7444)]),
    (26, 29, [(-1.9019, -0.2496), (-1.8111, -0.2566), (-1.7398, -0.9564)]),
    (28, 29, [(-3.4761, 0.2876), (-3.4761, 0.2875), (-2.6488, -1.0236)]),
    (29, 38, [(-8.2477, 0.8033), (-8.2477, 0.8033), (-8.2477, 0.8033)]),
];

pub fn col(c: Column) -> usize {
    match c {
        Column::Before => 0,
        Column::Optimal => 1,
        Column::Arbitrary => 2,
    }
}

pub fn grid() -> Grid {
    acfdi::cases::case39().expect("bundled case parses")
}

pub fn base_state(grid: &Grid) -> StateVector {
    solve_power_flow(grid, &PowerFlowOptions::default()).expect("base case converges").state
}

pub const STUDY_INTERIOR: [u32; 5] = [17, 18, 26, 27, 28];
pub const STUDY_BOUNDARY: [u32; 7] = [3, 15, 16, 21, 24, 25, 29];

/// The declared study zone, including its three inert boundary buses.
pub fn study_zone(grid: &Grid) -> AttackZone {
    validate_zone(
        &grid.case,
        &STUDY_INTERIOR.into_iter().collect(),
        &STUDY_BOUNDARY.into_iter().collect(),
    )
    .expect("study zone is valid")
}

/// The zone grown from the four focal buses.
pub fn grown_zone(grid: &Grid) -> AttackZone {
    build_zone(&grid.case, &BTreeSet::from([18, 26, 27, 28])).expect("grown zone is valid")
}

/// `base` with the tabulated zone voltages of one column written over it.
pub fn tabulated_state(base: &StateVector, c: Column) -> StateVector {
    let mut s = base.clone();
    for (bus, cols) in VOLTAGES {
        let (vm, va) = cols[col(c)];
        assert!(s.set(bus, vm, va.to_radians()));
    }
    s
}

pub fn tabulated_voltage_buses() -> BTreeSet<u32> {
    VOLTAGES.iter().map(|(b, _)| *b).collect()
}

pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: {actual} vs {expected} (tol {tol})"
    );
}

pub fn target_branch(grid: &Grid) -> usize {
    grid.case.find_branch(26, 27).expect("line 26-27 exists")
}

pub fn study_spec(grid: &Grid, mode: acfdi::attackgen::AttackMode, lambda: f64, seed: u64) -> acfdi::attackgen::AttackSpec {
    acfdi::attackgen::AttackSpec {
        zone: study_zone(grid),
        targets: vec![acfdi::attackgen::OverloadTarget { branch: target_branch(grid), lambda }],
        mode,
        params: acfdi::attackgen::SolverParams { seed, ..Default::default() },
    }
}

/// Design an attack on the study zone against the full layout.
pub fn study_attack(grid: &Grid, base: &StateVector, mode: acfdi::attackgen::AttackMode, seed: u64) -> acfdi::attackgen::AttackVector {
    let layout = acfdi::stateest::MeasurementLayout::full(grid);
    acfdi::attackgen::design_attack(grid, base, &study_spec(grid, mode, 1.3, seed), &layout).expect("attack design succeeds")
}

/// `base` with only the tabulated interior voltages of one column; boundary
/// and exterior buses stay at `base` so the state is a valid attack target.
pub fn tabulated_interior_state(base: &StateVector, c: Column) -> StateVector {
    let mut s = base.clone();
    for (bus, cols) in VOLTAGES {
        if STUDY_INTERIOR.contains(&bus) {
            let (vm, va) = cols[col(c)];
            assert!(s.set(bus, vm, va.to_radians()));
        }
    }
    s
}
