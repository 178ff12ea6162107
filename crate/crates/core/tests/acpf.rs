mod common;

use acfdi::acpf::{
    all_branch_flows, all_injections, branch_flow, bus_injection, solve_power_flow, PowerFlowError,
    PowerFlowOptions, StateVector,
};
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn base_case_matches_tabulated_voltages() {
    let grid = grid();
    let sol = solve_power_flow(&grid, &PowerFlowOptions::default()).unwrap();
    assert!(sol.final_mismatch() < 1e-8);
    for (bus, cols) in VOLTAGES {
        let (vm, va) = sol.state.get(bus).unwrap();
        let (tvm, tva) = cols[col(Column::Before)];
        assert_close(vm, tvm, 0.01, &format!("Vm at {bus}"));
        assert_close(va.to_degrees(), tva, 0.5, &format!("Va at {bus}"));
    }
    let k = grid.case.find_branch(26, 27).unwrap();
    let f = branch_flow(&sol.state, grid.model.branch(k).unwrap());
    assert_close(f.pf, 2.573, 0.02, "P 26-27");
}

#[test]
fn newton_converges_quadratically() {
    let grid = grid();
    let sol = solve_power_flow(&grid, &PowerFlowOptions::default()).unwrap();
    let h = &sol.mismatch_history;
    assert!(sol.iterations <= 6, "{} iterations", sol.iterations);
    for w in h.windows(2) {
        assert!(w[1] < w[0]);
    }
    let n = h.len();
    assert!(h[n - 1] < 1e-2 * h[n - 2].max(1e-12) || h[n - 1] < 1e-12);
}

#[test]
fn voltage_controlled_buses_hold_setpoints() {
    let grid = grid();
    let sol = solve_power_flow(&grid, &PowerFlowOptions::default()).unwrap();
    for g in grid.case.generators.iter().filter(|g| g.in_service) {
        let (vm, _) = sol.state.get(g.bus).unwrap();
        assert_close(vm, g.vset, 1e-12, &format!("setpoint at {}", g.bus));
    }
    let (_, va) = sol.state.get(grid.case.slack_id()).unwrap();
    assert_eq!(va, 0.0);
}

#[test]
fn iteration_cap_is_reported() {
    let grid = grid();
    let opts = PowerFlowOptions { tol: 1e-8, max_iter: 1 };
    assert!(matches!(
        solve_power_flow(&grid, &opts),
        Err(PowerFlowError::NotConverged { iterations: 1, .. })
    ));
}

#[test]
fn tabulated_flows_are_reproduced_from_tabulated_voltages() {
    let grid = grid();
    let base = base_state(&grid);
    let buses = tabulated_voltage_buses();
    let mut checked = 0;
    for c in COLUMNS {
        let s = tabulated_state(&base, c);
        for (from, to, cols) in FLOWS {
            if !(buses.contains(&from) && buses.contains(&to)) {
                continue;
            }
            let k = grid.case.find_branch(from, to).unwrap();
            let stamp = grid.model.branch(k).unwrap();
            let f = branch_flow(&s, stamp);
            let (p, q) = if grid.case.branches[k].from == from { (f.pf, f.qf) } else { (f.pt, f.qt) };
            let (tp, tq) = cols[col(c)];
            assert_close(p, tp, 0.05, &format!("P {from}-{to} {c:?}"));
            assert_close(q, tq, 0.05, &format!("Q {from}-{to} {c:?}"));
            checked += 1;
        }
    }
    assert_eq!(checked, 3 * 12);
}

#[test]
fn tabulated_injections_before_attack() {
    let grid = grid();
    let s = tabulated_state(&base_state(&grid), Column::Before);
    for (bus, cols) in INJECTIONS {
        let (p, q) = bus_injection(&grid, &s, bus).unwrap();
        let (tp, tq) = cols[col(Column::Before)];
        assert_close(p, tp, 0.05, &format!("P at {bus}"));
        assert_close(q, tq, 0.05, &format!("Q at {bus}"));
    }
}

/// S = V·conj(I) with I from the ideal-transformer two-port.
fn phasor_oracle(grid: &acfdi::Grid, s: &StateVector, k: usize) -> (Complex64, Complex64) {
    let br = &grid.case.branches[k];
    let f = grid.case.bus_index(br.from).unwrap();
    let t = grid.case.bus_index(br.to).unwrap();
    let vf = Complex64::from_polar(s.vm[f], s.va[f]);
    let vt = Complex64::from_polar(s.vm[t], s.va[t]);
    let ratio = Complex64::from_polar(br.tap, br.shift);
    let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
    let half_b = Complex64::new(0.0, br.b / 2.0);
    let inner = vf / ratio;
    let is = (inner - vt) * ys;
    let i_from = (is + half_b * inner) / ratio.conj();
    let i_to = -is + half_b * vt;
    (vf * i_from.conj(), vt * i_to.conj())
}

fn random_state(grid: &acfdi::Grid, vm: &[f64], va: &[f64]) -> StateVector {
    let mut s = StateVector::flat_start(&grid.case);
    for i in 0..s.len() {
        s.vm[i] = vm[i % vm.len()];
        s.va[i] = va[i % va.len()];
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn branch_flow_matches_phasor_oracle(
        vm in proptest::collection::vec(0.85f64..1.15, 39),
        va in proptest::collection::vec(-0.6f64..0.6, 39),
    ) {
        let grid = grid();
        let s = random_state(&grid, &vm, &va);
        for stamp in &grid.model.branches {
            let got = branch_flow(&s, stamp);
            let (sf, st) = phasor_oracle(&grid, &s, stamp.branch);
            prop_assert!((got.pf - sf.re).abs() < 1e-10 && (got.qf - sf.im).abs() < 1e-10);
            prop_assert!((got.pt - st.re).abs() < 1e-10 && (got.qt - st.im).abs() < 1e-10);
            prop_assert!((got.sf - sf.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn injections_balance_flows_and_shunts(
        vm in proptest::collection::vec(0.85f64..1.15, 39),
        va in proptest::collection::vec(-0.6f64..0.6, 39),
    ) {
        let grid = grid();
        let s = random_state(&grid, &vm, &va);
        let inj = all_injections(&grid.model, &s);
        let flows = all_branch_flows(&grid.model, &s);
        let mut sum = vec![Complex64::new(0.0, 0.0); grid.n_bus()];
        for (stamp, f) in grid.model.branches.iter().zip(&flows) {
            sum[stamp.from] += Complex64::new(f.pf, f.qf);
            sum[stamp.to] += Complex64::new(f.pt, f.qt);
        }
        for i in 0..grid.n_bus() {
            let shunt = grid.model.shunts[i].conj() * s.vm[i] * s.vm[i];
            prop_assert!((inj[i] - sum[i] - shunt).norm() < 1e-9);
        }
    }
}
