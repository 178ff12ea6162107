mod common;

use acfdi::acpf::{all_branch_flows, branch_flow};
use acfdi::attackgen::*;
use acfdi::impact::*;
use acfdi::stateest::*;
use acfdi::{Grid, StateVector};
use common::*;
use regex::Regex;

struct Run {
    av: AttackVector,
    report: ImpactReport,
}

fn run(grid: &Grid, base: &StateVector, av: AttackVector, sigmas: &NoiseSigmas, seed: u64) -> Run {
    let layout = MeasurementLayout::full(grid);
    let clean = generate_measurements(grid, base, &layout, sigmas, seed).unwrap();
    let attacked = apply_attack(&clean, &av).unwrap();
    let opts = WlsOptions::default();
    let est_clean = wls_estimate(grid, &clean, None, &opts).unwrap();
    let est_attacked = wls_estimate(grid, &attacked, None, &opts).unwrap();
    let report = compute_impact(grid, base, &av, &est_clean, &est_attacked, &BddPolicy::default()).unwrap();
    Run { av, report }
}

fn designed(grid: &Grid, base: &StateVector, mode: AttackMode) -> Run {
    let av = study_attack(grid, base, mode, 1);
    run(grid, base, av, &NoiseSigmas::noiseless(), 1)
}

#[test]
fn replay_reproduces_tabulated_flows() {
    let grid = grid();
    let base = base_state(&grid);
    let zone = study_zone(&grid);
    let layout = MeasurementLayout::full(&grid);
    let xa = tabulated_interior_state(&base, Column::Arbitrary);
    let av = assemble_attack_vector(&grid, &base, &xa, &zone, &layout).unwrap();
    let flows = replay_attacked_flows(&grid, &base, &av);
    let at = |a: u32, b: u32| {
        let k = grid.case.find_branch(a, b).unwrap();
        let slot = grid.model.branch_slot[k].unwrap();
        flows[slot]
    };
    let f = at(26, 27);
    assert_close(f.pf, 11.4067, 0.05, "P 26-27");
    assert_close(f.qf, 2.0141, 0.05, "Q 26-27");
    let tie = at(2, 3);
    let stamp = grid.model.branch(grid.case.find_branch(2, 3).unwrap()).unwrap();
    assert_eq!(tie, branch_flow(&base, stamp));
    assert_close(tie.pf, 3.1991, 0.05, "P 2-3");
    assert_close(tie.qf, 0.8859, 0.05, "Q 2-3");
}

#[test]
fn zero_vector_reproduces_base_flows() {
    let grid = grid();
    let base = base_state(&grid);
    let zone = study_zone(&grid);
    let layout = MeasurementLayout::full(&grid);
    let av = assemble_attack_vector(&grid, &base, &base, &zone, &layout).unwrap();
    assert_eq!(replay_attacked_flows(&grid, &base, &av), all_branch_flows(&grid.model, &base));
    let r = run(&grid, &base, av, &NoiseSigmas::default(), 3).report;
    assert!(r.branches.iter().all(|b| b.delta_p == 0.0 && b.delta_q == 0.0));
    assert!(r.deltas.values().all(|&d| d == 0.0));
    assert_eq!(r.residuals.j_clean, r.residuals.j_attacked);
    assert_eq!(r.clean_verdict, r.attacked_verdict);
}

#[test]
fn arbitrary_target_flow_exceeds_optimal() {
    let grid = grid();
    let base = base_state(&grid);
    let opt = designed(&grid, &base, AttackMode::Optimal).report;
    let arb = designed(&grid, &base, AttackMode::Arbitrary).report;
    let p = |r: &ImpactReport| r.branch(26, 27).unwrap().attacked.pf;
    assert!(p(&arb) > p(&opt), "{} vs {}", p(&arb), p(&opt));
    let t = &opt.targets[0];
    assert!((t.overload_factor - t.outcome.attacked_pf / t.outcome.base_pf).abs() < 1e-15);
    assert!(t.overload_factor >= 1.3 - 1e-9);
}

#[test]
fn loading_uses_the_case_file_rating() {
    let text = include_str!("../data/case39.m");
    let row = text
        .lines()
        .map(|l| l.trim().trim_end_matches(';'))
        .map(|l| l.split_whitespace().collect::<Vec<_>>())
        .find(|f| f.len() >= 13 && f[0] == "26" && f[1] == "27")
        .expect("branch row 26-27");
    let rate_a_mva: f64 = row[5].parse().unwrap();
    let grid = grid();
    let base = base_state(&grid);
    let r = designed(&grid, &base, AttackMode::Optimal).report;
    let b = r.branch(26, 27).unwrap();
    let rating = rate_a_mva / 100.0;
    assert_eq!(b.rating, Some(rating));
    let expect = |f: &acfdi::BranchFlow| 100.0 * f.pf.hypot(f.qf).max(f.pt.hypot(f.qt)) / rating;
    assert_close(b.loading_base.unwrap(), expect(&b.base), 1e-9, "base loading");
    assert_close(b.loading_attacked.unwrap(), expect(&b.attacked), 1e-9, "attacked loading");
    assert!(r.branches.iter().all(|b| b.loading_attacked.is_none_or(|l| l >= 0.0)));
    assert_eq!(r.branches.len(), grid.model.branches.len());
    assert!(r.unrated.is_empty());
}

#[test]
fn zone_power_balance_is_conserved() {
    let grid = grid();
    let base = base_state(&grid);
    for mode in [AttackMode::Optimal, AttackMode::Arbitrary] {
        let Run { av, report } = designed(&grid, &base, mode);
        let (mut dp, mut dq) = (0.0, 0.0);
        for b in av.zone.buses() {
            let bi = report.bus(b).unwrap();
            dp += bi.attacked_p - bi.base_p;
            dq += bi.attacked_q - bi.base_q;
        }
        let (mut lp, mut lq) = (0.0, 0.0);
        for &l in &av.zone.interior_lines {
            let stamp = grid.model.branch(l).unwrap();
            let fa = branch_flow(&av.x_attacked, stamp);
            let fb = branch_flow(&base, stamp);
            lp += (fa.pf + fa.pt) - (fb.pf + fb.pt);
            lq += (fa.qf + fa.qt) - (fb.qf + fb.qt);
        }
        assert!((dp - lp).abs() < 1e-6, "{mode}: P {dp} vs {lp}");
        assert!((dq - lq).abs() < 1e-6, "{mode}: Q {dq} vs {lq}");
    }
}

#[test]
fn boundary_lines_and_inert_buses_are_untouched() {
    let grid = grid();
    let base = base_state(&grid);
    for mode in [AttackMode::Optimal, AttackMode::Arbitrary] {
        let Run { av, report } = designed(&grid, &base, mode);
        for b in &report.branches {
            match b.class {
                LineClass::Tie | LineClass::Frozen | LineClass::Exterior => {
                    assert!(b.delta_p.abs() < 1e-8 && b.delta_q.abs() < 1e-8, "{}", b.label)
                }
                LineClass::Interior => {
                    let stamp = grid.model.branch(b.branch).unwrap();
                    let h = branch_flow(&av.x_attacked, stamp);
                    for (x, y) in [(b.attacked.pf, h.pf), (b.attacked.qf, h.qf), (b.attacked.pt, h.pt), (b.attacked.qt, h.qt)] {
                        assert!((x - y).abs() < 1e-10, "{}", b.label);
                    }
                }
            }
        }
        for &bus in &av.zone.inert {
            let bi = report.bus(bus).unwrap();
            assert_eq!((bi.attacked_p, bi.attacked_q), (bi.base_p, bi.base_q), "bus {bus}");
        }
    }
}

#[test]
fn noiseless_attacks_pass_detection() {
    let grid = grid();
    let base = base_state(&grid);
    for mode in [AttackMode::Optimal, AttackMode::Arbitrary] {
        let r = designed(&grid, &base, mode).report;
        assert!(!r.clean_verdict.detected && !r.attacked_verdict.detected, "{mode}");
        assert!((r.residuals.j_attacked - r.residuals.j_clean).abs() < 1e-8);
        assert!(r.residuals.shift_error < 1e-6);
        assert!(r.attacked_verdict.lnr.value < 1e-6);
    }
}

#[test]
fn rendering_is_deterministic_and_shaped() {
    let grid = grid();
    let base = base_state(&grid);
    let reports = [
        designed(&grid, &base, AttackMode::Optimal).report,
        designed(&grid, &base, AttackMode::Arbitrary).report,
    ];
    for fmt in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Svg] {
        assert_eq!(render_reports(&reports, fmt).unwrap(), render_reports(&reports, fmt).unwrap());
    }
    let csv = render_reports(&reports, ReportFormat::Csv).unwrap();
    let volt = &csv.iter().find(|a| a.name == "voltages.csv").unwrap().content;
    let mut lines = volt.lines();
    assert_eq!(
        lines.next().unwrap(),
        "bus,role,vm_before_pu,va_before_deg,vm_optimal_pu,va_optimal_deg,vm_arbitrary_pu,va_arbitrary_deg"
    );
    let buses: Vec<u32> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(buses, study_zone(&grid).buses().into_iter().collect::<Vec<_>>());

    let json = render_report(&reports[0], ReportFormat::Json).unwrap();
    assert_eq!(json[0].name, "impact_optimal.json");
    let back = ImpactReport::from_json(&json[0].content).unwrap();
    assert_eq!(back, reports[0]);
    assert_eq!(back.schema, "impact/1");
    assert!(matches!("pdf".parse::<ReportFormat>(), Err(ImpactError::UnknownFormat(_))));
    assert!(matches!(render_reports(&[], ReportFormat::Csv), Err(ImpactError::Empty)));
}

#[test]
fn svg_bar_heights_follow_the_stated_scale() {
    let grid = grid();
    let base = base_state(&grid);
    let reports = [
        designed(&grid, &base, AttackMode::Optimal).report,
        designed(&grid, &base, AttackMode::Arbitrary).report,
    ];
    let scale_re = Regex::new(r#"<svg [^>]*data-scale="([^"]+)""#).unwrap();
    let bar_re = Regex::new(
        r#"<rect class="bar" data-series="([^"]*)" data-category="([^"]*)" data-value="([^"]+)"[^>]* height="([^"]+)""#,
    )
    .unwrap();
    let svgs = render_reports(&reports, ReportFormat::Svg).unwrap();
    assert_eq!(svgs.len(), 4);
    for doc in &svgs {
        let scale: f64 = scale_re.captures(&doc.content).expect("scale")[1].parse().unwrap();
        let mut bars = 0;
        for cap in bar_re.captures_iter(&doc.content) {
            let value: f64 = cap[3].parse().unwrap();
            let height: f64 = cap[4].parse().unwrap();
            assert!((height - value.abs() * scale).abs() < 1e-5, "{} {}", doc.name, &cap[2]);
            bars += 1;
        }
        assert!(bars > 0, "{}", doc.name);
    }
    let av = svgs.iter().find(|a| a.name == "attack_vector.svg").unwrap();
    let scale: f64 = scale_re.captures(&av.content).unwrap()[1].parse().unwrap();
    for cap in bar_re.captures_iter(&av.content) {
        let report = if &cap[1] == "optimal" { &reports[0] } else { &reports[1] };
        let delta = report.deltas.get(&cap[2]).copied().unwrap_or(0.0);
        let height: f64 = cap[4].parse().unwrap();
        assert!((height - delta.abs() * scale).abs() < 1e-5, "{}", &cap[2]);
    }
}
