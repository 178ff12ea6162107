use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acfdi_cli::pipeline;
use acfdi_cli::ScenarioConfig;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn acfdi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acfdi"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = acfdi(dir, args);
    assert!(
        out.status.success(),
        "acfdi {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn run_config(name: &str, out: &Path) {
    let cfg = scenarios().join(name);
    ok(out, &["scenario", "run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
}

#[test]
fn unknown_focal_bus_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"case_path": "builtin:case39", "zone": {"focal": [99]}, "targets": [{"from": 26, "to": 27, "lambda": 1.3}]}"#,
    )
    .unwrap();
    let out = acfdi(dir.path(), &["scenario", "run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("99"), "{err}");
}

#[test]
fn other_failures_have_distinct_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let missing = acfdi(dir.path(), &["pf", "nope.m"]);
    assert_eq!(missing.status.code(), Some(1));
    let reversed = dir.path().join("rev.json");
    std::fs::write(
        &reversed,
        r#"{"case_path": "builtin:case39", "zone": {"focal": [18, 26, 27, 28]}, "targets": [{"from": 27, "to": 26, "lambda": 1.3}]}"#,
    )
    .unwrap();
    let out = acfdi(dir.path(), &["scenario", "run", reversed.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("orientation"));
}

fn check_composability(config: &str) {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_config(config, d);
    let cfg = "config.resolved.json";
    let case = "builtin:case39";

    assert_eq!(ok(d, &["pf", case, "--config", cfg]), read(d.join("pf.json")));
    assert_eq!(
        ok(d, &["zone", case, "--interior", "17,18,26,27,28", "--boundary", "3,15,16,21,24,25,29"]),
        read(d.join("zone.json"))
    );
    let resolved = ScenarioConfig::load(&d.join(cfg)).unwrap();
    let seed = resolved.seeds.noise.to_string();
    let start = resolved.seeds.arbitrary_start.to_string();
    assert_eq!(
        ok(d, &["measure", case, "--config", cfg, "--seed", &seed]),
        read(d.join("measurements_clean.csv"))
    );
    assert_eq!(
        ok(d, &["estimate", case, "measurements_clean.csv", "--config", cfg]),
        read(d.join("estimate_clean.json"))
    );
    for mode in ["optimal", "arbitrary"] {
        let attack = ok(
            d,
            &["attack", case, "zone.json", "--target", "26:27", "--lambda", "1.3", "--mode", mode, "--seed", &start, "--config", cfg],
        );
        assert_eq!(attack, read(d.join(format!("attack_{mode}.json"))), "{mode} attack");
        let av = format!("attack_{mode}.json");
        assert_eq!(
            ok(d, &["measure", case, "--config", cfg, "--seed", &seed, "--attack", &av]),
            read(d.join(format!("measurements_{mode}.csv"))),
            "{mode} measurements"
        );
        assert_eq!(
            ok(d, &["estimate", case, &format!("measurements_{mode}.csv"), "--config", cfg]),
            read(d.join(format!("estimate_{mode}.json"))),
            "{mode} estimate"
        );
    }
    let staged = d.join("staged");
    ok(
        d,
        &[
            "impact", case, "--clean", "estimate_clean.json",
            "--attack", "attack_optimal.json", "--estimate", "estimate_optimal.json",
            "--attack", "attack_arbitrary.json", "--estimate", "estimate_arbitrary.json",
            "--config", cfg, "--out", staged.to_str().unwrap(),
        ],
    );
    let mut names: Vec<_> = std::fs::read_dir(&staged)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 9, "{names:?}");
    for name in names {
        assert_eq!(read(staged.join(&name)), read(d.join(&name)), "{name}");
    }
}

#[test]
fn subcommands_reproduce_scenario_stages_noiseless() {
    check_composability("case39_zone.json");
}

#[test]
fn subcommands_reproduce_scenario_stages_noisy() {
    check_composability("noisy.json");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_config("noisy.json", a.path());
    run_config("noisy.json", b.path());
    let mut count = 0;
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(read(a.path().join(&name)), read(b.path().join(&name)), "{name:?}");
        count += 1;
    }
    assert_eq!(count, std::fs::read_dir(b.path()).unwrap().count());
}

#[test]
fn reference_scenario_outcome() {
    let cfg = ScenarioConfig::load(&scenarios().join("case39_zone.json")).unwrap();
    let outcome = pipeline::run_scenario(&cfg, &scenarios()).unwrap();
    assert_eq!(outcome.reports.len(), 2);
    for r in &outcome.reports {
        assert!(!r.clean_verdict.detected && !r.attacked_verdict.detected);
        let t = &r.targets[0];
        assert!(t.outcome.attacked_pf >= 1.3 * t.outcome.base_pf - 1e-9);
    }
    let opt = &outcome.reports[0].targets[0].outcome;
    assert!(opt.attacked_pf <= 1.3 * opt.base_pf + 1e-3);
    for name in ["voltages.csv", "injections.csv", "flows.csv", "impact_optimal.json", "loading.svg"] {
        assert!(outcome.artifact(name).is_some(), "{name}");
    }
}

#[test]
fn sweep_writes_per_seed_directories_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("noisy.json");
    let stdout = ok(dir.path(), &["scenario", "run", cfg.to_str().unwrap(), "--seeds", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("seed ")).count(), 6);
    for s in 1..=3 {
        assert!(dir.path().join(pipeline::seed_dir(s)).join("impact_arbitrary.json").exists());
    }
    let summary = read(dir.path().join("summary.csv"));
    assert_eq!(summary.lines().count(), 1 + 6);
}

#[test]
fn config_rejects_unknown_fields_and_bad_lambda() {
    let bad_field = r#"{"case_path": "builtin:case39", "zone": {"focal": [18], "extra": 1}, "targets": []}"#;
    assert!(ScenarioConfig::from_json(bad_field).is_err());
    let bad_lambda = r#"{"case_path": "builtin:case39", "zone": {"focal": [18, 26, 27, 28]}, "targets": [{"from": 26, "to": 27, "lambda": -1}]}"#;
    let err = ScenarioConfig::from_json(bad_lambda).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("lambda"));
}
