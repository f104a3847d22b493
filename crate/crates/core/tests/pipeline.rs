use std::process::Command;

use geosteer::agents::AgentKind;
use geosteer::env::EnvId;
use geosteer::harness::evaluate::baseline;
use geosteer::harness::export::{parse_report_csv, read_checkpoint, report_csv, write_checkpoint, write_comparison};
use geosteer::harness::{compare, evaluate, train_multi_seed, Contender, ExperimentConfig};

fn small_faulted() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.env.id = EnvId::Faulted;
    c.agent.kind = AgentKind::DqnSensor;
    c.harness.seeds = vec![3, 4, 5];
    c.harness.episodes = 60;
    c.harness.eval_realizations = 25;
    c
}

#[test]
fn config_file_drives_training_and_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, small_faulted().to_toml()).unwrap();
    let config = ExperimentConfig::load(&path).unwrap();
    assert_eq!(config, small_faulted());

    let outputs = train_multi_seed(&config).unwrap();
    assert_eq!(outputs.iter().map(|o| o.seed).collect::<Vec<_>>(), vec![3, 4, 5]);
    for o in &outputs {
        let ck = o.agent.checkpoint().unwrap();
        let p = write_checkpoint(dir.path(), ck).unwrap();
        assert_eq!(&read_checkpoint(&p).unwrap(), ck);
    }

    let contenders = vec![
        baseline(&config, AgentKind::Greedy).unwrap(),
        Contender::from_training(&config, outputs).unwrap(),
    ];
    let table = compare(&contenders, &config, 77).unwrap();
    let rows = table.rows();
    assert_eq!(rows.len(), 2 * config.env.v_prod_eval.len());
    let dqn = table.report("dqn-sensor").unwrap();
    assert!(dqn.robust);
    assert_eq!(dqn.seeds.len(), 3);
    assert!(rows.iter().all(|r| r.n_realizations == 25));

    let written = write_comparison(&dir.path().join("cmp"), &table).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for f in ["report.csv", "report.json", "episodes.csv"] {
        assert!(names.iter().any(|n| n == f), "{f} missing from {names:?}");
    }
    let text = std::fs::read_to_string(dir.path().join("cmp/report.csv")).unwrap();
    assert_eq!(report_csv(&parse_report_csv(&text).unwrap()), text);
}

#[test]
fn in_process_reruns_are_identical() {
    let config = small_faulted();
    let run = || {
        let outputs = train_multi_seed(&config).unwrap();
        let bytes: Vec<Vec<u8>> = outputs.iter().map(|o| o.agent.checkpoint().unwrap().to_bytes()).collect();
        let report = evaluate(&Contender::from_training(&config, outputs).unwrap(), &config, 5).unwrap();
        (bytes, report_csv(&report.rows))
    };
    assert_eq!(run(), run());
}

#[test]
fn layered_greedy_reports_both_scenarios() {
    let mut config = ExperimentConfig::default();
    config.harness.eval_realizations = 10;
    let report = evaluate(&baseline(&config, AgentKind::Greedy).unwrap(), &config, 1).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows.iter().all(|r| r.high_quality.is_some() && r.operating_cost.is_none()));
}

#[test]
fn cli_reports_missing_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_geosteer"))
        .args(["evaluate", "--env", "ex2", "--agent", "dqn-sensor", "--seeds", "0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("run `geosteer train"), "{stderr}");
}

#[test]
fn cli_rejects_agents_outside_their_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_geosteer"))
        .args(["compare", "--env", "ex1", "--agent", "dsdp", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dsdp"));
}

#[test]
fn cli_writes_a_markdown_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let status = Command::new(env!("CARGO_BIN_EXE_geosteer"))
            .args(args)
            .arg("--out")
            .arg(dir.path())
            .env("GEOSTEER_LOG", "warn")
            .status()
            .unwrap();
        assert!(status.success(), "{args:?}");
    };
    run(&["compare", "--env", "ex2", "--agent", "greedy,dsdp", "--eval-n", "20"]);
    run(&["report"]);
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert_eq!(md.lines().count(), 2 + 6);
    assert!(md.contains("| dsdp | v_prod=4 |"));
}
