//! CLI acceptance gate: `simulate` and `verify` output must be
//! byte-identical across worker counts for a fixed config and seed.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_levyarea")
}

fn write_config(dir: &tempfile::TempDir) -> PathBuf {
    let path = dir.path().join("mm1.json");
    std::fs::write(
        &path,
        r#"{
  "process": {"drift": -1.0, "sigma2": 0.0, "jump_rate": 1.0,
              "jump_dist": {"kind": "exponential", "rate": 2.0}},
  "holding": {"kind": "linear", "c": 1.0},
  "inventory": {"setup_cost": 4.0, "reward": 0.0}
}"#,
    )
    .unwrap();
    path
}

fn run_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(bin())
        .args(args)
        .env("LEVYAREA_THREADS", threads)
        .output()
        .expect("binary runs")
}

#[test]
fn simulate_and_verify_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(&dir);
    let cfg = config.to_str().unwrap();

    let sim_args =
        ["simulate", "--config", cfg, "--x", "1", "--reps", "2000", "--seed", "42", "--alpha-grid", "0.5:2:4"];
    let outputs: Vec<Output> =
        ["1", "2", "8"].iter().map(|t| run_with_threads(&sim_args, t)).collect();
    for o in &outputs {
        assert!(o.status.success(), "simulate failed: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(outputs[0].stdout, outputs[1].stdout, "simulate differs between 1 and 2 workers");
    assert_eq!(outputs[0].stdout, outputs[2].stdout, "simulate differs between 1 and 8 workers");

    let verify_args = ["verify", "--config", cfg, "--seed", "7"];
    let outputs: Vec<Output> =
        ["1", "2", "8"].iter().map(|t| run_with_threads(&verify_args, t)).collect();
    for o in &outputs {
        assert!(o.status.success(), "verify failed: {}", String::from_utf8_lossy(&o.stdout));
    }
    assert_eq!(outputs[0].stdout, outputs[1].stdout, "verify differs between 1 and 2 workers");
    assert_eq!(outputs[0].stdout, outputs[2].stdout, "verify differs between 1 and 8 workers");

    println!("ACCEPTANCE cli_determinism: PASS (simulate and verify byte-identical over 1/2/8 workers)");
}
