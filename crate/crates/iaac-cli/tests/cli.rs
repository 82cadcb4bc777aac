//! End-to-end runs of the `iaac` binary: exit codes, file layout, and
//! byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iaac"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_json(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

/// Everything under `dir`, relative path -> bytes.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn gen_config(instances: u64, ladder: &[f64], out_dir: &str) -> Value {
    json!({
        "instances": instances,
        "info_noise_ladder": ladder,
        "base": {"num_states": 4, "num_actions": 2, "info_dim": 2, "obs_dim": 2},
        "seed": 7,
        "out_dir": out_dir,
    })
}

fn train_config(out_dir: &str) -> Value {
    json!({
        "env": {"name": "heaven-hell", "max_steps": 10},
        "variants": ["history", "history-information"],
        "seeds": [0, 1],
        "arch": {"encoder_width": 4, "head": [8]},
        "total_steps": 120,
        "out_dir": out_dir,
    })
}

#[test]
fn gen_reruns_byte_identical_and_ladder_shares_dynamics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "gen.json", &gen_config(2, &[0.0, 0.5], "a"));
    assert_ok(&run_in(tmp.path(), &["gen", "--config", cfg.to_str().unwrap()]));
    let first = snapshot(&tmp.path().join("a"));
    assert_ok(&run_in(tmp.path(), &["gen", "--config", cfg.to_str().unwrap()]));
    assert_eq!(first, snapshot(&tmp.path().join("a")), "rerun changed bytes");

    // 2 instances x 2 noise levels + manifest.
    assert_eq!(first.len(), 5);

    // Same instance at different noise levels: identical everywhere except
    // the stored channel noise.
    let load = |name: &str| -> Value {
        serde_json::from_slice(&fs::read(tmp.path().join("a").join(name)).unwrap()).unwrap()
    };
    let mut low = load("inst00-noise0.json");
    let mut high = load("inst00-noise0.5.json");
    assert_eq!(low["info_channel"]["Gaussian"]["noise"], json!(0.0));
    assert_eq!(high["info_channel"]["Gaussian"]["noise"], json!(0.5));
    low["info_channel"]["Gaussian"]["noise"] = json!(null);
    high["info_channel"]["Gaussian"]["noise"] = json!(null);
    assert_eq!(low, high, "ladder entries differ beyond the noise level");
}

#[test]
fn verify_flags_tampered_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "gen.json", &gen_config(1, &[0.0], "a"));
    assert_ok(&run_in(tmp.path(), &["gen", "--config", cfg.to_str().unwrap()]));
    assert_ok(&run_in(tmp.path(), &["verify", "a"]));

    let victim = tmp.path().join("a/inst00-noise0.json");
    let mut bytes = fs::read(&victim).unwrap();
    let n = bytes.len();
    bytes[n / 2] ^= 1;
    fs::write(&victim, bytes).unwrap();
    assert_code(&run_in(tmp.path(), &["verify", "a"]), 1);
}

#[test]
fn train_writes_parseable_logs_per_variant_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "train.json", &train_config("t"));
    assert_ok(&run_in(tmp.path(), &["train", "--config", cfg.to_str().unwrap()]));

    for variant in ["history", "history-information"] {
        for seed in [0, 1] {
            let log = tmp.path().join(format!("t/{variant}/seed{seed}.csv"));
            let rows =
                iaac::actor_critic::read_log_csv(fs::read(&log).unwrap().as_slice()).unwrap();
            assert!(!rows.is_empty(), "{variant}/seed{seed} has no rows");
            // The budget cuts collection off only once a whole update (two
            // 10-step episodes at most) no longer fits.
            let last = rows.last().unwrap();
            assert!(
                last.env_steps > 100 && last.env_steps <= 120,
                "bad final step count {}",
                last.env_steps
            );
            assert!(tmp
                .path()
                .join(format!("t/{variant}/seed{seed}.ckpt.json"))
                .exists());
        }
    }
    assert_ok(&run_in(tmp.path(), &["verify", "t"]));

    // Different seeds explore differently.
    let a = fs::read(tmp.path().join("t/history/seed0.csv")).unwrap();
    let b = fs::read(tmp.path().join("t/history/seed1.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn interrupted_training_resumes_to_the_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let straight = write_json(tmp.path(), "straight.json", &train_config("full"));
    assert_ok(&run_in(tmp.path(), &["train", "--config", straight.to_str().unwrap()]));

    // Same run chopped into per-invocation slices of two updates.
    let mut chopped_cfg = train_config("chopped");
    chopped_cfg["stop_after_updates"] = json!(2);
    chopped_cfg["resume"] = json!(true);
    chopped_cfg["checkpoint_every_updates"] = json!(1);
    let chopped = write_json(tmp.path(), "chopped.json", &chopped_cfg);
    for _ in 0..20 {
        assert_ok(&run_in(tmp.path(), &["train", "--config", chopped.to_str().unwrap()]));
    }

    for variant in ["history", "history-information"] {
        for seed in [0, 1] {
            for file in [format!("{variant}/seed{seed}.csv"), format!("{variant}/seed{seed}.ckpt.json")] {
                let a = fs::read(tmp.path().join("full").join(&file)).unwrap();
                let b = fs::read(tmp.path().join("chopped").join(&file)).unwrap();
                assert_eq!(a, b, "{file} differs between straight and resumed runs");
            }
        }
    }
}

#[test]
fn evaluate_reports_episode_returns() {
    let tmp = tempfile::tempdir().unwrap();
    let mut tcfg = train_config("t");
    tcfg["variants"] = json!(["history"]);
    tcfg["seeds"] = json!([0]);
    let cfg = write_json(tmp.path(), "train.json", &tcfg);
    assert_ok(&run_in(tmp.path(), &["train", "--config", cfg.to_str().unwrap()]));

    let ecfg = write_json(
        tmp.path(),
        "eval.json",
        &json!({
            "env": {"name": "heaven-hell", "max_steps": 10},
            "checkpoint": "t/history/seed0.ckpt.json",
            "episodes": 5,
            "seed": 3,
            "out_dir": "e",
        }),
    );
    assert_ok(&run_in(tmp.path(), &["evaluate", "--config", ecfg.to_str().unwrap()]));
    let report: Value =
        serde_json::from_slice(&fs::read(tmp.path().join("e/evaluation.json")).unwrap()).unwrap();
    assert_eq!(report["returns"].as_array().unwrap().len(), 5);
    assert_eq!(report["variant"], json!("history"));
    let mean = report["mean_return"].as_f64().unwrap();
    let expect = report["returns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .sum::<f64>()
        / 5.0;
    assert!((mean - expect).abs() < 1e-12);
}

#[test]
fn hscic_constant_row_always_fails_to_reject() {
    let tmp = tempfile::tempdir().unwrap();
    let gcfg = write_json(tmp.path(), "gen.json", &gen_config(2, &[0.0, 0.5], "inst"));
    assert_ok(&run_in(tmp.path(), &["gen", "--config", gcfg.to_str().unwrap()]));

    let hcfg = write_json(
        tmp.path(),
        "hscic.json",
        &json!({
            "instances_dir": "inst",
            "episodes": 3,
            "horizon": 8,
            "permutations": 12,
            "rows": [
                {"row": "constant"},
                {"row": "env", "noise": 0.5},
                {"row": "noise", "dim": 2},
            ],
            "seed": 11,
            "out_dir": "h",
        }),
    );
    assert_ok(&run_in(tmp.path(), &["hscic-test", "--config", hcfg.to_str().unwrap()]));

    let rows = fs::read_to_string(tmp.path().join("h/rows.csv")).unwrap();
    let mut data_rows = 0;
    for line in rows.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5);
        data_rows += 1;
        if cols[1] == "constant" {
            // Degenerate signal: every permuted statistic ties the observed
            // one, so the p-value is exactly 1.
            assert_eq!(cols[4], "1", "constant row p != 1 in line {line:?}");
        }
    }
    assert_eq!(data_rows, 2 * 3, "2 instances x 3 rows");

    // Summary means recompute from the per-pair rows.
    let summary = fs::read_to_string(tmp.path().join("h/summary.csv")).unwrap();
    let const_line = summary
        .lines()
        .find(|l| l.starts_with("constant,"))
        .expect("constant summary row");
    let cols: Vec<&str> = const_line.split(',').collect();
    assert_eq!(cols[1], "2");
    assert_eq!(cols[4], "1");
    assert_eq!(cols[5], "0");

    assert_ok(&run_in(tmp.path(), &["verify", "h"]));
}

#[test]
fn rpe_counts_rows_and_identical_critics_fail_the_check() {
    let tmp = tempfile::tempdir().unwrap();
    let mut tcfg = train_config("t");
    tcfg["variants"] = json!(["history"]);
    tcfg["seeds"] = json!([0]);
    let cfg = write_json(tmp.path(), "train.json", &tcfg);
    assert_ok(&run_in(tmp.path(), &["train", "--config", cfg.to_str().unwrap()]));

    let rcfg = write_json(
        tmp.path(),
        "rpe.json",
        &json!({
            "env": {"name": "heaven-hell", "max_steps": 10},
            "symmetric_checkpoint": "t/history/seed0.ckpt.json",
            "informed_checkpoint": "t/history/seed0.ckpt.json",
            "episodes": 4,
            "horizon": 10,
            "deltas": [0.05, 0.1],
            "seed": 2,
            "out_dir": "r",
        }),
    );
    assert_ok(&run_in(tmp.path(), &["rpe-test", "--config", rcfg.to_str().unwrap()]));

    let rows = fs::read_to_string(tmp.path().join("r/rows.csv")).unwrap();
    let lines: Vec<&str> = rows.lines().skip(1).collect();
    // episodes x deltas per-episode rows, then one pooled row per delta.
    assert_eq!(lines.len(), 4 * 2 + 2);
    for line in &lines {
        let cols: Vec<&str> = line.split(',').collect();
        // A critic compared with itself shows exactly zero advantage.
        assert_eq!(cols[3], "0", "nonzero mean gain: {line:?}");
        assert_eq!(cols[7], "fail-to-reject");
    }
    let pooled: Vec<&&str> = lines.iter().filter(|l| l.starts_with(',')).collect();
    assert_eq!(pooled.len(), 2);

    // The same comparison under --set fail_on_negative exits as a failed check.
    let out = run_in(
        tmp.path(),
        &[
            "rpe-test",
            "--config",
            rcfg.to_str().unwrap(),
            "--set",
            "fail_on_negative=true",
        ],
    );
    assert_code(&out, 1);
}

#[test]
fn plot_curves_single_seed_band_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let mut tcfg = train_config("t");
    tcfg["variants"] = json!(["history"]);
    tcfg["seeds"] = json!([0]);
    let cfg = write_json(tmp.path(), "train.json", &tcfg);
    assert_ok(&run_in(tmp.path(), &["train", "--config", cfg.to_str().unwrap()]));

    assert_ok(&run_in(
        tmp.path(),
        &[
            "plot",
            "curves",
            "t/history/seed0.csv",
            "--out-dir",
            "p",
            "--points",
            "7",
        ],
    ));
    let csv = fs::read_to_string(tmp.path().join("p/curves.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(lines.len(), 7);
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], "history");
        assert_eq!(cols[3], "0", "single-seed std must be zero: {line:?}");
        assert_eq!(cols[4], "1");
    }
    let svg = fs::read_to_string(tmp.path().join("p/curves.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polyline"));
}

#[test]
fn plot_epsilon_quartiles_match_hand_computation() {
    let tmp = tempfile::tempdir().unwrap();
    // Nine per-episode bounds 1..9 at one delta: type-7 quartiles land on
    // data points (q1 3, median 5, q3 7), no outliers.
    let mut rows = String::from("episode,delta,t,mean,variance,c,epsilon,verdict\n");
    for (i, e) in [5, 1, 9, 2, 8, 3, 7, 4, 6].iter().enumerate() {
        rows.push_str(&format!("{i},0.05,10,0,0,0,{e},reject\n"));
    }
    rows.push_str(",0.05,90,0,0,0,4.5,reject\n");
    fs::write(tmp.path().join("rows.csv"), rows).unwrap();

    assert_ok(&run_in(
        tmp.path(),
        &["plot", "epsilon", "rows.csv", "--out-dir", "p"],
    ));
    let csv = fs::read_to_string(tmp.path().join("p/epsilon.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1], "0.05,9,3,5,7,1,9,0");
}

#[test]
fn config_mistakes_exit_with_the_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let mut bad = gen_config(1, &[0.0], "a");
    bad["instancess"] = json!(3);
    let cfg = write_json(tmp.path(), "bad.json", &bad);
    let out = run_in(tmp.path(), &["gen", "--config", cfg.to_str().unwrap()]);
    assert_code(&out, 2);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("config error"), "stderr: {msg}");

    // Unknown flag: clap's own usage error, same code.
    let out = run_in(tmp.path(), &["gen", "--no-such-flag"]);
    assert_code(&out, 2);

    // Missing config file.
    let out = run_in(tmp.path(), &["gen", "--config", "nope.json"]);
    assert_code(&out, 2);
}

#[test]
fn set_overrides_reach_nested_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "gen.json", &gen_config(2, &[0.0], "a"));
    assert_ok(&run_in(
        tmp.path(),
        &[
            "gen",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "instances=1",
            "--set",
            "base.num_states=3",
            "--out-dir",
            "b",
        ],
    ));
    assert!(!tmp.path().join("a").exists(), "--out-dir was ignored");
    let files = snapshot(&tmp.path().join("b"));
    assert_eq!(files.len(), 2, "one instance + manifest");
    let model: Value =
        serde_json::from_slice(&fs::read(tmp.path().join("b/inst00-noise0.json")).unwrap())
            .unwrap();
    assert_eq!(model["num_states"], json!(3));
}
