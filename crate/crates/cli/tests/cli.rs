use std::path::Path;
use std::process::{Command, Output};

fn reschain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reschain"))
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"
scheme = "residual_chain"
eval_metrics = ["ade", "fde", "frechet"]

[dataset]
trajectories = 10
points_per_trajectory = 18
n = 2
m = 4
split_fraction = 0.2
seed = 5
start_extent = 100.0
mix = [
  { kind = "arc", weight = 1.0, speed = [0.8, 1.2], curvature = [-0.05, 0.05], noise_std = 0.02 },
  { kind = "lane_change", weight = 1.0, speed = [0.8, 1.2], lateral_amplitude = [-3.0, 3.0] },
]

[model]
hidden = [12]

[sgd]
learning_rate = 0.005
batch_size = 8
epochs = 4
"#;

fn write_config(dir: &Path) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_train_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();

    let gen = reschain(&["generate", "--config", &cfg, "--out", out]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let csv = std::fs::read_to_string(dir.path().join("run/trajectories.csv")).unwrap();
    assert!(csv.starts_with("traj_id,t,x,y,yaw\n"));
    assert_eq!(csv.lines().count(), 1 + 10 * 18);

    let train = reschain(&["train", "--config", &cfg, "--out", out]);
    assert!(
        train.status.success(),
        "{}",
        String::from_utf8_lossy(&train.stderr)
    );
    let curve = std::fs::read_to_string(dir.path().join("run/loss_residual_chain.csv")).unwrap();
    assert_eq!(
        curve.lines().next().unwrap(),
        "epoch,train_delta_loss,train_abs_loss,val_abs_loss"
    );
    assert_eq!(curve.lines().count(), 5);

    let ckpt = dir.path().join("run/checkpoint.json");
    let data = dir.path().join("run/trajectories.csv");
    let eval = reschain(&[
        "evaluate",
        "--config",
        &cfg,
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        out,
    ]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let metrics = std::fs::read_to_string(dir.path().join("run/metrics.csv")).unwrap();
    let rows: Vec<&str> = metrics.lines().collect();
    assert_eq!(rows[0], "metric,value");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("ade,") && rows[3].starts_with("frechet,"));

    let eval = reschain(&[
        "evaluate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--config",
        &cfg,
        "--metrics",
        "dtw,chamfer",
        "--out",
        out,
    ]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let metrics = std::fs::read_to_string(dir.path().join("run/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
}

#[test]
fn compare_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let res = reschain(&[
            "compare",
            "--config",
            &cfg,
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for file in [
        "loss_baseline_relative.csv",
        "loss_candidate_residual_chain.csv",
        "comparison.csv",
        "summary.json",
    ] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let summary = std::fs::read_to_string(dir.path().join("a/summary.json")).unwrap();
    for key in [
        "baseline_scheme",
        "candidate_final_val_abs_loss",
        "ratio",
        "config_hash",
    ] {
        assert!(summary.contains(key), "{key}");
    }
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let mut curves = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let res = reschain(&[
            "train",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success());
        curves.push(std::fs::read(out.join("loss_residual_chain.csv")).unwrap());
    }
    assert_ne!(curves[0], curves[1]);
}

#[test]
fn errors_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[sgd]\nepochs = 0\n").unwrap();
    let res = reschain(&["train", "--config", bad.to_str().unwrap()]);
    assert!(!res.status.success());
    let err = String::from_utf8(res.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: invalid argument"), "{err}");

    let res = reschain(&[
        "train",
        "--config",
        dir.path().join("missing.toml").to_str().unwrap(),
    ]);
    assert!(!res.status.success());

    let cfg = write_config(dir.path());
    let res = reschain(&[
        "evaluate",
        "--config",
        &cfg,
        "--checkpoint",
        "nope.json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    assert_eq!(String::from_utf8(res.stderr).unwrap().lines().count(), 1);

    let res = reschain(&["compare", "--baseline", "bogus"]);
    assert!(!res.status.success());
}

#[test]
fn shipped_example_config_loads() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/quick.toml");
    let cfg = reschain::harness::ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.dataset.mix.len(), 3);
    assert_eq!(cfg.sgd.epochs, 30);
}
