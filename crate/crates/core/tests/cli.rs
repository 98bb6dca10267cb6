use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lossescape::blocks::{is_block, BlockSide};
use lossescape::cli::io::{load_params, save_params};
use lossescape::{ActivationKind, Architecture, NetworkParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lossescape"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// The default demo, generated once per test.
fn demo(dir: &Path) {
    let out = run(&["demo", "--out", "d", "--grid", "501"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn demo_passes_and_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path());
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("d/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["overall"]["pass"], true);
    assert_eq!(report["seed"], 0);

    let out = run(
        &["oracle", "--config", "d/config.json", "--out", "o"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let oracle: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/oracle.json")).unwrap())
            .unwrap();
    let end = report["end_loss"].as_f64().unwrap();
    assert!((end - oracle["achieved_risk"].as_f64().unwrap()).abs() <= 1e-6);

    let profile = fs::read_to_string(dir.path().join("d/profile.tsv")).unwrap();
    let segments = report["segments"].as_array().unwrap().len();
    assert_eq!(profile.lines().count(), 1 + segments * 501);
}

#[test]
fn verify_after_escape_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path());
    let out = run(
        &[
            "verify",
            "--config",
            "d/config.json",
            "--path",
            "d/path.json",
            "--grid",
            "501",
            "--out",
            "v",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let a = fs::read(dir.path().join("d/report.json")).unwrap();
    let b = fs::read(dir.path().join("v/report.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn corrupted_path_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path());
    let file = dir.path().join("d/path.json");
    let mut path: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    // bend the outer layer at the start of a constant segment
    let seg = &mut path["segments"][2];
    let outer = seg["start"].as_array().unwrap().len() - 1;
    let v = seg["start"][outer]["data"][0][0].as_f64().unwrap();
    seg["start"][outer]["data"][0][0] = (v + 1.0).into();
    fs::write(
        dir.path().join("bad.json"),
        serde_json::to_string(&path).unwrap(),
    )
    .unwrap();

    let out = run(
        &[
            "verify",
            "--config",
            "d/config.json",
            "--path",
            "bad.json",
            "--out",
            "v",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("v/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["overall"]["pass"], false);
    assert_eq!(report["overall"]["continuous"], false);
}

#[test]
fn width_guard_and_linear_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["demo", "--width", "6", "--out", "w6"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("8"), "{}", stderr(&out));

    let out = run(
        &[
            "demo", "--linear", "--depth", "2", "--width", "8", "--grid", "301", "--out", "lin",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(
        &[
            "demo",
            "--depth",
            "2",
            "--width",
            "8",
            "--activation",
            "identity",
            "--out",
            "gen",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    let out = run(
        &["demo", "--linear", "--activation", "relu", "--out", "bad"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_and_malformed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path());
    fs::remove_file(dir.path().join("d/y.csv")).unwrap();
    let out = run(
        &[
            "verify",
            "--config",
            "d/config.json",
            "--path",
            "d/path.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 1);

    fs::write(dir.path().join("d/y.csv"), "0.5, nope, 1\n").unwrap();
    let out = run(
        &[
            "verify",
            "--config",
            "d/config.json",
            "--path",
            "d/path.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 1);

    fs::write(dir.path().join("broken.json"), "{\"architecture\": [").unwrap();
    let out = run(
        &["verify", "--config", "broken.json", "--path", "d/path.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);

    let out = run(&["escape", "--bogus-flag"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn sparsify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path());
    let arch = Architecture::uniform(vec![2, 8, 1], ActivationKind::Relu).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let params = NetworkParams::random(&arch, &mut rng, 1.0);
    save_params(&dir.path().join("p.json"), &arch, &params).unwrap();

    for side in ["upper", "lower"] {
        let out = run(
            &[
                "sparsify",
                "--config",
                "d/config.json",
                "--params",
                "p.json",
                "--side",
                side,
                "--out",
                side,
            ],
            dir.path(),
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let (arch2, block) = load_params(&dir.path().join(side).join("block.json")).unwrap();
        assert_eq!(arch2, arch);
        let side: BlockSide = side.parse().unwrap();
        assert!(is_block(&block, 4, side));
        let summary: Value = serde_json::from_str(
            &fs::read_to_string(
                dir.path()
                    .join(format!("{side:?}").to_lowercase())
                    .join("summary.json"),
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(summary["s"], 4);
        assert!(summary["max_output_deviation"].as_f64().unwrap() <= 1e-10);
    }

    let narrow = Architecture::uniform(vec![2, 3, 1], ActivationKind::Relu).unwrap();
    let mut cfg: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("d/config.json")).unwrap())
            .unwrap();
    cfg["architecture"]["dims"][1] = 3.into();
    fs::write(dir.path().join("d/narrow.json"), cfg.to_string()).unwrap();
    save_params(
        &dir.path().join("n.json"),
        &narrow,
        &NetworkParams::random(&narrow, &mut rng, 1.0),
    )
    .unwrap();
    let out = run(
        &[
            "sparsify",
            "--config",
            "d/narrow.json",
            "--params",
            "n.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("p^1"));
}

#[test]
fn constrained_escape_with_brute_force_target() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("x.csv"), "1.0, -0.5, 2.0\n").unwrap();
    fs::write(d.join("y.csv"), "0.8, -0.3, 1.5\n").unwrap();
    fs::write(
        d.join("config.json"),
        r#"{
            "architecture": {"dims": [1, 8, 1], "activations": [{"kind": "identity"}]},
            "loss": "squared",
            "constraint": {"a_r": 0.6, "b_r": 0.6, "q": 2.0},
            "data": {"x": "x.csv", "y": "y.csv"},
            "seed": 9,
            "grid": 401,
            "brute_force": {"resolution": 0.02, "bound": 2.0},
            "output": "run"
        }"#,
    )
    .unwrap();
    let out = run(
        &[
            "escape",
            "--config",
            "config.json",
            "--target",
            "brute-force",
        ],
        d,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(d.join("run/report.json")).unwrap()).unwrap();
    assert_eq!(report["overall"]["feasible"], true);

    // outer-solve ignores the constraint and is refused
    let out = run(
        &[
            "escape",
            "--config",
            "config.json",
            "--target",
            "outer-solve",
        ],
        d,
    );
    assert_eq!(code(&out), 2);
}
