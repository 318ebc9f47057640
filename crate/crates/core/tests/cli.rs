use std::path::Path;
use std::process::{Command, Output};

use tokescale::law1::LawOneParams;
use tokescale::law2::LawTwoParams;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tokescale"))
        .args(args)
        .current_dir(dir)
        .env("TOKESCALE_MAX_STARTS", "300")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn write_tagged<T: serde::Serialize>(path: &Path, kind: &str, value: &T) {
    let mut v = serde_json::to_value(value).unwrap();
    v["kind"] = kind.into();
    std::fs::write(path, serde_json::to_vec(&v).unwrap()).unwrap();
}

fn published_laws(dir: &Path) {
    write_tagged(&dir.join("law1.json"), "law1", &LawOneParams::latent_published());
    write_tagged(&dir.join("law2.json"), "law2", &LawTwoParams::latent_published());
}

#[test]
fn synth_fit_plan_round_trip_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["synth", "--seed", "7", "--out", "runs.csv"])), 0);
    assert_eq!(code(&run(d, &["fit-isoflop", "--records", "runs.csv", "--out", "iso.json", "--plot", "iso_plot.json"])), 0);
    let out = run(d, &["fit-laws", "--records", "iso.json", "--stage", "1", "--out", "law1.json", "--plot", "lines.json"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("alpha") && stdout.contains("beta"));
    let law1 = json(&d.join("law1.json"));
    assert!((law1["alpha"].as_f64().unwrap() - 0.465).abs() < 0.01);
    assert!((law1["beta"].as_f64().unwrap() - 0.471).abs() < 0.01);

    // stage 1 also runs straight from the records
    assert_eq!(code(&run(d, &["fit-laws", "--records", "runs.csv", "--stage", "1", "--out", "law1b.json"])), 0);
    assert!((json(&d.join("law1b.json"))["alpha"].as_f64().unwrap() - 0.465).abs() < 0.01);

    assert_eq!(code(&run(d, &["fit-laws", "--records", "iso.json", "--stage", "2", "--out", "law2.json"])), 0);
    let law2 = json(&d.join("law2.json"));
    assert_eq!(law2["residual_variant"], "compute-t");
    assert!((law2["gamma"].as_f64().unwrap() + 0.206).abs() < 0.01);

    assert_eq!(code(&run(d, &["plan", "--law1", "law1.json", "--law2", "law2.json", "--budget", "1e20", "--out", "plan.json"])), 0);
    let plan = json(&d.join("plan.json"));
    assert_eq!(plan["kind"], "plan");
    assert!(((plan["recomputed_budget"].as_f64().unwrap() - 1e20) / 1e20).abs() < 1e-12);

    let check = run(
        d,
        &["schema-check", "runs.csv", "iso.json", "law1.json", "law2.json", "plan.json", "iso_plot.json", "iso_plot.csv", "lines.json"],
    );
    assert_eq!(code(&check), 0, "{}", String::from_utf8_lossy(&check.stdout));
}

#[test]
fn synth_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (name, seed) in [("a.csv", "3"), ("b.csv", "3"), ("c.csv", "4")] {
        assert_eq!(code(&run(d, &["synth", "--seed", seed, "--noise", "0.02", "--out", name])), 0);
    }
    let read = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn missing_budget_names_available_ones() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["synth", "--budgets", "1e19,1e20", "--out", "runs.csv"]);
    let out = run(d, &["fit-isoflop", "--records", "runs.csv", "--budget", "3e20", "--out", "iso.json"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("1.000e19") && err.contains("1.000e20"), "{err}");
    assert!(!d.join("iso.json").exists());
}

#[test]
fn single_budget_stage_two_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["synth", "--budgets", "1e20", "--out", "runs.csv"]);
    assert_eq!(code(&run(d, &["fit-laws", "--records", "runs.csv", "--stage", "2", "--out", "law2.json"])), 2);
    assert_eq!(code(&run(d, &["fit-laws", "--records", "runs.csv", "--stage", "1", "--out", "law1.json"])), 2);
}

#[test]
fn three_d_mode_fits_each_budget() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["synth", "--budgets", "1e19,1e20", "--out", "runs.csv"]);
    let out = run(d, &["fit-isoflop", "--records", "runs.csv", "--mode", "3d", "--budget", "1e20", "--out", "iso3.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fits = json(&d.join("iso3.json"));
    assert_eq!(fits["mode"], "3d");
    assert_eq!(fits["fits"].as_array().unwrap().len(), 1);
    assert_eq!(fits["fits"][0]["language"], tokescale::records::DEFAULT_LANGUAGE);
}

#[test]
fn plan_against_published_laws() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    published_laws(d);
    let base = ["plan", "--law1", "law1.json", "--law2", "law2.json", "--budget", "1e20"];
    assert_eq!(code(&run(d, &[&base[..], &["--out", "opt.json"]].concat())), 0);
    assert_eq!(code(&run(d, &[&base[..], &["--compression", "12", "--out", "t12.json"]].concat())), 0);
    let (opt, t12) = (json(&d.join("opt.json")), json(&d.join("t12.json")));
    let t = opt["compression"].as_f64().unwrap();
    assert!((t - 3.63).abs() < 0.05);
    let rho = opt["opt_bpp"].as_f64().unwrap();
    assert!((60.0..=68.0).contains(&rho), "rho* {rho}");
    let n = opt["opt_params"].as_f64().unwrap();
    assert!((5e8..2e9).contains(&n));
    let gap = t12["predicted_loss"].as_f64().unwrap() - opt["predicted_loss"].as_f64().unwrap();
    assert!((gap - 0.046).abs() < 0.002, "gap {gap}");

    let tiny = run(d, &["plan", "--law1", "law1.json", "--law2", "law2.json", "--budget", "1e12"]);
    assert_eq!(code(&tiny), 2);
    assert!(String::from_utf8_lossy(&tiny.stderr).contains("smallest recipe"));
    assert_eq!(code(&run(d, &["plan", "--law1", "law1.json", "--law2", "law2.json", "--budget", "1e27"])), 2);
    assert_eq!(code(&run(d, &["plan", "--law1", "law2.json", "--law2", "law2.json", "--budget", "1e20"])), 2);
}

#[test]
fn recipe_flops_and_parity_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(d, &["recipe", "--family", "latent", "--scale", "5"]);
    assert_eq!(code(&out), 0);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["kind"], "recipe");
    assert_eq!((r["global_dim"].as_u64(), r["local_layers"].as_u64(), r["crossattn_k"].as_u64()), (Some(640), Some(2), Some(1)));

    let out = run(d, &["flops", "--family", "subword", "--scale", "5", "--vocab", "148000", "--compression", "1.01"]);
    let f: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((f["breakdown"]["global_share"].as_f64().unwrap() - 0.34).abs() < 0.08);

    std::fs::write(
        d.join("toy.tsv"),
        "1\teng\tabcd\n1\tdeu\tabcdefgh\n2\teng\txy\n2\tdeu\twxyz\n",
    )
    .unwrap();
    let out = run(d, &["parity", "--corpus", "toy.tsv", "--inflate", "eng", "--out", "parity.json"]);
    assert_eq!(code(&out), 0);
    let p = json(&d.join("parity.json"));
    assert_eq!(p["parity"]["entries"]["deu"], 2.0);
    assert_eq!(p["parity"]["entries"]["eng-x2"], 2.0);
    assert_eq!(p["parity"]["entries"]["eng"], 1.0);

    std::fs::write(d.join("bad.tsv"), "1\teng\tabcd\n1\tdeu\tabcdefgh\n2\teng\txy\n").unwrap();
    assert_eq!(code(&run(d, &["parity", "--corpus", "bad.tsv"])), 2);
}

#[test]
fn schema_check_rejects_foreign_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("x.json"), r#"{"kind":"law1","alpha":"nope"}"#).unwrap();
    std::fs::write(d.join("y.json"), r#"{"alpha":1}"#).unwrap();
    assert_eq!(code(&run(d, &["schema-check", "x.json"])), 2);
    assert_eq!(code(&run(d, &["schema-check", "y.json"])), 2);
}
