use mlab_cli::config::{ExperimentConfig, SolverConfig};
use mlab_cli::run::scene;
use mlab_cli::plot::render;
use mlab_core::extremal::{diagnostics, integrate_extremal};
use mlab_core::{ExtremalParams, SignedLog, StructureParams};
use std::process::Command;

fn mlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mlab"))
}

fn quick_config(dir: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::fixture(dir);
    c.solver = SolverConfig {
        seed_grid: [2, 2, 1],
        ..SolverConfig::default()
    };
    c
}

#[test]
fn fixture_run_is_byte_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let c = quick_config(&d.path().join("out"));
    let files = ["report.json", "solutions.csv", "failures.json"];
    let first = mlab_cli::run(&c).unwrap();
    let bytes: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(c.output_dir.join(f)).unwrap()).collect();
    let second = mlab_cli::run(&c).unwrap();
    assert_eq!(first, second);
    for (f, b) in files.iter().zip(&bytes) {
        assert_eq!(&std::fs::read(c.output_dir.join(f)).unwrap(), b, "{f} differs");
    }
    let text = String::from_utf8(bytes[0].clone()).unwrap();
    assert!(text.contains(&c.hash()));
    assert_eq!(first.stages.len(), 2);
    assert!(first.stages.iter().all(|s| s.shooting.is_some() && s.appendix.is_some()));
}

#[test]
fn empty_seed_grid_skips_shooting() {
    let d = tempfile::tempdir().unwrap();
    let mut c = quick_config(&d.path().join("out"));
    c.solver.seed_grid = [0, 4, 2];
    c.epsilon_list = vec![0.2];
    let r = mlab_cli::run(&c).unwrap();
    assert!(r.stages[0].shooting.is_none());
    assert!(r.stages[0].appendix.is_some());
    assert_eq!(r.exit_code(), 0, "{:?}", r.failures);
}

#[test]
fn even_m_exits_with_config_error() {
    let out = mlab().args(["candidate", "--m", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m is odd"));
}

#[test]
fn bad_toml_exits_with_config_error() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("cfg.toml");
    std::fs::write(&p, "m = 5\nepsilon_list = []\n").unwrap();
    let out = mlab().args(["sweep", "--config"]).arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn candidate_prints_the_length() {
    let out = mlab().args(["candidate", "--m", "5", "--epsilon", "0.1"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let l = v["candidate"]["length"]["L"].as_f64().unwrap();
    let eps: f64 = 0.1;
    // L >= |A_eps| (the chord) and is within the two-term expansion.
    assert!(l > eps.hypot(eps.powf(2.5)));
    assert!((l - (eps + 6.25 * eps.powi(4) / 8.0)).abs() < eps.powi(4));
}

#[test]
fn verify_passes_at_the_fixture() {
    let out = mlab().args(["verify", "--m", "5", "--epsilon", "0.1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn appendix_writes_its_report() {
    let d = tempfile::tempdir().unwrap();
    let out = mlab()
        .args(["appendix", "--m", "5", "--epsilon", "0.1", "--out"])
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.path().join("appendix.json")).unwrap()).unwrap();
    assert_eq!(v["chord_arc"]["violations"], 0);
    assert_eq!(v["tangency"].as_array().unwrap().len(), 4);
}

#[test]
fn plot_writes_svg() {
    let d = tempfile::tempdir().unwrap();
    let path = d.path().join("nu.svg");
    let out = mlab()
        .args(["plot", "--m", "5", "--epsilon", "0.1", "--rho", "1e-10", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.contains("<svg") && svg.contains("rho^(1/2)"));
}

#[test]
fn loop_markers_match_the_diagnostics() {
    let p = StructureParams::new(5, 0.2).unwrap();
    let a = p.a_eps();
    let lam0 = -13.0 * 0.2f64.ln();
    // Scan a few strengths and keep trajectories with different loop counts.
    let mut seen = 0;
    for dl in [-12.0, -9.0, -6.0, -4.0] {
        let ep = ExtremalParams::new(a.x2.atan2(a.x1) - 0.1, SignedLog::new(-1, lam0 + dl), 1.02 * a.norm()).unwrap();
        let Ok(tr) = integrate_extremal(&p, &ep, 1e-10) else { continue };
        let d = diagnostics(&p, &tr).unwrap();
        let svg = render(&scene(&p, None, &[(&tr, &d)]).unwrap()).unwrap();
        assert_eq!(svg.matches(r#"class="loop""#).count(), d.loops.len());
        seen += 1;
    }
    assert!(seen > 0);
}
