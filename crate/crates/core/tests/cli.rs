//! End-to-end runs of the `nodal-lab` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nodal_lab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nodal-lab"))
        .args(args)
        .args(["--out", out.to_str().unwrap()])
        .env_remove("NODAL_LAB_THREADS")
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_then_report_gives_three_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = nodal_lab(
        &["verify", "--mode", "k=2,3", "--identity", "nodal,weighted,level", "--level", "0.05", "--f", "mode:k=1,1", "--resolution", "64"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS ")).count(), 3);

    let o = nodal_lab(&["report"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let summary = json(&dir.path().join("summary.json"));
    let rows = summary["summary"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["passed"] == true && r["section"] == "verify"));
    assert_eq!(summary["reports"].as_array().unwrap().len(), 3);
}

#[test]
fn scan_and_verify_merge_into_one_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nodal_lab(&["scan", "--family", "torus-axis", "--range", "1:8"], dir.path()).status.code(), Some(0));
    assert_eq!(nodal_lab(&["verify", "--mode", "k=3", "--resolution", "32"], dir.path()).status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("scan_torus-axis.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    assert!(csv.starts_with("family,index,label,resolution,lambda,l1,l2,"));

    assert_eq!(nodal_lab(&["report"], dir.path()).status.code(), Some(0));
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["sources"], serde_json::json!(["scan_torus-axis.json", "verify.json"]));
    assert_eq!(summary["tables"].as_array().unwrap().len(), 1);
    assert_eq!(summary["fits"].as_array().unwrap().len(), 2);
    assert_eq!(summary["reports"].as_array().unwrap().len(), 1);

    // log-log series of the nodal-measure fit: slope one on the torus axis family
    let dat = std::fs::read_to_string(dir.path().join("torus-axis_nodal_measure_vs_lambda.dat")).unwrap();
    let pts: Vec<(f64, f64)> = dat
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert_eq!(pts.len(), 8);
    let slope = (pts[7].1 - pts[0].1) / (pts[7].0 - pts[0].0);
    assert!((slope - 1.0).abs() < 1e-12, "{slope}");
}

#[test]
fn missed_band_exits_with_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = nodal_lab(&["scan", "--family", "torus-axis", "--range", "1:8", "--fit", "nodal_measure:lambda=2/0.05"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let doc = json(&dir.path().join("scan_torus-axis.json"));
    assert_eq!(doc["fits"][0]["passed"], false);
}

#[test]
fn extract_writes_meshes_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let o = nodal_lab(&["extract", "--mode", "zonal:3", "--level", "0,0.2", "--resolution", "48"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("extract.json"));
    let meshes = doc["meshes"].as_array().unwrap();
    assert_eq!(meshes.len(), 2);
    for (i, m) in meshes.iter().enumerate() {
        assert!(m["measure"].as_f64().unwrap() > 0.0);
        assert!(m["vertex_count"].as_u64().unwrap() > 0);
        assert!(dir.path().join(format!("mesh_{i}.txt")).exists());
        assert!(dir.path().join(format!("mesh_{i}.json")).exists());
    }
    // three nodal circles of P₃: the equator and two latitude rings
    let nodal = meshes[0]["measure"].as_f64().unwrap();
    let roots = [0.0, (3.0f64 / 5.0).sqrt(), -(3.0f64 / 5.0).sqrt()];
    let oracle: f64 = roots.iter().map(|x: &f64| std::f64::consts::TAU * (1.0 - x * x).sqrt()).sum();
    assert!((nodal - oracle).abs() / oracle < 1e-3, "{nodal} vs {oracle}");
}

#[test]
fn reruns_are_byte_identical() {
    // the output directory is part of the embedded config, so reuse it
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "--mode", "sectoral:3", "--identity", "nodal,corollary", "--level", "0.1", "--resolution", "48"];
    let snapshot = |threads: &str| {
        let mut a = args.to_vec();
        a.extend(["--threads", threads]);
        assert_eq!(nodal_lab(&a, dir.path()).status.code(), Some(0));
        ["verify.json", "verify.csv"].map(|f| std::fs::read(dir.path().join(f)).unwrap())
    };
    let first = snapshot("1");
    assert_eq!(first, snapshot("3"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["verify", "--mode", "k=0,0"][..],
        &["verify", "--identity", "nonsense"],
        &["scan", "--range", "9:1"],
        &["report"],
        &["bogus"],
    ] {
        let o = nodal_lab(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}
