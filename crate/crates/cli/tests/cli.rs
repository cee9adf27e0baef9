use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_overlap-lab")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = lab(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn file_rows(p: &Path) -> Vec<Vec<String>> {
    data_rows(&std::fs::read_to_string(p).unwrap())
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn sample(dir: &Path, extra: &[&str]) {
    let mut args = vec!["sample", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn sample_writes_one_row_per_eigenvalue() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("g");
    sample(&d, &["--ensemble", "ginibre", "--n", "12", "--samples", "30", "--seed", "42"]);
    assert_eq!(file_rows(&d.join("eigen.csv")).len(), 12 * 30);
    // 30 samples of 12 x 12 are well under the pair budget: all 132 pairs kept
    assert_eq!(file_rows(&d.join("pairs.csv")).len(), 132 * 30);
    let m = manifest(&d);
    assert_eq!(m["command"], "sample");
    assert_eq!(m["seed"], 42);
    assert_eq!(m["params"]["pair_fraction"], 1.0);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    let first = std::fs::read_to_string(d.join("eigen.csv")).unwrap();
    assert!(first.starts_with(&format!("# manifest {}", m["config_hash"].as_str().unwrap())));
}

#[test]
fn manifest_records_parameters_and_rejections() {
    let t = tempfile::tempdir().unwrap();
    let e = t.path().join("e");
    sample(&e, &["--ensemble", "elliptic", "--sigma", "1", "--tau", "0.5", "--n", "8", "--samples", "4"]);
    assert_eq!(manifest(&e)["params"]["model"]["tau"], 0.5);
    let s = t.path().join("s");
    sample(&s, &["--ensemble", "spherical", "--n", "8", "--samples", "4"]);
    assert!(manifest(&s)["notes"]["rejections"].is_u64());
}

#[test]
fn reruns_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    for d in [&a, &b] {
        sample(d, &["--ensemble", "product", "--n", "10", "--samples", "20", "--seed", "7", "--pair-fraction", "0.5"]);
        ok(&["estimate", "o2", "--in", d.to_str().unwrap(), "--rbins", "2", "--phibins", "2"]);
    }
    for f in ["eigen.csv", "pairs.csv", "o2.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = t.path().join("c");
    sample(&c, &["--ensemble", "product", "--n", "10", "--samples", "20", "--seed", "8", "--pair-fraction", "0.5"]);
    assert_ne!(std::fs::read(a.join("eigen.csv")).unwrap(), std::fs::read(c.join("eigen.csv")).unwrap());
}

#[test]
fn estimate_tables_follow_the_requested_grids() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("g");
    sample(&d, &["--ensemble", "ginibre", "--n", "16", "--samples", "20"]);
    let ds = d.to_str().unwrap();
    ok(&["estimate", "o1", "--in", ds, "--rbins", "40"]);
    assert_eq!(file_rows(&d.join("o1.csv")).len(), 40);
    ok(&["estimate", "rho", "--in", ds, "--x-edges", "-1:1:5", "--y-edges", "-1:1:3"]);
    assert_eq!(file_rows(&d.join("rho.csv")).len(), 8);
    ok(&["estimate", "o2", "--in", ds, "--pair-binning", "radial", "--dmin", "auto"]);
    let text = std::fs::read_to_string(d.join("o2.csv")).unwrap();
    let meta = text.lines().find_map(|l| l.strip_prefix("# meta ")).unwrap();
    let meta: serde_json::Value = serde_json::from_str(meta).unwrap();
    assert_eq!(meta["dmin"].as_f64().unwrap(), 5.0 / 4.0);
}

#[test]
fn hprod_outside_the_disk_is_near_one_third() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("g");
    sample(&d, &["--ensemble", "ginibre", "--n", "60", "--samples", "40", "--pair-fraction", "none"]);
    ok(&["estimate", "hprod", "--in", d.to_str().unwrap(), "--z1", "2,0", "--z2", "2,0"]);
    let rows = file_rows(&d.join("hprod.csv"));
    assert_eq!(rows.len(), 1);
    let v: f64 = rows[0][4].parse().unwrap();
    assert!((v - 1.0 / 3.0).abs() < 0.02 / 3.0, "{v}");
    ok(&["compare", "--table", d.join("hprod.csv").to_str().unwrap(), "--rel", "0.02"]);
}

#[test]
fn compare_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("g");
    sample(&d, &["--ensemble", "ginibre", "--n", "40", "--samples", "40", "--pair-fraction", "none"]);
    let ds = d.to_str().unwrap();
    ok(&["estimate", "o1", "--in", ds, "--rbins", "6", "--rmax", "0.8"]);
    let o1 = d.join("o1.csv");
    let o1s = o1.to_str().unwrap();

    let same = ok(&["compare", "--table", o1s, "--against", o1s]);
    for r in data_rows(&same) {
        assert_eq!(r[r.len() - 3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[r.len() - 1], "pass");
    }
    assert_eq!(lab(&["compare", "--table", o1s, "--nsigma", "20"]).status.code(), Some(0));
    assert_eq!(lab(&["compare", "--table", o1s, "--nsigma", "0"]).status.code(), Some(2));

    ok(&["estimate", "o1", "--in", ds, "--rbins", "5", "--out", t.path().join("other.csv").to_str().unwrap()]);
    let o = lab(&["compare", "--table", o1s, "--against", t.path().join("other.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("incompatible grids"));
}

#[test]
fn errors_exit_with_one() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("g");
    assert_eq!(lab(&["sample", "--ensemble", "ginibre", "--n", "4"]).status.code(), Some(1));
    assert_eq!(
        lab(&["sample", "--ensemble", "induced", "--alpha", "-1", "--n", "4", "--samples", "2", "--out", d.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    sample(&d, &["--ensemble", "ginibre", "--n", "4", "--samples", "4"]);
    let eig = d.join("eigen.csv");
    let text = std::fs::read_to_string(&eig).unwrap().replace("o_kk", "okk");
    std::fs::write(&eig, text).unwrap();
    let o = lab(&["estimate", "o1", "--in", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema mismatch"));
}

#[test]
fn analytic_and_qsolver_routes_agree() {
    let a = data_rows(&ok(&["analytic", "o2", "--ensemble", "elliptic", "--tau", "0.5", "--z1", "0.3,0.1", "--z2", "-0.3,-0.2:0.2,-0.5:4"]));
    let q = data_rows(&ok(&["qsolve", "o2", "--ensemble", "elliptic", "--tau", "0.5", "--z1", "0.3,0.1", "--z2", "-0.3,-0.2:0.2,-0.5:4"]));
    assert_eq!(a.len(), 4);
    for (x, y) in a.iter().zip(&q) {
        let (u, v): (f64, f64) = (x[4].parse().unwrap(), y[4].parse().unwrap());
        assert!((u - v).abs() < 1e-6 * u.abs() + 1e-9, "{u} {v}");
    }
    let h = data_rows(&ok(&["analytic", "h", "--ensemble", "truncated", "--kappa", "1", "--z1", "2,0", "--z2", "2,0"]));
    let v: f64 = h[0][4].parse().unwrap();
    assert!((v - 1.0 / 3.5).abs() < 1e-12);
}

#[test]
fn analytic_special_values() {
    let e = data_rows(&ok(&["analytic", "exact-o2", "--n", "2", "--z1", "0,0", "--z2", "0,0"]));
    let v: f64 = e[0][4].parse().unwrap();
    assert!((v + 2.0 / std::f64::consts::PI.powi(2)).abs() < 1e-12);
    let p = data_rows(&ok(&["analytic", "phi", "--plane"]));
    let v: f64 = p[0][2].parse().unwrap();
    assert!((v + 1.0 / std::f64::consts::PI).abs() < 1e-8);
    let w = data_rows(&ok(&["qsolve", "wheel", "--ensemble", "ginibre", "--kmax", "2", "--lmax", "2"]));
    let c11: f64 = w[0][4].parse().unwrap();
    let c22: f64 = w[3][4].parse().unwrap();
    assert!((c11 - 1.0).abs() < 1e-10 && (c22 - 2.0).abs() < 1e-10);
    // a failing point is reported in its row, not as a crash
    let c = data_rows(&ok(&["analytic", "o2", "--ensemble", "ginibre", "--z1", "0.1,0", "--z2", "0.1,0"]));
    assert!(c[0][6].contains("coincide"), "{:?}", c[0]);
}

#[test]
fn pseudohermitian_cross_section() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("pt");
    sample(&d, &["--ensemble", "pseudohermitian", "--n", "60", "--samples", "300", "--seed", "3"]);
    let ds = d.to_str().unwrap();
    ok(&["estimate", "o2", "--in", ds, "--pair-binning", "real", "--x-edges", "1.425:1.525:2", "--y-edges", "0.5:8.5:9", "--dmin", "0"]);
    let o = lab(&[
        "compare", "--table", d.join("o2.csv").to_str().unwrap(), "--nsigma", "3", "--rel", "0.15", "--exclude-diagonal", "0.6",
        "--min-fraction", "0.8",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}
