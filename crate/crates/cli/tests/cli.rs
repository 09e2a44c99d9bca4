use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use blockgs::testbed::{read_matrix_market, write_matrix_market_array, MatrixClass, MatrixClassParams};
use blockgs::{cond2, DenseMatrix};

fn blockgs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockgs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_identity(path: &Path, n: usize) {
    let f = fs::File::create(path).unwrap();
    write_matrix_market_array(f, &DenseMatrix::identity(n, n)).unwrap();
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|r| r.unwrap()).collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}

#[test]
fn sweep_all_variants_over_eight_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = blockgs(&["qr-sweep", "--class", "default", "--kappa", "1e1..1e15:8", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = rows(&out);
    assert_eq!(rows.len(), 48);
    assert_eq!(header(&out)[0], "class");
    // breakdowns are rows, not failures
    assert!(rows.iter().any(|r| r[9].starts_with("breakdown")));
    for r in &rows {
        let loo: f64 = r[6].parse().unwrap();
        assert!(loo >= 0.0);
        assert!(r[1].contains('e') && r[2].contains('e'));
    }
}

#[test]
fn single_one_sync_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.csv");
    let o = blockgs(&["qr-sweep", "--class", "default", "--variants", "IP_1S", "--kappa", "1e2", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let rows = rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][3], "IP_1S");
    assert!(rows[0][6].parse::<f64>().unwrap() <= 1e-13);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&blockgs(&["qr-sweep", "--kappa", "1e2"])), 1);
    assert_eq!(code(&blockgs(&["qr-sweep", "--class", "nope"])), 1);
    assert_eq!(code(&blockgs(&["qr-sweep", "--class", "default", "--kappa", "1e3..1e1:3"])), 1);
    assert_eq!(code(&blockgs(&["qr-sweep", "--class", "default", "--variants", "IP_2S", "--io-1", "CholQR"])), 1);
    assert_eq!(code(&blockgs(&["gmres"])), 1);
    assert_eq!(code(&blockgs(&["gmres", "--n", "50", "--variant", "PIP_IRO"])), 1);
    assert_eq!(code(&blockgs(&["matgen", "--m", "10"])), 1);
    assert_eq!(code(&blockgs(&["frobnicate"])), 1);
    assert_eq!(code(&blockgs(&["qr-sweep", "--class", "default", "--bogus", "1"])), 1);
    assert_eq!(code(&blockgs(&["--help"])), 0);
}

#[test]
fn config_file_unknown_keys_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("cfg.csv");
    fs::write(&cfg, format!("# sweep\nclass = glued\nvariants = IP_2S\nkappa = 1e3,1e5\noutput = {}\n", out.display())).unwrap();
    assert_eq!(code(&blockgs(&["qr-sweep", "--config", cfg.to_str().unwrap()])), 0);
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    assert_eq!(&r[0][0], "glued");

    // flags win
    assert_eq!(code(&blockgs(&["qr-sweep", "--config", cfg.to_str().unwrap(), "--class", "piled"])), 0);
    assert_eq!(&rows(&out)[0][0], "piled");

    fs::write(&cfg, "class = glued\ntol = 1e-8\n").unwrap();
    let o = blockgs(&["qr-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key 'tol'"));

    let missing = dir.path().join("missing.cfg");
    assert_eq!(code(&blockgs(&["qr-sweep", "--config", missing.to_str().unwrap()])), 2);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = blockgs(&["qr-sweep", "--class", "piled", "--kappa", "1e2..1e10:3", "--seed", "7", "--output", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let g1 = blockgs(&["gmres", "--n", "120", "--s", "3"]);
    let g2 = blockgs(&["gmres", "--n", "120", "--s", "3"]);
    assert_eq!(g1.stdout, g2.stdout);
    assert!(!g1.stdout.is_empty());
}

#[test]
fn matgen_round_trips_and_hits_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.mtx");
    let o = blockgs(&["matgen", "--class", "default", "--m", "60", "--p", "3", "--s", "4", "--kappa", "1e6", "--seed", "3", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let read = read_matrix_market(&out).unwrap().to_dense();
    let want = MatrixClassParams {
        class: MatrixClass::Default,
        m: 60,
        p: 3,
        s: 4,
        kappa_target: 1e6,
        rng_seed: 3,
    }
    .generate()
    .unwrap();
    assert_eq!(read, want);
    let k = cond2(&read).unwrap();
    assert!((k / 1e6 - 1.0).abs() < 1e-6, "{k:e}");
    assert_eq!(code(&blockgs(&["matgen", "--class", "default", "--output", "/nonexistent/dir/x.mtx"])), 2);
}

#[test]
fn gmres_on_identity_file_converges_in_one_block() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("eye.mtx");
    write_identity(&mtx, 30);
    let hist = dir.path().join("h.csv");
    let o = blockgs(&["gmres", "--matrix", mtx.to_str().unwrap(), "--s", "2", "--variant", "IP_2S", "--output", hist.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&hist);
    assert_eq!(r.len(), 1);
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.contains("status=converged"), "{summary}");
    assert!(summary.contains("iterations=2"));
}

#[test]
fn gmres_history_and_adaptive_summary() {
    let dir = tempfile::tempdir().unwrap();
    let hist = dir.path().join("h.csv");
    let o = blockgs(&["gmres", "--n", "400", "--seed", "42", "--s", "6", "--variant", "ADAPTIVE", "--max-iter", "120", "--output", hist.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&hist), ["variant", "s", "block", "iteration", "step", "backward_error", "ls_residual", "sync_total"]);
    let r = rows(&hist);
    let summary = String::from_utf8(o.stdout).unwrap();
    let d: usize = summary
        .split("switch_block=")
        .nth(1)
        .and_then(|t| t.trim().parse().ok())
        .expect("the switch fires at s=6");
    let one = r.iter().filter(|x| &x[4] == "1S").count();
    assert_eq!(one, d);
    assert!(summary.contains(&format!("({}+{})", 6 * d, 6 * (r.len() - d))), "{summary}");
    let last_syncs: usize = r.last().unwrap()[7].parse().unwrap();
    assert_eq!(last_syncs, d + 2 * (r.len() - d));
    assert!(summary.contains(&format!("syncs={last_syncs}")));
}

#[test]
fn halted_gmres_exits_three_with_history() {
    let dir = tempfile::tempdir().unwrap();
    let hist = dir.path().join("h.csv");
    let o = blockgs(&["gmres", "--n", "400", "--seed", "42", "--s", "6", "--variant", "IP_1S", "--max-iter", "120", "--output", hist.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("status=halted"));
    assert!(!rows(&hist).is_empty());
}

#[test]
fn newton_basis_needs_shifts() {
    assert_eq!(code(&blockgs(&["gmres", "--n", "100", "--basis", "newton"])), 1);
    assert_eq!(code(&blockgs(&["gmres", "--n", "100", "--shifts", "1,2"])), 1);
    let o = blockgs(&["gmres", "--n", "100", "--s", "3", "--variant", "IP_2S", "--basis", "newton", "--shifts", "1,5.5,10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
