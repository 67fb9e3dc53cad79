use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fecvx::femspace::{build_test_basis, TestDegree};
use fecvx::problems::monopolist;
use fecvx_sdp::{sdpa, solve, SolverConfig};

fn fecvx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fecvx")).args(args).output().unwrap()
}

fn table(dir: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(dir.join("iterations.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("iteration,elements,dofs,wall_seconds,l2_error,linf_error")
    );
    lines.map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn six_digits(cell: &str) -> bool {
    let (mantissa, _) = cell.split_once('e').unwrap();
    mantissa.trim_start_matches('-').replace('.', "").len() == 6
}

#[test]
fn monopolist_uniform_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = fecvx(&[
        "run",
        "--problem",
        "monopolist",
        "--iters",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = table(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][..3], ["1", "16", "41"]);
    assert_eq!(rows[1][..3], ["2", "64", "145"]);
    for row in &rows {
        assert!(row[3..].iter().all(|c| six_digits(c)), "{row:?}");
    }
    let l2: f64 = rows[0][4].parse().unwrap();
    assert!((l2 - 0.0914571).abs() < 1e-4, "{l2}");
    for f in [
        "iter_01.vtk",
        "iter_02.vtk",
        "solver_01.json",
        "solver_02.json",
        "mesh.txt",
        "solution.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(!out.join(".fecvx.lock").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["records"].as_array().unwrap().len(), 2);
    assert!(report["error"].is_null());
    assert_eq!(report["records"][0]["status"], "optimal");

    // the stored solution passes the convexity check
    let o = fecvx(&[
        "check-convexity",
        "--mesh",
        out.join("mesh.txt").to_str().unwrap(),
        "--dofs",
        out.join("solution.csv").to_str().unwrap(),
        "--tol",
        "1e-6",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn negated_solution_is_not_fe_convex() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(
        fecvx(&["run", "--problem", "monopolist", "--out", out.to_str().unwrap()])
            .status
            .success()
    );
    let text = fs::read_to_string(out.join("solution.csv")).unwrap();
    let flipped: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                return l.to_string();
            }
            let mut c: Vec<String> = l.split(',').map(str::to_owned).collect();
            let v: f64 = c[3].parse().unwrap();
            c[3] = format!("{:e}", -v);
            c.join(",")
        })
        .collect();
    let neg = dir.path().join("neg.csv");
    fs::write(&neg, flipped.join("\n")).unwrap();
    let o = fecvx(&[
        "check-convexity",
        "--mesh",
        out.join("mesh.txt").to_str().unwrap(),
        "--dofs",
        neg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn dirichlet_run_leaves_error_cells_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = fecvx(&[
        "adapt",
        "--problem",
        "dirichlet",
        "--iters",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = table(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1], "32");
    assert!(rows[1][1].parse::<usize>().unwrap() > 32);
    for row in &rows {
        assert_eq!(row.len(), 6);
        assert!(row[4].is_empty() && row[5].is_empty());
    }
}

#[test]
fn projection_p1_uniform_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = dir.path().join("p1.cfg");
    fs::write(
        &cfg,
        "problem = projection-l2\npattern = crisscross\ndegree = 1\nmode = uniform\niters = 3\n",
    )
    .unwrap();
    // flags override the file
    let o = fecvx(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--iters",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = table(&out);
    let elems: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(elems, ["256", "1024"]);
    let (e0, e1): (f64, f64) = (rows[0][4].parse().unwrap(), rows[1][4].parse().unwrap());
    assert!(e1 >= 0.5 * e0, "{e0} {e1}");
}

#[test]
fn invalid_configs_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let empty = dir.path().join("empty.cfg");
    fs::write(&empty, "").unwrap();
    let junk = dir.path().join("junk.cfg");
    fs::write(&junk, "degree = 7\n").unwrap();
    let o = out.to_str().unwrap();
    for args in [
        vec!["run", "--config", empty.to_str().unwrap(), "--out", o],
        vec!["run", "--config", junk.to_str().unwrap(), "--out", o],
        vec!["run", "--degree", "3", "--out", o],
        vec!["run", "--iters", "0", "--out", o],
        vec!["run", "--problem", "unknown", "--out", o],
        vec!["export-sdp", "--degree", "5", "--out", o],
    ] {
        let r = fecvx(&args);
        assert!(!r.status.success(), "{args:?}");
        assert!(!String::from_utf8_lossy(&r.stderr).is_empty());
    }
    assert!(!out.exists());
}

#[test]
fn locked_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(".fecvx.lock"), "1\n").unwrap();
    let o = fecvx(&["run", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("locked"));
    assert!(!dir.path().join("iterations.csv").exists());
}

#[test]
fn solver_failure_keeps_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = fecvx(&[
        "run",
        "--iters",
        "2",
        "--max-solver-iterations",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("MaxIter"));
    assert_eq!(table(&out).len(), 1);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["error"].is_string());
    assert_eq!(report["records"][0]["status"], "max_iter");
    assert!(!out.join(".fecvx.lock").exists());
}

#[test]
fn export_sdp_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("mono.dat-s");
    let o = fecvx(&[
        "export-sdp",
        "--problem",
        "monopolist",
        "--output",
        file.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&file).unwrap();

    // one PSD block per test function plus the diagonal block of linear rows
    let p = monopolist(0.0, None).unwrap();
    let mesh = p.domain.build().unwrap();
    let tests = build_test_basis(&mesh, TestDegree::Quadratic, true);
    let header: Vec<&str> = text.lines().filter(|l| !l.starts_with(['"', '*'])).take(3).collect();
    assert_eq!(header[1].trim().parse::<usize>().unwrap(), tests.len() + 1);

    let q = sdpa::from_str(&text).unwrap();
    assert_eq!(q.blocks.len(), tests.len());
    assert_eq!(sdpa::to_string(&q).unwrap(), text);

    let direct = solve(&q, &SolverConfig::default()).unwrap();
    let o = fecvx(&[
        "solve",
        file.to_str().unwrap(),
        "--report",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let obj = r["primal_objective"].as_f64().unwrap();
    assert!((obj - direct.primal_objective).abs() <= 1e-9 * (1.0 + obj.abs()));
}

#[test]
fn toy_problem_file_solves() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("toy.dat-s");
    // min t  s.t. [[1, 1], [1, t]] ⪰ 0
    fs::write(&file, "1\n1\n2\n1.0\n0 1 1 1 -1.0\n0 1 1 2 -1.0\n1 1 2 2 1.0\n").unwrap();
    let o = fecvx(&["solve", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("status: Optimal"));
    assert!(stdout.contains("primal objective: 1.00000e0"), "{stdout}");
}
