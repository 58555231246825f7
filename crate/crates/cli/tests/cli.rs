use std::path::Path;
use std::process::{Command, Output};

use sfem::build_spectral_table;

fn sfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Rows of a CSV without its header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn diag(csv: &str, name: &str) -> String {
    rows(csv).into_iter().find(|r| r[0] == name).unwrap()[3].clone()
}

#[test]
fn spectrum_lists_every_eigenvalue_losslessly() {
    let out = sfem(&["spectrum", "-n", "2", "-k", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "kind,k,l,value");
    let lambdas: Vec<Vec<String>> = rows(&text).into_iter().filter(|r| r[0] == "lambda").collect();
    assert_eq!(lambdas.len(), 7);
    let table = build_spectral_table(2, 4).unwrap();
    for r in &lambdas {
        let (k, l): (usize, usize) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert_eq!(r[3].parse::<f64>().unwrap(), table.eigenvalue(k, l));
    }
    assert_eq!(diag(&text, "assumption_a"), "pass");
}

#[test]
fn spectrum_gap_diagnostics_for_cubics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = sfem(&["spectrum", "-n", "3", "-k", "5", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let gap: f64 = diag(&text, "min_gap_interior").parse().unwrap();
    assert!((gap - 8.0).abs() < 1e-12);
    let delta: f64 = diag(&text, "delta_interior").parse().unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((delta - (8.0 - 0.75 * pi2)).abs() < 1e-12);
    assert!((delta - 0.598).abs() < 1e-3);
}

#[test]
fn spectrum_rejects_order_zero() {
    let out = sfem(&["spectrum", "-n", "0", "-k", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("out of range"));
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn report_field(line: &str, key: &str) -> String {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {line}"))
        .to_string()
}

#[test]
fn solve_reproduces_the_quadratic_error_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        "format = 1\n[problem]\ncase = poisson2d\norders = 2\nelements = 16\n\
         [solver]\nalgorithm = a\nresidual = true\ncache = tables\n\
         [output]\nsolution = out/u.csv\nreport = report.txt\n",
    );
    let out = sfem(&["solve", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let line = stdout(&out);
    let error: f64 = report_field(&line, "error").parse().unwrap();
    assert!(error > 0.5e-4 && error < 2.0e-4, "{error}");
    let residual: f64 = report_field(&line, "residual").parse().unwrap();
    assert!(residual < 1e-12);
    assert_eq!(report_field(&line, "unknowns"), "961");
    let solution = std::fs::read_to_string(dir.path().join("out/u.csv")).unwrap();
    assert_eq!(rows(&solution).len(), 961);
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert_eq!(report.trim(), line.trim());
    assert!(dir.path().join("tables/n2_k16.sfem").exists());
}

#[test]
fn solve_with_algorithm_b_on_anisotropic_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "b.cfg",
        "format = 1\n[problem]\ncase = poisson2d\norders = 3, 2\nelements = 8, 12\nalpha = 4\n[solver]\nalgorithm = b\n",
    );
    let out = sfem(&["solve", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let line = stdout(&out);
    assert_eq!(report_field(&line, "algorithm"), "b");
    assert_eq!(report_field(&line, "alpha"), "4");
    let error: f64 = report_field(&line, "error").parse().unwrap();
    assert!(error < 1e-3);
}

#[test]
fn solve_rejects_algorithm_b_in_one_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "one.cfg",
        "format = 1\n[problem]\ncase = poisson1d\norders = 3\nelements = 8\n[solver]\nalgorithm = b\n",
    );
    let out = sfem(&["solve", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("one.cfg:7:"), "{}", stderr(&out));
}

#[test]
fn solve_reports_missing_and_malformed_configs() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.cfg");
    let out = sfem(&["solve", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.cfg: cannot read"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), "bad.cfg", "format = 1\n[problem]\ncase = poisson2d\norders two\n");
    let out = sfem(&["solve", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bad.cfg:4:"), "{}", stderr(&out));

    let cfg = write_config(
        dir.path(),
        "k1.cfg",
        "format = 1\n[problem]\ncase = poisson2d\norders = 2\nelements = 1\n",
    );
    let out = sfem(&["solve", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("K >= 2"), "{}", stderr(&out));
}

#[test]
fn solver_failures_exit_with_runtime_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("tables")).unwrap();
    std::fs::write(dir.path().join("tables/n2_k4.sfem"), "SFEM1 2 4 17\n0 1 2.5\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "c.cfg",
        "format = 1\n[problem]\ncase = poisson2d\norders = 2\nelements = 4\n[solver]\ncache = tables\n",
    );
    let out = sfem(&["solve", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("corrupt"), "{}", stderr(&out));
}

#[test]
fn convergence_table_has_fourth_order_ratios() {
    let out = sfem(&["convergence", "--case", "poisson2d", "--orders", "2", "--elements", "4,8,16,32"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "n,K,error,R_C");
    let rows = rows(&text);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][3], "");
    for r in &rows[2..] {
        let ratio: f64 = r[3].parse().unwrap();
        assert!((ratio - 16.0).abs() < 2.0, "{ratio}");
    }
    let e16: f64 = rows[2][2].parse().unwrap();
    assert!(e16 > 0.5e-4 && e16 < 2e-4);
}

#[test]
fn convergence_with_a_single_element_count_has_no_ratios() {
    let out = sfem(&["convergence", "--case", "poisson3d", "--orders", "1,2", "--elements", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[3].is_empty()));
    let out = sfem(&["convergence", "--case", "poisson4d", "--orders", "1", "--elements", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn quartic_three_dimensional_error() {
    let out = sfem(&["convergence", "--case", "poisson3d", "--orders", "4", "--elements", "32"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let e: f64 = rows(&stdout(&out))[0][2].parse().unwrap();
    assert!(e > 1.8e-7 && e < 7.2e-7, "{e}");
}

#[test]
fn bench_reports_medians_and_ratios() {
    let out = sfem(&["bench", "--dim", "2", "--orders", "2", "--elements", "8,16", "--reps", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "n,K,unknowns,reps,threads,median_seconds,ratio");
    let rows = rows(&text);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2], "225");
    assert_eq!(rows[0][3], "1");
    assert_eq!(rows[0][6], "");
    let t0: f64 = rows[0][5].parse().unwrap();
    let t1: f64 = rows[1][5].parse().unwrap();
    let ratio: f64 = rows[1][6].parse().unwrap();
    assert!((ratio - t1 / t0).abs() <= 1e-9 * ratio);
    let out = sfem(&["bench", "--dim", "1", "--orders", "2", "--elements", "8", "--algorithm", "b"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_passes_and_names_a_corrupted_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cache_arg = cache.to_str().unwrap();
    let out = sfem(&["verify", "quick", "--cache-dir", cache_arg]);
    assert!(out.status.success(), "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("PASS cache-integrity"));

    // A second run reads the cache back.
    let out = sfem(&["verify", "--cache-dir", cache_arg]);
    assert!(out.status.success());

    let victim = cache.join("n3_k8.sfem");
    let text = std::fs::read_to_string(&victim).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut fields: Vec<String> = lines[5].split_whitespace().map(str::to_string).collect();
    let lambda: f64 = fields[2].parse().unwrap();
    fields[2] = (lambda * 1.001).to_string();
    lines[5] = fields.join(" ");
    std::fs::write(&victim, lines.join("\n")).unwrap();

    let out = sfem(&["verify", "quick", "--cache-dir", cache_arg]);
    assert_eq!(out.status.code(), Some(2));
    let report = stdout(&out);
    assert!(report.contains("FAIL cache-integrity"), "{report}");
    assert!(report.contains("n3_k8.sfem"), "{report}");
    assert!(stderr(&out).contains("cache-integrity"));
}

#[test]
fn full_verification_covers_order_nine() {
    let out = sfem(&["verify", "full"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS assumption-a: n=2..9"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(sfem(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sfem(&["spectrum", "-n", "2"]).status.code(), Some(1));
    assert_eq!(
        sfem(&["--threads", "0", "spectrum", "-n", "2", "-k", "4"]).status.code(),
        Some(1)
    );
    let help = sfem(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("verify"));
}

#[test]
fn thread_cap_is_honoured() {
    let out = sfem(&["--threads", "1", "bench", "--dim", "2", "--orders", "1", "--elements", "4", "--reps", "1"]);
    assert!(out.status.success());
    assert_eq!(rows(&stdout(&out))[0][4], "1");
}
