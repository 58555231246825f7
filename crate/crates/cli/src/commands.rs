use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use sfem::poisson::PoissonSolver;
use sfem::{verify_assumption_a, Algorithm, DoubleDouble, ManufacturedCase, ProblemSpec};

use crate::{config, tables, CliError};

fn write_output(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
            }
            std::fs::write(path, text).map_err(CliError::io(format!("writing {}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(CliError::io("writing to stdout")),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn check_order(n: usize) -> Result<(), CliError> {
    if (1..=9).contains(&n) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("order n={n} out of range 1..=9")))
    }
}

fn check_elements(k: usize) -> Result<(), CliError> {
    if k >= 2 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("element count K={k} too small (need K >= 2)")))
    }
}

/// CSV `kind,k,l,value`: eigenvalue rows (`k = 0` are the bubble modes), then
/// the element spectrum diagnostics with empty `k, l`.
pub fn spectrum(n: usize, k: usize, extended: bool, output: Option<&Path>, cache: Option<&Path>) -> Result<(), CliError> {
    check_order(n)?;
    check_elements(k)?;
    let (table, _) = tables::obtain(n, k, cache)?;
    let report = if extended {
        verify_assumption_a::<DoubleDouble>(n, 0.0)
    } else {
        verify_assumption_a::<f64>(n, 0.0)
    }
    .map_err(CliError::solver(format!("element spectra of order {n}")))?;

    let mut csv = String::from("kind,k,l,value\n");
    for kk in 0..k {
        let ls = if kk == 0 { n - 1 } else { n };
        for l in 1..=ls {
            writeln!(csv, "lambda,{kk},{l},{}", table.eigenvalue(kk, l)).unwrap();
        }
    }
    let mut diag = |name: &str, value: String| writeln!(csv, "{name},,,{value}").unwrap();
    diag("min_gap_full", format!("{:e}", report.min_gap_full));
    diag("delta_full", format!("{:e}", report.delta_full));
    diag("min_gap_interior", opt(report.min_gap_interior));
    diag("delta_interior", opt(report.delta_interior));
    diag("min_cross_distance", opt(report.min_cross_distance));
    diag("cond_a_interior", opt(report.cond_a_interior));
    diag("cond_c_interior", opt(report.cond_c_interior));
    diag("resolution", format!("{:e}", report.resolution));
    diag("precision", if extended { "double-double" } else { "double" }.to_string());
    diag("assumption_a", if report.passed { "pass" } else { "fail" }.to_string());
    write_output(output, &csv)
}

/// The manufactured case with per-axis orders and element counts.
fn case_spec(case: &ManufacturedCase, orders: &[usize], elements: &[usize]) -> ProblemSpec {
    let mut spec = case.spec(orders[0], elements[0]);
    spec.orders = orders.to_vec();
    spec.elements = elements.to_vec();
    spec
}

fn make_solver(spec: ProblemSpec, cache: Option<&Path>) -> Result<PoissonSolver, CliError> {
    let tables = tables::for_axes(&spec.orders, &spec.elements, cache)?;
    PoissonSolver::with_tables(spec, tables).map_err(CliError::solver("setting up the solver"))
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x")
}

fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::A => "a",
        Algorithm::B => "b",
    }
}

pub fn solve(path: &Path, cache: Option<&Path>) -> Result<(), CliError> {
    let cfg = config::load(path)?;
    let spec = case_spec(&cfg.case, &cfg.orders, &cfg.elements);
    spec.validate().map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        line: None,
        message: e.to_string(),
    })?;
    let cache = cfg.cache.as_deref().or(cache);
    let solver = make_solver(spec, cache)?;
    let report = solver
        .solve(cfg.algorithm)
        .map_err(CliError::solver(format!("solving {}", cfg.case.name)))?;
    let residual = if cfg.residual {
        let load = solver.load().map_err(CliError::solver("forming the load"))?;
        Some(
            solver
                .relative_residual(&report.solution, &load)
                .map_err(CliError::solver("computing the residual"))?,
        )
    } else {
        None
    };
    if let Some(out) = &cfg.solution {
        let mut buf = Vec::new();
        report
            .solution
            .write_csv(&solver.spec().lengths, &mut buf)
            .map_err(CliError::io("formatting the solution"))?;
        write_output(Some(out), std::str::from_utf8(&buf).expect("CSV is ASCII"))?;
    }
    let mut line = format!(
        "case={} orders={} elements={} alpha={} algorithm={} unknowns={}",
        cfg.case.name,
        join(&cfg.orders),
        join(&cfg.elements),
        cfg.case.alpha,
        algorithm_name(cfg.algorithm),
        report.solution.unknowns()
    );
    if let Some(e) = report.error {
        write!(line, " error={e:e}").unwrap();
    }
    if let Some(r) = residual {
        write!(line, " residual={r:e}").unwrap();
    }
    write!(
        line,
        " solve_seconds={:.6} load_seconds={:.6}",
        report.solve_time.as_secs_f64(),
        report.load_time.as_secs_f64()
    )
    .unwrap();
    println!("{line}");
    if let Some(out) = &cfg.report {
        write_output(Some(out), &format!("{line}\n"))?;
    }
    Ok(())
}

fn builtin_case(name: &str) -> Result<ManufacturedCase, CliError> {
    ManufacturedCase::by_name(name)
        .ok_or_else(|| CliError::Usage(format!("unknown case {name:?} (expected poisson1d, poisson2d or poisson3d)")))
}

fn check_algorithm(algorithm: Algorithm, dim: usize) -> Result<(), CliError> {
    if algorithm == Algorithm::B && dim < 2 {
        Err(CliError::Usage("algorithm b needs at least two dimensions".into()))
    } else {
        Ok(())
    }
}

/// CSV `n,K,error,R_C` with `R_C = error(K/2) / error(K)`, left empty when
/// `K/2` is not the previous entry of the list.
pub fn convergence(
    case: &str,
    orders: &[usize],
    elements: &[usize],
    algorithm: Algorithm,
    output: Option<&Path>,
    cache: Option<&Path>,
) -> Result<(), CliError> {
    let case = builtin_case(case)?;
    check_algorithm(algorithm, case.dim())?;
    orders.iter().try_for_each(|&n| check_order(n))?;
    elements.iter().try_for_each(|&k| check_elements(k))?;
    let dim = case.dim();
    let mut csv = String::from("n,K,error,R_C\n");
    for &n in orders {
        let mut prev: Option<(usize, f64)> = None;
        for &k in elements {
            let solver = make_solver(case_spec(&case, &vec![n; dim], &vec![k; dim]), cache)?;
            let report = solver
                .solve(algorithm)
                .map_err(CliError::solver(format!("{} n={n} K={k}", case.name)))?;
            let error = report.error.expect("manufactured cases know their solution");
            let ratio = match prev {
                Some((pk, pe)) if 2 * pk == k => (pe / error).to_string(),
                _ => String::new(),
            };
            writeln!(csv, "{n},{k},{error:e},{ratio}").unwrap();
            prev = Some((k, error));
        }
    }
    write_output(output, &csv)
}

pub struct BenchPlan {
    pub dim: usize,
    pub orders: Vec<usize>,
    pub elements: Vec<usize>,
    pub algorithm: Algorithm,
    pub reps: usize,
    pub include_load: bool,
}

/// CSV `n,K,unknowns,reps,threads,median_seconds,ratio`; the ratio is to the
/// previous `K` of the list. Table construction is never timed.
pub fn bench(plan: &BenchPlan, output: Option<&Path>, cache: Option<&Path>) -> Result<(), CliError> {
    let case = match plan.dim {
        1 => ManufacturedCase::poisson1d(),
        2 => ManufacturedCase::poisson2d(),
        3 => ManufacturedCase::poisson3d(),
        d => return Err(CliError::Usage(format!("dimension {d} not supported (1, 2 or 3)"))),
    };
    if plan.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    check_algorithm(plan.algorithm, plan.dim)?;
    plan.orders.iter().try_for_each(|&n| check_order(n))?;
    plan.elements.iter().try_for_each(|&k| check_elements(k))?;
    let threads = rayon::current_num_threads();
    let mut csv = String::from("n,K,unknowns,reps,threads,median_seconds,ratio\n");
    for &n in &plan.orders {
        let mut prev: Option<f64> = None;
        for &k in &plan.elements {
            let solver = make_solver(case_spec(&case, &vec![n; plan.dim], &vec![k; plan.dim]), cache)?;
            let context = || format!("bench n={n} K={k}");
            let load = solver.load().map_err(CliError::solver(context()))?;
            let mut times = Vec::with_capacity(plan.reps);
            let mut unknowns = 0;
            for _ in 0..plan.reps {
                let start = Instant::now();
                let v = if plan.include_load {
                    let load = solver.load().map_err(CliError::solver(context()))?;
                    solver.solve_load(plan.algorithm, &load)
                } else {
                    solver.solve_load(plan.algorithm, &load)
                }
                .map_err(CliError::solver(context()))?;
                times.push(start.elapsed().as_secs_f64());
                unknowns = v.unknowns();
            }
            times.sort_by(f64::total_cmp);
            let mid = plan.reps / 2;
            let median = if plan.reps % 2 == 1 {
                times[mid]
            } else {
                0.5 * (times[mid - 1] + times[mid])
            };
            let ratio = prev.map(|p| (median / p).to_string()).unwrap_or_default();
            writeln!(csv, "{n},{k},{unknowns},{},{threads},{median:e},{ratio}", plan.reps).unwrap();
            prev = Some(median);
        }
    }
    write_output(output, &csv)
}
