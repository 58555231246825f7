//! Invariant suites behind `sfem verify`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use sfem::grid::coefficient_branch;
use sfem::oracle::{
    assemble_global_1d, dct3_direct, dense_pencil_eigen, dense_solve_nd, dst1_direct, dst3_analysis_direct,
    dst3_direct, eigenvector_matrix,
};
use sfem::poisson::PoissonSolver;
use sfem::trig::{dct3_synthesis, dst1, dst3_analysis, dst3_synthesis};
use sfem::{
    direct_fn, inverse_fn, verify_assumption_a, Algorithm, CoefficientArray1D, DoubleDouble, ManufacturedCase,
    SpectralTable1D,
};

use crate::tables::{self, Source};
use crate::{CliError, Level};

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

/// Tables for the suites; cache read failures are collected rather than
/// aborting the run.
struct Tables<'a> {
    cache: Option<&'a Path>,
    memo: HashMap<(usize, usize), Arc<SpectralTable1D>>,
    cached: usize,
    failures: Vec<String>,
    failed: HashMap<(usize, usize), String>,
}

impl Tables<'_> {
    fn get(&mut self, n: usize, k: usize) -> Result<Arc<SpectralTable1D>, String> {
        if let Some(t) = self.memo.get(&(n, k)) {
            return Ok(Arc::clone(t));
        }
        if let Some(msg) = self.failed.get(&(n, k)) {
            return Err(msg.clone());
        }
        match tables::obtain(n, k, self.cache) {
            Ok((t, source)) => {
                if source == Source::Cached {
                    self.cached += 1;
                }
                let t = Arc::new(t);
                self.memo.insert((n, k), Arc::clone(&t));
                Ok(t)
            }
            Err(e) => {
                self.failures.push(e.to_string());
                let msg = format!("table n={n}, K={k} unavailable: {e}");
                self.failed.insert((n, k), msg.clone());
                Err(msg)
            }
        }
    }
}

fn random_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn outcome(name: &'static str, result: Result<(bool, String), String>) -> Check {
    match result {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

fn eigen_structure(tables: &mut Tables, orders: &[usize], ks: &[usize]) -> Result<(bool, String), String> {
    let (mut eig, mut gram_off, mut norm) = (0.0f64, 0.0f64, 0.0f64);
    for &n in orders {
        for &k in ks {
            let table = tables.get(n, k)?;
            let (a, c) = assemble_global_1d(n, k).map_err(|e| e.to_string())?;
            let (dense, _) = dense_pencil_eigen(&a, &c).map_err(|e| e.to_string())?;
            let mut mine = table.eigenvalues();
            mine.sort_by(f64::total_cmp);
            for (x, y) in mine.iter().zip(&dense) {
                eig = eig.max((x - y).abs() / y.abs());
            }
            let s = eigenvector_matrix(&table).map_err(|e| e.to_string())?;
            let gram = s.transpose() * &c * &s;
            for i in 0..n * k - 1 {
                let (kk, l) = coefficient_branch(n, i);
                for j in 0..n * k - 1 {
                    if i != j {
                        gram_off = gram_off.max(gram[(i, j)].abs() / (gram[(i, i)] * gram[(j, j)]).sqrt());
                    }
                }
                let formula = table.norm2(kk, l);
                norm = norm.max((gram[(i, i)] - formula).abs() / formula);
            }
        }
    }
    Ok((
        eig <= 1e-9 && gram_off <= 1e-10 && norm <= 1e-12,
        format!("eigenvalues {eig:.1e} (1e-9), C-orthogonality {gram_off:.1e} (1e-10), norms {norm:.1e} (1e-12)"),
    ))
}

fn roundtrips(tables: &mut Tables, orders: &[usize], ks: &[usize]) -> Result<(bool, String), String> {
    let mut worst = 0.0f64;
    for &n in orders {
        for &k in ks {
            let table = tables.get(n, k)?;
            let coeffs = CoefficientArray1D::from_values(n, k, random_vec(n * k - 1, (100 * n + k) as u64))
                .map_err(|e| e.to_string())?;
            let w = inverse_fn(&coeffs, &table).map_err(|e| e.to_string())?;
            let back = direct_fn(&w, &table).map_err(|e| e.to_string())?;
            worst = worst.max(rel_diff(back.values(), coeffs.values()));
            let again = inverse_fn(&back, &table).map_err(|e| e.to_string())?;
            worst = worst.max(rel_diff(again.values(), w.values()));
        }
    }
    Ok((worst <= 1e-11, format!("max relative deviation {worst:.1e} (1e-11)")))
}

fn trig_sums(ks: &[usize]) -> Result<(bool, String), String> {
    let mut worst = 0.0f64;
    for &k in ks {
        let x = random_vec(k - 1, k as u64);
        worst = worst.max(rel_diff(&dst1(&x), &dst1_direct(&x)));
        let b = random_vec(k, 3 * k as u64);
        let fast = [
            dst3_synthesis(&b).map_err(|e| e.to_string())?,
            dct3_synthesis(&b).map_err(|e| e.to_string())?,
            dst3_analysis(&b).map_err(|e| e.to_string())?,
        ];
        let slow = [dst3_direct(&b), dct3_direct(&b), dst3_analysis_direct(&b)];
        for (f, s) in fast.iter().zip(&slow) {
            worst = worst.max(rel_diff(f, s));
        }
    }
    Ok((worst <= 1e-12, format!("max relative deviation {worst:.1e} (1e-12)")))
}

fn oracle_equivalence(
    tables: &mut Tables,
    case: &ManufacturedCase,
    orders: &[usize],
    ks: &[usize],
) -> Result<(bool, String), String> {
    let (mut ab, mut dense) = (0.0f64, 0.0f64);
    let dim = case.dim();
    for &n in orders {
        for &k in ks {
            let spec = case.spec(n, k);
            let table = tables.get(n, k)?;
            let solver = PoissonSolver::with_tables(spec.clone(), vec![table; dim]).map_err(|e| e.to_string())?;
            let load = solver.load().map_err(|e| e.to_string())?;
            let a = solver.solve_load(Algorithm::A, &load).map_err(|e| e.to_string())?;
            let b = solver.solve_load(Algorithm::B, &load).map_err(|e| e.to_string())?;
            let d = dense_solve_nd(&spec).map_err(|e| e.to_string())?;
            ab = ab.max(a.max_abs_diff(&b) / a.max_abs());
            dense = dense.max(a.max_abs_diff(&d) / d.max_abs());
        }
    }
    Ok((
        ab <= 1e-10 && dense <= 1e-10,
        format!("(a) vs (b) {ab:.1e}, (a) vs dense {dense:.1e} (1e-10)"),
    ))
}

fn assumption(orders: std::ops::RangeInclusive<usize>) -> Result<(bool, String), String> {
    let mut failed = Vec::new();
    let mut smallest = f64::INFINITY;
    for n in orders.clone() {
        let r = verify_assumption_a::<DoubleDouble>(n, 0.0).map_err(|e| e.to_string())?;
        if let Some(d) = r.min_cross_distance {
            smallest = smallest.min(d);
        }
        if !r.passed {
            failed.push(n.to_string());
        }
    }
    let range = format!("n={}..{}", orders.start(), orders.end());
    Ok(if failed.is_empty() {
        (
            true,
            format!("{range} simple and disjoint in double-double, smallest cross distance {smallest:.2e}"),
        )
    } else {
        (false, format!("fails for n={}", failed.join(",")))
    })
}

pub fn run(level: Level, cache: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let mut tables = Tables {
        cache,
        memo: HashMap::new(),
        cached: 0,
        failures: Vec::new(),
        failed: HashMap::new(),
    };
    let full = level == Level::Full;
    let (eig_orders, eig_ks): (&[usize], &[usize]) = if full {
        (&[1, 2, 3, 4, 5], &[2, 3, 4, 8, 16])
    } else {
        (&[1, 2, 3, 4], &[2, 3, 4, 8])
    };
    let (rt_orders, rt_ks): (&[usize], &[usize]) = if full {
        (&[1, 2, 3, 5, 9], &[2, 3, 4, 8, 31, 64, 128])
    } else {
        (&[1, 2, 3, 5], &[2, 3, 8, 31])
    };
    let trig_ks: &[usize] = if full {
        &[2, 3, 4, 5, 8, 12, 16, 31, 64, 128]
    } else {
        &[2, 3, 5, 8, 16, 31]
    };

    let mut checks = vec![
        outcome("eigen-structure", eigen_structure(&mut tables, eig_orders, eig_ks)),
        outcome("transform-roundtrip", roundtrips(&mut tables, rt_orders, rt_ks)),
        outcome("trig-vs-direct-sums", trig_sums(trig_ks)),
        outcome(
            "oracle-equivalence-2d",
            oracle_equivalence(
                &mut tables,
                &ManufacturedCase::poisson2d(),
                &[1, 2, 3],
                if full { &[2, 3, 5, 8] } else { &[2, 4] },
            ),
        ),
    ];
    if full {
        checks.push(outcome(
            "oracle-equivalence-3d",
            oracle_equivalence(&mut tables, &ManufacturedCase::poisson3d(), &[1, 2], &[2, 3]),
        ));
    }
    checks.push(outcome("assumption-a", assumption(if full { 2..=9 } else { 2..=8 })));
    if let Some(dir) = cache {
        checks.push(Check {
            name: "cache-integrity",
            passed: tables.failures.is_empty(),
            detail: if tables.failures.is_empty() {
                format!("{} tables read from {}", tables.cached, dir.display())
            } else {
                tables.failures.join("; ")
            },
        });
    }

    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    println!(
        "verify {}: {} passed, {} failed in {:.1}s",
        if full { "full" } else { "quick" },
        checks.len() - failed.len(),
        failed.len(),
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(failed.join(", ")))
    }
}
