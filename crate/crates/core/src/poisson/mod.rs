//! Direct solvers for `-Δu + αu = f` on `Π [0, X_a]`, `u = 0` on the boundary.
//!
//! The discrete system, in the reference-element scaling, is
//!
//! ```text
//! (Σ_a 4h_a⁻² A_a ⊗ Π_{b≠a} C_b + α Π_b C_b) v = f^h
//! ```
//!
//! Algorithm (a) applies `FC_n` along every axis, divides by
//! `α + Σ 4h_a⁻² λ_a`, and applies inverse `F_n` along every axis.
//! Algorithm (b) transforms only axes `2..N` and solves one banded SPD system
//! `[4h_1⁻² A_1 + σ C_1]` per remaining line along axis 1.

mod banded;
mod load;
mod manufactured;
mod operator;
mod sweep;

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::Axis;

pub use banded::{cholesky_in_place, cholesky_solve, BandMatrix, ShiftedSystem};
pub use load::load_average;
pub use manufactured::ManufacturedCase;
pub use operator::{apply_line, apply_mass, apply_operator_with};
pub use sweep::{line_index, map_axis, Sweep};

use crate::grid::{coefficient_branch, GridFunctionND};
use crate::ref_element::ElementMatrices;
use crate::spectral::{build_spectral_table, SpectralTable1D};
use crate::transform::{Direct, LineTransform};
use crate::{CoefficientArray1D, Error, GridFunction1D};

/// Scalar field on the box.
pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A boundary value problem `-Δu + αu = f`, `u = 0` on the boundary.
#[derive(Clone)]
pub struct ProblemSpec {
    pub lengths: Vec<f64>,
    pub elements: Vec<usize>,
    pub orders: Vec<usize>,
    pub alpha: f64,
    pub rhs: Field,
    /// Exact solution, when known, for error reports.
    pub exact: Option<Field>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("lengths", &self.lengths)
            .field("elements", &self.elements)
            .field("orders", &self.orders)
            .field("alpha", &self.alpha)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    /// Mesh steps `h_a = X_a / K_a`.
    pub fn steps(&self) -> Vec<f64> {
        self.lengths
            .iter()
            .zip(&self.elements)
            .map(|(x, &k)| x / k as f64)
            .collect()
    }

    /// Checks dimensions, ranges and `α > -π² Σ X_a⁻²`.
    pub fn validate(&self) -> Result<(), Error> {
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::InvalidProblem("dimension must be at least 1".into()));
        }
        if self.lengths.len() != dim || self.elements.len() != dim {
            return Err(Error::InvalidProblem(format!(
                "{} lengths, {} element counts and {} orders given",
                self.lengths.len(),
                self.elements.len(),
                dim
            )));
        }
        for a in 0..dim {
            if !(self.lengths[a] > 0.0 && self.lengths[a].is_finite()) {
                return Err(Error::InvalidProblem(format!("X{} = {} is not positive", a + 1, self.lengths[a])));
            }
            if self.elements[a] < 2 {
                return Err(Error::ElementCount(self.elements[a]));
            }
            if self.orders[a] == 0 || self.orders[a] > 9 {
                return Err(Error::OrderOutOfRange {
                    n: self.orders[a],
                    max: 9,
                });
            }
        }
        let bound = -std::f64::consts::PI.powi(2) * self.lengths.iter().map(|x| x.powi(-2)).sum::<f64>();
        if !(self.alpha > bound) {
            return Err(Error::InvalidProblem(format!(
                "alpha = {} must exceed {bound}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Full diagonalization in all axes.
    A,
    /// Diagonalization in axes `2..N`, banded solves along axis 1.
    B,
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "a" | "A" => Ok(Algorithm::A),
            "b" | "B" => Ok(Algorithm::B),
            _ => Err(format!("unknown algorithm {s:?} (expected a or b)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: GridFunctionND,
    /// Time of the solve proper (transforms, scaling, line solves).
    pub solve_time: Duration,
    /// Time spent forming `f^h`.
    pub load_time: Duration,
    /// `max |v - u|` over all Lagrange points, when the exact solution is
    /// known.
    pub error: Option<f64>,
    /// `max |L v - f^h| / max |f^h|`, when requested.
    pub residual: Option<f64>,
}

/// Solver bound to one problem, holding the per-axis spectral tables.
pub struct PoissonSolver {
    spec: ProblemSpec,
    tables: Vec<Arc<SpectralTable1D>>,
}

impl PoissonSolver {
    /// Validates `spec` and builds one table per distinct `(n, K)`.
    pub fn new(spec: ProblemSpec) -> Result<Self, Error> {
        spec.validate()?;
        let mut tables: Vec<Arc<SpectralTable1D>> = Vec::with_capacity(spec.dim());
        for a in 0..spec.dim() {
            let (n, k) = (spec.orders[a], spec.elements[a]);
            let existing = tables
                .iter()
                .find(|t| t.order() == n && t.elements() == k)
                .cloned();
            let table = match existing {
                Some(t) => t,
                None => Arc::new(build_spectral_table(n, k)?),
            };
            tables.push(table);
        }
        Ok(Self { spec, tables })
    }

    /// Uses precomputed tables, one per axis.
    pub fn with_tables(spec: ProblemSpec, tables: Vec<Arc<SpectralTable1D>>) -> Result<Self, Error> {
        spec.validate()?;
        if tables.len() != spec.dim() {
            return Err(Error::Dimension(format!("{} tables for {} axes", tables.len(), spec.dim())));
        }
        for (a, t) in tables.iter().enumerate() {
            if (t.order(), t.elements()) != (spec.orders[a], spec.elements[a]) {
                return Err(Error::Dimension(format!(
                    "table for axis {} is for n={}, K={}",
                    a + 1,
                    t.order(),
                    t.elements()
                )));
            }
        }
        Ok(Self { spec, tables })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn tables(&self) -> &[Arc<SpectralTable1D>] {
        &self.tables
    }

    fn element_matrices(&self) -> Vec<ElementMatrices<f64>> {
        self.tables.iter().map(|t| t.element.clone()).collect()
    }

    /// `f^h` of the problem's right-hand side.
    pub fn load(&self) -> Result<GridFunctionND, Error> {
        load_average(&self.spec.orders, &self.spec.elements, &self.spec.lengths, &*self.spec.rhs)
    }

    /// Scaled eigenvalues `4h_a⁻² λ` of axis `a` in coefficient order.
    fn scaled_eigenvalues(&self, a: usize) -> Vec<f64> {
        let h = self.spec.lengths[a] / self.spec.elements[a] as f64;
        let s = 4.0 / (h * h);
        self.tables[a].eigenvalues().into_iter().map(|l| s * l).collect()
    }

    fn forward(&self, sweep: &mut Sweep, axis: usize) -> Result<(), Error> {
        let tr = LineTransform::new(&self.tables[axis]);
        sweep.apply(axis, tr.coeff_len(), || tr.workspace(), |_, src, dst, ws| {
            tr.direct(Direct::MassWeighted, src, dst, ws)
        })
    }

    fn backward(&self, sweep: &mut Sweep, axis: usize) -> Result<(), Error> {
        let tr = LineTransform::new(&self.tables[axis]);
        sweep.apply(axis, tr.grid_len(), || tr.workspace(), |_, src, dst, ws| tr.inverse(src, dst, ws))
    }

    fn check_load(&self, load: &GridFunctionND) -> Result<(), Error> {
        if load.orders() != self.spec.orders.as_slice() || load.elements() != self.spec.elements.as_slice() {
            return Err(Error::Dimension(format!(
                "load for orders {:?}, elements {:?} does not match the problem",
                load.orders(),
                load.elements()
            )));
        }
        Ok(())
    }

    /// Algorithm (a) on a given load vector.
    pub fn solve_a(&self, load: &GridFunctionND) -> Result<GridFunctionND, Error> {
        self.check_load(load)?;
        let dim = self.spec.dim();
        let last = dim - 1;
        let scaled: Vec<Vec<f64>> = (0..dim).map(|a| self.scaled_eigenvalues(a)).collect();
        // The smallest denominator is α plus the per-axis minima.
        let mut argmin = Vec::with_capacity(dim);
        let mut min = self.spec.alpha;
        for s in &scaled {
            let (i, v) = s
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
            argmin.push(i);
            min += v;
        }
        if !(min > 0.0) {
            let index = argmin
                .iter()
                .enumerate()
                .map(|(a, &i)| {
                    let (k, l) = coefficient_branch(self.spec.orders[a], i);
                    format!("(k{}={k}, l{}={l})", a + 1, a + 1)
                })
                .collect::<Vec<_>>()
                .join(" ");
            return Err(Error::NonPositiveDenominator { index, value: min });
        }
        // α plus the eigenvalues of all axes but the last, per line of the last
        // axis in row-major order.
        let mut base = vec![self.spec.alpha];
        for s in &scaled[..last] {
            base = base.iter().flat_map(|&b| s.iter().map(move |&x| b + x)).collect();
        }

        let mut sweep = Sweep::new(load.data());
        for a in 0..last {
            self.forward(&mut sweep, a)?;
        }
        // Along the last axis each line goes forward, gets divided and comes
        // back in one pass.
        let tr = LineTransform::new(&self.tables[last]);
        sweep.apply(
            last,
            tr.grid_len(),
            || (tr.workspace(), vec![0.0; tr.coeff_len()]),
            |row, src, dst, (ws, coeffs)| {
                tr.direct(Direct::MassWeighted, src, coeffs, ws)?;
                let b = base[row];
                for (v, s) in coeffs.iter_mut().zip(&scaled[last]) {
                    *v /= b + s;
                }
                tr.inverse(coeffs, dst, ws)
            },
        )?;
        for a in (0..last).rev() {
            self.backward(&mut sweep, a)?;
        }
        GridFunctionND::from_array(&self.spec.orders, &self.spec.elements, sweep.into_array())
    }

    /// Algorithm (b) on a given load vector (`N >= 2`).
    pub fn solve_b(&self, load: &GridFunctionND) -> Result<GridFunctionND, Error> {
        self.check_load(load)?;
        let dim = self.spec.dim();
        if dim < 2 {
            return Err(Error::InvalidProblem("algorithm (b) needs at least two dimensions".into()));
        }
        let mut sweep = Sweep::new(load.data());
        for a in 1..dim {
            self.forward(&mut sweep, a)?;
        }
        let scaled: Vec<Vec<f64>> = (0..dim).map(|a| self.scaled_eigenvalues(a)).collect();
        let alpha = self.spec.alpha;
        let shape = sweep.shape().to_vec();
        let h1 = self.spec.lengths[0] / self.spec.elements[0] as f64;
        let scale = 4.0 / (h1 * h1);
        let system = ShiftedSystem::new(&self.tables[0].element, self.spec.elements[0]);
        let size = system.size();
        sweep.apply(
            0,
            size + 2,
            || (system.factor_buffer(), vec![0; dim]),
            |row, src, dst, (work, idx)| {
                line_index(&shape, 0, row, idx);
                let mut shift = alpha;
                for a in 1..dim {
                    shift += scaled[a][idx[a]];
                }
                dst.copy_from_slice(src);
                let unknowns = &mut dst[1..=size];
                system.solve(scale, shift, unknowns, work)?;
                dst[0] = 0.0;
                dst[size + 1] = 0.0;
                Ok(())
            },
        )?;
        for a in 1..dim {
            self.backward(&mut sweep, a)?;
        }
        GridFunctionND::from_array(&self.spec.orders, &self.spec.elements, sweep.into_array())
    }

    pub fn solve_load(&self, algorithm: Algorithm, load: &GridFunctionND) -> Result<GridFunctionND, Error> {
        match algorithm {
            Algorithm::A => self.solve_a(load),
            Algorithm::B => self.solve_b(load),
        }
    }

    /// Forms the load, solves, and reports timings and the error against the
    /// exact solution when one is known.
    pub fn solve(&self, algorithm: Algorithm) -> Result<SolveReport, Error> {
        let t0 = Instant::now();
        let load = self.load()?;
        let load_time = t0.elapsed();
        let t1 = Instant::now();
        let solution = self.solve_load(algorithm, &load)?;
        let solve_time = t1.elapsed();
        let error = self.spec.exact.as_ref().map(|u| max_error(&self.spec, &solution, &**u));
        Ok(SolveReport {
            solution,
            solve_time,
            load_time,
            error,
            residual: None,
        })
    }

    /// `max |L v - f^h| / max |f^h|`.
    pub fn relative_residual(&self, v: &GridFunctionND, load: &GridFunctionND) -> Result<f64, Error> {
        let lv = apply_operator_with(&self.element_matrices(), &self.spec.lengths, self.spec.alpha, v)?;
        Ok(lv.max_abs_diff(load) / load.max_abs().max(f64::MIN_POSITIVE))
    }
}

/// `max |v - u|` over every Lagrange point of the box.
pub fn max_error(spec: &ProblemSpec, v: &GridFunctionND, exact: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let steps: Vec<f64> = (0..spec.dim())
        .map(|a| spec.lengths[a] / (spec.orders[a] * spec.elements[a]) as f64)
        .collect();
    let data = v.data();
    let dim = spec.dim();
    let rows = data.len_of(Axis(0));
    (0..rows)
        .map(|i0| {
            let sub = data.index_axis(Axis(0), i0);
            let mut x = vec![0.0; dim];
            let mut worst: f64 = 0.0;
            for (idx, &val) in sub.indexed_iter() {
                x[0] = i0 as f64 * steps[0];
                for a in 1..dim {
                    x[a] = idx[a - 1] as f64 * steps[a];
                }
                worst = worst.max((val - exact(&x)).abs());
            }
            worst
        })
        .fold(0.0, f64::max)
}

/// `f^h` for the problem.
pub fn fem_load_average(spec: &ProblemSpec) -> Result<GridFunctionND, Error> {
    load_average(&spec.orders, &spec.elements, &spec.lengths, &*spec.rhs)
}

/// Left-hand side of the discrete system applied to `v`.
pub fn apply_operator(spec: &ProblemSpec, v: &GridFunctionND) -> Result<GridFunctionND, Error> {
    if v.orders() != spec.orders.as_slice() || v.elements() != spec.elements.as_slice() {
        return Err(Error::Dimension("grid function does not match the problem".into()));
    }
    let ems = spec
        .orders
        .iter()
        .map(|&n| ElementMatrices::new(n))
        .collect::<Result<Vec<_>, _>>()?;
    apply_operator_with(&ems, &spec.lengths, spec.alpha, v)
}

pub fn solve_nd(spec: &ProblemSpec, algorithm: Algorithm) -> Result<SolveReport, Error> {
    PoissonSolver::new(spec.clone())?.solve(algorithm)
}

pub fn solve_nd_algorithm_a(spec: &ProblemSpec) -> Result<SolveReport, Error> {
    solve_nd(spec, Algorithm::A)
}

pub fn solve_nd_algorithm_b(spec: &ProblemSpec) -> Result<SolveReport, Error> {
    solve_nd(spec, Algorithm::B)
}

/// 1D solve with a given table: `v = Σ f̃_{kl} / (4h⁻²λ_k^(l) + α) s_k^(l)`.
pub fn solve_1d(spec: &ProblemSpec, table: &SpectralTable1D) -> Result<SolveReport, Error> {
    if spec.dim() != 1 {
        return Err(Error::InvalidProblem(format!("solve_1d needs N = 1, got N = {}", spec.dim())));
    }
    spec.validate()?;
    let (n, k) = (spec.orders[0], spec.elements[0]);
    if (table.order(), table.elements()) != (n, k) {
        return Err(Error::Dimension(format!(
            "table for n={}, K={} used for n={n}, K={k}",
            table.order(),
            table.elements()
        )));
    }
    let t0 = Instant::now();
    let load = fem_load_average(spec)?;
    let load_time = t0.elapsed();
    let t1 = Instant::now();
    let f = GridFunction1D::from_values(n, k, load.data().iter().copied().collect())?;
    let v = solve_1d_load(spec.lengths[0], spec.alpha, &f, table)?;
    let solve_time = t1.elapsed();
    let solution = GridFunctionND::from(&v);
    let error = spec.exact.as_ref().map(|u| max_error(spec, &solution, &**u));
    Ok(SolveReport {
        solution,
        solve_time,
        load_time,
        error,
        residual: None,
    })
}

/// 1D solve for a given load `f^h` on `[0, X]`.
pub fn solve_1d_load(
    length: f64,
    alpha: f64,
    load: &GridFunction1D,
    table: &SpectralTable1D,
) -> Result<GridFunction1D, Error> {
    let (n, k) = (table.order(), table.elements());
    let h = length / k as f64;
    let mut c = crate::transform::direct_fcn(load, table)?;
    for (i, v) in c.values_mut().iter_mut().enumerate() {
        let (kk, l) = coefficient_branch(n, i);
        let d = 4.0 / (h * h) * table.eigenvalue(kk, l) + alpha;
        if !(d > 0.0) {
            return Err(Error::NonPositiveDenominator {
                index: format!("(k={kk}, l={l})"),
                value: d,
            });
        }
        *v /= d;
    }
    crate::transform::inverse_fn(&CoefficientArray1D::from_values(n, k, c.into_values())?, table)
}

/// Dense-array convenience used by tests: point values of `f` on the grid.
pub fn sample(spec: &ProblemSpec, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> GridFunctionND {
    GridFunctionND::from_fn(&spec.orders, &spec.elements, &spec.lengths, f)
}
