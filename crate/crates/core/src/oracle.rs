//! Brute-force reference implementations for tests: dense global assembly,
//! dense solves and pencil eigenproblems, `O(K²)` trigonometric sums, and the
//! explicit mass stencil.
//!
//! Everything here is slow, single-threaded and deterministic.

use nalgebra::{DMatrix, DVector};

use crate::grid::{coefficient_branch, CoefficientArray1D, GridFunction1D, GridFunctionND};
use crate::poisson::{fem_load_average, ProblemSpec};
use crate::ref_element::ElementMatrices;
use crate::spectral::{materialize_eigenvector, SpectralTable1D};
use crate::Error;

pub const DEFAULT_DENSE_CAP: usize = 4096;

fn check_cap(size: usize, cap: usize) -> Result<(), Error> {
    if size > cap {
        Err(Error::DenseCapExceeded { size, cap })
    } else {
        Ok(())
    }
}

fn assemble(local: &crate::dense::Matrix<f64>, n: usize, k: usize) -> DMatrix<f64> {
    let size = n * k - 1;
    let mut m = DMatrix::zeros(size, size);
    for e in 0..k {
        for r in 0..=n {
            for c in 0..=n {
                let (gr, gc) = (e * n + r, e * n + c);
                if gr == 0 || gc == 0 || gr == n * k || gc == n * k {
                    continue;
                }
                m[(gr - 1, gc - 1)] += local[(r, c)];
            }
        }
    }
    m
}

/// Global `(A, C)` of order `nK - 1` on the Dirichlet unknowns, ordered by
/// grid point.
pub fn assemble_global_1d(n: usize, k: usize) -> Result<(DMatrix<f64>, DMatrix<f64>), Error> {
    assemble_global_1d_with_cap(n, k, DEFAULT_DENSE_CAP)
}

pub fn assemble_global_1d_with_cap(n: usize, k: usize, cap: usize) -> Result<(DMatrix<f64>, DMatrix<f64>), Error> {
    if k < 2 {
        return Err(Error::ElementCount(k));
    }
    check_cap(n * k - 1, cap)?;
    let em = ElementMatrices::new(n)?;
    Ok((assemble(&em.stiffness, n, k), assemble(&em.mass, n, k)))
}

/// Generalized eigenpairs of `A x = λ C x` for SPD `C`: ascending eigenvalues
/// and `C`-orthonormal eigenvectors as columns.
pub fn dense_pencil_eigen(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), Error> {
    let chol = c
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("mass matrix".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("mass factor".into()))?;
    let mut reduced = &linv * a * linv.transpose();
    reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = reduced.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lt = l.transpose();
    let mut vectors = DMatrix::zeros(a.nrows(), a.ncols());
    for (col, &i) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::NotPositiveDefinite("mass factor".into()))?;
        vectors.set_column(col, &x);
    }
    Ok((values, vectors))
}

/// Dense LU solve with partial pivoting.
pub fn dense_solve(m: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>, Error> {
    m.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotPositiveDefinite("singular dense system".into()))
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Assembled `Σ 4h_a⁻² A_a ⊗ Π C_b + α Π C_b` on the interior unknowns, axis 1
/// slowest.
pub fn assemble_nd(spec: &ProblemSpec, cap: usize) -> Result<DMatrix<f64>, Error> {
    spec.validate()?;
    let dim = spec.dim();
    let sizes: Vec<usize> = (0..dim).map(|a| spec.orders[a] * spec.elements[a] - 1).collect();
    check_cap(sizes.iter().product(), cap)?;
    let mut pairs = Vec::with_capacity(dim);
    for a in 0..dim {
        pairs.push(assemble_global_1d_with_cap(spec.orders[a], spec.elements[a], usize::MAX)?);
    }
    let steps = spec.steps();
    let product = |stiff_axis: Option<usize>| {
        let mut m = DMatrix::from_element(1, 1, 1.0);
        for (a, (stiff, mass)) in pairs.iter().enumerate() {
            m = kron(&m, if Some(a) == stiff_axis { stiff } else { mass });
        }
        m
    };
    let mut total = product(None) * spec.alpha;
    for a in 0..dim {
        total += product(Some(a)) * (4.0 / (steps[a] * steps[a]));
    }
    Ok(total)
}

/// Solves the `N`-D system by dense factorization of the Kronecker assembly.
pub fn dense_solve_nd(spec: &ProblemSpec) -> Result<GridFunctionND, Error> {
    dense_solve_nd_with_cap(spec, DEFAULT_DENSE_CAP)
}

pub fn dense_solve_nd_with_cap(spec: &ProblemSpec, cap: usize) -> Result<GridFunctionND, Error> {
    let m = assemble_nd(spec, cap)?;
    let load = fem_load_average(spec)?;
    let mut out = GridFunctionND::zeros(&spec.orders, &spec.elements);
    let interior = interior_slice(&spec.orders, &spec.elements);
    let rhs: Vec<f64> = load.data().slice(interior.as_slice()).iter().copied().collect();
    let x = dense_solve(m, DVector::from_vec(rhs))?;
    let mut view = out.data_mut().slice_mut(interior.as_slice());
    for (dst, &v) in view.iter_mut().zip(x.iter()) {
        *dst = v;
    }
    Ok(out)
}

fn interior_slice(orders: &[usize], elements: &[usize]) -> Vec<ndarray::SliceInfoElem> {
    orders
        .iter()
        .zip(elements)
        .map(|(&n, &k)| ndarray::SliceInfoElem::Slice {
            start: 1,
            end: Some((n * k) as isize),
            step: 1,
        })
        .collect()
}

/// `y = C w` by the node/bubble stencil: at node `j`
/// `2c₀w_j + c_n(w_{j-1} + w_{j+1}) + č·w_{j-1/2} + c·w_{j+1/2}`, and on the
/// bubble of element `j` `c w_{j-1} + C̃ w_{j-1/2} + č w_j`.
pub fn mass_apply(w: &GridFunction1D) -> Result<GridFunction1D, Error> {
    let (n, k) = (w.order(), w.elements());
    let em = ElementMatrices::new(n)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut y = GridFunction1D::zeros(n, k);
    for j in 1..k {
        let v = 2.0 * em.c0 * w.nodal(j)
            + em.cn * (w.nodal(j - 1) + w.nodal(j + 1))
            + dot(&em.c_flip, w.interior(j))
            + dot(&em.c, w.interior(j + 1));
        y.set_nodal(j, v);
    }
    for j in 1..=k {
        let (left, right) = (w.nodal(j - 1), w.nodal(j));
        let bubble = w.interior(j).to_vec();
        let out = y.interior_mut(j);
        for (i, o) in out.iter_mut().enumerate() {
            let row = em.c_interior.row(i);
            *o = em.c[i] * left + dot(row, &bubble) + em.c_flip[i] * right;
        }
    }
    Ok(y)
}

/// `X_k = Σ_{j=1}^{K-1} x_j sin(πjk/K)`.
pub fn dst1_direct(x: &[f64]) -> Vec<f64> {
    let k = x.len() + 1;
    (1..k)
        .map(|f| {
            (1..k)
                .map(|j| x[j - 1] * (std::f64::consts::PI * (j * f) as f64 / k as f64).sin())
                .sum()
        })
        .collect()
}

fn half(j: usize) -> f64 {
    j as f64 - 0.5
}

/// `w_j = Σ_{k=1}^{K} b_k sin(πk(j-1/2)/K)`.
pub fn dst3_direct(b: &[f64]) -> Vec<f64> {
    let k = b.len();
    (1..=k)
        .map(|j| {
            (1..=k)
                .map(|f| b[f - 1] * (std::f64::consts::PI * f as f64 * half(j) / k as f64).sin())
                .sum()
        })
        .collect()
}

/// `w_j = Σ_{k=0}^{K-1} a_k cos(πk(j-1/2)/K)`.
pub fn dct3_direct(a: &[f64]) -> Vec<f64> {
    let k = a.len();
    (1..=k)
        .map(|j| {
            (0..k)
                .map(|f| a[f] * (std::f64::consts::PI * f as f64 * half(j) / k as f64).cos())
                .sum()
        })
        .collect()
}

/// `B_k = Σ_{j=1}^{K} y_j sin(πk(j-1/2)/K)`.
pub fn dst3_analysis_direct(y: &[f64]) -> Vec<f64> {
    let k = y.len();
    (1..=k)
        .map(|f| {
            (1..=k)
                .map(|j| y[j - 1] * (std::f64::consts::PI * f as f64 * half(j) / k as f64).sin())
                .sum()
        })
        .collect()
}

/// Eigenvectors `s_k^(l)` as dense columns over the interior unknowns, in
/// coefficient order.
pub fn eigenvector_matrix(table: &SpectralTable1D) -> Result<DMatrix<f64>, Error> {
    let (n, k) = (table.order(), table.elements());
    let size = n * k - 1;
    let mut s = DMatrix::zeros(size, size);
    for col in 0..size {
        let (kk, l) = coefficient_branch(n, col);
        let v = materialize_eigenvector(table, kk, l)?;
        for (r, &x) in v.unknowns().iter().enumerate() {
            s[(r, col)] = x;
        }
    }
    Ok(s)
}

/// `Σ w_{kl} s_k^(l)` by explicit summation.
pub fn dense_synthesis(coeffs: &CoefficientArray1D, table: &SpectralTable1D) -> Result<GridFunction1D, Error> {
    let s = eigenvector_matrix(table)?;
    let w = &s * DVector::from_column_slice(coeffs.values());
    GridFunction1D::from_unknowns(table.order(), table.elements(), w.as_slice())
}

/// Coefficients `ỹ` with `y = Σ ỹ_{kl} C s_k^(l)`, from a dense solve with
/// `C S`.
pub fn dense_direct_fcn(y: &GridFunction1D, table: &SpectralTable1D) -> Result<CoefficientArray1D, Error> {
    let (_, c) = assemble_global_1d(table.order(), table.elements())?;
    let s = eigenvector_matrix(table)?;
    let x = dense_solve(c * s, DVector::from_column_slice(y.unknowns()))?;
    CoefficientArray1D::from_values(table.order(), table.elements(), x.as_slice().to_vec())
}

/// Coefficients of `w` in the eigenbasis, from a dense solve with `S`.
pub fn dense_direct_fn(w: &GridFunction1D, table: &SpectralTable1D) -> Result<CoefficientArray1D, Error> {
    let s = eigenvector_matrix(table)?;
    let x = dense_solve(s, DVector::from_column_slice(w.unknowns()))?;
    CoefficientArray1D::from_values(table.order(), table.elements(), x.as_slice().to_vec())
}
