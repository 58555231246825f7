//! Reference element [-1, 1]: local stiffness and mass matrices of the
//! equispaced Lagrange basis of order `n`, their 3×3 block structure, and the
//! element eigenproblems.
//!
//! Local indices run `0..=n`; `0` and `n` are the element end points and
//! `1..n` the `n - 1` interior nodes. With `P` the flip `p_i -> p_{n-i}` of
//! interior vectors the matrices are bisymmetric:
//!
//! ```text
//!     | a0   a^T   an  |        | c0   c^T   cn  |
//! A = | a    Ã     ǎ   |,   C = | c    C̃     č   |,   ǎ = P a, č = P c.
//!     | an   ǎ^T   a0  |        | cn   č^T   c0  |
//! ```

use crate::dense::{dot, pencil_eigen, symmetric_eigen, Matrix};
use crate::quadrature::{GaussLegendre, LagrangeBasis};
use crate::scalar::Scalar;
use crate::Error;

/// Orders above this are never accepted, whatever the precision.
pub const HARD_MAX_ORDER: usize = 21;

/// Local stiffness `A` and mass `C` of order `n` on [-1, 1] with their blocks.
#[derive(Clone, Debug)]
pub struct ElementMatrices<T = f64> {
    order: usize,
    pub stiffness: Matrix<T>,
    pub mass: Matrix<T>,
    pub a0: T,
    pub an: T,
    pub c0: T,
    pub cn: T,
    /// Interior column coupling to the left end point.
    pub a: Vec<T>,
    /// Interior column coupling to the right end point (`P a`).
    pub a_flip: Vec<T>,
    pub c: Vec<T>,
    pub c_flip: Vec<T>,
    /// Interior block `Ã`.
    pub a_interior: Matrix<T>,
    /// Interior block `C̃`.
    pub c_interior: Matrix<T>,
}

/// Symmetry class of an interior vector under the flip `P`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// `+1` for even, `-1` for odd: the eigenvalue of `P`.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

// Bisymmetric average over the orbit {(i,j), (j,i), (n-i,n-j), (n-j,n-i)}.
// Summation order depends only on the orbit, so all four entries come out
// bit-identical.
fn bisymmetrize<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    let n = m.rows() - 1;
    Matrix::from_fn(n + 1, n + 1, |i, j| {
        let mut orbit = [(i, j), (j, i), (n - i, n - j), (n - j, n - i)];
        orbit.sort_unstable();
        let sum = orbit.iter().fold(T::zero(), |acc, &(r, c)| acc + m[(r, c)]);
        sum / T::from_f64(4.0)
    })
}

impl<T: Scalar> ElementMatrices<T> {
    /// Builds the order-`n` matrices, accepting `1 <= n <= T::DEFAULT_MAX_ORDER`.
    pub fn new(n: usize) -> Result<Self, Error> {
        Self::with_max_order(n, T::DEFAULT_MAX_ORDER)
    }

    /// Same as [`ElementMatrices::new`] with a caller-chosen order limit
    /// (itself capped at [`HARD_MAX_ORDER`]).
    pub fn with_max_order(n: usize, max_order: usize) -> Result<Self, Error> {
        let max = max_order.min(HARD_MAX_ORDER);
        if n == 0 || n > max {
            return Err(Error::OrderOutOfRange { n, max });
        }
        let basis = LagrangeBasis::<T>::equispaced(n);
        // n + 1 points integrate degree 2n + 1 exactly.
        let rule = GaussLegendre::<T>::new(n + 1);
        let mut a = Matrix::zeros(n + 1, n + 1);
        let mut c = Matrix::zeros(n + 1, n + 1);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let phi = basis.values(x);
            let dphi = basis.derivatives(x);
            for k in 0..=n {
                for l in 0..=n {
                    a[(k, l)] += w * dphi[k] * dphi[l];
                    c[(k, l)] += w * phi[k] * phi[l];
                }
            }
        }
        let stiffness = bisymmetrize(&a);
        let mass = bisymmetrize(&c);
        let interior = 1..n;
        let col = |m: &Matrix<T>, j: usize| interior.clone().map(|i| m[(i, j)]).collect::<Vec<_>>();
        let block = |m: &Matrix<T>| Matrix::from_fn(n - 1, n - 1, |i, j| m[(i + 1, j + 1)]);
        Ok(Self {
            order: n,
            a0: stiffness[(0, 0)],
            an: stiffness[(0, n)],
            c0: mass[(0, 0)],
            cn: mass[(0, n)],
            a: col(&stiffness, 0),
            a_flip: col(&stiffness, n),
            c: col(&mass, 0),
            c_flip: col(&mass, n),
            a_interior: block(&stiffness),
            c_interior: block(&mass),
            stiffness,
            mass,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of interior nodes, `n - 1`.
    pub fn interior_dim(&self) -> usize {
        self.order - 1
    }

    /// Converts to another precision (typically extended -> f64).
    pub fn convert<U: Scalar>(&self) -> ElementMatrices<U> {
        let cv = |x: T| U::from_f64(x.to_f64());
        let vc = |v: &[T]| v.iter().map(|&x| cv(x)).collect::<Vec<U>>();
        ElementMatrices {
            order: self.order,
            stiffness: self.stiffness.map(cv),
            mass: self.mass.map(cv),
            a0: cv(self.a0),
            an: cv(self.an),
            c0: cv(self.c0),
            cn: cv(self.cn),
            a: vc(&self.a),
            a_flip: vc(&self.a_flip),
            c: vc(&self.c),
            c_flip: vc(&self.c_flip),
            a_interior: self.a_interior.map(cv),
            c_interior: self.c_interior.map(cv),
        }
    }
}

/// Double-precision element matrices of order `n` (1 <= n <= 9).
pub fn build_element_matrices(n: usize) -> Result<ElementMatrices, Error> {
    ElementMatrices::new(n)
}

/// Flip `P`: reverses the entries of an interior vector.
pub fn flip<T: Copy>(p: &[T]) -> Vec<T> {
    p.iter().rev().copied().collect()
}

/// Splits `p` into even and odd parts, `p = p_e + p_o`, `P p_e = p_e`,
/// `P p_o = -p_o`.
pub fn even_odd_split<T: Scalar>(p: &[T]) -> (Vec<T>, Vec<T>) {
    let m = p.len();
    let half = T::from_f64(0.5);
    let mut even = vec![T::zero(); m];
    let mut odd = vec![T::zero(); m];
    for i in 0..m {
        let j = m - 1 - i;
        even[i] = half * (p[i] + p[j]);
        odd[i] = if i == j { T::zero() } else { half * (p[i] - p[j]) };
    }
    (even, odd)
}

// Orthonormal bases (as columns) of the even and odd subspaces of R^m.
fn parity_basis<T: Scalar>(m: usize, parity: Parity) -> Matrix<T> {
    let pairs = m / 2;
    let center = m % 2 == 1 && parity == Parity::Even;
    let dim = pairs + usize::from(center);
    let s = T::one() / T::from_f64(2.0).sqrt();
    let mut u = Matrix::zeros(m, dim);
    for i in 0..pairs {
        u[(i, i)] = s;
        u[(m - 1 - i, i)] = match parity {
            Parity::Even => s,
            Parity::Odd => -s,
        };
    }
    if center {
        u[(m / 2, pairs)] = T::one();
    }
    u
}

/// Eigenpairs of the parity block: `(eigenvalue, vector in R^m)`.
fn parity_block_eigen<T: Scalar>(
    em: &ElementMatrices<T>,
    parity: Parity,
) -> Result<Vec<(T, Vec<T>)>, Error> {
    let m = em.interior_dim();
    let u = parity_basis::<T>(m, parity);
    if u.cols() == 0 {
        return Ok(Vec::new());
    }
    let ut = u.transpose();
    let a = ut.matmul(&em.a_interior).matmul(&u);
    let c = ut.matmul(&em.c_interior).matmul(&u);
    let (values, x) = pencil_eigen(&a, &c)?;
    let mut out = Vec::with_capacity(values.len());
    for (col, &lambda) in values.iter().enumerate() {
        let mut e = u.matvec(&x.column(col));
        let norm = dot(&em.c_interior.matvec(&e), &e).sqrt();
        let scale = e.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
        let first = e
            .iter()
            .copied()
            .find(|v| v.abs() > T::from_f64(1e-8) * scale)
            .unwrap_or_else(T::one);
        let s = if first < T::zero() { -norm } else { norm };
        for v in &mut e {
            *v /= s;
        }
        out.push((lambda, e));
    }
    Ok(out)
}

/// Interior spectrum `S̃_n` computed parity block by parity block, with no
/// simplicity check.
fn interior_pairs<T: Scalar>(em: &ElementMatrices<T>) -> Result<Vec<(T, Vec<T>, Parity)>, Error> {
    let mut all = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        for (lambda, e) in parity_block_eigen(em, parity)? {
            all.push((lambda, e, parity));
        }
    }
    all.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite eigenvalues"));
    Ok(all)
}

/// C̃-normalized eigenpairs of the interior pencil `(Ã, C̃)` plus the
/// projections of the boundary columns onto them.
#[derive(Clone, Debug)]
pub struct InteriorEigenSystem<T = f64> {
    /// `λ0^(l)`, strictly increasing.
    pub eigenvalues: Vec<T>,
    /// `e^(l)`, with `C̃ e·e = 1` and first significant entry positive.
    pub vectors: Vec<Vec<T>>,
    /// `C̃ e^(l)`.
    pub mass_vectors: Vec<Vec<T>>,
    pub parity: Vec<Parity>,
    /// `a·e^(l)`.
    pub a_proj: Vec<T>,
    /// `ǎ·e^(l)`.
    pub a_flip_proj: Vec<T>,
    pub c_proj: Vec<T>,
    pub c_flip_proj: Vec<T>,
}

impl<T: Scalar> InteriorEigenSystem<T> {
    pub fn new(em: &ElementMatrices<T>) -> Result<Self, Error> {
        let n = em.order();
        let pairs = interior_pairs(em)?;
        let scale = pairs.iter().fold(T::one(), |acc, p| acc.max(p.0.abs()));
        let tol = T::from_f64(1e6 * T::EPSILON) * scale;
        for (l, w) in pairs.windows(2).enumerate() {
            if w[1].0 - w[0].0 <= tol {
                return Err(Error::EigenvalueCollision {
                    n,
                    first: l + 1,
                    second: l + 2,
                    value: w[0].0.to_f64(),
                });
            }
        }
        let mut sys = Self {
            eigenvalues: Vec::with_capacity(pairs.len()),
            vectors: Vec::with_capacity(pairs.len()),
            mass_vectors: Vec::with_capacity(pairs.len()),
            parity: Vec::with_capacity(pairs.len()),
            a_proj: Vec::with_capacity(pairs.len()),
            a_flip_proj: Vec::with_capacity(pairs.len()),
            c_proj: Vec::with_capacity(pairs.len()),
            c_flip_proj: Vec::with_capacity(pairs.len()),
        };
        for (lambda, e, parity) in pairs {
            if !(lambda > T::zero()) {
                return Err(Error::NotPositiveDefinite(format!(
                    "interior eigenvalue {:e} of order {n} is not positive",
                    lambda.to_f64()
                )));
            }
            sys.a_proj.push(dot(&em.a, &e));
            sys.a_flip_proj.push(dot(&em.a_flip, &e));
            sys.c_proj.push(dot(&em.c, &e));
            sys.c_flip_proj.push(dot(&em.c_flip, &e));
            sys.mass_vectors.push(em.c_interior.matvec(&e));
            sys.eigenvalues.push(lambda);
            sys.vectors.push(e);
            sys.parity.push(parity);
        }
        Ok(sys)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Whether `e^(l)` is even for odd `l` and odd for even `l` (1-based),
    /// the pattern observed for small orders. Nothing downstream relies on it;
    /// the parity of each vector is carried explicitly.
    pub fn parity_alternates(&self) -> bool {
        self.parity.iter().enumerate().all(|(i, &p)| {
            let l = i + 1;
            (l % 2 == 1) == (p == Parity::Even)
        })
    }

    /// Largest `‖Ã e − λ C̃ e‖` over all pairs.
    pub fn max_residual(&self, em: &ElementMatrices<T>) -> T {
        self.vectors
            .iter()
            .zip(&self.eigenvalues)
            .map(|(e, &lambda)| {
                let ae = em.a_interior.matvec(e);
                let ce = em.c_interior.matvec(e);
                ae.iter()
                    .zip(&ce)
                    .map(|(&x, &y)| (x - lambda * y) * (x - lambda * y))
                    .sum::<T>()
                    .sqrt()
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn convert<U: Scalar>(&self) -> InteriorEigenSystem<U> {
        let cv = |x: &T| U::from_f64(x.to_f64());
        let vc = |v: &Vec<T>| v.iter().map(cv).collect::<Vec<U>>();
        InteriorEigenSystem {
            eigenvalues: vc(&self.eigenvalues),
            vectors: self.vectors.iter().map(vc).collect(),
            mass_vectors: self.mass_vectors.iter().map(vc).collect(),
            parity: self.parity.clone(),
            a_proj: vc(&self.a_proj),
            a_flip_proj: vc(&self.a_flip_proj),
            c_proj: vc(&self.c_proj),
            c_flip_proj: vc(&self.c_flip_proj),
        }
    }
}

/// Interior eigensystem of `em`; fails if two interior eigenvalues collide.
pub fn interior_eigensystem<T: Scalar>(em: &ElementMatrices<T>) -> Result<InteriorEigenSystem<T>, Error> {
    InteriorEigenSystem::new(em)
}

/// All `n + 1` eigenvalues of the element pencil `(A, C)`, ascending. The
/// smallest is zero up to roundoff (constants span the kernel of `A`).
pub fn element_spectrum_full<T: Scalar>(em: &ElementMatrices<T>) -> Result<Vec<T>, Error> {
    Ok(pencil_eigen(&em.stiffness, &em.mass)?.0)
}

/// Spectral condition number of a symmetric positive definite matrix.
pub fn condition_number<T: Scalar>(m: &Matrix<T>) -> f64 {
    let (values, _) = symmetric_eigen(m);
    match (values.first(), values.last()) {
        (Some(&lo), Some(&hi)) => (hi / lo).to_f64(),
        _ => 1.0,
    }
}

/// Outcome of checking simplicity and disjointness of `S_n` and `S̃_n`.
#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub n: usize,
    pub full_spectrum: Vec<f64>,
    pub interior_spectrum: Vec<f64>,
    /// Minimal gap between consecutive values of `S_n`.
    pub min_gap_full: f64,
    /// Minimal gap within `S̃_n` (`None` for fewer than two values).
    pub min_gap_interior: Option<f64>,
    /// `min |λ - μ|` over `λ ∈ S_n`, `μ ∈ S̃_n`.
    pub min_cross_distance: Option<f64>,
    /// `min_gap_full - π²/4`.
    pub delta_full: f64,
    /// `min_gap_interior - 3π²/4`.
    pub delta_interior: Option<f64>,
    pub cond_a_interior: Option<f64>,
    pub cond_c_interior: Option<f64>,
    /// `None` for `n = 1` (no interior vectors).
    pub parity_alternates: Option<bool>,
    pub separation_tol: f64,
    /// Smallest distance the working precision can certify:
    /// `64 ε max|S_n|`. Gaps below it are reported but not trusted.
    pub resolution: f64,
    pub passed: bool,
}

fn min_gap(v: &[f64]) -> Option<f64> {
    v.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
}

/// Checks that `S_n` and `S̃_n` are simple and disjoint, with every gap
/// exceeding both `separation_tol` and the resolution of `T`. Works up to [`HARD_MAX_ORDER`] in either
/// precision; above order 9 only the extended path is trustworthy.
pub fn verify_assumption_a<T: Scalar>(n: usize, separation_tol: f64) -> Result<AssumptionReport, Error> {
    let em = ElementMatrices::<T>::with_max_order(n, HARD_MAX_ORDER)?;
    let full: Vec<f64> = element_spectrum_full(&em)?.iter().map(|x| x.to_f64()).collect();
    let pairs = if n >= 2 { interior_pairs(&em)? } else { Vec::new() };
    let interior: Vec<f64> = pairs.iter().map(|p| p.0.to_f64()).collect();
    let min_gap_full = min_gap(&full).unwrap_or(f64::INFINITY);
    let min_gap_interior = min_gap(&interior);
    // Distances are measured in T to keep extended precision meaningful.
    let full_t = element_spectrum_full(&em)?;
    let min_cross_distance = pairs
        .iter()
        .flat_map(|p| full_t.iter().map(move |&l| (l - p.0).abs().to_f64()))
        .reduce(f64::min);
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let resolution = 64.0 * T::EPSILON * full.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = separation_tol.max(resolution);
    let passed = min_gap_full > floor
        && min_gap_interior.is_none_or(|g| g > floor)
        && min_cross_distance.is_none_or(|d| d > floor);
    let parity_alternates = (n >= 2).then(|| {
        pairs.iter().enumerate().all(|(i, p)| ((i + 1) % 2 == 1) == (p.2 == Parity::Even))
    });
    Ok(AssumptionReport {
        n,
        delta_full: min_gap_full - pi2 / 4.0,
        delta_interior: min_gap_interior.map(|g| g - 3.0 * pi2 / 4.0),
        cond_a_interior: (n >= 2).then(|| condition_number(&em.a_interior)),
        cond_c_interior: (n >= 2).then(|| condition_number(&em.c_interior)),
        full_spectrum: full,
        interior_spectrum: interior,
        min_gap_full,
        min_gap_interior,
        min_cross_distance,
        parity_alternates,
        separation_tol,
        resolution,
        passed,
    })
}
