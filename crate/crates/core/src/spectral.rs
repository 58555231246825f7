//! The 1D eigen table: for each frequency `θ_k = cos(πk/K)` the `n` roots of
//! the theta equation, the interior vectors `p_k^(l)` of the eigenvectors and
//! their squared `C`-norms, plus a plain-text cache format.
//!
//! The theta equation is `ĝ0(λ) + θ ĝn(λ) = 0` where `ĝ0`, `ĝn` are the Schur
//! complements of the element pencil onto its end points. It is evaluated as
//!
//! ```text
//! F(λ) = (1+θ)/2 · λ Ê(λ) + (1-θ)/2 · O(λ)
//! ```
//!
//! with `λ Ê = ĝ0 + ĝn` collecting the even interior modes and `O = ĝ0 - ĝn`
//! the odd ones. The factor `λ` is divided out of the even part analytically
//! (constants are in the kernel of `A`), so the smallest roots, which are
//! `O(k²/K²)`, come out with full relative accuracy, and `1 ± θ` are formed as
//! `2cos²`, `2sin²` of `πk/2K` to avoid cancellation near `θ = ±1`.
//!
//! Both parts are strictly decreasing between their poles (the interior
//! eigenvalues `λ0^(l)`), tend to `+∞` just right of each pole and to `-∞`
//! just left of it and at infinity, and `F(0) > 0`. So `F` has exactly one
//! root in each of `(0, λ0^(1)), ..., (λ0^(n-1), ∞)`.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

use rayon::prelude::*;

use crate::dense::dot;
use crate::grid::GridFunction1D;
use crate::ref_element::{
    element_spectrum_full, even_odd_split, flip, ElementMatrices, InteriorEigenSystem, Parity,
};
use crate::scalar::{DoubleDouble, Scalar};
use crate::{CacheError, Error};

/// Relative distance to an interior eigenvalue below which `p(λ)` is refused.
pub const POLE_TOL: f64 = 1e-8;

const FORMAT_TAG: &str = "SFEM1";

/// One eigenpair branch `(k, l)` with `k >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch<T = f64> {
    pub lambda: T,
    /// Interior vector `p_k^(l)`; the element interiors of the eigenvector
    /// are `p sin(πk(j-1)/K) + P p sin(πkj/K)`.
    pub p: Vec<T>,
    pub p_even: Vec<T>,
    pub p_odd: Vec<T>,
    /// `q = C̃ p + c`.
    pub q: Vec<T>,
    pub q_even: Vec<T>,
    pub q_odd: Vec<T>,
    /// `‖s_k^(l)‖_C²`.
    pub norm2: T,
    /// `2 [c0 + c·p + θ (cn + c·P p)]`, the weight of the nodal sine sum in
    /// `(C w, s_k^(l))`.
    pub nodal_weight: T,
}

/// Evaluates `F` and `F'` for fixed weights `(1+θ)/2`, `(1-θ)/2`.
struct ThetaFunction<'a, T> {
    em: &'a ElementMatrices<T>,
    es: &'a InteriorEigenSystem<T>,
}

impl<T: Scalar> ThetaFunction<'_, T> {
    fn eval(&self, w_plus: T, w_minus: T, lambda: T) -> (T, T) {
        let em = self.em;
        let es = self.es;
        let two = T::from_f64(2.0);
        // Even part E = λ Ê.
        let mut e_hat = -(em.c0 + em.cn);
        let mut e_hat_d = T::zero();
        // Odd part O.
        let mut odd = (em.a0 - em.an) - lambda * (em.c0 - em.cn);
        let mut odd_d = -(em.c0 - em.cn);
        for l in 0..es.len() {
            let mu = es.eigenvalues[l];
            let a = es.a_proj[l];
            let c = es.c_proj[l];
            let d = lambda - mu;
            match es.parity[l] {
                Parity::Even => {
                    let num = a * a - two * mu * a * c + mu * lambda * c * c;
                    e_hat += two * num / (mu * d);
                    let r = a - mu * c;
                    e_hat_d -= two * r * r / (mu * d * d);
                }
                Parity::Odd => {
                    let g = a - lambda * c;
                    odd += two * g * g / d;
                    odd_d -= two * (two * c * g * d + g * g) / (d * d);
                }
            }
        }
        let value = w_plus * lambda * e_hat + w_minus * odd;
        let deriv = w_plus * (e_hat + lambda * e_hat_d) + w_minus * odd_d;
        (value, deriv)
    }

    /// Root of the decreasing function on `(lo, hi)` with `F(lo) > 0 > F(hi)`.
    fn refine(&self, w_plus: T, w_minus: T, mut lo: T, mut hi: T) -> T {
        let tol = T::from_f64(8.0 * T::EPSILON);
        let half = T::from_f64(0.5);
        let mut x = half * (lo + hi);
        for _ in 0..400 {
            let (f, df) = self.eval(w_plus, w_minus, x);
            if f == T::zero() {
                return x;
            }
            if f > T::zero() {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - f / df;
            let next = if df < T::zero() && newton > lo && newton < hi {
                newton
            } else {
                half * (lo + hi)
            };
            let step = (next - x).abs();
            x = next;
            if step <= tol * x.abs() || hi - lo <= tol * x.abs() {
                break;
            }
        }
        x
    }
}

fn half_weights<T: Scalar>(theta: T) -> (T, T) {
    let half = T::from_f64(0.5);
    (half * (T::one() + theta), half * (T::one() - theta))
}

/// Upper scale for the root search: four times the largest element
/// eigenvalue.
fn lambda_max<T: Scalar>(em: &ElementMatrices<T>, es: &InteriorEigenSystem<T>) -> Result<T, Error> {
    let full = element_spectrum_full(em)?;
    let top = full
        .iter()
        .chain(&es.eigenvalues)
        .fold(T::one(), |m, &x| m.max(x));
    Ok(T::from_f64(4.0) * top)
}

fn bracket_error(n: usize, theta: f64, reason: impl Into<String>) -> Error {
    Error::ThetaBracket {
        n,
        theta,
        reason: reason.into(),
    }
}

fn theta_roots<T: Scalar>(
    em: &ElementMatrices<T>,
    es: &InteriorEigenSystem<T>,
    w_plus: T,
    w_minus: T,
    lambda_max: T,
) -> Result<Vec<T>, Error> {
    let n = em.order();
    let theta = (w_plus - w_minus).to_f64();
    let f = ThetaFunction { em, es };
    let value = |x: T| f.eval(w_plus, w_minus, x).0;
    let offsets = [1e-3, 1e-6, 1e-9, 1e-12, 16.0 * T::EPSILON];
    let mut roots = Vec::with_capacity(n);
    for i in 0..n {
        let lo = if i == 0 {
            if !(value(T::zero()) > T::zero()) {
                return Err(bracket_error(n, theta, "F(0) is not positive"));
            }
            T::zero()
        } else {
            let mu = es.eigenvalues[i - 1];
            offsets
                .iter()
                .map(|&d| mu * (T::one() + T::from_f64(d)))
                .find(|&x| value(x) > T::zero())
                .ok_or_else(|| bracket_error(n, theta, format!("no sign change right of pole {i}")))?
        };
        let hi = if i + 1 < n {
            let mu = es.eigenvalues[i];
            offsets
                .iter()
                .map(|&d| mu * (T::one() - T::from_f64(d)))
                .find(|&x| value(x) < T::zero())
                .ok_or_else(|| bracket_error(n, theta, format!("no sign change left of pole {}", i + 1)))?
        } else {
            let start = lambda_max.max(lo + lo);
            let cap = T::from_f64(64.0) * start;
            let mut hi = start;
            while !(value(hi) < T::zero()) {
                hi = hi + hi;
                if hi > cap {
                    return Err(bracket_error(n, theta, "outer bracket exceeded 64 lambda_max"));
                }
            }
            hi
        };
        if !(lo < hi) {
            return Err(bracket_error(n, theta, format!("empty bracket for root {}", i + 1)));
        }
        roots.push(f.refine(w_plus, w_minus, lo, hi));
    }
    Ok(roots)
}

/// The `n` roots of the theta equation for `-1 < θ < 1`, ascending. Root
/// `l` lies strictly between interior eigenvalues `l - 1` and `l` (with
/// `0` and `∞` closing the ends).
pub fn solve_theta_equation<T: Scalar>(
    es: &InteriorEigenSystem<T>,
    em: &ElementMatrices<T>,
    theta: T,
) -> Result<Vec<T>, Error> {
    if !(theta > -T::one() && theta < T::one()) {
        return Err(bracket_error(em.order(), theta.to_f64(), "theta must lie in (-1, 1)"));
    }
    let (w_plus, w_minus) = half_weights(theta);
    theta_roots(em, es, w_plus, w_minus, lambda_max(em, es)?)
}

/// Newton estimate of the relative root error, `|F(λ) / (λ F'(λ))|`.
pub fn theta_residual<T: Scalar>(es: &InteriorEigenSystem<T>, em: &ElementMatrices<T>, theta: T, lambda: T) -> f64 {
    let f = ThetaFunction { em, es };
    let (w_plus, w_minus) = half_weights(theta);
    let (value, deriv) = f.eval(w_plus, w_minus, lambda);
    let scale = (lambda * deriv).abs();
    if scale == T::zero() {
        value.abs().to_f64()
    } else {
        (value / scale).to_f64().abs()
    }
}

/// Solves `(Ã - λC̃) p = -(a - λc)` through the interior eigenbasis:
/// `p = Σ (a^(l) - λ c^(l)) / (λ - λ0^(l)) e^(l)`.
pub fn interior_solve_p<T: Scalar>(es: &InteriorEigenSystem<T>, lambda: T) -> Result<Vec<T>, Error> {
    let m = es.vectors.first().map_or(0, Vec::len);
    let mut p = vec![T::zero(); m];
    for l in 0..es.len() {
        let mu = es.eigenvalues[l];
        let d = lambda - mu;
        if d.abs() <= T::from_f64(POLE_TOL) * mu.abs() {
            return Err(Error::NearPole {
                lambda: lambda.to_f64(),
                l: l + 1,
                pole: mu.to_f64(),
            });
        }
        let coef = (es.a_proj[l] - lambda * es.c_proj[l]) / d;
        for (pi, &ei) in p.iter_mut().zip(&es.vectors[l]) {
            *pi += coef * ei;
        }
    }
    Ok(p)
}

fn make_branch<T: Scalar>(em: &ElementMatrices<T>, k_count: usize, theta: T, lambda: T, p: Vec<T>) -> Branch<T> {
    let cp = em.c_interior.matvec(&p);
    let q: Vec<T> = cp.iter().zip(&em.c).map(|(&x, &y)| x + y).collect();
    let q_plus_c: Vec<T> = q.iter().zip(&em.c).map(|(&x, &y)| x + y).collect();
    let p_flip = flip(&p);
    let norm2 = T::from_usize(k_count)
        * (em.c0 + dot(&q_plus_c, &p) + theta * (em.cn + dot(&q_plus_c, &p_flip)));
    let nodal_weight =
        T::from_f64(2.0) * (em.c0 + dot(&em.c, &p) + theta * (em.cn + dot(&em.c, &p_flip)));
    let (p_even, p_odd) = even_odd_split(&p);
    let (q_even, q_odd) = even_odd_split(&q);
    Branch {
        lambda,
        p,
        p_even,
        p_odd,
        q,
        q_even,
        q_odd,
        norm2,
        nodal_weight,
    }
}

/// Complete eigen data of the 1D problem for order `n` and `K` elements.
#[derive(Clone, Debug)]
pub struct SpectralTable1D<T = f64> {
    n: usize,
    k: usize,
    pub element: ElementMatrices<T>,
    pub interior: InteriorEigenSystem<T>,
    /// `θ_k`, index `k - 1`.
    theta: Vec<T>,
    /// `(k, l)` at `(k - 1) n + l - 1`.
    branches: Vec<Branch<T>>,
}

/// Double-precision table for `1 <= n <= 9`, `K >= 2`.
///
/// Computed in double-double and rounded. The branch vectors `p` come from
/// `(a - λc) / (λ - μ)`, which cancels badly for low frequencies whose roots sit
/// next to a Dirichlet pole; a native f64 build (`SpectralTable1D::<f64>::build`)
/// loses up to three digits there.
pub fn build_spectral_table(n: usize, k: usize) -> Result<SpectralTable1D, Error> {
    if !(1..=f64::DEFAULT_MAX_ORDER).contains(&n) {
        return Err(Error::OrderOutOfRange {
            n,
            max: f64::DEFAULT_MAX_ORDER,
        });
    }
    Ok(SpectralTable1D::<DoubleDouble>::build(n, k)?.to_f64())
}

impl<T: Scalar> SpectralTable1D<T> {
    /// Builds the table at precision `T`, accepting orders up to
    /// `T::DEFAULT_MAX_ORDER`.
    pub fn build(n: usize, k: usize) -> Result<Self, Error> {
        let element = ElementMatrices::<T>::new(n)?;
        Self::from_element(element, k)
    }

    pub fn from_element(element: ElementMatrices<T>, k: usize) -> Result<Self, Error> {
        if k < 2 {
            return Err(Error::ElementCount(k));
        }
        let n = element.order();
        let interior = InteriorEigenSystem::new(&element)?;
        let lmax = lambda_max(&element, &interior)?;
        let pi = T::pi();
        let per_k: Vec<(T, Vec<Branch<T>>)> = (1..k)
            .into_par_iter()
            .map(|kk| {
                let angle = pi * T::from_usize(kk) / T::from_usize(2 * k);
                let (s, c) = (angle.sin(), angle.cos());
                let w_plus = c * c;
                let w_minus = s * s;
                let theta = (pi * T::from_usize(kk) / T::from_usize(k)).cos();
                let roots = theta_roots(&element, &interior, w_plus, w_minus, lmax)?;
                let branches = roots
                    .into_iter()
                    .map(|lambda| {
                        let p = interior_solve_p(&interior, lambda)?;
                        Ok(make_branch(&element, k, theta, lambda, p))
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                Ok((theta, branches))
            })
            .collect::<Result<_, Error>>()?;
        let mut theta = Vec::with_capacity(k - 1);
        let mut branches = Vec::with_capacity(n * (k - 1));
        for (t, b) in per_k {
            theta.push(t);
            branches.extend(b);
        }
        Ok(Self {
            n,
            k,
            element,
            interior,
            theta,
            branches,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> usize {
        self.k
    }

    /// Dimension of the space, `nK - 1`.
    pub fn dim(&self) -> usize {
        self.n * self.k - 1
    }

    /// `θ_k`, `1 <= k < K`.
    pub fn theta(&self, k: usize) -> T {
        self.theta[k - 1]
    }

    /// Branch `(k, l)`, `1 <= k < K`, `1 <= l <= n`.
    pub fn branch(&self, k: usize, l: usize) -> &Branch<T> {
        &self.branches[(k - 1) * self.n + l - 1]
    }

    /// The `n` branches of frequency `k`.
    pub fn branches_of(&self, k: usize) -> &[Branch<T>] {
        &self.branches[(k - 1) * self.n..k * self.n]
    }

    /// `λ_k^(l)`; for `k = 0` the interior eigenvalue `λ0^(l)`.
    pub fn eigenvalue(&self, k: usize, l: usize) -> T {
        if k == 0 {
            self.interior.eigenvalues[l - 1]
        } else {
            self.branch(k, l).lambda
        }
    }

    /// `‖s_k^(l)‖_C²` (`K` for `k = 0`).
    pub fn norm2(&self, k: usize, l: usize) -> T {
        if k == 0 {
            T::from_usize(self.k)
        } else {
            self.branch(k, l).norm2
        }
    }

    /// All `nK - 1` eigenvalues in coefficient order.
    pub fn eigenvalues(&self) -> Vec<T> {
        self.interior
            .eigenvalues
            .iter()
            .copied()
            .chain(self.branches.iter().map(|b| b.lambda))
            .collect()
    }

    /// Rounds every entry to `f64`.
    pub fn to_f64(&self) -> SpectralTable1D<f64> {
        let cv = |x: T| x.to_f64();
        let vc = |v: &[T]| v.iter().map(|&x| x.to_f64()).collect::<Vec<f64>>();
        SpectralTable1D {
            n: self.n,
            k: self.k,
            element: self.element.convert(),
            interior: self.interior.convert(),
            theta: vc(&self.theta),
            branches: self
                .branches
                .iter()
                .map(|b| Branch {
                    lambda: cv(b.lambda),
                    p: vc(&b.p),
                    p_even: vc(&b.p_even),
                    p_odd: vc(&b.p_odd),
                    q: vc(&b.q),
                    q_even: vc(&b.q_even),
                    q_odd: vc(&b.q_odd),
                    norm2: cv(b.norm2),
                    nodal_weight: cv(b.nodal_weight),
                })
                .collect(),
        }
    }

    /// Writes the cache text: header `SFEM1 n K digits`, then one record
    /// `k l λ p_1 .. p_{n-1} norm²` per eigenpair (`p = e^(l)` for `k = 0`).
    pub fn write_to(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "{FORMAT_TAG} {} {} {}", self.n, self.k, T::DIGITS)?;
        let mut line = String::new();
        let mut record = |k: usize, l: usize, lambda: T, p: &[T], norm2: T| {
            line.clear();
            write!(line, "{k} {l} {}", lambda.to_decimal()).unwrap();
            for &x in p {
                write!(line, " {}", x.to_decimal()).unwrap();
            }
            write!(line, " {}", norm2.to_decimal()).unwrap();
            writeln!(out, "{line}")
        };
        for l in 1..self.n {
            record(0, l, self.interior.eigenvalues[l - 1], &self.interior.vectors[l - 1], self.norm2(0, l))?;
        }
        for k in 1..self.k {
            for (l, b) in self.branches_of(k).iter().enumerate() {
                record(k, l + 1, b.lambda, &b.p, b.norm2)?;
            }
        }
        Ok(())
    }

    /// Reads a cache written by [`SpectralTable1D::write_to`]. Element data
    /// are rebuilt from `n`; derived vectors are recomputed from the stored
    /// `p` and the stored eigenvalues and norms are checked against them.
    pub fn read_from(reader: impl std::io::Read) -> Result<Self, CacheError> {
        let mut lines = BufReader::new(reader).lines().enumerate();
        let io_err = |e: std::io::Error, line: usize| CacheError::Corrupt {
            line,
            reason: e.to_string(),
        };
        let header = match lines.next() {
            Some((_, Ok(h))) => h,
            Some((i, Err(e))) => return Err(io_err(e, i + 1)),
            None => {
                return Err(CacheError::Corrupt {
                    line: 1,
                    reason: "empty file".into(),
                })
            }
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.first() != Some(&FORMAT_TAG) {
            return Err(CacheError::Version {
                found: fields.first().unwrap_or(&"").to_string(),
            });
        }
        let corrupt = |line: usize, reason: String| CacheError::Corrupt { line, reason };
        let parse_usize = |s: Option<&&str>, what: &str| -> Result<usize, CacheError> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| corrupt(1, format!("bad {what} in header")))
        };
        if fields.len() != 4 {
            return Err(corrupt(1, "header must be `SFEM1 n K digits`".into()));
        }
        let n = parse_usize(fields.get(1), "n")?;
        let k = parse_usize(fields.get(2), "K")?;
        parse_usize(fields.get(3), "digits")?;
        let element = ElementMatrices::<T>::with_max_order(n, crate::ref_element::HARD_MAX_ORDER)
            .map_err(|e| corrupt(1, e.to_string()))?;
        if k < 2 {
            return Err(corrupt(1, format!("K={k} is below 2")));
        }
        let mut interior = InteriorEigenSystem::new(&element).map_err(|e| corrupt(1, e.to_string()))?;
        let tol = T::from_f64(1e-9_f64.max(1e3 * T::EPSILON));
        let expected = n * k - 1;
        let mut theta = Vec::with_capacity(k - 1);
        let mut branches = Vec::with_capacity(n * (k - 1));
        let mut count = 0;
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.map_err(|e| io_err(e, lineno))?;
            if line.trim().is_empty() {
                continue;
            }
            if count == expected {
                return Err(corrupt(lineno, "more records than nK - 1".into()));
            }
            let (want_k, want_l) = crate::grid::coefficient_branch(n, count);
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != n + 3 {
                return Err(corrupt(lineno, format!("expected {} fields, found {}", n + 3, tokens.len())));
            }
            let rk: usize = tokens[0].parse().map_err(|_| corrupt(lineno, "bad k".into()))?;
            let rl: usize = tokens[1].parse().map_err(|_| corrupt(lineno, "bad l".into()))?;
            if (rk, rl) != (want_k, want_l) {
                return Err(corrupt(lineno, format!("expected record ({want_k}, {want_l}), found ({rk}, {rl})")));
            }
            let nums = tokens[2..]
                .iter()
                .map(|t| T::parse_decimal(t).ok_or_else(|| corrupt(lineno, format!("bad number {t:?}"))))
                .collect::<Result<Vec<T>, _>>()?;
            let lambda = nums[0];
            let p = nums[1..n].to_vec();
            let norm2 = nums[n];
            let close = |a: T, b: T| (a - b).abs() <= tol * b.abs().max(T::one());
            if rk == 0 {
                let mu = interior.eigenvalues[rl - 1];
                if !close(lambda, mu) || !close(norm2, T::from_usize(k)) {
                    return Err(corrupt(lineno, format!("bubble eigenpair ({rk}, {rl}) disagrees with the element")));
                }
                // Keep the stored digits for the vector and eigenvalue.
                interior.eigenvalues[rl - 1] = lambda;
                interior.vectors[rl - 1] = p;
            } else {
                if rl == 1 {
                    theta.push((T::pi() * T::from_usize(rk) / T::from_usize(k)).cos());
                }
                let th = theta[rk - 1];
                let resid = theta_residual(&interior, &element, th, lambda);
                let p_expected = interior_solve_p(&interior, lambda).map_err(|e| corrupt(lineno, e.to_string()))?;
                let p_ok = p
                    .iter()
                    .zip(&p_expected)
                    .all(|(&a, &b)| (a - b).abs() <= tol * p_expected.iter().fold(T::one(), |m, &x| m.max(x.abs())));
                if resid > 1e-8 || !p_ok {
                    return Err(corrupt(lineno, format!("eigenpair ({rk}, {rl}) does not solve the theta equation")));
                }
                let branch = make_branch(&element, k, th, lambda, p);
                if !close(branch.norm2, norm2) {
                    return Err(corrupt(lineno, format!("norm of ({rk}, {rl}) does not match its vector")));
                }
                if rl > 1 && !(branches.last().map(|b: &Branch<T>| b.lambda) < Some(lambda)) {
                    return Err(corrupt(lineno, format!("eigenvalues of k={rk} are not increasing")));
                }
                branches.push(branch);
            }
            count += 1;
        }
        if count != expected {
            return Err(corrupt(count + 2, format!("truncated: {count} of {expected} records")));
        }
        // Recompute the projections and mass vectors for the stored vectors.
        for l in 0..interior.len() {
            let e = &interior.vectors[l];
            interior.a_proj[l] = dot(&element.a, e);
            interior.a_flip_proj[l] = dot(&element.a_flip, e);
            interior.c_proj[l] = dot(&element.c, e);
            interior.c_flip_proj[l] = dot(&element.c_flip, e);
            interior.mass_vectors[l] = element.c_interior.matvec(e);
        }
        Ok(Self {
            n,
            k,
            element,
            interior,
            theta,
            branches,
        })
    }
}

/// Saves `table` to `path` in the `SFEM1` text format.
pub fn save_table<T: Scalar>(table: &SpectralTable1D<T>, path: &Path) -> Result<(), CacheError> {
    let io = |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    table.write_to(&mut w).map_err(io)?;
    w.flush().map_err(io)
}

/// Loads a table and checks that it was built for `(n, K)`.
pub fn load_table<T: Scalar>(path: &Path, n: usize, k: usize) -> Result<SpectralTable1D<T>, CacheError> {
    let file = std::fs::File::open(path).map_err(|source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let table = SpectralTable1D::<T>::read_from(file)?;
    if table.n != n || table.k != k {
        return Err(CacheError::Mismatch {
            found_n: table.n,
            found_k: table.k,
            want_n: n,
            want_k: k,
        });
    }
    Ok(table)
}

/// Eigenvector `s_k^(l)` as a grid function.
pub fn materialize_eigenvector(table: &SpectralTable1D, k: usize, l: usize) -> Result<GridFunction1D, Error> {
    let n = table.order();
    let kk = table.elements();
    let valid = if k == 0 { l >= 1 && l < n } else { k < kk && l >= 1 && l <= n };
    if !valid {
        return Err(Error::Dimension(format!("no eigenpair ({k}, {l}) for n={n}, K={kk}")));
    }
    let mut s = GridFunction1D::zeros(n, kk);
    if k == 0 {
        let e = &table.interior.vectors[l - 1];
        let e_flip = flip(e);
        for j in 1..=kk {
            let src: Vec<f64> = if j % 2 == 1 {
                e.clone()
            } else {
                e_flip.iter().map(|x| -x).collect()
            };
            s.interior_mut(j).copy_from_slice(&src);
        }
        return Ok(s);
    }
    let b = table.branch(k, l);
    let p_flip = flip(&b.p);
    let w = std::f64::consts::PI * k as f64 / kk as f64;
    let sine = |j: usize| if j == 0 || j == kk { 0.0 } else { (w * j as f64).sin() };
    for j in 1..kk {
        s.set_nodal(j, sine(j));
    }
    for j in 1..=kk {
        let (s0, s1) = (sine(j - 1), sine(j));
        for (i, v) in s.interior_mut(j).iter_mut().enumerate() {
            *v = b.p[i] * s0 + p_flip[i] * s1;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ref_element::{build_element_matrices, interior_eigensystem};
    use crate::scalar::DoubleDouble;

    #[test]
    fn linear_theta_equation_root() {
        // (a0 - λ c0) + θ (an - λ cn) = 0 with a0 = 1/2, c0 = 2/3, an = -1/2,
        // cn = 1/3 gives λ = (1 - θ) / (2 (2/3 + θ/3)) = 3(1 - θ) / (2(2 + θ)).
        let em = build_element_matrices(1).unwrap();
        let es = interior_eigensystem(&em).unwrap();
        for theta in [0.0, 0.5, -0.5, 0.99, -0.99] {
            let r = solve_theta_equation(&es, &em, theta).unwrap();
            let want = 3.0 * (1.0 - theta) / (2.0 * (2.0 + theta));
            assert_eq!(r.len(), 1);
            assert!((r[0] - want).abs() < 1e-14 * want, "θ={theta}: {} vs {want}", r[0]);
        }
        let r = solve_theta_equation(&es, &em, 0.0).unwrap();
        assert!((r[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn roots_interlace_poles_and_satisfy_equation() {
        for n in 1..=9 {
            let em = build_element_matrices(n).unwrap();
            let es = interior_eigensystem(&em).unwrap();
            for theta in [-0.999, -0.3, 0.0, 0.7, 0.99999] {
                let roots = solve_theta_equation(&es, &em, theta).unwrap();
                assert_eq!(roots.len(), n);
                for (i, &r) in roots.iter().enumerate() {
                    assert!(r > 0.0);
                    if i > 0 {
                        assert!(r > es.eigenvalues[i - 1]);
                    }
                    if i + 1 < n {
                        assert!(r < es.eigenvalues[i]);
                    }
                    let res = theta_residual(&es, &em, theta, r);
                    assert!(res < 1e-10, "n={n} θ={theta} root {i}: residual {res}");
                }
            }
        }
    }

    #[test]
    fn theta_out_of_range_is_rejected() {
        let em = build_element_matrices(2).unwrap();
        let es = interior_eigensystem(&em).unwrap();
        assert!(matches!(
            solve_theta_equation(&es, &em, 1.0),
            Err(Error::ThetaBracket { .. })
        ));
    }

    #[test]
    fn p_solves_the_interior_system() {
        let em = build_element_matrices(4).unwrap();
        let es = interior_eigensystem(&em).unwrap();
        for lambda in [0.0, 1.3, 7.7, 40.0] {
            let p = interior_solve_p(&es, lambda).unwrap();
            let ap = em.a_interior.matvec(&p);
            let cp = em.c_interior.matvec(&p);
            for i in 0..p.len() {
                let r = ap[i] - lambda * cp[i] + em.a[i] - lambda * em.c[i];
                assert!(r.abs() < 1e-12 * em.a_interior.max_abs(), "λ={lambda}: {r}");
            }
        }
        let pole = es.eigenvalues[1];
        assert!(matches!(interior_solve_p(&es, pole), Err(Error::NearPole { l: 2, .. })));
        let em1 = build_element_matrices(1).unwrap();
        assert!(interior_solve_p(&interior_eigensystem(&em1).unwrap(), 2.0).unwrap().is_empty());
    }

    #[test]
    fn quadratic_p_at_zero() {
        let em = build_element_matrices(2).unwrap();
        let es = interior_eigensystem(&em).unwrap();
        let p = interior_solve_p(&es, 0.0).unwrap();
        let want = -em.a[0] / em.a_interior[(0, 0)];
        assert!((p[0] - want).abs() < 1e-15);
    }

    #[test]
    fn table_counts_and_positivity() {
        let t = build_spectral_table(2, 2).unwrap();
        assert_eq!(t.eigenvalues().len(), 3);
        let t = build_spectral_table(5, 8).unwrap();
        let ev = t.eigenvalues();
        assert_eq!(ev.len(), 39);
        assert!(ev.iter().all(|&x| x > 0.0));
        for k in 1..8 {
            let b = t.branches_of(k);
            assert!(b.windows(2).all(|w| w[0].lambda < w[1].lambda));
            for br in b {
                assert!(br.norm2 > 0.0);
                for mu in &t.interior.eigenvalues {
                    assert!((br.lambda - mu).abs() > 1e-6);
                }
            }
        }
        assert!(matches!(build_spectral_table(2, 1), Err(Error::ElementCount(1))));
    }

    #[test]
    fn linear_table_matches_second_difference_symbol() {
        // n = 1: λ_k = 6 sin²(πk/2K) / (2 + cos(πk/K)) with the [-1,1] scaling.
        let k = 9;
        let t = build_spectral_table(1, k).unwrap();
        for kk in 1..k {
            let s = (std::f64::consts::PI * kk as f64 / (2 * k) as f64).sin();
            let th = (std::f64::consts::PI * kk as f64 / k as f64).cos();
            let want = 3.0 * 2.0 * s * s / (2.0 * (2.0 + th));
            let got = t.eigenvalue(kk, 1);
            assert!((got - want).abs() < 1e-14 * want, "k={kk}: {got} vs {want}");
        }
    }

    #[test]
    fn small_roots_keep_relative_accuracy() {
        // The smallest eigenvalue ~ (πk/2K)² must match the extended-precision
        // table to near full relative precision even for large K.
        let k = 4096;
        let t = build_spectral_table(3, k).unwrap();
        let ext = SpectralTable1D::<DoubleDouble>::build(3, k).unwrap();
        for kk in [1, 2, k / 2, k - 1] {
            for l in 1..=3 {
                let a = t.eigenvalue(kk, l);
                let b = ext.eigenvalue(kk, l).to_f64();
                assert!((a - b).abs() <= 1e-14 * b, "k={kk} l={l}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn eigenvectors_satisfy_recurrences() {
        // Five-term relations at the nodes and the interior block relation.
        let (n, k) = (3, 6);
        let t = build_spectral_table(n, k).unwrap();
        let em = &t.element;
        for kk in 0..k {
            let ls = if kk == 0 { 1..n } else { 1..n + 1 };
            for l in ls {
                let lambda = t.eigenvalue(kk, l);
                let s = materialize_eigenvector(&t, kk, l).unwrap();
                let g0 = em.a0 - lambda * em.c0;
                let gn = em.an - lambda * em.cn;
                let g: Vec<f64> = em.a.iter().zip(&em.c).map(|(a, c)| a - lambda * c).collect();
                let gf = flip(&g);
                for j in 1..k {
                    let r = gn * s.nodal(j - 1)
                        + dot(&gf, s.interior(j))
                        + 2.0 * g0 * s.nodal(j)
                        + dot(&g, s.interior(j + 1))
                        + gn * s.nodal(j + 1);
                    assert!(r.abs() < 1e-10, "({kk},{l}) node {j}: {r}");
                }
                for j in 1..=k {
                    let v = s.interior(j);
                    let av = em.a_interior.matvec(v);
                    let cv = em.c_interior.matvec(v);
                    for i in 0..n - 1 {
                        let r = g[i] * s.nodal(j - 1) + av[i] - lambda * cv[i] + gf[i] * s.nodal(j);
                        assert!(r.abs() < 1e-10, "({kk},{l}) element {j}: {r}");
                    }
                }
            }
        }
    }

    #[test]
    fn materialize_edge_cases() {
        let t = build_spectral_table(3, 2).unwrap();
        let s = materialize_eigenvector(&t, 1, 2).unwrap();
        assert!((s.nodal(1) - 1.0).abs() < 1e-15);
        let s0 = materialize_eigenvector(&t, 0, 1).unwrap();
        assert_eq!(s0.nodal(1), 0.0);
        assert!(materialize_eigenvector(&t, 0, 3).is_err());
        assert!(materialize_eigenvector(&t, 2, 1).is_err());
    }

    #[test]
    fn cache_roundtrip_and_errors() {
        let t = build_spectral_table(3, 5).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("SFEM1 3 5 17\n"));
        let back = SpectralTable1D::<f64>::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.eigenvalues(), t.eigenvalues());
        for k in 1..5 {
            for l in 1..=3 {
                let (b, w) = (back.branch(k, l), t.branch(k, l));
                assert_eq!((b.lambda, &b.p), (w.lambda, &w.p));
                assert!((b.norm2 - w.norm2).abs() <= 1e-14 * w.norm2);
                assert!((b.nodal_weight - w.nodal_weight).abs() <= 1e-14 * w.nodal_weight.abs().max(1.0));
            }
        }
        let truncated = &buf[..buf.len() - 40];
        assert!(matches!(
            SpectralTable1D::<f64>::read_from(truncated),
            Err(CacheError::Corrupt { .. })
        ));
        let versioned = text.replacen("SFEM1", "SFEM0", 1);
        assert!(matches!(
            SpectralTable1D::<f64>::read_from(versioned.as_bytes()),
            Err(CacheError::Version { .. })
        ));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.sfem");
        save_table(&t, &path).unwrap();
        assert!(load_table::<f64>(&path, 3, 5).is_ok());
        assert!(matches!(
            load_table::<f64>(&path, 3, 6),
            Err(CacheError::Mismatch { want_k: 6, found_k: 5, .. })
        ));
        assert!(matches!(
            load_table::<f64>(&dir.path().join("missing"), 3, 5),
            Err(CacheError::Io { .. })
        ));
    }

    #[test]
    fn tampered_eigenvalue_is_detected() {
        let t = build_spectral_table(2, 3).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut fields: Vec<String> = lines[3].split_whitespace().map(String::from).collect();
        let lambda: f64 = fields[2].parse().unwrap();
        fields[2] = format!("{:e}", lambda * 1.001);
        lines[3] = fields.join(" ");
        let bad = lines.join("\n");
        assert!(matches!(
            SpectralTable1D::<f64>::read_from(bad.as_bytes()),
            Err(CacheError::Corrupt { line: 4, .. })
        ));
    }

    #[test]
    fn extended_cache_keeps_extra_digits() {
        let t = SpectralTable1D::<DoubleDouble>::build(4, 4).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = SpectralTable1D::<DoubleDouble>::read_from(buf.as_slice()).unwrap();
        for k in 1..4 {
            for l in 1..=4 {
                let d = (back.eigenvalue(k, l) - t.eigenvalue(k, l)).to_f64().abs();
                assert!(d < 1e-29 * t.eigenvalue(k, l).to_f64());
            }
        }
        // A double-double cache also loads at f64.
        assert!(SpectralTable1D::<f64>::read_from(buf.as_slice()).is_ok());
    }
}
