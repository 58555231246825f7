//! Manufactured solutions `u = Π sin(m_a π x_a) · cosh(Σ c_a x_a)` on the unit
//! box and the matching right-hand sides `f = -Δu + αu`.

use std::f64::consts::PI;
use std::sync::Arc;

use super::ProblemSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct ManufacturedCase {
    pub name: String,
    /// Sine frequencies `m_a`.
    pub modes: Vec<f64>,
    /// Coefficients `c_a` of the cosh argument.
    pub slopes: Vec<f64>,
    pub alpha: f64,
}

impl ManufacturedCase {
    /// `u = sin(2πx) cosh(√2 x)`.
    pub fn poisson1d() -> Self {
        Self {
            name: "poisson1d".into(),
            modes: vec![2.0],
            slopes: vec![2f64.sqrt()],
            alpha: 1.0,
        }
    }

    /// `u = sin(2πx₁) sin(3πx₂) cosh(√2x₁ - x₂)`.
    pub fn poisson2d() -> Self {
        Self {
            name: "poisson2d".into(),
            modes: vec![2.0, 3.0],
            slopes: vec![2f64.sqrt(), -1.0],
            alpha: 1.0,
        }
    }

    /// `u = sin(2πx₁) sin(3πx₂) sin(4πx₃) cosh(√2x₁ - x₂ + x₃/√3)`.
    pub fn poisson3d() -> Self {
        Self {
            name: "poisson3d".into(),
            modes: vec![2.0, 3.0, 4.0],
            slopes: vec![2f64.sqrt(), -1.0, 1.0 / 3f64.sqrt()],
            alpha: 1.0,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "poisson1d" => Some(Self::poisson1d()),
            "poisson2d" => Some(Self::poisson2d()),
            "poisson3d" => Some(Self::poisson3d()),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn exact(&self, x: &[f64]) -> f64 {
        let phase: f64 = self.slopes.iter().zip(x).map(|(c, x)| c * x).sum();
        let s: f64 = self.modes.iter().zip(x).map(|(m, x)| (m * PI * x).sin()).product();
        s * phase.cosh()
    }

    pub fn rhs(&self, x: &[f64]) -> f64 {
        let dim = self.dim();
        let phase: f64 = self.slopes.iter().zip(x).map(|(c, x)| c * x).sum();
        let (ch, sh) = (phase.cosh(), phase.sinh());
        let sines: Vec<f64> = (0..dim).map(|a| (self.modes[a] * PI * x[a]).sin()).collect();
        let s: f64 = sines.iter().product();
        let u = s * ch;
        let mut lap = 0.0;
        for a in 0..dim {
            let (m, c) = (self.modes[a] * PI, self.slopes[a]);
            let others: f64 = (0..dim).filter(|&b| b != a).map(|b| sines[b]).product();
            lap += (c * c - m * m) * u + 2.0 * c * m * (m * x[a]).cos() * others * sh;
        }
        -lap + self.alpha * u
    }

    /// Problem on the unit box with the same order and element count on
    /// every axis.
    pub fn spec(&self, n: usize, k: usize) -> ProblemSpec {
        let dim = self.dim();
        let case = Arc::new(self.clone());
        let exact = Arc::clone(&case);
        ProblemSpec {
            lengths: vec![1.0; dim],
            elements: vec![k; dim],
            orders: vec![n; dim],
            alpha: self.alpha,
            rhs: Arc::new(move |x: &[f64]| case.rhs(x)),
            exact: Some(Arc::new(move |x: &[f64]| exact.exact(x))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_matches_finite_difference_laplacian() {
        let case = ManufacturedCase::poisson3d();
        let x = [0.31, 0.47, 0.73];
        let h = 1e-4;
        let mut lap = 0.0;
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            lap += (case.exact(&xp) - 2.0 * case.exact(&x) + case.exact(&xm)) / (h * h);
        }
        let want = -lap + case.alpha * case.exact(&x);
        assert!((case.rhs(&x) - want).abs() < 1e-5 * want.abs().max(1.0));
    }

    #[test]
    fn solution_vanishes_on_the_boundary() {
        let case = ManufacturedCase::poisson2d();
        for t in [0.0, 0.3, 1.0] {
            assert!(case.exact(&[0.0, t]).abs() < 1e-15);
            assert!(case.exact(&[1.0, t]).abs() < 1e-14);
            assert!(case.exact(&[t, 1.0]).abs() < 1e-14);
        }
    }
}
