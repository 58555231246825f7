//! Gauss–Legendre rules on [-1, 1] and the equispaced Lagrange basis of the
//! reference element.

use crate::scalar::Scalar;

/// Gauss–Legendre rule with `m` points on [-1, 1], nodes ascending.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

/// Legendre polynomial `P_m(x)` and its derivative.
fn legendre<T: Scalar>(m: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if m == 0 {
        return (p0, T::zero());
    }
    for k in 2..=m {
        let kf = T::from_usize(k);
        let p2 = ((T::from_usize(2 * k - 1)) * x * p1 - T::from_usize(k - 1) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // (1 - x^2) P'_m = m (P_{m-1} - x P_m)
    let dp = T::from_usize(m) * (p0 - x * p1) / (T::one() - x * x);
    (p1, dp)
}

impl<T: Scalar> GaussLegendre<T> {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "a Gauss rule needs at least one node");
        let mut nodes = vec![T::zero(); m];
        let mut weights = vec![T::zero(); m];
        for i in 0..m.div_ceil(2) {
            // Descending Chebyshev-like seed, refined by Newton in T.
            let seed = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut x = T::from_f64(seed);
            for _ in 0..100 {
                let (p, dp) = legendre(m, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs().to_f64() <= 4.0 * T::EPSILON {
                    break;
                }
            }
            if m % 2 == 1 && i == m / 2 {
                x = T::zero();
            }
            let (_, dp) = legendre(m, x);
            let w = T::from_f64(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[m - 1 - i] = x;
            nodes[i] = -x;
            weights[m - 1 - i] = w;
            weights[i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Lagrange basis of degree `n` on the nodes `-1 + 2k/n`, `k = 0..=n`.
#[derive(Clone, Debug)]
pub struct LagrangeBasis<T> {
    nodes: Vec<T>,
    // 1 / prod_{m != k} (x_k - x_m)
    inv_denominators: Vec<T>,
}

impl<T: Scalar> LagrangeBasis<T> {
    pub fn equispaced(n: usize) -> Self {
        let nodes: Vec<T> = (0..=n)
            .map(|k| T::from_f64(-1.0) + T::from_usize(2 * k) / T::from_usize(n))
            .collect();
        let inv_denominators = (0..=n)
            .map(|k| {
                let prod = (0..=n)
                    .filter(|&m| m != k)
                    .fold(T::one(), |acc, m| acc * (nodes[k] - nodes[m]));
                T::one() / prod
            })
            .collect();
        Self {
            nodes,
            inv_denominators,
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// `e_k(x)` for all `k`.
    pub fn values(&self, x: T) -> Vec<T> {
        let n = self.order();
        (0..=n)
            .map(|k| {
                (0..=n)
                    .filter(|&m| m != k)
                    .fold(self.inv_denominators[k], |acc, m| acc * (x - self.nodes[m]))
            })
            .collect()
    }

    /// `e_k'(x)` for all `k`, by the product rule (valid at the nodes too).
    pub fn derivatives(&self, x: T) -> Vec<T> {
        let n = self.order();
        (0..=n)
            .map(|k| {
                let mut total = T::zero();
                for i in (0..=n).filter(|&i| i != k) {
                    let prod = (0..=n)
                        .filter(|&m| m != k && m != i)
                        .fold(T::one(), |acc, m| acc * (x - self.nodes[m]));
                    total += prod;
                }
                total * self.inv_denominators[k]
            })
            .collect()
    }
}
