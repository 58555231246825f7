//! FEM load vectors `f^h`: inner products of `f` with each tensor Lagrange
//! basis function, in the scaling of the reference-element operators.
//!
//! On a box with steps `h_a` the true load is `∫ f φ = Π (h_a/2) Σ_q Π w_q f φ`.
//! The discrete system is multiplied through by `Π 2/h_a` so that the mass
//! matrices stay the `[-1, 1]` ones, which leaves `f^h = Σ_q Π w_q f(x_q) φ(x_q)`
//! with reference Gauss weights.

use ndarray::{ArrayD, IxDyn};
use rayon::prelude::*;

use super::sweep::map_axis;
use crate::grid::GridFunctionND;
use crate::quadrature::{GaussLegendre, LagrangeBasis};
use crate::Error;

/// Per-axis data of the load operator: `n + 1` Gauss points per element and
/// the weighted basis values `w_q e_r(ξ_q)`.
struct AxisRule {
    n: usize,
    k: usize,
    points: Vec<f64>,
    // [q][r]
    weighted: Vec<f64>,
}

impl AxisRule {
    fn new(n: usize, k: usize, length: f64) -> Self {
        let rule = GaussLegendre::<f64>::new(n + 1);
        let basis = LagrangeBasis::<f64>::equispaced(n);
        let h = length / k as f64;
        let mut points = Vec::with_capacity(k * (n + 1));
        for e in 0..k {
            for &xi in &rule.nodes {
                points.push(h * (e as f64 + 0.5 * (xi + 1.0)));
            }
        }
        let mut weighted = Vec::with_capacity((n + 1) * (n + 1));
        for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
            weighted.extend(basis.values(xi).into_iter().map(|v| w * v));
        }
        Self { n, k, points, weighted }
    }

    /// Gauss-point samples (length `K(n+1)`) to load values (length `nK+1`).
    fn apply(&self, g: &[f64], out: &mut [f64]) {
        let (n, k) = (self.n, self.k);
        out.fill(0.0);
        for e in 0..k {
            for q in 0..=n {
                let gq = g[e * (n + 1) + q];
                let row = &self.weighted[q * (n + 1)..(q + 1) * (n + 1)];
                for (r, &wv) in row.iter().enumerate() {
                    out[e * n + r] += wv * gq;
                }
            }
        }
        out[0] = 0.0;
        out[n * k] = 0.0;
    }
}

/// `f^h` for `f` on the box `Π [0, X_a]`, with `(n_a + 1)`-point Gauss rules
/// per axis and element.
pub fn load_average(
    orders: &[usize],
    elements: &[usize],
    lengths: &[f64],
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<GridFunctionND, Error> {
    let dim = orders.len();
    let rules: Vec<AxisRule> = (0..dim)
        .map(|a| AxisRule::new(orders[a], elements[a], lengths[a]))
        .collect();
    let shape: Vec<usize> = rules.iter().map(|r| r.points.len()).collect();
    let total: usize = shape.iter().product();
    let samples: Vec<f64> = (0..total)
        .into_par_iter()
        .with_min_len(256)
        .map_init(
            || vec![0.0; dim],
            |x, mut flat| {
                for a in (0..dim).rev() {
                    x[a] = rules[a].points[flat % shape[a]];
                    flat /= shape[a];
                }
                f(x)
            },
        )
        .collect();
    let mut data = ArrayD::from_shape_vec(IxDyn(&shape), samples).expect("sample shape");
    for (a, rule) in rules.iter().enumerate() {
        data = map_axis(&data, a, rule.n * rule.k + 1, || (), |_, src, dst, _| {
            rule.apply(src, dst);
            Ok(())
        })?;
    }
    GridFunctionND::from_array(orders, elements, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_load() {
        let g = load_average(&[3], &[4], &[1.0], &|_| 0.0).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn quadratic_load_is_exact() {
        // n = 2, K = 2 on [0, 1], f = x^2. Element 2 maps ξ -> x = (3 + ξ)/4;
        // its midpoint basis 1 - ξ² gives ∫ (3+ξ)²/16 (1-ξ²) dξ = 23/30.
        let g = load_average(&[2], &[2], &[1.0], &|x| x[0] * x[0]).unwrap();
        assert!((g.data()[[3]] - 23.0 / 30.0).abs() < 1e-14);
        // Node x = 1/2 collects from both neighbours:
        // ∫ (1+ξ)²/16 · ξ(1+ξ)/2 = 3/40 and ∫ (3+ξ)²/16 · ξ(ξ-1)/2 = 3/40.
        assert!((g.data()[[2]] - 3.0 / 20.0).abs() < 1e-14);
    }

    #[test]
    fn unit_load_on_square_with_hats() {
        // n = 1, K = 2: one interior node whose reference hat integrates to 1
        // on each of its two elements per axis, so f^h = (1 + 1)² = 4.
        let g = load_average(&[1, 1], &[2, 2], &[1.0, 1.0], &|_| 1.0).unwrap();
        assert!((g.data()[[1, 1]] - 4.0).abs() < 1e-14);
        assert_eq!(g.data()[[0, 1]], 0.0);
    }
}
