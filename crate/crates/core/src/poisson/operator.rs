//! Matrix-free application of the discrete operator
//! `Σ_a 4h_a⁻² A_a ⊗ Π_{b≠a} C_b + α Π C_b` by per-axis element sweeps.

use ndarray::ArrayD;

use super::sweep::map_axis;
use crate::dense::Matrix;
use crate::grid::GridFunctionND;
use crate::ref_element::ElementMatrices;
use crate::Error;

/// `y = M v` on one grid line for the reference matrix `local`, end values
/// of `y` zeroed.
pub fn apply_line(local: &Matrix<f64>, v: &[f64], y: &mut [f64]) {
    let n = local.rows() - 1;
    let k = (v.len() - 1) / n;
    y.fill(0.0);
    for e in 0..k {
        let w = &v[e * n..=e * n + n];
        for r in 0..=n {
            y[e * n + r] += local.row(r).iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    y[0] = 0.0;
    y[n * k] = 0.0;
}

fn apply_axis(data: &ArrayD<f64>, axis: usize, local: &Matrix<f64>) -> Result<ArrayD<f64>, Error> {
    let len = data.shape()[axis];
    map_axis(data, axis, len, || (), |_, src, dst, _| {
        apply_line(local, src, dst);
        Ok(())
    })
}

/// Left-hand side of the discrete system applied to `v`.
pub fn apply_operator_with(
    elements: &[ElementMatrices<f64>],
    lengths: &[f64],
    alpha: f64,
    v: &GridFunctionND,
) -> Result<GridFunctionND, Error> {
    let dim = v.dim();
    let ks = v.elements();
    let mut total = ArrayD::zeros(v.data().raw_dim());
    for term in 0..=dim {
        // term < dim: stiffness along `term`; term == dim: the α mass term.
        let coef = if term < dim {
            let h = lengths[term] / ks[term] as f64;
            4.0 / (h * h)
        } else {
            alpha
        };
        if coef == 0.0 {
            continue;
        }
        let mut t = v.data().clone();
        for (a, em) in elements.iter().enumerate() {
            let local = if a == term { &em.stiffness } else { &em.mass };
            t = apply_axis(&t, a, local)?;
        }
        total.scaled_add(coef, &t);
    }
    GridFunctionND::from_array(v.orders(), v.elements(), total)
}

/// Mass action `Π C_a v`.
pub fn apply_mass(elements: &[ElementMatrices<f64>], v: &GridFunctionND) -> Result<GridFunctionND, Error> {
    let mut t = v.data().clone();
    for (a, em) in elements.iter().enumerate() {
        t = apply_axis(&t, a, &em.mass)?;
    }
    GridFunctionND::from_array(v.orders(), v.elements(), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ref_element::build_element_matrices;

    #[test]
    fn line_stencil_for_hats() {
        let em = build_element_matrices(1).unwrap();
        let v = [0.0, 1.0, 2.0, 0.0];
        let mut y = [0.0; 4];
        apply_line(&em.stiffness, &v, &mut y);
        // (1/2)(2 v_j - v_{j-1} - v_{j+1})
        for (g, e) in y.iter().zip([0.0, 0.0, 1.5, 0.0]) {
            assert!((g - e).abs() < 1e-15);
        }
        apply_line(&em.mass, &v, &mut y);
        assert!((y[1] - (4.0 / 3.0 + 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_maps_to_zero() {
        let ems = vec![build_element_matrices(2).unwrap(), build_element_matrices(3).unwrap()];
        let v = GridFunctionND::zeros(&[2, 3], &[3, 2]);
        let y = apply_operator_with(&ems, &[1.0, 2.0], 1.0, &v).unwrap();
        assert_eq!(y.max_abs(), 0.0);
    }
}
