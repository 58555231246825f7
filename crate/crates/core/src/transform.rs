//! Fast `F_n` transforms between grid functions and eigen-expansion
//! coefficients, each costing `n` sine/cosine FFTs of length `O(K)`:
//!
//! - [`inverse_fn`]: coefficients `w_{kl}` to `w = Σ w_{kl} s_k^(l)`;
//! - [`direct_fcn`]: `y` to `ỹ_{kl}` with `y = Σ ỹ_{kl} C s_k^(l)`;
//! - [`direct_fn`]: `w` to its own coefficients, `w_{kl} = (Cw, s_k^(l)) / ‖s_k^(l)‖²`.
//!
//! [`LineTransform`] exposes the same operations on raw slices with reusable
//! workspaces, which is what the `N`-D sweeps use.

use crate::dense::dot;
use crate::grid::{coefficient_index, CoefficientArray1D, GridFunction1D};
use crate::spectral::SpectralTable1D;
use crate::trig::{TrigPlan, TrigWorkspace};
use crate::Error;

/// Which coefficients a direct transform produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direct {
    /// Coefficients in the basis `C s_k^(l)` (`FC_n`).
    MassWeighted,
    /// Coefficients in the basis `s_k^(l)` (`F_n`), by the closed form that
    /// avoids applying the mass matrix.
    Own,
    /// Same as `Own`, computed as `FC_n` of the mass-applied input.
    OwnViaMass,
}

/// Transforms for one `(n, K)` table.
pub struct LineTransform<'a> {
    table: &'a SpectralTable1D,
    plan: TrigPlan,
    // 2 cos(πk/2K), 2 sin(πk/2K), k = 0..=K
    cos2: Vec<f64>,
    sin2: Vec<f64>,
}

/// Scratch space for one thread.
pub struct LineWorkspace {
    trig: TrigWorkspace,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    // per-frequency interior vectors / per-component sine sums
    d: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    bubble: Vec<f64>,
    mass: Vec<f64>,
}

impl<'a> LineTransform<'a> {
    pub fn new(table: &'a SpectralTable1D) -> Self {
        let k = table.elements();
        let angle = |i: usize| std::f64::consts::PI * i as f64 / (2 * k) as f64;
        Self {
            table,
            plan: TrigPlan::new(k),
            cos2: (0..=k).map(|i| 2.0 * angle(i).cos()).collect(),
            sin2: (0..=k).map(|i| 2.0 * angle(i).sin()).collect(),
        }
    }

    pub fn table(&self) -> &SpectralTable1D {
        self.table
    }

    pub fn plan(&self) -> &TrigPlan {
        &self.plan
    }

    /// Length of a grid line, `nK + 1`.
    pub fn grid_len(&self) -> usize {
        self.table.order() * self.table.elements() + 1
    }

    /// Length of a coefficient line, `nK - 1`.
    pub fn coeff_len(&self) -> usize {
        self.table.order() * self.table.elements() - 1
    }

    pub fn workspace(&self) -> LineWorkspace {
        let k = self.table.elements();
        let m = self.table.order() - 1;
        LineWorkspace {
            trig: self.plan.workspace(),
            a: vec![0.0; k],
            b: vec![0.0; k],
            c: vec![0.0; k],
            d: vec![0.0; (k - 1) * m],
            u: vec![0.0; (k - 1) * m.div_ceil(2)],
            v: vec![0.0; (k - 1) * (m / 2)],
            bubble: vec![0.0; m],
            mass: vec![0.0; self.grid_len()],
        }
    }

    fn check(&self, what: &str, got: usize, want: usize) -> Result<(), Error> {
        if got == want {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what} for n={}, K={} has length {got}, expected {want}",
                self.table.order(),
                self.table.elements()
            )))
        }
    }

    /// Inverse `F_n`: coefficients (length `nK - 1`) to point values
    /// (length `nK + 1`, end points zero).
    pub fn inverse(&self, coeffs: &[f64], out: &mut [f64], ws: &mut LineWorkspace) -> Result<(), Error> {
        let t = self.table;
        let (n, k) = (t.order(), t.elements());
        let m = n - 1;
        self.check("coefficient line", coeffs.len(), self.coeff_len())?;
        self.check("grid line", out.len(), self.grid_len())?;
        out.fill(0.0);

        // Nodal values: one DST-I of the l-summed coefficients.
        for kk in 1..k {
            let start = coefficient_index(n, kk, 1);
            ws.a[kk - 1] = coeffs[start..start + n].iter().sum();
        }
        self.plan.dst1(&ws.a[..k - 1], &mut ws.b[..k - 1], &mut ws.trig)?;
        for j in 1..k {
            out[j * n] = ws.b[j - 1];
        }
        if m == 0 {
            return Ok(());
        }

        // d_k = Σ_l w_kl p_k^(l) and the bubble part Σ_l w_0l e^(l).
        for kk in 1..k {
            let d = &mut ws.d[(kk - 1) * m..kk * m];
            d.fill(0.0);
            let start = coefficient_index(n, kk, 1);
            for (br, &w) in t.branches_of(kk).iter().zip(&coeffs[start..start + n]) {
                for (di, &pi) in d.iter_mut().zip(&br.p) {
                    *di += w * pi;
                }
            }
        }
        ws.bubble.fill(0.0);
        for (l, e) in t.interior.vectors.iter().enumerate() {
            let w = coeffs[l];
            for (bi, &ei) in ws.bubble.iter_mut().zip(e) {
                *bi += w * ei;
            }
        }

        // One DST-III per even component and one DCT-III per odd component;
        // the mirror component i' = m-1-i reuses both.
        for i in 0..m.div_ceil(2) {
            let ir = m - 1 - i;
            for kk in 1..k {
                let d = &ws.d[(kk - 1) * m..kk * m];
                ws.a[kk - 1] = self.cos2[kk] * 0.5 * (d[i] + d[ir]);
            }
            ws.a[k - 1] = 0.0;
            self.plan.dst3(&ws.a, &mut ws.b, &mut ws.trig)?;
            if i < ir {
                ws.a[0] = 0.0;
                for kk in 1..k {
                    let d = &ws.d[(kk - 1) * m..kk * m];
                    ws.a[kk] = self.sin2[kk] * 0.5 * (d[i] - d[ir]);
                }
                self.plan.dct3(&ws.a, &mut ws.c, &mut ws.trig)?;
            } else {
                ws.c.fill(0.0);
            }
            for j in 1..=k {
                let base = (j - 1) * n + 1;
                let (bi, bir) = if j % 2 == 1 {
                    (ws.bubble[i], ws.bubble[ir])
                } else {
                    (-ws.bubble[ir], -ws.bubble[i])
                };
                out[base + i] = ws.b[j - 1] - ws.c[j - 1] + bi;
                if i < ir {
                    out[base + ir] = ws.b[j - 1] + ws.c[j - 1] + bir;
                }
            }
        }
        Ok(())
    }

    /// Direct transform of a grid line (length `nK + 1`) into coefficients
    /// (length `nK - 1`).
    pub fn direct(&self, kind: Direct, y: &[f64], out: &mut [f64], ws: &mut LineWorkspace) -> Result<(), Error> {
        self.check("grid line", y.len(), self.grid_len())?;
        self.check("coefficient line", out.len(), self.coeff_len())?;
        if kind == Direct::OwnViaMass {
            let mut mass = std::mem::take(&mut ws.mass);
            apply_mass_line(self.table, y, &mut mass);
            let r = self.direct_inner(Direct::MassWeighted, &mass, out, ws);
            ws.mass = mass;
            return r;
        }
        self.direct_inner(kind, y, out, ws)
    }

    fn direct_inner(&self, kind: Direct, y: &[f64], out: &mut [f64], ws: &mut LineWorkspace) -> Result<(), Error> {
        let t = self.table;
        let (n, k) = (t.order(), t.elements());
        let m = n - 1;
        let interior = |j: usize| &y[(j - 1) * n + 1..j * n];

        // k = 0: alternating sum Σ (-P)^{j-1} y_{j-1/2}.
        if m > 0 {
            ws.bubble.fill(0.0);
            for j in 1..=k {
                let v = interior(j);
                if j % 2 == 1 {
                    for (b, &x) in ws.bubble.iter_mut().zip(v) {
                        *b += x;
                    }
                } else {
                    for (b, &x) in ws.bubble.iter_mut().zip(v.iter().rev()) {
                        *b -= x;
                    }
                }
            }
            let inv_k = 1.0 / k as f64;
            for l in 0..m {
                let dual = match kind {
                    Direct::MassWeighted => &t.interior.vectors[l],
                    _ => &t.interior.mass_vectors[l],
                };
                out[l] = dot(&ws.bubble, dual) * inv_k;
            }
        }

        // Nodal sine sums.
        for j in 1..k {
            ws.a[j - 1] = y[j * n];
        }
        self.plan.dst1(&ws.a[..k - 1], &mut ws.b[..k - 1], &mut ws.trig)?;

        // Sine sums of (y_{j-1/2} + y_{j+1/2})_e and (y_{j+1/2} - y_{j-1/2})_o.
        let km = k - 1;
        for i in 0..m.div_ceil(2) {
            let ir = m - 1 - i;
            for j in 1..k {
                let (l, r) = (interior(j), interior(j + 1));
                ws.a[j - 1] = 0.5 * (l[i] + r[i] + l[ir] + r[ir]);
            }
            let (u, _) = ws.u[i * km..].split_at_mut(km);
            self.plan.dst1(&ws.a[..km], u, &mut ws.trig)?;
            if i < ir {
                for j in 1..k {
                    let (l, r) = (interior(j), interior(j + 1));
                    ws.a[j - 1] = 0.5 * ((r[i] - l[i]) - (r[ir] - l[ir]));
                }
                let (v, _) = ws.v[i * km..].split_at_mut(km);
                self.plan.dst1(&ws.a[..km], v, &mut ws.trig)?;
            }
        }

        for kk in 1..k {
            let nodal = ws.b[kk - 1];
            for (l, br) in t.branches_of(kk).iter().enumerate() {
                let (weight, even, odd) = match kind {
                    Direct::MassWeighted => (1.0, &br.p_even, &br.p_odd),
                    _ => (br.nodal_weight, &br.q_even, &br.q_odd),
                };
                let mut s = weight * nodal;
                for i in 0..m.div_ceil(2) {
                    let ir = m - 1 - i;
                    let u = ws.u[i * km + kk - 1];
                    if i < ir {
                        s += 2.0 * even[i] * u + 2.0 * odd[i] * ws.v[i * km + kk - 1];
                    } else {
                        s += even[i] * u;
                    }
                }
                out[coefficient_index(n, kk, l + 1)] = s / br.norm2;
            }
        }
        Ok(())
    }
}

/// `y = C w` on one grid line by looping over elements with the reference
/// mass matrix (end values of `y` are left at zero).
pub fn apply_mass_line(table: &SpectralTable1D, w: &[f64], y: &mut [f64]) {
    let (n, k) = (table.order(), table.elements());
    let c = &table.element.mass;
    y.fill(0.0);
    for e in 0..k {
        let base = e * n;
        for r in 0..=n {
            let row = c.row(r);
            let s: f64 = row.iter().zip(&w[base..=base + n]).map(|(a, b)| a * b).sum();
            y[base + r] += s;
        }
    }
    y[0] = 0.0;
    y[n * k] = 0.0;
}

fn check_dims(table: &SpectralTable1D, n: usize, k: usize) -> Result<(), Error> {
    if (n, k) == (table.order(), table.elements()) {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "data for n={n}, K={k} used with a table for n={}, K={}",
            table.order(),
            table.elements()
        )))
    }
}

/// Inverse `F_n`: the grid function `Σ w_{kl} s_k^(l)`.
pub fn inverse_fn(coeffs: &CoefficientArray1D, table: &SpectralTable1D) -> Result<GridFunction1D, Error> {
    check_dims(table, coeffs.order(), coeffs.elements())?;
    let tr = LineTransform::new(table);
    let mut ws = tr.workspace();
    let mut out = vec![0.0; tr.grid_len()];
    tr.inverse(coeffs.values(), &mut out, &mut ws)?;
    GridFunction1D::from_values(table.order(), table.elements(), out)
}

fn direct(kind: Direct, y: &GridFunction1D, table: &SpectralTable1D) -> Result<CoefficientArray1D, Error> {
    check_dims(table, y.order(), y.elements())?;
    let tr = LineTransform::new(table);
    let mut ws = tr.workspace();
    let mut out = vec![0.0; tr.coeff_len()];
    tr.direct(kind, y.values(), &mut out, &mut ws)?;
    CoefficientArray1D::from_values(table.order(), table.elements(), out)
}

/// Direct `FC_n`: coefficients of `y` in the basis `C s_k^(l)`.
pub fn direct_fcn(y: &GridFunction1D, table: &SpectralTable1D) -> Result<CoefficientArray1D, Error> {
    direct(Direct::MassWeighted, y, table)
}

/// Direct `F_n`: coefficients of `w` in the eigenbasis `s_k^(l)`.
pub fn direct_fn(w: &GridFunction1D, table: &SpectralTable1D) -> Result<CoefficientArray1D, Error> {
    direct(Direct::Own, w, table)
}

/// Direct `F_n` by way of an explicit mass application and `FC_n`.
pub fn direct_fn_via_mass(w: &GridFunction1D, table: &SpectralTable1D) -> Result<CoefficientArray1D, Error> {
    direct(Direct::OwnViaMass, w, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_spectral_table, materialize_eigenvector};
    use rand::{Rng, SeedableRng};

    fn random_coeffs(n: usize, k: usize, seed: u64) -> CoefficientArray1D {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let v = (0..n * k - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        CoefficientArray1D::from_values(n, k, v).unwrap()
    }

    #[test]
    fn unit_coefficients_give_eigenvectors() {
        for (n, k) in [(1, 4), (2, 3), (3, 5), (4, 4), (6, 3)] {
            let t = build_spectral_table(n, k).unwrap();
            for idx in 0..n * k - 1 {
                let (kk, l) = crate::grid::coefficient_branch(n, idx);
                let c = CoefficientArray1D::unit(n, k, kk, l);
                let w = inverse_fn(&c, &t).unwrap();
                let s = materialize_eigenvector(&t, kk, l).unwrap();
                assert!(w.max_abs_diff(&s) < 1e-12, "n={n} K={k} ({kk},{l})");
                let back = direct_fn(&s, &t).unwrap();
                assert!(back.max_abs_diff(&c) < 1e-12, "n={n} K={k} ({kk},{l})");
            }
        }
    }

    #[test]
    fn roundtrip_both_ways() {
        for (n, k) in [(1, 2), (2, 7), (3, 8), (5, 6)] {
            let t = build_spectral_table(n, k).unwrap();
            let c = random_coeffs(n, k, 11);
            let w = inverse_fn(&c, &t).unwrap();
            assert!(direct_fn(&w, &t).unwrap().max_abs_diff(&c) < 1e-12);
            let back = inverse_fn(&direct_fn(&w, &t).unwrap(), &t).unwrap();
            assert!(back.max_abs_diff(&w) < 1e-12);
        }
    }

    #[test]
    fn both_direct_routes_agree() {
        let t = build_spectral_table(4, 9).unwrap();
        let w = inverse_fn(&random_coeffs(4, 9, 3), &t).unwrap();
        let a = direct_fn(&w, &t).unwrap();
        let b = direct_fn_via_mass(&w, &t).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn one_trig_call_per_local_dof() {
        for n in 1..=6 {
            let t = build_spectral_table(n, 10).unwrap();
            let tr = LineTransform::new(&t);
            let mut ws = tr.workspace();
            let c = random_coeffs(n, 10, 5);
            let mut g = vec![0.0; tr.grid_len()];
            tr.inverse(c.values(), &mut g, &mut ws).unwrap();
            assert_eq!(tr.plan().calls(), n);
            tr.plan().reset_calls();
            let mut out = vec![0.0; tr.coeff_len()];
            tr.direct(Direct::Own, &g, &mut out, &mut ws).unwrap();
            assert_eq!(tr.plan().calls(), n);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let t = build_spectral_table(2, 4).unwrap();
        let c = CoefficientArray1D::zeros(2, 5);
        assert!(matches!(inverse_fn(&c, &t), Err(Error::Dimension(_))));
        let g = GridFunction1D::zeros(3, 4);
        assert!(matches!(direct_fcn(&g, &t), Err(Error::Dimension(_))));
    }

    #[test]
    fn pure_nodal_sine_has_one_frequency() {
        let (n, k, k0) = (3, 8, 3);
        let t = build_spectral_table(n, k).unwrap();
        let mut y = GridFunction1D::zeros(n, k);
        for j in 1..k {
            y.set_nodal(j, (std::f64::consts::PI * (j * k0) as f64 / k as f64).sin());
        }
        let c = direct_fcn(&y, &t).unwrap();
        for idx in 0..n * k - 1 {
            let (kk, _) = crate::grid::coefficient_branch(n, idx);
            if kk != k0 {
                assert!(c.values()[idx].abs() < 1e-13);
            }
        }
        assert!(c.values().iter().any(|v| v.abs() > 1e-3));
    }
}
