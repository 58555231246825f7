//! Grid functions of the order-`n` Lagrange spaces on uniform meshes and the
//! coefficient arrays of their eigen-expansions.
//!
//! A 1D grid function with `K` elements stores all `nK + 1` Lagrange points
//! in left-to-right order: node `j` sits at position `j n`, and the interior
//! vector `v_{j-1/2}` of element `j` (`1 <= j <= K`) occupies positions
//! `(j-1) n + 1 ..= j n - 1`. The two end points are kept and held at zero.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use ndarray::{ArrayD, IxDyn};

use crate::Error;

/// Element of the 1D Dirichlet Lagrange space of order `n` on `K` elements.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction1D {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl GridFunction1D {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            values: vec![0.0; n * k + 1],
        }
    }

    /// Wraps all `nK + 1` point values; the two end values are overwritten
    /// with zero.
    pub fn from_values(n: usize, k: usize, mut values: Vec<f64>) -> Result<Self, Error> {
        if values.len() != n * k + 1 {
            return Err(Error::Dimension(format!(
                "grid function for n={n}, K={k} needs {} values, got {}",
                n * k + 1,
                values.len()
            )));
        }
        values[0] = 0.0;
        values[n * k] = 0.0;
        Ok(Self { n, k, values })
    }

    /// Samples `f` at the Lagrange points `x_i = i X / (nK)` of `[0, X]`.
    pub fn from_fn(n: usize, k: usize, length: f64, f: impl Fn(f64) -> f64) -> Self {
        let total = n * k;
        let mut values: Vec<f64> = (0..=total).map(|i| f(length * i as f64 / total as f64)).collect();
        values[0] = 0.0;
        values[total] = 0.0;
        Self { n, k, values }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Nodal value `v_j`, `0 <= j <= K`.
    pub fn nodal(&self, j: usize) -> f64 {
        self.values[j * self.n]
    }

    /// Sets `v_j` for `1 <= j <= K - 1`.
    pub fn set_nodal(&mut self, j: usize, value: f64) {
        assert!(j >= 1 && j < self.k, "nodal index {j} is not interior");
        self.values[j * self.n] = value;
    }

    /// Interior vector `v_{j-1/2}` of element `j`, `1 <= j <= K`.
    pub fn interior(&self, j: usize) -> &[f64] {
        let start = (j - 1) * self.n + 1;
        &self.values[start..start + self.n - 1]
    }

    pub fn interior_mut(&mut self, j: usize) -> &mut [f64] {
        let start = (j - 1) * self.n + 1;
        &mut self.values[start..start + self.n - 1]
    }

    /// Plain inner product over all degrees of freedom.
    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Degrees of freedom as a vector of length `nK - 1` (end points dropped),
    /// in point order.
    pub fn unknowns(&self) -> &[f64] {
        &self.values[1..self.n * self.k]
    }

    pub fn from_unknowns(n: usize, k: usize, unknowns: &[f64]) -> Result<Self, Error> {
        if unknowns.len() + 1 != n * k {
            return Err(Error::Dimension(format!(
                "expected {} unknowns for n={n}, K={k}, got {}",
                n * k - 1,
                unknowns.len()
            )));
        }
        let mut values = Vec::with_capacity(n * k + 1);
        values.push(0.0);
        values.extend_from_slice(unknowns);
        values.push(0.0);
        Ok(Self { n, k, values })
    }
}

/// Expansion coefficients `w_{0l}` (`l < n`) and `w_{kl}` (`1 <= k < K`,
/// `l <= n`), stored k-major: the `n - 1` bubble coefficients first, then one
/// contiguous block of `n` per frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientArray1D {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl CoefficientArray1D {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            values: vec![0.0; n * k - 1],
        }
    }

    pub fn from_values(n: usize, k: usize, values: Vec<f64>) -> Result<Self, Error> {
        if values.len() + 1 != n * k {
            return Err(Error::Dimension(format!(
                "coefficient array for n={n}, K={k} needs {} values, got {}",
                n * k - 1,
                values.len()
            )));
        }
        Ok(Self { n, k, values })
    }

    /// Indicator of the `(k, l)` branch.
    pub fn unit(n: usize, k_count: usize, k: usize, l: usize) -> Self {
        let mut c = Self::zeros(n, k_count);
        let idx = c.index(k, l);
        c.values[idx] = 1.0;
        c
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> usize {
        self.k
    }

    /// Flat position of `(k, l)`, `l` one-based.
    pub fn index(&self, k: usize, l: usize) -> usize {
        coefficient_index(self.n, k, l)
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[self.index(k, l)]
    }

    pub fn set(&mut self, k: usize, l: usize, value: f64) {
        let i = self.index(k, l);
        self.values[i] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Flat position of coefficient `(k, l)` (`l` one-based) for order `n`.
pub fn coefficient_index(n: usize, k: usize, l: usize) -> usize {
    if k == 0 {
        debug_assert!(l >= 1 && l < n);
        l - 1
    } else {
        debug_assert!(l >= 1 && l <= n);
        n - 1 + (k - 1) * n + (l - 1)
    }
}

/// `(k, l)` of a flat coefficient position.
pub fn coefficient_branch(n: usize, index: usize) -> (usize, usize) {
    if index < n - 1 {
        (0, index + 1)
    } else {
        let r = index - (n - 1);
        (r / n + 1, r % n + 1)
    }
}

/// Tensor-product grid function: one value per Lagrange point of the box,
/// boundary points included and held at zero.
///
/// Along axis `a` the point index runs `0..=n_a K_a`; indices divisible by
/// `n_a` are element nodes ("integer" class), the others element interiors
/// ("half-integer" class).
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunctionND {
    orders: Vec<usize>,
    elements: Vec<usize>,
    data: ArrayD<f64>,
}

impl GridFunctionND {
    pub fn zeros(orders: &[usize], elements: &[usize]) -> Self {
        assert_eq!(orders.len(), elements.len());
        let shape: Vec<usize> = orders.iter().zip(elements).map(|(n, k)| n * k + 1).collect();
        Self {
            orders: orders.to_vec(),
            elements: elements.to_vec(),
            data: ArrayD::zeros(IxDyn(&shape)),
        }
    }

    /// Wraps an array of point values; boundary values are zeroed.
    pub fn from_array(orders: &[usize], elements: &[usize], data: ArrayD<f64>) -> Result<Self, Error> {
        let shape: Vec<usize> = orders.iter().zip(elements).map(|(n, k)| n * k + 1).collect();
        if data.shape() != shape.as_slice() {
            return Err(Error::Dimension(format!(
                "grid array has shape {:?}, expected {shape:?}",
                data.shape()
            )));
        }
        let mut g = Self {
            orders: orders.to_vec(),
            elements: elements.to_vec(),
            data,
        };
        g.zero_boundary();
        Ok(g)
    }

    /// Samples `f` at the Lagrange points of the box `Π [0, X_a]`.
    pub fn from_fn(orders: &[usize], elements: &[usize], lengths: &[f64], f: impl Fn(&[f64]) -> f64) -> Self {
        let mut g = Self::zeros(orders, elements);
        let steps: Vec<f64> = (0..orders.len())
            .map(|a| lengths[a] / (orders[a] * elements[a]) as f64)
            .collect();
        let mut x = vec![0.0; orders.len()];
        for (idx, v) in g.data.indexed_iter_mut() {
            for a in 0..x.len() {
                x[a] = idx[a] as f64 * steps[a];
            }
            *v = f(&x);
        }
        g.zero_boundary();
        g
    }

    pub fn zero_boundary(&mut self) {
        for a in 0..self.orders.len() {
            let last = self.data.shape()[a] - 1;
            self.data.index_axis_mut(ndarray::Axis(a), 0).fill(0.0);
            self.data.index_axis_mut(ndarray::Axis(a), last).fill(0.0);
        }
    }

    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn data(&self) -> &ArrayD<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut ArrayD<f64> {
        &mut self.data
    }

    pub fn into_data(self) -> ArrayD<f64> {
        self.data
    }

    /// Number of unknowns, `Π (n_a K_a - 1)`.
    pub fn unknowns(&self) -> usize {
        self.orders.iter().zip(&self.elements).map(|(n, k)| n * k - 1).product()
    }

    /// Per-axis class of a point: `true` for element nodes.
    pub fn is_nodal(&self, axis: usize, index: usize) -> bool {
        index.is_multiple_of(self.orders[axis])
    }

    /// Index class label: one letter per axis, `I` for an element node and
    /// `H` for an element interior point.
    pub fn class_label(&self, index: &[usize]) -> String {
        index
            .iter()
            .enumerate()
            .map(|(a, &i)| if self.is_nodal(a, i) { 'I' } else { 'H' })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Writes the CSV dump `class,i1..iN,x1..xN,value` over all interior
    /// points in row-major order.
    pub fn write_csv(&self, lengths: &[f64], out: &mut impl std::io::Write) -> std::io::Result<()> {
        let dim = self.dim();
        let mut header = String::from("class");
        for a in 1..=dim {
            write!(header, ",i{a}").unwrap();
        }
        for a in 1..=dim {
            write!(header, ",x{a}").unwrap();
        }
        writeln!(out, "{header},value")?;
        let mut line = String::new();
        for (idx, v) in self.data.indexed_iter() {
            let idx = ndarray::Dimension::slice(&idx);
            if idx
                .iter()
                .zip(self.data.shape())
                .any(|(&i, &len)| i == 0 || i == len - 1)
            {
                continue;
            }
            line.clear();
            line.push_str(&self.class_label(idx));
            for &i in idx {
                write!(line, ",{i}").unwrap();
            }
            for a in 0..dim {
                let x = lengths[a] * idx[a] as f64 / (self.orders[a] * self.elements[a]) as f64;
                write!(line, ",{x:e}").unwrap();
            }
            writeln!(out, "{line},{v:e}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, lengths: &[f64], path: &Path) -> Result<(), Error> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(lengths, &mut w)?;
        w.flush()?;
        Ok(())
    }
}

impl From<&GridFunction1D> for GridFunctionND {
    fn from(g: &GridFunction1D) -> Self {
        let data = ArrayD::from_shape_vec(IxDyn(&[g.values.len()]), g.values.clone()).expect("1D shape");
        Self {
            orders: vec![g.n],
            elements: vec![g.k],
            data,
        }
    }
}
