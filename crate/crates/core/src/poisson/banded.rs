//! Symmetric positive definite band matrices in lower band storage and their
//! Cholesky factorization, for the 1D systems `[s A + σ C] v = f` along one
//! axis.

use crate::ref_element::ElementMatrices;
use crate::Error;

/// Lower band storage: `band[i * (b + 1) + d] = M[i][i - d]`, `0 <= d <= b`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    size: usize,
    bandwidth: usize,
    band: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(size: usize, bandwidth: usize) -> Self {
        Self {
            size,
            bandwidth,
            band: vec![0.0; size * (bandwidth + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Entry `(i, j)` with `|i - j| <= b` (zero outside the band).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        if d > self.bandwidth {
            0.0
        } else {
            self.band[r * (self.bandwidth + 1) + d]
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let d = i - j;
        self.band[i * (self.bandwidth + 1) + d] += v;
    }

    /// Global 1D matrix on the `nK - 1` Dirichlet unknowns from the reference
    /// element matrix `local` (order `n`), assembled element by element.
    pub fn assemble(local: &crate::dense::Matrix<f64>, k: usize) -> Self {
        let n = local.rows() - 1;
        let size = n * k - 1;
        let mut m = Self::zeros(size, n);
        for e in 0..k {
            for r in 0..=n {
                for c in 0..=r {
                    let (gr, gc) = (e * n + r, e * n + c);
                    // Unknown u corresponds to point u + 1; drop the end points.
                    if gc == 0 || gr == n * k {
                        continue;
                    }
                    m.add(gr - 1, gc - 1, local[(r, c)]);
                }
            }
        }
        m
    }

    /// `y = M x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let b = self.bandwidth;
        y.fill(0.0);
        for i in 0..self.size {
            let row = &self.band[i * (b + 1)..(i + 1) * (b + 1)];
            y[i] += row[0] * x[i];
            for d in 1..=b.min(i) {
                y[i] += row[d] * x[i - d];
                y[i - d] += row[d] * x[i];
            }
        }
    }
}

/// Stiffness and mass skeletons of one axis; each shifted system is
/// `scale A + shift C`.
#[derive(Clone, Debug)]
pub struct ShiftedSystem {
    stiffness: BandMatrix,
    mass: BandMatrix,
}

impl ShiftedSystem {
    pub fn new(em: &ElementMatrices<f64>, k: usize) -> Self {
        Self {
            stiffness: BandMatrix::assemble(&em.stiffness, k),
            mass: BandMatrix::assemble(&em.mass, k),
        }
    }

    pub fn size(&self) -> usize {
        self.stiffness.size
    }

    /// Fresh buffer able to hold one factorization.
    pub fn factor_buffer(&self) -> BandMatrix {
        BandMatrix::zeros(self.stiffness.size, self.stiffness.bandwidth)
    }

    /// Solves `(scale A + shift C) x = rhs` in place, using `work` for the
    /// factor.
    pub fn solve(&self, scale: f64, shift: f64, rhs: &mut [f64], work: &mut BandMatrix) -> Result<(), Error> {
        for ((w, &a), &c) in work
            .band
            .iter_mut()
            .zip(&self.stiffness.band)
            .zip(&self.mass.band)
        {
            *w = scale * a + shift * c;
        }
        cholesky_in_place(work)?;
        cholesky_solve(work, rhs);
        Ok(())
    }
}

/// Overwrites `m` with its lower Cholesky factor `L` (same band storage).
pub fn cholesky_in_place(m: &mut BandMatrix) -> Result<(), Error> {
    let b = m.bandwidth;
    let w = b + 1;
    for i in 0..m.size {
        let lo = i.saturating_sub(b);
        for j in lo..=i {
            // s = M[i][j] - Σ_{p<j} L[i][p] L[j][p]
            let mut s = m.band[i * w + (i - j)];
            let start = lo.max(j.saturating_sub(b));
            for p in start..j {
                s -= m.band[i * w + (i - p)] * m.band[j * w + (j - p)];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NotPositiveDefinite(format!(
                        "band pivot {i} of {} is {s:e}",
                        m.size
                    )));
                }
                m.band[i * w] = s.sqrt();
            } else {
                m.band[i * w + (i - j)] = s / m.band[j * w];
            }
        }
    }
    Ok(())
}

/// Solves `L L^T x = rhs` in place for a factor from [`cholesky_in_place`].
pub fn cholesky_solve(l: &BandMatrix, rhs: &mut [f64]) {
    let b = l.bandwidth;
    let w = b + 1;
    let n = l.size;
    for i in 0..n {
        let mut s = rhs[i];
        for p in i.saturating_sub(b)..i {
            s -= l.band[i * w + (i - p)] * rhs[p];
        }
        rhs[i] = s / l.band[i * w];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for r in i + 1..(i + b + 1).min(n) {
            s -= l.band[r * w + (r - i)] * rhs[r];
        }
        rhs[i] = s / l.band[i * w];
    }
}
