//! Unnormalized sine/cosine transforms on `K` intervals:
//!
//! ```text
//! DST-I    X_k = Σ_{j=1}^{K-1} x_j sin(πjk/K),          k = 1..K-1
//! DST-III  w_j = Σ_{k=1}^{K}   b_k sin(πk(j-1/2)/K),    j = 1..K
//! DCT-III  w_j = Σ_{k=0}^{K-1} a_k cos(πk(j-1/2)/K),    j = 1..K
//! ```
//!
//! and the adjoint of DST-III (the half-sample analysis). Each one is a real
//! FFT of length `2K` with pre/post twiddles, so any `K` works.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::Error;

/// FFT plans and twiddles for one `K`. Shareable across threads; each thread
/// brings its own [`TrigWorkspace`].
pub struct TrigPlan {
    k: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    // e^{iπk/2K}, k = 0..=K
    twiddles: Vec<Complex64>,
    calls: AtomicUsize,
}

impl std::fmt::Debug for TrigPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrigPlan")
            .field("k", &self.k)
            .field("calls", &self.calls())
            .finish()
    }
}

/// Per-thread buffers for [`TrigPlan`].
pub struct TrigWorkspace {
    real: Vec<f64>,
    spectrum: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl TrigPlan {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "transforms need at least one interval");
        let mut planner = RealFftPlanner::new();
        let forward = planner.plan_fft_forward(2 * k);
        let inverse = planner.plan_fft_inverse(2 * k);
        let twiddles = (0..=k)
            .map(|i| Complex64::from_polar(1.0, std::f64::consts::PI * i as f64 / (2 * k) as f64))
            .collect();
        Self {
            k,
            forward,
            inverse,
            twiddles,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn intervals(&self) -> usize {
        self.k
    }

    pub fn workspace(&self) -> TrigWorkspace {
        let scratch_len = self.forward.get_scratch_len().max(self.inverse.get_scratch_len());
        TrigWorkspace {
            real: vec![0.0; 2 * self.k],
            spectrum: vec![Complex64::default(); self.k + 1],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    /// Number of transforms run through this plan so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    fn check(&self, what: &str, got: usize, want: usize) -> Result<(), Error> {
        if got == want {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what} for K={} expects length {want}, got {got}",
                self.k
            )))
        }
    }

    fn real_to_spectrum(&self, ws: &mut TrigWorkspace) {
        self.forward
            .process_with_scratch(&mut ws.real, &mut ws.spectrum, &mut ws.scratch)
            .expect("buffer lengths match the plan");
    }

    /// `ws.real = Σ_k h_k e^{2πikj/2K}` for a Hermitian `h` whose first and
    /// last entries are real.
    fn spectrum_to_real(&self, ws: &mut TrigWorkspace) {
        self.inverse
            .process_with_scratch(&mut ws.spectrum, &mut ws.real, &mut ws.scratch)
            .expect("buffer lengths match the plan");
    }

    /// DST-I of `x` (length `K - 1`) into `out` (length `K - 1`).
    pub fn dst1(&self, x: &[f64], out: &mut [f64], ws: &mut TrigWorkspace) -> Result<(), Error> {
        let k = self.k;
        self.check("DST-I input", x.len(), k - 1)?;
        self.check("DST-I output", out.len(), k - 1)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        if k == 1 {
            return Ok(());
        }
        // Odd extension [0, x, 0, -rev x]: its DFT is -2i X_k.
        let buf = &mut ws.real;
        buf[0] = 0.0;
        buf[k] = 0.0;
        for (j, &v) in x.iter().enumerate() {
            buf[j + 1] = v;
            buf[2 * k - 1 - j] = -v;
        }
        self.real_to_spectrum(ws);
        for (o, y) in out.iter_mut().zip(&ws.spectrum[1..k]) {
            *o = -0.5 * y.im;
        }
        Ok(())
    }

    /// DST-III synthesis of `b_1..b_K` (length `K`) into `w_1..w_K`.
    pub fn dst3(&self, b: &[f64], out: &mut [f64], ws: &mut TrigWorkspace) -> Result<(), Error> {
        let k = self.k;
        self.check("DST-III input", b.len(), k)?;
        self.check("DST-III output", out.len(), k)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        // w = Im Σ t_k b_k e^{2πik(j-1)/2K} = Re Σ d_k e^{..} with d = -i t b,
        // the real part of which is the inverse of d's Hermitian part.
        let h = &mut ws.spectrum;
        h[0] = Complex64::default();
        for i in 1..k {
            let t = self.twiddles[i] * b[i - 1];
            h[i] = Complex64::new(0.5 * t.im, -0.5 * t.re);
        }
        h[k] = Complex64::new((self.twiddles[k] * b[k - 1]).im, 0.0);
        self.spectrum_to_real(ws);
        out.copy_from_slice(&ws.real[..k]);
        Ok(())
    }

    /// DCT-III synthesis of `a_0..a_{K-1}` (length `K`) into `w_1..w_K`.
    pub fn dct3(&self, a: &[f64], out: &mut [f64], ws: &mut TrigWorkspace) -> Result<(), Error> {
        let k = self.k;
        self.check("DCT-III input", a.len(), k)?;
        self.check("DCT-III output", out.len(), k)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        let h = &mut ws.spectrum;
        h[0] = Complex64::new(a[0], 0.0);
        for i in 1..k {
            h[i] = self.twiddles[i] * (0.5 * a[i]);
        }
        h[k] = Complex64::default();
        self.spectrum_to_real(ws);
        out.copy_from_slice(&ws.real[..k]);
        Ok(())
    }

    /// Adjoint of DST-III: `B_k = Σ_{j=1}^{K} y_j sin(πk(j-1/2)/K)`,
    /// `k = 1..K`.
    pub fn dst3_analysis(&self, y: &[f64], out: &mut [f64], ws: &mut TrigWorkspace) -> Result<(), Error> {
        let k = self.k;
        self.check("DST-III analysis input", y.len(), k)?;
        self.check("DST-III analysis output", out.len(), k)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        ws.real[..k].copy_from_slice(y);
        ws.real[k..].fill(0.0);
        self.real_to_spectrum(ws);
        // The inverse DFT of real data is the conjugate of the forward one.
        for (i, o) in out.iter_mut().enumerate() {
            *o = (self.twiddles[i + 1] * ws.spectrum[i + 1].conj()).im;
        }
        Ok(())
    }
}

fn run(k: usize, f: impl FnOnce(&TrigPlan, &mut TrigWorkspace) -> Result<Vec<f64>, Error>) -> Result<Vec<f64>, Error> {
    let plan = TrigPlan::new(k);
    let mut ws = plan.workspace();
    f(&plan, &mut ws)
}

/// DST-I of `x`, `K = x.len() + 1`.
pub fn dst1(x: &[f64]) -> Vec<f64> {
    let k = x.len() + 1;
    run(k, |p, ws| {
        let mut out = vec![0.0; k - 1];
        p.dst1(x, &mut out, ws)?;
        Ok(out)
    })
    .expect("lengths are consistent")
}

/// DST-III synthesis of `b_1..b_K`, `K = b.len() >= 1`.
pub fn dst3_synthesis(b: &[f64]) -> Result<Vec<f64>, Error> {
    if b.is_empty() {
        return Err(Error::Dimension("DST-III needs K >= 1 coefficients".into()));
    }
    run(b.len(), |p, ws| {
        let mut out = vec![0.0; b.len()];
        p.dst3(b, &mut out, ws)?;
        Ok(out)
    })
}

/// DCT-III synthesis of `a_0..a_{K-1}`, `K = a.len() >= 1`.
pub fn dct3_synthesis(a: &[f64]) -> Result<Vec<f64>, Error> {
    if a.is_empty() {
        return Err(Error::Dimension("DCT-III needs K >= 1 coefficients".into()));
    }
    run(a.len(), |p, ws| {
        let mut out = vec![0.0; a.len()];
        p.dct3(a, &mut out, ws)?;
        Ok(out)
    })
}

/// Adjoint of [`dst3_synthesis`].
pub fn dst3_analysis(y: &[f64]) -> Result<Vec<f64>, Error> {
    if y.is_empty() {
        return Err(Error::Dimension("DST-III analysis needs K >= 1 values".into()));
    }
    run(y.len(), |p, ws| {
        let mut out = vec![0.0; y.len()];
        p.dst3_analysis(y, &mut out, ws)?;
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let scale = b.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    #[test]
    fn dst1_of_unit_vector() {
        let x = dst1(&[1.0, 0.0, 0.0]);
        let h = 0.5 * 2f64.sqrt();
        assert!(close(&x, &[h, 1.0, h], 1e-15));
    }

    #[test]
    fn dst1_picks_out_a_single_mode() {
        let k = 8;
        let x: Vec<f64> = (1..k).map(|j| (PI * j as f64 * 2.0 / k as f64).sin()).collect();
        let mut want = vec![0.0; k - 1];
        want[1] = 4.0;
        assert!(close(&dst1(&x), &want, 1e-14));
    }

    #[test]
    fn dst1_edge_and_errors() {
        assert!(dst1(&[]).is_empty());
        let plan = TrigPlan::new(4);
        let mut ws = plan.workspace();
        let mut out = vec![0.0; 3];
        assert!(plan.dst1(&[1.0, 2.0], &mut out, &mut ws).is_err());
        assert!(dst3_synthesis(&[]).is_err());
    }

    #[test]
    fn half_sample_examples() {
        let h = 0.5 * 2f64.sqrt();
        assert!(close(&dst3_synthesis(&[1.0, 0.0]).unwrap(), &[h, h], 1e-15));
        assert!(close(&dct3_synthesis(&[0.0, 1.0]).unwrap(), &[h, -h], 1e-15));
        assert!(close(&dct3_synthesis(&[1.0, 0.0, 0.0]).unwrap(), &[1.0, 1.0, 1.0], 1e-15));
        // b_K alone: sin(π(j - 1/2)) = (-1)^{j-1}.
        assert!(close(&dst3_synthesis(&[0.0, 0.0, 2.0]).unwrap(), &[2.0, -2.0, 2.0], 1e-15));
    }

    #[test]
    fn plan_counts_calls() {
        let plan = TrigPlan::new(5);
        let mut ws = plan.workspace();
        let mut out = vec![0.0; 5];
        plan.dct3(&[1.0; 5], &mut out, &mut ws).unwrap();
        plan.dst3(&[1.0; 5], &mut out, &mut ws).unwrap();
        assert_eq!(plan.calls(), 2);
        plan.reset_calls();
        assert_eq!(plan.calls(), 0);
    }
}
