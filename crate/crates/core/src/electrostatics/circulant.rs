//! Matrix-vector products with circulant couplings through the 2D FFT.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Diagonalized circulant operator on an nx x ny periodic lattice.
#[derive(Clone)]
pub(crate) struct Spectrum {
    nx: usize,
    ny: usize,
    // eigenvalues in transposed (y fastest) layout
    eig: Vec<Complex64>,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectrum")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish_non_exhaustive()
    }
}

impl Spectrum {
    /// `kernel[ox + nx * oy]` is the response at offset (ox, oy) from the source.
    pub(crate) fn new(nx: usize, ny: usize, kernel: &[f64]) -> Self {
        let mut planner = FftPlanner::new();
        let mut s = Self {
            nx,
            ny,
            eig: Vec::new(),
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        };
        let mut buf: Vec<Complex64> = kernel.iter().map(|&k| Complex64::new(k, 0.0)).collect();
        s.eig = s.forward(&mut buf);
        s
    }

    /// Row FFTs, transpose, column FFTs; returns the transposed spectrum.
    fn forward(&self, buf: &mut [Complex64]) -> Vec<Complex64> {
        self.fwd_x.process(buf);
        let mut t = transpose(buf, self.nx, self.ny);
        self.fwd_y.process(&mut t);
        t
    }

    pub(crate) fn apply(&self, p: &[f64], out: &mut [f64]) {
        let n = self.nx * self.ny;
        let mut buf: Vec<Complex64> = p.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut t = self.forward(&mut buf);
        for (z, e) in t.iter_mut().zip(&self.eig) {
            *z *= e;
        }
        self.inv_y.process(&mut t);
        let mut back = transpose(&t, self.ny, self.nx);
        self.inv_x.process(&mut back);
        let scale = 1.0 / n as f64;
        for (o, z) in out.iter_mut().zip(&back) {
            *o = z.re * scale;
        }
    }
}

/// `a` holds `rows` rows of `cols` entries; returns `cols` rows of `rows`.
fn transpose(a: &[Complex64], cols: usize, rows: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(0.0, 0.0); a.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = a[r * cols + c];
        }
    }
    t
}
