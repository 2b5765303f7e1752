//! Uniform periodic 1D grid with a spectral momentum representation.
//!
//! Conventions (`x_i = -L/2 + i dx`, `P_j = 2 pi hbar j / L` in FFT order):
//!
//! ```text
//! psi~(P_j) = dx * sum_i psi(x_i) exp(-i P_j x_i / hbar)
//! psi(x_i)  = (1/L) * sum_j psi~(P_j) exp(+i P_j x_i / hbar)
//! ```
//!
//! so that `sum_i |psi_i|^2 dx = (1/L) sum_j |psi~_j|^2` and a momentum
//! integral `dP / (2 pi hbar)` becomes `1/L` times a sum over the grid.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure_positive, Error, Result};

pub type C64 = Complex64;

#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    hbar: f64,
    x: Vec<f64>,
    p: Vec<f64>,
    /// `exp(-i P_j x_0 / hbar)`
    origin_phase: Vec<C64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("hbar", &self.hbar)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length && self.hbar == other.hbar
    }
}

impl Grid {
    /// `n` must be even and at least 4.
    pub fn new(n: usize, length: f64, hbar: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Domain(format!("grid size must be even and >= 4, got {n}")));
        }
        ensure_positive("box length", length)?;
        ensure_positive("hbar", hbar)?;
        let dx = length / n as f64;
        let x0 = -0.5 * length;
        let x = (0..n).map(|i| x0 + i as f64 * dx).collect();
        let dp = 2.0 * std::f64::consts::PI * hbar / length;
        let p: Vec<f64> = (0..n).map(|j| signed_index(j, n) as f64 * dp).collect();
        let origin_phase = p.iter().map(|&pj| C64::from_polar(1.0, -pj * x0 / hbar)).collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self { n, length, hbar, x, p, origin_phase, forward, inverse })
    }

    pub fn shared(n: usize, length: f64, hbar: f64) -> Result<Arc<Self>> {
        Self::new(n, length, hbar).map(Arc::new)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.hbar / self.length
    }

    /// Largest representable |P|, `pi hbar / dx`.
    pub fn p_max(&self) -> f64 {
        std::f64::consts::PI * self.hbar / self.dx()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Momenta in FFT order.
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Index of `P_a + P_b` on the periodic momentum grid.
    #[inline]
    pub fn add_index(&self, a: usize, b: usize) -> usize {
        let s = a + b;
        if s >= self.n {
            s - self.n
        } else {
            s
        }
    }

    /// Index of `P_a - P_b` on the periodic momentum grid.
    #[inline]
    pub fn sub_index(&self, a: usize, b: usize) -> usize {
        if a >= b {
            a - b
        } else {
            a + self.n - b
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n {
            Ok(())
        } else {
            Err(Error::GridMismatch { expected: self.n, got: len })
        }
    }

    /// Position samples -> momentum amplitudes, in place.
    pub fn forward_in_place(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
        let dx = self.dx();
        for (v, ph) in buf.iter_mut().zip(&self.origin_phase) {
            *v *= ph * dx;
        }
    }

    /// Momentum amplitudes -> position samples, in place.
    pub fn inverse_in_place(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        let inv_l = 1.0 / self.length;
        for (v, ph) in buf.iter_mut().zip(&self.origin_phase) {
            *v *= ph.conj() * inv_l;
        }
        self.inverse.process(buf);
    }

    pub fn to_momentum(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = psi.to_vec();
        self.forward_in_place(&mut out);
        out
    }

    pub fn to_position(&self, phi: &[C64]) -> Vec<C64> {
        let mut out = phi.to_vec();
        self.inverse_in_place(&mut out);
        out
    }

    /// Transform of a real field sampled on the grid.
    pub fn transform_real(&self, field: &[f64]) -> Vec<C64> {
        let mut out: Vec<C64> = field.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward_in_place(&mut out);
        out
    }

    /// `Re[ sum_j a_j exp(-i P_j x_i / hbar) ]` for every grid point.
    pub(crate) fn real_phase_sum(&self, coeffs: &[C64]) -> Vec<f64> {
        let mut buf: Vec<C64> = coeffs.iter().zip(&self.origin_phase).map(|(a, ph)| a * ph).collect();
        self.forward.process(&mut buf);
        buf.into_iter().map(|v| v.re).collect()
    }
}

/// FFT index -> signed frequency index in `[-n/2, n/2)`.
#[inline]
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}
