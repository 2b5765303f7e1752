//! Collapse operators restricted to one particle in one dimension.
//!
//! The dissipative operator field, summed against a scalar field `f(y)`,
//! acts in momentum space as
//!
//! ```text
//! [ int dy L(y) f(y) psi ]~(P') = (m / L_box) sum_Q f~(Q) L(Q, P' - Q) psi~(P' - Q)
//! L(Q, P) = exp( -(r_C^2 / 2 hbar^2) ((1+k) Q + 2 k P)^2 )
//! ```
//!
//! with `f~` the grid transform of [`crate::grid`]. At `k = 0` this is
//! multiplication by `m (G * f)(x)`, `G` the unit-normalized Gaussian of
//! width `r_C`: the smeared mass density of the original model.
//!
//! Phase convention of the hermitian split (verified pointwise in the tests):
//! with `a = G cosh(s)` and `b = -G sinh(s)`,
//! `G = exp(-(r_C^2/2hbar^2)(Q^2 + k^2 (Q+2P)^2))`, `s = (k r_C^2/hbar^2) Q (Q+2P)`,
//! the kernels recombine as `L = a + b` and `L^dagger = a - b`. The hermitian
//! part `(L + L^dagger)/2` therefore has kernel `a`, and the anti-hermitian
//! part `L^(b)` in `L = L^(a) + i L^(b)` has kernel `-i b`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Grid, C64};
use crate::params::SimModel;
use crate::qstate::WaveState;

/// Which momentum dependence the collapse kernel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelVariant {
    /// `((1+k) Q + 2 k P)^2` in the exponent.
    #[default]
    Main,
    /// `((1+k) |Q| + 2 k P Q/|Q|)^2`, defined by continuity at `Q = 0`.
    #[serde(rename = "appendix-a", alias = "appendixa")]
    AppendixA,
}

impl std::str::FromStr for KernelVariant {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(Self::Main),
            "appendix-a" | "appendixa" | "appendix_a" => Ok(Self::AppendixA),
            other => Err(crate::error::domain(format!("unknown kernel variant {other:?}"))),
        }
    }
}

/// `L(Q, P)` for the main kernel.
#[inline]
pub fn kernel_value(model: &SimModel, q: f64, p: f64) -> f64 {
    let u = (1.0 + model.k) * q + 2.0 * model.k * p;
    (-(model.r_c * model.r_c) / (2.0 * model.hbar * model.hbar) * u * u).exp()
}

/// Kernel of the adjoint operator on the same `(Q, P)` labels.
#[inline]
pub fn adjoint_kernel_value(model: &SimModel, q: f64, p: f64) -> f64 {
    let u = (1.0 - model.k) * q - 2.0 * model.k * p;
    (-(model.r_c * model.r_c) / (2.0 * model.hbar * model.hbar) * u * u).exp()
}

/// Anisotropic kernel; identical to the main kernel in one dimension.
#[inline]
pub fn appendix_a_kernel_value(model: &SimModel, q: f64, p: f64) -> f64 {
    let u = if q == 0.0 {
        2.0 * model.k * p
    } else {
        (1.0 + model.k) * q.abs() + 2.0 * model.k * p * q.signum()
    };
    (-(model.r_c * model.r_c) / (2.0 * model.hbar * model.hbar) * u * u).exp()
}

/// Hermitian / anti-hermitian kernel pair `(a, b)`; see the module docs.
pub fn hermitian_split(model: &SimModel, q: f64, p: f64) -> (f64, f64) {
    let scale = model.r_c * model.r_c / (model.hbar * model.hbar);
    let k = model.k;
    let w = q + 2.0 * p;
    let g = (-0.5 * scale * (q * q + k * k * w * w)).exp();
    let s = k * scale * q * w;
    (g * s.cosh(), -g * s.sinh())
}

/// Precomputed `L(Q_q, P_p)` on a grid, row-major in `q`.
#[derive(Debug, Clone)]
pub struct KernelL {
    model: SimModel,
    variant: KernelVariant,
    n: usize,
    length: f64,
    values: Vec<f64>,
    squares: Vec<f64>,
    /// `sum_q L^2(Q_q, P_p)` for every `p`.
    loss_sums: Vec<f64>,
}

impl KernelL {
    pub fn build(model: &SimModel, grid: &Grid) -> Result<Self> {
        Self::build_variant(model, grid, KernelVariant::Main)
    }

    pub fn build_variant(model: &SimModel, grid: &Grid, variant: KernelVariant) -> Result<Self> {
        model.validate()?;
        if (model.hbar - grid.hbar()).abs() > 1e-12 * model.hbar {
            return Err(crate::error::domain("grid and model disagree on hbar"));
        }
        let n = grid.len();
        let p = grid.p();
        let eval = match variant {
            KernelVariant::Main => kernel_value,
            KernelVariant::AppendixA => appendix_a_kernel_value,
        };
        let mut values = Vec::with_capacity(n * n);
        for &q in p {
            for &pp in p {
                values.push(eval(model, q, pp));
            }
        }
        let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
        let mut loss_sums = vec![0.0; n];
        for row in squares.chunks_exact(n) {
            for (acc, v) in loss_sums.iter_mut().zip(row) {
                *acc += v;
            }
        }
        Ok(Self { model: *model, variant, n, length: grid.length(), values, squares, loss_sums })
    }

    pub fn model(&self) -> &SimModel {
        &self.model
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn value(&self, q: usize, p: usize) -> f64 {
        self.values[q * self.n + p]
    }

    #[inline]
    pub fn square(&self, q: usize, p: usize) -> f64 {
        self.squares[q * self.n + p]
    }

    pub fn row(&self, q: usize) -> &[f64] {
        &self.values[q * self.n..(q + 1) * self.n]
    }

    pub fn loss_sums(&self) -> &[f64] {
        &self.loss_sums
    }

    /// Master-equation prefactor `gamma_1d m^2 / (2 pi hbar m0^2)`.
    pub fn prefactor(&self) -> f64 {
        self.model.kernel_prefactor()
    }

    /// Diagonal of `int dy L^dagger(y) L(y)` in momentum space,
    /// `(m^2 / L_box) sum_Q L^2(Q, P)`.
    pub fn dissipation_diagonal(&self) -> Vec<f64> {
        let m = self.model.mass;
        let s = m * m / self.length;
        self.loss_sums.iter().map(|v| v * s).collect()
    }

    /// `(m / L_box) sum_Q field~(Q) L(Q, P' - Q) phi(P' - Q)` accumulated into `out`.
    pub fn apply_field_into(&self, phi: &[C64], field: &[C64], out: &mut [C64]) {
        let n = self.n;
        let scale = self.model.mass / self.length;
        for q in 0..n {
            let f = field[q] * scale;
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            let row = self.row(q);
            // destination index p + q, split at the wrap point
            let split = n - q;
            let (lo_src, hi_src) = phi.split_at(split);
            let (lo_row, hi_row) = row.split_at(split);
            for ((o, &v), &l) in out[q..].iter_mut().zip(lo_src).zip(lo_row) {
                *o += f * (v * l);
            }
            for ((o, &v), &l) in out[..q].iter_mut().zip(hi_src).zip(hi_row) {
                *o += f * (v * l);
            }
        }
    }

    pub fn apply_field(&self, phi: &[C64], field: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        self.apply_field_into(phi, field, &mut out);
        out
    }

    /// `F(Q) = (1/L_box) sum_P conj(phi(P + Q)) L(Q, P) phi(P)`, the
    /// momentum-transfer amplitudes from which `<L(y)>` follows.
    pub fn transfer_amplitudes_into(&self, phi: &[C64], out: &mut [C64]) {
        let n = self.n;
        let inv_l = 1.0 / self.length;
        for (q, o) in out.iter_mut().enumerate() {
            let row = self.row(q);
            let split = n - q;
            let mut acc = C64::new(0.0, 0.0);
            for ((&src, &l), dst) in phi[..split].iter().zip(&row[..split]).zip(&phi[q..]) {
                acc += dst.conj() * src * l;
            }
            for ((&src, &l), dst) in phi[split..].iter().zip(&row[split..]).zip(&phi[..q]) {
                acc += dst.conj() * src * l;
            }
            *o = acc * inv_l;
        }
    }

    /// `<phi| L(y_i) |phi>` at every grid point, for a momentum-space state.
    pub fn expectation_field(&self, grid: &Grid, phi: &[C64]) -> Vec<C64> {
        let mut f = vec![C64::new(0.0, 0.0); self.n];
        self.transfer_amplitudes_into(phi, &mut f);
        let scale = self.model.mass / self.length;
        f.iter_mut().for_each(|z| *z *= scale);
        // sum_Q F(Q) exp(-i Q y / hbar): real and imaginary parts separately
        let re = grid.real_phase_sum(&f);
        let shifted: Vec<C64> = f.iter().map(|z| z * C64::new(0.0, -1.0)).collect();
        let im = grid.real_phase_sum(&shifted);
        re.into_iter().zip(im).map(|(a, b)| C64::new(a, b)).collect()
    }
}

/// Noise term of the collapse equation, `(sqrt(gamma)/m0) int dy L(y) dW(y) psi`,
/// returned in the momentum representation.
pub fn apply_noise_operator(state: &WaveState, noise_hat: &[C64], kernel: &KernelL) -> Result<Vec<C64>> {
    let grid = state.grid();
    grid.check_len(noise_hat.len())?;
    grid.check_len(kernel.len())?;
    let phi = state.momentum();
    let model = kernel.model();
    let coupling = model.gamma_1d.sqrt() / model.m0;
    let field: Vec<C64> = noise_hat.iter().map(|z| z * coupling).collect();
    Ok(kernel.apply_field(&phi, &field))
}

/// Smeared mass density `M(y, x) = m (2 pi r_C^2)^{-1/2} exp(-(y-x)^2 / (2 r_C^2))`
/// on the periodic grid (minimum-image distance).
#[derive(Debug, Clone)]
pub struct SmearedMassDensity {
    n: usize,
    dx: f64,
    mass: f64,
    values: Vec<f64>,
}

impl SmearedMassDensity {
    pub fn build(model: &SimModel, grid: &Grid) -> Self {
        let n = grid.len();
        let l = grid.length();
        let norm = 1.0 / ((2.0 * PI).sqrt() * model.r_c);
        let mut values = Vec::with_capacity(n * n);
        for &y in grid.x() {
            for &x in grid.x() {
                let mut d = (y - x).rem_euclid(l);
                if d > 0.5 * l {
                    d -= l;
                }
                values.push(model.mass * norm * (-d * d / (2.0 * model.r_c * model.r_c)).exp());
            }
        }
        Self { n, dx: grid.dx(), mass: model.mass, values }
    }

    pub fn value(&self, yi: usize, xj: usize) -> f64 {
        self.values[yi * self.n + xj]
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `int dy M(y, x_j) f(y)` for each `x_j`.
    pub fn smear(&self, field: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.value(i, j) * field[i]).sum::<f64>() * self.dx)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n, 20.0, 1.0).unwrap()
    }

    #[test]
    fn original_limit_is_momentum_independent() {
        let g = grid(64);
        let k = KernelL::build(&SimModel::dimensionless(0.0), &g).unwrap();
        for q in 0..64 {
            let row = k.row(q);
            assert!(row.iter().all(|&v| v == row[0]));
        }
    }

    #[test]
    fn entries_bounded() {
        let g = grid(64);
        let k = KernelL::build(&SimModel::dimensionless(0.4), &g).unwrap();
        for q in 0..64 {
            for p in 0..64 {
                let v = k.value(q, p);
                assert!(v.is_finite() && v >= 0.0 && v <= 1.0);
            }
        }
        // L(0, P) = exp(-2 k^2 r_C^2 P^2 / hbar^2)
        let m = SimModel::dimensionless(0.4);
        for (p, &pp) in g.p().iter().enumerate() {
            let expect = (-2.0 * 0.16 * pp * pp).exp();
            assert!((k.value(0, p) - expect).abs() <= 1e-15);
            assert_eq!(k.value(0, p) == 1.0, m.k * pp == 0.0);
        }
    }

    #[test]
    fn peak_of_transfer_distribution() {
        let m = SimModel::dimensionless(0.3);
        for p in [-2.0, -0.5, 0.7, 3.0] {
            let peak = -2.0 * m.k * p / (1.0 + m.k);
            let h = 1e-4;
            let at = kernel_value(&m, peak, p);
            assert!((at - 1.0).abs() < 1e-15);
            assert!(kernel_value(&m, peak + h, p) < at);
            assert!(kernel_value(&m, peak - h, p) < at);
        }
    }

    #[test]
    fn split_recombines() {
        for k in [0.0, 0.1, 0.25, 0.9] {
            let m = SimModel::dimensionless(k);
            for q in [-3.0, -0.4, 0.0, 0.8, 2.5] {
                for p in [-4.0, -1.0, 0.0, 0.3, 2.2] {
                    let (a, b) = hermitian_split(&m, q, p);
                    assert!((a + b - kernel_value(&m, q, p)).abs() <= 1e-12);
                    assert!((a - b - adjoint_kernel_value(&m, q, p)).abs() <= 1e-12);
                    if k == 0.0 {
                        assert_eq!(b, 0.0);
                    }
                    // a is invariant under (Q, P) -> (-Q, P + Q), which maps Q(Q+2P) -> -Q(Q+2P)
                    let (a2, b2) = hermitian_split(&m, -q, p + q);
                    assert!((a - a2).abs() <= 1e-14);
                    assert!((b + b2).abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn appendix_a_matches_in_one_dimension() {
        let g = grid(64);
        let m = SimModel::dimensionless(0.25);
        let main = KernelL::build(&m, &g).unwrap();
        let alt = KernelL::build_variant(&m, &g, KernelVariant::AppendixA).unwrap();
        for q in 0..64 {
            for p in 0..64 {
                assert_eq!(main.value(q, p), alt.value(q, p));
            }
        }
    }

    #[test]
    fn mass_normalization() {
        let g = grid(128);
        let m = SimModel::dimensionless(0.0);
        let dens = SmearedMassDensity::build(&m, &g);
        for j in [0, 17, 64, 127] {
            let s: f64 = (0..128).map(|i| dens.value(i, j)).sum::<f64>() * g.dx();
            assert!((s - m.mass).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_noise_gives_zero_delta() {
        let g = std::sync::Arc::new(grid(64));
        let m = SimModel::dimensionless(0.2);
        let k = KernelL::build(&m, &g).unwrap();
        let s = WaveState::gaussian_packet(g.clone(), 0.0, 1.0, 0.0).unwrap();
        let d = apply_noise_operator(&s, &vec![C64::new(0.0, 0.0); 64], &k).unwrap();
        assert!(d.iter().all(|z| z.norm() == 0.0));
        assert!(apply_noise_operator(&s, &vec![C64::new(0.0, 0.0); 8], &k).is_err());
    }

    #[test]
    fn single_mode_noise_shifts_momentum() {
        let g = std::sync::Arc::new(grid(64));
        let m = SimModel::dimensionless(0.2);
        let k = KernelL::build(&m, &g).unwrap();
        let s = WaveState::gaussian_packet(g.clone(), 0.0, 1.0, 0.0).unwrap();
        let phi = s.momentum();
        let q0 = 3;
        let mut noise = vec![C64::new(0.0, 0.0); 64];
        noise[q0] = C64::new(1.0, 0.0);
        let d = apply_noise_operator(&s, &noise, &k).unwrap();
        let scale = m.gamma_1d.sqrt() / m.m0 * m.mass / g.length();
        for p in 0..64 {
            let src = g.sub_index(p, q0);
            let expect = phi[src] * k.value(q0, src) * scale;
            assert!((d[p] - expect).norm() < 1e-14);
        }
    }
}
