//! One-particle density matrices in the discrete momentum basis.
//!
//! The basis vectors are the orthonormal plane waves of the periodic box, so a
//! pure state with grid amplitudes `phi~_j` has coefficients `phi~_j / sqrt(L)`
//! and `rho_jk = c_j conj(c_k)`. Indices follow the FFT order of [`Grid::p`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Grid, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn from_data(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(crate::Error::GridMismatch { expected: n * n, got: data.len() });
        }
        Ok(Self { n, data })
    }

    /// `|phi><phi|` from grid momentum amplitudes, normalized to unit trace.
    pub fn from_pure(phi: &[C64]) -> Self {
        let mut rho = Self::zeros(phi.len());
        let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        rho.add_outer(phi, 1.0 / norm);
        rho
    }

    pub fn from_diagonal(populations: &[f64]) -> Self {
        let n = populations.len();
        let mut rho = Self::zeros(n);
        for (i, &p) in populations.iter().enumerate() {
            rho.data[i * n + i] = C64::new(p, 0.0);
        }
        rho
    }

    /// `rho += weight * |phi><phi|` with `phi` in raw grid amplitudes.
    pub fn add_outer(&mut self, phi: &[C64], weight: f64) {
        let n = self.n;
        for (i, a) in phi.iter().enumerate() {
            let wa = a * weight;
            let row = &mut self.data[i * n..(i + 1) * n];
            for (r, b) in row.iter_mut().zip(phi) {
                *r += wa * b.conj();
            }
        }
    }

    pub fn add_scaled(&mut self, other: &DensityMatrix, weight: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * weight;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i).re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `<P^n>` over the grid momenta.
    pub fn momentum_moment(&self, grid: &Grid, power: i32) -> f64 {
        grid.p().iter().enumerate().map(|(i, p)| p.powi(power) * self.get(i, i).re).sum()
    }

    pub fn kinetic_energy(&self, grid: &Grid, mass: f64) -> f64 {
        self.momentum_moment(grid, 2) / (2.0 * mass)
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        // symmetrize so round-off asymmetry does not leak into the eigensolver
        DMatrix::from_fn(self.n, self.n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i).conj()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.to_nalgebra();
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `(1/2) || self - other ||_1`
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let mut diff = self.clone();
        diff.add_scaled(other, -1.0);
        0.5 * diff.eigenvalues().iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Matrix element `<x_a| rho |x_b>` on the position grid, as a density
    /// (divide by nothing: `sum_a <x_a|rho|x_a> dx = tr rho`).
    pub fn position_element(&self, grid: &Grid, a: usize, b: usize) -> C64 {
        let xa = grid.x()[a];
        let xb = grid.x()[b];
        let hbar = grid.hbar();
        let ea: Vec<C64> = grid.p().iter().map(|p| C64::from_polar(1.0, p * xa / hbar)).collect();
        let eb: Vec<C64> = grid.p().iter().map(|p| C64::from_polar(1.0, -p * xb / hbar)).collect();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..self.n {
                row += self.get(i, j) * eb[j];
            }
            acc += ea[i] * row;
        }
        acc / grid.length()
    }
}
