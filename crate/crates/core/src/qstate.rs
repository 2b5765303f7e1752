//! One-particle wavefunction on the periodic grid.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::grid::{Grid, C64};

/// Probability mass allowed within three cells of the box edge before
/// observables are flagged as affected by wraparound.
pub const WRAPAROUND_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct WaveState {
    grid: Arc<Grid>,
    psi: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub norm: f64,
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_p: f64,
    pub mean_p2: f64,
    pub kinetic_energy: f64,
    pub wraparound: bool,
}

impl WaveState {
    pub fn new(grid: Arc<Grid>, psi: Vec<C64>) -> Result<Self> {
        grid.check_len(psi.len())?;
        Ok(Self { grid, psi })
    }

    pub fn from_momentum(grid: Arc<Grid>, phi: &[C64]) -> Result<Self> {
        grid.check_len(phi.len())?;
        let psi = grid.to_position(phi);
        Ok(Self { grid, psi })
    }

    /// Normalized `w1 g(x - alpha) + w2 g(x + alpha)` with
    /// `g(x) = exp(-x^2 / (4 sigma^2))`, so each peak of `|psi|^2` has variance `sigma^2`.
    pub fn gaussian_superposition(grid: Arc<Grid>, alpha: f64, sigma: f64, weights: (C64, C64)) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(domain(format!("sigma must be positive, got {sigma}")));
        }
        if 2.0 * alpha.abs() + 6.0 * sigma >= grid.length() {
            return Err(domain(format!(
                "peaks at +-{alpha} with width {sigma} do not fit in a box of length {}",
                grid.length()
            )));
        }
        if weights.0.norm() == 0.0 && weights.1.norm() == 0.0 {
            return Err(domain("superposition weights are both zero"));
        }
        let s2 = 4.0 * sigma * sigma;
        let psi = grid
            .x()
            .iter()
            .map(|&x| {
                let right = (-(x - alpha).powi(2) / s2).exp();
                let left = (-(x + alpha).powi(2) / s2).exp();
                weights.0 * right + weights.1 * left
            })
            .collect();
        let mut state = Self { grid, psi };
        state.normalize()?;
        Ok(state)
    }

    /// Gaussian wave packet centred at `x0` with mean momentum `p0`.
    pub fn gaussian_packet(grid: Arc<Grid>, x0: f64, sigma: f64, p0: f64) -> Result<Self> {
        let mut state = Self::gaussian_superposition(grid, 0.0, sigma, (C64::new(1.0, 0.0), C64::new(0.0, 0.0)))?;
        let hbar = state.grid.hbar();
        let n = state.grid.len();
        let shifted: Vec<C64> = (0..n)
            .map(|i| {
                let x = state.grid.x()[i];
                let env = (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp();
                C64::from_polar(env, p0 * x / hbar)
            })
            .collect();
        state.psi = shifted;
        state.normalize()?;
        Ok(state)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    pub fn psi_mut(&mut self) -> &mut [C64] {
        &mut self.psi
    }

    pub fn momentum(&self) -> Vec<C64> {
        self.grid.to_momentum(&self.psi)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0 && n2.is_finite()) {
            return Err(domain(format!("cannot normalize state with squared norm {n2}")));
        }
        let s = 1.0 / n2.sqrt();
        self.psi.iter_mut().for_each(|z| *z *= s);
        Ok(n2)
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn observables(&self, mass: f64) -> Result<ObservableSet> {
        observables_from_parts(&self.grid, &self.psi, &self.momentum(), mass)
    }

    /// One CSV row per grid point: `x,re,im,density`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,re_psi,im_psi,density")?;
        for (x, z) in self.grid.x().iter().zip(&self.psi) {
            writeln!(w, "{x:.10e},{:.10e},{:.10e},{:.10e}", z.re, z.im, z.norm_sqr())?;
        }
        Ok(())
    }

    pub fn snapshot(&self, time: f64) -> StateSnapshot {
        StateSnapshot {
            time,
            x: self.grid.x().to_vec(),
            re: self.psi.iter().map(|z| z.re).collect(),
            im: self.psi.iter().map(|z| z.im).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub time: f64,
    pub x: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

pub(crate) fn observables_from_parts(grid: &Grid, psi: &[C64], phi: &[C64], mass: f64) -> Result<ObservableSet> {
    let dx = grid.dx();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(domain(format!("observables need a finite nonzero norm, got {norm}")));
    }
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (z, &x) in psi.iter().zip(grid.x()) {
        let d = z.norm_sqr();
        m1 += d * x;
        m2 += d * x * x;
    }
    m1 *= dx / norm;
    m2 *= dx / norm;

    let pnorm: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
    let mut p1 = 0.0;
    let mut p2 = 0.0;
    for (z, &p) in phi.iter().zip(grid.p()) {
        let d = z.norm_sqr();
        p1 += d * p;
        p2 += d * p * p;
    }
    p1 /= pnorm;
    p2 /= pnorm;

    let n = grid.len();
    let edge: f64 = psi[..3].iter().chain(&psi[n - 3..]).map(|z| z.norm_sqr()).sum::<f64>() * dx / norm;

    Ok(ObservableSet {
        norm,
        mean_x: m1,
        var_x: (m2 - m1 * m1).max(0.0),
        mean_p: p1,
        mean_p2: p2,
        kinetic_energy: p2 / (2.0 * mass),
        wraparound: edge > WRAPAROUND_THRESHOLD,
    })
}
