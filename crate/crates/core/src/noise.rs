//! Discretized space-time white noise.
//!
//! Each grid point carries an independent Wiener increment with variance
//! `dt/dx`, the lattice version of `E[dW(y) dW(y')] = delta(y - y') dt`.
//! Streams are ChaCha8 substreams indexed by `(seed, trajectory)`, so every
//! trajectory of an ensemble is reproducible on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::grid::{Grid, C64};

#[derive(Debug, Clone)]
pub struct NoiseField {
    n: usize,
    dx: f64,
    seed: u64,
    trajectory: u64,
    rng: ChaCha8Rng,
}

impl NoiseField {
    pub fn new(grid: &Grid, seed: u64, trajectory: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory);
        Self { n: grid.len(), dx: grid.dx(), seed, trajectory, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trajectory(&self) -> u64 {
        self.trajectory
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Fills `out` with one time step of increments.
    pub fn fill_increments(&mut self, dt: f64, out: &mut [f64]) -> Result<()> {
        if !(dt > 0.0) {
            return Err(domain(format!("dt must be positive, got {dt}")));
        }
        if out.len() != self.n {
            return Err(crate::Error::GridMismatch { expected: self.n, got: out.len() });
        }
        let sd = (dt / self.dx).sqrt();
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *v = sd * z;
        }
        Ok(())
    }

    pub fn sample_increments(&mut self, dt: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.fill_increments(dt, &mut out)?;
        Ok(out)
    }
}

/// `W~(Q_j) = sum_i dW_i exp(-i Q_j y_i / hbar) dx`.
pub fn momentum_transform(grid: &Grid, increments: &[f64]) -> Result<Vec<C64>> {
    grid.check_len(increments.len())?;
    Ok(grid.transform_real(increments))
}
