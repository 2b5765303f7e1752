//! Euler–Maruyama integration of the collapse equation.
//!
//! The state lives in the momentum representation between steps. One step of
//! the nonlinear (norm-preserving) equation:
//!
//! ```text
//! dphi = (sqrt(g)/m0) int dy (L(y) - r(y)) dW(y) phi
//!      - (g/2m0^2) int dy (L^dag L + r^2 - 2 r L) phi dt
//! r(y) = Re <phi| L(y) |phi>
//! ```
//!
//! Both `y` integrals collapse onto a single kernel application with the
//! combined field `(sqrt(g)/m0) dW + (g/m0^2) r dt`; `int dy L^dag L` is
//! diagonal in momentum. The linear equation drops the `r` terms and its
//! squared norm is tracked as the likelihood weight of the trajectory. The
//! free Hamiltonian, when switched on, is applied as the exact momentum
//! phase over the step.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::KernelL;
use crate::density::DensityMatrix;
use crate::error::{domain, Error, Result};
use crate::grid::{Grid, C64};
use crate::noise::NoiseField;
use crate::qstate::{observables_from_parts, ObservableSet, WaveState};

/// Largest allowed `collapse_rate * dt`.
pub const MAX_RATE_DT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Nonlinear,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Hamiltonian {
    #[default]
    None,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub scheme: Scheme,
    pub renormalize: bool,
    pub hamiltonian: Hamiltonian,
    pub seed: u64,
    /// Times at which the state is kept (ensemble density matrices, plots).
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// A trajectory counts as resolved when `var_x` falls below this value.
    pub outcome_variance: f64,
    /// Accumulate full density matrices at the snapshot times in ensembles.
    #[serde(default)]
    pub density_matrices: bool,
}

impl SdeConfig {
    /// Parameters of the two-peak localization run: `lambda dt = 0.01`, no
    /// Hamiltonian, out to `lambda t = 1`.
    pub fn fig1(seed: u64) -> Self {
        Self {
            dt: 0.01,
            t_end: 1.0,
            record_every: 1,
            scheme: Scheme::Nonlinear,
            renormalize: true,
            hamiltonian: Hamiltonian::None,
            seed,
            snapshot_times: vec![0.0, 0.1, 0.3, 0.4, 0.5, 0.6, 0.8, 0.9],
            outcome_variance: FIG1_SIGMA * FIG1_SIGMA,
            density_matrices: false,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self, collapse_rate: f64) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(domain(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if collapse_rate * self.dt > MAX_RATE_DT * (1.0 + 1e-12) {
            return Err(domain(format!(
                "rate * dt = {} exceeds the stability limit {MAX_RATE_DT}",
                collapse_rate * self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(domain("record_every must be at least 1"));
        }
        if let Some(t) = self.snapshot_times.iter().find(|&&t| !(t >= 0.0 && t <= self.t_end + 0.5 * self.dt)) {
            return Err(domain(format!("snapshot time {t} lies outside [0, {}]", self.t_end)));
        }
        Ok(())
    }

    fn snapshot_steps(&self) -> Vec<usize> {
        self.snapshot_times.iter().map(|t| (t / self.dt).round() as usize).collect()
    }
}

pub const FIG1_SIGMA: f64 = 0.55;
pub const FIG1_ALPHA: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Left,
    Right,
    Unresolved,
}

impl Outcome {
    pub fn classify(obs: &ObservableSet, variance_threshold: f64) -> Self {
        if obs.var_x < variance_threshold {
            if obs.mean_x < 0.0 {
                Outcome::Left
            } else {
                Outcome::Right
            }
        } else {
            Outcome::Unresolved
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    /// Momentum-space amplitudes, normalized.
    pub phi: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub id: u64,
    pub times: Vec<f64>,
    pub observables: Vec<ObservableSet>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: WaveState,
    /// Squared norm of the linear-equation solution; `1` for the nonlinear scheme.
    pub girsanov_weight: f64,
    pub outcome: Outcome,
}

/// Single-step integrator bound to a kernel. Holds scratch buffers so that a
/// trajectory allocates once.
pub struct Stepper<'a> {
    kernel: &'a KernelL,
    grid: &'a Grid,
    dt: f64,
    coupling: f64,
    drift_scale: f64,
    dissipation: Vec<f64>,
    free_phase: Option<Vec<C64>>,
    r_field: Vec<f64>,
    field: Vec<C64>,
    delta: Vec<C64>,
}

impl<'a> Stepper<'a> {
    pub fn new(kernel: &'a KernelL, grid: &'a Grid, dt: f64, hamiltonian: Hamiltonian) -> Result<Self> {
        grid.check_len(kernel.len())?;
        let model = kernel.model();
        let coupling = model.gamma_1d.sqrt() / model.m0;
        let drift_scale = model.gamma_1d / (model.m0 * model.m0);
        let free_phase = match hamiltonian {
            Hamiltonian::None => None,
            Hamiltonian::Free => Some(
                grid.p()
                    .iter()
                    .map(|p| C64::from_polar(1.0, -p * p * dt / (2.0 * model.mass * model.hbar)))
                    .collect(),
            ),
        };
        let n = grid.len();
        Ok(Self {
            kernel,
            grid,
            dt,
            coupling,
            drift_scale,
            dissipation: kernel.dissipation_diagonal(),
            free_phase,
            r_field: vec![0.0; n],
            field: vec![C64::new(0.0, 0.0); n],
            delta: vec![C64::new(0.0, 0.0); n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `r(y_i) = Re <phi|L(y_i)|phi>` for a normalized momentum-space state.
    pub fn hermitian_expectation(&self, phi: &[C64]) -> Vec<f64> {
        self.kernel.expectation_field(self.grid, phi).into_iter().map(|z| z.re).collect()
    }

    /// One step of the nonlinear equation. `phi` must be normalized on entry;
    /// it is renormalized on exit when `renormalize` is set.
    pub fn step_nonlinear(&mut self, phi: &mut [C64], dw: &[f64], step: usize, renormalize: bool) -> Result<()> {
        self.grid.check_len(phi.len())?;
        self.grid.check_len(dw.len())?;
        let dt = self.dt;
        let dx = self.grid.dx();
        let r = self.hermitian_expectation(phi);
        self.r_field.copy_from_slice(&r);

        let noise_hat = self.grid.transform_real(dw);
        let r_hat = self.grid.transform_real(&self.r_field);
        for ((f, w), rh) in self.field.iter_mut().zip(&noise_hat).zip(&r_hat) {
            *f = w * self.coupling + rh * (self.drift_scale * dt);
        }
        self.delta.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        self.kernel.apply_field_into(phi, &self.field, &mut self.delta);

        let r_dw: f64 = self.r_field.iter().zip(dw).map(|(a, b)| a * b).sum::<f64>() * dx;
        let r2: f64 = self.r_field.iter().map(|a| a * a).sum::<f64>() * dx;
        let scalar = -self.coupling * r_dw - 0.5 * self.drift_scale * dt * r2;

        for ((v, d), diss) in phi.iter_mut().zip(&self.delta).zip(&self.dissipation) {
            *v = *v * (1.0 + scalar - 0.5 * self.drift_scale * dt * diss) + d;
        }
        self.finish(phi, step)?;
        if renormalize {
            normalize_momentum(phi, self.grid.length());
        }
        Ok(())
    }

    /// One step of the linear equation. Returns `||phi_new||^2 / ||phi||^2`;
    /// `phi` is left normalized.
    pub fn step_linear(&mut self, phi: &mut [C64], dw: &[f64], step: usize) -> Result<f64> {
        self.grid.check_len(phi.len())?;
        self.grid.check_len(dw.len())?;
        let before: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        let noise_hat = self.grid.transform_real(dw);
        for (f, w) in self.field.iter_mut().zip(&noise_hat) {
            *f = w * self.coupling;
        }
        self.delta.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        self.kernel.apply_field_into(phi, &self.field, &mut self.delta);
        let dt = self.dt;
        for ((v, d), diss) in phi.iter_mut().zip(&self.delta).zip(&self.dissipation) {
            *v = *v * (1.0 - 0.5 * self.drift_scale * dt * diss) + d;
        }
        self.finish(phi, step)?;
        let after: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        if !(after > 0.0) {
            return Err(Error::Integration { step, reason: "state vanished".into() });
        }
        normalize_momentum(phi, self.grid.length());
        Ok(after / before)
    }

    fn finish(&self, phi: &mut [C64], step: usize) -> Result<()> {
        if let Some(phase) = &self.free_phase {
            phi.iter_mut().zip(phase).for_each(|(v, p)| *v *= p);
        }
        if phi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Integration { step, reason: "non-finite amplitude".into() });
        }
        Ok(())
    }
}

fn normalize_momentum(phi: &mut [C64], length: f64) {
    let n2: f64 = phi.iter().map(|z| z.norm_sqr()).sum::<f64>() / length;
    let s = 1.0 / n2.sqrt();
    phi.iter_mut().for_each(|z| *z *= s);
}

/// Integrates one trajectory with noise substream `id`.
pub fn run_trajectory(config: &SdeConfig, kernel: &KernelL, initial: &WaveState, id: u64) -> Result<Trajectory> {
    config.validate(kernel.model().collapse_rate())?;
    let grid: Arc<Grid> = initial.grid().clone();
    let mass = kernel.model().mass;
    let mut stepper = Stepper::new(kernel, &grid, config.dt, config.hamiltonian)?;
    let mut noise = NoiseField::new(&grid, config.seed, id);
    let mut phi = initial.momentum();
    normalize_momentum(&mut phi, grid.length());
    let mut dw = vec![0.0; grid.len()];
    let n_steps = config.n_steps();
    let snap_steps = config.snapshot_steps();

    let mut times = Vec::new();
    let mut observables = Vec::new();
    let mut snapshots = Vec::new();
    let mut log_weight = 0.0f64;

    let record = |step: usize, phi: &[C64], times: &mut Vec<f64>, obs: &mut Vec<ObservableSet>| -> Result<()> {
        let psi = grid.to_position(phi);
        times.push(step as f64 * config.dt);
        obs.push(observables_from_parts(&grid, &psi, phi, mass)?);
        Ok(())
    };

    for step in 0..=n_steps {
        if step % config.record_every == 0 || step == n_steps {
            record(step, &phi, &mut times, &mut observables)?;
        }
        for (i, &s) in snap_steps.iter().enumerate() {
            if s == step {
                snapshots.push(Snapshot { time: config.snapshot_times[i], phi: phi.clone() });
            }
        }
        if step == n_steps {
            break;
        }
        noise.fill_increments(config.dt, &mut dw)?;
        match config.scheme {
            Scheme::Nonlinear => stepper.step_nonlinear(&mut phi, &dw, step, config.renormalize)?,
            Scheme::Linear => log_weight += stepper.step_linear(&mut phi, &dw, step)?.ln(),
        }
    }

    let last = *observables.last().expect("at least one record");
    Ok(Trajectory {
        id,
        times,
        observables,
        snapshots,
        final_state: WaveState::from_momentum(grid.clone(), &phi)?,
        girsanov_weight: log_weight.exp(),
        outcome: Outcome::classify(&last, config.outcome_variance),
    })
}

/// Mean and variance of one observable across the ensemble at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    pub time: f64,
    pub mean_x: MomentPair,
    pub var_x: MomentPair,
    pub median_var_x: f64,
    pub mean_p: MomentPair,
    pub kinetic_energy: MomentPair,
    pub norm: MomentPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub left: usize,
    pub right: usize,
    pub unresolved: usize,
}

impl OutcomeCounts {
    pub fn total(&self) -> usize {
        self.left + self.right + self.unresolved
    }

    pub fn frequencies(&self) -> (f64, f64, f64) {
        let n = self.total().max(1) as f64;
        (self.left as f64 / n, self.right as f64 / n, self.unresolved as f64 / n)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_traj: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub stats: Vec<TimeStats>,
    pub outcomes: OutcomeCounts,
    /// Per-trajectory likelihood weights (all `1` for the nonlinear scheme).
    pub weights: Vec<f64>,
    /// Per-trajectory observables at `t_end`.
    pub final_observables: Vec<ObservableSet>,
    #[serde(skip)]
    pub timelines: Vec<Vec<ObservableSet>>,
    /// Ensemble-averaged `|psi(x)|^2` at the snapshot times.
    #[serde(skip)]
    pub position_density: Vec<(f64, Vec<f64>)>,
    /// `|psi(x)|^2` of trajectory 0 at the snapshot times.
    #[serde(skip)]
    pub sample_density: Vec<(f64, Vec<f64>)>,
    /// Ensemble-averaged density matrices at the snapshot times; empty unless
    /// [`SdeConfig::density_matrices`] is set.
    #[serde(skip)]
    pub density: Vec<(f64, DensityMatrix)>,
}

impl EnsembleSummary {
    pub fn density_at(&self, time: f64) -> Option<&DensityMatrix> {
        self.density.iter().find(|(t, _)| (t - time).abs() < 1e-9).map(|(_, r)| r)
    }
}

struct ChunkResult {
    trajectories: Vec<(Vec<ObservableSet>, f64, Outcome)>,
    times: Vec<f64>,
    density: Vec<DensityMatrix>,
    position: Vec<Vec<f64>>,
    sample: Option<Vec<Vec<f64>>>,
}

/// Trajectories per reduction chunk: at most 32 partial sums are held at once.
fn chunk_len(n_traj: usize) -> usize {
    n_traj.div_ceil(32).max(1)
}

/// Runs `n_traj` trajectories on the current rayon pool. Each trajectory uses
/// noise substream `id`; partial sums are formed per fixed chunk and merged in
/// order, so results do not depend on the thread count.
pub fn run_ensemble(config: &SdeConfig, kernel: &KernelL, initial: &WaveState, n_traj: usize) -> Result<EnsembleSummary> {
    if n_traj == 0 {
        return Err(domain("n_traj must be at least 1"));
    }
    config.validate(kernel.model().collapse_rate())?;
    let grid = initial.grid().clone();
    let n = grid.len();
    let n_snap = config.snapshot_times.len();
    let weighted = config.scheme == Scheme::Linear;
    let chunk = chunk_len(n_traj);
    let ids: Vec<u64> = (0..n_traj as u64).collect();

    let chunks: Vec<Result<ChunkResult>> = ids
        .par_chunks(chunk)
        .map(|block| {
            let mut out = ChunkResult {
                trajectories: Vec::with_capacity(block.len()),
                times: Vec::new(),
                density: if config.density_matrices { vec![DensityMatrix::zeros(n); n_snap] } else { Vec::new() },
                position: vec![vec![0.0; n]; n_snap],
                sample: None,
            };
            for &id in block {
                let traj = run_trajectory(config, kernel, initial, id)
                    .map_err(|e| Error::Trajectory { trajectory: id, source: Box::new(e) })?;
                let w = if weighted { traj.girsanov_weight } else { 1.0 };
                let mut sample = Vec::new();
                for (si, snap) in traj.snapshots.iter().enumerate() {
                    let norm: f64 = snap.phi.iter().map(|z| z.norm_sqr()).sum();
                    if let Some(acc) = out.density.get_mut(si) {
                        acc.add_outer(&snap.phi, w / norm);
                    }
                    let dens: Vec<f64> = grid.to_position(&snap.phi).iter().map(|z| z.norm_sqr()).collect();
                    for (a, d) in out.position[si].iter_mut().zip(&dens) {
                        *a += w * d;
                    }
                    if id == 0 {
                        sample.push(dens);
                    }
                }
                if id == 0 {
                    out.sample = Some(sample);
                }
                if out.times.is_empty() {
                    out.times = traj.times.clone();
                }
                out.trajectories.push((traj.observables, traj.girsanov_weight, traj.outcome));
            }
            Ok(out)
        })
        .collect();

    let mut density = if config.density_matrices { vec![DensityMatrix::zeros(n); n_snap] } else { Vec::new() };
    let mut position = vec![vec![0.0; n]; n_snap];
    let mut sample = Vec::new();
    let mut timelines = Vec::with_capacity(n_traj);
    let mut weights = Vec::with_capacity(n_traj);
    let mut outcomes = OutcomeCounts { left: 0, right: 0, unresolved: 0 };
    let mut times = Vec::new();
    for c in chunks {
        let c = c?;
        for (acc, part) in density.iter_mut().zip(&c.density) {
            acc.add_scaled(part, 1.0);
        }
        for (acc, part) in position.iter_mut().zip(&c.position) {
            acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
        }
        if let Some(s) = c.sample {
            sample = s;
        }
        if times.is_empty() {
            times = c.times;
        }
        for (obs, w, outcome) in c.trajectories {
            match outcome {
                Outcome::Left => outcomes.left += 1,
                Outcome::Right => outcomes.right += 1,
                Outcome::Unresolved => outcomes.unresolved += 1,
            }
            timelines.push(obs);
            weights.push(w);
        }
    }

    let wsum: f64 = if weighted { weights.iter().sum() } else { n_traj as f64 };
    for d in density.iter_mut() {
        d.scale(1.0 / wsum);
    }
    for p in position.iter_mut() {
        p.iter_mut().for_each(|v| *v /= wsum);
    }
    let stat_weights: Vec<f64> = if weighted { weights.clone() } else { vec![1.0; n_traj] };
    let stats = (0..times.len())
        .map(|ti| {
            let column: Vec<ObservableSet> = timelines.iter().map(|t| t[ti]).collect();
            time_stats(times[ti], &column, &stat_weights)
        })
        .collect();
    let final_observables = timelines.iter().map(|t| *t.last().unwrap()).collect();
    let snap_times = config.snapshot_times.iter().copied();

    Ok(EnsembleSummary {
        n_traj,
        seed: config.seed,
        scheme: config.scheme,
        stats,
        outcomes,
        weights,
        final_observables,
        timelines,
        position_density: snap_times.clone().zip(position).collect(),
        sample_density: snap_times.clone().zip(sample).collect(),
        density: snap_times.zip(density).collect(),
    })
}

fn weighted_moments(values: impl Iterator<Item = f64>, weights: &[f64]) -> MomentPair {
    let mut sw = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (v, &w) in values.zip(weights) {
        sw += w;
        s1 += w * v;
        s2 += w * v * v;
    }
    let mean = s1 / sw;
    MomentPair { mean, variance: (s2 / sw - mean * mean).max(0.0) }
}

fn time_stats(time: f64, column: &[ObservableSet], weights: &[f64]) -> TimeStats {
    let mut vars: Vec<f64> = column.iter().map(|o| o.var_x).collect();
    TimeStats {
        time,
        mean_x: weighted_moments(column.iter().map(|o| o.mean_x), weights),
        var_x: weighted_moments(column.iter().map(|o| o.var_x), weights),
        median_var_x: median(&mut vars),
        mean_p: weighted_moments(column.iter().map(|o| o.mean_p), weights),
        kinetic_energy: weighted_moments(column.iter().map(|o| o.kinetic_energy), weights),
        norm: weighted_moments(column.iter().map(|o| o.norm), weights),
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
