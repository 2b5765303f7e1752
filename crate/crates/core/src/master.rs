//! Lindblad master equation for the ensemble-averaged state.
//!
//! In the momentum basis the dissipator is a convolution over the momentum
//! transfer `Q`:
//!
//! ```text
//! d rho(P', P'') / dt = c dQ sum_Q L(Q, P'-Q) L(Q, P''-Q) rho(P'-Q, P''-Q)
//!                     - (c dQ / 2) sum_Q (L^2(Q, P') + L^2(Q, P'')) rho(P', P'')
//! ```
//!
//! with `c = gamma m^2 / (2 pi hbar m0^2)` and shifts wrapping around the
//! grid. The free Hamiltonian only contributes the phase
//! `exp(-i (E' - E'') t / hbar)`, which the integrator applies exactly
//! (integrating-factor RK4).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{kernel_value, appendix_a_kernel_value, KernelL, KernelVariant};
use crate::density::DensityMatrix;
use crate::error::{domain, Error, Result};
use crate::grid::{Grid, C64};
use crate::params::SimModel;
use crate::sde::Hamiltonian;

/// Smallest eigenvalue tolerated during propagation.
pub const POSITIVITY_TOLERANCE: f64 = 1e-6;

/// Dissipative generator on a fixed momentum grid.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub kernel: KernelL,
    pub variant: KernelVariant,
    /// `c = gamma_1d m^2 / (2 pi hbar m0^2)`
    pub prefactor: f64,
    pub hamiltonian: Hamiltonian,
    n: usize,
    /// `c dQ`
    weight: f64,
    /// `amp[q * n + i] = L(Q_q, P_i - Q_q)`
    amp: Vec<f64>,
    /// `(c dQ / 2) sum_Q L^2(Q, P_i)`
    half_loss: Vec<f64>,
    energies: Vec<f64>,
    hbar: f64,
}

impl GeneratorSpec {
    pub fn new(model: &SimModel, grid: &Grid, variant: KernelVariant, hamiltonian: Hamiltonian) -> Result<Self> {
        let kernel = KernelL::build_variant(model, grid, variant)?;
        Ok(Self::from_kernel(kernel, grid, hamiltonian))
    }

    pub fn from_kernel(kernel: KernelL, grid: &Grid, hamiltonian: Hamiltonian) -> Self {
        let n = grid.len();
        let model = *kernel.model();
        let prefactor = kernel.prefactor();
        let weight = prefactor * grid.dp();
        let mut amp = vec![0.0; n * n];
        for q in 0..n {
            for i in 0..n {
                amp[q * n + i] = kernel.value(q, grid.sub_index(i, q));
            }
        }
        let half_loss = kernel.loss_sums().iter().map(|s| 0.5 * weight * s).collect();
        let energies = grid.p().iter().map(|p| p * p / (2.0 * model.mass)).collect();
        Self {
            variant: kernel.variant(),
            kernel,
            prefactor,
            hamiltonian,
            n,
            weight,
            amp,
            half_loss,
            energies,
            hbar: model.hbar,
        }
    }

    pub fn model(&self) -> &SimModel {
        self.kernel.model()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Dissipator only.
    pub fn dissipator(&self, rho: &DensityMatrix) -> DensityMatrix {
        let n = self.n;
        let src = rho.data();
        let mut out = DensityMatrix::zeros(n);
        out.data_mut().par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for q in 0..n {
                let amp_q = &self.amp[q * n..(q + 1) * n];
                let a = self.weight * amp_q[i];
                if a == 0.0 {
                    continue;
                }
                let si = if i >= q { i - q } else { i + n - q };
                let src_row = &src[si * n..(si + 1) * n];
                // column j reads src_row[j - q], split at the wrap
                let (lo_dst, hi_dst) = row.split_at_mut(q);
                let (lo_amp, hi_amp) = amp_q.split_at(q);
                for ((o, &b), &r) in hi_dst.iter_mut().zip(hi_amp).zip(&src_row[..n - q]) {
                    *o += r * (a * b);
                }
                for ((o, &b), &r) in lo_dst.iter_mut().zip(lo_amp).zip(&src_row[n - q..]) {
                    *o += r * (a * b);
                }
            }
            let li = self.half_loss[i];
            for (j, o) in row.iter_mut().enumerate() {
                *o -= src[i * n + j] * (li + self.half_loss[j]);
            }
        });
        out
    }

    /// Full right-hand side: free commutator plus dissipator.
    pub fn lindblad_rhs(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.n {
            return Err(Error::GridMismatch { expected: self.n, got: rho.dim() });
        }
        let mut out = self.dissipator(rho);
        if self.hamiltonian == Hamiltonian::Free {
            let n = self.n;
            for i in 0..n {
                for j in 0..n {
                    let w = (self.energies[i] - self.energies[j]) / self.hbar;
                    let v = out.get(i, j) + C64::new(0.0, -w) * rho.get(i, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Elementwise free propagator over `h`, or `None` without a Hamiltonian.
    fn free_factors(&self, h: f64) -> Option<Vec<C64>> {
        if self.hamiltonian == Hamiltonian::None {
            return None;
        }
        let n = self.n;
        let mut f = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                f.push(C64::from_polar(1.0, -(self.energies[i] - self.energies[j]) * h / self.hbar));
            }
        }
        Some(f)
    }

    /// `d<P^2>/dt` read off the right-hand side.
    pub fn p2_rate(&self, grid: &Grid, rho: &DensityMatrix) -> Result<f64> {
        Ok(self.lindblad_rhs(rho)?.momentum_moment(grid, 2))
    }

    /// Closed 1D energy law for `d<P^2>/dt`.
    pub fn p2_rate_analytic(&self, p2: f64) -> f64 {
        let m = self.model();
        2.0 * m.mass * m.energy_source() - m.relaxation_rate() * p2
    }
}

fn apply_factors(rho: &mut DensityMatrix, f: &Option<Vec<C64>>) {
    if let Some(f) = f {
        rho.data_mut().iter_mut().zip(f).for_each(|(a, b)| *a *= b);
    }
}

fn combine(base: &DensityMatrix, k: &DensityMatrix, h: f64) -> DensityMatrix {
    let mut out = base.clone();
    out.add_scaled(k, h);
    out
}

/// Fixed-step integrator with exact free evolution.
pub struct Propagator<'a> {
    gen: &'a GeneratorSpec,
    dt: f64,
    half: Option<Vec<C64>>,
    full: Option<Vec<C64>>,
}

impl<'a> Propagator<'a> {
    pub fn new(gen: &'a GeneratorSpec, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(domain(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { gen, dt, half: gen.free_factors(0.5 * dt), full: gen.free_factors(dt) })
    }

    pub fn step(&self, rho: &DensityMatrix) -> DensityMatrix {
        let h = self.dt;
        let d = |r: &DensityMatrix| self.gen.dissipator(r);
        let mut e_rho = rho.clone();
        apply_factors(&mut e_rho, &self.half);

        let k1 = d(rho);
        let mut e_k1 = k1.clone();
        apply_factors(&mut e_k1, &self.half);
        let k2 = d(&combine(&e_rho, &e_k1, 0.5 * h));
        let k3 = d(&combine(&e_rho, &k2, 0.5 * h));
        // U_h rho + h U_{h/2} k3
        let mut stage4 = combine(&e_rho, &k3, h);
        apply_factors(&mut stage4, &self.half);
        let k4 = d(&stage4);

        // U_h (rho + h k1/6) + U_{h/2} h (k2 + k3)/3 + h k4/6
        let mut out = combine(rho, &k1, h / 6.0);
        apply_factors(&mut out, &self.full);
        let mut mid = k2;
        mid.add_scaled(&k3, 1.0);
        apply_factors(&mut mid, &self.half);
        out.add_scaled(&mid, h / 3.0);
        out.add_scaled(&k4, h / 6.0);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasterRecord {
    pub time: f64,
    pub trace: f64,
    pub energy: f64,
    pub energy_analytic: f64,
    pub min_eigenvalue: f64,
    pub hermiticity_error: f64,
}

#[derive(Debug, Clone)]
pub struct MasterTimeline {
    pub records: Vec<MasterRecord>,
    /// States at the record times.
    pub states: Vec<DensityMatrix>,
}

impl MasterTimeline {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("timeline holds the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn state_at(&self, time: f64) -> Option<&DensityMatrix> {
        self.records.iter().position(|r| (r.time - time).abs() < 1e-9).map(|i| &self.states[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagateOptions {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Check positivity at each record (one Hermitian eigensolve).
    pub check_positivity: bool,
    /// Keep the full matrices at every record.
    pub keep_states: bool,
}

impl PropagateOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, record_every: 1, check_positivity: true, keep_states: true }
    }
}

/// `E(t)` for the 1D energy law starting from `e0`.
pub fn energy_law(model: &SimModel, e0: f64, t: f64) -> f64 {
    let chi = model.relaxation_rate();
    if chi == 0.0 {
        e0 + model.energy_source() * t
    } else {
        let h_as = model.energy_source() / chi;
        h_as + (e0 - h_as) * (-chi * t).exp()
    }
}

pub fn propagate(rho0: &DensityMatrix, gen: &GeneratorSpec, grid: &Grid, opts: &PropagateOptions) -> Result<MasterTimeline> {
    if rho0.dim() != gen.dim() {
        return Err(Error::GridMismatch { expected: gen.dim(), got: rho0.dim() });
    }
    if opts.record_every == 0 {
        return Err(domain("record_every must be at least 1"));
    }
    if !(opts.t_end >= 0.0) {
        return Err(domain(format!("t_end must be non-negative, got {}", opts.t_end)));
    }
    let herm = rho0.hermiticity_error();
    if herm > 1e-10 {
        return Err(domain(format!("initial state is not Hermitian (error {herm:e})")));
    }
    let prop = Propagator::new(gen, opts.dt)?;
    let model = *gen.model();
    let mass = model.mass;
    let e0 = rho0.kinetic_energy(grid, mass);
    let n_steps = (opts.t_end / opts.dt).round() as usize;

    let mut records = Vec::new();
    let mut states = Vec::new();
    let mut rho = rho0.clone();
    for step in 0..=n_steps {
        if step % opts.record_every == 0 || step == n_steps {
            let time = step as f64 * opts.dt;
            let min_eigenvalue = if opts.check_positivity { rho.min_eigenvalue() } else { f64::NAN };
            if min_eigenvalue < -POSITIVITY_TOLERANCE {
                return Err(Error::Positivity { time, min_eigenvalue });
            }
            records.push(MasterRecord {
                time,
                trace: rho.trace().re,
                energy: rho.kinetic_energy(grid, mass),
                energy_analytic: energy_law(&model, e0, time),
                min_eigenvalue,
                hermiticity_error: rho.hermiticity_error(),
            });
            if opts.keep_states || step == n_steps {
                states.push(rho.clone());
            }
        }
        if step == n_steps {
            break;
        }
        rho = prop.step(&rho);
        if rho.data().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Integration { step, reason: "non-finite density matrix".into() });
        }
    }
    Ok(MasterTimeline { records, states })
}

/// Spatial shift by `a`: `rho(P', P'') exp(-i (P' - P'') a / hbar)`.
pub fn translate(rho: &DensityMatrix, grid: &Grid, a: f64) -> DensityMatrix {
    let n = rho.dim();
    let phase: Vec<C64> = grid.p().iter().map(|p| C64::from_polar(1.0, -p * a / grid.hbar())).collect();
    let mut out = rho.clone();
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, rho.get(i, j) * phase[i] * phase[j].conj());
        }
    }
    out
}

/// Momentum boost by `shift` grid cells (periodic).
pub fn boost(rho: &DensityMatrix, shift: usize) -> DensityMatrix {
    let n = rho.dim();
    let mut out = DensityMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set((i + shift) % n, (j + shift) % n, rho.get(i, j));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyFit {
    pub chi: f64,
    pub h_as: f64,
    pub h0: f64,
    /// Linear growth rate, set when `k = 0`.
    pub slope: f64,
    pub rms_residual: f64,
    pub chi_expected: f64,
    pub h_as_expected: f64,
    pub slope_expected: f64,
}

impl EnergyFit {
    pub fn chi_rel_error(&self) -> f64 {
        (self.chi / self.chi_expected - 1.0).abs()
    }

    pub fn h_as_rel_error(&self) -> f64 {
        (self.h_as / self.h_as_expected - 1.0).abs()
    }

    pub fn slope_rel_error(&self) -> f64 {
        (self.slope / self.slope_expected - 1.0).abs()
    }
}

/// Best `(a, b)` and residual sum of squares for `y = a exp(-chi t) + b`.
fn linear_part(times: &[f64], energies: &[f64], chi: f64) -> (f64, f64, f64) {
    let mut su = 0.0;
    let mut suu = 0.0;
    let mut sy = 0.0;
    let mut suy = 0.0;
    let n = times.len() as f64;
    for (&t, &y) in times.iter().zip(energies) {
        let u = (-chi * t).exp();
        su += u;
        suu += u * u;
        sy += y;
        suy += u * y;
    }
    let det = n * suu - su * su;
    let a = (n * suy - su * sy) / det;
    let b = (sy - a * su) / n;
    let rss = times.iter().zip(energies).map(|(&t, &y)| (a * (-chi * t).exp() + b - y).powi(2)).sum();
    (a, b, rss)
}

/// Least-squares fit of `H(t) = exp(-chi t)(H0 - H_as) + H_as`. For fixed `chi`
/// the model is linear in `(H0 - H_as, H_as)`, so only `chi` is searched
/// (log-spaced scan, then golden section). At `k = 0` a straight line is fitted.
pub fn relax_energy(times: &[f64], energies: &[f64], model: &SimModel) -> Result<EnergyFit> {
    if times.len() != energies.len() || times.len() < 4 {
        return Err(domain("energy fit needs at least four (t, H) samples"));
    }
    let chi_expected = model.relaxation_rate();
    let span = times[times.len() - 1] - times[0];
    let scale = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mut fit = EnergyFit {
        chi: 0.0,
        h_as: f64::INFINITY,
        h0: energies[0],
        slope: 0.0,
        rms_residual: 0.0,
        chi_expected,
        h_as_expected: if chi_expected > 0.0 { model.asymptotic_energy() } else { f64::INFINITY },
        slope_expected: model.energy_source(),
    };

    if model.k == 0.0 {
        let n = times.len() as f64;
        let mt = times.iter().sum::<f64>() / n;
        let my = energies.iter().sum::<f64>() / n;
        let stt: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
        let sty: f64 = times.iter().zip(energies).map(|(t, y)| (t - mt) * (y - my)).sum();
        fit.slope = sty / stt;
        fit.h0 = my - fit.slope * mt;
        let rss: f64 = times.iter().zip(energies).map(|(t, y)| (fit.h0 + fit.slope * t - y).powi(2)).sum();
        fit.rms_residual = (rss / n).sqrt();
    } else {
        if span * chi_expected < 3.0 {
            return Err(domain(format!(
                "timeline spans {span} but the fit needs at least 3/chi = {}",
                3.0 / chi_expected
            )));
        }
        let rss = |chi: f64| linear_part(times, energies, chi).2;
        // coarse scan over four decades around 1/span
        let lo = 0.01 / span;
        let hi = 1000.0 / span;
        let n_scan = 200;
        let ratio = (hi / lo).powf(1.0 / n_scan as f64);
        let mut best = (lo, rss(lo));
        let mut c = lo;
        for _ in 0..n_scan {
            c *= ratio;
            let r = rss(c);
            if r < best.1 {
                best = (c, r);
            }
        }
        let (mut a, mut b) = (best.0 / ratio, best.0 * ratio);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (rss(x1), rss(x2));
        for _ in 0..200 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = rss(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = rss(x2);
            }
            if (b - a) < 1e-14 * b {
                break;
            }
        }
        let chi = 0.5 * (a + b);
        let (amp, h_as, r) = linear_part(times, energies, chi);
        fit.chi = chi;
        fit.h_as = h_as;
        fit.h0 = amp + h_as;
        fit.rms_residual = (r / times.len() as f64).sqrt();
    }
    if !(fit.rms_residual <= 1e-3 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::FitQuality(format!(
            "rms residual {:e} exceeds 1e-3 of the energy scale {scale:e}",
            fit.rms_residual
        )));
    }
    Ok(fit)
}

/// Thermal populations `exp(-P^2 / (2 m k_B T))` on the grid, normalized.
pub fn gibbs_state(grid: &Grid, model: &SimModel, temperature_scale: f64) -> Result<DensityMatrix> {
    if model.k <= 0.0 {
        return Err(domain("the Gibbs state needs k > 0"));
    }
    let kt = model.thermal_energy() * temperature_scale;
    let mut pops: Vec<f64> = grid.p().iter().map(|p| (-p * p / (2.0 * model.mass * kt)).exp()).collect();
    let z: f64 = pops.iter().sum();
    pops.iter_mut().for_each(|v| *v /= z);
    Ok(DensityMatrix::from_diagonal(&pops))
}

/// `||rhs(rho_beta)|| / (||rho_beta|| c)` with Frobenius norms. The thermal
/// state may be evaluated at a multiple of the noise temperature.
pub fn gibbs_residual(gen: &GeneratorSpec, grid: &Grid, temperature_scale: f64) -> Result<f64> {
    let model = *gen.model();
    if model.k <= 0.0 {
        return Err(domain("the Gibbs state needs k > 0"));
    }
    let width = model.thermal_momentum() * temperature_scale.sqrt();
    if grid.p_max() < 6.0 * width {
        return Err(domain(format!(
            "grid reaches P = {} but needs 6 thermal widths ({})",
            grid.p_max(),
            6.0 * width
        )));
    }
    let rho = gibbs_state(grid, &model, temperature_scale)?;
    let rhs = gen.lindblad_rhs(&rho)?;
    Ok(rhs.frobenius_norm() / (rho.frobenius_norm() * gen.prefactor))
}

/// Largest pointwise difference between the main and anisotropic (`AppendixA`) kernels over
/// the grid.
pub fn appendix_a_kernel_equivalence(model: &SimModel, grid: &Grid) -> f64 {
    let mut worst = 0.0f64;
    for &q in grid.p() {
        for &p in grid.p() {
            worst = worst.max((kernel_value(model, q, p) - appendix_a_kernel_value(model, q, p)).abs());
        }
    }
    worst
}

/// Decoherence rate of position coherences at separation `d` for `k = 0`,
/// `lambda_1d m^2/m0^2 (1 - exp(-d^2 / (4 r_C^2)))`.
pub fn coherence_decay_rate(model: &SimModel, d: f64) -> f64 {
    model.collapse_rate() * (1.0 - (-d * d / (4.0 * model.r_c * model.r_c)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::WaveState;
    use std::sync::Arc;

    fn setup(k: f64, n: usize, h: Hamiltonian) -> (Arc<Grid>, GeneratorSpec) {
        let g = Grid::shared(n, 40.0, 1.0).unwrap();
        let gen = GeneratorSpec::new(&SimModel::dimensionless(k), &g, KernelVariant::Main, h).unwrap();
        (g, gen)
    }

    fn naive_rhs(gen: &GeneratorSpec, g: &Grid, rho: &DensityMatrix) -> DensityMatrix {
        let n = g.len();
        let mut out = DensityMatrix::zeros(n);
        let k = &gen.kernel;
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for q in 0..n {
                    let si = g.sub_index(i, q);
                    let sj = g.sub_index(j, q);
                    acc += rho.get(si, sj) * k.value(q, si) * k.value(q, sj);
                    acc -= rho.get(i, j) * 0.5 * (k.square(q, i) + k.square(q, j));
                }
                out.set(i, j, acc * gen.prefactor * g.dp());
            }
        }
        out
    }

    #[test]
    fn rhs_matches_direct_sum() {
        let (g, gen) = setup(0.25, 16, Hamiltonian::None);
        let s = WaveState::gaussian_packet(g.clone(), 0.5, 1.0, 0.3).unwrap();
        let rho = DensityMatrix::from_pure(&s.momentum());
        let a = gen.lindblad_rhs(&rho).unwrap();
        let b = naive_rhs(&gen, &g, &rho);
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn constant_diagonal_is_stationary_at_k0() {
        let (_, gen) = setup(0.0, 32, Hamiltonian::None);
        let rho = DensityMatrix::from_diagonal(&[1.0 / 32.0; 32]);
        let rhs = gen.lindblad_rhs(&rho).unwrap();
        assert!(rhs.frobenius_norm() < 1e-15);
    }

    #[test]
    fn free_evolution_is_exact_phase() {
        let g = Grid::shared(32, 20.0, 1.0).unwrap();
        let mut model = SimModel::dimensionless(0.0);
        model.gamma_1d = f64::MIN_POSITIVE;
        let gen = GeneratorSpec::new(&model, &g, KernelVariant::Main, Hamiltonian::Free).unwrap();
        let s = WaveState::gaussian_packet(g.clone(), -1.0, 1.0, 0.5).unwrap();
        let rho0 = DensityMatrix::from_pure(&s.momentum());
        let tl = propagate(&rho0, &gen, &g, &PropagateOptions::new(0.1, 2.0)).unwrap();
        let t = 2.0;
        let p = g.p();
        let mut worst = 0.0f64;
        for i in 0..32 {
            for j in 0..32 {
                let ph = C64::from_polar(1.0, -(p[i] * p[i] - p[j] * p[j]) * t / 2.0);
                worst = worst.max((tl.final_state().get(i, j) - rho0.get(i, j) * ph).norm());
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn energy_law_shape() {
        let m = SimModel::dimensionless(0.25);
        assert!((energy_law(&m, 3.0, 0.0) - 3.0).abs() < 1e-15);
        assert!((energy_law(&m, 3.0, 1e4) - 0.25).abs() < 1e-12);
        let m0 = SimModel::dimensionless(0.0);
        assert!((energy_law(&m0, 1.0, 2.0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_synthetic_curve() {
        let m = SimModel::dimensionless(0.25);
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let e: Vec<f64> = times.iter().map(|&t| energy_law(&m, 2.0, t)).collect();
        let fit = relax_energy(&times, &e, &m).unwrap();
        assert!(fit.chi_rel_error() < 1e-8);
        assert!(fit.h_as_rel_error() < 1e-8);
        assert!(relax_energy(&times[..20], &e[..20], &m).is_err());
    }

    #[test]
    fn fit_quality_error_on_noise() {
        let m = SimModel::dimensionless(0.25);
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let e: Vec<f64> = times.iter().enumerate().map(|(i, &t)| energy_law(&m, 2.0, t) + if i % 2 == 0 { 0.05 } else { -0.05 }).collect();
        assert!(matches!(relax_energy(&times, &e, &m), Err(Error::FitQuality(_))));
    }

    #[test]
    fn gibbs_grid_coverage() {
        let g = Grid::shared(16, 40.0, 1.0).unwrap();
        let gen = GeneratorSpec::new(&SimModel::dimensionless(0.25), &g, KernelVariant::Main, Hamiltonian::None).unwrap();
        assert!(gibbs_residual(&gen, &g, 1.0).is_err());
    }

    #[test]
    fn appendix_kernel_identical_in_1d() {
        let g = Grid::new(64, 20.0, 1.0).unwrap();
        assert_eq!(appendix_a_kernel_equivalence(&SimModel::dimensionless(0.25), &g), 0.0);
    }
}
