//! C ABI for the dcsl engine.
//!
//! Conventions:
//! - every fallible function returns a [`DcslStatus`] and writes results
//!   through out-pointers;
//! - simulations are owned through opaque handles created by `*_new` and
//!   released by the matching `*_free`;
//! - after a non-`Ok` status, `dcsl_last_error_message` returns the message
//!   for the calling thread.
//!
//! Simulation handles run in dimensionless units: `hbar = m = m0 = r_C = 1`
//! and a single-particle collapse rate of 1.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use dcsl::master::{gibbs_residual, GeneratorSpec, Propagator};
use dcsl::noise::NoiseField;
use dcsl::sde::{Hamiltonian, Stepper};
use dcsl::{DensityMatrix, Error, Grid, KernelL, KernelVariant, SimModel, WaveState, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcslStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    GridMismatch = 3,
    Integration = 4,
    Positivity = 5,
    FitQuality = 6,
    Config = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> DcslStatus {
    match e {
        Error::Domain(_) => DcslStatus::Domain,
        Error::GridMismatch { .. } => DcslStatus::GridMismatch,
        Error::Integration { .. } | Error::Trajectory { .. } => DcslStatus::Integration,
        Error::Positivity { .. } => DcslStatus::Positivity,
        Error::FitQuality(_) => DcslStatus::FitQuality,
        Error::Config(_) => DcslStatus::Config,
        Error::Io(_) | Error::Json(_) => DcslStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (DcslStatus, String)>>(f: F) -> DcslStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DcslStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside dcsl");
            DcslStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (DcslStatus, String)>;
}

impl<T> IntoFfi<T> for dcsl::Result<T> {
    fn ffi(self) -> Result<T, (DcslStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(name: &str) -> (DcslStatus, String) {
    (DcslStatus::NullPointer, format!("{name} is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (DcslStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dcsl_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dcsl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `lambda = gamma / (4 pi r_C^2)^{3/2}` in SI units (`gamma` in m^3/s).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcsl_lambda_from_gamma(gamma: f64, r_c: f64, out: *mut f64) -> DcslStatus {
    guard(|| {
        *out_ref(out, "out")? = dcsl::params::lambda_from_gamma(gamma, r_c).ffi()?;
        Ok(())
    })
}

/// `k = hbar / (2 m v_eta r_C)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcsl_k_from_v_eta(mass: f64, v_eta: f64, r_c: f64, out: *mut f64) -> DcslStatus {
    guard(|| {
        *out_ref(out, "out")? = dcsl::params::k_from_v_eta(mass, v_eta, r_c).ffi()?;
        Ok(())
    })
}

/// Noise temperature `hbar v_eta / (4 k_B r_C)` in kelvin.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcsl_temperature_from_v_eta(v_eta: f64, r_c: f64, out: *mut f64) -> DcslStatus {
    guard(|| {
        *out_ref(out, "out")? = dcsl::params::temperature_from_v_eta(v_eta, r_c).ffi()?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DcslRates {
    pub gamma: f64,
    pub chi: f64,
    pub ratio: f64,
    pub asymptotic_ratio: f64,
    pub n_particles: f64,
}

/// Rates of a homogeneous sphere of `n_particles` nucleons, or of the
/// reference density when `n_particles <= 0`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcsl_sphere_rates(
    lambda: f64,
    k: f64,
    r_c: f64,
    radius: f64,
    n_particles: f64,
    out: *mut DcslRates,
) -> DcslStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let mut params = dcsl::ModelParams::default();
        params.lambda = lambda;
        params.k = k;
        params.r_c = r_c;
        let body = if n_particles > 0.0 {
            dcsl::macro_rates::MacroBody::from_count(&params, radius, n_particles)
        } else {
            dcsl::macro_rates::MacroBody::reference(&params, radius)
        }
        .ffi()?;
        let r = dcsl::macro_rates::rate_ratio(&body).ffi()?;
        *out = DcslRates {
            gamma: r.gamma,
            chi: r.chi,
            ratio: r.ratio,
            asymptotic_ratio: r.asymptotic_ratio,
            n_particles: body.n_particles,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DcslObservables {
    pub time: f64,
    pub norm: f64,
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_p: f64,
    pub kinetic_energy: f64,
}

/// Single nonlinear trajectory.
pub struct DcslTrajectory {
    grid: Arc<Grid>,
    kernel: KernelL,
    noise: NoiseField,
    phi: Vec<C64>,
    dt: f64,
    hamiltonian: Hamiltonian,
    steps: usize,
}

/// Creates a trajectory from the two-peak state `w_right g(x - alpha) + w_left g(x + alpha)`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle owned by
/// the caller.
#[no_mangle]
pub unsafe extern "C" fn dcsl_trajectory_new(
    k: f64,
    n: usize,
    length: f64,
    alpha: f64,
    sigma: f64,
    w_right: f64,
    w_left: f64,
    dt: f64,
    seed: u64,
    trajectory: u64,
    free_hamiltonian: bool,
    out: *mut *mut DcslTrajectory,
) -> DcslStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let model = SimModel::dimensionless(k);
        let grid = Grid::shared(n, length, model.hbar).ffi()?;
        let kernel = KernelL::build(&model, &grid).ffi()?;
        if !(dt > 0.0) || model.collapse_rate() * dt > dcsl::sde::MAX_RATE_DT {
            return Err((DcslStatus::Domain, format!("dt = {dt} outside (0, {}]", dcsl::sde::MAX_RATE_DT)));
        }
        let state = WaveState::gaussian_superposition(
            grid.clone(),
            alpha,
            sigma,
            (C64::new(w_right, 0.0), C64::new(w_left, 0.0)),
        )
        .ffi()?;
        let noise = NoiseField::new(&grid, seed, trajectory);
        let hamiltonian = if free_hamiltonian { Hamiltonian::Free } else { Hamiltonian::None };
        let h = DcslTrajectory { phi: state.momentum(), grid, kernel, noise, dt, hamiltonian, steps: 0 };
        *out = Box::into_raw(Box::new(h));
        Ok(())
    })
}

/// Advances the trajectory by `n_steps` steps.
///
/// # Safety
/// `h` must be a live handle from `dcsl_trajectory_new`.
#[no_mangle]
pub unsafe extern "C" fn dcsl_trajectory_step(h: *mut DcslTrajectory, n_steps: usize) -> DcslStatus {
    guard(|| {
        let h = out_ref(h, "handle")?;
        let mut stepper = Stepper::new(&h.kernel, &h.grid, h.dt, h.hamiltonian).ffi()?;
        let mut dw = vec![0.0; h.grid.len()];
        for _ in 0..n_steps {
            h.noise.fill_increments(h.dt, &mut dw).ffi()?;
            stepper.step_nonlinear(&mut h.phi, &dw, h.steps, true).ffi()?;
            h.steps += 1;
        }
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcsl_trajectory_observables(h: *const DcslTrajectory, out: *mut DcslObservables) -> DcslStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        let out = out_ref(out, "out")?;
        let state = WaveState::from_momentum(h.grid.clone(), &h.phi).ffi()?;
        let o = state.observables(1.0).ffi()?;
        *out = DcslObservables {
            time: h.steps as f64 * h.dt,
            norm: o.norm,
            mean_x: o.mean_x,
            var_x: o.var_x,
            mean_p: o.mean_p,
            kinetic_energy: o.kinetic_energy,
        };
        Ok(())
    })
}

/// Writes `|psi(x_i)|^2` on the grid into `buf`, which must hold `len >= n` values.
///
/// # Safety
/// `h` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dcsl_trajectory_density(h: *const DcslTrajectory, buf: *mut f64, len: usize) -> DcslStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let n = h.grid.len();
        if len < n {
            return Err((DcslStatus::BufferTooSmall, format!("buffer holds {len} values, need {n}")));
        }
        let out = std::slice::from_raw_parts_mut(buf, n);
        for (o, z) in out.iter_mut().zip(h.grid.to_position(&h.phi)) {
            *o = z.norm_sqr();
        }
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from `dcsl_trajectory_new` not freed before.
#[no_mangle]
pub unsafe extern "C" fn dcsl_trajectory_free(h: *mut DcslTrajectory) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Density matrix under the master equation.
pub struct DcslMaster {
    grid: Arc<Grid>,
    gen: GeneratorSpec,
    rho: DensityMatrix,
    time: f64,
}

/// Starts from a Gaussian packet of width `sigma` at `x0` with momentum `p0`.
/// `appendix_a` selects the anisotropic kernel.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle owned by
/// the caller.
#[no_mangle]
pub unsafe extern "C" fn dcsl_master_new(
    k: f64,
    n: usize,
    length: f64,
    sigma: f64,
    x0: f64,
    p0: f64,
    free_hamiltonian: bool,
    appendix_a: bool,
    out: *mut *mut DcslMaster,
) -> DcslStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let model = SimModel::dimensionless(k);
        let grid = Grid::shared(n, length, model.hbar).ffi()?;
        let variant = if appendix_a { KernelVariant::AppendixA } else { KernelVariant::Main };
        let hamiltonian = if free_hamiltonian { Hamiltonian::Free } else { Hamiltonian::None };
        let gen = GeneratorSpec::new(&model, &grid, variant, hamiltonian).ffi()?;
        let state = WaveState::gaussian_packet(grid.clone(), x0, sigma, p0).ffi()?;
        let rho = DensityMatrix::from_pure(&state.momentum());
        *out = Box::into_raw(Box::new(DcslMaster { grid, gen, rho, time: 0.0 }));
        Ok(())
    })
}

/// Advances by `n_steps` fourth-order steps of size `dt`.
///
/// # Safety
/// `h` must be a live handle from `dcsl_master_new`.
#[no_mangle]
pub unsafe extern "C" fn dcsl_master_step(h: *mut DcslMaster, dt: f64, n_steps: usize) -> DcslStatus {
    guard(|| {
        let h = out_ref(h, "handle")?;
        let prop = Propagator::new(&h.gen, dt).ffi()?;
        for _ in 0..n_steps {
            h.rho = prop.step(&h.rho);
            h.time += dt;
        }
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DcslMasterState {
    pub time: f64,
    pub trace: f64,
    pub kinetic_energy: f64,
    pub min_eigenvalue: f64,
}

/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcsl_master_state(h: *const DcslMaster, out: *mut DcslMasterState) -> DcslStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        let out = out_ref(out, "out")?;
        *out = DcslMasterState {
            time: h.time,
            trace: h.rho.trace().re,
            kinetic_energy: h.rho.kinetic_energy(&h.grid, 1.0),
            min_eigenvalue: h.rho.min_eigenvalue(),
        };
        Ok(())
    })
}

/// Stationarity residual of the thermal state at `temperature_scale` times
/// the noise temperature.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcsl_master_gibbs_residual(h: *const DcslMaster, temperature_scale: f64, out: *mut f64) -> DcslStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        *out_ref(out, "out")? = gibbs_residual(&h.gen, &h.grid, temperature_scale).ffi()?;
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from `dcsl_master_new` not freed before.
#[no_mangle]
pub unsafe extern "C" fn dcsl_master_free(h: *mut DcslMaster) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
