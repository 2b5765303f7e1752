//! Model parameters, unit conversions and closed-form parameter relations.
//!
//! Two layers live here. [`ModelParams`] holds the SI parameter set with the
//! three-dimensional relations (collapse rate, dissipation constant `k`, noise
//! temperature, energy relaxation). [`SimModel`] is the one-dimensional
//! parameter set the grid simulations run with, in whatever consistent units
//! the caller picks (usually `hbar = m = m0 = r_C = 1`, `lambda_1d = 1`).
//!
//! One-dimensional conventions: the smearing Gaussian of width `r_C` gives
//! `lambda_1d = gamma_1d / (2 sqrt(pi) r_C)`, and the Gaussian-moment
//! calculation of `d<P^2>/dt` for the one-particle generator closes to
//!
//! ```text
//! dH/dt = hbar^2 lambda_1d m / (4 (1+k)^3 r_C^2 m0^2) - chi_1d H
//! chi_1d = 4 k lambda_1d m^2 / ((1+k)^3 m0^2)
//! H_as   = hbar^2 / (16 k m r_C^2)
//! ```
//!
//! Each Cartesian direction of the 3D result carries the same constant term,
//! while the Jacobian of the momentum shift contributes `(1+k)^-1` per
//! direction, which is why the 3D law has `(1+k)^-5` and the 1D law `(1+k)^-3`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_positive, Result};

/// CODATA 2018 values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Reference nucleon mass (atomic mass unit), kg.
    pub nucleon_mass: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    nucleon_mass: 1.660_539_066_60e-27,
};

pub const HBAR: f64 = CONSTANTS.hbar;
pub const K_B: f64 = CONSTANTS.k_b;
pub const NUCLEON_MASS: f64 = CONSTANTS.nucleon_mass;

/// cm^3 -> m^3
pub const CM3: f64 = 1e-6;

/// Single-particle collapse rate `gamma / (4 pi r_C^2)^{3/2}`.
pub fn lambda_from_gamma(gamma: f64, r_c: f64) -> Result<f64> {
    ensure_positive("gamma", gamma)?;
    ensure_positive("r_C", r_c)?;
    Ok(gamma / (4.0 * PI * r_c * r_c).powf(1.5))
}

/// Inverse of [`lambda_from_gamma`].
pub fn gamma_from_lambda(lambda: f64, r_c: f64) -> Result<f64> {
    ensure_positive("lambda", lambda)?;
    ensure_positive("r_C", r_c)?;
    Ok(lambda * (4.0 * PI * r_c * r_c).powf(1.5))
}

/// Dissipation constant `k = hbar / (2 m v_eta r_C)`.
///
/// `v_eta = +inf` is accepted and gives `k = 0`.
pub fn k_from_v_eta(mass: f64, v_eta: f64, r_c: f64) -> Result<f64> {
    ensure_positive("mass", mass)?;
    ensure_positive("v_eta", v_eta)?;
    ensure_positive("r_C", r_c)?;
    Ok(HBAR / (2.0 * mass * v_eta * r_c))
}

/// Noise temperature `hbar v_eta / (4 k_B r_C)`; independent of the particle mass.
pub fn temperature_from_v_eta(v_eta: f64, r_c: f64) -> Result<f64> {
    ensure_positive("v_eta", v_eta)?;
    ensure_positive("r_C", r_c)?;
    Ok(HBAR * v_eta / (4.0 * K_B * r_c))
}

/// Linear heating rate of the original model, `3 hbar^2 m lambda / (4 r_C^2 m0^2)`.
pub fn heating_rate_3d(lambda: f64, mass: f64, m0: f64, r_c: f64) -> f64 {
    3.0 * HBAR * HBAR * mass * lambda / (4.0 * r_c * r_c * m0 * m0)
}

/// Energy relaxation rate `4 k lambda m^2 / ((1+k)^5 m0^2)`.
pub fn relaxation_rate_3d(lambda: f64, k: f64, mass: f64, m0: f64) -> f64 {
    4.0 * k * lambda * mass * mass / ((1.0 + k).powi(5) * m0 * m0)
}

/// Asymptotic kinetic energy `3 hbar^2 / (16 k m r_C^2)`; infinite for `k = 0`.
pub fn asymptotic_energy_3d(k: f64, mass: f64, r_c: f64) -> f64 {
    3.0 * HBAR * HBAR / (16.0 * k * mass * r_c * r_c)
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `gamma = 1e-30 cm^3/s`, `r_C = 1e-7 m`.
    #[default]
    Ghirardi1990,
    /// `lambda = 1e-9 1/s` at `r_C = 1e-7 m`.
    Adler2007,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Ghirardi1990 => "ghirardi1990",
            Preset::Adler2007 => "adler2007",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ghirardi1990" | "grw" => Ok(Preset::Ghirardi1990),
            "adler2007" | "adler" => Ok(Preset::Adler2007),
            other => Err(domain(format!("unknown preset {other:?}"))),
        }
    }
}

pub const DEFAULT_R_C: f64 = 1e-7;
pub const DEFAULT_GAMMA: f64 = 1e-30 * CM3;
pub const DEFAULT_V_ETA: f64 = 1e5;
pub const ADLER_LAMBDA: f64 = 1e-9;

/// SI parameter set of the dissipative model.
///
/// Derived fields (`lambda`, `k`, `temperature`) are computed once in
/// [`ModelParams::new`]; the struct is immutable afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// m^3/s
    pub gamma: f64,
    /// m
    pub r_c: f64,
    /// 1/s
    pub lambda: f64,
    /// kg
    pub mass: f64,
    /// kg
    pub m0: f64,
    /// m/s, `inf` for the non-dissipative limit
    pub v_eta: f64,
    pub k: f64,
    /// K
    pub temperature: f64,
}

impl ModelParams {
    pub fn new(gamma: f64, r_c: f64, mass: f64, m0: f64, v_eta: f64) -> Result<Self> {
        ensure_positive("m0", m0)?;
        let lambda = lambda_from_gamma(gamma, r_c)?;
        let (k, temperature) = if v_eta.is_infinite() && v_eta > 0.0 {
            ensure_positive("mass", mass)?;
            (0.0, f64::INFINITY)
        } else {
            (
                k_from_v_eta(mass, v_eta, r_c)?,
                temperature_from_v_eta(v_eta, r_c)?,
            )
        };
        Ok(Self { gamma, r_c, lambda, mass, m0, v_eta, k, temperature })
    }

    /// Preset parameters for one nucleon with `v_eta = 1e5 m/s`.
    pub fn preset(preset: Preset) -> Self {
        let gamma = match preset {
            Preset::Ghirardi1990 => DEFAULT_GAMMA,
            Preset::Adler2007 => gamma_from_lambda(ADLER_LAMBDA, DEFAULT_R_C).unwrap(),
        };
        Self::new(gamma, DEFAULT_R_C, NUCLEON_MASS, NUCLEON_MASS, DEFAULT_V_ETA).unwrap()
    }

    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Self::new(self.gamma, self.r_c, mass, self.m0, self.v_eta)
    }

    pub fn heating_rate(&self) -> f64 {
        heating_rate_3d(self.lambda, self.mass, self.m0, self.r_c)
    }

    pub fn relaxation_rate(&self) -> f64 {
        relaxation_rate_3d(self.lambda, self.k, self.mass, self.m0)
    }

    pub fn asymptotic_energy(&self) -> f64 {
        asymptotic_energy_3d(self.k, self.mass, self.r_c)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::preset(Preset::Ghirardi1990)
    }
}

/// Plain JSON parameter file.
///
/// ```json
/// { "preset": "adler2007", "r_C_m": 1e-7, "v_eta_m_per_s": 1e5, "mass_amu": 1.0 }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_cm3_per_s: Option<f64>,
    #[serde(default, rename = "r_C_m", skip_serializing_if = "Option::is_none")]
    pub r_c_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_eta_m_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_amu: Option<f64>,
}

impl ParamsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Explicit keys override the preset. With the Adler preset and no
    /// explicit `gamma`, the collapse rate stays pinned at `1e-9 1/s` even if
    /// `r_C` changes.
    pub fn resolve(&self) -> Result<ModelParams> {
        let preset = self.preset.unwrap_or_default();
        let r_c = self.r_c_m.unwrap_or(DEFAULT_R_C);
        let gamma = match (self.gamma_cm3_per_s, preset) {
            (Some(g), _) => g * CM3,
            (None, Preset::Ghirardi1990) => DEFAULT_GAMMA,
            (None, Preset::Adler2007) => gamma_from_lambda(ADLER_LAMBDA, r_c)?,
        };
        let v_eta = self.v_eta_m_per_s.unwrap_or(DEFAULT_V_ETA);
        let mass = self.mass_amu.unwrap_or(1.0) * NUCLEON_MASS;
        ModelParams::new(gamma, r_c, mass, NUCLEON_MASS, v_eta)
    }
}

/// Dimensioned quantities understood by [`SimUnits`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Length,
    Time,
    Rate,
    Momentum,
    Energy,
}

/// Reporting units: lengths in `r_C`, times in `1/lambda`, momenta in
/// `hbar/r_C`, energies in `hbar^2/(m r_C^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimUnits {
    pub length: f64,
    pub time: f64,
    pub momentum: f64,
    pub energy: f64,
}

impl SimUnits {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            length: params.r_c,
            time: 1.0 / params.lambda,
            momentum: HBAR / params.r_c,
            energy: HBAR * HBAR / (params.mass * params.r_c * params.r_c),
        }
    }

    fn unit(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Length => self.length,
            Quantity::Time => self.time,
            Quantity::Rate => 1.0 / self.time,
            Quantity::Momentum => self.momentum,
            Quantity::Energy => self.energy,
        }
    }

    pub fn to_sim(&self, q: Quantity, si: f64) -> f64 {
        si / self.unit(q)
    }

    pub fn to_si(&self, q: Quantity, sim: f64) -> f64 {
        sim * self.unit(q)
    }
}

/// One-dimensional parameter set used by the grid simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimModel {
    pub hbar: f64,
    pub mass: f64,
    pub m0: f64,
    pub r_c: f64,
    /// 1D coupling strength (length/time)
    pub gamma_1d: f64,
    pub k: f64,
}

impl SimModel {
    /// `hbar = m = m0 = r_C = 1` and `lambda_1d = 1`.
    pub fn dimensionless(k: f64) -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            m0: 1.0,
            r_c: 1.0,
            gamma_1d: 2.0 * PI.sqrt(),
            k,
        }
    }

    /// Lengths in `r_C`, times in `1/lambda`, masses in `m`. The one-dimensional
    /// rate is pinned to the 3D `lambda`, so `hbar` becomes the dimensionless
    /// dispersion strength `hbar / (m r_C^2 lambda)`.
    pub fn from_params(params: &ModelParams) -> Self {
        Self {
            hbar: HBAR / (params.mass * params.r_c * params.r_c * params.lambda),
            mass: 1.0,
            m0: params.m0 / params.mass,
            r_c: 1.0,
            gamma_1d: 2.0 * PI.sqrt(),
            k: params.k,
        }
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("hbar", self.hbar)?;
        ensure_positive("mass", self.mass)?;
        ensure_positive("m0", self.m0)?;
        ensure_positive("r_C", self.r_c)?;
        ensure_positive("gamma_1d", self.gamma_1d)?;
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(domain(format!("k must be finite and >= 0, got {}", self.k)));
        }
        Ok(())
    }

    /// `gamma_1d / (2 sqrt(pi) r_C)`
    pub fn lambda_1d(&self) -> f64 {
        self.gamma_1d / (2.0 * PI.sqrt() * self.r_c)
    }

    /// Rate of the full collapse operator at this mass, `lambda_1d m^2 / m0^2`.
    pub fn collapse_rate(&self) -> f64 {
        self.lambda_1d() * self.mass * self.mass / (self.m0 * self.m0)
    }

    /// Master-equation prefactor `gamma_1d m^2 / (2 pi hbar m0^2)`.
    pub fn kernel_prefactor(&self) -> f64 {
        self.gamma_1d * self.mass * self.mass / (2.0 * PI * self.hbar * self.m0 * self.m0)
    }

    /// `4 k lambda_1d m^2 / ((1+k)^3 m0^2)`
    pub fn relaxation_rate(&self) -> f64 {
        4.0 * self.k * self.collapse_rate() / (1.0 + self.k).powi(3)
    }

    /// `hbar^2 / (16 k m r_C^2)`
    pub fn asymptotic_energy(&self) -> f64 {
        self.hbar * self.hbar / (16.0 * self.k * self.mass * self.r_c * self.r_c)
    }

    /// Constant source term of the energy law, `hbar^2 lambda_1d m / (4 (1+k)^3 r_C^2 m0^2)`.
    /// At `k = 0` this is the linear heating rate.
    pub fn energy_source(&self) -> f64 {
        self.hbar * self.hbar * self.lambda_1d() * self.mass
            / (4.0 * (1.0 + self.k).powi(3) * self.r_c * self.r_c * self.m0 * self.m0)
    }

    /// Thermal energy `k_B T = hbar^2 / (8 m k r_C^2)` of the noise.
    pub fn thermal_energy(&self) -> f64 {
        self.hbar * self.hbar / (8.0 * self.mass * self.k * self.r_c * self.r_c)
    }

    /// Rms thermal momentum `sqrt(m k_B T)`.
    pub fn thermal_momentum(&self) -> f64 {
        (self.mass * self.thermal_energy()).sqrt()
    }
}
