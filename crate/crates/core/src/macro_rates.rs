//! Localization and dissipation rates of a rigid homogeneous sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_positive, Result};
use crate::params::{gamma_from_lambda, ModelParams};

/// Particles per cubic centimetre behind `N = 1e25 (R[cm])^3`.
pub const REFERENCE_NUMBER_DENSITY_CM3: f64 = 1e25 / (4.0 * PI / 3.0);

/// Below this `R / r_C` the asymptotic ratio estimate is flagged as unreliable.
pub const ASYMPTOTIC_RADIUS_RATIO: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroBody {
    pub n_particles: f64,
    /// m
    pub radius: f64,
    /// particles / m^3
    pub density: f64,
    pub r_c: f64,
    /// s^-1
    pub lambda: f64,
    pub k: f64,
}

fn sphere_volume(radius: f64) -> f64 {
    4.0 * PI * radius.powi(3) / 3.0
}

impl MacroBody {
    pub fn from_density(params: &ModelParams, radius: f64, density: f64) -> Result<Self> {
        ensure_positive("radius", radius)?;
        ensure_positive("density", density)?;
        Ok(Self {
            n_particles: density * sphere_volume(radius),
            radius,
            density,
            r_c: params.r_c,
            lambda: params.lambda,
            k: params.k,
        })
    }

    pub fn from_count(params: &ModelParams, radius: f64, n_particles: f64) -> Result<Self> {
        ensure_positive("radius", radius)?;
        ensure_positive("N", n_particles)?;
        Ok(Self {
            n_particles,
            radius,
            density: n_particles / sphere_volume(radius),
            r_c: params.r_c,
            lambda: params.lambda,
            k: params.k,
        })
    }

    /// Reference matter density, `N = 1e25 (R[cm])^3`.
    pub fn reference(params: &ModelParams, radius: f64) -> Result<Self> {
        Self::from_density(params, radius, REFERENCE_NUMBER_DENSITY_CM3 / 1e-6)
    }

    /// Particles per `r_C^3`.
    pub fn n_per_cell(&self) -> f64 {
        self.density * self.r_c.powi(3)
    }

    /// Number of `r_C^3` cells in the body.
    pub fn n_cells(&self) -> f64 {
        sphere_volume(self.radius) / self.r_c.powi(3)
    }
}

/// `Gamma = lambda n^2 N~`.
pub fn amplification_rate(lambda: f64, n: f64, n_tilde: f64) -> Result<f64> {
    if !(n >= 0.0 && n_tilde >= 0.0) {
        return Err(domain(format!("counts must be non-negative, got n = {n}, N~ = {n_tilde}")));
    }
    Ok(lambda * n * n * n_tilde)
}

/// Sphere form `lambda N^2 r_C^3 / (4 pi R^3 / 3)`.
pub fn sphere_amplification_rate(body: &MacroBody) -> f64 {
    body.lambda * body.n_particles * body.n_particles * body.r_c.powi(3) / sphere_volume(body.radius)
}

/// `16 sqrt(2) k r_C^5 lambda / (2 r_C^2 + R^2)^{5/2}`, to first order in `k`.
pub fn sphere_dissipation_rate(lambda: f64, k: f64, r_c: f64, radius: f64) -> Result<f64> {
    ensure_positive("radius", radius)?;
    if !(k >= 0.0) {
        return Err(domain(format!("k must be non-negative, got {k}")));
    }
    Ok(16.0 * 2f64.sqrt() * k * r_c.powi(5) * lambda / (2.0 * r_c * r_c + radius * radius).powf(2.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub body: MacroBody,
    /// Localization rate, s^-1.
    pub gamma: f64,
    /// Dissipation rate, s^-1.
    pub chi: f64,
    /// `Gamma / chi`, infinite when `chi = 0`.
    pub ratio: f64,
    /// `1e4 N^2 (R / r_C)^2`
    pub asymptotic_ratio: f64,
    /// `R / r_C >= 1e3`
    pub asymptotic_valid: bool,
}

pub fn rate_ratio(body: &MacroBody) -> Result<RateReport> {
    let gamma = sphere_amplification_rate(body);
    let chi = sphere_dissipation_rate(body.lambda, body.k, body.r_c, body.radius)?;
    let x = body.radius / body.r_c;
    Ok(RateReport {
        body: *body,
        gamma,
        chi,
        ratio: if chi > 0.0 { gamma / chi } else { f64::INFINITY },
        asymptotic_ratio: 1e4 * body.n_particles * body.n_particles * x * x,
        asymptotic_valid: x >= ASYMPTOTIC_RADIUS_RATIO,
    })
}

/// Volume shared by two spheres of radius `r` whose centres are `d` apart.
pub fn lens_volume(radius: f64, d: f64) -> f64 {
    if d >= 2.0 * radius {
        0.0
    } else {
        PI * (4.0 * radius + d) * (2.0 * radius - d).powi(2) / 12.0
    }
}

/// Particles of the body outside its copy displaced by `d`.
pub fn particles_outside(body: &MacroBody, d: f64) -> f64 {
    body.density * (sphere_volume(body.radius) - lens_volume(body.radius, d))
}

/// Sharp-scanning decoherence function `gamma D n_out(d)` of a homogeneous sphere.
pub fn sharp_scanning_lambda(body: &MacroBody, d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(domain(format!("displacement must be non-negative, got {d}")));
    }
    let gamma = gamma_from_lambda(body.lambda, body.r_c)?;
    Ok(gamma * body.density * particles_outside(body, d))
}
