//! Total energy and its dissipation rate for a discrete state.

use crate::discretization::{Discretization, FieldSet};
use crate::fem::field::{gradient, value, vector_jacobian, vector_value};
use crate::fem::{integrate, integrate_interface, AssemblyError, QuadPoint};
use crate::mesh::Region;
use crate::params::PhysParams;

/// Quadrature used for every energy integral; it matches the rule of the
/// Cahn-Hilliard step so the discrete energy law holds exactly.
pub const ENERGY_DEGREE: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyReport {
    /// `ρ₀/2 ‖u_c‖²`
    pub kinetic_conduit: f64,
    /// `ρ₀/(2χ) ‖u_m‖²`
    pub kinetic_matrix: f64,
    /// `γ ∫ (ε/2 |∇φ|² + F(φ)/ε)`
    pub interfacial: f64,
    pub total: f64,
    pub dissipation: f64,
}

/// Double-well potential `F(φ) = (φ² − 1)²/4`
pub fn double_well(phi: f64) -> f64 {
    0.25 * (phi * phi - 1.0).powi(2)
}

pub fn energy(disc: &Discretization, state: &FieldSet, params: &PhysParams) -> Result<EnergyReport, AssemblyError> {
    let phase = disc.phase();
    let (vc, vm) = (disc.velocity(Region::Conduit), disc.velocity(Region::Matrix));
    let sq = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];

    let kinetic_conduit = 0.5
        * params.rho0
        * integrate(vc, &|qp: &QuadPoint| sq(vector_value(vc, &state.u_c, qp.cell, qp.bary)), ENERGY_DEGREE)?;
    let kinetic_matrix = 0.5 * params.rho0 / params.chi
        * integrate(vm, &|qp: &QuadPoint| sq(vector_value(vm, &state.u_m, qp.cell, qp.bary)), ENERGY_DEGREE)?;
    let (g, e) = (params.gamma, params.epsilon);
    let interfacial = integrate(
        phase,
        &|qp: &QuadPoint| {
            let p = value(phase, &state.phi, qp.cell, qp.bary);
            let dp = gradient(phase, &state.phi, qp.cell, qp.bary);
            g * (0.5 * e * sq(dp) + double_well(p) / e)
        },
        ENERGY_DEGREE,
    )?;

    let nu = |qp: &QuadPoint| params.viscosity.eval(value(phase, &state.phi, qp.cell, qp.bary));
    let k_inv = params.permeability_inverse();
    let darcy = integrate(
        vm,
        &|qp: &QuadPoint| {
            let u = vector_value(vm, &state.u_m, qp.cell, qp.bary);
            let ku = [k_inv[0][0] * u[0] + k_inv[0][1] * u[1], k_inv[1][0] * u[0] + k_inv[1][1] * u[1]];
            nu(qp) * (u[0] * ku[0] + u[1] * ku[1])
        },
        ENERGY_DEGREE,
    )?;
    let viscous = integrate(
        vc,
        &|qp: &QuadPoint| {
            let j = vector_jacobian(vc, &state.u_c, qp.cell, qp.bary);
            let off = 0.5 * (j[0][1] + j[1][0]);
            2.0 * nu(qp) * (j[0][0] * j[0][0] + j[1][1] * j[1][1] + 2.0 * off * off)
        },
        ENERGY_DEGREE,
    )?;
    let diffusive = integrate(
        phase,
        &|qp: &QuadPoint| {
            let p = value(phase, &state.phi, qp.cell, qp.bary);
            params.mobility.eval(p) * sq(gradient(phase, &state.mu, qp.cell, qp.bary))
        },
        ENERGY_DEGREE,
    )?;
    let friction = integrate_interface(vc, &|qp: &QuadPoint, _n: [f64; 2], t: [f64; 2]| {
        let u = vector_value(vc, &state.u_c, qp.cell, qp.bary);
        let ut = u[0] * t[0] + u[1] * t[1];
        params.friction(value(phase, &state.phi, qp.cell, qp.bary)) * ut * ut
    });

    Ok(EnergyReport {
        kinetic_conduit,
        kinetic_matrix,
        interfacial,
        total: kinetic_conduit + kinetic_matrix + interfacial,
        dissipation: darcy + viscous + diffusive + friction,
    })
}

/// `(φ, 1)`
pub fn mass(disc: &Discretization, phi: &[f64]) -> Result<f64, AssemblyError> {
    let phase = disc.phase();
    integrate(phase, &|qp: &QuadPoint| value(phase, phi, qp.cell, qp.bary), ENERGY_DEGREE)
}
