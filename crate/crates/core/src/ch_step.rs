//! One Cahn-Hilliard step with the intermediate velocity eliminated.
//!
//! The unknowns are `(φ^{k+1}, μ^{k+1})` in `Y_h × Y_h`. Substituting
//! `ū = u^k − τ c φ^k ∇μ^{k+1}` (`c = 1/ρ₀` in the conduit, `χ/ρ₀` in the
//! matrix) into the transport equation leaves a system that is linear in `μ`
//! and cubic in `φ`, solved here by damped Newton iteration.

use thiserror::Error;

use crate::discretization::Discretization;
use crate::fem::field::{gradient, value, vector_value};
use crate::fem::sparse::{norm_inf, solve_sparse, SolveError, SparseMatrix, TripletBuilder};
use crate::fem::{
    assemble_bilinear_with_degree, assemble_linear_with_degree, AssemblyError, Coefficient, FeSpace, Kernel,
    QuadPoint, Source,
};
use crate::forcing::Forcing;
use crate::mesh::Region;
use crate::params::PhysParams;

/// Quadrature exactness of every Cahn-Hilliard form. Using one rule for the
/// cubic term, the coupling terms and the energy keeps the discrete energy
/// law exact at the quadrature level.
pub const CH_DEGREE: usize = 8;

#[derive(Debug, Error)]
pub enum ChError {
    #[error("Newton iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("non-finite value in the Cahn-Hilliard state")]
    NonFiniteState,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Bound on the ∞-norm of the (τ-scaled) nonlinear residual
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step halvings tried when a full step increases the residual
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tolerance: 1e-10, max_iterations: 50, max_halvings: 8 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Largest relative residual among the linear solves
    pub max_linear_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChState {
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Previous-step data entering the Cahn-Hilliard solve
#[derive(Clone, Copy, Debug)]
pub struct ChInput<'a> {
    pub phi: &'a [f64],
    /// Initial Newton guess for `μ^{k+1}`
    pub mu_guess: &'a [f64],
    pub u_c: &'a [f64],
    pub u_m: &'a [f64],
}

/// Velocity at a quadrature point, taken from the subdomain field the cell
/// belongs to
pub fn velocity_at(disc: &Discretization, u_c: &[f64], u_m: &[f64], qp: &QuadPoint) -> [f64; 2] {
    match disc.mesh().region(qp.cell) {
        Region::Conduit => vector_value(disc.velocity(Region::Conduit), u_c, qp.cell, qp.bary),
        Region::Matrix => vector_value(disc.velocity(Region::Matrix), u_m, qp.cell, qp.bary),
    }
}

/// Capillarity-corrected advecting velocity
/// `ū = u^k − τ c φ^k ∇μ^{k+1}` at a quadrature point
pub fn intermediate_velocity(
    disc: &Discretization,
    input: &ChInput,
    mu_next: &[f64],
    params: &PhysParams,
    tau: f64,
    qp: &QuadPoint,
) -> [f64; 2] {
    let region = disc.mesh().region(qp.cell);
    let u = velocity_at(disc, input.u_c, input.u_m, qp);
    let phi = value(disc.phase(), input.phi, qp.cell, qp.bary);
    let g = gradient(disc.phase(), mu_next, qp.cell, qp.bary);
    let c = tau * params.advection_factor(region) * phi;
    [u[0] - c * g[0], u[1] - c * g[1]]
}

/// Residual and Jacobian of the Cahn-Hilliard step. With `n` phase DOFs the
/// unknown vector is `[φ | μ]` and
///
/// ```text
/// R₁ = M(φ − φᵏ) + τ (A μ − g − F₁)
/// R₂ = (γ/ε)(N(φ) − M φᵏ) + γ ε K φ − M μ − F₂
/// ```
///
/// where `A` is the stiffness matrix weighted by `M(φᵏ) + τ c (φᵏ)²`,
/// `g_i = (uᵏ φᵏ, ∇v_i)` and `N_i(φ) = (φ³, v_i)`.
pub struct ChSystem<'a> {
    space: &'a FeSpace,
    tau: f64,
    gamma: f64,
    epsilon: f64,
    mass: SparseMatrix,
    stiffness: SparseMatrix,
    weighted: SparseMatrix,
    phi_prev: Vec<f64>,
    mass_phi_prev: Vec<f64>,
    load1: Vec<f64>,
    load2: Vec<f64>,
}

impl<'a> ChSystem<'a> {
    pub fn new(
        disc: &'a Discretization,
        input: &ChInput,
        params: &PhysParams,
        tau: f64,
        t_next: f64,
        forcing: &dyn Forcing,
    ) -> Result<Self, ChError> {
        let space = disc.phase();
        let mesh = disc.mesh();
        let phi_at = |qp: &QuadPoint| value(space, input.phi, qp.cell, qp.bary);

        let mass = assemble_bilinear_with_degree(space, space, &Kernel::Mass(Coefficient::Constant(1.0)), CH_DEGREE)?;
        let stiffness =
            assemble_bilinear_with_degree(space, space, &Kernel::Stiffness(Coefficient::Constant(1.0)), CH_DEGREE)?;
        let weight = |qp: &QuadPoint| {
            let p = phi_at(qp);
            params.mobility.eval(p) + tau * params.advection_factor(mesh.region(qp.cell)) * p * p
        };
        let weighted =
            assemble_bilinear_with_degree(space, space, &Kernel::Stiffness(Coefficient::Field(&weight)), CH_DEGREE)?;

        let flux = |qp: &QuadPoint| {
            let u = velocity_at(disc, input.u_c, input.u_m, qp);
            let p = phi_at(qp);
            [u[0] * p, u[1] * p]
        };
        let advection = assemble_linear_with_degree(space, &Source::Flux(&flux), CH_DEGREE)?;
        let source1 = |qp: &QuadPoint| forcing.phase(qp, mesh.region(qp.cell), t_next);
        let f1 = assemble_linear_with_degree(space, &Source::Scalar(&source1), CH_DEGREE)?;
        let source2 = |qp: &QuadPoint| forcing.potential(qp, t_next);
        let load2 = assemble_linear_with_degree(space, &Source::Scalar(&source2), CH_DEGREE)?;

        let load1 = advection.iter().zip(&f1).map(|(g, f)| tau * (g + f)).collect();
        let mass_phi_prev = mass.mul_vec(input.phi);
        Ok(ChSystem {
            space,
            tau,
            gamma: params.gamma,
            epsilon: params.epsilon,
            mass,
            stiffness,
            weighted,
            phi_prev: input.phi.to_vec(),
            mass_phi_prev,
            load1,
            load2,
        })
    }

    pub fn dof_count(&self) -> usize {
        self.space.dof_count()
    }

    fn cubic_load(&self, phi: &[f64]) -> Result<Vec<f64>, ChError> {
        let space = self.space;
        let cube = |qp: &QuadPoint| value(space, phi, qp.cell, qp.bary).powi(3);
        Ok(assemble_linear_with_degree(space, &Source::Scalar(&cube), CH_DEGREE)?)
    }

    /// Residual at `(φ, μ)`, stacked as `[R₁ | R₂]`
    pub fn residual(&self, phi: &[f64], mu: &[f64]) -> Result<Vec<f64>, ChError> {
        let n = self.dof_count();
        let (ge, ge_) = (self.gamma / self.epsilon, self.gamma * self.epsilon);
        let m_phi = self.mass.mul_vec(phi);
        let a_mu = self.weighted.mul_vec(mu);
        let k_phi = self.stiffness.mul_vec(phi);
        let m_mu = self.mass.mul_vec(mu);
        let cubic = self.cubic_load(phi)?;
        let mut r = vec![0.0; 2 * n];
        for i in 0..n {
            r[i] = (m_phi[i] - self.mass_phi_prev[i]) + self.tau * a_mu[i] - self.load1[i];
            r[n + i] = ge * (cubic[i] - self.mass_phi_prev[i]) + ge_ * k_phi[i] - m_mu[i] - self.load2[i];
        }
        Ok(r)
    }

    /// Jacobian `[[M, τA], [(3γ/ε) M_{φ²} + γεK, −M]]`
    pub fn jacobian(&self, phi: &[f64]) -> Result<SparseMatrix, ChError> {
        let n = self.dof_count();
        let space = self.space;
        let sq = |qp: &QuadPoint| value(space, phi, qp.cell, qp.bary).powi(2);
        let m_sq = assemble_bilinear_with_degree(space, space, &Kernel::Mass(Coefficient::Field(&sq)), CH_DEGREE)?;
        let lower_left = m_sq.scaled(3.0 * self.gamma / self.epsilon).add_scaled(&self.stiffness, self.gamma * self.epsilon);
        let mut b = TripletBuilder::new(2 * n, 2 * n);
        b.add_block(&self.mass, 0, 0, 1.0);
        b.add_block(&self.weighted, 0, n, self.tau);
        b.add_block(&lower_left, n, 0, 1.0);
        b.add_block(&self.mass, n, n, -1.0);
        Ok(b.build())
    }

    pub fn phi_prev(&self) -> &[f64] {
        &self.phi_prev
    }
}

/// Solves one Cahn-Hilliard step; Newton starts from `(φᵏ, μ_guess)`.
pub fn ch_solve(
    disc: &Discretization,
    input: &ChInput,
    params: &PhysParams,
    tau: f64,
    t_next: f64,
    forcing: &dyn Forcing,
    options: &NewtonOptions,
) -> Result<(ChState, NewtonReport), ChError> {
    if !input.phi.iter().chain(input.mu_guess).all(|v| v.is_finite()) {
        return Err(ChError::NonFiniteState);
    }
    let system = ChSystem::new(disc, input, params, tau, t_next, forcing)?;
    let n = system.dof_count();
    let mut phi = input.phi.to_vec();
    let mut mu = input.mu_guess.to_vec();
    let mut r = system.residual(&phi, &mu)?;
    let mut rnorm = norm_inf(&r);
    let mut report = NewtonReport::default();

    while rnorm > options.tolerance {
        if report.iterations == options.max_iterations {
            return Err(ChError::NewtonDiverged { iterations: report.iterations, residual: rnorm });
        }
        report.iterations += 1;
        let jac = system.jacobian(&phi)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let (delta, solve) = solve_sparse(&jac, &rhs)?;
        report.max_linear_residual = report.max_linear_residual.max(solve.relative_residual);

        let mut step = 1.0;
        let mut halvings = 0;
        loop {
            let trial_phi: Vec<f64> = phi.iter().zip(&delta[..n]).map(|(p, d)| p + step * d).collect();
            let trial_mu: Vec<f64> = mu.iter().zip(&delta[n..]).map(|(m, d)| m + step * d).collect();
            let trial_r = system.residual(&trial_phi, &trial_mu)?;
            let trial_norm = norm_inf(&trial_r);
            if trial_norm <= rnorm || halvings == options.max_halvings || !trial_norm.is_finite() {
                if !trial_norm.is_finite() {
                    return Err(ChError::NonFiniteState);
                }
                phi = trial_phi;
                mu = trial_mu;
                r = trial_r;
                rnorm = trial_norm;
                break;
            }
            step *= 0.5;
            halvings += 1;
        }
    }
    report.residual = rnorm;
    report.converged = true;
    Ok((ChState { phi, mu }, report))
}
