//! Monolithic Stokes–Darcy solve on the two subdomains.
//!
//! Unknowns are stacked as `[u_c | P_c | u_m | P_m | λ]`, where `λ` enforces
//! the zero mean of `P_m`. The pressure and interface couplings appear with
//! opposite signs in their two off-diagonal blocks, so the pressure work
//! cancels when the system is tested with the solution itself.

use thiserror::Error;

use crate::discretization::{checksum, Discretization};
use crate::fem::field::{gradient, value};
use crate::fem::sparse::{LuFactor, SolveError, SparseMatrix, TripletBuilder};
use crate::fem::{
    assemble_bilinear, assemble_linear, assemble_linear_with_degree, AssemblyError, Coefficient, Kernel, QuadPoint,
    Source,
};
use crate::forcing::Forcing;
use crate::mesh::{EdgeTag, Region};
use crate::params::PhysParams;

/// Quadrature for the capillary load `(φ ∇μ, v)`, matching the degree used
/// for the same product inside the Cahn-Hilliard step.
const CAPILLARY_DEGREE: usize = 6;

#[derive(Debug, Error)]
pub enum FluidError {
    #[error("Stokes-Darcy system is singular (relative residual {residual:.3e})")]
    SingularSystem { residual: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

impl From<SolveError> for FluidError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::SingularMatrix { residual } => FluidError::SingularSystem { residual },
            SolveError::DimensionMismatch { rows, cols, rhs } => {
                FluidError::DimensionMismatch(format!("{rows}x{cols} matrix, rhs of length {rhs}"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub u_c: Vec<f64>,
    pub p_c: Vec<f64>,
    pub u_m: Vec<f64>,
    pub p_m: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidReport {
    pub relative_residual: f64,
    /// A multiplier fixing the mean of `P_c` had to be added
    pub pc_multiplier: bool,
    /// Checksum of the `μ` coefficients that drove the capillary force
    pub mu_checksum: u64,
}

/// Previous-step data entering the fluid solve
#[derive(Clone, Copy, Debug)]
pub struct FluidInput<'a> {
    pub phi: &'a [f64],
    pub mu: &'a [f64],
    pub u_c: &'a [f64],
    pub u_m: &'a [f64],
}

/// Offsets of the unknown blocks in the monolithic vector
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub u_c: usize,
    pub p_c: usize,
    pub u_m: usize,
    pub p_m: usize,
    pub lambda: usize,
    /// Multiplier for the `P_c` mean, present only in the fallback system
    pub lambda_c: Option<usize>,
    pub len: usize,
}

impl BlockLayout {
    fn new(disc: &Discretization, pc_multiplier: bool) -> Self {
        let nuc = disc.velocity(Region::Conduit).dof_count();
        let npc = disc.pressure(Region::Conduit).dof_count();
        let num = disc.velocity(Region::Matrix).dof_count();
        let npm = disc.pressure(Region::Matrix).dof_count();
        let p_c = nuc;
        let u_m = p_c + npc;
        let p_m = u_m + num;
        let lambda = p_m + npm;
        let lambda_c = pc_multiplier.then_some(lambda + 1);
        BlockLayout { u_c: 0, p_c, u_m, p_m, lambda, lambda_c, len: lambda + 1 + usize::from(pc_multiplier) }
    }
}

/// BJSJ tangential friction `∫_{Γ_cm} α ν(φᵏ)/√tr Π (u·τ₁)(v·τ₁)` on the
/// conduit velocity space
pub fn bjsj_friction_matrix(disc: &Discretization, phi: &[f64], params: &PhysParams) -> Result<SparseMatrix, AssemblyError> {
    let phase = disc.phase();
    let weight = |qp: &QuadPoint| params.friction(value(phase, phi, qp.cell, qp.bary));
    let vc = disc.velocity(Region::Conduit);
    assemble_bilinear(vc, vc, &Kernel::InterfaceTangential(Coefficient::Field(&weight)))
}

/// Flags the velocity DOFs fixed by the wall conditions: both components of
/// `u_c` on `Γ_c`, the normal component of `u_m` on `Γ_m`.
fn wall_constraints(disc: &Discretization, layout: &BlockLayout) -> Vec<bool> {
    let mesh = disc.mesh();
    let mut fixed = vec![false; layout.len];
    for tagged in mesh.boundary_edges() {
        let [a, b] = mesh.edges()[tagged.edge];
        let vertical = (mesh.vertices()[a][0] - mesh.vertices()[b][0]).abs() < 1e-14;
        match tagged.tag {
            EdgeTag::GammaC => {
                let space = disc.velocity(Region::Conduit);
                for node in space.edge_nodes(tagged.edge) {
                    fixed[layout.u_c + space.dof(node, 0)] = true;
                    fixed[layout.u_c + space.dof(node, 1)] = true;
                }
            }
            EdgeTag::GammaM => {
                let space = disc.velocity(Region::Matrix);
                let comp = if vertical { 0 } else { 1 };
                for node in space.edge_nodes(tagged.edge) {
                    fixed[layout.u_m + space.dof(node, comp)] = true;
                }
            }
            EdgeTag::GammaCM => {}
        }
    }
    fixed
}

/// Blocks that do not depend on the phase field
struct FixedBlocks {
    mass_c: SparseMatrix,
    mass_m: SparseMatrix,
    div_c: SparseMatrix,
    grad_m: SparseMatrix,
    interface: SparseMatrix,
    mean_m: Vec<f64>,
    mean_c: Vec<f64>,
}

impl FixedBlocks {
    fn new(disc: &Discretization) -> Result<Self, AssemblyError> {
        let (vc, pc) = (disc.velocity(Region::Conduit), disc.pressure(Region::Conduit));
        let (vm, pm) = (disc.velocity(Region::Matrix), disc.pressure(Region::Matrix));
        let one = Coefficient::Constant(1.0);
        Ok(FixedBlocks {
            mass_c: assemble_bilinear(vc, vc, &Kernel::Mass(one))?,
            mass_m: assemble_bilinear(vm, vm, &Kernel::Mass(one))?,
            div_c: assemble_bilinear(pc, vc, &Kernel::Divergence)?,
            grad_m: assemble_bilinear(pm, vm, &Kernel::Gradient)?,
            interface: assemble_bilinear(pm, vc, &Kernel::InterfaceNormalPressure)?,
            mean_m: assemble_linear(pm, &Source::Scalar(&|_| 1.0))?,
            mean_c: assemble_linear(pc, &Source::Scalar(&|_| 1.0))?,
        })
    }
}

/// Velocity operators of one solve: `A_c` acts on `u_c`, `A_m` on `u_m`
struct VelocityBlocks {
    a_c: SparseMatrix,
    a_m: SparseMatrix,
}

fn assemble_system(
    fixed: &FixedBlocks,
    velocity: &VelocityBlocks,
    layout: &BlockLayout,
    constraints: &[bool],
) -> SparseMatrix {
    let l = layout;
    let mut b = TripletBuilder::new(l.len, l.len);
    b.add_block(&velocity.a_c, l.u_c, l.u_c, 1.0);
    // b_c(v, q) = −(∇·v, q) and its negative transpose
    b.add_block(&fixed.div_c.transpose(), l.u_c, l.p_c, -1.0);
    b.add_block(&fixed.div_c, l.p_c, l.u_c, 1.0);
    // ∫ P_m (v_c · n) and −∫ (u_c · n) q_m
    b.add_block(&fixed.interface.transpose(), l.u_c, l.p_m, 1.0);
    b.add_block(&fixed.interface, l.p_m, l.u_c, -1.0);
    b.add_block(&velocity.a_m, l.u_m, l.u_m, 1.0);
    // b_m(v, q) = (v, ∇q) and its negative transpose
    b.add_block(&fixed.grad_m.transpose(), l.u_m, l.p_m, 1.0);
    b.add_block(&fixed.grad_m, l.p_m, l.u_m, -1.0);
    for (i, &w) in fixed.mean_m.iter().enumerate() {
        b.push(l.p_m + i, l.lambda, w);
        b.push(l.lambda, l.p_m + i, w);
    }
    if let Some(lc) = l.lambda_c {
        for (i, &w) in fixed.mean_c.iter().enumerate() {
            b.push(l.p_c + i, lc, w);
            b.push(lc, l.p_c + i, w);
        }
    }
    b.constrain(constraints);
    b.build()
}

/// Reusable solver for the fluid sub-step. When the viscosity law is
/// constant the system matrix does not change between steps and its LU
/// factorization is kept.
pub struct StokesDarcySolver<'a> {
    disc: &'a Discretization,
    params: PhysParams,
    tau: f64,
    fixed: FixedBlocks,
    cached: Option<(LuFactor, BlockLayout)>,
}

impl<'a> StokesDarcySolver<'a> {
    pub fn new(disc: &'a Discretization, params: &PhysParams, tau: f64) -> Result<Self, FluidError> {
        Ok(StokesDarcySolver { disc, params: params.clone(), tau, fixed: FixedBlocks::new(disc)?, cached: None })
    }

    fn velocity_blocks(&self, phi: &[f64]) -> Result<VelocityBlocks, AssemblyError> {
        let disc = self.disc;
        let p = &self.params;
        let (vc, vm, phase) = (disc.velocity(Region::Conduit), disc.velocity(Region::Matrix), disc.phase());
        let nu = |qp: &QuadPoint| p.viscosity.eval(value(phase, phi, qp.cell, qp.bary));
        let strain = assemble_bilinear(vc, vc, &Kernel::SymmetricGradient(Coefficient::Field(&nu)))?;
        let friction = bjsj_friction_matrix(disc, phi, p)?;
        let a_c = self.fixed.mass_c.scaled(p.rho0 / self.tau).add_scaled(&strain, 1.0).add_scaled(&friction, 1.0);
        let k_inv = p.permeability_inverse();
        let drag = |qp: &QuadPoint| {
            let n = nu(qp);
            [[n * k_inv[0][0], n * k_inv[0][1]], [n * k_inv[1][0], n * k_inv[1][1]]]
        };
        let darcy = assemble_bilinear(vm, vm, &Kernel::TensorMass(&drag))?;
        let a_m = self.fixed.mass_m.scaled(p.rho0 / (p.chi * self.tau)).add_scaled(&darcy, 1.0);
        Ok(VelocityBlocks { a_c, a_m })
    }

    /// Factorizes the system, adding the `P_c` multiplier if the plain
    /// system turns out singular.
    fn factor(&self, velocity: &VelocityBlocks) -> Result<(LuFactor, BlockLayout), FluidError> {
        factor_with_fallback(self.disc, &self.fixed, velocity)
    }

    /// Monolithic matrix for the given phase field (without caching)
    pub fn system_matrix(&self, phi: &[f64]) -> Result<(SparseMatrix, BlockLayout), FluidError> {
        let layout = BlockLayout::new(self.disc, false);
        let constraints = wall_constraints(self.disc, &layout);
        Ok((assemble_system(&self.fixed, &self.velocity_blocks(phi)?, &layout, &constraints), layout))
    }

    /// Right-hand side of the momentum equations
    fn load(&self, input: &FluidInput, t_next: f64, forcing: &dyn Forcing, layout: &BlockLayout) -> Result<Vec<f64>, FluidError> {
        let disc = self.disc;
        let p = &self.params;
        let phase = disc.phase();
        let mut rhs = vec![0.0; layout.len];
        for (region, offset, coeff, u_prev) in [
            (Region::Conduit, layout.u_c, p.rho0 / self.tau, input.u_c),
            (Region::Matrix, layout.u_m, p.rho0 / (p.chi * self.tau), input.u_m),
        ] {
            let space = disc.velocity(region);
            let mass = if region == Region::Conduit { &self.fixed.mass_c } else { &self.fixed.mass_m };
            let inertia = mass.mul_vec(u_prev);
            let body = |qp: &QuadPoint| {
                let phi = value(phase, input.phi, qp.cell, qp.bary);
                let g = gradient(phase, input.mu, qp.cell, qp.bary);
                let f = forcing.momentum(qp, region, t_next);
                [f[0] - phi * g[0], f[1] - phi * g[1]]
            };
            let load = assemble_linear_with_degree(space, &Source::Vector(&body), CAPILLARY_DEGREE)?;
            for i in 0..space.dof_count() {
                rhs[offset + i] = coeff * inertia[i] + load[i];
            }
        }
        let traction = |qp: &QuadPoint, n: [f64; 2], t: [f64; 2]| forcing.interface_traction(qp, n, t, t_next);
        let g = assemble_linear(disc.velocity(Region::Conduit), &Source::Interface(&traction))?;
        for (i, v) in g.into_iter().enumerate() {
            rhs[layout.u_c + i] += v;
        }
        Ok(rhs)
    }

    pub fn solve(
        &mut self,
        input: &FluidInput,
        t_next: f64,
        forcing: &dyn Forcing,
    ) -> Result<(FluidState, FluidReport), FluidError> {
        let disc = self.disc;
        check_len("phi", input.phi.len(), disc.phase().dof_count())?;
        check_len("mu", input.mu.len(), disc.phase().dof_count())?;
        check_len("u_c", input.u_c.len(), disc.velocity(Region::Conduit).dof_count())?;
        check_len("u_m", input.u_m.len(), disc.velocity(Region::Matrix).dof_count())?;

        let reuse = self.params.viscosity.is_constant();
        let fresh;
        let (lu, layout) = match (&self.cached, reuse) {
            (Some(cached), true) => (&cached.0, cached.1),
            _ => {
                let velocity = self.velocity_blocks(input.phi)?;
                let factored = self.factor(&velocity)?;
                if reuse {
                    self.cached = Some(factored);
                    let c = self.cached.as_ref().expect("just stored");
                    (&c.0, c.1)
                } else {
                    fresh = factored;
                    (&fresh.0, fresh.1)
                }
            }
        };
        let constraints = wall_constraints(disc, &layout);
        let mut rhs = self.load(input, t_next, forcing, &layout)?;
        for (r, &c) in rhs.iter_mut().zip(&constraints) {
            if c {
                *r = 0.0;
            }
        }
        let (x, report) = lu.solve(&rhs)?;
        let state = split(disc, &layout, &x);
        let report = FluidReport {
            relative_residual: report.relative_residual,
            pc_multiplier: layout.lambda_c.is_some(),
            mu_checksum: checksum(input.mu),
        };
        Ok((state, report))
    }
}

fn factor_with_fallback(
    disc: &Discretization,
    fixed: &FixedBlocks,
    velocity: &VelocityBlocks,
) -> Result<(LuFactor, BlockLayout), FluidError> {
    let mut last = None;
    for pc_multiplier in [false, true] {
        let layout = BlockLayout::new(disc, pc_multiplier);
        let constraints = wall_constraints(disc, &layout);
        let matrix = assemble_system(fixed, velocity, &layout, &constraints);
        match LuFactor::new(&matrix).and_then(|lu| probe(&lu).map(|_| lu)) {
            Ok(lu) => return Ok((lu, layout)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("two attempts were made").into())
}

/// A factorization of a singular matrix can still return finite values, so
/// the factor is accepted only if it solves a generic right-hand side.
fn probe(lu: &LuFactor) -> Result<(), SolveError> {
    let n = lu.matrix().nrows();
    let b: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    lu.solve(&b).map(|_| ())
}

fn check_len(name: &str, got: usize, want: usize) -> Result<(), FluidError> {
    if got == want {
        Ok(())
    } else {
        Err(FluidError::DimensionMismatch(format!("{name} has {got} coefficients, expected {want}")))
    }
}

fn split(disc: &Discretization, layout: &BlockLayout, x: &[f64]) -> FluidState {
    let take = |start: usize, len: usize| x[start..start + len].to_vec();
    FluidState {
        u_c: take(layout.u_c, disc.velocity(Region::Conduit).dof_count()),
        p_c: take(layout.p_c, disc.pressure(Region::Conduit).dof_count()),
        u_m: take(layout.u_m, disc.velocity(Region::Matrix).dof_count()),
        p_m: take(layout.p_m, disc.pressure(Region::Matrix).dof_count()),
    }
}

/// One fluid sub-step without factorization reuse
pub fn fluid_solve(
    disc: &Discretization,
    input: &FluidInput,
    params: &PhysParams,
    tau: f64,
    t_next: f64,
    forcing: &dyn Forcing,
) -> Result<(FluidState, FluidReport), FluidError> {
    StokesDarcySolver::new(disc, params, tau)?.solve(input, t_next, forcing)
}

/// Initial velocity: the weighted L² projection of `u⁰` onto velocities
/// satisfying the discrete divergence, interface and wall constraints. The
/// velocity blocks are `ρ₀ M_c` and `(ρ₀/χ) M_m`; the load pairs `u⁰` with
/// the same weights. The returned pressures are the projection multipliers.
pub fn project_initial_velocity(
    disc: &Discretization,
    params: &PhysParams,
    u0: &(dyn Fn([f64; 2], Region) -> [f64; 2] + Sync),
) -> Result<(FluidState, FluidReport), FluidError> {
    let fixed = FixedBlocks::new(disc)?;
    let (wc, wm) = (params.rho0, params.rho0 / params.chi);
    let velocity = VelocityBlocks { a_c: fixed.mass_c.scaled(wc), a_m: fixed.mass_m.scaled(wm) };
    let (lu, layout) = factor_with_fallback(disc, &fixed, &velocity)?;
    let constraints = wall_constraints(disc, &layout);
    let mut rhs = vec![0.0; layout.len];
    for (region, offset, w) in [(Region::Conduit, layout.u_c, wc), (Region::Matrix, layout.u_m, wm)] {
        let f = |qp: &QuadPoint| {
            let v = u0(qp.x, region);
            [w * v[0], w * v[1]]
        };
        let load = assemble_linear(disc.velocity(region), &Source::Vector(&f))?;
        rhs[offset..offset + load.len()].copy_from_slice(&load);
    }
    for (r, &c) in rhs.iter_mut().zip(&constraints) {
        if c {
            *r = 0.0;
        }
    }
    let (x, report) = lu.solve(&rhs)?;
    let report =
        FluidReport { relative_residual: report.relative_residual, pc_multiplier: layout.lambda_c.is_some(), mu_checksum: 0 };
    Ok((split(disc, &layout, &x), report))
}
