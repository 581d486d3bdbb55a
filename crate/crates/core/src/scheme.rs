//! Time stepping: initial projection, then per step one Cahn-Hilliard solve
//! followed by one Stokes–Darcy solve.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analysis::{energy, mass, ritz_project, AnalysisError, EnergyReport, EquilibriumMms, ExactSolution, TrigMms};
use crate::ch_step::{ch_solve, ChError, ChInput, NewtonOptions, NewtonReport};
use crate::config::{InitialKind, MmsFamily, RunConfig};
use crate::discretization::{checksum, Discretization, FieldSet};
use crate::fem::AssemblyError;
use crate::forcing::{Forcing, Unforced};
use crate::mesh::{build_karst_mesh, KarstMesh, MeshError, Region};
use crate::params::PhysParams;
use crate::stokes_darcy::{project_initial_velocity, FluidError, FluidInput, FluidReport, StokesDarcySolver};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("Cahn-Hilliard step: {0}")]
    Ch(#[from] ChError),
    #[error("Stokes-Darcy step: {0}")]
    Fluid(#[from] FluidError),
    #[error("initial projection failed: {0}")]
    ProjectionFailed(#[from] AnalysisError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("fluid step received a chemical potential other than the one just computed")]
    StaleChemicalPotential,
    #[error("non-finite state")]
    NonFiniteState,
}

/// Outcome of the two sub-solves of one step
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub newton: NewtonReport,
    pub fluid: FluidReport,
}

impl StepReport {
    pub fn max_linear_residual(&self) -> f64 {
        self.newton.max_linear_residual.max(self.fluid.relative_residual)
    }
}

/// Holds the fluid factorization between steps
pub struct Stepper<'a> {
    disc: &'a Discretization,
    params: PhysParams,
    tau: f64,
    newton: NewtonOptions,
    fluid: StokesDarcySolver<'a>,
}

impl<'a> Stepper<'a> {
    pub fn new(disc: &'a Discretization, params: &PhysParams, tau: f64, newton: NewtonOptions) -> Result<Self, SchemeError> {
        Ok(Stepper { disc, params: params.clone(), tau, newton, fluid: StokesDarcySolver::new(disc, params, tau)? })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Advances `state` from `t_next − τ` to `t_next`. The Cahn-Hilliard
    /// solve sees only the old velocity; the fluid solve uses the new `μ`.
    pub fn step(&mut self, state: &FieldSet, t_next: f64, forcing: &dyn Forcing) -> Result<(FieldSet, StepReport), SchemeError> {
        if !state.is_finite() {
            return Err(SchemeError::NonFiniteState);
        }
        let input = ChInput { phi: &state.phi, mu_guess: &state.mu, u_c: &state.u_c, u_m: &state.u_m };
        let (ch, newton) = ch_solve(self.disc, &input, &self.params, self.tau, t_next, forcing, &self.newton)?;
        let fluid_input = FluidInput { phi: &state.phi, mu: &ch.mu, u_c: &state.u_c, u_m: &state.u_m };
        let (f, fluid) = self.fluid.solve(&fluid_input, t_next, forcing)?;
        if fluid.mu_checksum != checksum(&ch.mu) {
            return Err(SchemeError::StaleChemicalPotential);
        }
        let next = FieldSet { phi: ch.phi, mu: ch.mu, u_c: f.u_c, p_c: f.p_c, u_m: f.u_m, p_m: f.p_m };
        Ok((next, StepReport { newton, fluid }))
    }
}

/// One step without factorization reuse
pub fn step(
    disc: &Discretization,
    state: &FieldSet,
    params: &PhysParams,
    tau: f64,
    t_next: f64,
    forcing: &dyn Forcing,
) -> Result<(FieldSet, StepReport), SchemeError> {
    Stepper::new(disc, params, tau, NewtonOptions::default())?.step(state, t_next, forcing)
}

/// Closed-form initial phase field together with its gradient
pub struct PhaseProfile<'a> {
    pub value: &'a (dyn Fn([f64; 2]) -> f64 + Sync),
    pub gradient: &'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync),
}

/// `φ_h⁰` is the Ritz projection of `φ⁰`, the velocities are projected onto
/// the discretely constrained space, `μ` and the pressures start at zero.
pub fn initialize(
    disc: &Discretization,
    params: &PhysParams,
    phi0: &PhaseProfile,
    u0: &(dyn Fn([f64; 2], Region) -> [f64; 2] + Sync),
) -> Result<FieldSet, SchemeError> {
    let mut state = FieldSet::zeros(disc);
    state.phi = ritz_project(disc.phase(), phi0.value, phi0.gradient)?;
    let (u, _) = project_initial_velocity(disc, params, u0)?;
    state.u_c = u.u_c;
    state.u_m = u.u_m;
    Ok(state)
}

/// Spinodal start: nodal values `mean + U(−amplitude, amplitude)` drawn from
/// a seeded ChaCha stream in DOF order, fluid at rest
pub fn spinodal_state(disc: &Discretization, mean: f64, amplitude: f64, seed: u64) -> FieldSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = FieldSet::zeros(disc);
    for p in state.phi.iter_mut() {
        *p = mean + if amplitude > 0.0 { rng.random_range(-amplitude..=amplitude) } else { 0.0 };
    }
    state
}

/// Initial state for an exact solution at `t = 0`
pub fn exact_initial_state(disc: &Discretization, params: &PhysParams, exact: &dyn ExactSolution) -> Result<FieldSet, SchemeError> {
    let value = |x: [f64; 2]| exact.phi(x, 0.0).v;
    let gradient = |x: [f64; 2]| exact.phi(x, 0.0).g;
    let u0 = |x: [f64; 2], r: Region| exact.velocity(x, r, 0.0).v;
    initialize(disc, params, &PhaseProfile { value: &value, gradient: &gradient }, &u0)
}

/// Per-step record
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub step: usize,
    pub time: f64,
    pub energy: EnergyReport,
    /// `(φ, 1)`
    pub mass: f64,
    pub newton_iterations: usize,
    /// Final Newton residual
    pub residual: f64,
    /// Largest relative residual of the step's linear solves
    pub linear_residual: f64,
    pub pc_multiplier: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub tau: f64,
    /// Requested number of steps
    pub steps: usize,
    pub save_every: usize,
    /// Diagnostics of the saved steps, step 0 first
    pub diagnostics: Vec<Diagnostics>,
    /// Full states kept at the requested snapshot steps
    pub snapshots: Vec<(usize, FieldSet)>,
    pub final_step: usize,
    pub final_state: FieldSet,
    /// Set when a sub-solver failed; the trajectory stops at `final_step`
    pub failure: Option<String>,
    /// Largest Newton iteration count over all steps
    pub max_newton_iterations: usize,
    /// Largest linear relative residual over all steps
    pub max_linear_residual: f64,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Options of a time loop
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopSpec {
    pub tau: f64,
    pub steps: usize,
    pub save_every: usize,
    /// Keep the full state every this many steps (0 keeps none)
    pub snapshot_every: usize,
    pub newton: NewtonOptions,
}

fn diagnostics(
    disc: &Discretization,
    state: &FieldSet,
    params: &PhysParams,
    step: usize,
    tau: f64,
    report: Option<&StepReport>,
) -> Result<Diagnostics, AssemblyError> {
    Ok(Diagnostics {
        step,
        time: step as f64 * tau,
        energy: energy(disc, state, params)?,
        mass: mass(disc, &state.phi)?,
        newton_iterations: report.map_or(0, |r| r.newton.iterations),
        residual: report.map_or(0.0, |r| r.newton.residual),
        linear_residual: report.map_or(0.0, StepReport::max_linear_residual),
        pc_multiplier: report.is_some_and(|r| r.fluid.pc_multiplier),
    })
}

/// Runs the time loop from `initial`. Solver failures end the loop early
/// and are recorded in the trajectory. `observer` sees every state.
pub fn simulate(
    disc: &Discretization,
    params: &PhysParams,
    initial: FieldSet,
    spec: &LoopSpec,
    forcing: &dyn Forcing,
    observer: &mut dyn FnMut(usize, &FieldSet),
) -> Result<Trajectory, SchemeError> {
    let mut stepper = Stepper::new(disc, params, spec.tau, spec.newton)?;
    let mut traj = Trajectory {
        tau: spec.tau,
        steps: spec.steps,
        save_every: spec.save_every.max(1),
        diagnostics: vec![diagnostics(disc, &initial, params, 0, spec.tau, None)?],
        snapshots: Vec::new(),
        final_step: 0,
        final_state: initial,
        failure: None,
        max_newton_iterations: 0,
        max_linear_residual: 0.0,
    };
    if spec.snapshot_every > 0 {
        traj.snapshots.push((0, traj.final_state.clone()));
    }
    observer(0, &traj.final_state);
    for k in 1..=spec.steps {
        match stepper.step(&traj.final_state, k as f64 * spec.tau, forcing) {
            Ok((next, report)) => {
                traj.max_newton_iterations = traj.max_newton_iterations.max(report.newton.iterations);
                traj.max_linear_residual = traj.max_linear_residual.max(report.max_linear_residual());
                if k % traj.save_every == 0 || k == spec.steps {
                    traj.diagnostics.push(diagnostics(disc, &next, params, k, spec.tau, Some(&report))?);
                }
                if spec.snapshot_every > 0 && (k % spec.snapshot_every == 0 || k == spec.steps) {
                    traj.snapshots.push((k, next.clone()));
                }
                observer(k, &next);
                traj.final_state = next;
                traj.final_step = k;
            }
            Err(e) => {
                traj.failure = Some(format!("step {k}: {e}"));
                break;
            }
        }
    }
    Ok(traj)
}

pub fn build_mesh(config: &RunConfig) -> Result<KarstMesh, MeshError> {
    let m = &config.mesh;
    let mut mesh = build_karst_mesh(m.nx, m.ny, m.split_y, m.bbox)?;
    for _ in 0..m.refinements {
        mesh = mesh.refine_uniform();
    }
    Ok(mesh)
}

/// Exact solution selected by a configuration, if any
pub fn exact_solution(config: &RunConfig) -> Option<Box<dyn ExactSolution>> {
    match config.mms.family {
        MmsFamily::None => None,
        MmsFamily::Equilibrium => Some(Box::new(EquilibriumMms)),
        MmsFamily::Trig => {
            let mut m = TrigMms::new(&config.params);
            m.a_phi = config.mms.a_phi;
            m.a_u = config.mms.a_u;
            m.a_p = config.mms.a_p;
            m.omega = config.mms.omega;
            Some(Box::new(m))
        }
    }
}

/// Initial state requested by a configuration (without manufactured
/// solution)
pub fn configured_initial_state(disc: &Discretization, config: &RunConfig) -> FieldSet {
    match config.initial {
        InitialKind::Spinodal => spinodal_state(disc, config.initial_value, config.noise_amplitude, config.seed),
        InitialKind::Equilibrium => spinodal_state(disc, 1.0, 0.0, config.seed),
        InitialKind::Constant => spinodal_state(disc, config.initial_value, 0.0, config.seed),
    }
}

/// Discretization, initial state and time loop of a configuration
pub fn run_with_observer(
    config: &RunConfig,
    observer: &mut dyn FnMut(&Discretization, usize, &FieldSet),
) -> Result<(Discretization, Trajectory), SchemeError> {
    let mesh = Arc::new(build_mesh(config)?);
    let disc = Discretization::new(mesh, config.phase_family);
    let spec = LoopSpec {
        tau: config.time.tau,
        steps: config.time.steps,
        save_every: config.time.save_every,
        snapshot_every: config.vtk_every,
        newton: config.newton,
    };
    let exact = exact_solution(config);
    let traj = match &exact {
        Some(e) => {
            let forcing = crate::analysis::mms_forcing(e.as_ref(), &config.params);
            let initial = exact_initial_state(&disc, &config.params, e.as_ref())?;
            simulate(&disc, &config.params, initial, &spec, &forcing, &mut |k, s| observer(&disc, k, s))?
        }
        None => {
            let initial = configured_initial_state(&disc, config);
            simulate(&disc, &config.params, initial, &spec, &Unforced, &mut |k, s| observer(&disc, k, s))?
        }
    };
    Ok((disc, traj))
}

pub fn run(config: &RunConfig) -> Result<(Discretization, Trajectory), SchemeError> {
    run_with_observer(config, &mut |_, _, _| {})
}
