//! Error measurement against manufactured solutions and rate fitting.

use rayon::prelude::*;

use super::mms::ExactSolution;
use crate::config::RunConfig;
use crate::discretization::{Discretization, FieldSet};
use crate::fem::field::{gradient, vector_jacobian, vector_value};
use crate::fem::{integrate, AssemblyError, QuadPoint};
use crate::mesh::Region;

/// Errors at or below this are treated as exact and exclude a slope fit
pub const ZERO_ERROR: f64 = 1e-10;

/// Quadrature exactness for error norms
const ERROR_DEGREE: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    /// Halve τ at a fixed mesh
    Temporal,
    /// Halve h and τ together
    Spatial,
}

impl Ladder {
    pub fn name(self) -> &'static str {
        match self {
            Ladder::Temporal => "temporal",
            Ladder::Spatial => "spatial",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "temporal" => Some(Ladder::Temporal),
            "spatial" => Some(Ladder::Spatial),
            _ => None,
        }
    }
}

/// Column names of the measured norms, in [`ErrorLevel::norms`] order
pub const NORM_COLUMNS: [&str; 4] = ["grad_phi_max", "u_max", "grad_mu_l2", "strain_l2"];

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorLevel {
    pub level: usize,
    /// Cell width of the structured grid
    pub h: f64,
    pub tau: f64,
    pub steps: usize,
    /// `None` when the level completed; the failure message otherwise
    pub failure: Option<String>,
    /// `max_k ‖∇e^{φ,k}‖`, `max_k ‖e^{u,k}‖`, `(τ Σ ‖∇e^{μ,k}‖²)^{1/2}`,
    /// `(τ Σ ‖D(e_c^{u,k})‖²)^{1/2}`
    pub norms: [f64; 4],
    /// Largest Newton iteration count of the run
    pub newton_max: usize,
    /// Largest relative residual of the run's linear solves
    pub linear_residual_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTable {
    pub ladder: Ladder,
    pub levels: Vec<ErrorLevel>,
    /// Least-squares slope per norm column; `None` when undefined
    pub slopes: [Option<f64>; 4],
}

impl ErrorTable {
    pub fn new(ladder: Ladder, levels: Vec<ErrorLevel>) -> Self {
        let mut slopes = [None; 4];
        for (c, slope) in slopes.iter_mut().enumerate() {
            let ok: Vec<&ErrorLevel> = levels.iter().filter(|l| l.failure.is_none()).collect();
            let xs: Vec<f64> = ok.iter().map(|l| if ladder == Ladder::Temporal { l.tau } else { l.h }).collect();
            let ys: Vec<f64> = ok.iter().map(|l| l.norms[c]).collect();
            *slope = fit_slope(&xs, &ys);
        }
        ErrorTable { ladder, levels, slopes }
    }
}

/// Least-squares slope of `log y` against `log x`. Undefined for fewer than
/// three points or when any error is at round-off level.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 3 || ys.iter().any(|&y| !(y > ZERO_ERROR) || !y.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Running error norms along a trajectory
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorAccumulator {
    max_grad_phi: f64,
    max_u: f64,
    sum_grad_mu: f64,
    sum_strain: f64,
    tau: f64,
}

impl ErrorAccumulator {
    pub fn new(tau: f64) -> Self {
        ErrorAccumulator { tau, ..Default::default() }
    }

    /// Adds the errors of the state at step `k` (time `kτ`). The `μ` and
    /// strain sums start at `k = 1`.
    pub fn observe(
        &mut self,
        disc: &Discretization,
        exact: &dyn ExactSolution,
        k: usize,
        state: &FieldSet,
    ) -> Result<(), AssemblyError> {
        let t = k as f64 * self.tau;
        let phase = disc.phase();
        let sq = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
        let grad_err = |coeffs: &[f64], exact_grad: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync)| {
            integrate(
                phase,
                &|qp: &QuadPoint| {
                    let g = gradient(phase, coeffs, qp.cell, qp.bary);
                    let e = exact_grad(qp.x);
                    sq([g[0] - e[0], g[1] - e[1]])
                },
                ERROR_DEGREE,
            )
        };
        let e_phi = grad_err(&state.phi, &|x| exact.phi(x, t).g)?.sqrt();
        let mut e_u = 0.0;
        for region in [Region::Conduit, Region::Matrix] {
            let space = disc.velocity(region);
            let u = state.velocity(region);
            e_u += integrate(
                space,
                &|qp: &QuadPoint| {
                    let uh = vector_value(space, u, qp.cell, qp.bary);
                    let ue = exact.velocity(qp.x, region, t).v;
                    sq([uh[0] - ue[0], uh[1] - ue[1]])
                },
                ERROR_DEGREE,
            )?;
        }
        self.max_grad_phi = self.max_grad_phi.max(e_phi);
        self.max_u = self.max_u.max(e_u.sqrt());
        if k > 0 {
            self.sum_grad_mu += self.tau * grad_err(&state.mu, &|x| exact.mu(x, t).g)?;
            let vc = disc.velocity(Region::Conduit);
            self.sum_strain += self.tau
                * integrate(
                    vc,
                    &|qp: &QuadPoint| {
                        let j = vector_jacobian(vc, &state.u_c, qp.cell, qp.bary);
                        let d = exact.velocity(qp.x, Region::Conduit, t).strain();
                        let off = 0.5 * (j[0][1] + j[1][0]) - d[0][1];
                        (j[0][0] - d[0][0]).powi(2) + (j[1][1] - d[1][1]).powi(2) + 2.0 * off * off
                    },
                    ERROR_DEGREE,
                )?;
        }
        Ok(())
    }

    pub fn norms(&self) -> [f64; 4] {
        [self.max_grad_phi, self.max_u, self.sum_grad_mu.sqrt(), self.sum_strain.sqrt()]
    }
}

/// Configuration of level `l` of a ladder built on `base`
pub fn level_config(base: &RunConfig, ladder: Ladder, level: usize) -> RunConfig {
    let mut c = base.clone();
    let factor = 1usize << level;
    c.time.tau = base.time.tau / factor as f64;
    c.time.steps = base.time.steps * factor;
    c.time.save_every = base.time.save_every * factor;
    c.vtk_every = 0;
    if ladder == Ladder::Spatial {
        c.mesh.refinements = base.mesh.refinements + level;
    }
    c
}

/// Cell width of a configuration's grid
pub fn cell_width(config: &RunConfig) -> f64 {
    config.mesh.bbox.width() / (config.mesh.nx << config.mesh.refinements) as f64
}

/// Runs one level and measures its errors
pub fn run_level(config: &RunConfig, level: usize) -> ErrorLevel {
    let mut out = ErrorLevel {
        level,
        h: cell_width(config),
        tau: config.time.tau,
        steps: config.time.steps,
        failure: None,
        norms: [f64::NAN; 4],
        newton_max: 0,
        linear_residual_max: 0.0,
    };
    let Some(exact) = crate::scheme::exact_solution(config) else {
        out.failure = Some("no manufactured solution configured".into());
        return out;
    };
    let mut acc = ErrorAccumulator::new(config.time.tau);
    let mut measure_error = None;
    let result = crate::scheme::run_with_observer(config, &mut |disc, k, state| {
        if measure_error.is_none() {
            if let Err(e) = acc.observe(disc, exact.as_ref(), k, state) {
                measure_error = Some(e);
            }
        }
    });
    match result {
        Ok((_, traj)) => {
            out.failure = traj.failure.or(measure_error.map(|e| e.to_string()));
            out.norms = acc.norms();
            out.newton_max = traj.max_newton_iterations;
            out.linear_residual_max = traj.max_linear_residual;
        }
        Err(e) => out.failure = Some(e.to_string()),
    }
    out
}

/// Runs `levels` refinement levels (concurrently) and fits the rates
pub fn convergence_study(base: &RunConfig, ladder: Ladder, levels: usize) -> ErrorTable {
    let results: Vec<ErrorLevel> =
        (0..levels).into_par_iter().map(|l| run_level(&level_config(base, ladder, l), l)).collect();
    ErrorTable::new(ladder, results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MmsFamily;

    #[test]
    fn slope_of_exact_power_law() {
        let xs = [0.1, 0.05, 0.025, 0.0125];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((fit_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&xs[..2], &ys[..2]), None);
        assert_eq!(fit_slope(&xs, &[1.0, 1e-11, 1.0, 1.0]), None);
    }

    #[test]
    fn equilibrium_ladder_has_zero_errors() {
        let mut c = RunConfig::default();
        c.mesh.nx = 2;
        c.mesh.ny = 2;
        c.time.tau = 0.1;
        c.time.steps = 2;
        c.mms.family = MmsFamily::Equilibrium;
        let table = convergence_study(&c, Ladder::Temporal, 3);
        for l in &table.levels {
            assert!(l.failure.is_none());
            assert!(l.norms.iter().all(|&e| e <= ZERO_ERROR), "{:?}", l.norms);
        }
        assert_eq!(table.slopes, [None; 4]);
    }

    #[test]
    fn ladder_configs() {
        let base = RunConfig::default();
        let c = level_config(&base, Ladder::Spatial, 2);
        assert_eq!(c.mesh.refinements, 2);
        assert_eq!(c.time.steps, 4 * base.time.steps);
        assert!((c.time.final_time() - base.time.final_time()).abs() < 1e-12);
        assert!((cell_width(&c) - 1.0 / 64.0).abs() < 1e-15);
    }
}
