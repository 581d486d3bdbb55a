//! Discrete operators on `Y_h`: Laplacian, inverse Laplacian `T_h`, the
//! `‖·‖₋₁,ₕ` norm, Ritz projection and the Gagliardo–Nirenberg probe.

use thiserror::Error;

use crate::fem::field::value;
use crate::fem::quadrature;
use crate::fem::sparse::{dot, solve_sparse, SolveError, SparseMatrix, TripletBuilder};
use crate::fem::{
    assemble_bilinear, assemble_linear, AssemblyError, Coefficient, FeSpace, Kernel, QuadPoint,
    Source,
};

/// Bound on `|(z, 1)|` accepted as mean-zero
pub const MEAN_ZERO_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("field is not mean-zero: (z, 1) = {mean:.3e}")]
    NotMeanZero { mean: f64 },
    #[error("field vanishes identically")]
    ZeroField,
    #[error("projection failed: {0}")]
    ProjectionFailed(#[from] SolveError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Mass and stiffness matrices of a scalar space plus `m = M·1`
#[derive(Clone, Debug)]
pub struct ScalarOperators {
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    pub ones: Vec<f64>,
}

impl ScalarOperators {
    pub fn new(space: &FeSpace) -> Result<Self, AssemblyError> {
        let one = Coefficient::Constant(1.0);
        Ok(ScalarOperators {
            mass: assemble_bilinear(space, space, &Kernel::Mass(one))?,
            stiffness: assemble_bilinear(space, space, &Kernel::Stiffness(one))?,
            ones: assemble_linear(space, &Source::Scalar(&|_| 1.0))?,
        })
    }

    /// `(z, 1)`
    pub fn mean(&self, z: &[f64]) -> f64 {
        dot(&self.ones, z)
    }

    /// Stiffness matrix bordered by the mean constraint
    fn bordered(&self) -> SparseMatrix {
        let n = self.ones.len();
        let mut b = TripletBuilder::new(n + 1, n + 1);
        b.add_block(&self.stiffness, 0, 0, 1.0);
        for (i, &w) in self.ones.iter().enumerate() {
            b.push(i, n, w);
            b.push(n, i, w);
        }
        b.build()
    }

    /// Solves `(∇w, ∇ξ) = ⟨load, ξ⟩` for all `ξ`, with `(w, 1) = mean`
    fn neumann_solve(&self, load: &[f64], mean: f64) -> Result<Vec<f64>, AnalysisError> {
        let mut rhs = load.to_vec();
        rhs.push(mean);
        let (mut x, _) = solve_sparse(&self.bordered(), &rhs)?;
        x.pop();
        Ok(x)
    }
}

/// `Δ_h v`: `(Δ_h v, ξ) = −(∇v, ∇ξ)` for every `ξ ∈ Y_h`
pub fn discrete_laplacian(ops: &ScalarOperators, v: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let rhs: Vec<f64> = ops.stiffness.mul_vec(v).iter().map(|x| -x).collect();
    Ok(solve_sparse(&ops.mass, &rhs)?.0)
}

/// `T_h z`: the mean-zero solution of `(∇T_h z, ∇ξ) = (z, ξ)`
pub fn inverse_laplacian(ops: &ScalarOperators, z: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let mean = ops.mean(z);
    if mean.abs() > MEAN_ZERO_TOLERANCE {
        return Err(AnalysisError::NotMeanZero { mean });
    }
    ops.neumann_solve(&ops.mass.mul_vec(z), 0.0)
}

/// `‖z‖₋₁,ₕ = ‖∇T_h z‖`
pub fn neg_one_h_norm(ops: &ScalarOperators, z: &[f64]) -> Result<f64, AnalysisError> {
    let t = inverse_laplacian(ops, z)?;
    Ok(dot(&t, &ops.stiffness.mul_vec(&t)).max(0.0).sqrt())
}

/// Ritz projection: `(∇(Pf − f), ∇v) = 0` for all `v` and `(Pf − f, 1) = 0`
pub fn ritz_project(
    space: &FeSpace,
    f: &(dyn Fn([f64; 2]) -> f64 + Sync),
    grad: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
) -> Result<Vec<f64>, AnalysisError> {
    let ops = ScalarOperators::new(space)?;
    let load = assemble_linear(space, &Source::Flux(&|qp: &QuadPoint| grad(qp.x)))?;
    let mean = crate::fem::integrate(space, &|qp: &QuadPoint| f(qp.x), 6)?;
    ops.neumann_solve(&load, mean)
}

/// Largest `|v|` over DOF values and degree-6 quadrature points
pub fn sup_norm(space: &FeSpace, v: &[f64]) -> f64 {
    let rule = quadrature(6).expect("degree 6 is supported");
    let at_nodes = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    space.cells().iter().fold(at_nodes, |m, &cell| {
        rule.points.iter().fold(m, |m, &b| m.max(value(space, v, cell, b).abs()))
    })
}

/// `‖v‖_{L^p}` by degree-6 quadrature
pub fn lp_norm(space: &FeSpace, v: &[f64], p: i32) -> Result<f64, AssemblyError> {
    let s = crate::fem::integrate(space, &|qp: &QuadPoint| value(space, v, qp.cell, qp.bary).abs().powi(p), 6)?;
    Ok(s.powf(1.0 / f64::from(p)))
}

/// Ratio of `‖v‖_∞` to the two-dimensional discrete Gagliardo–Nirenberg
/// bound `‖Δ_h v‖^{1/4} ‖v‖_{L⁶}^{3/4} + ‖v‖_{L⁶}`
pub fn gn_probe(space: &FeSpace, ops: &ScalarOperators, v: &[f64]) -> Result<f64, AnalysisError> {
    let l6 = lp_norm(space, v, 6)?;
    if l6 == 0.0 {
        return Err(AnalysisError::ZeroField);
    }
    let lap = discrete_laplacian(ops, v)?;
    let lap_norm = dot(&lap, &ops.mass.mul_vec(&lap)).max(0.0).sqrt();
    Ok(sup_norm(space, v) / (lap_norm.powf(0.25) * l6.powf(0.75) + l6))
}
