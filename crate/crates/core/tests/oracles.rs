//! Library results against independent reference computations.

mod common;

use std::sync::Arc;

use chsd::analysis::{
    discrete_laplacian, double_well, energy, gn_probe, inverse_laplacian, mms_forcing, neg_one_h_norm, ScalarOperators,
    TrigMms,
};
use chsd::discretization::{Discretization, FieldSet};
use chsd::fem::field::{gradient, value, vector_value};
use chsd::fem::{
    assemble_linear, quadrature, solve_sparse, Family, FeSpace, QuadPoint, Source, SparseMatrix, Support,
};
use chsd::mesh::{build_karst_mesh, BBox, KarstMesh, Region};
use chsd::params::PhysParams;
use chsd::stokes_darcy::bjsj_friction_matrix;
use common::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 1e-9;

fn mesh(nx: usize, ny: usize) -> Arc<KarstMesh> {
    Arc::new(build_karst_mesh(nx, ny, 0.5, BBox::UNIT).unwrap())
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-amp..amp)).collect()
}

#[test]
fn ch_step_matches_dense_newton_oracle() {
    for (seed, tau) in [(1u64, 0.01), (2, 0.1), (3, 1.0)] {
        let (d, report) = ch_oracle_diff(seed, tau);
        assert!(report.converged);
        assert!(d <= ORACLE_TOL, "differs by {d:e}");
    }
}

#[test]
fn fluid_solve_matches_dense_oracle() {
    let (d, report) = fluid_oracle_diff(11);
    assert!(report.relative_residual <= 1e-10);
    assert!(d <= ORACLE_TOL, "differs by {d:e}");
}

#[test]
fn full_step_matches_dense_oracle() {
    for (seed, tau) in [(5, 0.01), (6, 0.2)] {
        let (d, _) = full_step_oracle_diff(seed, tau);
        assert!(d <= ORACLE_TOL, "differs by {d:e}");
    }
}

#[test]
fn library_quadrature_matches_symbolic_integrals() {
    let rule = quadrature(4).unwrap();
    let int = |f: &dyn Fn(f64, f64) -> f64| (0..rule.len()).map(|q| rule.weights[q] * f(rule.xy(q)[0], rule.xy(q)[1])).sum::<f64>();
    assert!((int(&|x, _| x) - 1.0 / 6.0).abs() < 1e-15);
    assert!((int(&|x, y| x * x * y * y) - 1.0 / 180.0).abs() < 1e-15);
    // the oracle rule agrees on a degree-10 monomial: ∫ x⁶y⁴ = 6!4!/12!
    let tri = triangle_rule(7);
    let v: f64 = tri.iter().map(|(b, w)| w * b[1].powi(6) * b[2].powi(4)).sum();
    assert!((v - 720.0 * 24.0 / 479001600.0).abs() < 1e-17);
}

#[test]
fn p1_load_of_x_matches_symbolic_integral() {
    let m = mesh(1, 2);
    let space = FeSpace::scalar(m.clone(), Support::Whole, Family::P1);
    let load = assemble_linear(&space, &Source::Scalar(&|qp: &QuadPoint| qp.x[0])).unwrap();
    // ∫_T x λ_i = |T| (x_i + Σ x_j)/12 per triangle
    let mut expect = vec![0.0; space.dof_count()];
    for t in 0..m.triangles().len() {
        let tri = m.triangles()[t];
        let xs: Vec<f64> = tri.iter().map(|&v| m.vertices()[v][0]).collect();
        let sum: f64 = xs.iter().sum();
        for (k, &v) in tri.iter().enumerate() {
            expect[space.vertex_node(v).unwrap()] += m.area(t) * (xs[k] + sum) / 12.0;
        }
    }
    assert!(max_diff(&load, &expect) < 1e-15);
}

#[test]
fn sparse_solve_matches_dense_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = DMatrix::<f64>::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
    let a = &b * b.transpose() + DMatrix::<f64>::identity(5, 5) * 5.0;
    let rhs = DVector::<f64>::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
    let mut trip = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            trip.push((i, j, a[(i, j)]));
        }
    }
    let (x, report) = solve_sparse(&SparseMatrix::from_triplets(5, 5, trip), rhs.as_slice()).unwrap();
    let dense = a.lu().solve(&rhs).unwrap();
    assert!(max_diff(&x, dense.as_slice()) <= 1e-10);
    assert!(report.relative_residual <= 1e-10);
}

#[test]
fn bjsj_matrix_is_scaled_1d_p2_mass_matrix() {
    let m = mesh(3, 4);
    let disc = Discretization::new(m.clone(), Family::P1);
    let params = PhysParams { alpha_bjsj: 0.8, permeability: [[2.0, 0.0], [0.0, 7.0]], ..Default::default() };
    let phi = vec![0.3; disc.phase().dof_count()];
    let fr = bjsj_friction_matrix(&disc, &phi, &params).unwrap();
    let vc = disc.velocity(Region::Conduit);
    let scale = 0.8 * params.viscosity.max / 3.0;
    // 1D P2 mass matrix on an edge of length L: L/30 [[4, −1, 2], [−1, 4, 2], [2, 2, 16]]
    let local = [[4.0, -1.0, 2.0], [-1.0, 4.0, 2.0], [2.0, 2.0, 16.0]];
    let mut expect = vec![vec![0.0; vc.dof_count()]; vc.dof_count()];
    for e in m.interface_edges() {
        let [a, b] = m.edges()[e.edge];
        let nodes = [vc.vertex_node(a).unwrap(), vc.vertex_node(b).unwrap(), vc.edge_node(e.edge).unwrap()];
        let len = m.edge_length(e.edge);
        for i in 0..3 {
            for j in 0..3 {
                // x-component only: τ₁ = (1, 0)
                expect[vc.dof(nodes[i], 0)][vc.dof(nodes[j], 0)] += scale * len / 30.0 * local[i][j];
            }
        }
    }
    let dense = fr.to_dense();
    for i in 0..vc.dof_count() {
        for j in 0..vc.dof_count() {
            assert!((dense[i][j] - expect[i][j]).abs() < 1e-14, "entry ({i}, {j})");
        }
    }
}

fn dense(m: &SparseMatrix) -> DMatrix<f64> {
    let d = m.to_dense();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i][j])
}

#[test]
fn discrete_laplacian_matches_mass_solve() {
    let space = FeSpace::scalar(mesh(1, 2), Support::Whole, Family::P1);
    let ops = ScalarOperators::new(&space).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let v = random_vec(&mut rng, space.dof_count(), 1.0);
    let lap = discrete_laplacian(&ops, &v).unwrap();
    let (mm, kk) = (dense(&ops.mass), dense(&ops.stiffness));
    let rhs = -(&kk * DVector::from_column_slice(&v));
    let expect = mm.lu().solve(&rhs).unwrap();
    assert!(max_diff(&lap, expect.as_slice()) <= 1e-11);
}

#[test]
fn neg_one_norm_matches_constrained_solve() {
    let space = FeSpace::scalar(mesh(2, 2), Support::Whole, Family::P1);
    let ops = ScalarOperators::new(&space).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut z = random_vec(&mut rng, space.dof_count(), 1.0);
    let mean = ops.mean(&z);
    z.iter_mut().for_each(|v| *v -= mean);
    let n = z.len();
    let (mm, kk) = (dense(&ops.mass), dense(&ops.stiffness));
    let ones = &mm * DVector::from_element(n, 1.0);
    // [K  M1; 1ᵀM 0] [T; λ] = [M z; 0]
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&kk);
    a.view_mut((0, n), (n, 1)).copy_from(&ones);
    a.view_mut((n, 0), (1, n)).copy_from(&ones.transpose());
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from(&(&mm * DVector::from_column_slice(&z)));
    let sol = a.lu().solve(&rhs).unwrap();
    let t = sol.rows(0, n).into_owned();
    let expect = (t.transpose() * &kk * &t)[(0, 0)].sqrt();
    assert!((neg_one_h_norm(&ops, &z).unwrap() - expect).abs() <= 1e-11);
    let tz = inverse_laplacian(&ops, &z).unwrap();
    assert!(max_diff(&tz, t.as_slice()) <= 1e-11);
}

#[test]
fn energy_matches_refined_quadrature() {
    let disc = Discretization::new(mesh(2, 4), Family::P2);
    let params = PhysParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut s = FieldSet::zeros(&disc);
    s.phi = random_vec(&mut rng, s.phi.len(), 1.2);
    s.mu = random_vec(&mut rng, s.mu.len(), 1.0);
    s.u_c = random_vec(&mut rng, s.u_c.len(), 1.0);
    s.u_m = random_vec(&mut rng, s.u_m.len(), 1.0);
    let report = energy(&disc, &s, &params).unwrap();
    let m = disc.mesh();
    let (mut kc, mut km, mut fe) = (0.0, 0.0, 0.0);
    for t in 0..m.triangles().len() {
        for p in cell_points(m, t, 10) {
            let (cell, bary) = (t, p.bary);
            let phi = value(disc.phase(), &s.phi, cell, bary);
            let g = gradient(disc.phase(), &s.phi, cell, bary);
            fe += p.w * params.gamma * (0.5 * params.epsilon * (g[0] * g[0] + g[1] * g[1]) + double_well(phi) / params.epsilon);
            let region = m.region(t);
            let u = vector_value(disc.velocity(region), s.velocity(region), cell, bary);
            let ke = 0.5 * params.rho0 * (u[0] * u[0] + u[1] * u[1]);
            if region == Region::Conduit {
                kc += p.w * ke;
            } else {
                km += p.w * ke / params.chi;
            }
        }
    }
    let total = kc + km + fe;
    assert!((report.total - total).abs() <= 1e-10 * total.abs());
    assert!((report.kinetic_conduit - kc).abs() <= 1e-10 * kc);
    assert!((report.kinetic_matrix - km).abs() <= 1e-10 * km);
    assert!((report.interfacial - fe).abs() <= 1e-10 * fe);
}

#[test]
fn gn_probe_ratio_is_mesh_uniform() {
    let f = |x: [f64; 2]| (std::f64::consts::PI * x[0]).cos() * (std::f64::consts::PI * x[1]).cos();
    let mut ratios = Vec::new();
    for n in [2, 4, 8, 16] {
        let space = FeSpace::scalar(mesh(n, n), Support::Whole, Family::P1);
        let ops = ScalarOperators::new(&space).unwrap();
        let v: Vec<f64> = space.node_coordinates().iter().map(|&x| f(x)).collect();
        ratios.push(gn_probe(&space, &ops, &v).unwrap());
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(lo > 0.0 && hi / lo < 10.0, "{ratios:?}");
}

/// Phase forcing of the default manufactured solution at (0.25, 0.75),
/// t = 0, frozen from a symbolic differentiation
const PHASE_FORCING_SPOT: f64 = 111.31002922519484;
const MATRIX_PHASE_FORCING_SPOT: f64 = -111.27505991289367;
const STOKES_FORCING_SPOT: [f64; 2] = [3.2822889729477082, -4.9091799860941166];
const DARCY_FORCING_SPOT: [f64; 2] = [3.3364926461528116, 0.44434677850855288];
/// Interface data at (0.3, 0.5), t = 0.1
const TRACTION_SPOT: [f64; 2] = [-2.2396191668981201, -4.0595019657229867];

#[test]
fn default_mms_forcing_matches_symbolic_values() {
    let params = PhysParams::default();
    let exact = TrigMms::new(&params);
    let f = mms_forcing(&exact, &params);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    assert!(close(f.phase_at([0.25, 0.75], Region::Conduit, 0.0), PHASE_FORCING_SPOT));
    assert!(close(f.phase_at([0.25, 0.25], Region::Matrix, 0.0), MATRIX_PHASE_FORCING_SPOT));
    assert!(f.potential_at([0.25, 0.75], 0.0).abs() < 1e-12);
    let s = f.momentum_at([0.25, 0.75], Region::Conduit, 0.0);
    let d = f.momentum_at([0.25, 0.25], Region::Matrix, 0.0);
    let g = f.traction_at([0.3, 0.5], [0.0, -1.0], [1.0, 0.0], 0.1);
    for i in 0..2 {
        assert!(close(s[i], STOKES_FORCING_SPOT[i]), "{s:?}");
        assert!(close(d[i], DARCY_FORCING_SPOT[i]), "{d:?}");
        assert!(close(g[i], TRACTION_SPOT[i]), "{g:?}");
    }
}
