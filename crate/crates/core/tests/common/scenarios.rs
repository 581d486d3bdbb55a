//! Library runs paired with their dense oracle counterparts on the small
//! meshes (4 triangles in total, and 4 per region).

use std::sync::Arc;

use chsd::ch_step::{ch_solve, ChInput, NewtonOptions, NewtonReport};
use chsd::discretization::{Discretization, FieldSet};
use chsd::fem::{Family, QuadPoint};
use chsd::forcing::{Forcing, Unforced};
use chsd::mesh::{build_karst_mesh, BBox, KarstMesh, Region};
use chsd::params::PhysParams;
use chsd::scheme::StepReport;
use chsd::stokes_darcy::{fluid_solve, FluidInput, FluidReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn mesh(nx: usize, ny: usize) -> Arc<KarstMesh> {
    Arc::new(build_karst_mesh(nx, ny, 0.5, BBox::UNIT).unwrap())
}

pub fn oracle_params(p: &PhysParams) -> OracleParams {
    OracleParams {
        rho0: p.rho0,
        chi: p.chi,
        gamma: p.gamma,
        epsilon: p.epsilon,
        mobility: p.mobility.max,
        viscosity: p.viscosity.max,
        alpha: p.alpha_bjsj,
        perm: [p.permeability[0][0], p.permeability[1][1]],
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-amp..amp)).collect()
}

/// Oracle spaces with their library node permutations
pub struct Spaces {
    pub y: Space,
    pub vc: Space,
    pub vm: Space,
    pub y_perm: Vec<usize>,
    pub vc_perm: Vec<usize>,
    pub vm_perm: Vec<usize>,
}

pub fn spaces(disc: &Discretization) -> Spaces {
    let m = disc.mesh();
    let all: Vec<usize> = (0..m.triangles().len()).collect();
    let y = Space::new(m, all, disc.phase().family().degree());
    let vc = Space::new(m, region_cells(m, Region::Conduit), 2);
    let vm = Space::new(m, region_cells(m, Region::Matrix), 2);
    Spaces {
        y_perm: match_nodes(&y.coords, disc.phase().node_coordinates()),
        vc_perm: match_nodes(&vc.coords, disc.velocity(Region::Conduit).node_coordinates()),
        vm_perm: match_nodes(&vm.coords, disc.velocity(Region::Matrix).node_coordinates()),
        y,
        vc,
        vm,
    }
}

/// Random affine body forces per region and affine interface data
pub struct LinearForcing {
    body: [[f64; 6]; 2],
    traction: [f64; 4],
}

impl LinearForcing {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let mut body = [[0.0; 6]; 2];
        body.iter_mut().flatten().for_each(|v| *v = rng.random_range(-1.0..1.0));
        let mut traction = [0.0; 4];
        traction.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        LinearForcing { body, traction }
    }

    pub fn body_at(&self, x: [f64; 2], region: Region) -> [f64; 2] {
        let c = &self.body[if region == Region::Conduit { 0 } else { 1 }];
        [c[0] + c[1] * x[0] + c[2] * x[1], c[3] + c[4] * x[0] + c[5] * x[1]]
    }

    pub fn traction_at(&self, x: [f64; 2]) -> [f64; 2] {
        let c = &self.traction;
        [c[0] + c[1] * x[0], c[2] + c[3] * x[0]]
    }
}

impl Forcing for LinearForcing {
    fn momentum(&self, qp: &QuadPoint, region: Region, _t: f64) -> [f64; 2] {
        self.body_at(qp.x, region)
    }

    fn interface_traction(&self, qp: &QuadPoint, _n: [f64; 2], _tau: [f64; 2], _t: f64) -> [f64; 2] {
        self.traction_at(qp.x)
    }
}

/// Largest coefficient difference between library fluid fields and the
/// oracle solution
pub fn fluid_diff(disc: &Discretization, o: &FluidOracle, u_c: &[f64], p_c: &[f64], u_m: &[f64], p_m: &[f64]) -> f64 {
    let vc = match_nodes(&o.vc.coords, disc.velocity(Region::Conduit).node_coordinates());
    let vm = match_nodes(&o.vm.coords, disc.velocity(Region::Matrix).node_coordinates());
    let pc = match_nodes(&o.pc.coords, disc.pressure(Region::Conduit).node_coordinates());
    let pm = match_nodes(&o.pm.coords, disc.pressure(Region::Matrix).node_coordinates());
    let [ucx, ucy] = pull_vec(&vc, u_c);
    let [umx, umy] = pull_vec(&vm, u_m);
    [
        max_diff(&ucx, &o.uc[0]),
        max_diff(&ucy, &o.uc[1]),
        max_diff(&umx, &o.um[0]),
        max_diff(&umy, &o.um[1]),
        max_diff(&pull(&pc, p_c), &o.p_c),
        max_diff(&pull(&pm, p_m), &o.p_m),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// CH step on the 4-triangle mesh from random `φ^k ∈ [−0.1, 0.1]`, `u^k = 0`
pub fn ch_oracle_diff(seed: u64, tau: f64) -> (f64, NewtonReport) {
    let disc = Discretization::new(mesh(1, 2), Family::P1);
    assert_eq!(disc.mesh().triangles().len(), 4);
    let params = PhysParams::default();
    let sp = spaces(&disc);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = random_vec(&mut rng, disc.phase().dof_count(), 0.1);
    let zeros_c = vec![0.0; disc.velocity(Region::Conduit).dof_count()];
    let zeros_m = vec![0.0; disc.velocity(Region::Matrix).dof_count()];
    let mu0 = vec![0.0; phi.len()];
    let input = ChInput { phi: &phi, mu_guess: &mu0, u_c: &zeros_c, u_m: &zeros_m };
    let (state, report) = ch_solve(&disc, &input, &params, tau, tau, &Unforced, &NewtonOptions::default()).unwrap();
    let zc = [vec![0.0; sp.vc.len()], vec![0.0; sp.vc.len()]];
    let zm = [vec![0.0; sp.vm.len()], vec![0.0; sp.vm.len()]];
    let vel = Velocity { vc: &sp.vc, vm: &sp.vm, uc: &zc, um: &zm };
    let (o_phi, o_mu) = ch_oracle(disc.mesh(), &sp.y, &pull(&sp.y_perm, &phi), &vel, &oracle_params(&params), tau);
    let d = max_diff(&pull(&sp.y_perm, &state.phi), &o_phi).max(max_diff(&pull(&sp.y_perm, &state.mu), &o_mu));
    (d, report)
}

/// Fluid solve on the 4-triangle-per-region mesh with random data and
/// random affine forcing
pub fn fluid_oracle_diff(seed: u64) -> (f64, FluidReport) {
    let disc = Discretization::new(mesh(2, 2), Family::P1);
    for r in [Region::Conduit, Region::Matrix] {
        assert_eq!(disc.velocity(r).cells().len(), 4);
    }
    let params =
        PhysParams { chi: 0.4, alpha_bjsj: 0.7, permeability: [[0.5, 0.0], [0.0, 2.0]], ..Default::default() };
    let sp = spaces(&disc);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forcing = LinearForcing::random(&mut rng);
    let n = disc.phase().dof_count();
    let (phi, mu) = (random_vec(&mut rng, n, 1.0), random_vec(&mut rng, n, 1.0));
    let u_c = random_vec(&mut rng, disc.velocity(Region::Conduit).dof_count(), 1.0);
    let u_m = random_vec(&mut rng, disc.velocity(Region::Matrix).dof_count(), 1.0);
    let tau = 0.05;
    let input = FluidInput { phi: &phi, mu: &mu, u_c: &u_c, u_m: &u_m };
    let (out, report) = fluid_solve(&disc, &input, &params, tau, tau, &forcing).unwrap();
    let body = |x: [f64; 2], r: Region| forcing.body_at(x, r);
    let traction = |x: [f64; 2]| forcing.traction_at(x);
    let o = fluid_oracle(
        disc.mesh(),
        &sp.y,
        &pull(&sp.y_perm, &phi),
        &pull(&sp.y_perm, &mu),
        &pull_vec(&sp.vc_perm, &u_c),
        &pull_vec(&sp.vm_perm, &u_m),
        &oracle_params(&params),
        tau,
        &FluidData { body: &body, traction: &traction },
    );
    (fluid_diff(&disc, &o, &out.u_c, &out.p_c, &out.u_m, &out.p_m), report)
}

/// One full scheme step against the oracle CH step followed by the oracle
/// fluid solve, from random `φ^k` and nonzero `u^k`
pub fn full_step_oracle_diff(seed: u64, tau: f64) -> (f64, StepReport) {
    let disc = Discretization::new(mesh(2, 2), Family::P1);
    let params = PhysParams::default();
    let sp = spaces(&disc);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = FieldSet::zeros(&disc);
    state.phi = random_vec(&mut rng, state.phi.len(), 0.1);
    state.u_c = random_vec(&mut rng, state.u_c.len(), 0.5);
    state.u_m = random_vec(&mut rng, state.u_m.len(), 0.5);
    let (next, report) = chsd::scheme::step(&disc, &state, &params, tau, tau, &Unforced).unwrap();
    let prm = oracle_params(&params);
    let phik = pull(&sp.y_perm, &state.phi);
    let uc = pull_vec(&sp.vc_perm, &state.u_c);
    let um = pull_vec(&sp.vm_perm, &state.u_m);
    let vel = Velocity { vc: &sp.vc, vm: &sp.vm, uc: &uc, um: &um };
    let (o_phi, o_mu) = ch_oracle(disc.mesh(), &sp.y, &phik, &vel, &prm, tau);
    let zero = |_: [f64; 2], _: Region| [0.0; 2];
    let no_traction = |_: [f64; 2]| [0.0; 2];
    let o = fluid_oracle(
        disc.mesh(),
        &sp.y,
        &phik,
        &o_mu,
        &uc,
        &um,
        &prm,
        tau,
        &FluidData { body: &zero, traction: &no_traction },
    );
    let d = fluid_diff(&disc, &o, &next.u_c, &next.p_c, &next.u_m, &next.p_m)
        .max(max_diff(&pull(&sp.y_perm, &next.phi), &o_phi))
        .max(max_diff(&pull(&sp.y_perm, &next.mu), &o_mu));
    (d, report)
}
