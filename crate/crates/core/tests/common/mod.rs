//! Independent dense reference implementations used as test oracles. They
//! share only the mesh with the library: quadrature, basis functions, DOF
//! numbering and assembly are rebuilt here from the weak forms.

#![allow(dead_code)]

use std::collections::BTreeMap;

use chsd::mesh::{KarstMesh, Region};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub mod scenarios;
pub use scenarios::*;

/// Gauss-Legendre nodes and weights on `[0, 1]` (Golub-Welsch)
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 * (eig.eigenvalues[i] + 1.0), v0 * v0)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Collapsed tensor-product rule on the reference triangle: barycentric
/// point and weight (weights sum to 1/2)
pub fn triangle_rule(n: usize) -> Vec<([f64; 3], f64)> {
    let g = gauss_legendre(n);
    let mut out = Vec::new();
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let (xi, eta) = (u, v * (1.0 - u));
            out.push(([1.0 - xi - eta, xi, eta], wu * wv * (1.0 - u)));
        }
    }
    out
}

/// One quadrature point of a physical triangle
pub struct Point {
    pub bary: [f64; 3],
    pub x: [f64; 2],
    pub w: f64,
    pub glam: [[f64; 2]; 3],
}

pub fn cell_points(mesh: &KarstMesh, t: usize, n: usize) -> Vec<Point> {
    let [a, b, c] = mesh.triangles()[t].map(|v| mesh.vertices()[v]);
    let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    // rows of J^{-1} are the gradients of ξ and η
    let g1 = [j[1][1] / det, -j[0][1] / det];
    let g2 = [-j[1][0] / det, j[0][0] / det];
    let glam = [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2];
    triangle_rule(n)
        .into_iter()
        .map(|(bary, w)| Point {
            bary,
            x: [
                bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
                bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
            ],
            w: w * det.abs(),
            glam,
        })
        .collect()
}

/// Lagrange basis values and gradients (vertices, then edges 01, 12, 20)
pub fn basis(deg: usize, l: [f64; 3], g: [[f64; 2]; 3]) -> (Vec<f64>, Vec<[f64; 2]>) {
    if deg == 1 {
        return (l.to_vec(), g.to_vec());
    }
    let mut v = Vec::new();
    let mut d = Vec::new();
    for i in 0..3 {
        v.push(l[i] * (2.0 * l[i] - 1.0));
        d.push([(4.0 * l[i] - 1.0) * g[i][0], (4.0 * l[i] - 1.0) * g[i][1]]);
    }
    for (i, k) in [(0, 1), (1, 2), (2, 0)] {
        v.push(4.0 * l[i] * l[k]);
        d.push([4.0 * (l[i] * g[k][0] + l[k] * g[i][0]), 4.0 * (l[i] * g[k][1] + l[k] * g[i][1])]);
    }
    (v, d)
}

/// Scalar Lagrange space on a set of triangles, numbered in order of first
/// appearance
pub struct Space {
    pub deg: usize,
    pub cells: Vec<usize>,
    pub cell_dofs: Vec<Vec<usize>>,
    pub coords: Vec<[f64; 2]>,
}

impl Space {
    pub fn new(mesh: &KarstMesh, cells: Vec<usize>, deg: usize) -> Self {
        let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut coords = Vec::new();
        let mut cell_dofs = Vec::new();
        let vx = mesh.vertices();
        for &t in &cells {
            let tri = mesh.triangles()[t];
            let mut keys: Vec<(usize, usize)> = tri.iter().map(|&v| (v, v)).collect();
            if deg == 2 {
                for (i, k) in [(0, 1), (1, 2), (2, 0)] {
                    let (a, b) = (tri[i].min(tri[k]), tri[i].max(tri[k]));
                    keys.push((a, b));
                }
            }
            let dofs = keys
                .into_iter()
                .map(|key| {
                    *ids.entry(key).or_insert_with(|| {
                        let (a, b) = (vx[key.0], vx[key.1]);
                        coords.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                        coords.len() - 1
                    })
                })
                .collect();
            cell_dofs.push(dofs);
        }
        Space { deg, cells, cell_dofs, coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn eval(&self, coeffs: &[f64], cell_index: usize, p: &Point) -> (f64, [f64; 2]) {
        let (v, d) = basis(self.deg, p.bary, p.glam);
        let mut val = 0.0;
        let mut grad = [0.0; 2];
        for (a, &dof) in self.cell_dofs[cell_index].iter().enumerate() {
            val += coeffs[dof] * v[a];
            grad[0] += coeffs[dof] * d[a][0];
            grad[1] += coeffs[dof] * d[a][1];
        }
        (val, grad)
    }
}

pub fn region_cells(mesh: &KarstMesh, region: Region) -> Vec<usize> {
    (0..mesh.triangles().len()).filter(|&t| mesh.region(t) == region).collect()
}

/// `perm[i]` is the library node sitting at oracle node `i`
pub fn match_nodes(ours: &[[f64; 2]], lib: &[[f64; 2]]) -> Vec<usize> {
    ours.iter()
        .map(|p| {
            let hits: Vec<usize> = (0..lib.len())
                .filter(|&j| (lib[j][0] - p[0]).abs() < 1e-12 && (lib[j][1] - p[1]).abs() < 1e-12)
                .collect();
            assert_eq!(hits.len(), 1, "node {p:?} matched {hits:?}");
            hits[0]
        })
        .collect()
}

/// Library scalar coefficients in oracle numbering
pub fn pull(perm: &[usize], lib: &[f64]) -> Vec<f64> {
    perm.iter().map(|&j| lib[j]).collect()
}

/// Library blocked vector coefficients as oracle `(x, y)` arrays
pub fn pull_vec(perm: &[usize], lib: &[f64]) -> [Vec<f64>; 2] {
    let n = lib.len() / 2;
    [perm.iter().map(|&j| lib[j]).collect(), perm.iter().map(|&j| lib[n + j]).collect()]
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

const NQ: usize = 7;

/// Parameters the oracles need, all taken as constant-law values
#[derive(Clone, Copy, Debug)]
pub struct OracleParams {
    pub rho0: f64,
    pub chi: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub mobility: f64,
    pub viscosity: f64,
    pub alpha: f64,
    /// Diagonal permeability
    pub perm: [f64; 2],
}

/// Discrete velocity field pair on oracle P2 spaces
pub struct Velocity<'a> {
    pub vc: &'a Space,
    pub vm: &'a Space,
    pub uc: &'a [Vec<f64>; 2],
    pub um: &'a [Vec<f64>; 2],
}

impl Velocity<'_> {
    fn at(&self, mesh: &KarstMesh, t: usize, p: &Point) -> [f64; 2] {
        let (space, u) = if mesh.region(t) == Region::Conduit { (self.vc, self.uc) } else { (self.vm, self.um) };
        let ci = space.cells.iter().position(|&c| c == t).unwrap();
        [space.eval(&u[0], ci, p).0, space.eval(&u[1], ci, p).0]
    }
}

/// Full Newton solve of the Cahn-Hilliard step on a whole-domain space.
/// Returns `(φ^{k+1}, μ^{k+1})`.
pub fn ch_oracle(
    mesh: &KarstMesh,
    y: &Space,
    phik: &[f64],
    vel: &Velocity,
    prm: &OracleParams,
    tau: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut x = DVector::<f64>::zeros(2 * n);
    x.rows_mut(0, n).copy_from(&DVector::from_column_slice(phik));
    for _ in 0..40 {
        let mut r = DVector::<f64>::zeros(2 * n);
        let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for (ci, &t) in y.cells.iter().enumerate() {
            let c = if mesh.region(t) == Region::Conduit { 1.0 / prm.rho0 } else { prm.chi / prm.rho0 };
            let dofs = &y.cell_dofs[ci];
            for p in cell_points(mesh, t, NQ) {
                let (v, d) = basis(y.deg, p.bary, p.glam);
                let (phi, gphi) = y.eval(x.as_slice(), ci, &p);
                let mu_coeffs: Vec<f64> = x.as_slice()[n..].to_vec();
                let (mu, gmu) = y.eval(&mu_coeffs, ci, &p);
                let (pk, _) = y.eval(phik, ci, &p);
                let uk = vel.at(mesh, t, &p);
                let ubar = [uk[0] - tau * c * pk * gmu[0], uk[1] - tau * c * pk * gmu[1]];
                for (a, &i) in dofs.iter().enumerate() {
                    let gv = d[a];
                    r[i] += p.w
                        * ((phi - pk) / tau * v[a] + prm.mobility * (gmu[0] * gv[0] + gmu[1] * gv[1])
                            - pk * (ubar[0] * gv[0] + ubar[1] * gv[1]));
                    r[n + i] += p.w
                        * (prm.gamma
                            * ((phi.powi(3) - pk) / prm.epsilon * v[a]
                                + prm.epsilon * (gphi[0] * gv[0] + gphi[1] * gv[1]))
                            - mu * v[a]);
                    for (b, &j) in dofs.iter().enumerate() {
                        let gg = d[b][0] * gv[0] + d[b][1] * gv[1];
                        jac[(i, j)] += p.w * v[b] * v[a] / tau;
                        jac[(i, n + j)] += p.w * (prm.mobility + tau * c * pk * pk) * gg;
                        jac[(n + i, j)] +=
                            p.w * prm.gamma * (3.0 * phi * phi / prm.epsilon * v[b] * v[a] + prm.epsilon * gg);
                        jac[(n + i, n + j)] -= p.w * v[b] * v[a];
                    }
                }
            }
        }
        if r.amax() < 1e-14 {
            break;
        }
        let dx = jac.lu().solve(&r).expect("oracle Jacobian is regular");
        x -= &dx;
        if dx.amax() < 1e-16 {
            break;
        }
    }
    (x.as_slice()[..n].to_vec(), x.as_slice()[n..].to_vec())
}

/// Right-hand sides of the manufactured-style momentum and interface data
pub struct FluidData<'a> {
    pub body: &'a dyn Fn([f64; 2], Region) -> [f64; 2],
    pub traction: &'a dyn Fn([f64; 2]) -> [f64; 2],
}

/// Solution of the fluid oracle in oracle numbering
pub struct FluidOracle {
    pub vc: Space,
    pub pc: Space,
    pub vm: Space,
    pub pm: Space,
    pub uc: [Vec<f64>; 2],
    pub p_c: Vec<f64>,
    pub um: [Vec<f64>; 2],
    pub p_m: Vec<f64>,
}

/// Dense monolithic Stokes-Darcy solve with the wall rows replaced by
/// identities and a multiplier for the mean of `p_m`
#[allow(clippy::too_many_arguments)]
pub fn fluid_oracle(
    mesh: &KarstMesh,
    y: &Space,
    phik: &[f64],
    mu: &[f64],
    uk_c: &[Vec<f64>; 2],
    uk_m: &[Vec<f64>; 2],
    prm: &OracleParams,
    tau: f64,
    data: &FluidData,
) -> FluidOracle {
    let (cc, cm) = (region_cells(mesh, Region::Conduit), region_cells(mesh, Region::Matrix));
    let vc = Space::new(mesh, cc.clone(), 2);
    let pc = Space::new(mesh, cc, 1);
    let vm = Space::new(mesh, cm.clone(), 2);
    let pm = Space::new(mesh, cm, 1);
    let (nvc, npc, nvm, npm) = (vc.len(), pc.len(), vm.len(), pm.len());
    let o_uc = 0;
    let o_pc = 2 * nvc;
    let o_um = o_pc + npc;
    let o_pm = o_um + 2 * nvm;
    let o_l = o_pm + npm;
    let len = o_l + 1;
    let mut a = DMatrix::<f64>::zeros(len, len);
    let mut rhs = DVector::<f64>::zeros(len);
    let beta = prm.alpha * prm.viscosity / (prm.perm[0] + prm.perm[1]).sqrt();
    let y_cell = |t: usize| y.cells.iter().position(|&c| c == t).unwrap();

    for (region, vs, ps, o_u, o_p, uk) in [
        (Region::Conduit, &vc, &pc, o_uc, o_pc, uk_c),
        (Region::Matrix, &vm, &pm, o_um, o_pm, uk_m),
    ] {
        let nv = vs.len();
        let inertia = if region == Region::Conduit { prm.rho0 / tau } else { prm.rho0 / (prm.chi * tau) };
        for (ci, &t) in vs.cells.iter().enumerate() {
            let yc = y_cell(t);
            for p in cell_points(mesh, t, NQ) {
                let (v, d) = basis(2, p.bary, p.glam);
                let (q, dq) = basis(1, p.bary, p.glam);
                let (pk, _) = y.eval(phik, yc, &p);
                let (_, gmu) = y.eval(mu, yc, &p);
                let f = (data.body)(p.x, region);
                let load = [f[0] - pk * gmu[0], f[1] - pk * gmu[1]];
                let ukx = [vs.eval(&uk[0], ci, &p).0, vs.eval(&uk[1], ci, &p).0];
                let vd = &vs.cell_dofs[ci];
                let pd = &ps.cell_dofs[ci];
                for (ai, &i) in vd.iter().enumerate() {
                    for c in 0..2 {
                        let row = o_u + c * nv + i;
                        rhs[row] += p.w * (inertia * ukx[c] + load[c]) * v[ai];
                        for (bi, &j) in vd.iter().enumerate() {
                            for e in 0..2 {
                                let col = o_u + e * nv + j;
                                let mut val = 0.0;
                                if c == e {
                                    val += inertia * v[ai] * v[bi];
                                }
                                if region == Region::Conduit {
                                    // 2ν D(φ_j e_e) : D(φ_i e_c)
                                    let mut dd = 0.0;
                                    for r in 0..2 {
                                        for s in 0..2 {
                                            let du = 0.5
                                                * (if r == e { d[bi][s] } else { 0.0 }
                                                    + if s == e { d[bi][r] } else { 0.0 });
                                            let dv = 0.5
                                                * (if r == c { d[ai][s] } else { 0.0 }
                                                    + if s == c { d[ai][r] } else { 0.0 });
                                            dd += du * dv;
                                        }
                                    }
                                    val += 2.0 * prm.viscosity * dd;
                                } else if c == e {
                                    val += prm.viscosity / prm.perm[c] * v[ai] * v[bi];
                                }
                                a[(row, col)] += p.w * val;
                            }
                        }
                        for (bi, &j) in pd.iter().enumerate() {
                            let col = o_p + j;
                            if region == Region::Conduit {
                                // −(p, ∇·v) and (∇·u, q)
                                a[(row, col)] -= p.w * q[bi] * d[ai][c];
                                a[(col, row)] += p.w * q[bi] * d[ai][c];
                            } else {
                                // (∇p, v) and −(u, ∇q)
                                a[(row, col)] += p.w * dq[bi][c] * v[ai];
                                a[(col, row)] -= p.w * dq[bi][c] * v[ai];
                            }
                        }
                    }
                }
                if region == Region::Matrix {
                    for (bi, &j) in pd.iter().enumerate() {
                        a[(o_pm + j, o_l)] += p.w * q[bi];
                        a[(o_l, o_pm + j)] += p.w * q[bi];
                    }
                }
            }
        }
    }

    // interface terms on conduit triangles with an edge on the split line
    let split = mesh.split_y();
    let gl = gauss_legendre(NQ);
    for (ci, &t) in vc.cells.iter().enumerate() {
        let tri = mesh.triangles()[t];
        let on: Vec<usize> = (0..3).filter(|&k| (mesh.vertices()[tri[k]][1] - split).abs() < 1e-12).collect();
        if on.len() != 2 {
            continue;
        }
        let (ka, kb) = (on[0], on[1]);
        let (xa, xb) = (mesh.vertices()[tri[ka]], mesh.vertices()[tri[kb]]);
        let length = ((xb[0] - xa[0]).powi(2) + (xb[1] - xa[1]).powi(2)).sqrt();
        let pts = cell_points(mesh, t, 1);
        let glam = pts[0].glam;
        let m_cell = pm
            .cells
            .iter()
            .position(|&c| {
                let tm = mesh.triangles()[c];
                tm.contains(&tri[ka]) && tm.contains(&tri[kb])
            })
            .unwrap();
        for &(s, w) in &gl {
            let mut bary = [0.0; 3];
            bary[ka] = 1.0 - s;
            bary[kb] = s;
            let x = [(1.0 - s) * xa[0] + s * xb[0], (1.0 - s) * xa[1] + s * xb[1]];
            let wq = w * length;
            let (v, _) = basis(2, bary, glam);
            // pressure basis of the matrix triangle at the same point
            let tm = mesh.triangles()[pm.cells[m_cell]];
            let mut qb = [0.0; 3];
            for (k, &vtx) in tm.iter().enumerate() {
                if vtx == tri[ka] {
                    qb[k] = 1.0 - s;
                } else if vtx == tri[kb] {
                    qb[k] = s;
                }
            }
            let g = (data.traction)(x);
            let vd = &vc.cell_dofs[ci];
            for (ai, &i) in vd.iter().enumerate() {
                // n_cm = (0, −1), τ₁ = (1, 0)
                rhs[o_uc + i] += wq * g[0] * v[ai];
                rhs[o_uc + nvc + i] += wq * g[1] * v[ai];
                for (bi, &j) in vd.iter().enumerate() {
                    a[(o_uc + i, o_uc + j)] += wq * beta * v[ai] * v[bi];
                }
                for (bk, &j) in pm.cell_dofs[m_cell].iter().enumerate() {
                    let row = o_uc + nvc + i;
                    a[(row, o_pm + j)] -= wq * qb[bk] * v[ai];
                    a[(o_pm + j, row)] += wq * qb[bk] * v[ai];
                }
            }
        }
    }

    // walls: both components on conduit walls, the normal one on matrix walls
    let bb = mesh.bbox();
    let on_x = |p: [f64; 2]| (p[0] - bb.x0).abs() < 1e-12 || (p[0] - bb.x1).abs() < 1e-12;
    let mut fix = |row: usize| {
        a.row_mut(row).fill(0.0);
        a[(row, row)] = 1.0;
        rhs[row] = 0.0;
    };
    for (i, p) in vc.coords.iter().enumerate() {
        if on_x(*p) || (p[1] - bb.y1).abs() < 1e-12 {
            fix(o_uc + i);
            fix(o_uc + nvc + i);
        }
    }
    for (i, p) in vm.coords.iter().enumerate() {
        if on_x(*p) {
            fix(o_um + i);
        }
        if (p[1] - bb.y0).abs() < 1e-12 {
            fix(o_um + nvm + i);
        }
    }

    let x = a.lu().solve(&rhs).expect("oracle saddle-point matrix is regular");
    let s = x.as_slice();
    FluidOracle {
        uc: [s[o_uc..o_uc + nvc].to_vec(), s[o_uc + nvc..o_pc].to_vec()],
        p_c: s[o_pc..o_um].to_vec(),
        um: [s[o_um..o_um + nvm].to_vec(), s[o_um + nvm..o_pm].to_vec()],
        p_m: s[o_pm..o_l].to_vec(),
        vc,
        pc,
        vm,
        pm,
    }
}
