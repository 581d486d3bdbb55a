//! Manufactured solutions and the forcing that makes them exact.

use std::f64::consts::PI;

use crate::fem::QuadPoint;
use crate::forcing::Forcing;
use crate::mesh::Region;
use crate::params::PhysParams;

/// Value, time derivative, gradient and Hessian of a scalar field
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScalarJet {
    pub v: f64,
    pub t: f64,
    pub g: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl ScalarJet {
    pub fn laplacian(&self) -> f64 {
        self.h[0][0] + self.h[1][1]
    }
}

/// Value, time derivative, Jacobian `J[i][j] = ∂u_i/∂x_j` and Laplacian of a
/// vector field
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VectorJet {
    pub v: [f64; 2],
    pub t: [f64; 2],
    pub j: [[f64; 2]; 2],
    pub lap: [f64; 2],
}

impl VectorJet {
    /// Symmetric gradient `D(u)`
    pub fn strain(&self) -> [[f64; 2]; 2] {
        let off = 0.5 * (self.j[0][1] + self.j[1][0]);
        [[self.j[0][0], off], [off, self.j[1][1]]]
    }
}

/// A closed-form solution candidate with the derivatives needed to build
/// its forcing. Velocities must satisfy the wall and normal-flux interface
/// conditions and be divergence free.
pub trait ExactSolution: Sync {
    fn phi(&self, x: [f64; 2], t: f64) -> ScalarJet;
    fn mu(&self, x: [f64; 2], t: f64) -> ScalarJet;
    fn velocity(&self, x: [f64; 2], region: Region, t: f64) -> VectorJet;
    fn pressure(&self, x: [f64; 2], region: Region, t: f64) -> ScalarJet;
}

/// Separable trigonometric family on the unit square with the interface at
/// `y = 1/2`:
///
/// ```text
/// φ   = A(t) cos πx cos πy
/// μ   = γ [(φ³ − φ)/ε + 2π² ε φ]
/// ψ_c = B(t) sin² πx (1 − y)²      ψ_m = B(t) sin² πx y/2
/// u   = (∂ψ/∂y, −∂ψ/∂x)
/// P   = C(t) cos πx cos πy          (both subdomains)
/// ```
///
/// with `A, B, C` equal to the amplitudes times `s(t) = 1 + sin(ωt)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigMms {
    pub gamma: f64,
    pub epsilon: f64,
    pub a_phi: f64,
    pub a_u: f64,
    pub a_p: f64,
    pub omega: f64,
}

impl TrigMms {
    pub fn new(params: &PhysParams) -> Self {
        TrigMms { gamma: params.gamma, epsilon: params.epsilon, a_phi: 0.5, a_u: 0.5, a_p: 0.5, omega: 8.0 }
    }

    fn time(&self, t: f64) -> (f64, f64) {
        (1.0 + 0.5 * (self.omega * t).sin(), 0.5 * self.omega * (self.omega * t).cos())
    }

    /// `cos πx cos πy` and its derivatives
    fn cc(x: [f64; 2]) -> ScalarJet {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        let p2 = PI * PI;
        ScalarJet {
            v: cx * cy,
            t: 0.0,
            g: [-PI * sx * cy, -PI * cx * sy],
            h: [[-p2 * cx * cy, p2 * sx * sy], [p2 * sx * sy, -p2 * cx * cy]],
        }
    }
}

fn scale(j: ScalarJet, a: f64, da: f64) -> ScalarJet {
    ScalarJet {
        v: a * j.v,
        t: da * j.v,
        g: [a * j.g[0], a * j.g[1]],
        h: [[a * j.h[0][0], a * j.h[0][1]], [a * j.h[1][0], a * j.h[1][1]]],
    }
}

impl ExactSolution for TrigMms {
    fn phi(&self, x: [f64; 2], t: f64) -> ScalarJet {
        let (s, ds) = self.time(t);
        scale(Self::cc(x), self.a_phi * s, self.a_phi * ds)
    }

    fn mu(&self, x: [f64; 2], t: f64) -> ScalarJet {
        let p = self.phi(x, t);
        let (g, e) = (self.gamma, self.epsilon);
        // μ = m(φ) with m(φ) = γ[(φ³ − φ)/ε + 2π²εφ]
        let m = g * ((p.v.powi(3) - p.v) / e + 2.0 * PI * PI * e * p.v);
        let dm = g * ((3.0 * p.v * p.v - 1.0) / e + 2.0 * PI * PI * e);
        let ddm = g * 6.0 * p.v / e;
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, hij) in row.iter_mut().enumerate() {
                *hij = ddm * p.g[i] * p.g[j] + dm * p.h[i][j];
            }
        }
        ScalarJet { v: m, t: dm * p.t, g: [dm * p.g[0], dm * p.g[1]], h }
    }

    fn velocity(&self, x: [f64; 2], region: Region, t: f64) -> VectorJet {
        let (s, ds) = self.time(t);
        let (b, db) = (self.a_u * s, self.a_u * ds);
        let sx = (PI * x[0]).sin();
        let (s2, c2) = (2.0 * PI * x[0]).sin_cos();
        // S = sin² πx and its first three derivatives
        let (f, f1, f2, f3) = (sx * sx, PI * s2, 2.0 * PI * PI * c2, -4.0 * PI.powi(3) * s2);
        // Y and its first three derivatives
        let y = x[1];
        let (g, g1, g2, g3) = match region {
            Region::Conduit => ((1.0 - y).powi(2), -2.0 * (1.0 - y), 2.0, 0.0),
            Region::Matrix => (0.5 * y, 0.5, 0.0, 0.0),
        };
        let v = [f * g1, -f1 * g];
        VectorJet {
            v: [b * v[0], b * v[1]],
            t: [db * v[0], db * v[1]],
            j: [[b * f1 * g1, b * f * g2], [-b * f2 * g, -b * f1 * g1]],
            lap: [b * (f2 * g1 + f * g3), -b * (f3 * g + f1 * g2)],
        }
    }

    fn pressure(&self, x: [f64; 2], _region: Region, t: f64) -> ScalarJet {
        let (s, ds) = self.time(t);
        scale(Self::cc(x), self.a_p * s, self.a_p * ds)
    }
}

/// The global equilibrium `φ ≡ 1`, `u = 0`, `P = 0`
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EquilibriumMms;

impl ExactSolution for EquilibriumMms {
    fn phi(&self, _x: [f64; 2], _t: f64) -> ScalarJet {
        ScalarJet { v: 1.0, ..Default::default() }
    }

    fn mu(&self, _x: [f64; 2], _t: f64) -> ScalarJet {
        ScalarJet::default()
    }

    fn velocity(&self, _x: [f64; 2], _region: Region, _t: f64) -> VectorJet {
        VectorJet::default()
    }

    fn pressure(&self, _x: [f64; 2], _region: Region, _t: f64) -> ScalarJet {
        ScalarJet::default()
    }
}

/// Residuals of the continuous equations under an exact solution
pub struct MmsForcing<'a, E: ExactSolution + ?Sized> {
    pub exact: &'a E,
    pub params: PhysParams,
}

pub fn mms_forcing<'a, E: ExactSolution + ?Sized>(exact: &'a E, params: &PhysParams) -> MmsForcing<'a, E> {
    MmsForcing { exact, params: params.clone() }
}

impl<E: ExactSolution + ?Sized> MmsForcing<'_, E> {
    /// Transport residual `φ_t + u·∇φ − ∇·(M(φ)∇μ)`
    pub fn phase_at(&self, x: [f64; 2], region: Region, t: f64) -> f64 {
        let (p, m, u) = (self.exact.phi(x, t), self.exact.mu(x, t), self.exact.velocity(x, region, t));
        let law = &self.params.mobility;
        p.t + u.v[0] * p.g[0] + u.v[1] * p.g[1]
            - law.eval(p.v) * m.laplacian()
            - law.derivative(p.v) * (p.g[0] * m.g[0] + p.g[1] * m.g[1])
    }

    /// Chemical-potential residual `γ[(φ³ − φ)/ε − εΔφ] − μ`
    pub fn potential_at(&self, x: [f64; 2], t: f64) -> f64 {
        let (p, m) = (self.exact.phi(x, t), self.exact.mu(x, t));
        let (g, e) = (self.params.gamma, self.params.epsilon);
        g * ((p.v.powi(3) - p.v) / e - e * p.laplacian()) - m.v
    }

    /// Stokes residual `ρ₀u_t − ∇·T + φ∇μ` in the conduit, Darcy residual
    /// `(ρ₀/χ)u_t + νΠ⁻¹u + ∇P + φ∇μ` in the matrix
    pub fn momentum_at(&self, x: [f64; 2], region: Region, t: f64) -> [f64; 2] {
        let prm = &self.params;
        let (p, m) = (self.exact.phi(x, t), self.exact.mu(x, t));
        let (u, pr) = (self.exact.velocity(x, region, t), self.exact.pressure(x, region, t));
        let nu = prm.viscosity.eval(p.v);
        let mut out = [0.0; 2];
        match region {
            Region::Conduit => {
                let d = u.strain();
                let dnu = prm.viscosity.derivative(p.v);
                for i in 0..2 {
                    let stretch = d[i][0] * p.g[0] + d[i][1] * p.g[1];
                    out[i] = prm.rho0 * u.t[i] - nu * u.lap[i] - 2.0 * dnu * stretch + pr.g[i] + p.v * m.g[i];
                }
            }
            Region::Matrix => {
                let k = prm.permeability_inverse();
                for i in 0..2 {
                    let drag = nu * (k[i][0] * u.v[0] + k[i][1] * u.v[1]);
                    out[i] = prm.rho0 / prm.chi * u.t[i] + drag + pr.g[i] + p.v * m.g[i];
                }
            }
        }
        out
    }

    /// Interface mismatch `T n + P_m n + β (u_c·τ) τ` of the normal-stress
    /// and BJSJ conditions; zero when both hold
    pub fn traction_at(&self, x: [f64; 2], n: [f64; 2], tau: [f64; 2], t: f64) -> [f64; 2] {
        let prm = &self.params;
        let p = self.exact.phi(x, t);
        let u = self.exact.velocity(x, Region::Conduit, t);
        let (pc, pm) = (self.exact.pressure(x, Region::Conduit, t), self.exact.pressure(x, Region::Matrix, t));
        let nu = prm.viscosity.eval(p.v);
        let d = u.strain();
        let ut = prm.friction(p.v) * (u.v[0] * tau[0] + u.v[1] * tau[1]);
        let mut out = [0.0; 2];
        for i in 0..2 {
            let tn = 2.0 * nu * (d[i][0] * n[0] + d[i][1] * n[1]) - pc.v * n[i];
            out[i] = tn + pm.v * n[i] + ut * tau[i];
        }
        out
    }
}

impl<E: ExactSolution + ?Sized> Forcing for MmsForcing<'_, E> {
    fn phase(&self, qp: &QuadPoint, region: Region, t: f64) -> f64 {
        self.phase_at(qp.x, region, t)
    }

    fn potential(&self, qp: &QuadPoint, t: f64) -> f64 {
        self.potential_at(qp.x, t)
    }

    fn momentum(&self, qp: &QuadPoint, region: Region, t: f64) -> [f64; 2] {
        self.momentum_at(qp.x, region, t)
    }

    fn interface_traction(&self, qp: &QuadPoint, normal: [f64; 2], tangent: [f64; 2], t: f64) -> [f64; 2] {
        self.traction_at(qp.x, normal, tangent, t)
    }
}
