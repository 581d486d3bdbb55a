//! The finite-element spaces of the scheme and the discrete state.

use std::sync::Arc;

use crate::fem::{Family, FeSpace, Support};
use crate::mesh::{KarstMesh, Region};

/// Phase space `Y_h` on the whole domain plus a Taylor–Hood pair
/// (P2 velocity, P1 pressure) on each subdomain.
#[derive(Clone, Debug)]
pub struct Discretization {
    mesh: Arc<KarstMesh>,
    phase: FeSpace,
    velocity_c: FeSpace,
    pressure_c: FeSpace,
    velocity_m: FeSpace,
    pressure_m: FeSpace,
}

impl Discretization {
    pub fn new(mesh: Arc<KarstMesh>, phase_family: Family) -> Self {
        Discretization {
            phase: FeSpace::scalar(mesh.clone(), Support::Whole, phase_family),
            velocity_c: FeSpace::vector(mesh.clone(), Support::Conduit, Family::P2),
            pressure_c: FeSpace::scalar(mesh.clone(), Support::Conduit, Family::P1),
            velocity_m: FeSpace::vector(mesh.clone(), Support::Matrix, Family::P2),
            pressure_m: FeSpace::scalar(mesh.clone(), Support::Matrix, Family::P1),
            mesh,
        }
    }

    pub fn mesh(&self) -> &Arc<KarstMesh> {
        &self.mesh
    }

    pub fn phase(&self) -> &FeSpace {
        &self.phase
    }

    pub fn velocity(&self, region: Region) -> &FeSpace {
        match region {
            Region::Conduit => &self.velocity_c,
            Region::Matrix => &self.velocity_m,
        }
    }

    pub fn pressure(&self, region: Region) -> &FeSpace {
        match region {
            Region::Conduit => &self.pressure_c,
            Region::Matrix => &self.pressure_m,
        }
    }
}

/// Discrete state `(φ, μ, u_c, P_c, u_m, P_m)` at one time level
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSet {
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub u_c: Vec<f64>,
    pub p_c: Vec<f64>,
    pub u_m: Vec<f64>,
    pub p_m: Vec<f64>,
}

impl FieldSet {
    pub fn zeros(disc: &Discretization) -> Self {
        FieldSet {
            phi: vec![0.0; disc.phase().dof_count()],
            mu: vec![0.0; disc.phase().dof_count()],
            u_c: vec![0.0; disc.velocity(Region::Conduit).dof_count()],
            p_c: vec![0.0; disc.pressure(Region::Conduit).dof_count()],
            u_m: vec![0.0; disc.velocity(Region::Matrix).dof_count()],
            p_m: vec![0.0; disc.pressure(Region::Matrix).dof_count()],
        }
    }

    pub fn velocity(&self, region: Region) -> &[f64] {
        match region {
            Region::Conduit => &self.u_c,
            Region::Matrix => &self.u_m,
        }
    }

    pub fn pressure(&self, region: Region) -> &[f64] {
        match region {
            Region::Conduit => &self.p_c,
            Region::Matrix => &self.p_m,
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.phi, &self.mu, &self.u_c, &self.p_c, &self.u_m, &self.p_m]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Largest coefficient difference over all fields
    pub fn max_abs_diff(&self, other: &FieldSet) -> f64 {
        let pairs = [
            (&self.phi, &other.phi),
            (&self.mu, &other.mu),
            (&self.u_c, &other.u_c),
            (&self.p_c, &other.p_c),
            (&self.u_m, &other.u_m),
            (&self.p_m, &other.p_m),
        ];
        pairs
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// FNV-1a hash over the bit patterns of a coefficient vector
pub fn checksum(values: &[f64]) -> u64 {
    values.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
        v.to_bits().to_le_bytes().iter().fold(h, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
    })
}
