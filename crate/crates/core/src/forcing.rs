//! Source terms added to both sub-steps (manufactured-solution hooks).

use crate::fem::QuadPoint;
use crate::mesh::Region;

/// Extra volume and interface sources, evaluated at the new time level.
/// Every method defaults to zero.
pub trait Forcing: Sync {
    /// Source of the phase transport equation
    fn phase(&self, _qp: &QuadPoint, _region: Region, _t: f64) -> f64 {
        0.0
    }

    /// Residual source of the chemical-potential equation
    fn potential(&self, _qp: &QuadPoint, _t: f64) -> f64 {
        0.0
    }

    /// Body force of the Stokes (conduit) or Darcy (matrix) momentum equation
    fn momentum(&self, _qp: &QuadPoint, _region: Region, _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Traction acting on conduit test functions along `Γ_cm`
    fn interface_traction(&self, _qp: &QuadPoint, _normal: [f64; 2], _tangent: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
}

/// No forcing
#[derive(Clone, Copy, Debug, Default)]
pub struct Unforced;

impl Forcing for Unforced {}
