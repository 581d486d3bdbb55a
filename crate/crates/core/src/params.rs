//! Physical parameters and the phase-dependent coefficient laws.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("invalid parameter {key}: {constraint}")]
pub struct ParamError {
    pub key: &'static str,
    pub constraint: String,
}

/// Phase-dependent coefficient (mobility or viscosity) bounded by
/// `min ≤ law(φ) ≤ max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoefficientLaw {
    /// `law(φ) = max`
    Constant,
    /// `law(φ) = min + (max - min) · clamp(1 - φ², 0, 1)`
    ClampedQuadratic,
}

impl CoefficientLaw {
    pub fn name(self) -> &'static str {
        match self {
            CoefficientLaw::Constant => "constant",
            CoefficientLaw::ClampedQuadratic => "clamped-quadratic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(CoefficientLaw::Constant),
            "clamped-quadratic" => Some(CoefficientLaw::ClampedQuadratic),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Law {
    pub kind: CoefficientLaw,
    pub min: f64,
    pub max: f64,
}

impl Law {
    pub fn constant(value: f64) -> Self {
        Law { kind: CoefficientLaw::Constant, min: value, max: value }
    }

    pub fn eval(&self, phi: f64) -> f64 {
        match self.kind {
            CoefficientLaw::Constant => self.max,
            CoefficientLaw::ClampedQuadratic => self.min + (self.max - self.min) * (1.0 - phi * phi).clamp(0.0, 1.0),
        }
    }

    /// `d law / dφ` (zero where the clamp is active)
    pub fn derivative(&self, phi: f64) -> f64 {
        match self.kind {
            CoefficientLaw::Constant => 0.0,
            CoefficientLaw::ClampedQuadratic if phi.abs() < 1.0 => -2.0 * phi * (self.max - self.min),
            CoefficientLaw::ClampedQuadratic => 0.0,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.kind == CoefficientLaw::Constant || self.min == self.max
    }
}

/// Material and model parameters
#[derive(Clone, Debug, PartialEq)]
pub struct PhysParams {
    /// Fluid density ρ₀
    pub rho0: f64,
    /// Porosity χ ∈ (0, 1]
    pub chi: f64,
    /// Surface-tension coefficient γ
    pub gamma: f64,
    /// Interface width ε
    pub epsilon: f64,
    pub alpha_bjsj: f64,
    /// Permeability Π (symmetric positive definite)
    pub permeability: [[f64; 2]; 2],
    pub mobility: Law,
    pub viscosity: Law,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams {
            rho0: 1.0,
            chi: 0.5,
            gamma: 1.0,
            epsilon: 0.05,
            alpha_bjsj: 1.0,
            permeability: [[1.0, 0.0], [0.0, 1.0]],
            mobility: Law::constant(1.0),
            viscosity: Law::constant(1.0),
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = |key: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ParamError { key, constraint: format!("must be positive and finite (got {v})") })
            }
        };
        positive("rho0", self.rho0)?;
        positive("chi", self.chi)?;
        if self.chi > 1.0 {
            return Err(ParamError { key: "chi", constraint: format!("porosity must not exceed 1 (got {})", self.chi) });
        }
        positive("gamma", self.gamma)?;
        positive("epsilon", self.epsilon)?;
        positive("alpha_bjsj", self.alpha_bjsj)?;
        positive("mobility_min", self.mobility.min)?;
        positive("mobility_max", self.mobility.max)?;
        positive("viscosity_min", self.viscosity.min)?;
        positive("viscosity_max", self.viscosity.max)?;
        if self.mobility.min > self.mobility.max {
            return Err(ParamError { key: "mobility_min", constraint: "must not exceed mobility_max".into() });
        }
        if self.viscosity.min > self.viscosity.max {
            return Err(ParamError { key: "viscosity_min", constraint: "must not exceed viscosity_max".into() });
        }
        let p = self.permeability;
        if p[0][1] != p[1][0] {
            return Err(ParamError { key: "permeability_xy", constraint: "permeability must be symmetric".into() });
        }
        let (tr, det) = (p[0][0] + p[1][1], p[0][0] * p[1][1] - p[0][1] * p[1][0]);
        let min_eig = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
        if !(min_eig > 0.0) {
            return Err(ParamError { key: "permeability", constraint: "must be positive definite".into() });
        }
        Ok(())
    }

    pub fn permeability_inverse(&self) -> [[f64; 2]; 2] {
        let p = self.permeability;
        let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
        [[p[1][1] / det, -p[0][1] / det], [-p[1][0] / det, p[0][0] / det]]
    }

    pub fn permeability_trace(&self) -> f64 {
        self.permeability[0][0] + self.permeability[1][1]
    }

    /// BJSJ friction weight `α ν(φ) / √tr Π`
    pub fn friction(&self, phi: f64) -> f64 {
        self.alpha_bjsj * self.viscosity.eval(phi) / self.permeability_trace().sqrt()
    }

    /// Capillary correction factor of the intermediate velocity:
    /// `1/ρ₀` in the conduit, `χ/ρ₀` in the matrix
    pub fn advection_factor(&self, region: crate::mesh::Region) -> f64 {
        match region {
            crate::mesh::Region::Conduit => 1.0 / self.rho0,
            crate::mesh::Region::Matrix => self.chi / self.rho0,
        }
    }
}
