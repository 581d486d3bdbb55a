//! Run configuration: plain `key = value` text with `#` comments.

use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::ch_step::NewtonOptions;
use crate::fem::Family;
use crate::mesh::BBox;
use crate::params::{CoefficientLaw, PhysParams};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid value for {key}: {constraint}")]
    Validation { key: String, constraint: String },
}

impl ConfigError {
    fn invalid(key: &str, constraint: impl Into<String>) -> Self {
        ConfigError::Validation { key: key.to_string(), constraint: constraint.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
    pub split_y: f64,
    pub bbox: BBox,
    pub refinements: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSpec {
    pub tau: f64,
    pub steps: usize,
    pub save_every: usize,
}

impl TimeSpec {
    pub fn final_time(&self) -> f64 {
        self.tau * self.steps as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialKind {
    /// Seeded uniform noise about `initial_value`
    Spinodal,
    /// `φ ≡ 1`
    Equilibrium,
    /// `φ ≡ initial_value`
    Constant,
}

impl InitialKind {
    pub fn name(self) -> &'static str {
        match self {
            InitialKind::Spinodal => "spinodal",
            InitialKind::Equilibrium => "equilibrium",
            InitialKind::Constant => "constant",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmsFamily {
    None,
    Trig,
    Equilibrium,
}

impl MmsFamily {
    pub fn name(self) -> &'static str {
        match self {
            MmsFamily::None => "none",
            MmsFamily::Trig => "trig",
            MmsFamily::Equilibrium => "equilibrium",
        }
    }
}

/// Amplitudes and frequency of the trigonometric manufactured solution
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmsSpec {
    pub family: MmsFamily,
    pub a_phi: f64,
    pub a_u: f64,
    pub a_p: f64,
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    pub phase_family: Family,
    pub time: TimeSpec,
    pub params: PhysParams,
    pub initial: InitialKind,
    pub initial_value: f64,
    pub noise_amplitude: f64,
    pub seed: u64,
    pub mms: MmsSpec,
    pub output_dir: PathBuf,
    /// Write a VTK snapshot every this many steps (0 disables snapshots)
    pub vtk_every: usize,
    pub newton: NewtonOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: MeshSpec { nx: 16, ny: 16, split_y: 0.5, bbox: BBox::UNIT, refinements: 0 },
            phase_family: Family::P1,
            time: TimeSpec { tau: 0.01, steps: 100, save_every: 1 },
            params: PhysParams::default(),
            initial: InitialKind::Spinodal,
            initial_value: 0.0,
            noise_amplitude: 0.05,
            seed: 0,
            mms: MmsSpec { family: MmsFamily::None, a_phi: 0.5, a_u: 0.5, a_p: 0.5, omega: 8.0 },
            output_dir: PathBuf::from("out"),
            vtk_every: 0,
            newton: NewtonOptions::default(),
        }
    }
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::Parse { line, reason: format!("cannot parse {key} value {v:?}") })
}

fn law_kind(line: usize, key: &str, v: &str) -> Result<CoefficientLaw, ConfigError> {
    CoefficientLaw::parse(v).ok_or_else(|| ConfigError::Parse {
        line,
        reason: format!("{key} must be constant or clamped-quadratic, got {v:?}"),
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::Parse { line, reason: "expected `key = value`".into() })?;
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Parse { line, reason: format!("duplicate key {key}") });
            }
            let p = &mut c.params;
            match key {
                "nx" => c.mesh.nx = num(line, key, value)?,
                "ny" => c.mesh.ny = num(line, key, value)?,
                "split_y" => c.mesh.split_y = num(line, key, value)?,
                "x0" => c.mesh.bbox.x0 = num(line, key, value)?,
                "y0" => c.mesh.bbox.y0 = num(line, key, value)?,
                "x1" => c.mesh.bbox.x1 = num(line, key, value)?,
                "y1" => c.mesh.bbox.y1 = num(line, key, value)?,
                "refinements" => c.mesh.refinements = num(line, key, value)?,
                "phase_degree" => {
                    c.phase_family = match value {
                        "1" => Family::P1,
                        "2" => Family::P2,
                        _ => return Err(ConfigError::Parse { line, reason: "phase_degree must be 1 or 2".into() }),
                    }
                }
                "tau" => c.time.tau = num(line, key, value)?,
                "steps" => c.time.steps = num(line, key, value)?,
                "save_every" => c.time.save_every = num(line, key, value)?,
                "rho0" => p.rho0 = num(line, key, value)?,
                "chi" => p.chi = num(line, key, value)?,
                "gamma" => p.gamma = num(line, key, value)?,
                "epsilon" => p.epsilon = num(line, key, value)?,
                "alpha_bjsj" => p.alpha_bjsj = num(line, key, value)?,
                "perm_xx" => p.permeability[0][0] = num(line, key, value)?,
                "perm_xy" => {
                    let v = num(line, key, value)?;
                    p.permeability[0][1] = v;
                    p.permeability[1][0] = v;
                }
                "perm_yy" => p.permeability[1][1] = num(line, key, value)?,
                "mobility_law" => p.mobility.kind = law_kind(line, key, value)?,
                "mobility_min" => p.mobility.min = num(line, key, value)?,
                "mobility_max" => p.mobility.max = num(line, key, value)?,
                "viscosity_law" => p.viscosity.kind = law_kind(line, key, value)?,
                "viscosity_min" => p.viscosity.min = num(line, key, value)?,
                "viscosity_max" => p.viscosity.max = num(line, key, value)?,
                "initial" => {
                    c.initial = match value {
                        "spinodal" => InitialKind::Spinodal,
                        "equilibrium" => InitialKind::Equilibrium,
                        "constant" => InitialKind::Constant,
                        _ => {
                            return Err(ConfigError::Parse {
                                line,
                                reason: format!("unknown initial condition {value:?}"),
                            })
                        }
                    }
                }
                "initial_value" => c.initial_value = num(line, key, value)?,
                "noise_amplitude" => c.noise_amplitude = num(line, key, value)?,
                "seed" => c.seed = num(line, key, value)?,
                "mms" => {
                    c.mms.family = match value {
                        "none" => MmsFamily::None,
                        "trig" => MmsFamily::Trig,
                        "equilibrium" => MmsFamily::Equilibrium,
                        _ => return Err(ConfigError::Parse { line, reason: format!("unknown mms family {value:?}") }),
                    }
                }
                "mms_a_phi" => c.mms.a_phi = num(line, key, value)?,
                "mms_a_u" => c.mms.a_u = num(line, key, value)?,
                "mms_a_p" => c.mms.a_p = num(line, key, value)?,
                "mms_omega" => c.mms.omega = num(line, key, value)?,
                "output_dir" => c.output_dir = PathBuf::from(value),
                "vtk_every" => c.vtk_every = num(line, key, value)?,
                "newton_tol" => c.newton.tolerance = num(line, key, value)?,
                "newton_max_iter" => c.newton.max_iterations = num(line, key, value)?,
                "newton_max_halvings" => c.newton.max_halvings = num(line, key, value)?,
                _ => return Err(ConfigError::Parse { line, reason: format!("unknown key {key}") }),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.mesh;
        if m.nx < 1 {
            return Err(ConfigError::invalid("nx", "must be at least 1"));
        }
        if m.ny < 2 {
            return Err(ConfigError::invalid("ny", "must be at least 2"));
        }
        if !(m.split_y > 0.0 && m.split_y < 1.0) {
            return Err(ConfigError::invalid("split_y", "must lie strictly between 0 and 1"));
        }
        let cells = m.ny as f64 * m.split_y;
        if (cells - cells.round()).abs() > 1e-12 {
            return Err(ConfigError::invalid("split_y", "must lie on a horizontal grid line"));
        }
        if !(m.bbox.width() > 0.0 && m.bbox.height() > 0.0) {
            return Err(ConfigError::invalid("bbox", "must have positive extent"));
        }
        let t = &self.time;
        if !(t.tau > 0.0 && t.tau.is_finite()) {
            return Err(ConfigError::invalid("tau", "must be positive"));
        }
        if t.save_every == 0 {
            return Err(ConfigError::invalid("save_every", "must be at least 1"));
        }
        self.params.validate().map_err(|e| ConfigError::invalid(e.key, e.constraint))?;
        if !(self.noise_amplitude >= 0.0) {
            return Err(ConfigError::invalid("noise_amplitude", "must be nonnegative"));
        }
        if self.mms.family == MmsFamily::Trig {
            let unit = m.bbox == BBox::UNIT && m.split_y == 0.5;
            if !unit {
                return Err(ConfigError::invalid("mms", "trig family needs the unit square split at y = 0.5"));
            }
            if !self.mms.omega.is_finite() {
                return Err(ConfigError::invalid("mms_omega", "must be finite"));
            }
        }
        if !(self.newton.tolerance > 0.0) {
            return Err(ConfigError::invalid("newton_tol", "must be positive"));
        }
        if self.newton.max_iterations == 0 {
            return Err(ConfigError::invalid("newton_max_iter", "must be at least 1"));
        }
        Ok(())
    }

    /// Canonical text form listing every key; floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let m = &self.mesh;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("nx", m.nx.to_string());
        kv("ny", m.ny.to_string());
        kv("split_y", format!("{:?}", m.split_y));
        kv("x0", format!("{:?}", m.bbox.x0));
        kv("y0", format!("{:?}", m.bbox.y0));
        kv("x1", format!("{:?}", m.bbox.x1));
        kv("y1", format!("{:?}", m.bbox.y1));
        kv("refinements", m.refinements.to_string());
        kv("phase_degree", self.phase_family.degree().to_string());
        kv("tau", format!("{:?}", self.time.tau));
        kv("steps", self.time.steps.to_string());
        kv("save_every", self.time.save_every.to_string());
        kv("rho0", format!("{:?}", p.rho0));
        kv("chi", format!("{:?}", p.chi));
        kv("gamma", format!("{:?}", p.gamma));
        kv("epsilon", format!("{:?}", p.epsilon));
        kv("alpha_bjsj", format!("{:?}", p.alpha_bjsj));
        kv("perm_xx", format!("{:?}", p.permeability[0][0]));
        kv("perm_xy", format!("{:?}", p.permeability[0][1]));
        kv("perm_yy", format!("{:?}", p.permeability[1][1]));
        for (name, law) in [("mobility", &p.mobility), ("viscosity", &p.viscosity)] {
            kv(&format!("{name}_law"), law.kind.name().to_string());
            kv(&format!("{name}_min"), format!("{:?}", law.min));
            kv(&format!("{name}_max"), format!("{:?}", law.max));
        }
        kv("initial", self.initial.name().to_string());
        kv("initial_value", format!("{:?}", self.initial_value));
        kv("noise_amplitude", format!("{:?}", self.noise_amplitude));
        kv("seed", self.seed.to_string());
        kv("mms", self.mms.family.name().to_string());
        kv("mms_a_phi", format!("{:?}", self.mms.a_phi));
        kv("mms_a_u", format!("{:?}", self.mms.a_u));
        kv("mms_a_p", format!("{:?}", self.mms.a_p));
        kv("mms_omega", format!("{:?}", self.mms.omega));
        kv("output_dir", self.output_dir.display().to_string());
        kv("vtk_every", self.vtk_every.to_string());
        kv("newton_tol", format!("{:?}", self.newton.tolerance));
        kv("newton_max_iter", self.newton.max_iterations.to_string());
        kv("newton_max_halvings", self.newton.max_halvings.to_string());
        s
    }
}
