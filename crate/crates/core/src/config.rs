//! Simulation configuration read from TOML.
//!
//! Every section and field is optional and falls back to the flagella
//! bundling defaults; unknown keys are rejected. Units are SI throughout.
//!
//! ```toml
//! [material]
//! youngs_modulus = 3.0e6
//! poisson_ratio = 0.5
//! density = 1000.0
//! radius = 1.0e-3
//!
//! [contact]
//! delta = 1.0e-5
//! stiffness_scale = 1.0e5
//!
//! [friction]
//! mu = 0.0
//! slip_tolerance = 1.0e-4
//!
//! [fluid]
//! viscosity = 0.1
//!
//! [solver]
//! dt = 1.0e-3
//!
//! [scenario]
//! num_flagella = 2
//! omega = 15.0
//!
//! [output]
//! duration = 5.0
//! out_dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contact::{initial_stiffness, ContactParams};
use crate::error::{Error, Result};
use crate::friction::FrictionParams;
use crate::hydro::RssParams;
use crate::rod::MaterialParams;
use crate::scenario::{FlagellaScenario, Handedness};
use crate::solver::{Physics, SolverParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialConfig {
    /// Young's modulus E [Pa].
    pub youngs_modulus: f64,
    /// Poisson's ratio; the shear modulus is E / (2(1 + ν)).
    pub poisson_ratio: f64,
    /// Density ρ [kg/m³].
    pub density: f64,
    /// Cross-section radius h [m].
    pub radius: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig {
            youngs_modulus: 3.0e6,
            poisson_ratio: 0.5,
            density: 1000.0,
            radius: 1.0e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactConfig {
    /// Distance tolerance δ [m]: half-width of the smoothed band around 2h.
    pub delta: f64,
    /// Stiffness scale factor s.
    pub stiffness_scale: f64,
    /// Candidate margin δ̂ [m]; 0.2h when absent.
    pub candidate_margin: Option<f64>,
}

impl Default for ContactConfig {
    fn default() -> Self {
        ContactConfig {
            delta: 1.0e-5,
            stiffness_scale: 1.0e5,
            candidate_margin: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrictionConfig {
    /// Friction coefficient μ; zero disables friction.
    pub mu: f64,
    /// Slipping tolerance ν [m/s].
    pub slip_tolerance: f64,
}

impl Default for FrictionConfig {
    fn default() -> Self {
        FrictionConfig {
            mu: 0.0,
            slip_tolerance: 1.0e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidConfig {
    pub enabled: bool,
    /// Dynamic viscosity η [Pa·s].
    pub viscosity: f64,
    /// Regularization ε [m]; 1.02h when absent.
    pub epsilon: Option<f64>,
}

impl Default for FluidConfig {
    fn default() -> Self {
        FluidConfig {
            enabled: true,
            viscosity: 0.1,
            epsilon: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Time step Δt [s].
    pub dt: f64,
    pub tol_rel: f64,
    /// Absolute residual floor [N].
    pub tol_abs: f64,
    pub max_newton_iters: usize,
    pub m1: f64,
    pub m2: f64,
    pub max_line_search_iters: usize,
    pub alpha_collapse: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverParams::default();
        SolverConfig {
            dt: 1.0e-3,
            tol_rel: s.tol_rel,
            tol_abs: s.tol_abs,
            max_newton_iters: s.max_newton_iters,
            m1: s.m1,
            m2: s.m2,
            max_line_search_iters: s.max_line_search_iters,
            alpha_collapse: s.alpha_collapse,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandednessConfig {
    Right,
    Left,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_flagella: usize,
    /// Helix radius a [m].
    pub helix_radius: f64,
    /// Helix pitch λ [m].
    pub pitch: f64,
    /// Axial length z₀ [m].
    pub axial_length: f64,
    /// Clamp polygon side ΔL [m].
    pub spacing: f64,
    /// Drive speed ω [rad/s].
    pub omega: f64,
    pub nodes_per_rod: usize,
    pub handedness: HandednessConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let s = FlagellaScenario::default();
        ScenarioConfig {
            num_flagella: s.num_flagella,
            helix_radius: s.helix_radius,
            pitch: s.pitch,
            axial_length: s.axial_length,
            spacing: s.spacing,
            omega: s.omega,
            nodes_per_rod: s.nodes_per_rod,
            handedness: HandednessConfig::Right,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Simulated time [s].
    pub duration: f64,
    pub out_dir: PathBuf,
    /// Steps between trajectory records.
    pub stride: usize,
    /// Reserved; the simulation itself is deterministic.
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            duration: 5.0,
            out_dir: PathBuf::from("out"),
            stride: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub material: MaterialConfig,
    pub contact: ContactConfig,
    pub friction: FrictionConfig,
    pub fluid: FluidConfig,
    pub solver: SolverConfig,
    pub scenario: ScenarioConfig,
    pub output: OutputConfig,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

impl SimConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| text[s].trim().to_string())
                .unwrap_or_default();
            invalid(&field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.material;
        positive("material.youngs_modulus", m.youngs_modulus)?;
        positive("material.density", m.density)?;
        positive("material.radius", m.radius)?;
        if !(m.poisson_ratio > -1.0 && m.poisson_ratio <= 0.5) {
            return Err(invalid("material.poisson_ratio", "must lie in (-1, 0.5]"));
        }
        let c = &self.contact;
        positive("contact.delta", c.delta)?;
        positive("contact.stiffness_scale", c.stiffness_scale)?;
        if let Some(margin) = c.candidate_margin {
            positive("contact.candidate_margin", margin)?;
            if margin <= c.delta {
                return Err(invalid("contact.candidate_margin", "must exceed contact.delta"));
            }
        }
        if !(self.friction.mu >= 0.0 && self.friction.mu.is_finite()) {
            return Err(invalid("friction.mu", "must be non-negative"));
        }
        positive("friction.slip_tolerance", self.friction.slip_tolerance)?;
        positive("fluid.viscosity", self.fluid.viscosity)?;
        if let Some(eps) = self.fluid.epsilon {
            positive("fluid.epsilon", eps)?;
        }
        let s = &self.solver;
        positive("solver.dt", s.dt)?;
        positive("solver.tol_rel", s.tol_rel)?;
        positive("solver.tol_abs", s.tol_abs)?;
        positive("solver.alpha_collapse", s.alpha_collapse)?;
        if s.max_newton_iters == 0 {
            return Err(invalid("solver.max_newton_iters", "must be at least 1"));
        }
        if s.max_line_search_iters == 0 {
            return Err(invalid("solver.max_line_search_iters", "must be at least 1"));
        }
        if !(0.0 < s.m1 && s.m1 < s.m2 && s.m2 < 1.0) {
            return Err(invalid("solver.m1", "need 0 < m1 < m2 < 1"));
        }
        let sc = &self.scenario;
        if sc.num_flagella == 0 {
            return Err(invalid("scenario.num_flagella", "must be at least 1"));
        }
        if sc.nodes_per_rod < 5 {
            return Err(invalid("scenario.nodes_per_rod", "must be at least 5"));
        }
        positive("scenario.helix_radius", sc.helix_radius)?;
        positive("scenario.pitch", sc.pitch)?;
        positive("scenario.axial_length", sc.axial_length)?;
        positive("scenario.spacing", sc.spacing)?;
        if !sc.omega.is_finite() {
            return Err(invalid("scenario.omega", "must be finite"));
        }
        let o = &self.output;
        if !(o.duration >= 0.0 && o.duration.is_finite()) {
            return Err(invalid("output.duration", "must be non-negative"));
        }
        if o.stride == 0 {
            return Err(invalid("output.stride", "must be at least 1"));
        }
        Ok(())
    }

    pub fn material_params(&self) -> MaterialParams {
        let m = &self.material;
        MaterialParams::from_poisson(m.youngs_modulus, m.poisson_ratio, m.density, m.radius)
    }

    pub fn scenario(&self) -> FlagellaScenario {
        let s = &self.scenario;
        FlagellaScenario {
            num_flagella: s.num_flagella,
            helix_radius: s.helix_radius,
            pitch: s.pitch,
            axial_length: s.axial_length,
            spacing: s.spacing,
            omega: s.omega,
            nodes_per_rod: s.nodes_per_rod,
            handedness: match s.handedness {
                HandednessConfig::Right => Handedness::Right,
                HandednessConfig::Left => Handedness::Left,
            },
        }
    }

    pub fn candidate_margin(&self) -> f64 {
        self.contact.candidate_margin.unwrap_or(0.2 * self.material.radius)
    }

    pub fn physics(&self) -> Physics {
        let h = self.material.radius;
        let s = &self.solver;
        Physics {
            material: self.material_params(),
            contact: ContactParams {
                radius: h,
                delta_bar: self.contact.delta / h,
                stiffness: 0.0,
                scale: self.contact.stiffness_scale,
            },
            candidate_margin: self.candidate_margin(),
            friction: FrictionParams {
                mu: self.friction.mu,
                nu: self.friction.slip_tolerance,
                dt: s.dt,
            },
            fluid: self.fluid.enabled.then(|| RssParams {
                viscosity: self.fluid.viscosity,
                epsilon: self.fluid.epsilon.unwrap_or(1.02 * h),
            }),
            solver: SolverParams {
                tol_rel: s.tol_rel,
                tol_abs: s.tol_abs,
                max_newton_iters: s.max_newton_iters,
                m1: s.m1,
                m2: s.m2,
                max_line_search_iters: s.max_line_search_iters,
                alpha_collapse: s.alpha_collapse,
            },
        }
    }

    /// Placeholder contact stiffness s·EA/L·δ from the rod's rest length.
    pub fn initial_contact_stiffness(&self, rest_length: f64) -> f64 {
        let m = self.material_params();
        initial_stiffness(self.contact.stiffness_scale, m.youngs_modulus * m.area, rest_length, self.contact.delta)
    }

    /// Number of time steps covering `output.duration`.
    pub fn num_steps(&self) -> usize {
        (self.output.duration / self.solver.dt + 1e-9).floor() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = SimConfig::from_toml_str("").unwrap();
        assert_eq!(c, SimConfig::default());
        let m = c.material_params();
        assert_eq!(m.shear_modulus, 1.0e6);
        let p = c.physics();
        assert_eq!(p.fluid.unwrap().epsilon, 1.02e-3);
        assert!((p.contact.delta_bar - 0.01).abs() < 1e-15);
        assert_eq!(p.candidate_margin, 2.0e-4);
        assert_eq!(c.num_steps(), 5000);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = SimConfig::from_toml_str("[material]\nyoung = 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err:?}");
        let err = SimConfig::from_toml_str("[materials]\n").unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = SimConfig::from_toml_str("[solver]\ndt = -1.0\n").unwrap_err();
        assert_eq!(
            err,
            Error::Config {
                field: "solver.dt".into(),
                reason: "must be positive and finite, got -1".into()
            }
        );
        let err = SimConfig::from_toml_str("[scenario]\nnum_flagella = 0\n").unwrap_err();
        assert!(matches!(err, Error::Config { field, .. } if field == "scenario.num_flagella"));
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = SimConfig::default();
        c.friction.mu = 0.4;
        c.scenario.handedness = HandednessConfig::Left;
        c.fluid.epsilon = Some(2e-3);
        let back = SimConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }
}
