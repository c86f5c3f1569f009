//! TOML run configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use svi_core::convergence::Study;
use svi_core::diagnostics::{rotation_from_euler, EulerAngles};
use svi_core::integrator::{GuardMode, StepControls};
use svi_core::models::{HeavyTop, NoiseHamiltonianSpec, RigidBody};
use svi_core::trajectory::{IncrementMode, Model, Simulation};
use svi_core::{Mat3, Rotation, Vec3};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub noise: Vec<NoiseHamiltonianSpec>,
    pub initial: InitialConfig,
    pub run: RunBlock,
    #[serde(default)]
    pub controls: StepControls,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default)]
    pub check: CheckConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    RigidBody {
        inertia: Mat3,
    },
    HeavyTop {
        inertia: Mat3,
        mass: f64,
        gravity: f64,
        lever_arm: Vec3,
        /// Spatial direction of gravity, `α₀`.
        #[serde(default = "up")]
        alpha0: Vec3,
    },
}

fn up() -> Vec3 {
    Vec3::Z
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationConfig {
    Euler(EulerAngles),
    Matrix(Mat3),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub mu: Vec3,
    /// Initial attitude `R₀`; the identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationConfig>,
}

fn default_horizon() -> f64 {
    50.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub increments: IncrementMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    OrbitRadius,
    Energy,
    SpatialMomentum,
    MomentumMap,
    Casimirs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub trajectory: String,
    pub summary: String,
    /// Write every n-th step.
    pub every: usize,
    /// Columns appended to the trajectory CSV; all applicable ones when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<Diagnostic>>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            trajectory: "trajectory.csv".into(),
            summary: "summary.json".into(),
            every: 1,
            diagnostics: None,
        }
    }
}

fn default_snapshots() -> Vec<f64> {
    vec![5.0, 20.0, 40.0, 50.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub members: usize,
    #[serde(default = "default_snapshots")]
    pub snapshots: Vec<f64>,
}

fn raw() -> IncrementMode {
    IncrementMode::Raw
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub dt_fine: f64,
    pub factors: Vec<usize>,
    pub samples: usize,
    /// Study horizon; `run.horizon` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default = "raw")]
    pub reference: IncrementMode,
    #[serde(default)]
    pub coarse: IncrementMode,
}

/// Tolerances of the `check` audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub orbit_radius: f64,
    pub spatial_momentum: f64,
    pub momentum_map: f64,
    pub gamma_norm: f64,
    pub pi_dot_gamma: f64,
    pub pi_z: f64,
    /// Rigid-body energy, checked only without noise.
    pub energy: f64,
    /// Heavy-top energy, which the scheme conserves only approximately.
    pub heavy_top_energy: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            orbit_radius: 1e-10,
            spatial_momentum: 1e-10,
            momentum_map: 1e-10,
            gamma_norm: 1e-12,
            pi_dot_gamma: 1e-10,
            pi_z: 1e-10,
            energy: 1e-9,
            heavy_top_energy: 1e-4,
        }
    }
}

/// Command-line settings that override the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub strict_guard: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(seed) = o.seed {
            self.run.seed = seed;
        }
        if o.strict_guard {
            self.controls.guard = GuardMode::Strict;
        }
    }

    /// SHA-256 of the canonical serialization, after overrides.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn model(&self) -> Result<Model, CliError> {
        Ok(match &self.model {
            ModelConfig::RigidBody { inertia } => Model::RigidBody(RigidBody::new(*inertia)?),
            ModelConfig::HeavyTop {
                inertia,
                mass,
                gravity,
                lever_arm,
                alpha0,
            } => Model::HeavyTop(HeavyTop::new(*inertia, *mass, *gravity, *lever_arm, *alpha0)?),
        })
    }

    pub fn rotation(&self) -> Result<Rotation, CliError> {
        Ok(match self.initial.rotation {
            None => Rotation::IDENTITY,
            Some(RotationConfig::Euler(a)) => rotation_from_euler(a),
            Some(RotationConfig::Matrix(m)) => Rotation::new(m)?,
        })
    }

    pub fn steps(&self) -> Result<usize, CliError> {
        let RunBlock { dt, horizon, .. } = self.run;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Config(format!("run.dt must be positive, got {dt}")));
        }
        if !(horizon >= dt && horizon.is_finite()) {
            return Err(CliError::Config(format!("run.horizon {horizon} must be at least dt {dt}")));
        }
        let steps = (horizon / dt).round();
        if (steps * dt - horizon).abs() > 1e-9 * horizon {
            return Err(CliError::Config(format!(
                "run.horizon {horizon} is not a whole number of steps of {dt}"
            )));
        }
        Ok(steps as usize)
    }

    /// Fully validated simulation described by the file.
    pub fn simulation(&self) -> Result<Simulation, CliError> {
        if self.output.every == 0 {
            return Err(CliError::Config("output.every must be at least 1".into()));
        }
        let sim = Simulation {
            model: self.model()?,
            noise: self.noise.clone(),
            mu0: self.initial.mu,
            g0: self.rotation()?,
            dt: self.run.dt,
            steps: self.steps()?,
            controls: self.controls,
        };
        sim.validate()?;
        if let Some(list) = &self.output.diagnostics {
            let heavy = matches!(sim.model, Model::HeavyTop(_));
            for d in list {
                let fits = match d {
                    Diagnostic::MomentumMap | Diagnostic::Casimirs => heavy,
                    Diagnostic::OrbitRadius | Diagnostic::SpatialMomentum => !heavy,
                    Diagnostic::Energy => true,
                };
                if !fits {
                    return Err(CliError::Config(format!("diagnostic {d:?} does not apply to this model")));
                }
            }
        }
        Ok(sim)
    }

    pub fn study(&self, workers: Option<usize>) -> Result<Study, CliError> {
        let c = self
            .convergence
            .as_ref()
            .ok_or_else(|| CliError::Config("the configuration has no [convergence] block".into()))?;
        Ok(Study {
            base: self.simulation()?,
            dt_fine: c.dt_fine,
            factors: c.factors.clone(),
            horizon: c.horizon.unwrap_or(self.run.horizon),
            samples: c.samples,
            seed: self.run.seed,
            reference: c.reference,
            coarse: c.coarse,
            workers,
        })
    }
}
