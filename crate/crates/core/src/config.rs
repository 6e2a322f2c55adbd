//! Pipeline configuration.
//!
//! The file format is flat `key = value` text with dotted section names,
//! for example
//!
//! ```text
//! seed = 7
//! simulation.layout = "layered"
//! simulation.dims = [500, 500, 500]
//! grid.cell_edge = 6
//! test.alpha = 0.05
//! cluster.attributes = "combined"
//! ```
//!
//! Values use TOML syntax, so dotted keys and `[section]` headers are
//! interchangeable.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::changepoint::{AttributeTest, TailBoundParams, ThetaGrid};
use crate::entropy::{Metric, NnConfig};
use crate::field::EntropyFieldConfig;
use crate::saem::SaemConfig;
use crate::sim::{LayerTarget, RsaConfig, DEFAULT_MAX_ATTEMPTS};
use crate::sphere::{AcgParams, Axis, ManifoldSpec, UnitVector3};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Three equal slabs along z; the middle one differs.
    Layered,
    Homogeneous,
}

fn axis_vector(a: Axis) -> UnitVector3 {
    match a {
        Axis::X => UnitVector3::E1,
        Axis::Y => UnitVector3::E2,
        Axis::Z => UnitVector3::E3,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub layout: Layout,
    pub dims: [f64; 3],
    pub length: f64,
    pub radius: f64,
    pub volume_fraction: f64,
    pub beta: f64,
    pub axis: Axis,
    pub middle_beta: f64,
    pub middle_axis: Axis,
    pub max_attempts: usize,
    /// Also write the binary voxel volume.
    pub voxelize: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            layout: Layout::Layered,
            dims: [500.0; 3],
            length: 25.0,
            radius: 1.0,
            volume_fraction: 0.15,
            beta: 0.1,
            axis: Axis::X,
            middle_beta: 0.5,
            middle_axis: Axis::Y,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            voxelize: false,
        }
    }
}

impl SimulationConfig {
    pub fn rsa(&self, seed: u64) -> Result<RsaConfig> {
        let outer = AcgParams::new(axis_vector(self.axis), self.beta)?;
        let target = LayerTarget::VolumeFraction(self.volume_fraction);
        let mut cfg = match self.layout {
            Layout::Homogeneous => {
                RsaConfig::homogeneous(self.dims, self.length, self.radius, outer, target, seed)
            }
            Layout::Layered => {
                let middle = AcgParams::new(axis_vector(self.middle_axis), self.middle_beta)?;
                RsaConfig::three_layers(
                    self.dims,
                    self.length,
                    self.radius,
                    outer,
                    middle,
                    target,
                    seed,
                )
            }
        };
        cfg.max_attempts = self.max_attempts;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Voxel range of the anomalous slab along z, if any.
    pub fn anomaly_slab(&self) -> Option<(f64, f64)> {
        match self.layout {
            Layout::Homogeneous => None,
            Layout::Layered => {
                let z = self.dims[2];
                Some(((z / 3.0).round(), (2.0 * z / 3.0).round()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// Direction field CSV (`i1,i2,i3,x,y,z`).
    pub directions: PathBuf,
    /// Cell counts; inferred from the file when absent.
    #[serde(default)]
    pub cells: Option<[usize; 3]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub cell_edge: f64,
    pub window: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            cell_edge: 6.0,
            window: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyConfig {
    pub penalty: f64,
    pub metric: Metric,
    pub min_members: usize,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        let d = EntropyFieldConfig::default();
        EntropyConfig {
            penalty: d.nn.penalty,
            metric: d.nn.metric,
            min_members: d.min_members,
        }
    }
}

impl EntropyConfig {
    pub fn field_config(&self) -> EntropyFieldConfig {
        EntropyFieldConfig {
            nn: NnConfig {
                penalty: self.penalty,
                manifold: ManifoldSpec::SPHERE,
                metric: self.metric,
            },
            min_members: self.min_members,
        }
    }
}

/// Flat form of [`AttributeTest`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeTestConfig {
    pub offset: usize,
    pub step: usize,
    pub min_extent: usize,
    pub gamma0: f64,
    pub gamma1: f64,
    pub m: usize,
    pub sigma2: f64,
    pub m0: f64,
}

impl From<AttributeTest> for AttributeTestConfig {
    fn from(t: AttributeTest) -> Self {
        AttributeTestConfig {
            offset: t.theta.offset,
            step: t.theta.step,
            min_extent: t.theta.min_extent,
            gamma0: t.theta.gamma0,
            gamma1: t.theta.gamma1,
            m: t.bound.m,
            sigma2: t.bound.sigma2,
            m0: t.bound.m0,
        }
    }
}

impl From<AttributeTestConfig> for AttributeTest {
    fn from(c: AttributeTestConfig) -> Self {
        AttributeTest {
            theta: ThetaGrid {
                offset: c.offset,
                step: c.step,
                min_extent: c.min_extent,
                gamma0: c.gamma0,
                gamma1: c.gamma1,
            },
            bound: TailBoundParams {
                m: c.m,
                sigma2: c.sigma2,
                m0: c.m0,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub alpha: f64,
    pub directions: AttributeTestConfig,
    pub entropy: AttributeTestConfig,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            alpha: 0.05,
            directions: AttributeTest::directions().into(),
            entropy: AttributeTest::entropy().into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMode {
    /// Cluster only when the test finds an anomaly.
    OnReject,
    Always,
    Never,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeSet {
    Entropy,
    Mld,
    /// (Ê, M_x, M_y, M_z), standardised.
    Combined,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub mode: ClusterMode,
    pub attributes: AttributeSet,
    pub spatial: bool,
    pub lambda_scale: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub radius: usize,
    pub min_neighbours: usize,
    pub fields: usize,
    pub max_attempts: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        let s = SaemConfig::default();
        ClusterConfig {
            mode: ClusterMode::OnReject,
            attributes: AttributeSet::Combined,
            spatial: true,
            lambda_scale: s.lambda_scale,
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            radius: s.radius,
            min_neighbours: s.min_neighbours,
            fields: s.fields,
            max_attempts: s.max_attempts,
        }
    }
}

impl ClusterConfig {
    pub fn saem(&self, seed: u64) -> SaemConfig {
        SaemConfig {
            lambda_scale: self.lambda_scale,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            radius: self.radius,
            min_neighbours: self.min_neighbours,
            fields: self.fields,
            max_attempts: self.max_attempts,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub simulation: Option<SimulationConfig>,
    pub input: Option<InputConfig>,
    pub grid: GridConfig,
    pub entropy: EntropyConfig,
    pub test: TestConfig,
    pub cluster: ClusterConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out: None,
            simulation: Some(SimulationConfig::default()),
            input: None,
            grid: GridConfig::default(),
            entropy: EntropyConfig::default(),
            test: TestConfig::default(),
            cluster: ClusterConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses the text format; sections not mentioned keep their defaults,
    /// except that giving `input` disables the default simulation.
    pub fn parse(text: &str) -> Result<Self> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut cfg: PipelineConfig = value
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if value.contains_key("input") && !value.contains_key("simulation") {
            cfg.simulation = None;
        }
        if cfg.simulation.is_none() && !value.contains_key("simulation") && cfg.input.is_none() {
            cfg.simulation = Some(SimulationConfig::default());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.simulation, &self.input) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid(
                    "specify either simulation or input, not both",
                ))
            }
            (None, None) => return Err(Error::invalid("specify a simulation or an input field")),
            _ => {}
        }
        if !(self.test.alpha > 0.0 && self.test.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "test.alpha must lie in (0, 1), got {}",
                self.test.alpha
            )));
        }
        if let Some(s) = &self.simulation {
            s.rsa(self.seed)?;
        }
        if !(self.grid.cell_edge >= 1.0) || self.grid.window == 0 {
            return Err(Error::invalid("grid needs cell_edge >= 1 and window >= 1"));
        }
        for t in [self.test.directions, self.test.entropy] {
            let t: AttributeTest = t.into();
            t.theta.validate()?;
            t.bound.validate()?;
        }
        if !(self.entropy.penalty >= 0.0) {
            return Err(Error::invalid("entropy.penalty must be >= 0"));
        }
        self.cluster.saem(self.seed).validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_keys_parse() {
        let c = PipelineConfig::parse(
            "seed = 3\nsimulation.layout = \"homogeneous\"\nsimulation.dims = [120, 120, 120]\ntest.alpha = 0.01\ncluster.attributes = \"entropy\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, 3);
        let s = c.simulation.unwrap();
        assert_eq!(s.layout, Layout::Homogeneous);
        assert_eq!(s.dims, [120.0; 3]);
        assert_eq!(c.test.alpha, 0.01);
        assert_eq!(c.cluster.attributes, AttributeSet::Entropy);
        assert_eq!(c.grid, GridConfig::default());
    }

    #[test]
    fn zero_alpha_is_invalid() {
        assert!(matches!(
            PipelineConfig::parse("test.alpha = 0.0\n"),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            PipelineConfig::parse("grid.cell = 3\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn input_replaces_simulation() {
        let c = PipelineConfig::parse("input.directions = \"d.csv\"\n").unwrap();
        assert!(c.simulation.is_none());
        assert!(
            PipelineConfig::parse("input.directions = \"d.csv\"\nsimulation.beta = 0.2\n").is_err()
        );
    }
}
