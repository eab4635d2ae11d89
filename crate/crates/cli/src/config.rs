//! Run configuration: one JSON document, versioned, with every default
//! expanded before use.

use std::path::{Path, PathBuf};

use polykin_core::linearized_operator::{AssemblyOptions, CalibrationRule, DiagonalRule, KernelContext, KernelRoute, NuQuadrature};
use polykin_core::mc_oracle::{MassRatioBoxes, McConfig, MIN_SAMPLES};
use polykin_core::quadrature::{PlaneQuadrature, SphereQuadrature};
use polykin_core::{CrossSectionModel, Mixture, Species, VelocityGrid};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The only schema version understood.
pub const SCHEMA_VERSION: u32 = 1;

/// Defaults listed in `--help`.
pub const DEFAULTS_HELP: &str = "\
Configuration defaults (JSON, \"schema\": 1, unknown keys rejected):
  mixture.temperature                 1.0
  grid.half_width                     5.5/sqrt(min mass)
  grid.points                         12
  grid.refinement                     [8, 10, 12]
  quadrature.sphere                   6 polar x 12 azimuthal
  quadrature.kernel_sphere            24 polar x 48 azimuthal
  quadrature.plane                    24 radial x 16 angular, cutoff 7/sqrt(min mass)
  quadrature.nu                       radius 8/sqrt(min mass), panel 0.5, order 10
  quadrature.route                    auto (closed form for hard spheres)
  assembly.diagonal                   corrected
  assembly.calibration                mu_panels 32, rho_panel 0.25, order 8, exponent 40
  assembly.memory_cap                 80000000 entries per matrix
  spectral.null_gap_factor            10
  spectral.asymmetry_threshold        1e-6
  mc.samples                          1000000
  mc.seed                             24301
  mc.points                           5 (kernels), mc.nu_points 10
  mass_ratio.boxes                    |v| <= 5, q in [0, 10], dI in [-2, 2]
  mass_ratio.ratios                   [2, 4, 10]
  mass_ratio.samples                  1000000
  checks.identity_points              4 grid points per axis
  checks.identity_sphere              2 polar x 4 azimuthal
  checks.distributions                20, checks.entropy_distributions 100
  checks.symmetry_samples             10000, checks.kinematic_samples 100000
  checks.kernel_pairs                 100
  nu_sweep                            41 speeds in [0, 20]
  output.directory                    out";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported schema {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub name: String,
    pub mixture: MixtureConfig,
    pub cross_section: CrossSectionModel,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub assembly: AssemblyConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub mass_ratio: MassRatioConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub nu_sweep: NuSweep,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    pub species: Vec<Species>,
    #[serde(default = "one")]
    pub temperature: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// R of [−R, R]³.
    #[serde(default)]
    pub half_width: Option<f64>,
    /// N, points per axis.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Grid sizes of the refinement study.
    #[serde(default = "default_refinement")]
    pub refinement: Vec<usize>,
}

fn default_points() -> usize {
    12
}
fn default_refinement() -> Vec<usize> {
    vec![8, 10, 12]
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: None,
            points: default_points(),
            refinement: default_refinement(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereOrders {
    pub polar: usize,
    pub azimuthal: usize,
}

impl SphereOrders {
    pub fn build(&self) -> SphereQuadrature {
        SphereQuadrature::new(self.polar, self.azimuthal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneOrders {
    #[serde(default = "default_radial")]
    pub radial: usize,
    #[serde(default = "default_angular")]
    pub angular: usize,
    /// R_w; `None` means 7/√(min m).
    #[serde(default)]
    pub cutoff: Option<f64>,
}

fn default_radial() -> usize {
    24
}
fn default_angular() -> usize {
    16
}

impl Default for PlaneOrders {
    fn default() -> Self {
        Self {
            radial: default_radial(),
            angular: default_angular(),
            cutoff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_sphere")]
    pub sphere: SphereOrders,
    #[serde(default = "default_kernel_sphere")]
    pub kernel_sphere: SphereOrders,
    #[serde(default)]
    pub plane: PlaneOrders,
    #[serde(default)]
    pub nu: NuQuadrature,
    #[serde(default)]
    pub route: KernelRoute,
}

fn default_sphere() -> SphereOrders {
    SphereOrders { polar: 6, azimuthal: 12 }
}
fn default_kernel_sphere() -> SphereOrders {
    SphereOrders { polar: 24, azimuthal: 48 }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            sphere: default_sphere(),
            kernel_sphere: default_kernel_sphere(),
            plane: PlaneOrders::default(),
            nu: NuQuadrature::default(),
            route: KernelRoute::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyConfig {
    #[serde(default)]
    pub diagonal: DiagonalRule,
    #[serde(default)]
    pub calibration: CalibrationRule,
    #[serde(default = "default_memory_cap")]
    pub memory_cap: usize,
}

fn default_memory_cap() -> usize {
    AssemblyOptions::default().memory_cap
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        Self {
            diagonal: DiagonalRule::default(),
            calibration: CalibrationRule::default(),
            memory_cap: default_memory_cap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    #[serde(default = "default_gap")]
    pub null_gap_factor: f64,
    #[serde(default = "default_asymmetry")]
    pub asymmetry_threshold: f64,
}

fn default_gap() -> f64 {
    10.0
}
fn default_asymmetry() -> f64 {
    1e-6
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            null_gap_factor: default_gap(),
            asymmetry_threshold: default_asymmetry(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Random evaluation points per kernel family.
    #[serde(default = "default_mc_points")]
    pub points: usize,
    /// Random evaluation speeds for ν.
    #[serde(default = "default_nu_points")]
    pub nu_points: usize,
}

fn default_samples() -> u64 {
    1_000_000
}
fn default_seed() -> u64 {
    0x5eed
}
fn default_mc_points() -> usize {
    5
}
fn default_nu_points() -> usize {
    10
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            seed: default_seed(),
            points: default_mc_points(),
            nu_points: default_nu_points(),
        }
    }
}

impl McSection {
    pub fn config(&self) -> McConfig {
        McConfig {
            samples: self.samples,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassRatioConfig {
    #[serde(default)]
    pub boxes: MassRatioBoxes,
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: u64,
}

fn default_ratios() -> Vec<f64> {
    vec![2.0, 4.0, 10.0]
}

impl Default for MassRatioConfig {
    fn default() -> Self {
        Self {
            boxes: MassRatioBoxes::default(),
            ratios: default_ratios(),
            samples: default_samples(),
        }
    }
}

/// Sizes of the cheap identity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default = "default_identity_points")]
    pub identity_points: usize,
    #[serde(default = "default_identity_sphere")]
    pub identity_sphere: SphereOrders,
    #[serde(default = "default_distributions")]
    pub distributions: usize,
    #[serde(default = "default_entropy_distributions")]
    pub entropy_distributions: usize,
    #[serde(default = "default_symmetry_samples")]
    pub symmetry_samples: usize,
    #[serde(default = "default_kinematic_samples")]
    pub kinematic_samples: usize,
    #[serde(default = "default_kernel_pairs")]
    pub kernel_pairs: usize,
}

fn default_identity_points() -> usize {
    4
}
fn default_identity_sphere() -> SphereOrders {
    SphereOrders { polar: 2, azimuthal: 4 }
}
fn default_distributions() -> usize {
    20
}
fn default_entropy_distributions() -> usize {
    100
}
fn default_symmetry_samples() -> usize {
    10_000
}
fn default_kinematic_samples() -> usize {
    100_000
}
fn default_kernel_pairs() -> usize {
    100
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            identity_points: default_identity_points(),
            identity_sphere: default_identity_sphere(),
            distributions: default_distributions(),
            entropy_distributions: default_entropy_distributions(),
            symmetry_samples: default_symmetry_samples(),
            kinematic_samples: default_kinematic_samples(),
            kernel_pairs: default_kernel_pairs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuSweep {
    #[serde(default = "default_max_speed")]
    pub max_speed: f64,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_max_speed() -> f64 {
    20.0
}
fn default_count() -> usize {
    41
}

impl Default for NuSweep {
    fn default() -> Self {
        Self {
            max_speed: default_max_speed(),
            count: default_count(),
        }
    }
}

impl NuSweep {
    pub fn speeds(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![0.0],
            n => (0..n).map(|k| self.max_speed * k as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
        }
    }
}

/// A validated configuration together with the objects it describes.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub mixture: Mixture,
}

impl RunConfig {
    /// Parses a JSON document. Syntax errors and unknown keys are reported
    /// with line and column.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Validates the document and fills every data-dependent default.
    pub fn resolve(mut self) -> Result<Resolved, ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema));
        }
        let mixture = Mixture::new(self.mixture.species.clone(), self.mixture.temperature).map_err(|e| match e {
            polykin_core::ModelError::InvalidField { field, reason } => ConfigError::Invalid {
                field: format!("mixture.{field}"),
                reason,
            },
        })?;
        self.cross_section.validate(&mixture).map_err(|e| match e {
            polykin_core::ModelError::InvalidField { field, reason } => ConfigError::Invalid { field, reason },
        })?;
        if matches!(self.quadrature.route, KernelRoute::ClosedForm) && !self.cross_section.is_hard_sphere() {
            return Err(invalid("quadrature.route", "closed-form kernels exist only for hard spheres"));
        }
        let m = mixture.min_mass();
        let hw = *self.grid.half_width.get_or_insert(VelocityGrid::default_half_width(m));
        if !(hw > 0.0 && hw.is_finite()) {
            return Err(invalid("grid.half_width", "must be positive"));
        }
        if self.grid.points < 4 {
            return Err(invalid("grid.points", "at least 4 points per axis"));
        }
        if self.grid.refinement.len() < 2 || self.grid.refinement.iter().any(|&n| n < 4) {
            return Err(invalid("grid.refinement", "at least two grid sizes, each at least 4"));
        }
        if self.grid.refinement.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("grid.refinement", "grid sizes must increase"));
        }
        for (field, s) in [
            ("quadrature.sphere", self.quadrature.sphere),
            ("quadrature.kernel_sphere", self.quadrature.kernel_sphere),
            ("checks.identity_sphere", self.checks.identity_sphere),
        ] {
            if s.polar == 0 || s.azimuthal == 0 {
                return Err(invalid(field, "orders must be positive"));
            }
        }
        let cutoff = *self.quadrature.plane.cutoff.get_or_insert(7.0 / m.sqrt());
        if !(cutoff > 0.0) || self.quadrature.plane.radial == 0 || self.quadrature.plane.angular == 0 {
            return Err(invalid("quadrature.plane", "orders and cutoff must be positive"));
        }
        let radius = *self.quadrature.nu.radius.get_or_insert(8.0 / m.sqrt());
        if !(radius > 0.0) || !(self.quadrature.nu.panel > 0.0) || self.quadrature.nu.order == 0 {
            return Err(invalid("quadrature.nu", "radius, panel and order must be positive"));
        }
        if !(self.spectral.null_gap_factor > 1.0) {
            return Err(invalid("spectral.null_gap_factor", "must exceed 1"));
        }
        if self.mc.samples < MIN_SAMPLES {
            return Err(invalid("mc.samples", format!("at least {MIN_SAMPLES}")));
        }
        if self.mass_ratio.samples < MIN_SAMPLES {
            return Err(invalid("mass_ratio.samples", format!("at least {MIN_SAMPLES}")));
        }
        if self.mass_ratio.ratios.iter().any(|&r| !(r > 0.0 && r.is_finite() && r != 1.0)) {
            return Err(invalid("mass_ratio.ratios", "ratios must be positive, finite and different from 1"));
        }
        if self.checks.identity_points < 4 {
            return Err(invalid("checks.identity_points", "at least 4 points per axis"));
        }
        Ok(Resolved { config: self, mixture })
    }

    pub fn effective_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("configs serialize")
    }
}

impl Resolved {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        RunConfig::load(path)?.resolve()
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        RunConfig::from_json(text)?.resolve()
    }

    pub fn half_width(&self) -> f64 {
        self.config.grid.half_width.expect("resolved")
    }

    pub fn grid(&self, n: usize) -> VelocityGrid {
        VelocityGrid::new(self.half_width(), n)
    }

    pub fn kernel_context(&self) -> KernelContext {
        let q = &self.config.quadrature;
        KernelContext::new(
            self.mixture.clone(),
            self.config.cross_section.clone(),
            q.sphere.build(),
            q.kernel_sphere.build(),
            PlaneQuadrature::new(q.plane.radial, q.plane.angular, q.plane.cutoff.expect("resolved")),
            q.route,
        )
    }

    pub fn assembly_options(&self) -> AssemblyOptions {
        AssemblyOptions {
            diagonal: self.config.assembly.diagonal,
            calibration: self.config.assembly.calibration.clone(),
            memory_cap: self.config.assembly.memory_cap,
            asymmetry_tolerance: self.config.spectral.asymmetry_threshold,
            nu: self.config.quadrature.nu.clone(),
        }
    }

    /// Single species, single level, hard spheres: every kernel is closed
    /// form and the tight asymmetry bound applies.
    pub fn is_monatomic_hard_sphere(&self) -> bool {
        self.mixture.num_species() == 1 && self.mixture.num_levels() == 1 && self.config.cross_section.is_hard_sphere()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.mc.seed = seed;
        self
    }
}
