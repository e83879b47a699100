//! Simulation configuration: highway geometry, radio parameters and the
//! model constants for blockage, path loss, beam patterns and GPS error.
//!
//! Every field has a default, so an empty document yields the reference
//! highway scenario. Unknown keys are rejected. Validation reports every
//! violated constraint at once instead of stopping at the first.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Returns the free-space wavelength in meters for a carrier in hertz.
pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

/// The reference distance grid: ten points on [2, 100] m followed by twenty
/// points on [110, 499] m.
pub fn default_distance_grid() -> Vec<f64> {
    let mut grid = linspace(2.0, 100.0, 10);
    grid.extend(linspace(110.0, 499.0, 20));
    grid
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else {
                        lo + step * i as f64
                    }
                })
                .collect()
        }
    }
}

/// Coefficients of the blockage polynomial `a·d² + b·d + c`.
///
/// The defaults are not measured values: they were fitted so that the
/// mmWave LOS probability falls to about 0.43 at 500 m while the blockage
/// probability stays non-decreasing over [0, 500] m. Blockage depends on
/// traffic density, so override them for other scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockagePoly {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for BlockagePoly {
    fn default() -> Self {
        Self {
            a: 2.3e-6,
            b: -2.3e-3,
            c: 1.0,
        }
    }
}

/// IEEE 802.11p (5.9 GHz) radio and dual-slope path loss parameters.
///
/// Exponents and shadowing deviations follow suburban/highway V2V
/// measurement campaigns at 5.9 GHz; the far-slope exponent is tuned to the
/// reference path loss curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsrcParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub pl_exponent_1: f64,
    pub pl_exponent_2: f64,
    pub shadow_std_db_1: f64,
    pub shadow_std_db_2: f64,
    pub reference_distance_m: f64,
    /// Upper bound for the knife-edge loss when the Fresnel radius vanishes.
    pub knife_edge_cap_db: f64,
    /// Overrides the scenario-wide noise figure for this radio.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_figure_db: Option<f64>,
}

impl Default for DsrcParams {
    fn default() -> Self {
        Self {
            carrier_hz: 5.9e9,
            bandwidth_hz: 75e6,
            pl_exponent_1: 2.1,
            pl_exponent_2: 3.6,
            shadow_std_db_1: 2.6,
            shadow_std_db_2: 4.4,
            reference_distance_m: 1.0,
            knife_edge_cap_db: 60.0,
            noise_figure_db: None,
        }
    }
}

/// 60 GHz radio and path loss parameters (`ξ·10·log10(d) + η + absorption`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmWaveParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub los_slope: f64,
    pub los_intercept_db: f64,
    pub nlos_slope: f64,
    pub nlos_intercept_db: f64,
    pub absorption_db_per_km: f64,
    /// Overrides the scenario-wide noise figure for this radio.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_figure_db: Option<f64>,
}

impl Default for MmWaveParams {
    fn default() -> Self {
        Self {
            carrier_hz: 60e9,
            bandwidth_hz: 400e6,
            los_slope: 1.77,
            los_intercept_db: 70.0,
            nlos_slope: 1.71,
            nlos_intercept_db: 78.6,
            absorption_db_per_km: 15.0,
            noise_figure_db: None,
        }
    }
}

/// How the main-lobe width of an `N`-element array scales with `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamwidthLaw {
    /// `θ_b = Δθ / N`.
    InverseN,
    /// `θ_b = Δθ / √(2N)`; puts the misalignment crossover near 50 m for
    /// N = 64 and near 11 m for N = 4 on a 7 m offset.
    InverseSqrt2N,
}

impl BeamwidthLaw {
    pub fn beamwidth_rad(self, sector_rad: f64, n_elements: u32) -> f64 {
        let n = f64::from(n_elements);
        match self {
            BeamwidthLaw::InverseN => sector_rad / n,
            BeamwidthLaw::InverseSqrt2N => sector_rad / (2.0 * n).sqrt(),
        }
    }
}

/// Sectored antenna model shared by both vehicles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    /// Azimuth sector covered by one array, degrees.
    pub sector_deg: f64,
    /// Fraction of radiated power carried by the main lobe (κ).
    pub mainlobe_fraction: f64,
    pub beamwidth_law: BeamwidthLaw,
}

impl BeamConfig {
    pub fn sector_rad(&self) -> f64 {
        self.sector_deg.to_radians()
    }
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            sector_deg: 180.0,
            mainlobe_fraction: 0.9,
            beamwidth_law: BeamwidthLaw::InverseSqrt2N,
        }
    }
}

/// Gamma-distributed GPS position error, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaParams {
    pub alpha: f64,
    pub beta: f64,
    /// Read `beta` as a rate (mean α/β) instead of a scale (mean αβ).
    pub gamma_is_rate: bool,
}

impl GammaParams {
    pub fn scale(&self) -> f64 {
        if self.gamma_is_rate {
            1.0 / self.beta
        } else {
            self.beta
        }
    }

    pub fn mean(&self) -> f64 {
        self.alpha * self.scale()
    }
}

impl Default for GammaParams {
    fn default() -> Self {
        Self {
            alpha: 3.14733,
            beta: 0.462432,
            gamma_is_rate: false,
        }
    }
}

/// Immutable scenario description. Share it freely across workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lane_width_m: f64,
    pub num_lanes: u32,
    pub tx_power_dbm: f64,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
    pub obstacle_height_mean_m: f64,
    pub obstacle_height_std_m: f64,
    pub antenna_length_m: f64,
    pub distance_grid_m: Vec<f64>,
    pub antenna_elements: Vec<u32>,
    pub noise_figure_db: f64,
    pub outage_snr_threshold_db: f64,
    pub n_trials: u64,
    pub master_seed: u64,
    /// Beam re-alignment slot length. Stored only; the experiments are static.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot_duration_s: Option<f64>,
    pub blockage_poly: BlockagePoly,
    pub dsrc: DsrcParams,
    pub mmwave: MmWaveParams,
    pub beam: BeamConfig,
    pub gps_error_gamma: GammaParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            lane_width_m: 3.5,
            num_lanes: 4,
            tx_power_dbm: 19.5,
            tx_height_m: 1.42,
            rx_height_m: 1.42,
            obstacle_height_mean_m: 1.50,
            obstacle_height_std_m: 0.084,
            antenna_length_m: 0.10,
            distance_grid_m: default_distance_grid(),
            antenna_elements: vec![1, 4, 64],
            noise_figure_db: 0.0,
            outage_snr_threshold_db: -5.0,
            n_trials: 100_000,
            master_seed: 1,
            slot_duration_s: None,
            blockage_poly: BlockagePoly::default(),
            dsrc: DsrcParams::default(),
            mmwave: MmWaveParams::default(),
            beam: BeamConfig::default(),
            gps_error_gamma: GammaParams::default(),
        }
    }
}

/// One violated configuration constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse config: {0}")]
    Parse(String),
    #[error("invalid config: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("failed to serialize config: {0}")]
    Serialize(String),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parses a TOML document, fills absent keys with defaults and validates.
pub fn load_config(source: &str) -> Result<ScenarioConfig, ConfigError> {
    let config: ScenarioConfig =
        toml::from_str(source).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Reads and validates a config file.
pub fn load_config_file(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_config(&text)
}

impl ScenarioConfig {
    /// Serializes to the same TOML layout `load_config` accepts.
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Serialize(e.to_string()))
    }

    /// Half of the carriageway width, `N_l · w / 2`.
    pub fn road_halfwidth_m(&self) -> f64 {
        f64::from(self.num_lanes) * self.lane_width_m / 2.0
    }

    pub fn dsrc_wavelength_m(&self) -> f64 {
        wavelength(self.dsrc.carrier_hz)
    }

    pub fn mmwave_wavelength_m(&self) -> f64 {
        wavelength(self.mmwave.carrier_hz)
    }

    pub fn dsrc_noise_figure_db(&self) -> f64 {
        self.dsrc.noise_figure_db.unwrap_or(self.noise_figure_db)
    }

    pub fn mmwave_noise_figure_db(&self) -> f64 {
        self.mmwave.noise_figure_db.unwrap_or(self.noise_figure_db)
    }

    pub fn sector_rad(&self) -> f64 {
        self.beam.sector_rad()
    }

    /// Checks every constraint and returns all violations together.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Checker::default();

        v.positive("lane_width_m", self.lane_width_m);
        if self.num_lanes < 1 {
            v.fail("num_lanes", "must be at least 1");
        }
        v.finite("tx_power_dbm", self.tx_power_dbm);
        v.positive("tx_height_m", self.tx_height_m);
        v.positive("rx_height_m", self.rx_height_m);
        v.positive("obstacle_height_mean_m", self.obstacle_height_mean_m);
        v.positive("obstacle_height_std_m", self.obstacle_height_std_m);
        v.positive("antenna_length_m", self.antenna_length_m);
        v.finite("noise_figure_db", self.noise_figure_db);
        v.finite("outage_snr_threshold_db", self.outage_snr_threshold_db);
        if self.n_trials < 1 {
            v.fail("n_trials", "must be at least 1");
        }
        if let Some(t) = self.slot_duration_s {
            v.positive("slot_duration_s", t);
        }

        if self.distance_grid_m.is_empty() {
            v.fail("distance_grid_m", "must not be empty");
        }
        if self.distance_grid_m.iter().any(|d| !d.is_finite()) {
            v.fail("distance_grid_m", "entries must be finite");
        }
        if self.distance_grid_m.windows(2).any(|w| w[1] <= w[0]) {
            v.fail("distance_grid_m", "must be strictly increasing");
        }
        if let Some(&first) = self.distance_grid_m.first() {
            if first < self.dsrc.reference_distance_m {
                v.fail(
                    "distance_grid_m",
                    format!(
                        "smallest distance {first} is below dsrc.reference_distance_m {}",
                        self.dsrc.reference_distance_m
                    ),
                );
            }
        }

        if self.antenna_elements.is_empty() {
            v.fail("antenna_elements", "must not be empty");
        }
        if self.antenna_elements.contains(&0) {
            v.fail("antenna_elements", "element counts must be at least 1");
        }

        let p = &self.blockage_poly;
        v.finite("blockage_poly.a", p.a);
        v.finite("blockage_poly.b", p.b);
        v.finite("blockage_poly.c", p.c);

        let d = &self.dsrc;
        v.positive("dsrc.carrier_hz", d.carrier_hz);
        v.positive("dsrc.bandwidth_hz", d.bandwidth_hz);
        v.positive("dsrc.pl_exponent_1", d.pl_exponent_1);
        v.positive("dsrc.pl_exponent_2", d.pl_exponent_2);
        v.non_negative("dsrc.shadow_std_db_1", d.shadow_std_db_1);
        v.non_negative("dsrc.shadow_std_db_2", d.shadow_std_db_2);
        v.positive("dsrc.reference_distance_m", d.reference_distance_m);
        v.positive("dsrc.knife_edge_cap_db", d.knife_edge_cap_db);
        if let Some(nf) = d.noise_figure_db {
            v.finite("dsrc.noise_figure_db", nf);
        }

        let m = &self.mmwave;
        v.positive("mmwave.carrier_hz", m.carrier_hz);
        v.positive("mmwave.bandwidth_hz", m.bandwidth_hz);
        v.positive("mmwave.los_slope", m.los_slope);
        v.finite("mmwave.los_intercept_db", m.los_intercept_db);
        v.positive("mmwave.nlos_slope", m.nlos_slope);
        v.finite("mmwave.nlos_intercept_db", m.nlos_intercept_db);
        v.non_negative("mmwave.absorption_db_per_km", m.absorption_db_per_km);
        if let Some(nf) = m.noise_figure_db {
            v.finite("mmwave.noise_figure_db", nf);
        }

        let b = &self.beam;
        if !(b.sector_deg > 0.0 && b.sector_deg <= 360.0) {
            v.fail("beam.sector_deg", "must lie in (0, 360]");
        }
        if !(b.mainlobe_fraction > 0.0 && b.mainlobe_fraction < 1.0) {
            v.fail("beam.mainlobe_fraction", "must lie in (0, 1)");
        }

        let g = &self.gps_error_gamma;
        v.positive("gps_error_gamma.alpha", g.alpha);
        v.positive("gps_error_gamma.beta", g.beta);

        v.finish()
    }
}

#[derive(Default)]
struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn finite(&mut self, field: &str, value: f64) {
        if !value.is_finite() {
            self.fail(field, format!("must be finite, got {value}"));
        }
    }

    fn positive(&mut self, field: &str, value: f64) {
        if !(value.is_finite() && value > 0.0) {
            self.fail(field, format!("must be strictly positive, got {value}"));
        }
    }

    fn non_negative(&mut self, field: &str, value: f64) {
        if !(value.is_finite() && value >= 0.0) {
            self.fail(field, format!("must be non-negative, got {value}"));
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(self.violations))
        }
    }
}
