//! Path loss for the two radios.
//!
//! 802.11p uses a dual-slope log-distance law with a Fresnel-distance
//! breakpoint, per-slope log-normal shadowing and a single knife-edge
//! penalty in NLOS. The 60 GHz model is `ξ·10·log10(d) + η` plus oxygen
//! absorption, with `(ξ, η)` switched by LOS state; its NLOS intercept
//! already accounts for the blocking vehicle, so no shadowing or knife-edge
//! term is added.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::losmodel::LinkGeometry;
use crate::randkit::sample_normal;
use crate::scenario::{wavelength, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadioKind {
    Dsrc,
    #[serde(rename = "mmwave")]
    MmWave,
}

impl RadioKind {
    pub fn name(self) -> &'static str {
        match self {
            RadioKind::Dsrc => "dsrc",
            RadioKind::MmWave => "mmwave",
        }
    }

    pub fn carrier_hz(self, config: &ScenarioConfig) -> f64 {
        match self {
            RadioKind::Dsrc => config.dsrc.carrier_hz,
            RadioKind::MmWave => config.mmwave.carrier_hz,
        }
    }

    pub fn bandwidth_hz(self, config: &ScenarioConfig) -> f64 {
        match self {
            RadioKind::Dsrc => config.dsrc.bandwidth_hz,
            RadioKind::MmWave => config.mmwave.bandwidth_hz,
        }
    }

    pub fn noise_figure_db(self, config: &ScenarioConfig) -> f64 {
        match self {
            RadioKind::Dsrc => config.dsrc_noise_figure_db(),
            RadioKind::MmWave => config.mmwave_noise_figure_db(),
        }
    }
}

impl std::str::FromStr for RadioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dsrc" | "802.11p" => Ok(RadioKind::Dsrc),
            "mmwave" => Ok(RadioKind::MmWave),
            other => Err(format!("unknown radio '{other}' (expected dsrc or mmwave)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LosState {
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossBreakdown {
    pub total_db: f64,
    pub deterministic_db: f64,
    pub shadowing_db: f64,
    pub knife_edge_db: f64,
    pub model: RadioKind,
    pub los_state: LosState,
}

/// Clamps `x` to `[a, b]`; `b` may be infinite.
pub fn clamp(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if x < a {
        a
    } else if x > b {
        b
    } else {
        x
    }
}

/// Breakpoint distance `4·h_i·h_j/λ`.
pub fn fresnel_distance(h_i: f64, h_j: f64, lambda: f64) -> f64 {
    4.0 * h_i * h_j / lambda
}

/// Free-space loss `20·log10(4π·d0/λ)`.
pub fn free_space_reference_db(lambda: f64, d0: f64) -> f64 {
    20.0 * (4.0 * PI * d0 / lambda).log10()
}

/// Single knife-edge diffraction loss as a function of the Fresnel–Kirchhoff
/// parameter `v`, zero for `v <= -0.78`.
pub fn knife_edge_loss_db(v: f64) -> f64 {
    if v <= -0.78 {
        return 0.0;
    }
    let t = v - 0.1;
    let loss = 6.9 + 20.0 * ((t * t + 1.0).sqrt() + t).log10();
    loss.max(0.0)
}

/// Knife-edge loss for an obstruction `h` meters above the antenna line with
/// Fresnel radius `r_f`, using `v = √2·h/r_f`. The result is capped at
/// `cap_db`; a vanishing radius with a positive obstruction returns the cap.
pub fn knife_edge_attenuation_db(h: f64, r_f: f64, cap_db: f64) -> f64 {
    let loss = if r_f > 0.0 {
        knife_edge_loss_db(std::f64::consts::SQRT_2 * h / r_f)
    } else if h > 0.0 {
        cap_db
    } else if h == 0.0 {
        knife_edge_loss_db(0.0)
    } else {
        0.0
    };
    loss.min(cap_db)
}

/// Distance-dependent part of the 802.11p loss, no shadowing or diffraction.
pub fn dsrc_deterministic_db(d: f64, config: &ScenarioConfig) -> f64 {
    let p = &config.dsrc;
    let lambda = wavelength(p.carrier_hz);
    let d0 = p.reference_distance_m;
    let d_c = dsrc_breakpoint_m(config);
    free_space_reference_db(lambda, d0)
        + 10.0 * p.pl_exponent_1 * (clamp(d, d0, d_c) / d0).log10()
        + 10.0 * p.pl_exponent_2 * (clamp(d, d_c, f64::INFINITY) / d_c).log10()
}

/// Fresnel breakpoint of the 802.11p link, never below the reference distance.
pub fn dsrc_breakpoint_m(config: &ScenarioConfig) -> f64 {
    fresnel_distance(
        config.tx_height_m,
        config.rx_height_m,
        wavelength(config.dsrc.carrier_hz),
    )
    .max(config.dsrc.reference_distance_m)
}

/// 802.11p path loss; `shadow_rng` supplies the log-normal shadowing draw.
pub fn dsrc_path_loss<R: Rng + ?Sized>(
    shadow_rng: &mut R,
    geometry: &LinkGeometry,
    config: &ScenarioConfig,
) -> PathLossBreakdown {
    let d = geometry.distance_m;
    let deterministic_db = dsrc_deterministic_db(d, config);
    let sigma = if d <= dsrc_breakpoint_m(config) {
        config.dsrc.shadow_std_db_1
    } else {
        config.dsrc.shadow_std_db_2
    };
    let shadowing_db = sample_normal(shadow_rng, 0.0, sigma);
    let knife_edge_db = match geometry.obstruction_height_m() {
        Some(h) if geometry.is_nlos => {
            knife_edge_attenuation_db(h, geometry.fresnel_radius_m, config.dsrc.knife_edge_cap_db)
        }
        _ => 0.0,
    };
    PathLossBreakdown {
        total_db: deterministic_db + shadowing_db + knife_edge_db,
        deterministic_db,
        shadowing_db,
        knife_edge_db,
        model: RadioKind::Dsrc,
        los_state: los_state(geometry),
    }
}

/// 60 GHz path loss.
pub fn mmwave_path_loss(geometry: &LinkGeometry, config: &ScenarioConfig) -> PathLossBreakdown {
    let m = &config.mmwave;
    let d = geometry.distance_m;
    let (slope, intercept) = if geometry.is_nlos {
        (m.nlos_slope, m.nlos_intercept_db)
    } else {
        (m.los_slope, m.los_intercept_db)
    };
    let deterministic_db =
        slope * 10.0 * d.log10() + intercept + m.absorption_db_per_km * d / 1000.0;
    PathLossBreakdown {
        total_db: deterministic_db,
        deterministic_db,
        shadowing_db: 0.0,
        knife_edge_db: 0.0,
        model: RadioKind::MmWave,
        los_state: los_state(geometry),
    }
}

fn los_state(geometry: &LinkGeometry) -> LosState {
    if geometry.is_nlos {
        LosState::Nlos
    } else {
        LosState::Los
    }
}
