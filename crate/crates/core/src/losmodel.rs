//! Vehicle blockage and LOS/NLOS state of a single link.
//!
//! A link of length `d` may be blocked by one intermediate vehicle placed
//! uniformly on `[0, d]`. The link is NLOS when the vehicle is present
//! (blockage polynomial) and its height reaches into 60% of the first
//! Fresnel zone around the line joining the antennas.

use crate::randkit::{
    q_function, sample_truncated_normal_above, sample_uniform, Purpose, TrialSeed,
};
use crate::scenario::{wavelength, BlockagePoly, ScenarioConfig};

/// One sampled realization of link geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance_m: f64,
    /// Distance from the transmitter to the obstacle.
    pub obstacle_distance_m: f64,
    /// First Fresnel zone radius at the obstacle.
    pub fresnel_radius_m: f64,
    /// Height of the line joining the antennas at the obstacle.
    pub los_line_height_m: f64,
    /// Line height minus 60% of the Fresnel radius.
    pub effective_los_height_m: f64,
    pub nlos_probability: f64,
    pub is_nlos: bool,
    /// Present only in NLOS trials.
    pub obstacle_height_m: Option<f64>,
}

impl LinkGeometry {
    /// Obstacle height above the antenna line (`H` of the knife-edge model).
    pub fn obstruction_height_m(&self) -> Option<f64> {
        self.obstacle_height_m.map(|h| h - self.los_line_height_m)
    }

    /// Unobstructed link with the obstacle at mid-span.
    pub fn line_of_sight(distance_m: f64, config: &ScenarioConfig, carrier_hz: f64) -> Self {
        let d_obs = distance_m / 2.0;
        let r_f = fresnel_radius(distance_m, d_obs, wavelength(carrier_hz));
        let line = los_line_height(config, distance_m, d_obs);
        Self {
            distance_m,
            obstacle_distance_m: d_obs,
            fresnel_radius_m: r_f,
            los_line_height_m: line,
            effective_los_height_m: line - 0.6 * r_f,
            nlos_probability: nlos_probability(distance_m, d_obs, config, carrier_hz),
            is_nlos: false,
            obstacle_height_m: None,
        }
    }
}

/// `1 − min(1, max(0, a·d² + b·d + c))`.
pub fn blockage_probability(d: f64, poly: &BlockagePoly) -> f64 {
    let p = poly.a * d * d + poly.b * d + poly.c;
    1.0 - p.clamp(0.0, 1.0)
}

/// First Fresnel zone radius `√(λ·d_obs·(d − d_obs)/d)`.
pub fn fresnel_radius(d: f64, d_obs: f64, lambda: f64) -> f64 {
    debug_assert!(d > 0.0);
    (lambda * d_obs * (d - d_obs) / d).max(0.0).sqrt()
}

/// `(h_i − h_j)·d_obs/d + h_i − 0.6·r_f + ℓ_a`.
///
/// The height-difference term is kept in this form; with equal antenna
/// heights it reduces to the usual straight-line interpolation.
pub fn effective_los_height(h_i: f64, h_j: f64, d: f64, d_obs: f64, r_f: f64, l_a: f64) -> f64 {
    (h_i - h_j) * d_obs / d + h_i - 0.6 * r_f + l_a
}

fn los_line_height(config: &ScenarioConfig, d: f64, d_obs: f64) -> f64 {
    effective_los_height(
        config.tx_height_m,
        config.rx_height_m,
        d,
        d_obs,
        0.0,
        config.antenna_length_m,
    )
}

/// NLOS probability for an obstacle at `d_obs`: blockage probability times
/// the chance that the obstacle reaches the effective LOS height.
pub fn nlos_probability(d: f64, d_obs: f64, config: &ScenarioConfig, carrier_hz: f64) -> f64 {
    let r_f = fresnel_radius(d, d_obs, wavelength(carrier_hz));
    let h = effective_los_height(
        config.tx_height_m,
        config.rx_height_m,
        d,
        d_obs,
        r_f,
        config.antenna_length_m,
    );
    let p_b = blockage_probability(d, &config.blockage_poly);
    let tail = q_function((h - config.obstacle_height_mean_m) / config.obstacle_height_std_m);
    (p_b * tail).clamp(0.0, 1.0)
}

/// Samples obstacle position, LOS state and (for NLOS) obstacle height.
///
/// NLOS obstacle heights are drawn from the height distribution truncated
/// at the antenna line, so the knife-edge obstruction is never negative.
pub fn sample_link_geometry(
    trial: &TrialSeed,
    d: f64,
    config: &ScenarioConfig,
    carrier_hz: f64,
) -> LinkGeometry {
    let d_obs = sample_uniform(&mut trial.rng(Purpose::ObstaclePosition), 0.0, d);
    let r_f = fresnel_radius(d, d_obs, wavelength(carrier_hz));
    let line = los_line_height(config, d, d_obs);
    let effective = line - 0.6 * r_f;
    let p_nlos = nlos_probability(d, d_obs, config, carrier_hz);

    let u: f64 = sample_uniform(&mut trial.rng(Purpose::NlosDraw), 0.0, 1.0);
    let is_nlos = u < p_nlos;
    let obstacle_height_m = is_nlos.then(|| {
        sample_truncated_normal_above(
            &mut trial.rng(Purpose::ObstacleHeight),
            config.obstacle_height_mean_m,
            config.obstacle_height_std_m,
            line,
        )
    });

    LinkGeometry {
        distance_m: d,
        obstacle_distance_m: d_obs,
        fresnel_radius_m: r_f,
        los_line_height_m: line,
        effective_los_height_m: effective,
        nlos_probability: p_nlos,
        is_nlos,
        obstacle_height_m,
    }
}
