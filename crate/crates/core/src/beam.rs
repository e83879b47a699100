//! Sectored antenna pattern and pointing states for the 60 GHz link.
//!
//! An N-element array is reduced to two levels within the azimuth sector:
//! a main lobe of width `θ_b` carrying a fraction `κ` of the radiated power
//! and a flat side lobe carrying the rest. Gains satisfy
//! `G_m·θ_b + G_s·(Δθ − θ_b) = Δθ`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::randkit::{sample_gamma, Purpose, TrialSeed};
use crate::scenario::{BeamConfig, GammaParams, ScenarioConfig};

#[derive(Debug, Error, PartialEq)]
pub enum BeamError {
    #[error("n_elements must be at least 1")]
    NoElements,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPattern {
    pub n_elements: u32,
    pub mainlobe_gain_db: f64,
    pub beamwidth_rad: f64,
    pub sidelobe_gain_db: f64,
    pub sector_rad: f64,
}

fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

fn to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl BeamPattern {
    pub fn omni(sector_rad: f64) -> Self {
        Self {
            n_elements: 1,
            mainlobe_gain_db: 0.0,
            beamwidth_rad: sector_rad,
            sidelobe_gain_db: 0.0,
            sector_rad,
        }
    }

    pub fn is_omni(&self) -> bool {
        self.n_elements == 1
    }

    /// `G_m·θ_b + G_s·(Δθ − θ_b)` in linear units; equals `Δθ`.
    pub fn radiated_power(&self) -> f64 {
        to_linear(self.mainlobe_gain_db) * self.beamwidth_rad
            + to_linear(self.sidelobe_gain_db) * (self.sector_rad - self.beamwidth_rad)
    }

    /// Gain toward a direction `offaxis_rad` away from boresight.
    pub fn gain_at(&self, offaxis_rad: f64) -> f64 {
        if offaxis_rad.abs() <= self.beamwidth_rad / 2.0 {
            self.mainlobe_gain_db
        } else {
            self.sidelobe_gain_db
        }
    }
}

/// Builds the two-level pattern of an `n_elements` array.
pub fn build_pattern(n_elements: u32, config: &BeamConfig) -> Result<BeamPattern, BeamError> {
    let sector = config.sector_rad();
    match n_elements {
        0 => Err(BeamError::NoElements),
        1 => Ok(BeamPattern::omni(sector)),
        n => {
            let kappa = config.mainlobe_fraction;
            let theta_b = config.beamwidth_law.beamwidth_rad(sector, n).min(sector);
            let g_m = kappa * sector / theta_b;
            let g_s = (1.0 - kappa) * sector / (sector - theta_b);
            Ok(BeamPattern {
                n_elements: n,
                mainlobe_gain_db: to_db(g_m),
                beamwidth_rad: theta_b,
                sidelobe_gain_db: to_db(g_s),
                sector_rad: sector,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentMode {
    Aligned,
    Misaligned,
    GpsPointed,
}

impl AlignmentMode {
    pub const ALL: [AlignmentMode; 3] = [
        AlignmentMode::Aligned,
        AlignmentMode::Misaligned,
        AlignmentMode::GpsPointed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlignmentMode::Aligned => "aligned",
            AlignmentMode::Misaligned => "misaligned",
            AlignmentMode::GpsPointed => "gps_pointed",
        }
    }
}

impl std::str::FromStr for AlignmentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aligned" => Ok(AlignmentMode::Aligned),
            "misaligned" => Ok(AlignmentMode::Misaligned),
            "gps_pointed" | "gps-pointed" | "gps" => Ok(AlignmentMode::GpsPointed),
            other => Err(format!(
                "unknown alignment '{other}' (expected aligned, misaligned or gps_pointed)"
            )),
        }
    }
}

/// Pointing errors at the transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentState {
    pub mode: AlignmentMode,
    pub pointing_error_rad: [f64; 2],
}

impl AlignmentState {
    pub fn aligned() -> Self {
        Self {
            mode: AlignmentMode::Aligned,
            pointing_error_rad: [0.0; 2],
        }
    }

    pub fn misaligned(d: f64, road_halfwidth_m: f64) -> Self {
        let delta = misalignment_angle(d, road_halfwidth_m);
        Self {
            mode: AlignmentMode::Misaligned,
            pointing_error_rad: [delta; 2],
        }
    }

    /// Draws the state of one trial. GPS errors come from the trial's
    /// transmitter and receiver streams, so they are shared across patterns.
    pub fn sample(mode: AlignmentMode, trial: &TrialSeed, d: f64, config: &ScenarioConfig) -> Self {
        match mode {
            AlignmentMode::Aligned => Self::aligned(),
            AlignmentMode::Misaligned => Self::misaligned(d, config.road_halfwidth_m()),
            AlignmentMode::GpsPointed => {
                let g = &config.gps_error_gamma;
                Self {
                    mode,
                    pointing_error_rad: [
                        gps_pointing_error(&mut trial.rng(Purpose::GpsTx), d, g),
                        gps_pointing_error(&mut trial.rng(Purpose::GpsRx), d, g),
                    ],
                }
            }
        }
    }
}

/// `arctan(W/d)`.
pub fn misalignment_angle(d: f64, road_halfwidth_m: f64) -> f64 {
    (road_halfwidth_m / d).atan()
}

/// Angular error from a Gamma-distributed lateral position error.
pub fn gps_pointing_error<R: Rng + ?Sized>(rng: &mut R, d: f64, gamma: &GammaParams) -> f64 {
    let eps = sample_gamma(rng, gamma.alpha, gamma.scale());
    pointing_error_from_offset(eps, d)
}

/// `|arctan(ε/d)|`.
pub fn pointing_error_from_offset(eps: f64, d: f64) -> f64 {
    (eps / d).atan().abs()
}

/// Sum of both antenna gains for the given pointing state.
pub fn end_to_end_gain_db(pattern: &BeamPattern, state: &AlignmentState) -> f64 {
    if pattern.is_omni() {
        return 0.0;
    }
    match state.mode {
        AlignmentMode::Aligned => 2.0 * pattern.mainlobe_gain_db,
        _ => state
            .pointing_error_rad
            .iter()
            .map(|&a| pattern.gain_at(a))
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::BeamwidthLaw;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn inverse_n() -> BeamConfig {
        BeamConfig {
            beamwidth_law: BeamwidthLaw::InverseN,
            ..BeamConfig::default()
        }
    }

    #[test]
    fn omni_pattern() {
        for cfg in [inverse_n(), BeamConfig::default()] {
            let p = build_pattern(1, &cfg).unwrap();
            assert_eq!(p.mainlobe_gain_db, 0.0);
            assert_eq!(p.sidelobe_gain_db, 0.0);
            assert_eq!(p.beamwidth_rad, PI);
            for a in [0.0, 0.3, PI / 2.0, PI] {
                assert_eq!(p.gain_at(a), 0.0);
            }
        }
    }

    #[test]
    fn zero_elements_rejected() {
        assert_eq!(build_pattern(0, &inverse_n()), Err(BeamError::NoElements));
    }

    #[test]
    fn inverse_n_pattern_values() {
        let p = build_pattern(64, &inverse_n()).unwrap();
        assert_abs_diff_eq!(p.mainlobe_gain_db, 17.6, epsilon = 0.01);
        assert_abs_diff_eq!(p.beamwidth_rad.to_degrees(), 2.81, epsilon = 0.01);
        assert_abs_diff_eq!(p.sidelobe_gain_db, -9.93, epsilon = 0.01);
        assert_eq!(p.gain_at(0.0), p.mainlobe_gain_db);
        assert_eq!(p.gain_at(PI / 2.0), p.sidelobe_gain_db);

        let p = build_pattern(4, &inverse_n()).unwrap();
        assert_abs_diff_eq!(p.mainlobe_gain_db, 5.56, epsilon = 0.01);
        assert_abs_diff_eq!(p.beamwidth_rad.to_degrees(), 45.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.sidelobe_gain_db, -8.75, epsilon = 0.01);
    }

    #[test]
    fn default_law_beamwidths() {
        let p = build_pattern(64, &BeamConfig::default()).unwrap();
        assert_abs_diff_eq!(p.beamwidth_rad, PI / 128f64.sqrt(), epsilon = 1e-12);
        let p = build_pattern(2, &BeamConfig::default()).unwrap();
        assert_abs_diff_eq!(p.beamwidth_rad, PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn power_is_conserved() {
        for cfg in [inverse_n(), BeamConfig::default()] {
            for n in [1, 2, 4, 16, 64, 256] {
                let p = build_pattern(n, &cfg).unwrap();
                let rel = (p.radiated_power() - p.sector_rad).abs() / p.sector_rad;
                assert!(rel < 1e-9, "N = {n}: {rel}");
                assert!(p.mainlobe_gain_db >= p.sidelobe_gain_db);
                assert!(p.beamwidth_rad > 0.0 && p.beamwidth_rad <= p.sector_rad);
            }
        }
    }

    #[test]
    fn mainlobe_edge_is_inclusive() {
        let p = build_pattern(16, &inverse_n()).unwrap();
        assert_eq!(p.gain_at(p.beamwidth_rad / 2.0), p.mainlobe_gain_db);
        assert_eq!(p.gain_at(p.beamwidth_rad / 2.0 + 1e-12), p.sidelobe_gain_db);
    }

    #[test]
    fn misalignment_angles() {
        assert_abs_diff_eq!(misalignment_angle(7.0, 7.0), PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            misalignment_angle(700.0, 7.0).to_degrees(),
            0.573,
            epsilon = 0.001
        );
        let mut last = f64::INFINITY;
        for i in 1..1000 {
            let a = misalignment_angle(f64::from(i), 7.0);
            assert!(a < last);
            last = a;
        }
    }

    #[test]
    fn gps_angle_values() {
        assert_eq!(pointing_error_from_offset(0.0, 50.0), 0.0);
        assert_abs_diff_eq!(
            pointing_error_from_offset(1.456, 2.0).to_degrees(),
            36.05,
            epsilon = 0.01
        );
        assert_abs_diff_eq!(
            pointing_error_from_offset(1.456, 100.0).to_degrees(),
            0.834,
            epsilon = 0.001
        );
        assert_eq!(
            pointing_error_from_offset(-1.0, 3.0),
            pointing_error_from_offset(1.0, 3.0)
        );
    }

    #[test]
    fn end_to_end_values() {
        let cfg = ScenarioConfig::default();
        let p64 = build_pattern(64, &inverse_n()).unwrap();
        assert_abs_diff_eq!(
            end_to_end_gain_db(&p64, &AlignmentState::aligned()),
            35.2,
            epsilon = 0.01
        );
        assert_abs_diff_eq!(
            end_to_end_gain_db(&p64, &AlignmentState::misaligned(7.0, 7.0)),
            -19.86,
            epsilon = 0.01
        );
        let omni = build_pattern(1, &inverse_n()).unwrap();
        for mode in AlignmentMode::ALL {
            for d in [2.0, 7.0, 100.0] {
                let s = AlignmentState::sample(mode, &TrialSeed::new(1, 0, 0), d, &cfg);
                assert_eq!(end_to_end_gain_db(&omni, &s), 0.0);
            }
        }
    }

    #[test]
    fn sampled_states_are_valid() {
        let cfg = ScenarioConfig::default();
        for t in 0..1000 {
            let trial = TrialSeed::new(4, 2, t);
            for mode in AlignmentMode::ALL {
                let s = AlignmentState::sample(mode, &trial, 25.0, &cfg);
                assert_eq!(s.mode, mode);
                assert!(s
                    .pointing_error_rad
                    .iter()
                    .all(|&a| (0.0..=PI / 2.0).contains(&a)));
                if mode == AlignmentMode::Aligned {
                    assert_eq!(s.pointing_error_rad, [0.0; 2]);
                }
            }
        }
    }

    #[test]
    fn expected_gain_ordering() {
        let cfg = ScenarioConfig::default();
        for law in [BeamwidthLaw::InverseN, BeamwidthLaw::InverseSqrt2N] {
            let beam = BeamConfig {
                beamwidth_law: law,
                ..BeamConfig::default()
            };
            for n in [4, 64] {
                let p = build_pattern(n, &beam).unwrap();
                for d in [20.0, 50.0, 200.0, 500.0] {
                    let mean = |mode| {
                        (0..10_000u64)
                            .map(|t| {
                                let s =
                                    AlignmentState::sample(mode, &TrialSeed::new(8, 0, t), d, &cfg);
                                to_linear(end_to_end_gain_db(&p, &s))
                            })
                            .sum::<f64>()
                            / 10_000.0
                    };
                    let a = mean(AlignmentMode::Aligned);
                    let g = mean(AlignmentMode::GpsPointed);
                    let m = mean(AlignmentMode::Misaligned);
                    assert!(a >= g && g >= m, "{law:?} N={n} d={d}: {a} {g} {m}");
                }
            }
        }
    }

    #[test]
    fn misalignment_crossover_moves_out_with_n() {
        let beam = BeamConfig::default();
        let crossover = |n| {
            let p = build_pattern(n, &beam).unwrap();
            7.0 / (p.beamwidth_rad / 2.0).tan()
        };
        assert!(crossover(4) < crossover(16));
        assert!(crossover(16) < crossover(64));
    }
}
