//! Link budget: received power, noise floor, SNR, Shannon rate and outage.

use crate::beam::{end_to_end_gain_db, AlignmentMode, AlignmentState, BeamPattern};
use crate::losmodel::{sample_link_geometry, LinkGeometry};
use crate::pathloss::{dsrc_path_loss, mmwave_path_loss, PathLossBreakdown, RadioKind};
use crate::randkit::{Purpose, TrialSeed};
use crate::scenario::ScenarioConfig;

/// Thermal noise density at 290 K in dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub rx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub snr_db: f64,
    pub rate_bps: f64,
    pub outage: bool,
    pub breakdown: PathLossBreakdown,
    pub gains_db: f64,
    pub geometry: LinkGeometry,
}

pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

pub fn shannon_rate_bps(snr_db: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (10f64.powf(snr_db / 10.0)).ln_1p() / std::f64::consts::LN_2
}

pub fn is_outage(snr_db: f64, threshold_db: f64) -> bool {
    snr_db < threshold_db
}

/// Completes the budget for an already sampled geometry.
///
/// `pattern` and `alignment` are ignored for 802.11p, whose antennas are
/// omnidirectional.
pub fn evaluate_geometry(
    trial: &TrialSeed,
    geometry: &LinkGeometry,
    radio: RadioKind,
    pattern: &BeamPattern,
    alignment: AlignmentMode,
    config: &ScenarioConfig,
) -> LinkSample {
    let (breakdown, gains_db) = match radio {
        RadioKind::Dsrc => (
            dsrc_path_loss(&mut trial.rng(Purpose::Shadowing), geometry, config),
            0.0,
        ),
        RadioKind::MmWave => {
            let state = AlignmentState::sample(alignment, trial, geometry.distance_m, config);
            (
                mmwave_path_loss(geometry, config),
                end_to_end_gain_db(pattern, &state),
            )
        }
    };
    budget(radio, breakdown, gains_db, *geometry, config)
}

fn budget(
    radio: RadioKind,
    breakdown: PathLossBreakdown,
    gains_db: f64,
    geometry: LinkGeometry,
    config: &ScenarioConfig,
) -> LinkSample {
    let bandwidth = radio.bandwidth_hz(config);
    let rx_power_dbm = config.tx_power_dbm + gains_db - breakdown.total_db;
    let noise = noise_power_dbm(bandwidth, radio.noise_figure_db(config));
    let snr_db = rx_power_dbm - noise;
    LinkSample {
        rx_power_dbm,
        noise_power_dbm: noise,
        snr_db,
        rate_bps: shannon_rate_bps(snr_db, bandwidth),
        outage: is_outage(snr_db, config.outage_snr_threshold_db),
        breakdown,
        gains_db,
        geometry,
    }
}

/// One Monte Carlo trial of a link of length `d`.
pub fn evaluate_link(
    trial: &TrialSeed,
    d: f64,
    radio: RadioKind,
    pattern: &BeamPattern,
    alignment: AlignmentMode,
    config: &ScenarioConfig,
) -> LinkSample {
    let geometry = sample_link_geometry(trial, d, config, radio.carrier_hz(config));
    evaluate_geometry(trial, &geometry, radio, pattern, alignment, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::build_pattern;
    use crate::scenario::{BeamConfig, BeamwidthLaw};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn quiet() -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.dsrc.shadow_std_db_1 = 0.0;
        c.dsrc.shadow_std_db_2 = 0.0;
        c
    }

    #[test]
    fn noise_floor_values() {
        assert_abs_diff_eq!(noise_power_dbm(400e6, 0.0), -87.98, epsilon = 0.01);
        assert_abs_diff_eq!(noise_power_dbm(75e6, 0.0), -95.25, epsilon = 0.01);
        assert_eq!(noise_power_dbm(1.0, 0.0), -174.0);
        assert_eq!(noise_power_dbm(1.0, 7.0), -167.0);
    }

    #[test]
    fn shannon_values() {
        assert_abs_diff_eq!(shannon_rate_bps(0.0, 400e6), 400e6, epsilon = 1e-3);
        assert_eq!(shannon_rate_bps(f64::NEG_INFINITY, 400e6), 0.0);
        assert_abs_diff_eq!(shannon_rate_bps(30.0, 75e6), 747.542e6, epsilon = 0.01e6);
    }

    #[test]
    fn outage_threshold_is_strict() {
        assert!(is_outage(-5.01, -5.0));
        assert!(!is_outage(-4.99, -5.0));
        assert!(!is_outage(-5.0, -5.0));
    }

    #[test]
    fn dsrc_budget_at_reference_distance() {
        let c = quiet();
        let g = LinkGeometry::line_of_sight(1.0, &c, c.dsrc.carrier_hz);
        let omni = BeamPattern::omni(c.sector_rad());
        let s = evaluate_geometry(
            &TrialSeed::new(1, 0, 0),
            &g,
            RadioKind::Dsrc,
            &omni,
            AlignmentMode::Aligned,
            &c,
        );
        assert_abs_diff_eq!(s.rx_power_dbm, -28.36, epsilon = 0.01);
        assert_eq!(s.gains_db, 0.0);
    }

    #[test]
    fn mmwave_budget_chain() {
        let c = quiet();
        let beam = BeamConfig {
            beamwidth_law: BeamwidthLaw::InverseN,
            ..BeamConfig::default()
        };
        let p = build_pattern(64, &beam).unwrap();
        let g = LinkGeometry::line_of_sight(100.0, &c, c.mmwave.carrier_hz);
        let s = evaluate_geometry(
            &TrialSeed::new(1, 0, 0),
            &g,
            RadioKind::MmWave,
            &p,
            AlignmentMode::Aligned,
            &c,
        );
        assert_abs_diff_eq!(s.rx_power_dbm, -52.2, epsilon = 0.02);
        assert_abs_diff_eq!(s.snr_db, 35.78, epsilon = 0.02);
        assert_abs_diff_eq!(s.rate_bps, 4.76e9, epsilon = 0.01e9);
        assert!(!s.outage);
    }

    #[test]
    fn sample_invariants() {
        let c = ScenarioConfig::default();
        for radio in [RadioKind::Dsrc, RadioKind::MmWave] {
            for n in [1, 4, 64] {
                let p = build_pattern(n, &c.beam).unwrap();
                for t in 0..300 {
                    for d in [2.0, 80.0, 450.0] {
                        let s = evaluate_link(
                            &TrialSeed::new(6, 1, t),
                            d,
                            radio,
                            &p,
                            AlignmentMode::GpsPointed,
                            &c,
                        );
                        assert_eq!(s.snr_db, s.rx_power_dbm - s.noise_power_dbm);
                        assert_eq!(
                            s.rx_power_dbm,
                            c.tx_power_dbm + s.gains_db - s.breakdown.total_db
                        );
                        assert!(s.rate_bps >= 0.0);
                        assert_eq!(s.outage, s.snr_db < c.outage_snr_threshold_db);
                    }
                }
            }
        }
    }

    #[test]
    fn wider_arrays_never_lose_rate_when_aligned() {
        let c = ScenarioConfig::default();
        let pats: Vec<_> = [64, 4, 1]
            .iter()
            .map(|&n| build_pattern(n, &c.beam).unwrap())
            .collect();
        for t in 0..500 {
            let trial = TrialSeed::new(7, 3, t);
            let rates: Vec<f64> = pats
                .iter()
                .map(|p| {
                    evaluate_link(
                        &trial,
                        120.0,
                        RadioKind::MmWave,
                        p,
                        AlignmentMode::Aligned,
                        &c,
                    )
                    .rate_bps
                })
                .collect();
            assert!(rates[0] >= rates[1] && rates[1] >= rates[2]);
        }
    }

    proptest! {
        #[test]
        fn rate_is_monotone(snr in -40.0f64..60.0, ds in 0.0f64..10.0, bw in 1e3f64..1e9, dbw in 0.0f64..1e8) {
            let r = shannon_rate_bps(snr, bw);
            prop_assert!(shannon_rate_bps(snr + ds, bw) >= r);
            prop_assert!(shannon_rate_bps(snr, bw + dbw) >= r);
        }
    }
}
