//! Monte Carlo sweeps over a distance grid.
//!
//! Every trial draws from its own counter-derived streams, trials are
//! evaluated in parallel and collected in index order, and the reduction is
//! sequential. Results therefore do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::{build_pattern, AlignmentMode, BeamError};
use crate::linkmetrics::evaluate_link;
use crate::losmodel::sample_link_geometry;
use crate::pathloss::RadioKind;
use crate::randkit::TrialSeed;
use crate::scenario::ScenarioConfig;

/// Environment variable capping the worker count (0 or unset = all cores).
pub const THREADS_ENV: &str = "V2VSIM_THREADS";

const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PathLoss,
    LosProb,
    Rate,
    Outage,
    RxPower,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::PathLoss => "path_loss",
            Metric::LosProb => "los_prob",
            Metric::Rate => "rate",
            Metric::Outage => "outage",
            Metric::RxPower => "rx_power",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::PathLoss => "dB",
            Metric::RxPower => "dBm",
            Metric::Rate => "bps",
            Metric::LosProb | Metric::Outage => "probability",
        }
    }

    pub fn is_probability(self) -> bool {
        matches!(self, Metric::LosProb | Metric::Outage)
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "path_loss" => Ok(Metric::PathLoss),
            "los_prob" => Ok(Metric::LosProb),
            "rate" => Ok(Metric::Rate),
            "outage" => Ok(Metric::Outage),
            "rx_power" => Ok(Metric::RxPower),
            _ => Err(format!(
                "unknown metric '{s}' (expected path_loss, los_prob, rate, outage or rx_power)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub metric: Metric,
    pub radio: RadioKind,
    pub n_elements: u32,
    /// `None` means aligned beams for mmWave and is required for 802.11p.
    pub alignment: Option<AlignmentMode>,
    pub distance_grid: Vec<f64>,
    pub n_trials: u64,
    pub master_seed: u64,
}

impl SweepSpec {
    /// Spec using the config's grid, trial count and seed.
    pub fn from_config(
        metric: Metric,
        radio: RadioKind,
        n_elements: u32,
        alignment: Option<AlignmentMode>,
        config: &ScenarioConfig,
    ) -> Self {
        Self {
            metric,
            radio,
            n_elements,
            alignment,
            distance_grid: config.distance_grid_m.clone(),
            n_trials: config.n_trials,
            master_seed: config.master_seed,
        }
    }

    pub fn effective_alignment(&self) -> AlignmentMode {
        self.alignment.unwrap_or(AlignmentMode::Aligned)
    }

    /// Label used in output files.
    pub fn alignment_label(&self) -> &'static str {
        match self.radio {
            RadioKind::Dsrc => "none",
            RadioKind::MmWave => self.effective_alignment().name(),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::InvalidSpec(m));
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        if self.distance_grid.is_empty() {
            return bad("distance grid is empty".into());
        }
        if let Some(d) = self
            .distance_grid
            .iter()
            .find(|d| !(d.is_finite() && **d > 0.0))
        {
            return bad(format!("distance {d} is not a positive finite number"));
        }
        if self.n_elements == 0 {
            return bad("n_elements must be at least 1".into());
        }
        if self.radio == RadioKind::Dsrc {
            if self.alignment.is_some() {
                return bad("alignment modes apply to mmwave only".into());
            }
            if self.n_elements != 1 {
                return bad("802.11p uses omnidirectional antennas (n_elements = 1)".into());
            }
        }
        if self.distance_grid.len() as u64 > 1 << 16 || self.n_trials > 1 << 40 {
            return bad("grid or trial count exceeds the seed layout".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEstimate {
    pub distance_m: f64,
    pub mean: f64,
    pub std_error: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub n_trials: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

/// Worker count from [`THREADS_ENV`]; 0 means use every core.
pub fn threads_from_env() -> Result<usize, SweepError> {
    match std::env::var(THREADS_ENV) {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map_err(|_| SweepError::Pool(format!("{THREADS_ENV}='{s}' is not a count"))),
        _ => Ok(0),
    }
}

/// Runs a sweep with the worker count taken from the environment.
pub fn run_sweep(
    spec: &SweepSpec,
    config: &ScenarioConfig,
) -> Result<Vec<SweepEstimate>, SweepError> {
    run_sweep_with_threads(spec, config, threads_from_env()?)
}

pub fn run_sweep_with_threads(
    spec: &SweepSpec,
    config: &ScenarioConfig,
    threads: usize,
) -> Result<Vec<SweepEstimate>, SweepError> {
    spec.validate()?;
    if threads == 0 {
        return sweep(spec, config, true);
    }
    if threads == 1 {
        return sweep(spec, config, false);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    pool.install(|| sweep(spec, config, true))
}

fn sweep(
    spec: &SweepSpec,
    config: &ScenarioConfig,
    parallel: bool,
) -> Result<Vec<SweepEstimate>, SweepError> {
    let pattern = build_pattern(spec.n_elements, &config.beam)?;
    let carrier = spec.radio.carrier_hz(config);
    let alignment = spec.effective_alignment();

    let estimates = spec
        .distance_grid
        .iter()
        .enumerate()
        .map(|(di, &d)| {
            let value = |t: u64| {
                let trial = TrialSeed::new(spec.master_seed, di as u32, t);
                if spec.metric == Metric::LosProb {
                    let g = sample_link_geometry(&trial, d, config, carrier);
                    return if g.is_nlos { 0.0 } else { 1.0 };
                }
                let s = evaluate_link(&trial, d, spec.radio, &pattern, alignment, config);
                metric_value(spec.metric, &s)
            };
            let values: Vec<f64> = if parallel {
                (0..spec.n_trials).into_par_iter().map(value).collect()
            } else {
                (0..spec.n_trials).map(value).collect()
            };
            estimate(d, &values, spec.metric.is_probability())
        })
        .collect();
    Ok(estimates)
}

/// Per-trial value of `metric`.
pub fn metric_value(metric: Metric, s: &crate::linkmetrics::LinkSample) -> f64 {
    match metric {
        Metric::PathLoss => s.breakdown.total_db,
        Metric::LosProb => f64::from(u8::from(!s.geometry.is_nlos)),
        Metric::Rate => s.rate_bps,
        Metric::Outage => f64::from(u8::from(s.outage)),
        Metric::RxPower => s.rx_power_dbm,
    }
}

/// Mean, standard error and normal 95% interval of `values`, summed in order.
pub fn estimate(distance_m: f64, values: &[f64], bernoulli: bool) -> SweepEstimate {
    let n = values.len() as u64;
    assert!(n > 0, "no samples");
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let std_error = if n < 2 {
        0.0
    } else if bernoulli {
        (mean * (1.0 - mean) / nf).max(0.0).sqrt()
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (nf - 1.0)).sqrt() / nf.sqrt()
    };
    let (mut lo, mut hi) = (mean - Z95 * std_error, mean + Z95 * std_error);
    if bernoulli {
        lo = lo.max(0.0);
        hi = hi.min(1.0);
    }
    SweepEstimate {
        distance_m,
        mean,
        std_error,
        ci95_lo: lo.min(mean),
        ci95_hi: hi.max(mean),
        n_trials: n,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointComparison {
    pub distance_m: f64,
    /// `mean_b − mean_a`.
    pub mean_shift: f64,
    pub z: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub tolerance_sigma: f64,
    pub points: Vec<PointComparison>,
}

impl ComparisonReport {
    pub fn fraction_within(&self) -> f64 {
        let k = self.points.iter().filter(|p| p.within).count();
        k as f64 / self.points.len() as f64
    }

    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.within)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.points.iter().map(|p| p.z.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("grids differ: {0} vs {1} points")]
    Length(usize, usize),
    #[error("grids differ at index {index}: {a} vs {b}")]
    Distance { index: usize, a: f64, b: f64 },
}

/// Per-point z-scores `(b − a)/√(se_a² + se_b²)`.
pub fn compare_estimates(
    a: &[SweepEstimate],
    b: &[SweepEstimate],
    tolerance_sigma: f64,
) -> Result<ComparisonReport, CompareError> {
    if a.len() != b.len() {
        return Err(CompareError::Length(a.len(), b.len()));
    }
    let points = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(index, (x, y))| {
            if x.distance_m != y.distance_m {
                return Err(CompareError::Distance {
                    index,
                    a: x.distance_m,
                    b: y.distance_m,
                });
            }
            let shift = y.mean - x.mean;
            let se = x.std_error.hypot(y.std_error);
            let z = if shift == 0.0 {
                0.0
            } else if se == 0.0 {
                f64::INFINITY.copysign(shift)
            } else {
                shift / se
            };
            Ok(PointComparison {
                distance_m: x.distance_m,
                mean_shift: shift,
                z,
                within: z.abs() <= tolerance_sigma,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(ComparisonReport {
        tolerance_sigma,
        points,
    })
}
