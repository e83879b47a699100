//! Seeded random variates and the Gaussian tail function.
//!
//! Every random draw in the simulator comes from a [`SimRng`] obtained from a
//! [`StreamSeed`]. A stream is a pure function of `(master_seed, stream_id)`,
//! and per-trial stream ids pack the distance index, trial index and the
//! purpose of the draw, so results never depend on execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::{erfc, erfc_inv};

/// Generator type used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl StreamSeed {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// What a per-trial stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    ObstaclePosition = 1,
    NlosDraw = 2,
    ObstacleHeight = 3,
    Shadowing = 4,
    GpsTx = 5,
    GpsRx = 6,
}

const TRIAL_BITS: u32 = 40;
const PURPOSE_BITS: u32 = 8;

/// Coordinates of a single Monte Carlo trial.
///
/// Streams are keyed by `(distance_index, trial_index, purpose)` and not by
/// radio or antenna configuration, so different link configurations evaluated
/// at the same trial see the same geometry draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialSeed {
    pub master_seed: u64,
    pub distance_index: u32,
    pub trial_index: u64,
}

impl TrialSeed {
    pub fn new(master_seed: u64, distance_index: u32, trial_index: u64) -> Self {
        assert!(
            distance_index < 1 << (64 - TRIAL_BITS - PURPOSE_BITS),
            "distance index {distance_index} out of range"
        );
        assert!(
            trial_index < 1 << TRIAL_BITS,
            "trial index {trial_index} out of range"
        );
        Self {
            master_seed,
            distance_index,
            trial_index,
        }
    }

    /// Injective packing of (distance index, purpose, trial index).
    pub fn stream_id(&self, purpose: Purpose) -> u64 {
        (u64::from(self.distance_index) << (TRIAL_BITS + PURPOSE_BITS))
            | ((purpose as u64) << TRIAL_BITS)
            | self.trial_index
    }

    pub fn stream(&self, purpose: Purpose) -> StreamSeed {
        StreamSeed::new(self.master_seed, self.stream_id(purpose))
    }

    pub fn rng(&self, purpose: Purpose) -> SimRng {
        self.stream(purpose).rng()
    }
}

/// Standard normal upper tail `Q(x) = ½·erfc(x/√2)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`q_function`] for `p` in (0, 1).
pub fn q_inverse(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Uniform draw on `[lo, hi)`; returns `lo` when the interval is empty.
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    if hi <= lo {
        return lo;
    }
    let u: f64 = rng.random();
    let x = lo + (hi - lo) * u;
    // lo + (hi - lo)·u can round up to hi
    if x >= hi {
        hi.next_down()
    } else {
        x
    }
}

/// Gaussian draw. `std == 0` returns `mean` without consuming randomness.
pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, std: f64) -> f64 {
    debug_assert!(std >= 0.0);
    if std == 0.0 {
        return mean;
    }
    let z: f64 = rng.sample(StandardNormal);
    mean + std * z
}

/// Below this acceptance probability the truncated sampler switches from
/// rejection to tail inversion.
const REJECTION_MIN_ACCEPTANCE: f64 = 0.05;
const MAX_REJECTIONS: usize = 256;

/// Gaussian draw conditioned on the result being at least `floor`.
///
/// Uses rejection while the acceptance probability is reasonable and exact
/// tail inversion otherwise; a rejection run that exhausts its budget also
/// falls back to inversion.
pub fn sample_truncated_normal_above<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    std: f64,
    floor: f64,
) -> f64 {
    debug_assert!(std > 0.0);
    if floor == f64::NEG_INFINITY {
        return sample_normal(rng, mean, std);
    }
    let a = (floor - mean) / std;
    let tail = q_function(a);
    if tail >= REJECTION_MIN_ACCEPTANCE {
        for _ in 0..MAX_REJECTIONS {
            let x = sample_normal(rng, mean, std);
            if x >= floor {
                return x;
            }
        }
    }
    // Q(z) = u·Q(a) with u in (0, 1] gives z >= a.
    let u = 1.0 - rng.random::<f64>();
    let z = q_inverse(u * tail);
    if z.is_finite() {
        (mean + std * z).max(floor)
    } else {
        floor
    }
}

/// Gamma draw with shape `alpha` and scale `beta` (mean `alpha·beta`).
///
/// Marsaglia–Tsang squeeze/rejection for `alpha >= 1`; smaller shapes are
/// boosted with `Gamma(alpha) = Gamma(alpha + 1)·U^(1/alpha)`.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, alpha: f64, beta: f64) -> f64 {
    debug_assert!(alpha > 0.0 && beta > 0.0);
    if alpha < 1.0 {
        let boost = (1.0 - rng.random::<f64>()).powf(1.0 / alpha);
        return sample_gamma(rng, alpha + 1.0, beta) * boost;
    }
    let d = alpha - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x: f64 = rng.sample(StandardNormal);
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v * beta;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v * beta;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rng(id: u64) -> SimRng {
        StreamSeed::new(42, id).rng()
    }

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn q_function_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert_abs_diff_eq!(q_function(-2.287), 0.98890, epsilon = 1e-4);
        assert_abs_diff_eq!(q_function(6.0), 9.866e-10, epsilon = 1e-12);
        assert_eq!(q_function(f64::NEG_INFINITY), 1.0);
        assert_eq!(q_function(f64::INFINITY), 0.0);
    }

    #[test]
    fn q_function_is_monotone() {
        let xs: Vec<f64> = (-800..=800).map(|i| f64::from(i) / 100.0).collect();
        assert!(xs.windows(2).all(|w| q_function(w[1]) <= q_function(w[0])));
    }

    #[test]
    fn q_inverse_round_trips() {
        for p in [1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9, 0.999] {
            assert_abs_diff_eq!(q_function(q_inverse(p)) / p, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn uniform_contract() {
        let mut r = rng(1);
        assert_eq!(sample_uniform(&mut r, 0.0, 0.0), 0.0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_uniform(&mut r, 0.0, 100.0))
            .collect();
        assert!(xs.iter().all(|&x| (0.0..100.0).contains(&x)));
        let us: Vec<f64> = (0..100_000)
            .map(|_| sample_uniform(&mut r, 0.0, 1.0))
            .collect();
        assert_abs_diff_eq!(moments(&us).0, 0.5, epsilon = 0.01);
    }

    #[test]
    fn normal_moments() {
        let mut r = rng(2);
        assert_eq!(sample_normal(&mut r, 1.5, 0.0), 1.5);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_normal(&mut r, 1.50, 0.084))
            .collect();
        let (m, v) = moments(&xs);
        assert_abs_diff_eq!(m, 1.50, epsilon = 0.002);
        assert_abs_diff_eq!(v.sqrt(), 0.084, epsilon = 0.002);
    }

    #[test]
    fn normal_probability_integral_transform_is_uniform() {
        let mut r = rng(3);
        let mut us: Vec<f64> = (0..10_000)
            .map(|_| q_function(sample_normal(&mut r, 0.0, 1.0)))
            .collect();
        us.sort_by(f64::total_cmp);
        let n = us.len() as f64;
        let ks = us
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let lo = i as f64 / n;
                let hi = (i + 1) as f64 / n;
                (u - lo).abs().max((hi - u).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn truncated_normal_half_normal_mean() {
        let mut r = rng(4);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_truncated_normal_above(&mut r, 1.5, 0.084, 1.5))
            .collect();
        assert!(xs.iter().all(|&x| x >= 1.5));
        let expected = 1.5 + 0.084 * (2.0 / std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(moments(&xs).0, expected, epsilon = 0.002);
    }

    #[test]
    fn truncated_normal_respects_floor_in_far_tail() {
        let mut r = rng(5);
        // Q(10) ~ 7.6e-24: inversion path
        for _ in 0..1_000_000 {
            let x = sample_truncated_normal_above(&mut r, 0.0, 1.0, 10.0);
            assert!(x >= 10.0);
        }
        for _ in 0..1_000_000 {
            let x = sample_truncated_normal_above(&mut r, 1.5, 0.084, 1.52);
            assert!(x >= 1.52);
        }
    }

    #[test]
    fn truncated_normal_without_floor_is_plain_normal() {
        let mut a = rng(6);
        let mut b = rng(6);
        for _ in 0..100 {
            assert_eq!(
                sample_truncated_normal_above(&mut a, 1.0, 2.0, f64::NEG_INFINITY),
                sample_normal(&mut b, 1.0, 2.0)
            );
        }
    }

    #[test]
    fn gamma_moments() {
        let mut r = rng(7);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_gamma(&mut r, 3.14733, 0.462432))
            .collect();
        assert!(xs.iter().all(|&x| x >= 0.0));
        let (m, v) = moments(&xs);
        assert_abs_diff_eq!(m, 1.4556, epsilon = 0.01);
        assert_abs_diff_eq!(v, 0.6731, epsilon = 0.02);
    }

    #[test]
    fn gamma_shape_one_is_exponential() {
        let mut r = rng(8);
        let beta = 0.462432;
        let n = 100_000;
        let below = (0..n)
            .filter(|_| sample_gamma(&mut r, 1.0, beta) <= beta)
            .count();
        assert_abs_diff_eq!(
            below as f64 / n as f64,
            1.0 - (-1.0f64).exp(),
            epsilon = 0.01
        );
    }

    #[test]
    fn gamma_small_shape_mean() {
        let mut r = rng(9);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_gamma(&mut r, 0.5, 2.0))
            .collect();
        assert_abs_diff_eq!(moments(&xs).0, 1.0, epsilon = 0.02);
    }

    #[test]
    fn equal_seeds_give_identical_sequences() {
        let mut a = StreamSeed::new(7, 99).rng();
        let mut b = StreamSeed::new(7, 99).rng();
        for _ in 0..1000 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let mut a = StreamSeed::new(7, 1).rng();
        let mut b = StreamSeed::new(7, 2).rng();
        let n = 100_000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (a.random::<f64>(), b.random::<f64>()))
            .collect();
        let (ma, mb) = pairs
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p.0, y + p.1));
        let (ma, mb) = (ma / n as f64, mb / n as f64);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for &(x, y) in &pairs {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        let rho = sab / (saa * sbb).sqrt();
        assert!(rho.abs() < 0.01, "rho = {rho}");
    }

    #[test]
    fn trial_stream_ids_are_injective() {
        let mut ids = std::collections::HashSet::new();
        let purposes = [
            Purpose::ObstaclePosition,
            Purpose::NlosDraw,
            Purpose::ObstacleHeight,
            Purpose::Shadowing,
            Purpose::GpsTx,
            Purpose::GpsRx,
        ];
        for d in 0..8 {
            for t in 0..64 {
                for p in purposes {
                    assert!(ids.insert(TrialSeed::new(1, d, t).stream_id(p)));
                }
            }
        }
    }
}
