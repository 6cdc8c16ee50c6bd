//! Monte Carlo checks of channel hardening and of the rate error made by
//! dropping the "+1" inside the log.
//!
//! Sample `i` of a run with seed `s` is drawn from a ChaCha8 stream keyed by
//! `(s, i)`, so results do not depend on how samples are split across workers.

use crate::model::{avg_rate_exact, avg_rate_hardened, Allocation, ModelError, SystemParams};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;

/// Downlink and uplink fading vectors for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    pub h: Vec<Complex64>,
    pub g: Vec<Complex64>,
    pub reciprocal: bool,
}

impl ChannelSample {
    pub fn h_norm2(&self) -> f64 {
        self.h.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn g_norm2(&self) -> f64 {
        self.g.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// CN(0, 1) vector: independent real and imaginary parts of variance 1/2.
fn cn_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        })
        .collect()
}

/// The `index`-th channel draw of the run keyed by `seed`.
pub fn sample_channel_at(n_t: usize, seed: u64, index: u64, reciprocal: bool) -> ChannelSample {
    let mut rng = rng_for(seed, index);
    let h = cn_vector(&mut rng, n_t);
    let g = if reciprocal {
        h.clone()
    } else {
        cn_vector(&mut rng, n_t)
    };
    ChannelSample { h, g, reciprocal }
}

pub fn sample_channel(n_t: usize, seed: u64, reciprocal: bool) -> ChannelSample {
    sample_channel_at(n_t, seed, 0, reciprocal)
}

/// Spread of ‖h‖²/N_t over independent draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardeningStats {
    pub mean_ratio: f64,
    pub std_ratio: f64,
    pub n_samples: usize,
}

impl HardeningStats {
    /// Sample mean and (n−1)-normalized standard deviation.
    pub fn from_ratios(ratios: &[f64]) -> Self {
        let n = ratios.len();
        assert!(n >= 1, "need at least one sample");
        let mean = ratios.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean_ratio: mean,
            std_ratio: var.sqrt(),
            n_samples: n,
        }
    }
}

pub fn hardening_stats(n_t: usize, m: usize, seed: u64) -> HardeningStats {
    let ratios: Vec<f64> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let h = cn_vector(&mut rng, n_t);
            h.iter().map(|z| z.norm_sqr()).sum::<f64>() / n_t as f64
        })
        .collect();
    HardeningStats::from_ratios(&ratios)
}

/// Relative error of the hardened rate against the exact rate over fading draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateGapStats {
    /// Mean of |R_exact − R_hardened| / R_exact over retained samples.
    pub mean_rel_gap: f64,
    pub max_rel_gap: f64,
    /// Mean exact rate over retained samples, bits/s.
    pub mean_exact_rate: f64,
    pub hardened_rate: f64,
    /// |mean exact − hardened| / mean exact.
    pub ergodic_rel_gap: f64,
    /// Samples dropped because their exact rate was zero.
    pub excluded: usize,
    pub n_samples: usize,
}

/// Rate gap at the deterministic point ‖h‖² = ‖g‖² = N_t.
pub fn deterministic_rate_gap(
    params: &SystemParams,
    alloc: &Allocation,
) -> Result<f64, ModelError> {
    let n = f64::from(params.n_t);
    let exact = avg_rate_exact(params, alloc, n, n)?;
    let hard = avg_rate_hardened(params, alloc)?;
    Ok((exact - hard).abs() / exact)
}

pub fn rate_gap_stats(
    params: &SystemParams,
    alloc: &Allocation,
    m: usize,
    seed: u64,
) -> Result<RateGapStats, ModelError> {
    let hard = avg_rate_hardened(params, alloc)?;
    let n_t = params.n_t as usize;
    let exact: Vec<f64> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let s = sample_channel_at(n_t, seed, i, false);
            avg_rate_exact(params, alloc, s.h_norm2(), s.g_norm2())
        })
        .collect::<Result<_, _>>()?;
    let kept: Vec<f64> = exact.iter().copied().filter(|r| *r > 0.0).collect();
    let excluded = m - kept.len();
    if kept.is_empty() {
        return Ok(RateGapStats {
            mean_rel_gap: f64::NAN,
            max_rel_gap: f64::NAN,
            mean_exact_rate: 0.0,
            hardened_rate: hard,
            ergodic_rel_gap: f64::NAN,
            excluded,
            n_samples: m,
        });
    }
    let gaps: Vec<f64> = kept.iter().map(|r| (r - hard).abs() / r).collect();
    let mean_exact = kept.iter().sum::<f64>() / kept.len() as f64;
    Ok(RateGapStats {
        mean_rel_gap: gaps.iter().sum::<f64>() / gaps.len() as f64,
        max_rel_gap: gaps.iter().copied().fold(0.0, f64::max),
        mean_exact_rate: mean_exact,
        hardened_rate: hard,
        ergodic_rel_gap: (mean_exact - hard).abs() / mean_exact,
        excluded,
        n_samples: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{harvested_power, mrt_weights};

    #[test]
    fn same_seed_same_channel() {
        assert_eq!(sample_channel(16, 42, false), sample_channel(16, 42, false));
        assert_ne!(sample_channel(16, 42, false), sample_channel(16, 43, false));
    }

    #[test]
    fn reciprocal_copies_downlink() {
        let s = sample_channel(32, 7, true);
        assert_eq!(s.h, s.g);
        assert_eq!(s.h.len(), 32);
    }

    #[test]
    fn scalar_draws_have_unit_power() {
        let m = 100_000;
        let powers: Vec<f64> = (0..m)
            .map(|i| sample_channel_at(1, 3, i, true).h[0].norm_sqr())
            .collect();
        let mean = powers.iter().sum::<f64>() / m as f64;
        // |h|² ~ Exp(1): mean 1, variance 1.
        assert!((mean - 1.0).abs() <= 3.0 / (m as f64).sqrt(), "{mean}");
        let var = powers.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn degenerate_ratios() {
        let s = HardeningStats::from_ratios(&[1.0; 10]);
        assert_eq!(s.mean_ratio, 1.0);
        assert_eq!(s.std_ratio, 0.0);
        assert_eq!(s.n_samples, 10);
    }

    #[test]
    fn hardening_concentrates_with_antennas() {
        let s100 = hardening_stats(100, 10_000, 1);
        assert!((s100.mean_ratio - 1.0).abs() <= 0.03);
        assert!((s100.std_ratio - 0.1).abs() <= 0.02, "{}", s100.std_ratio);
        assert!((s100.mean_ratio - 1.0).abs() <= 4.0 / (100.0f64 * 10_000.0).sqrt());
        let s400 = hardening_stats(400, 10_000, 1);
        let ratio = s400.std_ratio / s100.std_ratio;
        assert!((ratio - 0.5).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn stats_are_bitwise_reproducible() {
        assert_eq!(hardening_stats(50, 2000, 9), hardening_stats(50, 2000, 9));
    }

    #[test]
    fn mrt_harvest_matches_norm_per_sample() {
        let params = SystemParams::baseline(0.05, 64);
        for i in 0..50 {
            let s = sample_channel_at(64, 21, i, false);
            let w = mrt_weights(&s.h).unwrap();
            let got = harvested_power(&params, 15.0, &s.h, &w).unwrap();
            let want = params.eta * params.alpha * 15.0 * s.h_norm2();
            assert!((got - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn deterministic_gap_examples() {
        let params = SystemParams::baseline(0.05, 100);
        let a = Allocation::new(15.0, 2.5e-3);
        let gap = deterministic_rate_gap(&params, &a).unwrap();
        let want = (301f64.log2() - 300f64.log2()) / 301f64.log2();
        assert!((gap - want).abs() < 1e-12);
        assert!((gap - 5.8e-4).abs() < 1e-5);

        // N_t = 4 with the SNR argument tuned to 2.
        let small = SystemParams::baseline(0.05, 4);
        let tau = small.slot / 2.0;
        let p = 2.0 / small.snr_gain();
        let gap = deterministic_rate_gap(&small, &Allocation::new(p, tau)).unwrap();
        assert!((gap - (3f64.log2() - 1.0) / 3f64.log2()).abs() < 1e-12);
        assert!(gap > 0.1);
    }

    #[test]
    fn gap_shrinks_with_power() {
        let params = SystemParams::baseline(0.05, 100);
        let mut prev = f64::INFINITY;
        for scale in [0.01, 1.0, 100.0, 10_000.0] {
            let a = Allocation::new(0.15 * scale, 2.5e-3);
            let g = rate_gap_stats(&params, &a, 500, 4).unwrap();
            assert!(g.mean_rel_gap < prev);
            prev = g.mean_rel_gap;
        }
    }

    #[test]
    fn zero_rate_samples_are_excluded() {
        let params = SystemParams::baseline(0.05, 4);
        // Exact rate zero needs zero SNR, which only p → 0 produces.
        let a = Allocation::new(0.0, 2.5e-3);
        let g = rate_gap_stats(&params, &a, 10, 1).unwrap();
        assert_eq!(g.excluded, 10);
        assert!(g.mean_rel_gap.is_nan());
    }
}
