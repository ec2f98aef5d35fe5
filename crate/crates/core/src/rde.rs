//! Population dynamics for the recursive distributional equation
//! `nu = Theta_{F,F}(nu)` and the root functional `Theta_{F_*,F}(nu)`.
//!
//! One draw of `Theta_{F,F'}(nu)` is
//!
//! ```text
//! Y = 1 / (1 + sum_{i=1}^{N} (sum_{j=1}^{N'_i} X_ij)^{-1}),  N ~ F, N'_i ~ F', X_ij ~ nu
//! ```
//!
//! with `1/0 = inf` and `1/inf = 0`. An empty inner sum makes `Y` exactly
//! zero; `N = 0` makes it exactly one. Zeros are stored as `0.0` and are the
//! only way a sample can be zero.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity;
use crate::degree::{DegreeModel, DegreeSampler};
use crate::error::{Error, Result};
use crate::rng::{self, CHUNK, TAG_RDE, TAG_ROOT};
use crate::stats::Estimate;

pub const DEFAULT_POOL: usize = 100_000;
pub const DEFAULT_ITERS: usize = 300;
pub const BATCHES: usize = 20;

/// Empirical approximation of a law on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    samples: Vec<f64>,
    zeros: usize,
    seed: u64,
}

impl Population {
    pub fn new(samples: Vec<f64>, seed: u64) -> Self {
        assert!(!samples.is_empty(), "population must be nonempty");
        debug_assert!(samples.iter().all(|x| (0.0..=1.0).contains(x)));
        let zeros = samples.iter().filter(|&&x| x == 0.0).count();
        Self {
            samples,
            zeros,
            seed,
        }
    }

    /// `round(p * pool)` samples at 1.0, the rest at 0.0.
    pub fn bernoulli(p: f64, pool: usize, seed: u64) -> Self {
        let ones = ((p.clamp(0.0, 1.0) * pool as f64).round() as usize).min(pool);
        let mut samples = vec![0.0; pool];
        samples[..ones].fill(1.0);
        Self::new(samples, seed)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn zero_mass(&self) -> f64 {
        self.zeros as f64 / self.samples.len() as f64
    }

    /// `nu({0}^c)`.
    pub fn nonzero_mass(&self) -> f64 {
        1.0 - self.zero_mass()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.samples.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let v = self.sorted();
        let idx = ((q.clamp(0.0, 1.0) * (v.len() - 1) as f64).round()) as usize;
        v[idx]
    }
}

#[derive(Default)]
struct DrawStats {
    floored: usize,
}

/// One draw of `Y`. All random numbers are consumed regardless of the pool
/// values, so two populations stepped with the same stream stay coupled.
#[inline]
fn draw<R: Rng>(
    pool: &[f64],
    outer: &DegreeSampler,
    inner: &DegreeSampler,
    rng: &mut R,
    stats: &mut DrawStats,
) -> f64 {
    let n = outer.sample(rng);
    if n == 0 {
        return 1.0;
    }
    let mut inv_sum = 0.0f64;
    let mut hit_zero = false;
    for _ in 0..n {
        let k = inner.sample(rng);
        let mut s = 0.0f64;
        for _ in 0..k {
            s += pool[rng.random_range(0..pool.len())];
        }
        if s == 0.0 {
            hit_zero = true;
        } else {
            inv_sum += 1.0 / s;
        }
    }
    if hit_zero {
        return 0.0;
    }
    let y = 1.0 / (1.0 + inv_sum);
    if y == 0.0 {
        // Positive but below the double range: keep it off the zero atom.
        stats.floored += 1;
        f64::MIN_POSITIVE
    } else {
        y
    }
}

fn apply(
    pool: &[f64],
    out_len: usize,
    outer: &DegreeSampler,
    inner: &DegreeSampler,
    seed: u64,
    tags: [u64; 2],
) -> (Vec<f64>, usize) {
    let mut out = vec![0.0; out_len];
    let floored: usize = out
        .par_chunks_mut(CHUNK)
        .enumerate()
        .map(|(chunk, slot)| {
            let mut rng = rng::stream(seed, &[tags[0], tags[1], chunk as u64]);
            let mut stats = DrawStats::default();
            for y in slot.iter_mut() {
                *y = draw(pool, outer, inner, &mut rng, &mut stats);
            }
            stats.floored
        })
        .sum();
    (out, floored)
}

/// One population-dynamics sweep: a fresh pool of the same size drawn from
/// `Theta_{outer,inner}(pop)`. The stream is keyed by `(seed, iteration)`.
pub fn theta_step(
    pop: &Population,
    outer: &DegreeSampler,
    inner: &DegreeSampler,
    iteration: u64,
) -> Population {
    let (samples, _) = apply(&pop.samples, pop.len(), outer, inner, pop.seed, [TAG_RDE, iteration]);
    Population::new(samples, pop.seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdeTraceRow {
    pub iteration: usize,
    pub nonzero_mass: f64,
    pub mean: f64,
}

#[derive(Clone, Debug)]
pub struct RdeSolution {
    pub population: Population,
    pub start_p: f64,
    pub trace: Vec<RdeTraceRow>,
    /// Set when `start_p` is not a fixed point of the double-bar map.
    pub warning: Option<String>,
    /// Draws that were positive but underflowed and were kept at the smallest normal double.
    pub floored: usize,
}

/// Iterates `Theta_{F,F}` from `Bernoulli(start_p)`.
pub fn solve_rde(
    model: &DegreeModel,
    start_p: f64,
    iters: usize,
    pool: usize,
    seed: u64,
) -> Result<RdeSolution> {
    if pool == 0 {
        return Err(Error::InvalidArgument("pool must be positive".into()));
    }
    if !(0.0..=1.0).contains(&start_p) {
        return Err(Error::InvalidArgument(format!("start_p {start_p} outside [0,1]")));
    }
    let offspring = model.size_biased()?;
    let sampler = offspring.sampler();
    let drift = (cavity::x_bar2(model, start_p) - start_p).abs();
    let warning = (drift > 1e-8).then(|| {
        format!("start_p = {start_p} is not a fixed point of the double-bar map (drift {drift:.3e})")
    });

    let mut pop = Population::bernoulli(start_p, pool, seed);
    let mut trace = vec![RdeTraceRow {
        iteration: 0,
        nonzero_mass: pop.nonzero_mass(),
        mean: pop.mean(),
    }];
    let mut floored = 0;
    for it in 1..=iters {
        let (samples, fl) = apply(&pop.samples, pool, &sampler, &sampler, seed, [TAG_RDE, it as u64]);
        floored += fl;
        pop = Population::new(samples, seed);
        trace.push(RdeTraceRow {
            iteration: it,
            nonzero_mass: pop.nonzero_mass(),
            mean: pop.mean(),
        });
    }
    Ok(RdeSolution {
        population: pop,
        start_p,
        trace,
        warning,
        floored,
    })
}

/// Mean of one application of `Theta_{F_*,F}` to `pop`, with a batch-means
/// standard error.
pub fn root_mean(pop: &Population, model: &DegreeModel, resamples: usize, seed: u64) -> Result<Estimate> {
    if resamples == 0 {
        return Err(Error::InvalidArgument("resamples must be positive".into()));
    }
    let offspring = model.size_biased()?;
    let (values, _) = apply(
        pop.samples(),
        resamples,
        &model.sampler(),
        &offspring.sampler(),
        seed,
        [TAG_ROOT, 0],
    );
    Ok(Estimate::from_batches(&values, BATCHES))
}
