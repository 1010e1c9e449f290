//! Monte Carlo average over the shared Gaussian component `ξ₀`.
//!
//! Sample `i` draws its `N` normals from a ChaCha8 stream selected by
//! `(seed, i)`, so the set of integrand values does not depend on how rayon
//! schedules the work. Values are collected in index order and reduced
//! sequentially, which makes the result bit-identical for any worker count.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::model::ModelParams;
use crate::pattern::OutputPattern;
use crate::precompute::{Contractions, PrecomputeTables};
use crate::trace::{integrand_from_forms, linear_forms, CrossPairWeight, LinearForms, Order};
use crate::unitary::UnitaryMatrix;

/// Probability estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(samples)`.
    pub stderr: f64,
    pub samples: usize,
    pub order: Order,
    pub seed: u64,
}

impl Estimate {
    /// Sample standard deviation of the scaled integrand values.
    pub fn std_dev(&self) -> f64 {
        self.stderr * (self.samples as f64).sqrt()
    }

    /// Noise can push small probabilities below zero; they are reported as-is.
    pub fn is_negative(&self) -> bool {
        self.mean < 0.0
    }
}

/// How many samples to draw, from which seed, and which expansion to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    pub order: Order,
    pub samples: usize,
    pub seed: u64,
    pub cross_weight: CrossPairWeight,
}

impl SamplingPlan {
    pub fn new(order: Order, samples: usize, seed: u64) -> Self {
        Self {
            order,
            samples,
            seed,
            cross_weight: CrossPairWeight::Half,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(domain("samples", self.samples as f64, "samples >= 2"));
        }
        Ok(())
    }
}

pub fn estimate(
    u: &UnitaryMatrix,
    params: &ModelParams,
    pattern: &OutputPattern,
    order: Order,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let plan = SamplingPlan::new(order, samples, seed);
    let tables = PrecomputeTables::with_contractions(Arc::new(Contractions::new(u)), pattern);
    estimate_with_tables(&tables, u, params, pattern, &plan)
}

/// Fills `out` with `ξ₀` for sample `index`.
pub fn draw_xi0(base: &ChaCha8Rng, index: u64, std_dev: f64, out: &mut [f64]) {
    let mut rng = base.clone();
    rng.set_stream(index);
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = z * std_dev;
    }
}

/// Estimates one pattern's probability with precomputed tables.
pub fn estimate_with_tables(
    tables: &PrecomputeTables,
    u: &UnitaryMatrix,
    params: &ModelParams,
    pattern: &OutputPattern,
    plan: &SamplingPlan,
) -> Result<Estimate> {
    plan.validate()?;
    pattern.check_modes(u.n())?;
    let values = integrand_values(tables, u, params, pattern, plan)?;
    let (mean, stderr) = mean_and_stderr(&values);
    let scale = params.scale(u.n());
    Ok(Estimate {
        mean: mean * scale,
        stderr: stderr * scale,
        samples: plan.samples,
        order: plan.order,
        seed: plan.seed,
    })
}

/// Unscaled integrand values in sample-index order.
pub fn integrand_values(
    tables: &PrecomputeTables,
    u: &UnitaryMatrix,
    params: &ModelParams,
    pattern: &OutputPattern,
    plan: &SamplingPlan,
) -> Result<Vec<f64>> {
    let n = u.n();
    let base = ChaCha8Rng::seed_from_u64(plan.seed);
    let sd = params.var_xi0().sqrt();
    let c = params.c();
    (0..plan.samples as u64)
        .into_par_iter()
        .map_init(
            || {
                let forms = linear_forms(u, &vec![0.0; n]).expect("matching dimensions");
                (vec![0.0; n], forms)
            },
            |(x, forms): &mut (Vec<f64>, LinearForms), i| {
                draw_xi0(&base, i, sd, x);
                x.iter_mut().for_each(|v| *v *= c);
                forms.compute_into(u, x);
                integrand_from_forms(tables, params, forms, pattern, plan.order, plan.cross_weight)
            },
        )
        .collect()
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = ss / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Seed used for `pattern` inside [`estimate_distribution`]: a SplitMix64
/// fold of the base seed with the photon counts.
pub fn pattern_seed(seed: u64, pattern: &OutputPattern) -> u64 {
    let mut h = splitmix64(seed ^ pattern.modes() as u64);
    for &c in pattern.counts() {
        h = splitmix64(h ^ u64::from(c));
    }
    h
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Estimates every pattern with contractions of `U` computed once and a
/// per-pattern seed derived by [`pattern_seed`].
pub fn estimate_distribution(
    u: &UnitaryMatrix,
    params: &ModelParams,
    patterns: &[OutputPattern],
    order: Order,
    samples_per_pattern: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    let plan = SamplingPlan::new(order, samples_per_pattern, seed);
    estimate_distribution_with_plan(u, params, patterns, &plan)
}

pub fn estimate_distribution_with_plan(
    u: &UnitaryMatrix,
    params: &ModelParams,
    patterns: &[OutputPattern],
    plan: &SamplingPlan,
) -> Result<Vec<Estimate>> {
    if patterns.is_empty() {
        return Err(domain("patterns", 0.0, "at least one pattern"));
    }
    plan.validate()?;
    let contractions = Arc::new(Contractions::new(u));
    patterns
        .iter()
        .map(|pattern| {
            let tables = PrecomputeTables::with_contractions(Arc::clone(&contractions), pattern);
            let pattern_plan = SamplingPlan {
                seed: pattern_seed(plan.seed, pattern),
                ..*plan
            };
            estimate_with_tables(&tables, u, params, pattern, &pattern_plan)
        })
        .collect()
}
