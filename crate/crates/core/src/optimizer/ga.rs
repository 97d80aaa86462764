//! Real-coded genetic algorithm: tournament selection of size two, uniform
//! crossover, per-gene Gaussian mutation with sigma at 10% of the bound
//! width, and elitism of one.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::OptimizerConfig;

/// Fraction of the per-dimension bound width used as the mutation sigma.
pub const MUTATION_SIGMA_FRACTION: f64 = 0.1;

/// Uniform real crossover: per gene, child 1 takes the point a fraction
/// `w[d]` of the way from parent 1 to parent 2 and child 2 the mirrored
/// point. Binary weights reduce to plain gene swapping; continuous weights
/// let offspring land between their parents, which is what gives the GA
/// sub-grid precision.
pub fn crossover_with_weights(p1: &[f64], p2: &[f64], weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = Vec::with_capacity(p1.len());
    let mut c2 = Vec::with_capacity(p1.len());
    for d in 0..p1.len() {
        let w = weights[d];
        c1.push((1.0 - w) * p1[d] + w * p2[d]);
        c2.push(w * p1[d] + (1.0 - w) * p2[d]);
    }
    (c1, c2)
}

/// Gene-swap crossover by explicit mask: where `mask[d]` is true the first
/// child takes parent 2's gene (and the second child parent 1's). The
/// binary edge case of [`crossover_with_weights`].
pub fn crossover_with_mask(p1: &[f64], p2: &[f64], mask: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let weights: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    crossover_with_weights(p1, p2, &weights)
}

/// Binary tournament on the minimized objective; ties keep the first pick.
fn tournament(us: &[f64], rng: &mut impl Rng) -> usize {
    let a = rng.gen_range(0..us.len());
    let b = rng.gen_range(0..us.len());
    if us[a] <= us[b] {
        a
    } else {
        b
    }
}

fn mutate(child: &mut [f64], config: &OptimizerConfig, rng: &mut impl Rng) {
    for d in 0..child.len() {
        if rng.gen::<f64>() < config.ga_mutation_prob {
            let sigma = MUTATION_SIGMA_FRACTION * (config.ub[d] - config.lb[d]);
            let normal = Normal::new(0.0, sigma).expect("sigma is positive");
            child[d] += normal.sample(rng);
        }
        child[d] = child[d].clamp(config.lb[d], config.ub[d]);
    }
}

/// One generation's offspring: the index of the elite parent (kept as-is)
/// plus `N - 1` children bred by tournament selection, uniform crossover at
/// the configured rate, and Gaussian mutation.
pub fn propose(
    positions: &[Vec<f64>],
    us: &[f64],
    config: &OptimizerConfig,
    rng: &mut impl Rng,
) -> (usize, Vec<Vec<f64>>) {
    let n = positions.len();
    let mut elite = 0;
    for (i, &u) in us.iter().enumerate() {
        if u < us[elite] {
            elite = i;
        }
    }

    let mut offspring = Vec::with_capacity(n - 1);
    while offspring.len() < n - 1 {
        let a = tournament(us, rng);
        let b = tournament(us, rng);
        let (mut c1, mut c2) = if rng.gen::<f64>() < config.ga_crossover_rate {
            let weights: Vec<f64> = (0..config.dims()).map(|_| rng.gen()).collect();
            crossover_with_weights(&positions[a], &positions[b], &weights)
        } else {
            (positions[a].clone(), positions[b].clone())
        };
        mutate(&mut c1, config, rng);
        mutate(&mut c2, config, rng);
        offspring.push(c1);
        if offspring.len() < n - 1 {
            offspring.push(c2);
        }
    }
    (elite, offspring)
}
