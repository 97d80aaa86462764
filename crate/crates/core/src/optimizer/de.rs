//! Differential evolution, rand/1/bin: donors from three distinct random
//! individuals, binomial crossover with one guaranteed dimension, greedy
//! selection against the parent.

use rand::Rng;

use super::OptimizerConfig;

/// rand/1 mutation: `base + scale * (a - b)`, component-wise.
pub fn donor(base: &[f64], a: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    base.iter()
        .zip(a.iter().zip(b))
        .map(|(&x, (&p, &q))| x + scale * (p - q))
        .collect()
}

fn three_distinct(target: usize, n: usize, rng: &mut impl Rng) -> [usize; 3] {
    let mut picks = [0usize; 3];
    let mut filled = 0;
    while filled < 3 {
        let i = rng.gen_range(0..n);
        if i != target && !picks[..filled].contains(&i) {
            picks[filled] = i;
            filled += 1;
        }
    }
    picks
}

/// Trial vector per target: donor from three distinct others, crossed over
/// binomially at the configured rate, clamped to the bounds. Selection
/// happens in the run loop once the trials are evaluated.
pub fn propose(
    positions: &[Vec<f64>],
    config: &OptimizerConfig,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    let n = positions.len();
    let dims = config.dims();
    (0..n)
        .map(|target| {
            let [r1, r2, r3] = three_distinct(target, n, rng);
            let donor = donor(&positions[r1], &positions[r2], &positions[r3], config.de_scale_factor);
            let forced = rng.gen_range(0..dims);
            (0..dims)
                .map(|d| {
                    let cross = rng.gen::<f64>() < config.de_crossover_rate || d == forced;
                    let v = if cross { donor[d] } else { positions[target][d] };
                    v.clamp(config.lb[d], config.ub[d])
                })
                .collect()
        })
        .collect()
}
