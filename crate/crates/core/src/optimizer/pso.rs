//! Particle swarm: positions pulled toward each particle's own best and the
//! swarm's best, with fresh uniform draws per particle per dimension.

use rand::Rng;

use super::OptimizerConfig;

/// One velocity component:
/// `w*v + c1*r1*(personal - x) + c2*r2*(global - x)`.
pub fn velocity_update(
    inertia: f64,
    cognitive: f64,
    social: f64,
    r1: f64,
    r2: f64,
    velocity: f64,
    position: f64,
    personal_best: f64,
    global_best: f64,
) -> f64 {
    inertia * velocity
        + cognitive * r1 * (personal_best - position)
        + social * r2 * (global_best - position)
}

#[derive(Debug, Clone)]
pub struct PsoState {
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub personal_best: Vec<Vec<f64>>,
    pub personal_best_u: Vec<f64>,
    pub global_best: Vec<f64>,
    pub global_best_u: f64,
    pub iteration: usize,
}

impl PsoState {
    /// Particles start at the evaluated initial positions with zero
    /// velocity; personal bests are the starting points themselves.
    pub fn new(positions: Vec<Vec<f64>>, us: &[f64]) -> Self {
        assert_eq!(positions.len(), us.len());
        let dims = positions[0].len();
        let velocities = vec![vec![0.0; dims]; positions.len()];
        let personal_best = positions.clone();
        let personal_best_u = us.to_vec();
        let mut g = 0;
        for (i, &u) in us.iter().enumerate() {
            if u < us[g] {
                g = i;
            }
        }
        PsoState {
            global_best: positions[g].clone(),
            global_best_u: us[g],
            positions,
            velocities,
            personal_best,
            personal_best_u,
            iteration: 0,
        }
    }

    /// Move every particle one step; positions are clamped to the bounds.
    /// Bests are updated separately, after the new positions are evaluated.
    pub fn step(&mut self, config: &OptimizerConfig, rng: &mut impl Rng) {
        for i in 0..self.positions.len() {
            for d in 0..config.dims() {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let v = velocity_update(
                    config.pso_inertia,
                    config.pso_cognitive,
                    config.pso_social,
                    r1,
                    r2,
                    self.velocities[i][d],
                    self.positions[i][d],
                    self.personal_best[i][d],
                    self.global_best[d],
                );
                self.velocities[i][d] = v;
                self.positions[i][d] =
                    (self.positions[i][d] + v).clamp(config.lb[d], config.ub[d]);
            }
        }
        self.iteration += 1;
    }

    /// Fold freshly evaluated objective values into the personal and global
    /// bests.
    pub fn update_bests(&mut self, us: &[f64]) {
        assert_eq!(us.len(), self.positions.len());
        for (i, &u) in us.iter().enumerate() {
            if u < self.personal_best_u[i] {
                self.personal_best_u[i] = u;
                self.personal_best[i] = self.positions[i].clone();
                if u < self.global_best_u {
                    self.global_best_u = u;
                    self.global_best = self.positions[i].clone();
                }
            }
        }
    }
}
