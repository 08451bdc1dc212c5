use super::baselines::utility_scores;
use super::{ExplorationPolicy, GlobalGoal, PolicyContext, PolicyError};
use crate::grid::CellState;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Non-learned stand-in for a learned goal policy: samples a frontier edge
/// with probability `softmax(score / T)`, or a uniformly random known free
/// window cell when there is no frontier.
#[derive(Debug, Clone)]
pub struct FrontierGuidedStochastic {
    temperature: f64,
    lambda: f64,
    rng: ChaCha8Rng,
}

impl FrontierGuidedStochastic {
    pub fn new(temperature: f64, lambda: f64, seed: u64) -> Self {
        Self {
            temperature,
            lambda,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// Softmax weights of `scores / temperature`. A non-positive temperature
/// puts all mass on the first maximum.
pub fn softmax_weights(scores: &[f64], temperature: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if temperature <= 0.0 {
        let first = scores.iter().position(|&s| s == max);
        return (0..scores.len()).map(|i| (Some(i) == first) as u8 as f64).collect();
    }
    let w: Vec<f64> = scores.iter().map(|s| ((s - max) / temperature).exp()).collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|x| x / sum).collect()
}

impl ExplorationPolicy for FrontierGuidedStochastic {
    fn name(&self) -> &str {
        "stochastic"
    }

    fn select_goal(&mut self, ctx: &PolicyContext<'_>) -> Result<GlobalGoal, PolicyError> {
        let scored = utility_scores(ctx, self.lambda);
        if !scored.is_empty() {
            let scores: Vec<f64> = scored.iter().map(|&(_, s)| s).collect();
            let weights = softmax_weights(&scores, self.temperature);
            let pick = WeightedIndex::new(&weights)
                .expect("softmax weights are positive")
                .sample(&mut self.rng);
            return Ok(ctx.goal(ctx.frontiers.edges[scored[pick].0].goal));
        }
        let free: Vec<_> = ctx
            .window
            .cells()
            .filter(|&c| ctx.map.state(c) == CellState::Free)
            .collect();
        if free.is_empty() {
            return Ok(ctx.goal(ctx.agent));
        }
        let c = free[self.rng.gen_range(0..free.len())];
        Ok(ctx.goal(c))
    }
}
