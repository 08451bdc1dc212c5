use super::{ExplorationPolicy, GlobalGoal, PolicyContext, PolicyError};
use crate::frontier::{information_gain, utility_from};

/// Greedy frontier exploration: the edge with the smallest geodesic cost.
#[derive(Debug, Clone, Default)]
pub struct NearestFrontier;

impl ExplorationPolicy for NearestFrontier {
    fn name(&self) -> &str {
        "nearest"
    }

    fn select_goal(&mut self, ctx: &PolicyContext<'_>) -> Result<GlobalGoal, PolicyError> {
        let field = ctx.optimistic_field().ok_or(PolicyError::NoFrontier)?;
        let mut best: Option<(f64, usize)> = None;
        for (i, edge) in ctx.candidate_edges() {
            let cost = field.value(edge.goal);
            if cost.is_finite() && best.map_or(true, |(c, _)| cost < c) {
                best = Some((cost, i));
            }
        }
        let (_, i) = best.ok_or(PolicyError::NoFrontier)?;
        Ok(ctx.goal(ctx.frontiers.edges[i].goal))
    }
}

/// Utility frontier exploration: maximizes `U(f) · e^{−λC(f)}`.
#[derive(Debug, Clone)]
pub struct UtilityFrontier {
    lambda: f64,
}

impl UtilityFrontier {
    pub fn new(lambda: f64) -> Self {
        assert!(lambda >= 0.0, "lambda must be non-negative");
        Self { lambda }
    }
}

/// Scores of the candidate edges as `(edge index, score)`; unreachable edges
/// are omitted.
pub(super) fn utility_scores(ctx: &PolicyContext<'_>, lambda: f64) -> Vec<(usize, f64)> {
    let Some(field) = ctx.optimistic_field() else {
        return Vec::new();
    };
    ctx.candidate_edges()
        .filter_map(|(i, edge)| {
            let cost = field.value(edge.goal);
            cost.is_finite().then(|| {
                let gain = information_gain(ctx.map, edge, ctx.sensor_range) as f64;
                (i, utility_from(gain, cost, lambda))
            })
        })
        .collect()
}

impl ExplorationPolicy for UtilityFrontier {
    fn name(&self) -> &str {
        "utility"
    }

    fn select_goal(&mut self, ctx: &PolicyContext<'_>) -> Result<GlobalGoal, PolicyError> {
        let mut best: Option<(f64, usize)> = None;
        for (i, score) in utility_scores(ctx, self.lambda) {
            if best.map_or(true, |(s, _)| score > s) {
                best = Some((score, i));
            }
        }
        let (_, i) = best.ok_or(PolicyError::NoFrontier)?;
        Ok(ctx.goal(ctx.frontiers.edges[i].goal))
    }
}
