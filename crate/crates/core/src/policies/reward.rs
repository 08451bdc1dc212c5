use crate::frontier::{distance_to_frontier_edges, FrontierSet};
use crate::grid::Cell;
use crate::mapping::FloorMap;
use serde::{Deserialize, Serialize};

/// Constants of the shaped exploration reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardParams {
    /// Below this goal-to-frontier distance (m) the frontier term is 0.005.
    pub d_min: f64,
    /// At or beyond this distance (m) the frontier term is 0.
    pub d_max: f64,
    /// Weight of the frontier term.
    pub lambda_w: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            d_min: 0.5,
            d_max: 5.0,
            lambda_w: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Covered-area gain in m².
    pub r_g: f64,
    pub r_f: f64,
    pub lambda_w: f64,
    pub total: f64,
}

/// Frontier proximity term for a goal at distance `d` meters from the
/// nearest frontier edge.
///
/// Note the jump at `d_min`: just above it the term is `0.05 / d_min`, below
/// it a flat `0.005`.
pub fn frontier_term(d: f64, d_min: f64, d_max: f64) -> f64 {
    if d >= d_max {
        0.0
    } else if d >= d_min {
        0.05 / d
    } else {
        0.005
    }
}

/// Reward for one global step: area gain plus the weighted frontier term of
/// the goal against the frontiers seen before the step.
pub fn compute_reward(
    before: &FloorMap,
    after: &FloorMap,
    goal: Cell,
    fs_before: &FrontierSet,
    params: &RewardParams,
) -> RewardBreakdown {
    assert!(
        0.0 < params.d_min && params.d_min < params.d_max,
        "reward distances must satisfy 0 < d_min < d_max"
    );
    let r_g = after.covered_area() - before.covered_area();
    let r_f = frontier_term(distance_to_frontier_edges(goal, fs_before), params.d_min, params.d_max);
    RewardBreakdown {
        r_g,
        r_f,
        lambda_w: params.lambda_w,
        total: r_g + params.lambda_w * r_f,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontier::detect_frontiers;
    use crate::grid::CellState;

    #[test]
    fn branches() {
        assert_eq!(frontier_term(5.0, 0.5, 5.0), 0.0);
        assert_eq!(frontier_term(f64::INFINITY, 0.5, 5.0), 0.0);
        assert_eq!(frontier_term(2.5, 0.5, 5.0), 0.02);
        assert_eq!(frontier_term(0.5, 0.5, 5.0), 0.1);
        assert_eq!(frontier_term(0.1, 0.5, 5.0), 0.005);
    }

    #[test]
    fn unchanged_map_has_no_area_gain() {
        let mut m = FloorMap::new(0, 16, 0.05);
        for x in 0..8 {
            m.set_state(Cell::new(x, 3), CellState::Free);
        }
        let fs = detect_frontiers(&m, 1);
        let r = compute_reward(&m, &m, Cell::new(0, 3), &fs, &RewardParams::default());
        assert_eq!(r.r_g, 0.0);
        assert_eq!(r.r_f, 0.005);
        assert_eq!(r.total, 0.005);
    }
}
