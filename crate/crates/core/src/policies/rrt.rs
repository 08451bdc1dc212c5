use super::{ExplorationPolicy, GlobalGoal, PolicyContext, PolicyError};
use crate::grid::{line_cells, Cell, CellState};
use crate::mapping::FloorMap;
use crate::planner::{segment_clear, PlanningGrid, UnknownPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrtParams {
    pub n_nodes: usize,
    /// Maximum edge length in meters.
    pub step_len: f64,
    /// Decay of the branch score with tree path length, 1/m.
    pub lambda: f64,
    /// Samples drawn per requested node before giving up.
    pub samples_per_node: usize,
}

impl Default for RrtParams {
    fn default() -> Self {
        Self {
            n_nodes: 40,
            step_len: 0.5,
            lambda: 0.25,
            samples_per_node: 30,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    cell: Cell,
    /// Tree path length from the root in meters.
    cost: f64,
}

/// Receding-horizon next-best-view: grows an RRT in known free space and
/// returns the node with the highest `gain · e^{−λ·path}`.
#[derive(Debug, Clone)]
pub struct RrtNbv {
    params: RrtParams,
    rng: ChaCha8Rng,
    zero_gain: bool,
}

impl RrtNbv {
    pub fn new(params: RrtParams, seed: u64) -> Self {
        Self {
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            zero_gain: false,
        }
    }

    /// Whether the last selection found no node with positive gain (the root
    /// was returned).
    pub fn last_was_zero_gain(&self) -> bool {
        self.zero_gain
    }

    fn grow(&mut self, ctx: &PolicyContext<'_>) -> Result<Vec<Node>, PolicyError> {
        let r = ctx.map.resolution();
        let mut grid = PlanningGrid::from_map(ctx.map, UnknownPolicy::Blocked, 1);
        grid.set_traversable(ctx.agent, true);
        let step_cells = (self.params.step_len / r).max(1.0);
        let mut nodes = vec![Node {
            cell: ctx.agent,
            cost: 0.0,
        }];
        let attempts = self.params.n_nodes.max(1) * self.params.samples_per_node.max(1);
        let w = ctx.window;
        for _ in 0..attempts {
            if nodes.len() > self.params.n_nodes {
                break;
            }
            let sample = (
                self.rng.gen_range(w.x0..w.x0 + w.side) as f64,
                self.rng.gen_range(w.y0..w.y0 + w.side) as f64,
            );
            let nearest = nodes
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let da = (a.1.cell.x as f64 - sample.0).hypot(a.1.cell.y as f64 - sample.1);
                    let db = (b.1.cell.x as f64 - sample.0).hypot(b.1.cell.y as f64 - sample.1);
                    da.total_cmp(&db)
                })
                .map(|(i, _)| i)
                .expect("tree has a root");
            let from = nodes[nearest].cell;
            let (dx, dy) = (sample.0 - from.x as f64, sample.1 - from.y as f64);
            let d = dx.hypot(dy);
            if d < 1.0 {
                continue;
            }
            let t = step_cells.min(d) / d;
            let nx = (from.x as f64 + dx * t).round();
            let ny = (from.y as f64 + dy * t).round();
            if nx < 0.0 || ny < 0.0 {
                continue;
            }
            let cell = w.clamp(Cell::new(nx as usize, ny as usize));
            if cell == from
                || !grid.is_traversable(cell)
                || nodes.iter().any(|n| n.cell == cell)
                || !segment_clear(&grid, from, cell)
            {
                continue;
            }
            nodes.push(Node {
                cell,
                cost: nodes[nearest].cost + from.distance(cell) * r,
            });
        }
        if nodes.len() < 2 {
            return Err(PolicyError::TreeGrowthFailed { attempts });
        }
        Ok(nodes)
    }
}

/// Unknown cells visible from `origin` within `range` meters, casting rays
/// over the full circle. Occupied cells block rays, unknown cells do not.
pub fn visible_unknown(map: &FloorMap, origin: Cell, range: f64) -> usize {
    let size = map.size() as i64;
    let reach = range / map.resolution();
    let n_rays = ((2.0 * PI * reach * 1.5).ceil() as usize).max(8);
    let mut seen = std::collections::HashSet::new();
    let (ox, oy) = (origin.x as i64, origin.y as i64);
    for k in 0..n_rays {
        let a = 2.0 * PI * k as f64 / n_rays as f64;
        let end = (
            ox + (reach * a.cos()).round() as i64,
            oy + (reach * a.sin()).round() as i64,
        );
        for (x, y) in line_cells((ox, oy), end).into_iter().skip(1) {
            if x < 0 || y < 0 || x >= size || y >= size {
                break;
            }
            let c = Cell::new(x as usize, y as usize);
            match map.state(c) {
                CellState::Occupied => break,
                CellState::Unknown => {
                    seen.insert(c);
                }
                CellState::Free => {}
            }
        }
    }
    seen.len()
}

impl ExplorationPolicy for RrtNbv {
    fn name(&self) -> &str {
        "rrt-nbv"
    }

    fn select_goal(&mut self, ctx: &PolicyContext<'_>) -> Result<GlobalGoal, PolicyError> {
        let nodes = self.grow(ctx)?;
        let mut best = (0.0, 0usize);
        for (i, node) in nodes.iter().enumerate() {
            if ctx.is_blacklisted(node.cell) {
                continue;
            }
            let gain = visible_unknown(ctx.map, node.cell, ctx.sensor_range) as f64;
            let score = gain * (-self.params.lambda * node.cost).exp();
            if score > best.0 {
                best = (score, i);
            }
        }
        self.zero_gain = best.0 == 0.0;
        if self.zero_gain {
            log::debug!("rrt-nbv: every node has zero gain, returning the root");
        }
        Ok(ctx.goal(nodes[best.1].cell))
    }
}
