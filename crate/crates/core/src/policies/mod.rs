//! Global-goal policies, the shaped reward and the step environment used to
//! drive externally trained policies.

mod baselines;
mod env;
mod external;
mod reward;
mod rrt;
mod stochastic;

pub use baselines::{NearestFrontier, UtilityFrontier};
pub use env::{EnvConfig, EnvInfo, EnvTransition, ExplorationEnv, GLOBAL_STEP};
pub use external::{encode_act, format_float, ExternalConfig, ExternalPolicy};
pub use reward::{compute_reward, frontier_term, RewardBreakdown, RewardParams};
pub use rrt::{RrtNbv, RrtParams};
pub use stochastic::FrontierGuidedStochastic;

use crate::frontier::{FrontierEdge, FrontierSet, DEFAULT_LAMBDA, DEFAULT_MIN_EDGE_CELLS};
use crate::grid::Cell;
use crate::mapping::{build_observation, FloorMap, ObservationStack};
use crate::planner::{solve_fmm, DistanceField, PlanningGrid, UnknownPolicy};
use crate::world::Pose;
use serde::{Deserialize, Serialize};
use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Default local window side in cells.
pub const DEFAULT_WINDOW: usize = 240;
/// Goals closer than this many cells to a blacklisted cell are skipped.
pub const BLACKLIST_RADIUS: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("no frontier left to explore")]
    NoFrontier,
    #[error("tree growth failed after {attempts} samples")]
    TreeGrowthFailed { attempts: usize },
    #[error("external policy timed out after {0} ms")]
    Timeout(u64),
    #[error("malformed response from external policy: {0}")]
    MalformedResponse(String),
    #[error("external policy i/o failed: {0}")]
    Io(String),
}

/// A target cell in global map coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalGoal {
    pub cell: Cell,
    pub issued_at: usize,
}

/// The `side × side` square of cells goals are drawn from, positioned around
/// the agent and shifted to stay inside the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalWindow {
    pub x0: usize,
    pub y0: usize,
    pub side: usize,
}

impl LocalWindow {
    pub fn around(agent: Cell, side: usize, map_size: usize) -> Self {
        let side = side.clamp(1, map_size);
        let place = |a: usize| a.saturating_sub(side / 2).min(map_size - side);
        Self {
            x0: place(agent.x),
            y0: place(agent.y),
            side,
        }
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.y >= self.y0 && c.x < self.x0 + self.side && c.y < self.y0 + self.side
    }

    /// Nearest cell of the window.
    pub fn clamp(&self, c: Cell) -> Cell {
        Cell::new(
            c.x.clamp(self.x0, self.x0 + self.side - 1),
            c.y.clamp(self.y0, self.y0 + self.side - 1),
        )
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.y0..self.y0 + self.side)
            .flat_map(move |y| (self.x0..self.x0 + self.side).map(move |x| Cell::new(x, y)))
    }
}

/// Everything a policy may look at when choosing a goal. Derived data is
/// computed lazily and shared between calls on the same context.
pub struct PolicyContext<'a> {
    pub map: &'a FloorMap,
    pub pose: Pose,
    pub agent: Cell,
    pub frontiers: &'a FrontierSet,
    pub window: LocalWindow,
    pub step: usize,
    /// Sensor range in meters, the radius of frontier information gain.
    pub sensor_range: f64,
    pub blacklist: &'a [Cell],
    observation_side: usize,
    field: OnceCell<Option<DistanceField>>,
    observation: OnceCell<ObservationStack>,
}

impl<'a> PolicyContext<'a> {
    pub fn new(
        map: &'a FloorMap,
        pose: Pose,
        frontiers: &'a FrontierSet,
        window_side: usize,
        step: usize,
        sensor_range: f64,
        blacklist: &'a [Cell],
    ) -> Self {
        let agent = pose
            .cell(map.resolution(), map.size())
            .expect("agent pose lies inside the map");
        let window = LocalWindow::around(agent, window_side, map.size());
        Self {
            map,
            pose,
            agent,
            frontiers,
            window,
            step,
            sensor_range,
            blacklist,
            observation_side: window.side,
            field: OnceCell::new(),
            observation: OnceCell::new(),
        }
    }

    /// Optimistic geodesic distance field rooted at the agent (unknown space
    /// traversable, no inflation).
    pub fn optimistic_field(&self) -> Option<&DistanceField> {
        self.field
            .get_or_init(|| {
                let mut grid = PlanningGrid::from_map(self.map, UnknownPolicy::Traversable, 0);
                grid.set_traversable(self.agent, true);
                solve_fmm(&grid, &[self.agent]).ok()
            })
            .as_ref()
    }

    /// Stacked observation with the window side.
    pub fn observation(&self) -> &ObservationStack {
        self.observation
            .get_or_init(|| build_observation(self.map, &self.pose, self.observation_side))
    }

    pub fn is_blacklisted(&self, c: Cell) -> bool {
        self.blacklist.iter().any(|b| b.distance(c) < BLACKLIST_RADIUS)
    }

    /// Retained edges whose goal is not blacklisted, with their indices.
    pub fn candidate_edges(&self) -> impl Iterator<Item = (usize, &'a FrontierEdge)> + '_ {
        self.frontiers
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| !self.is_blacklisted(e.goal))
    }

    /// Goal clamped into the local window.
    pub fn goal(&self, cell: Cell) -> GlobalGoal {
        GlobalGoal {
            cell: self.window.clamp(cell),
            issued_at: self.step,
        }
    }
}

/// A global-goal policy.
pub trait ExplorationPolicy: Send {
    fn name(&self) -> &str;

    fn select_goal(&mut self, ctx: &PolicyContext<'_>) -> Result<GlobalGoal, PolicyError>;

    /// Called at the start of every episode.
    fn reset(&mut self) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Policy selector as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyKind {
    Nearest,
    Utility,
    RrtNbv,
    Stochastic,
    External(String),
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Nearest => f.write_str("nearest"),
            PolicyKind::Utility => f.write_str("utility"),
            PolicyKind::RrtNbv => f.write_str("rrt-nbv"),
            PolicyKind::Stochastic => f.write_str("stochastic"),
            PolicyKind::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(PolicyKind::Nearest),
            "utility" => Ok(PolicyKind::Utility),
            "rrt-nbv" => Ok(PolicyKind::RrtNbv),
            "stochastic" => Ok(PolicyKind::Stochastic),
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(PolicyKind::External(cmd.to_string())),
                _ => Err(format!(
                    "unknown policy `{s}` (expected nearest, utility, rrt-nbv, stochastic or external:<cmd>)"
                )),
            },
        }
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PolicyKind> for String {
    fn from(k: PolicyKind) -> String {
        k.to_string()
    }
}

/// Tunables shared by the built-in policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyParams {
    pub min_edge_cells: usize,
    /// Cost decay of the utility score, 1/m.
    pub lambda: f64,
    pub rrt: RrtParams,
    /// Softmax temperature of the stochastic policy, in score units.
    pub temperature: f64,
    pub external: ExternalConfig,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            min_edge_cells: DEFAULT_MIN_EDGE_CELLS,
            lambda: DEFAULT_LAMBDA,
            rrt: RrtParams::default(),
            temperature: 100.0,
            external: ExternalConfig::default(),
        }
    }
}

/// Instantiates a policy; `seed` drives its random number generator.
pub fn build_policy(
    kind: &PolicyKind,
    params: &PolicyParams,
    seed: u64,
) -> Result<Box<dyn ExplorationPolicy>, PolicyError> {
    Ok(match kind {
        PolicyKind::Nearest => Box::new(NearestFrontier),
        PolicyKind::Utility => Box::new(UtilityFrontier::new(params.lambda)),
        PolicyKind::RrtNbv => Box::new(RrtNbv::new(params.rrt.clone(), seed)),
        PolicyKind::Stochastic => {
            Box::new(FrontierGuidedStochastic::new(params.temperature, params.lambda, seed))
        }
        PolicyKind::External(cmd) => Box::new(ExternalPolicy::spawn(cmd, params.external.clone())?),
    })
}
