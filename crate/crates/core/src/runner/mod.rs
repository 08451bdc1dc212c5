//! Episode loop, metrics, batch evaluation and world sources.

mod batch;
mod record;
mod source;

pub use batch::{
    run_batch, BatchConfig, BatchOutcome, BatchWorlds, MeanStd, PolicyAggregate, RunRow, SeedList, RUNS_HEADER,
};
pub use record::{
    compute_metrics, write_episode_csv, write_outputs, EpisodeRecord, EpisodeSummary, FloorMetrics,
    MetricsSummary, StepRow, CSV_HEADER,
};
pub use source::WorldSource;

use crate::frontier::detect_frontiers;
use crate::grid::{Cell, CellState};
use crate::mapping::coverage;
use crate::planner::{steer, NavStatus, Navigator};
use crate::policies::{
    build_policy, ExplorationPolicy, PolicyContext, PolicyError, PolicyKind, PolicyParams,
    DEFAULT_WINDOW, GLOBAL_STEP,
};
use crate::topology::{
    choose_policy, fsm_step, is_floor_done, nearest_stair_goal, on_stair_goal, ExplorationStatus,
    FloorDoneParams, PolicyRole, TopologyGraph,
};
use crate::world::{
    detect_stairs, step_agent, MotionCommand, MotionLimits, MultiFloorWorld, OracleNoise, Pose,
    Sensor, WorldError,
};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

/// Default primitive-step budget for single-floor worlds.
pub const SINGLE_FLOOR_BUDGET: usize = 1000;
/// Default primitive-step budget for multi-floor worlds.
pub const MULTI_FLOOR_BUDGET: usize = 3000;
/// Blacklisted goals are forgotten after this many steps.
const BLACKLIST_TTL: usize = 200;
/// Goal selections allowed within one primitive step.
const MAX_REPLANS_PER_STEP: usize = 4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("policy error at step {step}: {source}")]
    Policy {
        step: usize,
        #[source]
        source: PolicyError,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit code: 2 for configuration errors, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::World(WorldError::Invalid { .. }) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Episode settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Primitive-step budget; defaults by floor count when absent.
    pub budget: Option<usize>,
    /// Sensor range in meters.
    pub sensor_range: f64,
    /// Sensor field of view in radians.
    pub fov: f64,
    /// Local window side in cells.
    pub window: usize,
    pub noise: OracleNoise,
    /// Obstacle inflation of the local planner, in cells.
    pub inflation: usize,
    pub limits: MotionLimits,
    pub policy: PolicyParams,
    pub floor_done: FloorDoneParams,
    /// Distance past the stair end the crossing goal is placed at, in cells.
    pub exit_margin: f64,
    /// Primitive steps between global goal updates.
    pub replan_every: usize,
    /// Draw the spawn pose from the spawn seed instead of using the world's.
    pub randomize_spawn: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            budget: None,
            sensor_range: 5.0,
            fov: std::f64::consts::FRAC_PI_2,
            window: DEFAULT_WINDOW,
            noise: OracleNoise::PERFECT,
            inflation: 2,
            limits: MotionLimits::default(),
            policy: PolicyParams::default(),
            floor_done: FloorDoneParams::default(),
            exit_margin: 2.0,
            replan_every: GLOBAL_STEP,
            randomize_spawn: false,
        }
    }
}

impl RunConfig {
    pub fn budget_for(&self, world: &MultiFloorWorld) -> usize {
        self.budget.unwrap_or(if world.n_floors() > 1 {
            MULTI_FLOOR_BUDGET
        } else {
            SINGLE_FLOOR_BUDGET
        })
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: &str| Err(RunError::Config(m.to_string()));
        if !(self.sensor_range > 0.0) {
            return bad("sensor_range must be positive");
        }
        if !(self.fov > 0.0) {
            return bad("fov must be positive");
        }
        if self.window == 0 {
            return bad("window must be at least 1 cell");
        }
        if !(0.0..=1.0).contains(&self.noise.miss_rate) {
            return bad("noise.miss_rate must lie in [0, 1]");
        }
        if !(self.limits.max_forward > 0.0 && self.limits.max_rotate > 0.0) {
            return bad("motion limits must be positive");
        }
        if self.replan_every == 0 {
            return bad("replan_every must be at least 1");
        }
        if self.policy.lambda < 0.0 {
            return bad("policy.lambda must be non-negative");
        }
        Ok(())
    }
}

/// Independent seeds derived from one root seed: stream `k` of a ChaCha8
/// generator keyed by the root gives the `k`-th seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub world: u64,
    pub policy: u64,
    pub oracle: u64,
    pub spawn: u64,
}

impl Seeds {
    pub fn split(root: u64) -> Self {
        let derive = |stream: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(root);
            rng.set_stream(stream);
            rng.next_u64()
        };
        Self {
            world: derive(1),
            policy: derive(2),
            oracle: derive(3),
            spawn: derive(4),
        }
    }
}

/// Free cell on the spawn floor with all cells within `clearance` free and
/// no stair underneath, drawn uniformly; heading uniform.
pub fn random_spawn(world: &MultiFloorWorld, seed: u64, clearance: i64) -> Pose {
    let floor = world.spawn().floor;
    let grid = world.floor(floor);
    let stairs = world.stair_mask(floor);
    let size = world.size();
    let candidates: Vec<Cell> = grid
        .cells()
        .filter(|&c| {
            stairs.get(c).is_none()
                && (-clearance..=clearance).all(|dy| {
                    (-clearance..=clearance).all(|dx| {
                        c.offset(dx, dy, size)
                            .is_some_and(|n| *grid.get(n) == CellState::Free)
                    })
                })
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match candidates.choose(&mut rng) {
        Some(&c) => Pose::at_cell(
            floor,
            c,
            world.resolution(),
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        ),
        None => world.spawn(),
    }
}

/// Runs one episode with a policy built from `kind`.
pub fn run_episode(
    world: &MultiFloorWorld,
    kind: &PolicyKind,
    config: &RunConfig,
    seed: u64,
) -> Result<EpisodeRecord, RunError> {
    let seeds = Seeds::split(seed);
    let mut policy = build_policy(kind, &config.policy, seeds.policy)
        .map_err(|source| RunError::Policy { step: 0, source })?;
    run_episode_with(world, policy.as_mut(), config, seed)
}

struct ActiveGoal {
    cell: Cell,
    issued_at: usize,
}

struct Blacklist {
    entries: Vec<(Cell, usize)>,
}

impl Blacklist {
    fn active(&mut self, step: usize) -> Vec<Cell> {
        self.entries.retain(|(_, at)| step < at + BLACKLIST_TTL);
        self.entries.iter().map(|(c, _)| *c).collect()
    }

    fn add(&mut self, c: Cell, step: usize) {
        self.entries.push((c, step));
    }
}

/// Runs one episode with an existing policy object.
pub fn run_episode_with(
    world: &MultiFloorWorld,
    policy: &mut dyn ExplorationPolicy,
    config: &RunConfig,
    seed: u64,
) -> Result<EpisodeRecord, RunError> {
    config.validate()?;
    let started = Instant::now();
    let seeds = Seeds::split(seed);
    let budget = config.budget_for(world);
    let r = world.resolution();
    let size = world.size();
    let sensor = Sensor::new(config.sensor_range, config.fov, r);
    let mut oracle_rng = ChaCha8Rng::seed_from_u64(seeds.oracle);
    policy
        .reset()
        .map_err(|source| RunError::Policy { step: 0, source })?;

    let mut pose = if config.randomize_spawn {
        random_spawn(world, seeds.spawn, config.inflation as i64 + 1)
    } else {
        world.spawn()
    };
    let mut graph = TopologyGraph::new(size, r);
    let mut rows = Vec::new();
    let mut step = 0usize;
    let mut path_len = 0.0;
    let mut collisions = 0usize;
    let mut status = ExplorationStatus::ExploringFloor;
    let mut nav = Navigator::new(config.inflation);
    let mut goal: Option<ActiveGoal> = None;
    let mut blacklist = Blacklist { entries: Vec::new() };
    let mut active_edge: Option<u32> = None;
    let mut entry: Option<(f64, f64)> = None;
    let mut crossing_point: Option<(f64, f64)> = None;

    let sense = |graph: &mut TopologyGraph, pose: &Pose, rng: &mut ChaCha8Rng, step: usize| {
        let mut frame = sensor.sense(world, pose);
        frame.stair_detections = detect_stairs(&frame, &config.noise, rng);
        graph.ensure_node(pose.floor);
        graph
            .node_mut(pose.floor)
            .expect("node exists")
            .map
            .integrate(&frame)
            .expect("frame comes from the agent's floor");
        graph.update_graph(pose.floor, step);
    };
    sense(&mut graph, &pose, &mut oracle_rng, 0);

    loop {
        let floor = pose.floor;
        let agent = pose.cell(r, size).expect("agent stays inside the map");
        let cov = {
            let node = graph.node_mut(floor).expect("current floor has a node");
            let cov = coverage(&node.map, world.floor(floor));
            node.cr = cov.cr;
            cov
        };
        let f_done = {
            let node = graph.node(floor).expect("current floor has a node");
            node.done || node.exhausted || is_floor_done(cov.cr, &node.progress, &config.floor_done)
        };
        if f_done && status == ExplorationStatus::ExploringFloor {
            graph.node_mut(floor).expect("node").done = true;
        }
        let g_all_visited = graph.all_visited(floor);
        let e_on_stair = active_edge
            .and_then(|id| graph.edge(id))
            .is_some_and(|e| e.bbox_contains(floor, agent));
        let next = fsm_step(status, f_done, g_all_visited, e_on_stair);
        if next != status {
            log::debug!("step {step}: {status} -> {next} on floor {floor}");
            match next {
                ExplorationStatus::OnStair => {
                    entry = Some((pose.x / r, pose.y / r));
                }
                ExplorationStatus::ExploringFloor => {
                    active_edge = None;
                    entry = None;
                }
                _ => {}
            }
            nav.clear();
            goal = None;
            crossing_point = None;
            status = next;
        }

        rows.push(StepRow {
            step,
            floor,
            x: pose.x,
            y: pose.y,
            heading: pose.heading,
            status,
            cr_floor: cov.cr,
            ca_floor: cov.ca,
            path_len,
            goal: match status {
                ExplorationStatus::OnStair => crossing_point.map(|(x, y)| (x * r, y * r)),
                _ => goal.as_ref().map(|g| g.cell.center(r)),
            },
        });
        if status == ExplorationStatus::AllExplored || step >= budget {
            break;
        }

        let idle = MotionCommand::Rotate(config.limits.max_rotate);
        let command = match choose_policy(status) {
            PolicyRole::Idle => break,
            PolicyRole::Explore => {
                let mut cmd = None;
                for _ in 0..MAX_REPLANS_PER_STEP {
                    let stale = goal
                        .as_ref()
                        .map_or(true, |g| step >= g.issued_at + config.replan_every);
                    if stale {
                        let node = graph.node(floor).expect("node");
                        let mut fs = detect_frontiers(&node.map, config.policy.min_edge_cells);
                        if fs.is_empty() {
                            // Diagonal map boundaries split into short 4-connected
                            // runs; fall back to every frontier component.
                            fs = detect_frontiers(&node.map, 1);
                        }
                        if fs.is_empty() {
                            log::debug!("step {step}: no frontier cells left on floor {floor}");
                            graph.node_mut(floor).expect("node").exhausted = true;
                            break;
                        }
                        let black = blacklist.active(step);
                        let ctx = PolicyContext::new(
                            &node.map,
                            pose,
                            &fs,
                            config.window,
                            step,
                            config.sensor_range,
                            &black,
                        );
                        let chosen = match policy.select_goal(&ctx) {
                            Ok(g) => Some(g),
                            Err(PolicyError::NoFrontier) => None,
                            Err(e) => {
                                log::warn!("step {step}: {} failed ({e}); using nearest frontier", policy.name());
                                crate::policies::NearestFrontier.select_goal(&ctx).ok()
                            }
                        };
                        let Some(g) = chosen else {
                            if !black.is_empty() {
                                blacklist.entries.clear();
                                continue;
                            }
                            log::debug!("step {step}: no reachable frontier among {} edges on floor {floor}", fs.edges.len());
                            graph.node_mut(floor).expect("node").exhausted = true;
                            break;
                        };
                        let node = graph.node(floor).expect("node");
                        if nav.plan(&node.map, &pose, g.cell).is_err() {
                            blacklist.add(g.cell, step);
                            continue;
                        }
                        goal = Some(ActiveGoal {
                            cell: g.cell,
                            issued_at: step,
                        });
                    }
                    match nav.next_command(&pose, &config.limits, r) {
                        NavStatus::Move(c) => {
                            cmd = Some(c);
                            break;
                        }
                        NavStatus::Arrived | NavStatus::Failed => {
                            if let Some(g) = goal.take() {
                                blacklist.add(g.cell, step);
                            }
                        }
                    }
                }
                cmd.unwrap_or(idle)
            }
            PolicyRole::NearestStair => {
                let stale = goal
                    .as_ref()
                    .map_or(true, |g| step >= g.issued_at + config.replan_every);
                if stale {
                    let target = match nearest_stair_goal(graph.edges(), floor, agent) {
                        Ok(t) => Some(t),
                        Err(_) => graph.route_toward_pending(floor).and_then(|id| {
                            let e = graph.edge(id)?;
                            let c = crate::topology::Centroid::of(e.region_on(floor)?)?;
                            Some((id, c.cell()))
                        }),
                    };
                    match target {
                        Some((id, cell)) => {
                            active_edge = Some(id);
                            let node = graph.node(floor).expect("node");
                            goal = nav.plan(&node.map, &pose, cell).ok().map(|_| ActiveGoal {
                                cell,
                                issued_at: step,
                            });
                        }
                        None => {
                            log::warn!("step {step}: no stair leads to unexplored space from floor {floor}");
                            goal = None;
                        }
                    }
                }
                match (goal.is_some(), nav.next_command(&pose, &config.limits, r)) {
                    (true, NavStatus::Move(c)) => c,
                    (true, NavStatus::Failed) => {
                        goal = None;
                        idle
                    }
                    _ => idle,
                }
            }
            PolicyRole::CrossStair => {
                let region = active_edge
                    .and_then(|id| graph.edge(id))
                    .and_then(|e| e.region_on(floor))
                    .map(|r| r.to_vec());
                match region {
                    Some(region) => {
                        let from = entry.unwrap_or((pose.x / r, pose.y / r));
                        let crossing = on_stair_goal(&region, from, pose.heading, config.exit_margin);
                        crossing_point = Some(crossing.point);
                        steer(&pose, (crossing.point.0 * r, crossing.point.1 * r), &config.limits)
                    }
                    None => MotionCommand::Forward(config.limits.max_forward),
                }
            }
        };

        let out = step_agent(world, &pose, command, &config.limits);
        step += 1;
        path_len += out.travelled;
        if out.collided {
            collisions += 1;
            nav.note_collision();
        }
        if let Some(t) = out.transition {
            let edge = graph.transition_edge(
                t.from_floor,
                agent,
                if status == ExplorationStatus::OnStair { active_edge } else { None },
                Some(t.link),
                step,
            );
            graph.record_transition(edge, t.from_floor, t.to_floor);
            log::debug!("step {step}: crossed stair {edge} from floor {} to {}", t.from_floor, t.to_floor);
            active_edge = Some(edge);
            entry = Some((out.pose.x / r, out.pose.y / r));
            blacklist.entries.clear();
            nav.clear();
            goal = None;
        }
        pose = out.pose;
        sense(&mut graph, &pose, &mut oracle_rng, step);
        let eps = config.floor_done.epsilon_cells;
        let node = graph.node_mut(pose.floor).expect("node");
        let known = node.map.known_cells();
        node.progress.observe(known, eps);
    }

    let summary = EpisodeSummary::from_run(
        world,
        &graph,
        step,
        path_len,
        collisions,
        status,
        started.elapsed().as_secs_f64(),
    );
    Ok(EpisodeRecord {
        rows,
        summary,
        graph,
    })
}
