use super::reward::{compute_reward, RewardBreakdown, RewardParams};
use super::{GlobalGoal, LocalWindow, DEFAULT_WINDOW};
use crate::frontier::{detect_frontiers, DEFAULT_MIN_EDGE_CELLS};
use crate::mapping::{build_observation, coverage, FloorMap, ObservationStack};
use crate::planner::{NavStatus, Navigator};
use crate::world::{detect_stairs, step_agent, MotionLimits, MultiFloorWorld, OracleNoise, Pose, Sensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Primitive motion steps per global step.
pub const GLOBAL_STEP: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub sensor_range: f64,
    pub fov: f64,
    pub window: usize,
    pub noise: OracleNoise,
    /// Episode budget in primitive steps.
    pub budget: usize,
    pub reward: RewardParams,
    pub inflation: usize,
    pub min_edge_cells: usize,
    pub limits: MotionLimits,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            sensor_range: 5.0,
            fov: std::f64::consts::FRAC_PI_2,
            window: DEFAULT_WINDOW,
            noise: OracleNoise::PERFECT,
            budget: 1000,
            reward: RewardParams::default(),
            inflation: 2,
            min_edge_cells: DEFAULT_MIN_EDGE_CELLS,
            limits: MotionLimits::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvInfo {
    /// Coverage ratio of the current floor.
    pub cr: f64,
    /// Covered explorable area of the current floor in m².
    pub ca: f64,
    pub collisions: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvTransition {
    pub observation: ObservationStack,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub info: EnvInfo,
}

/// Reset/step environment around the single-floor exploration loop. Each
/// step executes up to [`GLOBAL_STEP`] primitives toward a goal.
pub struct ExplorationEnv {
    world: MultiFloorWorld,
    config: EnvConfig,
    sensor: Sensor,
    maps: Vec<FloorMap>,
    pose: Pose,
    steps: usize,
    collisions: usize,
    rng: ChaCha8Rng,
    nav: Navigator,
}

impl ExplorationEnv {
    pub fn new(world: MultiFloorWorld, config: EnvConfig) -> Self {
        let sensor = Sensor::new(config.sensor_range, config.fov, world.resolution());
        let nav = Navigator::new(config.inflation);
        let pose = world.spawn();
        Self {
            maps: Vec::new(),
            world,
            sensor,
            pose,
            steps: 0,
            collisions: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            nav,
            config,
        }
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn map(&self) -> &FloorMap {
        &self.maps[self.pose.floor]
    }

    /// Local window goals must lie in.
    pub fn window(&self) -> LocalWindow {
        let agent = self.agent_cell();
        LocalWindow::around(agent, self.config.window, self.world.size())
    }

    fn agent_cell(&self) -> crate::grid::Cell {
        self.pose
            .cell(self.world.resolution(), self.world.size())
            .expect("agent stays inside the map")
    }

    fn sense(&mut self) {
        let mut frame = self.sensor.sense(&self.world, &self.pose);
        frame.stair_detections = detect_stairs(&frame, &self.config.noise, &mut self.rng);
        self.maps[self.pose.floor]
            .integrate(&frame)
            .expect("frame comes from the agent's floor");
    }

    fn transition(&self, reward: RewardBreakdown) -> EnvTransition {
        let cov = coverage(self.map(), self.world.floor(self.pose.floor));
        EnvTransition {
            observation: build_observation(self.map(), &self.pose, self.window().side),
            reward,
            done: cov.cr > 0.95 || self.steps >= self.config.budget,
            info: EnvInfo {
                cr: cov.cr,
                ca: cov.ca,
                collisions: self.collisions,
                steps: self.steps,
            },
        }
    }

    /// Starts a new episode at the world spawn; `seed` drives oracle noise.
    pub fn reset(&mut self, seed: u64) -> EnvTransition {
        let (size, r) = (self.world.size(), self.world.resolution());
        self.maps = (0..self.world.n_floors()).map(|i| FloorMap::new(i, size, r)).collect();
        self.pose = self.world.spawn();
        self.steps = 0;
        self.collisions = 0;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.nav.clear();
        self.sense();
        self.transition(RewardBreakdown {
            r_g: 0.0,
            r_f: 0.0,
            lambda_w: self.config.reward.lambda_w,
            total: 0.0,
        })
    }

    /// Moves toward `goal` (clamped into the local window) for at most
    /// [`GLOBAL_STEP`] primitives. A step without motion counts as one.
    pub fn step(&mut self, goal: GlobalGoal) -> EnvTransition {
        assert!(!self.maps.is_empty(), "step called before reset");
        let goal = self.window().clamp(goal.cell);
        let floor = self.pose.floor;
        let before = self.maps[floor].clone();
        let fs_before = detect_frontiers(&before, self.config.min_edge_cells);
        if let Err(e) = self.nav.plan(&before, &self.pose, goal) {
            log::info!("env: goal ({}, {}) unreachable: {e}", goal.x, goal.y);
        }
        let r = self.world.resolution();
        let start = self.steps;
        for _ in 0..GLOBAL_STEP {
            if self.steps >= self.config.budget {
                break;
            }
            let cmd = match self.nav.next_command(&self.pose, &self.config.limits, r) {
                NavStatus::Move(cmd) => cmd,
                NavStatus::Arrived | NavStatus::Failed => break,
            };
            let out = step_agent(&self.world, &self.pose, cmd, &self.config.limits);
            self.steps += 1;
            if out.collided {
                self.collisions += 1;
                self.nav.note_collision();
            }
            self.pose = out.pose;
            self.sense();
            if out.transition.is_some() {
                break;
            }
        }
        // A global step with no motion still costs one tick, so the budget always ends the episode.
        if self.steps == start && self.steps < self.config.budget {
            self.steps += 1;
        }
        let reward = compute_reward(&before, &self.maps[floor], goal, &fs_before, &self.config.reward);
        self.transition(reward)
    }
}
