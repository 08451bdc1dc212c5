use serde::{Deserialize, Serialize};
use std::fmt;

/// Exploration status of the multi-floor state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplorationStatus {
    ExploringFloor,
    GoingToStair,
    OnStair,
    AllExplored,
}

impl ExplorationStatus {
    pub const ALL: [ExplorationStatus; 4] = [
        ExplorationStatus::ExploringFloor,
        ExplorationStatus::GoingToStair,
        ExplorationStatus::OnStair,
        ExplorationStatus::AllExplored,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExplorationStatus::ExploringFloor => "exploring_floor",
            ExplorationStatus::GoingToStair => "going_to_stair",
            ExplorationStatus::OnStair => "on_stair",
            ExplorationStatus::AllExplored => "all_explored",
        }
    }
}

impl fmt::Display for ExplorationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One transition of the state machine.
///
/// * exploring, floor done, graph fully visited → all explored
/// * exploring, floor done, work left → going to stair
/// * going to stair, on a stair → on stair
/// * on stair, off the stair → exploring
///
/// Any other input keeps the previous status; `AllExplored` is absorbing.
pub fn fsm_step(
    prev: ExplorationStatus,
    f_done: bool,
    g_all_visited: bool,
    e_on_stair: bool,
) -> ExplorationStatus {
    use ExplorationStatus::*;
    match prev {
        ExploringFloor if f_done => {
            if g_all_visited {
                AllExplored
            } else {
                GoingToStair
            }
        }
        GoingToStair if e_on_stair => OnStair,
        OnStair if !e_on_stair => ExploringFloor,
        s => s,
    }
}

/// Behavior attached to each status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyRole {
    /// The configured 2D exploration policy.
    Explore,
    /// Head for the nearest unvisited stair.
    NearestStair,
    /// Cross the stair along its center line.
    CrossStair,
    /// Terminal, no goal.
    Idle,
}

pub fn choose_policy(status: ExplorationStatus) -> PolicyRole {
    match status {
        ExplorationStatus::ExploringFloor => PolicyRole::Explore,
        ExplorationStatus::GoingToStair => PolicyRole::NearestStair,
        ExplorationStatus::OnStair => PolicyRole::CrossStair,
        ExplorationStatus::AllExplored => PolicyRole::Idle,
    }
}

/// Thresholds of the floor completion test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FloorDoneParams {
    pub cr_threshold: f64,
    /// Primitive steps without new coverage before a floor counts as done.
    pub t_thre: usize,
    /// Coverage growth below this many cells counts as no growth.
    pub epsilon_cells: usize,
    /// Optional cap on primitive steps spent on one floor.
    pub floor_budget: Option<usize>,
}

impl Default for FloorDoneParams {
    fn default() -> Self {
        Self {
            cr_threshold: 0.95,
            t_thre: 150,
            epsilon_cells: 1,
            floor_budget: None,
        }
    }
}

/// Per-floor step and coverage-growth counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FloorProgress {
    pub steps_on_floor: usize,
    /// Covered cell count at the last recorded growth.
    pub reference_cells: usize,
    /// Primitive steps since the last growth.
    pub flat_steps: usize,
}

impl FloorProgress {
    /// Records one primitive step on the floor with `covered` known cells.
    pub fn observe(&mut self, covered: usize, epsilon_cells: usize) {
        self.steps_on_floor += 1;
        if covered > self.reference_cells + epsilon_cells {
            self.reference_cells = covered;
            self.flat_steps = 0;
        } else {
            self.flat_steps += 1;
        }
    }
}

/// Coverage above the threshold, stagnation for `t_thre` steps, or the
/// per-floor budget.
pub fn is_floor_done(cr: f64, progress: &FloorProgress, params: &FloorDoneParams) -> bool {
    cr > params.cr_threshold
        || progress.flat_steps >= params.t_thre
        || params.floor_budget.is_some_and(|b| progress.steps_on_floor >= b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExplorationStatus::*;

    #[test]
    fn transition_examples() {
        assert_eq!(fsm_step(ExploringFloor, true, false, false), GoingToStair);
        assert_eq!(fsm_step(ExploringFloor, true, true, false), AllExplored);
        assert_eq!(fsm_step(GoingToStair, false, false, true), OnStair);
        assert_eq!(fsm_step(OnStair, false, false, false), ExploringFloor);
        assert_eq!(fsm_step(ExploringFloor, false, true, true), ExploringFloor);
    }

    #[test]
    fn floor_done_clauses() {
        let p = FloorDoneParams::default();
        assert!(is_floor_done(0.96, &FloorProgress::default(), &p));
        let mut prog = FloorProgress::default();
        prog.observe(100, 1);
        for _ in 0..150 {
            prog.observe(101, 1);
        }
        assert!(is_floor_done(0.5, &prog, &p));
        let mut prog = FloorProgress::default();
        for i in 0..150 {
            prog.observe(if i < 148 { 10 } else { 20 }, 1);
        }
        assert!(!is_floor_done(0.5, &prog, &p));
        let capped = FloorDoneParams { floor_budget: Some(3), ..p };
        let prog = FloorProgress { steps_on_floor: 3, ..FloorProgress::default() };
        assert!(is_floor_done(0.1, &prog, &capped));
    }

    #[test]
    fn policy_table() {
        assert_eq!(choose_policy(ExploringFloor), PolicyRole::Explore);
        assert_eq!(choose_policy(GoingToStair), PolicyRole::NearestStair);
        assert_eq!(choose_policy(OnStair), PolicyRole::CrossStair);
        assert_eq!(choose_policy(AllExplored), PolicyRole::Idle);
    }
}
