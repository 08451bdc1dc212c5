use super::path::points_clear;
use super::{extract_path, solve_fmm, DistanceField, PlannedPath, PlannerError, PlanningGrid, UnknownPolicy};
use crate::grid::Cell;
use crate::mapping::FloorMap;
use crate::world::{wrap_angle, MotionCommand, MotionLimits, Pose};

/// Heading error (rad) above which the navigator turns in place.
const ALIGN_TOLERANCE: f64 = 0.05;
/// Collisions tolerated on one path before it is declared failed.
const MAX_COLLISIONS: u32 = 3;

/// Result of asking the navigator for the next primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavStatus {
    Move(MotionCommand),
    Arrived,
    Failed,
}

/// Follows FMM paths on the known map. Unknown space is blocked and
/// obstacles are inflated; the radius is reduced, down to zero, until the
/// goal becomes reachable.
#[derive(Debug, Clone)]
pub struct Navigator {
    inflation: usize,
    path: Option<PlannedPath>,
    /// Grid the current path was planned on.
    grid: Option<PlanningGrid>,
    next: usize,
    collisions: u32,
}

impl Navigator {
    pub fn new(inflation: usize) -> Self {
        Self {
            inflation,
            path: None,
            grid: None,
            next: 0,
            collisions: 0,
        }
    }

    pub fn path(&self) -> Option<&PlannedPath> {
        self.path.as_ref()
    }

    /// Cell the current path ends in.
    pub fn target(&self) -> Option<Cell> {
        self.path.as_ref().and_then(|p| p.goal())
    }

    pub fn clear(&mut self) {
        self.path = None;
        self.grid = None;
    }

    /// Plans from the agent toward `goal`. When `goal` is not reachable the
    /// path ends at the reachable cell closest to it.
    pub fn plan(&mut self, map: &FloorMap, pose: &Pose, goal: Cell) -> Result<&PlannedPath, PlannerError> {
        self.clear();
        let size = map.size();
        let agent = pose
            .cell(map.resolution(), size)
            .ok_or(PlannerError::Unreachable(goal.x, goal.y))?;
        let (grid, field) = self.reachability(map, agent, goal)?;
        let target = if field.value(goal).is_finite() {
            goal
        } else {
            let mut best: Option<(f64, usize)> = None;
            for (i, v) in field.values().iter().enumerate() {
                if v.is_finite() {
                    let d = Cell::new(i % size, i / size).distance(goal);
                    if best.map_or(true, |(bd, _)| d < bd) {
                        best = Some((d, i));
                    }
                }
            }
            let (_, i) = best.expect("the agent cell is always reachable");
            Cell::new(i % size, i / size)
        };
        let mut path = extract_path(&field, target)?;
        path.cells.reverse();
        path.waypoints.reverse();
        self.next = 1;
        self.collisions = 0;
        self.grid = Some(grid);
        Ok(self.path.insert(path))
    }

    /// Field under the largest inflation that connects agent and goal. When
    /// no inflation does, the largest one that leaves the agent free.
    fn reachability(
        &self,
        map: &FloorMap,
        agent: Cell,
        goal: Cell,
    ) -> Result<(PlanningGrid, DistanceField), PlannerError> {
        let mut fallback = None;
        for k in (0..=self.inflation).rev() {
            let mut grid = PlanningGrid::from_map(map, UnknownPolicy::Blocked, k);
            if k == 0 {
                grid.set_traversable(agent, true);
            }
            if !grid.is_traversable(agent) {
                continue;
            }
            let field = solve_fmm(&grid, &[agent])?;
            if field.value(goal).is_finite() {
                return Ok((grid, field));
            }
            fallback.get_or_insert((grid, field));
        }
        Ok(fallback.expect("zero inflation forces the agent cell traversable"))
    }

    /// Reports a collision from the last executed primitive.
    pub fn note_collision(&mut self) {
        self.collisions += 1;
    }

    /// Next primitive toward the current path.
    pub fn next_command(&mut self, pose: &Pose, limits: &MotionLimits, resolution: f64) -> NavStatus {
        let Some(path) = &self.path else {
            return NavStatus::Failed;
        };
        if self.collisions >= MAX_COLLISIONS {
            return NavStatus::Failed;
        }
        while self.next < path.waypoints.len() {
            let (wx, wy) = path.waypoints[self.next];
            if (wx - pose.x).hypot(wy - pose.y) <= 0.5 * resolution {
                self.next += 1;
            } else {
                break;
            }
        }
        let Some(&(wx, wy)) = path.waypoints.get(self.next) else {
            return NavStatus::Arrived;
        };
        // Off-center poses (after a collision, say) can see the straight line
        // to the waypoint clip a corner; re-center in the current cell first.
        if let Some(grid) = &self.grid {
            let here = (pose.x / resolution, pose.y / resolution);
            let there = (wx / resolution, wy / resolution);
            let center = (here.0.floor() + 0.5, here.1.floor() + 0.5);
            let off_center = (here.0 - center.0).hypot(here.1 - center.1) > 0.1;
            if off_center && !points_clear(grid, here, there) {
                return NavStatus::Move(steer(pose, (center.0 * resolution, center.1 * resolution), limits));
            }
        }
        NavStatus::Move(steer(pose, (wx, wy), limits))
    }
}

/// Turns toward `target` until aligned, then drives at most to it.
pub fn steer(pose: &Pose, target: (f64, f64), limits: &MotionLimits) -> MotionCommand {
    let (dx, dy) = (target.0 - pose.x, target.1 - pose.y);
    let err = wrap_angle(dy.atan2(dx) - pose.heading);
    if err.abs() > ALIGN_TOLERANCE {
        MotionCommand::Rotate(err.clamp(-limits.max_rotate, limits.max_rotate))
    } else {
        MotionCommand::Forward(dx.hypot(dy).min(limits.max_forward))
    }
}
