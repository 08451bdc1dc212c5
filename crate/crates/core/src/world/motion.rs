//! Primitive agent motion with collision stops and stair traversal.

use super::{wrap_angle, CellRect, MultiFloorWorld, Pose, StairLink};
use serde::{Deserialize, Serialize};

/// One primitive action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MotionCommand {
    /// Move along the current heading, in meters.
    Forward(f64),
    /// Turn in place, in radians (counter-clockwise positive).
    Rotate(f64),
}

/// Per-step magnitude limits. Commands beyond them are clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    pub max_forward: f64,
    pub max_rotate: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            max_forward: 0.25,
            max_rotate: std::f64::consts::PI / 6.0,
        }
    }
}

/// Floor change caused by walking through a stair portal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloorTransition {
    pub link: u32,
    pub from_floor: usize,
    pub to_floor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub pose: Pose,
    /// Distance actually travelled, in meters.
    pub travelled: f64,
    /// True when forward motion was cut short by an occupied cell.
    pub collided: bool,
    pub transition: Option<FloorTransition>,
}

/// Sub-step used to march forward motion through the grid.
pub const MARCH_STEP: f64 = 0.01;

/// Executes one primitive command.
///
/// Forward motion is marched in [`MARCH_STEP`] increments and stops at the
/// last traversable point before an occupied cell. Crossing a stair portal
/// outward switches the pose to the linked floor at the corresponding point.
pub fn step_agent(
    world: &MultiFloorWorld,
    pose: &Pose,
    command: MotionCommand,
    limits: &MotionLimits,
) -> StepOutcome {
    match command {
        MotionCommand::Rotate(angle) => {
            let a = angle.clamp(-limits.max_rotate, limits.max_rotate);
            StepOutcome {
                pose: Pose { heading: wrap_angle(pose.heading + a), ..*pose },
                travelled: 0.0,
                collided: false,
                transition: None,
            }
        }
        MotionCommand::Forward(distance) => {
            let d = distance.clamp(0.0, limits.max_forward);
            march(world, pose, d)
        }
    }
}

fn march(world: &MultiFloorWorld, start: &Pose, distance: f64) -> StepOutcome {
    let (dx, dy) = (start.heading.cos(), start.heading.sin());
    let mut pose = *start;
    let mut travelled = 0.0;
    let mut transition = None;
    let mut collided = false;
    let n = (distance / MARCH_STEP).ceil() as usize;
    for i in 0..n {
        let step = if i + 1 == n {
            distance - MARCH_STEP * (n - 1) as f64
        } else {
            MARCH_STEP
        };
        let (nx, ny) = (pose.x + dx * step, pose.y + dy * step);
        let mut next = Pose { x: nx, y: ny, ..pose };
        let mut crossed = None;
        for link in world.stair_links() {
            if let Some((floor, x, y)) = portal_crossing(world, link, &pose, nx, ny) {
                next = Pose { floor, x, y, ..pose };
                crossed = Some(FloorTransition {
                    link: link.id,
                    from_floor: pose.floor,
                    to_floor: floor,
                });
                break;
            }
        }
        if !world.point_traversable(next.floor, next.x, next.y) {
            collided = true;
            break;
        }
        if crossed.is_some() {
            transition = crossed;
        }
        travelled += step;
        pose = next;
    }
    StepOutcome {
        pose,
        travelled,
        collided,
        transition,
    }
}

/// If moving from `pose` to `(nx, ny)` exits `link`'s region on the current
/// floor through its portal, returns the destination floor and point.
fn portal_crossing(
    world: &MultiFloorWorld,
    link: &StairLink,
    pose: &Pose,
    nx: f64,
    ny: f64,
) -> Option<(usize, f64, f64)> {
    let r = world.resolution();
    let ascending = if pose.floor == link.lower_floor {
        true
    } else if pose.floor == link.upper_floor {
        false
    } else {
        return None;
    };
    let (here, there) = if ascending {
        (&link.lower_region, &link.upper_region)
    } else {
        (&link.upper_region, &link.lower_region)
    };
    if !here.metric_contains(pose.x, pose.y, r) {
        return None;
    }
    // Orthonormal frame: `d` is the direction of travel through the portal.
    let a = link.axis.vector();
    let d = if ascending { a } else { [-a[0], -a[1]] };
    let n = [-d[1], d[0]];
    let along = |x: f64, y: f64| d[0] * x + d[1] * y;
    let across = |x: f64, y: f64| n[0] * x + n[1] * y;
    let extent = |rect: &CellRect| {
        let (x0, y0, x1, y1) = rect.metric_bounds(r);
        let (p, q) = (along(x0, y0), along(x1, y1));
        let (s, t) = (across(x0, y0), across(x1, y1));
        (p.min(q), p.max(q), s.min(t), s.max(t))
    };
    let (_, here_far, here_lo, here_hi) = extent(here);
    let (there_near, _, there_lo, _) = extent(there);
    let next_along = along(nx, ny);
    let next_across = across(nx, ny);
    if next_along <= here_far || next_across < here_lo || next_across > here_hi {
        return None;
    }
    let out_along = there_near + (next_along - here_far);
    let out_across = there_lo + (next_across - here_lo);
    let x = out_along * d[0] + out_across * n[0];
    let y = out_along * d[1] + out_across * n[1];
    let floor = if ascending {
        link.upper_floor
    } else {
        link.lower_floor
    };
    Some((floor, x, y))
}
