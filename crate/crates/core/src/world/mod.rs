//! Ground-truth multi-floor environments.
//!
//! A [`MultiFloorWorld`] stacks equally sized occupancy grids (free or
//! occupied, never unknown) and links consecutive floors with rectangular
//! stairs. A stair is two adjacent rectangles sharing one short edge, the
//! *portal*: the lower rectangle is walkable on the lower floor, the upper
//! rectangle on the upper floor. Walking through the portal along the stair
//! axis moves the agent to the other floor without changing its planar
//! position, so floor maps stay registered in one frame.

mod generate;
mod io;
mod motion;
mod sensor;

pub use generate::{generate_world, WorldSpec};
pub use io::{load_world, save_world};
pub use motion::{step_agent, FloorTransition, MotionCommand, MotionLimits, StepOutcome};
pub use sensor::{detect_stairs, sense, OracleNoise, Sensor, SensorFrame, StairDetection};

use crate::grid::{flood_fill, Cell, CellState, Grid};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world: {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("world generation failed for seed {seed} after {attempts} attempts: {reason}")]
    Generation {
        seed: u64,
        attempts: usize,
        reason: String,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl WorldError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        WorldError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w -= 2.0 * PI;
    }
    w
}

/// Agent pose: floor index, metric position and heading in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub floor: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(floor: usize, x: f64, y: f64, heading: f64) -> Self {
        Self {
            floor,
            x,
            y,
            heading: wrap_angle(heading),
        }
    }

    /// Pose at the center of `cell`.
    pub fn at_cell(floor: usize, cell: Cell, resolution: f64, heading: f64) -> Self {
        let (x, y) = cell.center(resolution);
        Self::new(floor, x, y, heading)
    }

    pub fn cell(&self, resolution: f64, size: usize) -> Option<Cell> {
        Cell::from_point(self.x, self.y, resolution, size)
    }
}

/// Direction of ascent along a stair, always axis-aligned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StairAxis {
    PosX,
    NegX,
    PosY,
    NegY,
}

impl StairAxis {
    pub const ALL: [StairAxis; 4] = [
        StairAxis::PosX,
        StairAxis::NegX,
        StairAxis::PosY,
        StairAxis::NegY,
    ];

    pub fn vector(self) -> [f64; 2] {
        match self {
            StairAxis::PosX => [1.0, 0.0],
            StairAxis::NegX => [-1.0, 0.0],
            StairAxis::PosY => [0.0, 1.0],
            StairAxis::NegY => [0.0, -1.0],
        }
    }

    pub fn from_vector(v: [f64; 2]) -> Option<Self> {
        const EPS: f64 = 1e-9;
        StairAxis::ALL.into_iter().find(|a| {
            let u = a.vector();
            (u[0] - v[0]).abs() < EPS && (u[1] - v[1]).abs() < EPS
        })
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, StairAxis::PosX | StairAxis::NegX)
    }
}

/// Inclusive, axis-aligned rectangle of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl CellRect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> usize {
        self.x1 + 1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 + 1 - self.y0
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.x <= self.x1 && c.y >= self.y0 && c.y <= self.y1
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Cell::new(x, y)))
    }

    /// Metric bounds `(xmin, ymin, xmax, ymax)`.
    pub fn metric_bounds(&self, resolution: f64) -> (f64, f64, f64, f64) {
        (
            self.x0 as f64 * resolution,
            self.y0 as f64 * resolution,
            (self.x1 + 1) as f64 * resolution,
            (self.y1 + 1) as f64 * resolution,
        )
    }

    fn metric_contains(&self, x: f64, y: f64, resolution: f64) -> bool {
        let (a, b, c, d) = self.metric_bounds(resolution);
        x >= a && x <= c && y >= b && y <= d
    }
}

/// A stair joining `lower_floor` and `upper_floor = lower_floor + 1`.
///
/// `axis` points from the lower rectangle's entrance towards its portal.
/// The portal of the lower rectangle is its short side furthest along
/// `axis`; the upper rectangle's portal is its short side furthest against
/// `axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StairLink {
    pub id: u32,
    pub lower_floor: usize,
    pub upper_floor: usize,
    pub lower_region: CellRect,
    pub upper_region: CellRect,
    pub axis: StairAxis,
}

impl StairLink {
    pub fn region_on(&self, floor: usize) -> Option<&CellRect> {
        if floor == self.lower_floor {
            Some(&self.lower_region)
        } else if floor == self.upper_floor {
            Some(&self.upper_region)
        } else {
            None
        }
    }
}

/// Ground-truth stacked environment. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiFloorWorld {
    size: usize,
    resolution: f64,
    floors: Vec<Grid<CellState>>,
    stair_masks: Vec<Grid<Option<u32>>>,
    links: Vec<StairLink>,
    spawn: Pose,
    free_counts: Vec<usize>,
}

impl MultiFloorWorld {
    /// Builds a world and checks every structural invariant.
    pub fn new(
        resolution: f64,
        floors: Vec<Grid<CellState>>,
        links: Vec<StairLink>,
        spawn: Pose,
    ) -> Result<Self, WorldError> {
        if floors.is_empty() {
            return Err(WorldError::invalid("n_floors", "at least one floor required"));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(WorldError::invalid("r", "resolution must be positive"));
        }
        let size = floors[0].size();
        if size == 0 {
            return Err(WorldError::invalid("M", "grid size must be positive"));
        }
        for (i, f) in floors.iter().enumerate() {
            if f.size() != size {
                return Err(WorldError::invalid(
                    format!("floor_{i}"),
                    format!("size {} differs from {size}", f.size()),
                ));
            }
            if f.as_slice().contains(&CellState::Unknown) {
                return Err(WorldError::invalid(
                    format!("floor_{i}"),
                    "ground truth must not contain unknown cells",
                ));
            }
        }
        let mut stair_masks = vec![Grid::new(size, None); floors.len()];
        for (k, link) in links.iter().enumerate() {
            let field = format!("stair_links[{k}]");
            if link.upper_floor != link.lower_floor + 1 {
                return Err(WorldError::invalid(
                    field,
                    "upper floor must be exactly one above lower floor",
                ));
            }
            if link.upper_floor >= floors.len() {
                return Err(WorldError::invalid(field, "floor index out of range"));
            }
            if links[..k].iter().any(|l| l.id == link.id) {
                return Err(WorldError::invalid(field, format!("duplicate id {}", link.id)));
            }
            for (name, floor, rect) in [
                ("lower_bbox", link.lower_floor, link.lower_region),
                ("upper_bbox", link.upper_floor, link.upper_region),
            ] {
                let f = format!("{field}.{name}");
                if rect.x1 < rect.x0 || rect.y1 < rect.y0 || rect.x1 >= size || rect.y1 >= size {
                    return Err(WorldError::invalid(f, "rectangle empty or outside the grid"));
                }
                let (along, across) = if link.axis.is_horizontal() {
                    (rect.width(), rect.height())
                } else {
                    (rect.height(), rect.width())
                };
                if along < across {
                    return Err(WorldError::invalid(f, "long side must be parallel to axis"));
                }
                for c in rect.cells() {
                    if *floors[floor].get(c) != CellState::Free {
                        return Err(WorldError::invalid(
                            f,
                            format!("cell ({}, {}) is not traversable", c.x, c.y),
                        ));
                    }
                    if stair_masks[floor].get(c).is_some() {
                        return Err(WorldError::invalid(f, "overlaps another stair"));
                    }
                    stair_masks[floor].set(c, Some(link.id));
                }
            }
        }
        let spawn_cell = spawn
            .cell(resolution, size)
            .ok_or_else(|| WorldError::invalid("spawn", "outside the grid"))?;
        if spawn.floor >= floors.len() {
            return Err(WorldError::invalid("spawn", "floor index out of range"));
        }
        if *floors[spawn.floor].get(spawn_cell) != CellState::Free {
            return Err(WorldError::invalid("spawn", "spawn cell is not free"));
        }
        let mut free_counts = Vec::with_capacity(floors.len());
        for (i, f) in floors.iter().enumerate() {
            let free = f.as_slice().iter().filter(|&&s| s == CellState::Free).count();
            let Some(first) = f.iter().find(|(_, s)| **s == CellState::Free).map(|(c, _)| c) else {
                return Err(WorldError::invalid(format!("floor_{i}"), "no free cells"));
            };
            let reached = flood_fill(size, first, false, |c| *f.get(c) == CellState::Free);
            let n = reached.as_slice().iter().filter(|&&b| b).count();
            if n != free {
                return Err(WorldError::invalid(
                    format!("floor_{i}"),
                    format!("free space is not connected ({n} of {free} cells reachable)"),
                ));
            }
            free_counts.push(free);
        }
        Ok(Self {
            size,
            resolution,
            floors,
            stair_masks,
            links,
            spawn,
            free_counts,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn n_floors(&self) -> usize {
        self.floors.len()
    }

    pub fn floor(&self, i: usize) -> &Grid<CellState> {
        &self.floors[i]
    }

    pub fn stair_mask(&self, i: usize) -> &Grid<Option<u32>> {
        &self.stair_masks[i]
    }

    pub fn stair_links(&self) -> &[StairLink] {
        &self.links
    }

    pub fn link(&self, id: u32) -> Option<&StairLink> {
        self.links.iter().find(|l| l.id == id)
    }

    pub fn spawn(&self) -> Pose {
        self.spawn
    }

    /// Number of reachable (free) cells on a floor.
    pub fn reachable_cells(&self, floor: usize) -> usize {
        self.free_counts[floor]
    }

    pub fn is_traversable(&self, floor: usize, cell: Cell) -> bool {
        *self.floors[floor].get(cell) == CellState::Free
    }

    /// Whether the metric point lies on a traversable cell of `floor`.
    pub fn point_traversable(&self, floor: usize, x: f64, y: f64) -> bool {
        Cell::from_point(x, y, self.resolution, self.size)
            .is_some_and(|c| self.is_traversable(floor, c))
    }

    /// Same world with a different spawn pose.
    pub fn with_spawn(&self, spawn: Pose) -> Result<Self, WorldError> {
        Self::new(
            self.resolution,
            self.floors.clone(),
            self.links.clone(),
            spawn,
        )
    }
}
