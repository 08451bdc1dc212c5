//! Fast Marching distance fields and path extraction for the local planner.

mod fmm;
mod navigate;
mod path;

pub use fmm::{solve_fmm, solve_fmm_observed, DistanceField};
pub use navigate::{steer, NavStatus, Navigator};
pub use path::{extract_path, segment_clear, PlannedPath};

use crate::grid::{Cell, CellState};
use crate::mapping::FloorMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlannerError {
    #[error("no source cell is traversable")]
    NoTraversableSource,
    #[error("start cell ({0}, {1}) is unreachable")]
    Unreachable(usize, usize),
}

/// How unknown cells are treated when planning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum UnknownPolicy {
    /// Unknown space is an obstacle (execution).
    #[default]
    Blocked,
    /// Unknown space is free (optimistic cost estimates).
    Traversable,
}

/// Boolean traversability mask the solver runs on.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningGrid {
    size: usize,
    resolution: f64,
    traversable: Vec<bool>,
}

impl PlanningGrid {
    pub fn from_fn(size: usize, resolution: f64, f: impl Fn(Cell) -> bool) -> Self {
        let traversable = (0..size * size)
            .map(|i| f(Cell::new(i % size, i / size)))
            .collect();
        Self {
            size,
            resolution,
            traversable,
        }
    }

    /// Mask for a floor map. Cells within `inflation` cells (Euclidean) of an
    /// occupied cell are blocked.
    pub fn from_map(map: &FloorMap, unknown: UnknownPolicy, inflation: usize) -> Self {
        let size = map.size();
        let mut grid = Self::from_fn(size, map.resolution(), |c| match map.state(c) {
            CellState::Free => true,
            CellState::Unknown => unknown == UnknownPolicy::Traversable,
            CellState::Occupied => false,
        });
        if inflation > 0 {
            let r = inflation as i64;
            let disc: Vec<(i64, i64)> = (-r..=r)
                .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
                .filter(|&(dx, dy)| dx * dx + dy * dy <= r * r)
                .collect();
            for (c, s) in map.explored().iter() {
                if *s == CellState::Occupied {
                    for &(dx, dy) in &disc {
                        if let Some(n) = c.offset(dx, dy, size) {
                            grid.traversable[n.y * size + n.x] = false;
                        }
                    }
                }
            }
        }
        grid
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    #[inline]
    pub fn is_traversable(&self, c: Cell) -> bool {
        c.x < self.size && c.y < self.size && self.traversable[c.y * self.size + c.x]
    }

    pub fn set_traversable(&mut self, c: Cell, value: bool) {
        self.traversable[c.y * self.size + c.x] = value;
    }
}

/// Geodesic distance in meters between two cells of `map` (no inflation),
/// `+∞` when unreachable.
pub fn geodesic_cost(map: &FloorMap, from: Cell, to: Cell, unknown: UnknownPolicy) -> f64 {
    let grid = PlanningGrid::from_map(map, unknown, 0);
    match solve_fmm(&grid, &[from]) {
        Ok(field) => field.value(to),
        Err(_) => f64::INFINITY,
    }
}
