//! Agent-built floor maps and the stacked policy observation.

mod dump;
mod observation;

pub use dump::dump_maps;
pub use observation::{build_observation, ObservationStack, CHANNEL_NAMES};

use crate::grid::{Cell, CellState, Grid};
use crate::world::SensorFrame;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MappingError {
    #[error("frame from floor {frame} integrated into map of floor {map}")]
    FloorMismatch { map: usize, frame: usize },
}

/// Per-floor map: explored channel, stair mask and visit counts.
///
/// The explored channel is monotone: a cell never returns to unknown.
/// Conflicting free/occupied observations resolve to the latest frame, and
/// within one frame occupied wins.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorMap {
    floor: usize,
    resolution: f64,
    explored: Grid<CellState>,
    stairs: Grid<Option<u32>>,
    visits: Grid<u32>,
    known: usize,
    stair_revision: u64,
}

impl FloorMap {
    pub fn new(floor: usize, size: usize, resolution: f64) -> Self {
        Self {
            floor,
            resolution,
            explored: Grid::new(size, CellState::Unknown),
            stairs: Grid::new(size, None),
            visits: Grid::new(size, 0),
            known: 0,
            stair_revision: 0,
        }
    }

    pub fn floor(&self) -> usize {
        self.floor
    }

    pub fn size(&self) -> usize {
        self.explored.size()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn explored(&self) -> &Grid<CellState> {
        &self.explored
    }

    pub fn state(&self, cell: Cell) -> CellState {
        *self.explored.get(cell)
    }

    pub fn stair_mask(&self) -> &Grid<Option<u32>> {
        &self.stairs
    }

    pub fn visits(&self) -> &Grid<u32> {
        &self.visits
    }

    /// Incremented whenever the stair mask changes.
    pub fn stair_revision(&self) -> u64 {
        self.stair_revision
    }

    /// Number of non-unknown cells.
    pub fn known_cells(&self) -> usize {
        self.known
    }

    /// Covered area in m²: free plus occupied cells.
    pub fn covered_area(&self) -> f64 {
        self.known as f64 * self.resolution * self.resolution
    }

    fn mark(&mut self, cell: Cell, state: CellState) {
        let slot = self.explored.get_mut(cell);
        if *slot == CellState::Unknown {
            self.known += 1;
        }
        *slot = state;
    }

    /// Sets one cell directly (fixtures and map loading).
    pub fn set_state(&mut self, cell: Cell, state: CellState) {
        let slot = self.explored.get_mut(cell);
        match (*slot == CellState::Unknown, state == CellState::Unknown) {
            (true, false) => self.known += 1,
            (false, true) => self.known -= 1,
            _ => {}
        }
        *slot = state;
    }

    pub fn set_stair(&mut self, cell: Cell, link: Option<u32>) {
        if *self.stairs.get(cell) != link {
            self.stairs.set(cell, link);
            self.stair_revision += 1;
        }
    }

    /// Fuses one sensor frame.
    pub fn integrate(&mut self, frame: &SensorFrame) -> Result<(), MappingError> {
        if frame.agent_pose.floor != self.floor {
            return Err(MappingError::FloorMismatch {
                map: self.floor,
                frame: frame.agent_pose.floor,
            });
        }
        let size = self.size();
        for &c in &frame.visible_free {
            if c.x < size && c.y < size {
                self.mark(c, CellState::Free);
            }
        }
        for &c in &frame.visible_occupied {
            if c.x < size && c.y < size {
                self.mark(c, CellState::Occupied);
            }
        }
        for d in &frame.stair_detections {
            if d.cell.x < size && d.cell.y < size {
                self.set_stair(d.cell, Some(d.link));
            }
        }
        if let Some(c) = frame.agent_pose.cell(self.resolution, size) {
            *self.visits.get_mut(c) += 1;
        }
        Ok(())
    }
}

/// Coverage against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Coverage ratio in `[0, 1]`.
    pub cr: f64,
    /// Covered explorable area in m².
    pub ca: f64,
}

/// Coverage of `map` against the ground-truth floor grid. Only free
/// (reachable) ground-truth cells count.
pub fn coverage(map: &FloorMap, world_floor: &Grid<CellState>) -> Coverage {
    assert_eq!(map.size(), world_floor.size(), "map and floor dimensions differ");
    let mut reachable = 0usize;
    let mut seen = 0usize;
    for (truth, known) in world_floor.as_slice().iter().zip(map.explored.as_slice()) {
        if *truth == CellState::Free {
            reachable += 1;
            if *known != CellState::Unknown {
                seen += 1;
            }
        }
    }
    let area = map.resolution * map.resolution;
    Coverage {
        cr: if reachable == 0 { 0.0 } else { seen as f64 / reachable as f64 },
        ca: seen as f64 * area,
    }
}
