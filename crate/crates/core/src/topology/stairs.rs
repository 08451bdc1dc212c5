use super::{StairEdgeRecord, TopologyError};
use crate::grid::Cell;
use std::cmp::Ordering;

/// Exact centroid of a cell set: coordinate sums and cell count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Centroid {
    pub sum_x: i64,
    pub sum_y: i64,
    pub n: i64,
}

impl Centroid {
    pub fn of(cells: &[Cell]) -> Option<Self> {
        if cells.is_empty() {
            return None;
        }
        Some(Self {
            sum_x: cells.iter().map(|c| c.x as i64).sum(),
            sum_y: cells.iter().map(|c| c.y as i64).sum(),
            n: cells.len() as i64,
        })
    }

    pub fn as_f64(&self) -> (f64, f64) {
        (self.sum_x as f64 / self.n as f64, self.sum_y as f64 / self.n as f64)
    }

    /// Nearest cell, halves rounded up.
    pub fn cell(&self) -> Cell {
        let round = |s: i64| ((2 * s + self.n) / (2 * self.n)) as usize;
        Cell::new(round(self.sum_x), round(self.sum_y))
    }

    /// Squared distance to `c` scaled by `n²`.
    fn scaled_dist2(&self, c: Cell) -> i128 {
        let dx = (self.sum_x - self.n * c.x as i64) as i128;
        let dy = (self.sum_y - self.n * c.y as i64) as i128;
        dx * dx + dy * dy
    }

    /// Compares the distances of two centroids to `c` exactly.
    pub fn cmp_distance(&self, other: &Centroid, c: Cell) -> Ordering {
        let a = self.scaled_dist2(c) * (other.n as i128 * other.n as i128);
        let b = other.scaled_dist2(c) * (self.n as i128 * self.n as i128);
        a.cmp(&b)
    }
}

/// Unvisited edge with a region on `floor` whose centroid is nearest to
/// `agent`; ties go to the lowest edge id. Returns the edge id and the goal
/// cell.
pub fn nearest_stair_goal(
    edges: &[StairEdgeRecord],
    floor: usize,
    agent: Cell,
) -> Result<(u32, Cell), TopologyError> {
    let mut best: Option<(&StairEdgeRecord, Centroid)> = None;
    for e in edges.iter().filter(|e| !e.visited) {
        let Some(c) = e.region_on(floor).and_then(Centroid::of) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((b, bc)) => match c.cmp_distance(bc, agent) {
                Ordering::Less => true,
                Ordering::Equal => e.id < b.id,
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some((e, c));
        }
    }
    best.map(|(e, c)| (e.id, c.cell()))
        .ok_or(TopologyError::NoUnvisitedStair { floor })
}

/// Target for crossing a stair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StairCrossing {
    /// Goal in continuous cell coordinates (cell `(x, y)` spans
    /// `[x, x+1) × [y, y+1)`).
    pub point: (f64, f64),
    /// The region was too square to have a long axis; the goal follows the
    /// heading instead.
    pub degenerate: bool,
}

/// Regions with a long-to-short side ratio below this are degenerate.
pub const MIN_ASPECT: f64 = 1.2;

/// Goal at the far end of the stair's center line.
///
/// The region's bounding rectangle gives the long axis; the center line runs
/// along it through the middle of the short sides. The goal sits on that
/// line `exit_margin` cells past the short side away from `entry`.
pub fn on_stair_goal(region: &[Cell], entry: (f64, f64), heading: f64, exit_margin: f64) -> StairCrossing {
    assert!(!region.is_empty(), "stair region is empty");
    let x0 = region.iter().map(|c| c.x).min().unwrap() as f64;
    let x1 = region.iter().map(|c| c.x).max().unwrap() as f64 + 1.0;
    let y0 = region.iter().map(|c| c.y).min().unwrap() as f64;
    let y1 = region.iter().map(|c| c.y).max().unwrap() as f64 + 1.0;
    let (w, h) = (x1 - x0, y1 - y0);
    let (mx, my) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    if w.max(h) / w.min(h) < MIN_ASPECT {
        log::warn!("stair region {w}×{h} has no clear long axis; following the heading");
        let reach = w.max(h) / 2.0 + exit_margin;
        return StairCrossing {
            point: (mx + reach * heading.cos(), my + reach * heading.sin()),
            degenerate: true,
        };
    }
    let point = if w > h {
        let x = if entry.0 < mx { x1 + exit_margin } else { x0 - exit_margin };
        (x, my)
    } else {
        let y = if entry.1 < my { y1 + exit_margin } else { y0 - exit_margin };
        (mx, y)
    };
    StairCrossing {
        point,
        degenerate: false,
    }
}
