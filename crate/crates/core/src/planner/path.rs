use super::{DistanceField, PlannerError, PlanningGrid};
use crate::grid::{Cell, NEIGHBORS_8};

/// Waypoints in meters from the start cell to a source of the field.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub cells: Vec<Cell>,
    pub waypoints: Vec<(f64, f64)>,
    /// Polyline length in meters.
    pub length: f64,
}

impl PlannedPath {
    pub fn goal(&self) -> Option<Cell> {
        self.cells.last().copied()
    }
}

/// Whether the straight segment between two cell centers stays on traversable
/// cells. Samples every tenth of a cell and checks both cells at a corner
/// crossing.
pub fn segment_clear(grid: &PlanningGrid, a: Cell, b: Cell) -> bool {
    points_clear(
        grid,
        (a.x as f64 + 0.5, a.y as f64 + 0.5),
        (b.x as f64 + 0.5, b.y as f64 + 0.5),
    )
}

/// [`segment_clear`] between arbitrary points in cell units.
pub(crate) fn points_clear(grid: &PlanningGrid, (ax, ay): (f64, f64), (bx, by): (f64, f64)) -> bool {
    let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
    let steps = (len * 10.0).ceil().max(1.0) as usize;
    let ok = |x: i64, y: i64| x >= 0 && y >= 0 && grid.is_traversable(Cell::new(x as usize, y as usize));
    let mut prev = (ax.floor() as i64, ay.floor() as i64);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = (ax + (bx - ax) * t).floor() as i64;
        let y = (ay + (by - ay) * t).floor() as i64;
        if (x, y) == prev && i > 0 {
            continue;
        }
        if !ok(x, y) {
            return false;
        }
        if x != prev.0 && y != prev.1 && !(ok(prev.0, y) && ok(x, prev.1)) {
            return false;
        }
        prev = (x, y);
    }
    true
}

/// Descends the field from `start` to a source.
///
/// Steps go to the 8-neighbor with the lowest strictly smaller value,
/// diagonals only when both adjacent orthogonal cells are traversable. The
/// cell chain is then shortcut greedily along clear straight segments.
pub fn extract_path(field: &DistanceField, start: Cell) -> Result<PlannedPath, PlannerError> {
    if !field.value(start).is_finite() {
        return Err(PlannerError::Unreachable(start.x, start.y));
    }
    let size = field.size();
    let grid = field.grid();
    let mut chain = vec![start];
    let mut cur = start;
    while field.value(cur) > 0.0 {
        let here = field.value(cur);
        let mut best: Option<(f64, Cell)> = None;
        for (dx, dy) in NEIGHBORS_8 {
            let Some(n) = cur.offset(dx, dy, size) else {
                continue;
            };
            let v = field.value(n);
            if !(v < here) {
                continue;
            }
            if dx != 0 && dy != 0 {
                let side_a = cur.offset(dx, 0, size).is_some_and(|c| grid.is_traversable(c));
                let side_b = cur.offset(0, dy, size).is_some_and(|c| grid.is_traversable(c));
                if !(side_a && side_b) {
                    continue;
                }
            }
            if best.map_or(true, |(bv, _)| v < bv) {
                best = Some((v, n));
            }
        }
        // Every finite non-source cell has an upwind neighbor with a smaller
        // value, so descent always makes progress.
        let (_, next) = best.expect("finite field value without a smaller neighbor");
        chain.push(next);
        cur = next;
    }

    let mut cells = vec![chain[0]];
    let mut i = 0;
    while i + 1 < chain.len() {
        let mut j = chain.len() - 1;
        while j > i + 1 && !segment_clear(grid, chain[i], chain[j]) {
            j -= 1;
        }
        cells.push(chain[j]);
        i = j;
    }
    let r = field.resolution();
    let waypoints: Vec<(f64, f64)> = cells.iter().map(|c| c.center(r)).collect();
    let length = waypoints
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .sum();
    Ok(PlannedPath {
        cells,
        waypoints,
        length,
    })
}
