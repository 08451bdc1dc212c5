//! First-order Fast Marching Method on a uniform-speed grid.

use super::{PlannerError, PlanningGrid};
use crate::grid::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Arrival-time (distance) field in meters; `+∞` where unreachable.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    size: usize,
    resolution: f64,
    values: Vec<f64>,
    grid: PlanningGrid,
    sources: Vec<Cell>,
}

impl DistanceField {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    #[inline]
    pub fn value(&self, c: Cell) -> f64 {
        if c.x < self.size && c.y < self.size {
            self.values[c.y * self.size + c.x]
        } else {
            f64::INFINITY
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sources(&self) -> &[Cell] {
        &self.sources
    }

    /// Traversability mask the field was solved on.
    pub fn grid(&self) -> &PlanningGrid {
        &self.grid
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Trial {
    value: f64,
    index: usize,
}

impl Eq for Trial {}

impl Ord for Trial {
    // Min-heap on value, ties by lower cell index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Trial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Solves the Eikonal equation with unit speed from `sources`.
pub fn solve_fmm(grid: &PlanningGrid, sources: &[Cell]) -> Result<DistanceField, PlannerError> {
    solve_fmm_observed(grid, sources, |_, _| {})
}

/// Like [`solve_fmm`], calling `on_accept(cell, value)` each time a cell is
/// finalized. Values are finalized in non-decreasing order.
pub fn solve_fmm_observed(
    grid: &PlanningGrid,
    sources: &[Cell],
    mut on_accept: impl FnMut(Cell, f64),
) -> Result<DistanceField, PlannerError> {
    let size = grid.size();
    let h = grid.resolution();
    let n = size * size;
    let mut values = vec![f64::INFINITY; n];
    let mut known = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut used_sources = Vec::new();
    for &s in sources {
        if grid.is_traversable(s) {
            let i = s.y * size + s.x;
            if values[i] != 0.0 {
                values[i] = 0.0;
                heap.push(Trial { value: 0.0, index: i });
                used_sources.push(s);
            }
        }
    }
    if used_sources.is_empty() {
        return Err(PlannerError::NoTraversableSource);
    }
    let known_value = |values: &[f64], known: &[bool], x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= size as i64 || y >= size as i64 {
            return f64::INFINITY;
        }
        let i = y as usize * size + x as usize;
        if known[i] {
            values[i]
        } else {
            f64::INFINITY
        }
    };
    while let Some(Trial { value, index }) = heap.pop() {
        if known[index] || value > values[index] {
            continue;
        }
        known[index] = true;
        let c = Cell::new(index % size, index / size);
        on_accept(c, value);
        for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let Some(nb) = c.offset(dx, dy, size) else {
                continue;
            };
            let ni = nb.y * size + nb.x;
            if known[ni] || !grid.is_traversable(nb) {
                continue;
            }
            let (x, y) = (nb.x as i64, nb.y as i64);
            let a = known_value(&values, &known, x - 1, y).min(known_value(&values, &known, x + 1, y));
            let b = known_value(&values, &known, x, y - 1).min(known_value(&values, &known, x, y + 1));
            let u = upwind_update(a, b, h);
            if u < values[ni] {
                values[ni] = u;
                heap.push(Trial { value: u, index: ni });
            }
        }
    }
    Ok(DistanceField {
        size,
        resolution: h,
        values,
        grid: grid.clone(),
        sources: used_sources,
    })
}

/// First-order upwind solution of `(u-a)² + (u-b)² = h²` with the one-sided
/// fallback `u = min(a, b) + h`.
pub(crate) fn upwind_update(a: f64, b: f64, h: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if !hi.is_finite() || hi - lo >= h {
        lo + h
    } else {
        let d = hi - lo;
        (lo + hi + (2.0 * h * h - d * d).sqrt()) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(size: usize) -> PlanningGrid {
        PlanningGrid::from_fn(size, 1.0, |_| true)
    }

    #[test]
    fn source_is_zero_and_axis_is_exact() {
        let f = solve_fmm(&open(16), &[Cell::new(0, 0)]).unwrap();
        assert_eq!(f.value(Cell::new(0, 0)), 0.0);
        for x in 0..16 {
            assert!((f.value(Cell::new(x, 0)) - x as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn blocked_cells_are_infinite() {
        let g = PlanningGrid::from_fn(8, 1.0, |c| c != Cell::new(4, 4));
        let f = solve_fmm(&g, &[Cell::new(0, 0)]).unwrap();
        assert_eq!(f.value(Cell::new(4, 4)), f64::INFINITY);
        assert!(f.value(Cell::new(5, 5)).is_finite());
    }

    #[test]
    fn rejects_blocked_sources() {
        let g = PlanningGrid::from_fn(4, 1.0, |c| c.x > 0);
        assert_eq!(
            solve_fmm(&g, &[Cell::new(0, 1)]).unwrap_err(),
            PlannerError::NoTraversableSource
        );
    }

    #[test]
    fn upwind_update_matches_quadratic() {
        let u = upwind_update(1.0, 1.0, 1.0);
        assert!(((u - 1.0).powi(2) * 2.0 - 1.0).abs() < 1e-12);
        assert_eq!(upwind_update(0.0, 5.0, 1.0), 1.0);
        assert_eq!(upwind_update(2.0, f64::INFINITY, 0.5), 2.5);
    }

    #[test]
    fn finalization_order_is_monotone() {
        let g = PlanningGrid::from_fn(24, 0.05, |c| !(c.x == 10 && c.y < 18));
        let mut last = 0.0;
        let mut count = 0;
        solve_fmm_observed(&g, &[Cell::new(2, 2), Cell::new(20, 3)], |_, v| {
            assert!(v >= last);
            last = v;
            count += 1;
        })
        .unwrap();
        assert_eq!(count, 24 * 24 - 18);
    }
}
