//! Square grids, cell coordinates and the shared cell-state encoding.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Integer cell coordinate. `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Offsets this cell by `(dx, dy)`, returning `None` outside `[0, size)²`.
    pub fn offset(self, dx: i64, dy: i64, size: usize) -> Option<Cell> {
        let x = self.x as i64 + dx;
        let y = self.y as i64 + dy;
        if x < 0 || y < 0 || x >= size as i64 || y >= size as i64 {
            None
        } else {
            Some(Cell::new(x as usize, y as usize))
        }
    }

    /// Center of the cell in metric coordinates.
    pub fn center(self, resolution: f64) -> (f64, f64) {
        ((self.x as f64 + 0.5) * resolution, (self.y as f64 + 0.5) * resolution)
    }

    /// Euclidean distance in cells.
    pub fn distance(self, other: Cell) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx.hypot(dy)
    }

    /// Cell containing the metric point `(x, y)`, if inside the grid.
    pub fn from_point(x: f64, y: f64, resolution: f64, size: usize) -> Option<Cell> {
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 {
            return None;
        }
        let cx = (x / resolution).floor() as usize;
        let cy = (y / resolution).floor() as usize;
        (cx < size && cy < size).then_some(Cell::new(cx, cy))
    }
}

pub const NEIGHBORS_4: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
pub const NEIGHBORS_8: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Occupancy state. The numeric values are the on-disk and in-memory encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellState {
    #[default]
    Unknown = 0,
    Free = 1,
    Occupied = 2,
}

/// A square `size × size` grid stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    size: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn new(size: usize, fill: T) -> Self {
        Self {
            size,
            data: vec![fill; size * size],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(size: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), size * size, "grid data length mismatch");
        Self { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        cell.y * self.size + cell.x
    }

    #[inline]
    pub fn cell_of(&self, index: usize) -> Cell {
        Cell::new(index % self.size, index / self.size)
    }

    #[inline]
    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.size && cell.y < self.size
    }

    #[inline]
    pub fn get(&self, cell: Cell) -> &T {
        &self.data[cell.y * self.size + cell.x]
    }

    #[inline]
    pub fn get_mut(&mut self, cell: Cell) -> &mut T {
        &mut self.data[cell.y * self.size + cell.x]
    }

    #[inline]
    pub fn set(&mut self, cell: Cell, value: T) {
        let i = self.index(cell);
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let size = self.size;
        (0..size * size).map(move |i| Cell::new(i % size, i / size))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, &T)> + '_ {
        let size = self.size;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (Cell::new(i % size, i / size), v))
    }

    pub fn neighbors4(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS_4
            .iter()
            .filter_map(move |&(dx, dy)| cell.offset(dx, dy, self.size))
    }

    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS_8
            .iter()
            .filter_map(move |&(dx, dy)| cell.offset(dx, dy, self.size))
    }
}

/// Breadth-first flood fill from `start` over cells where `passable` holds.
///
/// Uses 4-connectivity when `eight` is false. Returns a membership mask.
pub fn flood_fill(
    size: usize,
    start: Cell,
    eight: bool,
    passable: impl Fn(Cell) -> bool,
) -> Grid<bool> {
    let mut seen = Grid::new(size, false);
    if start.x >= size || start.y >= size || !passable(start) {
        return seen;
    }
    let offsets: &[(i64, i64)] = if eight { &NEIGHBORS_8 } else { &NEIGHBORS_4 };
    let mut queue = VecDeque::from([start]);
    seen.set(start, true);
    while let Some(c) = queue.pop_front() {
        for &(dx, dy) in offsets {
            if let Some(n) = c.offset(dx, dy, size) {
                if !*seen.get(n) && passable(n) {
                    seen.set(n, true);
                    queue.push_back(n);
                }
            }
        }
    }
    seen
}

/// 4-connected components of the cells selected by `member`, each sorted by
/// row-major index. Components are ordered by their smallest cell.
pub fn components4(size: usize, member: impl Fn(Cell) -> bool) -> Vec<Vec<Cell>> {
    let mut label = vec![false; size * size];
    let mut out = Vec::new();
    for start_idx in 0..size * size {
        let start = Cell::new(start_idx % size, start_idx / size);
        if label[start_idx] || !member(start) {
            continue;
        }
        label[start_idx] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for &(dx, dy) in &NEIGHBORS_4 {
                if let Some(n) = c.offset(dx, dy, size) {
                    let ni = n.y * size + n.x;
                    if !label[ni] && member(n) {
                        label[ni] = true;
                        comp.push(n);
                        queue.push_back(n);
                    }
                }
            }
        }
        comp.sort_by_key(|c| c.y * size + c.x);
        out.push(comp);
    }
    out
}

/// Integer line from `a` to `b` (Bresenham, generalised to all octants).
///
/// Both endpoints are included. The sequence is deterministic for a given
/// ordered pair.
pub fn line_cells(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push((x, y));
        if x == b.0 && y == b.1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}
