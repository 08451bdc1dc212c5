//! Frontier cells, frontier edges and classical frontier scoring.

use crate::grid::{components4, Cell, CellState, NEIGHBORS_4};
use crate::mapping::FloorMap;
use crate::planner::DistanceField;

/// Default minimum edge size; smaller components are treated as sensor noise.
pub const DEFAULT_MIN_EDGE_CELLS: usize = 4;
/// Default cost decay of the utility score, in 1/m.
pub const DEFAULT_LAMBDA: f64 = 0.25;

/// A 4-connected component of frontier cells.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierEdge {
    /// Member cells in `(y, x)` order.
    pub cells: Vec<Cell>,
    /// Mean of the member cell centers, in cell units.
    pub centroid: (f64, f64),
    /// Cell the edge is navigated to: the centroid cell if it is known free,
    /// otherwise the member cell closest to the centroid.
    pub goal: Cell,
}

impl FrontierEdge {
    fn new(cells: Vec<Cell>, map: &FloorMap) -> Self {
        let n = cells.len() as f64;
        let cx = cells.iter().map(|c| c.x as f64 + 0.5).sum::<f64>() / n;
        let cy = cells.iter().map(|c| c.y as f64 + 0.5).sum::<f64>() / n;
        let centroid_cell = Cell::new(cx.floor() as usize, cy.floor() as usize);
        let goal = if map.state(centroid_cell) == CellState::Free {
            centroid_cell
        } else {
            let d = |c: &Cell| (c.x as f64 + 0.5 - cx).powi(2) + (c.y as f64 + 0.5 - cy).powi(2);
            *cells
                .iter()
                .min_by(|a, b| d(a).total_cmp(&d(b)))
                .expect("edges are non-empty")
        };
        Self {
            cells,
            centroid: (cx, cy),
            goal,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Frontier cells of a map and the edges retained from them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrontierSet {
    /// All frontier cells, including those of discarded small components.
    pub cells: Vec<Cell>,
    pub edges: Vec<FrontierEdge>,
    pub resolution: f64,
}

impl FrontierSet {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// A free cell with at least one unknown 4-neighbor. Cells outside the map
/// do not count as unknown.
pub fn is_frontier_cell(map: &FloorMap, c: Cell) -> bool {
    let size = map.size();
    map.state(c) == CellState::Free
        && NEIGHBORS_4.iter().any(|&(dx, dy)| {
            c.offset(dx, dy, size)
                .is_some_and(|n| map.state(n) == CellState::Unknown)
        })
}

pub fn detect_frontiers(map: &FloorMap, min_edge_cells: usize) -> FrontierSet {
    let size = map.size();
    let mask: Vec<bool> = (0..size * size)
        .map(|i| is_frontier_cell(map, Cell::new(i % size, i / size)))
        .collect();
    let member = |c: Cell| mask[c.y * size + c.x];
    let mut cells: Vec<Cell> = (0..size * size)
        .filter(|&i| mask[i])
        .map(|i| Cell::new(i % size, i / size))
        .collect();
    cells.sort_by_key(|c| (c.y, c.x));
    let edges = components4(size, member)
        .into_iter()
        .filter(|comp| comp.len() >= min_edge_cells.max(1))
        .map(|comp| FrontierEdge::new(comp, map))
        .collect();
    FrontierSet {
        cells,
        edges,
        resolution: map.resolution(),
    }
}

/// Information potential of an edge: unknown cells whose centers lie within
/// `radius` meters of the edge centroid.
pub fn information_gain(map: &FloorMap, edge: &FrontierEdge, radius: f64) -> usize {
    let size = map.size() as i64;
    let r = radius / map.resolution();
    let (cx, cy) = edge.centroid;
    let (x0, x1) = ((cx - r).floor().max(0.0) as i64, ((cx + r).ceil() as i64).min(size - 1));
    let (y0, y1) = ((cy - r).floor().max(0.0) as i64, ((cy + r).ceil() as i64).min(size - 1));
    let mut count = 0;
    for y in y0..=y1 {
        let dy = y as f64 + 0.5 - cy;
        for x in x0..=x1 {
            let dx = x as f64 + 0.5 - cx;
            if dx * dx + dy * dy <= r * r
                && map.state(Cell::new(x as usize, y as usize)) == CellState::Unknown
            {
                count += 1;
            }
        }
    }
    count
}

/// `U · e^{−λC}`, zero when the cost is infinite.
pub fn utility_from(gain: f64, cost: f64, lambda: f64) -> f64 {
    if cost.is_finite() {
        gain * (-lambda * cost).exp()
    } else {
        0.0
    }
}

/// Utility score of an edge given an optimistic distance field rooted at the
/// agent.
pub fn utility_score(
    edge: &FrontierEdge,
    field: &DistanceField,
    map: &FloorMap,
    lambda: f64,
    radius: f64,
) -> f64 {
    let cost = field.value(edge.goal);
    if !cost.is_finite() {
        return 0.0;
    }
    utility_from(information_gain(map, edge, radius) as f64, cost, lambda)
}

/// Euclidean distance in meters from `goal` to the nearest cell of any
/// retained edge, `+∞` without edges.
pub fn distance_to_frontier_edges(goal: Cell, fs: &FrontierSet) -> f64 {
    let cells = fs.edges.iter().flat_map(|e| e.cells.iter());
    match cells.map(|c| goal.distance(*c)).min_by(f64::total_cmp) {
        Some(d) => d * fs.resolution,
        None => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{solve_fmm, PlanningGrid, UnknownPolicy};

    fn fill(map: &mut FloorMap, x0: usize, y0: usize, x1: usize, y1: usize, s: CellState) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                map.set_state(Cell::new(x, y), s);
            }
        }
    }

    #[test]
    fn trivial_maps_have_no_frontier() {
        let blank = FloorMap::new(0, 16, 0.05);
        assert!(detect_frontiers(&blank, 1).cells.is_empty());
        let mut full = FloorMap::new(0, 16, 0.05);
        fill(&mut full, 0, 0, 15, 15, CellState::Free);
        assert!(detect_frontiers(&full, 1).cells.is_empty());
    }

    #[test]
    fn half_explored_corridor() {
        // Corridor rows 6..=9 walled at rows 5 and 10, explored up to x = 7.
        let mut m = FloorMap::new(0, 16, 0.05);
        fill(&mut m, 0, 5, 7, 5, CellState::Occupied);
        fill(&mut m, 0, 10, 7, 10, CellState::Occupied);
        fill(&mut m, 0, 6, 7, 9, CellState::Free);
        let fs = detect_frontiers(&m, 4);
        let expected: Vec<Cell> = (6..=9).map(|y| Cell::new(7, y)).collect();
        assert_eq!(fs.cells, expected);
        assert_eq!(fs.edges.len(), 1);
        assert_eq!(fs.edges[0].cells, expected);
        assert_eq!(fs.edges[0].centroid, (7.5, 8.0));
        assert_eq!(fs.edges[0].goal, Cell::new(7, 8));
        assert!(detect_frontiers(&m, 5).edges.is_empty());
    }

    #[test]
    fn distance_examples() {
        let mut m = FloorMap::new(0, 16, 0.05);
        fill(&mut m, 3, 4, 3, 7, CellState::Free);
        let fs = detect_frontiers(&m, 1);
        assert_eq!(distance_to_frontier_edges(Cell::new(3, 5), &fs), 0.0);
        assert!((distance_to_frontier_edges(Cell::new(0, 0), &fs) - 0.25).abs() < 1e-12);
        assert_eq!(
            distance_to_frontier_edges(Cell::new(0, 0), &FrontierSet::default()),
            f64::INFINITY
        );
    }

    #[test]
    fn utility_examples() {
        assert!((utility_from(100.0, 10.0, 0.1) - 100.0 * (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(utility_from(42.0, 3.0, 0.0), 42.0);
        assert_eq!(utility_from(42.0, f64::INFINITY, 0.5), 0.0);
    }

    #[test]
    fn unreachable_edge_scores_zero() {
        let mut m = FloorMap::new(0, 16, 0.05);
        fill(&mut m, 0, 0, 15, 15, CellState::Free);
        fill(&mut m, 8, 0, 8, 15, CellState::Occupied);
        fill(&mut m, 12, 4, 14, 8, CellState::Unknown);
        let fs = detect_frontiers(&m, 1);
        let field = solve_fmm(
            &PlanningGrid::from_map(&m, UnknownPolicy::Traversable, 0),
            &[Cell::new(2, 2)],
        )
        .unwrap();
        // The ring around the unknown pocket splits at its corners.
        assert_eq!(fs.edges.len(), 4);
        for e in &fs.edges {
            assert_eq!(utility_score(e, &field, &m, 0.25, 1.0), 0.0);
        }
    }

    #[test]
    fn gain_counts_unknown_disc() {
        let mut m = FloorMap::new(0, 32, 0.05);
        fill(&mut m, 0, 0, 15, 31, CellState::Free);
        let fs = detect_frontiers(&m, 1);
        let edge = &fs.edges[0];
        let r = 4.0;
        let brute = m
            .explored()
            .cells()
            .filter(|c| m.state(*c) == CellState::Unknown)
            .filter(|c| {
                (c.x as f64 + 0.5 - edge.centroid.0).powi(2) + (c.y as f64 + 0.5 - edge.centroid.1).powi(2)
                    <= (r / 0.05f64).powi(2)
            })
            .count();
        assert_eq!(information_gain(&m, edge, r), brute);
    }
}
