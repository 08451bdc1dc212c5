//! Procedural room-and-corridor worlds.

use super::{CellRect, MultiFloorWorld, Pose, StairAxis, StairLink, WorldError};
use crate::grid::{components4, Cell, CellState, Grid};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Parameters of a generated world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub n_floors: usize,
    /// Grid side length in cells.
    #[serde(alias = "M")]
    pub size: usize,
    /// Meters per cell.
    #[serde(alias = "r")]
    pub resolution: f64,
    /// Target fraction of the floor area covered by rooms, in `(0, 1]`.
    pub room_density: f64,
    /// Stairs between each pair of consecutive floors. The first is
    /// required; further ones are placed where the layout leaves room.
    pub stair_count_per_junction: usize,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            n_floors: 1,
            size: 128,
            resolution: 0.05,
            room_density: 0.35,
            stair_count_per_junction: 1,
        }
    }
}

const MAX_ATTEMPTS: usize = 64;
const MARGIN: i64 = 2;
const APPROACH: i64 = 4;

/// Generates a world. Pure function of `(seed, spec)`.
pub fn generate_world(seed: u64, spec: &WorldSpec) -> Result<MultiFloorWorld, WorldError> {
    if spec.n_floors == 0 {
        return Err(WorldError::invalid("n_floors", "must be at least 1"));
    }
    if spec.size < 32 {
        return Err(WorldError::invalid("M", "must be at least 32"));
    }
    if !(spec.resolution.is_finite() && spec.resolution > 0.0) {
        return Err(WorldError::invalid("r", "must be positive"));
    }
    if !(spec.room_density > 0.0 && spec.room_density <= 1.0) {
        return Err(WorldError::invalid("room_density", "must lie in (0, 1]"));
    }
    if spec.n_floors > 1 && spec.stair_count_per_junction == 0 {
        return Err(WorldError::invalid(
            "stair_count_per_junction",
            "consecutive floors need at least one stair",
        ));
    }
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        match Generator::new(spec).run(&mut rng) {
            Ok(w) => return Ok(w),
            Err(reason) => last = reason,
        }
    }
    Err(WorldError::Generation {
        seed,
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

/// Stair placement in a local frame: `t` runs along the ascent direction
/// from the lower rectangle's entrance, `u` across it from `lateral`.
#[derive(Debug, Clone, Copy)]
struct Placement {
    axis: StairAxis,
    origin: i64,
    lateral: i64,
    width: i64,
    length: i64,
}

impl Placement {
    fn cell(&self, t: i64, u: i64) -> (i64, i64) {
        match self.axis {
            StairAxis::PosY => (self.lateral + u, self.origin + t),
            StairAxis::NegY => (self.lateral + u, self.origin - t),
            StairAxis::PosX => (self.origin + t, self.lateral + u),
            StairAxis::NegX => (self.origin - t, self.lateral + u),
        }
    }

    /// Rectangle covering `t ∈ [t0, t1]`, `u ∈ [u0, u1]`, or `None` when it
    /// leaves `[MARGIN, size - 1 - MARGIN]`.
    fn rect(&self, t0: i64, t1: i64, u0: i64, u1: i64, size: usize) -> Option<CellRect> {
        let (ax, ay) = self.cell(t0, u0);
        let (bx, by) = self.cell(t1, u1);
        let (x0, x1) = (ax.min(bx), ax.max(bx));
        let (y0, y1) = (ay.min(by), ay.max(by));
        let hi = size as i64 - 1 - MARGIN;
        if x0 < MARGIN || y0 < MARGIN || x1 > hi || y1 > hi {
            return None;
        }
        Some(CellRect::new(x0 as usize, y0 as usize, x1 as usize, y1 as usize))
    }

    fn lower(&self, size: usize) -> Option<CellRect> {
        self.rect(0, self.length - 1, 0, self.width - 1, size)
    }

    fn upper(&self, size: usize) -> Option<CellRect> {
        self.rect(self.length, 2 * self.length - 1, 0, self.width - 1, size)
    }

    fn side_walls(&self, size: usize) -> Option<[CellRect; 2]> {
        let t1 = 2 * self.length - 1;
        Some([
            self.rect(0, t1, -1, -1, size)?,
            self.rect(0, t1, self.width, self.width, size)?,
        ])
    }

    fn entrance_approach(&self, size: usize) -> Option<CellRect> {
        self.rect(-APPROACH, -1, -1, self.width, size)
    }

    fn landing(&self, depth: i64, size: usize) -> Option<CellRect> {
        let t0 = 2 * self.length;
        self.rect(t0, t0 + depth - 1, -3, self.width + 2, size)
    }

    fn footprint(&self, depth: i64, size: usize) -> Option<CellRect> {
        self.rect(-APPROACH, 2 * self.length + depth - 1, -3, self.width + 2, size)
    }
}

fn overlaps(a: &CellRect, b: &CellRect) -> bool {
    a.x0 <= b.x1 && b.x0 <= a.x1 && a.y0 <= b.y1 && b.y0 <= a.y1
}

fn fill(grid: &mut Grid<CellState>, rect: &CellRect, state: CellState) {
    for c in rect.cells() {
        grid.set(c, state);
    }
}

struct Generator<'a> {
    spec: &'a WorldSpec,
    room_min: usize,
    room_max: usize,
    corridor: usize,
    stair_width: i64,
    stair_length: i64,
    landing_depth: i64,
}

impl<'a> Generator<'a> {
    fn new(spec: &'a WorldSpec) -> Self {
        let m = spec.size;
        let room_min = (m / 8).max(8);
        let stair_width = 7;
        Self {
            spec,
            room_min,
            room_max: (m / 4).max(room_min + 4),
            corridor: (m / 16).max(6),
            stair_width,
            // A stair half is never wider than it is long.
            stair_length: (m as i64 / 10).clamp(stair_width, 24),
            landing_depth: (room_min as i64).max(10),
        }
    }

    fn run(&self, rng: &mut ChaCha8Rng) -> Result<MultiFloorWorld, String> {
        let m = self.spec.size;
        let mut floors: Vec<Grid<CellState>> = Vec::new();
        let mut links: Vec<StairLink> = Vec::new();
        let mut placements: Vec<(usize, Placement)> = Vec::new();
        let mut reserved: Vec<Vec<CellRect>> = vec![Vec::new(); self.spec.n_floors];

        for f in 0..self.spec.n_floors {
            let landings: Vec<CellRect> = placements
                .iter()
                .filter(|(lower, _)| lower + 1 == f)
                .map(|(_, p)| p.landing(self.landing_depth, m).expect("checked at placement"))
                .collect();
            let blocked: Vec<CellRect> = placements
                .iter()
                .filter(|(lower, _)| lower + 1 == f)
                .map(|(_, p)| p.rect(0, p.length - 1, -1, p.width, m).expect("checked at placement"))
                .collect();
            let mut grid = self.layout(rng, &landings, &blocked);

            // Upper halves of the stairs arriving from below.
            for (_, p) in placements.iter().filter(|(lower, _)| lower + 1 == f) {
                fill(&mut grid, &p.lower(m).unwrap(), CellState::Occupied);
                for w in p.side_walls(m).unwrap() {
                    fill(&mut grid, &w, CellState::Occupied);
                }
                fill(&mut grid, &p.upper(m).unwrap(), CellState::Free);
            }

            if f + 1 < self.spec.n_floors {
                for k in 0..self.spec.stair_count_per_junction {
                    let Some(p) = self.place_stair(rng, &grid, &reserved[f], &reserved[f + 1]) else {
                        if k == 0 {
                            return Err(format!("no room for a stair between floors {f} and {}", f + 1));
                        }
                        break;
                    };
                    let fp = p.footprint(self.landing_depth, m).unwrap();
                    reserved[f].push(fp);
                    reserved[f + 1].push(fp);
                    fill(&mut grid, &p.upper(m).unwrap(), CellState::Occupied);
                    for w in p.side_walls(m).unwrap() {
                        fill(&mut grid, &w, CellState::Occupied);
                    }
                    fill(&mut grid, &p.lower(m).unwrap(), CellState::Free);
                    links.push(StairLink {
                        id: links.len() as u32,
                        lower_floor: f,
                        upper_floor: f + 1,
                        lower_region: p.lower(m).unwrap(),
                        upper_region: p.upper(m).unwrap(),
                        axis: p.axis,
                    });
                    placements.push((f, p));
                }
            }

            // Keep the largest free component; every stair must live in it.
            let free_before = grid.as_slice().iter().filter(|&&s| s == CellState::Free).count();
            let comps = components4(m, |c| *grid.get(c) == CellState::Free);
            let main = comps
                .iter()
                .max_by_key(|c| c.len())
                .ok_or_else(|| format!("floor {f} has no free space"))?
                .clone();
            if main.len() * 2 < free_before {
                return Err(format!("floor {f} split by stair walls"));
            }
            for comp in &comps {
                if comp.len() != main.len() || comp[0] != main[0] {
                    for &c in comp {
                        grid.set(c, CellState::Occupied);
                    }
                }
            }
            for link in &links {
                if let Some(rect) = link.region_on(f) {
                    if rect.cells().any(|c| *grid.get(c) != CellState::Free) {
                        return Err(format!("stair {} cut off on floor {f}", link.id));
                    }
                }
            }
            floors.push(grid);
        }

        let spawn = self.pick_spawn(rng, &floors[0], &links)?;
        MultiFloorWorld::new(self.spec.resolution, floors, links, spawn).map_err(|e| e.to_string())
    }

    /// Rooms joined by corridors; corridors avoid `blocked` where an L-shape
    /// allows it.
    fn layout(&self, rng: &mut ChaCha8Rng, landings: &[CellRect], blocked: &[CellRect]) -> Grid<CellState> {
        let m = self.spec.size;
        let mut grid = Grid::new(m, CellState::Occupied);
        let mut rooms: Vec<CellRect> = landings.to_vec();
        let mean = (self.room_min + self.room_max) as f64 / 2.0;
        let target = ((self.spec.room_density * (m * m) as f64 / (mean * mean)).round() as usize).max(2);
        let hi = m - 1 - MARGIN as usize;
        let mut tries = 0;
        while rooms.len() < target + landings.len() && tries < 400 {
            tries += 1;
            let w = rng.gen_range(self.room_min..=self.room_max);
            let h = rng.gen_range(self.room_min..=self.room_max);
            if w + 2 * MARGIN as usize >= m || h + 2 * MARGIN as usize >= m {
                continue;
            }
            let x0 = rng.gen_range(MARGIN as usize..=hi + 1 - w);
            let y0 = rng.gen_range(MARGIN as usize..=hi + 1 - h);
            let room = CellRect::new(x0, y0, x0 + w - 1, y0 + h - 1);
            let padded = CellRect::new(
                room.x0.saturating_sub(3),
                room.y0.saturating_sub(3),
                room.x1 + 3,
                room.y1 + 3,
            );
            if rooms.iter().any(|r| overlaps(r, &padded)) {
                continue;
            }
            rooms.push(room);
        }
        for r in &rooms {
            fill(&mut grid, r, CellState::Free);
        }
        // Minimum spanning tree over room centers, joined by L-shaped corridors.
        let centers: Vec<(usize, usize)> = rooms
            .iter()
            .map(|r| ((r.x0 + r.x1) / 2, (r.y0 + r.y1) / 2))
            .collect();
        let mut in_tree = vec![false; rooms.len()];
        let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, 0); rooms.len()];
        if !rooms.is_empty() {
            in_tree[0] = true;
            for j in 1..rooms.len() {
                best[j] = (dist(centers[0], centers[j]), 0);
            }
        }
        for _ in 1..rooms.len() {
            let (next, _) = (0..rooms.len())
                .filter(|&j| !in_tree[j])
                .map(|j| (j, best[j].0))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap();
            in_tree[next] = true;
            let from = best[next].1;
            self.corridor(rng, &mut grid, centers[from], centers[next], blocked);
            for j in 0..rooms.len() {
                if !in_tree[j] {
                    let d = dist(centers[next], centers[j]);
                    if d < best[j].0 {
                        best[j] = (d, next);
                    }
                }
            }
        }
        grid
    }

    fn corridor(
        &self,
        rng: &mut ChaCha8Rng,
        grid: &mut Grid<CellState>,
        a: (usize, usize),
        b: (usize, usize),
        blocked: &[CellRect],
    ) {
        let m = self.spec.size;
        let half = self.corridor / 2;
        let lo = MARGIN as usize;
        let hi = m - 1 - MARGIN as usize;
        let span = |p: usize, q: usize| {
            let s = p.min(q).saturating_sub(half).max(lo);
            let e = (p.max(q) + self.corridor - half - 1).min(hi);
            (s, e)
        };
        let mut corners = [(b.0, a.1), (a.0, b.1)];
        if rng.gen_bool(0.5) {
            corners.swap(0, 1);
        }
        let segments = |corner: (usize, usize)| {
            [(a, corner), (corner, b)].map(|(p, q)| {
                let (x0, x1) = span(p.0, q.0);
                let (y0, y1) = span(p.1, q.1);
                CellRect::new(x0, y0, x1, y1)
            })
        };
        let clear = |segs: &[CellRect; 2]| !segs.iter().any(|s| blocked.iter().any(|r| overlaps(r, s)));
        let first = segments(corners[0]);
        let second = segments(corners[1]);
        let chosen = if clear(&first) || !clear(&second) { first } else { second };
        for seg in &chosen {
            fill(grid, seg, CellState::Free);
        }
    }

    fn place_stair(
        &self,
        rng: &mut ChaCha8Rng,
        grid: &Grid<CellState>,
        reserved_here: &[CellRect],
        reserved_above: &[CellRect],
    ) -> Option<Placement> {
        let m = self.spec.size as i64;
        for _ in 0..2000 {
            let axis = *StairAxis::ALL.choose(rng).unwrap();
            let p = Placement {
                axis,
                origin: rng.gen_range(0..m),
                lateral: rng.gen_range(0..m),
                width: self.stair_width,
                length: self.stair_length,
            };
            let size = self.spec.size;
            let Some(fp) = p.footprint(self.landing_depth, size) else {
                continue;
            };
            if reserved_here.iter().chain(reserved_above).any(|r| overlaps(r, &fp)) {
                continue;
            }
            // The stairwell sits in solid wall and opens onto free space only
            // at its entrance, so it never slices a room into hidden pockets.
            let approach = p.entrance_approach(size).unwrap();
            let well = p.rect(0, 2 * p.length - 1, -1, p.width, size).unwrap();
            if approach.cells().all(|c| *grid.get(c) == CellState::Free)
                && well.cells().all(|c| *grid.get(c) == CellState::Occupied)
            {
                return Some(p);
            }
        }
        None
    }

    fn pick_spawn(
        &self,
        rng: &mut ChaCha8Rng,
        floor: &Grid<CellState>,
        links: &[StairLink],
    ) -> Result<Pose, String> {
        let m = self.spec.size;
        let clear = 4i64;
        let candidates: Vec<Cell> = floor
            .cells()
            .filter(|&c| {
                (-clear..=clear).all(|dy| {
                    (-clear..=clear).all(|dx| {
                        c.offset(dx, dy, m)
                            .is_some_and(|n| *floor.get(n) == CellState::Free)
                    })
                }) && !links.iter().any(|l| l.region_on(0).is_some_and(|r| r.contains(c)))
            })
            .collect();
        let cell = *candidates.choose(rng).ok_or("no spawn cell with clearance")?;
        Ok(Pose::at_cell(0, cell, self.spec.resolution, rng.gen_range(-PI..PI)))
    }
}

fn dist(a: (usize, usize), b: (usize, usize)) -> f64 {
    (a.0 as f64 - b.0 as f64).hypot(a.1 as f64 - b.1 as f64)
}
