//! Depth-sensor simulation and the stair-detection oracle.

use super::{wrap_angle, MultiFloorWorld, Pose};
use crate::grid::{line_cells, Cell, CellState};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

/// One stair cell reported by the oracle, tagged with the stair it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StairDetection {
    pub cell: Cell,
    pub link: u32,
}

/// Cells observed from one pose.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub visible_free: Vec<Cell>,
    pub visible_occupied: Vec<Cell>,
    pub stair_detections: Vec<StairDetection>,
    pub agent_pose: Pose,
}

impl SensorFrame {
    pub fn empty(agent_pose: Pose) -> Self {
        Self {
            visible_free: Vec::new(),
            visible_occupied: Vec::new(),
            stair_detections: Vec::new(),
            agent_pose,
        }
    }

    pub fn len(&self) -> usize {
        self.visible_free.len() + self.visible_occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy)]
struct Ray {
    dx: i16,
    dy: i16,
    angle: f64,
    start: u32,
    len: u32,
}

/// Range-limited, field-of-view-limited line-of-sight sensor.
///
/// A cell is visible when it lies within `range` of the agent cell center,
/// inside the field of view, and no occupied cell lies strictly between it
/// and the agent cell on the integer line joining them. The lines for every
/// offset within range are precomputed once.
#[derive(Debug, Clone)]
pub struct Sensor {
    range: f64,
    fov: f64,
    resolution: f64,
    rays: Vec<Ray>,
    between: Vec<(i16, i16)>,
}

impl Sensor {
    pub fn new(range: f64, fov: f64, resolution: f64) -> Self {
        let range_cells = (range / resolution).max(0.0);
        let reach = range_cells.floor() as i64;
        let mut rays = Vec::new();
        let mut between = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if dx == 0 && dy == 0 {
                    continue;
                }
                if ((dx * dx + dy * dy) as f64).sqrt() > range_cells + 1e-9 {
                    continue;
                }
                let line = line_cells((0, 0), (dx, dy));
                let start = between.len() as u32;
                for &(x, y) in &line[1..line.len() - 1] {
                    between.push((x as i16, y as i16));
                }
                rays.push(Ray {
                    dx: dx as i16,
                    dy: dy as i16,
                    angle: (dy as f64).atan2(dx as f64),
                    start,
                    len: (line.len() - 2) as u32,
                });
            }
        }
        Self {
            range,
            fov,
            resolution,
            rays,
            between,
        }
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Calls `visit` for every visible cell (the origin first), given an
    /// occlusion predicate over in-bounds cells.
    pub fn for_each_visible(
        &self,
        size: usize,
        origin: Cell,
        heading: f64,
        occludes: impl Fn(Cell) -> bool,
        mut visit: impl FnMut(Cell),
    ) {
        if origin.x >= size || origin.y >= size {
            return;
        }
        visit(origin);
        let full = self.fov >= 2.0 * PI;
        let half = self.fov / 2.0;
        let (ox, oy) = (origin.x as i64, origin.y as i64);
        'rays: for ray in &self.rays {
            if !full && wrap_angle(ray.angle - heading).abs() >= half {
                continue;
            }
            let (tx, ty) = (ox + ray.dx as i64, oy + ray.dy as i64);
            if tx < 0 || ty < 0 || tx >= size as i64 || ty >= size as i64 {
                continue;
            }
            let span = &self.between[ray.start as usize..(ray.start + ray.len) as usize];
            for &(bx, by) in span {
                let c = Cell::new((ox + bx as i64) as usize, (oy + by as i64) as usize);
                if occludes(c) {
                    continue 'rays;
                }
            }
            visit(Cell::new(tx as usize, ty as usize));
        }
    }

    /// Observes `world` from `pose`. Stair cells in view are reported as a
    /// perfect detection; [`detect_stairs`] applies oracle noise.
    pub fn sense(&self, world: &MultiFloorWorld, pose: &Pose) -> SensorFrame {
        let mut frame = SensorFrame::empty(*pose);
        let Some(origin) = pose.cell(world.resolution(), world.size()) else {
            return frame;
        };
        let floor = world.floor(pose.floor);
        let stairs = world.stair_mask(pose.floor);
        self.for_each_visible(
            world.size(),
            origin,
            pose.heading,
            |c| *floor.get(c) == CellState::Occupied,
            |c| {
                match floor.get(c) {
                    CellState::Occupied => frame.visible_occupied.push(c),
                    _ => frame.visible_free.push(c),
                }
                if let Some(link) = stairs.get(c) {
                    frame.stair_detections.push(StairDetection { cell: c, link: *link });
                }
            },
        );
        frame
    }
}

/// One-shot sensing with a freshly built [`Sensor`].
pub fn sense(world: &MultiFloorWorld, pose: &Pose, range: f64, fov: f64) -> SensorFrame {
    Sensor::new(range, fov, world.resolution()).sense(world, pose)
}

/// Noise model of the stair oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct OracleNoise {
    /// Probability that each stair cell detection is dropped.
    pub miss_rate: f64,
    /// Each detected stair instance is dilated or eroded by a uniformly drawn
    /// number of cells in `[-jitter, jitter]`.
    pub boundary_jitter_cells: u32,
}

impl OracleNoise {
    pub const PERFECT: OracleNoise = OracleNoise {
        miss_rate: 0.0,
        boundary_jitter_cells: 0,
    };
}

/// Applies the oracle noise model to the perfect stair detections of `frame`.
///
/// Draws one uniform per detection (in frame order) and, when jitter is
/// enabled, one integer per surviving stair instance.
pub fn detect_stairs<R: Rng + ?Sized>(
    frame: &SensorFrame,
    noise: &OracleNoise,
    rng: &mut R,
) -> Vec<StairDetection> {
    let miss = noise.miss_rate.clamp(0.0, 1.0);
    let mut kept: BTreeMap<u32, HashSet<Cell>> = BTreeMap::new();
    for det in &frame.stair_detections {
        if miss > 0.0 && rng.gen::<f64>() < miss {
            continue;
        }
        kept.entry(det.link).or_default().insert(det.cell);
    }
    if noise.boundary_jitter_cells > 0 {
        let in_frame: HashSet<Cell> = frame
            .visible_free
            .iter()
            .chain(&frame.visible_occupied)
            .copied()
            .collect();
        let j = noise.boundary_jitter_cells as i64;
        for cells in kept.values_mut() {
            let k = rng.gen_range(-j..=j);
            for _ in 0..k.unsigned_abs() {
                *cells = if k > 0 {
                    dilate(cells, &in_frame)
                } else {
                    erode(cells)
                };
            }
        }
    }
    let mut out: Vec<StairDetection> = kept
        .into_iter()
        .flat_map(|(link, cells)| cells.into_iter().map(move |cell| StairDetection { cell, link }))
        .collect();
    out.sort_by_key(|d| (d.cell.y, d.cell.x, d.link));
    out
}

fn neighbors4(c: Cell) -> impl Iterator<Item = Cell> {
    [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)]
        .into_iter()
        .filter_map(move |(dx, dy)| {
            let x = c.x as i64 + dx;
            let y = c.y as i64 + dy;
            (x >= 0 && y >= 0).then(|| Cell::new(x as usize, y as usize))
        })
}

fn dilate(cells: &HashSet<Cell>, allowed: &HashSet<Cell>) -> HashSet<Cell> {
    let mut out = cells.clone();
    for &c in cells {
        out.extend(neighbors4(c).filter(|n| allowed.contains(n)));
    }
    out
}

fn erode(cells: &HashSet<Cell>) -> HashSet<Cell> {
    cells
        .iter()
        .copied()
        .filter(|&c| {
            c.x > 0 && c.y > 0 && neighbors4(c).count() == 4 && neighbors4(c).all(|n| cells.contains(&n))
        })
        .collect()
}
