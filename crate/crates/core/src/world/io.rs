//! World directory format: `meta.json` plus one `floor_<i>.pgm` and one
//! `stairs_<i>.pgm` per floor.

use super::{CellRect, MultiFloorWorld, Pose, StairAxis, StairLink, WorldError};
use crate::grid::{Cell, CellState, Grid};
use crate::pgm;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    n_floors: usize,
    #[serde(rename = "M")]
    size: usize,
    r: f64,
    spawn: SpawnMeta,
    stair_links: Vec<LinkMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpawnMeta {
    floor: usize,
    cell: [usize; 2],
    heading: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<u32>,
    lower: usize,
    upper: usize,
    lower_bbox: [usize; 4],
    upper_bbox: [usize; 4],
    axis: [f64; 2],
}

fn io_err(path: &Path, source: std::io::Error) -> WorldError {
    WorldError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `world` into directory `dir`, creating it if needed.
pub fn save_world(world: &MultiFloorWorld, dir: &Path) -> Result<(), WorldError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let r = world.resolution();
    let spawn = world.spawn();
    let spawn_cell = spawn.cell(r, world.size()).expect("validated spawn");
    let meta = Meta {
        n_floors: world.n_floors(),
        size: world.size(),
        r,
        spawn: SpawnMeta {
            floor: spawn.floor,
            cell: [spawn_cell.x, spawn_cell.y],
            heading: spawn.heading,
        },
        stair_links: world
            .stair_links()
            .iter()
            .map(|l| LinkMeta {
                id: Some(l.id),
                lower: l.lower_floor,
                upper: l.upper_floor,
                lower_bbox: [l.lower_region.x0, l.lower_region.y0, l.lower_region.x1, l.lower_region.y1],
                upper_bbox: [l.upper_region.x0, l.upper_region.y0, l.upper_region.x1, l.upper_region.y1],
                axis: l.axis.vector(),
            })
            .collect(),
    };
    let path = dir.join("meta.json");
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    std::fs::write(&path, json).map_err(|e| io_err(&path, e))?;
    let m = world.size();
    for i in 0..world.n_floors() {
        let px: Vec<u8> = world
            .floor(i)
            .as_slice()
            .iter()
            .map(|s| if *s == CellState::Free { 255 } else { 0 })
            .collect();
        let path = dir.join(format!("floor_{i}.pgm"));
        pgm::write(&path, m, m, &px).map_err(|e| io_err(&path, e))?;
        let px: Vec<u8> = world
            .stair_mask(i)
            .as_slice()
            .iter()
            .map(|s| if s.is_some() { 255 } else { 0 })
            .collect();
        let path = dir.join(format!("stairs_{i}.pgm"));
        pgm::write(&path, m, m, &px).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

fn read_pgm(dir: &Path, name: &str, size: usize) -> Result<Vec<u8>, WorldError> {
    let path = dir.join(name);
    let bytes = std::fs::read(&path).map_err(|e| io_err(&path, e))?;
    let (w, h, px) = pgm::decode(&bytes).map_err(|e| WorldError::invalid(name, e))?;
    if w != size || h != size {
        return Err(WorldError::invalid(
            name,
            format!("image is {w}x{h}, expected {size}x{size}"),
        ));
    }
    if let Some(v) = px.iter().find(|&&v| v != 0 && v != 255) {
        return Err(WorldError::invalid(name, format!("pixel value {v} is neither 0 nor 255")));
    }
    Ok(px)
}

fn rect(b: [usize; 4], field: &str) -> Result<CellRect, WorldError> {
    if b[2] < b[0] || b[3] < b[1] {
        return Err(WorldError::invalid(field, "bbox must be [x0, y0, x1, y1] with x0 <= x1, y0 <= y1"));
    }
    Ok(CellRect::new(b[0], b[1], b[2], b[3]))
}

/// Loads and validates a world directory.
pub fn load_world(dir: &Path) -> Result<MultiFloorWorld, WorldError> {
    let path = dir.join("meta.json");
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let meta: Meta = serde_json::from_str(&text).map_err(|e| WorldError::invalid("meta.json", e.to_string()))?;
    if meta.n_floors == 0 {
        return Err(WorldError::invalid("n_floors", "must be at least 1"));
    }
    if meta.size == 0 {
        return Err(WorldError::invalid("M", "must be positive"));
    }
    let mut links = Vec::with_capacity(meta.stair_links.len());
    for (k, l) in meta.stair_links.iter().enumerate() {
        let field = format!("stair_links[{k}]");
        let axis = StairAxis::from_vector(l.axis)
            .ok_or_else(|| WorldError::invalid(format!("{field}.axis"), "must be an axis-aligned unit vector"))?;
        links.push(StairLink {
            id: l.id.unwrap_or(k as u32),
            lower_floor: l.lower,
            upper_floor: l.upper,
            lower_region: rect(l.lower_bbox, &format!("{field}.lower_bbox"))?,
            upper_region: rect(l.upper_bbox, &format!("{field}.upper_bbox"))?,
            axis,
        });
    }
    let mut floors = Vec::with_capacity(meta.n_floors);
    for i in 0..meta.n_floors {
        let px = read_pgm(dir, &format!("floor_{i}.pgm"), meta.size)?;
        let cells = px
            .iter()
            .map(|&v| if v == 255 { CellState::Free } else { CellState::Occupied })
            .collect();
        floors.push(Grid::from_vec(meta.size, cells));
    }
    let spawn_cell = Cell::new(meta.spawn.cell[0], meta.spawn.cell[1]);
    if spawn_cell.x >= meta.size || spawn_cell.y >= meta.size {
        return Err(WorldError::invalid("spawn", "cell outside the grid"));
    }
    let spawn = Pose::at_cell(meta.spawn.floor, spawn_cell, meta.r, meta.spawn.heading);
    let world = MultiFloorWorld::new(meta.r, floors, links, spawn)?;
    for i in 0..meta.n_floors {
        let name = format!("stairs_{i}.pgm");
        let px = read_pgm(dir, &name, meta.size)?;
        let expected = world.stair_mask(i);
        if let Some((idx, _)) = px
            .iter()
            .zip(expected.as_slice())
            .enumerate()
            .find(|(_, (p, e))| (**p == 255) != e.is_some())
        {
            let c = expected.cell_of(idx);
            return Err(WorldError::invalid(
                name,
                format!("stair mask disagrees with stair_links at cell ({}, {})", c.x, c.y),
            ));
        }
    }
    Ok(world)
}
