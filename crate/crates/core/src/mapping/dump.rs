use super::FloorMap;
use crate::grid::CellState;
use crate::pgm;
use serde_json::json;
use std::path::Path;

/// Pixel value for unknown cells in map dumps.
pub const UNKNOWN_PIXEL: u8 = 128;

/// Writes floor maps as `meta.json`, `floor_<i>.pgm` (0 occupied, 255 free,
/// 128 unknown), `stairs_<i>.pgm` and `trajectory_<i>.pgm`.
pub fn dump_maps<'a>(
    maps: impl IntoIterator<Item = &'a FloorMap>,
    dir: &Path,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut floors = Vec::new();
    let mut size = 0;
    let mut resolution = 0.0;
    for map in maps {
        let i = map.floor();
        size = map.size();
        resolution = map.resolution();
        floors.push(i);
        let px: Vec<u8> = map
            .explored()
            .as_slice()
            .iter()
            .map(|s| match s {
                CellState::Free => 255,
                CellState::Occupied => 0,
                CellState::Unknown => UNKNOWN_PIXEL,
            })
            .collect();
        pgm::write(&dir.join(format!("floor_{i}.pgm")), size, size, &px)?;
        let px: Vec<u8> = map
            .stair_mask()
            .as_slice()
            .iter()
            .map(|s| if s.is_some() { 255 } else { 0 })
            .collect();
        pgm::write(&dir.join(format!("stairs_{i}.pgm")), size, size, &px)?;
        let px: Vec<u8> = map
            .visits()
            .as_slice()
            .iter()
            .map(|&v| if v > 0 { 255 } else { 0 })
            .collect();
        pgm::write(&dir.join(format!("trajectory_{i}.pgm")), size, size, &px)?;
    }
    let meta = json!({
        "n_floors": floors.len(),
        "M": size,
        "r": resolution,
        "floors": floors,
        "unknown_value": UNKNOWN_PIXEL,
    });
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)
}
