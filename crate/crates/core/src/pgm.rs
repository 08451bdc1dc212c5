//! Minimal binary PGM (P5, 8-bit) reading and writing.

use std::io::{self, Write};

pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write(path: &std::path::Path, width: usize, height: usize, pixels: &[u8]) -> io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(width, height, pixels))
}

/// Decodes a P5 image with maxval 255, returning `(width, height, pixels)`.
pub fn decode(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), String> {
    let mut pos = 0;
    let mut header = Vec::with_capacity(4);
    while header.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        header.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if header[0] != "P5" {
        return Err(format!("expected magic P5, found {}", header[0]));
    }
    let parse = |s: &str, what: &str| s.parse::<usize>().map_err(|_| format!("bad {what} {s:?}"));
    let width = parse(&header[1], "width")?;
    let height = parse(&header[2], "height")?;
    let maxval = parse(&header[3], "maxval")?;
    if maxval != 255 {
        return Err(format!("maxval must be 255, found {maxval}"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let data = bytes.get(pos..).unwrap_or_default();
    if data.len() != width * height {
        return Err(format!(
            "expected {} raster bytes, found {}",
            width * height,
            data.len()
        ));
    }
    Ok((width, height, data.to_vec()))
}
