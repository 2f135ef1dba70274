//! Binary PGM (P5) export for map inspection.

use std::path::Path;

use anyhow::{Context, Result};

/// `pixels` is row-major with row 0 at the top of the image.
pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Writes a grid whose row 0 is at `y = 0`, flipped so north is up.
pub fn write_grid(path: &Path, width: usize, height: usize, cells: &[u8]) -> Result<()> {
    let mut flipped = Vec::with_capacity(cells.len());
    for row in (0..height).rev() {
        flipped.extend_from_slice(&cells[row * width..(row + 1) * width]);
    }
    std::fs::write(path, encode(width, height, &flipped)).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_flip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.pgm");
        write_grid(&p, 2, 2, &[1, 2, 3, 4]).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"P5\n2 2\n255\n\x03\x04\x01\x02");
    }
}
