//! Portable float map (PFM) codec for single-channel depth maps.
//!
//! Header: `Pf`, then `width height`, then a scale whose sign gives the byte
//! order (negative = little-endian). Rows are stored bottom-to-top; the
//! decoded grid is top-to-bottom.

use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endian {
    Little,
    Big,
}

pub fn decode(bytes: &[u8]) -> Result<Grid<f32>, String> {
    let mut pos = 0;
    let mut token = || -> Result<&str, String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        std::str::from_utf8(&bytes[start..pos]).map_err(|_| "non-ascii header".to_string())
    };

    match token()? {
        "Pf" => {}
        "PF" => return Err("three-channel PFM is not a depth map".into()),
        other => return Err(format!("bad magic {other:?}")),
    }
    let width: usize = token()?.parse().map_err(|_| "bad width")?;
    let height: usize = token()?.parse().map_err(|_| "bad height")?;
    let scale: f32 = token()?.parse().map_err(|_| "bad scale")?;
    if width == 0 || height == 0 {
        return Err("zero-area image".into());
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err("scale must be finite and nonzero".into());
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("missing raster".into());
    }
    pos += 1;

    let n = width.checked_mul(height).ok_or("dimensions overflow")?;
    let raster = &bytes[pos..];
    if raster.len() != n * 4 {
        return Err(format!(
            "expected {} raster bytes, found {}",
            n * 4,
            raster.len()
        ));
    }
    let endian = if scale < 0.0 { Endian::Little } else { Endian::Big };
    let mut data = vec![0f32; n];
    for (i, chunk) in raster.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = match endian {
            Endian::Little => f32::from_le_bytes(b),
            Endian::Big => f32::from_be_bytes(b),
        };
        let (x, row_from_bottom) = (i % width, i / width);
        data[(height - 1 - row_from_bottom) * width + x] = v;
    }
    Ok(Grid::from_vec(width, height, data).expect("length checked above"))
}

pub fn encode(grid: &Grid<f32>, endian: Endian) -> Vec<u8> {
    let scale = match endian {
        Endian::Little => "-1.0",
        Endian::Big => "1.0",
    };
    let mut out = format!("Pf\n{} {}\n{}\n", grid.width(), grid.height(), scale).into_bytes();
    for y in (0..grid.height()).rev() {
        for &v in grid.row(y) {
            match endian {
                Endian::Little => out.extend_from_slice(&v.to_le_bytes()),
                Endian::Big => out.extend_from_slice(&v.to_be_bytes()),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_pixel() {
        let g = Grid::from_vec(1, 1, vec![3.5f32]).unwrap();
        for e in [Endian::Little, Endian::Big] {
            assert_eq!(decode(&encode(&g, e)).unwrap(), g);
        }
        assert_eq!(
            decode(b"Pf\n1 1\n-1.0\n\x00\x00\x60\x40").unwrap().as_slice(),
            &[3.5]
        );
    }

    #[test]
    fn rows_are_stored_bottom_up() {
        // two rows: file order is bottom row (2.0) then top row (1.0)
        let mut bytes = b"Pf\n1 2\n-1\n".to_vec();
        bytes.extend_from_slice(&2.0f32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        assert_eq!(decode(&bytes).unwrap().as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn malformed_headers() {
        assert!(decode(b"P6\n1 1\n-1\n\0\0\0\0").is_err());
        assert!(decode(b"PF\n1 1\n-1\n\0\0\0\0").is_err());
        assert!(decode(b"Pf\n0 1\n-1\n").is_err());
        assert!(decode(b"Pf\n2 1\n-1\n\0\0\0\0").is_err());
        assert!(decode(b"Pf\n1 1\n0\n\0\0\0\0").is_err());
        assert!(decode(b"Pf\n1 1").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..6, h in 1usize..6, seed in any::<u64>(), little in any::<bool>()) {
            let g = Grid::from_fn(w, h, |x, y| ((seed ^ (x * 31 + y * 7) as u64) % 1000) as f32 * 0.25);
            let e = if little { Endian::Little } else { Endian::Big };
            prop_assert_eq!(decode(&encode(&g, e)).unwrap(), g);
        }
    }
}
