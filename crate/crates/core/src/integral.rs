//! Summed-area tables over binary masks.

use crate::grid::Grid;

/// Inclusive prefix sums with a zero guard row and column, so that
/// `table[(y + 1) * (w + 1) + (x + 1)]` is the count of set cells in
/// `[0, x] × [0, y]`.
#[derive(Debug, Clone)]
pub struct SummedAreaTable {
    stride: usize,
    table: Vec<u32>,
}

impl SummedAreaTable {
    pub fn new(bits: &Grid<u8>) -> Self {
        let (w, h) = bits.dims();
        assert!(
            (w as u64) * (h as u64) <= u32::MAX as u64,
            "image too large for 32-bit counts"
        );
        let stride = w + 1;
        let mut table = vec![0u32; stride * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0u32;
            let (above, rest) = table.split_at_mut((y + 1) * stride);
            let above = &above[y * stride..];
            let current = &mut rest[..stride];
            for (x, &b) in bits.row(y).iter().enumerate() {
                row_sum += b as u32;
                current[x + 1] = above[x + 1] + row_sum;
            }
        }
        SummedAreaTable { stride, table }
    }

    /// Number of set cells in the `width × height` rectangle whose top-left corner is `(x, y)`.
    #[inline]
    pub fn rect_sum(&self, x: usize, y: usize, width: usize, height: usize) -> u32 {
        let s = self.stride;
        let (x1, y1) = (x + width, y + height);
        let a = self.table[y * s + x];
        let b = self.table[y * s + x1];
        let c = self.table[y1 * s + x];
        let d = self.table[y1 * s + x1];
        d + a - b - c
    }
}
