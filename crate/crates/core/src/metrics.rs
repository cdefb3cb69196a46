//! Per-image greenery metrics.
//!
//! * green view index: share of vegetation pixels;
//! * sky view index: the same ratio over the sky mask;
//! * spatial entropy: mean binary entropy of the vegetation share over every
//!   `s × s` window, with `s = round(fraction · min(width, height))`;
//! * global entropy: Shannon entropy (bits) of the label histogram;
//! * vegetation depth: mean / median depth under the mask and its ratio to the
//!   mean depth of everything else.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::integral::SummedAreaTable;
use crate::scene::{
    build_sky_mask, build_vegetation_mask, spectral_vegetation_mask, BinaryMask, ClassMap,
    IngestError, LabeledScene, MaskSource, TerrainPolicy, VegetationMask,
    DEFAULT_EXCESS_GREEN_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("image has zero area")]
    EmptyImage,
    #[error("value {0} is outside the valid domain")]
    DomainError(f64),
    #[error("window side {side} exceeds the shorter image side {limit}")]
    WindowTooLarge { side: usize, limit: usize },
    #[error("window fraction {fraction} gives an empty window on a {width}x{height} image")]
    WindowTooSmall {
        fraction: f64,
        width: usize,
        height: usize,
    },
    #[error("stride must be at least 1")]
    ZeroStride,
    #[error("mask has no vegetation pixels")]
    NoVegetation,
    #[error("depth grid {found:?} does not match mask {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Window fraction the pipeline uses for the per-image spatial entropy.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.45;

/// `0.10, 0.15, …, 1.00`.
pub fn default_sweep_fractions() -> Vec<f64> {
    (0..19).map(|k| (10 + 5 * k) as f64 / 100.0).collect()
}

/// Pixel share of set bits.
pub fn gvi(mask: &VegetationMask) -> Result<f64, MetricError> {
    pixel_share(mask)
}

/// Sky view index: the GVI ratio evaluated over a sky mask.
pub fn sky_view_index(mask: &BinaryMask) -> Result<f64, MetricError> {
    pixel_share(mask)
}

fn pixel_share(mask: &BinaryMask) -> Result<f64, MetricError> {
    let total = mask.width() * mask.height();
    if total == 0 {
        return Err(MetricError::EmptyImage);
    }
    Ok(mask.popcount() as f64 / total as f64)
}

/// Binary Shannon entropy in bits, with `0 · log2(0) = 0`.
pub fn window_entropy(p: f64) -> Result<f64, MetricError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MetricError::DomainError(p));
    }
    Ok(binary_entropy(p))
}

#[inline]
fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Side of the square window for a relative window size.
pub fn window_side(fraction: f64, width: usize, height: usize) -> Result<usize, MetricError> {
    if width == 0 || height == 0 {
        return Err(MetricError::EmptyImage);
    }
    if fraction.is_nan() || fraction <= 0.0 {
        return Err(MetricError::DomainError(fraction));
    }
    let limit = width.min(height);
    let side = (fraction * limit as f64).round();
    if side > limit as f64 {
        return Err(MetricError::WindowTooLarge {
            side: side as usize,
            limit,
        });
    }
    if side < 1.0 {
        return Err(MetricError::WindowTooSmall {
            fraction,
            width,
            height,
        });
    }
    Ok(side as usize)
}

/// Window origins along one axis: every `stride`-th offset plus the last valid one.
pub fn window_offsets(len: usize, side: usize, stride: usize) -> Vec<usize> {
    debug_assert!(side >= 1 && side <= len && stride >= 1);
    let last = len - side;
    let mut offsets: Vec<usize> = (0..=last).step_by(stride).collect();
    if offsets.last() != Some(&last) {
        offsets.push(last);
    }
    offsets
}

/// Mean windowed vegetation entropy.
pub fn spatial_entropy(
    mask: &VegetationMask,
    fraction: f64,
    stride: usize,
) -> Result<f64, MetricError> {
    let sat = SummedAreaTable::new(mask.bits());
    spatial_entropy_with(&sat, mask.width(), mask.height(), fraction, stride)
}

fn spatial_entropy_with(
    sat: &SummedAreaTable,
    width: usize,
    height: usize,
    fraction: f64,
    stride: usize,
) -> Result<f64, MetricError> {
    if stride == 0 {
        return Err(MetricError::ZeroStride);
    }
    let side = window_side(fraction, width, height)?;
    let area = (side * side) as f64;
    let xs = window_offsets(width, side, stride);
    let ys = window_offsets(height, side, stride);

    let mut total = 0.0;
    for &y in &ys {
        for &x in &xs {
            let p = sat.rect_sum(x, y, side, side) as f64 / area;
            total += binary_entropy(p);
        }
    }
    Ok(total / (xs.len() * ys.len()) as f64)
}

/// Spatial entropy as a function of window fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
    pub argmax_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub fraction: f64,
    pub mean_entropy: f64,
}

impl SweepCurve {
    /// Builds a curve from points, validating order and locating the first maximum.
    pub fn from_points(points: Vec<SweepPoint>) -> Result<Self, MetricError> {
        let first = points.first().ok_or(MetricError::DomainError(f64::NAN))?;
        if points.windows(2).any(|w| w[1].fraction <= w[0].fraction) {
            return Err(MetricError::DomainError(first.fraction));
        }
        let mut best = *first;
        for p in &points[1..] {
            if p.mean_entropy > best.mean_entropy {
                best = *p;
            }
        }
        Ok(SweepCurve {
            argmax_fraction: best.fraction,
            points,
        })
    }
}

/// Evaluates [`spatial_entropy`] at each fraction (strictly increasing).
pub fn entropy_sweep(
    mask: &VegetationMask,
    fractions: &[f64],
    stride: usize,
) -> Result<SweepCurve, MetricError> {
    let sat = SummedAreaTable::new(mask.bits());
    let points = fractions
        .iter()
        .map(|&fraction| {
            spatial_entropy_with(&sat, mask.width(), mask.height(), fraction, stride)
                .map(|mean_entropy| SweepPoint {
                    fraction,
                    mean_entropy,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    SweepCurve::from_points(points)
}

/// Point-wise mean of curves sampled at identical fractions.
pub fn mean_curve(curves: &[SweepCurve]) -> Result<SweepCurve, MetricError> {
    let first = curves.first().ok_or(MetricError::DomainError(f64::NAN))?;
    let mut sums: Vec<f64> = vec![0.0; first.points.len()];
    for c in curves {
        if c.points.len() != sums.len()
            || c.points
                .iter()
                .zip(&first.points)
                .any(|(a, b)| a.fraction != b.fraction)
        {
            return Err(MetricError::DomainError(f64::NAN));
        }
        for (s, p) in sums.iter_mut().zip(&c.points) {
            *s += p.mean_entropy;
        }
    }
    let n = curves.len() as f64;
    SweepCurve::from_points(
        first
            .points
            .iter()
            .zip(sums)
            .map(|(p, s)| SweepPoint {
                fraction: p.fraction,
                mean_entropy: s / n,
            })
            .collect(),
    )
}

/// Shannon entropy (bits) of the empirical label distribution.
pub fn global_entropy(labels: &Grid<u8>) -> Result<f64, MetricError> {
    if labels.is_empty() {
        return Err(MetricError::EmptyImage);
    }
    let mut counts = [0u64; 256];
    for &l in labels.as_slice() {
        counts[l as usize] += 1;
    }
    let n = labels.len() as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let f = c as f64 / n;
            -f * f.log2()
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthStats {
    pub mean: f64,
    pub median: f64,
    /// Mean vegetation depth over mean non-vegetation depth; `None` when
    /// nothing but vegetation is visible or the background mean is zero.
    pub relative: Option<f64>,
}

pub fn vegetation_depth_stats(
    mask: &VegetationMask,
    depth: &Grid<f32>,
) -> Result<DepthStats, MetricError> {
    if depth.dims() != mask.bits().dims() {
        return Err(MetricError::DimensionMismatch {
            expected: mask.bits().dims(),
            found: depth.dims(),
        });
    }
    let mut veg = Vec::new();
    let (mut bg_sum, mut bg_n) = (0.0f64, 0usize);
    for (&bit, &d) in mask.bits().as_slice().iter().zip(depth.as_slice()) {
        if bit != 0 {
            veg.push(d as f64);
        } else {
            bg_sum += d as f64;
            bg_n += 1;
        }
    }
    if veg.is_empty() {
        return Err(MetricError::NoVegetation);
    }
    let mean = veg.iter().sum::<f64>() / veg.len() as f64;
    let median = median_in_place(&mut veg);
    let relative = if bg_n > 0 && bg_sum > 0.0 {
        Some(mean / (bg_sum / bg_n as f64))
    } else {
        None
    };
    Ok(DepthStats {
        mean,
        median,
        relative,
    })
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, &mut upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) / 2.0
    }
}

/// One row of the per-image metrics table; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub image_id: String,
    pub city: String,
    pub gvi: f64,
    pub sky_view_index: f64,
    pub spatial_entropy: f64,
    pub window_fraction: f64,
    pub global_entropy: f64,
    pub mean_veg_depth: Option<f64>,
    pub median_veg_depth: Option<f64>,
    pub relative_depth: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricParams {
    pub window_fraction: f64,
    pub stride: usize,
    pub mask_source: MaskSource,
    pub excess_green_threshold: i32,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            window_fraction: DEFAULT_WINDOW_FRACTION,
            stride: 1,
            mask_source: MaskSource::Semantic,
            excess_green_threshold: DEFAULT_EXCESS_GREEN_THRESHOLD,
        }
    }
}

/// Vegetation mask for a scene under the chosen mask source.
pub fn vegetation_mask_for(
    scene: &LabeledScene,
    class_map: &ClassMap,
    policy: &TerrainPolicy,
    params: &MetricParams,
) -> Result<VegetationMask, MetricError> {
    Ok(match params.mask_source {
        MaskSource::Semantic => build_vegetation_mask(scene, class_map, policy),
        MaskSource::Spectral => spectral_vegetation_mask(scene, params.excess_green_threshold)?,
    })
}

pub fn compute_metric_row(
    scene: &LabeledScene,
    class_map: &ClassMap,
    policy: &TerrainPolicy,
    params: &MetricParams,
) -> Result<MetricRow, MetricError> {
    let veg = vegetation_mask_for(scene, class_map, policy, params)?;
    let sky = build_sky_mask(scene, class_map);
    let depth = match scene.depth() {
        Some(d) => match vegetation_depth_stats(&veg, d) {
            Ok(s) => Some(s),
            Err(MetricError::NoVegetation) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    Ok(MetricRow {
        image_id: scene.image_id.clone(),
        city: scene.city.clone(),
        gvi: gvi(&veg)?,
        sky_view_index: sky_view_index(&sky)?,
        spatial_entropy: spatial_entropy(&veg, params.window_fraction, params.stride)?,
        window_fraction: params.window_fraction,
        global_entropy: global_entropy(scene.labels())?,
        mean_veg_depth: depth.map(|d| d.mean),
        median_veg_depth: depth.map(|d| d.median),
        relative_depth: depth.and_then(|d| d.relative),
    })
}
