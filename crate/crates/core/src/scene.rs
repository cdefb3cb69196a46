//! Scene ingestion: label maps, depth maps and RGB frames, plus the binary
//! vegetation and sky masks derived from them.
//!
//! Label maps and masks are single-channel 8-bit PNGs, RGB frames are 24-bit
//! PNGs and depth maps are PFM files (see [`crate::pfm`]). Class semantics
//! come from a [`ClassMap`]; whether `terrain` pixels count as vegetation is
//! decided per image by a [`TerrainPolicy`].

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageReader};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::pfm;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("label {label} at ({x}, {y}) is not present in the class map")]
    UnknownLabel { label: u8, x: usize, y: usize },
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },
    #[error("negative depth at ({x}, {y})")]
    NegativeDepth { x: usize, y: usize },
    #[error("non-finite depth at ({x}, {y})")]
    NonFiniteDepth { x: usize, y: usize },
    #[error("scene {0} has no RGB channels")]
    MissingChannel(String),
    #[error("grid dimensions {found:?} do not match scene dimensions {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("invalid class map: {0}")]
    InvalidClassMap(String),
    #[error("invalid terrain policy: {0}")]
    InvalidPolicy(String),
    #[error("scene must be at least 1x1")]
    EmptyScene,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IngestError {
    pub(crate) fn malformed(path: &Path, reason: impl ToString) -> Self {
        IngestError::MalformedFile {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        }
    }
}

const VEGETATION: u8 = 0b001;
const TERRAIN: u8 = 0b010;
const SKY: u8 = 0b100;

/// Label-id to class-name table plus the class groups used for masking.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    entries: Vec<(u8, String)>,
    vegetation: BTreeSet<String>,
    terrain: BTreeSet<String>,
    sky: BTreeSet<String>,
    // Per label id: None when unknown, otherwise the group flags.
    lookup: Box<[Option<u8>; 256]>,
}

impl ClassMap {
    pub fn new(
        entries: Vec<(u8, String)>,
        vegetation: impl IntoIterator<Item = String>,
        terrain: impl IntoIterator<Item = String>,
        sky: impl IntoIterator<Item = String>,
    ) -> Result<Self, IngestError> {
        let vegetation: BTreeSet<String> = vegetation.into_iter().collect();
        let terrain: BTreeSet<String> = terrain.into_iter().collect();
        let sky: BTreeSet<String> = sky.into_iter().collect();

        let mut lookup = Box::new([None; 256]);
        for (id, name) in &entries {
            if lookup[*id as usize].is_some() {
                return Err(IngestError::InvalidClassMap(format!(
                    "label id {id} listed twice"
                )));
            }
            let mut flags = 0u8;
            if vegetation.contains(name) {
                flags |= VEGETATION;
            }
            if terrain.contains(name) {
                flags |= TERRAIN;
            }
            if sky.contains(name) {
                flags |= SKY;
            }
            lookup[*id as usize] = Some(flags);
        }

        for (a, b, label) in [
            (&vegetation, &terrain, "vegetation/terrain"),
            (&vegetation, &sky, "vegetation/sky"),
            (&terrain, &sky, "terrain/sky"),
        ] {
            if let Some(name) = a.intersection(b).next() {
                return Err(IngestError::InvalidClassMap(format!(
                    "class {name:?} appears in both {label} groups"
                )));
            }
        }

        let names: HashSet<&str> = entries.iter().map(|(_, n)| n.as_str()).collect();
        for name in vegetation.iter().chain(&terrain).chain(&sky) {
            if !names.contains(name.as_str()) {
                return Err(IngestError::InvalidClassMap(format!(
                    "group member {name:?} has no label id"
                )));
            }
        }

        Ok(ClassMap {
            entries,
            vegetation,
            terrain,
            sky,
            lookup,
        })
    }

    pub fn entries(&self) -> &[(u8, String)] {
        &self.entries
    }

    pub fn contains(&self, label: u8) -> bool {
        self.lookup[label as usize].is_some()
    }

    pub fn class_name(&self, label: u8) -> Option<&str> {
        self.entries
            .iter()
            .find(|(id, _)| *id == label)
            .map(|(_, n)| n.as_str())
    }

    pub fn vegetation_classes(&self) -> &BTreeSet<String> {
        &self.vegetation
    }

    pub fn terrain_classes(&self) -> &BTreeSet<String> {
        &self.terrain
    }

    pub fn sky_classes(&self) -> &BTreeSet<String> {
        &self.sky
    }

    fn flags(&self, label: u8) -> u8 {
        self.lookup[label as usize].unwrap_or(0)
    }
}

/// Which images may count their `terrain` pixels as vegetation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerrainPolicy {
    pub mode: TerrainMode,
    #[serde(default)]
    pub whitelist: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainMode {
    IncludeAll,
    ExcludeAll,
    PerImageWhitelist,
}

impl TerrainPolicy {
    pub fn include_all() -> Self {
        TerrainPolicy {
            mode: TerrainMode::IncludeAll,
            whitelist: BTreeSet::new(),
        }
    }

    pub fn exclude_all() -> Self {
        TerrainPolicy {
            mode: TerrainMode::ExcludeAll,
            whitelist: BTreeSet::new(),
        }
    }

    pub fn whitelist(ids: impl IntoIterator<Item = String>) -> Self {
        TerrainPolicy {
            mode: TerrainMode::PerImageWhitelist,
            whitelist: ids.into_iter().collect(),
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.mode != TerrainMode::PerImageWhitelist && !self.whitelist.is_empty() {
            return Err(IngestError::InvalidPolicy(
                "whitelist is only allowed with mode per_image_whitelist".into(),
            ));
        }
        Ok(())
    }

    pub fn admits(&self, image_id: &str) -> bool {
        match self.mode {
            TerrainMode::IncludeAll => true,
            TerrainMode::ExcludeAll => false,
            TerrainMode::PerImageWhitelist => self.whitelist.contains(image_id),
        }
    }
}

impl Default for TerrainPolicy {
    fn default() -> Self {
        TerrainPolicy::include_all()
    }
}

/// On-disk JSON form of a class map together with its terrain policy.
///
/// ```json
/// {
///   "classes": [{"id": 13, "name": "road"}, {"id": 27, "name": "sky"},
///               {"id": 29, "name": "terrain"}, {"id": 30, "name": "vegetation"}],
///   "vegetation": ["vegetation"],
///   "terrain": ["terrain"],
///   "sky": ["sky"],
///   "terrain_policy": {"mode": "per_image_whitelist", "whitelist": ["88", "284"]}
/// }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfigDoc {
    pub classes: Vec<ClassEntry>,
    #[serde(default)]
    pub vegetation: Vec<String>,
    #[serde(default)]
    pub terrain: Vec<String>,
    #[serde(default)]
    pub sky: Vec<String>,
    #[serde(default)]
    pub terrain_policy: TerrainPolicy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub id: u8,
    pub name: String,
}

impl ClassConfigDoc {
    pub fn into_parts(self) -> Result<(ClassMap, TerrainPolicy), IngestError> {
        self.terrain_policy.validate()?;
        let map = ClassMap::new(
            self.classes.into_iter().map(|e| (e.id, e.name)).collect(),
            self.vegetation,
            self.terrain,
            self.sky,
        )?;
        Ok((map, self.terrain_policy))
    }
}

/// Reads a class map and terrain policy from a JSON document.
pub fn load_class_config(path: &Path) -> Result<(ClassMap, TerrainPolicy), IngestError> {
    let file = File::open(path)?;
    let doc: ClassConfigDoc = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| IngestError::malformed(path, e))?;
    doc.into_parts()
}

/// One street-level image: its label grid and whatever auxiliary channels were supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScene {
    pub image_id: String,
    pub city: String,
    labels: Grid<u8>,
    depth: Option<Grid<f32>>,
    rgb: Option<Grid<[u8; 3]>>,
}

impl LabeledScene {
    pub fn new(
        image_id: impl Into<String>,
        city: impl Into<String>,
        labels: Grid<u8>,
    ) -> Result<Self, IngestError> {
        if labels.is_empty() {
            return Err(IngestError::EmptyScene);
        }
        Ok(LabeledScene {
            image_id: image_id.into(),
            city: city.into(),
            labels,
            depth: None,
            rgb: None,
        })
    }

    pub fn with_depth(mut self, depth: Grid<f32>) -> Result<Self, IngestError> {
        self.check_dims(depth.dims())?;
        self.depth = Some(depth);
        Ok(self)
    }

    pub fn with_rgb(mut self, rgb: Grid<[u8; 3]>) -> Result<Self, IngestError> {
        self.check_dims(rgb.dims())?;
        self.rgb = Some(rgb);
        Ok(self)
    }

    fn check_dims(&self, found: (usize, usize)) -> Result<(), IngestError> {
        if found != self.labels.dims() {
            return Err(IngestError::DimensionMismatch {
                expected: self.labels.dims(),
                found,
            });
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.labels.width()
    }

    pub fn height(&self) -> usize {
        self.labels.height()
    }

    pub fn labels(&self) -> &Grid<u8> {
        &self.labels
    }

    pub fn depth(&self) -> Option<&Grid<f32>> {
        self.depth.as_ref()
    }

    pub fn rgb(&self) -> Option<&Grid<[u8; 3]>> {
        self.rgb.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSource {
    Semantic,
    Spectral,
}

/// A binary per-pixel mask; cells hold 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub image_id: String,
    pub source: MaskSource,
    bits: Grid<u8>,
}

pub type VegetationMask = BinaryMask;
pub type SkyMask = BinaryMask;

impl BinaryMask {
    /// Wraps a grid, mapping every nonzero cell to 1.
    pub fn new(image_id: impl Into<String>, source: MaskSource, bits: Grid<u8>) -> Self {
        let bits = bits.map(|&v| u8::from(v != 0));
        BinaryMask {
            image_id: image_id.into(),
            source,
            bits,
        }
    }

    pub fn from_fn(
        image_id: impl Into<String>,
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Self {
        BinaryMask {
            image_id: image_id.into(),
            source: MaskSource::Semantic,
            bits: Grid::from_fn(width, height, |x, y| u8::from(f(x, y))),
        }
    }

    pub fn width(&self) -> usize {
        self.bits.width()
    }

    pub fn height(&self) -> usize {
        self.bits.height()
    }

    pub fn bits(&self) -> &Grid<u8> {
        &self.bits
    }

    pub fn is_set(&self, x: usize, y: usize) -> bool {
        *self.bits.get(x, y) != 0
    }

    pub fn popcount(&self) -> u64 {
        self.bits.as_slice().iter().map(|&b| b as u64).sum()
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            image_id: self.image_id.clone(),
            source: self.source,
            bits: self.bits.map(|&b| 1 - b),
        }
    }
}

fn decode(path: &Path) -> Result<DynamicImage, IngestError> {
    let reader = ImageReader::open(path)?
        .with_guessed_format()
        .map_err(|e| IngestError::malformed(path, e))?;
    let img = reader.decode().map_err(|e| IngestError::malformed(path, e))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(IngestError::malformed(path, "image has zero area"));
    }
    Ok(img)
}

/// Reads an 8-bit single-channel PNG whose pixel values are label ids.
pub fn load_label_map(path: &Path, class_map: &ClassMap) -> Result<Grid<u8>, IngestError> {
    let img = match decode(path)? {
        DynamicImage::ImageLuma8(img) => img,
        other => {
            return Err(IngestError::malformed(
                path,
                format!("expected 8-bit single-channel image, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let labels = Grid::from_vec(w, h, img.into_raw())
        .ok_or_else(|| IngestError::malformed(path, "truncated pixel data"))?;
    check_labels(&labels, class_map)?;
    Ok(labels)
}

/// Fails with the first (row-major) label absent from `class_map`.
pub fn check_labels(labels: &Grid<u8>, class_map: &ClassMap) -> Result<(), IngestError> {
    match labels.iter_xy().find(|(_, _, &l)| !class_map.contains(l)) {
        Some((x, y, &label)) => Err(IngestError::UnknownLabel { label, x, y }),
        None => Ok(()),
    }
}

/// Reads a 24-bit RGB PNG.
pub fn load_rgb(path: &Path) -> Result<Grid<[u8; 3]>, IngestError> {
    let img = match decode(path)? {
        DynamicImage::ImageRgb8(img) => img,
        other => {
            return Err(IngestError::malformed(
                path,
                format!("expected 24-bit RGB image, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<[u8; 3]> = img.pixels().map(|p| p.0).collect();
    Grid::from_vec(w, h, data).ok_or_else(|| IngestError::malformed(path, "truncated pixel data"))
}

/// Reads a PFM depth map and checks every value is finite and nonnegative.
pub fn load_depth_map(path: &Path) -> Result<Grid<f32>, IngestError> {
    let bytes = std::fs::read(path)?;
    let grid = pfm::decode(&bytes).map_err(|e| IngestError::malformed(path, e))?;
    validate_depth(&grid)?;
    Ok(grid)
}

pub fn validate_depth(depth: &Grid<f32>) -> Result<(), IngestError> {
    for (x, y, &d) in depth.iter_xy() {
        if !d.is_finite() {
            return Err(IngestError::NonFiniteDepth { x, y });
        }
        if d < 0.0 {
            return Err(IngestError::NegativeDepth { x, y });
        }
    }
    Ok(())
}

/// Vegetation pixels, plus terrain pixels when the policy admits this image.
pub fn build_vegetation_mask(
    scene: &LabeledScene,
    class_map: &ClassMap,
    policy: &TerrainPolicy,
) -> VegetationMask {
    let wanted = if policy.admits(&scene.image_id) {
        VEGETATION | TERRAIN
    } else {
        VEGETATION
    };
    mask_by_flags(scene, class_map, wanted)
}

pub fn build_sky_mask(scene: &LabeledScene, class_map: &ClassMap) -> SkyMask {
    mask_by_flags(scene, class_map, SKY)
}

fn mask_by_flags(scene: &LabeledScene, class_map: &ClassMap, wanted: u8) -> BinaryMask {
    BinaryMask {
        image_id: scene.image_id.clone(),
        source: MaskSource::Semantic,
        bits: scene
            .labels
            .map(|&l| u8::from(class_map.flags(l) & wanted != 0)),
    }
}

/// Default excess-green threshold for [`spectral_vegetation_mask`].
pub const DEFAULT_EXCESS_GREEN_THRESHOLD: i32 = 20;

/// Colour-threshold vegetation mask: a pixel is set when `2G - R - B > threshold`.
pub fn spectral_vegetation_mask(
    scene: &LabeledScene,
    excess_green_threshold: i32,
) -> Result<VegetationMask, IngestError> {
    let rgb = scene
        .rgb
        .as_ref()
        .ok_or_else(|| IngestError::MissingChannel(scene.image_id.clone()))?;
    Ok(BinaryMask {
        image_id: scene.image_id.clone(),
        source: MaskSource::Spectral,
        bits: rgb.map(|&[r, g, b]| u8::from(excess_green(r, g, b) > excess_green_threshold)),
    })
}

#[inline]
fn excess_green(r: u8, g: u8, b: u8) -> i32 {
    2 * g as i32 - r as i32 - b as i32
}

/// Writes a mask as an 8-bit PNG with values {0, 255}.
pub fn write_mask_png(mask: &BinaryMask, path: &Path) -> Result<(), IngestError> {
    let img = GrayImage::from_raw(
        mask.width() as u32,
        mask.height() as u32,
        mask.bits.as_slice().iter().map(|&b| b * 255).collect(),
    )
    .expect("mask buffer matches its dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IngestError::malformed(path, e))
}

/// Reads a {0, 255} mask PNG written by [`write_mask_png`].
pub fn load_mask_png(
    path: &Path,
    image_id: impl Into<String>,
    source: MaskSource,
) -> Result<BinaryMask, IngestError> {
    let img = match decode(path)? {
        DynamicImage::ImageLuma8(img) => img,
        other => {
            return Err(IngestError::malformed(
                path,
                format!("expected 8-bit mask, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raw = img.into_raw();
    if let Some(v) = raw.iter().find(|&&v| v != 0 && v != 255) {
        return Err(IngestError::malformed(path, format!("mask value {v} not in {{0, 255}}")));
    }
    let bits = Grid::from_vec(w, h, raw).expect("decoded buffer matches its dimensions");
    Ok(BinaryMask::new(image_id, source, bits))
}

/// Writes a label grid as an 8-bit single-channel PNG.
pub fn write_label_png(labels: &Grid<u8>, path: &Path) -> Result<(), IngestError> {
    let img = GrayImage::from_raw(
        labels.width() as u32,
        labels.height() as u32,
        labels.as_slice().to_vec(),
    )
    .expect("label buffer matches its dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IngestError::malformed(path, e))
}
