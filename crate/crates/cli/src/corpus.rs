use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use greenscape::metrics::MetricRow;
use greenscape::scene::{load_class_config, load_depth_map, load_label_map, load_rgb};
use greenscape::scoring::image_id_cmp;
use greenscape::{ClassMap, LabeledScene, MaskSource, ScoreTable, TerrainPolicy};
use serde::{Deserialize, Serialize};

use crate::config::ProjectConfig;

/// Label PNGs keyed by file stem, sorted by image id.
pub fn list_images(labels_dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(labels_dir)
        .with_context(|| format!("listing {}", labels_dir.display()))?
    {
        let path = entry?.path();
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if !is_png || !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.push((stem.to_string(), path));
        }
    }
    out.sort_by(|a, b| image_id_cmp(&a.0, &b.0));
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct CatalogRow {
    image_id: String,
    city: String,
}

/// Image id to city, from the optional catalog; empty when none is configured.
pub fn load_catalog(cfg: &ProjectConfig) -> Result<HashMap<String, String>> {
    let Some(path) = cfg.optional(&cfg.paths.images) else {
        return Ok(HashMap::new());
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&path)
        .with_context(|| format!("opening image catalog {}", path.display()))?;
    let mut out = HashMap::new();
    for row in rdr.deserialize() {
        let row: CatalogRow =
            row.with_context(|| format!("reading image catalog {}", path.display()))?;
        out.insert(row.image_id, row.city);
    }
    Ok(out)
}

/// Everything needed to turn an image id into a scene.
pub struct SceneSource {
    pub class_map: ClassMap,
    pub policy: TerrainPolicy,
    pub depth_dir: Option<PathBuf>,
    pub rgb_dir: Option<PathBuf>,
    pub cities: HashMap<String, String>,
}

/// Per-image failure, reported as data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageError {
    pub image_id: String,
    pub stage: &'static str,
    pub message: String,
}

pub const ERROR_HEADER: [&str; 3] = ["image_id", "stage", "message"];

impl SceneSource {
    pub fn from_config(cfg: &ProjectConfig, classes: &Path, with_depth: bool) -> Result<Self> {
        let (class_map, policy) = load_class_config(classes)
            .with_context(|| format!("loading class map {}", classes.display()))?;
        let spectral = cfg.metrics.params.mask_source == MaskSource::Spectral;
        let rgb_dir = cfg.optional(&cfg.paths.rgb);
        if spectral && rgb_dir.is_none() {
            bail!("mask_source spectral needs paths.rgb");
        }
        Ok(SceneSource {
            class_map,
            policy,
            depth_dir: if with_depth { cfg.optional(&cfg.paths.depth) } else { None },
            rgb_dir: if spectral { rgb_dir } else { None },
            cities: load_catalog(cfg)?,
        })
    }

    pub fn load(&self, id: &str, label_path: &Path) -> Result<LabeledScene, ImageError> {
        let fail = |stage: &'static str, e: &dyn std::fmt::Display| ImageError {
            image_id: id.to_string(),
            stage,
            message: e.to_string(),
        };
        let labels = load_label_map(label_path, &self.class_map).map_err(|e| fail("labels", &e))?;
        let city = self.cities.get(id).cloned().unwrap_or_default();
        let mut scene = LabeledScene::new(id, city, labels).map_err(|e| fail("labels", &e))?;
        if let Some(dir) = &self.depth_dir {
            let depth = load_depth_map(&dir.join(format!("{id}.pfm"))).map_err(|e| fail("depth", &e))?;
            scene = scene.with_depth(depth).map_err(|e| fail("depth", &e))?;
        }
        if let Some(dir) = &self.rgb_dir {
            let rgb = load_rgb(&dir.join(format!("{id}.png"))).map_err(|e| fail("rgb", &e))?;
            scene = scene.with_rgb(rgb).map_err(|e| fail("rgb", &e))?;
        }
        Ok(scene)
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| {
        format!("opening {} (run `greenscape metrics` first)", path.display())
    })?;
    rdr.deserialize()
        .collect::<Result<Vec<MetricRow>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

pub fn read_scores(path: &Path) -> Result<ScoreTable> {
    let file = std::fs::File::open(path).with_context(|| {
        format!("opening {} (run `greenscape scores` first)", path.display())
    })?;
    ScoreTable::read_csv(file).with_context(|| format!("reading {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_pngs_in_id_order() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["10.png", "9.png", "b.PNG", "notes.txt"] {
            std::fs::write(dir.path().join(name), b"").unwrap();
        }
        std::fs::create_dir(dir.path().join("sub.png")).unwrap();
        let ids: Vec<String> = list_images(dir.path()).unwrap().into_iter().map(|e| e.0).collect();
        assert_eq!(ids, ["9", "10", "b"]);
    }

    #[test]
    fn metrics_without_depth_columns_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(
            &p,
            "image_id,city,gvi,sky_view_index,spatial_entropy,window_fraction,global_entropy\n1,,0.5,0.1,0.9,0.45,1.2\n",
        )
        .unwrap();
        let rows = read_metrics(&p).unwrap();
        assert_eq!(rows[0].gvi, 0.5);
        assert_eq!(rows[0].median_veg_depth, None);
    }
}
