use anyhow::{bail, Result};
use greenscape::metrics::compute_metric_row;
use greenscape::MetricRow;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::corpus::{list_images, ImageError, SceneSource, ERROR_HEADER};
use crate::output::Reports;
use crate::Run;

pub const FULL_HEADER: [&str; 10] = [
    "image_id",
    "city",
    "gvi",
    "sky_view_index",
    "spatial_entropy",
    "window_fraction",
    "global_entropy",
    "mean_veg_depth",
    "median_veg_depth",
    "relative_depth",
];

/// Metric row without the depth columns, for corpora without depth maps.
#[derive(Serialize)]
struct FlatRow<'a> {
    image_id: &'a str,
    city: &'a str,
    gvi: f64,
    sky_view_index: f64,
    spatial_entropy: f64,
    window_fraction: f64,
    global_entropy: f64,
}

impl<'a> From<&'a MetricRow> for FlatRow<'a> {
    fn from(r: &'a MetricRow) -> Self {
        FlatRow {
            image_id: &r.image_id,
            city: &r.city,
            gvi: r.gvi,
            sky_view_index: r.sky_view_index,
            spatial_entropy: r.spatial_entropy,
            window_fraction: r.window_fraction,
            global_entropy: r.global_entropy,
        }
    }
}

pub fn run(run: &Run) -> Result<()> {
    let cfg = &run.cfg;
    let labels = cfg.require(&cfg.paths.labels, "labels")?;
    let classes = cfg.require(&cfg.paths.classes, "classes")?;
    let source = SceneSource::from_config(cfg, &classes, true)?;
    let images = list_images(&labels)?;
    if images.is_empty() {
        bail!("no label PNGs in {}", labels.display());
    }
    let params = &cfg.metrics.params;

    let results: Vec<Result<MetricRow, ImageError>> = images
        .par_iter()
        .map(|(id, path)| {
            let scene = source.load(id, path)?;
            compute_metric_row(&scene, &source.class_map, &source.policy, params).map_err(|e| {
                ImageError {
                    image_id: id.clone(),
                    stage: "metrics",
                    message: e.to_string(),
                }
            })
        })
        .collect();
    let (mut rows, mut errors) = (Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => errors.push(e),
        }
    }

    let reports = Reports::new(cfg, "metrics")?;
    reports.write_csv(
        "errors.csv",
        &ERROR_HEADER,
        &errors,
        json!({ "errors": errors.len() }),
    )?;
    for e in &errors {
        log::warn!("image {} failed at {}: {}", e.image_id, e.stage, e.message);
    }
    if rows.is_empty() {
        bail!("all {} images failed, see errors.csv", images.len());
    }

    let summary = json!({ "images": images.len(), "rows": rows.len(), "errors": errors.len() });
    if source.depth_dir.is_some() {
        reports.write_csv("metrics.csv", &FULL_HEADER, &rows, summary)?;
    } else {
        let flat: Vec<FlatRow> = rows.iter().map(FlatRow::from).collect();
        reports.write_csv("metrics.csv", &FULL_HEADER[..7], &flat, summary)?;
    }
    println!("metrics: {} rows, {} errors", rows.len(), errors.len());
    Ok(())
}
