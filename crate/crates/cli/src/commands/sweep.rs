use anyhow::{bail, Result};
use greenscape::metrics::{entropy_sweep, mean_curve, vegetation_mask_for};
use greenscape::SweepCurve;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::corpus::{list_images, ImageError, SceneSource, ERROR_HEADER};
use crate::output::Reports;
use crate::svg::{self, Chart, Mark, Series};
use crate::Run;

#[derive(Serialize)]
struct CurveRow<'a> {
    image_id: &'a str,
    fraction: f64,
    mean_entropy: f64,
}

#[derive(Serialize)]
struct ArgmaxRow<'a> {
    image_id: &'a str,
    argmax_fraction: f64,
}

pub fn run(run: &Run) -> Result<()> {
    let cfg = &run.cfg;
    let labels = cfg.require(&cfg.paths.labels, "labels")?;
    let classes = cfg.require(&cfg.paths.classes, "classes")?;
    let source = SceneSource::from_config(cfg, &classes, false)?;
    let images = list_images(&labels)?;
    if images.is_empty() {
        bail!("no label PNGs in {}", labels.display());
    }
    let params = &cfg.metrics.params;
    let fractions = &cfg.metrics.sweep_fractions;

    let results: Vec<Result<(String, SweepCurve), ImageError>> = images
        .par_iter()
        .map(|(id, path)| {
            let scene = source.load(id, path)?;
            vegetation_mask_for(&scene, &source.class_map, &source.policy, params)
                .and_then(|mask| entropy_sweep(&mask, fractions, params.stride))
                .map(|c| (id.clone(), c))
                .map_err(|e| ImageError {
                    image_id: id.clone(),
                    stage: "sweep",
                    message: e.to_string(),
                })
        })
        .collect();
    let (mut curves, mut errors) = (Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok(c) => curves.push(c),
            Err(e) => errors.push(e),
        }
    }

    let reports = Reports::new(cfg, "sweep")?;
    reports.write_csv("sweep_errors.csv", &ERROR_HEADER, &errors, json!({ "errors": errors.len() }))?;
    if curves.is_empty() {
        bail!("all {} images failed, see sweep_errors.csv", images.len());
    }

    let per_image: Vec<CurveRow> = curves
        .iter()
        .flat_map(|(id, c)| {
            c.points.iter().map(move |p| CurveRow {
                image_id: id,
                fraction: p.fraction,
                mean_entropy: p.mean_entropy,
            })
        })
        .collect();
    let argmax: Vec<ArgmaxRow> = curves
        .iter()
        .map(|(id, c)| ArgmaxRow { image_id: id, argmax_fraction: c.argmax_fraction })
        .collect();
    let only: Vec<SweepCurve> = curves.iter().map(|(_, c)| c.clone()).collect();
    let mean = mean_curve(&only)?;

    reports.write_csv(
        "sweep.csv",
        &["image_id", "fraction", "mean_entropy"],
        &per_image,
        json!({ "images": curves.len(), "errors": errors.len() }),
    )?;
    reports.write_csv(
        "sweep_argmax.csv",
        &["image_id", "argmax_fraction"],
        &argmax,
        json!({ "images": argmax.len() }),
    )?;
    reports.write_csv(
        "sweep_mean.csv",
        &["fraction", "mean_entropy"],
        &mean.points,
        json!({ "images": curves.len(), "argmax_fraction": mean.argmax_fraction }),
    )?;
    if run.svg {
        let chart = Chart {
            title: format!("Mean spatial entropy, maximum at {}", mean.argmax_fraction),
            x_label: "window fraction".into(),
            y_label: "mean window entropy (bits)".into(),
            series: vec![Series {
                name: "mean".into(),
                points: mean.points.iter().map(|p| (p.fraction, p.mean_entropy)).collect(),
                mark: Mark::Line,
            }],
            ..Chart::default()
        };
        reports.write("sweep_mean.svg", svg::render(&chart).as_bytes(), json!({}))?;
    }
    println!(
        "sweep: {} images, mean curve peaks at fraction {}",
        curves.len(),
        mean.argmax_fraction
    );
    Ok(())
}
