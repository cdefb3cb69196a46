use anyhow::{bail, Result};
use greenscape::model::{
    build_feature_table, conditional_permutation_importance, evaluate, random_search_cv,
    stratified_split, train_forest, DropReason,
};
use greenscape::scoring::Scope;
use serde::Serialize;
use serde_json::json;

use crate::corpus::{read_metrics, read_scores};
use crate::output::Reports;
use crate::svg;
use crate::Run;

#[derive(Serialize)]
struct DropRow {
    image_id: String,
    participant_scope: String,
    reason: String,
}

#[derive(Serialize)]
struct ImportanceRow<'a> {
    rank: usize,
    feature: &'a str,
    mean_delta_mse: f64,
    sd_delta_mse: f64,
    conditioning: String,
}

const LEADERBOARD_HEADER: [&str; 9] = [
    "rank",
    "n_estimators",
    "max_depth",
    "min_samples_split",
    "min_samples_leaf",
    "max_features",
    "mean_mse",
    "sd_mse",
    "mean_r2",
];

pub fn run(run: &Run) -> Result<()> {
    let cfg = &run.cfg;
    let m = &cfg.model;
    let out = cfg.output_dir();
    let metrics = read_metrics(&out.join("metrics.csv"))?;
    let scores = read_scores(&out.join("scores.csv"))?;
    let image_scope = run
        .context
        .as_ref()
        .map_or(Scope::All, |c| c.image_scope.clone());

    let (table, dropped) = build_feature_table(&metrics, &scores, &image_scope);
    if table.is_empty() {
        bail!("no complete feature rows for image scope {image_scope}");
    }
    let (train_idx, test_idx) = stratified_split(&table.strata(), m.test_fraction, cfg.seed)?;
    if test_idx.is_empty() {
        bail!("test split is empty, every stratum has a single row");
    }
    let (train, test) = (table.select(&train_idx), table.select(&test_idx));
    let search = random_search_cv(
        &train.matrix(),
        &train.targets(),
        &train.strata(),
        &train.feature_names,
        &m.search_space,
        m.n_candidates,
        m.folds,
        cfg.seed,
    )?;
    let forest = train_forest(&train.matrix(), &train.targets(), &train.feature_names, &search.best)?;
    let test_eval = evaluate(&forest, &test.matrix(), &test.targets())?;
    let importance =
        conditional_permutation_importance(&forest, &test.matrix(), &test.targets(), &m.importance(cfg.seed))?;
    let cv_r2 = search.leaderboard[0].mean_r2;

    let reports = Reports::new(cfg, "model")?;
    let drops: Vec<DropRow> = dropped
        .iter()
        .map(|d| {
            let (id, scope) = match d {
                DropReason::MissingIndicator { image_id, participant_scope, .. } => {
                    (image_id.clone(), participant_scope.to_string())
                }
                DropReason::MissingMetrics { image_id } => (image_id.clone(), String::new()),
            };
            DropRow { image_id: id, participant_scope: scope, reason: d.to_string() }
        })
        .collect();
    reports.write_csv(
        "model_drops.csv",
        &["image_id", "participant_scope", "reason"],
        &drops,
        json!({ "dropped": drops.len() }),
    )?;
    reports.write_csv(
        "leaderboard.csv",
        &LEADERBOARD_HEADER,
        &search.leaderboard,
        json!({ "candidates": search.leaderboard.len(), "folds": m.folds }),
    )?;
    let ranked = importance.ranked();
    let imp_rows: Vec<ImportanceRow> = ranked
        .iter()
        .enumerate()
        .map(|(i, f)| ImportanceRow {
            rank: i + 1,
            feature: &f.feature,
            mean_delta_mse: f.mean_delta_mse,
            sd_delta_mse: f.sd_delta_mse,
            conditioning: f.conditioning.join(";"),
        })
        .collect();
    reports.write_csv(
        "importance.csv",
        &["rank", "feature", "mean_delta_mse", "sd_delta_mse", "conditioning"],
        &imp_rows,
        json!({
            "baseline_mse": importance.baseline_mse,
            "repeats": importance.repeats,
            "correlation_threshold": importance.correlation_threshold,
            "n_bins": importance.n_bins,
        }),
    )?;
    let mut model_json = forest.to_json()?.into_bytes();
    model_json.push(b'\n');
    reports.write("model.json", &model_json, json!({ "trees": forest.trees.len() }))?;
    reports.write_json(
        "model_report.json",
        json!({
            "image_scope": image_scope,
            "rows": table.len(),
            "train_rows": train.len(),
            "test_rows": test.len(),
            "features": table.feature_names,
            "dropped": drops.len(),
            "best_config": search.best,
            "cv": { "mse": search.cv_mse, "r2": cv_r2 },
            "test": { "mse": test_eval.mse, "r2": test_eval.r2, "n": test_eval.n },
        }),
    )?;

    if run.svg {
        let items: Vec<(String, f64, f64)> = ranked
            .iter()
            .map(|f| (f.feature.clone(), f.mean_delta_mse, f.sd_delta_mse))
            .collect();
        let chart = svg::bars("Conditional permutation importance", "increase in MSE", &items);
        reports.write("importance.svg", chart.as_bytes(), json!({}))?;
    }
    println!(
        "model: test R2 {:.4} (n = {}), CV R2 {:.4}, top feature {}",
        test_eval.r2,
        test_eval.n,
        cv_r2,
        ranked.first().map_or("-", |f| f.feature.as_str())
    );
    Ok(())
}
