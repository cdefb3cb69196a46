use std::collections::HashMap;

use anyhow::{bail, Result};
use greenscape::scoring::Scope;
use greenscape::stats::{bland_altman, pearson, qq_data, TestMethod};
use greenscape::{GroupingContext, Indicator};
use serde::Serialize;
use serde_json::json;

use super::{min_max, report_contexts, stars};
use crate::corpus::{read_metrics, read_scores};
use crate::output::Reports;
use crate::svg::{self, Chart, Mark, Series};
use crate::Run;

#[derive(Debug, Serialize)]
struct AgreementRow {
    participant_scope: Scope,
    image_scope: Scope,
    indicator: Indicator,
    n: usize,
    pearson_r: Option<f64>,
    pearson_p: Option<f64>,
    pearson_stars: &'static str,
    mean_diff: Option<f64>,
    sd_diff: Option<f64>,
    loa_low: Option<f64>,
    loa_high: Option<f64>,
    wilcoxon_statistic: Option<f64>,
    wilcoxon_p: Option<f64>,
    wilcoxon_method: Option<&'static str>,
    wilcoxon_stars: &'static str,
    note: String,
}

const AGREEMENT_HEADER: [&str; 16] = [
    "participant_scope",
    "image_scope",
    "indicator",
    "n",
    "pearson_r",
    "pearson_p",
    "pearson_stars",
    "mean_diff",
    "sd_diff",
    "loa_low",
    "loa_high",
    "wilcoxon_statistic",
    "wilcoxon_p",
    "wilcoxon_method",
    "wilcoxon_stars",
    "note",
];

#[derive(Debug, Serialize)]
struct PointRow<'a> {
    participant_scope: &'a Scope,
    image_scope: &'a Scope,
    image_id: String,
    perceived: f64,
    measured: f64,
    mean: f64,
    diff: f64,
}

const POINT_HEADER: [&str; 7] = [
    "participant_scope",
    "image_scope",
    "image_id",
    "perceived",
    "measured",
    "mean",
    "diff",
];

#[derive(Debug, Serialize)]
struct QqRow<'a> {
    participant_scope: &'a Scope,
    image_scope: &'a Scope,
    level: f64,
    q_score: f64,
    trueskill: f64,
}

const QQ_HEADER: [&str; 5] = ["participant_scope", "image_scope", "level", "q_score", "trueskill"];

fn method_name(m: TestMethod) -> &'static str {
    match m {
        TestMethod::Exact => "exact",
        TestMethod::NormalApprox => "normal",
    }
}

pub fn run(run: &Run) -> Result<()> {
    let cfg = &run.cfg;
    let out = cfg.output_dir();
    let metrics = read_metrics(&out.join("metrics.csv"))?;
    let table = read_scores(&out.join("scores.csv"))?;
    let indicator = run.indicator.unwrap_or(Indicator::Green);
    let alpha = cfg.stats.alpha;
    let opts = cfg.stats.rank_options();

    // measured greenery, min-max scaled over the whole corpus
    let gvi: Vec<f64> = metrics.iter().map(|m| m.gvi).collect();
    let measured: HashMap<&str, f64> = metrics
        .iter()
        .map(|m| m.image_id.as_str())
        .zip(min_max(&gvi))
        .collect();

    let contexts = report_contexts(run, &table, indicator);
    if contexts.is_empty() {
        bail!("scores.csv has no {indicator} rows");
    }
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut qq = Vec::new();
    for ctx in &contexts {
        let cell: Vec<_> = table.cell(ctx, indicator).collect();
        let joined: Vec<(&str, f64, f64)> = cell
            .iter()
            .filter_map(|r| {
                measured
                    .get(r.image_id.as_str())
                    .map(|&m| (r.image_id.as_str(), r.q_normalized, m))
            })
            .collect();
        let perceived: Vec<f64> = joined.iter().map(|j| j.1).collect();
        let meas: Vec<f64> = joined.iter().map(|j| j.2).collect();
        let mut row = AgreementRow {
            participant_scope: ctx.participant_scope.clone(),
            image_scope: ctx.image_scope.clone(),
            indicator,
            n: joined.len(),
            pearson_r: None,
            pearson_p: None,
            pearson_stars: "",
            mean_diff: None,
            sd_diff: None,
            loa_low: None,
            loa_high: None,
            wilcoxon_statistic: None,
            wilcoxon_p: None,
            wilcoxon_method: None,
            wilcoxon_stars: "",
            note: String::new(),
        };
        let mut notes = Vec::new();
        match pearson(&meas, &perceived) {
            Ok(c) => {
                row.pearson_r = Some(c.r);
                row.pearson_p = Some(c.p_value);
                row.pearson_stars = stars(Some(c.p_value), alpha);
            }
            Err(e) => notes.push(format!("correlation: {e}")),
        }
        match bland_altman(&perceived, &meas, &opts) {
            Ok(ba) => {
                row.mean_diff = Some(ba.mean_diff);
                row.sd_diff = Some(ba.sd_diff);
                row.loa_low = Some(ba.loa_low);
                row.loa_high = Some(ba.loa_high);
                match ba.wilcoxon {
                    Some(w) => {
                        row.wilcoxon_statistic = Some(w.statistic);
                        row.wilcoxon_p = Some(w.p_value);
                        row.wilcoxon_method = Some(method_name(w.method));
                        row.wilcoxon_stars = stars(Some(w.p_value), alpha);
                    }
                    None => notes.push("all differences are zero".into()),
                }
                for ((id, p, m), (mean, diff)) in joined.iter().zip(ba.pairs) {
                    points.push(PointRow {
                        participant_scope: &ctx.participant_scope,
                        image_scope: &ctx.image_scope,
                        image_id: id.to_string(),
                        perceived: *p,
                        measured: *m,
                        mean,
                        diff,
                    });
                }
            }
            Err(e) => notes.push(format!("bland-altman: {e}")),
        }
        row.note = notes.join("; ");
        rows.push(row);

        let q: Vec<f64> = cell.iter().map(|r| r.q_normalized).collect();
        let mu: Vec<f64> = cell.iter().map(|r| r.ts_mu).collect();
        if let Ok(pairs) = qq_data(&q, &min_max(&mu), cfg.stats.qq_points) {
            let last = (pairs.len() - 1) as f64;
            for (k, (a, b)) in pairs.into_iter().enumerate() {
                qq.push(QqRow {
                    participant_scope: &ctx.participant_scope,
                    image_scope: &ctx.image_scope,
                    level: k as f64 / last,
                    q_score: a,
                    trueskill: b,
                });
            }
        }
    }

    let significant = rows.iter().filter(|r| !r.pearson_stars.is_empty()).count();
    let biased = rows.iter().filter(|r| !r.wilcoxon_stars.is_empty()).count();
    let reports = Reports::new(cfg, "agree")?;
    reports.write_csv(
        "agreement.csv",
        &AGREEMENT_HEADER,
        &rows,
        json!({
            "indicator": indicator,
            "contexts": rows.len(),
            "significant_correlations": significant,
            "significant_bias": biased,
            "alpha": alpha,
        }),
    )?;
    reports.write_csv("bland_altman.csv", &POINT_HEADER, &points, json!({ "points": points.len() }))?;
    reports.write_csv("qq.csv", &QQ_HEADER, &qq, json!({ "rows": qq.len() }))?;

    if run.svg {
        write_charts(&reports, &rows, &points, &qq, &contexts[0])?;
    }
    println!(
        "agree: {} contexts, {significant} significant correlations, {biased} significant biases",
        rows.len()
    );
    Ok(())
}

fn write_charts(
    reports: &Reports,
    rows: &[AgreementRow],
    points: &[PointRow],
    qq: &[QqRow],
    focus: &GroupingContext,
) -> Result<()> {
    let mut p_scopes: Vec<&Scope> = Vec::new();
    let mut i_scopes: Vec<&Scope> = Vec::new();
    for r in rows {
        if !p_scopes.contains(&&r.participant_scope) {
            p_scopes.push(&r.participant_scope);
        }
        if !i_scopes.contains(&&r.image_scope) {
            i_scopes.push(&r.image_scope);
        }
    }
    let grid: Vec<Vec<Option<f64>>> = p_scopes
        .iter()
        .map(|p| {
            i_scopes
                .iter()
                .map(|i| {
                    rows.iter()
                        .find(|r| &r.participant_scope == *p && &r.image_scope == *i)
                        .and_then(|r| r.pearson_r)
                })
                .collect()
        })
        .collect();
    let names = |v: &[&Scope]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let heat = svg::heatmap(
        "Correlation of perceived and measured greenery",
        &names(&p_scopes),
        &names(&i_scopes),
        &grid,
    );
    reports.write("agreement_heatmap.svg", heat.as_bytes(), json!({}))?;

    let in_focus = |ps: &Scope, is: &Scope| ps == &focus.participant_scope && is == &focus.image_scope;
    let ba: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| in_focus(p.participant_scope, p.image_scope))
        .map(|p| (p.mean, p.diff))
        .collect();
    let mut h_lines = Vec::new();
    if let Some(r) = rows.iter().find(|r| in_focus(&r.participant_scope, &r.image_scope)) {
        if let (Some(m), Some(lo), Some(hi)) = (r.mean_diff, r.loa_low, r.loa_high) {
            h_lines = vec![(m, "mean".to_string()), (lo, "-1.96 sd".into()), (hi, "+1.96 sd".into())];
        }
    }
    let chart = Chart {
        title: format!("Bland-Altman, {focus}"),
        x_label: "mean of perceived and measured".into(),
        y_label: "perceived - measured".into(),
        series: vec![Series { name: "images".into(), points: ba, mark: Mark::Points }],
        h_lines,
        diagonal: false,
    };
    reports.write("bland_altman.svg", svg::render(&chart).as_bytes(), json!({}))?;

    let pts: Vec<(f64, f64)> = qq
        .iter()
        .filter(|r| in_focus(r.participant_scope, r.image_scope))
        .map(|r| (r.q_score, r.trueskill))
        .collect();
    let chart = Chart {
        title: format!("Q-Q, {focus}"),
        x_label: "Q score / 10".into(),
        y_label: "TrueSkill mu, min-max scaled".into(),
        series: vec![Series { name: "quantiles".into(), points: pts, mark: Mark::Points }],
        h_lines: Vec::new(),
        diagonal: true,
    };
    reports.write("qq.svg", svg::render(&chart).as_bytes(), json!({}))?;
    Ok(())
}
