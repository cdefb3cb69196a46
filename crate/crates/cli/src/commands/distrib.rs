use std::collections::HashMap;

use anyhow::{bail, Result};
use greenscape::scoring::Scope;
use greenscape::stats::{mann_whitney_u_with, quantile, quantile_groups, RankTestOptions};
use greenscape::{Indicator, MetricRow, TestResult};
use serde::Serialize;
use serde_json::json;

use super::{context_tag, report_contexts, stars};
use crate::corpus::{read_metrics, read_scores};
use crate::output::Reports;
use crate::svg::{self, Chart, Mark, Series};
use crate::Run;

#[derive(Debug, Default, Serialize)]
struct Comparison {
    n_low: usize,
    n_high: usize,
    median_low: Option<f64>,
    median_high: Option<f64>,
    u: Option<f64>,
    p: Option<f64>,
    stars: &'static str,
}

#[derive(Debug, Serialize)]
struct DistribRow {
    participant_scope: Scope,
    image_scope: Scope,
    n: usize,
    q_low: Option<f64>,
    q_high: Option<f64>,
    entropy_n_low: usize,
    entropy_n_high: usize,
    entropy_median_low: Option<f64>,
    entropy_median_high: Option<f64>,
    entropy_u: Option<f64>,
    entropy_p: Option<f64>,
    entropy_stars: &'static str,
    depth_n_low: usize,
    depth_n_high: usize,
    depth_median_low: Option<f64>,
    depth_median_high: Option<f64>,
    depth_u: Option<f64>,
    depth_p: Option<f64>,
    depth_stars: &'static str,
    note: String,
}

const HEADER: [&str; 20] = [
    "participant_scope",
    "image_scope",
    "n",
    "q_low",
    "q_high",
    "entropy_n_low",
    "entropy_n_high",
    "entropy_median_low",
    "entropy_median_high",
    "entropy_u",
    "entropy_p",
    "entropy_stars",
    "depth_n_low",
    "depth_n_high",
    "depth_median_low",
    "depth_median_high",
    "depth_u",
    "depth_p",
    "depth_stars",
    "note",
];

#[derive(Debug, Serialize)]
struct MemberRow<'a> {
    participant_scope: &'a Scope,
    image_scope: &'a Scope,
    image_id: &'a str,
    group: &'static str,
    q: f64,
    spatial_entropy: f64,
    median_veg_depth: Option<f64>,
}

const MEMBER_HEADER: [&str; 7] = [
    "participant_scope",
    "image_scope",
    "image_id",
    "group",
    "q",
    "spatial_entropy",
    "median_veg_depth",
];

fn compare(low: &[f64], high: &[f64], opts: &RankTestOptions, alpha: f64) -> (Comparison, Option<String>) {
    let mut c = Comparison {
        n_low: low.len(),
        n_high: high.len(),
        median_low: quantile(low, 0.5).ok(),
        median_high: quantile(high, 0.5).ok(),
        ..Comparison::default()
    };
    match mann_whitney_u_with(low, high, opts) {
        Ok(TestResult { statistic, p_value, .. }) => {
            c.u = Some(statistic);
            c.p = Some(p_value);
            c.stars = stars(Some(p_value), alpha);
            (c, None)
        }
        Err(e) => (c, Some(e.to_string())),
    }
}

pub fn run(run: &Run) -> Result<()> {
    let cfg = &run.cfg;
    let out = cfg.output_dir();
    let metrics = read_metrics(&out.join("metrics.csv"))?;
    let table = read_scores(&out.join("scores.csv"))?;
    let indicator = run.indicator.unwrap_or(Indicator::Green);
    let s = &cfg.stats;
    let opts = s.rank_options();
    let by_id: HashMap<&str, &MetricRow> = metrics.iter().map(|m| (m.image_id.as_str(), m)).collect();

    let contexts = report_contexts(run, &table, indicator);
    if contexts.is_empty() {
        bail!("scores.csv has no {indicator} rows");
    }
    let mut rows = Vec::new();
    let mut members = Vec::new();
    for ctx in &contexts {
        let entries: Vec<(String, f64)> = table
            .cell(ctx, indicator)
            .filter(|r| by_id.contains_key(r.image_id.as_str()))
            .map(|r| (r.image_id.clone(), r.q))
            .collect();
        let mut row = DistribRow {
            participant_scope: ctx.participant_scope.clone(),
            image_scope: ctx.image_scope.clone(),
            n: entries.len(),
            q_low: None,
            q_high: None,
            entropy_n_low: 0,
            entropy_n_high: 0,
            entropy_median_low: None,
            entropy_median_high: None,
            entropy_u: None,
            entropy_p: None,
            entropy_stars: "",
            depth_n_low: 0,
            depth_n_high: 0,
            depth_median_low: None,
            depth_median_high: None,
            depth_u: None,
            depth_p: None,
            depth_stars: "",
            note: String::new(),
        };
        let groups = match quantile_groups(&entries, s.low_quantile, s.high_quantile) {
            Ok(g) => g,
            Err(e) => {
                row.note = format!("grouping: {e}");
                rows.push(row);
                continue;
            }
        };
        row.q_low = Some(groups.q_low);
        row.q_high = Some(groups.q_high);
        let q: HashMap<&str, f64> = entries.iter().map(|(id, q)| (id.as_str(), *q)).collect();
        for (name, ids) in [("low", &groups.low), ("high", &groups.high)] {
            for id in ids {
                let m = by_id[id.as_str()];
                members.push(MemberRow {
                    participant_scope: &ctx.participant_scope,
                    image_scope: &ctx.image_scope,
                    image_id: &m.image_id,
                    group: name,
                    q: q[id.as_str()],
                    spatial_entropy: m.spatial_entropy,
                    median_veg_depth: m.median_veg_depth,
                });
            }
        }
        let values = |ids: &[String], f: fn(&MetricRow) -> Option<f64>| -> Vec<f64> {
            ids.iter().filter_map(|id| f(by_id[id.as_str()])).collect()
        };
        let mut notes = Vec::new();
        let (e, note) = compare(
            &values(&groups.low, |m| Some(m.spatial_entropy)),
            &values(&groups.high, |m| Some(m.spatial_entropy)),
            &opts,
            s.alpha,
        );
        notes.extend(note.map(|n| format!("entropy: {n}")));
        let (d, note) = compare(
            &values(&groups.low, |m| m.median_veg_depth),
            &values(&groups.high, |m| m.median_veg_depth),
            &opts,
            s.alpha,
        );
        notes.extend(note.map(|n| format!("depth: {n}")));
        row.entropy_n_low = e.n_low;
        row.entropy_n_high = e.n_high;
        row.entropy_median_low = e.median_low;
        row.entropy_median_high = e.median_high;
        row.entropy_u = e.u;
        row.entropy_p = e.p;
        row.entropy_stars = e.stars;
        row.depth_n_low = d.n_low;
        row.depth_n_high = d.n_high;
        row.depth_median_low = d.median_low;
        row.depth_median_high = d.median_high;
        row.depth_u = d.u;
        row.depth_p = d.p;
        row.depth_stars = d.stars;
        row.note = notes.join("; ");
        rows.push(row);
    }

    let tested_entropy = rows.iter().filter(|r| r.entropy_p.is_some()).count();
    let sig_entropy = rows.iter().filter(|r| !r.entropy_stars.is_empty()).count();
    let tested_depth = rows.iter().filter(|r| r.depth_p.is_some()).count();
    let sig_depth = rows.iter().filter(|r| !r.depth_stars.is_empty()).count();
    let reports = Reports::new(cfg, "distrib")?;
    reports.write_csv(
        "distrib.csv",
        &HEADER,
        &rows,
        json!({
            "indicator": indicator,
            "contexts": rows.len(),
            "entropy": { "tested": tested_entropy, "significant": sig_entropy },
            "depth": { "tested": tested_depth, "significant": sig_depth },
            "alpha": s.alpha,
        }),
    )?;
    reports.write_csv("distrib_groups.csv", &MEMBER_HEADER, &members, json!({ "rows": members.len() }))?;

    if run.svg {
        let ctx = &contexts[0];
        let pick = |group: &str, f: fn(&MemberRow) -> Option<f64>| -> Vec<(f64, f64)> {
            members
                .iter()
                .filter(|m| m.participant_scope == &ctx.participant_scope && m.image_scope == &ctx.image_scope)
                .filter(|m| m.group == group)
                .filter_map(|m| f(m).map(|v| (m.q, v)))
                .collect()
        };
        for (name, label, f) in [
            ("entropy", "spatial entropy", (|m: &MemberRow| Some(m.spatial_entropy)) as fn(&MemberRow) -> Option<f64>),
            ("depth", "median vegetation depth", |m: &MemberRow| m.median_veg_depth),
        ] {
            let chart = Chart {
                title: format!("{label} by perceived-greenery group, {ctx}"),
                x_label: format!("{indicator} Q score"),
                y_label: label.into(),
                series: vec![
                    Series { name: "low".into(), points: pick("low", f), mark: Mark::Points },
                    Series { name: "high".into(), points: pick("high", f), mark: Mark::Points },
                ],
                ..Chart::default()
            };
            let file = format!("distrib_{name}_{}.svg", context_tag(ctx));
            reports.write(&file, svg::render(&chart).as_bytes(), json!({}))?;
        }
    }
    println!(
        "distrib: entropy differs in {sig_entropy}/{tested_entropy} contexts, depth in {sig_depth}/{tested_depth}"
    );
    Ok(())
}
