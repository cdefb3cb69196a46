use std::collections::BTreeMap;

use anyhow::{Context, Result};
use greenscape::scoring::{default_contexts, parse_comparisons, score_table};
use greenscape::{ComparisonRecord, Indicator};
use serde_json::json;

use crate::corpus::load_catalog;
use crate::output::Reports;
use crate::Run;

pub fn run(run: &Run) -> Result<()> {
    let cfg = &run.cfg;
    let path = cfg.require(&cfg.paths.comparisons, "comparisons")?;
    // a zero-byte file is an empty survey, not a schema error
    let mut records: Vec<ComparisonRecord> = if std::fs::metadata(&path)?.len() == 0 {
        Vec::new()
    } else {
        parse_comparisons(&path).with_context(|| format!("reading {}", path.display()))?
    };
    let cities = load_catalog(cfg)?;
    for r in &mut records {
        r.attach_cities(&cities);
    }

    let contexts = match &run.context {
        Some(c) => vec![c.clone()],
        None => default_contexts(&records),
    };
    let indicators: Vec<Indicator> = match run.indicator {
        Some(i) => vec![i],
        None => Indicator::ALL.to_vec(),
    };
    let table = score_table(&records, &contexts, &indicators, &cfg.scoring)?;

    let mut per_indicator: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &table.rows {
        *per_indicator.entry(r.indicator.as_str()).or_default() += 1;
    }
    let mut bytes = Vec::new();
    table.write_csv(&mut bytes)?;
    let reports = Reports::new(cfg, "scores")?;
    reports.write(
        "scores.csv",
        &bytes,
        json!({
            "records": records.len(),
            "contexts": contexts.len(),
            "rows": table.len(),
            "rows_per_indicator": per_indicator,
        }),
    )?;
    println!("scores: {} rows from {} records", table.len(), records.len());
    Ok(())
}
