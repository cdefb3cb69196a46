use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ProjectConfig;

/// Writes report files into the output directory. Every file is replaced
/// atomically and gets a `<name>.meta.json` sidecar.
pub struct Reports {
    dir: PathBuf,
    command: &'static str,
    provenance: Value,
}

impl Reports {
    pub fn new(cfg: &ProjectConfig, command: &'static str) -> Result<Self> {
        let dir = cfg.output_dir();
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating output dir {}", dir.display()))?;
        Ok(Reports {
            dir,
            command,
            provenance: json!({
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "seed": cfg.seed,
                "config_fingerprint": cfg.fingerprint(),
                "config": cfg,
            }),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `bytes` as `name` plus its sidecar; `summary` lands in the sidecar.
    pub fn write(&self, name: &str, bytes: &[u8], summary: Value) -> Result<PathBuf> {
        let path = self.path(name);
        atomic_write(&path, bytes)?;
        let meta = json!({
            "command": self.command,
            "artifact": name,
            "provenance": self.provenance,
            "summary": summary,
        });
        let mut meta_bytes = serde_json::to_vec_pretty(&meta)?;
        meta_bytes.push(b'\n');
        atomic_write(&self.path(&format!("{name}.meta.json")), &meta_bytes)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_csv<T: Serialize>(
        &self,
        name: &str,
        header: &[&str],
        rows: &[T],
        summary: Value,
    ) -> Result<PathBuf> {
        self.write(name, &csv_bytes(header, rows)?, summary)
    }

    /// A JSON report with the provenance block embedded.
    pub fn write_json(&self, name: &str, report: Value) -> Result<PathBuf> {
        let mut doc = json!({ "provenance": self.provenance });
        if let (Value::Object(d), Value::Object(r)) = (&mut doc, report) {
            d.extend(r);
        }
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        self.write(name, &bytes, Value::Null)
    }
}

/// CSV with an explicit header so empty tables still carry their columns.
pub fn csv_bytes<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Serialize;

    #[derive(Serialize)]
    struct Row {
        id: &'static str,
        v: Option<f64>,
    }

    #[test]
    fn empty_table_keeps_header() {
        let rows: Vec<Row> = Vec::new();
        assert_eq!(csv_bytes(&["id", "v"], &rows).unwrap(), b"id,v\n");
        let rows = [Row { id: "a", v: None }, Row { id: "b", v: Some(0.5) }];
        assert_eq!(csv_bytes(&["id", "v"], &rows).unwrap(), b"id,v\na,\nb,0.5\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
