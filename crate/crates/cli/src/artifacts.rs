use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::LoadedConfig;

pub const CORPUS: &str = "corpus.jsonl";
pub const INGEST_ERRORS: &str = "ingest_errors.jsonl";
pub const BLOCKS: &str = "blocks.jsonl";
pub const REGEX_SEGMENTS: &str = "regex_segments.jsonl";
pub const INDEX: &str = "index.jsonl";
pub const QUERIES: &str = "queries.jsonl";
pub const PROMPTS: &str = "prompts.jsonl";
pub const LABEL_ASSIST: &str = "label_assist.jsonl";
pub const HALLUCINATION_BENCH: &str = "hallucination_bench.json";
pub const HALLUCINATION_SWEEP: &str = "hallucination_sweep.csv";
pub const PV: &str = "pv.csv";
pub const MONTHLY: &str = "monthly.csv";
pub const HISTOGRAM: &str = "histogram.csv";
pub const HISTOGRAM_SVG: &str = "histogram.svg";
pub const CPI: &str = "cpi.csv";
pub const STATS_SUMMARY: &str = "stats_summary.json";

pub const PROVENANCE_SUFFIX: &str = ".prov.json";

pub fn extractions(method: &str) -> String {
    format!("extractions_{method}.jsonl")
}

pub fn eval_report(method: &str) -> String {
    format!("eval_report_{method}.json")
}

/// Sidecar written next to every artifact. Kept out of the artifact itself
/// so that reruns produce byte-identical data files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub artifact: String,
    pub config_sha256: String,
    pub config_path: String,
    pub created_at: String,
    pub tool: String,
    pub command: String,
}

/// Writes artifacts into the output directory, each with its sidecar.
pub struct Artifacts<'a> {
    pub dir: PathBuf,
    config: &'a LoadedConfig,
    command: String,
}

impl<'a> Artifacts<'a> {
    pub fn new(config: &'a LoadedConfig, command: &str) -> Result<Self> {
        let dir = config.cfg.output_dir.clone();
        fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Artifacts {
            dir,
            config,
            command: command.to_string(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_with<F>(&self, name: &str, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let path = self.path(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        fill(&mut w).with_context(|| format!("cannot write {}", path.display()))?;
        w.flush().with_context(|| format!("cannot write {}", path.display()))?;
        self.write_provenance(name)?;
        Ok(path)
    }

    pub fn write_jsonl<T: Serialize>(&self, name: &str, items: &[T]) -> Result<PathBuf> {
        self.write_with(name, |w| {
            legalex_core::jsonl::to_writer(w, items)?;
            Ok(())
        })
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    fn write_provenance(&self, name: &str) -> Result<()> {
        let prov = Provenance {
            artifact: name.to_string(),
            config_sha256: self.config.sha256.clone(),
            config_path: self.config.path.display().to_string(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            tool: format!("legalex {}", env!("CARGO_PKG_VERSION")),
            command: self.command.clone(),
        };
        let path = self.path(&format!("{name}{PROVENANCE_SUFFIX}"));
        let mut bytes = serde_json::to_vec_pretty(&prov)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))
    }
}

/// Read a JSONL artifact produced by an earlier stage.
pub fn read_stage<T: serde::de::DeserializeOwned>(dir: &Path, name: &str, producer: &str) -> Result<Vec<T>> {
    let path = dir.join(name);
    if !path.exists() {
        anyhow::bail!("{} not found; run `legalex {producer}` first", path.display());
    }
    Ok(legalex_core::jsonl::read_jsonl(&path)?)
}
