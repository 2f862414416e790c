use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use legalex_core::corpus::{CleanRules, ScopeFilter, DEFAULT_HEADER_CHARS};
use legalex_core::eval::Tolerances;
use legalex_core::extract_llm::{HallucinationConfig, LlmConfig, PromptTemplate};
use legalex_core::extract_regex::{KeywordConfig, RegexExtractor};
use legalex_core::retrieval::EmbedderSpec;
use legalex_core::segmenter::SegmenterConfig;
use legalex_core::stats::DEFAULT_BIN_EDGES;
use legalex_core::EntityKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub config_version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<EntityKind>,
    /// Worker threads for per-document stages.
    #[serde(default = "default_workers")]
    pub max_workers: usize,
    pub corpus: CorpusSection,
    #[serde(default)]
    pub segmenter: SegmenterConfig,
    #[serde(default)]
    pub retrieval: RetrievalSection,
    #[serde(default)]
    pub keywords: KeywordConfig,
    #[serde(default)]
    pub prompt: PromptTemplate,
    #[serde(default)]
    pub llm: LlmSection,
    #[serde(default)]
    pub hallucination: HallucinationConfig,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub stats: StatsSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_kinds() -> Vec<EntityKind> {
    EntityKind::ALL.to_vec()
}
fn default_workers() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSection {
    /// Directory of plain-text rulings, or a JSONL manifest.
    pub path: PathBuf,
    #[serde(default)]
    pub clean_patterns: Vec<String>,
    #[serde(default)]
    pub scope_must: Vec<String>,
    #[serde(default)]
    pub scope_must_not: Vec<String>,
    #[serde(default = "default_header_chars")]
    pub header_chars: usize,
}

fn default_header_chars() -> usize {
    DEFAULT_HEADER_CHARS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalSection {
    pub embedder: EmbedderSpec,
    /// Blocks retrieved per query.
    pub k: usize,
    /// Terms kept per generated query.
    pub top_m: usize,
    /// Example passages per kind; their top tf-idf terms form the query.
    pub exemplars: BTreeMap<EntityKind, Vec<String>>,
    /// Hand-written queries, used for kinds without exemplars.
    pub queries: BTreeMap<EntityKind, String>,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        RetrievalSection {
            embedder: EmbedderSpec::default(),
            k: 3,
            top_m: 8,
            exemplars: BTreeMap::new(),
            queries: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Mock,
    Openai,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LlmSection {
    #[serde(default)]
    pub backend: Backend,
    /// Fixture table for the mock backend.
    #[serde(default)]
    pub mock_fixtures: Option<PathBuf>,
    #[serde(flatten)]
    pub settings: LlmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub gold: Option<PathBuf>,
    pub negatives: Option<PathBuf>,
    pub tolerances: Tolerances,
    /// Score only gold samples whose values occur in their segments.
    pub dataset2: bool,
    pub sweep_steps: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            gold: None,
            negatives: None,
            tolerances: Tolerances::default(),
            dataset2: false,
            sweep_steps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsSection {
    /// CSV with header `year,month,index`.
    pub cpi: Option<PathBuf>,
    pub bin_edges: Vec<f64>,
    pub histogram_kinds: Vec<EntityKind>,
    /// Also render the histogram as SVG.
    pub chart: bool,
}

impl Default for StatsSection {
    fn default() -> Self {
        StatsSection {
            cpi: None,
            bin_edges: DEFAULT_BIN_EDGES.to_vec(),
            histogram_kinds: vec![EntityKind::PhysicalDisability],
            chart: false,
        }
    }
}

/// Input files a command reads besides the pipeline's own artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    Corpus,
    MockFixtures,
    Gold,
    Negatives,
    Cpi,
}

/// A validated configuration with paths resolved against the config file's
/// directory.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub cfg: PipelineConfig,
    /// Hash of the configuration as written, before path resolution.
    pub sha256: String,
    pub path: PathBuf,
}

pub fn config_sha256(cfg: &PipelineConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        let cfg: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))?;
        ensure!(
            cfg.config_version == CONFIG_VERSION,
            "{}: unsupported config_version {} (expected {CONFIG_VERSION})",
            path.display(),
            cfg.config_version
        );
        let sha256 = config_sha256(&cfg);
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg = cfg;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.output_dir);
        resolve(&mut cfg.corpus.path);
        for p in [
            &mut cfg.llm.mock_fixtures,
            &mut cfg.eval.gold,
            &mut cfg.eval.negatives,
            &mut cfg.stats.cpi,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
        let loaded = LoadedConfig {
            cfg,
            sha256,
            path: path.to_path_buf(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    fn validate(&self) -> Result<()> {
        let c = &self.cfg;
        ensure!(c.max_workers >= 1, "max_workers must be at least 1");
        ensure!(!c.kinds.is_empty(), "kinds must not be empty");
        ensure!(c.retrieval.top_m >= 1, "retrieval.top_m must be at least 1");
        ensure!(c.eval.sweep_steps >= 1, "eval.sweep_steps must be at least 1");
        ensure!(
            c.eval.tolerances.percentage >= 0.0 && c.eval.tolerances.amount >= 0.0,
            "eval tolerances must be >= 0"
        );
        c.segmenter.validate()?;
        c.llm.settings.validate()?;
        c.hallucination.validate()?;
        c.prompt.validate()?;
        for k in &c.kinds {
            ensure!(
                c.prompt.instructions.contains_key(k),
                "prompt.instructions lacks an entry for {k}"
            );
        }
        RegexExtractor::new(&c.segmenter, &c.keywords)?;
        CleanRules::new(&c.corpus.clean_patterns)?;
        ScopeFilter::new(&c.corpus.scope_must, &c.corpus.scope_must_not)?;
        if let EmbedderSpec::Mock { dim, .. } = c.retrieval.embedder {
            ensure!(dim >= 1, "retrieval.embedder.dim must be at least 1");
        }
        Ok(())
    }

    /// Check that the inputs a command needs are configured and exist.
    pub fn require(&self, inputs: &[Input]) -> Result<()> {
        let c = &self.cfg;
        for input in inputs {
            let (key, path) = match input {
                Input::Corpus => ("corpus.path", Some(&c.corpus.path)),
                Input::MockFixtures => {
                    if c.llm.backend != Backend::Mock {
                        continue;
                    }
                    ("llm.mock_fixtures", c.llm.mock_fixtures.as_ref())
                }
                Input::Gold => ("eval.gold", c.eval.gold.as_ref()),
                Input::Negatives => ("eval.negatives", c.eval.negatives.as_ref()),
                Input::Cpi => match &c.stats.cpi {
                    Some(p) => ("stats.cpi", Some(p)),
                    None => continue,
                },
            };
            let Some(path) = path else {
                bail!("{}: `{key}` is required for this command", self.path.display());
            };
            if !path.exists() {
                bail!(
                    "{}: `{key}` refers to missing path {}",
                    self.path.display(),
                    path.display()
                );
            }
        }
        Ok(())
    }
}
