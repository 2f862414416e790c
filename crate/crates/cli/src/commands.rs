use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Write};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use legalex_core::corpus::{load_corpus, prepare_document, CleanRules, Document, ScopeFilter};
use legalex_core::eval::{
    filter_dataset2, hallucination_benchmark, score_extractions, segmentation_qa, sweep_runs, threshold_sweep,
    uniform_grid, EvalReport, GoldRecord, LabeledSample, NegativeGroup, SweepRow, SweepRun,
};
use legalex_core::extract_llm::{
    plan_prompt, prompt_sha256, ChatBackend, LlmExtractor, MockChat, OpenAiChat, RagContext,
};
use legalex_core::extract_regex::RegexExtractor;
use legalex_core::retrieval::{build_index, build_tfidf, make_query, Embedder, Query, VectorIndex};
use legalex_core::segmenter::{block_split, regex_percent_segments, Segment, TokenBlock};
use legalex_core::stats::{
    cpi_compare, disability_histogram, monthly_point_value, point_value, write_cpi_csv, write_histogram_csv,
    write_monthly_csv, write_pv_csv, CpiSeries, DisabilityDistribution, NoPointValue, PvInputs, YearMonth,
};
use legalex_core::{jsonl, EntityKind, Extraction};

use crate::artifacts::{self as art, read_stage, Artifacts};
use crate::chart::histogram_svg;
use crate::config::{Backend, Input, LoadedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExtractMethod {
    Regex,
    Llm,
}

impl ExtractMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtractMethod::Regex => "regex",
            ExtractMethod::Llm => "llm",
        }
    }
}

fn pool(n: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?)
}

fn sort_extractions(v: &mut [Extraction]) {
    v.sort_by(|a, b| a.doc_id.cmp(&b.doc_id).then(a.kind.cmp(&b.kind)));
}

fn error_summary(what: &str, records: &[Extraction]) {
    let errors = records.iter().filter(|e| e.is_error()).count();
    eprintln!("{what}: {} records, {errors} per-kind errors", records.len());
}

fn in_scope_documents(l: &LoadedConfig) -> Result<Vec<Document>> {
    let docs: Vec<Document> = read_stage(&l.cfg.output_dir, art::CORPUS, "ingest")?;
    Ok(docs.into_iter().filter(|d| d.in_scope).collect())
}

fn blocks_by_doc(l: &LoadedConfig) -> Result<BTreeMap<String, Vec<TokenBlock>>> {
    let blocks: Vec<TokenBlock> = read_stage(&l.cfg.output_dir, art::BLOCKS, "segment")?;
    let mut map: BTreeMap<String, Vec<TokenBlock>> = BTreeMap::new();
    for b in blocks {
        map.entry(b.doc_id.clone()).or_default().push(b);
    }
    for v in map.values_mut() {
        v.sort_by_key(|b| b.index);
    }
    Ok(map)
}

pub fn ingest(l: &LoadedConfig) -> Result<()> {
    l.require(&[Input::Corpus])?;
    let c = &l.cfg.corpus;
    let loaded = load_corpus(&c.path)?;
    let rules = CleanRules::new(&c.clean_patterns)?;
    let filter = ScopeFilter::new(&c.scope_must, &c.scope_must_not)?;
    let mut docs = loaded.documents;
    pool(l.cfg.max_workers)?.install(|| {
        docs.par_iter_mut()
            .for_each(|d| prepare_document(d, &rules, &filter, c.header_chars));
    });
    let out = Artifacts::new(l, "ingest")?;
    out.write_jsonl(art::CORPUS, &docs)?;
    out.write_jsonl(art::INGEST_ERRORS, &loaded.errors)?;
    let in_scope = docs.iter().filter(|d| d.in_scope).count();
    eprintln!(
        "ingest: {} documents, {in_scope} in scope, {} unreadable",
        docs.len(),
        loaded.errors.len()
    );
    Ok(())
}

pub fn segment(l: &LoadedConfig) -> Result<()> {
    let docs = in_scope_documents(l)?;
    let seg = &l.cfg.segmenter;
    let (blocks, windows) = pool(l.cfg.max_workers)?.install(|| -> Result<_> {
        let blocks: Vec<TokenBlock> = docs.par_iter().flat_map_iter(|d| block_split(d, seg)).collect();
        let windows: Vec<Vec<Segment>> = docs
            .par_iter()
            .map(|d| regex_percent_segments(d, seg))
            .collect::<legalex_core::Result<_>>()?;
        Ok((blocks, windows.concat()))
    })?;
    let out = Artifacts::new(l, "segment")?;
    out.write_jsonl(art::BLOCKS, &blocks)?;
    out.write_jsonl(art::REGEX_SEGMENTS, &windows)?;
    eprintln!("segment: {} blocks, {} regex windows", blocks.len(), windows.len());
    Ok(())
}

fn embedder(l: &LoadedConfig) -> Result<Box<dyn Embedder>> {
    Ok(l.cfg.retrieval.embedder.build()?)
}

pub fn index(l: &LoadedConfig) -> Result<()> {
    let blocks: Vec<TokenBlock> = blocks_by_doc(l)?.into_values().flatten().collect();
    let emb = embedder(l)?;
    let Some(index) = build_index(&blocks, emb.as_ref())? else {
        bail!("no blocks to index; the in-scope corpus is empty");
    };
    let out = Artifacts::new(l, "index")?;
    out.write_with(art::INDEX, |w| Ok(index.write_to(w)?))?;
    eprintln!("index: {} vectors of dimension {}", index.len(), index.dim());
    Ok(())
}

pub fn query_gen(l: &LoadedConfig) -> Result<()> {
    let r = &l.cfg.retrieval;
    let blocks: Vec<TokenBlock> = blocks_by_doc(l)?.into_values().flatten().collect();
    let mut model = None;
    let mut queries = Vec::new();
    for &kind in &l.cfg.kinds {
        let exemplars = r.exemplars.get(&kind).filter(|e| !e.is_empty());
        let q = match (exemplars, r.queries.get(&kind)) {
            (Some(ex), _) => {
                if model.is_none() {
                    let texts: Vec<&str> = blocks.iter().map(|b| b.text.as_str()).collect();
                    model = Some(build_tfidf(&texts)?);
                }
                make_query(kind, model.as_ref().expect("built above"), ex, r.top_m)?
            }
            (None, Some(text)) => Query::literal(kind, text.clone())?,
            (None, None) => bail!("retrieval has neither exemplars nor a query for {kind}"),
        };
        queries.push(q);
    }
    let out = Artifacts::new(l, "query-gen")?;
    out.write_jsonl(art::QUERIES, &queries)?;
    for q in &queries {
        eprintln!("query-gen: {} -> {}", q.entity_kind, q.text);
    }
    Ok(())
}

/// Everything retrieval-augmented extraction needs, loaded from earlier
/// stages.
struct RagInputs {
    docs: Vec<(Document, Vec<TokenBlock>)>,
    index: VectorIndex,
    embedder: Box<dyn Embedder>,
    queries: Vec<Query>,
}

impl RagInputs {
    fn load(l: &LoadedConfig) -> Result<Self> {
        let mut blocks = blocks_by_doc(l)?;
        let docs = in_scope_documents(l)?
            .into_iter()
            .map(|d| {
                let b = blocks.remove(&d.id).unwrap_or_default();
                (d, b)
            })
            .collect();
        let embedder = embedder(l)?;
        let index_path = l.cfg.output_dir.join(art::INDEX);
        if !index_path.exists() {
            bail!("{} not found; run `legalex index` first", index_path.display());
        }
        let index = VectorIndex::load(&index_path, &embedder.identity())?;
        let queries = read_stage(&l.cfg.output_dir, art::QUERIES, "query-gen")?;
        Ok(RagInputs {
            docs,
            index,
            embedder,
            queries,
        })
    }

    fn context(&self, l: &LoadedConfig) -> Result<RagContext<'_>> {
        let rag = RagContext::new(
            &self.index,
            self.embedder.as_ref(),
            &self.queries,
            l.cfg.retrieval.k,
            l.cfg.segmenter.expansion_radius,
        )?;
        for k in &l.cfg.kinds {
            if !rag.has_query(*k) {
                bail!("{} has no query for {k}; rerun `legalex query-gen`", art::QUERIES);
            }
        }
        Ok(rag)
    }
}

fn chat_backend(l: &LoadedConfig) -> Result<Box<dyn ChatBackend>> {
    l.require(&[Input::MockFixtures])?;
    Ok(match l.cfg.llm.backend {
        Backend::Mock => {
            let path = l.cfg.llm.mock_fixtures.as_ref().expect("checked by require");
            Box::new(MockChat::from_jsonl(path)?)
        }
        Backend::Openai => Box::new(OpenAiChat::new(l.cfg.llm.settings.clone())?),
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PromptPlan {
    pub doc_id: String,
    pub kind: EntityKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn plan_prompts(l: &LoadedConfig) -> Result<()> {
    let inputs = RagInputs::load(l)?;
    let rag = inputs.context(l)?;
    let mut plans = Vec::new();
    for (doc, blocks) in &inputs.docs {
        let mut kinds = l.cfg.kinds.clone();
        kinds.sort();
        kinds.dedup();
        for kind in kinds {
            let plan = match plan_prompt(&rag, &l.cfg.prompt, doc, blocks, kind) {
                Ok((_, prompt)) => PromptPlan {
                    doc_id: doc.id.clone(),
                    kind,
                    prompt_sha256: Some(prompt_sha256(&prompt)),
                    prompt: Some(prompt),
                    error: None,
                },
                Err(e) => PromptPlan {
                    doc_id: doc.id.clone(),
                    kind,
                    prompt_sha256: None,
                    prompt: None,
                    error: Some(e.to_string()),
                },
            };
            plans.push(plan);
        }
    }
    let out = Artifacts::new(l, "plan-prompts")?;
    out.write_jsonl(art::PROMPTS, &plans)?;
    eprintln!(
        "plan-prompts: {} prompts",
        plans.iter().filter(|p| p.prompt.is_some()).count()
    );
    Ok(())
}

fn regex_extractions(l: &LoadedConfig) -> Result<Vec<Extraction>> {
    let docs = in_scope_documents(l)?;
    let ex = RegexExtractor::new(&l.cfg.segmenter, &l.cfg.keywords)?;
    let kinds: BTreeSet<EntityKind> = l.cfg.kinds.iter().copied().collect();
    let mut out: Vec<Extraction> = pool(l.cfg.max_workers)?.install(|| {
        docs.par_iter()
            .flat_map_iter(|d| ex.extract(d))
            .filter(|e| kinds.contains(&e.kind))
            .collect()
    });
    sort_extractions(&mut out);
    Ok(out)
}

fn llm_extractions(l: &LoadedConfig) -> Result<Vec<Extraction>> {
    let backend = chat_backend(l)?;
    let inputs = RagInputs::load(l)?;
    let rag = inputs.context(l)?;
    let ex = LlmExtractor {
        backend: backend.as_ref(),
        template: &l.cfg.prompt,
        hallucination: l.cfg.hallucination,
    };
    Ok(ex.extract_corpus(
        &rag,
        &inputs.docs,
        &l.cfg.kinds,
        l.cfg.llm.settings.max_concurrent_requests,
    )?)
}

pub fn extract(l: &LoadedConfig, method: ExtractMethod) -> Result<()> {
    let records = match method {
        ExtractMethod::Regex => regex_extractions(l)?,
        ExtractMethod::Llm => llm_extractions(l)?,
    };
    let out = Artifacts::new(l, &format!("extract --method {}", method.as_str()))?;
    out.write_jsonl(&art::extractions(method.as_str()), &records)?;
    error_summary(&format!("extract ({})", method.as_str()), &records);
    Ok(())
}

/// A gold-format line prefilled by the model, for manual correction.
#[derive(Debug, Serialize, Deserialize)]
pub struct LabelDraft {
    pub doc_id: String,
    pub kind: EntityKind,
    pub gold_percentage: Option<f64>,
    pub gold_amount: Option<f64>,
    pub segments: Vec<Segment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_error: Option<String>,
}

pub fn label_assist(l: &LoadedConfig) -> Result<()> {
    let backend = chat_backend(l)?;
    let inputs = RagInputs::load(l)?;
    let rag = inputs.context(l)?;
    let ex = LlmExtractor {
        backend: backend.as_ref(),
        template: &l.cfg.prompt,
        hallucination: l.cfg.hallucination,
    };
    let mut kinds = l.cfg.kinds.clone();
    kinds.sort();
    kinds.dedup();
    let drafts: Vec<LabelDraft> = pool(l.cfg.llm.settings.max_concurrent_requests)?.install(|| {
        inputs
            .docs
            .par_iter()
            .flat_map_iter(|(doc, blocks)| {
                let ex = &ex;
                let rag = &rag;
                kinds.iter().map(move |&k| {
                    let o = ex.extract_kind(rag, doc, blocks, k);
                    let mut segments = o.segments;
                    segments.sort_by_key(|s| s.char_start);
                    LabelDraft {
                        doc_id: doc.id.clone(),
                        kind: k,
                        gold_percentage: o.extraction.percentage,
                        gold_amount: o.extraction.amount,
                        segments,
                        model_error: o.extraction.error,
                    }
                })
            })
            .collect()
    });
    let out = Artifacts::new(l, "label-assist")?;
    out.write_jsonl(art::LABEL_ASSIST, &drafts)?;
    eprintln!("label-assist: {} drafts", drafts.len());
    Ok(())
}

fn load_gold(l: &LoadedConfig) -> Result<Vec<LabeledSample>> {
    l.require(&[Input::Gold])?;
    let path = l.cfg.eval.gold.as_ref().expect("checked by require");
    let gold: Vec<GoldRecord> = jsonl::read_jsonl(path)?;
    Ok(gold.into_iter().map(LabeledSample::from).collect())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalOutput {
    pub method: String,
    pub dataset2: bool,
    pub n_gold_total: usize,
    pub n_gold_scored: usize,
    /// Share of gold samples whose values the method's segments contain.
    pub segmentation_qa: Option<f64>,
    pub report: EvalReport,
}

fn offered_segments(l: &LoadedConfig, method: ExtractMethod, gold: &[LabeledSample]) -> Result<Option<f64>> {
    if !gold.iter().any(LabeledSample::has_gold) {
        return Ok(None);
    }
    match method {
        ExtractMethod::Regex => {
            let windows: Vec<Segment> = read_stage(&l.cfg.output_dir, art::REGEX_SEGMENTS, "segment")?;
            let mut by_doc: BTreeMap<&str, Vec<Segment>> = BTreeMap::new();
            for w in &windows {
                by_doc.entry(w.doc_id.as_str()).or_default().push(w.clone());
            }
            Ok(Some(segmentation_qa(gold, |s| {
                Ok(by_doc.get(s.doc_id.as_str()).cloned().unwrap_or_default())
            })?))
        }
        ExtractMethod::Llm => {
            let inputs = RagInputs::load(l)?;
            let rag = inputs.context(l)?;
            let by_doc: BTreeMap<&str, &(Document, Vec<TokenBlock>)> =
                inputs.docs.iter().map(|p| (p.0.id.as_str(), p)).collect();
            Ok(Some(segmentation_qa(gold, |s| match by_doc.get(s.doc_id.as_str()) {
                Some((doc, blocks)) if rag.has_query(s.kind) => rag.segments(doc, blocks, s.kind),
                _ => Ok(Vec::new()),
            })?))
        }
    }
}

pub fn eval(l: &LoadedConfig, method: ExtractMethod) -> Result<()> {
    let gold_all = load_gold(l)?;
    let gold = if l.cfg.eval.dataset2 {
        filter_dataset2(&gold_all)
    } else {
        gold_all.clone()
    };
    let preds: Vec<Extraction> = read_stage(
        &l.cfg.output_dir,
        &art::extractions(method.as_str()),
        &format!("extract --method {}", method.as_str()),
    )?;
    let report = score_extractions(&preds, &gold, &l.cfg.eval.tolerances)?;
    let output = EvalOutput {
        method: method.as_str().to_string(),
        dataset2: l.cfg.eval.dataset2,
        n_gold_total: gold_all.len(),
        n_gold_scored: gold.len(),
        segmentation_qa: offered_segments(l, method, &gold)?,
        report,
    };
    let out = Artifacts::new(l, &format!("eval --method {}", method.as_str()))?;
    out.write_json(&art::eval_report(method.as_str()), &output)?;

    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "method: {}", output.method)?;
    if output.dataset2 {
        writeln!(
            stdout,
            "dataset 2: {} of {} gold samples retained",
            output.n_gold_scored, output.n_gold_total
        )?;
    }
    if let Some(q) = output.segmentation_qa {
        writeln!(stdout, "segments containing the gold values: {q:.4}")?;
    }
    write!(stdout, "{}", output.report.table())?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchOutput {
    pub p_u: f64,
    pub n_runs: usize,
    pub n_invented: usize,
    pub n_empty: usize,
    pub n_errors: usize,
    pub rate: f64,
    /// Runs flagged at the configured threshold.
    pub n_flagged: usize,
    pub sweep_negatives: Vec<SweepRow>,
    pub sweep_dataset: Option<Vec<SweepRow>>,
}

pub fn bench_hallucination(l: &LoadedConfig) -> Result<()> {
    l.require(&[Input::Negatives])?;
    let backend = chat_backend(l)?;
    let path = l.cfg.eval.negatives.as_ref().expect("checked by require");
    let groups: Vec<NegativeGroup> = jsonl::read_jsonl(path)?;
    let ex = LlmExtractor {
        backend: backend.as_ref(),
        template: &l.cfg.prompt,
        hallucination: l.cfg.hallucination,
    };
    let runs: Vec<Extraction> = pool(l.cfg.llm.settings.max_concurrent_requests)?.install(|| {
        groups
            .par_iter()
            .map(|g| {
                ex.extract_from_segments(&g.doc_id, g.kind, g.segments.clone())
                    .extraction
            })
            .collect()
    });
    let mut runs_iter = runs.into_iter();
    let result = hallucination_benchmark(&groups, |_| runs_iter.next().expect("one run per group"))?;

    let grid = uniform_grid(l.cfg.eval.sweep_steps);
    let negative_runs: Vec<SweepRun> = result
        .runs
        .iter()
        .filter(|e| !e.is_error())
        .filter_map(|e| {
            e.min_prob.map(|m| SweepRun {
                min_prob: m,
                correct: e.is_empty(),
            })
        })
        .collect();
    let preds_path = l.cfg.output_dir.join(art::extractions("llm"));
    let sweep_dataset = match (&l.cfg.eval.gold, preds_path.exists()) {
        (Some(_), true) => {
            let gold = load_gold(l)?;
            let preds: Vec<Extraction> = jsonl::read_jsonl(&preds_path)?;
            Some(threshold_sweep(
                &sweep_runs(&preds, &gold, &l.cfg.eval.tolerances),
                &grid,
            ))
        }
        _ => None,
    };
    let output = BenchOutput {
        p_u: l.cfg.hallucination.p_u,
        n_runs: result.n_runs,
        n_invented: result.n_invented,
        n_empty: result.n_empty,
        n_errors: result.n_errors,
        rate: result.rate,
        n_flagged: result
            .runs
            .iter()
            .filter(|e| e.flagged_hallucination == Some(true))
            .count(),
        sweep_negatives: threshold_sweep(&negative_runs, &grid),
        sweep_dataset,
    };
    let out = Artifacts::new(l, "bench-hallucination")?;
    out.write_json(art::HALLUCINATION_BENCH, &output)?;
    out.write_jsonl("hallucination_runs.jsonl", &result.runs)?;
    out.write_with(art::HALLUCINATION_SWEEP, |w| write_sweep_csv(w, &output))?;
    println!(
        "hallucination rate: {:.4} ({} invented of {} runs, {} errors)",
        output.rate, output.n_invented, output.n_runs, output.n_errors
    );
    Ok(())
}

fn write_sweep_csv(w: &mut dyn Write, o: &BenchOutput) -> Result<()> {
    use legalex_core::stats::fmt_float;
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "set",
        "p_u",
        "n_flagged",
        "flagged_rate",
        "flagged_among_incorrect",
        "flagged_among_correct",
    ])?;
    let sets = [
        ("negatives", Some(&o.sweep_negatives)),
        ("dataset", o.sweep_dataset.as_ref()),
    ];
    for (name, rows) in sets {
        for r in rows.into_iter().flatten() {
            wtr.write_record([
                name.to_string(),
                fmt_float(r.p_u),
                r.n_flagged.to_string(),
                fmt_float(r.flagged_rate),
                opt(r.flagged_among_incorrect),
                opt(r.flagged_among_correct),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MonthRow {
    pub month: YearMonth,
    pub mean: f64,
    pub median: f64,
    pub n: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsSummary {
    pub method: String,
    pub n_documents: usize,
    pub n_point_values: usize,
    pub n_without_month: usize,
    pub skipped: Vec<NoPointValue>,
    pub monthly: Vec<MonthRow>,
    pub histogram: Option<DisabilityDistribution>,
    pub n_percentages_out_of_range: usize,
    pub cpi_correlation: Option<f64>,
    pub n_cpi_months: usize,
}

pub fn stats(l: &LoadedConfig, method: ExtractMethod) -> Result<()> {
    l.require(&[Input::Cpi])?;
    let preds: Vec<Extraction> = read_stage(
        &l.cfg.output_dir,
        &art::extractions(method.as_str()),
        &format!("extract --method {}", method.as_str()),
    )?;
    let docs: Vec<Document> = read_stage(&l.cfg.output_dir, art::CORPUS, "ingest")?;
    let months: BTreeMap<&str, Option<YearMonth>> = docs
        .iter()
        .map(|d| (d.id.as_str(), d.ruling_date.map(YearMonth::of)))
        .collect();

    let mut by_doc: BTreeMap<&str, Vec<&Extraction>> = BTreeMap::new();
    for p in &preds {
        by_doc.entry(p.doc_id.as_str()).or_default().push(p);
    }
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (doc_id, exs) in &by_doc {
        let month = months.get(doc_id).copied().flatten();
        match point_value(doc_id, month, PvInputs::from_extractions(exs.iter().copied())) {
            Ok(r) => records.push(r),
            Err(s) => skipped.push(s),
        }
    }
    let monthly = monthly_point_value(&records);

    let mut out_of_range = 0usize;
    let percentages: Vec<f64> = preds
        .iter()
        .filter(|e| !e.is_error() && l.cfg.stats.histogram_kinds.contains(&e.kind))
        .filter_map(|e| e.percentage)
        .filter(|&p| {
            let ok = p > 0.0 && p <= 100.0;
            out_of_range += usize::from(!ok);
            ok
        })
        .collect();
    let histogram = if percentages.is_empty() {
        None
    } else {
        Some(disability_histogram(&percentages, &l.cfg.stats.bin_edges)?)
    };

    let cpi = match &l.cfg.stats.cpi {
        Some(path) => {
            let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let series = CpiSeries::from_csv(BufReader::new(f), &path.display().to_string())?;
            Some(cpi_compare(&monthly, &series))
        }
        None => None,
    };

    let out = Artifacts::new(l, &format!("stats --method {}", method.as_str()))?;
    out.write_with(art::PV, |w| Ok(write_pv_csv(w, &records)?))?;
    out.write_with(art::MONTHLY, |w| Ok(write_monthly_csv(w, &monthly)?))?;
    if let Some(h) = &histogram {
        out.write_with(art::HISTOGRAM, |w| Ok(write_histogram_csv(w, &h.histogram)?))?;
        if l.cfg.stats.chart {
            out.write_with(art::HISTOGRAM_SVG, |w| Ok(w.write_all(histogram_svg(h).as_bytes())?))?;
        }
    }
    if let Some(c) = &cpi {
        out.write_with(art::CPI, |w| Ok(write_cpi_csv(w, c)?))?;
    }
    let summary = StatsSummary {
        method: method.as_str().to_string(),
        n_documents: by_doc.len(),
        n_point_values: records.len(),
        n_without_month: records.iter().filter(|r| r.ruling_month.is_none()).count(),
        skipped,
        monthly: monthly
            .iter()
            .map(|(m, s)| MonthRow {
                month: *m,
                mean: s.mean,
                median: s.median,
                n: s.n,
            })
            .collect(),
        histogram,
        n_percentages_out_of_range: out_of_range,
        cpi_correlation: cpi.as_ref().and_then(|c| c.correlation),
        n_cpi_months: cpi.as_ref().map_or(0, |c| c.rows.len()),
    };
    out.write_json(art::STATS_SUMMARY, &summary)?;
    println!(
        "stats: {} point values, {} rulings skipped, {} months",
        summary.n_point_values,
        summary.skipped.len(),
        summary.monthly.len()
    );
    if let Some(h) = &summary.histogram {
        println!(
            "disability below 30%: {:.4}, above 50%: {:.4} (n = {})",
            h.fraction_below_30, h.fraction_above_50, h.n
        );
    }
    if let Some(r) = summary.cpi_correlation {
        println!("Pearson correlation with CPI: {r:.4}");
    }
    Ok(())
}

/// Every stage in order. Evaluation, the benchmark and CPI statistics run
/// only when their inputs are configured.
pub fn run_all(l: &LoadedConfig) -> Result<()> {
    ingest(l)?;
    segment(l)?;
    index(l)?;
    query_gen(l)?;
    extract(l, ExtractMethod::Regex)?;
    extract(l, ExtractMethod::Llm)?;
    if l.cfg.eval.gold.is_some() {
        eval(l, ExtractMethod::Regex)?;
        eval(l, ExtractMethod::Llm)?;
    }
    if l.cfg.eval.negatives.is_some() {
        bench_hallucination(l)?;
    }
    stats(l, ExtractMethod::Llm)
}
