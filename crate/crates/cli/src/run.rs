//! End-to-end evaluation runs: split, generate, decode, score, report.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use dreamcode_core::code::AnnotationSet;
use dreamcode_core::corpus::{anonymize_names, filter_max_characters, Corpus, EntitySpan};
use dreamcode_core::metrics::{macro_average, score_narrative, MatchCounts, MetricReport, SeriesReport};
use dreamcode_core::serialize::{decode, LayoutPolicy, OrderPolicy, Strategy};
use dreamcode_core::split::{kfold_cross_series, leave_one_series_out, SplitPlan};
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError, BackendSpec, HttpBackend, MockBackend, PipeBackend};
use crate::records::{load_corpus_file, load_spans, GenerationRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitChoice {
    Loso,
    Kfold5,
}

impl SplitChoice {
    pub fn plan(self, corpus: &Corpus, seed: u64) -> SplitPlan {
        match self {
            SplitChoice::Loso => leave_one_series_out(corpus),
            SplitChoice::Kfold5 => kfold_cross_series(corpus, 5, seed),
        }
    }
}

/// Everything needed to reproduce a run. Written next to every result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub corpus: PathBuf,
    pub strategy: Strategy,
    pub order: OrderPolicy,
    pub layout: LayoutPolicy,
    pub split: SplitChoice,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_chars: Option<usize>,
    #[serde(default)]
    pub anonymize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spans: Option<PathBuf>,
    pub backend: String,
    pub timeout_ms: u64,
    pub output: PathBuf,
}

/// Outcome for one evaluated narrative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionLine {
    pub id: String,
    pub series: String,
    pub fold: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<String>,
    pub prediction: Option<AnnotationSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_detail: Option<String>,
    pub counts: MatchCounts,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub series: Vec<SeriesReport>,
    #[serde(rename = "macro")]
    pub macro_report: MetricReport,
    pub narratives: usize,
    pub null_predictions: usize,
}

#[derive(Serialize)]
struct Header<'a> {
    manifest: &'a RunManifest,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const SERIES_FILE: &str = "series.jsonl";
pub const REPORT_FILE: &str = "report.json";

fn open_backend(
    spec: &BackendSpec,
    corpus: &Corpus,
    m: &RunManifest,
) -> Result<Box<dyn Backend>, BackendError> {
    let timeout = Duration::from_millis(m.timeout_ms);
    Ok(match spec {
        BackendSpec::Mock(kind) => {
            Box::new(MockBackend::new(*kind, corpus, m.strategy, m.order, m.layout))
        }
        BackendSpec::Pipe(cmd) => Box::new(PipeBackend::spawn(cmd, timeout)?),
        BackendSpec::Http(url) => Box::new(HttpBackend::new(url, timeout)),
    })
}

/// Model input for a narrative: its text, anonymized when requested.
pub fn model_input(
    text: &str,
    spans: Option<&HashMap<String, Vec<EntitySpan>>>,
    id: &str,
) -> anyhow::Result<String> {
    match spans {
        None => Ok(text.to_string()),
        Some(all) => {
            let spans = all.get(id).map(Vec::as_slice).unwrap_or(&[]);
            anonymize_names(text, spans).with_context(|| format!("anonymizing {id:?}"))
        }
    }
}

/// Loads and filters the corpus a manifest points at.
pub fn prepare_corpus(m: &RunManifest) -> anyhow::Result<Corpus> {
    let report = load_corpus_file(&m.corpus)
        .with_context(|| format!("reading {}", m.corpus.display()))?;
    if !report.is_clean() {
        let lines: Vec<String> = report.errors.iter().map(ToString::to_string).collect();
        bail!("{} has schema errors:\n{}", m.corpus.display(), lines.join("\n"));
    }
    Ok(match m.max_chars {
        Some(k) => filter_max_characters(&report.corpus, k),
        None => report.corpus,
    })
}

pub fn run(m: &RunManifest) -> anyhow::Result<RunReport> {
    let spec: BackendSpec = m.backend.parse().map_err(anyhow::Error::msg)?;
    let corpus = prepare_corpus(m)?;
    let spans = match (m.anonymize, &m.spans) {
        (false, _) => None,
        (true, Some(path)) => Some(load_spans(path)?),
        (true, None) => bail!("anonymization needs an entity span file (--spans)"),
    };

    // only annotated narratives can be scored
    let annotated = Corpus::new(corpus.records.iter().filter(|r| r.gold.is_some()).cloned().collect());
    let plan = m.split.plan(&annotated, m.seed);
    for w in &plan.warnings {
        eprintln!("warning: {w}");
    }

    let mut backend = open_backend(&spec, &annotated, m)?;
    let mut predictions = Vec::new();
    let mut series_reports = Vec::new();
    let mut first_request = true;

    for (fold_idx, fold) in plan.folds.iter().enumerate() {
        let fold_name = plan.fold_name(&annotated, fold_idx);
        let mut eval_ids = fold.eval.clone();
        eval_ids.sort();
        let mut counts = Vec::with_capacity(eval_ids.len());
        for id in &eval_ids {
            let record = annotated.get(id).expect("plan ids come from the corpus");
            let gold = record.gold.as_ref().expect("filtered to annotated");
            let request = GenerationRequest {
                id: id.clone(),
                input: model_input(&record.text, spans.as_ref(), id)?,
            };
            let (generated, prediction, null_reason, null_detail) =
                match backend.generate(&request) {
                    Ok(text) => match decode(&text, m.strategy) {
                        Ok(a) => (Some(text), Some(a), None, None),
                        Err(null) => (
                            Some(text),
                            None,
                            Some(null.reason.to_string()),
                            Some(null.detail),
                        ),
                    },
                    Err(BackendError::Unavailable(msg)) if first_request => {
                        bail!("backend unavailable: {msg}")
                    }
                    Err(BackendError::Timeout) => {
                        (None, None, Some("timeout".to_string()), None)
                    }
                    Err(e) => (None, None, Some("transport-error".to_string()), Some(e.to_string())),
                };
            first_request = false;
            let c = score_narrative(prediction.as_ref(), gold);
            counts.push(c);
            predictions.push(PredictionLine {
                id: id.clone(),
                series: record.series.clone(),
                fold: fold_name.clone(),
                generated,
                prediction,
                null_reason,
                null_detail,
                counts: c,
            });
        }
        series_reports.push(SeriesReport::from_counts(fold_name, &counts));
    }

    let report = RunReport {
        manifest: m.clone(),
        macro_report: macro_average(&series_reports),
        narratives: predictions.len(),
        null_predictions: predictions.iter().filter(|p| p.prediction.is_none()).count(),
        series: series_reports,
    };
    write_outputs(&m.output, &report, &predictions)?;
    Ok(report)
}

fn write_outputs(
    dir: &Path,
    report: &RunReport,
    predictions: &[PredictionLine],
) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let header = Header { manifest: &report.manifest };

    let mut f = BufWriter::new(File::create(dir.join(MANIFEST_FILE))?);
    serde_json::to_writer_pretty(&mut f, &report.manifest)?;
    f.write_all(b"\n")?;

    let mut f = BufWriter::new(File::create(dir.join(PREDICTIONS_FILE))?);
    serde_json::to_writer(&mut f, &header)?;
    f.write_all(b"\n")?;
    crate::records::write_jsonl(&mut f, predictions)?;

    let mut f = BufWriter::new(File::create(dir.join(SERIES_FILE))?);
    serde_json::to_writer(&mut f, &header)?;
    f.write_all(b"\n")?;
    crate::records::write_jsonl(&mut f, &report.series)?;

    let mut f = BufWriter::new(File::create(dir.join(REPORT_FILE))?);
    serde_json::to_writer_pretty(&mut f, report)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Reads a run directory's `series.jsonl`, skipping the manifest header.
pub fn read_series(dir: &Path) -> anyhow::Result<Vec<SeriesReport>> {
    read_body(&dir.join(SERIES_FILE))
}

pub fn read_predictions(dir: &Path) -> anyhow::Result<Vec<PredictionLine>> {
    read_body(&dir.join(PREDICTIONS_FILE))
}

fn read_body<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        if value.get("manifest").is_some() && i == 0 {
            continue;
        }
        out.push(
            serde_json::from_value(value).with_context(|| format!("{}:{}", path.display(), i + 1))?,
        );
    }
    Ok(out)
}
