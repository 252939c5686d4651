//! Command-line surface.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dreamcode_core::corpus::{corpus_stats, filter_max_characters, Corpus};
use dreamcode_core::prompt::{build_prompt, parse_assistant_output, PromptConfig};
use dreamcode_core::serialize::{decode, encode, LayoutPolicy, OrderPolicy, Strategy};
use serde::{Deserialize, Serialize};

use crate::backend::{serve_mock_stdio, MockBackend, MockKind};
use crate::records::{load_corpus_file, load_spans};
use crate::report::{compare_narratives, compare_series, comparison_table, f1_table};
use crate::run::{self, model_input, read_predictions, read_series, RunManifest, SplitChoice};

#[derive(Debug, Parser)]
#[command(name = "dreamcode", version, about = "Code characters and emotions in dream narratives")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a corpus file against the record schema.
    Validate { corpus: PathBuf },
    /// Write `{"id", "input", "target"}` training pairs for a corpus.
    Encode {
        corpus: PathBuf,
        #[command(flatten)]
        format: FormatArgs,
        #[command(flatten)]
        names: NameArgs,
        #[arg(long)]
        max_chars: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Decode generations (`{"id", "text"}` lines) into annotations.
    Decode {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::Baseline)]
        strategy: StrategyArg,
        /// Parse the `CHARACTERS:` answers of prompted models instead.
        #[arg(long)]
        prompted: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Corpus statistics as JSON.
    Stats {
        corpus: PathBuf,
        #[arg(long)]
        max_chars: Option<usize>,
    },
    /// Write a split plan.
    Split {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Loso)]
        split: SplitArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_chars: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Build a few-shot prompt for one narrative.
    Prompt {
        corpus: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long = "k-shot", default_value_t = 0)]
        k_shot: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_chars: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Evaluate a backend on a corpus.
    Run(RunArgs),
    /// Significance of the difference between two runs.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        /// Pair narratives instead of series.
        #[arg(long)]
        per_narrative: bool,
        #[arg(long)]
        json: bool,
    },
    /// Serve a mock backend over stdin/stdout (the pipe transport).
    MockServe {
        corpus: PathBuf,
        #[arg(long, default_value = "echo-gold")]
        mock: String,
        #[command(flatten)]
        format: FormatArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct FormatArgs {
    #[arg(long, value_enum, default_value_t = StrategyArg::Baseline)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = OrderArg::AsGiven)]
    pub order: OrderArg,
    #[arg(long, value_enum, default_value_t = LayoutArg::CharsFirst)]
    pub layout: LayoutArg,
}

#[derive(Debug, Clone, Args)]
pub struct NameArgs {
    /// Replace proper names with [PERi] tokens.
    #[arg(long, requires = "spans")]
    pub anonymize: bool,
    /// Entity spans, one `{"id", "spans": [{"start", "end", "surface"}]}` per line.
    #[arg(long)]
    pub spans: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Re-run a saved manifest; other flags are ignored.
    #[arg(long, conflicts_with = "corpus")]
    pub manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub format: FormatArgs,
    #[arg(long, value_enum, default_value_t = SplitArg::Loso)]
    pub split: SplitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_chars: Option<usize>,
    #[command(flatten)]
    pub names: NameArgs,
    #[arg(long, default_value = "mock:echo-gold")]
    pub backend: String,
    #[arg(long, default_value_t = 60_000)]
    pub timeout_ms: u64,
    #[arg(long, short, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Baseline,
    Comma,
    Marker,
    NoSemantics,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Baseline => Strategy::Baseline,
            StrategyArg::Comma => Strategy::Comma,
            StrategyArg::Marker => Strategy::Marker,
            StrategyArg::NoSemantics => Strategy::NoSemantics,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    AsGiven,
    GroupFirst,
    IndividualFirst,
}

impl From<OrderArg> for OrderPolicy {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::AsGiven => OrderPolicy::AsGiven,
            OrderArg::GroupFirst => OrderPolicy::GroupFirst,
            OrderArg::IndividualFirst => OrderPolicy::IndividualFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    CharsFirst,
    EmotionsFirst,
}

impl From<LayoutArg> for LayoutPolicy {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::CharsFirst => LayoutPolicy::CharactersThenEmotions,
            LayoutArg::EmotionsFirst => LayoutPolicy::EmotionsFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Loso,
    Kfold5,
}

impl From<SplitArg> for SplitChoice {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Loso => SplitChoice::Loso,
            SplitArg::Kfold5 => SplitChoice::Kfold5,
        }
    }
}

impl RunArgs {
    pub fn manifest(&self) -> anyhow::Result<RunManifest> {
        if let Some(path) = &self.manifest {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            return Ok(serde_json::from_str(&text)?);
        }
        Ok(RunManifest {
            corpus: self.corpus.clone().expect("clap requires corpus without manifest"),
            strategy: self.format.strategy.into(),
            order: self.format.order.into(),
            layout: self.format.layout.into(),
            split: self.split.into(),
            seed: self.seed,
            max_chars: self.max_chars,
            anonymize: self.names.anonymize,
            spans: self.names.spans.clone(),
            backend: self.backend.clone(),
            timeout_ms: self.timeout_ms,
            output: self.out.clone(),
        })
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Loads a corpus, failing on schema errors.
fn strict_corpus(path: &Path, max_chars: Option<usize>) -> anyhow::Result<Corpus> {
    let report = load_corpus_file(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(first) = report.errors.first() {
        bail!("{}: {} schema errors, first: {first}", path.display(), report.errors.len());
    }
    Ok(match max_chars {
        Some(k) => filter_max_characters(&report.corpus, k),
        None => report.corpus,
    })
}

/// Exit code 0 iff the file has no schema errors.
pub fn validate<W: Write>(path: &Path, mut out: W) -> anyhow::Result<i32> {
    let report = load_corpus_file(path).with_context(|| format!("reading {}", path.display()))?;
    for e in &report.errors {
        writeln!(out, "{}:{}: {}", path.display(), e.line, e.message)?;
    }
    if report.corpus.is_empty() && report.errors.is_empty() {
        eprintln!("warning: {} contains no records", path.display());
    }
    writeln!(
        out,
        "{} records, {} errors",
        report.corpus.len(),
        report.errors.len()
    )?;
    Ok(if report.is_clean() { 0 } else { 1 })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainingPair {
    pub id: String,
    pub input: String,
    pub target: String,
}

pub fn encode_corpus<W: Write>(
    corpus: &Corpus,
    format: &FormatArgs,
    spans_path: Option<&Path>,
    mut out: W,
) -> anyhow::Result<usize> {
    let spans = spans_path.map(load_spans).transpose()?;
    let mut n = 0;
    for r in &corpus.records {
        let Some(gold) = &r.gold else { continue };
        let pair = TrainingPair {
            id: r.id.clone(),
            input: model_input(&r.text, spans.as_ref(), &r.id)?,
            target: encode(gold, format.strategy.into(), format.order.into(), format.layout.into()),
        };
        serde_json::to_writer(&mut out, &pair)?;
        out.write_all(b"\n")?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

#[derive(Debug, Deserialize)]
struct GeneratedLine {
    id: String,
    #[serde(alias = "target")]
    text: String,
}

/// Decodes each line; failures become `{"id", "null": {...}}` records.
/// Returns (decoded, null) counts.
pub fn decode_lines<R: BufRead, W: Write>(
    input: R,
    strategy: Strategy,
    prompted: bool,
    mut out: W,
) -> anyhow::Result<(usize, usize)> {
    let (mut ok, mut null) = (0, 0);
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let g: GeneratedLine =
            serde_json::from_str(&line).with_context(|| format!("line {}", i + 1))?;
        let decoded = if prompted {
            parse_assistant_output(&g.text).map(|characters| {
                serde_json::json!({ "id": g.id, "characters": characters })
            })
        } else {
            decode(&g.text, strategy).map(|a| {
                serde_json::json!({ "id": g.id, "characters": a.characters, "emotions": a.emotions })
            })
        };
        let value = match decoded {
            Ok(v) => {
                ok += 1;
                v
            }
            Err(e) => {
                null += 1;
                serde_json::json!({
                    "id": g.id,
                    "null": { "reason": e.reason, "detail": e.detail },
                })
            }
        };
        serde_json::to_writer(&mut out, &value)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok((ok, null))
}

pub fn execute(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Validate { corpus } => validate(&corpus, io::stdout().lock()),
        Command::Encode { corpus, format, names, max_chars, out } => {
            let c = strict_corpus(&corpus, max_chars)?;
            let spans = if names.anonymize { names.spans.as_deref() } else { None };
            let n = encode_corpus(&c, &format, spans, output(out.as_deref())?)?;
            eprintln!("encoded {n} narratives");
            Ok(0)
        }
        Command::Decode { input, strategy, prompted, out } => {
            let reader = BufReader::new(
                File::open(&input).with_context(|| format!("reading {}", input.display()))?,
            );
            let (ok, null) = decode_lines(reader, strategy.into(), prompted, output(out.as_deref())?)?;
            eprintln!("decoded {ok}, null {null}");
            Ok(0)
        }
        Command::Stats { corpus, max_chars } => {
            let c = strict_corpus(&corpus, max_chars)?;
            let stats = corpus_stats(&c);
            let mut out = output(None)?;
            serde_json::to_writer_pretty(
                &mut out,
                &serde_json::json!({ "series": c.series(), "stats": stats }),
            )?;
            writeln!(out)?;
            Ok(0)
        }
        Command::Split { corpus, split, seed, max_chars, out } => {
            let c = strict_corpus(&corpus, max_chars)?;
            let plan = SplitChoice::from(split).plan(&c, seed);
            for w in &plan.warnings {
                eprintln!("warning: {w}");
            }
            let mut out = output(out.as_deref())?;
            serde_json::to_writer(&mut out, &plan)?;
            writeln!(out)?;
            Ok(0)
        }
        Command::Prompt { corpus, target, k_shot, seed, max_chars, out } => {
            let c = strict_corpus(&corpus, max_chars)?;
            let cfg = PromptConfig { k: k_shot, seed, target_id: target };
            let prompt = build_prompt(&cfg, &c)?;
            let mut out = output(out.as_deref())?;
            out.write_all(prompt.as_bytes())?;
            out.flush()?;
            Ok(0)
        }
        Command::Run(args) => {
            let manifest = args.manifest()?;
            let report = run::run(&manifest)?;
            let mut rows: Vec<(&str, &_)> =
                report.series.iter().map(|s| (s.series.as_str(), &s.report)).collect();
            rows.push(("macro", &report.macro_report));
            print!("{}", f1_table(&rows));
            eprintln!(
                "{} narratives, {} null predictions, results in {}",
                report.narratives,
                report.null_predictions,
                manifest.output.display()
            );
            Ok(0)
        }
        Command::Compare { run_a, run_b, per_narrative, json } => {
            let rows = if per_narrative {
                compare_narratives(&read_predictions(&run_a)?, &read_predictions(&run_b)?)
            } else {
                compare_series(&read_series(&run_a)?, &read_series(&run_b)?)
            };
            let mut out = output(None)?;
            if json {
                crate::records::write_jsonl(&mut out, &rows)?;
            } else {
                write!(out, "{}", comparison_table(&rows))?;
            }
            out.flush()?;
            Ok(0)
        }
        Command::MockServe { corpus, mock, format } => {
            let kind: MockKind = mock.parse().map_err(anyhow::Error::msg)?;
            let c = strict_corpus(&corpus, None)?;
            let backend = MockBackend::new(
                kind,
                &c,
                format.strategy.into(),
                format.order.into(),
                format.layout.into(),
            );
            serve_mock_stdio(&backend, io::stdin().lock(), io::stdout().lock())?;
            Ok(0)
        }
    }
}
