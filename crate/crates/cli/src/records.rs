//! Newline-delimited record files: corpora, entity-span sidecars and the
//! generation request/response lines.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use dreamcode_core::code::{
    merge_raw_code, parse_character_code, parse_emotion_token, AnnotationSet, CharacterCode,
    CodeError, EmotionRecord, Experiencer, RawCode,
};
use dreamcode_core::corpus::{Corpus, EntitySpan, NarrativeRecord};
use serde::{Deserialize, Serialize};

/// One corpus line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordLine {
    pub id: String,
    pub series: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dreamer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characters: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotions: Option<Vec<EmotionLine>>,
    /// Codes use the unmerged identity/age alphabets.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub raw: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmotionLine {
    pub who: String,
    pub emotion: String,
}

impl RecordLine {
    pub fn from_record(r: &NarrativeRecord) -> Self {
        RecordLine {
            id: r.id.clone(),
            series: r.series.clone(),
            text: r.text.clone(),
            dreamer: r.dreamer.clone(),
            characters: r
                .gold
                .as_ref()
                .map(|g| g.characters.iter().map(ToString::to_string).collect()),
            emotions: r.gold.as_ref().map(|g| {
                g.emotions
                    .iter()
                    .map(|e| EmotionLine {
                        who: e.who.to_string(),
                        emotion: e.emotion.code().to_string(),
                    })
                    .collect()
            }),
            raw: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SchemaError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct LoadReport {
    pub corpus: Corpus,
    pub errors: Vec<SchemaError>,
}

impl LoadReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

fn code_of(text: &str, raw: bool) -> Result<CharacterCode, CodeError> {
    if raw {
        merge_raw_code(&text.parse::<RawCode>()?)
    } else {
        parse_character_code(text)
    }
}

fn convert(line: RecordLine) -> Result<NarrativeRecord, String> {
    if line.id.trim().is_empty() {
        return Err("empty id".into());
    }
    if line.series.trim().is_empty() {
        return Err(format!("record {:?}: empty series", line.id));
    }
    let gold = if line.characters.is_none() && line.emotions.is_none() {
        None
    } else {
        let characters = line
            .characters
            .unwrap_or_default()
            .iter()
            .map(|c| code_of(c, line.raw))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("record {:?}: {e}", line.id))?;
        let mut emotions = Vec::new();
        for e in line.emotions.unwrap_or_default() {
            let who = if e.who.trim() == "D" {
                Experiencer::Dreamer
            } else {
                Experiencer::Character(
                    code_of(&e.who, line.raw).map_err(|err| format!("record {:?}: {err}", line.id))?,
                )
            };
            let emotion =
                parse_emotion_token(&e.emotion).map_err(|err| format!("record {:?}: {err}", line.id))?;
            emotions.push(EmotionRecord::new(who, emotion));
        }
        let gold = AnnotationSet::new(characters, emotions);
        if let Some(e) = gold.dangling_emotions().next() {
            return Err(format!(
                "record {:?}: emotion experiencer {} is not among the characters",
                line.id, e.who
            ));
        }
        Some(gold)
    };
    Ok(NarrativeRecord {
        id: line.id,
        series: line.series,
        dreamer: line.dreamer,
        text: line.text,
        gold,
    })
}

/// Parses every line; malformed records are reported with their 1-based
/// line number and left out of the corpus.
pub fn load_corpus<R: Read>(source: R) -> std::io::Result<LoadReport> {
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let number = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RecordLine>(&line)
            .map_err(|e| e.to_string())
            .and_then(convert);
        match parsed {
            Ok(record) => {
                if !seen.insert(record.id.clone()) {
                    report.errors.push(SchemaError {
                        line: number,
                        message: format!("duplicate id {:?}", record.id),
                    });
                } else {
                    report.corpus.records.push(record);
                }
            }
            Err(message) => report.errors.push(SchemaError { line: number, message }),
        }
    }
    Ok(report)
}

pub fn load_corpus_file(path: &Path) -> std::io::Result<LoadReport> {
    load_corpus(File::open(path)?)
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for r in &corpus.records {
        serde_json::to_writer(&mut out, &RecordLine::from_record(r))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Entity spans for one narrative, as produced by an external tagger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpanLine {
    pub id: String,
    pub spans: Vec<EntitySpan>,
}

pub fn load_spans(path: &Path) -> anyhow::Result<HashMap<String, Vec<EntitySpan>>> {
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: SpanLine = serde_json::from_str(&line)
            .map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), i + 1))?;
        out.entry(parsed.id).or_insert_with(Vec::new).extend(parsed.spans);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub id: String,
    pub input: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub id: String,
    pub text: String,
}

/// Writes `items` as JSON lines.
pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
