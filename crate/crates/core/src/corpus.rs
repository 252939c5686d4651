//! Narrative records, corpus filtering and statistics, and proper-name
//! anonymization.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::code::{
    AgeClass, AnnotationSet, EmotionLabel, Experiencer, GenderClass, IdentityClass, StatusClass,
};

/// One dream narrative. `gold` is `None` for unannotated dreams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NarrativeRecord {
    pub id: String,
    pub series: String,
    pub dreamer: Option<String>,
    pub text: String,
    pub gold: Option<AnnotationSet>,
}

impl NarrativeRecord {
    pub fn character_count(&self) -> usize {
        self.gold.as_ref().map_or(0, |g| g.characters.len())
    }
}

/// Descriptive metadata for a series.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeriesInfo {
    pub name: String,
    pub dreamer: Option<String>,
    pub years: Option<String>,
    pub count: usize,
}

/// The six annotated English DreamBank series: name, dreamer, years, size.
pub const DREAMBANK_SERIES: &[(&str, &str, &str, usize)] = &[
    ("ed", "adult man", "1980-2002", 143),
    ("bea1", "teenager girl", "2003-2005", 136),
    ("b-baseline", "adult woman", "1960-1997", 234),
    ("emma", "adult woman", "1949-1997", 285),
    ("norms-m", "adult men", "1940s-1950s", 485),
    ("norms-f", "adult women", "1940s-1950s", 483),
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<NarrativeRecord>,
}

impl Corpus {
    pub fn new(records: Vec<NarrativeRecord>) -> Self {
        Corpus { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&NarrativeRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Series in lexicographic order, with counts taken from the records.
    pub fn series(&self) -> Vec<SeriesInfo> {
        let mut counts: BTreeMap<&str, (usize, Option<&str>)> = BTreeMap::new();
        for r in &self.records {
            let entry = counts.entry(r.series.as_str()).or_insert((0, None));
            entry.0 += 1;
            if entry.1.is_none() {
                entry.1 = r.dreamer.as_deref();
            }
        }
        counts
            .into_iter()
            .map(|(name, (count, dreamer))| {
                let known = DREAMBANK_SERIES.iter().find(|s| s.0 == name);
                SeriesInfo {
                    name: name.into(),
                    dreamer: dreamer.map(String::from).or_else(|| known.map(|s| s.1.into())),
                    years: known.map(|s| s.2.into()),
                    count,
                }
            })
            .collect()
    }
}

/// Keeps narratives with fewer than `k` characters (at most `k - 1`;
/// `k = 0` keeps only character-free narratives).
pub fn filter_max_characters(corpus: &Corpus, k: usize) -> Corpus {
    let bound = k.saturating_sub(1);
    Corpus {
        records: corpus.records.iter().filter(|r| r.character_count() <= bound).cloned().collect(),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorpusStats {
    pub total_narratives: usize,
    pub annotated_narratives: usize,
    pub character_occurrences: usize,
    pub zero_character_narratives: usize,
    pub mean_characters: f64,
    pub zero_emotion_narratives: usize,
    pub emotional_narratives: usize,
    pub emotion_occurrences: usize,
    /// Mean number of emotions over narratives with at least one.
    pub mean_emotions_among_emotional: f64,
    pub status: BTreeMap<String, usize>,
    pub gender: BTreeMap<String, usize>,
    pub identity: BTreeMap<String, usize>,
    pub age: BTreeMap<String, usize>,
    pub emotions: BTreeMap<String, usize>,
    pub dreamer_emotions: usize,
    pub character_emotions: usize,
    pub dreamer_emotion_share: f64,
}

/// Counts and distributions over the annotated narratives of `corpus`.
pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    fn zeroed<T: Copy>(all: &[T], label: fn(T) -> &'static str) -> BTreeMap<String, usize> {
        all.iter().map(|&x| (String::from(label(x)), 0)).collect()
    }

    let mut stats = CorpusStats {
        total_narratives: corpus.len(),
        status: zeroed(StatusClass::ALL, StatusClass::label),
        gender: zeroed(GenderClass::ALL, GenderClass::label),
        identity: zeroed(IdentityClass::ALL, IdentityClass::label),
        age: zeroed(AgeClass::ALL, AgeClass::label),
        emotions: zeroed(EmotionLabel::ALL, EmotionLabel::adjective),
        ..CorpusStats::default()
    };

    for gold in corpus.records.iter().filter_map(|r| r.gold.as_ref()) {
        stats.annotated_narratives += 1;
        stats.character_occurrences += gold.characters.len();
        if gold.characters.is_empty() {
            stats.zero_character_narratives += 1;
        }
        if gold.emotions.is_empty() {
            stats.zero_emotion_narratives += 1;
        } else {
            stats.emotional_narratives += 1;
        }
        for c in &gold.characters {
            *stats.status.entry(c.status.label().into()).or_default() += 1;
            *stats.gender.entry(c.gender.label().into()).or_default() += 1;
            *stats.identity.entry(c.identity.label().into()).or_default() += 1;
            *stats.age.entry(c.age.label().into()).or_default() += 1;
        }
        for e in &gold.emotions {
            stats.emotion_occurrences += 1;
            *stats.emotions.entry(e.emotion.adjective().into()).or_default() += 1;
            match e.who {
                Experiencer::Dreamer => stats.dreamer_emotions += 1,
                Experiencer::Character(_) => stats.character_emotions += 1,
            }
        }
    }

    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    stats.mean_characters = ratio(stats.character_occurrences, stats.annotated_narratives);
    stats.mean_emotions_among_emotional =
        ratio(stats.emotion_occurrences, stats.emotional_narratives);
    stats.dreamer_emotion_share = ratio(stats.dreamer_emotions, stats.emotion_occurrences);
    stats
}

/// A tagged proper name. Offsets count Unicode scalar values, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, surface: impl Into<String>) -> Self {
        EntitySpan { start, end, surface: surface.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpanError {
    #[error("span {start}..{end} is outside a text of {len} characters")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("spans {0}..{1} and {2}..{3} overlap")]
    OverlappingSpans(usize, usize, usize, usize),
    #[error("span {start}..{end} reads {found:?}, expected {expected:?}")]
    SurfaceMismatch { start: usize, end: usize, expected: String, found: String },
}

/// Replaces every span with `[PERi]`, numbering distinct surface forms
/// (case-insensitively) by first appearance.
pub fn anonymize_names(text: &str, spans: &[EntitySpan]) -> Result<String, SpanError> {
    let mut spans: Vec<&EntitySpan> = spans.iter().collect();
    spans.sort();
    spans.dedup();

    let len = text.chars().count();
    // byte offset of every char position, plus the end
    let offsets: Vec<usize> =
        text.char_indices().map(|(b, _)| b).chain(core::iter::once(text.len())).collect();

    let mut previous: Option<&EntitySpan> = None;
    for span in &spans {
        if span.start >= span.end || span.end > len {
            return Err(SpanError::OutOfBounds { start: span.start, end: span.end, len });
        }
        if let Some(p) = previous {
            if span.start < p.end {
                return Err(SpanError::OverlappingSpans(p.start, p.end, span.start, span.end));
            }
        }
        let found = &text[offsets[span.start]..offsets[span.end]];
        if found != span.surface {
            return Err(SpanError::SurfaceMismatch {
                start: span.start,
                end: span.end,
                expected: span.surface.clone(),
                found: found.into(),
            });
        }
        previous = Some(span);
    }

    let mut index: Vec<String> = Vec::new();
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for span in spans {
        let key = span.surface.to_lowercase();
        let i = match index.iter().position(|k| *k == key) {
            Some(i) => i + 1,
            None => {
                index.push(key);
                index.len()
            }
        };
        out.push_str(&text[cursor..offsets[span.start]]);
        out.push_str(&format!("[PER{i}]"));
        cursor = offsets[span.end];
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}
