//! Natural-language target texts.
//!
//! A target text is a run of character segments and a run of emotion
//! segments. Each character segment starts with `[CHARACTER]`, each emotion
//! segment with `[EMOTION]`. Empty runs are written as `There is no
//! character.` / `There is no emotion.`. How the four classes of a character
//! are rendered depends on the [`Strategy`].
//!
//! [`decode`] is strict: anything outside the grammar yields a
//! [`NullPrediction`], which evaluation scores as an empty prediction.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::code::{
    parse_character_code, AgeClass, AnnotationSet, CharacterCode, EmotionLabel, EmotionRecord,
    Experiencer, GenderClass, IdentityClass, StatusClass,
};

pub const CHARACTER_MARKER: &str = "[CHARACTER]";
pub const EMOTION_MARKER: &str = "[EMOTION]";
pub const SYMBOL_MARKER: &str = "[SYMBOL]";
pub const NO_CHARACTER: &str = "There is no character.";
pub const NO_EMOTION: &str = "There is no emotion.";
pub const DREAMER_PHRASE: &str = "the dreamer";

/// How one character's classes are rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Strategy {
    /// `status is individual alive, gender is female, ... [SYMBOL] 1FKA`
    Baseline,
    /// `individual alive, female, known, adult [SYMBOL] 1FKA`
    Comma,
    /// `[STATUS] individual alive [GENDER] female ... [SYMBOL] 1FKA`
    Marker,
    /// `1FKA`
    NoSemantics,
}

impl Strategy {
    pub const ALL: &'static [Strategy] =
        &[Strategy::Baseline, Strategy::Comma, Strategy::Marker, Strategy::NoSemantics];

    pub const fn is_semantic(self) -> bool {
        !matches!(self, Strategy::NoSemantics)
    }
}

/// Order in which characters are emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OrderPolicy {
    AsGiven,
    GroupFirst,
    IndividualFirst,
}

impl OrderPolicy {
    pub const ALL: &'static [OrderPolicy] =
        &[OrderPolicy::AsGiven, OrderPolicy::GroupFirst, OrderPolicy::IndividualFirst];
}

/// Whether the character run or the emotion run comes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LayoutPolicy {
    CharactersThenEmotions,
    EmotionsFirst,
}

impl LayoutPolicy {
    pub const ALL: &'static [LayoutPolicy] =
        &[LayoutPolicy::CharactersThenEmotions, LayoutPolicy::EmotionsFirst];
}

/// Why a generation could not be decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum NullReason {
    UnknownMarkerStructure,
    UnknownClassPhrase,
    SymbolPhraseMismatch,
    UnknownEmotionAdjective,
    UnparseableCode,
}

impl NullReason {
    pub const fn as_str(self) -> &'static str {
        match self {
            NullReason::UnknownMarkerStructure => "unknown-marker-structure",
            NullReason::UnknownClassPhrase => "unknown-class-phrase",
            NullReason::SymbolPhraseMismatch => "symbol-phrase-mismatch",
            NullReason::UnknownEmotionAdjective => "unknown-emotion-adjective",
            NullReason::UnparseableCode => "unparseable-code",
        }
    }
}

impl fmt::Display for NullReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A generation that does not conform to the target grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NullPrediction {
    pub reason: NullReason,
    pub detail: String,
}

impl NullPrediction {
    pub fn new(reason: NullReason, detail: impl Into<String>) -> Self {
        NullPrediction { reason, detail: detail.into() }
    }
}

impl fmt::Display for NullPrediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason, self.detail)
    }
}

impl core::error::Error for NullPrediction {}

/// Stable partition of the characters into groups (status 2, 4, 6) and
/// individuals. Emotions are left alone.
pub fn reorder(annotation: &AnnotationSet, order: OrderPolicy) -> AnnotationSet {
    let characters = match order {
        OrderPolicy::AsGiven => annotation.characters.clone(),
        OrderPolicy::GroupFirst | OrderPolicy::IndividualFirst => {
            let (groups, individuals): (Vec<_>, Vec<_>) =
                annotation.characters.iter().partition(|c| c.status.is_group());
            let (first, second) = if order == OrderPolicy::GroupFirst {
                (groups, individuals)
            } else {
                (individuals, groups)
            };
            first.into_iter().chain(second).collect()
        }
    };
    AnnotationSet { characters, emotions: annotation.emotions.clone() }
}

pub fn encode(
    annotation: &AnnotationSet,
    strategy: Strategy,
    order: OrderPolicy,
    layout: LayoutPolicy,
) -> String {
    let ordered = reorder(annotation, order);

    let characters = if ordered.characters.is_empty() {
        NO_CHARACTER.to_string()
    } else {
        ordered
            .characters
            .iter()
            .map(|c| character_segment(c, strategy))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let emotions = if ordered.emotions.is_empty() {
        NO_EMOTION.to_string()
    } else {
        ordered.emotions.iter().map(emotion_segment).collect::<Vec<_>>().join(" ")
    };

    match layout {
        LayoutPolicy::CharactersThenEmotions => format!("{characters} {emotions}"),
        LayoutPolicy::EmotionsFirst => format!("{emotions} {characters}"),
    }
}

fn character_segment(code: &CharacterCode, strategy: Strategy) -> String {
    let [status, gender, identity, age] = code.describe();
    match strategy {
        Strategy::Baseline => format!(
            "{CHARACTER_MARKER} status is {status}, gender is {gender}, identity is {identity}, age is {age} {SYMBOL_MARKER} {code}"
        ),
        Strategy::Comma => format!(
            "{CHARACTER_MARKER} {status}, {gender}, {identity}, {age} {SYMBOL_MARKER} {code}"
        ),
        Strategy::Marker => format!(
            "{CHARACTER_MARKER} [STATUS] {status} [GENDER] {gender} [IDENTITY] {identity} [AGE] {age} {SYMBOL_MARKER} {code}"
        ),
        Strategy::NoSemantics => format!("{CHARACTER_MARKER} {code}"),
    }
}

fn emotion_segment(record: &EmotionRecord) -> String {
    let adjective = record.emotion.adjective();
    match record.who {
        Experiencer::Dreamer => format!("{EMOTION_MARKER} {DREAMER_PHRASE} is {adjective}"),
        Experiencer::Character(code) => format!("{EMOTION_MARKER} {code} is {adjective}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Character,
    Emotion,
    Symbol,
    NoCharacter,
    NoEmotion,
}

const TOKENS: &[(&str, Token)] = &[
    (CHARACTER_MARKER, Token::Character),
    (EMOTION_MARKER, Token::Emotion),
    (SYMBOL_MARKER, Token::Symbol),
    (NO_CHARACTER, Token::NoCharacter),
    (NO_EMOTION, Token::NoEmotion),
];

/// Splits normalized text into `(token, trailing content)` pairs.
fn tokenize(text: &str) -> Result<Vec<(Token, &str)>, NullPrediction> {
    let next_token = |s: &str| {
        s.char_indices()
            .filter(|&(_, c)| c == '[' || c == 'T')
            .find_map(|(at, _)| {
                TOKENS
                    .iter()
                    .find(|(lit, _)| s[at..].starts_with(lit))
                    .map(|&(lit, tok)| (at, lit.len(), tok))
            })
    };

    let mut out = Vec::new();
    let mut rest = text;
    match next_token(rest) {
        Some((at, len, tok)) => {
            if !rest[..at].trim().is_empty() {
                return Err(structure("text before the first marker"));
            }
            out.push((tok, ""));
            rest = &rest[at + len..];
        }
        None => return Err(structure("no markers found")),
    }
    loop {
        match next_token(rest) {
            Some((at, len, tok)) => {
                if let Some(last) = out.last_mut() {
                    last.1 = rest[..at].trim();
                }
                out.push((tok, ""));
                rest = &rest[at + len..];
            }
            None => {
                if let Some(last) = out.last_mut() {
                    last.1 = rest.trim();
                }
                break;
            }
        }
    }
    Ok(out)
}

fn structure(detail: impl Into<String>) -> NullPrediction {
    NullPrediction::new(NullReason::UnknownMarkerStructure, detail)
}

#[derive(Debug, PartialEq, Eq, Clone, Copy)]
enum SectionKind {
    Characters,
    Emotions,
}

#[derive(Debug)]
struct Section {
    kind: SectionKind,
    empty_sentence: bool,
    items: usize,
}

/// Strictly decodes a generated text produced under `strategy`. Both
/// layouts are accepted.
pub fn decode(text: &str, strategy: Strategy) -> Result<AnnotationSet, NullPrediction> {
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let tokens = tokenize(&normalized)?;

    let mut characters = Vec::new();
    let mut emotions = Vec::new();
    let mut sections: Vec<Section> = Vec::new();

    let mut i = 0;
    while i < tokens.len() {
        let (token, content) = tokens[i];
        let kind = match token {
            Token::Character => {
                let mut code = decode_character(content, strategy)?;
                if let Some(&(Token::Symbol, symbol)) = tokens.get(i + 1) {
                    if !strategy.is_semantic() {
                        return Err(structure("[SYMBOL] is not part of this strategy"));
                    }
                    let stated = parse_character_code(symbol).map_err(|e| {
                        NullPrediction::new(NullReason::UnparseableCode, e.to_string())
                    })?;
                    match code {
                        Some(c) if c != stated => {
                            return Err(NullPrediction::new(
                                NullReason::SymbolPhraseMismatch,
                                format!("phrases say {c}, symbol says {stated}"),
                            ))
                        }
                        _ => code = Some(stated),
                    }
                    i += 1;
                }
                match code {
                    Some(c) => characters.push(c),
                    None => return Err(structure("character segment has no code")),
                }
                SectionKind::Characters
            }
            Token::Emotion => {
                emotions.push(decode_emotion(content)?);
                SectionKind::Emotions
            }
            Token::Symbol => return Err(structure("[SYMBOL] outside a character segment")),
            Token::NoCharacter | Token::NoEmotion => {
                if !content.is_empty() {
                    return Err(structure("text after an empty-run sentence"));
                }
                let kind = if token == Token::NoCharacter {
                    SectionKind::Characters
                } else {
                    SectionKind::Emotions
                };
                sections.push(Section { kind, empty_sentence: true, items: 1 });
                i += 1;
                continue;
            }
        };
        match sections.last_mut() {
            Some(s) if s.kind == kind && !s.empty_sentence => s.items += 1,
            _ => sections.push(Section { kind, empty_sentence: false, items: 1 }),
        }
        i += 1;
    }

    let well_formed = sections.len() == 2
        && sections[0].kind != sections[1].kind
        && sections.iter().all(|s| !s.empty_sentence || s.items == 1);
    if !well_formed {
        return Err(structure("expected one character run and one emotion run"));
    }
    Ok(AnnotationSet { characters, emotions })
}

/// Returns the code stated by the class phrases, or `None` when the
/// strategy carries no phrases.
pub(crate) fn decode_character(
    content: &str,
    strategy: Strategy,
) -> Result<Option<CharacterCode>, NullPrediction> {
    match strategy {
        Strategy::NoSemantics => parse_character_code(content)
            .map(Some)
            .map_err(|e| NullPrediction::new(NullReason::UnparseableCode, e.to_string())),
        Strategy::Baseline => {
            let parts = comma_parts(content)?;
            let mut labels = [""; 4];
            for ((slot, part), prefix) in
                labels.iter_mut().zip(parts).zip(["status is", "gender is", "identity is", "age is"])
            {
                *slot = part
                    .strip_prefix(prefix)
                    .filter(|rest| rest.starts_with(' '))
                    .map(str::trim)
                    .ok_or_else(|| {
                        NullPrediction::new(
                            NullReason::UnknownClassPhrase,
                            format!("expected {prefix:?} in {part:?}"),
                        )
                    })?;
            }
            from_labels(labels).map(Some)
        }
        Strategy::Comma => from_labels(comma_parts(content)?).map(Some),
        Strategy::Marker => {
            let mut labels = [""; 4];
            let mut rest = content;
            let markers = ["[STATUS]", "[GENDER]", "[IDENTITY]", "[AGE]"];
            rest = rest
                .strip_prefix(markers[0])
                .ok_or_else(|| structure("character segment must open with [STATUS]"))?;
            for (idx, slot) in labels.iter_mut().enumerate() {
                match markers.get(idx + 1) {
                    Some(next) => {
                        let (label, tail) = rest
                            .split_once(next)
                            .ok_or_else(|| structure(format!("missing {next}")))?;
                        *slot = label.trim();
                        rest = tail;
                    }
                    None => *slot = rest.trim(),
                }
            }
            from_labels(labels).map(Some)
        }
    }
}

fn comma_parts(content: &str) -> Result<[&str; 4], NullPrediction> {
    let mut parts = [""; 4];
    let mut n = 0;
    for part in content.split(',') {
        if n == 4 {
            n += 1;
            break;
        }
        parts[n] = part.trim();
        n += 1;
    }
    if n != 4 {
        return Err(NullPrediction::new(
            NullReason::UnknownClassPhrase,
            format!("expected four class phrases in {content:?}"),
        ));
    }
    Ok(parts)
}

fn from_labels([status, gender, identity, age]: [&str; 4]) -> Result<CharacterCode, NullPrediction> {
    fn lookup<T>(label: &str, f: impl Fn(&str) -> Option<T>) -> Result<T, NullPrediction> {
        f(label).ok_or_else(|| {
            NullPrediction::new(NullReason::UnknownClassPhrase, format!("{label:?}"))
        })
    }
    Ok(CharacterCode {
        status: lookup(status, StatusClass::from_label)?,
        gender: lookup(gender, GenderClass::from_label)?,
        identity: lookup(identity, IdentityClass::from_label)?,
        age: lookup(age, AgeClass::from_label)?,
    })
}

fn decode_emotion(content: &str) -> Result<EmotionRecord, NullPrediction> {
    let (subject, adjective) = content
        .rsplit_once(" is ")
        .ok_or_else(|| structure(format!("emotion segment {content:?} lacks \"is\"")))?;
    let who = match subject.trim() {
        DREAMER_PHRASE | "D" => Experiencer::Dreamer,
        code => Experiencer::Character(
            parse_character_code(code)
                .map_err(|e| NullPrediction::new(NullReason::UnparseableCode, e.to_string()))?,
        ),
    };
    let emotion = EmotionLabel::from_adjective(adjective.trim()).ok_or_else(|| {
        NullPrediction::new(NullReason::UnknownEmotionAdjective, format!("{adjective:?}"))
    })?;
    Ok(EmotionRecord { who, emotion })
}
