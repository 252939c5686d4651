//! The HVdC character and emotion grammar.
//!
//! A character is four symbols in fixed order: status digit, gender letter,
//! identity letter, age letter (`1FKA`). Identity and age use the merged
//! subclass alphabets; legacy annotations with the finer identity/age
//! subclasses go through [`RawCode`] and [`merge_raw_code`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// Errors raised while reading code symbols.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodeError {
    #[error("character code must have 4 symbols, got {len}")]
    InvalidLength { len: usize },
    #[error("invalid status symbol {symbol:?} at position {position}")]
    InvalidStatus { symbol: char, position: usize },
    #[error("invalid gender symbol {symbol:?} at position {position}")]
    InvalidGender { symbol: char, position: usize },
    #[error("invalid identity symbol {symbol:?} at position {position}")]
    InvalidIdentity { symbol: char, position: usize },
    #[error("invalid age symbol {symbol:?} at position {position}")]
    InvalidAge { symbol: char, position: usize },
    #[error("invalid raw symbol {symbol:?} at position {position}")]
    InvalidRawSymbol { symbol: char, position: usize },
    #[error("unknown emotion {0:?}")]
    UnknownEmotion(String),
}

macro_rules! symbol_class {
    (
        $(#[$meta:meta])*
        $name:ident { $($variant:ident => ($sym:literal, $label:literal)),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub const fn symbol(self) -> char {
                match self {
                    $($name::$variant => $sym),+
                }
            }

            /// Natural-language label used in target texts.
            pub const fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            pub fn from_symbol(symbol: char) -> Option<Self> {
                match symbol {
                    $($sym => Some($name::$variant),)+
                    _ => None,
                }
            }

            pub fn from_label(label: &str) -> Option<Self> {
                match label {
                    $($label => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.symbol())
            }
        }
    };
}

symbol_class! {
    /// Whether a character is an individual or a group, and alive, dead,
    /// imaginary or part of a metamorphosis.
    StatusClass {
        IndividualAlive => ('1', "individual alive"),
        GroupAlive => ('2', "group alive"),
        DeadIndividual => ('3', "dead individual"),
        DeadGroup => ('4', "dead group"),
        ImaginaryIndividual => ('5', "imaginary individual"),
        ImaginaryGroup => ('6', "imaginary group"),
        OriginalForm => ('7', "original form"),
        ChangedForm => ('8', "changed form"),
    }
}

symbol_class! {
    GenderClass {
        Male => ('M', "male"),
        Female => ('F', "female"),
        Joint => ('J', "joint"),
        Indefinite => ('I', "indefinite"),
    }
}

symbol_class! {
    /// Identity relative to the dreamer, merged scheme.
    IdentityClass {
        Known => ('K', "known"),
        Prominent => ('P', "prominent"),
        Occupational => ('O', "occupational"),
        Ethnic => ('E', "ethnic"),
        Stranger => ('S', "stranger"),
    }
}

symbol_class! {
    /// Age, merged scheme: baby and adolescent fold into child.
    AgeClass {
        Adult => ('A', "adult"),
        Child => ('C', "child"),
    }
}

impl StatusClass {
    /// Group statuses (2, 4, 6).
    pub const fn is_group(self) -> bool {
        matches!(
            self,
            StatusClass::GroupAlive | StatusClass::DeadGroup | StatusClass::ImaginaryGroup
        )
    }
}

/// Maps a status symbol to a [`StatusClass`].
///
/// Animal and creature codes are rejected by [`StandardStatus`]; a caller that
/// needs a wider status alphabet can plug in its own lookup through
/// [`parse_character_code_with`].
pub trait StatusAlphabet {
    fn status(&self, symbol: char) -> Option<StatusClass>;
}

/// The eight people statuses.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardStatus;

impl StatusAlphabet for StandardStatus {
    fn status(&self, symbol: char) -> Option<StatusClass> {
        StatusClass::from_symbol(symbol)
    }
}

/// A coded character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CharacterCode {
    pub status: StatusClass,
    pub gender: GenderClass,
    pub identity: IdentityClass,
    pub age: AgeClass,
}

impl CharacterCode {
    pub const fn new(
        status: StatusClass,
        gender: GenderClass,
        identity: IdentityClass,
        age: AgeClass,
    ) -> Self {
        CharacterCode { status, gender, identity, age }
    }

    /// Every valid code, in status/gender/identity/age symbol order.
    pub fn all() -> impl Iterator<Item = CharacterCode> {
        StatusClass::ALL.iter().flat_map(|&s| {
            GenderClass::ALL.iter().flat_map(move |&g| {
                IdentityClass::ALL.iter().flat_map(move |&i| {
                    AgeClass::ALL.iter().map(move |&a| CharacterCode::new(s, g, i, a))
                })
            })
        })
    }

    /// Class labels in status, gender, identity, age order.
    pub const fn describe(&self) -> [&'static str; 4] {
        [self.status.label(), self.gender.label(), self.identity.label(), self.age.label()]
    }

    pub const fn symbols(&self) -> [char; 4] {
        [self.status.symbol(), self.gender.symbol(), self.identity.symbol(), self.age.symbol()]
    }
}

impl fmt::Display for CharacterCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.symbols() {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for CharacterCode {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_character_code(s)
    }
}

pub fn parse_character_code(text: &str) -> Result<CharacterCode, CodeError> {
    parse_character_code_with(text, &StandardStatus)
}

pub fn parse_character_code_with(
    text: &str,
    statuses: &dyn StatusAlphabet,
) -> Result<CharacterCode, CodeError> {
    let symbols = four_symbols(text)?;
    let status = statuses
        .status(symbols[0])
        .ok_or(CodeError::InvalidStatus { symbol: symbols[0], position: 1 })?;
    let gender = GenderClass::from_symbol(symbols[1])
        .ok_or(CodeError::InvalidGender { symbol: symbols[1], position: 2 })?;
    let identity = IdentityClass::from_symbol(symbols[2])
        .ok_or(CodeError::InvalidIdentity { symbol: symbols[2], position: 3 })?;
    let age = AgeClass::from_symbol(symbols[3])
        .ok_or(CodeError::InvalidAge { symbol: symbols[3], position: 4 })?;
    Ok(CharacterCode { status, gender, identity, age })
}

pub fn format_character_code(code: &CharacterCode) -> String {
    use alloc::string::ToString;
    code.to_string()
}

fn four_symbols(text: &str) -> Result<[char; 4], CodeError> {
    let text = text.trim();
    let mut out = ['\0'; 4];
    let mut len = 0;
    for c in text.chars() {
        if len < 4 {
            out[len] = c;
        }
        len += 1;
    }
    if len != 4 {
        return Err(CodeError::InvalidLength { len });
    }
    Ok(out)
}

/// The five HVdC emotions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmotionLabel {
    Anger,
    Apprehension,
    Sadness,
    Confusion,
    Happiness,
}

impl EmotionLabel {
    pub const ALL: &'static [EmotionLabel] = &[
        EmotionLabel::Anger,
        EmotionLabel::Apprehension,
        EmotionLabel::Sadness,
        EmotionLabel::Confusion,
        EmotionLabel::Happiness,
    ];

    pub const fn code(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "AN",
            EmotionLabel::Apprehension => "AP",
            EmotionLabel::Sadness => "SD",
            EmotionLabel::Confusion => "CO",
            EmotionLabel::Happiness => "HA",
        }
    }

    pub const fn adjective(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "angry",
            EmotionLabel::Apprehension => "apprehensive",
            EmotionLabel::Sadness => "sad",
            EmotionLabel::Confusion => "confused",
            EmotionLabel::Happiness => "happy",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|e| e.code() == code)
    }

    pub fn from_adjective(adjective: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|e| e.adjective() == adjective)
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Accepts either the code (`AP`) or the adjective (`apprehensive`).
pub fn parse_emotion_token(text: &str) -> Result<EmotionLabel, CodeError> {
    let text = text.trim();
    EmotionLabel::from_code(text)
        .or_else(|| EmotionLabel::from_adjective(text))
        .ok_or_else(|| CodeError::UnknownEmotion(text.into()))
}

impl FromStr for EmotionLabel {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_emotion_token(s)
    }
}

/// Who feels an emotion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiencer {
    Dreamer,
    Character(CharacterCode),
}

impl fmt::Display for Experiencer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Experiencer::Dreamer => f.write_str("D"),
            Experiencer::Character(c) => c.fmt(f),
        }
    }
}

impl FromStr for Experiencer {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "D" {
            Ok(Experiencer::Dreamer)
        } else {
            parse_character_code(s).map(Experiencer::Character)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmotionRecord {
    pub who: Experiencer,
    pub emotion: EmotionLabel,
}

impl EmotionRecord {
    pub const fn new(who: Experiencer, emotion: EmotionLabel) -> Self {
        EmotionRecord { who, emotion }
    }
}

impl fmt::Display for EmotionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.who, self.emotion)
    }
}

/// Characters (with multiplicity, in annotation order) and emotions of one narrative.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnnotationSet {
    pub characters: Vec<CharacterCode>,
    pub emotions: Vec<EmotionRecord>,
}

impl AnnotationSet {
    pub fn new(characters: Vec<CharacterCode>, emotions: Vec<EmotionRecord>) -> Self {
        AnnotationSet { characters, emotions }
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty() && self.emotions.is_empty()
    }

    /// Emotion records whose experiencer code is not among the characters.
    /// Gold data should have none; predictions may.
    pub fn dangling_emotions(&self) -> impl Iterator<Item = &EmotionRecord> {
        self.emotions.iter().filter(move |e| match e.who {
            Experiencer::Dreamer => false,
            Experiencer::Character(c) => !self.characters.contains(&c),
        })
    }
}

/// An unmerged code with the full identity (F, R, K, P, O, E, S, U) and
/// age (A, T, C, B) alphabets of the original coding guidelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RawCode {
    pub status: char,
    pub gender: char,
    pub identity: char,
    pub age: char,
}

impl RawCode {
    pub const IDENTITY_ALPHABET: &'static [char] = &['F', 'R', 'K', 'P', 'O', 'E', 'S', 'U'];
    pub const AGE_ALPHABET: &'static [char] = &['A', 'T', 'C', 'B'];

    pub fn new(status: char, gender: char, identity: char, age: char) -> Self {
        RawCode { status, gender, identity, age }
    }
}

impl FromStr for RawCode {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let [status, gender, identity, age] = four_symbols(s)?;
        Ok(RawCode { status, gender, identity, age })
    }
}

/// Collapses family and relatives into known, uncertain into stranger,
/// and baby and adolescent into child.
pub fn merge_raw_code(raw: &RawCode) -> Result<CharacterCode, CodeError> {
    let status = StatusClass::from_symbol(raw.status)
        .ok_or(CodeError::InvalidRawSymbol { symbol: raw.status, position: 1 })?;
    let gender = GenderClass::from_symbol(raw.gender)
        .ok_or(CodeError::InvalidRawSymbol { symbol: raw.gender, position: 2 })?;
    let identity = match raw.identity {
        'F' | 'R' | 'K' => IdentityClass::Known,
        'U' | 'S' => IdentityClass::Stranger,
        'P' => IdentityClass::Prominent,
        'O' => IdentityClass::Occupational,
        'E' => IdentityClass::Ethnic,
        other => return Err(CodeError::InvalidRawSymbol { symbol: other, position: 3 }),
    };
    let age = match raw.age {
        'A' => AgeClass::Adult,
        'T' | 'C' | 'B' => AgeClass::Child,
        other => return Err(CodeError::InvalidRawSymbol { symbol: other, position: 4 }),
    };
    Ok(CharacterCode { status, gender, identity, age })
}

#[cfg(feature = "serde")]
mod serde_impls {
    use super::*;
    use alloc::string::ToString;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    macro_rules! via_string {
        ($ty:ty) => {
            impl Serialize for $ty {
                fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                    s.serialize_str(&self.to_string())
                }
            }

            impl<'de> Deserialize<'de> for $ty {
                fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                    let text = <alloc::borrow::Cow<'de, str>>::deserialize(d)?;
                    text.parse().map_err(D::Error::custom)
                }
            }
        };
    }

    via_string!(CharacterCode);
    via_string!(EmotionLabel);
    via_string!(Experiencer);
}
