//! Few-shot prompts for an instruction-tuned decoder model, and the parser
//! for its `CHARACTERS:` answers.
//!
//! A prompt is the fixed system/user template, then `k` worked examples
//! drawn from other series, then the target narrative as a final user turn:
//!
//! ```text
//! <template, ending with "### Assistant:">
//! DREAM REPORT: <example narrative>
//! CHARACTERS: [CHARACTER]status is ..., age is adult [CHARACTERS] [CHARACTER]status is ...
//! ### User:
//! DREAM REPORT: <target narrative>
//! ### Assistant:
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::code::CharacterCode;
use crate::corpus::{Corpus, NarrativeRecord};
use crate::serialize::{decode_character, NullPrediction, NullReason, Strategy, NO_CHARACTER};
use crate::split::shuffle_prefix;

/// System and user instructions, kept exactly as published (including the
/// hard line breaks and literal `\n` sequences).
pub const PROMPT_TEMPLATE: &str = include_str!("stablebeluga_prompt.txt");

pub const ANSWER_PREFIX: &str = "CHARACTERS:";
pub const SEPARATOR: &str = "[CHARACTERS]";
const ITEM: &str = "[CHARACTER]";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptConfig {
    pub k: usize,
    pub seed: u64,
    pub target_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("unknown target narrative {0:?}")]
    UnknownTarget(String),
    #[error("example pool has {available} narratives, {needed} requested")]
    PoolTooSmall { needed: usize, available: usize },
}

/// Annotated narratives outside the target's series, sorted by id.
pub fn example_pool<'a>(corpus: &'a Corpus, target: &NarrativeRecord) -> Vec<&'a NarrativeRecord> {
    let mut pool: Vec<_> = corpus
        .records
        .iter()
        .filter(|r| r.series != target.series && r.gold.is_some())
        .collect();
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    pool
}

/// Seeded choice of `k` examples. For a fixed seed, smaller `k` picks a
/// prefix of what larger `k` picks.
pub fn choose_examples<'a>(
    cfg: &PromptConfig,
    corpus: &'a Corpus,
) -> Result<Vec<&'a NarrativeRecord>, PromptError> {
    let target = corpus
        .get(&cfg.target_id)
        .ok_or_else(|| PromptError::UnknownTarget(cfg.target_id.clone()))?;
    let mut pool = example_pool(corpus, target);
    if pool.len() < cfg.k {
        return Err(PromptError::PoolTooSmall { needed: cfg.k, available: pool.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_prefix(&mut pool, cfg.k, &mut rng);
    pool.truncate(cfg.k);
    Ok(pool)
}

pub fn build_prompt(cfg: &PromptConfig, corpus: &Corpus) -> Result<String, PromptError> {
    let examples = choose_examples(cfg, corpus)?;
    let target = corpus
        .get(&cfg.target_id)
        .ok_or_else(|| PromptError::UnknownTarget(cfg.target_id.clone()))?;

    let mut out = String::from(PROMPT_TEMPLATE);
    for ex in examples {
        let characters = ex.gold.as_ref().map(|g| g.characters.as_slice()).unwrap_or(&[]);
        out.push_str(&format!("DREAM REPORT: {}\n", one_line(&ex.text)));
        out.push_str(&render_answer(characters));
        out.push('\n');
    }
    out.push_str(&format!("### User:\nDREAM REPORT: {}\n### Assistant:\n", one_line(&target.text)));
    Ok(out)
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Renders characters in the answer grammar of the prompt (no `[SYMBOL]`).
pub fn render_answer(characters: &[CharacterCode]) -> String {
    if characters.is_empty() {
        return format!("{ANSWER_PREFIX} {NO_CHARACTER}");
    }
    let items: Vec<String> = characters
        .iter()
        .map(|c| {
            let [s, g, i, a] = c.describe();
            format!("{ITEM}status is {s}, gender is {g}, identity is {i}, age is {a}")
        })
        .collect();
    format!("{ANSWER_PREFIX} {}", items.join(&format!(" {SEPARATOR} ")))
}

/// Parses a `CHARACTERS:` answer. Characters are introduced by
/// `[CHARACTER]`; `[CHARACTERS]` separates them and may stand in for
/// `[CHARACTER]`. Anything from the next `###` turn marker on is ignored.
pub fn parse_assistant_output(text: &str) -> Result<Vec<CharacterCode>, NullPrediction> {
    let structure = |d: &str| NullPrediction::new(NullReason::UnknownMarkerStructure, d);

    let text = match text.find("###") {
        Some(at) => &text[..at],
        None => text,
    };
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let body = normalized
        .strip_prefix(ANSWER_PREFIX)
        .ok_or_else(|| structure("answer must start with CHARACTERS:"))?
        .trim();
    if body == NO_CHARACTER {
        return Ok(Vec::new());
    }

    // (marker, content) pairs; `true` marks the [CHARACTERS] separator
    let mut pieces: Vec<(bool, &str)> = Vec::new();
    let mut rest = body;
    loop {
        let next = [(SEPARATOR, true), (ITEM, false)]
            .iter()
            .filter_map(|&(m, sep)| rest.find(m).map(|at| (at, m.len(), sep)))
            .min_by_key(|&(at, _, _)| at);
        match next {
            Some((at, len, sep)) => {
                let before = rest[..at].trim();
                match pieces.last_mut() {
                    Some(last) => last.1 = before,
                    None if before.is_empty() => {}
                    None => return Err(structure("text before the first [CHARACTER]")),
                }
                pieces.push((sep, ""));
                rest = &rest[at + len..];
            }
            None => {
                match pieces.last_mut() {
                    Some(last) => last.1 = rest.trim(),
                    None => return Err(structure("no [CHARACTER] marker")),
                }
                break;
            }
        }
    }
    if pieces[0].0 && pieces.len() > 1 && pieces[0].1.is_empty() {
        return Err(structure("answer opens with a separator"));
    }

    let mut out = Vec::new();
    for (i, &(is_separator, content)) in pieces.iter().enumerate() {
        if content.is_empty() {
            let followed_by_item = pieces.get(i + 1).is_some_and(|p| !p.0);
            if is_separator && followed_by_item {
                continue;
            }
            return Err(structure("empty character description"));
        }
        match decode_character(content, Strategy::Baseline)? {
            Some(code) => out.push(code),
            None => return Err(structure("empty character description")),
        }
    }
    Ok(out)
}
