//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use dreamcode::records::load_corpus_file;
use dreamcode::run::{run, RunManifest, SplitChoice};
use dreamcode_core::code::{
    format_character_code, parse_character_code, AgeClass, AnnotationSet, CharacterCode,
    EmotionLabel, EmotionRecord, Experiencer, GenderClass, IdentityClass, StatusClass,
};
use dreamcode_core::corpus::{corpus_stats, filter_max_characters};
use dreamcode_core::metrics::{score_narrative, Dimension, MatchCounts};
use dreamcode_core::prompt::{build_prompt, PromptConfig};
use dreamcode_core::serialize::{decode, encode, reorder, LayoutPolicy, NullReason, OrderPolicy, Strategy};
use dreamcode_core::split::leave_one_series_out;
use dreamcode_core::wilcoxon::{wilcoxon_signed_rank, Alternative, PairedSamples};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn random_code(rng: &mut ChaCha8Rng) -> CharacterCode {
    CharacterCode::new(
        *StatusClass::ALL.choose(rng).unwrap(),
        *GenderClass::ALL.choose(rng).unwrap(),
        *IdentityClass::ALL.choose(rng).unwrap(),
        *AgeClass::ALL.choose(rng).unwrap(),
    )
}

fn random_annotation(rng: &mut ChaCha8Rng, max: usize) -> AnnotationSet {
    let n = rng.random_range(0..=max);
    let characters: Vec<CharacterCode> = (0..n).map(|_| random_code(rng)).collect();
    let m = rng.random_range(0..=max);
    let emotions = (0..m)
        .map(|_| {
            let who = if characters.is_empty() || rng.random_bool(0.5) {
                Experiencer::Dreamer
            } else {
                Experiencer::Character(*characters.choose(rng).unwrap())
            };
            EmotionRecord::new(who, *EmotionLabel::ALL.choose(rng).unwrap())
        })
        .collect();
    AnnotationSet::new(characters, emotions)
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed < limit {
        Outcome::Pass(format!("{detail}, {:.2}s", elapsed.as_secs_f64()))
    } else {
        Outcome::Fail(format!("{detail}, but took {:.2}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()))
    }
}

fn codec_exhaustiveness() -> Outcome {
    let start = Instant::now();
    let mut codes = 0;
    for code in CharacterCode::all() {
        let text = format_character_code(&code);
        if parse_character_code(&text) != Ok(code) {
            return Outcome::Fail(format!("code {text} does not round-trip"));
        }
        codes += 1;
    }
    if codes != 320 {
        return Outcome::Fail(format!("{codes} codes, expected 320"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sets = 10_000;
    for _ in 0..sets {
        let a = random_annotation(&mut rng, 7);
        for &s in Strategy::ALL {
            for &o in OrderPolicy::ALL {
                for &l in LayoutPolicy::ALL {
                    let text = encode(&a, s, o, l);
                    let expected = reorder(&a, o);
                    match decode(&text, s) {
                        Ok(back) if back == expected => {}
                        other => {
                            return Outcome::Fail(format!("{s:?}/{o:?}/{l:?}: {text:?} -> {other:?}"))
                        }
                    }
                }
            }
        }
    }
    within(
        start.elapsed(),
        Duration::from_secs(10),
        format!("320 codes, {sets} sets x 24 configurations"),
    )
}

const SWAP_WORDS: &[&str] = &[
    "student", "alive", "dead", "the dreamer", "is", "status", "gender", "identity", "age",
    "[CHARACTER]", "[EMOTION]", "[SYMBOL]", "[STATUS]", "[GENDER]", "[IDENTITY]", "[AGE]",
    "1MKA", "9XQZ", "happy", "furious", "There is no emotion.", "There is no character.", ",", "",
];

fn mutate(text: &str, rng: &mut ChaCha8Rng) -> String {
    let mut tokens: Vec<String> = text.split(' ').map(String::from).collect();
    match rng.random_range(0..7) {
        0 => {
            let chars: Vec<char> = text.chars().collect();
            let cut = rng.random_range(0..=chars.len());
            return chars[..cut].iter().collect();
        }
        1 => {
            let i = rng.random_range(0..tokens.len());
            tokens[i] = SWAP_WORDS.choose(rng).unwrap().to_string();
        }
        2 => {
            let i = rng.random_range(0..tokens.len());
            tokens.remove(i);
        }
        3 => {
            let i = rng.random_range(0..tokens.len());
            let t = tokens[i].clone();
            tokens.insert(i, t);
        }
        4 => {
            let i = rng.random_range(0..tokens.len());
            let j = rng.random_range(0..tokens.len());
            tokens.swap(i, j);
        }
        5 => {
            let mut chars: Vec<char> = text.chars().collect();
            if !chars.is_empty() {
                let i = rng.random_range(0..chars.len());
                chars[i] = *['X', '9', ' ', '[', ']', ',', 'é', '\n'].choose(rng).unwrap();
            }
            return chars.into_iter().collect();
        }
        _ => {
            let i = rng.random_range(0..=tokens.len());
            tokens.insert(i, SWAP_WORDS.choose(rng).unwrap().to_string());
        }
    }
    tokens.join(" ")
}

fn decoder_robustness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let total = 100_000;
    let mut nulls = 0;
    let mut reasons: BTreeMap<&'static str, usize> = BTreeMap::new();
    let prev_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failure = None;
    for i in 0..total {
        let a = random_annotation(&mut rng, 5);
        let s = *Strategy::ALL.choose(&mut rng).unwrap();
        let o = *OrderPolicy::ALL.choose(&mut rng).unwrap();
        let l = *LayoutPolicy::ALL.choose(&mut rng).unwrap();
        let mut text = encode(&a, s, o, l);
        let rounds = rng.random_range(1..=3);
        for _ in 0..rounds {
            text = mutate(&text, &mut rng);
        }
        match panic::catch_unwind(AssertUnwindSafe(|| decode(&text, s))) {
            Err(_) => {
                failure = Some(format!("mutation {i} panicked on {text:?}"));
                break;
            }
            Ok(Err(null)) => {
                nulls += 1;
                *reasons.entry(null.reason.as_str()).or_default() += 1;
            }
            Ok(Ok(_)) => {}
        }
    }
    panic::set_hook(prev_hook);
    if let Some(f) = failure {
        return Outcome::Fail(f);
    }

    // invented subclasses must be rejected, not guessed
    let invented = "[CHARACTER] status is individual alive, gender is male, identity is student, age is adult [SYMBOL] 1MSA There is no emotion.";
    match decode(invented, Strategy::Baseline) {
        Err(null) if null.reason == NullReason::UnknownClassPhrase => {}
        other => return Outcome::Fail(format!("\"identity is student\" gave {other:?}")),
    }
    let summary: Vec<String> = reasons.iter().map(|(r, n)| format!("{r} {n}")).collect();
    within(
        start.elapsed(),
        Duration::from_secs(60),
        format!("{total} mutations, {nulls} null ({})", summary.join(", ")),
    )
}

/// Largest number of equal pairs over every alignment of `pred` to `gold`.
fn best_alignment<T: PartialEq>(pred: &[T], gold: &[T]) -> u64 {
    fn go<T: PartialEq>(pred: &[T], gold: &[T], used: &mut Vec<bool>) -> u64 {
        let Some((first, rest)) = pred.split_first() else { return 0 };
        // leave this prediction unaligned
        let mut best = go(rest, gold, used);
        for j in 0..gold.len() {
            if !used[j] {
                used[j] = true;
                let hit = u64::from(*first == gold[j]);
                best = best.max(hit + go(rest, gold, used));
                used[j] = false;
            }
        }
        best
    }
    go(pred, gold, &mut vec![false; gold.len()])
}

fn scorer_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases = 1_000;
    for case in 0..cases {
        let gold = random_annotation(&mut rng, 6);
        // predictions near gold make matches likely
        let mut pred = gold.clone();
        if rng.random_bool(0.7) {
            for c in pred.characters.iter_mut() {
                if rng.random_bool(0.3) {
                    *c = random_code(&mut rng);
                }
            }
            pred.emotions.retain(|_| rng.random_bool(0.7));
            let extra = random_annotation(&mut rng, 2);
            pred.characters.extend(extra.characters);
            pred.emotions.extend(extra.emotions);
            pred.characters.truncate(6);
            pred.emotions.truncate(6);
        } else {
            pred = random_annotation(&mut rng, 6);
        }
        let got = score_narrative(Some(&pred), &gold);
        let want_chars = best_alignment(&pred.characters, &gold.characters);
        let want_emotions = best_alignment(&pred.emotions, &gold.emotions);
        let expect = |c: &dreamcode_core::metrics::Counts, m: u64, p: usize, g: usize| {
            c.matched == m && c.predicted == p as u64 && c.gold == g as u64
        };
        if !expect(&got.character, want_chars, pred.characters.len(), gold.characters.len())
            || !expect(&got.emotion, want_emotions, pred.emotions.len(), gold.emotions.len())
        {
            return Outcome::Fail(format!(
                "case {case}: scorer {got:?}, oracle characters {want_chars} emotions {want_emotions}"
            ));
        }
    }
    Outcome::Pass(format!("{cases} cases, exact"))
}

fn worked_example() -> Outcome {
    let code = |s: &str| s.parse::<CharacterCode>().unwrap();
    let gold = AnnotationSet::new(
        vec![code("2MSC"), code("1MSC"), code("1FSC")],
        vec![EmotionRecord::new(Experiencer::Dreamer, EmotionLabel::Apprehension)],
    );
    let own = score_narrative(Some(&gold), &gold).report();
    for dim in Dimension::ALL {
        if own.get(dim).f1 != 1.0 {
            return Outcome::Fail(format!("self-score {} F1 {}", dim.name(), own.get(dim).f1));
        }
    }
    let null: MatchCounts = score_narrative(None, &gold);
    for dim in Dimension::ALL {
        if null.get(dim).matched != 0 {
            return Outcome::Fail(format!("null prediction matched on {}", dim.name()));
        }
    }
    if null.character.gold != 3 || null.emotion.gold != 1 {
        return Outcome::Fail(format!(
            "null gold counts: characters {}, emotions {}",
            null.character.gold, null.emotion.gold
        ));
    }
    Outcome::Pass("self F1 1.0 on all six; null matched 0, gold 3 characters / 1 emotion".into())
}

/// Two-sided, greater and less p-values by enumerating all sign vectors.
fn enumerate_p(diffs: &[f64]) -> Option<[f64; 3]> {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if nz.is_empty() {
        return None;
    }
    let mags: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks: Vec<f64> = mags
        .iter()
        .map(|m| {
            let less = mags.iter().filter(|x| *x < m).count() as f64;
            let equal = mags.iter().filter(|x| *x == m).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = nz.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    let (lower, upper) = (le as f64 / total, ge as f64 / total);
    Some([(2.0 * lower.min(upper)).min(1.0), upper, lower])
}

fn wilcoxon_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples = 500;
    for i in 0..samples {
        let n = 1 + i % 10;
        // coarse grid so ties and zero differences occur
        let first: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 4.0).collect();
        let second: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 4.0).collect();
        let diffs: Vec<f64> = first.iter().zip(&second).map(|(a, b)| a - b).collect();
        let paired = PairedSamples::new(first.clone(), second.clone()).unwrap();
        let alts = [Alternative::TwoSided, Alternative::Greater, Alternative::Less];
        match enumerate_p(&diffs) {
            None => {
                if wilcoxon_signed_rank(&paired, Alternative::TwoSided).is_ok() {
                    return Outcome::Fail(format!("sample {i}: all-zero differences accepted"));
                }
            }
            Some(want) => {
                for (alt, want) in alts.into_iter().zip(want) {
                    match wilcoxon_signed_rank(&paired, alt) {
                        Ok(r) if (r.p_value - want).abs() < 1e-12 => {}
                        other => {
                            return Outcome::Fail(format!(
                                "sample {i} {alt:?} {diffs:?}: {other:?}, enumeration {want}"
                            ))
                        }
                    }
                }
            }
        }
    }
    let all_positive = PairedSamples::new(vec![0.9, 0.8, 0.85, 0.7, 0.95, 0.75], vec![0.5; 6]).unwrap();
    match wilcoxon_signed_rank(&all_positive, Alternative::TwoSided) {
        Ok(r) if r.p_value == 0.03125 => {
            Outcome::Pass(format!("{samples} samples, n = 1..10, all-positive n=6 p = 0.03125"))
        }
        other => Outcome::Fail(format!("all-positive n=6 gave {other:?}")),
    }
}

fn dataset_statistics() -> Outcome {
    let path = std::env::var_os("DREAMBANK_JSONL")
        .map(PathBuf::from)
        .unwrap_or_else(|| data_dir().join("dreambank.jsonl"));
    if !path.exists() {
        return Outcome::Skip(format!(
            "{} not found (set DREAMBANK_JSONL to the annotated corpus)",
            path.display()
        ));
    }
    let report = match load_corpus_file(&path) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("reading {}: {e}", path.display())),
    };
    if !report.is_clean() {
        return Outcome::Fail(format!("{} schema errors, first: {}", report.errors.len(), report.errors[0]));
    }
    let kept = filter_max_characters(&report.corpus, 8);
    let stats = corpus_stats(&kept);
    let mut problems = Vec::new();
    if kept.len() != 1766 {
        problems.push(format!("filter kept {}, expected 1766", kept.len()));
    }
    if stats.zero_character_narratives != 45 {
        problems.push(format!("zero-character {}, expected 45", stats.zero_character_narratives));
    }
    if (stats.mean_characters - 2.8).abs() > 0.05 {
        problems.push(format!("mean characters {:.3}", stats.mean_characters));
    }
    if stats.zero_emotion_narratives != 885 {
        problems.push(format!("no-emotion {}, expected 885", stats.zero_emotion_narratives));
    }
    if (stats.mean_emotions_among_emotional - 1.6).abs() > 0.05 {
        problems.push(format!("mean emotions {:.3}", stats.mean_emotions_among_emotional));
    }
    let plan = leave_one_series_out(&kept);
    let sizes: BTreeMap<String, usize> = (0..plan.folds.len())
        .map(|i| (plan.fold_name(&kept, i), plan.folds[i].eval.len()))
        .collect();
    for (series, _, _, size) in dreamcode_core::corpus::DREAMBANK_SERIES {
        if sizes.get(*series) != Some(size) {
            problems.push(format!("fold {series}: {:?}, expected {size}", sizes.get(*series)));
        }
    }
    if problems.is_empty() {
        Outcome::Pass(format!(
            "1766 kept, 45 / {:.2} characters, 885 / {:.2} emotions, fold sizes match",
            stats.mean_characters, stats.mean_emotions_among_emotional
        ))
    } else {
        Outcome::Fail(problems.join("; "))
    }
}

fn prompt_golden() -> Outcome {
    let golden = match std::fs::read(data_dir().join("golden_prompt.txt")) {
        Ok(g) => g,
        Err(e) => return Outcome::Fail(format!("golden file: {e}")),
    };
    let fixture = load_corpus_file(&data_dir().join("fixture.jsonl")).unwrap().corpus;
    let cfg = PromptConfig { k: 0, seed: 0, target_id: "ed-001".into() };
    let prompt = match build_prompt(&cfg, &fixture) {
        Ok(p) => p,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let found = prompt.as_bytes().windows(golden.len()).any(|w| w == golden.as_slice());
    if found {
        Outcome::Pass(format!("{} golden bytes found verbatim", golden.len()))
    } else {
        Outcome::Fail("golden prompt not contained in build_prompt(k=0)".into())
    }
}

fn hermetic_run() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let manifest = |backend: &str, out: &str| RunManifest {
        corpus: data_dir().join("fixture.jsonl"),
        strategy: Strategy::Baseline,
        order: OrderPolicy::AsGiven,
        layout: LayoutPolicy::CharactersThenEmotions,
        split: SplitChoice::Loso,
        seed: 0,
        max_chars: None,
        anonymize: false,
        spans: None,
        backend: backend.into(),
        timeout_ms: 5_000,
        output: dir.path().join(out),
    };
    let echo = match run(&manifest("mock:echo-gold", "echo")) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("echo-gold run: {e:#}")),
    };
    if echo.narratives != 20 {
        return Outcome::Fail(format!("fixture has {} narratives, expected 20", echo.narratives));
    }
    for dim in Dimension::ALL {
        let f1 = echo.macro_report.get(dim).f1 * 100.0;
        if f1 != 100.0 {
            return Outcome::Fail(format!("echo-gold {} F1 {f1}", dim.name()));
        }
    }
    let empty = match run(&manifest("mock:always-empty", "empty")) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("always-empty run: {e:#}")),
    };
    for s in &empty.series {
        for dim in Dimension::ALL {
            if s.counts.get(dim).gold > 0 && s.report.get(dim).recall != 0.0 {
                return Outcome::Fail(format!("always-empty {} {} recall nonzero", s.series, dim.name()));
            }
        }
    }
    for dim in Dimension::ALL {
        if empty.macro_report.get(dim).recall != 0.0 {
            return Outcome::Fail(format!("always-empty macro {} recall nonzero", dim.name()));
        }
    }
    within(
        start.elapsed(),
        Duration::from_secs(5),
        "echo-gold 100.00 F1 on six dimensions, always-empty recall 0".into(),
    )
}

fn main() {
    let criteria: &[(&str, Check)] = &[
        ("codec exhaustiveness", codec_exhaustiveness),
        ("decoder robustness", decoder_robustness),
        ("scorer oracle equivalence", scorer_oracle),
        ("worked example fidelity", worked_example),
        ("wilcoxon exactness", wilcoxon_exactness),
        ("dataset statistics", dataset_statistics),
        ("prompt golden file", prompt_golden),
        ("hermetic end-to-end run", hermetic_run),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(*check)
            .unwrap_or_else(|_| Outcome::Fail("panicked".into()));
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Skip(d) => ("SKIP", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {name}: {detail}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
