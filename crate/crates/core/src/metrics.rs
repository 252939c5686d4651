//! Multiset precision, recall and F1 for predicted annotations.
//!
//! Six dimensions are scored. `character` matches full four-symbol codes,
//! the four class dimensions match each character's projection onto that
//! class, and `emotion` matches `(experiencer, emotion)` pairs where the
//! experiencer is the full code or the dreamer. Matching is multiset
//! intersection, so list order never matters.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use crate::code::{AnnotationSet, EmotionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Dimension {
    Status,
    Gender,
    Identity,
    Age,
    Character,
    Emotion,
}

impl Dimension {
    /// Report column order.
    pub const ALL: [Dimension; 6] = [
        Dimension::Status,
        Dimension::Gender,
        Dimension::Identity,
        Dimension::Age,
        Dimension::Character,
        Dimension::Emotion,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Dimension::Status => "status",
            Dimension::Gender => "gender",
            Dimension::Identity => "identity",
            Dimension::Age => "age",
            Dimension::Character => "character",
            Dimension::Emotion => "emotion",
        }
    }
}

/// Matched, predicted and gold tallies for one dimension.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Counts {
    pub matched: u64,
    pub predicted: u64,
    pub gold: u64,
}

impl Counts {
    pub const fn new(matched: u64, predicted: u64, gold: u64) -> Self {
        Counts { matched, predicted, gold }
    }

    pub fn scores(&self) -> Scores {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.matched, self.predicted);
        let recall = ratio(self.matched, self.gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Scores {
            precision,
            recall,
            f1,
            no_predictions: self.predicted == 0,
            no_gold: self.gold == 0,
        }
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, rhs: Counts) -> Counts {
        Counts {
            matched: self.matched + rhs.matched,
            predicted: self.predicted + rhs.predicted,
            gold: self.gold + rhs.gold,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        *self = *self + rhs;
    }
}

/// Per-dimension tallies. Forms a commutative monoid under `+`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchCounts {
    pub status: Counts,
    pub gender: Counts,
    pub identity: Counts,
    pub age: Counts,
    pub character: Counts,
    pub emotion: Counts,
}

impl MatchCounts {
    pub fn get(&self, dim: Dimension) -> &Counts {
        match dim {
            Dimension::Status => &self.status,
            Dimension::Gender => &self.gender,
            Dimension::Identity => &self.identity,
            Dimension::Age => &self.age,
            Dimension::Character => &self.character,
            Dimension::Emotion => &self.emotion,
        }
    }

    pub fn get_mut(&mut self, dim: Dimension) -> &mut Counts {
        match dim {
            Dimension::Status => &mut self.status,
            Dimension::Gender => &mut self.gender,
            Dimension::Identity => &mut self.identity,
            Dimension::Age => &mut self.age,
            Dimension::Character => &mut self.character,
            Dimension::Emotion => &mut self.emotion,
        }
    }

    pub fn report(&self) -> MetricReport {
        let mut report = MetricReport::default();
        for dim in Dimension::ALL {
            *report.get_mut(dim) = self.get(dim).scores();
        }
        report
    }
}

impl Add for MatchCounts {
    type Output = MatchCounts;

    fn add(mut self, rhs: MatchCounts) -> MatchCounts {
        self += rhs;
        self
    }
}

impl AddAssign for MatchCounts {
    fn add_assign(&mut self, rhs: MatchCounts) {
        for dim in Dimension::ALL {
            *self.get_mut(dim) += *rhs.get(dim);
        }
    }
}

impl core::iter::Sum for MatchCounts {
    fn sum<I: Iterator<Item = MatchCounts>>(iter: I) -> Self {
        iter.fold(MatchCounts::default(), Add::add)
    }
}

/// Precision, recall and F1 as fractions in `[0, 1]`.
///
/// A zero denominator yields 0 and sets the matching flag.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub no_predictions: bool,
    pub no_gold: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub status: Scores,
    pub gender: Scores,
    pub identity: Scores,
    pub age: Scores,
    pub character: Scores,
    pub emotion: Scores,
}

impl MetricReport {
    pub fn get(&self, dim: Dimension) -> &Scores {
        match dim {
            Dimension::Status => &self.status,
            Dimension::Gender => &self.gender,
            Dimension::Identity => &self.identity,
            Dimension::Age => &self.age,
            Dimension::Character => &self.character,
            Dimension::Emotion => &self.emotion,
        }
    }

    pub fn get_mut(&mut self, dim: Dimension) -> &mut Scores {
        match dim {
            Dimension::Status => &mut self.status,
            Dimension::Gender => &mut self.gender,
            Dimension::Identity => &mut self.identity,
            Dimension::Age => &mut self.age,
            Dimension::Character => &mut self.character,
            Dimension::Emotion => &mut self.emotion,
        }
    }
}

/// Micro-aggregated report of one series (or fold).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeriesReport {
    pub series: String,
    pub narratives: usize,
    pub counts: MatchCounts,
    pub report: MetricReport,
}

impl SeriesReport {
    pub fn from_counts(series: impl Into<String>, counts: &[MatchCounts]) -> Self {
        let total: MatchCounts = counts.iter().copied().sum();
        SeriesReport {
            series: series.into(),
            narratives: counts.len(),
            counts: total,
            report: total.report(),
        }
    }
}

/// Size of the multiset intersection of two lists.
pub fn multiset_overlap<T: Ord + Clone>(a: &[T], b: &[T]) -> u64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn tally<T: Ord + Clone>(pred: &[T], gold: &[T]) -> Counts {
    Counts::new(multiset_overlap(pred, gold), pred.len() as u64, gold.len() as u64)
}

/// Scores one narrative. A null prediction (`None`) counts as empty.
pub fn score_narrative(pred: Option<&AnnotationSet>, gold: &AnnotationSet) -> MatchCounts {
    let empty = AnnotationSet::default();
    let pred = pred.unwrap_or(&empty);

    let project = |a: &AnnotationSet, f: fn(&crate::CharacterCode) -> char| -> Vec<char> {
        a.characters.iter().map(f).collect()
    };

    let emotions = |a: &AnnotationSet| -> Vec<EmotionRecord> { a.emotions.clone() };

    MatchCounts {
        status: tally(&project(pred, |c| c.status.symbol()), &project(gold, |c| c.status.symbol())),
        gender: tally(&project(pred, |c| c.gender.symbol()), &project(gold, |c| c.gender.symbol())),
        identity: tally(
            &project(pred, |c| c.identity.symbol()),
            &project(gold, |c| c.identity.symbol()),
        ),
        age: tally(&project(pred, |c| c.age.symbol()), &project(gold, |c| c.age.symbol())),
        character: tally(&pred.characters, &gold.characters),
        emotion: tally(&emotions(pred), &emotions(gold)),
    }
}

/// Sums the tallies, then derives the scores.
pub fn aggregate_micro(counts: &[MatchCounts]) -> MetricReport {
    counts.iter().copied().sum::<MatchCounts>().report()
}

/// Arithmetic mean of each metric across series. Degenerate flags are set
/// only when every series is degenerate on that dimension.
pub fn macro_average(reports: &[SeriesReport]) -> MetricReport {
    let mut out = MetricReport::default();
    if reports.is_empty() {
        for dim in Dimension::ALL {
            let s = out.get_mut(dim);
            s.no_predictions = true;
            s.no_gold = true;
        }
        return out;
    }
    let n = reports.len() as f64;
    for dim in Dimension::ALL {
        let s = out.get_mut(dim);
        s.no_predictions = true;
        s.no_gold = true;
        for r in reports {
            let x = r.report.get(dim);
            s.precision += x.precision / n;
            s.recall += x.recall / n;
            s.f1 += x.f1 / n;
            s.no_predictions &= x.no_predictions;
            s.no_gold &= x.no_gold;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{EmotionLabel, Experiencer};
    use alloc::vec;

    fn set(codes: &[&str], emotions: &[(&str, EmotionLabel)]) -> AnnotationSet {
        AnnotationSet::new(
            codes.iter().map(|c| c.parse().unwrap()).collect(),
            emotions
                .iter()
                .map(|(who, e)| EmotionRecord::new(who.parse::<Experiencer>().unwrap(), *e))
                .collect(),
        )
    }

    #[test]
    fn duplicate_prediction() {
        let pred = set(&["1FKA", "1MSA", "1MSA"], &[]);
        let gold = set(&["1FKA", "1MSA"], &[]);
        let c = score_narrative(Some(&pred), &gold);
        assert_eq!(c.character, Counts::new(2, 3, 2));
        let s = c.character.scores();
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.recall, 1.0);
        assert!((s.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn null_prediction_scores_empty() {
        let gold = set(&["2MSC", "1MSC", "1FSC"], &[("D", EmotionLabel::Apprehension)]);
        let c = score_narrative(None, &gold);
        for dim in Dimension::ALL {
            assert_eq!(c.get(dim).matched, 0);
            assert_eq!(c.get(dim).predicted, 0);
        }
        assert_eq!(c.character.gold, 3);
        assert_eq!(c.emotion.gold, 1);
    }

    #[test]
    fn dreamer_emotion_matches() {
        let a = set(&[], &[("D", EmotionLabel::Apprehension)]);
        let c = score_narrative(Some(&a), &a);
        assert_eq!(c.emotion, Counts::new(1, 1, 1));
        assert_eq!(c.emotion.scores().f1, 1.0);
    }

    #[test]
    fn projections_match_partially() {
        let pred = set(&["1FKA"], &[]);
        let gold = set(&["1MKA"], &[]);
        let c = score_narrative(Some(&pred), &gold);
        assert_eq!(c.character.matched, 0);
        assert_eq!(c.status.matched, 1);
        assert_eq!(c.gender.matched, 0);
        assert_eq!(c.identity.matched, 1);
        assert_eq!(c.age.matched, 1);
    }

    #[test]
    fn micro_sums_before_dividing() {
        let a = MatchCounts { character: Counts::new(2, 3, 2), ..Default::default() };
        let b = MatchCounts { character: Counts::new(1, 1, 1), ..Default::default() };
        let r = aggregate_micro(&[a, b]);
        assert_eq!(r.character.precision, 0.75);
        assert_eq!(r.character.recall, 1.0);
        assert!((r.character.f1 - 6.0 / 7.0).abs() < 1e-12);
        assert_eq!(aggregate_micro(&[a]), a.report());
    }

    #[test]
    fn empty_corpus_is_degenerate() {
        let r = aggregate_micro(&[]);
        for dim in Dimension::ALL {
            let s = r.get(dim);
            assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
            assert!(s.no_gold && s.no_predictions);
        }
    }

    #[test]
    fn macro_means() {
        let mut r1 = SeriesReport::from_counts("a", &[]);
        r1.report.character.f1 = 0.60;
        let mut r2 = SeriesReport::from_counts("b", &[]);
        r2.report.character.f1 = 0.70;
        assert!((macro_average(&[r1.clone(), r2]).character.f1 - 0.65).abs() < 1e-12);

        let six = vec![r1.clone(); 6];
        let m = macro_average(&six);
        assert!((m.character.f1 - r1.report.character.f1).abs() < 1e-12);
    }
}
