//! Human-readable tables and significance comparison between two runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use dreamcode_core::metrics::{Dimension, MetricReport, SeriesReport};
use dreamcode_core::wilcoxon::{
    stars, wilcoxon_signed_rank, Alternative, PairedSamples, WilcoxonError,
};
use serde::Serialize;

use crate::run::PredictionLine;

/// F1 ×100 with two decimals, one row per model, columns in
/// status/gender/identity/age/character/emotion order.
pub fn f1_table(rows: &[(&str, &MetricReport)]) -> String {
    let width = rows.iter().map(|(name, _)| name.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<width$}", "model");
    for dim in Dimension::ALL {
        let _ = write!(out, " | {:>9}", dim.name());
    }
    out.push('\n');
    for (name, report) in rows {
        let _ = write!(out, "{name:<width$}");
        for dim in Dimension::ALL {
            let _ = write!(out, " | {:>9.2}", report.get(dim).f1 * 100.0);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub dimension: Dimension,
    pub pairs: usize,
    /// Mean F1 ×100 of each run over the paired units.
    pub mean_a: f64,
    pub mean_b: f64,
    pub p_value: Option<f64>,
    pub stars: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn compare_values(dimension: Dimension, a: &[f64], b: &[f64]) -> ComparisonRow {
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            100.0 * v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let result = PairedSamples::new(a.to_vec(), b.to_vec())
        .and_then(|s| wilcoxon_signed_rank(&s, Alternative::TwoSided));
    let (p_value, note) = match result {
        Ok(r) => (Some(r.p_value), None),
        Err(WilcoxonError::AllZeroDifferences) => (None, Some("all differences are zero".into())),
        Err(e) => (None, Some(e.to_string())),
    };
    ComparisonRow {
        dimension,
        pairs: a.len(),
        mean_a: mean(a),
        mean_b: mean(b),
        stars: p_value.map_or("", stars),
        p_value,
        note,
    }
}

/// Wilcoxon per dimension over the per-series F1 of two runs, paired by
/// series name.
pub fn compare_series(a: &[SeriesReport], b: &[SeriesReport]) -> Vec<ComparisonRow> {
    let b_by: BTreeMap<&str, &SeriesReport> = b.iter().map(|r| (r.series.as_str(), r)).collect();
    let mut paired: Vec<(&SeriesReport, &SeriesReport)> = a
        .iter()
        .filter_map(|ra| b_by.get(ra.series.as_str()).map(|rb| (ra, *rb)))
        .collect();
    paired.sort_by(|x, y| x.0.series.cmp(&y.0.series));
    Dimension::ALL
        .iter()
        .map(|&dim| {
            let xa: Vec<f64> = paired.iter().map(|(ra, _)| ra.report.get(dim).f1).collect();
            let xb: Vec<f64> = paired.iter().map(|(_, rb)| rb.report.get(dim).f1).collect();
            compare_values(dim, &xa, &xb)
        })
        .collect()
}

/// Same test with per-narrative F1 as the pairing unit.
pub fn compare_narratives(a: &[PredictionLine], b: &[PredictionLine]) -> Vec<ComparisonRow> {
    let b_by: BTreeMap<&str, &PredictionLine> = b.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut paired: Vec<(&PredictionLine, &PredictionLine)> = a
        .iter()
        .filter_map(|pa| b_by.get(pa.id.as_str()).map(|pb| (pa, *pb)))
        .collect();
    paired.sort_by(|x, y| x.0.id.cmp(&y.0.id));
    Dimension::ALL
        .iter()
        .map(|&dim| {
            let xa: Vec<f64> = paired.iter().map(|(p, _)| p.counts.get(dim).scores().f1).collect();
            let xb: Vec<f64> = paired.iter().map(|(_, p)| p.counts.get(dim).scores().f1).collect();
            compare_values(dim, &xa, &xb)
        })
        .collect()
}

pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{:<9} | {:>5} | {:>8} | {:>8} | {:>8} | sig\n",
        "dimension", "pairs", "A", "B", "p"
    );
    for r in rows {
        let p = match (r.p_value, &r.note) {
            (Some(p), _) => format!("{p:.5}"),
            (None, Some(_)) => "n/a".into(),
            (None, None) => String::new(),
        };
        let _ = writeln!(
            out,
            "{:<9} | {:>5} | {:>8.2} | {:>8.2} | {:>8} | {}{}",
            r.dimension.name(),
            r.pairs,
            r.mean_a,
            r.mean_b,
            p,
            r.stars,
            r.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
        );
    }
    out
}
