//! Synonym-choice divergence between two labels.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::distance::FrequencyTable;
use crate::error::{Error, Result};
use crate::lexicon::{FocusSet, SynonymSet};

pub const DEFAULT_MIN_SUPPORT: u64 = 20;

/// Usage distribution over the members of one synonym set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynsetDistribution {
    pub words: Vec<String>,
    /// Aligned with `words`; all zero when `support_count` is 0.
    pub probs: Vec<f64>,
    pub support_count: u64,
}

impl SynsetDistribution {
    pub fn from_counts(words: Vec<String>, counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        let probs = counts
            .iter()
            .map(|&c| {
                if total == 0 {
                    0.0
                } else {
                    c as f64 / total as f64
                }
            })
            .collect();
        SynsetDistribution {
            words,
            probs,
            support_count: total,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.support_count == 0
    }
}

/// Member counts under `label`, renormalized over the synset.
pub fn synset_distribution(s: &SynonymSet, label: &str, ft: &FrequencyTable) -> SynsetDistribution {
    let counts: Vec<u64> = s.words.iter().map(|w| ft.count(label, w)).collect();
    SynsetDistribution::from_counts(s.words.clone(), &counts)
}

fn kl_term(p: f64, m: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (p / m).log2()
    }
}

/// Jensen-Shannon divergence with base-2 logarithms.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Parameter(format!(
            "distributions of different arity ({} and {})",
            p.len(),
            q.len()
        )));
    }
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        d += 0.5 * kl_term(a, m) + 0.5 * kl_term(b, m);
    }
    Ok(d.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRow {
    pub words: Vec<String>,
    pub p_i: Vec<f64>,
    pub p_j: Vec<f64>,
    pub jsd: f64,
    pub support_i: u64,
    pub support_j: u64,
}

impl DivergenceRow {
    fn key(&self) -> String {
        let mut w: Vec<&str> = self.words.iter().map(String::as_str).collect();
        w.sort_unstable();
        w.join("|")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub label_i: String,
    pub label_j: String,
    pub rows: Vec<DivergenceRow>,
}

/// Synsets with at least `min_support` member occurrences under both labels,
/// by decreasing divergence; ties by decreasing total support, then by the
/// sorted member list.
pub fn rank_synsets(
    label_i: &str,
    label_j: &str,
    synsets: &[SynonymSet],
    ft: &FrequencyTable,
    min_support: u64,
) -> Result<DivergenceReport> {
    for l in [label_i, label_j] {
        if !ft.has_label(l) {
            return Err(Error::NotFound(format!(
                "label {l:?} has no frequency data"
            )));
        }
    }
    let rows: Vec<Option<DivergenceRow>> = synsets
        .par_iter()
        .map(|s| {
            let (di, dj) = (
                synset_distribution(s, label_i, ft),
                synset_distribution(s, label_j, ft),
            );
            if di.is_empty()
                || dj.is_empty()
                || di.support_count < min_support
                || dj.support_count < min_support
            {
                return Ok(None);
            }
            Ok(Some(DivergenceRow {
                jsd: jsd(&di.probs, &dj.probs)?,
                words: s.words.clone(),
                p_i: di.probs,
                p_j: dj.probs,
                support_i: di.support_count,
                support_j: dj.support_count,
            }))
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<DivergenceRow> = rows.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        b.jsd
            .total_cmp(&a.jsd)
            .then((b.support_i + b.support_j).cmp(&(a.support_i + a.support_j)))
            .then_with(|| a.key().cmp(&b.key()))
    });
    Ok(DivergenceReport {
        label_i: label_i.to_string(),
        label_j: label_j.to_string(),
        rows,
    })
}

pub fn rank_focus_set(
    label_i: &str,
    label_j: &str,
    fs: &FocusSet,
    ft: &FrequencyTable,
    min_support: u64,
) -> Result<DivergenceReport> {
    rank_synsets(label_i, label_j, &fs.synsets, ft, min_support)
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl DivergenceReport {
    /// Header plus one row per synset; members and probabilities are
    /// comma-separated in member order.
    pub fn write_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "synset\tp_{}\tp_{}\tjsd\tsupport_{}\tsupport_{}",
            self.label_i, self.label_j, self.label_i, self.label_j
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{:.6}\t{}\t{}",
                r.words.join(","),
                join(&r.p_i),
                join(&r.p_j),
                r.jsd,
                r.support_i,
                r.support_j
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
