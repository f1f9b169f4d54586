//! Per-word and aggregate distances between labeled varieties.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusIndex;
use crate::embed::{cosine, SituatedEmbeddings};
use crate::error::{Error, Result};

pub const P_MIN: f64 = 1e-6;
pub const P_MAX: f64 = 1.0 - 1e-6;

/// Relative word frequencies per label and in the pooled collection.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    index: CorpusIndex,
}

impl FrequencyTable {
    pub fn new(index: CorpusIndex) -> Self {
        FrequencyTable { index }
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.index.labels()
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.index.labels().any(|l| l == label)
    }

    pub fn count(&self, label: &str, word: &str) -> u64 {
        self.index.count(label, word)
    }

    pub fn total(&self, label: &str) -> u64 {
        self.index.total(label)
    }

    /// Count over label size; 0 for an empty label.
    pub fn rel_freq(&self, label: &str, word: &str) -> f64 {
        match self.index.total(label) {
            0 => 0.0,
            n => self.index.count(label, word) as f64 / n as f64,
        }
    }

    /// Probability of `word` in the concatenation of all labels.
    pub fn pooled(&self, word: &str) -> f64 {
        match self.index.pooled_total() {
            0 => 0.0,
            n => self.index.pooled_count(word) as f64 / n as f64,
        }
    }

    /// `label<TAB>word<TAB>rel_freq` for each label and each of `words`.
    pub fn write_tsv<S: AsRef<str>>(&self, mut w: impl Write, words: &[S]) -> std::io::Result<()> {
        for label in self.labels() {
            for word in words {
                let word = word.as_ref();
                writeln!(w, "{label}\t{word}\t{}", self.rel_freq(label, word))?;
            }
        }
        Ok(())
    }

    /// `label<TAB>token_count`.
    pub fn write_totals_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        for label in self.labels() {
            writeln!(w, "{label}\t{}", self.total(label))?;
        }
        Ok(())
    }
}

/// `|f_i - f_j|^(1-p) * (1 - cos)^p`. A missing or zero-norm vector sets the
/// embedding factor to 1.
pub fn word_distance(
    f_i: f64,
    f_j: f64,
    v_i: Option<&[f64]>,
    v_j: Option<&[f64]>,
    p_w: f64,
) -> Result<f64> {
    if !(p_w > 0.0 && p_w < 1.0) {
        return Err(Error::Parameter(format!(
            "p_w must lie in (0, 1), got {p_w}"
        )));
    }
    if !(0.0..=1.0).contains(&f_i) || !(0.0..=1.0).contains(&f_j) {
        return Err(Error::Parameter(format!(
            "frequencies must lie in [0, 1], got {f_i} and {f_j}"
        )));
    }
    let gap = (f_i - f_j).abs();
    if gap == 0.0 {
        return Ok(0.0);
    }
    let emb = match (v_i, v_j) {
        (Some(a), Some(b)) => match cosine(a, b) {
            Ok(c) => (1.0 - c).max(0.0).powf(p_w),
            Err(_) => 1.0,
        },
        _ => 1.0,
    };
    Ok(gap.powf(1.0 - p_w) * emb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Combined,
    FrequencyOnly,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "combined" => Ok(Mode::Combined),
            "frequency_only" | "frequency-only" => Ok(Mode::FrequencyOnly),
            _ => Err(Error::Parameter(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceOptions {
    pub mode: Mode,
    /// Replaces the per-word exponent `p_w` with a constant.
    pub constant_weight: Option<f64>,
}

impl DistanceOptions {
    fn weight(&self, ft: &FrequencyTable, word: &str) -> f64 {
        self.constant_weight
            .unwrap_or_else(|| ft.pooled(word))
            .clamp(P_MIN, P_MAX)
    }
}

/// Situated vectors for a set of words under one label; `None` where the
/// model lacks the word.
fn vectors_for(
    e: Option<&SituatedEmbeddings>,
    words: &[&str],
    label: &str,
) -> Vec<Option<Vec<f64>>> {
    words
        .iter()
        .map(|w| e.and_then(|e| e.vector(w, label).ok()))
        .collect()
}

fn mean_distance(
    ft: &FrequencyTable,
    words: &[&str],
    weights: &[f64],
    (li, vi): (&str, &[Option<Vec<f64>>]),
    (lj, vj): (&str, &[Option<Vec<f64>>]),
) -> Result<f64> {
    let mut sum = 0.0;
    for (k, w) in words.iter().enumerate() {
        sum += word_distance(
            ft.rel_freq(li, w),
            ft.rel_freq(lj, w),
            vi[k].as_deref(),
            vj[k].as_deref(),
            weights[k],
        )?;
    }
    Ok(sum / words.len() as f64)
}

fn check_labels<'a>(
    ft: &FrequencyTable,
    e: Option<&SituatedEmbeddings>,
    labels: impl IntoIterator<Item = &'a str>,
) -> Result<()> {
    for l in labels {
        if !ft.has_label(l) {
            return Err(Error::NotFound(format!(
                "label {l:?} has no frequency data"
            )));
        }
        if let Some(e) = e {
            if !e.labels().iter().any(|x| x == l) {
                return Err(Error::NotFound(format!(
                    "label {l:?} missing from the embedding model"
                )));
            }
        }
    }
    Ok(())
}

/// Mean word distance over `words` between two labels. Embeddings are
/// ignored in frequency-only mode and may then be `None`.
pub fn pairwise_distance<S: AsRef<str>>(
    label_i: &str,
    label_j: &str,
    words: &[S],
    ft: &FrequencyTable,
    e: Option<&SituatedEmbeddings>,
    opts: &DistanceOptions,
) -> Result<f64> {
    if words.is_empty() {
        return Err(Error::Empty("focus set has no words".into()));
    }
    let e = if opts.mode == Mode::FrequencyOnly {
        None
    } else {
        e
    };
    check_labels(ft, e, [label_i, label_j])?;
    let words: Vec<&str> = words.iter().map(AsRef::as_ref).collect();
    let weights: Vec<f64> = words.iter().map(|w| opts.weight(ft, w)).collect();
    let vi = vectors_for(e, &words, label_i);
    let vj = vectors_for(e, &words, label_j);
    mean_distance(ft, &words, &weights, (label_i, &vi), (label_j, &vj))
}

/// Square, symmetric matrix of non-negative distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    m: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn new(labels: Vec<String>, m: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(Error::Validation(format!(
                "distance matrix must be {n}x{n}"
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let x = m[i][j];
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::Validation(format!(
                        "entry ({}, {}) is {x}; distances must be finite and non-negative",
                        labels[i], labels[j]
                    )));
                }
                if m[j][i] != x {
                    return Err(Error::Validation(format!(
                        "matrix is not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
            if m[i][i] != 0.0 {
                return Err(Error::Validation(format!(
                    "non-zero diagonal at {}",
                    labels[i]
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::Validation(format!("duplicate label {dup:?}")));
        }
        Ok(DistanceMatrix { labels, m })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.m
    }

    /// Reorders rows and columns to follow `order`, a permutation of the labels.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let labels = order.iter().map(|&i| self.labels[i].clone()).collect();
        let m = order
            .iter()
            .map(|&i| order.iter().map(|&j| self.m[i][j]).collect())
            .collect();
        DistanceMatrix::new(labels, m)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "label")?;
        for l in &self.labels {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        for (l, row) in self.labels.iter().zip(&self.m) {
            write!(w, "{l}")?;
            for x in row {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv(r: impl BufRead, name: &str) -> Result<Self> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(l) => l.map_err(|e| Error::io(name, e))?,
            None => return Err(Error::parse(name, 1, "empty matrix file")),
        };
        let labels: Vec<String> = header
            .split(',')
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        let mut m = Vec::with_capacity(labels.len());
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.split(',');
            let label = f.next().unwrap_or("").trim();
            if labels.get(m.len()).map(String::as_str) != Some(label) {
                return Err(Error::parse(
                    name,
                    n + 2,
                    format!("row label {label:?} does not match header order"),
                ));
            }
            let row: Vec<f64> = f
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(name, n + 2, "non-numeric entry"))?;
            m.push(row);
        }
        DistanceMatrix::new(labels, m)
    }
}

/// `M[i][j] = pairwise_distance(labels[i], labels[j])` over the given words.
pub fn distance_matrix<S: AsRef<str> + Sync>(
    labels: &[String],
    words: &[S],
    ft: &FrequencyTable,
    e: Option<&SituatedEmbeddings>,
    opts: &DistanceOptions,
) -> Result<DistanceMatrix> {
    if labels.len() < 2 {
        return Err(Error::Parameter(
            "a distance matrix needs at least two labels".into(),
        ));
    }
    if words.is_empty() {
        return Err(Error::Empty("focus set has no words".into()));
    }
    let e = if opts.mode == Mode::FrequencyOnly {
        None
    } else {
        e
    };
    check_labels(ft, e, labels.iter().map(String::as_str))?;
    let words: Vec<&str> = words.iter().map(AsRef::as_ref).collect();
    let weights: Vec<f64> = words.iter().map(|w| opts.weight(ft, w)).collect();
    let vectors: HashMap<&str, Vec<Option<Vec<f64>>>> = labels
        .iter()
        .map(|l| (l.as_str(), vectors_for(e, &words, l)))
        .collect();
    let n = labels.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (li, lj) = (labels[i].as_str(), labels[j].as_str());
            mean_distance(ft, &words, &weights, (li, &vectors[li]), (lj, &vectors[lj]))
        })
        .collect::<Result<_>>()?;
    let mut m = vec![vec![0.0; n]; n];
    for (&(i, j), &d) in pairs.iter().zip(&values) {
        m[i][j] = d;
        m[j][i] = d;
    }
    DistanceMatrix::new(labels.to_vec(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::SgnsParams;
    use std::collections::BTreeMap;

    fn table() -> FrequencyTable {
        let mut counts: BTreeMap<String, HashMap<String, u64>> = BTreeMap::new();
        let rows = [
            ("de", [("hinder", 20u64), ("impede", 2), ("the", 978)]),
            ("es", [("hinder", 9), ("impede", 4), ("the", 987)]),
            ("fr", [("hinder", 9), ("impede", 4), ("the", 987)]),
        ];
        for (l, ws) in rows {
            counts.insert(
                l.into(),
                ws.iter().map(|(w, c)| (w.to_string(), *c)).collect(),
            );
        }
        FrequencyTable::new(CorpusIndex::from_counts(counts))
    }

    #[test]
    fn reference_value() {
        let expected = 0.001f64.powf(0.9) * 0.1f64.powf(0.1);
        // vectors at cosine 0.9
        let a = [1.0, 0.0];
        let b = [0.9, (1.0f64 - 0.81).sqrt()];
        let d = word_distance(0.002, 0.001, Some(&a), Some(&b), 0.1).unwrap();
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 1.585e-3).abs() < 1e-6);
    }

    #[test]
    fn boundary_conventions() {
        let a = [1.0, 2.0];
        assert_eq!(
            word_distance(0.3, 0.3, Some(&a), Some(&[2.0, 1.0]), 0.001).unwrap(),
            0.0
        );
        assert_eq!(
            word_distance(0.3, 0.1, Some(&a), Some(&a), 0.2).unwrap(),
            0.0
        );
        let freq_only = (0.3f64 - 0.1).powf(0.8);
        assert_eq!(
            word_distance(0.3, 0.1, None, Some(&a), 0.2).unwrap(),
            freq_only
        );
        assert_eq!(
            word_distance(0.3, 0.1, Some(&[0.0, 0.0]), Some(&a), 0.2).unwrap(),
            freq_only
        );
        assert!(word_distance(0.3, 0.1, None, None, 0.0).is_err());
        assert!(word_distance(0.3, 0.1, None, None, 1.0).is_err());
        assert!(word_distance(1.3, 0.1, None, None, 0.5).is_err());
    }

    #[test]
    fn pairwise_mean_and_identity() {
        let ft = table();
        let opts = DistanceOptions {
            mode: Mode::FrequencyOnly,
            constant_weight: None,
        };
        assert_eq!(
            pairwise_distance("de", "de", &["hinder", "impede"], &ft, None, &opts).unwrap(),
            0.0
        );
        let d = pairwise_distance("de", "es", &["hinder", "impede"], &ft, None, &opts).unwrap();
        let w = |word: &str, li: &str, lj: &str| {
            word_distance(
                ft.rel_freq(li, word),
                ft.rel_freq(lj, word),
                None,
                None,
                ft.pooled(word),
            )
            .unwrap()
        };
        assert!((d - (w("hinder", "de", "es") + w("impede", "de", "es")) / 2.0).abs() < 1e-15);
        let none: [&str; 0] = [];
        assert!(matches!(
            pairwise_distance("de", "es", &none, &ft, None, &opts),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn constant_weight_ablation() {
        let ft = table();
        let opts = DistanceOptions {
            mode: Mode::FrequencyOnly,
            constant_weight: Some(0.5),
        };
        let d = pairwise_distance("de", "es", &["hinder"], &ft, None, &opts).unwrap();
        assert!((d - (0.011f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matrix_shape_and_permutation() {
        let ft = table();
        let labels: Vec<String> = ["de", "es", "fr"].iter().map(|s| s.to_string()).collect();
        let opts = DistanceOptions {
            mode: Mode::FrequencyOnly,
            constant_weight: None,
        };
        let m = distance_matrix(&labels, &["hinder", "impede"], &ft, None, &opts).unwrap();
        assert_eq!(m.get(1, 2), 0.0);
        assert!(m.get(0, 1) > 0.0);
        let rev: Vec<String> = labels.iter().rev().cloned().collect();
        let m2 = distance_matrix(&rev, &["hinder", "impede"], &ft, None, &opts).unwrap();
        assert_eq!(m.permuted(&[2, 1, 0]).unwrap(), m2);
        assert!(distance_matrix(&labels[..1], &["hinder"], &ft, None, &opts).is_err());
    }

    #[test]
    fn identical_vectors_zero_the_combined_distance() {
        let ft = table();
        let labels: Vec<String> = ["de", "es"].iter().map(|s| s.to_string()).collect();
        let vocab = vec!["hinder".to_string(), "impede".to_string()];
        let base = vec![0.3, -0.1, 0.7, 0.2];
        let p = SgnsParams::from_parts(2, 2, 2, base, vec![0.0; 8], Vec::new()).unwrap();
        let e = SituatedEmbeddings::new(vocab.clone(), labels.clone(), p).unwrap();
        let combined =
            distance_matrix(&labels, &vocab, &ft, Some(&e), &DistanceOptions::default()).unwrap();
        let freq = distance_matrix(
            &labels,
            &vocab,
            &ft,
            Some(&e),
            &DistanceOptions {
                mode: Mode::FrequencyOnly,
                constant_weight: None,
            },
        )
        .unwrap();
        assert_eq!(combined.get(0, 1), 0.0);
        assert!(freq.get(0, 1) > 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let m =
            DistanceMatrix::new(labels, vec![vec![0.0, 0.1 + 0.2], vec![0.1 + 0.2, 0.0]]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "label,a,b\na,0,0.30000000000000004\nb,0.30000000000000004,0\n"
        );
        assert_eq!(
            DistanceMatrix::read_csv(buf.as_slice(), "m.csv").unwrap(),
            m
        );
    }

    #[test]
    fn invalid_matrices() {
        let l = vec!["a".to_string(), "b".to_string()];
        assert!(DistanceMatrix::new(l.clone(), vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(
            DistanceMatrix::new(l.clone(), vec![vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]).is_err()
        );
        assert!(DistanceMatrix::new(l.clone(), vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::new(l, vec![vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
    }
}
