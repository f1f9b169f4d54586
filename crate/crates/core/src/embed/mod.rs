//! Situated skip-gram embeddings: a shared base vector per word plus an
//! additive offset per label.

mod sgns;
mod train;

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use sgns::{SgnsParams, TrainingPair};
pub use train::{train_situated, TrainReport};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub subsample_threshold: f64,
    pub seed: u64,
    /// Sentences sampled per label; `None` uses the smallest label's size.
    pub sentences_per_label: Option<usize>,
    /// Training threads. More than one gives racy, non-reproducible updates.
    pub workers: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            min_count: 10,
            subsample_threshold: 1e-4,
            seed: 0,
            sentences_per_label: None,
            workers: 1,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.initial_lr > 0.0) {
            return bad("initial_lr must be positive");
        }
        if !(self.subsample_threshold >= 0.0) {
            return bad("subsample_threshold must be non-negative");
        }
        Ok(())
    }
}

/// Trained model. Context vectors are kept after training but not persisted.
#[derive(Debug, Clone, PartialEq)]
pub struct SituatedEmbeddings {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    labels: Vec<String>,
    label_index: HashMap<String, usize>,
    params: SgnsParams,
}

fn index_of(items: &[String]) -> HashMap<String, usize> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect()
}

impl SituatedEmbeddings {
    pub fn new(vocab: Vec<String>, labels: Vec<String>, params: SgnsParams) -> Result<Self> {
        if params.vocab_size() != vocab.len() || params.label_count() != labels.len() {
            return Err(Error::Validation(format!(
                "parameters sized for {} words and {} labels, got {} and {}",
                params.vocab_size(),
                params.label_count(),
                vocab.len(),
                labels.len()
            )));
        }
        let index = index_of(&vocab);
        let label_index = index_of(&labels);
        if index.len() != vocab.len() || label_index.len() != labels.len() {
            return Err(Error::Validation("duplicate word or label".into()));
        }
        Ok(SituatedEmbeddings {
            vocab,
            index,
            labels,
            label_index,
            params,
        })
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn params(&self) -> &SgnsParams {
        &self.params
    }

    pub fn word_index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    fn lookup(&self, word: &str, label: &str) -> Result<(usize, usize)> {
        let w = self
            .word_index(word)
            .ok_or_else(|| Error::NotFound(format!("word {word:?} not in vocabulary")))?;
        let l = *self
            .label_index
            .get(label)
            .ok_or_else(|| Error::NotFound(format!("label {label:?} not in model")))?;
        Ok((w, l))
    }

    pub fn base(&self, word: &str) -> Result<&[f64]> {
        let w = self
            .word_index(word)
            .ok_or_else(|| Error::NotFound(format!("word {word:?} not in vocabulary")))?;
        Ok(self.params.base_row(w))
    }

    pub fn offset(&self, word: &str, label: &str) -> Result<&[f64]> {
        let (w, l) = self.lookup(word, label)?;
        Ok(self.params.offset_row(l, w))
    }

    /// `base[word] + offsets[label][word]`.
    pub fn vector(&self, word: &str, label: &str) -> Result<Vec<f64>> {
        let (w, l) = self.lookup(word, label)?;
        Ok(self.params.input_vector(w, l))
    }

    /// Header `V dim L`, base rows `word v1 .. vdim`, then one `#label name`
    /// block of offset rows per label in vocabulary order.
    pub fn write_text(&self, mut w: impl Write) -> std::io::Result<()> {
        let dim = self.dim();
        writeln!(w, "{} {} {}", self.vocab.len(), dim, self.labels.len())?;
        let write_row = |w: &mut dyn Write, word: &str, row: &[f64]| -> std::io::Result<()> {
            write!(w, "{word}")?;
            for x in row {
                write!(w, " {x}")?;
            }
            writeln!(w)
        };
        for (i, word) in self.vocab.iter().enumerate() {
            write_row(&mut w, word, self.params.base_row(i))?;
        }
        for (l, label) in self.labels.iter().enumerate() {
            writeln!(w, "#label {label}")?;
            for (i, word) in self.vocab.iter().enumerate() {
                write_row(&mut w, word, self.params.offset_row(l, i))?;
            }
        }
        Ok(())
    }

    pub fn read_text(r: impl BufRead, name: &str) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = || -> Result<Option<(usize, String)>> {
            match lines.next() {
                Some((n, line)) => Ok(Some((n + 1, line.map_err(|e| Error::io(name, e))?))),
                None => Ok(None),
            }
        };
        let (_, header) = next()?.ok_or_else(|| Error::parse(name, 1, "missing header"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(name, 1, "header must be `V dim L`"))?;
        let [v, dim, nl] = nums[..] else {
            return Err(Error::parse(name, 1, "header must be `V dim L`"));
        };
        let parse_row =
            |n: usize, line: &str, expect: Option<&str>| -> Result<(String, Vec<f64>)> {
                let mut f = line.split(' ');
                let word = f.next().unwrap_or("").to_string();
                if let Some(e) = expect {
                    if word != e {
                        return Err(Error::parse(
                            name,
                            n,
                            format!("expected row for {e:?}, found {word:?}"),
                        ));
                    }
                }
                let row: Vec<f64> = f
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(name, n, "non-numeric vector component"))?;
                if row.len() != dim {
                    return Err(Error::parse(
                        name,
                        n,
                        format!("expected {dim} components, found {}", row.len()),
                    ));
                }
                Ok((word, row))
            };
        let mut vocab = Vec::with_capacity(v);
        let mut base = Vec::with_capacity(v * dim);
        for _ in 0..v {
            let (n, line) = next()?.ok_or_else(|| Error::parse(name, 0, "truncated base rows"))?;
            let (word, row) = parse_row(n, &line, None)?;
            vocab.push(word);
            base.extend(row);
        }
        let mut labels = Vec::with_capacity(nl);
        let mut offsets = Vec::with_capacity(nl * v * dim);
        for _ in 0..nl {
            let (n, line) =
                next()?.ok_or_else(|| Error::parse(name, 0, "truncated label blocks"))?;
            let label = line
                .strip_prefix("#label ")
                .ok_or_else(|| Error::parse(name, n, "expected `#label <name>`"))?;
            labels.push(label.to_string());
            for word in &vocab {
                let (n, line) =
                    next()?.ok_or_else(|| Error::parse(name, 0, "truncated offset rows"))?;
                offsets.extend(parse_row(n, &line, Some(word))?.1);
            }
        }
        let params = SgnsParams::from_parts(dim, v, nl, base, offsets, Vec::new())?;
        SituatedEmbeddings::new(vocab, labels, params)
    }
}

/// Cosine similarity; zero-norm inputs are an error.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Parameter(format!(
            "cosine of vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Parameter("cosine of a zero-norm vector".into()));
    }
    Ok((dot / (nu * nv).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SituatedEmbeddings {
        let base = vec![0.1, -0.2, 0.3, 1.0 / 3.0, 2.5e-17, -7.0];
        let offsets = vec![0.0; 12];
        let mut p = SgnsParams::from_parts(3, 2, 2, base, offsets, Vec::new()).unwrap();
        p.offset_row_mut(1, 0).copy_from_slice(&[0.5, 0.5, -0.5]);
        SituatedEmbeddings::new(
            vec!["cargo".into(), "freight".into()],
            vec!["de".into(), "es".into()],
            p,
        )
        .unwrap()
    }

    #[test]
    fn cosine_values() {
        assert!((cosine(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let expected = 32.0 / (14.0f64.sqrt() * 77.0f64.sqrt());
        let c = cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((c - expected).abs() < 1e-15);
        assert!((c - 0.97463).abs() < 1e-5);
        assert!(cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn vector_is_base_plus_offset() {
        let e = small();
        assert_eq!(e.vector("cargo", "de").unwrap(), e.base("cargo").unwrap());
        let v = e.vector("cargo", "es").unwrap();
        let base = e.base("cargo").unwrap();
        let off = e.offset("cargo", "es").unwrap();
        for i in 0..3 {
            assert_eq!(v[i], base[i] + off[i]);
        }
    }

    #[test]
    fn unknown_word_or_label() {
        let e = small();
        assert!(matches!(e.vector("boat", "de"), Err(Error::NotFound(_))));
        assert!(matches!(e.vector("cargo", "fr"), Err(Error::NotFound(_))));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let e = small();
        let mut buf = Vec::new();
        e.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("2 3 2\ncargo "));
        assert!(text.contains("#label es\n"));
        let back = SituatedEmbeddings::read_text(buf.as_slice(), "m.txt").unwrap();
        assert_eq!(back.vocab(), e.vocab());
        for w in ["cargo", "freight"] {
            for l in ["de", "es"] {
                let (a, b) = (back.vector(w, l).unwrap(), e.vector(w, l).unwrap());
                assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }

    #[test]
    fn truncated_model_rejected() {
        let text = "2 3 1\ncargo 1 2 3\n";
        assert!(SituatedEmbeddings::read_text(text.as_bytes(), "m").is_err());
        let text = "1 2 1\ncargo 1 2\n#label de\nfreight 0 0\n";
        assert!(SituatedEmbeddings::read_text(text.as_bytes(), "m").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EmbedConfig::default().validate().is_ok());
        let c = EmbedConfig {
            negatives: 0,
            ..EmbedConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
