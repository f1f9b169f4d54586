//! Labeled sentence corpora: ingestion, cleanup and abstraction, counting.

mod abstraction;
mod stats;
mod tokenize;
mod truecase;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use abstraction::{
    abstract_sentence, abstract_tokens, unk_fraction, EnglishLexicon, EntityAnnotator, EntitySpan,
    GazetteerTagger, SpanFile, UNK_TOKEN, URL_TOKEN,
};
pub use stats::{lexical_stats, load_value_table, token_stats, CorpusStats};
pub use tokenize::{filter_sentence, is_url_like, tokenize, URL_PREFIXES};
pub use truecase::{
    casing_variants, truecase, truecase_sentence, NgramTable, SENTENCE_END, SENTENCE_START,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub l1_label: String,
    pub tokens: Vec<String>,
    pub source_id: String,
}

impl LabeledSentence {
    pub fn new(
        l1_label: impl Into<String>,
        tokens: Vec<String>,
        source_id: impl Into<String>,
    ) -> Self {
        LabeledSentence {
            l1_label: l1_label.into(),
            tokens,
            source_id: source_id.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub sentences: Vec<LabeledSentence>,
    pub label_set: BTreeSet<String>,
    closed: bool,
}

#[derive(Deserialize)]
struct RawRecord {
    l1: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    tokens: Option<Vec<String>>,
}

#[derive(Serialize)]
struct CleanRecord<'a> {
    l1: &'a str,
    id: &'a str,
    tokens: &'a [String],
}

/// Counts gathered while reading a JSON-lines corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReadReport {
    pub lines: usize,
    pub kept: usize,
    pub filtered: usize,
}

impl LabeledCorpus {
    /// A corpus that only accepts sentences with one of `labels`.
    pub fn with_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LabeledCorpus {
            sentences: Vec::new(),
            label_set: labels.into_iter().map(Into::into).collect(),
            closed: true,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn push(&mut self, s: LabeledSentence) -> Result<()> {
        if !self.label_set.contains(&s.l1_label) {
            if self.closed {
                return Err(Error::Validation(format!(
                    "label {:?} is not in the declared label set",
                    s.l1_label
                )));
            }
            self.label_set.insert(s.l1_label.clone());
        }
        self.sentences.push(s);
        Ok(())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.label_set.iter().map(String::as_str)
    }

    /// Reads `{"l1", "text", "id"?}` records, or pre-tokenized
    /// `{"l1", "tokens", "id"}` records as written by [`Self::write_jsonl`].
    /// Raw text is tokenized and sentences failing [`filter_sentence`] are
    /// dropped. Missing ids default to the 1-based line number.
    pub fn read_jsonl(
        r: impl BufRead,
        name: &str,
        declared: Option<&BTreeSet<String>>,
    ) -> Result<(Self, ReadReport)> {
        let mut corpus = match declared {
            Some(labels) => LabeledCorpus::with_labels(labels.iter().cloned()),
            None => LabeledCorpus::default(),
        };
        let mut report = ReadReport::default();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            report.lines += 1;
            let rec: RawRecord = serde_json::from_str(&line)
                .map_err(|e| Error::parse(name, n + 1, e.to_string()))?;
            let tokens = match (rec.tokens, rec.text) {
                (Some(t), _) => t,
                (None, Some(text)) => tokenize(&text),
                (None, None) => {
                    return Err(Error::parse(
                        name,
                        n + 1,
                        "record has neither \"text\" nor \"tokens\"",
                    ))
                }
            };
            if !filter_sentence(&tokens) {
                report.filtered += 1;
                continue;
            }
            let id = rec.id.unwrap_or_else(|| (n + 1).to_string());
            corpus
                .push(LabeledSentence::new(rec.l1, tokens, id))
                .map_err(|e| Error::parse(name, n + 1, e.to_string()))?;
            report.kept += 1;
        }
        Ok((corpus, report))
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for s in &self.sentences {
            let rec = CleanRecord {
                l1: &s.l1_label,
                id: &s.source_id,
                tokens: &s.tokens,
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn index(&self) -> CorpusIndex {
        CorpusIndex::build(self)
    }
}

/// Per-label token counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusIndex {
    counts: BTreeMap<String, HashMap<String, u64>>,
    totals: BTreeMap<String, u64>,
    pooled: HashMap<String, u64>,
    pooled_total: u64,
}

impl CorpusIndex {
    pub fn build(c: &LabeledCorpus) -> Self {
        let mut idx = CorpusIndex::default();
        for label in &c.label_set {
            idx.counts.insert(label.clone(), HashMap::new());
            idx.totals.insert(label.clone(), 0);
        }
        for s in &c.sentences {
            let counts = idx.counts.get_mut(&s.l1_label).expect("label registered");
            for t in &s.tokens {
                *counts.entry(t.clone()).or_insert(0) += 1;
                *idx.pooled.entry(t.clone()).or_insert(0) += 1;
            }
            *idx.totals.get_mut(&s.l1_label).expect("label registered") += s.tokens.len() as u64;
            idx.pooled_total += s.tokens.len() as u64;
        }
        idx
    }

    /// Builds an index from explicit per-label counts.
    pub fn from_counts(counts: BTreeMap<String, HashMap<String, u64>>) -> Self {
        let mut idx = CorpusIndex::default();
        for (label, words) in counts {
            let total: u64 = words.values().sum();
            for (w, &c) in &words {
                *idx.pooled.entry(w.clone()).or_insert(0) += c;
            }
            idx.pooled_total += total;
            idx.totals.insert(label.clone(), total);
            idx.counts.insert(label, words);
        }
        idx
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.totals.keys().map(String::as_str)
    }

    pub fn count(&self, label: &str, word: &str) -> u64 {
        self.counts
            .get(label)
            .and_then(|m| m.get(word))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self, label: &str) -> u64 {
        self.totals.get(label).copied().unwrap_or(0)
    }

    pub fn pooled_count(&self, word: &str) -> u64 {
        self.pooled.get(word).copied().unwrap_or(0)
    }

    pub fn pooled_total(&self) -> u64 {
        self.pooled_total
    }

    pub fn label_counts(&self, label: &str) -> Option<&HashMap<String, u64>> {
        self.counts.get(label)
    }

    /// Word types in lexicographic order.
    pub fn vocabulary(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.pooled.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CleanupOrder {
    #[default]
    TruecaseFirst,
    AbstractFirst,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CleanupReport {
    pub input: usize,
    pub kept: usize,
    pub dropped_unk: usize,
    pub dropped_filter: usize,
}

/// Truecasing followed by entity/URL/UNK abstraction (or the reverse).
/// Every stage is optional; sentences whose UNK share exceeds
/// `max_unk_fraction` are dropped.
pub struct Cleaner<'a> {
    pub ngrams: Option<&'a NgramTable>,
    pub annotator: Option<&'a dyn EntityAnnotator>,
    pub lexicon: Option<&'a EnglishLexicon>,
    pub order: CleanupOrder,
    pub max_unk_fraction: f64,
}

impl Default for Cleaner<'_> {
    fn default() -> Self {
        Cleaner {
            ngrams: None,
            annotator: None,
            lexicon: None,
            order: CleanupOrder::TruecaseFirst,
            max_unk_fraction: 0.5,
        }
    }
}

impl Cleaner<'_> {
    fn truecase_step(&self, s: LabeledSentence) -> LabeledSentence {
        match self.ngrams {
            Some(t) => LabeledSentence {
                tokens: truecase_sentence(&s.tokens, t),
                ..s
            },
            None => s,
        }
    }

    fn abstract_step(&self, s: LabeledSentence) -> Result<LabeledSentence> {
        let spans = self.annotator.map(|a| a.annotate(&s)).unwrap_or_default();
        let tokens = match self.lexicon {
            Some(lex) => abstract_tokens(&s.tokens, &spans, lex),
            None => abstraction::abstract_tokens_with(&s.tokens, &spans, |_| true),
        }
        .map_err(|e| Error::Validation(format!("sentence {}: {e}", s.source_id)))?;
        Ok(LabeledSentence { tokens, ..s })
    }

    fn clean_inner(&self, s: &LabeledSentence) -> Result<Outcome> {
        let s = s.clone();
        let s = match self.order {
            CleanupOrder::TruecaseFirst => self.abstract_step(self.truecase_step(s))?,
            CleanupOrder::AbstractFirst => self.truecase_step(self.abstract_step(s)?),
        };
        Ok(if !filter_sentence(&s.tokens) {
            Outcome::DroppedFilter
        } else if unk_fraction(&s.tokens) > self.max_unk_fraction {
            Outcome::DroppedUnk
        } else {
            Outcome::Kept(s)
        })
    }

    /// `Ok(None)` when the cleaned sentence is dropped.
    pub fn clean_sentence(&self, s: &LabeledSentence) -> Result<Option<LabeledSentence>> {
        Ok(match self.clean_inner(s)? {
            Outcome::Kept(s) => Some(s),
            _ => None,
        })
    }

    pub fn clean(&self, corpus: &LabeledCorpus) -> Result<(LabeledCorpus, CleanupReport)> {
        let cleaned: Vec<Result<Outcome>> = corpus
            .sentences
            .par_iter()
            .map(|s| self.clean_inner(s))
            .collect();
        let mut out = LabeledCorpus::with_labels(corpus.label_set.iter().cloned());
        let mut report = CleanupReport {
            input: corpus.len(),
            ..Default::default()
        };
        for c in cleaned {
            match c? {
                Outcome::Kept(s) => {
                    out.push(s)?;
                    report.kept += 1;
                }
                Outcome::DroppedUnk => report.dropped_unk += 1,
                Outcome::DroppedFilter => report.dropped_filter += 1,
            }
        }
        Ok((out, report))
    }
}

enum Outcome {
    Kept(LabeledSentence),
    DroppedUnk,
    DroppedFilter,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reads_raw_and_clean_records() {
        let data = r#"{"l1":"de","text":"I agree.","id":"a"}
{"l1":"es","text":" ?"}

{"l1":"es","tokens":["hola","there"]}
"#;
        let (c, rep) = LabeledCorpus::read_jsonl(data.as_bytes(), "c.jsonl", None).unwrap();
        assert_eq!(
            rep,
            ReadReport {
                lines: 3,
                kept: 2,
                filtered: 1
            }
        );
        assert_eq!(c.sentences[0].tokens, toks(&["I", "agree", "."]));
        assert_eq!(c.sentences[1].source_id, "4");
        assert_eq!(c.labels().collect::<Vec<_>>(), vec!["de", "es"]);

        let mut buf = Vec::new();
        c.write_jsonl(&mut buf).unwrap();
        let (back, _) = LabeledCorpus::read_jsonl(buf.as_slice(), "c2", None).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn undeclared_label_rejected() {
        let declared: BTreeSet<String> = ["de".to_string()].into();
        let err = LabeledCorpus::read_jsonl(
            r#"{"l1":"fr","text":"oui"}"#.as_bytes(),
            "c",
            Some(&declared),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn malformed_line_reports_position() {
        let err = LabeledCorpus::read_jsonl(
            "{\"l1\":\"a\",\"text\":\"x\"}\nnot json\n".as_bytes(),
            "c",
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn index_counts() {
        let mut c = LabeledCorpus::default();
        c.push(LabeledSentence::new("a", toks(&["x", "y", "x"]), "1"))
            .unwrap();
        c.push(LabeledSentence::new("b", toks(&["x"]), "2"))
            .unwrap();
        let idx = c.index();
        assert_eq!(idx.count("a", "x"), 2);
        assert_eq!(idx.total("a"), 3);
        assert_eq!(idx.pooled_count("x"), 3);
        assert_eq!(idx.pooled_total(), 4);
        assert_eq!(idx.vocabulary(), vec!["x", "y"]);
    }

    #[test]
    fn cleaner_pipeline() {
        let mut ngrams = NgramTable::new();
        ngrams.add_trigram("the", "US", "people", 10);
        let mut gaz = GazetteerTagger::new();
        gaz.insert("US", "GPE");
        let lex = EnglishLexicon::new(["the", "people", "love", "us", "let", "know"]);
        let cleaner = Cleaner {
            ngrams: Some(&ngrams),
            annotator: Some(&gaz),
            lexicon: Some(&lex),
            ..Default::default()
        };
        let s = LabeledSentence::new(
            "de",
            toks(&["the", "us", "people", "love", "r/europe"]),
            "1",
        );
        let out = cleaner.clean_sentence(&s).unwrap().unwrap();
        assert_eq!(out.tokens, toks(&["the", "GPE", "people", "love", "URL"]));

        let mostly_foreign = LabeledSentence::new("de", toks(&["das", "ist", "gut", "love"]), "2");
        assert_eq!(cleaner.clean_sentence(&mostly_foreign).unwrap(), None);

        let half = LabeledSentence::new("de", toks(&["das", "love"]), "3");
        assert!(cleaner.clean_sentence(&half).unwrap().is_some());
    }

    #[test]
    fn abstract_first_order() {
        let mut ngrams = NgramTable::new();
        ngrams.add_unigram("Love", 5);
        let cleaner = Cleaner {
            ngrams: Some(&ngrams),
            order: CleanupOrder::AbstractFirst,
            ..Default::default()
        };
        let mut c = LabeledCorpus::default();
        c.push(LabeledSentence::new("x", toks(&["love", "u/me"]), "1"))
            .unwrap();
        let (out, rep) = cleaner.clean(&c).unwrap();
        assert_eq!(out.sentences[0].tokens, toks(&["Love", "URL"]));
        assert_eq!(rep.kept, 1);
    }
}
