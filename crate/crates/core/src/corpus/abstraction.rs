use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use serde::Deserialize;

use super::tokenize::is_url_like;
use super::LabeledSentence;
use crate::error::{Error, Result};

pub const URL_TOKEN: &str = "URL";
pub const UNK_TOKEN: &str = "UNK";

/// A named-entity span over token positions `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub kind: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, kind: impl Into<String>) -> Self {
        EntitySpan {
            start,
            end,
            kind: kind.into(),
        }
    }
}

/// Source of entity annotations for a sentence.
pub trait EntityAnnotator: Send + Sync {
    fn annotate(&self, sentence: &LabeledSentence) -> Vec<EntitySpan>;
}

/// Set of known English word forms, matched case-insensitively.
#[derive(Debug, Clone, Default)]
pub struct EnglishLexicon {
    words: HashSet<String>,
}

impl EnglishLexicon {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        EnglishLexicon {
            words: words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }

    /// One word per line; anything after a tab is ignored.
    pub fn from_reader(r: impl BufRead, name: &str) -> Result<Self> {
        let mut words = HashSet::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::io(name, e))?;
            let w = line.split('\t').next().unwrap_or("").trim();
            if !w.is_empty() {
                words.insert(w.to_lowercase());
            }
        }
        Ok(EnglishLexicon { words })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Tokens without any alphabetic character (punctuation, numbers) and the
    /// URL/UNK placeholders always pass.
    pub fn accepts(&self, token: &str) -> bool {
        token == URL_TOKEN
            || token == UNK_TOKEN
            || !token.chars().any(char::is_alphabetic)
            || self.words.contains(&token.to_lowercase())
    }
}

fn validate_spans(spans: &[EntitySpan], len: usize) -> Result<Vec<EntitySpan>> {
    let mut sorted = spans.to_vec();
    sorted.sort_by_key(|s| (s.start, s.end));
    let mut prev_end = 0;
    for (i, s) in sorted.iter().enumerate() {
        if s.start >= s.end || s.end > len {
            return Err(Error::Validation(format!(
                "entity span [{}, {}) out of bounds for sentence of {} tokens",
                s.start, s.end, len
            )));
        }
        if i > 0 && s.start < prev_end {
            return Err(Error::Validation(format!(
                "overlapping entity spans at token {}",
                s.start
            )));
        }
        prev_end = s.end;
    }
    Ok(sorted)
}

/// Replaces entity spans by their type, URL-like tokens by `URL` and tokens
/// outside the lexicon by `UNK`.
pub fn abstract_tokens(
    tokens: &[String],
    spans: &[EntitySpan],
    lexicon: &EnglishLexicon,
) -> Result<Vec<String>> {
    abstract_tokens_with(tokens, spans, |t| lexicon.accepts(t))
}

pub(crate) fn abstract_tokens_with(
    tokens: &[String],
    spans: &[EntitySpan],
    accepts: impl Fn(&str) -> bool,
) -> Result<Vec<String>> {
    let spans = validate_spans(spans, tokens.len())?;
    let mut out = Vec::with_capacity(tokens.len());
    let mut spans = spans.into_iter().peekable();
    let mut i = 0;
    while i < tokens.len() {
        if let Some(span) = spans.next_if(|s| s.start == i) {
            out.push(span.kind);
            i = span.end;
            continue;
        }
        let t = &tokens[i];
        if is_url_like(t) {
            out.push(URL_TOKEN.to_string());
        } else if accepts(t) {
            out.push(t.clone());
        } else {
            out.push(UNK_TOKEN.to_string());
        }
        i += 1;
    }
    Ok(out)
}

pub fn abstract_sentence(
    s: &LabeledSentence,
    spans: &[EntitySpan],
    lexicon: &EnglishLexicon,
) -> Result<LabeledSentence> {
    Ok(LabeledSentence {
        l1_label: s.l1_label.clone(),
        tokens: abstract_tokens(&s.tokens, spans, lexicon)?,
        source_id: s.source_id.clone(),
    })
}

pub fn unk_fraction(tokens: &[String]) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    tokens.iter().filter(|t| *t == UNK_TOKEN).count() as f64 / tokens.len() as f64
}

/// Pre-computed spans keyed by sentence id.
#[derive(Debug, Clone, Default)]
pub struct SpanFile {
    spans: HashMap<String, Vec<EntitySpan>>,
}

#[derive(Deserialize)]
struct SpanRecord {
    id: String,
    spans: Vec<(usize, usize, String)>,
}

impl SpanFile {
    /// JSON-lines `{"id": ..., "spans": [[start, end, "TYPE"], ...]}`.
    pub fn from_jsonl(r: impl BufRead, name: &str) -> Result<Self> {
        let mut spans = HashMap::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SpanRecord = serde_json::from_str(&line)
                .map_err(|e| Error::parse(name, n + 1, e.to_string()))?;
            let list = rec
                .spans
                .into_iter()
                .map(|(s, e, k)| EntitySpan::new(s, e, k))
                .collect();
            spans.insert(rec.id, list);
        }
        Ok(SpanFile { spans })
    }
}

impl EntityAnnotator for SpanFile {
    fn annotate(&self, sentence: &LabeledSentence) -> Vec<EntitySpan> {
        self.spans
            .get(&sentence.source_id)
            .cloned()
            .unwrap_or_default()
    }
}

/// Dictionary tagger: capitalized tokens past the sentence start that begin
/// a gazetteer entry. Multi-token entries match greedily, longest first.
#[derive(Debug, Clone, Default)]
pub struct GazetteerTagger {
    entries: HashMap<String, String>,
    max_len: usize,
}

impl GazetteerTagger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, phrase: &str, kind: &str) {
        let key: Vec<String> = phrase.split_whitespace().map(str::to_lowercase).collect();
        if key.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(key.len());
        self.entries.insert(key.join(" "), kind.to_string());
    }

    /// TSV `phrase<TAB>TYPE`.
    pub fn from_tsv(r: impl BufRead, name: &str) -> Result<Self> {
        let mut g = GazetteerTagger::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match line.split_once('\t') {
                Some((phrase, kind)) if !kind.trim().is_empty() => g.insert(phrase, kind.trim()),
                _ => return Err(Error::parse(name, n + 1, "expected phrase<TAB>TYPE")),
            }
        }
        Ok(g)
    }
}

impl EntityAnnotator for GazetteerTagger {
    fn annotate(&self, sentence: &LabeledSentence) -> Vec<EntitySpan> {
        let toks = &sentence.tokens;
        let mut out = Vec::new();
        let mut i = 1;
        while i < toks.len() {
            let capitalized = toks[i].chars().next().is_some_and(char::is_uppercase);
            let mut matched = 0;
            if capitalized {
                for len in (1..=self.max_len.min(toks.len() - i)).rev() {
                    let key = toks[i..i + len]
                        .iter()
                        .map(|t| t.to_lowercase())
                        .collect::<Vec<_>>()
                        .join(" ");
                    if let Some(kind) = self.entries.get(&key) {
                        out.push(EntitySpan::new(i, i + len, kind.clone()));
                        matched = len;
                        break;
                    }
                }
            }
            i += matched.max(1);
        }
        out
    }
}
