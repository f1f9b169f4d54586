use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

pub const SENTENCE_START: &str = "<s>";
pub const SENTENCE_END: &str = "</s>";

/// Trigram and unigram counts for truecasing.
///
/// Trigram context words are stored lowercased, so lookups ignore the casing
/// of the left and right neighbours. The middle word keeps its casing.
#[derive(Debug, Clone, Default)]
pub struct NgramTable {
    trigrams: HashMap<(String, String, String), u64>,
    unigrams: HashMap<String, u64>,
}

impl NgramTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.trigrams.is_empty() && self.unigrams.is_empty()
    }

    pub fn add_trigram(&mut self, left: &str, word: &str, right: &str, count: u64) {
        if count == 0 {
            return;
        }
        *self
            .trigrams
            .entry((left.to_lowercase(), word.to_string(), right.to_lowercase()))
            .or_insert(0) += count;
    }

    pub fn add_unigram(&mut self, word: &str, count: u64) {
        if count == 0 {
            return;
        }
        *self.unigrams.entry(word.to_string()).or_insert(0) += count;
    }

    pub fn trigram_count(&self, left: &str, word: &str, right: &str) -> u64 {
        let key = (left.to_lowercase(), word.to_string(), right.to_lowercase());
        self.trigrams.get(&key).copied().unwrap_or(0)
    }

    pub fn unigram_count(&self, word: &str) -> u64 {
        self.unigrams.get(word).copied().unwrap_or(0)
    }

    /// Loads `w1<TAB>w2<TAB>w3<TAB>count` and `w<TAB>count` files.
    pub fn from_tsv(
        trigrams: impl BufRead,
        trigram_name: &str,
        unigrams: impl BufRead,
        unigram_name: &str,
    ) -> Result<Self> {
        let mut table = NgramTable::new();
        for (n, line) in trigrams.lines().enumerate() {
            let line = line.map_err(|e| Error::io(trigram_name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::parse(
                    trigram_name,
                    n + 1,
                    "expected 4 tab-separated fields",
                ));
            }
            let count = parse_count(f[3], trigram_name, n + 1)?;
            table.add_trigram(f[0], f[1], f[2], count);
        }
        for (n, line) in unigrams.lines().enumerate() {
            let line = line.map_err(|e| Error::io(unigram_name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 2 {
                return Err(Error::parse(
                    unigram_name,
                    n + 1,
                    "expected 2 tab-separated fields",
                ));
            }
            let count = parse_count(f[1], unigram_name, n + 1)?;
            table.add_unigram(f[0], count);
        }
        Ok(table)
    }
}

fn parse_count(field: &str, file: &str, line: usize) -> Result<u64> {
    match field.trim().parse::<u64>() {
        Ok(c) if c >= 1 => Ok(c),
        _ => Err(Error::parse(
            file,
            line,
            format!("count must be a positive integer, got {field:?}"),
        )),
    }
}

/// Lowercase, UPPERCASE and Initial-upper forms, deduplicated, in that order.
pub fn casing_variants(token: &str) -> Vec<String> {
    let lower = token.to_lowercase();
    let upper = token.to_uppercase();
    let mut chars = lower.chars();
    let initial = match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    };
    let mut out = Vec::with_capacity(3);
    for v in [lower, upper, initial] {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Picks the casing of `token` that maximizes the trigram count with its
/// neighbours, falling back to unigram counts and then to the token itself.
/// `None` neighbours are sentence boundaries. Ties keep the earlier variant
/// in [`casing_variants`] order.
pub fn truecase(
    token: &str,
    left: Option<&str>,
    right: Option<&str>,
    table: &NgramTable,
) -> String {
    let left = left.unwrap_or(SENTENCE_START);
    let right = right.unwrap_or(SENTENCE_END);
    let variants = casing_variants(token);

    let best = |score: &dyn Fn(&str) -> u64| -> Option<&String> {
        let mut best: Option<(&String, u64)> = None;
        for v in &variants {
            let c = score(v);
            if c > 0 && best.is_none_or(|(_, b)| c > b) {
                best = Some((v, c));
            }
        }
        best.map(|(v, _)| v)
    };

    if let Some(v) = best(&|v| table.trigram_count(left, v, right)) {
        return v.clone();
    }
    if let Some(v) = best(&|v| table.unigram_count(v)) {
        return v.clone();
    }
    token.to_string()
}

pub fn truecase_sentence(tokens: &[String], table: &NgramTable) -> Vec<String> {
    (0..tokens.len())
        .map(|i| {
            let left = i.checked_sub(1).map(|j| tokens[j].as_str());
            let right = tokens.get(i + 1).map(String::as_str);
            truecase(&tokens[i], left, right, table)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> NgramTable {
        let mut t = NgramTable::new();
        t.add_trigram("the", "US", "people", 120);
        t.add_trigram("the", "us", "people", 3);
        t.add_trigram("let", "us", "know", 900);
        t.add_trigram("let", "US", "know", 2);
        t.add_unigram("us", 5000);
        t.add_unigram("US", 3000);
        t.add_unigram("Paris", 40);
        t
    }

    #[test]
    fn trigram_picks_acronym() {
        assert_eq!(truecase("us", Some("the"), Some("people"), &table()), "US");
    }

    #[test]
    fn trigram_keeps_pronoun() {
        assert_eq!(truecase("us", Some("let"), Some("know"), &table()), "us");
    }

    #[test]
    fn context_lookup_ignores_case() {
        assert_eq!(truecase("us", Some("The"), Some("PEOPLE"), &table()), "US");
    }

    #[test]
    fn unigram_fallback() {
        assert_eq!(truecase("paris", Some("in"), None, &table()), "Paris");
        assert_eq!(
            truecase("US", Some("saw"), Some("yesterday"), &table()),
            "us"
        );
    }

    #[test]
    fn unknown_token_unchanged() {
        assert_eq!(truecase("Zorblax", Some("the"), None, &table()), "Zorblax");
    }

    #[test]
    fn variants() {
        assert_eq!(casing_variants("uS"), vec!["us", "US", "Us"]);
        assert_eq!(casing_variants("I"), vec!["i", "I"]);
        assert_eq!(casing_variants("."), vec!["."]);
    }

    #[test]
    fn loads_tsv() {
        let tri = "the\tUS\tpeople\t7\n\nlet\tus\tknow\t9\n";
        let uni = "us\t4\n";
        let t = NgramTable::from_tsv(tri.as_bytes(), "tri", uni.as_bytes(), "uni").unwrap();
        assert_eq!(t.trigram_count("THE", "US", "People"), 7);
        assert_eq!(t.unigram_count("us"), 4);

        let err =
            NgramTable::from_tsv("a\tb\t0\n".as_bytes(), "tri", "".as_bytes(), "uni").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
