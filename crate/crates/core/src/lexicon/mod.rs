//! Focus-set construction: etymological roots, synonym sets, dominance and
//! cultural-bias filtering.

mod etymology;
mod logodds;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use etymology::{normalize_node, EtymologyGraph, LoadWarning};
pub use logodds::{log_odds_z, LogOddsScore};

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};

/// Language tag of the words the focus set is built from.
pub const ENGLISH_TAG: &str = "eng";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    N,
    V,
    Adj,
}

impl Pos {
    pub fn parse(s: &str) -> Option<Pos> {
        match s.trim() {
            "N" | "n" | "NOUN" | "noun" => Some(Pos::N),
            "V" | "v" | "VERB" | "verb" => Some(Pos::V),
            "Adj" | "ADJ" | "adj" | "A" | "a" | "s" => Some(Pos::Adj),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sense {
    pub pos: Pos,
    pub synonyms: Vec<String>,
}

/// Word senses in prominence order, restricted to nouns, verbs and adjectives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SenseInventory {
    entries: BTreeMap<String, Vec<(usize, Sense)>>,
}

#[derive(Deserialize)]
struct SenseRecord {
    word: String,
    senses: Vec<RawSense>,
}

#[derive(Deserialize)]
struct RawSense {
    pos: String,
    synonyms: Vec<String>,
}

impl SenseInventory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sense to `word`; senses keep insertion order.
    pub fn add_sense(&mut self, word: &str, pos: Pos, synonyms: &[&str]) {
        let list = self.entries.entry(word.to_string()).or_default();
        let rank = list.last().map_or(0, |(r, _)| r + 1);
        list.push((
            rank,
            Sense {
                pos,
                synonyms: synonyms.iter().map(|s| s.to_string()).collect(),
            },
        ));
    }

    /// JSON-lines `{"word": ..., "senses": [{"pos": "N", "synonyms": [...]}, ...]}`.
    /// Senses with other parts of speech are skipped but still count toward
    /// the sense rank.
    pub fn from_jsonl(r: impl BufRead, name: &str) -> Result<Self> {
        let mut inv = SenseInventory::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SenseRecord = serde_json::from_str(&line)
                .map_err(|e| Error::parse(name, n + 1, e.to_string()))?;
            let list = inv.entries.entry(rec.word).or_default();
            let offset = list.last().map_or(0, |(r, _)| r + 1);
            for (i, s) in rec.senses.into_iter().enumerate() {
                if let Some(pos) = Pos::parse(&s.pos) {
                    list.push((
                        offset + i,
                        Sense {
                            pos,
                            synonyms: s.synonyms,
                        },
                    ));
                }
            }
        }
        Ok(inv)
    }

    pub fn senses(&self, word: &str) -> &[(usize, Sense)] {
        self.entries.get(word).map_or(&[], Vec::as_slice)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Every word mentioned as a head word or a synonym.
    pub fn all_members(&self) -> HashSet<&str> {
        let mut out: HashSet<&str> = self.words().collect();
        for list in self.entries.values() {
            for (_, s) in list {
                out.extend(s.synonyms.iter().map(String::as_str));
            }
        }
        out
    }
}

/// Corpus part-of-speech counts per word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PosCounts {
    counts: HashMap<String, BTreeMap<Pos, u64>>,
}

impl PosCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: &str, pos: Pos, count: u64) {
        *self
            .counts
            .entry(word.to_string())
            .or_default()
            .entry(pos)
            .or_insert(0) += count;
    }

    /// TSV `word<TAB>POS<TAB>count`; rows with other tags are ignored.
    pub fn from_tsv(r: impl BufRead, name: &str) -> Result<Self> {
        let mut pc = PosCounts::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(name, n + 1, "expected word<TAB>POS<TAB>count"));
            }
            let count: u64 = f[2]
                .trim()
                .parse()
                .map_err(|_| Error::parse(name, n + 1, format!("bad count {:?}", f[2])))?;
            if let Some(pos) = Pos::parse(f[1]) {
                pc.add(f[0], pos, count);
            }
        }
        Ok(pc)
    }

    /// Most frequent tag; ties prefer N, then V, then Adj.
    pub fn most_frequent(&self, word: &str) -> Option<Pos> {
        let m = self.counts.get(word)?;
        let mut best: Option<(Pos, u64)> = None;
        for (&pos, &c) in m {
            if c > 0 && best.is_none_or(|(_, b)| c > b) {
                best = Some((pos, c));
            }
        }
        best.map(|(p, _)| p)
    }
}

/// Synonyms sharing one sense and part of speech, with the etymological
/// roots of each member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymSet {
    pub words: Vec<String>,
    pub pos: Pos,
    pub roots: BTreeMap<String, BTreeSet<String>>,
    pub sense_rank: usize,
}

impl SynonymSet {
    /// Sorted members joined by `|`; identifies the set regardless of order.
    pub fn key(&self) -> String {
        let mut w: Vec<&str> = self.words.iter().map(String::as_str).collect();
        w.sort_unstable();
        w.join("|")
    }

    /// True when at least two members have disjoint root sets.
    pub fn has_distinct_roots(&self) -> bool {
        let sets: Vec<&BTreeSet<String>> = self
            .words
            .iter()
            .filter_map(|w| self.roots.get(w))
            .collect();
        sets.iter()
            .enumerate()
            .any(|(i, a)| sets[i + 1..].iter().any(|b| a.is_disjoint(b)))
    }

    fn is_viable(&self) -> bool {
        self.words.len() >= 2 && self.has_distinct_roots()
    }

    fn retain_words(&mut self, keep: impl Fn(&str) -> bool) {
        self.words.retain(|w| keep(w));
        let words: HashSet<&String> = self.words.iter().collect();
        self.roots.retain(|w, _| words.contains(w));
    }
}

fn english_node(word: &str) -> String {
    format!("{ENGLISH_TAG}:{word}")
}

/// Candidate synonym sets: for every English word in the etymology graph,
/// the first sense of its most frequent part of speech, kept when it has at
/// least two members with disjoint root sets. A word occurring in several
/// candidates stays only in its own first-sense set (or, lacking one, in the
/// first candidate in head-word order).
pub fn build_candidate_synsets(
    inventory: &SenseInventory,
    pos_counts: &PosCounts,
    graph: &EtymologyGraph,
) -> Vec<SynonymSet> {
    let prefix = format!("{ENGLISH_TAG}:");
    let mut candidates: Vec<SynonymSet> = Vec::new();
    let mut seen_keys: HashSet<String> = HashSet::new();
    let mut own_key: HashMap<String, String> = HashMap::new();

    for node in graph.nodes() {
        let Some(head) = node.strip_prefix(&prefix) else {
            continue;
        };
        let senses = inventory.senses(head);
        let Some((_, first)) = senses.first() else {
            continue;
        };
        let pos = pos_counts.most_frequent(head).unwrap_or(first.pos);
        let Some((rank, sense)) = senses.iter().find(|(_, s)| s.pos == pos) else {
            continue;
        };
        let mut words = vec![head.to_string()];
        for s in &sense.synonyms {
            if !s.is_empty() && !words.contains(s) {
                words.push(s.clone());
            }
        }
        let roots = words
            .iter()
            .map(|w| (w.clone(), graph.root_paths(&english_node(w))))
            .collect();
        let set = SynonymSet {
            words,
            pos,
            roots,
            sense_rank: *rank,
        };
        if !set.is_viable() {
            continue;
        }
        let key = set.key();
        own_key.insert(head.to_string(), key.clone());
        if seen_keys.insert(key) {
            candidates.push(set);
        }
    }

    let mut home: HashMap<String, String> = HashMap::new();
    for set in &candidates {
        let key = set.key();
        for w in &set.words {
            match own_key.get(w) {
                Some(k) if seen_keys.contains(k) => {
                    home.insert(w.clone(), k.clone());
                }
                _ => {
                    home.entry(w.clone()).or_insert_with(|| key.clone());
                }
            }
        }
    }
    candidates
        .into_iter()
        .filter_map(|mut set| {
            let key = set.key();
            set.retain_words(|w| home.get(w) == Some(&key));
            set.is_viable().then_some(set)
        })
        .collect()
}

/// False when one member takes more than `threshold` of the synset's total
/// count, or the total is zero.
pub fn dominance_filter(counts: &[u64], threshold: f64) -> bool {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return false;
    }
    counts.iter().all(|&c| c as f64 / total as f64 <= threshold)
}

pub fn synset_counts(set: &SynonymSet, idx: &CorpusIndex) -> Vec<u64> {
    set.words.iter().map(|w| idx.pooled_count(w)).collect()
}

/// A word's strongest association with one label against the pooled rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogOddsResult {
    pub word: String,
    pub group: String,
    pub delta: f64,
    pub variance: f64,
    pub z: f64,
}

/// Scores `word` for every label against all other labels pooled, with prior
/// `alpha0 * pooled relative frequency`. Returns the label with the largest
/// `|z|` (first label on ties), or `None` without evidence.
pub fn strongest_association(
    word: &str,
    idx: &CorpusIndex,
    alpha0: f64,
) -> Result<Option<LogOddsResult>> {
    let pooled = idx.pooled_count(word);
    let pooled_total = idx.pooled_total();
    if pooled == 0 || pooled_total == 0 {
        return Ok(None);
    }
    let prior_word = alpha0 * pooled as f64 / pooled_total as f64;
    let mut best: Option<LogOddsResult> = None;
    for label in idx.labels() {
        let n_i = idx.total(label);
        let n_bg = pooled_total - n_i;
        if n_i == 0 || n_bg == 0 {
            continue;
        }
        let y_i = idx.count(label, word);
        let s = log_odds_z(y_i, n_i, pooled - y_i, n_bg, prior_word, alpha0)?;
        if best.as_ref().is_none_or(|b| s.z.abs() > b.z.abs()) {
            best = Some(LogOddsResult {
                word: word.to_string(),
                group: label.to_string(),
                delta: s.delta,
                variance: s.variance,
                z: s.z,
            });
        }
    }
    Ok(best)
}

/// The curated synonym sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FocusSet {
    pub synsets: Vec<SynonymSet>,
    pub words: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
struct FocusSetFile {
    synsets: Vec<SynsetRecord>,
}

#[derive(Serialize, Deserialize)]
struct SynsetRecord {
    pos: Pos,
    words: Vec<String>,
    roots: BTreeMap<String, Vec<String>>,
}

impl FocusSet {
    /// Fails when a word belongs to two synsets.
    pub fn new(synsets: Vec<SynonymSet>) -> Result<Self> {
        let mut words = BTreeSet::new();
        for s in &synsets {
            for w in &s.words {
                if !words.insert(w.clone()) {
                    return Err(Error::Validation(format!(
                        "word {w:?} appears in two synsets"
                    )));
                }
            }
        }
        Ok(FocusSet { synsets, words })
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn to_json(&self) -> String {
        let file = FocusSetFile {
            synsets: self
                .synsets
                .iter()
                .map(|s| SynsetRecord {
                    pos: s.pos,
                    words: s.words.clone(),
                    roots: s
                        .roots
                        .iter()
                        .map(|(w, r)| (w.clone(), r.iter().cloned().collect()))
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("focus set serializes")
    }

    pub fn write_json(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.to_json().as_bytes())?;
        w.write_all(b"\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: FocusSetFile = serde_json::from_str(s)?;
        FocusSet::new(
            file.synsets
                .into_iter()
                .enumerate()
                .map(|(i, r)| SynonymSet {
                    words: r.words,
                    pos: r.pos,
                    roots: r
                        .roots
                        .into_iter()
                        .map(|(w, v)| (w, v.into_iter().collect()))
                        .collect(),
                    sense_rank: i,
                })
                .collect(),
        )
    }
}

/// Removes words associated with a single label (`|z| >= threshold`) and then
/// synsets left with fewer than two members or without distinct roots.
/// Returns the focus set and the eliminated words.
pub fn cultural_filter(
    candidates: &[SynonymSet],
    idx: &CorpusIndex,
    alpha0: f64,
    threshold: f64,
) -> Result<(FocusSet, Vec<LogOddsResult>)> {
    let mut words: Vec<&str> = candidates
        .iter()
        .flat_map(|s| s.words.iter().map(String::as_str))
        .collect();
    words.sort_unstable();
    words.dedup();
    let scored: Vec<Option<LogOddsResult>> = words
        .par_iter()
        .map(|w| strongest_association(w, idx, alpha0))
        .collect::<Result<_>>()?;
    let eliminated: Vec<LogOddsResult> = scored
        .into_iter()
        .flatten()
        .filter(|r| r.z.abs() >= threshold)
        .collect();
    let dropped: HashSet<&str> = eliminated.iter().map(|r| r.word.as_str()).collect();
    let synsets = candidates
        .iter()
        .cloned()
        .filter_map(|mut s| {
            s.retain_words(|w| !dropped.contains(w));
            s.is_viable().then_some(s)
        })
        .collect();
    Ok((FocusSet::new(synsets)?, eliminated))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocusSetParams {
    pub dominance_threshold: f64,
    pub logodds_threshold: f64,
    pub alpha0: f64,
}

impl Default for FocusSetParams {
    fn default() -> Self {
        FocusSetParams {
            dominance_threshold: 0.9,
            logodds_threshold: 5.0,
            alpha0: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FocusSetReport {
    pub candidates: usize,
    pub after_dominance: usize,
    pub synsets: usize,
    pub words: usize,
    pub eliminated: Vec<LogOddsResult>,
}

/// Candidates, then the dominance filter on pooled counts, then the cultural filter.
pub fn build_focus_set(
    inventory: &SenseInventory,
    pos_counts: &PosCounts,
    graph: &EtymologyGraph,
    idx: &CorpusIndex,
    params: &FocusSetParams,
) -> Result<(FocusSet, FocusSetReport)> {
    let candidates = build_candidate_synsets(inventory, pos_counts, graph);
    let balanced: Vec<SynonymSet> = candidates
        .iter()
        .filter(|s| dominance_filter(&synset_counts(s, idx), params.dominance_threshold))
        .cloned()
        .collect();
    let (fs, eliminated) =
        cultural_filter(&balanced, idx, params.alpha0, params.logodds_threshold)?;
    let report = FocusSetReport {
        candidates: candidates.len(),
        after_dominance: balanced.len(),
        synsets: fs.len(),
        words: fs.words.len(),
        eliminated,
    };
    Ok((fs, report))
}

/// Control word list: `n` words drawn from the corpus vocabulary that occur at
/// least `min_count` times, contain a lowercase letter, are not in `exclude`
/// and pass the cultural filter.
pub fn random_focus_words(
    idx: &CorpusIndex,
    exclude: &HashSet<&str>,
    n: usize,
    min_count: u64,
    params: &FocusSetParams,
    seed: u64,
) -> Result<Vec<String>> {
    let pool: Vec<&str> = idx
        .vocabulary()
        .into_iter()
        .filter(|w| idx.pooled_count(w) >= min_count)
        .filter(|w| w.chars().any(char::is_lowercase))
        .filter(|w| !exclude.contains(w))
        .collect();
    let mut neutral = Vec::with_capacity(pool.len());
    for w in pool {
        let keep = strongest_association(w, idx, params.alpha0)?
            .is_none_or(|r| r.z.abs() < params.logodds_threshold);
        if keep {
            neutral.push(w);
        }
    }
    if neutral.len() < n {
        return Err(Error::Validation(format!(
            "only {} eligible words for a random focus set of {n}",
            neutral.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<String> = neutral
        .choose_multiple(&mut rng, n)
        .map(|w| w.to_string())
        .collect();
    picked.sort_unstable();
    Ok(picked)
}
