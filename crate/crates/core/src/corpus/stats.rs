use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use serde::Serialize;

use super::LabeledCorpus;
use crate::error::{Error, Result};

/// Lexical richness of a token stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub ttr: f64,
    /// Mean frequency rank over tokens found in the rank table.
    pub mean_word_rank: Option<f64>,
    /// Mean age of acquisition in years over tokens found in the AoA table.
    pub mean_aoa: Option<f64>,
    pub token_count: u64,
    pub type_count: u64,
}

/// `word<TAB>value` lexicon such as frequency ranks or age-of-acquisition norms.
pub fn load_value_table(r: impl BufRead, name: &str) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (word, value) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(name, n + 1, "expected word<TAB>value"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(name, n + 1, format!("bad value {value:?}")))?;
        out.insert(word.to_string(), value);
    }
    Ok(out)
}

fn lookup(table: &HashMap<String, f64>, token: &str) -> Option<f64> {
    table
        .get(token)
        .or_else(|| table.get(&token.to_lowercase()))
        .copied()
}

/// Type-token ratio, mean word rank and mean age of acquisition over a token
/// stream. Tokens missing from a table are skipped for that statistic only.
pub fn token_stats<'a>(
    tokens: impl IntoIterator<Item = &'a str>,
    rank_table: &HashMap<String, f64>,
    aoa_table: &HashMap<String, f64>,
) -> Result<CorpusStats> {
    let mut types: HashSet<&str> = HashSet::new();
    let mut n = 0u64;
    let (mut rank_sum, mut rank_n) = (0.0, 0u64);
    let (mut aoa_sum, mut aoa_n) = (0.0, 0u64);
    for t in tokens {
        n += 1;
        types.insert(t);
        if let Some(r) = lookup(rank_table, t) {
            rank_sum += r;
            rank_n += 1;
        }
        if let Some(a) = lookup(aoa_table, t) {
            aoa_sum += a;
            aoa_n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Empty("corpus has no tokens".into()));
    }
    Ok(CorpusStats {
        ttr: types.len() as f64 / n as f64,
        mean_word_rank: (rank_n > 0).then(|| rank_sum / rank_n as f64),
        mean_aoa: (aoa_n > 0).then(|| aoa_sum / aoa_n as f64),
        token_count: n,
        type_count: types.len() as u64,
    })
}

pub fn lexical_stats(
    c: &LabeledCorpus,
    rank_table: &HashMap<String, f64>,
    aoa_table: &HashMap<String, f64>,
) -> Result<CorpusStats> {
    token_stats(
        c.sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str)),
        rank_table,
        aoa_table,
    )
}
