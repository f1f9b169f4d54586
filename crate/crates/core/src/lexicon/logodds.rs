use serde::Serialize;

use crate::error::{Error, Result};

/// Log-odds ratio of a word between a group and a background, with an
/// informative Dirichlet prior, standardized by its approximate variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogOddsScore {
    pub delta: f64,
    pub variance: f64,
    pub z: f64,
}

/// `y_i`/`n_i` are the word and total counts in the group, `y_bg`/`n_bg` in the
/// background; `prior_word` and `prior_total` are the pseudo-counts for the word
/// and for the whole vocabulary.
pub fn log_odds_z(
    y_i: u64,
    n_i: u64,
    y_bg: u64,
    n_bg: u64,
    prior_word: f64,
    prior_total: f64,
) -> Result<LogOddsScore> {
    if n_i == 0 || n_bg == 0 {
        return Err(Error::Parameter("log-odds totals must be positive".into()));
    }
    if !(prior_word > 0.0 && prior_total > prior_word) {
        return Err(Error::Parameter(format!(
            "log-odds prior needs prior_total > prior_word > 0, got {prior_total} and {prior_word}"
        )));
    }
    let (y_i, n_i, y_bg, n_bg) = (y_i as f64, n_i as f64, y_bg as f64, n_bg as f64);
    let num_i = y_i + prior_word;
    let den_i = n_i + prior_total - y_i - prior_word;
    let num_bg = y_bg + prior_word;
    let den_bg = n_bg + prior_total - y_bg - prior_word;
    if den_i <= 0.0 || den_bg <= 0.0 {
        return Err(Error::Parameter(
            "log-odds denominator is not positive (word count exceeds total)".into(),
        ));
    }
    let delta = (num_i / den_i).ln() - (num_bg / den_bg).ln();
    let variance = 1.0 / num_i + 1.0 / num_bg;
    Ok(LogOddsScore {
        delta,
        variance,
        z: delta / variance.sqrt(),
    })
}
