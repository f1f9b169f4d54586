const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "gr", "pl",
    "st", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

/// Distinct lowercase pseudo-word for every index: two or more
/// consonant-vowel syllables, enumerated in bijective base 100.
pub fn pseudo_word(index: usize) -> String {
    let base = ONSETS.len() * VOWELS.len();
    // skip the one-syllable words
    let mut n = index + base + 1;
    let mut syllables = Vec::new();
    while n > 0 {
        n -= 1;
        let d = n % base;
        syllables.push(format!(
            "{}{}",
            ONSETS[d / VOWELS.len()],
            VOWELS[d % VOWELS.len()]
        ));
        n /= base;
    }
    syllables.reverse();
    syllables.concat()
}
