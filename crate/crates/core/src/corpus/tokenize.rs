/// Prefixes that mark a web link, subreddit or user pointer.
pub const URL_PREFIXES: [&str; 5] = ["http://", "https://", "www.", "r/", "u/"];

const URL_TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', ')', ']', '}', '"', '\'', '>'];

pub fn is_url_like(token: &str) -> bool {
    URL_PREFIXES.iter().any(|p| token.starts_with(p))
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '-' | '\u{2019}')
}

/// Whitespace-and-punctuation tokenizer.
///
/// Punctuation is emitted as one token per character, apostrophes and hyphens
/// between two alphanumerics stay inside the word, and URL-like chunks are kept
/// whole apart from trailing punctuation. Casing is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut rest = chunk;
        while let Some(c) = rest.chars().next() {
            if c.is_alphanumeric() {
                break;
            }
            out.push(c.to_string());
            rest = &rest[c.len_utf8()..];
        }
        if rest.is_empty() {
            continue;
        }
        if is_url_like(rest) {
            let body = rest.trim_end_matches(URL_TRAILING);
            out.push(body.to_string());
            out.extend(rest[body.len()..].chars().map(String::from));
            continue;
        }
        split_word_chunk(rest, &mut out);
    }
    out
}

fn split_word_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut word = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let joins = is_joiner(c)
            && !word.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || joins {
            word.push(c);
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
}

/// Keep/drop decision for an ingested sentence: empty sentences and sentences
/// made of a single token without any alphabetic character are dropped.
pub fn filter_sentence(tokens: &[String]) -> bool {
    match tokens {
        [] => false,
        [only] => only.chars().any(char::is_alphabetic),
        _ => true,
    }
}
