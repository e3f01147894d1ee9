//! Tweet text normalization and tokenization.
//!
//! [`normalize`] lowercases, squeezes any run of more than three identical
//! characters down to three, and strips URLs and `@mentions`. [`tokenize`]
//! splits the result on whitespace and trims punctuation from token edges,
//! keeping a leading `#` so hashtags survive as single tokens.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

const MAX_RUN: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    #[serde(rename = "id")]
    pub tweet_id: u64,
    pub tokens: Vec<String>,
}

impl TokenizedDoc {
    /// Normalizes and tokenizes raw tweet text.
    pub fn from_text(tweet_id: u64, raw: &str) -> Self {
        TokenizedDoc {
            tweet_id,
            tokens: tokenize(&normalize(raw)),
        }
    }
}

fn strip_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"https?://\S*|@\w+").expect("valid pattern"))
}

fn squeeze_runs(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev = None;
    let mut run = 0;
    for c in text.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= MAX_RUN {
            out.push(c);
        }
    }
    out
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn normalize(text: &str) -> String {
    let mut current = text.to_lowercase();
    // Lowercasing can expand characters and whitespace collapsing can join
    // runs across removed spans, so iterate to a fixed point. Every pass
    // either shrinks the string or is the last one.
    loop {
        let squeezed = squeeze_runs(&current);
        let stripped = strip_pattern().replace_all(&squeezed, " ");
        let next = collapse_whitespace(&stripped);
        if next == current {
            return next;
        }
        current = next;
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '¡' | '¿' | '«' | '»' | '“' | '”' | '‘' | '’' | '„' | '…' | '–' | '—' | '·' | '′' | '″'
        )
}

fn trim_token(token: &str) -> &str {
    let token = token.trim_end_matches(is_punctuation);
    let mut chars = token.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !is_punctuation(c) {
            return &token[i..];
        }
        let next_is_word = chars.peek().is_some_and(|&(_, n)| !is_punctuation(n));
        if c == '#' && next_is_word {
            return &token[i..];
        }
    }
    ""
}

/// Splits normalized text into terms. Interior punctuation is kept
/// (`bem-vindo` stays whole).
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(trim_token)
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}
