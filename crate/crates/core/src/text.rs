//! Tokenization, lemmatization and offset helpers shared by the index,
//! the validator oracles and the dataset loader.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Word tokens: maximal runs of alphanumeric characters.
pub fn word_tokens(text: &str) -> Vec<&str> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Whitespace tokens, used for the `tokens` field of annotated sentences.
pub fn whitespace_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

/// Byte range of the character span `[start, end)`.
pub fn char_range(text: &str, start: usize, end: usize) -> Option<std::ops::Range<usize>> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let b_start = indices.nth(start)?;
    let b_end = if end == start {
        b_start
    } else {
        indices.nth(end - start - 1)?
    };
    Some(b_start..b_end)
}

/// Substring by character offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    char_range(text, start, end).map(|r| &text[r])
}

/// Character offsets of the first occurrence of `needle`, trying an exact
/// match first and a case-insensitive one second.
pub fn find_char_span(text: &str, needle: &str) -> Option<(usize, usize)> {
    if needle.is_empty() {
        return None;
    }
    let to_chars = |byte: usize| text[..byte].chars().count();
    if let Some(b) = text.find(needle) {
        let start = to_chars(b);
        return Some((start, start + needle.chars().count()));
    }
    // Lowercasing can change byte lengths, so scan char windows instead.
    let hay: Vec<char> = text.chars().collect();
    let pat: Vec<char> = needle.chars().collect();
    if pat.len() > hay.len() {
        return None;
    }
    (0..=hay.len() - pat.len())
        .find(|&i| {
            hay[i..i + pat.len()]
                .iter()
                .zip(&pat)
                .all(|(a, b)| a.to_lowercase().eq(b.to_lowercase()))
        })
        .map(|i| (i, i + pat.len()))
}

/// How corpus tokens and queries are normalized before matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Exact,
    Lowercase,
    #[default]
    Lemmatized,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Exact => "exact",
            Normalization::Lowercase => "lowercase",
            Normalization::Lemmatized => "lemmatized",
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Normalization::Exact),
            "lowercase" => Ok(Normalization::Lowercase),
            "lemmatized" => Ok(Normalization::Lemmatized),
            other => Err(format!("unknown normalization mode `{other}`")),
        }
    }
}

const BUILTIN_LEMMAS: &str = include_str!("lemmas.tsv");

/// Table-driven lemmatizer with suffix-stripping fallback.
///
/// The output is a matching key, not a display form: regular forms are
/// reduced by stripping inflectional suffixes and a final `e`, so
/// "release", "released" and "releases" share a key.
#[derive(Clone, Debug)]
pub struct Lemmatizer {
    table: HashMap<String, String>,
}

impl Default for Lemmatizer {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Lemmatizer {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEMMAS)
    }

    /// Loads a `form<TAB>lemma` table; entries extend the builtin table.
    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let mut lem = Self::builtin();
        let extra = Self::parse(&fs::read_to_string(path)?);
        lem.table.extend(extra.table);
        Ok(lem)
    }

    fn parse(src: &str) -> Self {
        let table = src
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .filter_map(|l| {
                let (form, lemma) = l.split_once('\t')?;
                Some((form.trim().to_lowercase(), lemma.trim().to_lowercase()))
            })
            .collect();
        Lemmatizer { table }
    }

    /// Dictionary base form, if the table knows the word.
    pub fn base_form(&self, word: &str) -> Option<&str> {
        self.table.get(&word.to_lowercase()).map(String::as_str)
    }

    /// Matching key for a word (always lowercase).
    pub fn lemmatize(&self, word: &str) -> String {
        let lower = word.to_lowercase();
        let base = match self.table.get(&lower) {
            Some(l) => l.clone(),
            None => strip_suffixes(&lower),
        };
        strip_final_e(base)
    }
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn undouble(mut stem: String) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 3 && b[n - 1] == b[n - 2] && !is_vowel(b[n - 1]) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        stem.pop();
    }
    stem
}

fn strip_suffixes(w: &str) -> String {
    if !w.is_ascii() || w.len() <= 3 {
        return w.to_owned();
    }
    if let Some(stem) = w.strip_suffix("ies").or_else(|| w.strip_suffix("ied")) {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = w.strip_suffix("ing") {
        if stem.len() >= 3 && stem.bytes().any(is_vowel) {
            return undouble(stem.to_owned());
        }
    }
    if let Some(stem) = w.strip_suffix("ed") {
        if stem.len() >= 3 && stem.bytes().any(is_vowel) {
            return undouble(stem.to_owned());
        }
    }
    if let Some(stem) = w.strip_suffix("es") {
        if stem.ends_with("ss") || stem.ends_with("sh") || stem.ends_with("ch") || stem.ends_with('x') {
            return stem.to_owned();
        }
    }
    if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
        return w[..w.len() - 1].to_owned();
    }
    w.to_owned()
}

fn strip_final_e(mut w: String) -> String {
    if w.len() > 4 && w.is_ascii() && w.ends_with('e') && !w.ends_with("ee") {
        w.pop();
    }
    w
}

/// Applies a normalization mode to one token.
pub fn normalize_token(token: &str, mode: Normalization, lemmatizer: &Lemmatizer) -> String {
    match mode {
        Normalization::Exact => token.to_owned(),
        Normalization::Lowercase => token.to_lowercase(),
        Normalization::Lemmatized => lemmatizer.lemmatize(token),
    }
}

/// Normalized word tokens of a text.
pub fn normalized_tokens(text: &str, mode: Normalization, lemmatizer: &Lemmatizer) -> Vec<String> {
    word_tokens(text)
        .into_iter()
        .map(|t| normalize_token(t, mode, lemmatizer))
        .collect()
}
