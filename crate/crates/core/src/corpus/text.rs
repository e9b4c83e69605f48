//! Char-indexed string helpers. Spans and token offsets count Unicode scalar
//! values, not bytes.

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Substring by char indices `[start, end)`; clamps to the string length.
pub fn char_slice(s: &str, start: usize, end: usize) -> String {
    s.chars().skip(start).take(end.saturating_sub(start)).collect()
}

/// Collapses whitespace runs to single spaces and trims both ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn chars_eq_ignore_case(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// First char index at which `needle` occurs in `haystack`.
pub fn find_chars(haystack: &[char], needle: &[char], ignore_case: bool) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    (0..=haystack.len() - needle.len()).find(|&i| {
        haystack[i..i + needle.len()]
            .iter()
            .zip(needle)
            .all(|(&a, &b)| if ignore_case { chars_eq_ignore_case(a, b) } else { a == b })
    })
}

/// A word-level token with char offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Whitespace split with punctuation characters broken off as their own
/// tokens. Extra cut points (char indices) further split tokens that straddle
/// them.
pub fn word_pieces(text: &str, cuts: &[usize]) -> Vec<Piece> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if !chars[i].is_alphanumeric() {
            i += 1;
        } else {
            while i < chars.len()
                && chars[i].is_alphanumeric()
                && !(i > start && cuts.contains(&i))
            {
                i += 1;
            }
        }
        out.push(Piece {
            text: chars[start..i].iter().collect(),
            start,
            end: i,
        });
    }
    out
}
