//! Small string helpers shared by the schema and extraction modules.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub(crate) fn chars_eq_ci(a: char, b: char) -> bool {
    if a.is_ascii() && b.is_ascii() {
        return a.eq_ignore_ascii_case(&b);
    }
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

pub(crate) fn eq_ci(a: &str, b: &str) -> bool {
    a.chars().count() == b.chars().count() && a.chars().zip(b.chars()).all(|(x, y)| chars_eq_ci(x, y))
}

/// Lowercased key used for case-insensitive maps and uniqueness checks.
pub(crate) fn fold(s: &str) -> String {
    s.chars().flat_map(char::to_lowercase).collect()
}

/// Case-insensitive match of `needle` starting at byte `at`; returns the end offset.
pub(crate) fn match_at(hay: &str, at: usize, needle: &str) -> Option<usize> {
    let mut rest = hay[at..].char_indices();
    let mut end = at;
    for nc in needle.chars() {
        let (i, hc) = rest.next()?;
        if !chars_eq_ci(hc, nc) {
            return None;
        }
        end = at + i + hc.len_utf8();
    }
    Some(end)
}

pub(crate) fn char_before(hay: &str, at: usize) -> Option<char> {
    hay[..at].chars().next_back()
}

pub(crate) fn char_after(hay: &str, at: usize) -> Option<char> {
    hay[at..].chars().next()
}

/// Whether `hay[range]` is delimited by non-identifier characters on each side
/// where the matched text itself starts or ends with an identifier character.
pub(crate) fn bounded(hay: &str, range: &Range<usize>) -> bool {
    let text = &hay[range.clone()];
    let left_ok = match text.chars().next() {
        Some(c) if is_ident_char(c) => !char_before(hay, range.start).is_some_and(is_ident_char),
        _ => true,
    };
    let right_ok = match text.chars().next_back() {
        Some(c) if is_ident_char(c) => !char_after(hay, range.end).is_some_and(is_ident_char),
        _ => true,
    };
    left_ok && right_ok
}

/// All non-overlapping, word-bounded, case-insensitive occurrences of `needle`.
pub(crate) fn find_words_ci(hay: &str, needle: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    if needle.is_empty() {
        return out;
    }
    let mut next_allowed = 0;
    for (i, _) in hay.char_indices() {
        if i < next_allowed {
            continue;
        }
        if let Some(end) = match_at(hay, i, needle) {
            let range = i..end;
            if bounded(hay, &range) {
                next_allowed = end;
                out.push(range);
            }
        }
    }
    out
}

/// Collapses every whitespace run to a single space and trims the ends.
pub fn normalize_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}
