//! Candidate deduplication and modal vote aggregation for selection.

use alloc::string::String;
use alloc::vec::Vec;

use crate::candidate::Candidate;
use crate::text::normalize_whitespace;

/// Keeps the first candidate of each whitespace-normalised SQL text,
/// preserving input order. Returns indices into `candidates`.
pub fn dedupe_survivors(candidates: &[&Candidate]) -> Vec<usize> {
    let mut seen: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let key = normalize_whitespace(&c.sql);
        if !seen.contains(&key) {
            seen.push(key);
            out.push(i);
        }
    }
    out
}

/// The most frequent vote; ties go to whichever tied value was voted first.
/// `None` entries (unparsable rounds) are ignored. Returns `None` when no
/// round produced a vote.
pub fn modal_vote<T: PartialEq + Copy>(votes: &[Option<T>]) -> Option<T> {
    let valid: Vec<T> = votes.iter().flatten().copied().collect();
    let mut best: Option<(T, usize)> = None;
    for &v in &valid {
        let count = valid.iter().filter(|&&x| x == v).count();
        // strict > keeps the earliest-voted value among equals
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((v, count));
        }
    }
    best.map(|(v, _)| v)
}
