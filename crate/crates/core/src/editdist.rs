//! Unit-cost Levenshtein distance and the adjacent-transposition predicate.
//!
//! All routines work on unicode scalar values. Persian letters and ZWNJ are
//! single scalars, so byte or grapheme level comparison would miscount.

/// Number of unit-cost insertions, deletions and substitutions.
pub type Distance = usize;

/// Levenshtein distance between `a` and `b` over unicode scalars.
pub fn levenshtein(a: &str, b: &str) -> Distance {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

/// Levenshtein distance on pre-split scalar sequences.
pub fn levenshtein_chars(a: &[char], b: &[char]) -> Distance {
    // keep the inner row on the shorter side
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Full `(|a| + 1) x (|b| + 1)` dynamic-programming table; cell `[i][j]` is
/// the distance between the first `i` scalars of `a` and the first `j` of `b`.
pub fn levenshtein_table(a: &[char], b: &[char]) -> Vec<Vec<Distance>> {
    let mut t = vec![vec![0; b.len() + 1]; a.len() + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in t[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = t[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            t[i][j] = sub.min(t[i - 1][j] + 1).min(t[i][j - 1] + 1);
        }
    }
    t
}

/// Returns `levenshtein(a, b) <= k`.
///
/// Only the diagonal band of width `2k + 1` is evaluated and the scan stops
/// as soon as every cell in a row exceeds `k`.
pub fn within_distance(a: &str, b: &str, k: usize) -> bool {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    within_distance_chars(&a, &b, k)
}

pub fn within_distance_chars(a: &[char], b: &[char], k: usize) -> bool {
    if a.len().abs_diff(b.len()) > k {
        return false;
    }
    if k == 0 {
        return a == b;
    }
    let n = b.len();
    let big = k + 1;
    // prev[j] holds D(i-1, j); cells outside the band stay at `big`
    let mut prev: Vec<usize> = (0..=n).map(|j| j.min(big)).collect();
    let mut cur = vec![big; n + 1];
    for i in 1..=a.len() {
        let lo = i.saturating_sub(k).max(1);
        let hi = (i + k).min(n);
        cur.iter_mut().for_each(|c| *c = big);
        cur[0] = i.min(big);
        let mut row_min = cur[0];
        for j in lo..=hi {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let v = sub.min(prev[j] + 1).min(cur[j - 1] + 1).min(big);
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if row_min > k {
            return false;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n] <= k
}

/// True iff `b` is `a` with exactly one pair of adjacent, unequal letters
/// swapped.
pub fn is_adjacent_transposition(a: &str, b: &str) -> bool {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    is_adjacent_transposition_chars(&a, &b)
}

pub fn is_adjacent_transposition_chars(a: &[char], b: &[char]) -> bool {
    if a.len() != b.len() || a.len() < 2 {
        return false;
    }
    let Some(i) = a.iter().zip(b).position(|(x, y)| x != y) else {
        return false;
    };
    i + 1 < a.len() && a[i] == b[i + 1] && a[i + 1] == b[i] && a[i + 2..] == b[i + 2..]
}

/// Every distinct string obtained by swapping one pair of adjacent, unequal
/// letters of `word`, in position order.
pub fn adjacent_swaps(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut out: Vec<String> = Vec::new();
    for i in 0..chars.len().saturating_sub(1) {
        if chars[i] == chars[i + 1] {
            continue;
        }
        let mut v = chars.clone();
        v.swap(i, i + 1);
        let s: String = v.into_iter().collect();
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}
