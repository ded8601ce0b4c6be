//! Order-indifferent fuzzy string similarity (token sort ratio).

/// Normalize for comparison: lowercase, drop punctuation, split on
/// whitespace, sort the tokens, and re-join with single spaces.
fn token_sort_key(s: &str) -> String {
    let cleaned: String = s
        .to_lowercase()
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect();
    let mut tokens: Vec<&str> = cleaned.split_whitespace().collect();
    tokens.sort_unstable();
    tokens.join(" ")
}

/// Character-level edit distance with insertions and deletions only
/// (no substitutions): |a| + |b| - 2 * LCS(a, b).
fn indel_distance(a: &[char], b: &[char]) -> usize {
    let (m, n) = (a.len(), b.len());
    let mut prev = vec![0usize; n + 1];
    let mut cur = vec![0usize; n + 1];
    for i in 1..=m {
        for j in 1..=n {
            cur[j] = if a[i - 1] == b[j - 1] {
                prev[j - 1] + 1
            } else {
                prev[j].max(cur[j - 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let lcs = prev[n];
    m + n - 2 * lcs
}

/// Similarity in [0, 100] between the token-sorted normalizations of `a` and
/// `b`: 100 * (1 - indel / (|a'| + |b'|)). Two empty strings score 100.
pub fn token_sort_ratio(a: &str, b: &str) -> f64 {
    let ka: Vec<char> = token_sort_key(a).chars().collect();
    let kb: Vec<char> = token_sort_key(b).chars().collect();
    let total = ka.len() + kb.len();
    if total == 0 {
        return 100.0;
    }
    let dist = indel_distance(&ka, &kb);
    100.0 * (1.0 - dist as f64 / total as f64)
}
