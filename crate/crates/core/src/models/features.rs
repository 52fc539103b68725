//! Hashed word and character n-gram features.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Sorted `(bucket, weight)` pairs with unit L2 norm.
pub type SparseVec = Vec<(u32, f64)>;

/// Word unigrams plus character n-grams, hashed into `2^buckets_log2` buckets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramHasher {
    pub buckets_log2: u32,
    pub char_min: usize,
    pub char_max: usize,
}

impl Default for NgramHasher {
    fn default() -> Self {
        NgramHasher {
            buckets_log2: 18,
            char_min: 3,
            char_max: 5,
        }
    }
}

// FNV-1a, 64 bit. Stable across platforms and releases, unlike std's hasher.
fn fnv1a(prefix: u8, bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in std::iter::once(&prefix).chain(bytes) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl NgramHasher {
    pub fn buckets(&self) -> usize {
        1 << self.buckets_log2
    }

    fn bucket(&self, prefix: u8, bytes: &[u8]) -> u32 {
        (fnv1a(prefix, bytes) & ((1u64 << self.buckets_log2) - 1)) as u32
    }

    pub fn features(&self, text: &str) -> SparseVec {
        let lowered = text.to_lowercase();
        let words: Vec<&str> = lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Vec::new();
        }
        let mut counts: HashMap<u32, f64> = HashMap::new();
        for w in &words {
            *counts.entry(self.bucket(b'w', w.as_bytes())).or_default() += 1.0;
        }
        let padded: Vec<char> = format!(" {} ", words.join(" ")).chars().collect();
        let mut gram = String::new();
        for n in self.char_min..=self.char_max {
            for window in padded.windows(n) {
                gram.clear();
                gram.extend(window);
                *counts
                    .entry(self.bucket(b'c', gram.as_bytes()))
                    .or_default() += 1.0;
            }
        }
        let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
        let mut out: SparseVec = counts.into_iter().map(|(k, v)| (k, v / norm)).collect();
        out.sort_unstable_by_key(|&(k, _)| k);
        out
    }
}

pub(crate) fn dot(weights: &[f64], x: &[(u32, f64)]) -> f64 {
    x.iter().map(|&(i, v)| weights[i as usize] * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_whitespace_have_no_features() {
        let h = NgramHasher::default();
        assert!(h.features("").is_empty());
        assert!(h.features("  \t ").is_empty());
        assert!(h.features("…").is_empty());
    }

    #[test]
    fn unit_norm_sorted_and_case_insensitive() {
        let h = NgramHasher::default();
        let f = h.features("I felt … when I got a new job.");
        let norm: f64 = f.iter().map(|(_, v)| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(f, h.features("i FELT … WHEN i got a new JOB"));
    }

    #[test]
    fn hash_is_stable() {
        // FNV-1a of a single NUL byte; pinned so saved models stay valid.
        assert_eq!(fnv1a(0, b""), 0xaf63_bd4c_8601_b7df);
    }
}
