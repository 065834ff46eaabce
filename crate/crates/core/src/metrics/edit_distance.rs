//! Normalized Levenshtein distance over canonical LaTeX text.

use serde::{Deserialize, Serialize};

use crate::lexer::{canonical_form, NormalizeOptions};

/// Edit distance divided by the longer length; 0 is identical, 1 shares nothing.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdScore(f64);

impl EdScore {
    pub const WORST: EdScore = EdScore(1.0);

    /// `None` unless `value` lies in `[0, 1]`.
    pub fn new(value: f64) -> Option<Self> {
        (0.0..=1.0).contains(&value).then_some(EdScore(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdConfig {
    /// Compare canonical forms instead of raw strings.
    pub canonicalize: bool,
    pub normalize: NormalizeOptions,
}

impl Default for EdConfig {
    fn default() -> Self {
        Self { canonicalize: true, normalize: NormalizeOptions::default() }
    }
}

pub fn edit_distance(pred: &str, gt: &str) -> EdScore {
    edit_distance_with(pred, gt, &EdConfig::default())
}

pub fn edit_distance_with(pred: &str, gt: &str, cfg: &EdConfig) -> EdScore {
    let prepare = |s: &str| -> Vec<char> {
        if cfg.canonicalize {
            if let Ok(canon) = canonical_form(s, &cfg.normalize) {
                return canon.chars().collect();
            }
        }
        s.chars().collect()
    };
    let (p, g) = (prepare(pred), prepare(gt));
    let longest = p.len().max(g.len());
    if longest == 0 {
        return EdScore(0.0);
    }
    EdScore(levenshtein(&p, &g) as f64 / longest as f64)
}

/// Unit-cost Levenshtein distance.
///
/// After stripping the common prefix and suffix, the shorter side is
/// encoded as a bit pattern and the DP matrix is advanced one text column at
/// a time over 64-row blocks (Myers' bit-vector algorithm in Hyyrö's block
/// formulation), which costs O(ceil(m/64) * n) word operations.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    let (pattern, text) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if pattern.is_empty() {
        return text.len();
    }
    bit_parallel(pattern, text)
}

struct PatternMasks {
    ascii: Vec<[u64; 128]>,
    other: std::collections::HashMap<char, Vec<u64>>,
    blocks: usize,
}

impl PatternMasks {
    fn new(pattern: &[char]) -> Self {
        let blocks = pattern.len().div_ceil(64);
        let mut masks = Self { ascii: vec![[0; 128]; blocks], other: Default::default(), blocks };
        for (i, &c) in pattern.iter().enumerate() {
            let bit = 1u64 << (i % 64);
            if c.is_ascii() {
                masks.ascii[i / 64][c as usize] |= bit;
            } else {
                masks.other.entry(c).or_insert_with(|| vec![0; blocks])[i / 64] |= bit;
            }
        }
        masks
    }

    fn get(&self, c: char, block: usize) -> u64 {
        if c.is_ascii() {
            self.ascii[block][c as usize]
        } else {
            self.other.get(&c).map_or(0, |v| v[block])
        }
    }
}

fn bit_parallel(pattern: &[char], text: &[char]) -> usize {
    let m = pattern.len();
    let masks = PatternMasks::new(pattern);
    let blocks = masks.blocks;
    let last_bit = 1u64 << ((m - 1) % 64);
    const HIGH: u64 = 1 << 63;

    // vertical deltas, one bit per pattern row: +1 in pv, -1 in mv
    let mut pv = vec![!0u64; blocks];
    let mut mv = vec![0u64; blocks];
    let mut score = m as isize;
    for &c in text {
        // the boundary row grows by one per text column
        let mut carry: i8 = 1;
        for b in 0..blocks {
            let high = if b + 1 == blocks { last_bit } else { HIGH };
            let (p, n) = (pv[b], mv[b]);
            let mut eq = masks.get(c, b);
            let xv = eq | n;
            if carry < 0 {
                eq |= 1;
            }
            let xh = ((eq & p).wrapping_add(p) ^ p) | eq;
            let mut ph = n | !(xh | p);
            let mut mh = p & xh;
            let out = if ph & high != 0 {
                1
            } else if mh & high != 0 {
                -1
            } else {
                0
            };
            ph <<= 1;
            mh <<= 1;
            if carry < 0 {
                mh |= 1;
            } else if carry > 0 {
                ph |= 1;
            }
            pv[b] = mh | !(xv | ph);
            mv[b] = ph & xv;
            carry = out;
        }
        score += carry as isize;
    }
    score as usize
}
