//! Glyph correspondence between two normalized layouts.
//!
//! A predicted glyph may pair with a ground-truth glyph only when both carry
//! the same character and their centers lie within `tau` of each other. The
//! pairing maximizes the number of pairs; among maximum pairings it picks one
//! with minimum total center distance.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::{GlyphBox, GlyphLayout};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("layout `{record_id}` is not normalized to the unit box")]
    UnnormalizedLayout { record_id: String },
    #[error("matching radius must be positive, got {0}")]
    InvalidTau(f64),
}

/// Matched `(pred_index, gt_index)` pairs, sorted by predicted index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub(crate) fn scoring_glyphs(layout: &GlyphLayout) -> Result<&[GlyphBox], MatchError> {
    if !layout.render_ok {
        return Ok(&[]);
    }
    if !layout.bounds.is_unit() {
        return Err(MatchError::UnnormalizedLayout { record_id: layout.record_id.clone() });
    }
    Ok(&layout.glyphs)
}

fn distance(a: &GlyphBox, b: &GlyphBox) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Matches glyphs of two normalized layouts. A layout that failed to render
/// contributes no glyphs.
pub fn match_glyphs(pred: &GlyphLayout, gt: &GlyphLayout, tau: f64) -> Result<Matching, MatchError> {
    if tau.is_nan() || tau <= 0.0 || tau.is_infinite() {
        return Err(MatchError::InvalidTau(tau));
    }
    let (p, g) = (scoring_glyphs(pred)?, scoring_glyphs(gt)?);

    let mut classes: BTreeMap<char, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, glyph) in p.iter().enumerate() {
        classes.entry(glyph.ch).or_default().0.push(i);
    }
    for (j, glyph) in g.iter().enumerate() {
        if let Some(class) = classes.get_mut(&glyph.ch) {
            class.1.push(j);
        }
    }

    let mut pairs = Vec::new();
    for (left, right) in classes.values() {
        if right.is_empty() {
            continue;
        }
        let adj: Vec<Vec<usize>> = left
            .iter()
            .map(|&i| (0..right.len()).filter(|&k| distance(&p[i], &g[right[k]]) <= tau).collect())
            .collect();
        for component in components(&adj, right.len()) {
            let (rows, cols) = component;
            let cost = |r: usize, c: usize| {
                let (i, j) = (left[rows[r]], right[cols[c]]);
                let d = distance(&p[i], &g[j]);
                (d <= tau).then_some(d)
            };
            let local = min_cost_maximum_matching(rows.len(), cols.len(), cost);
            debug_assert_eq!(local.len(), {
                let sub: Vec<Vec<usize>> = rows
                    .iter()
                    .map(|&r| (0..cols.len()).filter(|&c| adj[r].contains(&cols[c])).collect())
                    .collect();
                maximum_matching(&sub, cols.len()).iter().flatten().count()
            });
            pairs.extend(local.into_iter().map(|(r, c)| (left[rows[r]], right[cols[c]])));
        }
    }
    pairs.sort_unstable();
    Ok(Matching { pairs })
}

/// Connected components of the bipartite graph that contain at least one
/// edge, as (left indices, right indices), each sorted.
fn components(adj: &[Vec<usize>], n_right: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut right_adj = vec![Vec::new(); n_right];
    for (l, ns) in adj.iter().enumerate() {
        for &r in ns {
            right_adj[r].push(l);
        }
    }
    let mut seen_left = vec![false; adj.len()];
    let mut seen_right = vec![false; n_right];
    let mut out = Vec::new();
    for start in 0..adj.len() {
        if seen_left[start] || adj[start].is_empty() {
            continue;
        }
        let (mut ls, mut rs) = (Vec::new(), Vec::new());
        let mut queue = VecDeque::from([start]);
        seen_left[start] = true;
        while let Some(l) = queue.pop_front() {
            ls.push(l);
            for &r in &adj[l] {
                if seen_right[r] {
                    continue;
                }
                seen_right[r] = true;
                rs.push(r);
                for &l2 in &right_adj[r] {
                    if !seen_left[l2] {
                        seen_left[l2] = true;
                        queue.push_back(l2);
                    }
                }
            }
        }
        ls.sort_unstable();
        rs.sort_unstable();
        out.push((ls, rs));
    }
    out
}

/// Hopcroft–Karp maximum bipartite matching. Returns the partner of every
/// left vertex.
pub fn maximum_matching(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    const INF: usize = usize::MAX;
    let n_left = adj.len();
    let mut match_left: Vec<Option<usize>> = vec![None; n_left];
    let mut match_right: Vec<Option<usize>> = vec![None; n_right];
    let mut dist = vec![INF; n_left];

    loop {
        // layer free left vertices by BFS over alternating paths
        let mut queue = VecDeque::new();
        for l in 0..n_left {
            if match_left[l].is_none() {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = INF;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                match match_right[r] {
                    None => found = true,
                    Some(l2) if dist[l2] == INF => {
                        dist[l2] = dist[l] + 1;
                        queue.push_back(l2);
                    }
                    Some(_) => {}
                }
            }
        }
        if !found {
            break;
        }
        for l in 0..n_left {
            if match_left[l].is_none() {
                augment(l, adj, &mut match_left, &mut match_right, &mut dist);
            }
        }
    }
    match_left
}

fn augment(
    l: usize,
    adj: &[Vec<usize>],
    match_left: &mut [Option<usize>],
    match_right: &mut [Option<usize>],
    dist: &mut [usize],
) -> bool {
    for &r in &adj[l] {
        let free_or_deeper = match match_right[r] {
            None => true,
            Some(l2) => dist[l2] == dist[l] + 1 && augment(l2, adj, match_left, match_right, dist),
        };
        if free_or_deeper {
            match_left[l] = Some(r);
            match_right[r] = Some(l);
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}

/// Assignment over an `n_rows x n_cols` cost table where `None` marks a
/// forbidden pair. Forbidden pairs get a penalty larger than any total of
/// allowed costs, so the optimum uses as many allowed pairs as possible and,
/// among those, the cheapest ones. Allowed costs must lie in `[0, 2]`.
fn min_cost_maximum_matching(
    n_rows: usize,
    n_cols: usize,
    cost: impl Fn(usize, usize) -> Option<f64>,
) -> Vec<(usize, usize)> {
    let transpose = n_rows > n_cols;
    let (n, m) = if transpose { (n_cols, n_rows) } else { (n_rows, n_cols) };
    let penalty = 3.0 * (n as f64 + 1.0);
    let table: Vec<Vec<Option<f64>>> = (0..n)
        .map(|r| (0..m).map(|c| if transpose { cost(c, r) } else { cost(r, c) }).collect())
        .collect();
    let assignment = hungarian(n, m, |r, c| table[r][c].unwrap_or(penalty));
    assignment
        .into_iter()
        .enumerate()
        .filter(|&(r, c)| table[r][c].is_some())
        .map(|(r, c)| if transpose { (c, r) } else { (r, c) })
        .collect()
}

/// Kuhn–Munkres with potentials for `n <= m`; returns the column of each row.
fn hungarian(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based arrays; column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}
