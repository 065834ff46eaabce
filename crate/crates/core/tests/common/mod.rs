//! Generators and reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod mock;

use formulakit::render::{Bounds, GlyphBox, GlyphLayout};
use rand::seq::SliceRandom;
use rand::Rng;

const ATOMS: &[&str] = &[
    "x", "y", "a", "b", "1", "2", "+", "-", "=", "(", ")", "[", "]", "<", ">", ",", ".", "'", "|", "α", "√", "ℝ",
];
const SYMBOLS: &[&str] = &[
    r"\alpha", r"\beta", r"\infty", r"\pi", r"\le", r"\ge", r"\leq", r"\cdot", r"\times", r"\sum", r"\int",
    r"\partial", r"\{", r"\}", r"\$", r"\%", r"\,", r"\;", r"\!", r"\|", r"\(", r"\)", r"\[", r"\]",
];
const ENVS: &[&str] = &["matrix", "pmatrix", "cases", "aligned", "array"];

fn space(rng: &mut impl Rng) -> &'static str {
    [" ", "", "", "  ", "\n", "\t"].choose(rng).unwrap()
}

fn push_group(rng: &mut impl Rng, depth: u32, out: &mut String) {
    out.push('{');
    push_expr(rng, depth + 1, out);
    out.push('}');
}

fn push_script_arg(rng: &mut impl Rng, depth: u32, out: &mut String) {
    match rng.gen_range(0..3) {
        0 => out.push_str(ATOMS.choose(rng).unwrap()),
        1 => out.push_str(SYMBOLS[..9].choose(rng).unwrap()),
        _ => push_group(rng, depth, out),
    }
}

fn push_item(rng: &mut impl Rng, depth: u32, out: &mut String) {
    let nested = depth < 4;
    match rng.gen_range(0..if nested { 13 } else { 5 }) {
        0 | 1 => out.push_str(ATOMS.choose(rng).unwrap()),
        2 => out.push_str(SYMBOLS.choose(rng).unwrap()),
        3 => out.push_str(space(rng)),
        4 => {
            out.push_str(ATOMS.choose(rng).unwrap());
            out.push_str(space(rng));
            out.push(if rng.gen() { '^' } else { '_' });
            out.push_str(space(rng));
            push_script_arg(rng, depth, out);
        }
        5 | 6 => push_group(rng, depth, out),
        7 => {
            out.push_str([r"\frac", r"\dfrac", r"\tfrac", r"\binom"].choose(rng).unwrap());
            push_group(rng, depth, out);
            out.push_str(space(rng));
            push_group(rng, depth, out);
        }
        8 => {
            out.push_str(r"\sqrt");
            if rng.gen() {
                out.push_str("[3]");
            }
            push_group(rng, depth, out);
        }
        9 => {
            let (l, r) = *[("(", ")"), ("[", "]"), (r"\{", r"\}"), (".", "|"), ("|", ".")].choose(rng).unwrap();
            out.push_str(r"\left");
            out.push_str(l);
            push_expr(rng, depth + 1, out);
            out.push_str(r"\right");
            out.push_str(r);
        }
        10 => {
            let env = ENVS.choose(rng).unwrap();
            out.push_str(&format!(r"\begin{{{env}}}"));
            if *env == "array" {
                out.push_str("{cc}");
            }
            let rows = rng.gen_range(1..3);
            for row in 0..rows {
                if row > 0 {
                    out.push_str(r" \\ ");
                }
                push_expr(rng, depth + 1, out);
                out.push_str(" & ");
                push_expr(rng, depth + 1, out);
            }
            out.push_str(&format!(r"\end{{{env}}}"));
        }
        11 => {
            out.push_str([r"\mathbf", r"\mathrm", r"\hat", r"\overline", r"\text"].choose(rng).unwrap());
            out.push_str(space(rng));
            push_group(rng, depth, out);
        }
        _ => {
            out.push_str("% note ");
            out.push_str(ATOMS.choose(rng).unwrap());
            out.push('\n');
        }
    }
}

fn push_expr(rng: &mut impl Rng, depth: u32, out: &mut String) {
    for _ in 0..rng.gen_range(0..6) {
        push_item(rng, depth, out);
    }
}

/// A random well-formed LaTeX fragment: balanced groups, matched
/// environments, no trailing backslash.
pub fn random_latex(rng: &mut impl Rng) -> String {
    let mut out = String::new();
    push_expr(rng, 0, &mut out);
    out
}

/// Random text over a mix of ASCII, Greek, CJK, combining marks and emoji.
pub fn random_unicode(rng: &mut impl Rng, max_len: usize) -> String {
    const POOLS: &[&[char]] = &[
        &['a', 'b', 'c', 'x', '{', '}', '\\', '^', '_', ' '],
        &['α', 'β', 'γ', 'Δ'],
        &['数', '学', '式'],
        &['\u{301}', '\u{308}'],
        &['😀', '𝔸', '∑'],
    ];
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            let pool = if rng.gen_bool(0.7) { POOLS[0] } else { POOLS.choose(rng).unwrap() };
            *pool.choose(rng).unwrap()
        })
        .collect()
}

/// Textbook Wagner–Fischer table.
pub fn dp_levenshtein(a: &[char], b: &[char]) -> usize {
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in table[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = table[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            table[i][j] = sub.min(table[i - 1][j] + 1).min(table[i][j - 1] + 1);
        }
    }
    table[a.len()][b.len()]
}

pub fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// A unit-box layout with up to `max_glyphs` glyphs drawn from `alphabet`.
pub fn random_layout(rng: &mut impl Rng, id: &str, max_glyphs: usize, alphabet: &[char]) -> GlyphLayout {
    let n = rng.gen_range(0..=max_glyphs);
    let glyphs = (0..n)
        .map(|_| GlyphBox {
            ch: *alphabet.choose(rng).unwrap(),
            x: rng.gen_range(0.0..=1.0),
            y: rng.gen_range(0.0..=1.0),
            w: rng.gen_range(0.01..0.2),
            h: rng.gen_range(0.01..0.2),
        })
        .collect();
    GlyphLayout { record_id: id.into(), render_ok: true, error_message: String::new(), bounds: Bounds::UNIT, glyphs }
}

/// Exhaustive search over all identity-compatible matchings within `tau`.
/// Returns the maximum cardinality and the least total distance among
/// matchings of that cardinality.
pub fn brute_force_matching(pred: &GlyphLayout, gt: &GlyphLayout, tau: f64) -> (usize, f64) {
    fn go(i: usize, used: u32, pred: &[GlyphBox], gt: &[GlyphBox], tau: f64) -> (usize, f64) {
        if i == pred.len() {
            return (0, 0.0);
        }
        let mut best = go(i + 1, used, pred, gt, tau);
        for (j, g) in gt.iter().enumerate() {
            if used & (1 << j) != 0 || g.ch != pred[i].ch {
                continue;
            }
            let d = ((pred[i].x - g.x).powi(2) + (pred[i].y - g.y).powi(2)).sqrt();
            if d > tau {
                continue;
            }
            let (n, cost) = go(i + 1, used | (1 << j), pred, gt, tau);
            let cand = (n + 1, cost + d);
            if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                best = cand;
            }
        }
        best
    }
    assert!(gt.glyphs.len() <= 16);
    go(0, 0, &pred.glyphs, &gt.glyphs, tau)
}

pub fn center_distance(a: &GlyphBox, b: &GlyphBox) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}
