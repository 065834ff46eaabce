//! Canonicalization of token streams.
//!
//! Rules, applied repeatedly until the stream stops changing:
//!
//! 1. whitespace tokens are dropped;
//! 2. a bare single-token script argument is wrapped in a group (`x^2` becomes `x^{2}`);
//! 3. a group holding exactly one command or character is unwrapped unless it
//!    may be an argument (it follows a command, a script marker, another group,
//!    an environment opener or an optional-argument bracket);
//! 4. a fixed alias table is applied and `\(`, `\)`, `\[`, `\]` are removed;
//! 5. optionally, `\left`/`\right` pairs around flat content become plain delimiters.

use serde::{Deserialize, Serialize};

use super::token::{Token, TokenKind, TokenSeq};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    /// Rewrite `\left(`..`\right)` to `(`..`)` when the content has no tall construct.
    #[serde(default)]
    pub strip_left_right: bool,
}

const ALIASES: &[(&str, &str)] = &[("dfrac", "frac"), ("tfrac", "frac"), ("le", "leq"), ("ge", "geq")];

const MATH_DELIMITERS: &[&str] = &["(", ")", "[", "]"];

const TALL: &[&str] = &[
    "frac", "dfrac", "tfrac", "cfrac", "binom", "dbinom", "tbinom", "sqrt", "sum", "prod", "coprod",
    "int", "iint", "iiint", "oint", "bigcup", "bigcap", "bigoplus", "bigotimes", "overset", "underset",
    "stackrel", "overbrace", "underbrace", "substack",
];

// Far above what any real formula needs; every pass but the last shrinks or
// stabilizes the stream.
const MAX_PASSES: usize = 64;

pub fn normalize(seq: &TokenSeq) -> TokenSeq {
    normalize_with(seq, &NormalizeOptions::default())
}

pub fn normalize_with(seq: &TokenSeq, opts: &NormalizeOptions) -> TokenSeq {
    let mut tokens = seq.tokens().to_vec();
    for _ in 0..MAX_PASSES {
        let next = pass(&tokens, opts);
        if next == tokens {
            break;
        }
        tokens = next;
    }
    TokenSeq::with_hash(tokens, seq.source_hash())
}

fn pass(tokens: &[Token], opts: &NormalizeOptions) -> Vec<Token> {
    let mut out: Vec<Token> = tokens
        .iter()
        .filter(|t| t.kind != TokenKind::Whitespace)
        .filter(|t| !(t.kind == TokenKind::Command && MATH_DELIMITERS.contains(&t.text.as_str())))
        .map(|t| match ALIASES.iter().find(|(from, _)| t.is_command(from)) {
            Some((_, to)) => Token::command(*to),
            None => t.clone(),
        })
        .collect();
    if opts.strip_left_right {
        out = flatten_left_right(out);
    }
    out = unwrap_singletons(&out);
    wrap_script_args(&out)
}

fn is_atom(tok: &Token) -> bool {
    matches!(tok.kind, TokenKind::Command | TokenKind::Char)
}

fn may_take_argument(prev: Option<&Token>) -> bool {
    match prev {
        None => false,
        Some(t) => match t.kind {
            TokenKind::Command
            | TokenKind::Superscript
            | TokenKind::Subscript
            | TokenKind::GroupClose
            | TokenKind::EnvBegin => true,
            TokenKind::Char => t.text == "]",
            _ => false,
        },
    }
}

fn unwrap_singletons(tokens: &[Token]) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let singleton = tokens[i].kind == TokenKind::GroupOpen
            && tokens.get(i + 1).is_some_and(is_atom)
            && tokens.get(i + 2).is_some_and(|t| t.kind == TokenKind::GroupClose);
        if singleton && !may_take_argument(out.last()) {
            out.push(tokens[i + 1].clone());
            i += 3;
        } else {
            out.push(tokens[i].clone());
            i += 1;
        }
    }
    out
}

fn wrap_script_args(tokens: &[Token]) -> Vec<Token> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        out.push(tok.clone());
        i += 1;
        if !matches!(tok.kind, TokenKind::Superscript | TokenKind::Subscript) {
            continue;
        }
        let Some(arg) = tokens.get(i) else { continue };
        let bare = match arg.kind {
            TokenKind::Char => true,
            // a command followed by a group is probably taking it as an argument
            TokenKind::Command => tokens.get(i + 1).map(|t| t.kind) != Some(TokenKind::GroupOpen),
            _ => false,
        };
        if bare {
            out.push(Token::group_open());
            out.push(arg.clone());
            out.push(Token::group_close());
            i += 1;
        }
    }
    out
}

fn flatten_left_right(tokens: Vec<Token>) -> Vec<Token> {
    // (left index, right index) pairs whose delimiters are plain tokens
    let mut pairs = Vec::new();
    let mut open = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        let delim_ok = tokens.get(i + 1).is_some_and(is_atom);
        if tok.is_command("left") {
            open.push(delim_ok.then_some(i));
        } else if tok.is_command("right") {
            if let Some(Some(l)) = open.pop() {
                if delim_ok {
                    pairs.push((l, i));
                }
            }
        }
    }
    let mut drop = vec![false; tokens.len()];
    for &(l, r) in &pairs {
        let tall = tokens[l + 2..r].iter().any(|t| match t.kind {
            TokenKind::EnvBegin | TokenKind::LineBreak => true,
            TokenKind::Command => TALL.contains(&t.text.as_str()),
            _ => false,
        });
        if tall {
            continue;
        }
        for at in [l, r] {
            drop[at] = true;
            if tokens[at + 1].is_char('.') {
                drop[at + 1] = true;
            }
        }
    }
    tokens
        .into_iter()
        .zip(drop)
        .filter_map(|(t, d)| (!d).then_some(t))
        .collect()
}
