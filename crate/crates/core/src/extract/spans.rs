//! Delimiter scanning inside one text block.

use crate::lexer::{tokenize, TokenKind};

use super::Delimiter;

/// A formula found in flattened text, in text coordinates.
#[derive(Debug, Clone)]
pub(crate) struct RawSpan {
    pub start: usize,
    pub end: usize,
    pub delimiter: Delimiter,
    pub latex: String,
}

#[derive(Debug, Default)]
pub(crate) struct BlockScan {
    pub spans: Vec<RawSpan>,
    pub dropped: usize,
}

/// Scans `block` (starting at text offset `base`) left to right. The first
/// opener wins, so anything nested inside a found span stays part of it.
pub(crate) fn scan_block(block: &str, base: usize, max_inline_len: usize) -> BlockScan {
    let bytes = block.as_bytes();
    let mut out = BlockScan::default();
    let mut i = 0;
    while i < bytes.len() {
        let found = match bytes[i] {
            b'\\' => match bytes.get(i + 1) {
                Some(b'(') => find_closer(block, i + 2, r"\)", Some(max_inline_len))
                    .map(|close| (Delimiter::InlineParen, i + 2..close, close + 2)),
                Some(b'[') => find_closer(block, i + 2, r"\]", None)
                    .map(|close| (Delimiter::DisplayBracket, i + 2..close, close + 2)),
                Some(b'b') if block[i..].starts_with(r"\begin") => {
                    environment_end(block, i).map(|end| (Delimiter::Environment, i..end, end))
                }
                Some(_) => {
                    // escaped character such as \$ or \\
                    i += 1 + block[i + 1..].chars().next().map_or(0, char::len_utf8);
                    continue;
                }
                None => None,
            },
            b'$' if bytes.get(i + 1) == Some(&b'$') => find_closer(block, i + 2, "$$", None)
                .map(|close| (Delimiter::DisplayDollar, i + 2..close, close + 2)),
            b'$' => find_closer(block, i + 1, "$", Some(max_inline_len))
                .map(|close| (Delimiter::InlineDollar, i + 1..close, close + 1)),
            _ => None,
        };
        let Some((delimiter, inner, end)) = found else {
            i += block[i..].chars().next().map_or(1, char::len_utf8);
            continue;
        };
        let opener = match delimiter {
            Delimiter::Environment => r"\begin".len(),
            _ => inner.start - i,
        };
        let latex = block[inner].trim();
        match accept(latex) {
            Verdict::Formula => {
                out.spans.push(RawSpan {
                    start: base + i,
                    end: base + end,
                    delimiter,
                    latex: latex.to_string(),
                });
                i = end;
            }
            Verdict::LexError => {
                out.dropped += 1;
                i += opener;
            }
            Verdict::Blank => i = end,
        }
    }
    out
}

enum Verdict {
    Formula,
    LexError,
    Blank,
}

fn accept(latex: &str) -> Verdict {
    if latex.is_empty() {
        return Verdict::Blank;
    }
    match tokenize(latex) {
        Err(_) => Verdict::LexError,
        Ok(seq) if seq.tokens().iter().all(|t| t.kind == TokenKind::Whitespace) => Verdict::Blank,
        Ok(_) => Verdict::Formula,
    }
}

/// Offset of the next unescaped `closer` at or after `from`.
fn find_closer(block: &str, from: usize, closer: &str, max_len: Option<usize>) -> Option<usize> {
    let bytes = block.as_bytes();
    let limit = max_len.map_or(bytes.len(), |m| bytes.len().min(from + m + closer.len()));
    let mut j = from;
    while j < limit {
        if block[j..].starts_with(closer) {
            return (j + closer.len() <= limit).then_some(j);
        }
        if bytes[j] == b'\\' && !closer.starts_with('\\') {
            j += 1;
        }
        j += block[j..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// End offset (exclusive) of the environment opened at `at`, honoring
/// nested environments of the same name.
fn environment_end(block: &str, at: usize) -> Option<usize> {
    let name = env_name(&block[at + r"\begin".len()..])?;
    let open = format!(r"\begin{{{name}}}");
    let close = format!(r"\end{{{name}}}");
    let mut depth = 0usize;
    let mut j = at;
    while j < block.len() {
        let rest = &block[j..];
        if rest.starts_with(&open) {
            depth += 1;
            j += open.len();
        } else if rest.starts_with(&close) {
            depth -= 1;
            j += close.len();
            if depth == 0 {
                return Some(j);
            }
        } else {
            j += rest.chars().next().map_or(1, char::len_utf8);
        }
    }
    None
}

fn env_name(after_begin: &str) -> Option<&str> {
    let body = after_begin.strip_prefix('{')?;
    let close = body.find('}')?;
    let name = &body[..close];
    (!name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '*')).then_some(name)
}
