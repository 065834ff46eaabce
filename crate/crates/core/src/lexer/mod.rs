//! LaTeX math lexing and canonicalization.

mod normalize;
mod token;

pub use normalize::{normalize, normalize_with, NormalizeOptions};
pub use token::{detokenize, tokenize, LexError, Token, TokenKind, TokenSeq};

/// `detokenize(normalize(tokenize(src)))`, the canonical text of a formula.
pub fn canonical_form(src: &str, opts: &NormalizeOptions) -> Result<String, LexError> {
    let seq = tokenize(src)?;
    Ok(detokenize(&normalize_with(&seq, opts)))
}
