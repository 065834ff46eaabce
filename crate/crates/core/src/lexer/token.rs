//! Flat LaTeX math tokenizer.
//!
//! The token model follows TeX's category codes closely enough for OCR
//! output: a backslash followed by a maximal run of ASCII letters is a
//! control word, a backslash followed by any other single character is a
//! control symbol, `{`/`}` delimit groups, `^`/`_` are script markers, `&`
//! separates alignment cells and `\\` breaks lines. `\begin{..}`/`\end{..}`
//! are folded into single environment tokens. Comments are dropped and
//! whitespace runs collapse into one token, except directly after a control
//! word where TeX discards them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Command,
    Char,
    GroupOpen,
    GroupClose,
    Superscript,
    Subscript,
    Alignment,
    LineBreak,
    EnvBegin,
    EnvEnd,
    Whitespace,
}

/// One lexical unit.
///
/// `text` holds the command name without the backslash, the literal
/// character, or the environment name for `EnvBegin`/`EnvEnd`. Structural
/// tokens carry their literal spelling.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
}

impl Token {
    pub fn command(name: impl Into<String>) -> Self {
        Self { kind: TokenKind::Command, text: name.into() }
    }

    pub fn char(c: char) -> Self {
        Self { kind: TokenKind::Char, text: c.to_string() }
    }

    pub fn group_open() -> Self {
        Self { kind: TokenKind::GroupOpen, text: "{".into() }
    }

    pub fn group_close() -> Self {
        Self { kind: TokenKind::GroupClose, text: "}".into() }
    }

    pub fn superscript() -> Self {
        Self { kind: TokenKind::Superscript, text: "^".into() }
    }

    pub fn subscript() -> Self {
        Self { kind: TokenKind::Subscript, text: "_".into() }
    }

    pub fn alignment() -> Self {
        Self { kind: TokenKind::Alignment, text: "&".into() }
    }

    pub fn line_break() -> Self {
        Self { kind: TokenKind::LineBreak, text: "\\\\".into() }
    }

    pub fn env_begin(name: impl Into<String>) -> Self {
        Self { kind: TokenKind::EnvBegin, text: name.into() }
    }

    pub fn env_end(name: impl Into<String>) -> Self {
        Self { kind: TokenKind::EnvEnd, text: name.into() }
    }

    pub fn whitespace() -> Self {
        Self { kind: TokenKind::Whitespace, text: " ".into() }
    }

    /// True for a control word such as `\frac` (as opposed to `\,`).
    pub fn is_control_word(&self) -> bool {
        self.kind == TokenKind::Command
            && !self.text.is_empty()
            && self.text.bytes().all(|b| b.is_ascii_alphabetic())
    }

    pub fn is_command(&self, name: &str) -> bool {
        self.kind == TokenKind::Command && self.text == name
    }

    pub fn is_char(&self, c: char) -> bool {
        self.kind == TokenKind::Char && self.text.chars().eq(std::iter::once(c))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Command => write!(f, "\\{}", self.text),
            TokenKind::EnvBegin => write!(f, "\\begin{{{}}}", self.text),
            TokenKind::EnvEnd => write!(f, "\\end{{{}}}", self.text),
            _ => f.write_str(&self.text),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unbalanced group at byte {offset}")]
    UnbalancedGroup { offset: usize },
    #[error("unterminated command at byte {offset}")]
    UnterminatedCommand { offset: usize },
    #[error("mismatched environment at byte {offset}")]
    MismatchedEnvironment { offset: usize },
}

impl LexError {
    pub fn offset(&self) -> usize {
        match *self {
            LexError::UnbalancedGroup { offset }
            | LexError::UnterminatedCommand { offset }
            | LexError::MismatchedEnvironment { offset } => offset,
        }
    }
}

/// A lexed formula together with a stable hash of the raw text it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    tokens: Vec<Token>,
    source_hash: u64,
}

impl TokenSeq {
    pub(crate) fn with_hash(tokens: Vec<Token>, source_hash: u64) -> Self {
        Self { tokens, source_hash }
    }

    /// Builds a sequence from hand-assembled tokens. The source hash is taken
    /// over the detokenized text.
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        let source_hash = xxh3_64(render(&tokens).as_bytes());
        Self { tokens, source_hash }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }

    pub fn source_hash(&self) -> u64 {
        self.source_hash
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token-level equality, ignoring the source hash.
    pub fn token_eq(&self, other: &TokenSeq) -> bool {
        self.tokens == other.tokens
    }

    /// Checks group nesting and LIFO environment matching.
    pub fn is_balanced(&self) -> bool {
        let mut stack: Vec<Option<&str>> = Vec::new();
        for tok in &self.tokens {
            match tok.kind {
                TokenKind::GroupOpen => stack.push(None),
                TokenKind::EnvBegin => stack.push(Some(&tok.text)),
                TokenKind::GroupClose => {
                    if stack.pop() != Some(None) {
                        return false;
                    }
                }
                TokenKind::EnvEnd if stack.pop() != Some(Some(tok.text.as_str())) => return false,
                _ => {}
            }
        }
        stack.is_empty()
    }
}

enum Open {
    Group(usize),
    Env(String, usize),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    tokens: Vec<Token>,
    stack: Vec<Open>,
    // set after a control word; swallows following whitespace
    skip_space: bool,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn push(&mut self, tok: Token) {
        self.skip_space = tok.is_control_word();
        self.tokens.push(tok);
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                '%' => {
                    self.pos = match self.src[start..].find('\n') {
                        Some(nl) => start + nl + 1,
                        None => self.src.len(),
                    };
                }
                c if c.is_whitespace() => {
                    while let Some(w) = self.peek().filter(|w| w.is_whitespace()) {
                        self.pos += w.len_utf8();
                    }
                    let after_ws = self.tokens.last().map(|t| t.kind) == Some(TokenKind::Whitespace);
                    if !self.skip_space && !after_ws {
                        self.tokens.push(Token::whitespace());
                    }
                }
                '\\' => {
                    self.pos += 1;
                    self.backslash(start)?;
                }
                '{' => {
                    self.pos += 1;
                    self.stack.push(Open::Group(start));
                    self.push(Token::group_open());
                }
                '}' => {
                    self.pos += 1;
                    match self.stack.pop() {
                        Some(Open::Group(_)) => self.push(Token::group_close()),
                        _ => return Err(LexError::UnbalancedGroup { offset: start }),
                    }
                }
                '^' => {
                    self.pos += 1;
                    self.push(Token::superscript());
                }
                '_' => {
                    self.pos += 1;
                    self.push(Token::subscript());
                }
                '&' => {
                    self.pos += 1;
                    self.push(Token::alignment());
                }
                other => {
                    self.pos += other.len_utf8();
                    self.push(Token::char(other));
                }
            }
        }
        match self.stack.pop() {
            None => Ok(self.tokens),
            Some(Open::Group(offset)) => Err(LexError::UnbalancedGroup { offset }),
            Some(Open::Env(_, offset)) => Err(LexError::MismatchedEnvironment { offset }),
        }
    }

    fn backslash(&mut self, start: usize) -> Result<(), LexError> {
        let Some(next) = self.peek() else {
            return Err(LexError::UnterminatedCommand { offset: start });
        };
        if next == '\\' {
            self.pos += 1;
            self.push(Token::line_break());
            return Ok(());
        }
        if !next.is_ascii_alphabetic() {
            self.pos += next.len_utf8();
            self.push(Token::command(next.to_string()));
            return Ok(());
        }
        let rest = &self.src[self.pos..];
        let len = rest.bytes().take_while(u8::is_ascii_alphabetic).count();
        let name = &rest[..len];
        self.pos += len;
        match name {
            "begin" => {
                let env = self.env_name(start)?;
                self.stack.push(Open::Env(env.clone(), start));
                self.push(Token::env_begin(env));
            }
            "end" => {
                let env = self.env_name(start)?;
                match self.stack.pop() {
                    Some(Open::Env(open, _)) if open == env => self.push(Token::env_end(env)),
                    _ => return Err(LexError::MismatchedEnvironment { offset: start }),
                }
            }
            _ => self.push(Token::command(name)),
        }
        Ok(())
    }

    /// Reads `{name}` after `\begin`/`\end`, allowing leading spaces.
    fn env_name(&mut self, start: usize) -> Result<String, LexError> {
        let rest = &self.src[self.pos..];
        let trimmed = rest.trim_start();
        let err = LexError::UnterminatedCommand { offset: start };
        let body = trimmed.strip_prefix('{').ok_or(err)?;
        let close = body.find('}').ok_or(err)?;
        let name = &body[..close];
        let valid = !name.is_empty()
            && name
                .chars()
                .all(|c| !c.is_whitespace() && !matches!(c, '{' | '\\' | '%' | '$'));
        if !valid {
            return Err(err);
        }
        self.pos += (rest.len() - trimmed.len()) + 1 + close + 1;
        Ok(name.to_string())
    }
}

pub fn tokenize(src: &str) -> Result<TokenSeq, LexError> {
    let lexer = Lexer { src, pos: 0, tokens: Vec::new(), stack: Vec::new(), skip_space: false };
    let tokens = lexer.run()?;
    Ok(TokenSeq::with_hash(tokens, xxh3_64(src.as_bytes())))
}

pub fn detokenize(seq: &TokenSeq) -> String {
    render(seq.tokens())
}

fn render(tokens: &[Token]) -> String {
    let mut out = String::with_capacity(tokens.len() * 2);
    let mut prev_word = false;
    for tok in tokens {
        if prev_word && tok.kind == TokenKind::Char && tok.text.starts_with(|c: char| c.is_ascii_alphabetic()) {
            out.push(' ');
        }
        use std::fmt::Write;
        let _ = write!(out, "{tok}");
        prev_word = tok.is_control_word();
    }
    out
}
