//! Flattening of page bodies into searchable text.
//!
//! HTML tags are removed, entities decoded and block-level elements turned
//! into blank lines so that HTML and markdown share the same paragraph
//! model. Every byte of the flattened text remembers the byte range of the
//! body it came from, which lets spans report offsets into the original body.

use std::ops::Range;

use super::PageFormat;

pub(crate) struct PlainText {
    pub text: String,
    origin: Vec<(usize, usize)>,
}

const BLOCK_TAGS: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "dd", "div", "dl", "dt", "figcaption", "figure",
    "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "head", "header", "hr", "html", "li", "main",
    "nav", "ol", "p", "pre", "section", "table", "tbody", "td", "tfoot", "th", "thead", "title", "tr", "ul",
];

const SKIPPED_TAGS: &[&str] = &["script", "style"];

impl PlainText {
    pub fn from_body(body: &str, format: PageFormat) -> Self {
        match format {
            PageFormat::Markdown => Self {
                text: body.to_string(),
                origin: (0..body.len()).map(|i| (i, i + 1)).collect(),
            },
            PageFormat::Html => flatten_html(body),
        }
    }

    /// Body byte range covered by `text[range]`. `range` must be nonempty.
    pub fn body_range(&self, range: Range<usize>) -> Range<usize> {
        self.origin[range.start].0..self.origin[range.end - 1].1
    }

    /// Text byte range whose bytes all originate inside `body`.
    pub fn text_range(&self, body: Range<usize>) -> Range<usize> {
        let start = self.origin.partition_point(|&(s, _)| s < body.start);
        let end = self.origin.partition_point(|&(_, e)| e <= body.end);
        start..end.max(start)
    }

    /// Blank-line separated blocks, as byte ranges into `text` with
    /// surrounding whitespace trimmed.
    pub fn blocks(&self) -> Vec<Range<usize>> {
        let mut blocks = Vec::new();
        let mut current: Option<Range<usize>> = None;
        let mut line_start = 0;
        for line in self.text.split_inclusive('\n') {
            let range = line_start..line_start + line.len();
            line_start = range.end;
            if line.trim().is_empty() {
                blocks.extend(current.take());
            } else {
                current = Some(match current {
                    Some(r) => r.start..range.end,
                    None => range,
                });
            }
        }
        blocks.extend(current);
        blocks
            .into_iter()
            .map(|r| {
                let slice = &self.text[r.clone()];
                let lead = slice.len() - slice.trim_start().len();
                let trail = slice.len() - slice.trim_end().len();
                r.start + lead..r.end - trail
            })
            .collect()
    }
}

struct Builder {
    text: String,
    origin: Vec<(usize, usize)>,
}

impl Builder {
    fn push(&mut self, s: &str, from: Range<usize>) {
        self.text.push_str(s);
        self.origin.extend(std::iter::repeat_n((from.start, from.end), s.len()));
    }
}

fn flatten_html(body: &str) -> PlainText {
    let mut b = Builder { text: String::with_capacity(body.len()), origin: Vec::with_capacity(body.len()) };
    let mut i = 0;
    while i < body.len() {
        let rest = &body[i..];
        let c = rest.chars().next().unwrap_or_default();
        match c {
            '<' => {
                if let Some(end) = skip_markup(body, i) {
                    if let Some((name, closing)) = tag_name(&body[i..end]) {
                        if BLOCK_TAGS.contains(&name.as_str()) {
                            b.push("\n\n", i..end);
                        } else if name == "br" {
                            b.push("\n", i..end);
                        } else if !closing && SKIPPED_TAGS.contains(&name.as_str()) {
                            i = skip_element(body, end, &name);
                            continue;
                        }
                    }
                    i = end;
                    continue;
                }
                b.push("<", i..i + 1);
                i += 1;
            }
            '&' => match decode_entity(rest) {
                Some((decoded, len)) => {
                    let mut buf = [0u8; 4];
                    b.push(decoded.encode_utf8(&mut buf), i..i + len);
                    i += len;
                }
                None => {
                    b.push("&", i..i + 1);
                    i += 1;
                }
            },
            '\n' | '\r' => {
                b.push(" ", i..i + 1);
                i += 1;
            }
            _ => {
                let len = c.len_utf8();
                b.text.push(c);
                b.origin.extend((i..i + len).map(|k| (k, k + 1)));
                i += len;
            }
        }
    }
    PlainText { text: b.text, origin: b.origin }
}

/// End offset of a tag or comment starting at `at`, or None when `<` is a literal.
fn skip_markup(body: &str, at: usize) -> Option<usize> {
    let rest = &body[at..];
    if rest.starts_with("<!--") {
        return Some(rest.find("-->").map_or(body.len(), |p| at + p + 3));
    }
    let second = rest[1..].chars().next()?;
    if !(second.is_ascii_alphabetic() || second == '/' || second == '!') {
        return None;
    }
    rest.find('>').map(|p| at + p + 1)
}

/// Lowercased element name and whether it is a closing tag.
fn tag_name(tag: &str) -> Option<(String, bool)> {
    let inner = tag.strip_prefix('<')?;
    let (inner, closing) = match inner.strip_prefix('/') {
        Some(r) => (r, true),
        None => (inner, false),
    };
    let name: String = inner
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    (!name.is_empty()).then_some((name, closing))
}

fn skip_element(body: &str, from: usize, name: &str) -> usize {
    let lower = body[from..].to_ascii_lowercase();
    let close = format!("</{name}");
    match lower.find(&close) {
        Some(p) => {
            let after = from + p;
            body[after..].find('>').map_or(body.len(), |q| after + q + 1)
        }
        None => body.len(),
    }
}

fn decode_entity(rest: &str) -> Option<(char, usize)> {
    let semi = rest.char_indices().take_while(|&(i, _)| i < 12).find(|&(_, c)| c == ';')?.0;
    let name = &rest[1..semi];
    let c = match name {
        "lt" => '<',
        "gt" => '>',
        "amp" => '&',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => ' ',
        _ => {
            let num = name.strip_prefix('#')?;
            let code = match num.strip_prefix(['x', 'X']) {
                Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                None => num.parse().ok()?,
            };
            char::from_u32(code)?
        }
    };
    Some((c, semi + 1))
}
