//! Pulling LaTeX out of free-form model replies.

/// First fenced code block, else the first `$$...$$` or `\[...\]` body,
/// else the whole reply, trimmed.
pub fn extract_latex(reply: &str) -> String {
    if let Some(body) = fenced(reply) {
        return body.trim().to_string();
    }
    for (open, close) in [("$$", "$$"), ("\\[", "\\]")] {
        if let Some(start) = reply.find(open) {
            let rest = &reply[start + open.len()..];
            if let Some(end) = rest.find(close) {
                return rest[..end].trim().to_string();
            }
        }
    }
    reply.trim().to_string()
}

fn fenced(reply: &str) -> Option<&str> {
    let start = reply.find("```")?;
    let after = &reply[start + 3..];
    // an info string such as `latex` runs to the end of the opening line
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let info = &after[..body_start];
    if info.contains("```") {
        // a one-line fence like ```x^2```
        let end = after.find("```")?;
        return Some(&after[..end]);
    }
    let body = &after[body_start..];
    let end = body.find("```")?;
    Some(&body[..end])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_block() {
        let reply = "Here it is:\n```latex\n\\frac{a}{b}\n```\nDone.";
        assert_eq!(extract_latex(reply), r"\frac{a}{b}");
        assert_eq!(extract_latex("```\nx+1\n```"), "x+1");
        assert_eq!(extract_latex("see ```x^2``` ok"), "x^2");
    }

    #[test]
    fn display_delimiters() {
        assert_eq!(extract_latex("The answer is $$ a^2 + b^2 $$."), "a^2 + b^2");
        assert_eq!(extract_latex(r"So \[ \sum_i x_i \] holds"), r"\sum_i x_i");
    }

    #[test]
    fn whole_body_fallback() {
        assert_eq!(extract_latex("  \\frac{a}{b}\n"), r"\frac{a}{b}");
        assert_eq!(extract_latex("```unterminated"), "```unterminated");
    }
}
