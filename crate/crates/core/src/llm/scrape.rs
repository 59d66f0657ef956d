use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::dsl::{is_identifier, quote};

static STATEMENT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*[A-Za-z_][A-Za-z0-9_]*\s*=\s*[A-Za-z_][A-Za-z0-9_]*\s*\(.*\)\s*$").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no program statement found in completion")]
pub struct ScrapeError;

pub fn is_statement_line(line: &str) -> bool {
    STATEMENT.is_match(line)
}

/// Pulls DSL text out of a completion: the first fenced block holding a
/// statement, else the longest run of consecutive statement lines. Bare
/// multi-word literals are quoted on the way out.
pub fn scrape_program(raw_text: &str) -> Result<String, ScrapeError> {
    let lines: Vec<&str> = raw_text.lines().collect();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim_start().starts_with("```") {
            let body: Vec<&str> = lines[i + 1..]
                .iter()
                .take_while(|l| !l.trim_start().starts_with("```"))
                .copied()
                .collect();
            if body.iter().any(|l| is_statement_line(l)) {
                return Ok(repair(&body));
            }
            i += body.len() + 2;
        } else {
            i += 1;
        }
    }
    let mut best: &[&str] = &[];
    let mut start = 0;
    for end in 0..=lines.len() {
        if end == lines.len() || !is_statement_line(lines[end]) {
            if end - start > best.len() {
                best = &lines[start..end];
            }
            start = end + 1;
        }
    }
    if best.is_empty() {
        Err(ScrapeError)
    } else {
        Ok(repair(best))
    }
}

fn repair(lines: &[&str]) -> String {
    lines
        .iter()
        .map(|l| if is_statement_line(l) { repair_line(l.trim()) } else { l.trim().to_owned() })
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Splits on commas outside quotes.
fn split_args(body: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut quote_ch, mut escaped, mut start) = (None, false, 0);
    for (i, c) in body.char_indices() {
        match (quote_ch, c) {
            (Some(_), _) if escaped => escaped = false,
            (Some(_), '\\') => escaped = true,
            (Some(q), c) if c == q => quote_ch = None,
            (None, '\'' | '"') => quote_ch = Some(c),
            (None, ',') => {
                out.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&body[start..]);
    out
}

fn is_plain_value(v: &str) -> bool {
    v.starts_with('\'') || v.starts_with('"') || is_identifier(v) || v.parse::<f64>().is_ok()
}

/// Quotes bare values such as `query=man enters room`. Lines without bare
/// values come back unchanged.
fn repair_line(line: &str) -> String {
    let (Some(open), Some(close)) = (line.find('('), line.rfind(')')) else {
        return line.to_owned();
    };
    let body = &line[open + 1..close];
    if body.trim().is_empty() {
        return line.to_owned();
    }
    let parts = split_args(body);
    let needs_repair = parts.iter().any(|p| match p.split_once('=') {
        Some((_, v)) => !is_plain_value(v.trim()),
        None => false,
    });
    if !needs_repair {
        return line.to_owned();
    }
    let args: Vec<String> = parts
        .iter()
        .map(|p| match p.split_once('=') {
            Some((k, v)) if !is_plain_value(v.trim()) => format!("{}={}", k.trim(), quote(v.trim())),
            _ => p.trim().to_owned(),
        })
        .collect();
    format!("{}({}){}", &line[..open], args.join(","), &line[close + 1..])
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn fenced_block() {
        let raw = "Here is the program:\n```\nA=VQA(video=VIDEO,question='x')\n```";
        assert_eq!(scrape_program(raw).unwrap(), "A=VQA(video=VIDEO,question='x')");
        let raw = "```dsl\nA=VQA(video=VIDEO,question='x')\nB=VQA(video=VIDEO,question='y')\n```\nthanks";
        assert_eq!(scrape_program(raw).unwrap().lines().count(), 2);
    }

    #[test]
    fn bare_program_is_identity() {
        let p = "A=GROUNDING(video=VIDEO,query='q')\nB=TRIMAFTER(video=VIDEO,interval=A)";
        assert_eq!(scrape_program(p).unwrap(), p);
    }

    #[test]
    fn prose_only_fails() {
        assert_eq!(scrape_program("I cannot help with that."), Err(ScrapeError));
        assert_eq!(scrape_program(""), Err(ScrapeError));
    }

    #[test]
    fn longest_run_wins() {
        let raw = "A=F(x=1)\nsome prose\nB=G(x=1)\nC=H(x=B)\nmore prose";
        assert_eq!(scrape_program(raw).unwrap(), "B=G(x=1)\nC=H(x=B)");
    }

    #[test]
    fn quotes_bare_phrases() {
        let raw = "A=GROUNDING(video=VIDEO, query=man enters room)";
        assert_eq!(scrape_program(raw).unwrap(), "A=GROUNDING(video=VIDEO,query='man enters room')");
        let raw = "A=TRIM(video=VIDEO,start=1.5,end=3)";
        assert_eq!(scrape_program(raw).unwrap(), raw);
    }

    proptest! {
        #[test]
        fn wrapping_is_transparent(
            prose in "[A-Za-z ,.:]{0,40}",
            outro in "[A-Za-z ,.]{0,40}",
            q in "[a-z ,]{0,12}",
            fence in any::<bool>(),
        ) {
            let program = format!(
                "A=GROUNDING(video=VIDEO,query={})\nB=VQA(video=A,question='what')",
                quote(&q)
            );
            let wrapped = if fence {
                format!("{prose}\n```\n{program}\n```\n{outro}")
            } else {
                format!("{prose}\n\n{program}\n\n{outro}")
            };
            prop_assert_eq!(scrape_program(&wrapped).unwrap(), program);
        }
    }
}
