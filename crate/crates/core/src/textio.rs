//! Helpers for the line-oriented text formats. Blank lines and `#` comments are skipped.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ParseError {
    pub line: usize,
    pub message: String,
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Yields `(line number, trimmed content)` for non-empty, non-comment lines.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub(crate) fn parse_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    keyword: &str,
) -> Result<(usize, usize), ParseError> {
    let (n, l) = lines
        .next()
        .ok_or_else(|| parse_err(0, format!("missing `{keyword}` header")))?;
    let mut parts = l.split_whitespace();
    if parts.next() != Some(keyword) {
        return Err(parse_err(n, format!("expected `{keyword} <count>`, found `{l}`")));
    }
    let count = parts
        .next()
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| parse_err(n, format!("bad count in `{l}`")))?;
    if parts.next().is_some() {
        return Err(parse_err(n, format!("trailing tokens in `{l}`")));
    }
    Ok((n, count))
}

pub(crate) fn next_line<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    what: &str,
) -> Result<(usize, &'a str), ParseError> {
    lines
        .next()
        .ok_or_else(|| parse_err(0, format!("unexpected end of file in {what}")))
}

pub(crate) fn expect_end<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<(), ParseError> {
    match lines.next() {
        Some((n, l)) => Err(parse_err(n, format!("unexpected trailing content `{l}`"))),
        None => Ok(()),
    }
}

pub(crate) fn parse_fields<T: std::str::FromStr>(
    line: usize,
    text: &str,
    expected: usize,
) -> Result<Vec<T>, ParseError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != expected {
        return Err(parse_err(
            line,
            format!("expected {expected} fields, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse()
                .map_err(|_| parse_err(line, format!("cannot parse `{f}`")))
        })
        .collect()
}
