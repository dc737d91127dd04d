//! Plain-text formats for hypergraphs and rainbow families.
//!
//! Hypergraph: header `n k m`, then `m` lines of `k` strictly increasing
//! vertex indices separated by single spaces. Family: header `n k m` (with
//! `m` the layer count), then per layer a line `layer i e_i` followed by
//! `e_i` edge lines. Lines starting with `#` are comments. Files end with a
//! newline.

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::transform::RainbowFamily;
use std::fmt::Write as _;
use std::path::Path;

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Split<'a, char>>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Result<Self> {
        if !text.is_empty() && !text.ends_with('\n') {
            let line = text.lines().count();
            return Err(parse_error(line, text.lines().last().map_or(1, |l| l.len() + 1), "missing trailing newline"));
        }
        let body = text.strip_suffix('\n').unwrap_or(text);
        Ok(Self {
            inner: body.split('\n').enumerate().peekable(),
        })
    }

    /// Next non-comment line as `(line number, numbers)`.
    fn next_numbers(&mut self) -> Result<Option<(usize, Vec<usize>)>> {
        for (idx, line) in self.inner.by_ref() {
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            return Ok(Some((idx + 1, parse_numbers(idx + 1, line)?)));
        }
        Ok(None)
    }

    fn next_tokens(&mut self) -> Option<(usize, &'a str)> {
        for (idx, line) in self.inner.by_ref() {
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            return Some((idx + 1, line));
        }
        None
    }
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn parse_numbers(line_no: usize, line: &str) -> Result<Vec<usize>> {
    let mut column = 1;
    let mut out = Vec::new();
    for token in line.split(' ') {
        let value = token
            .parse::<usize>()
            .map_err(|_| parse_error(line_no, column, format!("expected a non-negative integer, found {token:?}")))?;
        out.push(value);
        column += token.len() + 1;
    }
    Ok(out)
}

fn expect_len(line: usize, values: &[usize], len: usize, what: &str) -> Result<()> {
    if values.len() == len {
        Ok(())
    } else {
        Err(parse_error(line, 1, format!("{what}: expected {len} values, found {}", values.len())))
    }
}

fn read_edge(lines: &mut Lines<'_>, k: usize) -> Result<(usize, Vec<usize>)> {
    let (line, values) = lines
        .next_numbers()?
        .ok_or_else(|| parse_error(0, 1, "unexpected end of input"))?;
    expect_len(line, &values, k, "edge")?;
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(parse_error(line, 1, "edge vertices must be strictly increasing"));
    }
    Ok((line, values))
}

fn wrap(line: usize, err: Error) -> Error {
    match err {
        Error::Parse { .. } => err,
        other => parse_error(line, 1, other.to_string()),
    }
}

pub fn parse_hypergraph(text: &str) -> Result<Hypergraph> {
    let mut lines = Lines::new(text)?;
    let (line, header) = lines
        .next_numbers()?
        .ok_or_else(|| parse_error(1, 1, "missing header `n k m`"))?;
    expect_len(line, &header, 3, "header")?;
    let (n, k, m) = (header[0], header[1], header[2]);
    let mut edges = Vec::with_capacity(m);
    let mut last_line = line;
    for _ in 0..m {
        let (line, edge) = read_edge(&mut lines, k)?;
        last_line = line;
        edges.push(edge);
    }
    if let Some((line, _)) = lines.next_tokens() {
        return Err(parse_error(line, 1, "trailing content after the declared edges"));
    }
    Hypergraph::new(n, k, edges).map_err(|e| wrap(last_line, e))
}

pub fn write_hypergraph(h: &Hypergraph) -> String {
    let mut out = format!("{} {} {}\n", h.n(), h.k(), h.edge_count());
    for e in h.edges() {
        push_edge(&mut out, e);
    }
    out
}

fn push_edge(out: &mut String, e: &[usize]) {
    for (j, v) in e.iter().enumerate() {
        if j > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

pub fn parse_family(text: &str) -> Result<RainbowFamily> {
    let mut lines = Lines::new(text)?;
    let (line, header) = lines
        .next_numbers()?
        .ok_or_else(|| parse_error(1, 1, "missing header `n k m`"))?;
    expect_len(line, &header, 3, "header")?;
    let (n, k, m) = (header[0], header[1], header[2]);
    let mut layers = Vec::with_capacity(m);
    for expected in 0..m {
        let (line, raw) = lines
            .next_tokens()
            .ok_or_else(|| parse_error(0, 1, format!("missing `layer {expected}` line")))?;
        let rest = raw
            .strip_prefix("layer ")
            .ok_or_else(|| parse_error(line, 1, "expected `layer i e_i`"))?;
        let values = parse_numbers(line, rest).map_err(|e| match e {
            Error::Parse { line, column, message } => Error::Parse { line, column: column + 6, message },
            other => other,
        })?;
        expect_len(line, &values, 2, "layer line")?;
        if values[0] != expected {
            return Err(parse_error(line, 7, format!("expected layer {expected}, found {}", values[0])));
        }
        let mut edges = Vec::with_capacity(values[1]);
        for _ in 0..values[1] {
            edges.push(read_edge(&mut lines, k)?.1);
        }
        layers.push(Hypergraph::new(n, k, edges).map_err(|e| wrap(line, e))?);
    }
    if let Some((line, _)) = lines.next_tokens() {
        return Err(parse_error(line, 1, "trailing content after the declared layers"));
    }
    RainbowFamily::new(n, k, layers)
}

pub fn write_family(family: &RainbowFamily) -> String {
    let mut out = format!("{} {} {}\n", family.n(), family.k(), family.layers().len());
    for (i, layer) in family.layers().iter().enumerate() {
        let _ = writeln!(out, "layer {i} {}", layer.edge_count());
        for e in layer.edges() {
            push_edge(&mut out, e);
        }
    }
    out
}

pub fn read_hypergraph_file(path: impl AsRef<Path>) -> Result<Hypergraph> {
    parse_hypergraph(&std::fs::read_to_string(path)?)
}

pub fn read_family_file(path: impl AsRef<Path>) -> Result<RainbowFamily> {
    parse_family(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypergraph_text_is_bit_exact() {
        let text = "4 2 2\n0 1\n2 3\n";
        let h = parse_hypergraph(text).unwrap();
        assert_eq!(h.edge_count(), 2);
        assert_eq!(write_hypergraph(&h), text);
    }

    #[test]
    fn comments_are_skipped() {
        let h = parse_hypergraph("# header next\n3 3 1\n# the only edge\n0 1 2\n").unwrap();
        assert_eq!(h.edge_count(), 1);
    }

    #[test]
    fn malformed_inputs_report_positions() {
        assert!(matches!(parse_hypergraph("3 3 1\n0 1 2"), Err(Error::Parse { .. })));
        match parse_hypergraph("3 3 1\n0  1 2\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        match parse_hypergraph("3 3 1\n0 2 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_hypergraph("3 3 2\n0 1 2\n").is_err());
        assert!(parse_hypergraph("3 3 0\n0 1 2\n").is_err());
    }

    #[test]
    fn family_roundtrip() {
        let text = "6 3 2\nlayer 0 1\n0 1 2\nlayer 1 2\n0 1 2\n3 4 5\n";
        let family = parse_family(text).unwrap();
        assert_eq!(family.layers()[1].edge_count(), 2);
        assert_eq!(write_family(&family), text);
        assert!(parse_family("6 3 2\nlayer 1 0\nlayer 0 0\n").is_err());
        assert!(matches!(parse_family("6 3 1\nlayer 0 0\n"), Err(Error::Divisibility(_))));
    }
}
