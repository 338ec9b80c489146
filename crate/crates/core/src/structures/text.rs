use std::fmt::Write as _;
use std::sync::Arc;

use super::structure::RelStructure;
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// One whitespace-separated word with its 1-based column.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub col: usize,
    pub text: &'a str,
}

/// Non-empty lines of `src` with `#` comments removed, as
/// `(line number, tokens)`.
pub(crate) fn tokenize(src: &str) -> Vec<(usize, Vec<Token<'_>>)> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let mut toks = Vec::new();
        let mut start = None;
        for (j, ch) in line.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    toks.push(Token {
                        col: s + 1,
                        text: &line[s..j],
                    });
                }
            } else if start.is_none() {
                start = Some(j);
            }
        }
        if let Some(s) = start {
            toks.push(Token {
                col: s + 1,
                text: &line[s..],
            });
        }
        if !toks.is_empty() {
            out.push((i + 1, toks));
        }
    }
    out
}

pub(crate) fn parse_num<T: std::str::FromStr>(line: usize, tok: &Token<'_>, what: &str) -> Result<T> {
    tok.text
        .parse()
        .map_err(|_| Error::parse(line, tok.col, format!("expected {what}, found {:?}", tok.text)))
}

pub(crate) fn parse_vocab_line(line: usize, toks: &[Token<'_>]) -> Result<Vocabulary> {
    let mut rels = Vec::new();
    for t in &toks[1..] {
        let r = Vocabulary::parse_relation(t.text).map_err(|e| Error::parse(line, t.col, e.to_string()))?;
        rels.push(r);
    }
    Vocabulary::new(rels).map_err(|e| Error::parse(line, toks[0].col, e.to_string()))
}

/// Parse the structure text format:
///
/// ```text
/// vocab E/2:sym P/1
/// n 4
/// E 0 1
/// P 2
/// ```
pub fn parse_structure(src: &str) -> Result<RelStructure> {
    let lines = tokenize(src);
    let mut it = lines.iter();
    let (ln, toks) = it.next().ok_or_else(|| Error::parse(1, 1, "empty structure file"))?;
    if toks[0].text != "vocab" {
        return Err(Error::parse(*ln, toks[0].col, "expected `vocab` header"));
    }
    let vocab = Arc::new(parse_vocab_line(*ln, toks)?);
    let (ln, toks) = it
        .next()
        .ok_or_else(|| Error::parse(ln + 1, 1, "missing `n <count>` line"))?;
    if toks[0].text != "n" || toks.len() != 2 {
        return Err(Error::parse(*ln, toks[0].col, "expected `n <count>`"));
    }
    let size: usize = parse_num(*ln, &toks[1], "element count")?;
    let mut rows = Vec::new();
    for (ln, toks) in it {
        let rel = vocab
            .index_of(toks[0].text)
            .ok_or_else(|| Error::parse(*ln, toks[0].col, format!("unknown relation {:?}", toks[0].text)))?;
        let arity = vocab.relation(rel).arity;
        if toks.len() != arity + 1 {
            return Err(Error::parse(
                *ln,
                toks[0].col,
                format!("{} expects {arity} arguments, found {}", toks[0].text, toks.len() - 1),
            ));
        }
        let mut t = Vec::with_capacity(arity);
        for tok in &toks[1..] {
            let e: u32 = parse_num(*ln, tok, "element id")?;
            if e as usize >= size {
                return Err(Error::parse(*ln, tok.col, format!("element {e} outside 0..{size}")));
            }
            if t.contains(&e) {
                return Err(Error::parse(*ln, tok.col, format!("element {e} repeated")));
            }
            t.push(e);
        }
        rows.push((rel, t));
    }
    RelStructure::new(vocab, size, rows)
}

/// Write `s` in the text format. Symmetric atoms are written once, in
/// increasing order.
pub fn write_structure(s: &RelStructure) -> String {
    let mut out = String::new();
    writeln!(out, "{}", s.vocab()).unwrap();
    writeln!(out, "n {}", s.size()).unwrap();
    for (rel, t) in s.atom_list() {
        write!(out, "{}", s.vocab().relation(rel).name).unwrap();
        for x in t {
            write!(out, " {x}").unwrap();
        }
        out.push('\n');
    }
    out
}
