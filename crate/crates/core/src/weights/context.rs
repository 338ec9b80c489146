use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::structures::{parse_num, parse_vocab_line, tokenize, Token, Vocabulary};

/// Default slack exponent for count brackets.
pub const DEFAULT_EPS: f64 = 0.15;

/// Sampling law and weight function of the base structures: relation `R`
/// appears on each potential atom with probability `c_R · n^(-α_R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseContext {
    vocab: Arc<Vocabulary>,
    alpha: Vec<f64>,
    coeff: Vec<f64>,
    eps: f64,
}

impl BaseContext {
    pub fn new(vocab: Arc<Vocabulary>, alpha: Vec<f64>, coeff: Vec<f64>) -> Result<Self> {
        if alpha.len() != vocab.len() || coeff.len() != vocab.len() {
            return Err(Error::invalid("one alpha and one coefficient per relation expected"));
        }
        for (i, r) in vocab.relations().iter().enumerate() {
            let a = alpha[i];
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::invalid(format!("alpha for {} must lie in (0,1), got {a}", r.name)));
            }
            let c = coeff[i];
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::invalid(format!(
                    "coefficient for {} must lie in (0,1], got {c}",
                    r.name
                )));
            }
        }
        Ok(BaseContext {
            vocab,
            alpha,
            coeff,
            eps: DEFAULT_EPS,
        })
    }

    /// Simple graphs with edge exponent `alpha` and coefficient 1.
    pub fn graph(alpha: f64) -> Result<Self> {
        Self::new(Vocabulary::graph(), vec![alpha], vec![1.0])
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid(format!("eps must lie in (0,1), got {eps}")));
        }
        self.eps = eps;
        Ok(self)
    }

    pub fn with_coeff(mut self, rel: usize, c: f64) -> Result<Self> {
        self.coeff[rel] = c;
        Self::new(self.vocab, self.alpha, self.coeff).map(|mut s| {
            s.eps = self.eps;
            s
        })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn alpha(&self, rel: usize) -> f64 {
        self.alpha[rel]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn coeff(&self, rel: usize) -> f64 {
        self.coeff[rel]
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Number of potential atoms of relation `rel` on `v` elements.
    pub fn max_atoms(&self, rel: usize, v: usize) -> u64 {
        let r = self.vocab.relation(rel);
        if v < r.arity {
            return 0;
        }
        let mut x: u64 = 1;
        for i in 0..r.arity as u64 {
            x = x.saturating_mul(v as u64 - i);
        }
        if r.symmetric {
            for i in 1..=r.arity as u64 {
                x /= i;
            }
        }
        x
    }

    /// True when some structure of at most `k` elements could have
    /// negative weight over the empty set, i.e. be algebraic over nothing.
    pub fn admits_empty_algebraic(&self, k: usize) -> bool {
        (1..=k).any(|v| {
            let load: f64 = (0..self.vocab.len())
                .map(|r| self.alpha[r] * self.max_atoms(r, v) as f64)
                .sum();
            load > v as f64
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.vocab).unwrap();
        for (i, r) in self.vocab.relations().iter().enumerate() {
            writeln!(out, "alpha {} {}", r.name, self.alpha[i]).unwrap();
            writeln!(out, "coeff {} {}", r.name, self.coeff[i]).unwrap();
        }
        writeln!(out, "eps {}", self.eps).unwrap();
        out
    }

    /// Parse a context file consisting only of base lines.
    pub fn parse(src: &str) -> Result<Self> {
        let lines = tokenize(src);
        let (ctx, rest) = parse_base_lines(&lines)?;
        if let Some(&i) = rest.first() {
            let (ln, toks) = &lines[i];
            return Err(Error::parse(
                *ln,
                toks[0].col,
                format!("unexpected keyword {:?} in a base context", toks[0].text),
            ));
        }
        Ok(ctx)
    }
}

/// Consume the `vocab`, `alpha`, `coeff` and `eps` lines; return the
/// context and the indices of lines left for other parsers.
pub(crate) fn parse_base_lines(lines: &[(usize, Vec<Token<'_>>)]) -> Result<(BaseContext, Vec<usize>)> {
    let first = lines.first().ok_or_else(|| Error::parse(1, 1, "empty context"))?;
    if first.1[0].text != "vocab" {
        return Err(Error::parse(first.0, first.1[0].col, "expected `vocab` header"));
    }
    let vocab = Arc::new(parse_vocab_line(first.0, &first.1)?);
    let mut alpha: Vec<Option<f64>> = vec![None; vocab.len()];
    let mut coeff = vec![1.0; vocab.len()];
    let mut eps = DEFAULT_EPS;
    let mut rest = Vec::new();
    for (i, (ln, toks)) in lines.iter().enumerate().skip(1) {
        let ln = *ln;
        match toks[0].text {
            kw @ ("alpha" | "coeff") => {
                if toks.len() != 3 {
                    return Err(Error::parse(ln, toks[0].col, format!("expected `{kw} <relation> <value>`")));
                }
                let rel = vocab
                    .index_of(toks[1].text)
                    .ok_or_else(|| Error::parse(ln, toks[1].col, format!("unknown relation {:?}", toks[1].text)))?;
                let v: f64 = parse_num(ln, &toks[2], "a number")?;
                if kw == "alpha" {
                    if !(v > 0.0 && v < 1.0) {
                        return Err(Error::parse(ln, toks[2].col, "alpha must lie in (0,1)"));
                    }
                    alpha[rel] = Some(v);
                } else {
                    if !(v > 0.0 && v <= 1.0) {
                        return Err(Error::parse(ln, toks[2].col, "coefficient must lie in (0,1]"));
                    }
                    coeff[rel] = v;
                }
            }
            "eps" => {
                if toks.len() != 2 {
                    return Err(Error::parse(ln, toks[0].col, "expected `eps <value>`"));
                }
                eps = parse_num(ln, &toks[1], "a number")?;
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(Error::parse(ln, toks[1].col, "eps must lie in (0,1)"));
                }
            }
            _ => rest.push(i),
        }
    }
    let mut a = Vec::with_capacity(alpha.len());
    for (i, v) in alpha.into_iter().enumerate() {
        match v {
            Some(x) => a.push(x),
            None => {
                return Err(Error::parse(
                    first.0,
                    1,
                    format!("no alpha given for relation {}", vocab.relation(i).name),
                ))
            }
        }
    }
    let ctx = BaseContext::new(vocab, a, coeff)?.with_eps(eps)?;
    Ok((ctx, rest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_roundtrip() {
        let ctx = BaseContext::parse("vocab E/2:sym\nalpha E 0.6 # edges\ncoeff E 0.5\n").unwrap();
        assert_eq!(ctx.alpha(0), 0.6);
        assert_eq!(ctx.coeff(0), 0.5);
        assert_eq!(BaseContext::parse(&ctx.to_text()).unwrap(), ctx);
    }

    #[test]
    fn parse_errors() {
        let e = BaseContext::parse("vocab E/2:sym\nalpha E 1.5\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, column: 9, .. }));
        let e = BaseContext::parse("vocab E/2:sym\nalpha F 0.5\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, column: 7, .. }));
        assert!(BaseContext::parse("vocab E/2:sym\n").is_err());
    }

    #[test]
    fn empty_algebraic_test() {
        let ctx = BaseContext::graph(0.6).unwrap();
        assert!(!ctx.admits_empty_algebraic(4));
        // K5 has 5 - 10 * 0.6 < 0.
        assert!(ctx.admits_empty_algebraic(5));
        assert!(!BaseContext::graph(0.3).unwrap().admits_empty_algebraic(7));
        assert_eq!(ctx.max_atoms(0, 4), 6);
    }
}
