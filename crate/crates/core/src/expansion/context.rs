use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::structures::{parse_num, tokenize, Relation, RelStructure, Vocabulary};
use crate::weights::{parse_base_lines, BaseContext};

/// Slowly growing divisor in the drawing probability `c · n^β / h(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HFunction {
    #[default]
    Unit,
    Log,
    LogLog,
}

impl HFunction {
    /// `h(n)`, never below 1.
    pub fn value(self, n: usize) -> f64 {
        let n = n.max(2) as f64;
        let h = match self {
            HFunction::Unit => 1.0,
            HFunction::Log => n.ln(),
            HFunction::LogLog => n.ln().ln(),
        };
        h.max(1.0)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unit" | "1" => Some(HFunction::Unit),
            "log" => Some(HFunction::Log),
            "loglog" => Some(HFunction::LogLog),
            _ => None,
        }
    }
}

impl fmt::Display for HFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HFunction::Unit => "unit",
            HFunction::Log => "log",
            HFunction::LogLog => "loglog",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewRelation {
    pub relation: Relation,
    pub beta: f64,
    pub coeff: f64,
}

/// Exponent and coefficient for atoms of one new relation whose element
/// set carries exactly `base_atoms` base atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomOverride {
    pub rel: usize,
    pub base_atoms: u32,
    pub beta: f64,
    pub coeff: f64,
}

/// A base context together with new relations drawn on top of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionContext {
    base: BaseContext,
    vocab: Arc<Vocabulary>,
    new: Vec<NewRelation>,
    overrides: Vec<AtomOverride>,
    h: HFunction,
}

fn check_atom_params(what: &str, beta: f64, coeff: f64) -> Result<()> {
    if !beta.is_finite() || beta > 0.0 {
        return Err(Error::invalid(format!("beta for {what} must be finite and <= 0, got {beta}")));
    }
    if !(coeff > 0.0 && coeff < 1.0) {
        return Err(Error::invalid(format!("coefficient for {what} must lie in (0,1), got {coeff}")));
    }
    Ok(())
}

impl ExpansionContext {
    pub fn new(base: BaseContext, new: Vec<NewRelation>) -> Result<Self> {
        for r in &new {
            check_atom_params(&r.relation.name, r.beta, r.coeff)?;
        }
        let rels: Vec<Relation> = new.iter().map(|r| r.relation.clone()).collect();
        let vocab = Arc::new(base.vocab().extended(&rels)?);
        Ok(ExpansionContext {
            base,
            vocab,
            new,
            overrides: Vec::new(),
            h: HFunction::Unit,
        })
    }

    /// Context with no new relations.
    pub fn trivial(base: BaseContext) -> Self {
        Self::new(base, Vec::new()).expect("no new relations to validate")
    }

    pub fn with_h(mut self, h: HFunction) -> Self {
        self.h = h;
        self
    }

    /// Set the parameters of atoms of `rel` (an index into the expanded
    /// vocabulary) with `base_atoms` base atoms on their element set.
    pub fn with_override(mut self, rel: usize, base_atoms: u32, beta: f64, coeff: f64) -> Result<Self> {
        if rel < self.base_len() || rel >= self.vocab.len() {
            return Err(Error::invalid("overrides apply to new relations only"));
        }
        check_atom_params(&self.vocab.relation(rel).name, beta, coeff)?;
        self.overrides.retain(|o| !(o.rel == rel && o.base_atoms == base_atoms));
        self.overrides.push(AtomOverride {
            rel,
            base_atoms,
            beta,
            coeff,
        });
        self.overrides.sort_by_key(|o| (o.rel, o.base_atoms));
        Ok(self)
    }

    pub fn base(&self) -> &BaseContext {
        &self.base
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn base_len(&self) -> usize {
        self.base.vocab().len()
    }

    pub fn new_relations(&self) -> &[NewRelation] {
        &self.new
    }

    pub fn overrides(&self) -> &[AtomOverride] {
        &self.overrides
    }

    pub fn h(&self) -> HFunction {
        self.h
    }

    pub fn is_trivial(&self) -> bool {
        self.new.is_empty()
    }

    /// `(β, c)` for an atom of `rel` whose element set carries `base_atoms`
    /// base atoms.
    pub fn atom_params(&self, rel: usize, base_atoms: u32) -> (f64, f64) {
        if let Some(o) = self
            .overrides
            .iter()
            .find(|o| o.rel == rel && o.base_atoms == base_atoms)
        {
            return (o.beta, o.coeff);
        }
        let r = &self.new[rel - self.base_len()];
        (r.beta, r.coeff)
    }

    pub fn has_overrides(&self, rel: usize) -> bool {
        self.overrides.iter().any(|o| o.rel == rel)
    }

    /// Number of base atoms of `m` whose elements all lie in `set`.
    pub fn base_atoms_on(&self, m: &RelStructure, set: &[u32]) -> u32 {
        let mut n = 0;
        for rel in 0..self.base_len() {
            if m.arity(rel) > set.len() {
                continue;
            }
            n += m.atoms(rel).filter(|t| t.iter().all(|x| set.contains(x))).count() as u32;
        }
        n
    }

    /// Same draws as `self` followed by `more`, as one combined context.
    pub fn combine(&self, more: &[NewRelation]) -> Result<Self> {
        let mut all = self.new.clone();
        all.extend_from_slice(more);
        let mut c = ExpansionContext::new(self.base.clone(), all)?.with_h(self.h);
        c.overrides = self.overrides.clone();
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut out = self.base.to_text();
        for r in &self.new {
            writeln!(out, "newrel {} beta {} coeff {}", r.relation, r.beta, r.coeff).unwrap();
        }
        for o in &self.overrides {
            writeln!(
                out,
                "atom {} base {} beta {} coeff {}",
                self.vocab.relation(o.rel).name,
                o.base_atoms,
                o.beta,
                o.coeff
            )
            .unwrap();
        }
        writeln!(out, "h {}", self.h).unwrap();
        out
    }
}

/// Parse a context file. Lines `newrel`, `atom` and `h` make it an
/// expansion; without them the second component is `None`.
///
/// ```text
/// vocab E/2:sym
/// alpha E 0.45
/// newrel P/1 beta -0.2 coeff 0.8
/// h unit
/// ```
pub fn parse_context_file(src: &str) -> Result<(BaseContext, Option<ExpansionContext>)> {
    let lines = tokenize(src);
    let (base, rest) = parse_base_lines(&lines)?;
    let mut new = Vec::new();
    let mut atoms = Vec::new();
    let mut h = None;
    for i in rest {
        let (ln, toks) = &lines[i];
        let ln = *ln;
        match toks[0].text {
            "newrel" => {
                if toks.len() != 6 || toks[2].text != "beta" || toks[4].text != "coeff" {
                    return Err(Error::parse(ln, toks[0].col, "expected `newrel NAME/ARITY beta <b> coeff <c>`"));
                }
                let relation = Vocabulary::parse_relation(toks[1].text)
                    .map_err(|e| Error::parse(ln, toks[1].col, e.to_string()))?;
                let beta: f64 = parse_num(ln, &toks[3], "a number")?;
                let coeff: f64 = parse_num(ln, &toks[5], "a number")?;
                check_atom_params(&relation.name, beta, coeff).map_err(|e| Error::parse(ln, toks[3].col, e.to_string()))?;
                new.push(NewRelation { relation, beta, coeff });
            }
            "atom" => {
                if toks.len() != 8 || toks[2].text != "base" || toks[4].text != "beta" || toks[6].text != "coeff" {
                    return Err(Error::parse(
                        ln,
                        toks[0].col,
                        "expected `atom NAME base <count> beta <b> coeff <c>`",
                    ));
                }
                let k: u32 = parse_num(ln, &toks[3], "a base atom count")?;
                let beta: f64 = parse_num(ln, &toks[5], "a number")?;
                let coeff: f64 = parse_num(ln, &toks[7], "a number")?;
                atoms.push((ln, toks[1], k, beta, coeff));
            }
            "h" => {
                if toks.len() != 2 {
                    return Err(Error::parse(ln, toks[0].col, "expected `h unit|log|loglog`"));
                }
                h = Some(
                    HFunction::parse(toks[1].text)
                        .ok_or_else(|| Error::parse(ln, toks[1].col, "expected unit, log or loglog"))?,
                );
            }
            other => {
                return Err(Error::parse(ln, toks[0].col, format!("unknown keyword {other:?}")));
            }
        }
    }
    if new.is_empty() && atoms.is_empty() && h.is_none() {
        return Ok((base, None));
    }
    let mut ctx = ExpansionContext::new(base.clone(), new)
        .map_err(|e| Error::parse(1, 1, e.to_string()))?
        .with_h(h.unwrap_or_default());
    for (ln, tok, k, beta, coeff) in atoms {
        let rel = ctx
            .vocab()
            .index_of(tok.text)
            .ok_or_else(|| Error::parse(ln, tok.col, format!("unknown relation {:?}", tok.text)))?;
        ctx = ctx
            .with_override(rel, k, beta, coeff)
            .map_err(|e| Error::parse(ln, tok.col, e.to_string()))?;
    }
    Ok((base, Some(ctx)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        let src = "vocab E/2:sym\nalpha E 0.5\nnewrel S/2:sym beta -0.5 coeff 0.8\natom S base 1 beta -0.7 coeff 0.4\nh log\n";
        let (base, plus) = parse_context_file(src).unwrap();
        let plus = plus.unwrap();
        assert_eq!(base.alpha(0), 0.5);
        assert_eq!(plus.atom_params(1, 0), (-0.5, 0.8));
        assert_eq!(plus.atom_params(1, 1), (-0.7, 0.4));
        assert_eq!(plus.h(), HFunction::Log);
        let (_, again) = parse_context_file(&plus.to_text()).unwrap();
        assert_eq!(again.unwrap(), plus);
    }

    #[test]
    fn rejects_positive_beta() {
        let src = "vocab E/2:sym\nalpha E 0.5\nnewrel P/1 beta 0.2 coeff 0.5\n";
        assert!(matches!(parse_context_file(src), Err(Error::Parse { line: 3, .. })));
        let src = "vocab E/2:sym\nalpha E 0.5\nbogus 1\n";
        assert!(matches!(parse_context_file(src), Err(Error::Parse { line: 3, column: 1, .. })));
    }

    #[test]
    fn h_values() {
        assert_eq!(HFunction::Unit.value(1000), 1.0);
        assert!((HFunction::Log.value(1000) - 1000f64.ln()).abs() < 1e-12);
        assert_eq!(HFunction::LogLog.value(3), 1.0);
    }
}
