use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use super::SampleConfig;
use crate::error::{Error, Result};
use crate::structures::{canonical_form_with, normalize_set, CanonicalForm, RelStructure};
use crate::weights::closure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Term {
    Param(usize),
    Bound,
}

/// An atom `R(args)` or, with `rel = None`, an equality of two terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Literal {
    pub rel: Option<usize>,
    pub args: Vec<Term>,
    pub positive: bool,
}

impl Literal {
    pub fn rel(rel: usize, args: &[Term], positive: bool) -> Self {
        Literal {
            rel: Some(rel),
            args: args.to_vec(),
            positive,
        }
    }

    pub fn eq(a: Term, b: Term, positive: bool) -> Self {
        Literal {
            rel: None,
            args: vec![a, b],
            positive,
        }
    }

    fn holds(&self, m: &RelStructure, params: &[u32], x: u32) -> bool {
        let val = |t: &Term| match t {
            Term::Param(i) => params[*i],
            Term::Bound => x,
        };
        let v = match self.rel {
            None => val(&self.args[0]) == val(&self.args[1]),
            Some(rel) => {
                let t: Vec<u32> = self.args.iter().map(val).collect();
                (0..t.len()).all(|i| !t[i + 1..].contains(&t[i])) && m.holds(rel, &t)
            }
        };
        v == self.positive
    }
}

/// A literal, or one existential quantifier over a conjunction of literals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Formula {
    Atomic(Literal),
    Exists(Vec<Literal>),
}

impl Formula {
    pub fn eval(&self, m: &RelStructure, params: &[u32]) -> bool {
        match self {
            Formula::Atomic(l) => l.holds(m, params, u32::MAX),
            Formula::Exists(lits) => {
                // A positive relational literal linking the bound variable to
                // a parameter confines the witness to that parameter's
                // neighbourhood.
                let anchor = lits.iter().find_map(|l| {
                    (l.positive && l.rel.is_some() && l.args.contains(&Term::Bound))
                        .then(|| {
                            l.args.iter().find_map(|t| match t {
                                Term::Param(i) => Some(params[*i]),
                                Term::Bound => None,
                            })
                        })
                        .flatten()
                });
                match anchor {
                    Some(p) => m.neighbors(p).iter().any(|&x| lits.iter().all(|l| l.holds(m, params, x))),
                    None => m.universe().any(|x| lits.iter().all(|l| l.holds(m, params, x))),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogFormula {
    pub name: String,
    pub text: String,
    pub params: usize,
    pub formula: Formula,
}

fn entry(name: &str, text: &str, params: usize, formula: Formula) -> CatalogFormula {
    CatalogFormula {
        name: name.into(),
        text: text.into(),
        params,
        formula,
    }
}

/// Formulas over a graph vocabulary (relation 0) whose truth is expected
/// to be read off the closure type at desk-scale `n`.
pub fn shipped_catalog() -> Vec<CatalogFormula> {
    use Term::{Bound as X, Param as P};
    let a = P(0);
    let b = P(1);
    vec![
        entry("edge", "E(a,b)", 2, Formula::Atomic(Literal::rel(0, &[a, b], true))),
        entry("equal", "a = b", 2, Formula::Atomic(Literal::eq(a, b, true))),
        entry(
            "has-neighbor",
            "∃x E(a,x)",
            1,
            Formula::Exists(vec![Literal::rel(0, &[a, X], true)]),
        ),
        entry(
            "private-neighbor",
            "∃x (E(a,x) ∧ ¬E(b,x) ∧ x ≠ b)",
            2,
            Formula::Exists(vec![
                Literal::rel(0, &[a, X], true),
                Literal::rel(0, &[b, X], false),
                Literal::eq(X, b, false),
            ]),
        ),
        entry(
            "common-non-neighbor",
            "∃x (¬E(a,x) ∧ ¬E(b,x) ∧ x ≠ a ∧ x ≠ b)",
            2,
            Formula::Exists(vec![
                Literal::rel(0, &[a, X], false),
                Literal::rel(0, &[b, X], false),
                Literal::eq(X, a, false),
                Literal::eq(X, b, false),
            ]),
        ),
    ]
}

/// The shipped catalog plus `∃x (E(a,x) ∧ E(b,x))`, whose witness count has
/// mean `n^(1-2α)`: only a handful at `n = 1000, α = 0.45`, so it shows
/// finite-size collisions.
pub fn extended_catalog() -> Vec<CatalogFormula> {
    use Term::{Bound as X, Param as P};
    let mut c = shipped_catalog();
    c.push(entry(
        "common-neighbor",
        "∃x (E(a,x) ∧ E(b,x))",
        2,
        Formula::Exists(vec![
            Literal::rel(0, &[P(0), X], true),
            Literal::rel(0, &[P(1), X], true),
        ]),
    ));
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QeTrial {
    pub trial: usize,
    pub tuples: usize,
    /// True instances per formula, in catalog order.
    pub true_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionGroup {
    pub formula: String,
    pub closure_type: String,
    pub true_count: usize,
    pub false_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormulaSummary {
    pub name: String,
    pub text: String,
    pub tuples: usize,
    pub groups: usize,
    pub collision_groups: usize,
    /// Tuples disagreeing with the majority value of their group.
    pub collisions: usize,
    pub collision_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QeReport {
    pub k: usize,
    pub tuples: usize,
    pub collisions: usize,
    pub collision_fraction: f64,
    pub formulas: Vec<FormulaSummary>,
    pub collision_groups: Vec<CollisionGroup>,
    pub trials: Vec<QeTrial>,
}

/// Sampled tuples of `arity` distinct elements. Pairs alternate between
/// uniform pairs and endpoints of a uniform atom of relation 0.
fn sample_tuples<R: Rng + ?Sized>(m: &RelStructure, arity: usize, count: usize, rng: &mut R) -> Vec<Vec<u32>> {
    let n = m.size();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        if arity == 2 && i % 2 == 1 && m.tuple_count(0) > 0 && m.arity(0) == 2 {
            let j = rng.random_range(0..m.tuple_count(0));
            out.push(m.tuples(0).nth(j).expect("index in range").to_vec());
        } else {
            out.push(sample(rng, n, arity).into_iter().map(|j| j as u32).collect());
        }
    }
    out
}

/// Group sampled parameter tuples by the isomorphism type of their
/// `k`-closure (with the tuple pinned) and report groups in which a
/// formula takes both truth values.
pub fn qe_determinism_experiment(formulas: &[CatalogFormula], k: usize, cfg: &SampleConfig) -> Result<QeReport> {
    if formulas.iter().any(|f| f.params == 0 || f.params > 2) {
        return Err(Error::invalid("catalog formulas take one or two parameters"));
    }
    let per_trial = cfg.run_trials(|t| {
        let (m, mut rng) = cfg.draw(t)?;
        let mut recs: Vec<(usize, CanonicalForm, bool)> = Vec::new();
        let mut true_counts = vec![0usize; formulas.len()];
        let mut tuples = 0;
        for arity in 1..=2usize {
            let users: Vec<usize> = (0..formulas.len()).filter(|&i| formulas[i].params == arity).collect();
            if users.is_empty() {
                continue;
            }
            for tup in sample_tuples(&m, arity, cfg.embed_cap, &mut rng) {
                let cl = closure(&normalize_set(&tup), &m, k, &cfg.ctx)?.result;
                let sub = m.induced(&cl)?;
                let consts: Vec<u32> = tup
                    .iter()
                    .map(|x| cl.binary_search(x).expect("tuple lies in its closure") as u32)
                    .collect();
                let key = canonical_form_with(&sub, &consts)?;
                for &fi in &users {
                    let v = formulas[fi].formula.eval(&m, &tup);
                    if v {
                        true_counts[fi] += 1;
                    }
                    tuples += 1;
                    recs.push((fi, key.clone(), v));
                }
            }
        }
        Ok((
            QeTrial {
                trial: t,
                tuples,
                true_counts,
            },
            recs,
        ))
    })?;
    let mut groups: BTreeMap<(usize, CanonicalForm), (usize, usize)> = BTreeMap::new();
    let mut trials = Vec::with_capacity(per_trial.len());
    for (trial, recs) in per_trial {
        for (fi, key, v) in recs {
            let g = groups.entry((fi, key)).or_default();
            if v {
                g.0 += 1;
            } else {
                g.1 += 1;
            }
        }
        trials.push(trial);
    }
    let mut summaries: Vec<FormulaSummary> = formulas
        .iter()
        .map(|f| FormulaSummary {
            name: f.name.clone(),
            text: f.text.clone(),
            tuples: 0,
            groups: 0,
            collision_groups: 0,
            collisions: 0,
            collision_fraction: 0.0,
        })
        .collect();
    let mut collision_groups = Vec::new();
    for ((fi, key), (tc, fc)) in &groups {
        let s = &mut summaries[*fi];
        s.tuples += tc + fc;
        s.groups += 1;
        if *tc > 0 && *fc > 0 {
            s.collision_groups += 1;
            s.collisions += tc.min(fc);
            collision_groups.push(CollisionGroup {
                formula: formulas[*fi].name.clone(),
                closure_type: key.to_string(),
                true_count: *tc,
                false_count: *fc,
            });
        }
    }
    for s in &mut summaries {
        s.collision_fraction = if s.tuples > 0 { s.collisions as f64 / s.tuples as f64 } else { 0.0 };
    }
    let tuples: usize = summaries.iter().map(|s| s.tuples).sum();
    let collisions: usize = summaries.iter().map(|s| s.collisions).sum();
    Ok(QeReport {
        k,
        tuples,
        collisions,
        collision_fraction: if tuples > 0 { collisions as f64 / tuples as f64 } else { 0.0 },
        formulas: summaries,
        collision_groups,
        trials,
    })
}
