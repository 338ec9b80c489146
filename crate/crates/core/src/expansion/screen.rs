use std::borrow::Cow;
use std::ops::ControlFlow;

use itertools::Itertools;
use serde::Serialize;

use super::context::ExpansionContext;
use super::plus::{NewAtom, PlusLattice};
use crate::error::{Error, Result};
use crate::structures::{write_structure, RelStructure, SubPair, Vocabulary};
use crate::weights::{Lattice, ZERO_TOL};

pub const SCREEN_SIZE_LIMIT: usize = 7;
pub const DEFAULT_SCREEN_BUDGET: usize = 2000;
const SIGNATURE_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// A base pair with zero weight.
    Base,
    /// A qr pair of the expansion with zero `β`.
    Expanded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomClassCount {
    pub relation: String,
    /// Base atom count on the atom's elements, when the exponent depends on it.
    pub base_atoms: Option<u32>,
    pub beta: f64,
    pub count: usize,
}

/// What a pair contributes to a weight: new elements and new atoms by type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signature {
    pub new_elements: usize,
    pub base_atoms: Vec<usize>,
    pub new_atoms: Vec<AtomClassCount>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub signature: Signature,
    pub small: Vec<u32>,
    pub witness: String,
    #[serde(skip)]
    pub pair: SubPair,
}

/// A zero signature for which the search budget ran out before either a
/// qr realization was found or all placements were ruled out.
#[derive(Debug, Clone, Serialize)]
pub struct Unresolved {
    pub signature: Signature,
    pub tried: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScreenReport {
    pub size_bound: usize,
    pub budget: usize,
    pub zero_signatures: usize,
    pub violations: Vec<Violation>,
    pub unresolved: Vec<Unresolved>,
}

impl ScreenReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.unresolved.is_empty()
    }
}

fn potential(vocab: &Vocabulary, rel: usize, s: usize, d: usize) -> Vec<Vec<u32>> {
    let r = vocab.relation(rel);
    let first_new = (s - d) as u32;
    let touches = |t: &Vec<u32>| t.iter().any(|&x| x >= first_new);
    if r.symmetric {
        (0..s as u32).combinations(r.arity).filter(touches).collect()
    } else {
        (0..s as u32).permutations(r.arity).filter(touches).collect()
    }
}

fn potential_count(vocab: &Vocabulary, rel: usize, s: usize, d: usize) -> usize {
    let r = vocab.relation(rel);
    let count = |v: usize| -> usize {
        if v < r.arity {
            return 0;
        }
        let ordered: usize = (0..r.arity).map(|i| v - i).product();
        if r.symmetric {
            ordered / (1..=r.arity).product::<usize>()
        } else {
            ordered
        }
    };
    count(s) - count(s - d)
}

fn odometer(limits: &[usize]) -> Result<Vec<Vec<usize>>> {
    let total = limits
        .iter()
        .try_fold(1usize, |acc, &l| acc.checked_mul(l + 1))
        .filter(|&t| t <= SIGNATURE_LIMIT)
        .ok_or_else(|| Error::TooLarge("too many weight signatures to screen".into()))?;
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0usize; limits.len()];
    loop {
        out.push(cur.clone());
        let mut i = 0;
        loop {
            if i == limits.len() {
                return Ok(out);
            }
            if cur[i] < limits[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

fn mask(t: &[u32]) -> u32 {
    t.iter().fold(0, |m, &x| m | 1 << x)
}

fn choose<F>(pools: &[Vec<Vec<u32>>], counts: &[usize], acc: &mut Vec<Vec<Vec<u32>>>, f: &mut F) -> ControlFlow<()>
where
    F: FnMut(&[Vec<Vec<u32>>]) -> ControlFlow<()>,
{
    let i = acc.len();
    if i == pools.len() {
        return f(acc);
    }
    for c in pools[i].iter().cloned().combinations(counts[i]) {
        acc.push(c);
        let r = choose(pools, counts, acc, f);
        acc.pop();
        r?;
    }
    ControlFlow::Continue(())
}

/// One class of new atoms: a new relation, and a base atom count when the
/// relation has per-count overrides.
#[derive(Debug, Clone)]
struct AtomClass {
    rel: usize,
    key: Option<u32>,
    beta: f64,
}

fn atom_classes(ctx: &ExpansionContext) -> Vec<AtomClass> {
    let base = ctx.base();
    let mut out = Vec::new();
    for rel in ctx.base_len()..ctx.vocab().len() {
        if ctx.has_overrides(rel) {
            let arity = ctx.vocab().relation(rel).arity;
            let max_key: u64 = (0..ctx.base_len()).map(|r| base.max_atoms(r, arity)).sum();
            for key in 0..=max_key as u32 {
                out.push(AtomClass {
                    rel,
                    key: Some(key),
                    beta: ctx.atom_params(rel, key).0,
                });
            }
        } else {
            out.push(AtomClass {
                rel,
                key: None,
                beta: ctx.atom_params(rel, 0).0,
            });
        }
    }
    out
}

/// Screen for zero weights: every base pair with `|w| ≤ 1e-9`, and every
/// qr pair of the expansion with `|β| ≤ 1e-9`, on at most `size_bound`
/// elements.
///
/// Weights depend only on the signature of a pair (new elements, new atoms
/// by type), so signatures are enumerated first. A zero base signature is
/// reported with a constructed witness. A zero expanded signature is
/// searched for a qr realization, trying at most `budget` placements; it
/// is reported as a violation when one is found and as unresolved when the
/// budget runs out first. Witnesses put no atoms inside the small side.
pub fn irrationality_screen(ctx: &ExpansionContext, size_bound: usize, budget: usize) -> Result<ScreenReport> {
    if size_bound == 0 || size_bound > SCREEN_SIZE_LIMIT {
        return Err(Error::invalid(format!(
            "screen size bound must lie in 1..={SCREEN_SIZE_LIMIT}, got {size_bound}"
        )));
    }
    let base = ctx.base();
    let nb = ctx.base_len();
    let vocab = ctx.vocab();
    let classes = atom_classes(ctx);
    let mut report = ScreenReport {
        size_bound,
        budget,
        zero_signatures: 0,
        violations: Vec::new(),
        unresolved: Vec::new(),
    };
    for d in 1..=size_bound {
        let lim: Vec<usize> = (0..nb).map(|r| potential_count(vocab, r, size_bound, d)).collect();
        for a in odometer(&lim)? {
            let w = d as f64 - (0..nb).map(|r| base.alpha(r) * a[r] as f64).sum::<f64>();
            if w.abs() <= ZERO_TOL {
                report.zero_signatures += 1;
                report.violations.push(base_witness(ctx, d, &a, w, size_bound)?);
                continue;
            }
            if classes.is_empty() || w < 0.0 {
                continue;
            }
            let blim: Vec<usize> = classes
                .iter()
                .map(|c| potential_count(vocab, c.rel, size_bound, d))
                .collect();
            for b in odometer(&blim)? {
                let value = w + classes.iter().zip(&b).map(|(c, &n)| c.beta * n as f64).sum::<f64>();
                if value.abs() > ZERO_TOL {
                    continue;
                }
                report.zero_signatures += 1;
                let sig = Signature {
                    new_elements: d,
                    base_atoms: a.clone(),
                    new_atoms: classes
                        .iter()
                        .zip(&b)
                        .filter(|(_, &n)| n > 0)
                        .map(|(c, &n)| AtomClassCount {
                            relation: vocab.relation(c.rel).name.clone(),
                            base_atoms: c.key,
                            beta: c.beta,
                            count: n,
                        })
                        .collect(),
                    value,
                };
                match search_qr(ctx, &classes, d, &a, &b, size_bound, budget)? {
                    Search::Found(pair) => report.violations.push(Violation {
                        kind: ViolationKind::Expanded,
                        small: pair.small().to_vec(),
                        witness: write_structure(&pair.big),
                        signature: sig,
                        pair,
                    }),
                    Search::Exhausted(tried) => report.unresolved.push(Unresolved { signature: sig, tried }),
                    Search::None => {}
                }
            }
        }
    }
    Ok(report)
}

fn base_witness(ctx: &ExpansionContext, d: usize, a: &[usize], w: f64, bound: usize) -> Result<Violation> {
    let vocab = ctx.base().vocab();
    let nb = ctx.base_len();
    let s = (d..=bound)
        .find(|&s| (0..nb).all(|r| a[r] <= potential_count(vocab, r, s, d)))
        .ok_or_else(|| Error::Internal("signature limits exceed the size bound".into()))?;
    let mut tuples = Vec::new();
    for (rel, &n) in a.iter().enumerate() {
        for t in potential(vocab, rel, s, d).into_iter().take(n) {
            tuples.push((rel, t));
        }
    }
    let big = RelStructure::new(vocab.clone(), s, tuples)?;
    let small: Vec<u32> = (0..(s - d) as u32).collect();
    let pair = SubPair::new(big, &small)?;
    Ok(Violation {
        kind: ViolationKind::Base,
        signature: Signature {
            new_elements: d,
            base_atoms: a.to_vec(),
            new_atoms: Vec::new(),
            value: w,
        },
        small,
        witness: write_structure(&pair.big),
        pair,
    })
}

enum Search {
    Found(SubPair),
    Exhausted(usize),
    None,
}

fn search_qr(
    ctx: &ExpansionContext,
    classes: &[AtomClass],
    d: usize,
    a: &[usize],
    b: &[usize],
    bound: usize,
    budget: usize,
) -> Result<Search> {
    let vocab = ctx.vocab();
    let nb = ctx.base_len();
    let new_rels: Vec<usize> = (nb..vocab.len()).collect();
    let per_rel: Vec<usize> = new_rels
        .iter()
        .map(|&rel| classes.iter().zip(b).filter(|(c, _)| c.rel == rel).map(|(_, &n)| n).sum())
        .collect();
    let mut tried = 0usize;
    let mut found: Option<(usize, Vec<(usize, Vec<u32>)>)> = None;
    for s in d..=bound {
        if (0..nb).any(|r| a[r] > potential_count(vocab, r, s, d))
            || new_rels
                .iter()
                .zip(&per_rel)
                .any(|(&rel, &n)| n > potential_count(vocab, rel, s, d))
        {
            continue;
        }
        let base_pools: Vec<Vec<Vec<u32>>> = (0..nb).map(|r| potential(vocab, r, s, d)).collect();
        let new_pools: Vec<Vec<Vec<u32>>> = new_rels.iter().map(|&r| potential(vocab, r, s, d)).collect();
        let x = (1u32 << (s - d)) - 1;
        let y = (1u32 << s) - 1;
        let elems: Vec<u32> = (0..s as u32).collect();
        let flow = choose(&base_pools, a, &mut Vec::new(), &mut |base_pick| {
            let atoms: Vec<Vec<u32>> = base_pick.iter().map(|ts| ts.iter().map(|t| mask(t)).collect()).collect();
            let lat = Lattice::from_parts(elems.clone(), ctx.base().alphas().to_vec(), atoms);
            if !matches!(lat.strong(x, y), Ok(true)) {
                tried += 1;
                return if tried >= budget { ControlFlow::Break(()) } else { ControlFlow::Continue(()) };
            }
            choose(&new_pools, &per_rel, &mut Vec::new(), &mut |new_pick| {
                tried += 1;
                let mut counts = vec![0usize; classes.len()];
                let mut plus = Vec::new();
                for (i, ts) in new_pick.iter().enumerate() {
                    let rel = new_rels[i];
                    for t in ts {
                        let m = mask(t);
                        let key: u32 = (0..nb).map(|r| lat.count(r, m)).sum();
                        let Some(ci) = classes
                            .iter()
                            .position(|c| c.rel == rel && c.key.is_none_or(|k| k == key))
                        else {
                            return budget_flow(tried, budget);
                        };
                        counts[ci] += 1;
                        let (beta, coeff) = ctx.atom_params(rel, key);
                        plus.push(NewAtom {
                            rel: rel as u32,
                            mask: m,
                            beta,
                            coeff,
                        });
                    }
                }
                if counts != b {
                    return budget_flow(tried, budget);
                }
                let pl = PlusLattice::from_parts(Cow::Borrowed(&lat), plus);
                if matches!(pl.qr(x, y), Ok(true)) {
                    let mut tuples: Vec<(usize, Vec<u32>)> = Vec::new();
                    for (rel, ts) in base_pick.iter().enumerate() {
                        tuples.extend(ts.iter().map(|t| (rel, t.clone())));
                    }
                    for (i, ts) in new_pick.iter().enumerate() {
                        tuples.extend(ts.iter().map(|t| (new_rels[i], t.clone())));
                    }
                    found = Some((s, tuples));
                    return ControlFlow::Break(());
                }
                budget_flow(tried, budget)
            })
        });
        if let Some((s, tuples)) = found {
            let big = RelStructure::new(vocab.clone(), s, tuples)?;
            let small: Vec<u32> = (0..(s - d) as u32).collect();
            return Ok(Search::Found(SubPair::new(big, &small)?));
        }
        if flow.is_break() {
            return Ok(Search::Exhausted(tried));
        }
    }
    Ok(Search::None)
}

fn budget_flow(tried: usize, budget: usize) -> ControlFlow<()> {
    if tried >= budget {
        ControlFlow::Break(())
    } else {
        ControlFlow::Continue(())
    }
}
