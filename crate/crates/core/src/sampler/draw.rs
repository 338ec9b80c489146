use std::collections::BTreeSet;

use itertools::Itertools;
use rand::Rng;

use crate::error::{Error, Result};
use crate::expansion::ExpansionContext;
use crate::structures::RelStructure;
use crate::weights::BaseContext;

const EXPLICIT_LIMIT: u64 = 50_000_000;

/// Number of failures before the next success of a Bernoulli(`p`) sequence.
fn geometric<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    let u: f64 = rng.random();
    let g = ((1.0 - u).ln() / (-p).ln_1p()).floor();
    if g.is_finite() && g < u64::MAX as f64 {
        g as u64
    } else {
        u64::MAX
    }
}

fn decode(mut idx: u64, n: u64, arity: usize, out: &mut Vec<u32>) {
    out.clear();
    for _ in 0..arity {
        out.push((idx % n) as u32);
        idx /= n;
    }
    out.reverse();
}

fn admissible(t: &[u32], increasing: bool) -> bool {
    if increasing {
        t.windows(2).all(|w| w[0] < w[1])
    } else {
        (0..t.len()).all(|i| !t[i + 1..].contains(&t[i]))
    }
}

/// Include each irreflexive tuple (increasing tuples only when `increasing`)
/// of `0..n` independently with probability `p`, visiting the index space
/// `n^arity` by geometric skips. `keep` filters tuples after the draw.
fn bernoulli_tuples<R, K>(n: usize, arity: usize, p: f64, increasing: bool, rng: &mut R, mut keep: K) -> Result<Vec<Vec<u32>>>
where
    R: Rng + ?Sized,
    K: FnMut(&[u32]) -> bool,
{
    let space = (n as u64)
        .checked_pow(arity as u32)
        .ok_or_else(|| Error::TooLarge(format!("{n}^{arity} potential tuples")))?;
    let mut out = Vec::new();
    if p <= 0.0 || space == 0 {
        return Ok(out);
    }
    let mut t = Vec::with_capacity(arity);
    if p >= 1.0 {
        if space > EXPLICIT_LIMIT {
            return Err(Error::TooLarge(format!("{space} tuples with probability 1")));
        }
        for idx in 0..space {
            decode(idx, n as u64, arity, &mut t);
            if admissible(&t, increasing) && keep(&t) {
                out.push(t.clone());
            }
        }
        return Ok(out);
    }
    let mut idx = 0u64;
    loop {
        idx = match idx.checked_add(geometric(rng, p)) {
            Some(i) if i < space => i,
            _ => break,
        };
        decode(idx, n as u64, arity, &mut t);
        if admissible(&t, increasing) && keep(&t) {
            out.push(t.clone());
        }
        idx += 1;
    }
    Ok(out)
}

/// Base structure on `0..n`: each potential atom of relation `R` is present
/// independently with probability `min(1, c_R · n^(-α_R))`. Symmetric
/// relations are drawn once per element set.
pub fn draw_base<R: Rng + ?Sized>(n: usize, ctx: &BaseContext, rng: &mut R) -> Result<RelStructure> {
    if n < 2 {
        return Err(Error::invalid(format!("universe size must be at least 2, got {n}")));
    }
    let mut tuples = Vec::new();
    for (rel, r) in ctx.vocab().relations().iter().enumerate() {
        let p = (ctx.coeff(rel) * (n as f64).powf(-ctx.alpha(rel))).clamp(0.0, 1.0);
        for t in bernoulli_tuples(n, r.arity, p, r.symmetric, rng, |_| true)? {
            tuples.push((rel, t));
        }
    }
    RelStructure::new(ctx.vocab().clone(), n, tuples)
}

/// Probability `min(1, c · n^β / h(n))` of one new atom of `rel` whose
/// element set carries `base_atoms` base atoms.
pub fn new_atom_probability(ctx: &ExpansionContext, rel: usize, base_atoms: u32, n: usize) -> f64 {
    let (beta, c) = ctx.atom_params(rel, base_atoms);
    (c * (n as f64).powf(beta) / ctx.h().value(n)).clamp(0.0, 1.0)
}

/// Base atoms of `m` whose elements all lie in `t`.
fn base_atoms_in(m: &RelStructure, nb: usize, t: &[u32]) -> u32 {
    let mut k = 0;
    for rel in 0..nb {
        let r = m.vocab().relation(rel);
        if r.arity > t.len() {
            continue;
        }
        let subs: Vec<Vec<u32>> = if r.symmetric {
            t.iter().copied().sorted().combinations(r.arity).collect()
        } else {
            t.iter().copied().permutations(r.arity).collect()
        };
        k += subs.iter().filter(|s| m.holds(rel, s)).count() as u32;
    }
    k
}

/// Expansion of `m` by the new relations of `ctx`, drawn in stages by arity
/// and, within a stage, in vocabulary order. The base relations are copied
/// unchanged.
pub fn draw_expansion<R: Rng + ?Sized>(m: &RelStructure, ctx: &ExpansionContext, rng: &mut R) -> Result<RelStructure> {
    let nb = ctx.base_len();
    if m.vocab().relations() != ctx.base().vocab().relations() {
        return Err(Error::invalid("structure is not over the base vocabulary of the expansion"));
    }
    let n = m.size();
    let vocab = ctx.vocab();
    let mut order: Vec<usize> = (nb..vocab.len()).collect();
    order.sort_by_key(|&rel| vocab.relation(rel).arity);
    let mut extra = Vec::new();
    for rel in order {
        let r = vocab.relation(rel);
        if !ctx.has_overrides(rel) {
            let p = new_atom_probability(ctx, rel, 0, n);
            for t in bernoulli_tuples(n, r.arity, p, r.symmetric, rng, |_| true)? {
                extra.push((rel, t));
            }
            continue;
        }
        let p0 = new_atom_probability(ctx, rel, 0, n);
        for t in bernoulli_tuples(n, r.arity, p0, r.symmetric, rng, |t| base_atoms_in(m, nb, t) == 0)? {
            extra.push((rel, t));
        }
        // Tuples whose element set carries a base atom, listed explicitly.
        let mut cands: BTreeSet<Vec<u32>> = BTreeSet::new();
        for brel in 0..nb {
            let q = m.arity(brel);
            if q > r.arity {
                continue;
            }
            let fill = r.arity - q;
            let per_atom = (n as u64).saturating_pow(fill as u32);
            if per_atom.saturating_mul(m.atom_count(brel) as u64) > EXPLICIT_LIMIT {
                return Err(Error::TooLarge("too many candidate tuples for per-count exponents".into()));
            }
            let fills: Vec<Vec<u32>> = if fill == 0 {
                vec![Vec::new()]
            } else {
                (0..fill).map(|_| 0..n as u32).multi_cartesian_product().collect()
            };
            for atom in m.atoms(brel) {
                for rest in &fills {
                    let mut set: Vec<u32> = atom.iter().chain(rest).copied().collect();
                    set.sort_unstable();
                    if set.windows(2).any(|w| w[0] == w[1]) {
                        continue;
                    }
                    if r.symmetric {
                        cands.insert(set);
                    } else {
                        cands.extend(set.into_iter().permutations(r.arity));
                    }
                }
            }
        }
        for t in cands {
            let k = base_atoms_in(m, nb, &t);
            let p = new_atom_probability(ctx, rel, k, n);
            if rng.random::<f64>() < p {
                extra.push((rel, t));
            }
        }
    }
    m.expand(vocab.clone(), extra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{HFunction, NewRelation};
    use crate::sampler::trial_rng;
    use crate::structures::Relation;

    #[test]
    fn seed_determinism() {
        let ctx = BaseContext::graph(0.6).unwrap();
        let a = draw_base(300, &ctx, &mut trial_rng(5, 0)).unwrap();
        let b = draw_base(300, &ctx, &mut trial_rng(5, 0)).unwrap();
        let c = draw_base(300, &ctx, &mut trial_rng(5, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn reduct_is_preserved() {
        let base = BaseContext::graph(0.5).unwrap();
        let plus = ExpansionContext::new(
            base.clone(),
            vec![NewRelation {
                relation: Relation::new("S", 2, true),
                beta: -0.3,
                coeff: 0.5,
            }],
        )
        .unwrap()
        .with_override(1, 1, -0.1, 0.9)
        .unwrap();
        let mut rng = trial_rng(1, 0);
        let m = draw_base(200, &base, &mut rng).unwrap();
        let mp = draw_expansion(&m, &plus, &mut rng).unwrap();
        assert_eq!(mp.reduct(1), m);
        assert!(mp.atom_count(1) > 0);
    }

    #[test]
    fn log_divisor() {
        let base = BaseContext::graph(0.5).unwrap();
        let plus = ExpansionContext::trivial(base)
            .combine(&[NewRelation {
                relation: Relation::new("P", 1, false),
                beta: 0.0,
                coeff: 0.5,
            }])
            .unwrap()
            .with_h(HFunction::Log);
        let p = new_atom_probability(&plus, 1, 0, 1000);
        assert!((p - 0.5 / 1000f64.ln()).abs() < 1e-12);
    }
}
