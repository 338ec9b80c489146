use std::collections::BTreeSet;

use itertools::Itertools;
use serde::Serialize;

use super::context::BaseContext;
use super::lattice::{Lattice, ZERO_TOL};
use crate::error::{Error, Result};
use crate::structures::{normalize_set, RelStructure};

/// `cl^k(A, M)` with the witness sets that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClosureResult {
    pub base: Vec<u32>,
    pub k: usize,
    pub result: Vec<u32>,
    /// Sets `B` with `|B| ≤ k` and `(B ∩ A, B)` algebraic.
    pub certificate: Vec<Vec<u32>>,
}

/// Connected (in the Gaifman graph of `m`) sets of size `1..=max_size`
/// avoiding `avoid` and containing at least one of `roots`, in sorted
/// order.
pub fn connected_sets(m: &RelStructure, roots: &[u32], avoid: &[bool], max_size: usize) -> Vec<Vec<u32>> {
    let mut all: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut level: BTreeSet<Vec<u32>> = roots
        .iter()
        .filter(|&&r| !avoid[r as usize])
        .map(|&r| vec![r])
        .collect();
    for size in 1..=max_size {
        if level.is_empty() {
            break;
        }
        let mut next = BTreeSet::new();
        if size < max_size {
            for s in &level {
                for &x in s {
                    for &y in m.neighbors(x) {
                        if avoid[y as usize] || s.binary_search(&y).is_ok() {
                            continue;
                        }
                        let mut t = s.clone();
                        let pos = t.binary_search(&y).unwrap_err();
                        t.insert(pos, y);
                        next.insert(t);
                    }
                }
            }
        }
        all.append(&mut level);
        level = next;
    }
    all.into_iter().collect()
}

/// Elements of `a` sharing an atom lying inside `x ∪ a` with some element of `x`.
fn touching(m: &RelStructure, a_mark: &[bool], x: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    for &e in x {
        for &r in m.incident(e) {
            let t = m.tuple(r);
            if t.iter().all(|&y| a_mark[y as usize] || x.binary_search(&y).is_ok()) {
                out.extend(t.iter().filter(|&&y| a_mark[y as usize]));
            }
        }
    }
    normalize_set(&out)
}

/// `w(B ∖ X, B)` for sorted `x ⊆ b`.
fn fresh_weight(m: &RelStructure, alphas: &[f64], x: &[u32], b: &[u32]) -> f64 {
    let mut w = x.len() as f64;
    for &e in x {
        for &r in m.incident(e) {
            let rel = r.rel as usize;
            if rel >= alphas.len() {
                continue;
            }
            let t = m.tuple(r);
            if m.vocab().relation(rel).symmetric && t.windows(2).any(|p| p[0] > p[1]) {
                continue;
            }
            // count each atom once, from its first element in X
            if t.iter().find(|y| x.binary_search(y).is_ok()) != Some(&e) {
                continue;
            }
            if t.iter().all(|y| b.binary_search(y).is_ok()) {
                w -= alphas[rel];
            }
        }
    }
    w
}

fn check_args(a: &[u32], m: &RelStructure, k: usize, ctx: &BaseContext) -> Result<Vec<u32>> {
    if k == 0 {
        return Err(Error::invalid("closure size bound k must be at least 1"));
    }
    let base = ctx.vocab().relations();
    if m.vocab().len() < base.len() || m.vocab().relations()[..base.len()] != *base {
        return Err(Error::invalid("structure vocabulary does not extend the context vocabulary"));
    }
    if let Some(x) = a.iter().find(|&&x| x as usize >= m.size()) {
        return Err(Error::invalid(format!("element {x} outside universe")));
    }
    Ok(normalize_set(a))
}

/// Exact `cl^k(A, M)`.
///
/// Only sets `B = X ∪ Y` with `X = B∖A` connected in the Gaifman graph
/// and `Y ⊆ A` touching `X` are tested: an algebraic `B` whose new part
/// splits into pieces with no common atom yields an algebraic set for each
/// piece over the part of `A` it touches, with the same union. `Y = ∅` is
/// tried only when the context allows sets of size ≤ k to be algebraic
/// over the empty set. Candidates with `w(Y, B) > 0` are dropped before
/// the zero-weight scan, so a degenerate context may go unreported here.
pub fn closure(a: &[u32], m: &RelStructure, k: usize, ctx: &BaseContext) -> Result<ClosureResult> {
    let a = check_args(a, m, k, ctx)?;
    let mut a_mark = vec![false; m.size()];
    for &x in &a {
        a_mark[x as usize] = true;
    }
    let empty_ok = ctx.admits_empty_algebraic(k);
    let roots: Vec<u32> = if empty_ok {
        m.universe().filter(|&x| !a_mark[x as usize]).collect()
    } else {
        let mut r: Vec<u32> = a.iter().flat_map(|&x| m.neighbors(x).iter().copied()).collect();
        r.retain(|&x| !a_mark[x as usize]);
        normalize_set(&r)
    };
    let max_x = if empty_ok { k } else { k - 1 };
    let mut in_result = a_mark.clone();
    let mut certificate = Vec::new();
    for x in connected_sets(m, &roots, &a_mark, max_x) {
        if x.iter().all(|&e| in_result[e as usize]) {
            continue;
        }
        let near = touching(m, &a_mark, &x);
        let room = k - x.len();
        let lo = if empty_ok { 0 } else { 1 };
        let mut hit = None;
        let ys = (lo..=room.min(near.len())).flat_map(|sz| near.iter().copied().combinations(sz));
        for y in ys {
            let mut b = x.clone();
            b.extend_from_slice(&y);
            b.sort_unstable();
            // w(Y, B) < 0 is necessary; skip clear positives cheaply.
            if fresh_weight(m, ctx.alphas(), &x, &b) > ZERO_TOL {
                continue;
            }
            let lat = Lattice::new(ctx.alphas(), m, &b)?;
            let ym = lat.mask_of(&y)?;
            if lat.algebraic(ym, lat.full())? {
                hit = Some(lat.elems().to_vec());
                break;
            }
        }
        if let Some(b) = hit {
            for &e in &x {
                in_result[e as usize] = true;
            }
            certificate.push(b);
        }
    }
    let result = m.universe().filter(|&x| in_result[x as usize]).collect();
    Ok(ClosureResult {
        base: a,
        k,
        result,
        certificate,
    })
}

/// `cl^{k,steps}(A, M)`; `None` iterates to the fixpoint.
pub fn closure_iter(
    a: &[u32],
    m: &RelStructure,
    k: usize,
    steps: Option<usize>,
    ctx: &BaseContext,
) -> Result<Vec<u32>> {
    let mut cur = check_args(a, m, k, ctx)?;
    let mut i = 0;
    loop {
        if steps.is_some_and(|s| i >= s) {
            return Ok(cur);
        }
        let next = closure(&cur, m, k, ctx)?.result;
        if next == cur {
            return Ok(cur);
        }
        cur = next;
        i += 1;
    }
}

/// Closure straight from the definition, trying every subset of size at
/// most `k`. Exponential; for cross-checking on small structures.
pub fn closure_brute_force(a: &[u32], m: &RelStructure, k: usize, ctx: &BaseContext) -> Result<Vec<u32>> {
    let a = check_args(a, m, k, ctx)?;
    if m.size() > 20 {
        return Err(Error::TooLarge("brute-force closure over more than 20 elements".into()));
    }
    let all: Vec<u32> = m.universe().collect();
    let lat = Lattice::new(ctx.alphas(), m, &all)?;
    let am = lat.mask_of(&a)?;
    let mut res = am;
    for b in 1..=lat.full() {
        if b.count_ones() as usize > k || b & !am == 0 {
            continue;
        }
        if lat.algebraic(b & am, b)? {
            res |= b;
        }
    }
    Ok(lat.set_of(res))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c4() -> RelStructure {
        RelStructure::graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn four_cycle_examples() {
        let ctx = BaseContext::graph(0.6).unwrap();
        let m = c4();
        let r = closure(&[0, 2], &m, 3, &ctx).unwrap();
        assert_eq!(r.result, vec![0, 1, 2, 3]);
        assert_eq!(r.certificate, vec![vec![0, 1, 2], vec![0, 2, 3]]);
        assert_eq!(closure(&[1], &m, 3, &ctx).unwrap().result, vec![1]);
        assert_eq!(closure(&[0, 1, 2, 3], &m, 3, &ctx).unwrap().result, vec![0, 1, 2, 3]);
        assert_eq!(closure_iter(&[0, 2], &m, 3, Some(0), &ctx).unwrap(), vec![0, 2]);
        assert_eq!(closure_iter(&[0, 2], &m, 3, None, &ctx).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(closure_brute_force(&[0, 2], &m, 3, &ctx).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn k_zero_rejected() {
        let ctx = BaseContext::graph(0.6).unwrap();
        assert!(closure(&[0], &c4(), 0, &ctx).is_err());
    }

    #[test]
    fn connected_set_listing() {
        let p = RelStructure::graph(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let avoid = vec![false; 4];
        let sets = connected_sets(&p, &[1], &avoid, 2);
        assert_eq!(sets, vec![vec![0, 1], vec![1], vec![1, 2]]);
    }
}
