use serde::Serialize;

use super::context::BaseContext;
use super::lattice::{submasks, Lattice};
use crate::error::{Error, Result};

const MAX_POTENTIAL_ATOMS: usize = 22;

/// An algebraic pair `C1 ⊊ C2` on the elements `0..size`, with the least
/// `|w(C, C2)|` over `C1 ⊆ C ⊊ C2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraicType {
    pub size: usize,
    pub small: u32,
    pub atoms: Vec<Vec<u32>>,
    pub margin: f64,
}

/// All algebraic pairs of labelled structures with at most `k` elements.
/// Fails on any zero weight.
pub fn algebraic_types(k: usize, ctx: &BaseContext) -> Result<Vec<AlgebraicType>> {
    let mut out = Vec::new();
    for v in 1..=k {
        // potential atoms on v elements: (relation, mask)
        let mut pot: Vec<(usize, u32)> = Vec::new();
        for rel in 0..ctx.vocab().len() {
            let r = ctx.vocab().relation(rel);
            for mask in 1u32..(1 << v) {
                if mask.count_ones() as usize != r.arity {
                    continue;
                }
                // ordered tuples on the same set share a mask but are distinct atoms
                let copies = if r.symmetric { 1 } else { (1..=r.arity).product() };
                for _ in 0..copies {
                    pot.push((rel, mask));
                }
            }
        }
        if pot.len() > MAX_POTENTIAL_ATOMS {
            return Err(Error::TooLarge(format!(
                "{} potential atoms on {v} elements",
                pot.len()
            )));
        }
        let elems: Vec<u32> = (0..v as u32).collect();
        for pick in 0u32..(1 << pot.len()) {
            let mut atoms = vec![Vec::new(); ctx.vocab().len()];
            for (i, &(rel, m)) in pot.iter().enumerate() {
                if pick >> i & 1 == 1 {
                    atoms[rel].push(m);
                }
            }
            let lat = Lattice::from_parts(elems.clone(), ctx.alphas().to_vec(), atoms.clone());
            let full = lat.full();
            for small in submasks(full) {
                if small == full || !lat.algebraic(small, full)? {
                    continue;
                }
                let margin = submasks(full & !small)
                    .filter(|&s| small | s != full)
                    .map(|s| lat.weight(small | s, full).abs())
                    .fold(f64::INFINITY, f64::min);
                out.push(AlgebraicType {
                    size: v,
                    small,
                    atoms: atoms.clone(),
                    margin,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ClosureBound {
    Finite {
        bound: u64,
        /// least weight drop of one algebraic step
        delta: Option<f64>,
        /// most elements one algebraic step adds
        max_gain: usize,
    },
    Overflow {
        bound: f64,
        cap: u64,
    },
}

impl ClosureBound {
    pub fn value(&self) -> Option<u64> {
        match self {
            ClosureBound::Finite { bound, .. } => Some(*bound),
            ClosureBound::Overflow { .. } => None,
        }
    }
}

/// Upper bound on `|cl^k(A, M)|` for `|A| ≤ ℓ`, valid for every `M` in
/// which each subset has non-negative weight over the empty set (true of
/// random structures with probability tending to 1).
///
/// Adding one witness `B` to a set `D` changes `w(∅, D)` by at most
/// `w(B ∩ D, B) ≤ −δ` and adds at most `max_gain` elements; starting from
/// `w(∅, A) ≤ ℓ`, at most `⌊ℓ/δ⌋` steps fit.
pub fn closure_bound(k: usize, ell: usize, ctx: &BaseContext, search_cap: u64) -> Result<ClosureBound> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let types = algebraic_types(k, ctx)?;
    if types.is_empty() || ell == 0 {
        return Ok(ClosureBound::Finite {
            bound: ell as u64,
            delta: None,
            max_gain: 0,
        });
    }
    let delta = types.iter().map(|t| t.margin).fold(f64::INFINITY, f64::min);
    let max_gain = types
        .iter()
        .map(|t| t.size - t.small.count_ones() as usize)
        .max()
        .unwrap_or(0);
    let steps = (ell as f64 / delta + 1e-9).floor();
    let bound = ell as f64 + steps * max_gain as f64;
    if bound > search_cap as f64 {
        return Ok(ClosureBound::Overflow {
            bound,
            cap: search_cap,
        });
    }
    Ok(ClosureBound::Finite {
        bound: bound as u64,
        delta: Some(delta),
        max_gain,
    })
}
