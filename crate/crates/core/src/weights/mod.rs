//! Weight calculus of the base context: weights, sign classification,
//! decompositions and closures.

mod bound;
mod closure;
mod context;
mod lattice;

use serde::Serialize;

pub use bound::{algebraic_types, closure_bound, AlgebraicType, ClosureBound};
pub use closure::{closure, closure_brute_force, closure_iter, connected_sets, ClosureResult};
pub(crate) use context::parse_base_lines;
pub use context::{BaseContext, DEFAULT_EPS};
pub(crate) use lattice::submasks;
pub use lattice::{Lattice, PairKind, LATTICE_LIMIT, ZERO_TOL};

use crate::error::{Error, Result};
use crate::structures::{RelStructure, SubPair};

fn check_vocab(big: &RelStructure, ctx: &BaseContext) -> Result<()> {
    let base = ctx.vocab().relations();
    let have = big.vocab().relations();
    if have.len() < base.len() || have[..base.len()] != *base {
        return Err(Error::invalid("structure vocabulary does not extend the context vocabulary"));
    }
    Ok(())
}

/// Lattice over the whole of `pair.big` with the small side as a mask.
pub fn pair_lattice(pair: &SubPair, ctx: &BaseContext) -> Result<(Lattice, u32, u32)> {
    check_vocab(&pair.big, ctx)?;
    let all: Vec<u32> = pair.big.universe().collect();
    let lat = Lattice::new(ctx.alphas(), &pair.big, &all)?;
    let x = lat.mask_of(pair.small())?;
    let y = lat.full();
    Ok((lat, x, y))
}

/// `w(A, B) = |B∖A| − Σ_R α_R · #(R-atoms of B not inside A)`.
pub fn weight(pair: &SubPair, ctx: &BaseContext) -> Result<f64> {
    check_vocab(&pair.big, ctx)?;
    let small = pair.small();
    let inside = |t: &[u32]| t.iter().all(|x| small.binary_search(x).is_ok());
    let mut w = (pair.big.size() - small.len()) as f64;
    for rel in 0..ctx.vocab().len() {
        let fresh = pair.big.atoms(rel).filter(|t| !inside(t)).count();
        w -= ctx.alpha(rel) * fresh as f64;
    }
    Ok(w)
}

pub fn classify(pair: &SubPair, ctx: &BaseContext) -> Result<PairKind> {
    let (lat, x, y) = pair_lattice(pair, ctx)?;
    lat.classify(x, y)
}

/// Decomposition chain as element sets of `pair.big`.
pub fn decompose(pair: &SubPair, ctx: &BaseContext) -> Result<Vec<Vec<u32>>> {
    let (lat, x, y) = pair_lattice(pair, ctx)?;
    Ok(lat.decompose(x, y)?.into_iter().map(|m| lat.set_of(m)).collect())
}

pub fn alpha_strong(pair: &SubPair, ctx: &BaseContext) -> Result<f64> {
    let (lat, x, y) = pair_lattice(pair, ctx)?;
    lat.alpha_strong(x, y)
}

/// A pair together with its weight, kind and (for strong pairs) its
/// decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedPair {
    #[serde(skip)]
    pub pair: SubPair,
    pub weight: f64,
    pub kind: PairKind,
    pub decomposition: Option<Vec<Vec<u32>>>,
}

impl WeightedPair {
    pub fn analyze(pair: SubPair, ctx: &BaseContext) -> Result<Self> {
        let (lat, x, y) = pair_lattice(&pair, ctx)?;
        let kind = lat.classify(x, y)?;
        let decomposition = if kind.is_strong() || kind == PairKind::Equal {
            Some(lat.decompose(x, y)?.into_iter().map(|m| lat.set_of(m)).collect())
        } else {
            None
        };
        Ok(WeightedPair {
            weight: lat.weight(x, y),
            pair,
            kind,
            decomposition,
        })
    }
}
