//! Random expansions: `β` weights of expanded pairs, the derived pair
//! classes b, j, t and qr, and the zero-weight screen.

mod context;
mod plus;
mod screen;

use serde::Serialize;

pub use context::{parse_context_file, AtomOverride, ExpansionContext, HFunction, NewRelation};
pub use plus::{new_atoms, NewAtom, PlusFlags, PlusKind, PlusLattice};
pub use screen::{
    irrationality_screen, AtomClassCount, ScreenReport, Signature, Unresolved, Violation, ViolationKind,
    DEFAULT_SCREEN_BUDGET, SCREEN_SIZE_LIMIT,
};

use crate::error::{Error, Result};
use crate::structures::{RelStructure, SubPair};

/// Lattice over the whole of `pair.big` with the small side as a mask.
pub fn plus_lattice(pair: &SubPair, ctx: &ExpansionContext) -> Result<(PlusLattice<'static>, u32, u32)> {
    let all: Vec<u32> = pair.big.universe().collect();
    let pl = PlusLattice::new(ctx, &pair.big, &all)?;
    let x = pl.base().mask_of(pair.small())?;
    let y = pl.base().full();
    Ok((pl, x, y))
}

/// `β(A⁺, B⁺)`: the reduct weight summed along a decomposition, plus the
/// exponents of new atoms not inside `A⁺`. The reduct pair must be strong.
pub fn beta_pair(pair: &SubPair, ctx: &ExpansionContext) -> Result<f64> {
    let (pl, x, y) = plus_lattice(pair, ctx)?;
    pl.beta_decomposed(x, y)
}

/// `β(A, B) + β(B, C) − β(A, C)` for `A ⊆ B ⊆ C`, with `C` all of `big`.
pub fn beta_additivity_check(big: &RelStructure, a: &[u32], b: &[u32], ctx: &ExpansionContext) -> Result<f64> {
    let all: Vec<u32> = big.universe().collect();
    let pl = PlusLattice::new(ctx, big, &all)?;
    let am = pl.base().mask_of(a)?;
    let bm = pl.base().mask_of(b)?;
    if am & !bm != 0 {
        return Err(Error::invalid("additivity needs A ⊆ B"));
    }
    let c = pl.base().full();
    Ok(pl.beta_decomposed(am, bm)? + pl.beta_decomposed(bm, c)? - pl.beta_decomposed(am, c)?)
}

pub fn classify_plus(pair: &SubPair, ctx: &ExpansionContext) -> Result<PlusKind> {
    let (pl, x, y) = plus_lattice(pair, ctx)?;
    Ok(pl.classify(x, y)?.0)
}

/// Predicted count exponent of a qr pair in the expanded context, with
/// the product of the new atoms' coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedExponent {
    pub exponent: f64,
    pub coefficient: f64,
}

pub fn derived_exponent(pair: &SubPair, ctx: &ExpansionContext) -> Result<DerivedExponent> {
    let (pl, x, y) = plus_lattice(pair, ctx)?;
    let (kind, _, beta) = pl.classify(x, y)?;
    if kind != PlusKind::Qr {
        return Err(Error::invalid(format!("pair is {}, not qr", kind.as_str())));
    }
    Ok(DerivedExponent {
        exponent: beta.ok_or_else(|| Error::Internal("qr pair without beta".into()))?,
        coefficient: pl.coeff_product(x, y),
    })
}

/// An expanded pair with its class, flags and (for strong reducts) `β`.
#[derive(Debug, Clone, Serialize)]
pub struct ExpandedPair {
    #[serde(skip)]
    pub pair: SubPair,
    pub beta: Option<f64>,
    pub kind: PlusKind,
    pub flags: PlusFlags,
}

impl ExpandedPair {
    pub fn analyze(pair: SubPair, ctx: &ExpansionContext) -> Result<Self> {
        let (pl, x, y) = plus_lattice(&pair, ctx)?;
        let (kind, flags, beta) = pl.classify(x, y)?;
        Ok(ExpandedPair {
            pair,
            beta,
            kind,
            flags,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::Relation;
    use crate::weights::BaseContext;

    fn ctx(alpha: f64, new: &[(&str, usize, bool, f64, f64)]) -> ExpansionContext {
        let rels = new
            .iter()
            .map(|&(n, a, s, beta, coeff)| NewRelation {
                relation: Relation::new(n, a, s),
                beta,
                coeff,
            })
            .collect();
        ExpansionContext::new(BaseContext::graph(alpha).unwrap(), rels).unwrap()
    }

    fn pendant(c: &ExpansionContext, extra: &[(usize, Vec<u32>)]) -> SubPair {
        let mut t = vec![(0, vec![0, 1])];
        t.extend_from_slice(extra);
        SubPair::new(RelStructure::new(c.vocab().clone(), 2, t).unwrap(), &[0]).unwrap()
    }

    #[test]
    fn colored_pendant() {
        let c = ctx(0.6, &[("P", 1, false, -0.3, 0.7), ("S", 2, true, -0.5, 0.4)]);
        let p = pendant(&c, &[(1, vec![1])]);
        assert!((beta_pair(&p, &c).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(classify_plus(&p, &c).unwrap(), PlusKind::Qr);
        let e = derived_exponent(&p, &c).unwrap();
        assert!((e.exponent - 0.1).abs() < 1e-12 && (e.coefficient - 0.7).abs() < 1e-12);

        let ps = pendant(&c, &[(1, vec![1]), (2, vec![0, 1])]);
        assert!((beta_pair(&ps, &c).unwrap() + 0.4).abs() < 1e-12);
        // one-step pair: j coincides with b
        let ep = ExpandedPair::analyze(ps.clone(), &c).unwrap();
        assert!(ep.flags.b && !ep.flags.t);
        assert_eq!(ep.kind, PlusKind::J);
        assert!(derived_exponent(&ps, &c).is_err());

        let bare = pendant(&c, &[]);
        let e = derived_exponent(&bare, &c).unwrap();
        assert!((e.exponent - 0.4).abs() < 1e-12 && e.coefficient == 1.0);
        let id = SubPair::identity(bare.big.clone());
        assert_eq!(beta_pair(&id, &c).unwrap(), 0.0);
        assert_eq!(classify_plus(&id, &c).unwrap(), PlusKind::Equal);
    }

    #[test]
    fn algebraic_reduct_is_b() {
        let c = ctx(0.6, &[("P", 1, false, -0.3, 0.7)]);
        let big = RelStructure::new(c.vocab().clone(), 3, vec![(0, vec![0, 2]), (0, vec![1, 2])]).unwrap();
        let p = SubPair::new(big, &[0, 1]).unwrap();
        let ep = ExpandedPair::analyze(p.clone(), &c).unwrap();
        assert!(ep.flags.b && !ep.flags.t);
        assert!(ep.beta.is_none());
        assert!(beta_pair(&p, &c).is_err());
    }

    #[test]
    fn zero_beta_qr_is_an_error() {
        let c = ctx(0.5, &[("S", 2, true, -0.5, 0.8)]);
        let p = pendant(&c, &[(1, vec![0, 1])]);
        assert!(matches!(classify_plus(&p, &c), Err(Error::Irrationality { .. })));
    }

    #[test]
    fn chain_additivity() {
        let c = ctx(0.6, &[("P", 1, false, -0.3, 0.7)]);
        let big = RelStructure::new(
            c.vocab().clone(),
            3,
            vec![(0, vec![0, 1]), (0, vec![1, 2]), (1, vec![1]), (1, vec![2])],
        )
        .unwrap();
        let r = beta_additivity_check(&big, &[0], &[0, 1], &c).unwrap();
        assert!(r.abs() < 1e-12);
        assert!(beta_additivity_check(&big, &[0], &[0], &c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn screen_examples() {
        let c = ctx(0.5, &[("S", 2, true, -0.5, 0.8)]);
        let r = irrationality_screen(&c, 3, DEFAULT_SCREEN_BUDGET).unwrap();
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::Expanded));
        // two vertices with a common neighbour: w = 1 - 2 * 0.5
        assert!(r
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Base && v.signature.new_elements == 1 && v.signature.base_atoms == [2]));

        let irr = ExpansionContext::trivial(BaseContext::graph(2f64.sqrt() / 4.0).unwrap());
        let r = irrationality_screen(&irr, 6, DEFAULT_SCREEN_BUDGET).unwrap();
        assert!(r.is_clean(), "{:?}", r.violations);
        assert!(irrationality_screen(&irr, 8, 10).is_err());
    }
}
