use std::cell::RefCell;
use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::structures::RelStructure;

/// Weights with absolute value at most this are treated as zero.
pub const ZERO_TOL: f64 = 1e-9;

/// Largest element set a [`Lattice`] can index.
pub const LATTICE_LIMIT: usize = 32;

const TABLE_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Equal,
    Algebraic,
    Strong,
    Primitive,
    Mixed,
}

impl PairKind {
    /// Strong in the wide sense: primitive pairs are strong too.
    pub fn is_strong(self) -> bool {
        matches!(self, PairKind::Strong | PairKind::Primitive)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::Equal => "equal",
            PairKind::Algebraic => "algebraic",
            PairKind::Strong => "strong",
            PairKind::Primitive => "primitive",
            PairKind::Mixed => "mixed",
        }
    }
}

/// A zero weight met during a scan: `(small, big, value)` as masks.
type Zero = (u32, u32, f64);
type Verdict = std::result::Result<bool, Zero>;

/// Iterate the submasks of `r` in increasing numeric order.
pub(crate) fn submasks(r: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(0u32);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == r { None } else { Some((cur.wrapping_sub(r)) & r) };
        Some(cur)
    })
}

/// Weight calculus on the subsets of a small element set of a structure.
///
/// Subsets are bitmasks: bit `i` stands for `elems()[i]`. Only the first
/// `alpha.len()` relations of the structure count, so a lattice built on an
/// expanded structure sees its base reduct. Sign tests scan every relevant
/// sub-pair (no early exit) and fail with [`Error::Degenerate`] on the first
/// zero weight in scan order; results are memoised.
#[derive(Debug, Clone)]
pub struct Lattice {
    elems: Vec<u32>,
    alpha: Vec<f64>,
    atoms: Vec<Vec<u32>>,
    table: Option<Vec<u16>>,
    strong_memo: RefCell<HashMap<(u32, u32), Verdict>>,
    alg_memo: RefCell<HashMap<(u32, u32), Verdict>>,
}

impl Lattice {
    /// Lattice over `elems` (any order; stored sorted) of `m`.
    pub fn new(alpha: &[f64], m: &RelStructure, elems: &[u32]) -> Result<Self> {
        let mut es = elems.to_vec();
        es.sort_unstable();
        es.dedup();
        if es.len() > LATTICE_LIMIT {
            return Err(Error::TooLarge(format!(
                "weight lattice over {} elements (limit {LATTICE_LIMIT})",
                es.len()
            )));
        }
        if alpha.len() > m.vocab().len() {
            return Err(Error::invalid("more exponents than relations"));
        }
        let bit = |x: u32| es.binary_search(&x).ok();
        let mut atoms = vec![Vec::new(); alpha.len()];
        for &e in &es {
            for &r in m.incident(e) {
                let rel = r.rel as usize;
                if rel >= alpha.len() {
                    continue;
                }
                let t = m.tuple(r);
                let sym = m.vocab().relation(rel).symmetric;
                // Count each atom once: from its first element, and for a
                // symmetric relation only in increasing orientation.
                if t[0] != e || (sym && t.windows(2).any(|w| w[0] > w[1])) {
                    continue;
                }
                let mut mask = 0u32;
                let mut inside = true;
                for &x in t {
                    match bit(x) {
                        Some(i) => mask |= 1 << i,
                        None => {
                            inside = false;
                            break;
                        }
                    }
                }
                if inside {
                    atoms[rel].push(mask);
                }
            }
        }
        Ok(Self::from_parts(es, alpha.to_vec(), atoms))
    }

    /// Lattice from explicit atom masks per relation.
    pub fn from_parts(elems: Vec<u32>, alpha: Vec<f64>, atoms: Vec<Vec<u32>>) -> Self {
        let n = elems.len();
        let table = (n <= TABLE_LIMIT).then(|| {
            let r = atoms.len();
            let mut t = vec![0u16; (1usize << n) * r];
            for (rel, list) in atoms.iter().enumerate() {
                for &a in list {
                    // every superset of a contains the atom
                    let free = ((1u64 << n) - 1) as u32 & !a;
                    for s in submasks(free) {
                        t[(s | a) as usize * r + rel] += 1;
                    }
                }
            }
            t
        });
        Lattice {
            elems,
            alpha,
            atoms,
            table,
            strong_memo: RefCell::default(),
            alg_memo: RefCell::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elems(&self) -> &[u32] {
        &self.elems
    }

    pub fn full(&self) -> u32 {
        if self.elems.len() == 32 {
            u32::MAX
        } else {
            (1u32 << self.elems.len()) - 1
        }
    }

    pub fn atoms(&self, rel: usize) -> &[u32] {
        &self.atoms[rel]
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn mask_of(&self, set: &[u32]) -> Result<u32> {
        let mut m = 0;
        for x in set {
            let i = self
                .elems
                .binary_search(x)
                .map_err(|_| Error::invalid(format!("element {x} is not in the lattice")))?;
            m |= 1 << i;
        }
        Ok(m)
    }

    pub fn set_of(&self, mask: u32) -> Vec<u32> {
        (0..self.elems.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.elems[i])
            .collect()
    }

    /// Number of atoms of `rel` inside `mask`.
    pub fn count(&self, rel: usize, mask: u32) -> u32 {
        match &self.table {
            Some(t) => t[mask as usize * self.atoms.len() + rel] as u32,
            None => self.atoms[rel].iter().filter(|&&a| a & !mask == 0).count() as u32,
        }
    }

    /// `w(x, y)` for `x ⊆ y`: new elements minus weighted new atoms.
    pub fn weight(&self, x: u32, y: u32) -> f64 {
        debug_assert_eq!(x & !y, 0, "weight needs x ⊆ y");
        let mut w = (y & !x).count_ones() as f64;
        for (rel, &a) in self.alpha.iter().enumerate() {
            let d = self.count(rel, y) - self.count(rel, x);
            w -= a * d as f64;
        }
        w
    }

    fn degenerate(&self, z: Zero) -> Error {
        Error::Degenerate {
            small: self.set_of(z.0),
            big: self.set_of(z.1),
            value: z.2,
        }
    }

    fn lift(&self, v: Verdict) -> Result<bool> {
        v.map_err(|z| self.degenerate(z))
    }

    fn algebraic_raw(&self, x: u32, y: u32) -> Verdict {
        if let Some(v) = self.alg_memo.borrow().get(&(x, y)) {
            return *v;
        }
        let mut ok = true;
        let mut zero = None;
        for s in submasks(y & !x) {
            let c = x | s;
            if c == y {
                continue;
            }
            let w = self.weight(c, y);
            if w.abs() <= ZERO_TOL {
                zero.get_or_insert((c, y, w));
            } else if w > 0.0 {
                ok = false;
            }
        }
        let v = match zero {
            Some(z) => Err(z),
            None => Ok(ok),
        };
        self.alg_memo.borrow_mut().insert((x, y), v);
        v
    }

    fn strong_raw(&self, x: u32, y: u32) -> Verdict {
        if let Some(v) = self.strong_memo.borrow().get(&(x, y)) {
            return *v;
        }
        let mut ok = true;
        let mut zero = None;
        for s in submasks(y & !x) {
            if s == 0 {
                continue;
            }
            let w = self.weight(x, x | s);
            if w.abs() <= ZERO_TOL {
                zero.get_or_insert((x, x | s, w));
            } else if w < 0.0 {
                ok = false;
            }
        }
        let v = match zero {
            Some(z) => Err(z),
            None => Ok(ok),
        };
        self.strong_memo.borrow_mut().insert((x, y), v);
        v
    }

    /// Every `C` with `x ⊆ C ⊊ y` has `w(C, y) < 0`. Vacuously true for `x = y`.
    pub fn algebraic(&self, x: u32, y: u32) -> Result<bool> {
        self.lift(self.algebraic_raw(x, y))
    }

    /// Every `C` with `x ⊊ C ⊆ y` has `w(x, C) > 0`. Vacuously true for `x = y`.
    pub fn strong(&self, x: u32, y: u32) -> Result<bool> {
        self.lift(self.strong_raw(x, y))
    }

    /// Strong, with no strict intermediate strong on both sides.
    pub fn primitive(&self, x: u32, y: u32) -> Result<bool> {
        let mut ok = x != y && self.strong(x, y)?;
        for s in submasks(y & !x) {
            let c = x | s;
            if c == x || c == y {
                continue;
            }
            let left = self.strong(x, c)?;
            let right = self.strong(c, y)?;
            if left && right {
                ok = false;
            }
        }
        Ok(ok)
    }

    pub fn classify(&self, x: u32, y: u32) -> Result<PairKind> {
        if x == y {
            return Ok(PairKind::Equal);
        }
        let alg = self.algebraic(x, y)?;
        let strong = self.strong(x, y)?;
        if alg {
            return Ok(PairKind::Algebraic);
        }
        if strong {
            return Ok(if self.primitive(x, y)? {
                PairKind::Primitive
            } else {
                PairKind::Strong
            });
        }
        Ok(PairKind::Mixed)
    }

    /// Sort key: size first, then the sorted element list.
    fn order_key(&self, mask: u32) -> (u32, Vec<u32>) {
        (mask.count_ones(), self.set_of(mask))
    }

    /// Chain `x = A_0 ⊂ … ⊂ A_k = y` of primitive steps. At each step the
    /// least candidate `C` (by size, then lexicographically) with
    /// `strong(cur, C)` and `C = y or strong(C, y)` is taken.
    pub fn decompose(&self, x: u32, y: u32) -> Result<Vec<u32>> {
        if x & !y != 0 {
            return Err(Error::invalid("decompose needs x ⊆ y"));
        }
        if !self.strong(x, y)? {
            return Err(Error::invalid(format!(
                "pair {:?} <= {:?} is not strong",
                self.set_of(x),
                self.set_of(y)
            )));
        }
        let mut chain = vec![x];
        let mut cur = x;
        while cur != y {
            let mut best: Option<u32> = None;
            for s in submasks(y & !cur) {
                if s == 0 {
                    continue;
                }
                let c = cur | s;
                if !self.strong(cur, c)? || (c != y && !self.strong(c, y)?) {
                    continue;
                }
                if best.is_none_or(|b| self.order_key(c) < self.order_key(b)) {
                    best = Some(c);
                }
            }
            let c = best.ok_or_else(|| Error::Internal("strong pair without a strong step".into()))?;
            if !self.primitive(cur, c)? {
                return Err(Error::Internal(format!(
                    "decomposition step {:?} <= {:?} is not primitive",
                    self.set_of(cur),
                    self.set_of(c)
                )));
            }
            chain.push(c);
            cur = c;
        }
        Ok(chain)
    }

    /// Sum of step weights along [`Lattice::decompose`], checked against the
    /// direct weight.
    pub fn alpha_strong(&self, x: u32, y: u32) -> Result<f64> {
        let chain = self.decompose(x, y)?;
        let total: f64 = chain.windows(2).map(|w| self.weight(w[0], w[1])).sum();
        let direct = self.weight(x, y);
        if (total - direct).abs() > ZERO_TOL {
            return Err(Error::Internal(format!(
                "step weights sum to {total} but the direct weight is {direct}"
            )));
        }
        Ok(total)
    }

    /// Every chain of primitive steps from `x` to `y`, up to `limit` chains.
    pub fn decompositions(&self, x: u32, y: u32, limit: usize) -> Result<Vec<Vec<u32>>> {
        let mut out = Vec::new();
        let mut chain = vec![x];
        self.chains(y, &mut chain, &mut out, limit)?;
        Ok(out)
    }

    fn chains(&self, y: u32, chain: &mut Vec<u32>, out: &mut Vec<Vec<u32>>, limit: usize) -> Result<()> {
        let cur = *chain.last().unwrap();
        if cur == y {
            out.push(chain.clone());
            return Ok(());
        }
        for s in submasks(y & !cur) {
            if out.len() >= limit {
                break;
            }
            if s == 0 {
                continue;
            }
            let c = cur | s;
            if self.primitive(cur, c)? {
                chain.push(c);
                self.chains(y, chain, out, limit)?;
                chain.pop();
            }
        }
        Ok(())
    }

    /// The unique `B` with `x ⊆ B ⊆ y`, `(x, B)` algebraic or equal and
    /// `(B, y)` strong or equal.
    pub fn split(&self, x: u32, y: u32) -> Result<u32> {
        let mut found = Vec::new();
        for s in submasks(y & !x) {
            let b = x | s;
            if self.algebraic(x, b)? && self.strong(b, y)? {
                found.push(b);
            }
        }
        match found.as_slice() {
            [b] => Ok(*b),
            _ => Err(Error::Internal(format!(
                "{} algebraic/strong splits of {:?} <= {:?}",
                found.len(),
                self.set_of(x),
                self.set_of(y)
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(alpha: f64, n: usize, e: &[(u32, u32)]) -> Lattice {
        let g = RelStructure::graph(n, e).unwrap();
        let all: Vec<u32> = g.universe().collect();
        Lattice::new(&[alpha], &g, &all).unwrap()
    }

    #[test]
    fn submask_order() {
        assert_eq!(submasks(0b101).collect::<Vec<_>>(), vec![0, 1, 4, 5]);
        assert_eq!(submasks(0).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn weight_examples() {
        let l = lat(0.6, 2, &[(0, 1)]);
        assert!((l.weight(0b01, 0b11) - 0.4).abs() < 1e-12);
        assert_eq!(l.weight(0b11, 0b11), 0.0);
        let cn = lat(0.6, 3, &[(0, 2), (1, 2)]);
        assert!((cn.weight(0b011, 0b111) + 0.2).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        let l = lat(0.6, 2, &[(0, 1)]);
        assert_eq!(l.classify(0b01, 0b11).unwrap(), PairKind::Primitive);
        assert_eq!(l.classify(0b11, 0b11).unwrap(), PairKind::Equal);
        let cn = lat(0.6, 3, &[(0, 2), (1, 2)]);
        assert_eq!(cn.classify(0b011, 0b111).unwrap(), PairKind::Algebraic);
    }

    #[test]
    fn path_decomposes_into_pendants() {
        let p = lat(0.6, 3, &[(0, 1), (1, 2)]);
        let chain = p.decompose(0b001, 0b111).unwrap();
        assert_eq!(chain, vec![0b001, 0b011, 0b111]);
        assert!((p.alpha_strong(0b001, 0b111).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(p.decompose(0b111, 0b111).unwrap(), vec![0b111]);
    }

    #[test]
    fn zero_weight_is_degenerate() {
        // two new vertices, four edges: 2 - 4 * 0.5 = 0
        let g = lat(0.5, 4, &[(0, 2), (1, 2), (0, 3), (1, 3)]);
        let err = g.classify(0b0011, 0b1111).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }));
    }
}
