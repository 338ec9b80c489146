use std::borrow::Cow;
use std::cell::RefCell;
use std::collections::HashMap;

use serde::Serialize;

use super::context::ExpansionContext;
use crate::error::{Error, Result};
use crate::structures::RelStructure;
use crate::weights::{submasks, Lattice, ZERO_TOL};

/// One atom of a new relation, as a mask of the lattice's elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewAtom {
    pub rel: u32,
    pub mask: u32,
    pub beta: f64,
    pub coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlusKind {
    Equal,
    Qr,
    T,
    J,
    B,
    None,
}

impl PlusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlusKind::Equal => "equal",
            PlusKind::Qr => "qr",
            PlusKind::T => "t",
            PlusKind::J => "j",
            PlusKind::B => "b",
            PlusKind::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PlusFlags {
    pub b: bool,
    pub j: bool,
    pub t: bool,
    pub qr: bool,
}

/// Tri-state memo over pairs of masks: 0 unknown, 1 false, 2 true.
#[derive(Debug, Clone)]
enum Memo {
    Dense(Vec<u8>, u32),
    Sparse(HashMap<(u32, u32), u8>),
}

impl Memo {
    fn new(n: usize) -> Self {
        if n <= 8 {
            Memo::Dense(vec![0; 1 << (2 * n)], n as u32)
        } else {
            Memo::Sparse(HashMap::new())
        }
    }

    fn get(&self, x: u32, y: u32) -> Option<bool> {
        let v = match self {
            Memo::Dense(t, n) => t[((x << n) | y) as usize],
            Memo::Sparse(m) => m.get(&(x, y)).copied().unwrap_or(0),
        };
        (v != 0).then_some(v == 2)
    }

    fn set(&mut self, x: u32, y: u32, v: bool) {
        let b = if v { 2 } else { 1 };
        match self {
            Memo::Dense(t, n) => t[((x << *n) | y) as usize] = b,
            Memo::Sparse(m) => {
                m.insert((x, y), b);
            }
        }
    }
}

/// Classification of pairs of an expanded structure, on subsets of a
/// small element set. The base lattice sees only the base relations; the
/// new atoms carry their own exponents.
#[derive(Debug, Clone)]
pub struct PlusLattice<'a> {
    base: Cow<'a, Lattice>,
    atoms: Vec<NewAtom>,
    bm: RefCell<Memo>,
    jm: RefCell<Memo>,
    tm: RefCell<Memo>,
}

impl<'a> PlusLattice<'a> {
    pub fn new(ctx: &ExpansionContext, m: &RelStructure, elems: &[u32]) -> Result<PlusLattice<'static>> {
        if m.vocab() != ctx.vocab() {
            return Err(Error::invalid("structure is not over the expanded vocabulary"));
        }
        let base = Lattice::new(ctx.base().alphas(), m, elems)?;
        let atoms = new_atoms(ctx, m, &base);
        Ok(PlusLattice::from_parts(Cow::Owned(base), atoms))
    }

    pub fn from_parts(base: Cow<'a, Lattice>, atoms: Vec<NewAtom>) -> Self {
        let n = base.len();
        PlusLattice {
            base,
            atoms,
            bm: RefCell::new(Memo::new(n)),
            jm: RefCell::new(Memo::new(n)),
            tm: RefCell::new(Memo::new(n)),
        }
    }

    pub fn base(&self) -> &Lattice {
        &self.base
    }

    pub fn atoms(&self) -> &[NewAtom] {
        &self.atoms
    }

    /// Sum of exponents of new atoms inside `y` but not inside `x`.
    pub fn beta_sum(&self, x: u32, y: u32) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.mask & !y == 0 && a.mask & !x != 0)
            .map(|a| a.beta)
            .sum()
    }

    /// Product of coefficients of new atoms inside `y` but not inside `x`.
    pub fn coeff_product(&self, x: u32, y: u32) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.mask & !y == 0 && a.mask & !x != 0)
            .map(|a| a.coeff)
            .product()
    }

    fn need_strong(&self, x: u32, y: u32) -> Result<()> {
        if x & !y != 0 {
            return Err(Error::invalid("beta needs x ⊆ y"));
        }
        if !self.base.strong(x, y)? {
            return Err(Error::invalid(format!(
                "reduct of {:?} <= {:?} is not strong",
                self.base.set_of(x),
                self.base.set_of(y)
            )));
        }
        Ok(())
    }

    /// `β(x, y)` using the direct reduct weight.
    pub fn beta(&self, x: u32, y: u32) -> Result<f64> {
        self.need_strong(x, y)?;
        Ok(self.base.weight(x, y) + self.beta_sum(x, y))
    }

    /// `β(x, y)` with the reduct part summed along a decomposition.
    pub fn beta_decomposed(&self, x: u32, y: u32) -> Result<f64> {
        self.need_strong(x, y)?;
        Ok(self.base.alpha_strong(x, y)? + self.beta_sum(x, y))
    }

    /// `x ≤_b y`: with `A1` the algebraic/strong split of the reduct,
    /// `A1 ≠ x`, or some `A2` with `A1 ⊊ A2 ⊆ y` has `β(A1, A2) < 0`.
    pub fn b(&self, x: u32, y: u32) -> Result<bool> {
        if let Some(v) = self.bm.borrow().get(x, y) {
            return Ok(v);
        }
        let a1 = self.base.split(x, y)?;
        let v = if a1 != x {
            true
        } else {
            let mut neg = false;
            for s in submasks(y & !a1) {
                if s == 0 {
                    continue;
                }
                let a2 = a1 | s;
                let w = self.base.weight(a1, a2) + self.beta_sum(a1, a2);
                if w < -ZERO_TOL {
                    neg = true;
                }
            }
            neg
        };
        self.bm.borrow_mut().set(x, y, v);
        Ok(v)
    }

    /// `x ≤_j y`: every `z` with `x ⊆ z ⊊ y` has `z ≤_b y`.
    pub fn j(&self, x: u32, y: u32) -> Result<bool> {
        if let Some(v) = self.jm.borrow().get(x, y) {
            return Ok(v);
        }
        let mut v = true;
        for s in submasks(y & !x) {
            let z = x | s;
            if z != y && !self.b(z, y)? {
                v = false;
                break;
            }
        }
        self.jm.borrow_mut().set(x, y, v);
        Ok(v)
    }

    /// `x ≤_t y`: no `z` with `x ⊊ z ⊆ y` and `x ≤_j z`.
    pub fn t(&self, x: u32, y: u32) -> Result<bool> {
        if let Some(v) = self.tm.borrow().get(x, y) {
            return Ok(v);
        }
        let mut v = true;
        for s in submasks(y & !x) {
            if s != 0 && self.j(x, x | s)? {
                v = false;
                break;
            }
        }
        self.tm.borrow_mut().set(x, y, v);
        Ok(v)
    }

    /// `x ≤_qr y`: `x ≤_t y` with no `z` strictly between such that
    /// `x <_t z <_t y`.
    pub fn qr(&self, x: u32, y: u32) -> Result<bool> {
        if !self.t(x, y)? {
            return Ok(false);
        }
        for s in submasks(y & !x) {
            let z = x | s;
            if z == x || z == y {
                continue;
            }
            if self.t(x, z)? && self.t(z, y)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn flags(&self, x: u32, y: u32) -> Result<PlusFlags> {
        Ok(PlusFlags {
            b: self.b(x, y)?,
            j: self.j(x, y)?,
            t: self.t(x, y)?,
            qr: self.qr(x, y)?,
        })
    }

    /// Kind by priority equal > qr > t > j > b > none, with `β` when the
    /// reduct is strong. A qr pair with zero `β` is an irrationality
    /// violation.
    pub fn classify(&self, x: u32, y: u32) -> Result<(PlusKind, PlusFlags, Option<f64>)> {
        if x & !y != 0 {
            return Err(Error::invalid("classification needs x ⊆ y"));
        }
        let flags = self.flags(x, y)?;
        let beta = if self.base.strong(x, y)? {
            Some(self.beta(x, y)?)
        } else {
            None
        };
        let kind = if x == y {
            PlusKind::Equal
        } else if flags.qr {
            PlusKind::Qr
        } else if flags.t {
            PlusKind::T
        } else if flags.j {
            PlusKind::J
        } else if flags.b {
            PlusKind::B
        } else {
            PlusKind::None
        };
        if kind == PlusKind::Qr {
            let v = beta.ok_or_else(|| Error::Internal("qr pair with a non-strong reduct".into()))?;
            if v.abs() <= ZERO_TOL {
                return Err(Error::Irrationality {
                    small: self.base.set_of(x),
                    big: self.base.set_of(y),
                    value: v,
                });
            }
        }
        Ok((kind, flags, beta))
    }
}

/// New-relation atoms of `m` inside the lattice's element set, with their
/// parameters looked up by base atom count.
pub fn new_atoms(ctx: &ExpansionContext, m: &RelStructure, base: &Lattice) -> Vec<NewAtom> {
    let elems = base.elems();
    let nb = ctx.base_len();
    let mut out = Vec::new();
    for &e in elems {
        for &r in m.incident(e) {
            let rel = r.rel as usize;
            if rel < nb {
                continue;
            }
            let t = m.tuple(r);
            let sym = m.vocab().relation(rel).symmetric;
            if t[0] != e || (sym && t.windows(2).any(|w| w[0] > w[1])) {
                continue;
            }
            let mut mask = 0u32;
            let mut inside = true;
            for x in t {
                match elems.binary_search(x) {
                    Ok(i) => mask |= 1 << i,
                    Err(_) => {
                        inside = false;
                        break;
                    }
                }
            }
            if !inside {
                continue;
            }
            let k: u32 = (0..nb).map(|br| base.count(br, mask)).sum();
            let (beta, coeff) = ctx.atom_params(rel, k);
            out.push(NewAtom {
                rel: rel as u32,
                mask,
                beta,
                coeff,
            });
        }
    }
    out
}
