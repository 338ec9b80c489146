use std::ops::ControlFlow;

use super::structure::RelStructure;
use crate::error::{Error, Result};

/// A substructure presented inside its extension: `small` is a sorted
/// subset of `big`'s universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubPair {
    pub big: RelStructure,
    small: Vec<u32>,
}

impl SubPair {
    pub fn new(big: RelStructure, small: &[u32]) -> Result<Self> {
        let mut s = small.to_vec();
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("small side lists an element twice"));
        }
        if let Some(&e) = s.iter().find(|&&e| e as usize >= big.size()) {
            return Err(Error::invalid(format!(
                "element {e} outside universe of size {}",
                big.size()
            )));
        }
        Ok(SubPair { big, small: s })
    }

    /// The pair `(A, A)`.
    pub fn identity(a: RelStructure) -> Self {
        let small = a.universe().collect();
        SubPair { big: a, small }
    }

    pub fn small(&self) -> &[u32] {
        &self.small
    }

    pub fn new_elements(&self) -> Vec<u32> {
        self.big
            .universe()
            .filter(|e| self.small.binary_search(e).is_err())
            .collect()
    }

    pub fn small_structure(&self) -> RelStructure {
        self.big
            .induced(&self.small)
            .expect("small side is validated at construction")
    }

    pub fn is_identity(&self) -> bool {
        self.small.len() == self.big.size()
    }
}

/// An injective map between universes that preserves and reflects every
/// relation. Only the map is stored; validity is checked against the
/// structures it was built from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Embedding {
    pub map: Vec<u32>,
}

impl Embedding {
    pub fn new(source: &RelStructure, target: &RelStructure, map: Vec<u32>) -> Result<Self> {
        match embedding_defect(source, target, &map) {
            None => Ok(Embedding { map }),
            Some(why) => Err(Error::invalid(why)),
        }
    }

    pub fn image(&self) -> &[u32] {
        &self.map
    }
}

pub fn is_embedding(source: &RelStructure, target: &RelStructure, map: &[u32]) -> bool {
    embedding_defect(source, target, map).is_none()
}

fn embedding_defect(source: &RelStructure, target: &RelStructure, map: &[u32]) -> Option<String> {
    if source.vocab() != target.vocab() {
        return Some("source and target vocabularies differ".into());
    }
    if map.len() != source.size() {
        return Some(format!(
            "map has {} entries for a universe of size {}",
            map.len(),
            source.size()
        ));
    }
    for (i, &x) in map.iter().enumerate() {
        if x as usize >= target.size() {
            return Some(format!("image {x} outside target universe"));
        }
        if map[..i].contains(&x) {
            return Some(format!("map is not injective at {x}"));
        }
    }
    let mut buf = Vec::new();
    for rel in 0..source.vocab().len() {
        for t in source.tuples(rel) {
            buf.clear();
            buf.extend(t.iter().map(|&e| map[e as usize]));
            if !target.holds(rel, &buf) {
                return Some(format!("tuple {t:?} of relation {rel} is not preserved"));
            }
        }
    }
    for &x in map {
        for &r in target.incident(x) {
            let t = target.tuple(r);
            buf.clear();
            for &y in t {
                match map.iter().position(|&z| z == y) {
                    Some(p) => buf.push(p as u32),
                    None => break,
                }
            }
            if buf.len() == t.len() && !source.holds(r.rel as usize, &buf) {
                return Some(format!("target tuple {t:?} has no preimage"));
            }
        }
    }
    None
}

/// Precomputed assignment order for extending embeddings of `A` to `B`.
struct Plan<'a> {
    big: &'a RelStructure,
    order: Vec<u32>,
}

impl<'a> Plan<'a> {
    fn new(pair: &'a SubPair) -> Self {
        let big = &pair.big;
        let mut placed = vec![false; big.size()];
        for &a in pair.small() {
            placed[a as usize] = true;
        }
        let mut rest = pair.new_elements();
        let mut order = Vec::with_capacity(rest.len());
        while !rest.is_empty() {
            // Most already-placed neighbours first; lowest id breaks ties.
            let (pos, _) = rest
                .iter()
                .enumerate()
                .max_by_key(|(_, &b)| {
                    let k = big.neighbors(b).iter().filter(|&&x| placed[x as usize]).count();
                    (k, std::cmp::Reverse(b))
                })
                .unwrap();
            let b = rest.remove(pos);
            placed[b as usize] = true;
            order.push(b);
        }
        Plan { big, order }
    }
}

struct Search<'a, F: FnMut(u32) -> bool> {
    plan: &'a Plan<'a>,
    m: &'a RelStructure,
    assign: Vec<u32>,
    // (image, source) for every assigned element
    images: Vec<(u32, u32)>,
    forbidden: F,
    buf: Vec<u32>,
}

impl<'a, F: FnMut(u32) -> bool> Search<'a, F> {
    fn preimage(&self, y: u32) -> Option<u32> {
        self.images.iter().find(|p| p.0 == y).map(|p| p.1)
    }

    fn fits(&mut self, b: u32, c: u32) -> bool {
        if self.preimage(c).is_some() || (self.forbidden)(c) {
            return false;
        }
        let big = self.plan.big;
        for &r in big.incident(b) {
            let t = big.tuple(r);
            self.buf.clear();
            for &x in t {
                let img = if x == b { c } else { self.assign[x as usize] };
                if img == u32::MAX {
                    break;
                }
                self.buf.push(img);
            }
            if self.buf.len() == t.len() && !self.m.holds(r.rel as usize, &self.buf) {
                return false;
            }
        }
        for &r in self.m.incident(c) {
            let t = self.m.tuple(r);
            self.buf.clear();
            for &y in t {
                let pre = if y == c { Some(b) } else { self.preimage(y) };
                match pre {
                    Some(p) => self.buf.push(p),
                    None => break,
                }
            }
            if self.buf.len() == t.len() && !big.holds(r.rel as usize, &self.buf) {
                return false;
            }
        }
        true
    }

    fn run(&mut self, depth: usize, visit: &mut dyn FnMut(&[u32]) -> ControlFlow<()>) -> ControlFlow<()> {
        if depth == self.plan.order.len() {
            return visit(&self.assign);
        }
        let b = self.plan.order[depth];
        let big = self.plan.big;
        let anchor = big
            .neighbors(b)
            .iter()
            .map(|&x| self.assign[x as usize])
            .filter(|&y| y != u32::MAX)
            .min_by_key(|&y| (self.m.neighbors(y).len(), y));
        let candidates: Vec<u32> = match anchor {
            Some(y) => self.m.neighbors(y).to_vec(),
            None => self.m.universe().collect(),
        };
        for c in candidates {
            if !self.fits(b, c) {
                continue;
            }
            self.assign[b as usize] = c;
            self.images.push((c, b));
            let flow = self.run(depth + 1, visit);
            self.images.pop();
            self.assign[b as usize] = u32::MAX;
            flow?;
        }
        ControlFlow::Continue(())
    }
}

fn check_base(f: &[u32], pair: &SubPair, m: &RelStructure) -> Result<()> {
    if pair.big.vocab() != m.vocab() {
        return Err(Error::invalid("pair and target use different vocabularies"));
    }
    if f.len() != pair.small().len() {
        return Err(Error::invalid(format!(
            "embedding lists {} images for a base of size {}",
            f.len(),
            pair.small().len()
        )));
    }
    if let Some(why) = embedding_defect(&pair.small_structure(), m, f) {
        return Err(Error::invalid(format!("base map is not an embedding: {why}")));
    }
    Ok(())
}

/// Visit every extension `g` of `f` (images of `pair.small()` in order) to an
/// embedding of `pair.big` into `m`, skipping images for which `forbidden`
/// holds. `g` is indexed by the elements of `pair.big`. Visiting order is
/// deterministic but not sorted.
pub fn for_each_extension<F>(
    f: &[u32],
    pair: &SubPair,
    m: &RelStructure,
    forbidden: F,
    visit: &mut dyn FnMut(&[u32]) -> ControlFlow<()>,
) -> Result<()>
where
    F: FnMut(u32) -> bool,
{
    check_base(f, pair, m)?;
    let _ = for_each_unchecked(f, pair, &Plan::new(pair), m, forbidden, visit);
    Ok(())
}

fn for_each_unchecked<F: FnMut(u32) -> bool>(
    f: &[u32],
    pair: &SubPair,
    plan: &Plan<'_>,
    m: &RelStructure,
    forbidden: F,
    visit: &mut dyn FnMut(&[u32]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mut assign = vec![u32::MAX; pair.big.size()];
    let mut images = Vec::with_capacity(pair.big.size());
    for (&a, &y) in pair.small().iter().zip(f) {
        assign[a as usize] = y;
        images.push((y, a));
    }
    let mut s = Search {
        plan,
        m,
        assign,
        images,
        forbidden,
        buf: Vec::new(),
    };
    s.run(0, visit)
}

/// All extensions of `f` to embeddings of `pair.big` into `m`, sorted
/// lexicographically by image tuple.
pub fn extensions(f: &[u32], pair: &SubPair, m: &RelStructure) -> Result<Vec<Embedding>> {
    let mut out = Vec::new();
    for_each_extension(f, pair, m, |_| false, &mut |g| {
        out.push(Embedding { map: g.to_vec() });
        ControlFlow::Continue(())
    })?;
    out.sort_unstable_by(|a, b| a.map.cmp(&b.map));
    Ok(out)
}

/// Number of extensions of `f` to embeddings of `pair.big` into `m`.
pub fn nu(f: &[u32], pair: &SubPair, m: &RelStructure) -> Result<usize> {
    let mut n = 0usize;
    for_each_extension(f, pair, m, |_| false, &mut |_| {
        n += 1;
        ControlFlow::Continue(())
    })?;
    Ok(n)
}

/// Number of extensions, stopping early once `cap` is reached.
pub fn nu_capped(f: &[u32], pair: &SubPair, m: &RelStructure, cap: usize) -> Result<usize> {
    let mut n = 0usize;
    for_each_extension(f, pair, m, |_| false, &mut |_| {
        n += 1;
        if n >= cap {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(n)
}

/// Search for `count` extensions of `f` whose images pairwise meet only
/// inside `Rang(f)`. Backtracks over earlier choices, so the answer is
/// exact.
pub fn disjoint_family(
    f: &[u32],
    pair: &SubPair,
    m: &RelStructure,
    count: i64,
) -> Result<Option<Vec<Embedding>>> {
    if count < 0 {
        return Err(Error::invalid(format!("family size {count} is negative")));
    }
    check_base(f, pair, m)?;
    let plan = Plan::new(pair);
    let new = pair.new_elements();
    let mut used = vec![false; m.size()];
    let mut chosen: Vec<Embedding> = Vec::new();

    fn rec(
        f: &[u32],
        pair: &SubPair,
        plan: &Plan<'_>,
        m: &RelStructure,
        new: &[u32],
        used: &mut Vec<bool>,
        chosen: &mut Vec<Embedding>,
        count: usize,
    ) -> bool {
        if chosen.len() == count {
            return true;
        }
        let mut found = false;
        let mut tried: Vec<Vec<u32>> = Vec::new();
        let snapshot = used.clone();
        let _ = for_each_unchecked(f, pair, plan, m, |c| snapshot[c as usize], &mut |g| {
            tried.push(g.to_vec());
            ControlFlow::Continue(())
        });
        tried.sort_unstable();
        for g in tried {
            for &b in new {
                used[g[b as usize] as usize] = true;
            }
            chosen.push(Embedding { map: g.clone() });
            if rec(f, pair, plan, m, new, used, chosen, count) {
                found = true;
            }
            if found {
                break;
            }
            chosen.pop();
            for &b in new {
                used[g[b as usize] as usize] = false;
            }
        }
        found
    }

    if new.is_empty() {
        // Identity extensions all coincide with f and are trivially disjoint
        // outside Rang(f).
        return Ok(Some(vec![Embedding { map: lift(f, pair) }; count as usize]));
    }
    let ok = rec(f, pair, &plan, m, &new, &mut used, &mut chosen, count as usize);
    Ok(ok.then_some(chosen))
}

fn lift(f: &[u32], pair: &SubPair) -> Vec<u32> {
    let mut g = vec![0; pair.big.size()];
    for (&a, &y) in pair.small().iter().zip(f) {
        g[a as usize] = y;
    }
    g
}

/// Outcome of a free-amalgamation test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AmalgamCheck {
    Free,
    /// A tuple inside `A ∪ C` meets both `A∖B` and `C∖B`.
    Crossing { rel: usize, tuple: Vec<u32> },
    /// The sets do not satisfy `B ⊆ A`, `B ⊆ C`, `A ∩ C = B`.
    BadSets(String),
}

pub fn free_amalgam_check(m: &RelStructure, a: &[u32], c: &[u32], b: &[u32]) -> AmalgamCheck {
    let n = m.size();
    let mut tag = vec![0u8; n];
    for (set, bit) in [(a, 1u8), (c, 2u8), (b, 4u8)] {
        for &x in set {
            if x as usize >= n {
                return AmalgamCheck::BadSets(format!("element {x} outside universe"));
            }
            tag[x as usize] |= bit;
        }
    }
    for (x, &t) in tag.iter().enumerate() {
        let in_a = t & 1 != 0;
        let in_c = t & 2 != 0;
        let in_b = t & 4 != 0;
        if in_b && !(in_a && in_c) {
            return AmalgamCheck::BadSets(format!("{x} is in B but not in both A and C"));
        }
        if in_a && in_c && !in_b {
            return AmalgamCheck::BadSets(format!("{x} is in A and C but not in B"));
        }
    }
    for rel in 0..m.vocab().len() {
        for t in m.atoms(rel) {
            let mut side_a = false;
            let mut side_c = false;
            let mut inside = true;
            for &x in t {
                match tag[x as usize] {
                    1 => side_a = true,
                    2 => side_c = true,
                    0 => inside = false,
                    _ => {}
                }
            }
            if inside && side_a && side_c {
                return AmalgamCheck::Crossing {
                    rel,
                    tuple: t.to_vec(),
                };
            }
        }
    }
    AmalgamCheck::Free
}

/// True iff `A` and `C` are freely amalgamated over `B` in `m`. Ill-formed
/// sets give `false`; use [`free_amalgam_check`] for the reason.
pub fn is_free_amalgam(m: &RelStructure, a: &[u32], c: &[u32], b: &[u32]) -> bool {
    free_amalgam_check(m, a, c, b) == AmalgamCheck::Free
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, e: &[(u32, u32)]) -> RelStructure {
        RelStructure::graph(n, e).unwrap()
    }

    fn complete(n: u32) -> RelStructure {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j));
            }
        }
        g(n as usize, &e)
    }

    #[test]
    fn pendant_in_k3() {
        let pair = SubPair::new(g(2, &[(0, 1)]), &[0]).unwrap();
        let ex = extensions(&[1], &pair, &complete(3)).unwrap();
        let maps: Vec<_> = ex.into_iter().map(|e| e.map).collect();
        assert_eq!(maps, vec![vec![1, 0], vec![1, 2]]);
    }

    #[test]
    fn identity_pair_has_one_extension() {
        let k3 = complete(3);
        let pair = SubPair::identity(g(1, &[]));
        assert_eq!(nu(&[2], &pair, &k3).unwrap(), 1);
        assert_eq!(extensions(&[2], &pair, &k3).unwrap()[0].map, vec![2]);
    }

    #[test]
    fn triangle_over_edge_in_k4() {
        let pair = SubPair::new(complete(3), &[0, 1]).unwrap();
        let k4 = complete(4);
        assert_eq!(nu(&[0, 1], &pair, &k4).unwrap(), 2);
        let fam = disjoint_family(&[0, 1], &pair, &k4, 2).unwrap().unwrap();
        assert_eq!(fam.len(), 2);
        assert!(disjoint_family(&[0, 1], &pair, &k4, 3).unwrap().is_none());
    }

    #[test]
    fn non_embedding_base_rejected() {
        // {0,1} is an edge of K3 but the pair's base is two non-adjacent vertices.
        let pair = SubPair::new(g(3, &[(0, 2), (1, 2)]), &[0, 1]).unwrap();
        assert!(nu(&[0, 1], &pair, &complete(3)).is_err());
    }

    #[test]
    fn induced_requirement_blocks_extra_edges() {
        // Path 0-1-2 over endpoint 0 cannot land on a triangle.
        let pair = SubPair::new(g(3, &[(0, 1), (1, 2)]), &[0]).unwrap();
        assert_eq!(nu(&[0], &pair, &complete(3)).unwrap(), 0);
    }

    #[test]
    fn star_family() {
        let star = g(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let pair = SubPair::new(g(2, &[(0, 1)]), &[0]).unwrap();
        let fam = disjoint_family(&[0], &pair, &star, 5).unwrap().unwrap();
        assert_eq!(fam.len(), 5);
        assert_eq!(disjoint_family(&[0], &pair, &star, 0).unwrap(), Some(vec![]));
        assert!(disjoint_family(&[0], &pair, &star, -1).is_err());
    }

    #[test]
    fn amalgam_examples() {
        let two = g(4, &[(0, 1), (2, 3)]);
        assert!(is_free_amalgam(&two, &[0, 1], &[2, 3], &[]));
        let edge = g(2, &[(0, 1)]);
        assert!(!is_free_amalgam(&edge, &[0], &[1], &[]));
        let path = g(3, &[(0, 1), (1, 2)]);
        assert!(is_free_amalgam(&path, &[0, 1], &[1, 2], &[1]));
        assert!(matches!(
            free_amalgam_check(&path, &[0, 1], &[1, 2], &[]),
            AmalgamCheck::BadSets(_)
        ));
    }
}
