use std::collections::BTreeMap;
use std::fmt;

use super::structure::RelStructure;
use crate::error::{Error, Result};

/// Largest universe accepted by [`canonical_form`].
pub const CANON_LIMIT: usize = 64;

/// Isomorphism-type key. Two structures (with the same vocabulary) get
/// equal forms iff they are isomorphic by a map fixing the listed
/// constants in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm {
    pub size: u32,
    pub constants: u32,
    /// Per position `i`, the sorted `(relation, positions...)` entries of the
    /// tuples whose largest position is `i`.
    pub blocks: Vec<Vec<u32>>,
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}c{}", self.size, self.constants)?;
        for b in &self.blocks {
            write!(f, "|")?;
            for (i, x) in b.iter().enumerate() {
                if i > 0 {
                    write!(f, ".")?;
                }
                write!(f, "{x}")?;
            }
        }
        Ok(())
    }
}

/// Refine element colours until stable. Constants start in singleton
/// classes `0..s`; the order of old colours is kept, so constants stay in
/// front.
fn refine(s: &RelStructure, constants: &[u32]) -> Vec<u32> {
    let n = s.size();
    let k = constants.len() as u32;
    let mut color = vec![k; n];
    for (i, &c) in constants.iter().enumerate() {
        color[c as usize] = i as u32;
    }
    let mut classes = {
        let mut c = color.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    loop {
        let sigs: Vec<(u32, Vec<Vec<u32>>)> = (0..n as u32)
            .map(|v| {
                let mut sig: Vec<Vec<u32>> = s
                    .incident(v)
                    .iter()
                    .map(|&r| {
                        let t = s.tuple(r);
                        let mut e = Vec::with_capacity(t.len() + 2);
                        e.push(r.rel);
                        e.push(t.iter().position(|&x| x == v).unwrap() as u32);
                        e.extend(t.iter().map(|&x| color[x as usize]));
                        e
                    })
                    .collect();
                sig.sort_unstable();
                (color[v as usize], sig)
            })
            .collect();
        let mut ids: BTreeMap<&(u32, Vec<Vec<u32>>), u32> = BTreeMap::new();
        for sg in &sigs {
            ids.insert(sg, 0);
        }
        for (i, v) in ids.values_mut().enumerate() {
            *v = i as u32;
        }
        let next: Vec<u32> = sigs.iter().map(|sg| ids[sg]).collect();
        let now = ids.len();
        color = next;
        if now == classes {
            return color;
        }
        classes = now;
    }
}

fn swap_is_automorphism(s: &RelStructure, u: u32, v: u32) -> bool {
    let sw = |x: u32| {
        if x == u {
            v
        } else if x == v {
            u
        } else {
            x
        }
    };
    let mut buf = Vec::new();
    for &x in [u, v].iter() {
        for &r in s.incident(x) {
            buf.clear();
            buf.extend(s.tuple(r).iter().map(|&y| sw(y)));
            if !s.holds(r.rel as usize, &buf) {
                return false;
            }
        }
    }
    true
}

struct Canon<'a> {
    s: &'a RelStructure,
    cell_of_pos: Vec<u32>,
    color: Vec<u32>,
    pos: Vec<u32>,
    order: Vec<u32>,
    cur: Vec<Vec<u32>>,
    best: Option<Vec<Vec<u32>>>,
}

impl Canon<'_> {
    fn block(&self, v: u32, i: u32) -> Vec<u32> {
        let mut entries: Vec<Vec<u32>> = Vec::new();
        for &r in self.s.incident(v) {
            let t = self.s.tuple(r);
            let mut e = Vec::with_capacity(t.len() + 1);
            e.push(r.rel);
            let mut ok = true;
            for &x in t {
                let p = if x == v { i } else { self.pos[x as usize] };
                if p == u32::MAX {
                    ok = false;
                    break;
                }
                e.push(p);
            }
            if ok {
                entries.push(e);
            }
        }
        entries.sort_unstable();
        entries.dedup();
        entries.concat()
    }

    fn search(&mut self, i: usize) {
        let n = self.s.size();
        if i == n {
            if self.best.as_ref().is_none_or(|b| self.cur < *b) {
                self.best = Some(self.cur.clone());
            }
            return;
        }
        let cell = self.cell_of_pos[i];
        let cands: Vec<u32> = (0..n as u32)
            .filter(|&v| self.color[v as usize] == cell && self.pos[v as usize] == u32::MAX)
            .collect();
        let mut tried: Vec<u32> = Vec::new();
        for v in cands {
            if tried.iter().any(|&u| swap_is_automorphism(self.s, u, v)) {
                continue;
            }
            tried.push(v);
            let b = self.block(v, i as u32);
            self.cur.push(b);
            if let Some(best) = &self.best {
                if self.cur[..] > best[..=i] {
                    self.cur.pop();
                    continue;
                }
            }
            self.pos[v as usize] = i as u32;
            self.order.push(v);
            self.search(i + 1);
            self.order.pop();
            self.pos[v as usize] = u32::MAX;
            self.cur.pop();
        }
    }
}

/// Canonical form of `s`, with `constants` pinned to the first positions
/// in the given order.
pub fn canonical_form_with(s: &RelStructure, constants: &[u32]) -> Result<CanonicalForm> {
    let n = s.size();
    if n > CANON_LIMIT {
        return Err(Error::TooLarge(format!(
            "canonical form of a {n}-element structure (limit {CANON_LIMIT})"
        )));
    }
    for (i, &c) in constants.iter().enumerate() {
        if c as usize >= n || constants[..i].contains(&c) {
            return Err(Error::invalid(format!("bad constant {c}")));
        }
    }
    let color = refine(s, constants);
    let mut cell_of_pos = color.clone();
    cell_of_pos.sort_unstable();
    let mut c = Canon {
        s,
        cell_of_pos,
        color,
        pos: vec![u32::MAX; n],
        order: Vec::new(),
        cur: Vec::new(),
        best: None,
    };
    c.search(0);
    Ok(CanonicalForm {
        size: n as u32,
        constants: constants.len() as u32,
        blocks: c.best.unwrap_or_default(),
    })
}

pub fn canonical_form(s: &RelStructure) -> Result<CanonicalForm> {
    canonical_form_with(s, &[])
}

/// Rebuild a structure from a canonical form over the given vocabulary.
pub fn from_canonical(
    vocab: std::sync::Arc<super::vocab::Vocabulary>,
    form: &CanonicalForm,
) -> Result<RelStructure> {
    let mut rows = Vec::new();
    for b in &form.blocks {
        let mut k = 0;
        while k < b.len() {
            let rel = b[k] as usize;
            if rel >= vocab.len() {
                return Err(Error::invalid("canonical form does not match vocabulary"));
            }
            let a = vocab.relation(rel).arity;
            rows.push((rel, b[k + 1..k + 1 + a].to_vec()));
            k += 1 + a;
        }
    }
    RelStructure::new(vocab, form.size as usize, rows)
}

/// Minimum lexicographic relabelled atom list over all permutations
/// fixing `constants`. Exponential; intended for ≤ 8 elements and used as
/// an oracle for [`canonical_form_with`].
pub fn brute_force_code(s: &RelStructure, constants: &[u32]) -> Result<Vec<(usize, Vec<u32>)>> {
    let n = s.size();
    if n > 8 {
        return Err(Error::TooLarge(format!("brute-force canonisation of {n} elements")));
    }
    let free: Vec<u32> = s.universe().filter(|v| !constants.contains(v)).collect();
    let mut perm = free.clone();
    let mut best: Option<Vec<(usize, Vec<u32>)>> = None;
    let atoms = {
        let mut v = Vec::new();
        for rel in 0..s.vocab().len() {
            v.extend(s.tuples(rel).map(|t| (rel, t.to_vec())));
        }
        v
    };
    fn next_perm(p: &mut [u32]) -> bool {
        if p.len() < 2 {
            return false;
        }
        let mut i = p.len() - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = p.len() - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }
    loop {
        let mut label = vec![0u32; n];
        for (i, &c) in constants.iter().enumerate() {
            label[c as usize] = i as u32;
        }
        for (i, &v) in perm.iter().enumerate() {
            label[v as usize] = (constants.len() + i) as u32;
        }
        let mut code: Vec<(usize, Vec<u32>)> = atoms
            .iter()
            .map(|(r, t)| (*r, t.iter().map(|&x| label[x as usize]).collect()))
            .collect();
        code.sort_unstable();
        if best.as_ref().is_none_or(|b| code < *b) {
            best = Some(code);
        }
        if !next_perm(&mut perm) {
            break;
        }
    }
    Ok(best.unwrap_or_default())
}

/// All simple graphs on exactly `n` vertices, one per isomorphism type,
/// in a deterministic order.
pub fn graphs_up_to_iso(n: usize) -> Vec<RelStructure> {
    assert!(n <= 7, "graph enumeration is limited to 7 vertices");
    let pairs: Vec<(u32, u32)> = (0..n as u32)
        .flat_map(|i| (i + 1..n as u32).map(move |j| (i, j)))
        .collect();
    let mut seen: BTreeMap<CanonicalForm, RelStructure> = BTreeMap::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let edges: Vec<(u32, u32)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        let g = RelStructure::graph(n, &edges).expect("valid edges");
        let key = canonical_form(&g).expect("small graph");
        seen.entry(key).or_insert(g);
    }
    seen.into_values().collect()
}
