use std::cmp::Ordering;
use std::sync::Arc;

use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// Reference to one stored tuple: relation index and position in that
/// relation's sorted tuple table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleRef {
    pub rel: u32,
    pub idx: u32,
}

/// A finite relational structure on the dense universe `0..size`.
///
/// Tuples are stored per relation as a flat, lexicographically sorted
/// table. Symmetric relations store every orientation of an atom, so
/// membership tests never need to normalise. Structures are immutable once
/// built; the incidence and Gaifman neighbour indexes are derived at
/// construction.
#[derive(Debug, Clone)]
pub struct RelStructure {
    vocab: Arc<Vocabulary>,
    size: usize,
    tables: Vec<Vec<u32>>,
    incidence: Vec<Vec<TupleRef>>,
    neighbors: Vec<Vec<u32>>,
}

impl PartialEq for RelStructure {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.vocab == other.vocab && self.tables == other.tables
    }
}

impl Eq for RelStructure {}

fn permutations(arity: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..arity).collect();
    fn rec(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            rec(k + 1, cur, out);
            cur.swap(k, i);
        }
    }
    rec(0, &mut cur, &mut out);
    out
}

impl RelStructure {
    /// Build a structure from `(relation index, tuple)` pairs. Symmetric
    /// relations are closed under permutation; duplicates are merged.
    pub fn new<I>(vocab: Arc<Vocabulary>, size: usize, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Vec<u32>)>,
    {
        if size > u32::MAX as usize / 2 {
            return Err(Error::TooLarge(format!("universe of size {size}")));
        }
        let perms: Vec<Option<Vec<Vec<usize>>>> = vocab
            .relations()
            .iter()
            .map(|r| r.symmetric.then(|| permutations(r.arity)))
            .collect();
        let mut rows: Vec<Vec<Vec<u32>>> = vec![Vec::new(); vocab.len()];
        for (rel, t) in tuples {
            let r = vocab
                .relations()
                .get(rel)
                .ok_or_else(|| Error::invalid(format!("relation index {rel} out of range")))?;
            if t.len() != r.arity {
                return Err(Error::invalid(format!(
                    "tuple {t:?} has length {} but {} has arity {}",
                    t.len(),
                    r.name,
                    r.arity
                )));
            }
            if let Some(&bad) = t.iter().find(|&&e| e as usize >= size) {
                return Err(Error::invalid(format!(
                    "element {bad} of {} tuple {t:?} outside universe of size {size}",
                    r.name
                )));
            }
            for i in 0..t.len() {
                if t[i + 1..].contains(&t[i]) {
                    return Err(Error::invalid(format!(
                        "{} tuple {t:?} repeats an element (relations are irreflexive)",
                        r.name
                    )));
                }
            }
            match &perms[rel] {
                Some(ps) => {
                    for p in ps {
                        rows[rel].push(p.iter().map(|&i| t[i]).collect());
                    }
                }
                None => rows[rel].push(t),
            }
        }
        let tables = rows
            .into_iter()
            .map(|mut rs| {
                rs.sort_unstable();
                rs.dedup();
                rs.into_iter().flatten().collect::<Vec<u32>>()
            })
            .collect();
        Ok(Self::from_tables(vocab, size, tables))
    }

    fn from_tables(vocab: Arc<Vocabulary>, size: usize, tables: Vec<Vec<u32>>) -> Self {
        let mut incidence = vec![Vec::new(); size];
        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); size];
        for (rel, table) in tables.iter().enumerate() {
            let arity = vocab.relation(rel).arity;
            for (idx, t) in table.chunks_exact(arity).enumerate() {
                for &e in t {
                    incidence[e as usize].push(TupleRef {
                        rel: rel as u32,
                        idx: idx as u32,
                    });
                    for &o in t {
                        if o != e {
                            neighbors[e as usize].push(o);
                        }
                    }
                }
            }
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
            nb.dedup();
        }
        RelStructure {
            vocab,
            size,
            tables,
            incidence,
            neighbors,
        }
    }

    pub fn empty(vocab: Arc<Vocabulary>, size: usize) -> Self {
        let tables = vec![Vec::new(); vocab.len()];
        Self::from_tables(vocab, size, tables)
    }

    /// Simple graph on `0..size` over [`Vocabulary::graph`].
    pub fn graph(size: usize, edges: &[(u32, u32)]) -> Result<Self> {
        Self::new(
            Vocabulary::graph(),
            size,
            edges.iter().map(|&(a, b)| (0, vec![a, b])),
        )
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn universe(&self) -> std::ops::Range<u32> {
        0..self.size as u32
    }

    pub fn arity(&self, rel: usize) -> usize {
        self.vocab.relation(rel).arity
    }

    /// Number of stored tuples of `rel`, counting every orientation.
    pub fn tuple_count(&self, rel: usize) -> usize {
        self.tables[rel].len() / self.arity(rel)
    }

    pub fn tuple(&self, r: TupleRef) -> &[u32] {
        let a = self.arity(r.rel as usize);
        let s = r.idx as usize * a;
        &self.tables[r.rel as usize][s..s + a]
    }

    pub fn tuples(&self, rel: usize) -> std::slice::ChunksExact<'_, u32> {
        self.tables[rel].chunks_exact(self.arity(rel))
    }

    /// One representative per atom: every tuple of a non-symmetric
    /// relation, the strictly increasing orientation of a symmetric one.
    pub fn atoms(&self, rel: usize) -> impl Iterator<Item = &[u32]> + '_ {
        let sym = self.vocab.relation(rel).symmetric;
        self.tuples(rel)
            .filter(move |t| !sym || t.windows(2).all(|w| w[0] < w[1]))
    }

    pub fn atom_count(&self, rel: usize) -> usize {
        self.atoms(rel).count()
    }

    pub fn holds(&self, rel: usize, t: &[u32]) -> bool {
        let a = self.arity(rel);
        if t.len() != a {
            return false;
        }
        let table = &self.tables[rel];
        let (mut lo, mut hi) = (0usize, table.len() / a);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match table[mid * a..mid * a + a].cmp(t) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn incident(&self, e: u32) -> &[TupleRef] {
        &self.incidence[e as usize]
    }

    /// Gaifman neighbours: elements sharing at least one tuple with `e`.
    pub fn neighbors(&self, e: u32) -> &[u32] {
        &self.neighbors[e as usize]
    }

    /// All stored tuples as `(relation, tuple)` pairs, atoms only.
    pub fn atom_list(&self) -> Vec<(usize, Vec<u32>)> {
        (0..self.vocab.len())
            .flat_map(|r| self.atoms(r).map(move |t| (r, t.to_vec())))
            .collect()
    }

    /// Substructure induced on `elements`, relabelled to `0..k` in the
    /// order given. Elements must be distinct and inside the universe.
    pub fn induced(&self, elements: &[u32]) -> Result<RelStructure> {
        let mut index = vec![u32::MAX; self.size];
        for (i, &e) in elements.iter().enumerate() {
            if e as usize >= self.size {
                return Err(Error::invalid(format!(
                    "element {e} outside universe of size {}",
                    self.size
                )));
            }
            if index[e as usize] != u32::MAX {
                return Err(Error::invalid(format!("element {e} listed twice")));
            }
            index[e as usize] = i as u32;
        }
        let mut rows = Vec::new();
        for &e in elements {
            for &r in self.incident(e) {
                let t = self.tuple(r);
                // Visit each tuple once, from its first element.
                if t[0] != e {
                    continue;
                }
                if t.iter().all(|&x| index[x as usize] != u32::MAX) {
                    rows.push((r.rel as usize, t.iter().map(|&x| index[x as usize]).collect()));
                }
            }
        }
        RelStructure::new(self.vocab.clone(), elements.len(), rows)
    }

    /// The reduct to the first `len` relations of the vocabulary.
    pub fn reduct(&self, len: usize) -> RelStructure {
        let vocab = Arc::new(self.vocab.prefix(len));
        Self::from_tables(vocab, self.size, self.tables[..len].to_vec())
    }

    /// Same universe with additional tuples over a larger vocabulary whose
    /// first relations coincide with this structure's vocabulary.
    pub fn expand<I>(&self, vocab: Arc<Vocabulary>, extra: I) -> Result<RelStructure>
    where
        I: IntoIterator<Item = (usize, Vec<u32>)>,
    {
        let base = self.vocab.len();
        if vocab.len() < base || vocab.relations()[..base] != *self.vocab.relations() {
            return Err(Error::invalid("expansion vocabulary must extend the base vocabulary"));
        }
        let mut rows = self.atom_list();
        for (r, t) in extra {
            if r < base {
                return Err(Error::invalid("expansion may not add base tuples"));
            }
            rows.push((r, t));
        }
        RelStructure::new(vocab, self.size, rows)
    }

    /// Apply an injective relabelling `map` (old id -> new id) onto a
    /// universe of `size` elements.
    pub fn relabel(&self, map: &[u32], size: usize) -> Result<RelStructure> {
        if map.len() != self.size {
            return Err(Error::invalid("relabelling must cover the universe"));
        }
        let rows = self
            .atom_list()
            .into_iter()
            .map(|(r, t)| (r, t.iter().map(|&x| map[x as usize]).collect()))
            .collect::<Vec<_>>();
        RelStructure::new(self.vocab.clone(), size, rows)
    }

    /// Disjoint union: `other`'s elements are shifted by `self.size()`.
    pub fn disjoint_union(&self, other: &RelStructure) -> Result<RelStructure> {
        if self.vocab != other.vocab {
            return Err(Error::invalid("vocabularies differ"));
        }
        let shift = self.size as u32;
        let mut rows = self.atom_list();
        rows.extend(
            other
                .atom_list()
                .into_iter()
                .map(|(r, t)| (r, t.iter().map(|&x| x + shift).collect())),
        );
        RelStructure::new(self.vocab.clone(), self.size + other.size, rows)
    }
}

/// Sort and deduplicate an element set.
pub fn normalize_set(elements: &[u32]) -> Vec<u32> {
    let mut v = elements.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}
