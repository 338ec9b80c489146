use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// `f₁(ℓ₁) = f₂(ℓ₂) ⇒ ℓ₁ = ℓ₂` across the family.
pub fn family_is_separative(family: &[Vec<u32>]) -> bool {
    let mut pos: BTreeMap<u32, usize> = BTreeMap::new();
    family.iter().all(|f| {
        f.iter()
            .enumerate()
            .all(|(a, &x)| *pos.entry(x).or_insert(a) == a)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitCell {
    /// Branching bits `w_g`.
    pub bits: Vec<usize>,
    /// `(position, bit index, bit value)` triples of `v_g`.
    pub values: Vec<(usize, usize, u8)>,
    /// Indices into the input family.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    /// Code length `⌈log₂ n⌉`.
    pub code_length: usize,
    /// `⌈log₂ n⌉^(|dom|+1)`.
    pub bound: u64,
    pub cells: Vec<SplitCell>,
}

/// Split a family sharing its values on `common` into separative cells.
/// Each element gets its binary code; `w_g` collects, over pairs of
/// distinct free values of `g`, the first bit where their codes differ, and
/// `v_g` records the bits of each free value at those positions. Functions
/// with equal `(w_g, v_g)` share a cell.
pub fn separation_split(family: &[Vec<u32>], common: &[usize], n: usize) -> Result<SplitReport> {
    let Some(first) = family.first() else {
        return Err(Error::invalid("the family is empty"));
    };
    let d = first.len();
    if n < 2 {
        return Err(Error::invalid("universe size must be at least 2"));
    }
    if common.iter().any(|&a| a >= d) {
        return Err(Error::invalid("common positions lie outside the domain"));
    }
    for (i, g) in family.iter().enumerate() {
        if g.len() != d || g.iter().any(|&x| x as usize >= n) || (0..d).any(|a| g[a + 1..].contains(&g[a])) {
            return Err(Error::invalid(format!("function {i} is not an injection [{d}] → [{n}]")));
        }
        if common.iter().any(|&a| g[a] != first[a]) {
            return Err(Error::invalid(format!("function {i} differs from the common restriction")));
        }
    }
    let code_length = (usize::BITS - (n - 1).leading_zeros()) as usize;
    let free: Vec<usize> = (0..d).filter(|a| !common.contains(a)).collect();
    let bit = |x: u32, i: usize| ((x >> i) & 1) as u8;
    let mut cells: BTreeMap<(Vec<usize>, Vec<(usize, usize, u8)>), Vec<usize>> = BTreeMap::new();
    for (gi, g) in family.iter().enumerate() {
        let mut w: Vec<usize> = Vec::new();
        for (j, &a) in free.iter().enumerate() {
            for &b in &free[j + 1..] {
                w.push((g[a] ^ g[b]).trailing_zeros() as usize);
            }
        }
        w.sort_unstable();
        w.dedup();
        let v: Vec<(usize, usize, u8)> = free
            .iter()
            .flat_map(|&a| w.iter().map(move |&i| (a, i, bit(g[a], i))))
            .collect();
        cells.entry((w, v)).or_default().push(gi);
    }
    Ok(SplitReport {
        code_length,
        bound: (code_length as u64).saturating_pow(d as u32 + 1),
        cells: cells
            .into_iter()
            .map(|((bits, values), members)| SplitCell { bits, values, members })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separative_family_may_stay_whole() {
        let fam = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
        assert!(family_is_separative(&fam));
        let r = separation_split(&fam, &[], 8).unwrap();
        assert!(!r.cells.is_empty());
        for c in &r.cells {
            let cell: Vec<Vec<u32>> = c.members.iter().map(|&i| fam[i].clone()).collect();
            assert!(family_is_separative(&cell));
        }
    }

    #[test]
    fn crossing_pair_is_separated() {
        // g1 = (1,2), g2 = (2,3) over 4 points: codes 01, 10, 11 (low bit
        // first). Both branch at bit 0; g1 has bits (1,0), g2 has (0,1).
        let fam = vec![vec![1, 2], vec![2, 3]];
        assert!(!family_is_separative(&fam));
        let r = separation_split(&fam, &[], 4).unwrap();
        assert_eq!(r.code_length, 2);
        assert_eq!(r.cells.len(), 2);
        assert_eq!(r.cells[0].bits, vec![0]);
        assert_eq!(r.cells[1].bits, vec![0]);
    }

    #[test]
    fn common_restriction_is_checked() {
        assert!(separation_split(&[vec![0, 1], vec![2, 3]], &[0], 4).is_err());
        let r = separation_split(&[vec![0, 1], vec![0, 3]], &[0], 4).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert!(r.cells[0].bits.is_empty());
    }
}
