use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::System;
use crate::error::Result;
use crate::sampler::trial_rng;

/// Components with more functions than this go to the overflow bucket.
pub const DEFAULT_COMPONENT_CAP: usize = 12;

/// The chosen image sets `ℛ_{u/e}`, one flag per set of each class.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawnModel<'a> {
    sys: &'a System,
    chosen: Vec<Vec<bool>>,
}

pub fn draw_model<'a, R: Rng + ?Sized>(sys: &'a System, rng: &mut R) -> DrawnModel<'a> {
    let chosen = sys
        .classes()
        .iter()
        .enumerate()
        .map(|(c, class)| (0..sys.class_sets(c).len()).map(|_| rng.random_bool(class.p)).collect())
        .collect();
    DrawnModel { sys, chosen }
}

impl<'a> DrawnModel<'a> {
    /// A model with the given choices, indexed like [`System::class_sets`].
    pub fn from_choices(sys: &'a System, chosen: Vec<Vec<bool>>) -> Result<Self> {
        let ok = chosen.len() == sys.classes().len()
            && chosen.iter().enumerate().all(|(c, v)| v.len() == sys.class_sets(c).len());
        if !ok {
            return Err(crate::Error::invalid("choice vector does not match the system's relation sets"));
        }
        Ok(DrawnModel { sys, chosen })
    }

    pub fn system(&self) -> &System {
        self.sys
    }

    pub fn chosen_sets(&self, class: usize) -> impl Iterator<Item = &[u32]> + '_ {
        self.sys
            .class_sets(class)
            .iter()
            .zip(&self.chosen[class])
            .filter(|(_, &c)| c)
            .map(|(s, _)| s.as_slice())
    }

    pub fn chosen_count(&self) -> usize {
        self.chosen.iter().flatten().filter(|&&c| c).count()
    }

    fn member_chosen(&self, f: usize, j: usize) -> bool {
        let class = self.sys.members()[j].0;
        self.chosen[class][self.sys.slots(f)[j]]
    }

    /// `F[M*]`: functions whose every 𝒫-image is chosen.
    pub fn successful(&self) -> Vec<usize> {
        (0..self.sys.functions().len())
            .filter(|&f| (0..self.sys.members().len()).all(|j| self.member_chosen(f, j)))
            .collect()
    }

    /// `F_*[M*]`: functions with no chosen image such that no overlapping
    /// `f′` has all of its images outside `Rang f` chosen.
    pub fn f_star(&self) -> Vec<usize> {
        let sys = self.sys;
        let np = sys.members().len();
        (0..sys.functions().len())
            .filter(|&f| {
                if (0..np).any(|j| self.member_chosen(f, j)) {
                    return false;
                }
                let range = &sys.functions()[f];
                !sys.overlapping(f).into_iter().any(|g| {
                    (0..np).all(|j| {
                        let inside = sys.members()[j].1.iter().all(|&a| range.contains(&sys.functions()[g][a]));
                        inside || self.member_chosen(g, j)
                    })
                })
            })
            .collect()
    }

    /// Components of the overlap graph on `F[M*]`, each sorted, in order of
    /// their smallest function.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let good = self.successful();
        let mut is_good = vec![false; self.sys.functions().len()];
        for &f in &good {
            is_good[f] = true;
        }
        let mut comp: HashMap<usize, usize> = HashMap::new();
        let mut out: Vec<Vec<usize>> = Vec::new();
        for &f in &good {
            if comp.contains_key(&f) {
                continue;
            }
            let id = out.len();
            let mut members = vec![f];
            comp.insert(f, id);
            let mut i = 0;
            while i < members.len() {
                let g = members[i];
                for &x in &self.sys.functions()[g] {
                    for &h in self.sys.occurrences(x) {
                        if is_good[h] && !comp.contains_key(&h) {
                            comp.insert(h, id);
                            members.push(h);
                        }
                    }
                }
                i += 1;
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn census(&self, cap: usize) -> Census {
        let comps = self.components();
        let successful = comps.iter().map(Vec::len).sum();
        let mut types: BTreeMap<String, TypeCount> = BTreeMap::new();
        let mut overflow_components = 0;
        let mut overflow_functions = 0;
        for c in &comps {
            if c.len() > cap {
                overflow_components += 1;
                overflow_functions += c.len();
                continue;
            }
            let funcs: Vec<&[u32]> = c.iter().map(|&f| self.sys.functions()[f].as_slice()).collect();
            let key = type_key(&canonical_type(&funcs), self.sys.m());
            types.entry(key).or_insert(TypeCount { size: c.len(), count: 0 }).count += 1;
        }
        Census {
            m: self.sys.m(),
            successful,
            types,
            overflow_components,
            overflow_functions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TypeCount {
    pub size: usize,
    pub count: usize,
}

/// `L_t` per component type. Types are written as blocks of element labels,
/// one block per function, e.g. `0,1|0,2` for two functions sharing their
/// first value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub m: usize,
    /// `|F[M*]|`.
    pub successful: usize,
    pub types: BTreeMap<String, TypeCount>,
    pub overflow_components: usize,
    pub overflow_functions: usize,
}

impl Census {
    pub fn singleton_key(m: usize) -> String {
        (0..m).map(|a| a.to_string()).collect::<Vec<_>>().join(",")
    }

    /// `L_{t*}`.
    pub fn singletons(&self) -> usize {
        self.types.get(&Census::singleton_key(self.m)).map_or(0, |t| t.count)
    }

    /// `Σ |t|·L_t` plus the functions in overflow components equals `|F[M*]|`.
    pub fn conserved(&self) -> bool {
        self.types.values().map(|t| t.size * t.count).sum::<usize>() + self.overflow_functions == self.successful
    }

    /// Counts of the non-singleton types.
    pub fn others(&self) -> BTreeMap<String, usize> {
        let s = Census::singleton_key(self.m);
        self.types
            .iter()
            .filter(|(k, _)| **k != s)
            .map(|(k, t)| (k.clone(), t.count))
            .collect()
    }
}

fn type_key(code: &[u32], m: usize) -> String {
    code.chunks(m)
        .map(|b| b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("|")
}

/// Lexicographically least label sequence over all orders of the
/// functions, labelling values by first appearance. Two components get the
/// same code exactly when they are isomorphic.
pub fn canonical_type(funcs: &[&[u32]]) -> Vec<u32> {
    let mut occ: HashMap<u32, usize> = HashMap::new();
    for f in funcs {
        for &x in *f {
            *occ.entry(x).or_default() += 1;
        }
    }
    let private = |x: u32| occ[&x] == 1;
    let mut best: Option<Vec<u32>> = None;
    let mut placed = vec![false; funcs.len()];
    let mut labels: HashMap<u32, u32> = HashMap::new();
    let mut code = Vec::with_capacity(funcs.len() * funcs.first().map_or(0, |f| f.len()));
    search(funcs, &private, &mut placed, &mut labels, &mut code, &mut best);
    best.unwrap_or_default()
}

fn block(f: &[u32], labels: &HashMap<u32, u32>) -> Vec<u32> {
    let mut next = labels.len() as u32;
    f.iter()
        .map(|x| {
            labels.get(x).copied().unwrap_or_else(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

fn search(
    funcs: &[&[u32]],
    private: &dyn Fn(u32) -> bool,
    placed: &mut [bool],
    labels: &mut HashMap<u32, u32>,
    code: &mut Vec<u32>,
    best: &mut Option<Vec<u32>>,
) {
    if placed.iter().all(|&p| p) {
        if best.as_ref().is_none_or(|b| *code < *b) {
            *best = Some(code.clone());
        }
        return;
    }
    let blocks: Vec<(usize, Vec<u32>)> = (0..funcs.len())
        .filter(|&i| !placed[i])
        .map(|i| (i, block(funcs[i], labels)))
        .collect();
    let min = blocks.iter().map(|(_, b)| b).min().expect("an unplaced function").clone();
    if let Some(b) = best {
        let at = code.len();
        if (&b[..at], &b[at..at + min.len()]) < (&code[..], &min[..]) {
            return;
        }
    }
    // Two candidates agreeing everywhere except on values private to each
    // are swapped by an automorphism; one of them suffices.
    let mut reps: Vec<usize> = Vec::new();
    for (i, b) in &blocks {
        if *b != min {
            continue;
        }
        let twin = reps.iter().any(|&r| {
            funcs[r]
                .iter()
                .zip(funcs[*i])
                .all(|(&x, &y)| x == y || (private(x) && private(y)))
        });
        if !twin {
            reps.push(*i);
        }
    }
    for i in reps {
        placed[i] = true;
        let before = code.len();
        code.extend_from_slice(&min);
        let mut added = Vec::new();
        for &x in funcs[i] {
            if !labels.contains_key(&x) {
                labels.insert(x, labels.len() as u32);
                added.push(x);
            }
        }
        search(funcs, private, placed, labels, code, best);
        for x in added {
            labels.remove(&x);
        }
        code.truncate(before);
        placed[i] = false;
    }
}

/// One draw of a census suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusTrial {
    pub trial: usize,
    /// `|F[M*]|`.
    pub successful: usize,
    /// `L_{t*}`.
    pub singletons: usize,
    /// `|F_*[M*]|`.
    pub f_star: usize,
    pub others: BTreeMap<String, usize>,
    pub overflow_components: usize,
    pub overflow_functions: usize,
    pub conserved: bool,
}

/// A batch of independent draws of one system.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusRun<'a> {
    pub sys: &'a System,
    pub seed: u64,
    pub cap: usize,
    pub trials: Vec<CensusTrial>,
}

impl CensusRun<'_> {
    pub fn mean_singletons(&self) -> f64 {
        self.trials.iter().map(|t| t.singletons as f64).sum::<f64>() / self.trials.len() as f64
    }

    pub fn all_conserved(&self) -> bool {
        self.trials.iter().all(|t| t.conserved)
    }
}

pub fn run_census(sys: &System, seed: u64, trials: usize, cap: usize) -> Result<CensusRun<'_>> {
    if trials == 0 {
        return Err(crate::Error::invalid("at least one trial is needed"));
    }
    if cap == 0 {
        return Err(crate::Error::invalid("component cap must be positive"));
    }
    let records = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let model = draw_model(sys, &mut rng);
            let census = model.census(cap);
            CensusTrial {
                trial: t,
                successful: census.successful,
                singletons: census.singletons(),
                f_star: model.f_star().len(),
                others: census.others(),
                overflow_components: census.overflow_components,
                overflow_functions: census.overflow_functions,
                conserved: census.conserved(),
            }
        })
        .collect();
    Ok(CensusRun {
        sys,
        seed,
        cap,
        trials: records,
    })
}
