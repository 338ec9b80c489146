use std::ops::ControlFlow;

use serde::Serialize;

use super::{sample_embeddings, SampleConfig};
use crate::error::{Error, Result};
use crate::structures::{for_each_extension, normalize_set, RelStructure, SubPair};
use crate::weights::closure;

const EXTENSION_CAP: usize = 200;

/// `A, B ⊆ D` inside one structure `D`; embeddings `f` of `A` qualify when
/// `cl^radius(f(A)) = f(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiGoodQuad {
    pub d: RelStructure,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub radius: usize,
}

impl SemiGoodQuad {
    pub fn new(d: RelStructure, a: &[u32], b: &[u32], radius: usize) -> Result<Self> {
        let a = normalize_set(a);
        let b = normalize_set(b);
        if a.iter().chain(&b).any(|&x| x as usize >= d.size()) {
            return Err(Error::invalid("quadruple sets must lie inside D"));
        }
        Ok(SemiGoodQuad { d, a, b, radius })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiGoodTrial {
    pub trial: usize,
    pub sampled: usize,
    pub qualifying: usize,
    pub passed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiGoodReport {
    pub k: usize,
    pub qualifying: usize,
    pub passed: usize,
    /// Trials without a qualifying embedding.
    pub skipped_trials: usize,
    pub pass_fraction: Option<f64>,
    pub trials: Vec<SemiGoodTrial>,
}

/// For sampled qualifying `f`, look for an extension `g` of `f` to an
/// embedding of `D` with `cl^k(g(B), M) = g(cl^k(B, D))`.
pub fn semi_good_experiment(quad: &SemiGoodQuad, k: usize, cfg: &SampleConfig) -> Result<SemiGoodReport> {
    let pair = SubPair::new(quad.d.clone(), &quad.a)?;
    let a_struct = pair.small_structure();
    let cl_bd = closure(&quad.b, &quad.d, k, &cfg.ctx)?.result;
    let trials = cfg.run_trials(|t| {
        let (m, mut rng) = cfg.draw(t)?;
        if m.vocab() != quad.d.vocab() {
            return Err(Error::invalid("sampled structures are not over the vocabulary of D"));
        }
        let (_, fs) = sample_embeddings(&a_struct, &m, cfg.embed_cap, &mut rng)?;
        let mut out = SemiGoodTrial {
            trial: t,
            sampled: fs.len(),
            qualifying: 0,
            passed: 0,
        };
        for f in &fs {
            let image = normalize_set(f);
            if quad.radius > 0 && closure(&image, &m, quad.radius, &cfg.ctx)?.result != image {
                continue;
            }
            out.qualifying += 1;
            let mut tried = 0;
            let mut ok = false;
            let mut err = None;
            for_each_extension(f, &pair, &m, |_| false, &mut |g| {
                tried += 1;
                let gb: Vec<u32> = quad.b.iter().map(|&x| g[x as usize]).collect();
                let want = normalize_set(&cl_bd.iter().map(|&x| g[x as usize]).collect::<Vec<_>>());
                match closure(&gb, &m, k, &cfg.ctx) {
                    Ok(c) if c.result == want => ok = true,
                    Ok(_) => {}
                    Err(e) => err = Some(e),
                }
                if ok || err.is_some() || tried >= EXTENSION_CAP {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            })?;
            if let Some(e) = err {
                return Err(e);
            }
            if ok {
                out.passed += 1;
            }
        }
        Ok(out)
    })?;
    let qualifying = trials.iter().map(|t| t.qualifying).sum();
    let passed = trials.iter().map(|t| t.passed).sum();
    Ok(SemiGoodReport {
        k,
        qualifying,
        passed,
        skipped_trials: trials.iter().filter(|t| t.qualifying == 0).count(),
        pass_fraction: (qualifying > 0).then(|| passed as f64 / qualifying as f64),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::BaseContext;

    #[test]
    fn trivial_quadruple_passes() {
        let cfg = SampleConfig::new(300, 4, 2, BaseContext::graph(0.45).unwrap())
            .unwrap()
            .with_embed_cap(30)
            .unwrap();
        let d = RelStructure::graph(1, &[]).unwrap();
        let q = SemiGoodQuad::new(d, &[0], &[0], 2).unwrap();
        let r = semi_good_experiment(&q, 2, &cfg).unwrap();
        assert_eq!(r.pass_fraction, Some(1.0));
    }
}
