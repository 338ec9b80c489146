use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use super::SampleConfig;
use crate::error::Result;
use crate::structures::{normalize_set, RelStructure};
use crate::weights::{closure, closure_bound, closure_iter, ClosureBound};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureTrial {
    pub trial: usize,
    pub subsets: usize,
    pub max_closure: usize,
    pub max_iterated: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureExperimentReport {
    pub k: usize,
    pub ell: usize,
    pub bound: ClosureBound,
    /// The bound overflowed its search cap; no trials were run.
    pub skipped: bool,
    pub max_closure: usize,
    pub max_iterated: usize,
    pub violations: usize,
    pub trials: Vec<ClosureTrial>,
}

/// Elements within distance 2 of `v`, excluding `v`.
fn ball2(m: &RelStructure, v: u32) -> Vec<u32> {
    let mut seen = vec![v];
    let mut queue = VecDeque::from([(v, 0)]);
    while let Some((x, d)) = queue.pop_front() {
        if d == 2 {
            continue;
        }
        for &y in m.neighbors(x) {
            if !seen.contains(&y) {
                seen.push(y);
                queue.push_back((y, d + 1));
            }
        }
    }
    seen.remove(0);
    seen.sort_unstable();
    seen
}

/// An `ell`-subset: uniform for even `i`; for odd `i`, a random element with
/// `ell − 1` others from its 2-ball when the ball is large enough.
fn pick_subset<R: Rng + ?Sized>(m: &RelStructure, ell: usize, i: usize, rng: &mut R) -> Vec<u32> {
    let n = m.size();
    if i % 2 == 1 && ell >= 1 {
        let v = rng.random_range(0..n as u32);
        let ball = ball2(m, v);
        if ball.len() >= ell - 1 {
            let mut a: Vec<u32> = sample(rng, ball.len(), ell - 1).into_iter().map(|j| ball[j]).collect();
            a.push(v);
            return normalize_set(&a);
        }
    }
    normalize_set(&sample(rng, n, ell).into_iter().map(|j| j as u32).collect::<Vec<_>>())
}

/// Sizes of `cl^k(A)` over sampled `ell`-subsets `A`, compared with
/// [`closure_bound`]. Each trial tests `cfg.embed_cap` subsets. The
/// fixpoint size is recorded too; it is not bounded at finite `n`.
pub fn closure_experiment(ell: usize, k: usize, cfg: &SampleConfig, search_cap: u64) -> Result<ClosureExperimentReport> {
    let bound = closure_bound(k, ell, &cfg.ctx, search_cap)?;
    let Some(limit) = bound.value() else {
        return Ok(ClosureExperimentReport {
            k,
            ell,
            bound,
            skipped: true,
            max_closure: 0,
            max_iterated: 0,
            violations: 0,
            trials: Vec::new(),
        });
    };
    let ell = ell.min(cfg.n);
    let trials = cfg.run_trials(|t| {
        let (m, mut rng) = cfg.draw(t)?;
        let mut out = ClosureTrial {
            trial: t,
            subsets: cfg.embed_cap,
            max_closure: 0,
            max_iterated: 0,
            violations: 0,
        };
        for i in 0..cfg.embed_cap {
            let a = pick_subset(&m, ell, i, &mut rng);
            let one = closure(&a, &m, k, &cfg.ctx)?.result.len();
            let all = closure_iter(&a, &m, k, None, &cfg.ctx)?.len();
            out.max_closure = out.max_closure.max(one);
            out.max_iterated = out.max_iterated.max(all);
            if one as u64 > limit {
                out.violations += 1;
            }
        }
        Ok(out)
    })?;
    Ok(ClosureExperimentReport {
        k,
        ell,
        skipped: false,
        max_closure: trials.iter().map(|t| t.max_closure).max().unwrap_or(0),
        max_iterated: trials.iter().map(|t| t.max_iterated).max().unwrap_or(0),
        violations: trials.iter().map(|t| t.violations).sum(),
        bound,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::BaseContext;

    #[test]
    fn k_one_is_identity() {
        let cfg = SampleConfig::new(300, 2, 2, BaseContext::graph(0.6).unwrap())
            .unwrap()
            .with_embed_cap(20)
            .unwrap();
        let r = closure_experiment(3, 1, &cfg, 1000).unwrap();
        assert_eq!(r.bound.value(), Some(3));
        assert_eq!(r.max_iterated, 3);
        assert_eq!(r.violations, 0);
        let r = closure_experiment(0, 3, &cfg, 1000).unwrap();
        assert_eq!(r.max_iterated, 0);
    }
}
