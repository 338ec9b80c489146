use std::ops::ControlFlow;

use rand::Rng;
use serde::Serialize;

use super::SampleConfig;
use crate::error::{Error, Result};
use crate::expansion::{plus_lattice, PlusKind};
use crate::structures::{disjoint_family, for_each_extension, nu_capped, RelStructure, SubPair};
use crate::weights::{pair_lattice, PairKind};

const NU_CAP: usize = 1_000_000;

/// Up to `cap` embeddings of `a` into `m`, drawn uniformly without
/// replacement (reservoir sampling) and returned sorted, together with the
/// total number of embeddings.
pub fn sample_embeddings<R: Rng + ?Sized>(
    a: &RelStructure,
    m: &RelStructure,
    cap: usize,
    rng: &mut R,
) -> Result<(usize, Vec<Vec<u32>>)> {
    let pair = SubPair::new(a.clone(), &[])?;
    let mut seen = 0usize;
    let mut keep: Vec<Vec<u32>> = Vec::with_capacity(cap);
    for_each_extension(&[], &pair, m, |_| false, &mut |g| {
        if keep.len() < cap {
            keep.push(g.to_vec());
        } else {
            let j = rng.random_range(0..=seen);
            if j < cap {
                keep[j] = g.to_vec();
            }
        }
        seen += 1;
        ControlFlow::Continue(())
    })?;
    keep.sort_unstable();
    Ok((seen, keep))
}

/// Predicted extension count `coefficient · n^exponent` of a pair and the
/// bracket `[center · n^(-ε), center · n^ε]` around it. Pairs without a
/// prediction (algebraic or mixed reducts, non-qr expanded pairs) carry
/// only their kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub kind: String,
    pub exponent: Option<f64>,
    pub coefficient: f64,
    pub center: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Prediction {
    pub fn new(pair: &SubPair, cfg: &SampleConfig) -> Result<Self> {
        let n = cfg.n as f64;
        let vocab = pair.big.vocab();
        let (kind, exponent, coefficient) = if vocab == cfg.ctx.vocab() {
            let (lat, x, y) = pair_lattice(pair, &cfg.ctx)?;
            let kind = lat.classify(x, y)?;
            let coeff: f64 = (0..cfg.ctx.vocab().len())
                .map(|r| cfg.ctx.coeff(r).powi((lat.count(r, y) - lat.count(r, x)) as i32))
                .product();
            let exp = (kind.is_strong() || kind == PairKind::Equal).then(|| lat.weight(x, y));
            (kind.as_str().to_string(), exp, coeff)
        } else if let Some(plus) = cfg.plus.as_ref().filter(|p| p.vocab() == vocab) {
            let (pl, x, y) = plus_lattice(pair, plus)?;
            let (kind, _, beta) = pl.classify(x, y)?;
            let base = pl.base();
            let base_coeff: f64 = (0..plus.base_len())
                .map(|r| cfg.ctx.coeff(r).powi((base.count(r, y) - base.count(r, x)) as i32))
                .product();
            let fresh = pl.atoms().iter().filter(|a| a.mask & !y == 0 && a.mask & !x != 0).count();
            let coeff = base_coeff * pl.coeff_product(x, y) / plus.h().value(cfg.n).powi(fresh as i32);
            let exp = matches!(kind, PlusKind::Qr | PlusKind::Equal).then_some(beta).flatten();
            (kind.as_str().to_string(), exp, coeff)
        } else {
            return Err(Error::invalid("pair vocabulary matches neither the base nor the expanded context"));
        };
        let center = exponent.map(|e| coefficient * n.powf(e));
        Ok(Prediction {
            kind,
            exponent,
            coefficient,
            center,
            lower: center.map(|c| c * n.powf(-cfg.eps)),
            upper: center.map(|c| c * n.powf(cfg.eps)),
        })
    }

    pub fn contains(&self, nu: usize) -> Option<bool> {
        let (lo, hi) = (self.lower?, self.upper?);
        Some(lo <= nu as f64 && nu as f64 <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketTrial {
    pub trial: usize,
    pub embeddings: usize,
    pub nu: Vec<usize>,
    pub inside: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketReport {
    pub n: usize,
    pub eps: f64,
    pub prediction: Prediction,
    pub sampled: usize,
    pub inside: usize,
    pub pass_fraction: Option<f64>,
    pub max_nu: usize,
    pub mean_nu: f64,
    /// No embedding of the small side was found in any trial.
    pub inconclusive: bool,
    pub trials: Vec<BracketTrial>,
}

/// Count extensions of sampled embeddings of the small side and compare
/// them with the predicted bracket.
pub fn bracket_experiment(pair: &SubPair, cfg: &SampleConfig) -> Result<BracketReport> {
    let prediction = Prediction::new(pair, cfg)?;
    let a = pair.small_structure();
    let trials = cfg.run_trials(|t| {
        let (m, mut rng) = cfg.draw(t)?;
        if m.vocab() != pair.big.vocab() {
            return Err(Error::invalid("sampled structures are not over the pair's vocabulary"));
        }
        let (total, fs) = sample_embeddings(&a, &m, cfg.embed_cap, &mut rng)?;
        let mut nus = Vec::with_capacity(fs.len());
        for f in &fs {
            nus.push(nu_capped(f, pair, &m, NU_CAP)?);
        }
        let inside = nus.iter().filter(|&&v| prediction.contains(v) == Some(true)).count();
        Ok(BracketTrial {
            trial: t,
            embeddings: total,
            nu: nus,
            inside,
        })
    })?;
    let sampled: usize = trials.iter().map(|t| t.nu.len()).sum();
    let inside: usize = trials.iter().map(|t| t.inside).sum();
    let max_nu = trials.iter().flat_map(|t| t.nu.iter().copied()).max().unwrap_or(0);
    let total: usize = trials.iter().flat_map(|t| t.nu.iter()).sum();
    Ok(BracketReport {
        n: cfg.n,
        eps: cfg.eps,
        pass_fraction: (sampled > 0 && prediction.lower.is_some()).then(|| inside as f64 / sampled as f64),
        mean_nu: if sampled > 0 { total as f64 / sampled as f64 } else { 0.0 },
        inconclusive: sampled == 0,
        prediction,
        sampled,
        inside,
        max_nu,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeaklyNiceTrial {
    pub trial: usize,
    pub sampled: usize,
    pub passed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeaklyNiceReport {
    pub family: usize,
    pub sampled: usize,
    pub passed: usize,
    pub pass_fraction: Option<f64>,
    pub trials: Vec<WeaklyNiceTrial>,
}

/// Fraction of sampled embeddings of the small side that extend in
/// `family` ways with images pairwise disjoint outside the small side.
pub fn weakly_nice_experiment(pair: &SubPair, family: usize, cfg: &SampleConfig) -> Result<WeaklyNiceReport> {
    if pair.big.vocab() != cfg.ctx.vocab() {
        return Err(Error::invalid("weakly nice experiments take base pairs"));
    }
    let (lat, x, y) = pair_lattice(pair, &cfg.ctx)?;
    if lat.classify(x, y)? != PairKind::Primitive {
        return Err(Error::invalid("weakly nice experiments need a primitive pair"));
    }
    let a = pair.small_structure();
    let trials = cfg.run_trials(|t| {
        let (m, mut rng) = cfg.draw(t)?;
        let (_, fs) = sample_embeddings(&a, &m, cfg.embed_cap, &mut rng)?;
        let mut passed = 0;
        for f in &fs {
            if disjoint_family(f, pair, &m, family as i64)?.is_some() {
                passed += 1;
            }
        }
        Ok(WeaklyNiceTrial {
            trial: t,
            sampled: fs.len(),
            passed,
        })
    })?;
    let sampled = trials.iter().map(|t| t.sampled).sum();
    let passed = trials.iter().map(|t| t.passed).sum();
    Ok(WeaklyNiceReport {
        family,
        sampled,
        passed,
        pass_fraction: (sampled > 0).then(|| passed as f64 / sampled as f64),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::BaseContext;

    fn pendant() -> SubPair {
        SubPair::new(RelStructure::graph(2, &[(0, 1)]).unwrap(), &[0]).unwrap()
    }

    #[test]
    fn equal_pair_always_inside() {
        let cfg = SampleConfig::new(200, 3, 2, BaseContext::graph(0.5).unwrap()).unwrap();
        let id = SubPair::identity(RelStructure::graph(2, &[(0, 1)]).unwrap());
        let r = bracket_experiment(&id, &cfg).unwrap();
        assert!(r.sampled > 0);
        assert_eq!(r.pass_fraction, Some(1.0));
        assert_eq!(r.max_nu, 1);
    }

    #[test]
    fn pendant_prediction() {
        let cfg = SampleConfig::new(1000, 3, 1, BaseContext::graph(0.45).unwrap()).unwrap();
        let p = Prediction::new(&pendant(), &cfg).unwrap();
        assert!((p.exponent.unwrap() - 0.55).abs() < 1e-12);
        assert!((p.center.unwrap() - 1000f64.powf(0.55)).abs() < 1e-9);
    }

    #[test]
    fn weakly_nice_trivial_family() {
        let cfg = SampleConfig::new(300, 1, 1, BaseContext::graph(0.45).unwrap())
            .unwrap()
            .with_embed_cap(20)
            .unwrap();
        let r = weakly_nice_experiment(&pendant(), 0, &cfg).unwrap();
        assert_eq!(r.pass_fraction, Some(1.0));
    }

    #[test]
    fn reservoir_is_exhaustive_below_cap() {
        let m = RelStructure::graph(5, &[(0, 1), (1, 2)]).unwrap();
        let a = RelStructure::graph(2, &[(0, 1)]).unwrap();
        let (total, fs) = sample_embeddings(&a, &m, 10, &mut crate::sampler::trial_rng(0, 0)).unwrap();
        assert_eq!(total, 4);
        assert_eq!(fs, vec![vec![0, 1], vec![1, 0], vec![1, 2], vec![2, 1]]);
    }
}
