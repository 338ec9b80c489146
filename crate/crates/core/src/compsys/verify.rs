use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

use super::census::{CensusRun, CensusTrial};
use super::system::require_weakly_separative;
use crate::error::{Error, Result};

/// Two-sided 99% normal quantile used for every Wilson interval.
pub const WILSON_Z: f64 = 2.5758293035489;

pub fn wilson(hits: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub hits: usize,
    pub trials: usize,
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Estimate {
    pub fn new(hits: usize, trials: usize) -> Self {
        let (lower, upper) = wilson(hits, trials, WILSON_Z);
        Estimate {
            hits,
            trials,
            p: if trials > 0 { hits as f64 / trials as f64 } else { 0.0 },
            lower,
            upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// The census event compared in the step inequalities: either the full
/// vector `L̄` (types not listed must be absent, overflow must be empty) or
/// the singleton count alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CensusTarget {
    Singletons { singletons: usize },
    Vector { singletons: usize, others: BTreeMap<String, usize> },
}

impl CensusTarget {
    pub fn singletons(&self) -> usize {
        match self {
            CensusTarget::Singletons { singletons } | CensusTarget::Vector { singletons, .. } => *singletons,
        }
    }

    /// The same target with one more singleton.
    pub fn bumped(&self) -> Self {
        match self {
            CensusTarget::Singletons { singletons } => CensusTarget::Singletons {
                singletons: singletons + 1,
            },
            CensusTarget::Vector { singletons, others } => CensusTarget::Vector {
                singletons: singletons + 1,
                others: others.clone(),
            },
        }
    }

    pub fn matches(&self, t: &CensusTrial) -> bool {
        match self {
            CensusTarget::Singletons { singletons } => t.singletons == *singletons,
            CensusTarget::Vector { singletons, others } => {
                t.singletons == *singletons
                    && t.overflow_components == 0
                    && t.others.iter().filter(|(_, &c)| c > 0).count() == others.values().filter(|&&c| c > 0).count()
                    && others.iter().all(|(k, &c)| t.others.get(k).copied().unwrap_or(0) == c)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub target: CensusTarget,
    /// `q_∅ · L²_{t*} / (q_𝒫 |F|)`.
    pub coefficient: f64,
    pub p1: Estimate,
    pub p2: Estimate,
    pub verdict: Verdict,
}

fn count(run: &CensusRun<'_>, pred: impl Fn(&CensusTrial) -> bool) -> Estimate {
    Estimate::new(run.trials.iter().filter(|t| pred(t)).count(), run.trials.len())
}

/// `P(L̄ = L̄¹) ≥ q_∅ (L²_{t*} / (q_𝒫|F|)) P(L̄ = L̄²)` where `L̄²` has one
/// more singleton. Passes when the lower end of the left interval clears
/// the upper end of the right one; fails when the intervals separate the
/// other way.
pub fn step_inequality(run: &CensusRun<'_>, target: &CensusTarget) -> Result<StepReport> {
    require_weakly_separative(run.sys)?;
    let sys = run.sys;
    let l2 = target.bumped();
    let coefficient = sys.q_empty() * l2.singletons() as f64 / (sys.q_full() * sys.functions().len() as f64);
    let p1 = count(run, |t| target.matches(t));
    let p2 = count(run, |t| l2.matches(t));
    let verdict = if p1.lower >= coefficient * p2.upper {
        Verdict::Pass
    } else if p1.upper < coefficient * p2.lower {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    Ok(StepReport {
        target: target.clone(),
        coefficient,
        p1,
        p2,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub l_star: usize,
    /// `q_𝒫|F|/q_∅`.
    pub mu: f64,
    pub start: usize,
    pub bound: f64,
    pub estimate: Estimate,
    pub verdict: Verdict,
}

/// `Π_{L=K}^{L*−1} μ/(L+1)` with `μ = q_𝒫|F|/q_∅` and `K = ⌈μ⌉`: the bound
/// on `P(L_{t*} = L*)` obtained by chaining the one-step inequality upward
/// from `K`.
pub fn tail_bound(mu: f64, l_star: usize) -> Result<f64> {
    let start = mu.ceil() as usize;
    if l_star < start {
        return Err(Error::invalid(format!("L* = {l_star} lies below ⌈μ⌉ = {start}")));
    }
    Ok((start..l_star).map(|l| mu / (l + 1) as f64).product())
}

pub fn tail_check(run: &CensusRun<'_>, l_star: usize) -> Result<TailReport> {
    require_weakly_separative(run.sys)?;
    let sys = run.sys;
    let mu = sys.q_full() * sys.functions().len() as f64 / sys.q_empty();
    let bound = tail_bound(mu, l_star)?;
    let estimate = count(run, |t| t.singletons == l_star);
    let verdict = if estimate.upper <= bound {
        Verdict::Pass
    } else if estimate.lower > bound {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    Ok(TailReport {
        l_star,
        mu,
        start: mu.ceil() as usize,
        bound,
        estimate,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerReport {
    pub target: CensusTarget,
    pub alpha: f64,
    /// `q_∅ · L²_{t*} / (q_𝒫 α|F|)`.
    pub coefficient: f64,
    pub p1: Estimate,
    pub p2: Estimate,
    /// Frequency of the target event together with `|F_*| < α|F|`.
    pub zeta: Estimate,
    pub verdict: Verdict,
}

/// `P(L̄ = L̄¹) ≤ q_∅ (L²_{t*}/(q_𝒫 α|F|)) P(L̄ = L̄²) + ζ`. With a
/// singleton-only target this is the single-coordinate form, whose `ζ` is
/// summed over all vectors with the given singleton count.
pub fn lower_deviation(run: &CensusRun<'_>, target: &CensusTarget, alpha: f64) -> Result<LowerReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0,1), got {alpha}")));
    }
    require_weakly_separative(run.sys)?;
    let sys = run.sys;
    let nf = sys.functions().len() as f64;
    let l2 = target.bumped();
    let coefficient = sys.q_empty() * l2.singletons() as f64 / (sys.q_full() * alpha * nf);
    let p1 = count(run, |t| target.matches(t));
    let p2 = count(run, |t| l2.matches(t));
    let zeta = count(run, |t| target.matches(t) && (t.f_star as f64) < alpha * nf);
    let verdict = if p1.upper <= coefficient * p2.lower + zeta.lower {
        Verdict::Pass
    } else if p1.lower > coefficient * p2.upper + zeta.upper {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    Ok(LowerReport {
        target: target.clone(),
        alpha,
        coefficient,
        p1,
        p2,
        zeta,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareReport {
    pub functions: usize,
    /// Per-function success probability `q_𝒫`.
    pub q: f64,
    /// Merged bins as `(low, high)` singleton counts, inclusive.
    pub bins: Vec<(usize, usize)>,
    pub observed: Vec<usize>,
    pub expected: Vec<f64>,
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub p_value: f64,
    pub pass: bool,
}

/// Goodness of fit of `L_{t*}` against `Binomial(|F|, q_𝒫)` on a system
/// with pairwise disjoint ranges. Adjacent counts are merged until each bin
/// expects at least 5 draws.
pub fn binomial_fit(run: &CensusRun<'_>, level: f64) -> Result<ChiSquareReport> {
    let sys = run.sys;
    if !sys.has_disjoint_ranges() {
        return Err(Error::invalid("the binomial law needs pairwise disjoint ranges"));
    }
    let nf = sys.functions().len();
    let q = sys.q_full();
    let total = run.trials.len() as f64;
    let law = Binomial::new(q, nf as u64).map_err(|e| Error::Internal(e.to_string()))?;
    let mut hist = vec![0usize; nf + 1];
    for t in &run.trials {
        hist[t.singletons] += 1;
    }
    let mut bins = Vec::new();
    let mut observed = Vec::new();
    let mut expected: Vec<f64> = Vec::new();
    let mut lo = 0;
    let (mut o, mut e) = (0usize, 0.0);
    for k in 0..=nf {
        o += hist[k];
        e += law.pmf(k as u64) * total;
        if e >= 5.0 {
            bins.push((lo, k));
            observed.push(o);
            expected.push(e);
            lo = k + 1;
            o = 0;
            e = 0.0;
        }
    }
    if lo <= nf {
        match bins.last_mut() {
            Some(b) => {
                b.1 = nf;
                *observed.last_mut().unwrap() += o;
                *expected.last_mut().unwrap() += e;
            }
            None => {
                bins.push((lo, nf));
                observed.push(o);
                expected.push(e);
            }
        }
    }
    if bins.len() < 2 {
        return Err(Error::invalid("too few trials for a chi-square test"));
    }
    let statistic: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = bins.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::Internal(e.to_string()))?;
    let critical = chi.inverse_cdf(level);
    let p_value = 1.0 - chi.cdf(statistic);
    Ok(ChiSquareReport {
        functions: nf,
        q,
        bins,
        observed,
        expected,
        statistic,
        dof,
        critical,
        p_value,
        pass: statistic <= critical,
    })
}
