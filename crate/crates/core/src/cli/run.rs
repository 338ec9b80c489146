use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::spec::{Kind, Loaded};
use crate::compsys::{
    binomial_fit, lower_deviation, run_census, step_inequality, tail_check, CensusRun, CensusTarget, Verdict,
    DEFAULT_COMPONENT_CAP,
};
use crate::error::{Error, Result};
use crate::expansion::{irrationality_screen, ExpansionContext, DEFAULT_SCREEN_BUDGET};
use crate::sampler::{
    bracket_experiment, closure_experiment, extended_catalog, qe_determinism_experiment, semi_good_experiment,
    shipped_catalog, weakly_nice_experiment, SampleConfig, SemiGoodQuad,
};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckVerdict {
    Pass,
    Fail,
    Inconclusive,
    Info,
}

impl CheckVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckVerdict::Pass => "pass",
            CheckVerdict::Fail => "fail",
            CheckVerdict::Inconclusive => "inconclusive",
            CheckVerdict::Info => "info",
        }
    }
}

impl From<Verdict> for CheckVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => CheckVerdict::Pass,
            Verdict::Fail => CheckVerdict::Fail,
            Verdict::Inconclusive => CheckVerdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub verdict: CheckVerdict,
}

impl Check {
    fn info(name: &str, value: f64) -> Self {
        Check {
            name: name.into(),
            value: Some(value),
            threshold: None,
            verdict: CheckVerdict::Info,
        }
    }

    fn at_least(name: &str, value: Option<f64>, min: Option<f64>) -> Self {
        let verdict = match (value, min) {
            (_, None) => CheckVerdict::Info,
            (None, Some(_)) => CheckVerdict::Inconclusive,
            (Some(v), Some(t)) if v >= t => CheckVerdict::Pass,
            _ => CheckVerdict::Fail,
        };
        Check {
            name: name.into(),
            value,
            threshold: min,
            verdict,
        }
    }

    fn at_most(name: &str, value: f64, max: Option<f64>) -> Self {
        let verdict = match max {
            None => CheckVerdict::Info,
            Some(t) if value <= t => CheckVerdict::Pass,
            Some(_) => CheckVerdict::Fail,
        };
        Check {
            name: name.into(),
            value: Some(value),
            threshold: max,
            verdict,
        }
    }

    fn verdict(name: &str, verdict: CheckVerdict) -> Self {
        Check {
            name: name.into(),
            value: None,
            threshold: None,
            verdict,
        }
    }
}

/// Everything a run produces, before it is written anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub kind: Kind,
    pub params: Value,
    /// One JSON object per trial.
    pub trials: Vec<Value>,
    pub summary: Value,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == CheckVerdict::Fail)
    }

    /// JSON lines: a header, the trials, then the summary.
    pub fn jsonl(&self) -> Result<String> {
        let mut out = String::new();
        let mut line = |v: Value| -> Result<()> {
            out.push_str(&serde_json::to_string(&v).map_err(|e| Error::Internal(e.to_string()))?);
            out.push('\n');
            Ok(())
        };
        line(json!({"schema": SCHEMA, "record": "header", "kind": self.kind.as_str(), "params": self.params}))?;
        for t in &self.trials {
            line(json!({"schema": SCHEMA, "record": "trial", "kind": self.kind.as_str(), "data": t}))?;
        }
        line(json!({
            "schema": SCHEMA,
            "record": "summary",
            "kind": self.kind.as_str(),
            "data": self.summary,
            "checks": self.checks,
        }))?;
        Ok(out)
    }

    pub fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Internal(e.to_string());
        w.write_record(["schema", "kind", "check", "verdict", "value", "threshold"]).map_err(err)?;
        for c in &self.checks {
            let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                SCHEMA.to_string(),
                self.kind.as_str().to_string(),
                c.name.clone(),
                c.verdict.as_str().to_string(),
                num(c.value),
                num(c.threshold),
            ])
            .map_err(err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Internal(e.to_string()))?)
            .map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        writeln!(s, "experiment: {}", self.kind.as_str()).unwrap();
        writeln!(s, "schema: {SCHEMA}").unwrap();
        writeln!(s, "parameters: {}", self.params).unwrap();
        writeln!(s, "trials: {}", self.trials.len()).unwrap();
        writeln!(s).unwrap();
        for c in &self.checks {
            let mut line = format!("{:<13} {}", c.verdict.as_str().to_uppercase(), c.name);
            if let Some(v) = c.value {
                write!(line, " = {v}").unwrap();
            }
            if let Some(t) = c.threshold {
                write!(line, " (threshold {t})").unwrap();
            }
            writeln!(s, "{line}").unwrap();
        }
        let status = if self.failed() { "FAILED" } else { "OK" };
        writeln!(s, "\nstatus: {status}").unwrap();
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("trials.jsonl"), self.jsonl()?)?;
        std::fs::write(dir.join("summary.csv"), self.csv()?)?;
        std::fs::write(dir.join("report.txt"), self.report())?;
        Ok(())
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Internal(e.to_string()))
}

/// Serialize a report and move its `trials` array out as the trial lines.
fn split_trials<T: Serialize>(report: &T) -> Result<(Vec<Value>, Value)> {
    let mut v = to_value(report)?;
    let trials = match v.as_object_mut().and_then(|o| o.remove("trials")) {
        Some(Value::Array(a)) => a,
        _ => Vec::new(),
    };
    Ok((trials, v))
}

fn need<T>(v: Option<T>, what: &str, kind: Kind) -> Result<T> {
    v.ok_or_else(|| Error::invalid(format!("{} experiments need {what}", kind.as_str())))
}

fn sample_config(l: &Loaded) -> Result<SampleConfig> {
    let e = &l.spec.experiment;
    let base = need(l.base.clone(), "a [context]", e.kind)?;
    let mut cfg = SampleConfig::new(need(e.n, "`n`", e.kind)?, e.seed, e.trials, base)?;
    if let Some(p) = &l.plus {
        cfg = cfg.with_expansion(p.clone())?;
    }
    if let Some(eps) = e.eps {
        cfg = cfg.with_eps(eps)?;
    }
    if let Some(cap) = e.embed_cap {
        cfg = cfg.with_embed_cap(cap)?;
    }
    Ok(cfg)
}

fn census_trials(run: &CensusRun<'_>) -> Result<Vec<Value>> {
    run.trials.iter().map(to_value).collect()
}

fn census_target(l: &Loaded, run: &CensusRun<'_>) -> Result<CensusTarget> {
    let e = &l.spec.experiment;
    let singletons = match (e.l1, e.l1_offset) {
        (Some(v), None) => v,
        (None, Some(off)) => {
            let v = run.mean_singletons().round() as i64 + off;
            usize::try_from(v).map_err(|_| Error::invalid(format!("l1 offset gives a negative target {v}")))?
        }
        (None, None) => return Err(Error::invalid("census experiments need `l1` or `l1_offset`")),
        (Some(_), Some(_)) => return Err(Error::invalid("give only one of `l1`, `l1_offset`")),
    };
    Ok(if e.vector {
        CensusTarget::Vector {
            singletons,
            others: Default::default(),
        }
    } else {
        CensusTarget::Singletons { singletons }
    })
}

pub fn execute(l: &Loaded) -> Result<Outcome> {
    let e = &l.spec.experiment;
    let kind = e.kind;
    let mut params = to_value(&json!({
        "seed": e.seed,
        "trials": e.trials,
        "n": e.n,
    }))?;
    let (trials, summary, checks) = match kind {
        Kind::Bracket => {
            let cfg = sample_config(l)?;
            let pair = need(l.pair.as_ref(), "a [pair]", kind)?;
            let r = bracket_experiment(pair, &cfg)?;
            params["eps"] = json!(cfg.eps);
            let mut checks = vec![Check::at_least("pass_fraction", r.pass_fraction, e.min_pass_fraction)];
            checks.push(Check::at_most("max_nu", r.max_nu as f64, e.max_nu.map(|v| v as f64)));
            checks.push(Check::info("mean_nu", r.mean_nu));
            let (t, s) = split_trials(&r)?;
            (t, s, checks)
        }
        Kind::WeaklyNice => {
            let cfg = sample_config(l)?;
            let pair = need(l.pair.as_ref(), "a [pair]", kind)?;
            let r = weakly_nice_experiment(pair, need(e.family, "`family`", kind)?, &cfg)?;
            let checks = vec![Check::at_least("pass_fraction", r.pass_fraction, e.min_pass_fraction)];
            let (t, s) = split_trials(&r)?;
            (t, s, checks)
        }
        Kind::Closure => {
            let cfg = sample_config(l)?;
            let r = closure_experiment(
                need(e.ell, "`ell`", kind)?,
                need(e.k, "`k`", kind)?,
                &cfg,
                e.search_cap.unwrap_or(1_000_000),
            )?;
            let checks = if r.skipped {
                vec![Check::verdict("bound_violations", CheckVerdict::Inconclusive)]
            } else {
                vec![
                    Check::at_most("bound_violations", r.violations as f64, Some(0.0)),
                    Check::info("max_closure", r.max_closure as f64),
                    Check::info("max_iterated_closure", r.max_iterated as f64),
                ]
            };
            let (t, s) = split_trials(&r)?;
            (t, s, checks)
        }
        Kind::SemiGood => {
            let cfg = sample_config(l)?;
            let d = need(l.structure.clone(), "a [structure] for D", kind)?;
            let quad = SemiGoodQuad::new(
                d,
                &need(e.a.clone(), "`a`", kind)?,
                &need(e.b.clone(), "`b`", kind)?,
                e.radius.unwrap_or(0),
            )?;
            let r = semi_good_experiment(&quad, need(e.k, "`k`", kind)?, &cfg)?;
            let checks = vec![Check::at_least("pass_fraction", r.pass_fraction, e.min_pass_fraction)];
            let (t, s) = split_trials(&r)?;
            (t, s, checks)
        }
        Kind::QeDeterminism => {
            let cfg = sample_config(l)?;
            let formulas = match e.formulas.as_deref().unwrap_or("shipped") {
                "shipped" => shipped_catalog(),
                "extended" => extended_catalog(),
                other => return Err(Error::invalid(format!("unknown formula catalog {other:?}"))),
            };
            let r = qe_determinism_experiment(&formulas, need(e.k, "`k`", kind)?, &cfg)?;
            let checks = vec![Check::at_most(
                "collision_fraction",
                r.collision_fraction,
                e.max_collision_fraction,
            )];
            let (t, s) = split_trials(&r)?;
            (t, s, checks)
        }
        Kind::CensusStep | Kind::CensusTail | Kind::CensusLower | Kind::CensusBinomial => {
            let sys = need(l.system.as_ref(), "a [system]", kind)?;
            let run = run_census(sys, e.seed, e.trials, e.cap.unwrap_or(DEFAULT_COMPONENT_CAP))?;
            let conserved = Check::verdict(
                "census_conservation",
                if run.all_conserved() {
                    CheckVerdict::Pass
                } else {
                    CheckVerdict::Fail
                },
            );
            let (summary, check) = match kind {
                Kind::CensusStep => {
                    let r = step_inequality(&run, &census_target(l, &run)?)?;
                    (to_value(&r)?, Check::verdict("step_inequality", r.verdict.into()))
                }
                Kind::CensusTail => {
                    let r = tail_check(&run, need(e.l_star, "`l_star`", kind)?)?;
                    (to_value(&r)?, Check::verdict("tail_bound", r.verdict.into()))
                }
                Kind::CensusLower => {
                    let r = lower_deviation(&run, &census_target(l, &run)?, need(e.alpha, "`alpha`", kind)?)?;
                    (to_value(&r)?, Check::verdict("lower_deviation", r.verdict.into()))
                }
                _ => {
                    let r = binomial_fit(&run, e.level.unwrap_or(0.99))?;
                    let check = Check::at_most("chi_square", r.statistic, Some(r.critical));
                    (to_value(&r)?, check)
                }
            };
            params["mean_singletons"] = json!(run.mean_singletons());
            (census_trials(&run)?, summary, vec![check, conserved])
        }
        Kind::Screen => {
            let plus = match &l.plus {
                Some(p) => p.clone(),
                None => ExpansionContext::trivial(need(l.base.clone(), "a [context]", kind)?),
            };
            let r = irrationality_screen(
                &plus,
                e.size_bound.unwrap_or(6),
                e.budget.unwrap_or(DEFAULT_SCREEN_BUDGET),
            )?;
            let checks = vec![
                Check::info("violations", r.violations.len() as f64),
                Check::info("unresolved", r.unresolved.len() as f64),
                Check::info("zero_signatures", r.zero_signatures as f64),
            ];
            (Vec::new(), to_value(&r)?, checks)
        }
    };
    Ok(Outcome {
        kind,
        params,
        trials,
        summary,
        checks,
    })
}
