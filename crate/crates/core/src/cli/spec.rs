use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::catalog;
use crate::compsys::System;
use crate::error::{Error, Result};
use crate::expansion::{parse_context_file, ExpansionContext};
use crate::structures::{parse_structure, RelStructure, SubPair};
use crate::weights::BaseContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Bracket,
    WeaklyNice,
    Closure,
    SemiGood,
    QeDeterminism,
    CensusStep,
    CensusTail,
    CensusLower,
    CensusBinomial,
    Screen,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Bracket => "bracket",
            Kind::WeaklyNice => "weakly_nice",
            Kind::Closure => "closure",
            Kind::SemiGood => "semi_good",
            Kind::QeDeterminism => "qe_determinism",
            Kind::CensusStep => "census_step",
            Kind::CensusTail => "census_tail",
            Kind::CensusLower => "census_lower",
            Kind::CensusBinomial => "census_binomial",
            Kind::Screen => "screen",
        }
    }
}

/// Where an input comes from: a catalog name, a file (relative to the spec
/// file) or inline text.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub catalog: Option<String>,
    pub file: Option<PathBuf>,
    pub text: Option<String>,
}

impl Source {
    fn read(&self, base: &Path, what: &str) -> Result<Option<String>> {
        let given = [self.catalog.is_some(), self.file.is_some(), self.text.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            return Err(Error::invalid(format!("[{what}] takes one of catalog, file, text")));
        }
        if let Some(f) = &self.file {
            let path = base.join(f);
            return std::fs::read_to_string(&path)
                .map(Some)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())));
        }
        Ok(self.text.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub n: Option<usize>,
    pub eps: Option<f64>,
    pub embed_cap: Option<usize>,
    pub min_pass_fraction: Option<f64>,
    pub max_nu: Option<usize>,
    pub family: Option<usize>,
    pub k: Option<usize>,
    pub ell: Option<usize>,
    pub search_cap: Option<u64>,
    pub a: Option<Vec<u32>>,
    pub b: Option<Vec<u32>>,
    pub radius: Option<usize>,
    pub formulas: Option<String>,
    pub max_collision_fraction: Option<f64>,
    pub l1: Option<usize>,
    pub l1_offset: Option<i64>,
    #[serde(default)]
    pub vector: bool,
    pub alpha: Option<f64>,
    pub l_star: Option<usize>,
    pub cap: Option<usize>,
    pub level: Option<f64>,
    pub size_bound: Option<usize>,
    pub budget: Option<usize>,
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema: u32,
    pub experiment: Experiment,
    #[serde(default)]
    pub context: Source,
    #[serde(default)]
    pub pair: Source,
    #[serde(default)]
    pub structure: Source,
    #[serde(default)]
    pub system: Source,
    #[serde(default)]
    pub output: Output,
}

fn toml_error(src: &str, e: &toml::de::Error) -> Error {
    let (line, column) = match e.span() {
        Some(span) => {
            let before = &src[..span.start.min(src.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            (line, column)
        }
        None => (1, 1),
    };
    Error::parse(line, column, e.message().to_string())
}

impl ExperimentSpec {
    pub fn parse(src: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(src).map_err(|e| toml_error(src, &e))?;
        if spec.schema != 1 {
            return Err(Error::parse(1, 1, format!("unsupported schema {}", spec.schema)));
        }
        Ok(spec)
    }
}

/// A spec with its inputs loaded.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub spec: ExperimentSpec,
    pub base: Option<BaseContext>,
    pub plus: Option<ExpansionContext>,
    pub pair: Option<SubPair>,
    pub structure: Option<RelStructure>,
    pub system: Option<System>,
}

/// Parse a pair file: a structure file plus one `small <elements>` line.
pub fn parse_pair(src: &str) -> Result<SubPair> {
    let mut small = None;
    let mut kept = String::new();
    for (i, line) in src.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if let Some(rest) = body.strip_prefix("small") {
            if !(rest.is_empty() || rest.starts_with(char::is_whitespace)) {
                kept.push_str(line);
                kept.push('\n');
                continue;
            }
            let mut v = Vec::new();
            for tok in rest.split_whitespace() {
                v.push(
                    tok.parse::<u32>()
                        .map_err(|_| Error::parse(i + 1, 1, format!("expected element ids after `small`, found {tok:?}")))?,
                );
            }
            small = Some(v);
            kept.push('\n');
        } else {
            kept.push_str(line);
            kept.push('\n');
        }
    }
    let big = parse_structure(&kept)?;
    let small = small.ok_or_else(|| Error::parse(1, 1, "missing `small` line"))?;
    SubPair::new(big, &small)
}

pub fn load(spec: ExperimentSpec, base_dir: &Path) -> Result<Loaded> {
    let (mut base, mut plus) = (None, None);
    if let Some(name) = &spec.context.catalog {
        let c = catalog::context(name)?;
        base = Some(c.base);
        plus = c.plus;
    } else if let Some(text) = spec.context.read(base_dir, "context")? {
        let (b, p) = parse_context_file(&text)?;
        base = Some(b);
        plus = p;
    }
    let mut pair = None;
    if let Some(name) = &spec.pair.catalog {
        let p = catalog::pair(name)?;
        if base.is_none() {
            let c = catalog::context(p.context)?;
            base = Some(c.base);
            plus = c.plus;
        }
        pair = Some(p.pair);
    } else if let Some(text) = spec.pair.read(base_dir, "pair")? {
        pair = Some(parse_pair(&text)?);
    }
    let structure = match &spec.structure.catalog {
        Some(_) => return Err(Error::invalid("[structure] takes a file or text")),
        None => spec.structure.read(base_dir, "structure")?.map(|t| parse_structure(&t)).transpose()?,
    };
    let system = match &spec.system.catalog {
        Some(name) => Some(catalog::system(name)?.system),
        None => spec.system.read(base_dir, "system")?.map(|t| System::parse(&t)).transpose()?,
    };
    Ok(Loaded {
        spec,
        base,
        plus,
        pair,
        structure,
        system,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_position() {
        let err = ExperimentSpec::parse("schema = 1\n[experiment]\nkind = \"bogus\"\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = ExperimentSpec::parse("schema = 2\n[experiment]\nkind = \"screen\"\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn pair_files() {
        let p = parse_pair("vocab E/2:sym\nn 2\nE 0 1\nsmall 0\n").unwrap();
        assert_eq!(p.small(), &[0]);
        assert!(matches!(
            parse_pair("vocab E/2:sym\nn 2\nE 0 5\nsmall 0\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
