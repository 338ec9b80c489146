//! Built-in contexts, pairs and systems, addressable by name.

use serde::Serialize;

use crate::compsys::{PClass, System};
use crate::error::{Error, Result};
use crate::expansion::{ExpansionContext, NewRelation};
use crate::structures::{write_structure, RelStructure, Relation, SubPair};
use crate::weights::BaseContext;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedContext {
    pub name: &'static str,
    pub description: &'static str,
    pub base: BaseContext,
    pub plus: Option<ExpansionContext>,
}

impl NamedContext {
    pub fn to_text(&self) -> String {
        match &self.plus {
            Some(p) => p.to_text(),
            None => self.base.to_text(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedPair {
    pub name: &'static str,
    pub description: &'static str,
    /// The catalog context the pair is meant to be sampled in.
    pub context: &'static str,
    pub pair: SubPair,
}

impl NamedPair {
    /// The structure file followed by a `small` line.
    pub fn to_text(&self) -> String {
        let small: Vec<String> = self.pair.small().iter().map(|x| x.to_string()).collect();
        format!("{}small {}\n", write_structure(&self.pair.big), small.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSystem {
    pub name: &'static str,
    pub description: &'static str,
    pub system: System,
}

/// One line of a catalog listing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Listing {
    pub name: String,
    pub description: String,
}

fn graph(alpha: f64) -> BaseContext {
    BaseContext::graph(alpha).expect("alpha in (0,1)")
}

fn expanded(alpha: f64, rels: &[(&str, usize, bool, f64, f64)]) -> ExpansionContext {
    let new = rels
        .iter()
        .map(|&(name, arity, sym, beta, coeff)| NewRelation {
            relation: Relation::new(name, arity, sym),
            beta,
            coeff,
        })
        .collect();
    ExpansionContext::new(graph(alpha), new).expect("catalog contexts are valid")
}

pub fn contexts() -> Vec<NamedContext> {
    let plain = |name, description, alpha| NamedContext {
        name,
        description,
        base: graph(alpha),
        plus: None,
    };
    let plus = |name, description, ctx: ExpansionContext| NamedContext {
        name,
        description,
        base: ctx.base().clone(),
        plus: Some(ctx),
    };
    vec![
        plain("sparse-graph-irr", "graph, alpha = sqrt(2)/4 (irrational)", 2f64.sqrt() / 4.0),
        plain("graph-0.45", "graph, alpha = 0.45", 0.45),
        plain("graph-0.5", "graph, alpha = 0.5", 0.5),
        plain("graph-0.6", "graph, alpha = 0.6", 0.6),
        plus(
            "colored-pendant",
            "graph at alpha = 0.45 with a unary color P, beta = -0.2, coefficient 0.8",
            expanded(0.45, &[("P", 1, false, -0.2, 0.8)]),
        ),
        plus(
            "rational-binary",
            "graph at alpha = 0.5 with a symmetric binary S, beta = -0.5 (fails the irrationality screen)",
            expanded(0.5, &[("S", 2, true, -0.5, 0.5)]),
        ),
    ]
}

pub fn context(name: &str) -> Result<NamedContext> {
    contexts()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::invalid(format!("no catalog context named {name:?}")))
}

pub fn pairs() -> Vec<NamedPair> {
    let g = |size, edges: &[(u32, u32)]| RelStructure::graph(size, edges).expect("catalog graphs are valid");
    let pair = |big, small: &[u32]| SubPair::new(big, small).expect("catalog pairs are valid");
    let colored = context("colored-pendant").expect("listed above").plus.expect("an expansion");
    let colored_big = RelStructure::new(colored.vocab().clone(), 2, vec![(0, vec![0, 1]), (1, vec![1])])
        .expect("colored pendant is valid");
    vec![
        NamedPair {
            name: "pendant",
            description: "one new vertex joined to the base vertex (safe, exponent 1 - alpha)",
            context: "graph-0.45",
            pair: pair(g(2, &[(0, 1)]), &[0]),
        },
        NamedPair {
            name: "common-neighbor",
            description: "one new vertex joined to both base vertices (algebraic for alpha > 1/2)",
            context: "graph-0.6",
            pair: pair(g(3, &[(0, 2), (1, 2)]), &[0, 1]),
        },
        NamedPair {
            name: "triangle-over-edge",
            description: "a new vertex closing a triangle over a base edge",
            context: "graph-0.45",
            pair: pair(g(3, &[(0, 1), (0, 2), (1, 2)]), &[0, 1]),
        },
        NamedPair {
            name: "colored-pendant",
            description: "pendant whose new vertex carries the color P (qr, exponent 0.35 in colored-pendant)",
            context: "colored-pendant",
            pair: pair(colored_big, &[0]),
        },
    ]
}

pub fn pair(name: &str) -> Result<NamedPair> {
    pairs()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::invalid(format!("no catalog pair named {name:?}")))
}

/// `m = 2`, `n = 40`, twenty functions, 𝒫 = {{1,2}} at `p = 0.3`; with
/// `shared` the first values are shared by consecutive pairs of functions.
fn two_point_system(shared: bool) -> System {
    let functions = (0..20u32)
        .map(|i| if shared { vec![i / 2, 20 + i] } else { vec![2 * i, 2 * i + 1] })
        .collect();
    System::new(
        2,
        40,
        functions,
        vec![PClass {
            members: vec![vec![0, 1]],
            p: 0.3,
        }],
    )
    .expect("catalog systems are valid")
}

pub fn systems() -> Vec<NamedSystem> {
    vec![
        NamedSystem {
            name: "disjoint-binomial",
            description: "20 functions [2] -> [40] with disjoint ranges, p = 0.3; singletons are Binomial(20, 0.3)",
            system: two_point_system(false),
        },
        NamedSystem {
            name: "overlap-2",
            description: "20 functions [2] -> [40], consecutive pairs share their first value, p = 0.3",
            system: two_point_system(true),
        },
    ]
}

pub fn system(name: &str) -> Result<NamedSystem> {
    systems()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::invalid(format!("no catalog system named {name:?}")))
}

/// Names and descriptions for `kind` in `contexts`, `pairs`, `systems`.
pub fn listing(kind: &str) -> Result<Vec<Listing>> {
    let l = |name: &str, description: &str| Listing {
        name: name.into(),
        description: description.into(),
    };
    Ok(match kind {
        "contexts" => contexts().iter().map(|c| l(c.name, c.description)).collect(),
        "pairs" => pairs()
            .iter()
            .map(|p| l(p.name, &format!("{} [context {}]", p.description, p.context)))
            .collect(),
        "systems" => systems().iter().map(|s| l(s.name, s.description)).collect(),
        other => return Err(Error::invalid(format!("unknown catalog kind {other:?}; expected contexts, pairs or systems"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compsys::{separativity_level, Separativity};
    use crate::expansion::{classify_plus, PlusKind};
    use crate::weights::{classify, PairKind};

    #[test]
    fn listings() {
        let names = |k| listing(k).unwrap().into_iter().map(|l| l.name).collect::<Vec<_>>();
        assert!(names("pairs").iter().any(|n| n == "pendant"));
        assert!(names("pairs").iter().any(|n| n == "common-neighbor"));
        assert!(names("pairs").iter().any(|n| n == "triangle-over-edge"));
        assert!(names("systems").contains(&"disjoint-binomial".to_string()));
        assert!(names("systems").contains(&"overlap-2".to_string()));
        assert!(names("contexts").contains(&"sparse-graph-irr".to_string()));
        assert!(listing("bogus").is_err());
    }

    #[test]
    fn pairs_have_expected_kinds() {
        let ctx = |p: &NamedPair| context(p.context).unwrap();
        let p = pair("pendant").unwrap();
        assert!(classify(&p.pair, &ctx(&p).base).unwrap().is_strong());
        let p = pair("common-neighbor").unwrap();
        assert_eq!(classify(&p.pair, &ctx(&p).base).unwrap(), PairKind::Algebraic);
        let p = pair("colored-pendant").unwrap();
        assert_eq!(classify_plus(&p.pair, ctx(&p).plus.as_ref().unwrap()).unwrap(), PlusKind::Qr);
    }

    #[test]
    fn systems_are_separative() {
        for s in systems() {
            assert_eq!(separativity_level(&s.system), Separativity::Separative, "{}", s.name);
        }
        let o = system("overlap-2").unwrap().system;
        assert!(!o.has_disjoint_ranges());
        assert_eq!(o.functions()[3], vec![1, 23]);
    }
}
