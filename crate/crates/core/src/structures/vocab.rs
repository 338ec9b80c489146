use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A predicate symbol. Symmetric relations are closed under every
/// permutation of their arguments; one unordered set of elements is then a
/// single atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    pub symmetric: bool,
}

impl Relation {
    pub fn new(name: impl Into<String>, arity: usize, symmetric: bool) -> Self {
        Relation {
            name: name.into(),
            arity,
            symmetric,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)?;
        if self.symmetric {
            write!(f, ":sym")?;
        }
        Ok(())
    }
}

/// A finite relational vocabulary. Every relation is interpreted
/// irreflexively: no tuple repeats an element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vocabulary {
    relations: Vec<Relation>,
}

impl Vocabulary {
    pub fn new(relations: Vec<Relation>) -> Result<Self> {
        for (i, r) in relations.iter().enumerate() {
            if r.arity == 0 {
                return Err(Error::invalid(format!("relation {} has arity 0", r.name)));
            }
            if r.name.is_empty() || r.name.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("bad relation name {:?}", r.name)));
            }
            if relations[..i].iter().any(|q| q.name == r.name) {
                return Err(Error::invalid(format!("duplicate relation {}", r.name)));
            }
        }
        Ok(Vocabulary { relations })
    }

    /// One symmetric binary relation `E`: simple graphs.
    pub fn graph() -> Arc<Self> {
        Arc::new(Vocabulary {
            relations: vec![Relation::new("E", 2, true)],
        })
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn relation(&self, idx: usize) -> &Relation {
        &self.relations[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    /// Vocabulary with `extra` appended after the existing relations.
    pub fn extended(&self, extra: &[Relation]) -> Result<Self> {
        let mut rels = self.relations.clone();
        rels.extend_from_slice(extra);
        Vocabulary::new(rels)
    }

    /// Vocabulary made of the first `len` relations.
    pub fn prefix(&self, len: usize) -> Self {
        Vocabulary {
            relations: self.relations[..len].to_vec(),
        }
    }

    /// Parse a relation declaration such as `E/2`, `S/2:sym` or `R/3`.
    pub fn parse_relation(decl: &str) -> Result<Relation> {
        let (body, symmetric) = match decl.strip_suffix(":sym") {
            Some(b) => (b, true),
            None => (decl, false),
        };
        let (name, arity) = body
            .split_once('/')
            .ok_or_else(|| Error::invalid(format!("expected NAME/ARITY, got {decl:?}")))?;
        let arity: usize = arity
            .parse()
            .map_err(|_| Error::invalid(format!("bad arity in {decl:?}")))?;
        Ok(Relation::new(name, arity, symmetric))
    }
}

impl fmt::Display for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vocab")?;
        for r in &self.relations {
            write!(f, " {r}")?;
        }
        Ok(())
    }
}
