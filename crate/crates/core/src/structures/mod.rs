//! Finite relational structures, embeddings and extension search.

mod canon;
mod embed;
mod structure;
mod text;
mod vocab;

pub use canon::{
    brute_force_code, canonical_form, canonical_form_with, from_canonical, graphs_up_to_iso,
    CanonicalForm, CANON_LIMIT,
};
pub use embed::{
    disjoint_family, extensions, for_each_extension, free_amalgam_check, is_embedding,
    is_free_amalgam, nu, nu_capped, AmalgamCheck, Embedding, SubPair,
};
pub use structure::{normalize_set, RelStructure, TupleRef};
pub use text::{parse_structure, write_structure};
pub(crate) use text::{parse_num, parse_vocab_line, tokenize, Token};
pub use vocab::{Relation, Vocabulary};
