//! Language phylogeny from lexical choice.
//!
//! Labeled English text goes in, a tree over the labels comes out. The guide
//! in `book/` walks through each module; its code blocks run as doc-tests.

// Index loops read better for square matrices, and `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod distance;
pub mod divergence;
pub mod embed;
pub mod error;
pub mod lexicon;
pub mod phylo;
pub mod pipeline;
pub mod synthgen;
pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/corpus.md")]
    struct Corpus;
    #[doc = include_str!("../../../book/src/focus-set.md")]
    struct FocusSet;
    #[doc = include_str!("../../../book/src/embeddings.md")]
    struct Embeddings;
    #[doc = include_str!("../../../book/src/distance.md")]
    struct Distance;
    #[doc = include_str!("../../../book/src/trees.md")]
    struct Trees;
    #[doc = include_str!("../../../book/src/divergence.md")]
    struct Divergence;
    #[doc = include_str!("../../../book/src/synthetic.md")]
    struct Synthetic;
    #[doc = include_str!("../../../book/src/pipeline.md")]
    struct Pipeline;
}
