//! Compile a learning pathway (an ordered set of course texts) into a
//! course-trailer storyboard: a fragment timeline of frames and elements,
//! narration, subtitles, per-frame timings and a render plan.
//!
//! Model calls (titles, embeddings, paraphrase, definition classification,
//! speech) go through [`adapters::AdapterRegistry`]; the built-in stubs make
//! every run hermetic and byte-for-byte reproducible from a seed.
//!
//! ```
//! use trailerforge::textmetrics::{jaccard, TokenSet};
//!
//! let a = TokenSet::from_text("the cat sat");
//! let b = TokenSet::from_text("the cat ran");
//! assert_eq!(jaccard(&a, &b), 0.5);
//! ```

// `!(x > 0.0)` is how config checks reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapters;
pub mod canonical;
pub mod composition;
pub mod corpus;
pub mod fragments;
pub mod pipeline;
pub mod rng;
pub mod selection;
pub mod textmetrics;

pub use pipeline::{compile, CompileOptions, Compiled, PipelineError};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/manifests.md")]
    mod manifests {}
    #[doc = include_str!("../../../book/src/outline-selection.md")]
    mod outline_selection {}
    #[doc = include_str!("../../../book/src/fragments.md")]
    mod fragments {}
    #[doc = include_str!("../../../book/src/templates.md")]
    mod templates {}
    #[doc = include_str!("../../../book/src/timing.md")]
    mod timing {}
    #[doc = include_str!("../../../book/src/adapters.md")]
    mod adapters {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
