//! The book under `book/` is the narrative documentation of this workspace.
//! mdbook cannot run snippets against local crates, so each chapter is also
//! included here as a doc module: `cargo test -p aistrack-guide --doc` runs
//! every fenced Rust block in the book against the current library, which
//! keeps prose and code from drifting apart.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/decoding.md")]
pub mod decoding {}

#[doc = include_str!("../../../book/src/cleaning.md")]
pub mod cleaning {}

#[doc = include_str!("../../../book/src/splitting.md")]
pub mod splitting {}

#[doc = include_str!("../../../book/src/assessment.md")]
pub mod assessment {}

#[doc = include_str!("../../../book/src/comparison.md")]
pub mod comparison {}
