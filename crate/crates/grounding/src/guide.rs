//! The narrative guide, compiled chapter by chapter so every code snippet
//! in `book/src/` runs under `cargo test --doc` and stays in sync with
//! the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
