//! The guide's chapters, compiled so that every Rust listing runs as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/getting_started.md")]
pub mod getting_started {}
#[doc = include_str!("../../../book/src/meshes.md")]
pub mod meshes {}
#[doc = include_str!("../../../book/src/dual_functions.md")]
pub mod dual_functions {}
#[doc = include_str!("../../../book/src/indicators.md")]
pub mod indicators {}
#[doc = include_str!("../../../book/src/adaptivity.md")]
pub mod adaptivity {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/file_formats.md")]
pub mod file_formats {}
