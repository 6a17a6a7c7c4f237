//! Doc-test shim for the guide: mdBook cannot run example code against
//! crate dependencies, so each chapter is included here as module
//! documentation and `cargo test --doc` executes every Rust snippet.
//! One module per chapter keeps test failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/junction.md")]
pub mod junction {}

#[doc = include_str!("../../../book/src/photon_assisted.md")]
pub mod photon_assisted {}

#[doc = include_str!("../../../book/src/resonator.md")]
pub mod resonator {}

#[doc = include_str!("../../../book/src/spectroscopy.md")]
pub mod spectroscopy {}

#[doc = include_str!("../../../book/src/estimation.md")]
pub mod estimation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
