//! The chapters of `book/src`, one module each, so that `cargo test` runs
//! every snippet in the guide.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/projections.md")]
pub mod projections {}
#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}
#[doc = include_str!("../../../book/src/online.md")]
pub mod online {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/meta.md")]
pub mod meta {}
#[doc = include_str!("../../../book/src/applications.md")]
pub mod applications {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
