//! The guide's chapters, compiled as rustdoc so `cargo test` runs every
//! listing. One module per chapter keeps failures traceable to a file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}
#[doc = include_str!("../../../book/src/scoring.md")]
pub mod scoring {}
#[doc = include_str!("../../../book/src/hypotheses.md")]
pub mod hypotheses {}
#[doc = include_str!("../../../book/src/event_study.md")]
pub mod event_study {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
