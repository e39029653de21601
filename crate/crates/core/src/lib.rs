// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod difficulty;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod plots;
pub mod special;
pub mod stats;
pub mod synth;
pub mod trial;

pub use error::{Error, Result};

/// Guide chapters under `book/src`, compiled so their examples run as tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/difficulty.md")]
    mod difficulty {}
    #[doc = include_str!("../../../book/src/effective-width.md")]
    mod effective_width {}
    #[doc = include_str!("../../../book/src/cleanup.md")]
    mod cleanup {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/trial-logs.md")]
    mod trial_logs {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
