//! Cross-lingual consistency analysis for open-domain question answering.
//!
//! Given questions that ask the same thing in several languages, this crate
//! measures whether a retrieve-then-read QA system answers them the same
//! way. It covers the parts of such a study that do not need a neural
//! model:
//!
//! * [`index`]: exact top-k maximum-inner-product search over passage
//!   embeddings loaded from `XEMB` files ([`embedding`]).
//! * [`pairing`]: question groups from translation pair files or mined by
//!   embedding cosine similarity, plus BLEU and Pearson checks on mined pairs.
//! * [`metrics`]: answer normalization, token F1 and exact match.
//! * [`analysis`]: oracle and non-oracle in-language context selection,
//!   the per-group consistency matrix, inconsistency rates and error-label
//!   histograms.
//! * [`report`]: the end-to-end pipeline and plot-ready CSV output.
//!
//! Encoders and answer generators run elsewhere; their outputs enter
//! through the file formats in [`embedding`] and [`records`].
//!
//! ```
//! use xorqa::metrics::token_f1;
//! use xorqa::model::LanguageCode;
//!
//! let en = LanguageCode::new("en")?;
//! let f1 = token_f1("the legal drinking age is 21", &["21"], &en);
//! assert!((f1 - 2.0 / 7.0).abs() < 1e-12);
//! # Ok::<(), xorqa::Error>(())
//! ```

pub mod analysis;
pub mod embedding;
mod error;
pub mod index;
pub mod metrics;
pub mod model;
pub mod pairing;
pub mod records;
pub mod report;

pub use error::{Error, Result};
