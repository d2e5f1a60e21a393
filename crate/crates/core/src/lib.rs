//! Frame-semantic VQA dataset synthesis and evaluation.
//!
//! The pipeline turns verb frame schemas ("an AGENT cooks a FOOD in a
//! CONTAINER ...") into question-answer templates, instantiates them with
//! image annotations into a QA dataset, trains a small two-head classifier
//! (answer + frame element) on it, and scores predictions with accuracy,
//! WUP/WUPS, chi-square significance, and an answer/frame-element
//! consistency criterion.
//!
//! Modules follow the pipeline stages:
//!
//! * [`schema`] — parse verb abstract definitions into structured frames
//! * [`template`] — wh-word mapping and hold-one-out template generation
//! * [`realize`] — instantiate templates with annotations into QA samples
//! * [`stats`] — dataset distribution reports
//! * [`taxonomy`] — is-a graph, Wu-Palmer similarity, WUPS aggregate
//! * [`metrics`] — accuracy, chi-square, fine-grained breakdowns
//! * [`consistency`] — answer/frame-element consistency index and rate
//! * [`model`] — from-scratch multi-task classifier with rmsprop training
//! * [`cli`] — the `framevqa` command-line entry point

pub mod cli;
pub mod consistency;
pub mod error;
pub mod jsonl;
pub mod metrics;
pub mod model;
pub mod realize;
pub mod schema;
pub mod stats;
pub mod taxonomy;
pub mod template;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
