//! Crate error type.

use thiserror::Error;

/// Errors produced by the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    // ---- frame schema ----
    #[error("no frame-element token found in definition: {0:?}")]
    NoSlotsFound(String),
    #[error("no verb form of {verb:?} found in definition: {text:?}")]
    VerbNotFound { verb: String, text: String },
    #[error("duplicate verb {0:?} in schema file")]
    DuplicateVerb(String),
    #[error("schema file contains no records")]
    EmptyFrameSet,
    #[error("{file}:{record}: {message}")]
    ParseError {
        file: String,
        record: usize,
        message: String,
    },

    // ---- realization ----
    #[error("template verb {template:?} does not match annotation verb {annotation:?}")]
    VerbMismatch {
        template: String,
        annotation: String,
    },
    #[error("image {0:?} has no split assignment")]
    UnknownImage(String),
    #[error("annotation for {image:?} references verb {verb:?} absent from the frame set")]
    UnknownVerb { image: String, verb: String },

    // ---- taxonomy ----
    #[error("node {0:?} not in taxonomy")]
    UnknownNode(String),
    #[error("taxonomy edge cycle involving {0:?}")]
    CyclicTaxonomy(String),
    #[error("node {0:?} does not reach the root")]
    DisconnectedNode(String),
    #[error("gold has {gold} answer sets but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("answer set {0} is empty")]
    EmptyAnswerSet(usize),

    // ---- evaluation ----
    #[error("no prediction for sample {0}")]
    MissingPrediction(u64),
    #[error("prediction references unknown sample {0}")]
    UnknownSample(u64),
    #[error("contingency table has a zero marginal")]
    DegenerateTable,
    #[error("accuracy maps disagree on key {0:?}")]
    KeyMismatch(String),
    #[error("value {0} falls outside the histogram bin edges")]
    ValueOutOfBins(f64),
    #[error("prediction for sample {0} carries no frame element")]
    MissingElementPrediction(u64),

    // ---- model ----
    #[error("question has no tokens")]
    EmptyQuestion,
    #[error("feature vector has dimension {got}, expected {expected}")]
    DimMismatch { got: usize, expected: usize },
    #[error("gradient shape does not match parameter shape for {0}")]
    ShapeMismatch(&'static str),
    #[error("sample {0} lacks an answer or element label")]
    UnlabeledSample(u64),
    #[error("dataset split {0:?} is empty")]
    EmptySplit(String),
    #[error("checkpoint vocabulary hash does not match the dataset ({0})")]
    VocabMismatch(&'static str),
    #[error("checkpoint is malformed: {0}")]
    BadCheckpoint(String),
    #[error("no image features for {0:?}")]
    MissingFeatures(String),

    // ---- files ----
    #[error("{file}:{line}: {message}")]
    DataError {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn data(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::DataError {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
