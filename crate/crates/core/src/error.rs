//! Error types shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the model, refinement, training, and lab layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Token id outside the vocabulary, duplicate tokens, or a malformed
    /// vocabulary definition.
    #[error("vocabulary error: {0}")]
    Vocabulary(String),

    /// A sequence does not fit in the model's context window.
    #[error("context exceeded: sequence length {length} > context window {window}")]
    ContextExceeded { length: usize, window: usize },

    /// Precondition violated by a caller-supplied value.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Policy and reference models do not share an architecture/vocabulary.
    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    /// A judgment provider failed outright (not a parse failure).
    #[error("judgment provider failed for triple '{triple_id}': {message}")]
    Provider { triple_id: String, message: String },

    /// A generated judgment could not be parsed.
    #[error("judgment parse error: {0}")]
    Parse(#[from] ParseError),

    /// The comparison graph does not connect all items, so score gaps are
    /// not identifiable.
    #[error("identifiability error: {0}")]
    Identifiability(String),

    /// Training loss blew past the divergence guard.
    #[error("training diverged at step {step}: loss {loss:.6} > 10 x initial {initial:.6} for {streak} consecutive steps")]
    Divergence {
        step: usize,
        loss: f64,
        initial: f64,
        streak: usize,
    },

    /// Malformed or incompatible checkpoint file.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Why a raw generation failed to parse into a judgment.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    /// No balanced JSON object found anywhere in the text.
    #[error("no JSON object found in generation")]
    NoJsonObject,

    /// The object was found but is not syntactically valid JSON.
    #[error("malformed JSON object: {0}")]
    MalformedJson(String),

    /// A required key is absent.
    #[error("missing key {0:?}")]
    MissingKey(&'static str),

    /// A required key holds a non-string value.
    #[error("key {0:?} is not a string")]
    NotAString(&'static str),

    /// The chosen-answer string names neither answer.
    #[error("unrecognized answer string {0:?}")]
    UnrecognizedAnswer(String),
}
