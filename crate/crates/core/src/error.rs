//! Crate-wide error type.

use thiserror::Error;

/// Errors returned by network construction, queries and numeric operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Two neurons were declared with the same id.
    #[error("duplicate neuron id `{0}`")]
    DuplicateNeuron(String),
    /// The same ordered pair of neurons appears twice in the edge list.
    #[error("parallel edge `{from}` -> `{to}`")]
    ParallelEdge { from: String, to: String },
    /// An edge references an id that is not a declared neuron.
    #[error("edge endpoint `{0}` is not a declared neuron")]
    UnknownEndpoint(String),
    /// A neuron id passed to a query does not exist in the architecture.
    #[error("unknown neuron `{0}`")]
    UnknownNeuron(String),
    /// The edge relation admits no topological order.
    #[error("graph contains a cycle: no topological order exists")]
    CyclicGraph,
    /// An input vector or matrix row has the wrong width.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Parameters are not bound to the architecture they are used with.
    #[error("parameters not bound to this architecture: {0}")]
    ParameterBinding(String),
    /// Path enumeration would exceed the caller-supplied budget.
    #[error("path count {count} exceeds enumeration budget {cap}")]
    PathBudgetExceeded { count: u128, cap: u64 },
    /// A path constructed by id sequence does not follow edges of the graph.
    #[error("invalid path: `{from}` -> `{to}` is not an edge")]
    InvalidPath { from: String, to: String },
    /// A norm exponent is outside its admissible range.
    #[error("invalid norm exponent {0}: must be positive")]
    InvalidExponent(f64),
    /// The inner exponent of a path norm must be finite.
    #[error("q = infinity is not supported for path norms")]
    InfiniteInnerExponent,
    /// Rescaling factors must be strictly positive.
    #[error("rescaling factor must be > 0, got {0}")]
    NonPositiveScale(f64),
    /// Rescaling applies to hidden neurons only.
    #[error("neuron `{0}` is not hidden")]
    NotHiddenNeuron(String),
    /// k-max-pool neurons must have null biases for the requested operation.
    #[error("k-max-pool neuron `{0}` has nonzero bias")]
    PoolBiasNonZero(String),
    /// Identity elimination does not support biased identity neurons.
    #[error("hidden identity neuron `{0}` has nonzero bias; absorb biases first")]
    BiasedIdentityNeuron(String),
    /// Pooling constructors require at least one antecedent.
    #[error("pooling kernel is empty")]
    EmptyKernel,
    /// The pooling order must satisfy 1 <= k <= kernel size.
    #[error("pool order k = {k} out of range for kernel size {kernel}")]
    KernelOrderOutOfRange { k: usize, kernel: usize },
    /// Statistics over an empty dataset are undefined.
    #[error("dataset is empty")]
    EmptyDataset,
    /// Class labels are 1-based indices into the output vector.
    #[error("label {label} out of range 1..={classes}")]
    OutOfRangeLabel { label: usize, classes: usize },
    /// Margin parameters must be strictly positive.
    #[error("gamma must be > 0, got {0}")]
    NonPositiveGamma(f64),
    /// A network or dataset file could not be parsed.
    #[error("parse error ({context}): {message}")]
    Parse { context: String, message: String },
    /// A loaded network failed validation.
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
