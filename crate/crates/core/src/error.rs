use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RtError {
    #[error("too few indices: entries need at least {needed}, got {got}")]
    IndexArity { needed: usize, got: usize },
    #[error("subscripts must be all indices or all numeric")]
    SubscriptKind,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("subscript out of bounds: {0}")]
    Bounds(String),
    #[error("unknown index: {0}")]
    UnknownIndex(String),
    #[error("index variant mismatch: {0}")]
    VariantMismatch(String),
    #[error("assignment with index subscripts needs a tensor on the right-hand side")]
    AssignKind,
    #[error("operand kind: {0}")]
    OperandKind(String),
    #[error("element kind: {0}")]
    ElementKind(String),
    #[error("page {page} of the denominator is singular")]
    SingularPage { page: usize },
    #[error("invalid configuration: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, RtError>;
