pub mod array;
pub mod error;
pub mod index;

pub use array::{ElementKind, Entries};
pub use error::{Result, RtError};
pub use index::IndexHandle;
pub use num_complex::Complex64;
pub mod tensor;
pub use tensor::{Operand, Subscript, Subscripted, Tensor};
pub mod ewise;
pub use ewise::{alignn, equal_all, ewise_binary, ewise_unary, Alignment, BinaryOp, UnaryOp};
pub mod lattice;
pub mod linalg;
pub use lattice::{align2, product, solve_left, solve_right, Plan2};
pub mod pagewise;
pub use pagewise::{concat, page_cat, page_ctranspose, page_diag, page_trace, page_transpose, CatAxis, CatWhere};
pub mod dsl;
pub mod corona;
