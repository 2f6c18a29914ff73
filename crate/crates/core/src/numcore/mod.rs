//! Numerical core: real tensors, a reverse-mode tape, dense complex linear
//! algebra and the regularized least-squares solve with its gradient.

mod complex;
mod lstsq;
mod tape;
mod tensor;

pub use complex::{Cholesky, ComplexMatrix};
pub use lstsq::{solve_tikhonov, solve_tikhonov_grad};
pub(crate) use lstsq::solve_tikhonov_factored;
pub use tape::{abs_smooth, interleaved_to_complex, Gradients, Tape, Var};
pub use tensor::RealTensor;
