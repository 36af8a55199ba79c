//! Sparse identification of dynamics: libraries, derivatives and
//! (trimmed) sequentially thresholded least squares.

mod derivative;
mod library;
mod model;
mod stlsq;

pub use derivative::{estimate_derivatives, DerivativeMethod};
pub use library::{build_library, LibrarySpec, Term, DEFAULT_GUARD};
pub use model::{
    fit_sparse, fit_sparse_trimmed, fmt_sig4, model_to_text, model_to_text_named, simulate_model,
    ModelMetadata, SparseModel, SparseModelDoc,
};
pub use stlsq::{
    best_rows, inlier_budget, row_residuals, stlsq, stlsq_normal, stlsq_trimmed, StlsqFit,
    TrimResult,
};
