//! Truncated Bargmann-Fock space over finitely many complex modes.

pub mod basis;
pub mod coherent;
pub mod modes;
pub mod operator;
pub mod ordering;
pub mod symbol;

pub use basis::{binomial, FockBasis, Occupation};
pub use coherent::{coherent_tail, coherent_vector, kernel_check, weyl_relation_check, KernelReport};
pub use modes::{Mode, ModeBasis, Trig};
pub use operator::{
    ladder, number_operator, quantize_antiwick, quantize_antiwick_truncated, quantize_normal, FockOperator,
    LadderKind, Ordering, DENSE_LIMIT,
};
pub use ordering::{moment_shift, number_shift_residual, ordering_equivalence, OrderingReport};
pub use symbol::{MultiIndex, PolynomialSymbol};
