//! Exact quantum algorithms for Simon's problem, simulated classically.
//!
//! * [`gf2`]: vectors and subspaces of (Z₂)ⁿ.
//! * [`qstate`]: a sparse multi-register state-vector simulator.
//! * [`oracle`]: black-box functions hiding a subgroup.
//! * [`simon`]: Simon's subroutine, the shrinking step, amplitude
//!   amplification and the exact polynomial-time solver.
//! * [`classical`]: query-bounded classical adversaries and the collision event.
//! * [`abelian`]: the Fourier-based generalization to finite Abelian groups.

pub mod abelian;
pub mod classical;
pub mod error;
pub mod gf2;
pub mod oracle;
pub mod qstate;
pub mod simon;

pub use error::{Error, Result};
pub use gf2::{dot, extract_basis, Gf2Basis, GroupElement};
pub use qstate::{BooleanPredicate, Qubit, RegisterLayout, SimConfig, SparseState};
pub use oracle::{
    gamma_xor, random_bijection, random_promise_oracle, random_simon_instance, random_subgroup, BalancedFunction,
    OracleFile, PromiseOracle, SimonOracle,
};
