//! Algorithms over Z₂ⁿ: Simon's subroutine, the Las Vegas solver, shrinking,
//! amplitude amplification and the exact polynomial-time solver.

pub mod amplify;
pub mod exact;
pub mod procedure;
pub mod shrink;
pub mod subroutine;

pub use amplify::{amplified_coefficients, grover_iteration, Amplified};
pub use exact::{
    distinguish_bijection, exact_new_element, qp_solve, qp_solve_optimized, run_amplified, shrunk_subroutine, solve,
    ExactOutcome, FunctionKind, QRun, Solver, SolverMode, SolverOptions, SolverReport,
};
pub use procedure::{ClassicalFn, Gate, Procedure};
pub use shrink::{shrink_gates, shrink_many, shrink_once, ShrinkPlan, ShrinkStep};
pub use subroutine::{
    oracle_layout, simon_subroutine, simon_subroutine_with, stopping_test, subroutine_procedure, zqp_solve, ZqpOutcome,
};
