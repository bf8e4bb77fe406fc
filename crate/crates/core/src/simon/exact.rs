//! The zero-error polynomial-time solver and the bijection distinguisher.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{Gf2Basis, GroupElement};
use crate::oracle::SimonOracle;
use crate::qstate::{BooleanPredicate, SimConfig};
use crate::simon::amplify::grover_iteration;
use crate::simon::procedure::Procedure;
use crate::simon::shrink::ShrinkPlan;
use crate::simon::subroutine::{oracle_layout, subroutine_procedure, zqp_solve};

/// Allowed distance of a success probability from 0 or ½.
const SUCCESS_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub config: SimConfig,
    /// Check every amplification against the two allowed success masses.
    pub verify: bool,
    /// Subroutine runs allowed to the ZQP solver.
    pub max_samples: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            config: SimConfig::default(),
            verify: true,
            max_samples: 10_000,
        }
    }
}

/// One run of 𝒬ᵢ followed by a measurement of the first register.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QRun {
    /// Zero-based component index i (χᵢ(g) = g_{i+1} in one-based terms).
    pub index: usize,
    /// Success mass of 𝒜′ for χᵢ, computed from the simulated state.
    pub success_mass: f64,
    pub outcome: GroupElement,
    pub rho_evaluations: u64,
}

/// 𝒜′: Simon's subroutine followed by the shrinking steps of `plan`.
pub fn shrunk_subroutine(oracle: &dyn SimonOracle, plan: &ShrinkPlan, config: &SimConfig) -> Result<Procedure> {
    let layout = oracle_layout(oracle, plan.len(), config)?;
    let mut p = subroutine_procedure(layout);
    for gate in plan.gates(2)? {
        p.push(gate);
    }
    Ok(p)
}

/// Runs 𝒬ᵢ for χᵢ and measures the first register.
pub fn run_amplified<R: Rng + ?Sized>(
    oracle: &dyn SimonOracle,
    plan: &ShrinkPlan,
    index: usize,
    rng: &mut R,
    options: &SolverOptions,
) -> Result<QRun> {
    let n = oracle.dimension();
    if index >= n {
        return Err(Error::InvalidArgument(format!("component {index} outside 0..{n}")));
    }
    let start = oracle.query_count();
    let chi = BooleanPredicate::bit(index);
    let q = grover_iteration(&shrunk_subroutine(oracle, plan, &options.config)?, chi.clone())?;
    let mut state = q.prepare.prepare(Some(oracle), options.config)?;
    let success_mass = state.mass_where(0, &chi)?;
    let half = (success_mass - 0.5).abs() <= SUCCESS_TOLERANCE;
    if options.verify && !half && success_mass > SUCCESS_TOLERANCE {
        return Err(Error::NotOrthogonal(format!(
            "success mass {success_mass} for component {index} is neither 0 nor 1/2"
        )));
    }
    q.iteration.apply(&mut state, Some(oracle))?;
    if options.verify && half {
        let good = state.mass_where(0, &chi)?;
        if (good - 1.0).abs() > SUCCESS_TOLERANCE {
            return Err(Error::NotOrthogonal(format!(
                "amplified mass {good} for component {index} is not 1"
            )));
        }
    }
    let z = GroupElement::from_u64(n, state.measure(0, rng)?);
    if half && !z.bit(index) {
        return Err(Error::NotOrthogonal(format!("measured {z} has a 0 in component {index}")));
    }
    Ok(QRun {
        index,
        success_mass,
        outcome: z,
        rho_evaluations: oracle.query_count() - start,
    })
}

/// An element of H₀^⊥ outside ⟨Y⟩, or 0 when `known` already spans H₀^⊥.
pub fn exact_new_element<R: Rng + ?Sized>(
    oracle: &dyn SimonOracle,
    known: &Gf2Basis,
    rng: &mut R,
    options: &SolverOptions,
) -> Result<GroupElement> {
    Ok(new_element_traced(oracle, known, rng, options)?.0)
}

fn new_element_traced<R: Rng + ?Sized>(
    oracle: &dyn SimonOracle,
    known: &Gf2Basis,
    rng: &mut R,
    options: &SolverOptions,
) -> Result<(GroupElement, Vec<QRun>)> {
    let n = oracle.dimension();
    if known.dimension() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: known.dimension(),
        });
    }
    let plan = ShrinkPlan::from_basis(known)?;
    let mut runs = Vec::new();
    for i in 0..n {
        let run = run_amplified(oracle, &plan, i, rng, options)?;
        let z = run.outcome.clone();
        runs.push(run);
        if !z.is_zero() {
            if known.contains(&z)? {
                return Err(Error::NotOrthogonal(format!("measured {z} lies in the known span")));
            }
            return Ok((z, runs));
        }
    }
    Ok((GroupElement::zero(n), runs))
}

/// Result of the exact solvers.
#[derive(Clone, Debug)]
pub struct ExactOutcome {
    pub basis: Gf2Basis,
    /// Applications of the new-element step (successes plus the final one).
    pub applications: usize,
    pub runs: Vec<QRun>,
    pub rho_evaluations: u64,
}

/// Grows Y with [`exact_new_element`] until it returns 0, then returns a
/// basis of H₀ = ⟨Y⟩^⊥.
pub fn qp_solve<R: Rng + ?Sized>(oracle: &dyn SimonOracle, rng: &mut R, options: &SolverOptions) -> Result<ExactOutcome> {
    let start = oracle.query_count();
    let n = oracle.dimension();
    let mut known = Gf2Basis::empty(n);
    let mut runs = Vec::new();
    let mut applications = 0;
    loop {
        let (z, trace) = new_element_traced(oracle, &known, rng, options)?;
        applications += 1;
        runs.extend(trace);
        if z.is_zero() {
            break;
        }
        known.insert(&z)?;
        if applications > n {
            return Err(Error::NotOrthogonal("more than n new elements were found".into()));
        }
    }
    Ok(ExactOutcome {
        basis: known.orthogonal_complement(),
        applications,
        runs,
        rho_evaluations: oracle.query_count() - start,
    })
}

/// The O(n)-query driver: each 𝒬ᵢ runs at most once. A run returning 0
/// retires i; a nonzero outcome z is kept and the next shrink pivots on i
/// (or on z's lowest 1-bit when z has a 0 in component i), retiring it.
pub fn qp_solve_optimized<R: Rng + ?Sized>(
    oracle: &dyn SimonOracle,
    rng: &mut R,
    options: &SolverOptions,
) -> Result<ExactOutcome> {
    let start = oracle.query_count();
    let n = oracle.dimension();
    let mut plan = ShrinkPlan::new(n);
    let mut retired = vec![false; n];
    let mut runs: Vec<QRun> = Vec::with_capacity(n);
    for i in 0..n {
        if retired[i] {
            continue;
        }
        let run = run_amplified(oracle, &plan, i, rng, options)?;
        retired[i] = true;
        let z = run.outcome.clone();
        runs.push(run);
        if !z.is_zero() {
            let pivot = if z.bit(i) { i } else { z.lowest_set_bit().expect("nonzero") };
            if retired[pivot] && pivot != i {
                return Err(Error::NotOrthogonal(format!("measured {z} has a 1 at retired component {pivot}")));
            }
            plan.push(&z, Some(pivot))
                .map_err(|e| Error::NotOrthogonal(format!("measured {z} cannot extend the known set: {e}")))?;
            retired[pivot] = true;
        }
    }
    Ok(ExactOutcome {
        basis: plan.span().orthogonal_complement(),
        applications: plan.len() + 1,
        runs,
        rho_evaluations: oracle.query_count() - start,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FunctionKind {
    Bijection,
    Promise,
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bijection => "BIJECTION",
            Self::Promise => "PROMISE",
        })
    }
}

/// BIJECTION when the exact solver finds H₀ = {0}, PROMISE otherwise.
pub fn distinguish_bijection<R: Rng + ?Sized>(
    oracle: &dyn SimonOracle,
    rng: &mut R,
    options: &SolverOptions,
) -> Result<FunctionKind> {
    let out = qp_solve_optimized(oracle, rng, options)?;
    Ok(if out.basis.is_empty() {
        FunctionKind::Bijection
    } else {
        FunctionKind::Promise
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    Exact,
    Zqp,
}

/// JSON solver report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub n: usize,
    pub basis: Vec<String>,
    pub rho_evaluations: u64,
    pub iterations: usize,
    pub seed: u64,
    pub mode: SolverMode,
    pub optimized: bool,
}

/// Which solver [`solve`] runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Exact,
    ExactOptimized,
    Zqp,
}

/// Runs one solver and packages its report.
pub fn solve<R: Rng + ?Sized>(
    oracle: &dyn SimonOracle,
    solver: Solver,
    seed: u64,
    rng: &mut R,
    options: &SolverOptions,
) -> Result<SolverReport> {
    let n = oracle.dimension();
    let (basis, rho_evaluations, iterations, mode) = match solver {
        Solver::Exact => {
            let o = qp_solve(oracle, rng, options)?;
            (o.basis, o.rho_evaluations, o.applications, SolverMode::Exact)
        }
        Solver::ExactOptimized => {
            let o = qp_solve_optimized(oracle, rng, options)?;
            (o.basis, o.rho_evaluations, o.applications, SolverMode::Exact)
        }
        Solver::Zqp => {
            let o = zqp_solve(oracle, rng, options.max_samples, options.config)?;
            (o.basis, o.rho_evaluations, o.samples, SolverMode::Zqp)
        }
    };
    Ok(SolverReport {
        n,
        basis: basis.to_bitstrings(),
        rho_evaluations,
        iterations,
        seed,
        mode,
        optimized: solver == Solver::ExactOptimized,
    })
}
