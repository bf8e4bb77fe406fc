//! Simon's subroutine and the Las Vegas (ZQP) solver built on it.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf2::{Gf2Basis, GroupElement};
use crate::oracle::SimonOracle;
use crate::qstate::{RegisterLayout, SimConfig, SparseState};
use crate::simon::procedure::{Gate, Procedure};

/// Register layout [group, ρ-value] for an oracle, with `ancillas` extra
/// one-qubit registers.
pub fn oracle_layout(oracle: &dyn SimonOracle, ancillas: usize, config: &SimConfig) -> Result<RegisterLayout> {
    let mut widths = vec![oracle.dimension() as u32, oracle.codomain_bits()];
    widths.extend(std::iter::repeat(1).take(ancillas));
    RegisterLayout::with_cap(&widths, config.max_width)
}

/// W₂ⁿ, U_ρ, W₂ⁿ on |0ⁿ⟩|0⟩.
pub fn subroutine_procedure(layout: RegisterLayout) -> Procedure {
    let mut p = Procedure::new(layout);
    p.push(Gate::WalshHadamard(0))
        .push(Gate::Oracle { source: 0, target: 1 })
        .push(Gate::WalshHadamard(0));
    p
}

/// 1/√|T₀| Σ_t |φ_t H₀^⊥⟩|ρ(t)⟩, using one application of U_ρ.
pub fn simon_subroutine(oracle: &dyn SimonOracle) -> Result<SparseState> {
    simon_subroutine_with(oracle, SimConfig::default())
}

pub fn simon_subroutine_with(oracle: &dyn SimonOracle, config: SimConfig) -> Result<SparseState> {
    let layout = oracle_layout(oracle, 0, &config)?;
    subroutine_procedure(layout).prepare(Some(oracle), config)
}

/// True iff ρ takes one value on the basis of ⟨Y⟩^⊥ and on 0; costs
/// rank(⟨Y⟩^⊥) + 1 queries.
pub fn stopping_test(oracle: &dyn SimonOracle, known: &Gf2Basis) -> Result<bool> {
    let n = oracle.dimension();
    if known.dimension() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: known.dimension(),
        });
    }
    let reference = oracle.evaluate(&GroupElement::zero(n))?;
    for v in known.orthogonal_complement().vectors() {
        if oracle.evaluate(v)? != reference {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of [`zqp_solve`].
#[derive(Clone, Debug)]
pub struct ZqpOutcome {
    pub basis: Gf2Basis,
    /// Subroutine runs (one measurement each).
    pub samples: usize,
    pub rho_evaluations: u64,
}

/// Samples H₀^⊥ until the stopping test passes, then returns a basis of H₀.
/// Fails with [`Error::IterationCap`] after `max_samples` subroutine runs.
pub fn zqp_solve<R: Rng + ?Sized>(
    oracle: &dyn SimonOracle,
    rng: &mut R,
    max_samples: usize,
    config: SimConfig,
) -> Result<ZqpOutcome> {
    let start = oracle.query_count();
    let n = oracle.dimension();
    let layout = oracle_layout(oracle, 0, &config)?;
    let procedure = subroutine_procedure(layout);
    let mut known = Gf2Basis::empty(n);
    let mut samples = 0;
    let mut settled = stopping_test(oracle, &known)?;
    while !settled {
        if samples == max_samples {
            return Err(Error::IterationCap(max_samples));
        }
        let mut state = procedure.prepare(Some(oracle), config)?;
        let z = state.measure(0, rng)?;
        samples += 1;
        if known.insert(&GroupElement::from_u64(n, z))? {
            settled = stopping_test(oracle, &known)?;
        }
    }
    Ok(ZqpOutcome {
        basis: known.orthogonal_complement(),
        samples,
        rho_evaluations: oracle.query_count() - start,
    })
}
