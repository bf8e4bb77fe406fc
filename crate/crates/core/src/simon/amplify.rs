//! One round of amplitude amplification with phase ı.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::BooleanPredicate;
use crate::simon::procedure::{Gate, Procedure};

/// 𝒬 = G ∘ 𝒜, kept in two parts so callers can inspect 𝒜|0⟩ first.
#[derive(Clone, Debug)]
pub struct Amplified {
    pub prepare: Procedure,
    /// G = 𝒜 S₀ 𝒜⁻¹ S_A, stored in application order.
    pub iteration: Procedure,
}

impl Amplified {
    /// The full gate list of 𝒬.
    pub fn procedure(&self) -> Procedure {
        let mut q = self.prepare.clone();
        q.extend(&self.iteration).expect("same layout");
        q
    }
}

/// Builds 𝒬 for a measurement-free 𝒜 and a predicate on its first register.
pub fn grover_iteration(prepare: &Procedure, chi: BooleanPredicate) -> Result<Amplified> {
    if prepare.has_measurement() {
        return Err(Error::MeasurementInProcedure);
    }
    let inverse = prepare.inverse()?;
    let all: Vec<usize> = (0..prepare.layout().registers()).collect();
    let mut g = Procedure::new(prepare.layout().clone());
    g.push(Gate::PhaseOnPredicate {
        register: 0,
        predicate: chi,
        phase: Complex64::i(),
    });
    g.extend(&inverse)?;
    g.push(Gate::PhaseOnZero {
        registers: all,
        phase: Complex64::i(),
    });
    g.extend(prepare)?;
    Ok(Amplified {
        prepare: prepare.clone(),
        iteration: g,
    })
}

/// Coefficients (k, l) of 𝒬|0⟩ = k|A⟩ + l|B⟩ for good mass `a`.
pub fn amplified_coefficients(a: f64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    (2.0 * i * (1.0 - a) - 1.0, i * (1.0 - 2.0 * a))
}
