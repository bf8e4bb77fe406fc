//! Reversible gate lists, so that 𝒜⁻¹ can be built mechanically.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::gf2::GroupElement;
use crate::oracle::SimonOracle;
use crate::qstate::{BooleanPredicate, Qubit, RegisterLayout, SimConfig, SparseState};

/// A classical function applied as U_f (self-inverse).
pub type ClassicalFn = Arc<dyn Fn(u64) -> u64 + Send + Sync>;

#[derive(Clone)]
pub enum Gate {
    WalshHadamard(usize),
    /// U_ρ through the oracle handle.
    Oracle { source: usize, target: usize },
    Function { f: ClassicalFn, source: usize, target: usize },
    ControlledNot { control: Qubit, target: Qubit },
    ConditionalXor { condition: Qubit, y: GroupElement, target: usize },
    PhaseOnPredicate { register: usize, predicate: BooleanPredicate, phase: Complex64 },
    PhaseOnZero { registers: Vec<usize>, phase: Complex64 },
    Measure(usize),
    /// Stores register-0 bit `bit` in the Hadamard or computational basis.
    /// Leaves the state unchanged; only its sparse representation moves.
    Basis { bit: usize, hadamard: bool },
}

impl Gate {
    pub fn inverse(&self) -> Result<Gate> {
        Ok(match self {
            Gate::PhaseOnPredicate { register, predicate, phase } => Gate::PhaseOnPredicate {
                register: *register,
                predicate: predicate.clone(),
                phase: phase.conj(),
            },
            Gate::PhaseOnZero { registers, phase } => Gate::PhaseOnZero {
                registers: registers.clone(),
                phase: phase.conj(),
            },
            Gate::Measure(_) => return Err(Error::MeasurementInProcedure),
            Gate::Basis { bit, hadamard } => Gate::Basis {
                bit: *bit,
                hadamard: !hadamard,
            },
            other => other.clone(),
        })
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self, Gate::Oracle { .. })
    }
}

impl fmt::Debug for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::WalshHadamard(r) => write!(f, "W[{r}]"),
            Gate::Oracle { source, target } => write!(f, "Uρ[{source}→{target}]"),
            Gate::Function { source, target, .. } => write!(f, "Uf[{source}→{target}]"),
            Gate::ControlledNot { control, target } => write!(
                f,
                "CNOT[{}.{}→{}.{}]",
                control.register, control.bit, target.register, target.bit
            ),
            Gate::ConditionalXor { condition, y, target } => {
                write!(f, "CXOR[{}.{} ⊕{y}→{target}]", condition.register, condition.bit)
            }
            Gate::PhaseOnPredicate { register, phase, .. } => write!(f, "Sχ[{register}]({phase})"),
            Gate::PhaseOnZero { registers, phase } => write!(f, "S0{registers:?}({phase})"),
            Gate::Measure(r) => write!(f, "M[{r}]"),
            Gate::Basis { bit, hadamard } => write!(f, "B[0.{bit}:{}]", if *hadamard { "H" } else { "Z" }),
        }
    }
}

/// An ordered gate list over a fixed layout, applied first to last.
#[derive(Clone, Debug)]
pub struct Procedure {
    layout: RegisterLayout,
    gates: Vec<Gate>,
}

impl Procedure {
    pub fn new(layout: RegisterLayout) -> Self {
        Self {
            layout,
            gates: Vec::new(),
        }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn extend(&mut self, other: &Procedure) -> Result<&mut Self> {
        if other.layout != self.layout {
            return Err(Error::InvalidArgument("cannot join procedures over different layouts".into()));
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(self)
    }

    pub fn has_measurement(&self) -> bool {
        self.gates.iter().any(|g| matches!(g, Gate::Measure(_)))
    }

    pub fn oracle_calls(&self) -> usize {
        self.gates.iter().filter(|g| g.is_oracle()).count()
    }

    /// The reversed list of inverse gates.
    pub fn inverse(&self) -> Result<Procedure> {
        let gates = self.gates.iter().rev().map(Gate::inverse).collect::<Result<_>>()?;
        Ok(Self {
            layout: self.layout.clone(),
            gates,
        })
    }

    /// Applies a measurement-free procedure.
    pub fn apply(&self, state: &mut SparseState, oracle: Option<&dyn SimonOracle>) -> Result<()> {
        self.run(state, oracle, None).map(|_| ())
    }

    /// Applies the procedure, returning measurement outcomes in order.
    pub fn run(
        &self,
        state: &mut SparseState,
        oracle: Option<&dyn SimonOracle>,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<Vec<u64>> {
        if state.layout() != &self.layout {
            return Err(Error::InvalidArgument("state layout does not match the procedure".into()));
        }
        let mut outcomes = Vec::new();
        for gate in &self.gates {
            match gate {
                Gate::WalshHadamard(r) => state.walsh_hadamard(*r)?,
                Gate::Oracle { source, target } => oracle
                    .ok_or(Error::MissingOracle)?
                    .apply_unitary(state, *source, *target)?,
                Gate::Function { f, source, target } => state.apply_function(|x| f(x), *source, *target)?,
                Gate::ControlledNot { control, target } => state.controlled_not(*control, *target)?,
                Gate::ConditionalXor { condition, y, target } => state.conditional_xor(*condition, y, *target)?,
                Gate::PhaseOnPredicate { register, predicate, phase } => {
                    state.phase_on_predicate(*register, predicate, *phase)?
                }
                Gate::PhaseOnZero { registers, phase } => state.phase_on_zero(registers, *phase)?,
                Gate::Basis { bit, hadamard } => {
                    let mask = 1u64.checked_shl(*bit as u32).unwrap_or(0);
                    state.set_basis(mask, *hadamard)?
                }
                Gate::Measure(r) => {
                    let rng = rng.as_deref_mut().ok_or(Error::MeasurementInProcedure)?;
                    outcomes.push(state.measure(*r, rng)?);
                }
            }
        }
        Ok(outcomes)
    }

    /// The procedure applied to |0…0⟩.
    pub fn prepare(&self, oracle: Option<&dyn SimonOracle>, config: SimConfig) -> Result<SparseState> {
        let mut state = SparseState::zero_with_config(self.layout.clone(), config);
        self.apply(&mut state, oracle)?;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_reverses_and_conjugates() {
        let layout = RegisterLayout::new(&[2, 1]).unwrap();
        let mut p = Procedure::new(layout.clone());
        p.push(Gate::WalshHadamard(0))
            .push(Gate::PhaseOnPredicate {
                register: 0,
                predicate: BooleanPredicate::bit(1),
                phase: Complex64::i(),
            })
            .push(Gate::ControlledNot {
                control: Qubit::new(0, 1),
                target: Qubit::new(1, 0),
            });
        let inv = p.inverse().unwrap();
        let mut s = p.prepare(None, SimConfig::default()).unwrap();
        inv.apply(&mut s, None).unwrap();
        assert_eq!(s.support_size(), 1);
        assert!((s.amplitude(&[0, 0]).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(matches!(inv.gates()[2], Gate::WalshHadamard(0)));
    }

    #[test]
    fn measurements_cannot_be_inverted() {
        let mut p = Procedure::new(RegisterLayout::new(&[1]).unwrap());
        p.push(Gate::Measure(0));
        assert!(matches!(p.inverse(), Err(Error::MeasurementInProcedure)));
        assert!(matches!(
            p.prepare(None, SimConfig::default()),
            Err(Error::MeasurementInProcedure)
        ));
    }

    #[test]
    fn oracle_gate_needs_an_oracle() {
        let mut p = Procedure::new(RegisterLayout::new(&[1, 1]).unwrap());
        p.push(Gate::Oracle { source: 0, target: 1 });
        assert!(matches!(p.prepare(None, SimConfig::default()), Err(Error::MissingOracle)));
    }
}
