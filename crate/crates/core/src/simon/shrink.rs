//! Shrinking |φ_g H⟩ to |φ_g K⟩ by excluding known generators.

use crate::error::{Error, Result};
use crate::gf2::{Gf2Basis, GroupElement};
use crate::qstate::{Qubit, SparseState};
use crate::simon::procedure::Gate;

/// The three gates that shrink by `y` with control bit `pivot`, writing g·y
/// into the one-qubit register `ancilla`.
pub fn shrink_gates(y: &GroupElement, pivot: usize, ancilla: usize) -> Result<[Gate; 3]> {
    if pivot >= y.dimension() || !y.bit(pivot) {
        return Err(Error::InvalidPivot {
            element: y.to_string(),
            pivot,
        });
    }
    Ok([
        Gate::ControlledNot {
            control: Qubit::new(0, pivot),
            target: Qubit::new(ancilla, 0),
        },
        Gate::ConditionalXor {
            condition: Qubit::new(ancilla, 0),
            y: y.clone(),
            target: 0,
        },
        Gate::WalshHadamard(ancilla),
    ])
}

/// |φ_g H⟩|0⟩ ↦ |φ_g K⟩|g·y⟩ with K = {h ∈ H | h_pivot = 0}. `ancilla` must
/// be a fresh one-qubit register.
pub fn shrink_once(state: &mut SparseState, y: &GroupElement, pivot: usize, ancilla: usize) -> Result<()> {
    if state.layout().width(ancilla)? != 1 || ancilla == 0 {
        return Err(Error::InvalidArgument(format!("register {ancilla} is not a one-qubit ancilla")));
    }
    let gates = shrink_gates(y, pivot, ancilla)?;
    let mut scratch = state.clone();
    for gate in &gates {
        match gate {
            Gate::ControlledNot { control, target } => scratch.controlled_not(*control, *target)?,
            Gate::ConditionalXor { condition, y, target } => scratch.conditional_xor(*condition, y, *target)?,
            Gate::WalshHadamard(r) => scratch.walsh_hadamard(*r)?,
            _ => unreachable!("shrink_gates only emits these three"),
        }
    }
    *state = scratch;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShrinkStep {
    /// The element actually used, reduced against earlier steps.
    pub y: GroupElement,
    pub pivot: usize,
}

/// An ordered list of shrinking steps whose pivots are distinct and whose
/// elements vanish on every earlier pivot, so applying the steps in order
/// never undoes an earlier one.
#[derive(Clone, Debug)]
pub struct ShrinkPlan {
    n: usize,
    steps: Vec<ShrinkStep>,
}

impl ShrinkPlan {
    pub fn new(n: usize) -> Self {
        Self { n, steps: Vec::new() }
    }

    /// Steps for `elements` in order, each pivot the lowest remaining 1-bit.
    pub fn from_elements(n: usize, elements: &[GroupElement]) -> Result<Self> {
        let mut plan = Self::new(n);
        for y in elements {
            plan.push(y, None)?;
        }
        Ok(plan)
    }

    pub fn from_basis(basis: &Gf2Basis) -> Result<Self> {
        Self::from_elements(basis.dimension(), basis.vectors())
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> &[ShrinkStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.pivot)
    }

    /// Appends `y`, reducing it against earlier steps. Returns the pivot.
    pub fn push(&mut self, y: &GroupElement, pivot: Option<usize>) -> Result<usize> {
        if y.dimension() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: y.dimension(),
            });
        }
        let mut r = y.clone();
        for step in &self.steps {
            if r.bit(step.pivot) {
                r ^= &step.y;
            }
        }
        if r.is_zero() {
            return Err(Error::DependentVectors);
        }
        let pivot = match pivot {
            Some(p) if p < self.n && r.bit(p) => p,
            Some(p) => {
                return Err(Error::InvalidPivot {
                    element: r.to_string(),
                    pivot: p,
                })
            }
            None => r.lowest_set_bit().expect("nonzero"),
        };
        self.steps.push(ShrinkStep { y: r, pivot });
        Ok(pivot)
    }

    /// Gates for every step, ancillas at registers `first_ancilla..`. Each
    /// step is preceded by a [`Gate::Basis`] hint moving its pivot into the
    /// computational basis, so that the reversed list moves it back.
    pub fn gates(&self, first_ancilla: usize) -> Result<Vec<Gate>> {
        let mut out = Vec::with_capacity(4 * self.steps.len());
        for (k, step) in self.steps.iter().enumerate() {
            out.push(Gate::Basis {
                bit: step.pivot,
                hadamard: false,
            });
            out.extend(shrink_gates(&step.y, step.pivot, first_ancilla + k)?);
        }
        Ok(out)
    }

    /// Basis of the span of the planned elements.
    pub fn span(&self) -> Gf2Basis {
        let elems: Vec<GroupElement> = self.steps.iter().map(|s| s.y.clone()).collect();
        crate::gf2::extract_basis(self.n, &elems).expect("dimensions agree")
    }
}

/// Folds [`shrink_once`] over `elements`, using registers `first_ancilla..`
/// as the fresh ancillas. Returns the plan that was applied.
pub fn shrink_many(state: &mut SparseState, elements: &[GroupElement], first_ancilla: usize) -> Result<ShrinkPlan> {
    let n = state.layout().width(0)? as usize;
    let plan = ShrinkPlan::from_elements(n, elements)?;
    let mut scratch = state.clone();
    for (k, step) in plan.steps().iter().enumerate() {
        shrink_once(&mut scratch, &step.y, step.pivot, first_ancilla + k)?;
    }
    *state = scratch;
    Ok(plan)
}
