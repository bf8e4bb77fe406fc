//! Python bindings: promise oracles, the three Simon solvers, GF(2) span
//! helpers, the classical adversary experiment and the Abelian routines.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use exact_simon::abelian::{self, AbelianElement, AbelianGroupSpec, AbelianOracle, AbelianSubgroup};
use exact_simon::classical;
use exact_simon::oracle::{random_bijection, random_promise_oracle, random_subgroup, BalancedFunction};
use exact_simon::simon::{self, Solver, SolverOptions};
use exact_simon::{Error, Gf2Basis, GroupElement, PromiseOracle, SimonOracle};

create_exception!(exact_simon_py, CapError, PyRuntimeError, "A size or iteration cap was exceeded.");
create_exception!(
    exact_simon_py,
    InvariantError,
    PyRuntimeError,
    "An internal invariant (orthogonality, promise, normalization) failed."
);

fn py_err(e: Error) -> PyErr {
    let m = e.to_string();
    match e {
        Error::IterationCap(_)
        | Error::SupportCap { .. }
        | Error::LayoutTooWide { .. }
        | Error::GroupTooLarge { .. }
        | Error::SpanTooLarge { .. } => CapError::new_err(m),
        Error::NotOrthogonal(_) | Error::PromiseViolation(_) | Error::ZeroNorm => InvariantError::new_err(m),
        _ => PyValueError::new_err(m),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn basis_of(n: usize, elements: &[String]) -> PyResult<Gf2Basis> {
    Gf2Basis::from_bitstrings(n, elements).map_err(py_err)
}

/// A function on {0,1}ⁿ constant and distinct on the cosets of a hidden
/// subgroup. Elements are bitstrings "g₁g₂…gₙ".
#[pyclass(name = "Oracle", frozen)]
struct PyOracle {
    inner: PromiseOracle,
}

#[pymethods]
impl PyOracle {
    /// Random labels on the cosets of `subgroup` (bitstrings), or of a random
    /// subgroup of the given `rank` when `subgroup` is omitted.
    #[staticmethod]
    #[pyo3(signature = (n, subgroup=None, rank=1, codomain_bits=None, seed=0))]
    fn random(n: usize, subgroup: Option<Vec<String>>, rank: usize, codomain_bits: Option<u32>, seed: u64) -> PyResult<Self> {
        let mut r = rng(seed);
        let hidden = match subgroup {
            Some(items) => basis_of(n, &items)?,
            None => random_subgroup(n, rank, &mut r).map_err(py_err)?,
        };
        let bits = codomain_bits.unwrap_or(n as u32);
        let inner = random_promise_oracle(n, &hidden, bits, &mut r).map_err(py_err)?;
        Ok(Self {
            inner: inner.with_seed(seed),
        })
    }

    /// A uniformly random permutation of {0,1}ⁿ.
    #[staticmethod]
    #[pyo3(signature = (n, seed=0))]
    fn bijection(n: usize, seed: u64) -> PyResult<Self> {
        let inner = random_bijection(n, &mut rng(seed)).map_err(py_err)?;
        Ok(Self {
            inner: inner.with_seed(seed),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: PromiseOracle::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn codomain_bits(&self) -> u32 {
        self.inner.codomain_bits()
    }

    #[getter]
    fn query_count(&self) -> u64 {
        self.inner.query_count()
    }

    /// The planted subgroup's basis; the solvers never see it.
    #[getter]
    fn hidden_basis(&self) -> Vec<String> {
        self.inner.hidden_basis().to_bitstrings()
    }

    /// ρ(g), counted as one query.
    fn evaluate(&self, g: &str) -> PyResult<u64> {
        let g: GroupElement = g.parse().map_err(py_err)?;
        self.inner.evaluate(&g).map_err(py_err)
    }

    #[pyo3(signature = (seed=0))]
    fn verify_promise(&self, seed: u64) -> PyResult<()> {
        self.inner.verify_promise(&mut rng(seed)).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Oracle(n={}, codomain_bits={}, hidden_rank={})",
            self.inner.dimension(),
            self.inner.codomain_bits(),
            self.inner.hidden_basis().rank()
        )
    }
}

#[pyclass(name = "SolverReport", frozen, get_all)]
struct PySolverReport {
    n: usize,
    basis: Vec<String>,
    rho_evaluations: u64,
    iterations: usize,
    seed: u64,
    mode: String,
    optimized: bool,
}

#[pymethods]
impl PySolverReport {
    fn __repr__(&self) -> String {
        format!(
            "SolverReport(n={}, basis={:?}, rho_evaluations={}, mode={:?}, optimized={})",
            self.n, self.basis, self.rho_evaluations, self.mode, self.optimized
        )
    }
}

/// Runs "exact", "exact-opt" or "zqp" and returns its report.
#[pyfunction]
#[pyo3(signature = (oracle, mode="exact-opt", seed=0, max_samples=10_000))]
fn solve(oracle: &PyOracle, mode: &str, seed: u64, max_samples: usize) -> PyResult<PySolverReport> {
    let solver = match mode {
        "exact" => Solver::Exact,
        "exact-opt" => Solver::ExactOptimized,
        "zqp" => Solver::Zqp,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let options = SolverOptions {
        max_samples,
        ..SolverOptions::default()
    };
    let r = simon::solve(&oracle.inner, solver, seed, &mut rng(seed), &options).map_err(py_err)?;
    Ok(PySolverReport {
        n: r.n,
        basis: r.basis,
        rho_evaluations: r.rho_evaluations,
        iterations: r.iterations,
        seed: r.seed,
        mode: serde_mode(r.mode),
        optimized: r.optimized,
    })
}

fn serde_mode(mode: simon::SolverMode) -> String {
    match mode {
        simon::SolverMode::Exact => "exact".into(),
        simon::SolverMode::Zqp => "zqp".into(),
    }
}

/// "BIJECTION" or "PROMISE", decided with zero error.
#[pyfunction]
#[pyo3(signature = (oracle, seed=0))]
fn distinguish(oracle: &PyOracle, seed: u64) -> PyResult<String> {
    let kind = simon::distinguish_bijection(&oracle.inner, &mut rng(seed), &SolverOptions::default()).map_err(py_err)?;
    Ok(kind.to_string())
}

/// Outcome distribution of measuring Simon's subroutine, keyed by bitstring.
#[pyfunction]
fn subroutine_distribution(oracle: &PyOracle) -> PyResult<BTreeMap<String, f64>> {
    let n = oracle.inner.dimension();
    let state = simon::simon_subroutine(&oracle.inner).map_err(py_err)?;
    let probs = state.probabilities(0).map_err(py_err)?;
    Ok(probs
        .into_iter()
        .map(|(z, p)| (GroupElement::from_u64(n, z).to_string(), p))
        .collect())
}

/// Reduced echelon basis of the span of `elements`.
#[pyfunction]
fn span_basis(n: usize, elements: Vec<String>) -> PyResult<Vec<String>> {
    Ok(basis_of(n, &elements)?.to_bitstrings())
}

/// Basis of the subgroup orthogonal to the span of `elements`.
#[pyfunction]
fn orthogonal_complement(n: usize, elements: Vec<String>) -> PyResult<Vec<String>> {
    Ok(basis_of(n, &elements)?.orthogonal_complement().to_bitstrings())
}

/// (k, l) with 𝒬|0⟩ = k|A⟩ + l|B⟩ for good mass a.
#[pyfunction]
fn amplified_coefficients(a: f64) -> (Complex64, Complex64) {
    simon::amplified_coefficients(a)
}

#[pyclass(name = "DefeatReport", frozen, get_all)]
struct PyDefeatReport {
    n: usize,
    budget: u64,
    trials: u64,
    gamma: String,
    success_rate: f64,
    collision_rate: f64,
    bound: f64,
    collision_bound: f64,
    success_sigma: f64,
    collision_sigma: f64,
    in_regime: bool,
    within_bounds: bool,
    seed: u64,
}

#[pymethods]
impl PyDefeatReport {
    fn __repr__(&self) -> String {
        format!(
            "DefeatReport(n={}, budget={}, success_rate={}, bound={}, within_bounds={})",
            self.n, self.budget, self.success_rate, self.bound, self.within_bounds
        )
    }
}

/// The nonadaptive collision adversary against random Simon instances.
#[pyfunction]
#[pyo3(signature = (n, trials, budget, gamma="parity", seed=0))]
fn defeat_experiment(n: usize, trials: u64, budget: u64, gamma: &str, seed: u64) -> PyResult<PyDefeatReport> {
    let gamma: BalancedFunction = gamma.parse().map_err(py_err)?;
    let r = classical::defeat_experiment(n, trials, budget, gamma, seed).map_err(py_err)?;
    Ok(PyDefeatReport {
        within_bounds: r.within_bounds(),
        n: r.n,
        budget: r.budget,
        trials: r.trials,
        gamma: r.gamma.to_string(),
        success_rate: r.success_rate,
        collision_rate: r.collision_rate,
        bound: r.bound,
        collision_bound: r.collision_bound,
        success_sigma: r.success_sigma,
        collision_sigma: r.collision_sigma,
        in_regime: r.in_regime,
        seed: r.seed,
    })
}

/// (holds, pairs checked, max deviation) for the τ/φ/F commutation laws.
#[pyfunction]
#[pyo3(signature = (moduli, seed=0))]
fn check_commutative_laws(moduli: Vec<u64>, seed: u64) -> PyResult<(bool, usize, f64)> {
    let g = AbelianGroupSpec::new(&moduli).map_err(py_err)?;
    let r = abelian::check_commutative_laws(&g, &mut rng(seed)).map_err(py_err)?;
    Ok((r.holds, r.pairs_checked, r.max_defect))
}

/// Plants ⟨generators⟩ in Z_{m₁} ⊕ … and recovers it by Fourier sampling.
/// Returns (recovered elements, samples, queries).
#[pyfunction]
#[pyo3(signature = (moduli, generators, seed=0, max_samples=10_000))]
fn hidden_subgroup(
    moduli: Vec<u64>,
    generators: Vec<Vec<u64>>,
    seed: u64,
    max_samples: usize,
) -> PyResult<(Vec<Vec<u64>>, usize, u64)> {
    let g = AbelianGroupSpec::new(&moduli).map_err(py_err)?;
    let gens: Vec<AbelianElement> = generators.into_iter().map(AbelianElement::new).collect();
    let h = AbelianSubgroup::generated(&g, &gens).map_err(py_err)?;
    let mut r = rng(seed);
    let oracle = AbelianOracle::planted(&g, &h, &mut r).map_err(py_err)?;
    let out = abelian::zqp_solve_abelian(&oracle, &mut r, max_samples).map_err(py_err)?;
    let elements = out.subgroup.elements(&g).into_iter().map(|e| e.residues).collect();
    Ok((elements, out.samples, out.queries))
}

/// r with ζ^r ≡ a (mod p), p ≤ 64 prime. Returns (r, samples).
#[pyfunction]
#[pyo3(signature = (p, zeta, a, seed=0, max_samples=1000))]
fn discrete_log(p: u64, zeta: u64, a: u64, seed: u64, max_samples: usize) -> PyResult<(u64, usize)> {
    let out = abelian::discrete_log(p, zeta, a, &mut rng(seed), max_samples).map_err(py_err)?;
    Ok((out.r, out.samples))
}

#[pymodule]
fn exact_simon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CapError", m.py().get_type::<CapError>())?;
    m.add("InvariantError", m.py().get_type::<InvariantError>())?;
    m.add_class::<PyOracle>()?;
    m.add_class::<PySolverReport>()?;
    m.add_class::<PyDefeatReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(distinguish, m)?)?;
    m.add_function(wrap_pyfunction!(subroutine_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(span_basis, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonal_complement, m)?)?;
    m.add_function(wrap_pyfunction!(amplified_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(defeat_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(check_commutative_laws, m)?)?;
    m.add_function(wrap_pyfunction!(hidden_subgroup, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_log, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
