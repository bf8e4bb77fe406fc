//! Finite Abelian groups Z_{m₁} ⊕ … ⊕ Z_{m_n}, their character pairing μ, the
//! operators F_G, τ_t, φ_h, and hidden-subgroup sampling over them.
//!
//! Elements are indexed in mixed radix with the first component varying
//! fastest, so for Z₂ⁿ the index agrees with [`GroupElement::as_index`].
//!
//! [`GroupElement::as_index`]: crate::gf2::GroupElement::as_index

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest group order a [`GroupState`] or oracle table may use.
pub const DEFAULT_GROUP_CAP: usize = 1 << 16;
/// Largest group order for which dense |G|×|G| matrices are built.
pub const MATRIX_CAP: usize = 1 << 10;
/// Groups up to this order have every (h, t) pair checked by
/// [`check_commutative_laws`]; larger ones get [`LAW_SAMPLES`] random pairs.
pub const EXHAUSTIVE_LAW_LIMIT: usize = 64;
pub const LAW_SAMPLES: usize = 100;
pub const LAW_TOLERANCE: f64 = 1e-9;
/// Largest amplitude count a [`GroupState`] may hold.
pub const STATE_CAP: usize = 1 << 24;

/// G = Z_{m₁} ⊕ … ⊕ Z_{m_n}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AbelianGroupSpec {
    moduli: Vec<u64>,
    strides: Vec<usize>,
    order: usize,
}

impl AbelianGroupSpec {
    pub fn new(moduli: &[u64]) -> Result<Self> {
        Self::with_cap(moduli, DEFAULT_GROUP_CAP)
    }

    pub fn with_cap(moduli: &[u64], cap: usize) -> Result<Self> {
        if moduli.is_empty() || moduli.contains(&0) {
            return Err(Error::InvalidArgument(format!("moduli must be ≥ 1, got {moduli:?}")));
        }
        let order = moduli.iter().try_fold(1u128, |acc, &m| {
            let next = acc * m as u128;
            (next <= cap as u128).then_some(next).ok_or(Error::GroupTooLarge { order: next, cap })
        })?;
        let strides = moduli
            .iter()
            .scan(1usize, |acc, &m| {
                let s = *acc;
                *acc *= m as usize;
                Some(s)
            })
            .collect();
        Ok(Self {
            moduli: moduli.to_vec(),
            strides,
            order: order as usize,
        })
    }

    /// Z₂ⁿ.
    pub fn binary(n: usize) -> Result<Self> {
        Self::new(&vec![2; n])
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn rank(&self) -> usize {
        self.moduli.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> AbelianElement {
        AbelianElement {
            residues: vec![0; self.rank()],
        }
    }

    pub fn element(&self, index: usize) -> Result<AbelianElement> {
        if index >= self.order {
            return Err(Error::InvalidArgument(format!("index {index} outside a group of order {}", self.order)));
        }
        Ok(AbelianElement {
            residues: self
                .moduli
                .iter()
                .zip(&self.strides)
                .map(|(&m, &s)| ((index / s) as u64) % m)
                .collect(),
        })
    }

    pub fn index_of(&self, g: &AbelianElement) -> Result<usize> {
        self.check(g)?;
        Ok(g.residues.iter().zip(&self.strides).map(|(&r, &s)| r as usize * s).sum())
    }

    fn check(&self, g: &AbelianElement) -> Result<()> {
        if g.residues.len() != self.rank() {
            return Err(Error::DimensionMismatch {
                left: self.rank(),
                right: g.residues.len(),
            });
        }
        if let Some((&r, &m)) = g.residues.iter().zip(&self.moduli).find(|(&r, &m)| r >= m) {
            return Err(Error::InvalidArgument(format!("residue {r} is not below its modulus {m}")));
        }
        Ok(())
    }

    /// Builds an element, reducing each residue modulo its modulus.
    pub fn reduce(&self, residues: &[i64]) -> Result<AbelianElement> {
        if residues.len() != self.rank() {
            return Err(Error::DimensionMismatch {
                left: self.rank(),
                right: residues.len(),
            });
        }
        Ok(AbelianElement {
            residues: residues
                .iter()
                .zip(&self.moduli)
                .map(|(&r, &m)| r.rem_euclid(m as i64) as u64)
                .collect(),
        })
    }

    pub fn elements(&self) -> impl Iterator<Item = AbelianElement> + '_ {
        (0..self.order).map(|i| self.element(i).expect("index in range"))
    }

    pub fn add(&self, g: &AbelianElement, h: &AbelianElement) -> Result<AbelianElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(AbelianElement {
            residues: g
                .residues
                .iter()
                .zip(&h.residues)
                .zip(&self.moduli)
                .map(|((&a, &b), &m)| (a + b) % m)
                .collect(),
        })
    }

    pub fn neg(&self, g: &AbelianElement) -> Result<AbelianElement> {
        self.check(g)?;
        Ok(AbelianElement {
            residues: g.residues.iter().zip(&self.moduli).map(|(&a, &m)| (m - a) % m).collect(),
        })
    }

    /// Index of g + h from indices, without range checks.
    fn add_index(&self, g: usize, h: usize) -> usize {
        let mut out = 0;
        for (&m, &s) in self.moduli.iter().zip(&self.strides) {
            let m = m as usize;
            out += ((g / s % m + h / s % m) % m) * s;
        }
        out
    }

    fn neg_index(&self, g: usize) -> usize {
        let mut out = 0;
        for (&m, &s) in self.moduli.iter().zip(&self.strides) {
            let m = m as usize;
            out += ((m - g / s % m) % m) * s;
        }
        out
    }

    fn lcm(&self) -> u64 {
        self.moduli.iter().fold(1, |acc, &m| acc / gcd(acc, m) * m)
    }

    /// μ(g, h) in units of 1/L turns, L the lcm of the moduli.
    fn turns_index(&self, g: usize, h: usize, lcm: u64) -> u64 {
        let mut t = 0u64;
        for (&m, &s) in self.moduli.iter().zip(&self.strides) {
            let (a, b) = ((g / s) as u64 % m, (h / s) as u64 % m);
            t = (t + (a * b % m) * (lcm / m)) % lcm;
        }
        t
    }

    fn mu_index(&self, g: usize, h: usize, lcm: u64) -> Complex64 {
        let t = self.turns_index(g, h, lcm);
        // quarter turns exactly, so Z₂ⁿ gives ±1 with no rounding
        match (4 * t).checked_rem(lcm).map(|r| (r, 4 * t / lcm)) {
            Some((0, 0)) => Complex64::new(1.0, 0.0),
            Some((0, 1)) => Complex64::new(0.0, 1.0),
            Some((0, 2)) => Complex64::new(-1.0, 0.0),
            Some((0, 3)) => Complex64::new(0.0, -1.0),
            _ => Complex64::from_polar(1.0, TAU * t as f64 / lcm as f64),
        }
    }
}

impl FromStr for AbelianGroupSpec {
    type Err = Error;

    /// Comma-separated moduli, e.g. "4,3,2".
    fn from_str(s: &str) -> Result<Self> {
        let moduli = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad modulus {p:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&moduli)
    }
}

impl fmt::Display for AbelianGroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.moduli.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// (g₁, …, g_n) with 0 ≤ g_i < m_i.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AbelianElement {
    pub residues: Vec<u64>,
}

impl AbelianElement {
    pub fn new(residues: Vec<u64>) -> Self {
        Self { residues }
    }

    /// Parses "1,0,2", or a 0/1 string such as "110" meaning (1,1,0).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let residues = if s.contains(',') {
            s.split(',')
                .map(|p| {
                    p.trim()
                        .parse::<u64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad residue {p:?} in {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        } else if !s.is_empty() && s.chars().all(|c| c == '0' || c == '1') {
            s.chars().map(|c| u64::from(c == '1')).collect()
        } else {
            s.parse::<u64>()
                .map(|v| vec![v])
                .map_err(|_| Error::InvalidArgument(format!("bad element {s:?}")))?
        };
        Ok(Self { residues })
    }
}

impl fmt::Display for AbelianElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.residues.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A subgroup given by generators, with its elements materialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianSubgroup {
    generators: Vec<AbelianElement>,
    // sorted element indices
    members: Vec<usize>,
}

impl AbelianSubgroup {
    /// The closure of `generators` under addition.
    pub fn generated(group: &AbelianGroupSpec, generators: &[AbelianElement]) -> Result<Self> {
        let gens = generators
            .iter()
            .map(|g| group.index_of(g))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = vec![false; group.order()];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for &g in &gens {
                let y = group.add_index(x, g);
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        Ok(Self {
            generators: generators.to_vec(),
            members: (0..group.order()).filter(|&i| seen[i]).collect(),
        })
    }

    pub fn trivial(group: &AbelianGroupSpec) -> Self {
        Self::generated(group, &[]).expect("no generators")
    }

    pub fn whole(group: &AbelianGroupSpec) -> Self {
        let gens: Vec<AbelianElement> = (0..group.rank())
            .map(|i| {
                let mut r = vec![0; group.rank()];
                r[i] = 1 % group.moduli[i];
                AbelianElement::new(r)
            })
            .collect();
        Self::generated(group, &gens).expect("unit vectors are elements")
    }

    /// A subgroup from a set of element indices closed under addition, with
    /// a greedy generating set.
    fn from_members(group: &AbelianGroupSpec, mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        let mut gens: Vec<AbelianElement> = Vec::new();
        let mut span = Self::trivial(group);
        for &m in &members {
            if !span.contains_index(m) {
                gens.push(group.element(m).expect("member"));
                span = Self::generated(group, &gens).expect("members are elements");
            }
        }
        Self {
            generators: gens,
            members,
        }
    }

    pub fn generators(&self) -> &[AbelianElement] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.members
    }

    pub fn elements(&self, group: &AbelianGroupSpec) -> Vec<AbelianElement> {
        self.members.iter().map(|&i| group.element(i).expect("member")).collect()
    }

    fn contains_index(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    pub fn contains(&self, group: &AbelianGroupSpec, g: &AbelianElement) -> Result<bool> {
        Ok(self.contains_index(group.index_of(g)?))
    }

    /// Same element set.
    pub fn same_elements(&self, other: &Self) -> bool {
        self.members == other.members
    }
}

/// A subgroup generated by `count` uniformly random elements.
pub fn random_subgroup<R: Rng + ?Sized>(group: &AbelianGroupSpec, count: usize, rng: &mut R) -> AbelianSubgroup {
    let gens: Vec<AbelianElement> = (0..count)
        .map(|_| group.element(rng.gen_range(0..group.order())).expect("index in range"))
        .collect();
    AbelianSubgroup::generated(group, &gens).expect("elements of the group")
}

/// μ(g, h) = Π_i exp(2πı g_i h_i / m_i).
pub fn mu(group: &AbelianGroupSpec, g: &AbelianElement, h: &AbelianElement) -> Result<Complex64> {
    let (a, b) = (group.index_of(g)?, group.index_of(h)?);
    Ok(group.mu_index(a, b, group.lcm()))
}

/// H^⊥ = {g ∈ G | μ(g, h) = 1 for all h ∈ H}, by filtering G against the
/// generators of H.
pub fn orthogonal_subgroup(group: &AbelianGroupSpec, h: &AbelianSubgroup) -> Result<AbelianSubgroup> {
    let lcm = group.lcm();
    let gens = h
        .generators
        .iter()
        .map(|g| group.index_of(g))
        .collect::<Result<Vec<_>>>()?;
    let members = (0..group.order())
        .filter(|&g| gens.iter().all(|&x| group.turns_index(g, x, lcm) == 0))
        .collect();
    Ok(AbelianSubgroup::from_members(group, members))
}

/// A dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.dim + col] = v;
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out.data[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        Ok(self
            .data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// max |a_ij − b_ij|
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// ‖M M† − I‖_max
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.mul(&self.adjoint()).expect("square");
        p.max_abs_diff(&Matrix::identity(self.dim))
    }
}

fn check_matrix_cap(group: &AbelianGroupSpec) -> Result<()> {
    if group.order() > MATRIX_CAP {
        Err(Error::GroupTooLarge {
            order: group.order() as u128,
            cap: MATRIX_CAP,
        })
    } else {
        Ok(())
    }
}

/// F_G = 1/√|G| Σ_{g,h} μ(g,h)|g⟩⟨h|.
pub fn fourier(group: &AbelianGroupSpec) -> Result<Matrix> {
    check_matrix_cap(group)?;
    let n = group.order();
    let lcm = group.lcm();
    let s = 1.0 / (n as f64).sqrt();
    let mut m = Matrix::zeros(n);
    for g in 0..n {
        for h in 0..n {
            m.data[g * n + h] = group.mu_index(g, h, lcm) * s;
        }
    }
    Ok(m)
}

/// τ_t = Σ_g |t + g⟩⟨g|.
pub fn translate(group: &AbelianGroupSpec, t: &AbelianElement) -> Result<Matrix> {
    check_matrix_cap(group)?;
    let t = group.index_of(t)?;
    let n = group.order();
    let mut m = Matrix::zeros(n);
    for g in 0..n {
        m.data[group.add_index(t, g) * n + g] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

/// φ_h = Σ_g μ(h,g)|g⟩⟨g|.
pub fn phase(group: &AbelianGroupSpec, h: &AbelianElement) -> Result<Matrix> {
    check_matrix_cap(group)?;
    let h = group.index_of(h)?;
    let n = group.order();
    let lcm = group.lcm();
    let mut m = Matrix::zeros(n);
    for g in 0..n {
        m.data[g * n + g] = group.mu_index(h, g, lcm);
    }
    Ok(m)
}

/// Outcome of [`check_commutative_laws`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub holds: bool,
    pub pairs_checked: usize,
    /// Largest entrywise deviation seen over all identities.
    pub max_defect: f64,
    pub counterexample: Option<String>,
}

/// Checks μ(h,t) τ_t φ_h = φ_h τ_t, F_G φ_h = τ_{−h} F_G and F_G τ_t = φ_t F_G
/// as matrix identities, for every (h, t) when |G| ≤ 64 and for
/// [`LAW_SAMPLES`] random pairs otherwise.
pub fn check_commutative_laws<R: Rng + ?Sized>(group: &AbelianGroupSpec, rng: &mut R) -> Result<LawReport> {
    let f = fourier(group)?;
    let n = group.order();
    let pairs: Vec<(usize, usize)> = if n <= EXHAUSTIVE_LAW_LIMIT {
        (0..n).flat_map(|h| (0..n).map(move |t| (h, t))).collect()
    } else {
        (0..LAW_SAMPLES)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect()
    };
    let mut max_defect = 0.0f64;
    let mut counterexample = None;
    let mut cache: BTreeMap<(char, usize), Matrix> = BTreeMap::new();
    let mut op = |kind: char, x: usize| -> Result<Matrix> {
        if let Some(m) = cache.get(&(kind, x)) {
            return Ok(m.clone());
        }
        let e = group.element(x)?;
        let m = if kind == 't' { translate(group, &e)? } else { phase(group, &e)? };
        if n <= EXHAUSTIVE_LAW_LIMIT {
            cache.insert((kind, x), m.clone());
        }
        Ok(m)
    };
    let lcm = group.lcm();
    for &(h, t) in &pairs {
        let (tau_t, phi_h, phi_t, tau_neg_h) = (op('t', t)?, op('p', h)?, op('p', t)?, op('t', group.neg_index(h))?);
        let laws = [
            (
                "μ(h,t) τ_t φ_h = φ_h τ_t",
                tau_t.mul(&phi_h)?.scale(group.mu_index(h, t, lcm)),
                phi_h.mul(&tau_t)?,
            ),
            ("F φ_h = τ_{−h} F", f.mul(&phi_h)?, tau_neg_h.mul(&f)?),
            ("F τ_t = φ_t F", f.mul(&tau_t)?, phi_t.mul(&f)?),
        ];
        for (name, lhs, rhs) in laws {
            let d = lhs.max_abs_diff(&rhs);
            max_defect = max_defect.max(d);
            if d > LAW_TOLERANCE && counterexample.is_none() {
                counterexample = Some(format!(
                    "{name} fails for h={}, t={} (deviation {d:e})",
                    group.element(h)?,
                    group.element(t)?
                ));
            }
        }
    }
    Ok(LawReport {
        holds: counterexample.is_none(),
        pairs_checked: pairs.len(),
        max_defect,
        counterexample,
    })
}

/// Applies F_G (or F_G⁻¹ when `inverse`) to a dense vector over G, one
/// cyclic factor at a time.
pub fn fourier_apply(group: &AbelianGroupSpec, v: &mut [Complex64], inverse: bool) -> Result<()> {
    if v.len() != group.order() {
        return Err(Error::DimensionMismatch {
            left: group.order(),
            right: v.len(),
        });
    }
    let mut planner = FftPlanner::new();
    // μ uses exp(+2πı…), which is the FFT library's inverse direction
    let direction = if inverse { FftDirection::Forward } else { FftDirection::Inverse };
    let mut line = Vec::new();
    for (&m, &stride) in group.moduli.iter().zip(&group.strides) {
        let m = m as usize;
        if m == 1 {
            continue;
        }
        let fft = planner.plan_fft(m, direction);
        let scale = 1.0 / (m as f64).sqrt();
        let block = stride * m;
        for start in (0..v.len()).step_by(block) {
            for offset in 0..stride {
                line.clear();
                line.extend((0..m).map(|k| v[start + offset + k * stride]));
                fft.process(&mut line);
                for (k, a) in line.iter().enumerate() {
                    v[start + offset + k * stride] = a * scale;
                }
            }
        }
    }
    Ok(())
}

/// Dense vectors over G keyed by the label in the output register.
#[derive(Clone, Debug)]
pub struct GroupState {
    group: AbelianGroupSpec,
    blocks: BTreeMap<u64, Vec<Complex64>>,
}

impl GroupState {
    pub fn group(&self) -> &AbelianGroupSpec {
        &self.group
    }

    /// Amplitude of |g⟩|label⟩.
    pub fn amplitude(&self, g: &AbelianElement, label: u64) -> Result<Complex64> {
        let i = self.group.index_of(g)?;
        Ok(self.blocks.get(&label).map_or(Complex64::new(0.0, 0.0), |b| b[i]))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.blocks.values().flatten().map(|a| a.norm_sqr()).sum()
    }

    /// Distribution of the group register, indexed like the group.
    pub fn marginal(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.group.order()];
        for block in self.blocks.values() {
            for (acc, a) in p.iter_mut().zip(block) {
                *acc += a.norm_sqr();
            }
        }
        p
    }

    /// φ_t on the group register.
    pub fn apply_phase(&mut self, t: &AbelianElement) -> Result<()> {
        let t = self.group.index_of(t)?;
        let lcm = self.group.lcm();
        for block in self.blocks.values_mut() {
            for (g, a) in block.iter_mut().enumerate() {
                *a *= self.group.mu_index(t, g, lcm);
            }
        }
        Ok(())
    }

    /// Samples the group register (without collapsing the state).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> AbelianElement {
        let p = self.marginal();
        let total: f64 = p.iter().sum();
        let mut r = rng.gen::<f64>() * total;
        let mut pick = p.len() - 1;
        for (i, &w) in p.iter().enumerate() {
            if r < w {
                pick = i;
                break;
            }
            r -= w;
        }
        self.group.element(pick).expect("index in range")
    }
}

/// A function on G constant on the cosets of a hidden H₀ and distinct
/// across them, with counted access.
pub struct AbelianOracle {
    group: AbelianGroupSpec,
    table: Vec<u64>,
    hidden: AbelianSubgroup,
    queries: AtomicU64,
}

impl Clone for AbelianOracle {
    fn clone(&self) -> Self {
        Self {
            group: self.group.clone(),
            table: self.table.clone(),
            hidden: self.hidden.clone(),
            queries: AtomicU64::new(self.queries.load(Ordering::Relaxed)),
        }
    }
}

impl fmt::Debug for AbelianOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AbelianOracle")
            .field("group", &self.group.to_string())
            .field("hidden_order", &self.hidden.order())
            .finish()
    }
}

impl AbelianOracle {
    /// Wraps a value table indexed like the group, checking the promise.
    pub fn from_table(group: &AbelianGroupSpec, table: Vec<u64>) -> Result<Self> {
        if table.len() != group.order() {
            return Err(Error::DimensionMismatch {
                left: group.order(),
                right: table.len(),
            });
        }
        let members: Vec<usize> = (0..group.order()).filter(|&g| table[g] == table[0]).collect();
        for &h in &members {
            for g in 0..group.order() {
                if table[group.add_index(g, h)] != table[g] {
                    return Err(Error::PromiseViolation(format!(
                        "ρ is not constant on the coset of {}",
                        group.element(g)?
                    )));
                }
            }
        }
        let distinct: BTreeSet<u64> = table.iter().copied().collect();
        if distinct.len() * members.len() != group.order() {
            return Err(Error::PromiseViolation("ρ repeats a value across cosets".into()));
        }
        Ok(Self {
            group: group.clone(),
            table,
            hidden: AbelianSubgroup::from_members(group, members),
            queries: AtomicU64::new(0),
        })
    }

    pub fn from_fn(group: &AbelianGroupSpec, f: impl Fn(&AbelianElement) -> u64) -> Result<Self> {
        Self::from_table(group, group.elements().map(|g| f(&g)).collect())
    }

    /// Random distinct labels on the cosets of `hidden`.
    pub fn planted<R: Rng + ?Sized>(group: &AbelianGroupSpec, hidden: &AbelianSubgroup, rng: &mut R) -> Result<Self> {
        let n = group.order();
        let mut coset = vec![usize::MAX; n];
        let mut count = 0;
        for g in 0..n {
            if coset[g] == usize::MAX {
                for &h in hidden.indices() {
                    coset[group.add_index(g, h)] = count;
                }
                count += 1;
            }
        }
        let mut labels: Vec<u64> = (0..count as u64).collect();
        labels.shuffle(rng);
        Self::from_table(group, coset.into_iter().map(|c| labels[c]).collect())
    }

    pub fn group(&self) -> &AbelianGroupSpec {
        &self.group
    }

    pub fn hidden(&self) -> &AbelianSubgroup {
        &self.hidden
    }

    /// ρ(g); one query.
    pub fn evaluate(&self, g: &AbelianElement) -> Result<u64> {
        let i = self.group.index_of(g)?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        Ok(self.table[i])
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

/// U_G|0⟩|0⟩ = (F_G ⊗ I) U_ρ (F_G⁻¹ ⊗ I)|0⟩|0⟩, using one query.
pub fn general_subroutine(oracle: &AbelianOracle) -> Result<GroupState> {
    let group = oracle.group();
    let n = group.order();
    let mut start = vec![Complex64::new(0.0, 0.0); n];
    start[0] = Complex64::new(1.0, 0.0);
    fourier_apply(group, &mut start, true)?;
    oracle.queries.fetch_add(1, Ordering::Relaxed);
    let mut blocks: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
    for (g, a) in start.into_iter().enumerate() {
        let label = oracle.table[g];
        if !blocks.contains_key(&label) && (blocks.len() + 1) * n > STATE_CAP {
            return Err(Error::SupportCap {
                size: (blocks.len() + 1) * n,
                cap: STATE_CAP,
            });
        }
        blocks.entry(label).or_insert_with(|| vec![Complex64::new(0.0, 0.0); n])[g] += a;
    }
    for block in blocks.values_mut() {
        fourier_apply(group, block, false)?;
    }
    Ok(GroupState {
        group: group.clone(),
        blocks,
    })
}

/// Measures the group register of U_G|0⟩|0⟩ using one query. Only the
/// block of a uniformly chosen g's label is transformed, which samples the
/// same distribution as [`general_subroutine`] followed by [`GroupState::sample`].
pub fn sample_subroutine<R: Rng + ?Sized>(oracle: &AbelianOracle, rng: &mut R) -> Result<AbelianElement> {
    let group = oracle.group();
    let n = group.order();
    oracle.queries.fetch_add(1, Ordering::Relaxed);
    let label = oracle.table[rng.gen_range(0..n)];
    let mut block: Vec<Complex64> = oracle
        .table
        .iter()
        .map(|&y| Complex64::new(if y == label { 1.0 } else { 0.0 }, 0.0))
        .collect();
    fourier_apply(group, &mut block, false)?;
    let total: f64 = block.iter().map(|a| a.norm_sqr()).sum();
    let mut r = rng.gen::<f64>() * total;
    let mut pick = n - 1;
    for (i, a) in block.iter().enumerate() {
        let w = a.norm_sqr();
        if r < w {
            pick = i;
            break;
        }
        r -= w;
    }
    group.element(pick)
}

/// True iff ρ is constant on ⟨Y⟩^⊥; queries ρ at 0 and at each generator.
pub fn stopping_test_abelian(oracle: &AbelianOracle, span: &AbelianSubgroup) -> Result<bool> {
    let group = oracle.group();
    let reference = oracle.evaluate(&group.identity())?;
    for g in orthogonal_subgroup(group, span)?.generators() {
        if oracle.evaluate(g)? != reference {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug)]
pub struct AbelianZqpOutcome {
    pub subgroup: AbelianSubgroup,
    pub samples: usize,
    pub queries: u64,
}

/// Samples H₀^⊥ with [`sample_subroutine`] until ρ is constant on the
/// orthogonal subgroup of the span, which is then H₀.
pub fn zqp_solve_abelian<R: Rng + ?Sized>(
    oracle: &AbelianOracle,
    rng: &mut R,
    max_samples: usize,
) -> Result<AbelianZqpOutcome> {
    let group = oracle.group();
    let start = oracle.query_count();
    let mut found: Vec<AbelianElement> = Vec::new();
    let mut span = AbelianSubgroup::trivial(group);
    let mut samples = 0;
    let mut settled = stopping_test_abelian(oracle, &span)?;
    while !settled {
        if samples == max_samples {
            return Err(Error::IterationCap(max_samples));
        }
        let z = sample_subroutine(oracle, rng)?;
        samples += 1;
        if !span.contains(group, &z)? {
            found.push(z);
            span = AbelianSubgroup::generated(group, &found)?;
            settled = stopping_test_abelian(oracle, &span)?;
        }
    }
    Ok(AbelianZqpOutcome {
        subgroup: orthogonal_subgroup(group, &span)?,
        samples,
        queries: oracle.query_count() - start,
    })
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// a⁻¹ mod m when gcd(a, m) = 1.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m as i128) as u64)
}

pub fn mod_pow(base: u64, exp: u64, m: u64) -> u64 {
    let (mut b, mut e, mut acc) = (base % m, exp, 1 % m);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// Whether ζ has multiplicative order p − 1 modulo p.
pub fn is_generator(zeta: u64, p: u64) -> bool {
    if !is_prime(p) || zeta % p == 0 {
        return false;
    }
    (1..p - 1).all(|k| mod_pow(zeta, k, p) != 1)
}

/// Largest prime accepted by [`discrete_log`].
pub const MAX_DLOG_PRIME: u64 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DlogOutcome {
    pub r: u64,
    /// Subroutine runs until z₁ was invertible.
    pub samples: usize,
    pub queries: u64,
}

/// Finds r with ζ^r ≡ a (mod p) by sampling (z₁, z₂) from the orthogonal
/// subgroup of {(g₁, g₂) | ζ^{g₁} a^{g₂} = 1} in Z_{p−1}² until z₁ is a unit,
/// then r = z₂ z₁⁻¹ mod (p − 1).
pub fn discrete_log<R: Rng + ?Sized>(p: u64, zeta: u64, a: u64, rng: &mut R, max_samples: usize) -> Result<DlogOutcome> {
    if !is_prime(p) || p > MAX_DLOG_PRIME {
        return Err(Error::InvalidArgument(format!(
            "p must be a prime ≤ {MAX_DLOG_PRIME}, got {p}"
        )));
    }
    if !is_generator(zeta, p) {
        return Err(Error::NotGenerator { zeta, p });
    }
    if a == 0 || a >= p {
        return Err(Error::InvalidArgument(format!("a = {a} is not in Z_{p}*")));
    }
    let q = p - 1;
    let group = AbelianGroupSpec::new(&[q, q])?;
    let oracle = AbelianOracle::from_fn(&group, |g| {
        mod_pow(zeta, g.residues[0], p) * mod_pow(a, g.residues[1], p) % p
    })?;
    for samples in 1..=max_samples {
        let z = sample_subroutine(&oracle, rng)?;
        let (z1, z2) = (z.residues[0], z.residues[1]);
        if let Some(inv) = mod_inverse(z1, q) {
            let r = (z2 as u128 * inv as u128 % q as u128) as u64;
            if mod_pow(zeta, r, p) != a % p {
                return Err(Error::PromiseViolation(format!("sampled r = {r} does not satisfy ζ^r = a")));
            }
            return Ok(DlogOutcome {
                r,
                samples,
                queries: oracle.query_count(),
            });
        }
    }
    Err(Error::IterationCap(max_samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(s: &str) -> AbelianElement {
        AbelianElement::parse(s).unwrap()
    }

    #[test]
    fn group_spec_parses_and_caps() {
        let g: AbelianGroupSpec = "4,3,2".parse().unwrap();
        assert_eq!(g.order(), 24);
        assert_eq!(g.to_string(), "4,3,2");
        assert!("4,0".parse::<AbelianGroupSpec>().is_err());
        assert!(matches!(
            AbelianGroupSpec::new(&[256, 257]),
            Err(Error::GroupTooLarge { .. })
        ));
        for i in 0..24 {
            assert_eq!(g.index_of(&g.element(i).unwrap()).unwrap(), i);
        }
    }

    #[test]
    fn mu_examples() {
        let z3 = AbelianGroupSpec::new(&[3]).unwrap();
        let w = mu(&z3, &e("1"), &e("1")).unwrap();
        assert!((w - Complex64::from_polar(1.0, TAU / 3.0)).norm() < 1e-15);
        let g = AbelianGroupSpec::new(&[4, 6]).unwrap();
        for h in g.elements() {
            assert_eq!(mu(&g, &g.identity(), &h).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn orthogonal_subgroup_of_z4() {
        let g = AbelianGroupSpec::new(&[4]).unwrap();
        let h = AbelianSubgroup::generated(&g, &[e("2")]).unwrap();
        let perp = orthogonal_subgroup(&g, &h).unwrap();
        assert_eq!(perp.elements(&g), vec![e("0"), e("2")]);
        let all = orthogonal_subgroup(&g, &AbelianSubgroup::trivial(&g)).unwrap();
        assert_eq!(all.order(), 4);
    }

    #[test]
    fn small_operators_are_unitary() {
        let g = AbelianGroupSpec::new(&[2, 3]).unwrap();
        assert!(fourier(&g).unwrap().unitarity_defect() < 1e-12);
        assert_eq!(translate(&g, &g.identity()).unwrap(), Matrix::identity(6));
        assert!(phase(&g, &e("1,2")).unwrap().unitarity_defect() < 1e-12);
    }

    #[test]
    fn laws_hold_on_z2_and_z6() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for m in [&[2u64][..], &[6], &[2, 3]] {
            let r = check_commutative_laws(&AbelianGroupSpec::new(m).unwrap(), &mut rng).unwrap();
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn fast_fourier_matches_the_matrix() {
        let g = AbelianGroupSpec::new(&[4, 3, 2]).unwrap();
        let f = fourier(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<Complex64> = (0..24).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let want = f.apply(&v).unwrap();
        let mut got = v.clone();
        fourier_apply(&g, &mut got, false).unwrap();
        assert!(want.iter().zip(&got).all(|(a, b)| (a - b).norm() < 1e-12));
        fourier_apply(&g, &mut got, true).unwrap();
        assert!(v.iter().zip(&got).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn subroutine_on_z4_lands_in_the_orthogonal_subgroup() {
        let g = AbelianGroupSpec::new(&[4]).unwrap();
        let h = AbelianSubgroup::generated(&g, &[e("2")]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let o = AbelianOracle::planted(&g, &h, &mut rng).unwrap();
        let p = general_subroutine(&o).unwrap().marginal();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[2] - 0.5).abs() < 1e-12);
        assert!(p[1] < 1e-24 && p[3] < 1e-24);
    }

    #[test]
    fn promise_violations_are_detected() {
        let g = AbelianGroupSpec::new(&[4]).unwrap();
        assert!(AbelianOracle::from_table(&g, vec![0, 1, 0, 2]).is_err());
        assert!(AbelianOracle::from_table(&g, vec![0, 1, 1, 0]).is_err());
        assert!(AbelianOracle::from_table(&g, vec![5, 1, 5, 1]).is_ok());
    }

    #[test]
    fn discrete_log_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(discrete_log(11, 2, 8, &mut rng, 100).unwrap().r, 3);
        assert_eq!(discrete_log(7, 3, 1, &mut rng, 100).unwrap().r, 0);
        assert!(matches!(
            discrete_log(7, 2, 1, &mut rng, 100),
            Err(Error::NotGenerator { zeta: 2, p: 7 })
        ));
    }

    #[test]
    fn number_theory_helpers() {
        assert_eq!(mod_inverse(3, 10), Some(7));
        assert_eq!(mod_inverse(4, 10), None);
        assert_eq!(mod_pow(2, 10, 1000), 24);
        assert!(is_prime(13) && !is_prime(1) && !is_prime(12));
        assert!(is_generator(2, 13) && !is_generator(3, 13));
    }
}
