//! Black-box functions on Z₂ⁿ that hide a subgroup.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{Gf2Basis, GroupElement};
use crate::qstate::SparseState;

/// Oracles with n at most this are stored as full tables.
pub const TABLE_LIMIT: usize = 24;

/// Pair samples used by [`PromiseOracle::verify_promise`] above
/// [`EXHAUSTIVE_VERIFY_LIMIT`].
pub const PROMISE_SAMPLES: usize = 1000;
pub const EXHAUSTIVE_VERIFY_LIMIT: usize = 12;

/// What a solver is allowed to see of ρ: its shape, counted evaluations and
/// counted applications of U_ρ.
pub trait SimonOracle: Send + Sync {
    fn dimension(&self) -> usize;
    fn codomain_bits(&self) -> u32;
    /// ρ(g); one query.
    fn evaluate(&self, g: &GroupElement) -> Result<u64>;
    /// U_ρ from `source` (the group register) into `target`; one query.
    fn apply_unitary(&self, state: &mut SparseState, source: usize, target: usize) -> Result<()>;
    fn query_count(&self) -> u64;
}

/// The element-independent part of a basis over n ≤ 64 bits, as machine words.
#[derive(Clone, Debug)]
struct WordBasis {
    rows: Vec<(u64, u64)>, // (pivot mask, vector)
    free_columns: Vec<u32>,
}

impl WordBasis {
    fn new(b: &Gf2Basis) -> Self {
        let rows: Vec<(u64, u64)> = b
            .vectors()
            .iter()
            .map(|v| {
                let w = v.as_index();
                (w & w.wrapping_neg(), w)
            })
            .collect();
        let pivots: u64 = rows.iter().fold(0, |acc, r| acc | r.0);
        let free_columns = (0..b.dimension() as u32).filter(|c| pivots >> c & 1 == 0).collect();
        Self { rows, free_columns }
    }

    fn reduce(&self, mut g: u64) -> u64 {
        for &(p, v) in &self.rows {
            if g & p != 0 {
                g ^= v;
            }
        }
        g
    }

    /// Index of g's coset in 0..2^{n−r}: the free columns of its reduced form.
    fn coset_index(&self, g: u64) -> u64 {
        let r = self.reduce(g);
        self.free_columns
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &c)| acc | ((r >> c) & 1) << k)
    }
}

#[derive(Clone, Debug)]
enum Values {
    Table(Vec<u64>),
    /// ρ(g) = permute(coset index of g).
    Lazy { key: u64, bits: u32 },
}

/// A function ρ on Z₂ⁿ constant and distinct on the cosets of a hidden H₀.
pub struct PromiseOracle {
    n: usize,
    codomain_bits: u32,
    hidden: Gf2Basis,
    words: WordBasis,
    values: Values,
    seed: Option<u64>,
    queries: AtomicU64,
}

impl Clone for PromiseOracle {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            codomain_bits: self.codomain_bits,
            hidden: self.hidden.clone(),
            words: self.words.clone(),
            values: self.values.clone(),
            seed: self.seed,
            queries: AtomicU64::new(self.queries.load(Ordering::Relaxed)),
        }
    }
}

impl fmt::Debug for PromiseOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PromiseOracle")
            .field("n", &self.n)
            .field("codomain_bits", &self.codomain_bits)
            .field("hidden", &self.hidden)
            .field("queries", &self.query_count())
            .finish()
    }
}

fn check_shape(n: usize, codomain_bits: u32, hidden: &Gf2Basis) -> Result<()> {
    if n == 0 || n > 64 {
        return Err(Error::InvalidArgument(format!("oracle dimension {n} must lie in 1..=64")));
    }
    if codomain_bits > 63 {
        return Err(Error::InvalidArgument(format!("codomain of {codomain_bits} bits is too wide")));
    }
    if hidden.dimension() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: hidden.dimension(),
        });
    }
    let coset_bits = n - hidden.rank();
    if (codomain_bits as usize) < coset_bits {
        return Err(Error::CodomainTooSmall {
            bits: codomain_bits as usize,
            cosets: 1u128 << coset_bits,
        });
    }
    Ok(())
}

/// A keyed bijection of `bits`-bit integers (xorshift and odd multiplier rounds).
fn permute(key: u64, bits: u32, mut x: u64) -> u64 {
    if bits == 0 {
        return 0;
    }
    let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let shift = (bits / 2).max(1);
    let mult = (key | 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    for round in 0..3u64 {
        x = (x ^ key.rotate_left(round as u32 * 21)) & mask;
        x = x.wrapping_mul(mult) & mask;
        x ^= x >> shift;
    }
    x
}

impl PromiseOracle {
    /// Wraps an explicit table after checking it against `hidden`.
    pub fn from_table(n: usize, codomain_bits: u32, hidden: Gf2Basis, table: Vec<u64>, seed: Option<u64>) -> Result<Self> {
        check_shape(n, codomain_bits, &hidden)?;
        if n > TABLE_LIMIT || table.len() != 1usize << n {
            return Err(Error::InvalidArgument(format!(
                "table has {} entries, expected 2^{n} with n ≤ {TABLE_LIMIT}",
                table.len()
            )));
        }
        if let Some(&v) = table.iter().find(|&&v| codomain_bits < 64 && v >> codomain_bits != 0) {
            return Err(Error::ValueOutOfRange {
                value: v,
                width: codomain_bits,
            });
        }
        let oracle = Self {
            n,
            codomain_bits,
            words: WordBasis::new(&hidden),
            hidden,
            values: Values::Table(table),
            seed,
            queries: AtomicU64::new(0),
        };
        oracle.verify_exhaustive_or_sampled(&mut ChaCha8Rng::seed_from_u64(seed.unwrap_or(0)))?;
        Ok(oracle)
    }

    /// Uncounted ρ(g) for the harness and for U_ρ's internal table reads.
    pub fn peek(&self, g: u64) -> u64 {
        match &self.values {
            Values::Table(t) => t[g as usize],
            Values::Lazy { key, bits } => permute(*key, *bits, self.words.coset_index(g)),
        }
    }

    /// The planted subgroup; for the harness only.
    pub fn hidden_basis(&self) -> &Gf2Basis {
        &self.hidden
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Records the seed the oracle was generated from, for serialization.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn reset_queries(&self) {
        self.queries.store(0, Ordering::Relaxed);
    }

    /// Checks ρ(g) = ρ(h) ⇔ g ⊕ h ∈ H₀, exhaustively for n ≤ 12 and on
    /// [`PROMISE_SAMPLES`] random pairs otherwise.
    pub fn verify_promise<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<()> {
        self.verify_exhaustive_or_sampled(rng)
    }

    fn verify_exhaustive_or_sampled<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<()> {
        if self.n <= EXHAUSTIVE_VERIFY_LIMIT {
            let mut owner: FxHashMap<u64, u64> = FxHashMap::default();
            for g in 0..(1u64 << self.n) {
                let rep = self.words.reduce(g);
                let v = self.peek(g);
                match owner.insert(v, rep) {
                    Some(prev) if prev != rep => {
                        return Err(Error::PromiseViolation(format!(
                            "value {v} is shared by distinct cosets"
                        )))
                    }
                    _ => {}
                }
                if v != self.peek(rep) {
                    return Err(Error::PromiseViolation(format!(
                        "ρ is not constant on the coset of {}",
                        GroupElement::from_u64(self.n, g)
                    )));
                }
            }
            return Ok(());
        }
        let top = if self.n >= 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        for _ in 0..PROMISE_SAMPLES {
            let g = rng.gen_range(0..=top);
            let h = rng.gen_range(0..=top);
            let same_coset = self.words.reduce(g ^ h) == 0;
            if same_coset != (self.peek(g) == self.peek(h)) {
                return Err(Error::PromiseViolation(format!(
                    "pair ({}, {}) breaks the promise",
                    GroupElement::from_u64(self.n, g),
                    GroupElement::from_u64(self.n, h)
                )));
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> Result<OracleFile> {
        let Values::Table(table) = &self.values else {
            return Err(Error::InvalidArgument(format!(
                "oracle with n = {} has no materialized table",
                self.n
            )));
        };
        Ok(OracleFile {
            n: self.n,
            codomain_bits: self.codomain_bits,
            hidden_basis: self.hidden.to_bitstrings(),
            table: table.clone(),
            seed: self.seed,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file()?)?)
    }

    pub fn from_file(file: OracleFile) -> Result<Self> {
        let hidden = Gf2Basis::from_bitstrings(file.n, &file.hidden_basis)?;
        Self::from_table(file.n, file.codomain_bits, hidden, file.table, file.seed)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }
}

impl SimonOracle for PromiseOracle {
    fn dimension(&self) -> usize {
        self.n
    }

    fn codomain_bits(&self) -> u32 {
        self.codomain_bits
    }

    fn evaluate(&self, g: &GroupElement) -> Result<u64> {
        if g.dimension() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: g.dimension(),
            });
        }
        self.queries.fetch_add(1, Ordering::Relaxed);
        Ok(self.peek(g.as_index()))
    }

    fn apply_unitary(&self, state: &mut SparseState, source: usize, target: usize) -> Result<()> {
        let layout = state.layout();
        let sw = layout.width(source)? as usize;
        let tw = layout.width(target)?;
        if sw != self.n {
            return Err(Error::DimensionMismatch { left: self.n, right: sw });
        }
        if tw < self.codomain_bits {
            return Err(Error::ValueOutOfRange {
                value: (1u64 << self.codomain_bits) - 1,
                width: tw,
            });
        }
        state.apply_function(|g| self.peek(g), source, target)?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

/// JSON form of a tabulated oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFile {
    pub n: usize,
    pub codomain_bits: u32,
    pub hidden_basis: Vec<String>,
    /// ρ(g) indexed by g's little-endian integer encoding.
    pub table: Vec<u64>,
    pub seed: Option<u64>,
}

/// A uniformly random injective labelling of the cosets of `hidden`.
pub fn random_promise_oracle<R: Rng + ?Sized>(
    n: usize,
    hidden: &Gf2Basis,
    codomain_bits: u32,
    rng: &mut R,
) -> Result<PromiseOracle> {
    check_shape(n, codomain_bits, hidden)?;
    let words = WordBasis::new(hidden);
    let coset_bits = n - hidden.rank();
    if n > TABLE_LIMIT {
        return Ok(PromiseOracle {
            n,
            codomain_bits,
            hidden: hidden.clone(),
            words,
            values: Values::Lazy {
                key: rng.gen(),
                bits: coset_bits as u32,
            },
            seed: None,
            queries: AtomicU64::new(0),
        });
    }
    let cosets = 1usize << coset_bits;
    let labels: Vec<u64> = if codomain_bits <= 32 {
        let mut chosen: Vec<u64> = rand::seq::index::sample(rng, 1usize << codomain_bits, cosets)
            .into_iter()
            .map(|v| v as u64)
            .collect();
        chosen.shuffle(rng);
        chosen
    } else {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut out = Vec::with_capacity(cosets);
        while out.len() < cosets {
            let v = rng.gen_range(0..1u64 << codomain_bits);
            if seen.insert(v) {
                out.push(v);
            }
        }
        out
    };
    let table = (0..1u64 << n).map(|g| labels[words.coset_index(g) as usize]).collect();
    Ok(PromiseOracle {
        n,
        codomain_bits,
        hidden: hidden.clone(),
        words,
        values: Values::Table(table),
        seed: None,
        queries: AtomicU64::new(0),
    })
}

/// A random subgroup of Z₂ⁿ of the given rank.
pub fn random_subgroup<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<Gf2Basis> {
    if rank > n || n > 64 {
        return Err(Error::InvalidArgument(format!("rank {rank} subgroup of Z₂^{n}")));
    }
    let mut basis = Gf2Basis::empty(n);
    while basis.rank() < rank {
        basis.insert(&GroupElement::from_u64(n, rng.gen()))?;
    }
    Ok(basis)
}

/// s uniform among nonzero elements and ρ uniform among the functions into
/// {0,1}^{n−1} fulfilling the promise for H₀ = {0, s}.
pub fn random_simon_instance<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PromiseOracle> {
    if !(2..=64).contains(&n) {
        return Err(Error::InvalidArgument(format!("Simon instances need 2 ≤ n ≤ 64, got {n}")));
    }
    let top = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let s = GroupElement::from_u64(n, rng.gen_range(1..=top));
    let hidden = crate::gf2::extract_basis(n, &[s])?;
    random_promise_oracle(n, &hidden, (n - 1) as u32, rng)
}

/// A uniformly random permutation of {0,1}ⁿ (the H₀ = {0} case).
pub fn random_bijection<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PromiseOracle> {
    random_promise_oracle(n, &Gf2Basis::empty(n), n as u32, rng)
}

/// A Boolean function on {0,1}ⁿ taking each value on exactly 2^{n−1} inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalancedFunction {
    /// Exclusive-or of all bits.
    Parity,
    /// The first component g₁ (leftmost character of the bitstring).
    Msb,
    /// The last component gₙ.
    Lsb,
}

impl BalancedFunction {
    pub fn eval(&self, g: &GroupElement) -> bool {
        match self {
            Self::Parity => g.weight() % 2 == 1,
            Self::Msb => g.bit(0),
            Self::Lsb => g.bit(g.dimension() - 1),
        }
    }

    /// Same as [`eval`](Self::eval) on a little-endian word.
    pub fn eval_word(&self, n: usize, g: u64) -> bool {
        match self {
            Self::Parity => g.count_ones() % 2 == 1,
            Self::Msb => g & 1 == 1,
            Self::Lsb => (g >> (n - 1)) & 1 == 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Parity => "parity",
            Self::Msb => "msb",
            Self::Lsb => "lsb",
        }
    }
}

impl FromStr for BalancedFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parity" | "xor" => Ok(Self::Parity),
            "msb" => Ok(Self::Msb),
            "lsb" => Ok(Self::Lsb),
            other => Err(Error::InvalidArgument(format!("unknown balanced function {other:?}"))),
        }
    }
}

impl fmt::Display for BalancedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// γ(x) = x₁ ⊕ … ⊕ xₙ.
pub fn gamma_xor() -> BalancedFunction {
    BalancedFunction::Parity
}
