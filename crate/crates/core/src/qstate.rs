//! Sparse multi-register state vectors.
//!
//! A basis label is a tuple of per-register integers packed into one `u64`,
//! register 0 in the low bits. Amplitudes are grouped into blocks keyed by the
//! bits outside register 0, each block listing `(register-0 value, amplitude)`
//! pairs. Gates outside register 0 become relabelings of whole blocks, and
//! register 0 may be held partly in the Hadamard basis (see [`SparseState`]),
//! which keeps coset states small in whichever basis they are sparse.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::gf2::GroupElement;

/// Register-0 widths up to this many bits use dense scratch buffers.
const DENSE_SCRATCH_BITS: u32 = 20;

/// Simulation tolerances and caps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    /// Amplitudes with smaller modulus are dropped after every transform.
    pub prune_threshold: f64,
    /// Allowed deviation of Σ|amp|² from 1.
    pub norm_tolerance: f64,
    /// Register values whose probability exceeds this count as support.
    pub support_threshold: f64,
    /// Maximum total layout width in bits (at most 64).
    pub max_width: u32,
    /// Maximum number of stored amplitudes.
    pub max_support: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            prune_threshold: 1e-12,
            norm_tolerance: 1e-9,
            support_threshold: 1e-12,
            max_width: 40,
            max_support: 1 << 26,
        }
    }
}

/// Ordered register widths: group register, output register, then ancillas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    widths: Vec<u32>,
    offsets: Vec<u32>,
    total: u32,
}

impl RegisterLayout {
    pub fn new(widths: &[u32]) -> Result<Self> {
        Self::with_cap(widths, SimConfig::default().max_width)
    }

    pub fn with_cap(widths: &[u32], cap: u32) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::InvalidArgument("layout needs at least one register".into()));
        }
        let total: u32 = widths.iter().sum();
        let cap = cap.min(64);
        if total > cap {
            return Err(Error::LayoutTooWide { width: total, cap });
        }
        let offsets = widths
            .iter()
            .scan(0u32, |acc, &w| {
                let o = *acc;
                *acc += w;
                Some(o)
            })
            .collect();
        Ok(Self {
            widths: widths.to_vec(),
            offsets,
            total,
        })
    }

    pub fn registers(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[u32] {
        &self.widths
    }

    pub fn width(&self, register: usize) -> Result<u32> {
        self.widths
            .get(register)
            .copied()
            .ok_or(Error::UnknownRegister(register))
    }

    pub fn total_width(&self) -> u32 {
        self.total
    }

    fn mask(&self, register: usize) -> u64 {
        low_mask(self.widths[register]) << self.offsets[register]
    }

    fn field(&self, label: u64, register: usize) -> u64 {
        (label >> self.offsets[register]) & low_mask(self.widths[register])
    }

    fn bit_mask(&self, q: Qubit) -> Result<u64> {
        let width = self.width(q.register)?;
        if q.bit as u32 >= width {
            return Err(Error::UnknownBit {
                register: q.register,
                bit: q.bit,
                width,
            });
        }
        Ok(1u64 << (self.offsets[q.register] + q.bit as u32))
    }

    /// Packs per-register values into a label.
    pub fn pack(&self, values: &[u64]) -> Result<u64> {
        if values.len() != self.registers() {
            return Err(Error::DimensionMismatch {
                left: self.registers(),
                right: values.len(),
            });
        }
        let mut label = 0u64;
        for (r, &v) in values.iter().enumerate() {
            if v > low_mask(self.widths[r]) {
                return Err(Error::ValueOutOfRange {
                    value: v,
                    width: self.widths[r],
                });
            }
            label |= v << self.offsets[r];
        }
        Ok(label)
    }

    pub fn unpack(&self, label: u64) -> Vec<u64> {
        (0..self.registers()).map(|r| self.field(label, r)).collect()
    }
}

fn low_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// A single qubit: bit `bit` (0 = component 1) of register `register`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Qubit {
    pub register: usize,
    pub bit: usize,
}

impl Qubit {
    pub fn new(register: usize, bit: usize) -> Self {
        Self { register, bit }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PredicateKind {
    Bit(usize),
    Equals(u64),
    Constant(bool),
    Opaque,
}

/// A pure Boolean function of one register's value.
#[derive(Clone)]
pub struct BooleanPredicate {
    f: Arc<dyn Fn(u64) -> bool + Send + Sync>,
    kind: PredicateKind,
}

impl BooleanPredicate {
    pub fn new(f: impl Fn(u64) -> bool + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            kind: PredicateKind::Opaque,
        }
    }

    /// χᵢ(g) = gᵢ, with `index` 0 for the first component.
    pub fn bit(index: usize) -> Self {
        Self {
            f: Arc::new(move |v| index < 64 && (v >> index) & 1 == 1),
            kind: PredicateKind::Bit(index),
        }
    }

    pub fn equals(value: u64) -> Self {
        Self {
            f: Arc::new(move |v| v == value),
            kind: PredicateKind::Equals(value),
        }
    }

    pub fn constant(value: bool) -> Self {
        Self {
            f: Arc::new(move |_| value),
            kind: PredicateKind::Constant(value),
        }
    }

    pub fn eval(&self, value: u64) -> bool {
        (self.f)(value)
    }
}

impl fmt::Debug for BooleanPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PredicateKind::Bit(i) => write!(f, "BooleanPredicate::bit({i})"),
            PredicateKind::Equals(v) => write!(f, "BooleanPredicate::equals({v})"),
            PredicateKind::Constant(b) => write!(f, "BooleanPredicate::constant({b})"),
            PredicateKind::Opaque => f.write_str("BooleanPredicate(..)"),
        }
    }
}

type Block = Vec<(u64, Complex64)>;
type Mix = [[Complex64; 2]; 2];

fn hadamard_mix() -> Mix {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

/// (−1)^popcount(x)
fn parity_sign(x: u64) -> f64 {
    if x.count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// 2^(−bits/2)
fn wht_scale(bits: u32) -> f64 {
    0.5f64.powf(bits as f64 / 2.0)
}

/// A normalized state as a sparse map from basis labels to amplitudes.
///
/// Register 0 is stored in a mixed basis: bits listed in the frame mask hold
/// Walsh–Hadamard coefficients instead of computational-basis values. The
/// represented state is W_F applied to the stored amplitudes, so W₂ⁿ on
/// register 0 only toggles the mask. Every read converts back first.
#[derive(Clone)]
pub struct SparseState {
    layout: RegisterLayout,
    config: SimConfig,
    frame: u64,
    // label bits outside register 0 -> (register-0 value, amplitude)
    blocks: FxHashMap<u64, Block>,
}

impl SparseState {
    /// |0…0⟩ on the given layout.
    pub fn zero(layout: RegisterLayout) -> Self {
        Self::zero_with_config(layout, SimConfig::default())
    }

    pub fn zero_with_config(layout: RegisterLayout, config: SimConfig) -> Self {
        let mut blocks = FxHashMap::default();
        blocks.insert(0u64, vec![(0u64, Complex64::new(1.0, 0.0))]);
        Self {
            layout,
            config,
            frame: 0,
            blocks,
        }
    }

    /// Builds a state from explicit amplitudes, merging repeated labels and
    /// normalizing the result.
    pub fn from_amplitudes<I>(layout: RegisterLayout, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u64>, Complex64)>,
    {
        let mut merged: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (values, amp) in entries {
            *merged.entry(layout.pack(&values)?).or_default() += amp;
        }
        let norm = merged.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let config = SimConfig::default();
        let mask0 = layout.mask(0);
        let mut blocks: FxHashMap<u64, Block> = FxHashMap::default();
        for (label, amp) in merged {
            let amp = amp / norm;
            if amp.norm() >= config.prune_threshold {
                blocks.entry(label & !mask0).or_default().push((label & mask0, amp));
            }
        }
        Ok(Self {
            layout,
            config,
            frame: 0,
            blocks,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn set_config(&mut self, config: SimConfig) {
        self.config = config;
    }

    /// Register-0 bits currently stored in the Hadamard basis.
    pub fn frame(&self) -> u64 {
        self.frame
    }

    /// Number of nonzero amplitudes in the computational basis.
    pub fn support_size(&self) -> usize {
        self.real_view().stored_size()
    }

    /// Number of amplitudes held in the current representation.
    pub fn stored_size(&self) -> usize {
        self.blocks.values().map(Vec::len).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.blocks.values().flatten().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn check_norm(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() <= self.config.norm_tolerance {
            Ok(())
        } else {
            Err(Error::PromiseViolation(format!("state norm² drifted to {n}")))
        }
    }

    /// Packed computational-basis labels and amplitudes in unspecified order.
    pub fn iter(&self) -> std::vec::IntoIter<(u64, Complex64)> {
        let view = self.real_view();
        let out: Vec<_> = view
            .blocks
            .iter()
            .flat_map(|(&key, block)| block.iter().map(move |&(x, a)| (key | x, a)))
            .collect();
        out.into_iter()
    }

    /// Per-register labels and amplitudes sorted by label tuple.
    pub fn entries(&self) -> Vec<(Vec<u64>, Complex64)> {
        let mut out: Vec<_> = self.iter().map(|(l, a)| (self.layout.unpack(l), a)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn amplitude(&self, values: &[u64]) -> Result<Complex64> {
        let label = self.layout.pack(values)?;
        let mask0 = self.layout.mask(0);
        let x = label & mask0;
        let Some(block) = self.blocks.get(&(label & !mask0)) else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        Ok(self.block_amplitude(block, x))
    }

    /// Computational-basis amplitude at register-0 value `z` of one block.
    fn block_amplitude(&self, block: &[(u64, Complex64)], z: u64) -> Complex64 {
        let f = self.frame;
        let scale = wht_scale(f.count_ones());
        let real = z & !f;
        block
            .iter()
            .filter(|(x, _)| x & !f == real)
            .map(|&(x, a)| a * parity_sign(x & z & f))
            .sum::<Complex64>()
            * scale
    }

    /// ⟨self|other⟩ over identical layouts.
    pub fn inner_product(&self, other: &SparseState) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::InvalidArgument("layouts differ".into()));
        }
        let (mine, theirs) = (self.real_view(), other.real_view());
        let mut acc = Complex64::new(0.0, 0.0);
        for (key, block) in &mine.blocks {
            let Some(other_block) = theirs.blocks.get(key) else { continue };
            let lookup: FxHashMap<u64, Complex64> = other_block.iter().copied().collect();
            for (x, a) in block {
                if let Some(b) = lookup.get(x) {
                    acc += a.conj() * b;
                }
            }
        }
        Ok(acc)
    }

    /// One line per label, "(r0,r1,…): re+im i", sorted by label.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (values, amp) in self.entries() {
            let labels: Vec<String> = values.iter().map(u64::to_string).collect();
            let re = if amp.re == 0.0 { 0.0 } else { amp.re };
            let im = if amp.im == 0.0 { 0.0 } else { amp.im };
            let _ = writeln!(s, "({}): {re:.6}{im:+.6}i", labels.join(","));
        }
        s
    }

    fn check_register(&self, register: usize) -> Result<u32> {
        self.layout.width(register)
    }

    fn check_support(&self, size: usize) -> Result<()> {
        if size > self.config.max_support {
            Err(Error::SupportCap {
                size,
                cap: self.config.max_support,
            })
        } else {
            Ok(())
        }
    }

    fn keep(&self, a: Complex64) -> bool {
        let t = self.config.prune_threshold;
        a.norm_sqr() >= t * t
    }

    /// The same state with every register-0 bit in the computational basis.
    fn real_view(&self) -> Cow<'_, SparseState> {
        if self.frame == 0 {
            return Cow::Borrowed(self);
        }
        let mut s = self.clone();
        s.config.max_support = usize::MAX;
        s.to_computational(s.frame).expect("uncapped conversion");
        s.config = self.config;
        Cow::Owned(s)
    }

    /// Moves the listed register-0 bits into the computational basis.
    fn to_computational(&mut self, bits: u64) -> Result<()> {
        let mut todo = bits & self.frame;
        while todo != 0 {
            let bit = todo & todo.wrapping_neg();
            self.mix_bit(bit, &hadamard_mix())?;
            self.frame ^= bit;
            todo ^= bit;
        }
        Ok(())
    }

    /// Stores the listed register-0 bits in the Hadamard basis (`hadamard`)
    /// or the computational basis. Changes the representation only.
    pub fn set_basis(&mut self, bits: u64, hadamard: bool) -> Result<()> {
        let bits = bits & self.layout.mask(0);
        if hadamard {
            let mut todo = bits & !self.frame;
            while todo != 0 {
                let bit = todo & todo.wrapping_neg();
                self.mix_bit(bit, &hadamard_mix())?;
                self.frame ^= bit;
                todo ^= bit;
            }
            Ok(())
        } else {
            self.to_computational(bits)
        }
    }

    /// Applies a 2×2 matrix to the stored coefficients of one register-0 bit.
    fn mix_bit(&mut self, bit: u64, m: &Mix) -> Result<()> {
        let mut pairing = Pairing::new(self.layout.widths[0]);
        let mut out: FxHashMap<u64, Block> = FxHashMap::default();
        out.reserve(self.blocks.len());
        let (mut lo, mut hi) = (Block::new(), Block::new());
        let mut total = 0usize;
        for (&key, block) in &self.blocks {
            lo.clear();
            hi.clear();
            for &(x, a) in block {
                if x & bit == 0 {
                    lo.push((x, a));
                } else {
                    hi.push((x ^ bit, a));
                }
            }
            let merged = pairing.merge(&lo, &hi);
            let mut next = Vec::with_capacity(merged.len() * 2);
            for &(x, a0, a1) in merged {
                let n0 = m[0][0] * a0 + m[0][1] * a1;
                let n1 = m[1][0] * a0 + m[1][1] * a1;
                if self.keep(n0) {
                    next.push((x, n0));
                }
                if self.keep(n1) {
                    next.push((x | bit, n1));
                }
            }
            total += next.len();
            self.check_support(total)?;
            if !next.is_empty() {
                out.insert(key, next);
            }
        }
        self.blocks = out;
        Ok(())
    }

    /// Applies W₂ to every qubit of `register`; self-inverse.
    pub fn walsh_hadamard(&mut self, register: usize) -> Result<()> {
        let width = self.check_register(register)?;
        if width == 0 {
            return Ok(());
        }
        if register == 0 {
            self.frame ^= self.layout.mask(0);
        } else {
            for bit in 0..width as usize {
                self.hadamard_outside_primary(Qubit::new(register, bit))?;
            }
        }
        Ok(())
    }

    /// W₂ on a single qubit outside register 0: pairs blocks whose keys differ
    /// in that bit and combines them entry by entry.
    fn hadamard_outside_primary(&mut self, q: Qubit) -> Result<()> {
        let bit = self.layout.bit_mask(q)?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut pairing = Pairing::new(self.layout.widths[0]);
        let mut bases: Vec<u64> = self.blocks.keys().map(|k| k & !bit).collect();
        bases.sort_unstable();
        bases.dedup();
        let mut out: FxHashMap<u64, Block> = FxHashMap::default();
        let mut total = 0usize;
        for base in bases {
            let empty = Vec::new();
            let b0 = self.blocks.get(&base).unwrap_or(&empty);
            let b1 = self.blocks.get(&(base | bit)).unwrap_or(&empty);
            let merged = pairing.merge(b0, b1);
            let mut n0 = Vec::with_capacity(merged.len());
            let mut n1 = Vec::with_capacity(merged.len());
            for &(x, a0, a1) in merged {
                let (p, m) = ((a0 + a1) * s, (a0 - a1) * s);
                if self.keep(p) {
                    n0.push((x, p));
                }
                if self.keep(m) {
                    n1.push((x, m));
                }
            }
            total += n0.len() + n1.len();
            self.check_support(total)?;
            if !n0.is_empty() {
                out.insert(base, n0);
            }
            if !n1.is_empty() {
                out.insert(base | bit, n1);
            }
        }
        self.blocks = out;
        Ok(())
    }

    /// U_f: |…x…y…⟩ ↦ |…x…y ⊕ f(x)…⟩ with x read from `source` and y in `target`.
    pub fn apply_function<F>(&mut self, f: F, source: usize, target: usize) -> Result<()>
    where
        F: Fn(u64) -> u64,
    {
        self.check_register(source)?;
        let tw = self.check_register(target)?;
        if source == target {
            return Err(Error::SameRegister);
        }
        let limit = low_mask(tw);
        let layout = self.layout.clone();
        let toff = layout.offsets[target];
        let eval = |v: u64| -> Result<u64> {
            let y = f(v);
            if y > limit {
                Err(Error::ValueOutOfRange { value: y, width: tw })
            } else {
                Ok(y)
            }
        };
        if target == 0 {
            let mut updates = Vec::with_capacity(self.blocks.len());
            for &key in self.blocks.keys() {
                updates.push((key, eval(layout.field(key, source))?));
            }
            let frame = self.frame;
            for (key, y) in updates {
                if y != 0 {
                    for e in self.blocks.get_mut(&key).expect("key exists") {
                        xor_in_frame(e, y, frame);
                    }
                }
            }
            Ok(())
        } else if source == 0 {
            self.to_computational(self.frame)?;
            let mut out: FxHashMap<u64, Block> = FxHashMap::default();
            for (&key, block) in &self.blocks {
                for &(x, a) in block {
                    let y = eval(x)?;
                    out.entry(key ^ (y << toff)).or_default().push((x, a));
                }
            }
            self.blocks = out;
            Ok(())
        } else {
            let mut moved = Vec::with_capacity(self.blocks.len());
            for &key in self.blocks.keys() {
                moved.push((key, key ^ (eval(layout.field(key, source))? << toff)));
            }
            let mut old = std::mem::take(&mut self.blocks);
            for (from, to) in moved {
                let block = old.remove(&from).expect("key exists");
                self.blocks.insert(to, block);
            }
            Ok(())
        }
    }

    /// Multiplies by `phase` every amplitude whose `register` value satisfies χ.
    pub fn phase_on_predicate(
        &mut self,
        register: usize,
        predicate: &BooleanPredicate,
        phase: Complex64,
    ) -> Result<()> {
        self.check_register(register)?;
        check_phase(phase)?;
        if register != 0 {
            let layout = &self.layout;
            for (&key, block) in self.blocks.iter_mut() {
                if predicate.eval(layout.field(key, register)) {
                    for (_, a) in block.iter_mut() {
                        *a *= phase;
                    }
                }
            }
            return Ok(());
        }
        let mask0 = self.layout.mask(0);
        match predicate.kind {
            PredicateKind::Constant(false) => Ok(()),
            PredicateKind::Constant(true) => {
                self.blocks.values_mut().flatten().for_each(|(_, a)| *a *= phase);
                Ok(())
            }
            PredicateKind::Bit(i) if i >= 64 || (1u64 << i) & mask0 == 0 => Ok(()),
            PredicateKind::Bit(i) if self.frame & (1u64 << i) != 0 => {
                let one = Complex64::new(1.0, 0.0);
                let (p, q) = ((one + phase) * 0.5, (one - phase) * 0.5);
                self.mix_bit(1u64 << i, &[[p, q], [q, p]])
            }
            PredicateKind::Equals(v) if v & !mask0 != 0 => Ok(()),
            PredicateKind::Equals(v) => {
                let keys: Vec<u64> = self.blocks.keys().copied().collect();
                self.rank_one_phase(&keys, v, phase)
            }
            _ => {
                self.to_computational(self.frame)?;
                for (x, a) in self.blocks.values_mut().flatten() {
                    if predicate.eval(*x) {
                        *a *= phase;
                    }
                }
                Ok(())
            }
        }
    }

    /// Multiplies the register-0 component |v⟩ by `phase` inside the listed
    /// blocks: c ↦ c + (phase − 1)⟨w|c⟩w with w the stored form of |v⟩.
    fn rank_one_phase(&mut self, keys: &[u64], v: u64, phase: Complex64) -> Result<()> {
        let f = self.frame;
        let k = f.count_ones();
        if k >= 63 {
            return Err(Error::SupportCap {
                size: usize::MAX,
                cap: self.config.max_support,
            });
        }
        let scale = wht_scale(k);
        let real = v & !f;
        let mut updated: Vec<(u64, Block)> = Vec::new();
        let mut total = self.stored_size();
        for &key in keys {
            let block = &self.blocks[&key];
            let overlap: Complex64 = block
                .iter()
                .filter(|(x, _)| x & !f == real)
                .map(|&(x, a)| a * parity_sign(x & v & f))
                .sum::<Complex64>()
                * scale;
            if overlap.norm_sqr() == 0.0 {
                continue;
            }
            let coef = (phase - 1.0) * overlap * scale;
            let mut next = block.clone();
            let mut index: FxHashMap<u64, usize> = FxHashMap::default();
            for (i, &(x, _)) in next.iter().enumerate() {
                if x & !f == real {
                    index.insert(x, i);
                }
            }
            total += (1usize << k).saturating_sub(index.len());
            self.check_support(total)?;
            let mut sub = 0u64;
            loop {
                let x = real | sub;
                let delta = coef * parity_sign(x & v & f);
                match index.get(&x) {
                    Some(&i) => next[i].1 += delta,
                    None => next.push((x, delta)),
                }
                sub = sub.wrapping_sub(f) & f;
                if sub == 0 {
                    break;
                }
            }
            next.retain(|&(_, a)| self.keep(a));
            updated.push((key, next));
        }
        for (key, block) in updated {
            if block.is_empty() {
                self.blocks.remove(&key);
            } else {
                self.blocks.insert(key, block);
            }
        }
        Ok(())
    }

    /// Multiplies by `phase` the amplitudes whose listed registers are all zero.
    pub fn phase_on_zero(&mut self, registers: &[usize], phase: Complex64) -> Result<()> {
        check_phase(phase)?;
        let mut key_mask = 0u64;
        let mut primary = false;
        for &r in registers {
            self.check_register(r)?;
            if r == 0 {
                primary = true;
            } else {
                key_mask |= self.layout.mask(r);
            }
        }
        let keys: Vec<u64> = self.blocks.keys().copied().filter(|k| k & key_mask == 0).collect();
        if primary {
            return self.rank_one_phase(&keys, 0, phase);
        }
        for key in keys {
            for (_, a) in self.blocks.get_mut(&key).expect("key exists") {
                *a *= phase;
            }
        }
        Ok(())
    }

    /// Flips `target` on every label whose `control` bit is 1.
    pub fn controlled_not(&mut self, control: Qubit, target: Qubit) -> Result<()> {
        let cmask = self.layout.bit_mask(control)?;
        let tmask = self.layout.bit_mask(target)?;
        if cmask == tmask {
            return Err(Error::OverlappingQubits);
        }
        match (control.register == 0, target.register == 0) {
            (true, true) => {
                self.to_computational(cmask)?;
                let frame = self.frame;
                for e in self.blocks.values_mut().flatten() {
                    if e.0 & cmask != 0 {
                        xor_in_frame(e, tmask, frame);
                    }
                }
            }
            (false, true) => {
                let frame = self.frame;
                for (&key, block) in self.blocks.iter_mut() {
                    if key & cmask != 0 {
                        for e in block.iter_mut() {
                            xor_in_frame(e, tmask, frame);
                        }
                    }
                }
            }
            (false, false) => {
                let old = std::mem::take(&mut self.blocks);
                for (key, block) in old {
                    let to = if key & cmask != 0 { key ^ tmask } else { key };
                    self.blocks.insert(to, block);
                }
            }
            (true, false) => {
                self.to_computational(cmask)?;
                self.split_blocks(|x| x & cmask != 0, tmask);
            }
        }
        Ok(())
    }

    /// Moves entries whose register-0 value satisfies `moves` to the block
    /// keyed `key ^ key_xor`.
    fn split_blocks(&mut self, moves: impl Fn(u64) -> bool, key_xor: u64) {
        let old = std::mem::take(&mut self.blocks);
        let mut out: FxHashMap<u64, Block> = FxHashMap::default();
        out.reserve(old.len() * 2);
        for (key, block) in old {
            let (go, stay): (Block, Block) = block.into_iter().partition(|&(x, _)| moves(x));
            for (k, part) in [(key, stay), (key ^ key_xor, go)] {
                if part.is_empty() {
                    continue;
                }
                match out.entry(k) {
                    std::collections::hash_map::Entry::Vacant(v) => {
                        v.insert(part);
                    }
                    std::collections::hash_map::Entry::Occupied(mut o) => o.get_mut().extend(part),
                }
            }
        }
        self.blocks = out;
    }

    /// |x⟩ ↦ |x ⊕ y⟩ on `target` for labels whose `condition` bit is 1.
    pub fn conditional_xor(&mut self, condition: Qubit, y: &GroupElement, target: usize) -> Result<()> {
        let cmask = self.layout.bit_mask(condition)?;
        let tw = self.check_register(target)?;
        if y.dimension() != tw as usize {
            return Err(Error::DimensionMismatch {
                left: tw as usize,
                right: y.dimension(),
            });
        }
        let shifted = y.as_index() << self.layout.offsets[target];
        if shifted & cmask != 0 {
            return Err(Error::OverlappingQubits);
        }
        match (condition.register == 0, target == 0) {
            (true, true) => {
                self.to_computational(cmask)?;
                let frame = self.frame;
                for e in self.blocks.values_mut().flatten() {
                    if e.0 & cmask != 0 {
                        xor_in_frame(e, shifted, frame);
                    }
                }
            }
            (false, true) => {
                let frame = self.frame;
                for (&key, block) in self.blocks.iter_mut() {
                    if key & cmask != 0 {
                        for e in block.iter_mut() {
                            xor_in_frame(e, shifted, frame);
                        }
                    }
                }
            }
            (false, false) => {
                let old = std::mem::take(&mut self.blocks);
                for (key, block) in old {
                    let to = if key & cmask != 0 { key ^ shifted } else { key };
                    self.blocks.insert(to, block);
                }
            }
            (true, false) => {
                self.to_computational(cmask)?;
                self.split_blocks(|x| x & cmask != 0, shifted);
            }
        }
        Ok(())
    }

    /// Marginal distribution of one register, keyed by value.
    pub fn probabilities(&self, register: usize) -> Result<BTreeMap<u64, f64>> {
        let width = self.check_register(register)?;
        if register != 0 {
            let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
            for (&key, block) in &self.blocks {
                let mass: f64 = block.iter().map(|(_, a)| a.norm_sqr()).sum();
                *acc.entry(self.layout.field(key, register)).or_default() += mass;
            }
            return Ok(acc);
        }
        let view = self.real_view();
        if width <= 16 {
            let mut dense = vec![0.0f64; 1usize << width];
            for &(x, a) in view.blocks.values().flatten() {
                dense[x as usize] += a.norm_sqr();
            }
            return Ok(dense
                .into_iter()
                .enumerate()
                .filter(|&(_, p)| p > 0.0)
                .map(|(v, p)| (v as u64, p))
                .collect());
        }
        let mut acc: FxHashMap<u64, f64> = FxHashMap::default();
        for &(x, a) in view.blocks.values().flatten() {
            *acc.entry(x).or_default() += a.norm_sqr();
        }
        Ok(acc.into_iter().collect())
    }

    /// Total probability of the labels whose `register` value satisfies χ.
    pub fn mass_where(&self, register: usize, predicate: &BooleanPredicate) -> Result<f64> {
        self.check_register(register)?;
        if register != 0 {
            return Ok(self
                .blocks
                .iter()
                .filter(|(&key, _)| predicate.eval(self.layout.field(key, register)))
                .flat_map(|(_, b)| b.iter())
                .map(|(_, a)| a.norm_sqr())
                .sum());
        }
        if let PredicateKind::Bit(i) = predicate.kind {
            if i < 64 && self.frame & (1u64 << i) != 0 {
                // ⟨c|(I − X_i)/2|c⟩ in the stored basis
                let bit = 1u64 << i;
                let mut pairing = Pairing::new(self.layout.widths[0]);
                let (mut lo, mut hi) = (Block::new(), Block::new());
                let mut cross = 0.0;
                for block in self.blocks.values() {
                    lo.clear();
                    hi.clear();
                    for &(x, a) in block {
                        if x & bit == 0 {
                            lo.push((x, a));
                        } else {
                            hi.push((x ^ bit, a));
                        }
                    }
                    for &(_, a0, a1) in pairing.merge(&lo, &hi) {
                        cross += (a0.conj() * a1).re;
                    }
                }
                return Ok(0.5 * (self.norm_sqr() - 2.0 * cross));
            }
        }
        let usable = match predicate.kind {
            PredicateKind::Bit(i) => i >= 64 || self.frame & (1u64 << i) == 0,
            PredicateKind::Constant(_) => true,
            _ => self.frame == 0,
        };
        let view = if usable { Cow::Borrowed(self) } else { self.real_view() };
        Ok(view
            .blocks
            .values()
            .flatten()
            .filter(|(x, _)| predicate.eval(*x))
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Register values carrying probability above the support threshold.
    pub fn support_values(&self, register: usize) -> Result<BTreeSet<u64>> {
        let t = self.config.support_threshold;
        Ok(self
            .probabilities(register)?
            .into_iter()
            .filter(|&(_, p)| p > t)
            .map(|(v, _)| v)
            .collect())
    }

    /// Measures `register`, collapsing and renormalizing the state.
    pub fn measure<R: Rng + ?Sized>(&mut self, register: usize, rng: &mut R) -> Result<u64> {
        self.check_register(register)?;
        if register == 0 && self.frame != 0 {
            return self.measure_primary_in_frame(rng);
        }
        let probs = self.probabilities(register)?;
        let outcome = sample(&probs, rng)?;
        let total: f64 = probs.values().sum();
        let scale = (total / probs[&outcome]).sqrt();
        let layout = self.layout.clone();
        let old = std::mem::take(&mut self.blocks);
        for (key, mut block) in old {
            if register == 0 {
                block.retain(|&(x, _)| x == outcome);
            } else if layout.field(key, register) != outcome {
                continue;
            }
            for (_, a) in block.iter_mut() {
                *a *= scale;
            }
            if !block.is_empty() {
                self.blocks.insert(key, block);
            }
        }
        Ok(outcome)
    }

    /// Picks a block by its weight, converts only that block to read off the
    /// register-0 outcome, then projects every block onto it.
    fn measure_primary_in_frame<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<u64> {
        let weights: BTreeMap<u64, f64> = self
            .blocks
            .iter()
            .map(|(&k, b)| (k, b.iter().map(|(_, a)| a.norm_sqr()).sum()))
            .collect();
        let key = sample(&weights, rng)?;
        let mut single = Self {
            layout: self.layout.clone(),
            config: SimConfig {
                max_support: usize::MAX,
                ..self.config
            },
            frame: self.frame,
            blocks: FxHashMap::default(),
        };
        single.blocks.insert(key, self.blocks[&key].clone());
        single.to_computational(single.frame)?;
        let probs: BTreeMap<u64, f64> = single.blocks[&key].iter().map(|&(x, a)| (x, a.norm_sqr())).collect();
        let outcome = sample(&probs, rng)?;
        let mut out: FxHashMap<u64, Block> = FxHashMap::default();
        let mut total = 0.0;
        for (&k, block) in &self.blocks {
            let a = self.block_amplitude(block, outcome);
            if self.keep(a) {
                total += a.norm_sqr();
                out.insert(k, vec![(outcome, a)]);
            }
        }
        let scale = 1.0 / total.sqrt();
        for (_, a) in out.values_mut().flatten() {
            *a *= scale;
        }
        self.blocks = out;
        self.frame = 0;
        Ok(outcome)
    }
}

impl fmt::Debug for SparseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SparseState{:?}", self.layout.widths)?;
        f.write_str(&self.dump())
    }
}

/// Draws a key with probability proportional to its weight.
fn sample<R: Rng + ?Sized>(weights: &BTreeMap<u64, f64>, rng: &mut R) -> Result<u64> {
    let total: f64 = weights.values().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let mut r = rng.gen::<f64>() * total;
    for (&v, &p) in weights {
        if r < p {
            return Ok(v);
        }
        r -= p;
    }
    Ok(*weights.keys().next_back().expect("nonempty"))
}

/// X^y on register 0 in the stored basis: flips the computational bits of
/// `y` and turns its Hadamard-basis bits into a sign.
fn xor_in_frame(e: &mut (u64, Complex64), y: u64, frame: u64) {
    if (e.0 & y & frame).count_ones() & 1 == 1 {
        e.1 = -e.1;
    }
    e.0 ^= y & !frame;
}

fn check_phase(phase: Complex64) -> Result<()> {
    let m = phase.norm();
    if (m - 1.0).abs() > 1e-12 {
        Err(Error::NonUnitPhase(m))
    } else {
        Ok(())
    }
}

/// Joins two blocks on their register-0 value.
struct Pairing {
    dense: Option<Vec<u32>>,
    sparse: FxHashMap<u64, usize>,
    merged: Vec<(u64, Complex64, Complex64)>,
}

impl Pairing {
    fn new(width: u32) -> Self {
        Self {
            dense: (width <= DENSE_SCRATCH_BITS).then(|| vec![u32::MAX; 1usize << width]),
            sparse: FxHashMap::default(),
            merged: Vec::new(),
        }
    }

    fn merge(&mut self, b0: &[(u64, Complex64)], b1: &[(u64, Complex64)]) -> &[(u64, Complex64, Complex64)] {
        let zero = Complex64::new(0.0, 0.0);
        self.merged.clear();
        self.merged.extend(b0.iter().map(|&(x, a)| (x, a, zero)));
        match &mut self.dense {
            Some(pos) => {
                for (i, &(x, _)) in b0.iter().enumerate() {
                    pos[x as usize] = i as u32;
                }
                for &(x, a) in b1 {
                    match pos[x as usize] {
                        u32::MAX => self.merged.push((x, zero, a)),
                        i => self.merged[i as usize].2 = a,
                    }
                }
                for &(x, _) in b0 {
                    pos[x as usize] = u32::MAX;
                }
            }
            None => {
                self.sparse.clear();
                self.sparse.extend(b0.iter().enumerate().map(|(i, &(x, _))| (x, i)));
                for &(x, a) in b1 {
                    match self.sparse.get(&x) {
                        Some(&i) => self.merged[i].2 = a,
                        None => self.merged.push((x, zero, a)),
                    }
                }
            }
        }
        &self.merged
    }
}
