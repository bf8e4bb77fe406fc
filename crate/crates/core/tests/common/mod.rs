//! A dense 2^width state-vector reference used to cross-check `SparseState`
//! and gate lists.

#![allow(dead_code)]

use exact_simon::oracle::PromiseOracle;
use exact_simon::qstate::{BooleanPredicate, Qubit, RegisterLayout, SparseState};
use exact_simon::simon::{Gate, Procedure};
use num_complex::Complex64;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct DenseState {
    pub widths: Vec<u32>,
    pub offsets: Vec<u32>,
    pub amps: Vec<Complex64>,
}

fn mask(width: u32) -> u64 {
    (1u64 << width) - 1
}

impl DenseState {
    pub fn zero(widths: &[u32]) -> Self {
        let offsets = widths
            .iter()
            .scan(0u32, |acc, &w| {
                let o = *acc;
                *acc += w;
                Some(o)
            })
            .collect();
        let total: u32 = widths.iter().sum();
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << total];
        amps[0] = Complex64::new(1.0, 0.0);
        Self {
            widths: widths.to_vec(),
            offsets,
            amps,
        }
    }

    pub fn random<R: Rng + ?Sized>(widths: &[u32], support: usize, rng: &mut R) -> Self {
        let mut s = Self::zero(widths);
        s.amps[0] = Complex64::new(0.0, 0.0);
        let dim = s.amps.len();
        for _ in 0..support.max(1) {
            let i = rng.gen_range(0..dim);
            s.amps[i] += Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let norm = s.norm_sqr().sqrt();
        if norm == 0.0 {
            s.amps[0] = Complex64::new(1.0, 0.0);
        } else {
            s.amps.iter_mut().for_each(|a| *a /= norm);
        }
        s
    }

    pub fn layout(&self) -> RegisterLayout {
        RegisterLayout::new(&self.widths).unwrap()
    }

    pub fn field(&self, label: usize, r: usize) -> u64 {
        (label as u64 >> self.offsets[r]) & mask(self.widths[r])
    }

    fn bit(&self, q: Qubit) -> u64 {
        1u64 << (self.offsets[q.register] + q.bit as u32)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn to_sparse(&self) -> SparseState {
        let layout = self.layout();
        let entries: Vec<(Vec<u64>, Complex64)> = self
            .amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, &a)| (layout.unpack(i as u64), a))
            .collect();
        SparseState::from_amplitudes(layout, entries).unwrap()
    }

    /// max_i |a_i − b_i| against a sparse state over the same layout.
    pub fn distance(&self, s: &SparseState) -> f64 {
        let mut other = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (label, a) in s.iter() {
            other[label as usize] += a;
        }
        self.amps
            .iter()
            .zip(&other)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn walsh_hadamard(&mut self, r: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for b in 0..self.widths[r] {
            let m = 1usize << (self.offsets[r] + b);
            for i in 0..self.amps.len() {
                if i & m == 0 {
                    let (x, y) = (self.amps[i], self.amps[i | m]);
                    self.amps[i] = (x + y) * s;
                    self.amps[i | m] = (x - y) * s;
                }
            }
        }
    }

    pub fn apply_function(&mut self, f: impl Fn(u64) -> u64, source: usize, target: usize) {
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let y = f(self.field(i, source)) & mask(self.widths[target]);
            out[i ^ (y << self.offsets[target]) as usize] += a;
        }
        self.amps = out;
    }

    pub fn phase_on_predicate(&mut self, r: usize, p: &BooleanPredicate, phase: Complex64) {
        for i in 0..self.amps.len() {
            if p.eval(self.field(i, r)) {
                self.amps[i] *= phase;
            }
        }
    }

    pub fn phase_on_zero(&mut self, registers: &[usize], phase: Complex64) {
        for i in 0..self.amps.len() {
            if registers.iter().all(|&r| self.field(i, r) == 0) {
                self.amps[i] *= phase;
            }
        }
    }

    pub fn controlled_not(&mut self, control: Qubit, target: Qubit) {
        let (c, t) = (self.bit(control), self.bit(target));
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let j = if i as u64 & c != 0 { i ^ t as usize } else { i };
            out[j] += a;
        }
        self.amps = out;
    }

    pub fn conditional_xor(&mut self, condition: Qubit, y: u64, target: usize) {
        let c = self.bit(condition);
        let shifted = (y << self.offsets[target]) as usize;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let j = if i as u64 & c != 0 { i ^ shifted } else { i };
            out[j] += a;
        }
        self.amps = out;
    }

    /// Mass of `register` values satisfying χ.
    pub fn mass_where(&self, r: usize, p: &BooleanPredicate) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| p.eval(self.field(*i, r)))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn probabilities(&self, r: usize) -> Vec<f64> {
        let mut p = vec![0.0; 1usize << self.widths[r]];
        for (i, a) in self.amps.iter().enumerate() {
            p[self.field(i, r) as usize] += a.norm_sqr();
        }
        p
    }

    /// Runs a measurement-free gate list; `Gate::Oracle` reads the table
    /// through `peek`, so no queries are counted.
    pub fn run(&mut self, procedure: &Procedure, oracle: Option<&PromiseOracle>) {
        for gate in procedure.gates() {
            match gate {
                Gate::WalshHadamard(r) => self.walsh_hadamard(*r),
                Gate::Oracle { source, target } => {
                    let o = oracle.expect("oracle gate needs an oracle");
                    self.apply_function(|x| o.peek(x), *source, *target)
                }
                Gate::Function { f, source, target } => self.apply_function(|x| f(x), *source, *target),
                Gate::ControlledNot { control, target } => self.controlled_not(*control, *target),
                Gate::ConditionalXor { condition, y, target } => self.conditional_xor(*condition, y.as_index(), *target),
                Gate::PhaseOnPredicate { register, predicate, phase } => {
                    self.phase_on_predicate(*register, predicate, *phase)
                }
                Gate::PhaseOnZero { registers, phase } => self.phase_on_zero(registers, *phase),
                Gate::Basis { .. } => {}
                Gate::Measure(_) => panic!("dense reference runs measurement-free procedures"),
            }
        }
    }
}

/// Applies `steps` random operations to a random state of total width ≤ 12
/// in both simulators (including basis-frame changes and measurements) and
/// returns the largest amplitude or probability deviation seen.
pub fn random_operation_check(seed: u64, steps: usize) -> f64 {
    use exact_simon::gf2::GroupElement;
    use exact_simon::qstate::SimConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let registers = rng.gen_range(1..=3usize);
    let mut widths: Vec<u32> = (0..registers).map(|_| rng.gen_range(1..=4u32)).collect();
    while widths.iter().sum::<u32>() > 12 {
        widths.pop();
    }
    let registers = widths.len();
    let support = rng.gen_range(1..=16usize);
    let mut dense = DenseState::random(&widths, support, &mut rng);
    let mut sparse = dense.to_sparse();
    sparse.set_config(SimConfig {
        prune_threshold: 0.0,
        ..SimConfig::default()
    });
    let mut worst = dense.distance(&sparse);
    let unit = |rng: &mut ChaCha8Rng| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    let qubit = |rng: &mut ChaCha8Rng| {
        let r = rng.gen_range(0..registers);
        Qubit::new(r, rng.gen_range(0..widths[r] as usize))
    };
    for _ in 0..steps {
        match rng.gen_range(0..8) {
            0 => {
                let r = rng.gen_range(0..registers);
                sparse.walsh_hadamard(r).unwrap();
                dense.walsh_hadamard(r);
            }
            1 if registers > 1 => {
                let s = rng.gen_range(0..registers);
                let t = (s + rng.gen_range(1..registers)) % registers;
                let table: Vec<u64> = (0..1u64 << widths[s]).map(|_| rng.gen_range(0..1u64 << widths[t])).collect();
                sparse.apply_function(|x| table[x as usize], s, t).unwrap();
                dense.apply_function(|x| table[x as usize], s, t);
            }
            2 => {
                let r = rng.gen_range(0..registers);
                let w = widths[r];
                let p = match rng.gen_range(0..4) {
                    0 => BooleanPredicate::bit(rng.gen_range(0..w as usize)),
                    1 => BooleanPredicate::equals(rng.gen_range(0..1u64 << w)),
                    2 => BooleanPredicate::constant(rng.gen()),
                    _ => {
                        let set: u64 = rng.gen();
                        BooleanPredicate::new(move |v| set >> (v & 63) & 1 == 1)
                    }
                };
                let phase = unit(&mut rng);
                sparse.phase_on_predicate(r, &p, phase).unwrap();
                dense.phase_on_predicate(r, &p, phase);
                let m = sparse.mass_where(r, &p).unwrap();
                worst = worst.max((m - dense.mass_where(r, &p)).abs());
            }
            3 => {
                let regs: Vec<usize> = (0..registers).filter(|_| rng.gen()).collect();
                let regs = if regs.is_empty() { vec![0] } else { regs };
                let phase = unit(&mut rng);
                sparse.phase_on_zero(&regs, phase).unwrap();
                dense.phase_on_zero(&regs, phase);
            }
            4 => {
                let (c, t) = (qubit(&mut rng), qubit(&mut rng));
                if c != t {
                    sparse.controlled_not(c, t).unwrap();
                    dense.controlled_not(c, t);
                }
            }
            5 => {
                let c = qubit(&mut rng);
                let t = rng.gen_range(0..registers);
                let mut y = rng.gen_range(1..1u64 << widths[t]);
                if c.register == t {
                    y &= !(1u64 << c.bit);
                }
                let g = GroupElement::from_u64(widths[t] as usize, y);
                sparse.conditional_xor(c, &g, t).unwrap();
                dense.conditional_xor(c, y, t);
            }
            6 => {
                let bits = rng.gen_range(0..1u64 << widths[0]);
                sparse.set_basis(bits, rng.gen()).unwrap();
            }
            _ => {
                let r = rng.gen_range(0..registers);
                let probs = dense.probabilities(r);
                let sp = sparse.probabilities(r).unwrap();
                for (v, &p) in probs.iter().enumerate() {
                    worst = worst.max((p - sp.get(&(v as u64)).copied().unwrap_or(0.0)).abs());
                }
                if rng.gen_bool(0.3) {
                    let v = sparse.measure(r, &mut rng).unwrap();
                    let p = probs[v as usize];
                    assert!(p > 0.0, "measured an outcome of zero probability");
                    let s = p.sqrt();
                    for i in 0..dense.amps.len() {
                        if dense.field(i, r) == v {
                            dense.amps[i] /= s;
                        } else {
                            dense.amps[i] = Complex64::new(0.0, 0.0);
                        }
                    }
                }
            }
        }
        worst = worst.max(dense.distance(&sparse));
    }
    worst
}
