//! Classical query-bounded adversaries against Simon's problem.
//!
//! An adversary asks ρ on k distinct points, then guesses γ(s) for a fixed
//! balanced γ. A collision y_i = y_j gives s = x_i ⊕ x_j outright (event ℰ);
//! otherwise every candidate outside W = {x_i ⊕ x_j} ∪ {0} is equally likely
//! and the best it can do is a majority vote of γ over the candidates.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::GroupElement;
use crate::oracle::{random_simon_instance, BalancedFunction, PromiseOracle, SimonOracle};

/// Widest domain the adversary samples from.
pub const MAX_ADVERSARY_BITS: usize = 62;
/// Widest domain for the brute-force compatible-function count.
pub const MAX_COUNT_BITS: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryOutcome {
    pub queries_used: u64,
    /// Event ℰ: two answers coincided.
    pub collision_found: bool,
    pub guess: bool,
    pub correct: bool,
}

/// The secret s of a Simon instance (|H₀| = 2).
pub fn secret(oracle: &PromiseOracle) -> Result<GroupElement> {
    match oracle.hidden_basis().vectors() {
        [s] => Ok(s.clone()),
        v => Err(Error::PromiseViolation(format!(
            "expected a hidden subgroup of order 2, got rank {}",
            v.len()
        ))),
    }
}

/// Nonadaptive majority-vote adversary with `budget` distinct uniform queries.
pub fn collision_adversary<R: Rng + ?Sized>(
    oracle: &PromiseOracle,
    gamma: BalancedFunction,
    budget: u64,
    rng: &mut R,
) -> Result<AdversaryOutcome> {
    let n = oracle.dimension();
    if n > MAX_ADVERSARY_BITS {
        return Err(Error::InvalidArgument(format!(
            "adversary supports n ≤ {MAX_ADVERSARY_BITS}, got {n}"
        )));
    }
    let domain = 1u64 << n;
    if budget > domain {
        return Err(Error::BudgetTooLarge { budget, domain });
    }
    let s = secret(oracle)?;
    let points = rand::seq::index::sample(rng, domain as usize, budget as usize);
    let mut seen: FxHashMap<u64, u64> = FxHashMap::default();
    let mut xs = Vec::with_capacity(budget as usize);
    let mut found = None;
    for x in points.iter().map(|x| x as u64) {
        let y = oracle.evaluate(&GroupElement::from_u64(n, x))?;
        if let Some(&other) = seen.get(&y) {
            found.get_or_insert(x ^ other);
        }
        seen.insert(y, x);
        xs.push(x);
    }
    let guess = match found {
        Some(s_hat) => gamma.eval_word(n, s_hat),
        None => majority_guess(n, gamma, &difference_set(&xs)),
    };
    Ok(AdversaryOutcome {
        queries_used: budget,
        collision_found: found.is_some(),
        guess,
        correct: guess == gamma.eval(&s),
    })
}

/// W = {x_i ⊕ x_j | i < j}.
pub fn difference_set(xs: &[u64]) -> BTreeSet<u64> {
    let mut w = BTreeSet::new();
    for (i, &a) in xs.iter().enumerate() {
        for &b in &xs[i + 1..] {
            w.insert(a ^ b);
        }
    }
    w
}

/// 1 if γ takes the value 1 on more of S = {0,1}ⁿ ∖ (W ∪ {0}) than 0, else 0.
pub fn majority_guess(n: usize, gamma: BalancedFunction, w: &BTreeSet<u64>) -> bool {
    let half = 1u64 << (n - 1);
    let zero_is_one = gamma.eval_word(n, 0) as u64;
    let (w_ones, w_zeros) = w
        .iter()
        .filter(|&&v| v != 0)
        .fold((0u64, 0u64), |(o, z), &v| if gamma.eval_word(n, v) { (o + 1, z) } else { (o, z + 1) });
    let ones = half - zero_is_one - w_ones;
    let zeros = half - (1 - zero_is_one) - w_zeros;
    ones > zeros
}

/// Checks a transcript and returns its difference set W.
fn check_transcript(n: usize, queries: &[(u64, u64)]) -> Result<BTreeSet<u64>> {
    if n == 0 || n > MAX_COUNT_BITS {
        return Err(Error::InvalidArgument(format!(
            "brute-force counting needs 1 ≤ n ≤ {MAX_COUNT_BITS}, got {n}"
        )));
    }
    let xs: Vec<u64> = queries.iter().map(|q| q.0).collect();
    let distinct_x: BTreeSet<u64> = xs.iter().copied().collect();
    let distinct_y: BTreeSet<u64> = queries.iter().map(|q| q.1).collect();
    if distinct_x.len() != queries.len() || distinct_y.len() != queries.len() {
        return Err(Error::InvalidArgument("transcript must have distinct queries and no collision".into()));
    }
    if xs.iter().any(|&x| x >> n != 0) || queries.iter().any(|q| q.1 >> (n - 1) != 0) {
        return Err(Error::InvalidArgument("transcript value outside the domain or codomain".into()));
    }
    Ok(difference_set(&xs))
}

/// Candidates ŝ compatible with a collision-free transcript: S = {0,1}ⁿ ∖ (W ∪ {0}).
pub fn compatible_candidates(n: usize, queries: &[(u64, u64)]) -> Result<Vec<u64>> {
    let w = check_transcript(n, queries)?;
    Ok((1..1u64 << n).filter(|v| !w.contains(v)).collect())
}

/// Number of functions into {0,1}^{n−1} with Simon's promise for s = ŝ that
/// agree with the transcript, by enumerating all (2^{n−1})! of them.
pub fn compatible_function_count(n: usize, queries: &[(u64, u64)], s_hat: u64) -> Result<u64> {
    let w = check_transcript(n, queries)?;
    if s_hat == 0 || s_hat >> n != 0 || w.contains(&s_hat) {
        return Err(Error::IncompatibleCandidate(GroupElement::from_u64(n, s_hat).to_string()));
    }
    // coset representatives: the smaller of {x, x ⊕ ŝ}
    let reps: Vec<u64> = (0..1u64 << n).filter(|&x| x < x ^ s_hat).collect();
    let rep_of = |x: u64| x.min(x ^ s_hat);
    let wanted: Vec<(usize, u64)> = queries
        .iter()
        .map(|&(x, y)| (reps.binary_search(&rep_of(x)).expect("representative"), y))
        .collect();
    let mut labels: Vec<u64> = (0..reps.len() as u64).collect();
    let mut count = 0u64;
    for_each_permutation(&mut labels, |perm| {
        if wanted.iter().all(|&(c, y)| perm[c] == y) {
            count += 1;
        }
    });
    Ok(count)
}

/// (2ⁿ − m − 1)·(2^{n−1} − k)! with m = |W|.
pub fn compatible_function_total(n: usize, k: usize, m: usize) -> u128 {
    let free = (1u128 << (n - 1)) - k as u128;
    let factorial: u128 = (1..=free).product();
    ((1u128 << n) - m as u128 - 1) * factorial
}

/// One explicit compatible function for ŝ: transcript values on X and
/// X ⊕ ŝ, and the remaining labels assigned in order to the rest of the
/// cosets. Returned as a table indexed by x.
pub fn compatible_function(n: usize, queries: &[(u64, u64)], s_hat: u64) -> Result<Vec<u64>> {
    let w = check_transcript(n, queries)?;
    if s_hat == 0 || s_hat >> n != 0 || w.contains(&s_hat) {
        return Err(Error::IncompatibleCandidate(GroupElement::from_u64(n, s_hat).to_string()));
    }
    let mut table = vec![u64::MAX; 1usize << n];
    for &(x, y) in queries {
        table[x as usize] = y;
        table[(x ^ s_hat) as usize] = y;
    }
    let used: BTreeSet<u64> = queries.iter().map(|q| q.1).collect();
    let mut spare = (0..1u64 << (n - 1)).filter(|y| !used.contains(y));
    for x in 0..1u64 << n {
        if table[x as usize] == u64::MAX {
            let y = spare.next().expect("as many spare labels as free cosets");
            table[x as usize] = y;
            table[(x ^ s_hat) as usize] = y;
        }
    }
    Ok(table)
}

/// Heap's algorithm.
fn for_each_permutation(items: &mut [u64], mut visit: impl FnMut(&[u64])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Monte-Carlo estimate of the adversary's success and collision rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefeatReport {
    pub n: usize,
    pub budget: u64,
    pub trials: u64,
    pub gamma: BalancedFunction,
    pub success_rate: f64,
    pub collision_rate: f64,
    /// ½ + 2·2^{−n/3}
    pub bound: f64,
    /// 2^{−n/3}
    pub collision_bound: f64,
    /// Binomial standard error at `bound`.
    pub success_sigma: f64,
    /// Binomial standard error at `collision_bound`.
    pub collision_sigma: f64,
    /// Whether budget ≤ 2^{n/3}.
    pub in_regime: bool,
    pub seed: u64,
}

impl DefeatReport {
    /// Both rates within three standard errors of their ceilings.
    pub fn within_bounds(&self) -> bool {
        self.success_rate <= self.bound + 3.0 * self.success_sigma
            && self.collision_rate <= self.collision_bound + 3.0 * self.collision_sigma
    }
}

fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Runs `trials` independent games, each on a fresh uniformly random Simon
/// instance. Trial t draws from stream t of a ChaCha generator seeded with
/// `seed`, so results do not depend on scheduling.
pub fn defeat_experiment(n: usize, trials: u64, budget: u64, gamma: BalancedFunction, seed: u64) -> Result<DefeatReport> {
    if !(4..=MAX_ADVERSARY_BITS).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "the experiment needs 4 ≤ n ≤ {MAX_ADVERSARY_BITS}, got {n}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is needed".into()));
    }
    let domain = 1u64 << n;
    if budget > domain {
        return Err(Error::BudgetTooLarge { budget, domain });
    }
    let outcomes: Vec<AdversaryOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let oracle = random_simon_instance(n, &mut rng)?;
            collision_adversary(&oracle, gamma, budget, &mut rng)
        })
        .collect::<Result<_>>()?;
    let wins = outcomes.iter().filter(|o| o.correct).count() as f64;
    let hits = outcomes.iter().filter(|o| o.collision_found).count() as f64;
    let third = 2f64.powf(-(n as f64) / 3.0);
    let bound = 0.5 + 2.0 * third;
    Ok(DefeatReport {
        n,
        budget,
        trials,
        gamma,
        success_rate: wins / trials as f64,
        collision_rate: hits / trials as f64,
        bound,
        collision_bound: third,
        success_sigma: binomial_sigma(bound.min(1.0), trials),
        collision_sigma: binomial_sigma(third, trials),
        in_regime: (budget as f64) <= 2f64.powf(n as f64 / 3.0) + 1e-9,
        seed,
    })
}
