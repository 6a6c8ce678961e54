//! Randomized guessing schemes: the designed i.i.d. scheme and the universal
//! empirical-entropy scheme, with exact log-probabilities and exact per-target
//! hit probabilities at small block lengths.
//!
//! RNG contract: every stochastic operation takes an explicit stream of a
//! named counter-based generator; there is no global state. Draws on
//! distinct streams are independent and reproducible per
//! `(seed, stream id, position)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dist::{log_sum_exp, output_distribution, Channel, Distribution, LogSumExp};
use crate::error::{Error, Result};
use crate::types::{
    enumerate_types, log_type_class_size, sequence_type, TypeComposition,
};

/// Default cap on the number of joint compositions enumerated when computing
/// exact hit probabilities for the universal scheme.
pub const DEFAULT_JOINT_ENUM_CAP: u128 = 1 << 16;

/// A seedable, counter-based stream: same `(seed, stream)` always reproduces
/// the same draws, and distinct streams are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inverse-CDF draw of one symbol.
pub(crate) fn draw_symbol<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

/// The universal guessing distribution on sequences of length `n`:
/// `P(x) ∝ exp(-n Ĥ_x)`, where `Ĥ_x` is the empirical entropy of `x`.
///
/// The probability of a sequence depends only on its type, so the law is
/// stored per type: `type_log_weights[t] = ln(|T(t)| · exp(-n H(t)))` and the
/// normalizer is their log-sum-exp.
#[derive(Debug, Clone)]
pub struct UniversalSampler {
    n: usize,
    alphabet_size: usize,
    types: Vec<TypeComposition>,
    type_log_weights: Vec<f64>,
    type_cdf: Vec<f64>,
    log_normalizer: f64,
}

impl UniversalSampler {
    pub fn new(n: usize, alphabet_size: usize) -> Result<Self> {
        if n == 0 || alphabet_size == 0 {
            return Err(Error::InvalidInput(
                "universal sampler needs n >= 1 and a nonempty alphabet".into(),
            ));
        }
        let types = enumerate_types(n, alphabet_size)?;
        let type_log_weights: Vec<f64> = types
            .iter()
            .map(|t| log_type_class_size(t) - n as f64 * t.empirical_entropy())
            .collect();
        let log_normalizer = log_sum_exp(&type_log_weights);
        let mut type_cdf = Vec::with_capacity(types.len());
        let mut cum = 0.0;
        for &lw in &type_log_weights {
            cum += (lw - log_normalizer).exp();
            type_cdf.push(cum);
        }
        Ok(Self { n, alphabet_size, types, type_log_weights, type_cdf, log_normalizer })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// `ln Σ_x exp(-n Ĥ_x)`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// Per-type log weights, aligned with the type enumeration order.
    pub fn type_log_weights(&self) -> impl Iterator<Item = (&TypeComposition, f64)> {
        self.types.iter().zip(self.type_log_weights.iter().copied())
    }

    /// Exact log-probability of one sequence: `-n Ĥ_x - ln Z`. Depends only
    /// on the type of `x`, so permutations of `x` give bit-identical results.
    pub fn log_prob(&self, x: &[usize]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "sequence length {} does not match sampler length {}",
                x.len(),
                self.n
            )));
        }
        let t = sequence_type(x, self.alphabet_size)?;
        Ok(-(self.n as f64) * t.empirical_entropy() - self.log_normalizer)
    }

    /// Two-stage exact draw: pick a type with probability proportional to its
    /// weight, then arrange its symbol multiset uniformly at random. The
    /// resulting per-sequence law equals [`Self::log_prob`] exactly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let u: f64 = rng.gen();
        let idx = match self.type_cdf.iter().position(|&c| u < c) {
            Some(i) => i,
            None => self.type_cdf.len() - 1,
        };
        let mut pool = self.types[idx].representative();
        // Fisher-Yates; a uniformly random arrangement of the multiset.
        for i in (1..pool.len()).rev() {
            let j = rng.gen_range(0..=i);
            pool.swap(i, j);
        }
        pool
    }
}

/// A randomized or fixed guessing scheme for length-`n` secrets.
#[derive(Debug, Clone)]
pub enum GuessStrategy {
    /// Independent draws of every guess from the product law `v^n`.
    Iid(Distribution),
    /// Independent draws from the universal empirical-entropy law.
    Universal,
    /// An explicit list of guesses, submitted in order.
    FixedList(Vec<Vec<usize>>),
}

/// `ln s(y)`: log-probability that a single randomized guess, sent through
/// the channel, reproduces the target `y`.
///
/// For the i.i.d. scheme this is exactly `Σ_t ln((vW)(y_t))` — by contract,
/// the sum itself, not a round trip through the linear domain.
pub fn log_success_probability(strategy: &GuessStrategy, w: &Channel, y: &[usize]) -> Result<f64> {
    log_success_probability_capped(strategy, w, y, DEFAULT_JOINT_ENUM_CAP)
}

/// As [`log_success_probability`] with an explicit enumeration cap for the
/// universal scheme.
pub fn log_success_probability_capped(
    strategy: &GuessStrategy,
    w: &Channel,
    y: &[usize],
    cap: u128,
) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::InvalidInput("empty target sequence".into()));
    }
    for &s in y {
        if s >= w.output_size() {
            return Err(Error::OutOfAlphabet { symbol: s, alphabet_size: w.output_size() });
        }
    }
    match strategy {
        GuessStrategy::Iid(v) => {
            if v.alphabet_size() != w.input_size() {
                return Err(Error::DimensionMismatch(
                    "guess law must live on the channel input alphabet".into(),
                ));
            }
            let q = output_distribution(v, w);
            let mut log_s = 0.0;
            for &yt in y {
                let qy = q.get(yt);
                if qy == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                log_s += qy.ln();
            }
            Ok(log_s)
        }
        GuessStrategy::Universal => universal_log_success(w, y, cap),
        GuessStrategy::FixedList(_) => Err(Error::InvalidInput(
            "per-trial success probability is only defined for randomized strategies".into(),
        )),
    }
}

/// `s(y)` in the linear domain; see [`log_success_probability`].
pub fn success_probability(strategy: &GuessStrategy, w: &Channel, y: &[usize]) -> Result<f64> {
    Ok(log_success_probability(strategy, w, y)?.exp())
}

/// Exact `s(y) = Σ_x P_U(x) W^n(y|x)` for the universal scheme, by
/// enumerating joint compositions: for each target symbol block, the
/// composition of channel inputs paired with it. Cost is the product over
/// blocks of per-block composition counts, capped by `cap`.
fn universal_log_success(w: &Channel, y: &[usize], cap: u128) -> Result<f64> {
    let n = y.len();
    let k = w.input_size();
    let y_type = sequence_type(y, w.output_size())?;

    // Per-block composition lists and log channel entries.
    let mut blocks: Vec<(usize, usize, Vec<TypeComposition>)> = Vec::new();
    let mut combos: u128 = 1;
    for (j, &m) in y_type.counts().iter().enumerate() {
        if m == 0 {
            continue;
        }
        let comps = enumerate_types(m, k)?;
        combos = combos.saturating_mul(comps.len() as u128);
        if combos > cap {
            return Err(Error::ResourceLimit(format!(
                "joint-composition enumeration for n = {n} exceeds cap {cap}"
            )));
        }
        blocks.push((j, m, comps));
    }
    let log_z = log_universal_normalizer(n, k)?;

    let mut acc = LogSumExp::new();
    let mut choice = vec![0usize; blocks.len()];
    let mut xcounts = vec![0usize; k];
    'outer: loop {
        // Assemble one joint composition.
        xcounts.iter_mut().for_each(|c| *c = 0);
        let mut log_term = 0.0;
        let mut feasible = true;
        for (bi, (j, _m, comps)) in blocks.iter().enumerate() {
            let comp = &comps[choice[bi]];
            log_term += log_type_class_size(comp);
            for (i, &c) in comp.counts().iter().enumerate() {
                if c > 0 {
                    let wv = w.prob(i, *j);
                    if wv == 0.0 {
                        feasible = false;
                        break;
                    }
                    log_term += c as f64 * wv.ln();
                    xcounts[i] += c;
                }
            }
            if !feasible {
                break;
            }
        }
        if feasible {
            let x_type = TypeComposition::new(xcounts.clone())?;
            log_term += -(n as f64) * x_type.empirical_entropy() - log_z;
            acc.add(log_term);
        }
        // Odometer increment.
        for bi in 0..blocks.len() {
            choice[bi] += 1;
            if choice[bi] < blocks[bi].2.len() {
                continue 'outer;
            }
            choice[bi] = 0;
        }
        break;
    }
    Ok(acc.value())
}

/// `ln Σ_{x ∈ X^n} exp(-n Ĥ_x)`, the universal normalizer, via types.
pub fn log_universal_normalizer(n: usize, alphabet_size: usize) -> Result<f64> {
    let terms: Vec<f64> = enumerate_types(n, alphabet_size)?
        .iter()
        .map(|t| log_type_class_size(t) - n as f64 * t.empirical_entropy())
        .collect();
    Ok(log_sum_exp(&terms))
}

/// `n` independent draws from `v`.
pub fn sample_iid<R: Rng + ?Sized>(v: &Distribution, n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| draw_symbol(v.probs(), rng)).collect()
}

/// Log-probability of `x` under the conditional universal law given side
/// information `z`: `-n Ĥ(x|z) - ln Σ_x̃ exp(-n Ĥ(x̃|z))`.
///
/// Both the exponent and the normalizer factor over the blocks of positions
/// sharing a `z` symbol, so the whole quantity is the sum of per-block
/// unconditional universal log-probabilities.
pub fn conditional_universal_log_prob(
    x: &[usize],
    z: &[usize],
    alphabet_size: usize,
) -> Result<f64> {
    if x.is_empty() || x.len() != z.len() {
        return Err(Error::InvalidInput(
            "side-information sequence must be nonempty and match the guess length".into(),
        ));
    }
    // Per-z blocks: count and per-symbol histogram of x inside the block.
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&xi, &zi) in x.iter().zip(z) {
        if xi >= alphabet_size {
            return Err(Error::OutOfAlphabet { symbol: xi, alphabet_size });
        }
        blocks.entry(zi).or_insert_with(|| vec![0; alphabet_size])[xi] += 1;
    }
    let mut total = 0.0;
    for counts in blocks.values() {
        let t = TypeComposition::new(counts.clone())?;
        let m = t.n();
        total += -(m as f64) * t.empirical_entropy() - log_universal_normalizer(m, alphabet_size)?;
    }
    Ok(total)
}
