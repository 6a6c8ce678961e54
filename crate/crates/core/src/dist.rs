//! Probability vectors, channels, and the information measures on them.
//!
//! Everything downstream (exponents, the noise-penalty functional, samplers,
//! the simulator) is built on these primitives. All information quantities
//! are in nats; unit conversion is a presentation concern.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deviations of a probability vector's sum from 1 below this threshold are
/// silently renormalized; larger deviations are rejected. Tolerates decimal
/// text input without accepting malformed data.
pub const SUM_REJECT_TOL: f64 = 1e-9;

/// A probability distribution over a finite alphabet `{0, …, k-1}`.
///
/// Entries are non-negative and sum to 1 within 1e-12 after ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates and (if needed) renormalizes a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} is {p}, must be a finite non-negative real"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_REJECT_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, outside tolerance {SUM_REJECT_TOL} of 1"
            )));
        }
        let mut probs = probs;
        if sum != 1.0 {
            for p in probs.iter_mut() {
                *p /= sum;
            }
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over `k` symbols.
    pub fn uniform(k: usize) -> Self {
        assert!(k >= 1, "alphabet size must be at least 1");
        Self { probs: vec![1.0 / k as f64; k] }
    }

    /// Point mass on `symbol`.
    pub fn degenerate(k: usize, symbol: usize) -> Self {
        assert!(symbol < k, "symbol outside alphabet");
        let mut probs = vec![0.0; k];
        probs[symbol] = 1.0;
        Self { probs }
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    /// Indices with strictly positive probability.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, _)| i)
    }
}

/// A discrete memoryless channel: a row-stochastic matrix `W(y|x)` with
/// `|X|` rows and `|Y|` columns.
///
/// A maximal entry of 1 is flagged (not forbidden): the converse bound on the
/// guessing exponent is only guaranteed for strictly noisy channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    rows: Vec<Distribution>,
    w_max: f64,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidChannel("channel has no rows".into()));
        }
        let cols = rows[0].len();
        let mut dists = Vec::with_capacity(rows.len());
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidChannel(format!(
                    "row {x} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            let d = Distribution::new(row)
                .map_err(|e| Error::InvalidChannel(format!("row {x}: {e}")))?;
            dists.push(d);
        }
        let w_max = dists
            .iter()
            .flat_map(|d| d.probs().iter().copied())
            .fold(0.0_f64, f64::max);
        Ok(Self { rows: dists, w_max })
    }

    /// The binary symmetric channel with crossover probability `q`.
    pub fn bsc(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidChannel(format!("BSC crossover {q} outside [0, 1]")));
        }
        Self::new(vec![vec![1.0 - q, q], vec![q, 1.0 - q]])
    }

    /// The clean channel on `k` symbols.
    pub fn identity(k: usize) -> Self {
        let rows = (0..k).map(|x| Distribution::degenerate(k, x)).collect();
        Self { rows, w_max: 1.0 }
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].alphabet_size()
    }

    pub fn row(&self, x: usize) -> &Distribution {
        &self.rows[x]
    }

    /// `W(y|x)`.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x].get(y)
    }

    /// Cached maximum entry.
    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    /// True when some entry equals 1, i.e. the converse regularity condition
    /// `w_max < 1` fails.
    pub fn has_deterministic_transition(&self) -> bool {
        self.w_max >= 1.0 - 1e-12
    }

    /// True when output `y` is reachable from some input.
    pub fn reaches(&self, y: usize) -> bool {
        self.rows.iter().any(|r| r.get(y) > 0.0)
    }
}

/// One problem instance: source law `P` over the output alphabet, channel
/// `W`, and moment order `rho >= 0`.
#[derive(Debug, Clone)]
pub struct GuessingProblem {
    pub source: Distribution,
    pub channel: Channel,
    pub rho: f64,
}

impl GuessingProblem {
    pub fn new(source: Distribution, channel: Channel, rho: f64) -> Result<Self> {
        if channel.output_size() != source.alphabet_size() {
            return Err(Error::DimensionMismatch(format!(
                "channel output alphabet ({}) must match source alphabet ({})",
                channel.output_size(),
                source.alphabet_size()
            )));
        }
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::InvalidInput(format!("rho = {rho}, must be finite and >= 0")));
        }
        Ok(Self { source, channel, rho })
    }
}

/// Shannon entropy in nats, with the convention `0 ln 0 = 0`.
pub fn entropy(q: &Distribution) -> f64 {
    q.probs().iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}

/// Kullback-Leibler divergence `D(q‖p)` in nats.
///
/// Returns `+inf` when `q` puts mass where `p` does not; infinity is a legal
/// value here, not an error.
pub fn kl_divergence(q: &Distribution, p: &Distribution) -> f64 {
    assert_eq!(
        q.alphabet_size(),
        p.alphabet_size(),
        "kl_divergence requires matching alphabets"
    );
    let mut sum = 0.0;
    for (&qi, &pi) in q.probs().iter().zip(p.probs()) {
        if qi > 0.0 {
            if pi == 0.0 {
                return f64::INFINITY;
            }
            sum += qi * (qi / pi).ln();
        }
    }
    // Rounding can leave a tiny negative for near-identical inputs.
    if sum < 0.0 && sum > -1e-13 {
        0.0
    } else {
        sum
    }
}

/// Weighted divergence between conditionals: `Σ_x q_x(x) D(q_cond(·|x) ‖ w(·|x))`.
///
/// Rows with zero weight contribute nothing, even if their divergence would
/// be infinite.
pub fn weighted_conditional_divergence(
    q_cond: &Channel,
    w: &Channel,
    q_x: &Distribution,
) -> f64 {
    assert_eq!(q_cond.input_size(), w.input_size(), "input alphabets must match");
    assert_eq!(q_cond.output_size(), w.output_size(), "output alphabets must match");
    assert_eq!(q_x.alphabet_size(), w.input_size(), "weight vector must match input alphabet");
    let mut sum = 0.0;
    for x in 0..w.input_size() {
        let wx = q_x.get(x);
        if wx > 0.0 {
            let d = kl_divergence(q_cond.row(x), w.row(x));
            if d.is_infinite() {
                return f64::INFINITY;
            }
            sum += wx * d;
        }
    }
    sum
}

/// The output law induced by input law `v` through channel `w`:
/// `Q(y) = Σ_x v(x) W(y|x)`.
pub fn output_distribution(v: &Distribution, w: &Channel) -> Distribution {
    assert_eq!(v.alphabet_size(), w.input_size(), "input law must match channel input alphabet");
    let mut q = vec![0.0; w.output_size()];
    for x in 0..w.input_size() {
        let vx = v.get(x);
        if vx > 0.0 {
            for (y, qy) in q.iter_mut().enumerate() {
                *qy += vx * w.prob(x, y);
            }
        }
    }
    Distribution::new(q).expect("induced output law is a valid distribution")
}

/// Numerically stable `ln Σ exp(terms)`, skipping `-inf` entries.
pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = terms
        .iter()
        .filter(|t| t.is_finite() || **t == f64::INFINITY)
        .map(|&t| (t - m).exp())
        .sum();
    m + s.ln()
}

/// Streaming log-sum-exp accumulator for long reductions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    pub fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    pub fn add(&mut self, term: f64) {
        if term == f64::NEG_INFINITY {
            return;
        }
        if term <= self.max {
            self.sum += (term - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - term).exp() + 1.0;
            self.max = term;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&dist(&[0.5, 0.5])) - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(entropy(&dist(&[1.0, 0.0])), 0.0);
        assert!((entropy(&dist(&[0.25, 0.75])) - 0.5623351446188083).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let p = dist(&[0.3, 0.7]);
        assert_eq!(kl_divergence(&p, &p), 0.0);
        let d = kl_divergence(&dist(&[0.5, 0.5]), &dist(&[0.25, 0.75]));
        assert!((d - 0.14384103622589046).abs() < 1e-12);
        assert!(kl_divergence(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).is_infinite());
    }

    #[test]
    fn weighted_divergence_examples() {
        let w = Channel::bsc(0.35).unwrap();
        let q = Channel::bsc(0.25).unwrap();
        assert_eq!(weighted_conditional_divergence(&w, &w, &Distribution::uniform(2)), 0.0);
        // Degenerate weighting collapses to a single row.
        let d = weighted_conditional_divergence(&q, &w, &dist(&[1.0, 0.0]));
        assert!((d - kl_divergence(q.row(0), w.row(0))).abs() < 1e-15);
        // Symmetric rows: both rows share the same divergence.
        let d = weighted_conditional_divergence(&q, &w, &Distribution::uniform(2));
        assert!((d - 0.023207573575201765).abs() < 1e-12);
    }

    #[test]
    fn output_distribution_examples() {
        let w = Channel::bsc(0.1).unwrap();
        let q = output_distribution(&dist(&[1.0, 0.0]), &w);
        assert_eq!(q.probs(), w.row(0).probs());
        let q = output_distribution(&Distribution::uniform(2), &Channel::bsc(0.3).unwrap());
        assert!((q.get(0) - 0.5).abs() < 1e-15);
        let q = output_distribution(&dist(&[0.3, 0.7]), &w);
        assert!((q.get(0) - 0.34).abs() < 1e-15);
        assert!((q.get(1) - 0.66).abs() < 1e-15);
    }

    #[test]
    fn ingestion_policy() {
        // Small deviations renormalize, large ones reject.
        let d = Distribution::new(vec![0.5, 0.5 + 3e-10]).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(Distribution::new(vec![0.5, 0.55]).is_err());
        assert!(Distribution::new(vec![0.5, -0.5, 1.0]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        assert!(Channel::new(vec![vec![0.6, 0.3], vec![0.5, 0.5]]).is_err());
        assert!(Channel::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn channel_flags() {
        assert!(Channel::identity(3).has_deterministic_transition());
        assert!(!Channel::bsc(0.2).unwrap().has_deterministic_transition());
        assert!((Channel::bsc(0.2).unwrap().w_max() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn problem_validation() {
        let p = dist(&[0.25, 0.75]);
        let w = Channel::bsc(0.1).unwrap();
        assert!(GuessingProblem::new(p.clone(), w.clone(), 1.0).is_ok());
        assert!(GuessingProblem::new(p.clone(), w.clone(), -0.5).is_err());
        let w3 = Channel::identity(3);
        assert!(GuessingProblem::new(p, w3, 1.0).is_err());
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let terms = [-3.0, -1.5, -2.25, f64::NEG_INFINITY];
        let direct: f64 = terms.iter().map(|t| t.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&terms) - direct).abs() < 1e-14);
        let mut acc = LogSumExp::new();
        for t in terms {
            acc.add(t);
        }
        assert!((acc.value() - direct).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn kl_nonnegative_and_zero_iff_equal(
            raw_q in proptest::collection::vec(1e-6..1.0f64, 2..5),
            raw_p in proptest::collection::vec(1e-6..1.0f64, 2..5),
        ) {
            let k = raw_q.len().min(raw_p.len());
            let qs: f64 = raw_q[..k].iter().sum();
            let ps: f64 = raw_p[..k].iter().sum();
            let q = dist(&raw_q[..k].iter().map(|v| v / qs).collect::<Vec<_>>());
            let p = dist(&raw_p[..k].iter().map(|v| v / ps).collect::<Vec<_>>());
            let d = kl_divergence(&q, &p);
            prop_assert!(d >= 0.0);
            let equal = q.probs().iter().zip(p.probs()).all(|(a, b)| (a - b).abs() <= 1e-12);
            if equal {
                prop_assert!(d <= 1e-10);
            }
            if d == 0.0 {
                prop_assert!(q.probs().iter().zip(p.probs()).all(|(a, b)| (a - b).abs() <= 1e-6));
            }
        }

        #[test]
        fn entropy_is_concave(
            raw_q in proptest::collection::vec(1e-9..1.0f64, 3),
            raw_p in proptest::collection::vec(1e-9..1.0f64, 3),
            lambda in 0.0..1.0f64,
        ) {
            let qs: f64 = raw_q.iter().sum();
            let ps: f64 = raw_p.iter().sum();
            let q = dist(&raw_q.iter().map(|v| v / qs).collect::<Vec<_>>());
            let p = dist(&raw_p.iter().map(|v| v / ps).collect::<Vec<_>>());
            let mix: Vec<f64> = q
                .probs()
                .iter()
                .zip(p.probs())
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect();
            let hm = entropy(&dist(&mix));
            prop_assert!(hm >= lambda * entropy(&q) + (1.0 - lambda) * entropy(&p) - 1e-12);
        }

        #[test]
        fn identity_channel_preserves_input_law(
            raw in proptest::collection::vec(0.0..1.0f64, 2..6),
        ) {
            let s: f64 = raw.iter().sum();
            prop_assume!(s > 1e-6);
            let v = dist(&raw.iter().map(|x| x / s).collect::<Vec<_>>());
            let q = output_distribution(&v, &Channel::identity(v.alphabet_size()));
            for (a, b) in v.probs().iter().zip(q.probs()) {
                prop_assert!((a - b).abs() <= 1e-15);
            }
        }
    }
}
