//! Moments of the number of guesses: exact evaluation at small block
//! lengths, Monte-Carlo estimation, fixed-list evaluation, and finite-n
//! exponent curves.
//!
//! For randomized strategies the trials are exchangeable, so the guess count
//! given a fixed target is exactly geometric with the per-trial hit
//! probability as parameter; all exact paths go through that reduction.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{Channel, Distribution, GuessingProblem, LogSumExp};
use crate::error::{Error, Result};
use crate::exponent::{solve_exponent, SolverOptions};
use crate::samplers::{
    draw_symbol, log_success_probability_capped, stream_rng, GuessStrategy, UniversalSampler,
    DEFAULT_JOINT_ENUM_CAP,
};
use crate::types::{enumerate_types, log_type_class_size};

/// 97.5% standard-normal quantile; half-width factor of a 95% interval.
const Z_975: f64 = 1.959_963_984_540_054;

/// How a moment was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentMethod {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
}

/// One evaluated moment `E[G^rho]` at block length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: usize,
    pub rho: f64,
    /// The moment itself; at least 1, since at least one guess is needed.
    pub value: f64,
    /// `(1/n) ln value` — the finite-n exponent.
    pub log_value_per_n: f64,
    pub method: MomentMethod,
    /// 95% half-width for Monte Carlo; 0 for exact.
    pub ci_halfwidth: f64,
    /// Largest relative series-truncation bound incurred; 0 when closed
    /// forms were used.
    pub truncation_tail_bound: f64,
    pub trials: u64,
    pub seed: u64,
}

/// `E[G^rho]` for `G` geometric on `{1, 2, …}` with success probability `s`.
///
/// Closed forms for `rho` in `{0, 1, 2}`; otherwise the series
/// `Σ k^rho s (1-s)^{k-1}` truncated at `K` with the analytic tail bound
/// `Σ_{k>K} k^rho s (1-s)^{k-1} <= s (1-s)^K (K+1)^rho / (1 - (1-s) e^{rho/(K+1)})`,
/// obtained from `(K+j)^rho <= (K+1)^rho e^{rho (j-1)/(K+1)}`; K is grown
/// until the bound drops below `eps` times the partial sum.
///
/// `s = 0` signals an infinite moment by returning `+inf`.
pub fn geometric_moment(s: f64, rho: f64, eps: f64) -> f64 {
    match geometric_moment_bounded(s, rho, eps) {
        Ok((value, _)) => value,
        Err(_) => f64::INFINITY,
    }
}

/// As [`geometric_moment`], also returning the achieved relative tail bound.
pub(crate) fn geometric_moment_bounded(s: f64, rho: f64, eps: f64) -> Result<(f64, f64)> {
    assert!(rho >= 0.0, "rho must be non-negative");
    assert!(eps > 0.0, "eps must be positive");
    assert!(s <= 1.0 + 1e-12, "success probability above 1");
    if s <= 0.0 {
        return Ok((f64::INFINITY, 0.0));
    }
    if s >= 1.0 {
        return Ok((1.0, 0.0));
    }
    if rho == 0.0 {
        return Ok((1.0, 0.0));
    }
    if rho == 1.0 {
        return Ok((1.0 / s, 0.0));
    }
    if rho == 2.0 {
        return Ok(((2.0 - s) / (s * s), 0.0));
    }

    let beta = 1.0 - s;
    let mut partial = 0.0_f64;
    let mut survival = 1.0_f64; // (1-s)^{k-1} entering iteration k
    let mut k: u64 = 1;
    let mut next_check: u64 = 32;
    const MAX_TERMS: u64 = 200_000_000;
    loop {
        partial += (k as f64).powf(rho) * s * survival;
        survival *= beta;
        if survival == 0.0 {
            return Ok((partial, 0.0));
        }
        if k >= next_check {
            // survival currently equals (1-s)^k.
            let k1 = (k + 1) as f64;
            let factor = beta * (rho / k1).exp();
            if factor < 1.0 {
                let bound = s * survival * k1.powf(rho) / (1.0 - factor);
                if bound <= eps * partial {
                    return Ok((partial, bound / partial));
                }
            }
            next_check = next_check.saturating_mul(2);
        }
        k += 1;
        if k > MAX_TERMS {
            return Err(Error::ResourceLimit(format!(
                "geometric series for s = {s:e}, rho = {rho} needs more than {MAX_TERMS} terms"
            )));
        }
    }
}

/// Exact `E[G^rho]` for a randomized strategy at block length `n`:
/// `Σ_y P^n(y) · E[G^rho | s(y)]`, grouped by output type (both the target
/// probability and the hit probability depend on `y` only through its type).
pub fn exact_moment(
    problem: &GuessingProblem,
    strategy: &GuessStrategy,
    n: usize,
    eps: f64,
) -> Result<MomentReport> {
    if n == 0 {
        return Err(Error::InvalidInput("block length must be at least 1".into()));
    }
    let w = &problem.channel;
    let p = &problem.source;
    let rho = problem.rho;
    let log_q = match strategy {
        GuessStrategy::Iid(v) => {
            if v.alphabet_size() != w.input_size() {
                return Err(Error::DimensionMismatch(
                    "guess law must live on the channel input alphabet".into(),
                ));
            }
            let q = crate::dist::output_distribution(v, w);
            Some(q.probs().iter().map(|&x| x.ln()).collect::<Vec<f64>>())
        }
        GuessStrategy::Universal => None,
        GuessStrategy::FixedList(_) => {
            return Err(Error::InvalidInput(
                "exact_moment handles randomized strategies; use fixed_list_moment".into(),
            ))
        }
    };

    let mut acc = LogSumExp::new();
    let mut max_tail = 0.0_f64;
    for t in enumerate_types(n, p.alphabet_size())? {
        // ln P^n(y) for any y of this type.
        let mut log_p = 0.0;
        let mut possible = true;
        for (j, &c) in t.counts().iter().enumerate() {
            if c > 0 {
                let pj = p.get(j);
                if pj == 0.0 {
                    possible = false;
                    break;
                }
                log_p += c as f64 * pj.ln();
            }
        }
        if !possible {
            continue;
        }
        let log_s = match &log_q {
            Some(lq) => {
                let mut ls = 0.0;
                for (j, &c) in t.counts().iter().enumerate() {
                    if c > 0 {
                        ls += c as f64 * lq[j];
                    }
                }
                ls
            }
            None => log_success_probability_capped(
                strategy,
                w,
                &t.representative(),
                DEFAULT_JOINT_ENUM_CAP,
            )?,
        };
        let s = log_s.exp();
        if s == 0.0 {
            return Err(Error::InfiniteMoment(format!(
                "targets of type {:?} have zero hit probability",
                t.counts()
            )));
        }
        let (m, tail) = geometric_moment_bounded(s, rho, eps)?;
        max_tail = max_tail.max(tail);
        acc.add(log_type_class_size(&t) + log_p + m.ln());
    }
    let log_total = acc.value();
    Ok(MomentReport {
        n,
        rho,
        value: log_total.exp(),
        log_value_per_n: log_total / n as f64,
        method: MomentMethod::Exact,
        ci_halfwidth: 0.0,
        truncation_tail_bound: max_tail,
        trials: 0,
        seed: 0,
    })
}

/// Tuning for [`simulate_moment`].
#[derive(Debug, Clone)]
pub struct SimulateOptions {
    /// Enumeration budget for exact universal hit probabilities.
    pub joint_enum_cap: u128,
    /// Inner sample count for the plug-in estimate of the hit probability
    /// when the exact enumeration exceeds the cap. The plug-in `1/ŝ` bias is
    /// O(Var(ŝ)/s³) per trial; raise this when targets are rare.
    pub inner_samples: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self { joint_enum_cap: DEFAULT_JOINT_ENUM_CAP, inner_samples: 1024 }
    }
}

/// Monte-Carlo `E[G^rho]`: draws a target `y ~ P^n` per trial, then draws the
/// guess count directly from its geometric law via inverse CDF.
///
/// Trial `i` uses RNG stream `i` of `seed`, and per-trial results are reduced
/// in index order, so the report is bit-identical for a given `(seed, trials)`
/// regardless of thread count.
pub fn simulate_moment(
    problem: &GuessingProblem,
    strategy: &GuessStrategy,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<MomentReport> {
    simulate_moment_with(problem, strategy, n, trials, seed, &SimulateOptions::default())
}

/// As [`simulate_moment`] with explicit tuning.
pub fn simulate_moment_with(
    problem: &GuessingProblem,
    strategy: &GuessStrategy,
    n: usize,
    trials: u64,
    seed: u64,
    opts: &SimulateOptions,
) -> Result<MomentReport> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidInput("need n >= 1 and trials >= 1".into()));
    }
    let w = &problem.channel;
    let p = &problem.source;
    let rho = problem.rho;

    let log_q: Option<Vec<f64>> = match strategy {
        GuessStrategy::Iid(v) => {
            if v.alphabet_size() != w.input_size() {
                return Err(Error::DimensionMismatch(
                    "guess law must live on the channel input alphabet".into(),
                ));
            }
            let q = crate::dist::output_distribution(v, w);
            Some(q.probs().iter().map(|&x| x.ln()).collect())
        }
        GuessStrategy::Universal => None,
        GuessStrategy::FixedList(_) => {
            return Err(Error::InvalidInput(
                "simulate_moment handles randomized strategies; use fixed_list_moment".into(),
            ))
        }
    };
    // Built once; only consulted on the inner-Monte-Carlo fallback path.
    let sampler = match strategy {
        GuessStrategy::Universal => Some(UniversalSampler::new(n, w.input_size())?),
        _ => None,
    };

    let powers: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<f64> {
            let mut rng = stream_rng(seed, trial);
            let y: Vec<usize> = (0..n).map(|_| draw_symbol(p.probs(), &mut rng)).collect();
            let s = match &log_q {
                Some(lq) => y.iter().map(|&yt| lq[yt]).sum::<f64>().exp(),
                None => {
                    match log_success_probability_capped(strategy, w, &y, opts.joint_enum_cap) {
                        Ok(ls) => ls.exp(),
                        Err(Error::ResourceLimit(_)) => {
                            let sampler = sampler.as_ref().expect("universal sampler built");
                            let mut acc = 0.0;
                            for _ in 0..opts.inner_samples {
                                let x = sampler.sample(&mut rng);
                                let mut wn = 1.0;
                                for (t, &xt) in x.iter().enumerate() {
                                    wn *= w.prob(xt, y[t]);
                                }
                                acc += wn;
                            }
                            acc / opts.inner_samples as f64
                        }
                        Err(e) => return Err(e),
                    }
                }
            };
            if s <= 0.0 {
                return Err(Error::InfiniteMoment(
                    "a drawn target has zero hit probability".into(),
                ));
            }
            let g = if s >= 1.0 {
                1.0
            } else {
                let u: f64 = rng.gen();
                ((1.0 - u).ln() / (1.0 - s).ln()).floor() + 1.0
            };
            Ok(if rho == 0.0 { 1.0 } else { g.powf(rho) })
        })
        .collect::<Result<Vec<f64>>>()?;

    // Deterministic reduction in trial order.
    let mean = powers.iter().sum::<f64>() / trials as f64;
    let ci_halfwidth = if trials >= 2 {
        let var =
            powers.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (trials - 1) as f64;
        Z_975 * (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(MomentReport {
        n,
        rho,
        value: mean,
        log_value_per_n: mean.ln() / n as f64,
        method: MomentMethod::MonteCarlo,
        ci_halfwidth,
        truncation_tail_bound: 0.0,
        trials,
        seed,
    })
}

/// Exact `E[G^rho]` for an explicit guessing list, extended cyclically beyond
/// its `horizon`-long prefix so the series has a computable tail.
///
/// With per-cycle survival `c(y) = Π_i (1 - a_i(y))`, the within-cycle masses
/// `b_j` give `E[G^rho | y] = Σ_m c^m Σ_j (mL+j)^rho b_j`; the cycle tail is
/// bounded exactly like the geometric tail.
pub fn fixed_list_moment(
    problem: &GuessingProblem,
    list: &[Vec<usize>],
    n: usize,
    horizon: usize,
    eps: f64,
) -> Result<MomentReport> {
    if list.is_empty() || n == 0 {
        return Err(Error::InvalidInput("need a nonempty list and n >= 1".into()));
    }
    if horizon != list.len() {
        return Err(Error::InvalidInput(format!(
            "horizon {horizon} does not match the list length {}",
            list.len()
        )));
    }
    let w = &problem.channel;
    let p = &problem.source;
    let rho = problem.rho;
    for (i, guess) in list.iter().enumerate() {
        if guess.len() != n {
            return Err(Error::InvalidInput(format!(
                "guess {i} has length {}, expected {n}",
                guess.len()
            )));
        }
        for &x in guess {
            if x >= w.input_size() {
                return Err(Error::OutOfAlphabet { symbol: x, alphabet_size: w.input_size() });
            }
        }
    }
    let ny = p.alphabet_size();
    let total = (ny as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > (1 << 22) {
        return Err(Error::ResourceLimit(format!(
            "fixed-list evaluation enumerates {total} targets, above the cap"
        )));
    }

    let len = list.len();
    let mut expectation = 0.0_f64;
    let mut max_tail = 0.0_f64;
    let mut y = vec![0usize; n];
    'targets: loop {
        let py: f64 = y.iter().map(|&yt| p.get(yt)).product();
        if py > 0.0 {
            let hit: Vec<f64> = list
                .iter()
                .map(|guess| {
                    let mut prob = 1.0;
                    for (t, &xt) in guess.iter().enumerate() {
                        prob *= w.prob(xt, y[t]);
                    }
                    prob
                })
                .collect();
            if hit.iter().all(|&a| a == 0.0) {
                return Err(Error::InfiniteMoment(format!(
                    "target {y:?} is unreachable from every listed guess"
                )));
            }
            let (m, tail) = cyclic_list_moment(&hit, rho, eps)?;
            max_tail = max_tail.max(tail);
            expectation += py * m;
        }
        for t in (0..n).rev() {
            y[t] += 1;
            if y[t] < ny {
                continue 'targets;
            }
            y[t] = 0;
        }
        break;
    }
    Ok(MomentReport {
        n,
        rho,
        value: expectation,
        log_value_per_n: expectation.ln() / n as f64,
        method: MomentMethod::Exact,
        ci_halfwidth: 0.0,
        truncation_tail_bound: max_tail,
        trials: 0,
        seed: 0,
    })
}

/// `Σ_{k>=1} k^rho · Pr{first hit at trial k}` for the cyclic extension of
/// per-trial hit probabilities `hit[0..L]`. Returns the value and the
/// relative tail bound actually incurred.
fn cyclic_list_moment(hit: &[f64], rho: f64, eps: f64) -> Result<(f64, f64)> {
    let len = hit.len();
    // Within-cycle first-hit masses and the cycle survival.
    let mut masses = Vec::with_capacity(len);
    let mut survival = 1.0_f64;
    for &a in hit {
        masses.push(a * survival);
        survival *= 1.0 - a;
    }
    let cycle_survival = survival;
    if rho == 0.0 {
        return Ok((1.0, 0.0));
    }

    let mut total = 0.0_f64;
    let mut cycle_weight = 1.0_f64; // c^m
    let mut m: u64 = 0;
    let mut next_check: u64 = 8;
    const MAX_CYCLES: u64 = 10_000_000;
    loop {
        let offset = m as f64 * len as f64;
        let mut cycle_sum = 0.0;
        for (j, &b) in masses.iter().enumerate() {
            if b > 0.0 {
                cycle_sum += (offset + (j + 1) as f64).powf(rho) * b;
            }
        }
        total += cycle_weight * cycle_sum;
        cycle_weight *= cycle_survival;
        if cycle_weight == 0.0 {
            return Ok((total, 0.0));
        }
        if m >= next_check {
            let m2 = (m + 2) as f64;
            let factor = cycle_survival * (rho / m2).exp();
            if factor < 1.0 {
                let remaining_mass = 1.0 - cycle_survival;
                let bound = remaining_mass
                    * (len as f64).powf(rho)
                    * cycle_weight
                    * m2.powf(rho)
                    / (1.0 - factor);
                if bound <= eps * total {
                    return Ok((total, bound / total));
                }
            }
            next_check = next_check.saturating_mul(2);
        }
        m += 1;
        if m > MAX_CYCLES {
            return Err(Error::HorizonTooSmall(format!(
                "cyclic tail still above eps = {eps:e} after {MAX_CYCLES} cycles \
                 (cycle survival {cycle_survival})"
            )));
        }
    }
}

/// Which strategy to instantiate at each block length of a curve.
#[derive(Debug, Clone)]
pub enum StrategyFamily {
    /// The same i.i.d. guess law at every `n`.
    IidFixed(Distribution),
    /// The optimal i.i.d. law from the exponent solver, computed once.
    IidOptimal,
    /// The universal law, rebuilt for each `n`.
    Universal,
}

/// Evaluation mode for [`exponent_curve`].
#[derive(Debug, Clone)]
pub enum CurveMode {
    Exact { eps: f64 },
    MonteCarlo { trials: u64, seed: u64 },
}

/// Normalized log-moments `(1/n) ln E[G^rho]` along a schedule of block
/// lengths; these converge to the guessing exponent as `n` grows.
pub fn exponent_curve(
    problem: &GuessingProblem,
    family: &StrategyFamily,
    rho: f64,
    n_values: &[usize],
    mode: &CurveMode,
) -> Result<Vec<MomentReport>> {
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("n_values must be strictly ascending".into()));
    }
    let problem = GuessingProblem::new(problem.source.clone(), problem.channel.clone(), rho)?;
    let fixed_v = match family {
        StrategyFamily::IidFixed(v) => Some(v.clone()),
        StrategyFamily::IidOptimal => {
            Some(solve_exponent(&problem, &SolverOptions::default())?.v_star)
        }
        StrategyFamily::Universal => None,
    };
    let mut out = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let strategy = match &fixed_v {
            Some(v) => GuessStrategy::Iid(v.clone()),
            None => GuessStrategy::Universal,
        };
        let report = match mode {
            CurveMode::Exact { eps } => exact_moment(&problem, &strategy, n, *eps)?,
            CurveMode::MonteCarlo { trials, seed } => {
                simulate_moment(&problem, &strategy, n, *trials, *seed)?
            }
        };
        out.push(report);
    }
    Ok(out)
}
