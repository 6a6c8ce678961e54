//! The noise-penalty functional: the minimal weighted divergence from the
//! channel compatible with a prescribed output marginal, and the
//! type-expression route to the guessing exponent built on it.
//!
//! Two independent routes to the same exponent live in this crate: the convex
//! minimization in [`crate::exponent`] (the production path) and the grid
//! maximization here (the oracle). Their agreement is a correctness check,
//! so neither may be expressed through the other.

use crate::dist::{
    entropy, kl_divergence, log_sum_exp, output_distribution, Channel, Distribution,
    GuessingProblem,
};
use crate::error::{Error, Result};
use crate::exponent::simplex_minimize;
use crate::types::enumerate_types_capped;

/// Knobs for the dual-ascent and convex solvers in this module.
#[derive(Debug, Clone)]
pub struct GammaOptions {
    /// Convergence threshold on the marginal-constraint residual (sup norm).
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Dual variables exceeding this magnitude certify primal infeasibility.
    pub mu_cap: f64,
}

impl Default for GammaOptions {
    fn default() -> Self {
        Self { residual_tol: 1e-10, max_iters: 50_000, mu_cap: 1e6 }
    }
}

/// Value and optimizers of the penalty functional.
#[derive(Debug, Clone)]
pub struct GammaResult {
    /// The penalty in nats; `+inf` when the marginal constraint cannot be met
    /// with finite divergence.
    pub value: f64,
    /// The minimizing conditional law, when the value is finite.
    pub optimizing_conditional: Option<Channel>,
    /// The input weighting under which the conditional meets the marginal
    /// constraint: the given one for the pairwise form, the minimizing one
    /// for the output-only form.
    pub optimizing_input: Option<Distribution>,
    /// Lagrange multipliers over the output alphabet; `-inf` marks symbols
    /// excluded by a zero target marginal. Empty in the infeasible case.
    pub dual_variables: Vec<f64>,
}

impl GammaResult {
    fn infeasible() -> Self {
        Self {
            value: f64::INFINITY,
            optimizing_conditional: None,
            optimizing_input: None,
            dual_variables: Vec::new(),
        }
    }
}

/// Minimal weighted divergence `D(Q̃ ‖ W | q_x)` over conditionals `Q̃` whose
/// output marginal under `q_x` equals `q_y`.
///
/// Solved by ascent on the multipliers `mu` over the output alphabet; the
/// inner minimizer has the tilted form `Q̃(y|x) ∝ W(y|x) exp(mu_y)`, so the
/// dual is smooth and concave and a scalar adaptive step suffices.
pub fn gamma_pair(
    q_x: &Distribution,
    q_y: &Distribution,
    w: &Channel,
    opts: &GammaOptions,
) -> Result<GammaResult> {
    if q_x.alphabet_size() != w.input_size() || q_y.alphabet_size() != w.output_size() {
        return Err(Error::DimensionMismatch(
            "gamma_pair arguments must match the channel dimensions".into(),
        ));
    }
    let supp_x: Vec<usize> = q_x.support().collect();
    let supp_y: Vec<usize> = q_y.support().collect();

    // Fast infeasibility checks. A target symbol unreachable from the input
    // support, or an input row that cannot land inside the target support,
    // forces mass onto zero channel entries.
    for &y in &supp_y {
        if !supp_x.iter().any(|&x| w.prob(x, y) > 0.0) {
            return Ok(GammaResult::infeasible());
        }
    }
    for &x in &supp_x {
        if !supp_y.iter().any(|&y| w.prob(x, y) > 0.0) {
            return Ok(GammaResult::infeasible());
        }
    }

    let mut mu = vec![0.0_f64; supp_y.len()];
    let mut step = 0.5_f64;
    let mut dual = dual_state(&mu, q_x, q_y, w, &supp_x, &supp_y);
    let mut iterations = 0;

    loop {
        let residual = dual.residual.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        if residual <= opts.residual_tol {
            break;
        }
        if mu.iter().any(|m| m.abs() > opts.mu_cap) {
            // Unbounded dual certifies that no finite-divergence conditional
            // meets the marginal constraint.
            return Ok(GammaResult::infeasible());
        }
        if iterations >= opts.max_iters {
            return Err(Error::NonConvergence { iterations, residual });
        }
        iterations += 1;

        let trial: Vec<f64> = mu.iter().zip(&dual.residual).map(|(m, r)| m + step * r).collect();
        let trial_state = dual_state(&trial, q_x, q_y, w, &supp_x, &supp_y);
        if trial_state.objective >= dual.objective - 1e-15 {
            mu = trial;
            dual = trial_state;
            step = (step * 2.0).min(64.0);
        } else {
            step *= 0.5;
        }
    }

    // Reconstruct the primal conditional from the converged multipliers.
    let mut rows = Vec::with_capacity(w.input_size());
    for x in 0..w.input_size() {
        match supp_x.iter().position(|&xx| xx == x) {
            None => {
                // Zero-weight rows contribute nothing; keep the channel row.
                rows.push(w.row(x).probs().to_vec());
            }
            Some(xi) => {
                let mut row = vec![0.0_f64; w.output_size()];
                let ln_z = dual.ln_z[xi];
                for (j, &y) in supp_y.iter().enumerate() {
                    let wv = w.prob(x, y);
                    if wv > 0.0 {
                        row[y] = (wv.ln() + mu[j] - ln_z).exp();
                    }
                }
                rows.push(row);
            }
        }
    }
    let conditional = Channel::new(rows)?;
    let value = crate::dist::weighted_conditional_divergence(&conditional, w, q_x);

    let mut dual_variables = vec![f64::NEG_INFINITY; w.output_size()];
    for (j, &y) in supp_y.iter().enumerate() {
        dual_variables[y] = mu[j];
    }
    Ok(GammaResult {
        value,
        optimizing_conditional: Some(conditional),
        optimizing_input: Some(q_x.clone()),
        dual_variables,
    })
}

struct DualState {
    objective: f64,
    residual: Vec<f64>,
    ln_z: Vec<f64>,
}

fn dual_state(
    mu: &[f64],
    q_x: &Distribution,
    q_y: &Distribution,
    w: &Channel,
    supp_x: &[usize],
    supp_y: &[usize],
) -> DualState {
    let mut ln_z = Vec::with_capacity(supp_x.len());
    let mut marginal = vec![0.0_f64; supp_y.len()];
    for &x in supp_x {
        let terms: Vec<f64> = supp_y
            .iter()
            .zip(mu)
            .map(|(&y, m)| {
                let wv = w.prob(x, y);
                if wv > 0.0 {
                    wv.ln() + m
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let z = log_sum_exp(&terms);
        for (j, &t) in terms.iter().enumerate() {
            if t > f64::NEG_INFINITY {
                marginal[j] += q_x.get(x) * (t - z).exp();
            }
        }
        ln_z.push(z);
    }
    let objective: f64 = supp_y.iter().zip(mu).map(|(&y, m)| m * q_y.get(y)).sum::<f64>()
        - supp_x.iter().zip(&ln_z).map(|(&x, z)| q_x.get(x) * z).sum::<f64>();
    let residual: Vec<f64> =
        supp_y.iter().zip(&marginal).map(|(&y, m)| q_y.get(y) - m).collect();
    DualState { objective, residual, ln_z }
}

/// The penalty of an output law alone: the minimum of [`gamma_pair`] over all
/// input laws. Equal to `min_V D(q_y ‖ V W)` — the divergence from `q_y` to
/// the convex hull of the channel rows — which this implementation minimizes
/// directly with the same simplex machinery as the exponent solver. The
/// equality with the pairwise infimum is exercised by a brute-force test.
pub fn gamma_min(q_y: &Distribution, w: &Channel, opts: &GammaOptions) -> Result<GammaResult> {
    if q_y.alphabet_size() != w.output_size() {
        return Err(Error::DimensionMismatch(
            "gamma_min target must live on the channel output alphabet".into(),
        ));
    }
    let supp_y: Vec<usize> = q_y.support().collect();
    for &y in &supp_y {
        if !w.reaches(y) {
            return Ok(GammaResult::infeasible());
        }
    }

    let k = w.input_size();
    let const_term: f64 = supp_y.iter().map(|&y| q_y.get(y) * q_y.get(y).ln()).sum();
    let outcome = simplex_minimize(
        k,
        |v| {
            let mut q = vec![0.0_f64; w.output_size()];
            for (x, &vx) in v.iter().enumerate() {
                if vx > 0.0 {
                    for (y, qv) in q.iter_mut().enumerate() {
                        *qv += vx * w.prob(x, y);
                    }
                }
            }
            let mut value = const_term;
            let mut grad = vec![0.0_f64; k];
            for &y in &supp_y {
                value -= q_y.get(y) * q[y].ln();
                let scale = -q_y.get(y) / q[y];
                for (x, g) in grad.iter_mut().enumerate() {
                    *g += scale * w.prob(x, y);
                }
            }
            (value, grad)
        },
        1e-11,
        opts.max_iters,
    );
    if !outcome.converged {
        return Err(Error::NonConvergence { iterations: outcome.iterations, residual: outcome.gap });
    }

    let v_star = Distribution::new(outcome.v)?;
    let q_out = output_distribution(&v_star, w);
    let value = kl_divergence(q_y, &q_out).max(0.0);

    // Optimal joint: Q(x, y) = q_y(y) · V(x) W(y|x) / (VW)(y); its X-marginal
    // and conditional rows witness the pairwise form of the penalty.
    let nx = w.input_size();
    let ny = w.output_size();
    let mut joint = vec![vec![0.0_f64; ny]; nx];
    for &y in &supp_y {
        for (x, row) in joint.iter_mut().enumerate() {
            row[y] = q_y.get(y) * v_star.get(x) * w.prob(x, y) / q_out.get(y);
        }
    }
    let masses: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let mut rows = Vec::with_capacity(nx);
    for (x, jrow) in joint.iter().enumerate() {
        if masses[x] > 0.0 {
            rows.push(jrow.iter().map(|j| j / masses[x]).collect());
        } else {
            rows.push(w.row(x).probs().to_vec());
        }
    }
    let conditional = Channel::new(rows)?;
    let input = Distribution::new(masses)?;

    let mut dual_variables = vec![f64::NEG_INFINITY; ny];
    for &y in &supp_y {
        dual_variables[y] = (q_y.get(y) / q_out.get(y)).ln();
    }
    Ok(GammaResult {
        value,
        optimizing_conditional: Some(conditional),
        optimizing_input: Some(input),
        dual_variables,
    })
}

/// Mesh control for [`exponent_via_types`].
#[derive(Debug, Clone, Default)]
pub struct GridSpec {
    /// Simplex mesh denominator; when unset, 200 for binary outputs, 60 for
    /// ternary, 24 for quaternary.
    pub denominator: Option<usize>,
    /// Skip the golden-section polish around the best grid point.
    pub skip_refine: bool,
}

/// The guessing exponent through its type expression:
/// `sup_Q { rho·[H(Q) + Γ(Q)] - D(Q‖P) }` over a simplex mesh of output laws,
/// polished by golden-section sweeps along the mesh axes.
///
/// This is the oracle route: accuracy is O(mesh step) before the polish, and
/// the search is only feasible for output alphabets up to 4.
pub fn exponent_via_types(problem: &GuessingProblem, grid: &GridSpec) -> Result<f64> {
    let ny = problem.channel.output_size();
    if ny > 4 {
        return Err(Error::ResourceLimit(format!(
            "type-expression search supports output alphabets up to 4, got {ny}"
        )));
    }
    let denom = grid.denominator.unwrap_or(match ny {
        0..=2 => 200,
        3 => 60,
        _ => 24,
    });
    let gopts = GammaOptions::default();

    let mut best = f64::NEG_INFINITY;
    let mut best_q: Option<Vec<f64>> = None;
    // Lexicographic enumeration with strict improvement keeps the first
    // (lexicographically smallest) maximizer on ties, independent of any
    // evaluation order.
    for t in enumerate_types_capped(denom, ny, 100_000_000)? {
        let q: Vec<f64> = t.counts().iter().map(|&c| c as f64 / denom as f64).collect();
        let val = type_objective(&q, problem, &gopts)?;
        if val == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        if val > best {
            best = val;
            best_q = Some(q);
        }
    }
    let mut best_q = best_q
        .ok_or_else(|| Error::InvalidInput("no feasible output law on the mesh".into()))?;

    if !grid.skip_refine {
        let h = 1.5 / denom as f64;
        for _ in 0..3 {
            for i in 0..ny {
                for j in (i + 1)..ny {
                    let lo = (-best_q[i]).max(-h);
                    let hi = best_q[j].min(h);
                    if hi <= lo {
                        continue;
                    }
                    let eval = |t: f64| -> Result<f64> {
                        let mut q = best_q.clone();
                        q[i] += t;
                        q[j] -= t;
                        type_objective(&q, problem, &gopts)
                    };
                    let (t_best, val) = golden_max(eval, lo, hi, 60)?;
                    if val > best {
                        best = val;
                        best_q[i] += t_best;
                        best_q[j] -= t_best;
                    }
                }
            }
        }
    }
    Ok(best)
}

/// `rho·[H(Q) + Γ(Q)] - D(Q‖P)` with the conventions: `-inf` when the source
/// cannot produce the type (excluded from the sup), `+inf` when the type is
/// producible but unreachable through the channel (the exponent diverges).
fn type_objective(q_raw: &[f64], problem: &GuessingProblem, gopts: &GammaOptions) -> Result<f64> {
    let mut q: Vec<f64> = q_raw.iter().map(|&x| x.max(0.0)).collect();
    let sum: f64 = q.iter().sum();
    for x in q.iter_mut() {
        *x /= sum;
    }
    let q = Distribution::new(q)?;
    let d = kl_divergence(&q, &problem.source);
    if d.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let gamma = gamma_min(&q, &problem.channel, gopts)?.value;
    if gamma.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(problem.rho * (entropy(&q) + gamma) - d)
}

/// Golden-section maximization of a slice; returns the best probe point and
/// value seen, which is what the mesh polish needs.
fn golden_max<F>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
        if fx > best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}
