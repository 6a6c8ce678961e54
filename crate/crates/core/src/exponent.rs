//! The guessing exponent: convex minimization of the moment objective over
//! the input simplex, the noiseless baseline, convex-hull membership of output
//! laws, and the flat/penalty phase-transition thresholds.

use crate::dist::{output_distribution, Channel, Distribution, GuessingProblem, LogSumExp};
use crate::error::{Error, Result};

/// Flat-region decision threshold in nats: an order of magnitude above the
/// default solver tolerance.
pub const FLAT_TOL: f64 = 1e-6;

/// Default Euclidean tolerance for hull membership.
pub const HULL_TOL: f64 = 1e-9;

/// Knobs for the simplex solver.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Termination threshold on the optimality certificate, in nats.
    pub tolerance: f64,
    /// Iteration budget before `NonConvergence`.
    pub max_iters: usize,
    /// Mesh step of the dense-grid fallback used as a test oracle.
    pub grid_resolution: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iters: 200_000, grid_resolution: 1e-4 }
    }
}

/// Output of [`solve_exponent`].
#[derive(Debug, Clone)]
pub struct ExponentResult {
    /// The exponent `E(rho)` in nats per symbol.
    pub value: f64,
    /// Optimal guessing input law.
    pub v_star: Distribution,
    /// Induced output law `v_star · W`.
    pub q_induced: Distribution,
    /// True when the noise incurs no penalty at 1e-6 resolution.
    pub flat: bool,
    pub iterations: usize,
    /// Optimality certificate: the Frank-Wolfe gap at termination, an upper
    /// bound on `value - inf`.
    pub gap: f64,
    /// Set when the channel has a deterministic transition (`w_max = 1`), in
    /// which case the converse bound behind `value` is not guaranteed.
    pub converse_warning: bool,
}

/// Result of projecting an output law onto the convex hull of channel rows.
#[derive(Debug, Clone)]
pub struct HullWitness {
    pub member: bool,
    /// Mixing weights of the closest hull point.
    pub v: Distribution,
    /// Squared Euclidean residual to the hull.
    pub distance: f64,
}

/// The moment objective `ln Σ_y P(y) / [(vW)(y)]^rho`, in nats.
///
/// Returns `+inf` when some `y` carries source mass but `(vW)(y) = 0`.
pub fn objective(v: &Distribution, problem: &GuessingProblem) -> f64 {
    assert_eq!(v.alphabet_size(), problem.channel.input_size(), "input law dimension mismatch");
    let q = output_distribution(v, &problem.channel);
    let mut acc = LogSumExp::new();
    for y in 0..q.alphabet_size() {
        let p = problem.source.get(y);
        if p == 0.0 {
            continue;
        }
        let qy = q.get(y);
        if problem.rho > 0.0 && qy == 0.0 {
            return f64::INFINITY;
        }
        let log_term = if problem.rho > 0.0 { p.ln() - problem.rho * qy.ln() } else { p.ln() };
        acc.add(log_term);
    }
    acc.value()
}

/// The noiseless guessing exponent `(1+rho) ln Σ_y P(y)^{1/(1+rho)}`.
pub fn noiseless_exponent(p: &Distribution, rho: f64) -> f64 {
    assert!(rho >= 0.0, "rho must be non-negative");
    let alpha = 1.0 / (1.0 + rho);
    let sum: f64 = p.probs().iter().map(|&x| x.powf(alpha)).sum();
    (1.0 + rho) * sum.ln()
}

/// The tilted output law `Q*(y) ∝ P(y)^{1/(1+rho)}`: the optimal guessing law
/// when the channel is clean.
pub fn tilted_distribution(p: &Distribution, rho: f64) -> Distribution {
    assert!(rho >= 0.0, "rho must be non-negative");
    if rho == 0.0 {
        return p.clone();
    }
    let alpha = 1.0 / (1.0 + rho);
    let raw: Vec<f64> = p.probs().iter().map(|&x| x.powf(alpha)).collect();
    let sum: f64 = raw.iter().sum();
    Distribution::new(raw.into_iter().map(|x| x / sum).collect())
        .expect("tilted law is a valid distribution")
}

/// Computes the guessing exponent by minimizing [`objective`] over the input
/// simplex with entropic mirror descent from the uniform start.
pub fn solve_exponent(problem: &GuessingProblem, opts: &SolverOptions) -> Result<ExponentResult> {
    // A source symbol no channel row can reach makes the infimum infinite.
    for y in problem.source.support() {
        if !problem.channel.reaches(y) {
            return Err(Error::Unreachable { symbol: y });
        }
    }

    let k = problem.channel.input_size();
    let outcome = simplex_minimize(
        k,
        |v| moment_value_grad(v, problem),
        opts.tolerance,
        opts.max_iters,
    );
    if !outcome.converged {
        return Err(Error::NonConvergence {
            iterations: outcome.iterations,
            residual: outcome.gap,
        });
    }

    let v_star = Distribution::new(outcome.v)?;
    let q_induced = output_distribution(&v_star, &problem.channel);
    let noiseless = noiseless_exponent(&problem.source, problem.rho);
    let flat = (outcome.value - noiseless).abs() <= FLAT_TOL;
    Ok(ExponentResult {
        value: outcome.value,
        v_star,
        q_induced,
        flat,
        iterations: outcome.iterations,
        gap: outcome.gap,
        converse_warning: problem.channel.has_deterministic_transition(),
    })
}

/// Value and gradient of the moment objective at an interior point.
fn moment_value_grad(v: &[f64], problem: &GuessingProblem) -> (f64, Vec<f64>) {
    let w = &problem.channel;
    let p = &problem.source;
    let rho = problem.rho;
    let ny = w.output_size();
    let nx = w.input_size();

    if rho == 0.0 {
        return (0.0, vec![0.0; nx]);
    }

    let mut q = vec![0.0_f64; ny];
    for x in 0..nx {
        if v[x] > 0.0 {
            for (y, qy) in q.iter_mut().enumerate() {
                *qy += v[x] * w.prob(x, y);
            }
        }
    }
    let mut terms = vec![f64::NEG_INFINITY; ny];
    for y in 0..ny {
        let py = p.get(y);
        if py > 0.0 {
            if q[y] == 0.0 {
                return (f64::INFINITY, vec![0.0; nx]);
            }
            terms[y] = py.ln() - rho * q[y].ln();
        }
    }
    let value = crate::dist::log_sum_exp(&terms);
    // Softmax weights of the log-domain sum; gradient of ln Σ exp.
    let mut grad = vec![0.0_f64; nx];
    for y in 0..ny {
        if terms[y] > f64::NEG_INFINITY {
            let weight = (terms[y] - value).exp();
            let scale = -rho * weight / q[y];
            for (x, g) in grad.iter_mut().enumerate() {
                *g += scale * w.prob(x, y);
            }
        }
    }
    (value, grad)
}

pub(crate) struct MinimizeOutcome {
    pub v: Vec<f64>,
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Entropic mirror descent over the probability simplex with backtracking
/// line search. Terminates when the Frank-Wolfe gap `⟨g, v⟩ - min_x g_x`
/// drops below `tol`; by convexity this bounds the suboptimality of `value`.
///
/// Multiplicative updates from a positive start never leave the interior, so
/// objectives that blow up on the boundary stay finite along the trajectory.
pub(crate) fn simplex_minimize<F>(
    dim: usize,
    eval: F,
    tol: f64,
    max_iters: usize,
) -> MinimizeOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut v = vec![1.0 / dim as f64; dim];
    let (mut value, mut grad) = eval(&v);
    let mut step = 1.0_f64;
    let mut iterations = 0;

    loop {
        let gap = frank_wolfe_gap(&v, &grad);
        if gap <= tol {
            return MinimizeOutcome { v, value, gap, iterations, converged: true };
        }
        if iterations >= max_iters {
            return MinimizeOutcome { v, value, gap, iterations, converged: false };
        }
        iterations += 1;

        let gmin = grad.iter().copied().fold(f64::INFINITY, f64::min);
        let mut eta = step;
        let mut accepted = false;
        while eta >= 1e-18 {
            let mut cand = vec![0.0_f64; dim];
            let mut z = 0.0;
            for x in 0..dim {
                // Argument is <= 0, so the factor is in (0, 1]; the argmin
                // coordinate keeps factor 1 and the normalizer stays positive.
                let c = v[x] * (-eta * (grad[x] - gmin)).exp();
                cand[x] = c;
                z += c;
            }
            for c in cand.iter_mut() {
                *c /= z;
            }
            let (cand_value, cand_grad) = eval(&cand);
            if cand_value.is_finite() && cand_value < value {
                v = cand;
                value = cand_value;
                grad = cand_grad;
                step = (eta * 1.5).min(1e6);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // No descent direction at float resolution; report the certificate.
            let gap = frank_wolfe_gap(&v, &grad);
            return MinimizeOutcome { v, value, gap, iterations, converged: gap <= tol };
        }
    }
}

fn frank_wolfe_gap(v: &[f64], grad: &[f64]) -> f64 {
    let inner: f64 = v.iter().zip(grad).map(|(a, b)| a * b).sum();
    let gmin = grad.iter().copied().fold(f64::INFINITY, f64::min);
    (inner - gmin).max(0.0)
}

/// Dense-grid minimizer of [`objective`] for small input alphabets; the test
/// oracle backing the production solver. `resolution` is the mesh step.
pub fn grid_min_objective(
    problem: &GuessingProblem,
    resolution: f64,
) -> Result<(Distribution, f64)> {
    let k = problem.channel.input_size();
    let m = (1.0 / resolution).round() as usize;
    let mut best = f64::INFINITY;
    let mut best_v: Option<Vec<f64>> = None;
    let mut consider = |v: Vec<f64>| {
        let d = Distribution::new(v).expect("grid point is a valid distribution");
        let val = objective(&d, problem);
        if val < best {
            best = val;
            best_v = Some(d.probs().to_vec());
        }
    };
    match k {
        1 => consider(vec![1.0]),
        2 => {
            for i in 0..=m {
                let a = i as f64 / m as f64;
                consider(vec![a, 1.0 - a]);
            }
        }
        3 => {
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let a = i as f64 / m as f64;
                    let b = j as f64 / m as f64;
                    consider(vec![a, b, 1.0 - a - b]);
                }
            }
        }
        _ => {
            return Err(Error::ResourceLimit(format!(
                "grid oracle supports input alphabets up to 3, got {k}"
            )))
        }
    }
    Ok((Distribution::new(best_v.expect("grid is nonempty"))?, best))
}

/// Projects `q` onto the convex hull of the channel rows `{W(·|x)}` and
/// reports membership at Euclidean tolerance `tol`.
///
/// The projection is a convex quadratic program over the simplex, solved by
/// an active-set method to a KKT stationarity certificate; membership is a
/// geometric property, so the squared-Euclidean metric is used regardless of
/// the divergence appearing elsewhere.
pub fn hull_membership(q: &Distribution, w: &Channel, tol: f64) -> HullWitness {
    assert_eq!(q.alphabet_size(), w.output_size(), "q must live on the output alphabet");
    let (v, distance) = project_onto_row_hull(q, w);
    HullWitness {
        member: distance.sqrt() <= tol,
        v: Distribution::new(v).expect("projection weights form a distribution"),
        distance,
    }
}

/// Active-set solver for `min ‖vW - q‖²` over the simplex.
/// Returns the optimal weights and the squared residual.
fn project_onto_row_hull(q: &Distribution, w: &Channel) -> (Vec<f64>, f64) {
    let k = w.input_size();
    let ny = w.output_size();
    if k == 1 {
        return (vec![1.0], squared_residual(&[1.0], q, w));
    }

    // Gram matrix G = W Wᵀ and linear term c = W q.
    let mut gram = vec![vec![0.0_f64; k]; k];
    let mut lin = vec![0.0_f64; k];
    for i in 0..k {
        for j in i..k {
            let mut s = 0.0;
            for y in 0..ny {
                s += w.prob(i, y) * w.prob(j, y);
            }
            gram[i][j] = s;
            gram[j][i] = s;
        }
        lin[i] = (0..ny).map(|y| w.prob(i, y) * q.get(y)).sum();
    }
    let ridge = 1e-13 * (1.0 + gram.iter().enumerate().map(|(i, r)| r[i]).sum::<f64>());

    let mut active: Vec<bool> = vec![true; k];
    let mut v = vec![1.0 / k as f64; k];

    for _ in 0..(64 * k + 64) {
        let support: Vec<usize> = (0..k).filter(|&x| active[x]).collect();
        let s = support.len();
        // KKT system on the support: [2G_SS, -1; 1ᵀ, 0] [w; λ] = [2c_S; 1].
        let mut a = vec![vec![0.0_f64; s + 1]; s + 1];
        let mut b = vec![0.0_f64; s + 1];
        for (ii, &i) in support.iter().enumerate() {
            for (jj, &j) in support.iter().enumerate() {
                a[ii][jj] = 2.0 * gram[i][j];
            }
            a[ii][ii] += 2.0 * ridge;
            a[ii][s] = -1.0;
            a[s][ii] = 1.0;
            b[ii] = 2.0 * lin[i];
        }
        b[s] = 1.0;
        let sol = match solve_linear(a, b) {
            Some(sol) => sol,
            None => break, // degenerate face; current iterate is already optimal enough
        };
        let lambda = sol[s];

        if sol[..s].iter().all(|&x| x >= -1e-12) {
            let mut w_new = vec![0.0_f64; k];
            for (ii, &i) in support.iter().enumerate() {
                w_new[i] = sol[ii].max(0.0);
            }
            let z: f64 = w_new.iter().sum();
            for x in w_new.iter_mut() {
                *x /= z;
            }
            v = w_new;
            // Dual feasibility off the support: grad_x >= λ.
            let grad = gradient(&gram, &lin, &v);
            let kappa = 1e-10 * (1.0 + grad.iter().fold(0.0_f64, |m, g| m.max(g.abs())));
            let mut worst = f64::INFINITY;
            let mut worst_x = None;
            for x in 0..k {
                if !active[x] {
                    let slack = grad[x] - lambda;
                    if slack < worst {
                        worst = slack;
                        worst_x = Some(x);
                    }
                }
            }
            match worst_x {
                Some(x) if worst < -kappa => active[x] = true,
                _ => break,
            }
        } else {
            // Step toward the subproblem solution until a coordinate hits zero.
            let mut w_new = vec![0.0_f64; k];
            for (ii, &i) in support.iter().enumerate() {
                w_new[i] = sol[ii];
            }
            let mut alpha = 1.0_f64;
            for &i in &support {
                if w_new[i] < 0.0 {
                    alpha = alpha.min(v[i] / (v[i] - w_new[i]));
                }
            }
            for x in 0..k {
                v[x] += alpha * (w_new[x] - v[x]);
                if active[x] && v[x] <= 1e-15 {
                    v[x] = 0.0;
                    active[x] = false;
                }
            }
            if active.iter().all(|a| !a) {
                // Numerical corner; re-enter from the largest coordinate.
                active[0] = true;
                v[0] = 1.0;
            }
        }
    }
    let dist = squared_residual(&v, q, w);
    (v, dist)
}

fn gradient(gram: &[Vec<f64>], lin: &[f64], v: &[f64]) -> Vec<f64> {
    let k = lin.len();
    let mut g = vec![0.0_f64; k];
    for x in 0..k {
        let mut s = 0.0;
        for j in 0..k {
            s += gram[x][j] * v[j];
        }
        g[x] = 2.0 * (s - lin[x]);
    }
    g
}

fn squared_residual(v: &[f64], q: &Distribution, w: &Channel) -> f64 {
    let mut dist = 0.0;
    for y in 0..w.output_size() {
        let mut m = 0.0;
        for (x, &vx) in v.iter().enumerate() {
            m += vx * w.prob(x, y);
        }
        let r = m - q.get(y);
        dist += r * r;
    }
    dist
}

/// Gaussian elimination with partial pivoting; `None` on a singular system.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite pivots")
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for j in col..n {
                    a[row][j] -= f * a[col][j];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0_f64; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for j in (row + 1)..n {
            s -= a[row][j] * x[j];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Critical BSC crossover below which the noise incurs no penalty at
/// moment order 1: `√p / (√p + √(1-p))`.
///
/// Symmetric in `p ↔ 1-p` (relabeling the binary source), so the smaller
/// source probability is used.
pub fn bsc_critical_q(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "source parameter must be in (0, 1)");
    let m = p.min(1.0 - p);
    let sp = m.sqrt();
    sp / (sp + (1.0 - m).sqrt())
}

/// Critical moment order above which a BSC with crossover `q` incurs no
/// penalty: `[ln((1-p)/p) / ln((1-q)/q) - 1]₊`, and `+inf` at `q = 0.5` for
/// an asymmetric source.
pub fn bsc_critical_rho(p: f64, q: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "source parameter must be in (0, 1)");
    assert!(q > 0.0 && q <= 0.5, "crossover must be in (0, 0.5]");
    let m = p.min(1.0 - p);
    let num = ((1.0 - m) / m).ln();
    if num == 0.0 {
        return 0.0;
    }
    let den = ((1.0 - q) / q).ln();
    if den == 0.0 {
        return f64::INFINITY;
    }
    (num / den - 1.0).max(0.0)
}

/// Options for [`critical_rho_general`].
#[derive(Debug, Clone)]
pub struct CriticalRhoOptions {
    /// Search ceiling; `+inf` is reported when no qualifying rho is found.
    pub rho_max: f64,
    /// Scan resolution used to bracket the transition before bisection.
    pub scan_steps: usize,
    /// Absolute accuracy of the returned rho.
    pub tolerance: f64,
    /// Euclidean tolerance for hull membership tests.
    pub hull_tol: f64,
}

impl Default for CriticalRhoOptions {
    fn default() -> Self {
        Self { rho_max: 64.0, scan_steps: 512, tolerance: 1e-6, hull_tol: HULL_TOL }
    }
}

/// Smallest `rho >= 0` at which the tilted law enters the convex hull of the
/// channel rows, i.e. the onset of the no-penalty region for an arbitrary
/// channel. Bracketing scan followed by bisection; flat windows narrower than
/// the scan step can be missed, so raise `scan_steps` for exotic channels.
pub fn critical_rho_general(p: &Distribution, w: &Channel, opts: &CriticalRhoOptions) -> f64 {
    let member = |rho: f64| hull_membership(&tilted_distribution(p, rho), w, opts.hull_tol).member;
    if member(0.0) {
        return 0.0;
    }
    let step = opts.rho_max / opts.scan_steps as f64;
    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=opts.scan_steps {
        let rho = i as f64 * step;
        if member(rho) {
            hi = Some(rho);
            break;
        }
        lo = rho;
    }
    let mut hi = match hi {
        Some(h) => h,
        None => return f64::INFINITY,
    };
    while hi - lo > opts.tolerance {
        let mid = 0.5 * (lo + hi);
        if member(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Guessing exponent with side information: the guesser observes a correlated
/// sequence drawn jointly with the target. `joint[y][z]` is the joint law on
/// Y×Z; conditioning on each `z` reduces to a standard instance on `P(·|z)`,
/// and the per-z optimal sums are averaged under `P(z)` before taking the log.
pub fn exponent_with_side_info(
    joint: &[Vec<f64>],
    w: &Channel,
    rho: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    if joint.is_empty() || joint[0].is_empty() {
        return Err(Error::InvalidInput("empty side-information joint".into()));
    }
    let ny = joint.len();
    let nz = joint[0].len();
    if ny != w.output_size() {
        return Err(Error::DimensionMismatch(format!(
            "joint has {ny} target symbols, channel outputs {}",
            w.output_size()
        )));
    }
    let mut total = 0.0;
    for (y, row) in joint.iter().enumerate() {
        if row.len() != nz {
            return Err(Error::InvalidInput(format!(
                "joint row {y} has {} entries, expected {nz}",
                row.len()
            )));
        }
        for (z, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("joint[{y}][{z}] = {v} is invalid")));
            }
            total += v;
        }
    }
    if (total - 1.0).abs() > crate::dist::SUM_REJECT_TOL {
        return Err(Error::InvalidInput(format!(
            "side-information joint sums to {total}, expected 1"
        )));
    }

    let mut acc = LogSumExp::new();
    for z in 0..nz {
        let pz: f64 = (0..ny).map(|y| joint[y][z]).sum::<f64>() / total;
        if pz == 0.0 {
            continue;
        }
        let cond = Distribution::new((0..ny).map(|y| joint[y][z] / (pz * total)).collect())?;
        let sub = GuessingProblem::new(cond, w.clone(), rho)?;
        let res = solve_exponent(&sub, opts)?;
        acc.add(pz.ln() + res.value);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::kl_divergence;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn problem(p: &[f64], w: Channel, rho: f64) -> GuessingProblem {
        GuessingProblem::new(dist(p), w, rho).unwrap()
    }

    const NOISELESS_P25_RHO1: f64 = 0.623_810_716_364_871_4;
    const E_BSC45_RHO1: f64 = 0.651_904_222_025_896_2; // ln(0.25/0.45 + 0.75/0.55)

    #[test]
    fn objective_examples() {
        let pr = problem(&[0.3, 0.7], Channel::bsc(0.2).unwrap(), 0.0);
        assert_eq!(objective(&Distribution::uniform(2), &pr), 0.0);

        let pr = problem(&[0.25, 0.75], Channel::identity(2), 1.0);
        let tilted = tilted_distribution(&pr.source, 1.0);
        assert!((objective(&tilted, &pr) - noiseless_exponent(&pr.source, 1.0)).abs() < 1e-12);

        let pr = problem(&[0.25, 0.75], Channel::bsc(0.45).unwrap(), 1.0);
        assert!((objective(&dist(&[0.0, 1.0]), &pr) - E_BSC45_RHO1).abs() < 1e-12);
    }

    #[test]
    fn objective_infinite_when_mass_unreachable() {
        let w = Channel::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let pr = problem(&[0.5, 0.5], w, 1.0);
        assert!(objective(&Distribution::uniform(2), &pr).is_infinite());
    }

    #[test]
    fn noiseless_examples() {
        assert!((noiseless_exponent(&Distribution::uniform(2), 1.0) - std::f64::consts::LN_2)
            .abs()
            < 1e-12);
        assert!((noiseless_exponent(&dist(&[0.25, 0.75]), 1.0) - NOISELESS_P25_RHO1).abs() < 1e-12);
        assert_eq!(noiseless_exponent(&dist(&[0.3, 0.7]), 0.0), 0.0);
    }

    #[test]
    fn tilted_examples() {
        let p = dist(&[0.25, 0.75]);
        assert_eq!(tilted_distribution(&p, 0.0).probs(), p.probs());
        let u = Distribution::uniform(3);
        for (a, b) in tilted_distribution(&u, 2.5).probs().iter().zip(u.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        let t = tilted_distribution(&p, 1.0);
        assert!((t.get(0) - 0.366_025_403_784_438_65).abs() < 1e-12);
        assert!((t.get(1) - 0.633_974_596_215_561_4).abs() < 1e-12);
    }

    #[test]
    fn hull_examples() {
        let q = dist(&[0.2, 0.5, 0.3]);
        let hw = hull_membership(&q, &Channel::identity(3), HULL_TOL);
        assert!(hw.member);
        for (a, b) in hw.v.probs().iter().zip(q.probs()) {
            assert!((a - b).abs() < 1e-9);
        }

        let w = Channel::bsc(0.35).unwrap();
        let hw = hull_membership(&dist(&[0.3, 0.7]), &w, HULL_TOL);
        assert!(!hw.member);
        // Distance to the hull endpoint (0.35, 0.65) is 0.05 in each coordinate.
        assert!((hw.distance - 2.0 * 0.05_f64.powi(2)).abs() < 1e-12);

        let hw = hull_membership(&dist(&[0.5, 0.5]), &w, HULL_TOL);
        assert!(hw.member);
        assert!((hw.v.get(0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn hull_membership_with_duplicate_rows() {
        let w = Channel::new(vec![vec![0.6, 0.4], vec![0.6, 0.4]]).unwrap();
        let hw = hull_membership(&dist(&[0.6, 0.4]), &w, HULL_TOL);
        assert!(hw.member);
        let hw = hull_membership(&dist(&[0.5, 0.5]), &w, HULL_TOL);
        assert!(!hw.member);
        assert!((hw.distance - 2.0 * 0.1_f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn critical_q_values() {
        assert!((bsc_critical_q(0.25) - 0.366_025_403_784_438_65).abs() < 1e-12);
        assert!((bsc_critical_q(0.5) - 0.5).abs() < 1e-15);
        assert!((bsc_critical_q(0.1) - 0.25).abs() < 1e-12);
        // Relabeling symmetry of the binary source.
        assert_eq!(bsc_critical_q(0.75), bsc_critical_q(0.25));
    }

    #[test]
    fn critical_rho_values() {
        assert!((bsc_critical_rho(0.25, 0.35) - 0.774_705_501_282_533_8).abs() < 1e-12);
        assert_eq!(bsc_critical_rho(0.5, 0.3), 0.0);
        assert_eq!(bsc_critical_rho(0.25, 0.25), 0.0);
        assert_eq!(bsc_critical_rho(0.25, 0.5), f64::INFINITY);
        assert_eq!(bsc_critical_rho(0.5, 0.5), 0.0);
        assert_eq!(bsc_critical_rho(0.75, 0.35), bsc_critical_rho(0.25, 0.35));
    }

    #[test]
    fn solve_flat_bsc() {
        let pr = problem(&[0.25, 0.75], Channel::bsc(0.35).unwrap(), 1.0);
        let res = solve_exponent(&pr, &SolverOptions::default()).unwrap();
        assert!((res.value - NOISELESS_P25_RHO1).abs() < 1e-7);
        assert!(res.flat);
        assert!(!res.converse_warning);
        // Induced law should be the tilted distribution.
        assert!((res.q_induced.get(0) - 0.366_025_403_784_438_65).abs() < 1e-5);
        assert!(res.gap <= 1e-8);
        // q_induced consistency with v_star.
        let q = output_distribution(&res.v_star, &pr.channel);
        for (a, b) in q.probs().iter().zip(res.q_induced.probs()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn solve_penalty_bsc() {
        let pr = problem(&[0.25, 0.75], Channel::bsc(0.45).unwrap(), 1.0);
        let res = solve_exponent(&pr, &SolverOptions::default()).unwrap();
        assert!((res.value - E_BSC45_RHO1).abs() < 1e-7);
        assert!(!res.flat);
        assert!((res.q_induced.get(0) - 0.45).abs() < 1e-6);
        assert!(res.value >= noiseless_exponent(&pr.source, 1.0) - 1e-8);
    }

    #[test]
    fn solve_rho_zero_and_endpoint() {
        let pr = problem(&[0.3, 0.7], Channel::bsc(0.2).unwrap(), 0.0);
        let res = solve_exponent(&pr, &SolverOptions::default()).unwrap();
        assert_eq!(res.value, 0.0);
        assert!(res.flat);

        // Singleton hull at q = 0.5: E = ln 2 regardless of the source skew.
        let pr = problem(&[0.25, 0.75], Channel::bsc(0.5).unwrap(), 1.0);
        let res = solve_exponent(&pr, &SolverOptions::default()).unwrap();
        assert!((res.value - std::f64::consts::LN_2).abs() < 1e-8);
        assert!(!res.flat);
    }

    #[test]
    fn solve_matches_grid_oracle() {
        for &(p, q, rho) in
            &[(0.25, 0.45, 1.0), (0.25, 0.35, 1.0), (0.1, 0.2, 2.0), (0.4, 0.48, 0.5)]
        {
            let pr = problem(&[p, 1.0 - p], Channel::bsc(q).unwrap(), rho);
            let res = solve_exponent(&pr, &SolverOptions::default()).unwrap();
            let (_, grid) = grid_min_objective(&pr, 1e-4).unwrap();
            assert!(
                (res.value - grid).abs() < 1e-6,
                "p={p} q={q} rho={rho}: solver {} vs grid {grid}",
                res.value
            );
        }
    }

    #[test]
    fn solve_ternary_golden() {
        let w = Channel::new(vec![
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.2, 0.2, 0.6],
        ])
        .unwrap();
        let pr = problem(&[0.2, 0.3, 0.5], w, 1.3);
        let res = solve_exponent(&pr, &SolverOptions::default()).unwrap();
        // Frozen from an independent high-precision grid-and-polish run.
        assert!((res.value - 1.388_638_297_828_416_8).abs() < 1e-6);
    }

    #[test]
    fn solve_invariant_under_relabeling() {
        let w = Channel::new(vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3]]).unwrap();
        let pr = problem(&[0.2, 0.5, 0.3], w, 1.7);
        let base = solve_exponent(&pr, &SolverOptions::default()).unwrap().value;

        // Swap the two inputs and cyclically shift the three outputs.
        let perm_y = [1usize, 2, 0]; // new index of old output y
        let mut rows = vec![vec![0.0; 3]; 2];
        for x in 0..2 {
            for y in 0..3 {
                rows[1 - x][perm_y[y]] = pr.channel.prob(x, y);
            }
        }
        let mut p2 = vec![0.0; 3];
        for y in 0..3 {
            p2[perm_y[y]] = pr.source.get(y);
        }
        let pr2 = GuessingProblem::new(dist(&p2), Channel::new(rows).unwrap(), 1.7).unwrap();
        let permuted = solve_exponent(&pr2, &SolverOptions::default()).unwrap().value;
        assert!((base - permuted).abs() < 1e-8);
    }

    #[test]
    fn exponent_monotone_in_bsc_noise() {
        let mut last = -1.0;
        for i in 0..=10 {
            let q = 0.05 * i as f64;
            let pr = problem(&[0.25, 0.75], Channel::bsc(q).unwrap(), 1.0);
            let res = solve_exponent(&pr, &SolverOptions::default()).unwrap();
            assert!(res.value >= last - 1e-9, "E must be non-decreasing in q");
            last = res.value;
        }
    }

    #[test]
    fn solve_unreachable() {
        let w = Channel::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let pr = problem(&[0.5, 0.5], w, 1.0);
        assert!(matches!(
            solve_exponent(&pr, &SolverOptions::default()),
            Err(Error::Unreachable { symbol: 1 })
        ));
    }

    #[test]
    fn solve_nonconvergence_reports_exit() {
        let pr = problem(&[0.25, 0.75], Channel::bsc(0.45).unwrap(), 1.0);
        let opts = SolverOptions { tolerance: 1e-15, max_iters: 2, ..Default::default() };
        assert!(matches!(
            solve_exponent(&pr, &opts),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn converse_warning_on_clean_channel() {
        let pr = problem(&[0.25, 0.75], Channel::identity(2), 1.0);
        let res = solve_exponent(&pr, &SolverOptions::default()).unwrap();
        assert!(res.converse_warning);
        assert!((res.value - NOISELESS_P25_RHO1).abs() < 1e-7);
        assert!(res.flat);
    }

    #[test]
    fn critical_rho_general_examples() {
        // Clean channel: the hull is the whole simplex.
        let p = dist(&[0.25, 0.75]);
        assert_eq!(
            critical_rho_general(&p, &Channel::identity(2), &CriticalRhoOptions::default()),
            0.0
        );
        // Singleton hull that happens to contain the tilted law at rho = 0.
        let w = Channel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(
            critical_rho_general(&Distribution::uniform(2), &w, &CriticalRhoOptions::default()),
            0.0
        );
        // Cross-check against the closed form on BSC instances.
        for &(p, q) in &[(0.25, 0.35), (0.25, 0.45), (0.1, 0.3), (0.4, 0.2)] {
            let expect = bsc_critical_rho(p, q);
            let got = critical_rho_general(
                &dist(&[p, 1.0 - p]),
                &Channel::bsc(q).unwrap(),
                &CriticalRhoOptions::default(),
            );
            if expect == 0.0 {
                assert!(got <= 1e-6, "p={p} q={q}: got {got}");
            } else {
                assert!((got - expect).abs() < 1e-4, "p={p} q={q}: {got} vs {expect}");
            }
        }
        // No qualifying rho below the ceiling.
        let w = Channel::new(vec![vec![0.8, 0.2], vec![0.7, 0.3]]).unwrap();
        let got = critical_rho_general(&dist(&[0.5, 0.5]), &w, &CriticalRhoOptions::default());
        assert_eq!(got, f64::INFINITY);
    }

    #[test]
    fn side_info_independent_matches_marginal() {
        // joint[y][z] = P(y) * R(z)
        let p = [0.25, 0.75];
        let r = [0.4, 0.6];
        let joint: Vec<Vec<f64>> =
            p.iter().map(|&py| r.iter().map(|&rz| py * rz).collect()).collect();
        let w = Channel::bsc(0.45).unwrap();
        let e = exponent_with_side_info(&joint, &w, 1.0, &SolverOptions::default()).unwrap();
        assert!((e - E_BSC45_RHO1).abs() < 1e-7);
    }

    #[test]
    fn side_info_revealing_target_is_free() {
        // Z = Y over a clean channel: one guess always suffices.
        let joint = vec![vec![0.25, 0.0], vec![0.0, 0.75]];
        let e = exponent_with_side_info(&joint, &Channel::identity(2), 1.0, &SolverOptions::default())
            .unwrap();
        assert!(e.abs() < 1e-9);
    }

    #[test]
    fn side_info_correlated_golden() {
        let joint = vec![vec![0.4, 0.1], vec![0.1, 0.4]];
        let w = Channel::bsc(0.1).unwrap();
        let e = exponent_with_side_info(&joint, &w, 1.0, &SolverOptions::default()).unwrap();
        // Frozen from an independent per-z dense grid over V.
        assert!((e - 0.587_786_665_702_135).abs() < 1e-6);

        // Same number from the in-test grid oracle, per z.
        let mut total = 0.0;
        for z in 0..2 {
            let pz: f64 = joint[0][z] + joint[1][z];
            let cond = dist(&[joint[0][z] / pz, joint[1][z] / pz]);
            let pr = GuessingProblem::new(cond, w.clone(), 1.0).unwrap();
            let (_, val) = grid_min_objective(&pr, 1e-5).unwrap();
            total += pz * val.exp();
        }
        assert!((e - total.ln()).abs() < 1e-6);
    }

    #[test]
    fn flat_flag_consistent_with_hull_on_random_instances() {
        use rand::Rng;
        let mut rng = crate::samplers::stream_rng(11, 0);
        for _ in 0..40 {
            let p: f64 = rng.gen_range(0.05..0.95);
            let q: f64 = rng.gen_range(0.02..0.5);
            let rho: f64 = rng.gen_range(0.05..3.0);
            let pr = problem(&[p, 1.0 - p], Channel::bsc(q).unwrap(), rho);
            let res = solve_exponent(&pr, &SolverOptions::default()).unwrap();
            let member =
                hull_membership(&tilted_distribution(&pr.source, rho), &pr.channel, HULL_TOL)
                    .member;
            let noiseless = noiseless_exponent(&pr.source, rho);
            if member {
                assert!((res.value - noiseless).abs() <= 1e-6);
                assert!(res.flat);
            } else if !res.flat {
                assert!(res.value > noiseless + 1e-8);
            }
        }
    }

    #[test]
    fn grid_oracle_rejects_large_alphabets() {
        let w = Channel::identity(4);
        let pr = problem(&[0.25, 0.25, 0.25, 0.25], w, 1.0);
        assert!(matches!(grid_min_objective(&pr, 0.01), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn hull_distance_vs_kl_direction() {
        // The squared-Euclidean projection and the KL minimizer can differ as
        // points, but membership must agree with a zero KL minimum.
        let w = Channel::bsc(0.35).unwrap();
        let inside = dist(&[0.4, 0.6]);
        assert!(hull_membership(&inside, &w, HULL_TOL).member);
        let v = hull_membership(&inside, &w, HULL_TOL).v;
        let induced = output_distribution(&v, &w);
        assert!(kl_divergence(&inside, &induced) < 1e-12);
    }
}
