//! Sweep data behind the two phase-transition figures: the exponent against
//! the BSC crossover at fixed moment order, and against the moment order at
//! fixed crossover. Each sweep carries a marker row at the critical value.

use serde::Serialize;

use crate::dist::{Channel, Distribution, GuessingProblem};
use crate::error::{Error, Result};
use crate::exponent::{bsc_critical_q, bsc_critical_rho, solve_exponent, SolverOptions};

/// One sweep sample: the swept parameter, the exponent in nats, and whether
/// the noise penalty vanishes there.
#[derive(Debug, Clone, Serialize)]
pub struct FigureRow {
    pub sweep_value: f64,
    pub exponent: f64,
    pub flat: bool,
}

/// Exponent against BSC crossover `q` on `[q_min, q_max]` for a binary
/// source `(p, 1-p)` at fixed `rho`, plus a marker row at the critical
/// crossover. Rows ascend in `q`; the exponent is non-decreasing.
pub fn figure_q_rows(
    p: f64,
    rho: f64,
    q_min: f64,
    q_max: f64,
    steps: usize,
    opts: &SolverOptions,
) -> Result<Vec<FigureRow>> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::InvalidInput(format!("source parameter p = {p} outside (0, 1)")));
    }
    if !(0.0 <= q_min && q_min <= q_max && q_max <= 0.5) {
        return Err(Error::InvalidInput(format!(
            "crossover range [{q_min}, {q_max}] must satisfy 0 <= q_min <= q_max <= 0.5"
        )));
    }
    if steps == 0 || !rho.is_finite() || rho < 0.0 {
        return Err(Error::InvalidInput("need steps >= 1 and rho >= 0".into()));
    }
    let mut sweep = sweep_values(q_min, q_max, steps);
    let q_c = bsc_critical_q(p);
    insert_marker(&mut sweep, q_c, q_min, q_max);

    let source = Distribution::new(vec![p, 1.0 - p])?;
    sweep
        .into_iter()
        .map(|q| {
            let problem = GuessingProblem::new(source.clone(), Channel::bsc(q)?, rho)?;
            let res = solve_exponent(&problem, opts)?;
            Ok(FigureRow { sweep_value: q, exponent: res.value, flat: res.flat })
        })
        .collect()
}

/// Exponent against the moment order `rho` on `[rho_min, rho_max]` for a
/// binary source `(p, 1-p)` through a fixed BSC(`q`), plus a marker row at
/// the critical order (when finite and in range).
pub fn figure_rho_rows(
    p: f64,
    q: f64,
    rho_min: f64,
    rho_max: f64,
    steps: usize,
    opts: &SolverOptions,
) -> Result<Vec<FigureRow>> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::InvalidInput(format!("source parameter p = {p} outside (0, 1)")));
    }
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::InvalidInput(format!("crossover q = {q} outside [0, 0.5]")));
    }
    if !(0.0 <= rho_min && rho_min <= rho_max) || steps == 0 {
        return Err(Error::InvalidInput(format!(
            "moment-order range [{rho_min}, {rho_max}] must satisfy 0 <= rho_min <= rho_max"
        )));
    }
    let mut sweep = sweep_values(rho_min, rho_max, steps);
    let rho_c = if q > 0.0 { bsc_critical_rho(p, q) } else { 0.0 };
    if rho_c.is_finite() {
        insert_marker(&mut sweep, rho_c, rho_min, rho_max);
    }

    let source = Distribution::new(vec![p, 1.0 - p])?;
    let channel = Channel::bsc(q)?;
    sweep
        .into_iter()
        .map(|rho| {
            let problem = GuessingProblem::new(source.clone(), channel.clone(), rho)?;
            let res = solve_exponent(&problem, opts)?;
            Ok(FigureRow { sweep_value: rho, exponent: res.value, flat: res.flat })
        })
        .collect()
}

fn sweep_values(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 || hi == lo {
        return vec![lo];
    }
    (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
}

fn insert_marker(sweep: &mut Vec<f64>, marker: f64, lo: f64, hi: f64) {
    if marker < lo || marker > hi || sweep.iter().any(|&v| (v - marker).abs() < 1e-12) {
        return;
    }
    let pos = sweep.partition_point(|&v| v < marker);
    sweep.insert(pos, marker);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_sweep_contains_marker_and_is_monotone() {
        let rows = figure_q_rows(0.25, 1.0, 0.0, 0.5, 21, &SolverOptions::default()).unwrap();
        assert_eq!(rows.len(), 22);
        let q_c = bsc_critical_q(0.25);
        assert!(rows.iter().any(|r| (r.sweep_value - q_c).abs() < 1e-15));
        for pair in rows.windows(2) {
            assert!(pair[0].sweep_value < pair[1].sweep_value);
            assert!(pair[1].exponent >= pair[0].exponent - 1e-9, "non-decreasing in q");
        }
        // Flat exactly up to the marker.
        for r in &rows {
            assert_eq!(r.flat, r.sweep_value <= q_c + 1e-12, "q = {}", r.sweep_value);
        }
    }

    #[test]
    fn rho_sweep_flat_above_critical() {
        let rows = figure_rho_rows(0.25, 0.35, 0.0, 3.0, 16, &SolverOptions::default()).unwrap();
        let rho_c = bsc_critical_rho(0.25, 0.35);
        assert!(rows.iter().any(|r| (r.sweep_value - rho_c).abs() < 1e-15));
        for r in &rows {
            if r.sweep_value >= rho_c + 1e-9 {
                assert!(r.flat, "rho = {} must be flat", r.sweep_value);
            }
        }
    }

    #[test]
    fn input_validation() {
        let o = SolverOptions::default();
        assert!(figure_q_rows(0.25, 1.0, 0.2, 0.1, 5, &o).is_err());
        assert!(figure_q_rows(0.25, 1.0, 0.0, 0.6, 5, &o).is_err());
        assert!(figure_q_rows(1.5, 1.0, 0.0, 0.5, 5, &o).is_err());
        assert!(figure_rho_rows(0.25, 0.35, 2.0, 1.0, 5, &o).is_err());
        assert!(figure_rho_rows(0.25, 0.7, 0.0, 1.0, 5, &o).is_err());
    }
}
