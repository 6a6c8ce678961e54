//! Browser bindings for the noisy-guesswork exponent.
//!
//! Three interactive operations back the static page in `www/`: the exponent
//! sweep against channel noise, the sweep against the moment order, and a
//! single-instance solve with the hull geometry spelled out. Results cross
//! the boundary as JSON strings so the page needs no generated bindings
//! beyond the wasm-bindgen glue.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use guesswork::exponent::{
    bsc_critical_q, bsc_critical_rho, hull_membership, noiseless_exponent, solve_exponent,
    tilted_distribution, SolverOptions, HULL_TOL,
};
use guesswork::figures::{figure_q_rows, figure_rho_rows};
use guesswork::{Channel, Distribution, GuessingProblem};

#[derive(Serialize)]
struct CurvePoint {
    x: f64,
    exponent: f64,
    noiseless: f64,
    flat: bool,
}

#[derive(Serialize)]
struct Curve {
    points: Vec<CurvePoint>,
    critical: f64,
    critical_finite: bool,
}

#[derive(Serialize)]
struct PointReport {
    exponent_nats: f64,
    noiseless_nats: f64,
    penalty_nats: f64,
    flat: bool,
    v_star: Vec<f64>,
    q_induced: Vec<f64>,
    tilted: Vec<f64>,
    hull_low: f64,
    hull_high: f64,
    hull_member: bool,
    q_critical: f64,
    rho_critical: f64,
    rho_critical_finite: bool,
}

fn err_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

fn solver() -> SolverOptions {
    SolverOptions::default()
}

/// Exponent vs BSC crossover q in [0, 0.5] for a binary source (p, 1-p).
#[wasm_bindgen]
pub fn curve_vs_noise(p: f64, rho: f64, steps: usize) -> String {
    let rows = match figure_q_rows(p, rho, 0.0, 0.5, steps.clamp(2, 2001), &solver()) {
        Ok(rows) => rows,
        Err(e) => return err_json(&e.to_string()),
    };
    let source = Distribution::new(vec![p, 1.0 - p]).expect("validated by figure_q_rows");
    let noiseless = noiseless_exponent(&source, rho);
    let curve = Curve {
        points: rows
            .into_iter()
            .map(|r| CurvePoint { x: r.sweep_value, exponent: r.exponent, noiseless, flat: r.flat })
            .collect(),
        critical: bsc_critical_q(p),
        critical_finite: true,
    };
    serde_json::to_string(&curve).expect("curve serializes")
}

/// Exponent vs moment order rho in [0, rho_max] for (p, 1-p) through BSC(q).
#[wasm_bindgen]
pub fn curve_vs_moment_order(p: f64, q: f64, rho_max: f64, steps: usize) -> String {
    if !(rho_max.is_finite() && rho_max > 0.0) {
        return err_json("rho_max must be positive");
    }
    let rows = match figure_rho_rows(p, q, 0.0, rho_max, steps.clamp(2, 2001), &solver()) {
        Ok(rows) => rows,
        Err(e) => return err_json(&e.to_string()),
    };
    let source = Distribution::new(vec![p, 1.0 - p]).expect("validated by figure_rho_rows");
    let critical = if q > 0.0 { bsc_critical_rho(p, q) } else { 0.0 };
    let curve = Curve {
        points: rows
            .into_iter()
            .map(|r| CurvePoint {
                x: r.sweep_value,
                exponent: r.exponent,
                noiseless: noiseless_exponent(&source, r.sweep_value),
                flat: r.flat,
            })
            .collect(),
        critical: if critical.is_finite() { critical } else { -1.0 },
        critical_finite: critical.is_finite(),
    };
    serde_json::to_string(&curve).expect("curve serializes")
}

/// Solve one BSC instance and report the hull geometry behind the flat flag.
#[wasm_bindgen]
pub fn solve_point(p: f64, q: f64, rho: f64) -> String {
    if !(p > 0.0 && p < 1.0) {
        return err_json("p must be in (0, 1)");
    }
    if !(0.0..=0.5).contains(&q) {
        return err_json("q must be in [0, 0.5]");
    }
    if !(rho.is_finite() && rho >= 0.0) {
        return err_json("rho must be non-negative");
    }
    let source = Distribution::new(vec![p, 1.0 - p]).expect("p checked");
    let channel = Channel::bsc(q).expect("q checked");
    let problem = GuessingProblem::new(source.clone(), channel.clone(), rho).expect("dims match");
    let res = match solve_exponent(&problem, &solver()) {
        Ok(r) => r,
        Err(e) => return err_json(&e.to_string()),
    };
    let tilted = tilted_distribution(&source, rho);
    let member = hull_membership(&tilted, &channel, HULL_TOL).member;
    let noiseless = noiseless_exponent(&source, rho);
    let rho_critical = if q > 0.0 { bsc_critical_rho(p, q) } else { 0.0 };
    let report = PointReport {
        exponent_nats: res.value,
        noiseless_nats: noiseless,
        penalty_nats: (res.value - noiseless).max(0.0),
        flat: res.flat,
        v_star: res.v_star.probs().to_vec(),
        q_induced: res.q_induced.probs().to_vec(),
        tilted: tilted.probs().to_vec(),
        hull_low: q.min(1.0 - q),
        hull_high: q.max(1.0 - q),
        hull_member: member,
        q_critical: bsc_critical_q(p),
        rho_critical: if rho_critical.is_finite() { rho_critical } else { -1.0 },
        rho_critical_finite: rho_critical.is_finite(),
    };
    serde_json::to_string(&report).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_curve_matches_library_values() {
        let parsed: serde_json::Value =
            serde_json::from_str(&curve_vs_noise(0.25, 1.0, 11)).unwrap();
        let points = parsed["points"].as_array().unwrap();
        assert!(points.len() >= 11);
        assert!((parsed["critical"].as_f64().unwrap() - 0.3660254037844386).abs() < 1e-12);
        // First point is the clean channel: the noiseless exponent.
        assert!((points[0]["exponent"].as_f64().unwrap() - 0.6238107163648714).abs() < 1e-6);
        // Last point is q = 0.5: ln 2.
        let last = points.last().unwrap();
        assert!((last["exponent"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn moment_order_curve_has_breakpoint() {
        let parsed: serde_json::Value =
            serde_json::from_str(&curve_vs_moment_order(0.25, 0.35, 3.0, 31)).unwrap();
        assert!(parsed["critical_finite"].as_bool().unwrap());
        assert!((parsed["critical"].as_f64().unwrap() - 0.7747055012825338).abs() < 1e-9);
    }

    #[test]
    fn point_solve_reports_hull() {
        let parsed: serde_json::Value = serde_json::from_str(&solve_point(0.25, 0.45, 1.0)).unwrap();
        assert!(!parsed["flat"].as_bool().unwrap());
        assert!(!parsed["hull_member"].as_bool().unwrap());
        assert!((parsed["exponent_nats"].as_f64().unwrap() - 0.6519042220258962).abs() < 1e-6);

        let flat: serde_json::Value = serde_json::from_str(&solve_point(0.25, 0.35, 1.0)).unwrap();
        assert!(flat["flat"].as_bool().unwrap());
        assert!(flat["hull_member"].as_bool().unwrap());
    }

    #[test]
    fn invalid_inputs_return_error_objects() {
        let parsed: serde_json::Value = serde_json::from_str(&solve_point(1.5, 0.3, 1.0)).unwrap();
        assert!(parsed["error"].is_string());
        let parsed: serde_json::Value =
            serde_json::from_str(&curve_vs_noise(0.0, 1.0, 11)).unwrap();
        assert!(parsed["error"].is_string());
    }
}
