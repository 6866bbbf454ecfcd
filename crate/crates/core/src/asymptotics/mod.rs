//! Large-`N` exponents built from the cluster limits `A_i`: the profile
//! maximization, the boundary of the self-consistency equation, the
//! thinned (`ρ`) variant, and the permanent probe of the product ansatz.

mod eq51;
mod permanent;
mod rho;

pub use eq51::{
    eval_eq51, ln_big_rational, maximize_eq51, per_vertex_log_fast, ConnectivityProfile, Eq51Maximum, Eq51Value,
    MAX_PROFILE_INDEX, MAX_PROFILE_N,
};
pub use permanent::{
    conjecture2_permanent, permanent_curve, permanent_ryser, PermanentReport, MAX_PERMANENT_N,
};
pub use rho::{formal_series_check, rho_variant, FormalSeriesCheck, RhoPoint};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};
use crate::series::CatalanTable;

/// `S(p) = Σ_{i≥0} A_i p^{i+1} = (1 - sqrt(1 - 4p)) / 2` on `[0, 1/4]`.
pub fn cluster_sum(p: f64) -> Result<f64> {
    if !(0.0..=0.25).contains(&p) {
        return Err(PermlabError::precondition("S(p) is real only for 0 ≤ p ≤ 1/4"));
    }
    Ok((1.0 - (1.0 - 4.0 * p).sqrt()) / 2.0)
}

/// `Σ_{i≥0} A_i p^{i+1} / (i + 1) = 1 - s + ln((1 + s)/2)` with
/// `s = sqrt(1 - 4p)`.
pub fn integrated_cluster_sum(p: f64) -> Result<f64> {
    if !(0.0..=0.25).contains(&p) {
        return Err(PermlabError::precondition("the integrated sum is real only for 0 ≤ p ≤ 1/4"));
    }
    let s = (1.0 - 4.0 * p).sqrt();
    Ok(1.0 - s + ((1.0 + s) / 2.0).ln())
}

/// `q(p) = -1 + Σ A_i p^{i+1}/(i+1) - ln p`.
pub fn q_exponent(p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(PermlabError::precondition("q(p) needs p > 0"));
    }
    Ok(-1.0 + integrated_cluster_sum(p)? - p.ln())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eq54Report {
    /// `(p, S(p))` samples over `(0, 1/4]`.
    pub samples: Vec<(f64, f64)>,
    /// `(p, closed form, truncated series)` at a few interior points.
    pub series_checks: Vec<(f64, f64, f64)>,
    pub sup_point: f64,
    pub sup_value: f64,
    pub target: f64,
    pub solvable: bool,
    /// `q` at the boundary point, where `S` comes closest to the target.
    pub q_at_boundary: f64,
    pub conclusion: String,
}

/// Scans `S(p)` over its real domain and records that it never reaches 1.
pub fn attempt_eq54(table: &CatalanTable) -> Result<Eq54Report> {
    let samples: Vec<(f64, f64)> = (1..=100)
        .map(|k| {
            let p = 0.0025 * k as f64;
            cluster_sum(p).map(|s| (p, s))
        })
        .collect::<Result<_>>()?;
    let monotone = samples.windows(2).all(|w| w[1].1 > w[0].1);
    let series_checks = [0.05, 0.1, 0.15]
        .iter()
        .map(|&p| {
            let mut pi = p;
            let mut s = 0.0;
            for a in &table.values {
                s += a.to_f64().unwrap_or(f64::INFINITY) * pi;
                pi *= p;
            }
            cluster_sum(p).map(|c| (p, c, s))
        })
        .collect::<Result<_>>()?;
    let sup_point = 0.25;
    let sup_value = cluster_sum(sup_point)?;
    let target = 1.0;
    let solvable = sup_value >= target || !monotone;
    let q_at_boundary = q_exponent(sup_point)?;
    let conclusion = if solvable {
        "S(p) reaches 1 on (0, 1/4]".to_string()
    } else {
        format!(
            "S(p) increases to its supremum {sup_value} at p = 1/4, the edge of its real domain; \
             S(p) = 1 has no solution and q stays at {q_at_boundary:.6} < 1"
        )
    };
    Ok(Eq54Report { samples, series_checks, sup_point, sup_value, target, solvable, q_at_boundary, conclusion })
}

/// Profile maxima for each `N`, for extrapolation in `N`.
pub fn q_n_sequence(ns: &[u64], max_index: usize, table: &CatalanTable) -> Result<Vec<Eq51Maximum>> {
    ns.iter().map(|&n| maximize_eq51(n, max_index, table)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::catalan_by_recursion;

    #[test]
    fn cluster_sum_closed_form_values() {
        assert!((cluster_sum(0.25).unwrap() - 0.5).abs() < 1e-12);
        assert!((cluster_sum(0.1).unwrap() - (1.0 - 0.6f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!(cluster_sum(0.3).is_err());
    }

    #[test]
    fn eq54_has_no_solution() {
        let table = catalan_by_recursion(64).unwrap();
        let r = attempt_eq54(&table).unwrap();
        assert!(!r.solvable);
        assert!((r.sup_value - 0.5).abs() < 1e-9);
        assert!((r.q_at_boundary - std::f64::consts::LN_2).abs() < 1e-12);
        for (_, c, s) in r.series_checks {
            assert!((c - s).abs() < 1e-9);
        }
    }
}
