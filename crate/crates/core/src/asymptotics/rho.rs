//! The thinned variant: with a fraction `ρ` of the vertices kept,
//! `p = 1 - ρ` solves the self-consistency equation for `ρ < 1/2` and the
//! exponent matches the desired value as a power series in `ρ`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};
use crate::series::{catalan_by_recursion, functional_equation_residual, PowerSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoPoint {
    pub rho: String,
    pub p: f64,
    pub order: usize,
    pub q_tilde_series: f64,
    pub q_tilde_target: f64,
    pub difference: f64,
    /// `|Σ A_i p^{i+1} ρ^i - 1|` from the closed form.
    pub self_consistency_residual: f64,
}

const TAIL_TERMS: usize = 1_000_000;

/// `q̃ = -1 + Σ A_i p^{i+1} ρ^i/(i+1) - ln p` at `p = 1 - ρ`. Terms up to
/// `order` are summed exactly; the rest follow the term ratio
/// `z · 2(2i+1)(i+1)/(i+2)^2` with `z = ρp`.
pub fn rho_variant(rho: &BigRational, order: usize) -> Result<RhoPoint> {
    let half = BigRational::new(1.into(), 2.into());
    if !rho.is_positive() || rho >= &half {
        return Err(PermlabError::precondition("the ρ-variant requires 0 < ρ < 1/2"));
    }
    let table = catalan_by_recursion(order)?;
    let p = BigRational::one() - rho;
    let z = rho * &p;

    // Σ_{i≤order} A_i z^{i+1}/(i+1), exact
    let mut partial = BigRational::zero();
    let mut zi = z.clone();
    for (i, a) in table.values.iter().enumerate() {
        partial += BigRational::new(a.clone(), BigInt::from(i + 1)) * &zi;
        zi *= &z;
    }
    let zf = z.to_f64().unwrap_or(f64::NAN);
    let last = BigRational::new(table.values[order].clone(), BigInt::from(order + 1)) * num_traits::pow(z.clone(), order + 1);
    let mut term = last.to_f64().unwrap_or(f64::NAN);
    let mut tail = 0.0;
    for i in order..order + TAIL_TERMS {
        let k = i as f64;
        term *= zf * 2.0 * (2.0 * k + 1.0) * (k + 1.0) / ((k + 2.0) * (k + 2.0));
        tail += term;
        if term <= tail * 1e-18 || term == 0.0 {
            break;
        }
    }
    let rf = rho.to_f64().unwrap_or(f64::NAN);
    let pf = p.to_f64().unwrap_or(f64::NAN);
    let sum = (partial.to_f64().unwrap_or(f64::NAN) + tail) / rf;
    let q_tilde_series = -1.0 + sum - (-rf).ln_1p();
    let q_tilde_target = 1.0 + (pf / rf) * (-rf).ln_1p();
    Ok(RhoPoint {
        rho: rho.to_string(),
        p: pf,
        order,
        q_tilde_series,
        q_tilde_target,
        difference: q_tilde_series - q_tilde_target,
        self_consistency_residual: functional_equation_residual(rf)?.abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormalSeriesCheck {
    pub order: usize,
    /// Coefficients of both expansions in `ρ`, as reduced fractions.
    pub from_exponent: Vec<String>,
    pub from_target: Vec<String>,
    /// Powers of `ρ` where the two differ.
    pub mismatches: Vec<usize>,
}

impl FormalSeriesCheck {
    pub fn equal(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Expands `-1 + Σ A_i (1-ρ)^{i+1} ρ^i/(i+1) - ln(1-ρ)` and
/// `1 + ((1-ρ)/ρ) ln(1-ρ)` in exact rationals through `ρ^order`.
pub fn formal_series_check(order: usize) -> Result<FormalSeriesCheck> {
    let table = catalan_by_recursion(order)?;
    let x = PowerSeries::variable(order + 1);
    let one = PowerSeries::one(order + 1);
    let one_minus = one.sub(&x);
    let log = one_minus.ln()?;

    let mut lhs = one.scale(&BigRational::from_integer((-1).into())).sub(&log);
    let mut p_pow = one_minus.clone();
    let mut rho_pow = PowerSeries::one(order + 1);
    for (i, a) in table.values.iter().enumerate() {
        let c = BigRational::new(a.clone(), BigInt::from(i + 1));
        lhs = lhs.add(&p_pow.mul(&rho_pow).scale(&c));
        p_pow = p_pow.mul(&one_minus);
        rho_pow = rho_pow.mul(&x);
    }
    let lhs = lhs.truncate(order);

    // (1-ρ) ln(1-ρ) has no constant term, so dividing by ρ is a shift
    let prod = one_minus.mul(&log);
    let mut rhs: Vec<BigRational> = (0..=order).map(|k| prod.coef(k + 1)).collect();
    rhs[0] += BigRational::one();
    let rhs = PowerSeries::from_coeffs(rhs, order);

    let mismatches = (0..=order).filter(|&k| lhs.coef(k) != rhs.coef(k)).collect();
    Ok(FormalSeriesCheck {
        order,
        from_exponent: lhs.coeffs().iter().map(|c| c.to_string()).collect(),
        from_target: rhs.coeffs().iter().map(|c| c.to_string()).collect(),
        mismatches,
    })
}
