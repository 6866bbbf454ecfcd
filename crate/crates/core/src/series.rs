//! Truncated formal power series over exact rationals, the `A_i`
//! recursion, and the generating function `f(z) = Σ_{i≥1} A_i z^i`.

use std::fmt;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 64;

/// `Σ_{k ≤ order} c_k x^k`; every operation is exact through `order`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSeries {
    coeffs: Vec<BigRational>,
}

impl PowerSeries {
    pub fn zero(order: usize) -> Self {
        PowerSeries { coeffs: vec![BigRational::zero(); order + 1] }
    }

    pub fn constant(c: BigRational, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(BigRational::one(), order)
    }

    /// The formal variable `x`.
    pub fn variable(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = BigRational::one();
        }
        s
    }

    /// Coefficients past `order` are dropped; missing ones are zero.
    pub fn from_coeffs(mut coeffs: Vec<BigRational>, order: usize) -> Self {
        coeffs.resize(order + 1, BigRational::zero());
        PowerSeries { coeffs }
    }

    pub fn from_integers(coeffs: &[i64], order: usize) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect(), order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// `coef(self, x^k)`, zero past the truncation order.
    pub fn coef(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    fn common_order(&self, other: &Self) -> usize {
        self.order().min(other.order())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.common_order(other);
        PowerSeries { coeffs: (0..=n).map(|k| &self.coeffs[k] + &other.coeffs[k]).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.common_order(other);
        PowerSeries { coeffs: (0..=n).map(|k| &self.coeffs[k] - &other.coeffs[k]).collect() }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        PowerSeries { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.common_order(other);
        let mut out = vec![BigRational::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        PowerSeries { coeffs: out }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `self(g(x))`; requires `g(0) = 0`.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        if !g.coeffs[0].is_zero() {
            return Err(PermlabError::precondition("composition needs an inner series with zero constant term"));
        }
        let n = self.common_order(g);
        let mut acc = Self::zero(n);
        for c in self.coeffs[..=n].iter().rev() {
            acc = acc.mul(g);
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() {
            return Err(PermlabError::precondition("series with zero constant term has no inverse"));
        }
        let n = self.order();
        let mut out: Vec<BigRational> = Vec::with_capacity(n + 1);
        out.push(c0.recip());
        for k in 1..=n {
            let mut s = BigRational::zero();
            for j in 1..=k {
                s += &self.coeffs[j] * &out[k - j];
            }
            out.push(-s / c0);
        }
        Ok(PowerSeries { coeffs: out })
    }

    /// Formal derivative; the order drops by one.
    pub fn derivative(&self) -> Self {
        let n = self.order();
        if n == 0 {
            return Self::zero(0);
        }
        PowerSeries {
            coeffs: (1..=n).map(|k| &self.coeffs[k] * BigRational::from_integer(k.into())).collect(),
        }
    }

    /// Antiderivative with zero constant term; the order rises by one.
    pub fn integral(&self) -> Self {
        let n = self.order() + 1;
        let mut out = vec![BigRational::zero(); n + 1];
        for k in 1..=n {
            out[k] = &self.coeffs[k - 1] / BigRational::from_integer(k.into());
        }
        PowerSeries { coeffs: out }
    }

    /// `ln(self)`; requires constant term 1.
    pub fn ln(&self) -> Result<Self> {
        if !self.coeffs[0].is_one() {
            return Err(PermlabError::precondition("logarithm needs constant term 1"));
        }
        if self.order() == 0 {
            return Ok(Self::zero(0));
        }
        let quotient = self.derivative().mul(&self.inverse()?.truncate(self.order() - 1));
        Ok(quotient.integral())
    }

    /// Keeps terms through `order`.
    pub fn truncate(&self, order: usize) -> Self {
        Self::from_coeffs(self.coeffs[..=order.min(self.order())].to_vec(), order.min(self.order()))
    }

    pub fn eval_rational(&self, z: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * z + c)
    }

    pub fn eval_f64(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c.to_f64().unwrap_or(f64::NAN))
    }
}

impl fmt::Display for PowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})x")?,
                _ => write!(f, "({c})x^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(x^{})", self.order() + 1)
    }
}

/// `a_i = -(-1)^i` for `i ≥ 1`.
pub fn a_constant(i: u32) -> Result<i64> {
    if i < 1 {
        return Err(PermlabError::precondition("a_i is defined for i ≥ 1"));
    }
    Ok(if i % 2 == 0 { -1 } else { 1 })
}

/// `A_0, .., A_K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalanTable {
    pub values: Vec<BigInt>,
}

impl CatalanTable {
    /// Decimal strings, since the values outgrow 64-bit integers.
    pub fn decimal_values(&self) -> Vec<String> {
        self.values.iter().map(|v| v.to_string()).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,A_i")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{i},{v}")?;
        }
        Ok(())
    }
}

/// `A_0 = 1`, `A_i = a_i + Σ_{k=1}^{i-1} a_k coef(P^{2k+1}, t^{i-k})` with
/// `P = Σ_j A_j t^j`.
///
/// `coef(P^m, t^s)` involves only `A_0, .., A_s`, so the table
/// `pw[m][s] = coef(P^m, t^s)` is filled column by column as each `A_s`
/// becomes known, via `pw[m][s] = Σ_j A_j pw[m-1][s-j]`.
pub fn catalan_by_recursion(k_max: usize) -> Result<CatalanTable> {
    let max_power = 2 * k_max.max(1) + 1;
    let mut pw: Vec<Vec<BigInt>> = vec![Vec::with_capacity(k_max + 1); max_power + 1];
    let mut values: Vec<BigInt> = Vec::with_capacity(k_max + 1);
    for s in 0..=k_max {
        let a_s = if s == 0 {
            BigInt::one()
        } else {
            let mut acc = BigInt::from(a_constant(s as u32)?);
            for k in 1..s {
                acc += BigInt::from(a_constant(k as u32)?) * &pw[2 * k + 1][s - k];
            }
            acc
        };
        values.push(a_s);
        pw[0].push(if s == 0 { BigInt::one() } else { BigInt::zero() });
        for m in 1..=max_power {
            let c: BigInt = (0..=s).map(|j| &values[j] * &pw[m - 1][s - j]).sum();
            pw[m].push(c);
        }
    }
    Ok(CatalanTable { values })
}

/// `binom(2i, i) / (i + 1)` by the multiplicative formula.
pub fn catalan_closed_form(i: usize) -> BigInt {
    let mut c = BigInt::one();
    for k in 0..i {
        c = c * BigInt::from(2 * (2 * k + 1)) / BigInt::from(k + 2);
    }
    c
}

/// `Σ_{i=1}^{order} A_i z^i` as an exact series.
pub fn generating_series(order: usize) -> Result<PowerSeries> {
    let table = catalan_by_recursion(order)?;
    let mut coeffs: Vec<BigRational> = table.values.into_iter().map(BigRational::from_integer).collect();
    coeffs[0] = BigRational::zero();
    Ok(PowerSeries::from_coeffs(coeffs, order))
}

/// `(1 - sqrt(1 - 4z)) / (1 + sqrt(1 - 4z))` for `z ≤ 1/4`.
pub fn generating_closed_form(z: f64) -> Result<f64> {
    if !(z <= 0.25) {
        return Err(PermlabError::precondition(
            "f(z) has its singularity at z = 1/4; the closed form is not real beyond it",
        ));
    }
    let s = (1.0 - 4.0 * z).sqrt();
    Ok((1.0 - s) / (1.0 + s))
}

/// Both routes to `f(z)` and a bound on the series tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratingValue {
    pub z: f64,
    pub order: usize,
    pub series: f64,
    pub closed_form: f64,
    /// `Σ_{i>order} 4^i |z|^i / (sqrt(π) i^{3/2})`, bounding the dropped terms.
    pub tail_bound: f64,
}

pub fn generating_function_value(z: f64, order: usize) -> Result<GeneratingValue> {
    if !(z.abs() < 0.25) {
        return Err(PermlabError::precondition(
            "the series for f(z) diverges for |z| ≥ 1/4 (singularity at z = 1/4)",
        ));
    }
    let table = catalan_by_recursion(order)?;
    let mut series = 0.0;
    let mut zi = 1.0;
    for a in table.values.iter().skip(1) {
        zi *= z;
        series += a.to_f64().unwrap_or(f64::INFINITY) * zi;
    }
    let x = 4.0 * z.abs();
    let m = (order + 1) as f64;
    let tail_bound = x.powf(m) / (std::f64::consts::PI.sqrt() * m.powf(1.5) * (1.0 - x));
    Ok(GeneratingValue { z, order, series, closed_form: generating_closed_form(z)?, tail_bound })
}

/// Residuals of `p + p f(ρp) = 1` at `p = 1 - ρ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEquationCheck {
    pub rho: String,
    pub order: usize,
    pub closed_form_residual: f64,
    pub series_residual: f64,
    pub series_tail_bound: f64,
    pub holds: bool,
}

/// Checks `p + p f(ρp) = 1` for rational `ρ ∈ (0, 1/2)`. The series route is
/// summed exactly in rationals before rounding.
pub fn verify_functional_equation(rho: &BigRational, order: usize) -> Result<FunctionalEquationCheck> {
    let half = BigRational::new(1.into(), 2.into());
    if !rho.is_positive() || rho >= &half {
        return Err(PermlabError::precondition(
            "the identity p + p f(ρp) = 1 holds only for 0 < ρ < 1/2",
        ));
    }
    let p = BigRational::one() - rho;
    let z = rho * &p;
    let zf = z.to_f64().unwrap_or(f64::NAN);
    let pf = p.to_f64().unwrap_or(f64::NAN);
    let closed_form_residual = (pf + pf * generating_closed_form(zf)? - 1.0).abs();
    let f_series = generating_series(order)?.eval_rational(&z);
    let exact = &p + &p * f_series - BigRational::one();
    let series_residual = exact.abs().to_f64().unwrap_or(f64::NAN);
    let x = 4.0 * zf;
    let m = (order + 1) as f64;
    let series_tail_bound = pf * x.powf(m) / (std::f64::consts::PI.sqrt() * m.powf(1.5) * (1.0 - x));
    Ok(FunctionalEquationCheck {
        rho: rho.to_string(),
        order,
        closed_form_residual,
        series_residual,
        series_tail_bound,
        holds: closed_form_residual <= 1e-12 && series_residual <= series_tail_bound + 1e-15,
    })
}

/// `p + p f(ρp) - 1` from the closed form for any `ρ ∈ (0, 1)`; zero below
/// `1/2`, `(1 - ρ)/ρ - 1` above, where `sqrt(1 - 4ρ(1-ρ)) = |1 - 2ρ|`
/// picks the other branch.
pub fn functional_equation_residual(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(PermlabError::precondition("ρ must lie in (0, 1)"));
    }
    let p = 1.0 - rho;
    Ok(p + p * generating_closed_form(rho * p)? - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn a_constant_alternates() {
        assert_eq!(a_constant(1).unwrap(), 1);
        assert_eq!(a_constant(2).unwrap(), -1);
        assert_eq!(a_constant(7).unwrap(), 1);
        assert!(a_constant(0).is_err());
    }

    #[test]
    fn first_catalan_numbers() {
        let t = catalan_by_recursion(4).unwrap();
        let want: Vec<BigInt> = [1, 1, 2, 5, 14].iter().map(|&v| BigInt::from(v)).collect();
        assert_eq!(t.values, want);
        assert_eq!(a_constant(2).unwrap() + 3 * a_constant(1).unwrap(), 2);
        assert_eq!(catalan_closed_form(10), BigInt::from(16796));
    }

    #[test]
    fn inverse_and_log_of_simple_series() {
        // 1/(1 - x) = Σ x^k; ln(1/(1-x)) = Σ x^k / k
        let one_minus_x = PowerSeries::from_integers(&[1, -1], 8);
        let geo = one_minus_x.inverse().unwrap();
        assert!(geo.coeffs().iter().all(|c| c.is_one()));
        let l = geo.ln().unwrap();
        for k in 1..=8 {
            assert_eq!(l.coef(k), q(1, k as i64));
        }
        assert!(PowerSeries::variable(4).inverse().is_err());
        assert!(PowerSeries::from_integers(&[2, 1], 4).ln().is_err());
    }

    #[test]
    fn composition_and_calculus() {
        // (1 + x)^2 ∘ (x + x^2) = 1 + 2x + 3x^2 + 2x^3 + x^4
        let outer = PowerSeries::from_integers(&[1, 2, 1], 6);
        let inner = PowerSeries::from_integers(&[0, 1, 1], 6);
        assert_eq!(outer.compose(&inner).unwrap(), PowerSeries::from_integers(&[1, 2, 3, 2, 1], 6));
        assert!(outer.compose(&outer).is_err());
        let s = PowerSeries::from_integers(&[3, 1, 4, 1, 5], 4);
        assert_eq!(s.derivative().integral().coef(3), s.coef(3));
        assert_eq!(s.pow(3), s.mul(&s).mul(&s));
        assert!(s.to_string().ends_with("O(x^5)"));
    }

    #[test]
    fn generating_function_routes() {
        let g = generating_function_value(0.0, 16).unwrap();
        assert_eq!((g.series, g.closed_form), (0.0, 0.0));
        let g = generating_function_value(3.0 / 16.0, 64).unwrap();
        assert!((g.closed_form - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.series - 1.0 / 3.0).abs() < 1e-9);
        assert!(generating_function_value(0.3, 16).is_err());
        assert!(generating_closed_form(0.3).is_err());
    }

    #[test]
    fn functional_equation() {
        let c = verify_functional_equation(&q(1, 4), 64).unwrap();
        assert!(c.closed_form_residual <= 1e-12 && c.holds);
        let c = verify_functional_equation(&q(1, 1_000_000), 16).unwrap();
        assert!(c.closed_form_residual <= 1e-10);
        assert!(verify_functional_equation(&q(3, 5), 16).is_err());
        assert!(verify_functional_equation(&q(1, 2), 16).is_err());
        let gap = functional_equation_residual(0.6).unwrap();
        assert!((gap - (0.4 / 0.6 - 1.0)).abs() < 1e-12);
    }
}
