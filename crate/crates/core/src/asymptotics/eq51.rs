//! The cluster-counting expression for the total mass and its maximization
//! over cluster profiles.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};
use crate::lattice::factorial;
use crate::series::CatalanTable;

pub const MAX_PROFILE_N: u64 = 10_000;
pub const MAX_PROFILE_INDEX: usize = 16;

/// `counts[i - 1] = m_i`, the number of clusters of `i + 1` vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityProfile {
    pub n: u64,
    pub counts: Vec<u64>,
}

impl ConnectivityProfile {
    pub fn empty(n: u64, max_index: usize) -> Self {
        ConnectivityProfile { n, counts: vec![0; max_index] }
    }

    pub fn max_index(&self) -> usize {
        self.counts.len()
    }

    /// `Σ (i + 1) m_i`.
    pub fn clustered_vertices(&self) -> u64 {
        self.counts.iter().enumerate().map(|(k, &m)| (k as u64 + 2) * m).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.clustered_vertices() > self.n {
            return Err(PermlabError::precondition(format!(
                "profile clusters {} vertices but N = {}",
                self.clustered_vertices(),
                self.n
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eq51Value {
    pub exact: BigRational,
    /// `ln(value) / N`.
    pub per_vertex_log: f64,
}

/// Natural log of a positive big rational without overflowing `f64`.
pub fn ln_big_rational(x: &BigRational) -> f64 {
    fn ln_int(v: &BigInt) -> f64 {
        let bits = v.bits();
        if bits <= 1000 {
            return v.to_f64().unwrap_or(f64::NAN).ln();
        }
        let shift = bits - 64;
        let top: BigInt = v >> shift;
        top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
    }
    ln_int(x.numer()) - ln_int(x.denom())
}

/// `Π_i (A_i i! / N^i)^{m_i} · N! / (M! (N-M)!) · M! / (Π m_i! Π ((i+1)!)^{m_i})`
/// with `M = Σ (i + 1) m_i`, in exact arithmetic.
pub fn eval_eq51(profile: &ConnectivityProfile, table: &CatalanTable) -> Result<Eq51Value> {
    profile.validate()?;
    if profile.n == 0 {
        return Err(PermlabError::precondition("N must be ≥ 1"));
    }
    if table.values.len() <= profile.max_index() {
        return Err(PermlabError::precondition("Catalan table shorter than the profile"));
    }
    let n = profile.n;
    let m_total = profile.clustered_vertices();
    let mut value = BigRational::one();
    for (k, &m) in profile.counts.iter().enumerate() {
        if m == 0 {
            continue;
        }
        let i = k as u64 + 1;
        let base = BigRational::new(&table.values[i as usize] * factorial(i), BigInt::from(n).pow(i as u32));
        value *= num_traits::pow(base, m as usize);
        value /= BigRational::from_integer(factorial(m) * num_traits::pow(factorial(i + 1), m as usize));
    }
    // N!/(M!(N-M)!) · M! = N!/(N-M)!
    let falling: BigInt = ((n - m_total + 1)..=n).fold(BigInt::one(), |acc, k| acc * k);
    value *= BigRational::from_integer(falling);
    let per_vertex_log = if value.is_positive() { ln_big_rational(&value) / n as f64 } else { f64::NEG_INFINITY };
    Ok(Eq51Value { exact: value, per_vertex_log })
}

/// Floating per-vertex log of the same expression, from tabulated `ln k!`.
struct LogEvaluator {
    n: u64,
    ln_fact: Vec<f64>,
    ln_weight: Vec<f64>,
}

impl LogEvaluator {
    fn new(n: u64, max_index: usize, table: &CatalanTable) -> Self {
        let mut ln_fact = vec![0.0; n as usize + 2];
        for k in 2..ln_fact.len() {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        let ln_weight = (1..=max_index)
            .map(|i| {
                let a = table.values[i].to_f64().unwrap_or(f64::INFINITY).ln();
                let ifact = ln_fact.get(i).copied().unwrap_or_else(|| crate::lattice::ln_factorial(i as u64));
                let i1fact = ln_fact.get(i + 1).copied().unwrap_or_else(|| crate::lattice::ln_factorial(i as u64 + 1));
                a + ifact - i as f64 * (n as f64).ln() - i1fact
            })
            .collect();
        LogEvaluator { n, ln_fact, ln_weight }
    }

    fn per_vertex_log(&self, counts: &[u64]) -> f64 {
        let m_total: u64 = counts.iter().enumerate().map(|(k, &m)| (k as u64 + 2) * m).sum();
        if m_total > self.n {
            return f64::NEG_INFINITY;
        }
        let mut s = self.ln_fact[self.n as usize] - self.ln_fact[(self.n - m_total) as usize];
        for (k, &m) in counts.iter().enumerate() {
            s += m as f64 * self.ln_weight[k] - self.ln_fact[m as usize];
        }
        s / self.n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eq51Maximum {
    pub profile: ConnectivityProfile,
    pub q_n: f64,
    pub method: String,
}

const EXHAUSTIVE_LIMIT: u128 = 200_000;

/// Maximizes the per-vertex log over integer profiles with `m_i = 0` for
/// `i > max_index`.
pub fn maximize_eq51(n: u64, max_index: usize, table: &CatalanTable) -> Result<Eq51Maximum> {
    if n < 1 {
        return Err(PermlabError::precondition("N must be ≥ 1"));
    }
    if n > MAX_PROFILE_N {
        return Err(PermlabError::CapExceeded { what: "profile size N", requested: n as u128, cap: MAX_PROFILE_N as u128 });
    }
    if max_index > MAX_PROFILE_INDEX {
        return Err(PermlabError::CapExceeded {
            what: "profile index I_max",
            requested: max_index as u128,
            cap: MAX_PROFILE_INDEX as u128,
        });
    }
    if table.values.len() <= max_index {
        return Err(PermlabError::precondition("Catalan table shorter than I_max"));
    }
    let eval = LogEvaluator::new(n, max_index, table);
    let box_size: u128 = (1..=max_index).map(|i| (n / (i as u64 + 1) + 1) as u128).product();
    let (counts, method) = if box_size <= EXHAUSTIVE_LIMIT {
        (exhaustive(&eval, n, max_index), "exhaustive".to_string())
    } else {
        (knapsack(&eval, n, max_index), "knapsack over the clustered vertex count".to_string())
    };
    let q_n = eval.per_vertex_log(&counts);
    Ok(Eq51Maximum { profile: ConnectivityProfile { n, counts }, q_n, method })
}

fn exhaustive(eval: &LogEvaluator, n: u64, max_index: usize) -> Vec<u64> {
    let mut best = (eval.per_vertex_log(&vec![0; max_index]), vec![0; max_index]);
    let mut cur = vec![0u64; max_index];
    fn rec(k: usize, used: u64, n: u64, cur: &mut Vec<u64>, eval: &LogEvaluator, best: &mut (f64, Vec<u64>)) {
        if k == cur.len() {
            let v = eval.per_vertex_log(cur);
            if v > best.0 {
                *best = (v, cur.clone());
            }
            return;
        }
        let size = k as u64 + 2;
        for m in 0..=(n - used) / size {
            cur[k] = m;
            rec(k + 1, used + m * size, n, cur, eval, best);
        }
        cur[k] = 0;
    }
    rec(0, 0, n, &mut cur, eval, &mut best);
    best.1
}

/// For a fixed clustered count `M` the objective separates over cluster
/// sizes, so a knapsack over `M` gives the exact maximum.
fn knapsack(eval: &LogEvaluator, n: u64, max_index: usize) -> Vec<u64> {
    let n = n as usize;
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    best[0] = 0.0;
    let mut choice = vec![vec![0u64; n + 1]; max_index];
    for k in 0..max_index {
        let size = k + 2;
        let mut next = vec![f64::NEG_INFINITY; n + 1];
        for used in 0..=n {
            if best[used] == f64::NEG_INFINITY {
                continue;
            }
            for m in 0..=(n - used) / size {
                let v = best[used] + m as f64 * eval.ln_weight[k] - eval.ln_fact[m];
                let to = used + m * size;
                if v > next[to] {
                    next[to] = v;
                    choice[k][to] = m as u64;
                }
            }
        }
        best = next;
    }
    let total = |m: usize| best[m] + eval.ln_fact[n] - eval.ln_fact[n - m];
    let mut at = (0..=n).fold(0, |b, m| if total(m) > total(b) { m } else { b });
    let mut counts = vec![0u64; max_index];
    for k in (0..max_index).rev() {
        counts[k] = choice[k][at];
        at -= counts[k] as usize * (k + 2);
    }
    counts
}

/// The floating per-vertex log the maximizer uses, for one profile.
pub fn per_vertex_log_fast(profile: &ConnectivityProfile, table: &CatalanTable) -> Result<f64> {
    profile.validate()?;
    if table.values.len() <= profile.max_index() {
        return Err(PermlabError::precondition("Catalan table shorter than the profile"));
    }
    Ok(LogEvaluator::new(profile.n, profile.max_index(), table).per_vertex_log(&profile.counts))
}
