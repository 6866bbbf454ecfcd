//! Exact evolution of the interchange walk on the permutation group, and
//! a Monte Carlo sampler of the same process.
//!
//! The group-algebra coefficients `f(g, t)` of `e^{-Ht}` solve
//! `df/dt = -Hf` with `(Hf)(g) = Σ_{edges (i,j)} [f(g) - f(g·I_ij)]`.
//! Writing `H = E·I - A` with `A = Σ I_ij` entrywise nonnegative, the
//! solution is the Poisson mixture `e^{-Et} Σ_k (Et)^k/k! (A/E)^k δ_id`,
//! which is what [`GroupSpace::evolve`] evaluates.

mod perm;
mod sample;

pub use perm::{factorial_u64, Permutation, MAX_RANKABLE};
pub use sample::{
    empirical_marginal, empirical_pair_gap, read_jsonl, sample_walk, sample_walk_with_threads,
    tv_with_standard_error, write_jsonl, PairGap, SampleRecord, WalkSampleBatch,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};
use crate::lattice::{Lattice, SiteField};

/// Default cap on `N!`, i.e. `8!`.
pub const DEFAULT_GROUP_CAP: u64 = 40_320;

/// Poisson tail mass dropped by the uniformization sum.
pub const UNIFORMIZATION_TAIL: f64 = 1e-12;

/// Probability vector over `S_N` indexed by Lehmer rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupDistribution {
    pub n: usize,
    pub t: f64,
    pub weights: Vec<f64>,
}

impl GroupDistribution {
    pub fn weight(&self, p: &Permutation) -> f64 {
        self.weights[p.rank() as usize]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &GroupDistribution) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Law of `p(i)`, the position at time `t` of the particle started at `i`.
    pub fn marginal_of_vertex(&self, i: usize) -> Result<SiteField> {
        if i >= self.n {
            return Err(PermlabError::precondition(format!("vertex {i} out of range")));
        }
        let mut out = vec![0.0; self.n];
        for (rank, &w) in self.weights.iter().enumerate() {
            let p = Permutation::unrank(self.n, rank as u64)?;
            out[p.apply(i)] += w;
        }
        Ok(SiteField(out))
    }
}

/// The state space `S_N` of a lattice together with the action of every
/// edge transposition, precomputed once.
pub struct GroupSpace {
    lattice: Lattice,
    size: usize,
    // next[rank * E + e] = rank of I_e ∘ p
    next: Vec<u32>,
}

impl GroupSpace {
    pub fn new(lattice: &Lattice, cap: u64) -> Result<Self> {
        let n = lattice.vertex_count();
        let size = if n <= MAX_RANKABLE { factorial_u64(n) } else { u64::MAX };
        if n > MAX_RANKABLE || size > cap {
            return Err(PermlabError::CapExceeded {
                what: "group walk",
                requested: if n > MAX_RANKABLE { u128::MAX } else { size as u128 },
                cap: cap as u128,
            });
        }
        let size = size as usize;
        let edges = lattice.edges();
        let ne = edges.len();
        let next: Vec<u32> = (0..size)
            .into_par_iter()
            .flat_map_iter(|rank| {
                let p = Permutation::unrank(n, rank as u64).expect("rank below n!");
                edges.iter().map(move |&(a, b)| {
                    let swapped: Vec<usize> = p
                        .images()
                        .iter()
                        .map(|&x| if x == a { b } else if x == b { a } else { x })
                        .collect();
                    Permutation::from_images(swapped).expect("swap keeps a bijection").rank() as u32
                })
            })
            .collect();
        debug_assert_eq!(next.len(), size * ne);
        Ok(GroupSpace { lattice: lattice.clone(), size, next })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Rank reached from `rank` by the transposition of edge `e`.
    pub fn neighbor(&self, rank: usize, e: usize) -> usize {
        self.next[rank * self.lattice.edge_count() + e] as usize
    }

    /// `(A/E) v`, the uniform edge-transposition average.
    fn average_into(&self, v: &[f64], out: &mut [f64]) {
        let ne = self.lattice.edge_count();
        let inv = 1.0 / ne as f64;
        out.par_chunks_mut(4096).enumerate().for_each(|(c, chunk)| {
            let base = c * 4096;
            for (k, o) in chunk.iter_mut().enumerate() {
                let g = base + k;
                let mut acc = 0.0;
                for &h in &self.next[g * ne..(g + 1) * ne] {
                    acc += v[h as usize];
                }
                *o = acc * inv;
            }
        });
    }

    /// `-Hf`, the generator of the walk applied to `f`.
    pub fn generator_into(&self, f: &[f64], out: &mut [f64]) {
        let ne = self.lattice.edge_count();
        for (g, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &h in &self.next[g * ne..(g + 1) * ne] {
                acc += f[h as usize] - f[g];
            }
            *o = acc;
        }
    }

    /// `f(·, t)` started from the point mass at the identity.
    pub fn evolve(&self, t: f64) -> Result<GroupDistribution> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(PermlabError::precondition("time t must be finite and ≥ 0"));
        }
        let n = self.lattice.vertex_count();
        let mut v = vec![0.0; self.size];
        v[0] = 1.0;
        let lambda = self.lattice.edge_count() as f64 * t;
        if lambda == 0.0 {
            return Ok(GroupDistribution { n, t, weights: v });
        }
        let mut out = vec![0.0; self.size];
        let mut scratch = vec![0.0; self.size];
        let ln_lambda = lambda.ln();
        let mut log_w = -lambda;
        let mut k = 0usize;
        loop {
            let w = log_w.exp();
            if w > 0.0 {
                out.par_iter_mut().zip(&v).for_each(|(o, &x)| *o += w * x);
            }
            // For k + 2 > λ the remaining Poisson mass is dominated by a
            // geometric series starting at the next weight.
            let next_log_w = log_w + ln_lambda - ((k + 1) as f64).ln();
            let ratio = lambda / (k + 2) as f64;
            if ratio < 1.0 && next_log_w.exp() / (1.0 - ratio) <= UNIFORMIZATION_TAIL {
                break;
            }
            self.average_into(&v, &mut scratch);
            std::mem::swap(&mut v, &mut scratch);
            log_w = next_log_w;
            k += 1;
        }
        Ok(GroupDistribution { n, t, weights: out })
    }
}

/// Evolves from the identity with the default group-size cap.
pub fn evolve_group(lattice: &Lattice, t: f64) -> Result<GroupDistribution> {
    GroupSpace::new(lattice, DEFAULT_GROUP_CAP)?.evolve(t)
}
