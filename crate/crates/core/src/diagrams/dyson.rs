//! Time-ordered terms of the expansion of `e^{t(Δ+V)}` in powers of `V`,
//! computed by brute force on `Λ^n`.
//!
//! For an interaction sequence `p_1, .., p_m` the hierarchy
//! `u_0' = Δu_0`, `u_k' = Δu_k + V_{p_k} u_{k-1}` (with `u_k(0) = 0`)
//! generates the nested integrals, and since `⟨1, e^{Δs} u⟩ = ⟨1, u⟩` the
//! summed-over-final-states term is `∫_0^t ⟨1, V_{p_m} u_{m-1}(s)⟩ ds`.
//!
//! For `r = 0`, `⟨1, V_ij e^{Δs} w⟩ = d/ds ⟨M_ij, e^{Δs} w⟩` with `M_ij` the
//! coincidence indicator `[x_i = x_j]`, so the innermost time integral has
//! an explicit lower limit `-⟨M_{p_m}, V_{p_{m-1}} u_{m-2}(t_{m-1})⟩`.

use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};
use crate::extension::{ConfigurationSpace, PairPotential};
use crate::lattice::Lattice;
use crate::ode::{uniform_steps, Rk4};

/// Default cap on `|Λ^n|`.
pub const DEFAULT_DIAGRAM_CAP: u64 = 1_000_000;

/// Longest interaction sequence the oracle accepts.
pub const MAX_SEQUENCE: usize = 2;

/// Initial positions, with `z_0 = 0` pinned when summing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZSum {
    Single(Vec<usize>),
    /// All of `z_0, .., z_{n-1}` pairwise distinct.
    Distinct,
    /// `z_1, .., z_{n-1}` pairwise distinct, any of them may sit at `z_0`.
    DistinctOthers,
    /// No constraint.
    All,
}

/// A Dyson term and the lower-limit part of its innermost integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DysonValue {
    pub full: f64,
    /// Equal to `full` for sequences of length ≤ 1.
    pub lower: f64,
}

impl DysonValue {
    /// The upper-limit part of the innermost integral.
    pub fn upper(&self) -> f64 {
        self.full - self.lower
    }
}

fn initial_vector(space: &ConfigurationSpace, z: &ZSum) -> Result<Vec<f64>> {
    let n = space.particles();
    let nv = space.lattice().vertex_count();
    let mut w = vec![0.0; space.size()];
    match z {
        ZSum::Single(tuple) => {
            if tuple.len() != n || tuple.iter().any(|&v| v >= nv) {
                return Err(PermlabError::precondition("initial tuple must list one vertex per particle"));
            }
            w[space.encode(tuple)] = 1.0;
        }
        _ => {
            for s in 0..space.size() {
                let keep = space.coord(s, 0) == 0
                    && match z {
                        ZSum::Distinct => space.is_distinct(s),
                        ZSum::DistinctOthers => {
                            (1..n).all(|a| (a + 1..n).all(|b| space.coord(s, a) != space.coord(s, b)))
                        }
                        _ => true,
                    };
                if keep {
                    w[s] = 1.0;
                }
            }
        }
    }
    Ok(w)
}

fn coincidence(space: &ConfigurationSpace, (i, j): (usize, usize), v: &[f64]) -> f64 {
    (0..space.size()).filter(|&s| space.coord(s, i) == space.coord(s, j)).map(|s| v[s]).sum()
}

fn validate(n: usize, seq: &[(usize, usize)]) -> Result<()> {
    if !(2..=3).contains(&n) {
        return Err(PermlabError::precondition("the Dyson oracle supports n ∈ {2, 3}"));
    }
    if seq.len() > MAX_SEQUENCE {
        return Err(PermlabError::precondition(format!(
            "interaction sequence longer than {MAX_SEQUENCE}"
        )));
    }
    for &(i, j) in seq {
        if i == j || i >= n || j >= n {
            return Err(PermlabError::precondition(format!("invalid pair ({i}, {j}) for n = {n}")));
        }
    }
    Ok(())
}

/// Evaluates one interaction sequence (0-based particle pairs, `r = 0`) at
/// each of `times`, in a single integration pass.
pub fn dyson_curve(
    lattice: &Lattice,
    n: usize,
    seq: &[(usize, usize)],
    times: &[f64],
    step: f64,
    z: &ZSum,
) -> Result<Vec<DysonValue>> {
    validate(n, seq)?;
    if !(step > 0.0) {
        return Err(PermlabError::precondition("step must be > 0"));
    }
    if times.windows(2).any(|w| !(w[0] <= w[1])) || times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(PermlabError::precondition("times must be finite, nonnegative and ascending"));
    }
    let space = ConfigurationSpace::with_particles(lattice, n, DEFAULT_DIAGRAM_CAP)?;
    let w0 = initial_vector(&space, z)?;
    let mass: f64 = w0.iter().sum();
    let m = seq.len();
    if m == 0 {
        return Ok(times.iter().map(|_| DysonValue { full: mass, lower: mass }).collect());
    }

    let size = space.size();
    let pots: Vec<PairPotential> = seq.iter().map(|&(i, j)| PairPotential::single(i, j)).collect();
    // state: u_0, .., u_{m-1}, then the two running integrals
    let mut y = vec![0.0; m * size + 2];
    y[..size].copy_from_slice(&w0);
    let mut scratch = vec![0.0; size];
    let mut rhs = |y: &[f64], dy: &mut [f64]| {
        for k in 0..m {
            let (u, du) = (&y[k * size..(k + 1) * size], &mut dy[k * size..(k + 1) * size]);
            space.laplacian_into(u, du);
            if k > 0 {
                pots[k - 1].apply_into(&space, &y[(k - 1) * size..k * size], &mut scratch);
                du.iter_mut().zip(&scratch).for_each(|(d, s)| *d += s);
            }
        }
        pots[m - 1].apply_into(&space, &y[(m - 1) * size..m * size], &mut scratch);
        dy[m * size] = scratch.iter().sum();
        dy[m * size + 1] = if m >= 2 {
            pots[m - 2].apply_into(&space, &y[(m - 2) * size..(m - 1) * size], &mut scratch);
            -coincidence(&space, seq[m - 1], &scratch)
        } else {
            dy[m * size]
        };
    };

    let mut rk = Rk4::new(y.len());
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let (steps, h) = uniform_steps(t - now, step);
        for _ in 0..steps {
            rk.step(&mut y, h, &mut rhs);
        }
        now = t;
        out.push(DysonValue { full: y[m * size], lower: y[m * size + 1] });
    }
    Ok(out)
}

/// One interaction sequence at one time.
pub fn dyson_oracle(
    lattice: &Lattice,
    n: usize,
    seq: &[(usize, usize)],
    t: f64,
    step: f64,
    z: &ZSum,
) -> Result<DysonValue> {
    Ok(dyson_curve(lattice, n, seq, &[t], step, z)?[0])
}

/// `⟨1, V_{0,1} u_0(t)⟩` on `Λ^2` with `u_0` evolved from `δ_{(z1, z2)}`:
/// the single-interaction integrand before the time integral.
pub fn interaction_rate(lattice: &Lattice, z1: usize, z2: usize, t: f64, step: f64) -> Result<f64> {
    let space = ConfigurationSpace::with_particles(lattice, 2, DEFAULT_DIAGRAM_CAP)?;
    let mut u = initial_vector(&space, &ZSum::Single(vec![z1, z2]))?;
    if !(step > 0.0) || !(t >= 0.0) {
        return Err(PermlabError::precondition("need step > 0 and t ≥ 0"));
    }
    let (steps, h) = uniform_steps(t, step);
    let mut rk = Rk4::new(u.len());
    for _ in 0..steps {
        rk.step(&mut u, h, |v, dv| space.laplacian_into(v, dv));
    }
    let mut vu = vec![0.0; space.size()];
    PairPotential::single(0, 1).apply_into(&space, &u, &mut vu);
    Ok(vu.iter().sum())
}

/// The ordered interaction sequences of length `n - 1` whose pairs are
/// distinct and connect all `n` particles.
pub fn spanning_sequences(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(
        n: usize,
        pairs: &[(usize, usize)],
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if current.len() == n - 1 {
            if spans(n, current) {
                out.push(current.clone());
            }
            return;
        }
        for &p in pairs {
            if !current.contains(&p) {
                current.push(p);
                rec(n, pairs, current, out);
                current.pop();
            }
        }
    }
    if n >= 2 {
        rec(n, &pairs, &mut current, &mut out);
    }
    out
}

fn spans(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], x: usize) -> usize {
        if c[x] != x {
            let r = find(c, c[x]);
            c[x] = r;
        }
        c[x]
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
        comp[ra] = rb;
    }
    let root = find(&mut comp, 0);
    (0..n).all(|v| find(&mut comp, v) == root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sequence_is_free_mass() {
        let lat = Lattice::new(1, 5).unwrap();
        let v = dyson_oracle(&lat, 2, &[], 1.0, 0.01, &ZSum::Single(vec![0, 2])).unwrap();
        assert_eq!(v.full, 1.0);
        let v = dyson_oracle(&lat, 2, &[], 1.0, 0.01, &ZSum::Distinct).unwrap();
        assert_eq!(v.full, 4.0);
    }

    #[test]
    fn spanning_sequences_for_three_particles() {
        let seqs = spanning_sequences(3);
        assert_eq!(seqs.len(), 6);
        assert!(seqs.iter().all(|s| s[0] != s[1]));
        assert_eq!(spanning_sequences(2), vec![vec![(0, 1)]]);
        assert_eq!(spanning_sequences(4).len(), 16 * 6);
    }

    #[test]
    fn rejects_unsupported_input() {
        let lat = Lattice::new(1, 4).unwrap();
        let z = ZSum::Distinct;
        assert!(dyson_oracle(&lat, 4, &[], 1.0, 0.1, &z).is_err());
        assert!(dyson_oracle(&lat, 3, &[(0, 1), (1, 2), (0, 2)], 1.0, 0.1, &z).is_err());
        assert!(dyson_oracle(&lat, 2, &[(0, 2)], 1.0, 0.1, &z).is_err());
        assert!(dyson_oracle(&lat, 2, &[(0, 1)], 1.0, 0.0, &z).is_err());
        assert!(dyson_oracle(&lat, 2, &[], 1.0, 0.1, &ZSum::Single(vec![0])).is_err());
    }
}
