//! The extension `f^e` of the group walk to the full configuration space
//! `Λ^N`, solving `∂f^e/∂t = Δf^e + V f^e`.
//!
//! `Δ` acts coordinate-wise. `V = Σ V_{i,j}` is the two-body potential
//! that is defined on product functions by selector terms at nearest
//! neighbor (weight 1) and coincident (weight `r`) positions multiplying
//! `[φ_i(y) - φ_i(y+e)][φ_j(y) - φ_j(y+e)]`. On a general field the same
//! pattern is a sparse stencil in the two coordinates `(x_i, x_j)`:
//!
//! ```text
//! D_e F(y) = F(y, y) - F(y, y+e) - F(y+e, y) + F(y+e, y+e)
//! (V_ij F)(a, b) = -Σ_e [ [b = a+e] D_e F(a) + [a = b+e] D_e F(b)
//!                       + r [a = b] (D_e F(a) + D_e F(a-e)) ]
//! ```
//!
//! with every other coordinate held fixed. On distinct tuples the
//! Laplacian moves that land on an occupied site are cancelled by `V`,
//! leaving exactly the swap generator of the interchange walk; this is
//! the restriction identity checked throughout the test suite.

mod io;

pub use io::{read_field, write_field, FieldHeader};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};
use crate::group_walk::{factorial_u64, GroupDistribution, Permutation, MAX_RANKABLE};
use crate::lattice::Lattice;
use crate::ode::{uniform_steps, Rk4};

/// Default cap on `N^N`.
pub const DEFAULT_STATE_CAP: u64 = 1_000_000;

/// Default bound on `|r|`.
pub const DEFAULT_R_BOUND: f64 = 1.0;

/// Default RK4 step for the extension equation.
pub const DEFAULT_STEP: f64 = 0.005;

const CHUNK: usize = 1024;

/// `Λ^m` with a mixed-radix index: particle 0 is the most significant digit.
#[derive(Clone, Debug)]
pub struct ConfigurationSpace {
    lattice: Lattice,
    particles: usize,
    size: usize,
    strides: Vec<usize>,
}

impl ConfigurationSpace {
    /// The full space `Λ^N`, one coordinate per lattice vertex.
    pub fn full(lattice: &Lattice, cap: u64) -> Result<Self> {
        Self::with_particles(lattice, lattice.vertex_count(), cap)
    }

    /// `Λ^m` for `m` tracked particles.
    pub fn with_particles(lattice: &Lattice, particles: usize, cap: u64) -> Result<Self> {
        let n = lattice.vertex_count() as u128;
        let size = (0..particles).try_fold(1u128, |acc, _| acc.checked_mul(n).filter(|&s| s <= u64::MAX as u128));
        match size {
            Some(s) if s <= cap as u128 => {
                let size = s as usize;
                let mut strides = vec![1usize; particles];
                for k in (0..particles.saturating_sub(1)).rev() {
                    strides[k] = strides[k + 1] * lattice.vertex_count();
                }
                Ok(ConfigurationSpace { lattice: lattice.clone(), particles, size, strides })
            }
            other => Err(PermlabError::CapExceeded {
                what: "configuration space",
                requested: other.unwrap_or(u128::MAX),
                cap: cap as u128,
            }),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn encode(&self, tuple: &[usize]) -> usize {
        tuple.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        (0..self.particles).map(|k| self.coord(index, k)).collect()
    }

    #[inline]
    pub fn coord(&self, index: usize, particle: usize) -> usize {
        (index / self.strides[particle]) % self.lattice.vertex_count()
    }

    #[inline]
    fn stride(&self, particle: usize) -> usize {
        self.strides[particle]
    }

    /// Index of the configuration `x_k = k` (requires one particle per vertex).
    pub fn identity_index(&self) -> usize {
        let tuple: Vec<usize> = (0..self.particles).collect();
        self.encode(&tuple)
    }

    /// `f ↦ (f(x) if all coordinates distinct else 0)`; the indicator of `B`.
    pub fn is_distinct(&self, index: usize) -> bool {
        let mut seen = vec![false; self.lattice.vertex_count()];
        (0..self.particles).all(|k| !std::mem::replace(&mut seen[self.coord(index, k)], true))
    }

    /// Number of distinct tuples, `N!/(N-m)!`.
    pub fn distinct_count(&self) -> u128 {
        let n = self.lattice.vertex_count() as u128;
        (0..self.particles as u128).map(|k| n.saturating_sub(k)).product()
    }

    /// Coordinate-wise lattice Laplacian on `Λ^m`.
    pub fn laplacian_into(&self, f: &[f64], out: &mut [f64]) {
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            for (k, o) in chunk.iter_mut().enumerate() {
                *o = self.laplacian_at(f, c * CHUNK + k);
            }
        });
    }

    #[inline]
    fn laplacian_at(&self, f: &[f64], s: usize) -> f64 {
        let mut acc = Neumaier::default();
        self.laplacian_terms(f, s, &mut acc);
        acc.value()
    }

    #[inline]
    fn laplacian_terms(&self, f: &[f64], s: usize, acc: &mut Neumaier) {
        let lat = &self.lattice;
        let here = f[s];
        for k in 0..self.particles {
            let st = self.stride(k);
            let c = self.coord(s, k);
            let base = s - c * st;
            for &w in lat.neighbors(c) {
                acc.add(f[base + w * st]);
                acc.add(-here);
            }
        }
    }
}

/// Pair potential: the parameter `r` and the set of interacting pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairPotential {
    pub r: f64,
    pub pairs: Vec<(usize, usize)>,
}

impl PairPotential {
    /// Every unordered pair of `particles` particles interacts.
    pub fn all_pairs(particles: usize, r: f64) -> Self {
        let pairs = (0..particles)
            .flat_map(|i| (i + 1..particles).map(move |j| (i, j)))
            .collect();
        PairPotential { r, pairs }
    }

    /// A single interacting pair, `r = 0`.
    pub fn single(i: usize, j: usize) -> Self {
        PairPotential { r: 0.0, pairs: vec![(i.min(j), i.max(j))] }
    }

    pub fn disabled() -> Self {
        PairPotential { r: 0.0, pairs: Vec::new() }
    }

    pub fn validate(&self, space: &ConfigurationSpace, r_bound: f64) -> Result<()> {
        if !(self.r.abs() <= r_bound) {
            return Err(PermlabError::precondition(format!("|r| = {} exceeds bound {r_bound}", self.r.abs())));
        }
        for &(i, j) in &self.pairs {
            if i == j || i >= space.particles() || j >= space.particles() {
                return Err(PermlabError::precondition(format!("invalid interacting pair ({i}, {j})")));
            }
        }
        Ok(())
    }

    /// `V f`, summed over the active pairs.
    pub fn apply_into(&self, space: &ConfigurationSpace, f: &[f64], out: &mut [f64]) {
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            for (k, o) in chunk.iter_mut().enumerate() {
                *o = self.potential_at(space, f, c * CHUNK + k);
            }
        });
    }

    pub fn apply(&self, space: &ConfigurationSpace, field: &ExtendedField) -> Result<ExtendedField> {
        check_len(space.size(), field.values.len())?;
        let mut out = vec![0.0; space.size()];
        self.apply_into(space, &field.values, &mut out);
        Ok(ExtendedField { t: field.t, values: out })
    }

    #[inline]
    fn potential_at(&self, space: &ConfigurationSpace, f: &[f64], s: usize) -> f64 {
        let mut acc = Neumaier::default();
        self.potential_terms(space, f, s, &mut acc);
        acc.value()
    }

    #[inline]
    fn potential_terms(&self, space: &ConfigurationSpace, f: &[f64], s: usize, acc: &mut Neumaier) {
        let lat = space.lattice();
        for &(i, j) in &self.pairs {
            let (si, sj) = (space.stride(i), space.stride(j));
            let a = space.coord(s, i);
            let b = space.coord(s, j);
            let base = s - a * si - b * sj;
            let at = |p: usize, q: usize| f[base + p * si + q * sj];
            // adds -w * D_e F(y)
            let mut diff = |w: f64, y: usize, ye: usize| {
                acc.add(-w * at(y, y));
                acc.add(w * at(y, ye));
                acc.add(w * at(ye, y));
                acc.add(-w * at(ye, ye));
            };
            for dir in 0..lat.dim() {
                if b == lat.step_up(a, dir) {
                    diff(1.0, a, b);
                }
                if a == lat.step_up(b, dir) {
                    diff(1.0, b, a);
                }
                if a == b && self.r != 0.0 {
                    diff(self.r, a, lat.step_up(a, dir));
                    diff(self.r, lat.step_down(a, dir), a);
                }
            }
        }
    }
}

/// `Δ + V` on `Λ^m`.
pub struct ExtendedGenerator<'a> {
    pub space: &'a ConfigurationSpace,
    pub potential: &'a PairPotential,
}

impl ExtendedGenerator<'_> {
    pub fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let space = self.space;
        let pot = self.potential;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            for (k, o) in chunk.iter_mut().enumerate() {
                let s = c * CHUNK + k;
                let mut acc = Neumaier::default();
                space.laplacian_terms(f, s, &mut acc);
                pot.potential_terms(space, f, s, &mut acc);
                *o = acc.value();
            }
        });
    }
}

/// Compensated summation. Off `B` the field can grow by many orders of
/// magnitude while the terms landing on `B` cancel exactly between `Δ` and
/// `V`; plain summation would leak that growth into the restriction.
#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// A real function on `Λ^m` at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedField {
    pub t: f64,
    pub values: Vec<f64>,
}

impl ExtendedField {
    pub fn zeros(size: usize) -> Self {
        ExtendedField { t: 0.0, values: vec![0.0; size] }
    }

    /// Point mass at the identity configuration `x_k = k`.
    pub fn identity(space: &ConfigurationSpace) -> Self {
        let mut f = Self::zeros(space.size());
        f.values[space.identity_index()] = 1.0;
        f
    }
}

/// Result of integrating the extension equation to one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedEvolution {
    pub field: ExtendedField,
    pub step: f64,
    pub steps: usize,
    /// Richardson estimate of the last step's local error, `max|y_h - y_{h/2}| / 15`.
    pub local_error: f64,
    /// `max|f^e|` over all of `Λ^N`; off `B` the field may grow without bound.
    pub max_abs: f64,
}

/// Integrates from the identity point mass to each of `times` (ascending).
pub fn evolve_extended_at(
    potential: &PairPotential,
    space: &ConfigurationSpace,
    times: &[f64],
    step: f64,
) -> Result<Vec<ExtendedEvolution>> {
    if !(step > 0.0) {
        return Err(PermlabError::precondition("step must be > 0"));
    }
    if space.particles() != space.lattice().vertex_count() {
        return Err(PermlabError::precondition("the extension needs one particle per vertex"));
    }
    potential.validate(space, DEFAULT_R_BOUND)?;
    if times.windows(2).any(|w| !(w[0] <= w[1])) || times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(PermlabError::precondition("times must be finite, nonnegative and ascending"));
    }
    let gen = ExtendedGenerator { space, potential };
    let mut y = ExtendedField::identity(space).values;
    let mut rk = Rk4::new(space.size());
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let (steps, h) = uniform_steps(t - now, step);
        let mut local_error = 0.0;
        for s in 0..steps {
            if s + 1 == steps {
                local_error = richardson_local_error(&gen, &y, h);
            }
            rk.step(&mut y, h, |u, du| gen.apply_into(u, du));
        }
        now = t;
        out.push(ExtendedEvolution {
            field: ExtendedField { t, values: y.clone() },
            step: if steps > 0 { h } else { step },
            steps,
            local_error,
            max_abs: y.iter().fold(0.0, |m, v| m.max(v.abs())),
        });
    }
    Ok(out)
}

/// Integrates from the identity point mass to time `t`.
pub fn evolve_extended(
    potential: &PairPotential,
    space: &ConfigurationSpace,
    t: f64,
    step: f64,
) -> Result<ExtendedEvolution> {
    Ok(evolve_extended_at(potential, space, &[t], step)?.remove(0))
}

fn richardson_local_error(gen: &ExtendedGenerator<'_>, y: &[f64], h: f64) -> f64 {
    let mut rk = Rk4::new(y.len());
    let mut full = y.to_vec();
    rk.step(&mut full, h, |u, du| gen.apply_into(u, du));
    let mut half = y.to_vec();
    rk.step(&mut half, h / 2.0, |u, du| gen.apply_into(u, du));
    rk.step(&mut half, h / 2.0, |u, du| gen.apply_into(u, du));
    full.iter().zip(&half).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / 15.0
}

/// Reads `f^e` on the distinct tuples, reindexed by permutation rank.
pub fn restrict_to_distinct(space: &ConfigurationSpace, field: &ExtendedField) -> Result<GroupDistribution> {
    let n = space.lattice().vertex_count();
    if space.particles() != n {
        return Err(PermlabError::precondition("restriction needs one particle per vertex"));
    }
    check_len(space.size(), field.values.len())?;
    if n > MAX_RANKABLE {
        return Err(PermlabError::precondition("too many particles to rank"));
    }
    let count = factorial_u64(n) as usize;
    let weights = (0..count)
        .into_par_iter()
        .map(|rank| {
            let p = Permutation::unrank(n, rank as u64).expect("rank below n!");
            field.values[space.encode(p.images())]
        })
        .collect();
    Ok(GroupDistribution { n, t: field.t, weights })
}

/// `Σ_{x ∈ Λ^N} f^e(x)`, summed in index order.
pub fn total_mass(field: &ExtendedField) -> f64 {
    field.values.iter().sum()
}

/// `Σ_{x ∈ B} f^e(x)` over distinct tuples.
pub fn distinct_mass(space: &ConfigurationSpace, field: &ExtendedField) -> f64 {
    (0..space.size())
        .filter(|&s| space.is_distinct(s))
        .map(|s| field.values[s])
        .sum()
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(PermlabError::LengthMismatch { expected, actual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_walk::evolve_group;

    fn space(l: usize) -> ConfigurationSpace {
        ConfigurationSpace::full(&Lattice::new(1, l).unwrap(), DEFAULT_STATE_CAP).unwrap()
    }

    #[test]
    fn indexer_round_trips_and_counts_distinct() {
        let sp = space(4);
        assert_eq!(sp.size(), 256);
        for s in 0..sp.size() {
            assert_eq!(sp.encode(&sp.decode(s)), s);
        }
        let distinct = (0..sp.size()).filter(|&s| sp.is_distinct(s)).count();
        assert_eq!(distinct, 24);
        assert_eq!(sp.distinct_count(), 24);
        assert_eq!(sp.decode(sp.identity_index()), vec![0, 1, 2, 3]);
    }

    #[test]
    fn cap_is_enforced() {
        let lat = Lattice::new(2, 3).unwrap();
        assert!(matches!(
            ConfigurationSpace::full(&lat, DEFAULT_STATE_CAP),
            Err(PermlabError::CapExceeded { .. })
        ));
    }

    #[test]
    fn potential_vanishes_away_from_contact() {
        // on L = 5 with 2 tracked particles, (0, 2) is neither equal nor adjacent
        let lat = Lattice::new(1, 5).unwrap();
        let sp = ConfigurationSpace::with_particles(&lat, 2, 1000).unwrap();
        let mut f = ExtendedField::zeros(sp.size());
        f.values[sp.encode(&[0, 2])] = 1.0;
        f.values[sp.encode(&[4, 1])] = -2.0;
        let pot = PairPotential { r: 0.7, pairs: vec![(0, 1)] };
        let out = pot.apply(&sp, &f).unwrap();
        // supports of f and of V f's stencil do not meet
        for &target in &[[0usize, 2], [4, 1]] {
            assert_eq!(out.values[sp.encode(&target)], 0.0);
        }
        assert!(pot.apply(&sp, &ExtendedField::zeros(3)).is_err());
    }

    #[test]
    fn potential_validation() {
        let sp = space(3);
        assert!(PairPotential { r: 1.5, pairs: vec![(0, 1)] }.validate(&sp, 1.0).is_err());
        assert!(PairPotential { r: 0.0, pairs: vec![(1, 1)] }.validate(&sp, 1.0).is_err());
        assert!(PairPotential { r: 0.0, pairs: vec![(0, 3)] }.validate(&sp, 1.0).is_err());
        assert!(PairPotential::all_pairs(3, -1.0).validate(&sp, 1.0).is_ok());
    }

    #[test]
    fn starts_at_identity_configuration() {
        let sp = space(3);
        let ev = evolve_extended(&PairPotential::all_pairs(3, 0.0), &sp, 0.0, DEFAULT_STEP).unwrap();
        assert_eq!(ev.field, ExtendedField::identity(&sp));
        let g = restrict_to_distinct(&sp, &ev.field).unwrap();
        assert_eq!(g.weights[0], 1.0);
        assert_eq!(g.total(), 1.0);
        assert_eq!(total_mass(&ev.field), 1.0);
        assert_eq!(total_mass(&ExtendedField::zeros(27)), 0.0);
    }

    #[test]
    fn restriction_reproduces_group_walk() {
        let lat = Lattice::new(1, 3).unwrap();
        let sp = ConfigurationSpace::full(&lat, DEFAULT_STATE_CAP).unwrap();
        let exact = evolve_group(&lat, 1.0).unwrap();
        for r in [0.0, 0.5, -0.5] {
            let ev = evolve_extended(&PairPotential::all_pairs(3, r), &sp, 1.0, DEFAULT_STEP).unwrap();
            let g = restrict_to_distinct(&sp, &ev.field).unwrap();
            assert!(g.max_abs_diff(&exact) < 1e-6, "r = {r}");
            assert!((distinct_mass(&sp, &ev.field) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let sp = space(3);
        let pot = PairPotential::all_pairs(3, 0.0);
        assert!(evolve_extended(&pot, &sp, 1.0, 0.0).is_err());
        assert!(evolve_extended_at(&pot, &sp, &[1.0, 0.5], 0.01).is_err());
        let lat = Lattice::new(1, 3).unwrap();
        let partial = ConfigurationSpace::with_particles(&lat, 2, 100).unwrap();
        assert!(evolve_extended(&PairPotential::disabled(), &partial, 1.0, 0.01).is_err());
    }
}
