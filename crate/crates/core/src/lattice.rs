//! Periodic lattice cubes, their Laplacian and heat kernels.
//!
//! Vertices are indexed in lexicographic coordinate order: for coordinates
//! `(c_0, .., c_{d-1})` the index is `sum_m c_m * L^(d-1-m)`. Every edge
//! contributes rate one to the Laplacian, `(Δφ)(i) = Σ_{j~i} (φ(j) - φ(i))`,
//! so a single walker jumps across each incident edge at unit rate.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};
use crate::ode::{uniform_steps, Rk4};

/// Periodic `d`-dimensional cube of edge `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    edge: usize,
    vertices: usize,
    edges: Vec<(usize, usize)>,
    // neighbors[v * 2d + 2m] is v + e_m, neighbors[v * 2d + 2m + 1] is v - e_m
    neighbors: Vec<usize>,
}

impl Lattice {
    /// Builds the periodic cube. `L = 2` is rejected because the two
    /// orientations of a periodic pair would coincide.
    pub fn new(dim: usize, edge: usize) -> Result<Self> {
        if dim < 1 {
            return Err(PermlabError::precondition("dimension d must be ≥ 1"));
        }
        if edge < 3 {
            return Err(PermlabError::precondition("L must be ≥ 3"));
        }
        let vertices = edge
            .checked_pow(dim as u32)
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| PermlabError::precondition("lattice too large"))?;

        let mut lattice = Lattice {
            dim,
            edge,
            vertices,
            edges: Vec::with_capacity(dim * vertices),
            neighbors: vec![0; 2 * dim * vertices],
        };
        let mut coords = vec![0usize; dim];
        for v in 0..vertices {
            lattice.decode_into(v, &mut coords);
            for m in 0..dim {
                let c = coords[m];
                coords[m] = (c + 1) % edge;
                let up = lattice.encode(&coords);
                coords[m] = (c + edge - 1) % edge;
                let down = lattice.encode(&coords);
                coords[m] = c;
                lattice.neighbors[v * 2 * dim + 2 * m] = up;
                lattice.neighbors[v * 2 * dim + 2 * m + 1] = down;
                lattice.edges.push((v, up));
            }
        }
        Ok(lattice)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Edge size `L`.
    pub fn edge(&self) -> usize {
        self.edge
    }

    /// Vertex count `N = L^d`.
    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    /// Nearest-neighbor edges as `(v, v + e_m)`, one per vertex and
    /// direction, in vertex-major order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Vertex reached from `v` by one step along `+e_dir`.
    #[inline]
    pub fn step_up(&self, v: usize, dir: usize) -> usize {
        self.neighbors[v * 2 * self.dim + 2 * dir]
    }

    /// Vertex reached from `v` by one step along `-e_dir`.
    #[inline]
    pub fn step_down(&self, v: usize, dir: usize) -> usize {
        self.neighbors[v * 2 * self.dim + 2 * dir + 1]
    }

    /// All `2d` neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v * 2 * self.dim..(v + 1) * 2 * self.dim]
    }

    pub fn encode(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.edge + c)
    }

    pub fn decode(&self, v: usize) -> Vec<usize> {
        let mut coords = vec![0; self.dim];
        self.decode_into(v, &mut coords);
        coords
    }

    fn decode_into(&self, mut v: usize, coords: &mut [usize]) {
        for m in (0..self.dim).rev() {
            coords[m] = v % self.edge;
            v /= self.edge;
        }
    }

    /// Translation by the coordinate vector of `shift`.
    pub fn translate(&self, v: usize, shift: usize) -> usize {
        let a = self.decode(v);
        let b = self.decode(shift);
        let sum: Vec<usize> = a.iter().zip(&b).map(|(x, y)| (x + y) % self.edge).collect();
        self.encode(&sum)
    }

    /// Applies the lattice Laplacian to a site field.
    pub fn apply_laplacian(&self, field: &SiteField) -> Result<SiteField> {
        check_len(self.vertices, field.len())?;
        let mut out = vec![0.0; self.vertices];
        self.laplacian_into(&field.0, &mut out);
        Ok(SiteField(out))
    }

    pub(crate) fn laplacian_into(&self, phi: &[f64], out: &mut [f64]) {
        let deg = 2 * self.dim;
        for (v, o) in out.iter_mut().enumerate() {
            let here = phi[v];
            let mut acc = 0.0;
            for &w in &self.neighbors[v * deg..(v + 1) * deg] {
                acc += phi[w] - here;
            }
            *o = acc;
        }
    }

    /// `(e^{Δt})` in closed form from the Fourier modes of the ring, one
    /// factor per coordinate.
    pub fn heat_kernel_spectral(&self, t: f64) -> Result<HeatKernel> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(PermlabError::precondition("time t must be finite and ≥ 0"));
        }
        let n = self.vertices;
        if t == 0.0 {
            let mut entries = vec![0.0; n * n];
            for i in 0..n {
                entries[i * n + i] = 1.0;
            }
            return Ok(HeatKernel { t, n, entries });
        }
        let profile = ring_kernel_profile(self.edge, t);
        let coords: Vec<Vec<usize>> = (0..n).map(|v| self.decode(v)).collect();
        let mut entries = vec![0.0; n * n];
        entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, e) in row.iter_mut().enumerate() {
                *e = coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(&a, &b)| profile[(a + self.edge - b) % self.edge])
                    .product();
            }
        });
        Ok(HeatKernel { t, n, entries })
    }

    /// Independent route to the heat kernel: RK4 on `∂φ/∂t = Δφ` from each
    /// point mass, with steps no larger than `step`.
    pub fn heat_kernel_ode(&self, t: f64, step: f64) -> Result<HeatKernel> {
        if !(step > 0.0) {
            return Err(PermlabError::precondition("step must be > 0"));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(PermlabError::precondition("time t must be finite and ≥ 0"));
        }
        let n = self.vertices;
        let (steps, h) = uniform_steps(t, step);
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut phi = vec![0.0; n];
                phi[j] = 1.0;
                let mut rk = Rk4::new(n);
                for _ in 0..steps {
                    rk.step(&mut phi, h, |u, du| self.laplacian_into(u, du));
                }
                phi
            })
            .collect();
        let mut entries = vec![0.0; n * n];
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                entries[i * n + j] = v;
            }
        }
        Ok(HeatKernel { t, n, entries })
    }
}

/// One-dimensional ring kernel `k(δ) = (1/L) Σ_k e^{-2(1-cos(2πk/L))t} cos(2πkδ/L)`,
/// indexed by `δ ∈ [0, L)`. Symmetrized so that `k(δ) = k(L-δ)` exactly.
fn ring_kernel_profile(edge: usize, t: f64) -> Vec<f64> {
    let l = edge as f64;
    let decay: Vec<f64> = (0..edge)
        .map(|k| (-2.0 * (1.0 - (2.0 * PI * k as f64 / l).cos()) * t).exp())
        .collect();
    let mut profile = vec![0.0; edge];
    for delta in 0..=edge / 2 {
        let s: f64 = decay
            .iter()
            .enumerate()
            .map(|(k, &w)| w * (2.0 * PI * (k * delta % edge) as f64 / l).cos())
            .sum();
        profile[delta] = s / l;
        profile[(edge - delta) % edge] = s / l;
    }
    profile
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(PermlabError::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// A real function on the vertices of a lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteField(pub Vec<f64>);

impl SiteField {
    pub fn zeros(n: usize) -> Self {
        SiteField(vec![0.0; n])
    }

    pub fn delta(n: usize, at: usize) -> Self {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        SiteField(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// The matrix `e^{Δt}` on `N` vertices, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatKernel {
    pub t: f64,
    pub n: usize,
    pub entries: Vec<f64>,
}

impl HeatKernel {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Distribution at time `t` of a walker started at `i`.
    pub fn column_from(&self, i: usize) -> SiteField {
        // symmetric, so the row is the column
        SiteField(self.row(i).to_vec())
    }

    pub fn matmul(&self, other: &HeatKernel) -> HeatKernel {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for k in 0..n {
                let a = self.get(i, k);
                for (j, e) in row.iter_mut().enumerate() {
                    *e += a * other.get(k, j);
                }
            }
        });
        HeatKernel { t: self.t + other.t, n, entries }
    }

    pub fn max_abs_diff(&self, other: &HeatKernel) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of any row or column sum from one.
    pub fn stochasticity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let row: f64 = self.row(i).iter().sum();
            let col: f64 = (0..n).map(|k| self.get(k, i)).sum();
            worst = worst.max((row - 1.0).abs()).max((col - 1.0).abs());
        }
        worst
    }

    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `C_N = N^N / N!`, exactly and in floating point.
#[derive(Clone, Debug, PartialEq)]
pub struct CConstant {
    pub n: u64,
    pub exact: BigRational,
    pub value: f64,
    /// `C_N^{1/N}`, computed in log space.
    pub nth_root: f64,
}

pub fn c_constant(n: u64) -> Result<CConstant> {
    if n < 1 {
        return Err(PermlabError::precondition("N must be ≥ 1"));
    }
    let nn = BigInt::from(n).pow(n as u32);
    let fact = factorial(n);
    let exact = BigRational::new(nn, fact);
    let log_c = n as f64 * (n as f64).ln() - ln_factorial(n);
    Ok(CConstant {
        n,
        value: exact.to_f64().unwrap_or(f64::INFINITY),
        exact,
        nth_root: (log_c / n as f64).exp(),
    })
}

pub fn factorial(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// `ln n!` by direct summation; exact to rounding for the sizes used here.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}
