//! Tree-graph contributions of the expansion in the pair potential.
//!
//! `T_n(t)` keeps only the lower limits of the nested time integrals; it
//! has the closed form
//!
//! ```text
//! T_n(t) = (-1)^n (n-1)! Σ_y K_{0,y}(t) e_{n-1}({K_{z,y}(t) : z ≠ 0})
//! ```
//!
//! with `e_k` the elementary symmetric polynomial, i.e. `(-1)^n Σ_y Π φ_i`
//! summed over ordered distinct tuples `z_2, .., z_n`. `T̃_n(t)` keeps every
//! limit and is computed from the Dyson oracle.

mod dyson;
mod output;

pub use dyson::{
    dyson_curve, dyson_oracle, interaction_rate, spanning_sequences, DysonValue, ZSum, DEFAULT_DIAGRAM_CAP,
    MAX_SEQUENCE,
};
pub use output::write_evaluation;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};
use crate::group_walk::{factorial_u64, Permutation};
use crate::lattice::{Lattice, SiteField};

/// Default RK4 step for the Dyson hierarchy.
pub const DEFAULT_DYSON_STEP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagramKind {
    /// `T_n`: lower limits only.
    LowerLimits,
    /// `T̃_n`: all limits.
    Full,
}

/// A `(t, value)` curve with an optional infinite-volume estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramEvaluation {
    pub n: usize,
    pub kind: DiagramKind,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub step: Option<f64>,
    pub curve: Vec<(f64, f64)>,
    pub extrapolated_limit: Option<f64>,
    pub uncertainty: Option<f64>,
    pub method: Option<String>,
}

/// `Σ_y d/dt (φ_1 φ_2)` at `t1`, with `φ_i` the heat-kernel rows from
/// `z1` and `z2`, evaluated as `Σ_y (Δφ_1 φ_2 + φ_1 Δφ_2)`.
pub fn theorem1_contribution(lattice: &Lattice, z1: usize, z2: usize, t1: f64) -> Result<f64> {
    let n = lattice.vertex_count();
    if z1 >= n || z2 >= n {
        return Err(PermlabError::precondition("vertex out of range"));
    }
    let k = lattice.heat_kernel_spectral(t1)?;
    let p1 = k.column_from(z1);
    let p2 = k.column_from(z2);
    let d1 = lattice.apply_laplacian(&p1)?;
    let d2 = lattice.apply_laplacian(&p2)?;
    Ok((0..n).map(|y| d1.0[y] * p2.0[y] + p1.0[y] * d2.0[y]).sum())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|&t| !(t >= 0.0)) {
        return Err(PermlabError::precondition("times must be nonnegative and strictly increasing"));
    }
    Ok(())
}

/// `T_n(t)` from the closed form, `z_1 = 0`.
pub fn t_n_value(lattice: &Lattice, n: usize, t: f64) -> Result<f64> {
    if !(2..=4).contains(&n) {
        return Err(PermlabError::precondition("lower-limit sums are supported for n ∈ {2, 3, 4}"));
    }
    let nv = lattice.vertex_count();
    let k = lattice.heat_kernel_spectral(t)?;
    if n == 2 {
        return Ok(1.0 - k.row(0).iter().map(|v| v * v).sum::<f64>());
    }
    let sum: f64 = (0..nv)
        .map(|y| {
            // e[j] = e_j over {K_{z,y} : z ≠ 0}
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            for z in 1..nv {
                let x = k.get(z, y);
                for j in (1..n).rev() {
                    e[j] += x * e[j - 1];
                }
            }
            k.get(0, y) * e[n - 1]
        })
        .sum();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * factorial_u64(n - 1) as f64 * sum)
}

/// `T_n` on a grid of times.
pub fn t_n_lower_limits(lattice: &Lattice, n: usize, times: &[f64]) -> Result<DiagramEvaluation> {
    check_times(times)?;
    let curve = times
        .iter()
        .map(|&t| t_n_value(lattice, n, t).map(|v| (t, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagramEvaluation {
        n,
        kind: DiagramKind::LowerLimits,
        d: lattice.dim(),
        l: lattice.edge(),
        step: None,
        curve,
        extrapolated_limit: None,
        uncertainty: None,
        method: None,
    })
}

/// `T̃_n` on a grid of times. For `n = 3` this is half the sum of the Dyson
/// terms over the six ordered spanning sequences: either end of the first
/// interaction may be labelled, which double counts.
pub fn t_tilde_n(lattice: &Lattice, n: usize, times: &[f64], step: f64, z: &ZSum) -> Result<DiagramEvaluation> {
    check_times(times)?;
    let curve = match n {
        2 if *z == ZSum::Distinct => times
            .iter()
            .map(|&t| t_n_value(lattice, 2, t).map(|v| (t, v)))
            .collect::<Result<Vec<_>>>()?,
        2 | 3 => {
            let terms = spanning_sequences(n)
                .par_iter()
                .map(|seq| dyson_curve(lattice, n, seq, times, step, z))
                .collect::<Result<Vec<_>>>()?;
            let scale = if n == 3 { 0.5 } else { 1.0 };
            times
                .iter()
                .enumerate()
                .map(|(k, &t)| (t, scale * terms.iter().map(|c| c[k].full).sum::<f64>()))
                .collect()
        }
        _ => return Err(PermlabError::precondition("full sums are supported for n ∈ {2, 3}")),
    };
    Ok(DiagramEvaluation {
        n,
        kind: DiagramKind::Full,
        d: lattice.dim(),
        l: lattice.edge(),
        step: (n == 3 || *z != ZSum::Distinct).then_some(step),
        curve,
        extrapolated_limit: None,
        uncertainty: None,
        method: None,
    })
}

/// `T_3` from the lower limits of the Dyson oracle, the independent route
/// to the closed form.
pub fn t_3_lower_by_dyson(lattice: &Lattice, times: &[f64], step: f64) -> Result<Vec<(f64, f64)>> {
    check_times(times)?;
    let terms = spanning_sequences(3)
        .par_iter()
        .map(|seq| dyson_curve(lattice, 3, seq, times, step, &ZSum::Distinct))
        .collect::<Result<Vec<_>>>()?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, 0.5 * terms.iter().map(|c| c[k].lower).sum::<f64>()))
        .collect())
}

/// Both sides of the telescopic relation at one site `y` and direction:
/// the symmetrized sum over `j` with the difference on the last of the
/// first `n - 1` fields, and the `(n-1)!`-factored product difference.
pub fn telescopic_identity_check(
    lattice: &Lattice,
    y: usize,
    dir: usize,
    fields: &[SiteField],
) -> Result<(f64, f64)> {
    let n = fields.len();
    if n < 3 {
        return Err(PermlabError::precondition("telescopic relation needs n ≥ 3 fields"));
    }
    if n - 1 > 10 {
        return Err(PermlabError::precondition("too many fields to symmetrize"));
    }
    let nv = lattice.vertex_count();
    if y >= nv || dir >= lattice.dim() {
        return Err(PermlabError::precondition("site or direction out of range"));
    }
    if let Some(f) = fields.iter().find(|f| f.len() != nv) {
        return Err(PermlabError::LengthMismatch { expected: nv, actual: f.len() });
    }
    let ye = lattice.step_up(y, dir);
    let at = |k: usize, site: usize| fields[k].0[site];
    let last = at(n - 1, y) - at(n - 1, ye);
    let m = n - 1;
    let mut lhs = 0.0;
    for rank in 0..factorial_u64(m) {
        let s = Permutation::unrank(m, rank)?;
        let s = s.images();
        let diff = at(s[m - 1], y) - at(s[m - 1], ye);
        for j in 0..=m - 1 {
            let below: f64 = (0..j).map(|k| at(s[k], y)).product();
            let above: f64 = (j..m - 1).map(|k| at(s[k], ye)).product();
            lhs += below * above * diff;
        }
    }
    lhs *= last;
    let here: f64 = (0..m).map(|k| at(k, y)).product();
    let there: f64 = (0..m).map(|k| at(k, ye)).product();
    let rhs = factorial_u64(m) as f64 * (here - there) * last;
    Ok((lhs, rhs))
}

/// Both sides summed over every site and direction.
pub fn telescopic_identity_sum(lattice: &Lattice, fields: &[SiteField]) -> Result<(f64, f64)> {
    let mut acc = (0.0, 0.0);
    for y in 0..lattice.vertex_count() {
        for dir in 0..lattice.dim() {
            let (l, r) = telescopic_identity_check(lattice, y, dir, fields)?;
            acc.0 += l;
            acc.1 += r;
        }
    }
    Ok(acc)
}

/// Value at `x = 0` of polynomial fits through `(x_k, v_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    /// Distance to the fit one degree lower through the points nearest 0.
    pub uncertainty: f64,
    pub method: String,
}

/// Neville extrapolation to `x = 0` through every point.
pub fn extrapolate_to_zero(points: &[(f64, f64)]) -> Result<Extrapolation> {
    if points.len() < 2 {
        return Err(PermlabError::precondition("extrapolation needs at least two points"));
    }
    let neville = |pts: &[(f64, f64)]| {
        let mut p: Vec<f64> = pts.iter().map(|q| q.1).collect();
        for lvl in 1..pts.len() {
            for i in 0..pts.len() - lvl {
                let (xi, xj) = (pts[i].0, pts[i + lvl].0);
                p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
            }
        }
        p[0]
    };
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let limit = neville(&sorted);
    let lower = neville(&sorted[..sorted.len() - 1]);
    Ok(Extrapolation {
        limit,
        uncertainty: (limit - lower).abs(),
        method: format!("polynomial of degree {} in 1/N through {} sizes", points.len() - 1, points.len()),
    })
}

/// Values at `t = scale · L²` for each `L` and their extrapolation in `1/N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitScan {
    pub n: usize,
    pub kind: DiagramKind,
    pub d: usize,
    pub scale: f64,
    pub sizes: Vec<usize>,
    pub values: Vec<f64>,
    pub extrapolation: Extrapolation,
}

impl LimitScan {
    pub fn is_monotone(&self) -> bool {
        let inc = self.values.windows(2).all(|w| w[1] >= w[0]);
        let dec = self.values.windows(2).all(|w| w[1] <= w[0]);
        inc || dec
    }
}

pub fn limit_scan(
    n: usize,
    kind: DiagramKind,
    d: usize,
    sizes: &[usize],
    scale: f64,
    step: f64,
) -> Result<LimitScan> {
    let values = sizes
        .iter()
        .map(|&l| {
            let lat = Lattice::new(d, l)?;
            let t = scale * (l * l) as f64;
            match kind {
                DiagramKind::LowerLimits => t_n_value(&lat, n, t),
                DiagramKind::Full => Ok(t_tilde_n(&lat, n, &[t], step, &ZSum::Distinct)?.curve[0].1),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .zip(&values)
        .map(|(&l, &v)| (1.0 / (l as f64).powi(d as i32), v))
        .collect();
    let extrapolation = extrapolate_to_zero(&points)?;
    Ok(LimitScan { n, kind, d, scale, sizes: sizes.to_vec(), values, extrapolation })
}
