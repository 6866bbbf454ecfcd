//! Permanent of the heat-kernel matrix, the sum over distinct tuples of
//! the product ansatz `Π_i K(t)_{i, x_i}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};
use crate::lattice::{ln_factorial, Lattice};

pub const MAX_PERMANENT_N: usize = 14;

const BLOCK: u64 = 1 << 10;

/// Ryser's formula over Gray-code ordered column subsets. Subsets are split
/// into fixed blocks whose partial sums are added in block order, so the
/// result does not depend on the thread count.
pub fn permanent_ryser(a: &[f64], n: usize) -> Result<f64> {
    if a.len() != n * n {
        return Err(PermlabError::LengthMismatch { expected: n * n, actual: a.len() });
    }
    if n > MAX_PERMANENT_N {
        return Err(PermlabError::CapExceeded {
            what: "permanent size N",
            requested: n as u128,
            cap: MAX_PERMANENT_N as u128,
        });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let total: u64 = 1 << n;
    let blocks = total.div_ceil(BLOCK);
    let partials: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = (b * BLOCK).max(1);
            let end = ((b + 1) * BLOCK).min(total);
            if start >= end {
                return 0.0;
            }
            // row sums over the columns in gray(start - 1)
            let g0 = (start - 1) ^ ((start - 1) >> 1);
            let mut rows: Vec<f64> = (0..n)
                .map(|i| (0..n).filter(|&j| g0 >> j & 1 == 1).map(|j| a[i * n + j]).sum())
                .collect();
            let mut acc = 0.0;
            for k in start..end {
                let j = k.trailing_zeros() as usize;
                let g = k ^ (k >> 1);
                let sign = if g >> j & 1 == 1 { 1.0 } else { -1.0 };
                for (i, r) in rows.iter_mut().enumerate() {
                    *r += sign * a[i * n + j];
                }
                let prod: f64 = rows.iter().product();
                let parity = if (n as u32 - g.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                acc += parity * prod;
            }
            acc
        })
        .collect();
    Ok(partials.iter().sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermanentReport {
    pub n: usize,
    pub t: f64,
    pub permanent: f64,
    pub nth_root: f64,
    /// `N!/N^N`, the permanent of the uniform doubly stochastic matrix.
    pub target: f64,
    pub gap: f64,
}

/// `perm(e^{Δt})` on the lattice, compared with its `t → ∞` value.
pub fn conjecture2_permanent(lattice: &Lattice, t: f64) -> Result<PermanentReport> {
    let n = lattice.vertex_count();
    if n > MAX_PERMANENT_N {
        return Err(PermlabError::CapExceeded {
            what: "permanent size N",
            requested: n as u128,
            cap: MAX_PERMANENT_N as u128,
        });
    }
    let k = lattice.heat_kernel_spectral(t)?;
    let flat: Vec<f64> = (0..n).flat_map(|i| k.row(i).to_vec()).collect();
    let permanent = permanent_ryser(&flat, n)?;
    let target = (ln_factorial(n as u64) - n as f64 * (n as f64).ln()).exp();
    Ok(PermanentReport {
        n,
        t,
        permanent,
        nth_root: permanent.max(0.0).powf(1.0 / n as f64),
        target,
        gap: permanent - target,
    })
}

pub fn permanent_curve(lattice: &Lattice, times: &[f64]) -> Result<Vec<PermanentReport>> {
    times.iter().map(|&t| conjecture2_permanent(lattice, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_permanents() {
        assert_eq!(permanent_ryser(&[3.0], 1).unwrap(), 3.0);
        // perm [[1,2],[3,4]] = 4 + 6
        assert!((permanent_ryser(&[1.0, 2.0, 3.0, 4.0], 2).unwrap() - 10.0).abs() < 1e-12);
        let ones = vec![1.0; 16];
        assert!((permanent_ryser(&ones, 4).unwrap() - 24.0).abs() < 1e-9);
        assert!(permanent_ryser(&ones, 3).is_err());
    }

    #[test]
    fn identity_at_time_zero() {
        let lat = Lattice::new(1, 5).unwrap();
        assert!((conjecture2_permanent(&lat, 0.0).unwrap().permanent - 1.0).abs() < 1e-12);
    }
}
