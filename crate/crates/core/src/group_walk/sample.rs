//! Monte Carlo realization of the interchange process.
//!
//! Sample `k` of a batch draws its randomness from a ChaCha8 stream keyed
//! by `(seed, k)`, so a batch is reproducible whatever the number of
//! worker threads.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PermlabError, Result};
use crate::lattice::Lattice;

/// Final configurations of independent runs of the walk from the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkSampleBatch {
    pub seed: u64,
    pub t: f64,
    pub dim: usize,
    pub edge: usize,
    pub n: usize,
    /// Flattened tuples; sample `k` occupies `samples[k*n..(k+1)*n]`.
    pub samples: Vec<u32>,
}

impl WalkSampleBatch {
    pub fn count(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.samples.len() / self.n
        }
    }

    pub fn tuple(&self, k: usize) -> &[u32] {
        &self.samples[k * self.n..(k + 1) * self.n]
    }
}

/// One line of the JSON-lines sample format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub index: u64,
    pub tuple: Vec<u32>,
}

pub fn sample_walk(lattice: &Lattice, t: f64, count: usize, seed: u64) -> Result<WalkSampleBatch> {
    sample_walk_with_threads(lattice, t, count, seed, None)
}

/// Samples `count` runs; `threads` pins the size of the worker pool.
pub fn sample_walk_with_threads(
    lattice: &Lattice,
    t: f64,
    count: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<WalkSampleBatch> {
    if count < 1 {
        return Err(PermlabError::precondition("count must be ≥ 1"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(PermlabError::precondition("time t must be finite and ≥ 0"));
    }
    let n = lattice.vertex_count();
    let lambda = lattice.edge_count() as f64 * t;
    let poisson = if lambda > 0.0 {
        Some(Poisson::new(lambda).map_err(|e| PermlabError::precondition(e.to_string()))?)
    } else {
        None
    };

    let run = || {
        let mut samples = vec![0u32; count * n];
        samples.par_chunks_mut(n).enumerate().for_each(|(k, tuple)| {
            draw_one(lattice, poisson.as_ref(), seed, k as u64, tuple);
        });
        samples
    };
    let samples = match threads {
        Some(th) => rayon::ThreadPoolBuilder::new()
            .num_threads(th.max(1))
            .build()
            .map_err(|e| PermlabError::precondition(e.to_string()))?
            .install(run),
        None => run(),
    };
    Ok(WalkSampleBatch { seed, t, dim: lattice.dim(), edge: lattice.edge(), n, samples })
}

fn draw_one(lattice: &Lattice, poisson: Option<&Poisson<f64>>, seed: u64, index: u64, tuple: &mut [u32]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = tuple.len();
    // occupant[v] is the particle currently sitting at vertex v
    let mut occupant: Vec<usize> = (0..n).collect();
    for (i, slot) in tuple.iter_mut().enumerate() {
        *slot = i as u32;
    }
    let jumps = poisson.map_or(0, |p| p.sample(&mut rng) as u64);
    let edges = lattice.edges();
    for _ in 0..jumps {
        let (a, b) = edges[rng.random_range(0..edges.len())];
        let (pa, pb) = (occupant[a], occupant[b]);
        tuple[pa] = b as u32;
        tuple[pb] = a as u32;
        occupant.swap(a, b);
    }
}

/// Empirical law of `p(i)` over the batch.
pub fn empirical_marginal(batch: &WalkSampleBatch, i: usize) -> Result<Vec<f64>> {
    if i >= batch.n {
        return Err(PermlabError::precondition(format!("vertex {i} out of range")));
    }
    let mut counts = vec![0u64; batch.n];
    for k in 0..batch.count() {
        counts[batch.tuple(k)[i] as usize] += 1;
    }
    let total = batch.count() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Total-variation distance between an empirical law built from `samples`
/// draws and a reference law, with the plug-in multinomial standard error
/// `½ Σ_k sqrt(p̂_k (1 - p̂_k) / samples)`.
pub fn tv_with_standard_error(empirical: &[f64], reference: &[f64], samples: usize) -> (f64, f64) {
    let m = samples as f64;
    let tv = 0.5 * empirical.iter().zip(reference).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let se = 0.5 * empirical.iter().map(|&p| (p * (1.0 - p) / m).sqrt()).sum::<f64>();
    (tv, se)
}

/// Distance from pairwise independence for two tracked particles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGap {
    pub gap: f64,
    pub std_error: f64,
}

/// TV distance between the empirical joint law of `(p(i), p(j))` and the
/// product of the two heat-kernel columns at the batch time.
pub fn empirical_pair_gap(batch: &WalkSampleBatch, i: usize, j: usize) -> Result<PairGap> {
    if i == j {
        return Err(PermlabError::precondition("pair gap needs i ≠ j"));
    }
    let n = batch.n;
    if i >= n || j >= n {
        return Err(PermlabError::precondition("vertex out of range"));
    }
    let lattice = Lattice::new(batch.dim, batch.edge)?;
    let kernel = lattice.heat_kernel_spectral(batch.t)?;
    let mut joint = vec![0u64; n * n];
    for k in 0..batch.count() {
        let tup = batch.tuple(k);
        joint[tup[i] as usize * n + tup[j] as usize] += 1;
    }
    let total = batch.count() as f64;
    let empirical: Vec<f64> = joint.iter().map(|&c| c as f64 / total).collect();
    let reference: Vec<f64> = (0..n * n).map(|c| kernel.get(i, c / n) * kernel.get(j, c % n)).collect();
    let (gap, std_error) = tv_with_standard_error(&empirical, &reference, batch.count());
    Ok(PairGap { gap, std_error })
}

pub fn write_jsonl<W: Write>(batch: &WalkSampleBatch, mut w: W) -> Result<()> {
    for k in 0..batch.count() {
        let rec = SampleRecord { index: k as u64, tuple: batch.tuple(k).to_vec() };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads records back in file order; indices must be `0, 1, 2, ..`.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<SampleRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord = serde_json::from_str(&line)?;
        if rec.index != out.len() as u64 {
            return Err(PermlabError::Parse(format!(
                "line {}: expected index {}, found {}",
                lineno + 1,
                out.len(),
                rec.index
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_gives_identity_tuples() {
        let lat = Lattice::new(1, 5).unwrap();
        let b = sample_walk(&lat, 0.0, 10, 7).unwrap();
        for k in 0..10 {
            assert_eq!(b.tuple(k), &[0, 1, 2, 3, 4]);
        }
        let gap = empirical_pair_gap(&b, 0, 3).unwrap();
        assert_eq!(gap.gap, 0.0);
    }

    #[test]
    fn thread_count_does_not_change_batch() {
        let lat = Lattice::new(1, 6).unwrap();
        let a = sample_walk_with_threads(&lat, 1.3, 500, 99, Some(1)).unwrap();
        let b = sample_walk_with_threads(&lat, 1.3, 500, 99, Some(4)).unwrap();
        assert_eq!(a, b);
        let c = sample_walk_with_threads(&lat, 1.3, 500, 100, Some(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tuples_stay_permutations() {
        let lat = Lattice::new(2, 3).unwrap();
        let b = sample_walk(&lat, 2.0, 50, 1).unwrap();
        for k in 0..b.count() {
            let mut t = b.tuple(k).to_vec();
            t.sort();
            assert_eq!(t, (0..9).collect::<Vec<u32>>());
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let lat = Lattice::new(1, 4).unwrap();
        let b = sample_walk(&lat, 0.5, 20, 3).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&b, &mut buf).unwrap();
        let first = String::from_utf8(buf.clone()).unwrap();
        assert!(first.starts_with("{\"index\":0,\"tuple\":["));
        let recs = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(recs.len(), 20);
        for (k, r) in recs.iter().enumerate() {
            assert_eq!(r.tuple.as_slice(), b.tuple(k));
        }
        assert!(read_jsonl("{\"index\":1,\"tuple\":[0]}\n".as_bytes()).is_err());
    }

    #[test]
    fn invalid_arguments() {
        let lat = Lattice::new(1, 4).unwrap();
        assert!(sample_walk(&lat, 1.0, 0, 1).is_err());
        let b = sample_walk(&lat, 1.0, 5, 1).unwrap();
        assert!(empirical_pair_gap(&b, 2, 2).is_err());
    }
}
