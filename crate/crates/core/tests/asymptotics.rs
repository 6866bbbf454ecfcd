use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use permlab::asymptotics::{
    attempt_eq54, cluster_sum, conjecture2_permanent, eval_eq51, formal_series_check, maximize_eq51,
    per_vertex_log_fast, permanent_curve, permanent_ryser, q_n_sequence, rho_variant, ConnectivityProfile,
};
use permlab::lattice::Lattice;
use permlab::series::catalan_by_recursion;
use proptest::prelude::*;

fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Counts set partitions of `n` labeled vertices into singletons and blocks
/// of sizes `2..=max_index + 1`, by the size profile of the non-singleton
/// blocks. Built by always placing the lowest unassigned vertex.
fn labeled_cluster_counts(n: usize, max_index: usize) -> std::collections::HashMap<Vec<u64>, u64> {
    fn rec(
        free: u32,
        max_index: usize,
        counts: &mut Vec<u64>,
        out: &mut std::collections::HashMap<Vec<u64>, u64>,
    ) {
        if free == 0 {
            *out.entry(counts.clone()).or_default() += 1;
            return;
        }
        let first = free.trailing_zeros();
        let rest = free & !(1 << first);
        rec(rest, max_index, counts, out);
        // every subset of the rest joins `first` in one block
        let mut sub = rest;
        while sub != 0 {
            let size = sub.count_ones() as usize + 1;
            if size <= max_index + 1 {
                counts[size - 2] += 1;
                rec(rest & !sub, max_index, counts, out);
                counts[size - 2] -= 1;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut out = std::collections::HashMap::new();
    rec((1u32 << n) - 1, max_index, &mut vec![0; max_index], &mut out);
    out
}

#[test]
fn eq51_equals_labeled_cluster_enumeration() {
    let table = catalan_by_recursion(4).unwrap();
    for n in 1..=8usize {
        for max_index in 1..=2 {
            for (counts, ways) in labeled_cluster_counts(n, max_index) {
                let profile = ConnectivityProfile { n: n as u64, counts: counts.clone() };
                let mut want = BigRational::from_integer(ways.into());
                for (k, &m) in counts.iter().enumerate() {
                    let i = k + 1;
                    let fact: u64 = (1..=i as u64).product();
                    let w = BigRational::new(&table.values[i] * BigInt::from(fact), BigInt::from(n).pow(i as u32));
                    want *= num_traits::pow(w, m as usize);
                }
                assert_eq!(eval_eq51(&profile, &table).unwrap().exact, want, "N={n} {counts:?}");
            }
        }
    }
}

#[test]
fn eq51_small_values() {
    let table = catalan_by_recursion(16).unwrap();
    let empty = eval_eq51(&ConnectivityProfile::empty(10, 3), &table).unwrap();
    assert!(empty.exact.is_one());
    assert_eq!(empty.per_vertex_log, 0.0);
    let one_pair = eval_eq51(&ConnectivityProfile { n: 10, counts: vec![1] }, &table).unwrap();
    assert_eq!(one_pair.exact, frac(9, 2));
    let full = eval_eq51(&ConnectivityProfile { n: 12, counts: vec![2, 0, 2] }, &table).unwrap();
    assert!(full.exact > BigRational::zero());
    assert!(eval_eq51(&ConnectivityProfile { n: 5, counts: vec![3] }, &table).is_err());
}

#[test]
fn maximization_is_exhaustive_for_a_single_cluster_size() {
    let table = catalan_by_recursion(16).unwrap();
    let best = maximize_eq51(10, 1, &table).unwrap();
    let mut brute = (f64::NEG_INFINITY, 0);
    for m in 0..=5u64 {
        let v = eval_eq51(&ConnectivityProfile { n: 10, counts: vec![m] }, &table).unwrap().per_vertex_log;
        if v > brute.0 {
            brute = (v, m);
        }
    }
    assert_eq!(best.profile.counts, vec![brute.1]);
    assert!((best.q_n - brute.0).abs() < 1e-12);
    assert_eq!(maximize_eq51(10, 1, &table).unwrap(), best);
    assert_eq!(maximize_eq51(25, 0, &table).unwrap().q_n, 0.0);
    assert!(maximize_eq51(20_000, 2, &table).is_err());
    assert!(maximize_eq51(100, 17, &catalan_by_recursion(20).unwrap()).is_err());
}

#[test]
fn knapsack_agrees_with_exhaustive_search() {
    let table = catalan_by_recursion(16).unwrap();
    // the profile box at N = 200, I_max = 3 is past the exhaustive limit,
    // so the library switches to the knapsack; enumerate it here instead
    let n = 200u64;
    let mut brute = f64::NEG_INFINITY;
    for m1 in 0..=n / 2 {
        for m2 in 0..=(n - 2 * m1) / 3 {
            for m3 in 0..=(n - 2 * m1 - 3 * m2) / 4 {
                let p = ConnectivityProfile { n, counts: vec![m1, m2, m3] };
                brute = brute.max(per_vertex_log_fast(&p, &table).unwrap());
            }
        }
    }
    let best = maximize_eq51(n, 3, &table).unwrap();
    assert!(best.method.contains("knapsack"));
    assert!((best.q_n - brute).abs() < 1e-12, "{} vs {brute}", best.q_n);
}

/// Exact maximum of the per-vertex log: for fixed `M = Σ (i+1) m_i` the
/// objective separates over `i`, so a knapsack over `M` finds it.
fn knapsack_q_n(n: usize, max_index: usize) -> f64 {
    let table = catalan_by_recursion(max_index).unwrap();
    let lf = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    best[0] = 0.0;
    for i in 1..=max_index {
        let size = i + 1;
        let a: f64 = table.values[i].to_string().parse().unwrap();
        let w = a.ln() + lf(i) - i as f64 * (n as f64).ln() - lf(i + 1);
        let mut next = vec![f64::NEG_INFINITY; n + 1];
        for used in 0..=n {
            if best[used] == f64::NEG_INFINITY {
                continue;
            }
            for m in 0..=(n - used) / size {
                let v = best[used] + m as f64 * w - lf(m);
                let slot = &mut next[used + m * size];
                *slot = slot.max(v);
            }
        }
        best = next;
    }
    (0..=n).map(|m| best[m] + lf(n) - lf(n - m)).fold(f64::NEG_INFINITY, f64::max) / n as f64
}

#[test]
fn q_n_increases_and_stays_below_one() {
    let table = catalan_by_recursion(16).unwrap();
    let seq = q_n_sequence(&[50, 100, 200, 400], 16, &table).unwrap();
    let q: Vec<f64> = seq.iter().map(|m| m.q_n).collect();
    println!("q_N = {q:?}");
    assert!(q.windows(2).all(|w| w[1] > w[0]), "{q:?}");
    assert!(q.iter().all(|&v| v < 1.0));
    for m in &seq {
        let exact = eval_eq51(&m.profile, &table).unwrap().per_vertex_log;
        assert!((exact - m.q_n).abs() < 1e-9);
        let oracle = knapsack_q_n(m.profile.n as usize, 16);
        assert!((oracle - m.q_n).abs() < 1e-9, "N={} {} vs {oracle}", m.profile.n, m.q_n);
    }
}

#[test]
fn eq54_supremum_is_one_half() {
    let table = catalan_by_recursion(64).unwrap();
    let r = attempt_eq54(&table).unwrap();
    assert!((r.sup_value - 0.5).abs() < 1e-9);
    assert!(!r.solvable);
    assert!((cluster_sum(0.1).unwrap() - 0.112_701_665_379_258_3).abs() < 1e-9);
    assert!(cluster_sum(0.05).unwrap() < cluster_sum(0.15).unwrap());
    assert!(cluster_sum(0.15).unwrap() < cluster_sum(0.25).unwrap());
}

#[test]
fn rho_exponent_on_the_grid() {
    for (n, d) in [(1, 10), (3, 10), (9, 20)] {
        let pt = rho_variant(&frac(n, d), 64).unwrap();
        assert!(pt.difference.abs() <= 1e-8, "{pt:?}");
        assert!(pt.self_consistency_residual <= 1e-10);
    }
    let tiny = rho_variant(&frac(1, 100_000_000), 64).unwrap();
    assert!(tiny.q_tilde_series.abs() < 1e-6 && tiny.q_tilde_target.abs() < 1e-6);
    assert!(rho_variant(&frac(3, 5), 64).is_err());
}

#[test]
fn rho_series_agree_exactly_through_order_32() {
    let c = formal_series_check(32).unwrap();
    assert!(c.equal(), "{:?}", c.mismatches);
    // independent: Σ_{k≥1} ρ^k / (k(k+1))
    for k in 1..=32i64 {
        assert_eq!(c.from_target[k as usize], frac(1, k * (k + 1)).to_string());
    }
}

fn brute_permanent(a: &[f64], n: usize) -> f64 {
    fn rec(a: &[f64], n: usize, row: usize, used: &mut Vec<bool>) -> f64 {
        if row == n {
            return 1.0;
        }
        let mut s = 0.0;
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                s += a[row * n + j] * rec(a, n, row + 1, used);
                used[j] = false;
            }
        }
        s
    }
    rec(a, n, 0, &mut vec![false; n])
}

#[test]
fn permanent_of_the_kernel_tends_to_the_uniform_value() {
    let small = conjecture2_permanent(&Lattice::new(1, 3).unwrap(), 50.0).unwrap();
    assert!((small.permanent - 2.0 / 9.0).abs() < 1e-8);

    let lat = Lattice::new(1, 10).unwrap();
    let times: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0].to_vec();
    let curve = permanent_curve(&lat, &times).unwrap();
    let target = curve[0].target;
    assert!((target - 3_628_800.0 / 1e10).abs() < 1e-15);
    assert!((curve[0].permanent - 1.0).abs() < 1e-12);
    for w in curve.windows(2) {
        assert!(w[1].permanent <= w[0].permanent + 1e-12);
    }
    for r in &curve {
        assert!(r.permanent >= target - 1e-12 && r.permanent <= 1.0 + 1e-12);
    }
    assert!(curve.last().unwrap().gap.abs() <= 1e-6);
    assert!(conjecture2_permanent(&Lattice::new(1, 15).unwrap(), 1.0).is_err());
}

#[test]
fn permanent_thread_count_does_not_change_bits() {
    let lat = Lattice::new(2, 3).unwrap();
    let k = lat.heat_kernel_spectral(0.4).unwrap();
    let flat: Vec<f64> = (0..9).flat_map(|i| k.row(i).to_vec()).collect();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| permanent_ryser(&flat, 9).unwrap());
    let b = four.install(|| permanent_ryser(&flat, 9).unwrap());
    assert_eq!(a.to_bits(), b.to_bits());
}

proptest! {
    #[test]
    fn ryser_matches_permutation_sum(vals in prop::collection::vec(-2.0f64..2.0, 36), n in 1usize..=6) {
        let a = &vals[..n * n];
        let want = brute_permanent(a, n);
        prop_assert!((permanent_ryser(a, n).unwrap() - want).abs() < 1e-9 * (1.0 + want.abs()));
    }
}
