use permlab::group_walk::{
    empirical_marginal, empirical_pair_gap, evolve_group, sample_walk, tv_with_standard_error, Permutation,
};
use permlab::lattice::Lattice;

fn ring(l: usize) -> Lattice {
    Lattice::new(1, l).unwrap()
}

#[test]
fn distribution_is_a_probability_symmetric_under_inversion() {
    let lat = ring(5);
    let dist = evolve_group(&lat, 0.8).unwrap();
    assert!((dist.total() - 1.0).abs() < 1e-10);
    assert!(dist.weights.iter().all(|&w| w >= 0.0));
    for rank in 0..dist.weights.len() as u64 {
        let p = Permutation::unrank(5, rank).unwrap();
        assert!((dist.weight(&p) - dist.weight(&p.inverse())).abs() < 1e-10);
    }
}

#[test]
fn marginals_are_heat_kernel_rows() {
    for (l, t) in [(3, 1.0), (4, 0.3), (6, 2.0)] {
        let lat = ring(l);
        let dist = evolve_group(&lat, t).unwrap();
        let k = lat.heat_kernel_spectral(t).unwrap();
        for i in 0..l {
            let m = dist.marginal_of_vertex(i).unwrap();
            for (a, b) in m.0.iter().zip(k.row(i)) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
    let late = evolve_group(&ring(4), 50.0).unwrap().marginal_of_vertex(0).unwrap();
    assert!(late.0.iter().all(|v| (v - 0.25).abs() < 1e-8));
}

#[test]
fn exact_and_sampled_laws_agree() {
    let lat = ring(4);
    let t = 0.7;
    let dist = evolve_group(&lat, t).unwrap();
    let batch = sample_walk(&lat, t, 40_000, 5).unwrap();
    let mut counts = vec![0.0; dist.weights.len()];
    for k in 0..batch.count() {
        let images: Vec<usize> = batch.tuple(k).iter().map(|&v| v as usize).collect();
        counts[Permutation::from_images(images).unwrap().rank() as usize] += 1.0 / batch.count() as f64;
    }
    let (tv, se) = tv_with_standard_error(&counts, &dist.weights, batch.count());
    assert!(tv <= 3.0 * se, "{tv} vs {se}");
}

#[test]
fn monte_carlo_marginal_within_error_bars() {
    let lat = ring(8);
    let batch = sample_walk(&lat, 2.0, 100_000, 1).unwrap();
    let emp = empirical_marginal(&batch, 0).unwrap();
    let k = lat.heat_kernel_spectral(2.0).unwrap();
    let (tv, se) = tv_with_standard_error(&emp, k.row(0), batch.count());
    assert!(tv <= 3.0 * se);
    let gap = empirical_pair_gap(&batch, 0, 4).unwrap();
    assert!(gap.gap.is_finite() && gap.std_error > 0.0);
}
