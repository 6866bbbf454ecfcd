use num_rational::BigRational;
use num_traits::ToPrimitive;
use permlab::extension::{
    distinct_mass, evolve_extended, evolve_extended_at, restrict_to_distinct, total_mass, ConfigurationSpace,
    ExtendedField, PairPotential, DEFAULT_STATE_CAP, DEFAULT_STEP,
};
use permlab::group_walk::GroupSpace;
use permlab::lattice::Lattice;
use proptest::prelude::*;
use serde::Deserialize;

const GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 5.0];

fn ring_space(l: usize) -> (Lattice, ConfigurationSpace) {
    let lat = Lattice::new(1, l).unwrap();
    let sp = ConfigurationSpace::full(&lat, DEFAULT_STATE_CAP).unwrap();
    (lat, sp)
}

#[derive(Deserialize)]
struct Golden {
    #[serde(rename = "L")]
    l: usize,
    phi: Vec<Vec<String>>,
    cases: Vec<GoldenCase>,
}

#[derive(Deserialize)]
struct GoldenCase {
    r: String,
    pairs: Vec<(usize, usize)>,
    values: Vec<String>,
}

fn rational(s: &str) -> f64 {
    s.parse::<BigRational>().unwrap().to_f64().unwrap()
}

#[test]
fn potential_matches_literal_expansion_on_product_fields() {
    let golden: Golden = serde_json::from_str(include_str!("data/potential_golden_L3.json")).unwrap();
    let (_, sp) = ring_space(golden.l);
    let phi: Vec<Vec<f64>> = golden.phi.iter().map(|row| row.iter().map(|s| rational(s)).collect()).collect();
    let mut field = ExtendedField::zeros(sp.size());
    for (s, v) in field.values.iter_mut().enumerate() {
        *v = (0..3).map(|k| phi[k][sp.coord(s, k)]).product();
    }
    for case in &golden.cases {
        let pot = PairPotential { r: rational(&case.r), pairs: case.pairs.clone() };
        let out = pot.apply(&sp, &field).unwrap();
        for (s, want) in case.values.iter().enumerate() {
            assert!((out.values[s] - rational(want)).abs() < 1e-12, "r={} pairs={:?} s={s}", case.r, case.pairs);
        }
    }
}

proptest! {
    #[test]
    fn potential_is_linear(
        u in prop::collection::vec(-1.0f64..1.0, 256),
        v in prop::collection::vec(-1.0f64..1.0, 256),
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
        r in -1.0f64..1.0,
    ) {
        let (_, sp) = ring_space(4);
        let pot = PairPotential::all_pairs(4, r);
        let combo = ExtendedField {
            t: 0.0,
            values: u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect(),
        };
        let vu = pot.apply(&sp, &ExtendedField { t: 0.0, values: u }).unwrap();
        let vv = pot.apply(&sp, &ExtendedField { t: 0.0, values: v }).unwrap();
        let vc = pot.apply(&sp, &combo).unwrap();
        for s in 0..sp.size() {
            prop_assert!((vc.values[s] - (alpha * vu.values[s] + beta * vv.values[s])).abs() < 1e-12);
        }
    }
}

#[test]
fn restriction_identity_on_the_time_grid() {
    for (l, rs) in [(3, &[0.0, 0.5, -0.5][..]), (4, &[0.0, 0.5, -0.5][..]), (5, &[0.0][..])] {
        let (lat, sp) = ring_space(l);
        let group = GroupSpace::new(&lat, 1 << 20).unwrap();
        for &r in rs {
            let evs = evolve_extended_at(&PairPotential::all_pairs(l, r), &sp, &GRID, DEFAULT_STEP).unwrap();
            for ev in &evs {
                let exact = group.evolve(ev.field.t).unwrap();
                let g = restrict_to_distinct(&sp, &ev.field).unwrap();
                let defect = g.max_abs_diff(&exact);
                assert!(defect <= 1e-6, "L={l} r={r} t={} defect={defect}", ev.field.t);
                assert!((distinct_mass(&sp, &ev.field) - 1.0).abs() < 1e-8);
                assert!(g.weights.iter().all(|&w| w > -1e-12));
                assert!(ev.local_error <= 1e-8 * ev.max_abs.max(1.0), "local error {}", ev.local_error);
            }
        }
    }
}

#[test]
fn long_time_restriction_is_uniform() {
    let (_, sp) = ring_space(3);
    let ev = evolve_extended(&PairPotential::all_pairs(3, 0.0), &sp, 50.0, DEFAULT_STEP).unwrap();
    let g = restrict_to_distinct(&sp, &ev.field).unwrap();
    for w in &g.weights {
        assert!((w - 1.0 / 6.0).abs() < 1e-6);
    }
}

#[test]
fn without_potential_the_field_is_a_product_of_heat_kernels() {
    let (lat, sp) = ring_space(4);
    for t in [0.25, 1.0, 3.0] {
        let ev = evolve_extended(&PairPotential::disabled(), &sp, t, 1e-3).unwrap();
        let k = lat.heat_kernel_spectral(t).unwrap();
        let worst = (0..sp.size())
            .map(|s| {
                let prod: f64 = (0..4).map(|i| k.get(i, sp.coord(s, i))).product();
                (ev.field.values[s] - prod).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "t={t} worst={worst}");
        // the pure heat flow conserves total mass on Λ^N
        assert!((total_mass(&ev.field) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn halving_the_step_shows_fourth_order_convergence() {
    let (lat, sp) = ring_space(4);
    let exact = GroupSpace::new(&lat, 1 << 20).unwrap().evolve(1.0).unwrap();
    let pot = PairPotential::all_pairs(4, 0.5);
    let defects: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let ev = evolve_extended(&pot, &sp, 1.0, h).unwrap();
            restrict_to_distinct(&sp, &ev.field).unwrap().max_abs_diff(&exact)
        })
        .collect();
    for w in defects.windows(2) {
        assert!(w[1] < 1e-10 || w[0] / w[1] >= 8.0, "{defects:?}");
    }
    assert!(defects[0] > 1e-10, "coarsest step should be above the floor: {defects:?}");
}

#[test]
fn total_mass_starts_at_one_and_stays_finite() {
    let (_, sp) = ring_space(3);
    let evs = evolve_extended_at(&PairPotential::all_pairs(3, 0.0), &sp, &[0.0, 1.0, 5.0, 20.0], DEFAULT_STEP).unwrap();
    assert_eq!(total_mass(&evs[0].field), 1.0);
    let masses: Vec<f64> = evs.iter().map(|e| total_mass(&e.field)).collect();
    assert!(masses.iter().all(|m| m.is_finite()));
}
