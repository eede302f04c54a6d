use aloha_core::ideal::{
    cdf_interference_lattice, cf_interference_lattice, failure_probs_lattice, lattice_levels,
    LatticeLadder, RationalPowerFactor,
};
use aloha_core::numerics::QuadratureSpec;
use aloha_core::{CaptureRatio, ProbabilityVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn poisson_pmf(rate: f64, n: usize) -> f64 {
    let mut p = (-rate).exp();
    for i in 1..=n {
        p *= rate / i as f64;
    }
    p
}

/// `P(Y <= x)` for `Y = sum_m level_m N_m` by convolving the Poisson laws
/// on `0..=x`.
fn enumerated_cdf(x: u64, alpha: f64, p: &ProbabilityVector, ladder: &LatticeLadder) -> f64 {
    let x = x as usize;
    let mut pmf = vec![0.0; x + 1];
    pmf[0] = 1.0;
    for (&pk, &level) in p.transmitting().iter().zip(ladder.levels()) {
        let level = level as usize;
        let rate = alpha * pk;
        let mut next = vec![0.0; x + 1];
        for (y, slot) in next.iter_mut().enumerate() {
            *slot = (0..=y / level).map(|n| poisson_pmf(rate, n) * pmf[y - n * level]).sum();
        }
        pmf = next;
    }
    pmf.iter().sum()
}

fn ladder(l: u64, m: u64, k: usize) -> LatticeLadder {
    lattice_levels(RationalPowerFactor::new(l, m).unwrap(), k).unwrap()
}

fn probability_vector(shape: &[f64]) -> ProbabilityVector {
    let mut values = vec![1.0];
    for &q in shape {
        let last = *values.last().unwrap();
        values.push(last * q);
    }
    ProbabilityVector::new(values).unwrap()
}

#[test]
fn poisson_cf_series() {
    let p = ProbabilityVector::initial(4);
    let phi = cf_interference_lattice(1.0, 1.0, &p, &ladder(1, 1, 4)).unwrap();
    let series: Complex64 = (0..60)
        .map(|n| Complex64::from_polar(poisson_pmf(1.0, n), n as f64))
        .sum();
    assert!((phi - series).norm() < 1e-10);
}

#[test]
fn cdf_matches_enumeration() {
    let quad = QuadratureSpec::lattice_default();
    let cases = [
        (1.0, vec![0.0, 0.0, 0.0, 0.0], 1, 1),
        (0.5, vec![0.0], 2, 1),
        (0.8, vec![0.7, 0.6, 0.5, 0.4], 2, 1),
        (1.3, vec![0.9, 0.8, 0.7, 0.6], 1, 2),
        (0.6, vec![0.5, 0.5, 0.5, 0.5], 3, 2),
    ];
    for (alpha, shape, l, m) in cases {
        let p = probability_vector(&shape);
        let lad = ladder(l, m, p.max_retx());
        for x in 0..=40u64 {
            let inverted = cdf_interference_lattice(x, alpha, &p, &lad, &quad).unwrap();
            let oracle = enumerated_cdf(x, alpha, &p, &lad);
            assert!(
                (inverted.probability - oracle).abs() < 1e-8,
                "alpha {alpha}, v {l}/{m}, x {x}: {} vs {oracle}",
                inverted.probability
            );
        }
    }
}

#[test]
fn enumeration_examples() {
    let quad = QuadratureSpec::lattice_default();
    let p = ProbabilityVector::initial(1);
    let lad = ladder(2, 1, 1);
    let f = cdf_interference_lattice(1, 0.5, &p, &lad, &quad).unwrap();
    assert!((f.probability - 0.909795989).abs() < 1e-8);
    let (q, _) =
        failure_probs_lattice(0.5, &p, &lad, CaptureRatio::from_linear(2.0).unwrap(), &quad).unwrap();
    assert!((q.values()[0] - 0.393469340).abs() < 1e-8);
    assert!((q.values()[1] - 0.090204011).abs() < 1e-8);
}

fn shape_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 5)
}

fn factor_strategy() -> impl Strategy<Value = (u64, u64)> {
    prop_oneof![Just((1, 1)), Just((2, 1)), Just((1, 2)), Just((3, 2))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cdf_nondecreasing(alpha in 0.0f64..2.0, shape in shape_strategy(), (l, m) in factor_strategy()) {
        let quad = QuadratureSpec::lattice_default();
        let lad = ladder(l, m, 4);
        let p = probability_vector(&shape);
        let mut prev = 0.0;
        for x in 0..=64u64 {
            let f = cdf_interference_lattice(x, alpha, &p, &lad, &quad).unwrap().probability;
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(prev <= f + 1e-9, "x = {x}: {prev} > {f}");
            prev = f;
        }
    }

    #[test]
    fn cf_modulus_bounded(alpha in 0.0f64..3.0, shape in shape_strategy(), (l, m) in factor_strategy(), omega in 0.0f64..std::f64::consts::PI) {
        let phi = cf_interference_lattice(omega, alpha, &probability_vector(&shape), &ladder(l, m, 4)).unwrap();
        prop_assert!(phi.norm() <= 1.0 + 1e-15);
    }

    #[test]
    fn no_capture_is_classic_collision_law(alpha in 0.0f64..2.0, shape in shape_strategy(), (l, m) in factor_strategy()) {
        let quad = QuadratureSpec::lattice_default();
        let lad = ladder(l, m, 4);
        let top = *lad.levels().iter().max().unwrap() as f64;
        let capture = CaptureRatio::from_linear(top + 0.5).unwrap();
        let p = probability_vector(&shape);
        let (q, _) = failure_probs_lattice(alpha, &p, &lad, capture, &quad).unwrap();
        let g = alpha * p.transmitting_mass();
        for &qk in q.values() {
            prop_assert!((qk - (1.0 - (-g).exp())).abs() < 1e-8);
        }
    }

    #[test]
    fn identical_powers_give_identical_failures(alpha in 0.0f64..2.0, shape in shape_strategy(), t_db in -6.0f64..6.0) {
        let quad = QuadratureSpec::lattice_default();
        let capture = CaptureRatio::from_db(t_db).unwrap();
        let (q, _) = failure_probs_lattice(alpha, &probability_vector(&shape), &ladder(1, 1, 4), capture, &quad).unwrap();
        prop_assert!(q.values().iter().all(|&qk| qk == q.values()[0]));
    }

    #[test]
    fn failures_grow_with_load(shape in shape_strategy(), (l, m) in factor_strategy(), t_db in -3.0f64..3.0) {
        let quad = QuadratureSpec::lattice_default();
        let lad = ladder(l, m, 4);
        let capture = CaptureRatio::from_db(t_db).unwrap();
        let p = probability_vector(&shape);
        let mut prev = vec![0.0; 5];
        for i in 0..=30 {
            let alpha = 0.05 * i as f64;
            let (q, _) = failure_probs_lattice(alpha, &p, &lad, capture, &quad).unwrap();
            for (a, b) in prev.iter().zip(q.values()) {
                prop_assert!(*a <= b + 1e-9);
            }
            prev = q.values().to_vec();
        }
    }
}
