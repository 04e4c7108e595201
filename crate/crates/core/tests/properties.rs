use proptest::prelude::*;

use asymptotica::channel::{reshuffle, Channel, Picture};
use asymptotica::choieffros::star_unchecked;
use asymptotica::cli::json::to_string_17;
use asymptotica::matcore::{hs_inner, random, ComplexMatrix};
use asymptotica::spectral::spectrum;
use asymptotica::structure::analyze_structure;
use asymptotica::unfolder::{compare_roundtrip, random_ucp, random_unfold_spec, unfold, Synthesis};
use asymptotica::Tolerances;

fn gaussian(d: usize, seed: u64) -> ComplexMatrix {
    random::gaussian(&mut random::seeded(seed), d, d)
}

fn ucp_strategy() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..=4, 1usize..=3, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn reshuffle_is_an_involution(d in 1usize..=4, seed in any::<u64>()) {
        let m = gaussian(d * d, seed);
        prop_assert!(reshuffle(&reshuffle(&m, d), d).approx_eq(&m, 0.0));
    }

    #[test]
    fn adjoint_is_hilbert_schmidt_dual((d, r, seed) in ucp_strategy()) {
        let c = random_ucp(d, r, seed).unwrap();
        let a = gaussian(d, seed ^ 1);
        let x = gaussian(d, seed ^ 2);
        let lhs = hs_inner(&a, &c.apply(&x).unwrap()).unwrap();
        let rhs = hs_inner(&c.adjoint().apply(&a).unwrap(), &x).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn compose_applies_right_operand_first((d, r, seed) in ucp_strategy()) {
        let a = random_ucp(d, r, seed).unwrap();
        let b = random_ucp(d, r, seed.wrapping_add(7)).unwrap();
        let x = gaussian(d, seed ^ 3);
        let direct = a.apply(&b.apply(&x).unwrap()).unwrap();
        let composed = a.compose(&b).unwrap().apply(&x).unwrap();
        prop_assert!(direct.approx_eq(&composed, 1e-10));
        prop_assert!(a.compose(&b).unwrap().is_ucp());
    }

    #[test]
    fn ucp_maps_satisfy_schwarz((d, r, seed) in ucp_strategy()) {
        let c = random_ucp(d, r, seed).unwrap();
        let x = gaussian(d, seed ^ 4);
        let (margin, _) = asymptotica::channel::schwarz_margin(&c, &x);
        prop_assert!(margin > -1e-10, "margin {margin}");
    }

    #[test]
    fn peripheral_projection_is_a_ucp_idempotent((d, r, seed) in ucp_strategy()) {
        let tol = Tolerances::default();
        let c = random_ucp(d, r, seed).unwrap();
        let spec = spectrum(&c, &tol).unwrap();
        let pp = spec.peripheral_projection().unwrap();
        prop_assert!(pp.idempotency_defect() < 1e-8);
        prop_assert!(pp.unital_defect() < 1e-8);
        prop_assert!(pp.is_cp(1e-8));
        prop_assert_eq!(spec.attractor_basis().unwrap().len(), spec.peripheral_count());
        let x = gaussian(d, seed ^ 5);
        prop_assert!(pp.apply(&c.apply(&x).unwrap()).approx_eq(&c.apply(&pp.apply(&x)).unwrap(), 1e-8));
    }

    #[test]
    fn json_floats_round_trip_exactly(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let text = to_string_17(&serde_json::json!({ "x": x })).unwrap();
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back["x"].as_f64().unwrap().to_bits(), x.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn star_product_is_associative_on_the_attractor((d, r, seed) in ucp_strategy()) {
        let tol = Tolerances::default();
        let c = random_ucp(d, r, seed).unwrap();
        let pp = spectrum(&c, &tol).unwrap().peripheral_projection().unwrap();
        let [x, y, z] = [1u64, 2, 3].map(|k| pp.apply(&gaussian(d, seed ^ (k << 8))));
        let left = star_unchecked(&pp, &star_unchecked(&pp, &x, &y), &z);
        let right = star_unchecked(&pp, &x, &star_unchecked(&pp, &y, &z));
        let scale = x.norm_fro() * y.norm_fro() * z.norm_fro();
        prop_assert!(left.dist_fro(&right) < 1e-7 * (1.0 + scale));
    }

    #[test]
    fn unfolded_channels_are_ucp(seed in any::<u64>()) {
        let spec = random_unfold_spec(6, seed);
        let c = unfold(&spec, &Tolerances::default()).unwrap();
        prop_assert!(c.is_ucp());
        prop_assert_eq!(c.picture(), Picture::Heisenberg);
        prop_assert!(c.apply(&ComplexMatrix::identity(c.dim())).unwrap().approx_eq(&ComplexMatrix::identity(c.dim()), 1e-10));
    }

    #[test]
    fn rotated_synthesis_round_trips(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let syn = Synthesis::rotated(random_unfold_spec(6, seed), &tol).unwrap();
        let spec = spectrum(&syn.channel, &tol).unwrap();
        let pp = spec.peripheral_projection().unwrap();
        let s = analyze_structure(&syn.channel, &spec, &pp, &tol, seed).unwrap();
        let rep = compare_roundtrip(&syn.truth, &s, &spec.attractor_basis().unwrap(), 1e-6, 1e-7);
        let failed: Vec<&str> = rep.failures().iter().map(|i| i.name.as_str()).collect();
        prop_assert!(rep.passed, "failed: {failed:?}");
    }
}

#[test]
fn identity_channel_is_its_own_adjoint() {
    let c = Channel::identity(3, Picture::Heisenberg);
    assert!(c.adjoint().superop().approx_eq(c.superop(), 0.0));
}
