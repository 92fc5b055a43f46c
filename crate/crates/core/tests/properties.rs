//! Property tests over seeds, gauges and Clifford parameters.

use focalforge::clifford::{build_clifford_system, verify_clifford};
use focalforge::families::{family_from_key, IsoparFamily, Side};
use focalforge::geometry::{random_gauge, sample_focal_point, shape_operators};
use focalforge::invariants::{classify, compute_invariants, decimal, InvariantReport, Verdict};
use focalforge::numkit::Mat;
use proptest::prelude::*;
use std::sync::OnceLock;

/// Homogeneous cases, where every scalar invariant is constant.
const HOMOGENEOUS: [(&str, Side); 10] = [
    ("cartan3:R", Side::Plus),
    ("cartan3:C", Side::Minus),
    ("otfkm:m=1,k=4", Side::Plus),
    ("otfkm:m=1,k=4", Side::Minus),
    ("otfkm:m=2,k=2", Side::Plus),
    ("otfkm:m=2,k=2", Side::Minus),
    ("otfkm:m=5,k=1", Side::Minus),
    ("otfkm:m=4,k=2,signs=++", Side::Plus),
    ("grassmann22", Side::Plus),
    ("grassmann22", Side::Minus),
];

/// Inhomogeneous cases: only `|B|^2` and the Gram matrix are constant.
const INHOMOGENEOUS: [(&str, Side); 3] =
    [("otfkm:m=4,k=2,signs=+-", Side::Minus), ("otfkm:m=4,k=2,signs=+-", Side::Plus), ("otfkm:m=5,k=1", Side::Plus)];

fn families() -> &'static Vec<(String, IsoparFamily)> {
    static CACHE: OnceLock<Vec<(String, IsoparFamily)>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut keys: Vec<&str> = HOMOGENEOUS.iter().chain(&INHOMOGENEOUS).map(|(k, _)| *k).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter().map(|k| (k.to_string(), family_from_key(k).unwrap())).collect()
    })
}

fn family(key: &str) -> &'static IsoparFamily {
    &families().iter().find(|(k, _)| k == key).unwrap().1
}

fn invariants_at(key: &str, side: Side, seed: u64) -> (focalforge::geometry::ShapeOperatorSet, InvariantReport) {
    let fam = family(key);
    let point = sample_focal_point(fam, side, seed).unwrap();
    let ops = shape_operators(fam, &point).unwrap();
    let inv = compute_invariants(&ops, fam.g, fam.m1(), fam.m2(), side).unwrap();
    (ops, inv)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scalars_survive_frame_remixing(case in 0..HOMOGENEOUS.len() + INHOMOGENEOUS.len(), seed in any::<u64>(), gauge in any::<u64>()) {
        let (key, side) = HOMOGENEOUS.iter().chain(&INHOMOGENEOUS).nth(case).copied().unwrap();
        let fam = family(key);
        let (ops, inv) = invariants_at(key, side, seed);
        let (qt, qn) = random_gauge(gauge, ops.n(), ops.p());
        let mixed = compute_invariants(&ops.remixed(&qt, &qn), fam.g, fam.m1(), fam.m2(), side).unwrap();
        for ((name, a), (_, b)) in inv.scalars().into_iter().zip(mixed.scalars()) {
            prop_assert!(close(a, b, 1e-8), "{key} {side} {name}: {a} vs {b}");
        }
        prop_assert_eq!(inv.verdict, mixed.verdict);
    }

    #[test]
    fn homogeneous_cases_have_constant_invariants(case in 0..HOMOGENEOUS.len(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let (key, side) = HOMOGENEOUS[case];
        let (_, a) = invariants_at(key, side, s1);
        let (_, b) = invariants_at(key, side, s2);
        for ((name, x), (_, y)) in a.scalars().into_iter().zip(b.scalars()) {
            prop_assert!(close(x, y, 1e-6), "{key} {side} {name}: {x} vs {y}");
        }
    }

    #[test]
    fn norm_and_gram_are_constant_everywhere(case in 0..INHOMOGENEOUS.len(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let (key, side) = INHOMOGENEOUS[case];
        let (_, a) = invariants_at(key, side, s1);
        let (_, b) = invariants_at(key, side, s2);
        prop_assert!(close(a.b_norm_sq, b.b_norm_sq, 1e-6));
        prop_assert!(max_abs(&(&a.gram - &b.gram)) < 1e-6);
        prop_assert_eq!(a.verdict, Verdict::No);
    }

    #[test]
    fn samples_lie_on_the_focal_set(case in 0..HOMOGENEOUS.len(), seed in any::<u64>()) {
        let (key, side) = HOMOGENEOUS[case];
        let fam = family(key);
        let pt = sample_focal_point(fam, side, seed).unwrap();
        prop_assert!((pt.x.norm() - 1.0).abs() < 1e-12);
        prop_assert!((fam.f(&pt.x) - side.level()).abs() < 1e-10);
        let t = pt.tangent.matrix();
        let n = pt.normal.matrix();
        prop_assert_eq!(t.ncols() + n.ncols() + 1, fam.ambient_dim);
        prop_assert!(max_abs(&(t.transpose() * t - Mat::identity(t.ncols(), t.ncols()))) < 1e-10);
        prop_assert!(max_abs(&(n.transpose() * n - Mat::identity(n.ncols(), n.ncols()))) < 1e-10);
        prop_assert!(max_abs(&(t.transpose() * n)) < 1e-10);
        prop_assert!((t.transpose() * &pt.x).amax() < 1e-10 && (n.transpose() * &pt.x).amax() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clifford_generators_anticommute(m in 1usize..=9, k in 1usize..=3, signs in prop::collection::vec(prop::bool::ANY, 3)) {
        let signs: Vec<i8> = signs[..k].iter().map(|s| if *s { 1 } else { -1 }).collect();
        if let Ok(sys) = build_clifford_system(m, k, &signs) {
            prop_assert!(verify_clifford(&sys) < 1e-12);
            prop_assert_eq!(sys.generators().len(), m + 1);
            prop_assert_eq!(sys.dim(), 2 * sys.l());
        }
    }

    #[test]
    fn decimal_strings_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let back = decimal::parse(&decimal::format(v)).unwrap();
        prop_assert!(close(back, v, 1e-14));
    }

    #[test]
    fn combined_verdict_is_order_free(vs in prop::collection::vec(0u8..3, 1..8)) {
        let verdicts: Vec<Verdict> = vs.iter().map(|v| [Verdict::Yes, Verdict::No, Verdict::Indeterminate][*v as usize]).collect();
        let forward = Verdict::combine(verdicts.iter().copied());
        let backward = Verdict::combine(verdicts.iter().rev().copied());
        prop_assert_eq!(forward, backward);
        if verdicts.contains(&Verdict::No) {
            prop_assert_eq!(forward, Verdict::No);
        } else if verdicts.iter().all(|v| *v == Verdict::Yes) {
            prop_assert_eq!(forward, Verdict::Yes);
        } else {
            prop_assert_eq!(forward, Verdict::Indeterminate);
        }
    }

    #[test]
    fn verdict_bands(nabla in 0.0f64..1.0, defect in 0.0f64..1.0) {
        let v = classify(nabla, defect);
        if nabla < 1e-3 && defect < 1e-4 {
            prop_assert_eq!(v, Verdict::Yes);
        } else if nabla > 1e-2 && defect > 1e-3 {
            prop_assert_eq!(v, Verdict::No);
        } else {
            prop_assert_eq!(v, Verdict::Indeterminate);
        }
    }
}
