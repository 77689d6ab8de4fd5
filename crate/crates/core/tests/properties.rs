use afree_core::blowup::mollify;
use afree_core::cone::{
    intersection_cone_exact, intersection_cone_sampled, max_principal_angle, union_wave_cone_membership,
};
use afree_core::corpus::{random_operator, random_operator_sized, CorpusShape};
use afree_core::fourier::{DirectionSymbol, MultiplierSpec, UniformGrid};
use afree_core::frame::AnisotropicFrame;
use afree_core::measure::{
    check_afree, lebesgue_decompose, radon_nikodym, total_variation, AfreeOptions, Atom, DiscreteMeasure, Region, Window,
};
use afree_core::operator::{parse_operator, serialize_operator, OperatorSystem};
use afree_core::rational::q;
use afree_core::symbol::{principal_part, solve_weights};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn operator(seed: u64) -> OperatorSystem {
    random_operator(&mut ChaCha8Rng::seed_from_u64(seed), &CorpusShape::default())
}

fn atoms(d: usize, m: usize) -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::vec(
        (prop::collection::vec(-1.0..1.0f64, d), prop::collection::vec(-2.0..2.0f64, m)).prop_map(|(x, w)| Atom { x, w }),
        1..12,
    )
}

fn point(d: usize) -> Vec<f64> {
    (0..d).map(|k| 0.3 - 0.2 * k as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operators_round_trip(seed in any::<u64>()) {
        let shape = CorpusShape { max_dim: 4, max_terms: 6, max_equations: 3, ..Default::default() };
        let op = random_operator(&mut ChaCha8Rng::seed_from_u64(seed), &shape);
        prop_assert_eq!(parse_operator(&serialize_operator(&op)).unwrap(), op);
    }

    #[test]
    fn exact_and_sampled_cones_agree(seed in any::<u64>()) {
        let op = operator(seed);
        let pp = principal_part(&op);
        let frames = solve_weights(&pp).unwrap().frames();
        let x = point(op.dim());
        let exact = intersection_cone_exact(&pp, &x).unwrap();
        let sampled = intersection_cone_sampled(&pp, &frames, &x, 64, seed, 1e-10).unwrap();
        let angle = max_principal_angle(&exact, &sampled);
        prop_assert!(angle.is_some_and(|a| a < 1e-8), "{} vs {}", exact.dimension, sampled.dimension);
    }

    #[test]
    fn more_equations_shrink_the_cone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = CorpusShape::default();
        let (d, m) = (2, 3);
        let a = random_operator_sized(&mut rng, d, m, 1, &shape);
        let b = random_operator_sized(&mut rng, d, m, 1, &shape);
        let x = point(d);
        let ca = intersection_cone_exact(&principal_part(&a), &x).unwrap();
        let cb = intersection_cone_exact(&principal_part(&b), &x).unwrap();
        let both = intersection_cone_exact(&principal_part(&a.extended_with(&b).unwrap()), &x).unwrap();
        prop_assert!(both.dimension <= ca.dimension.min(cb.dimension));
        for v in &both.basis {
            prop_assert!(ca.contains(v, 1e-9) && cb.contains(v, 1e-9));
        }
    }

    #[test]
    fn scaling_an_equation_keeps_the_cone(seed in any::<u64>(), num in 1i64..7, den in 1i64..7, neg in any::<bool>()) {
        let op = operator(seed);
        let s = q(if neg { -num } else { num }, den);
        let scaled = op.with_scaled_equation(0, &s).unwrap();
        let x = point(op.dim());
        let a = intersection_cone_exact(&principal_part(&op), &x).unwrap();
        let b = intersection_cone_exact(&principal_part(&scaled), &x).unwrap();
        prop_assert!(max_principal_angle(&a, &b).is_some_and(|t| t < 1e-12));
    }

    #[test]
    fn union_contains_intersection(seed in any::<u64>()) {
        let op = operator(seed);
        let pp = principal_part(&op);
        let frames = solve_weights(&pp).unwrap().frames();
        let x = point(op.dim());
        let cone = intersection_cone_exact(&pp, &x).unwrap();
        for v in &cone.basis {
            let m = union_wave_cone_membership(&pp, &frames[0], &x, v, 16, seed, 1e-10).unwrap();
            prop_assert!(m.member, "{}", m.min_residual);
        }
    }

    #[test]
    fn total_variation_is_additive(atoms in atoms(2, 2), cut in -1.0..1.0f64) {
        let mu = DiscreteMeasure::new(2, 2, atoms, None).unwrap();
        let left = Region::Box { lo: vec![-10.0, -10.0], hi: vec![cut, 10.0] };
        let right = Region::Box { lo: vec![cut, -10.0], hi: vec![10.0, 10.0] };
        let all = total_variation(&mu, &Region::All);
        let split = total_variation(&mu, &left) + total_variation(&mu, &right);
        prop_assert!((all - split).abs() <= 1e-12 * all.max(1.0));
    }

    #[test]
    fn radon_nikodym_directions_are_unit(atoms in atoms(2, 3)) {
        let mu = DiscreteMeasure::new(2, 3, atoms, None).unwrap();
        let (_, singular) = lebesgue_decompose(&mu);
        if let Ok(rn) = radon_nikodym(&singular) {
            for d in &rn.directions {
                let n = d.f.iter().map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn afree_residual_is_subadditive(a in atoms(2, 1), b in atoms(2, 1)) {
        let op = parse_operator("D[1,0] u1 + 2 * D[0,1] u1 = 0").unwrap();
        let opts = AfreeOptions {
            window: Some(Window { lo: vec![-2.0, -2.0], hi: vec![2.0, 2.0] }),
            resolution: 5,
            scales: 2,
            ..Default::default()
        };
        let mu = DiscreteMeasure::new(2, 1, a.clone(), None).unwrap();
        let nu = DiscreteMeasure::new(2, 1, b.clone(), None).unwrap();
        let sum = DiscreteMeasure::new(2, 1, a.into_iter().chain(b).collect(), None).unwrap();
        let r = |m: &DiscreteMeasure| check_afree(&op, m, &opts).unwrap().max_residual;
        prop_assert!(r(&sum) <= r(&mu) + r(&nu) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multiplier_is_minus_one_homogeneous(
        n in prop::collection::vec(1i64..4, 2),
        xi in prop::collection::vec(-3.0..3.0f64, 2),
        lambda in 0.1..10.0f64,
        r in 0usize..2,
    ) {
        prop_assume!(xi.iter().any(|v| v.abs() > 1e-3));
        let frame = AnisotropicFrame::new(n.iter().map(|&k| q(1, k)).collect()).unwrap();
        let spec = MultiplierSpec::new(DirectionSymbol::Coordinate { r }, frame.clone());
        let lhs = spec.symbol(&frame.dilate(lambda, &xi));
        let rhs = spec.symbol(&xi) / lambda;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300) + 1e-15, "{lhs} vs {rhs}");
    }

    #[test]
    fn mollification_keeps_mass(atoms in prop::collection::vec(
        (prop::collection::vec(-0.5..0.5f64, 2), prop::collection::vec(-2.0..2.0f64, 1)).prop_map(|(x, w)| Atom { x, w }), 1..4),
        eps in 0.25..0.5f64,
    ) {
        let mu = DiscreteMeasure::new(2, 1, atoms, None).unwrap();
        // 32+ nodes per half-width of the bump at the smallest ε.
        let grid = UniformGrid { origin: vec![-2.0, -2.0], h: 1.0 / 128.0, n: vec![512, 512] };
        let field = mollify(&mu, eps, &AnisotropicFrame::isotropic(2), &grid).unwrap();
        let expected: f64 = mu.atoms.iter().map(|a| a.w[0]).sum();
        let scale: f64 = mu.atoms.iter().map(|a| a.w[0].abs()).sum();
        prop_assert!((field.mass()[0] - expected).abs() <= 1e-6 * scale, "{} vs {expected}", field.mass()[0]);
    }
}
