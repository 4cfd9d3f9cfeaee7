use manlp::engine::{default_starts, least_fixpoint, stable_search, sup_norm, tp, FixpointConfig};
use manlp::generate::{self, GeneratorConfig};
use manlp::lattice::{self, ei_product, ei_residuum, Adjoint, Aggregator, EiParams, Interval, LatticeKind, TruthValue};
use manlp::oracle::{brute_force_residuum, brute_force_stable, GridSpec};
use manlp::semantics::{interp_leq, is_model, Interpretation};
use manlp::syntax::{parse_program, render_program};
use manlp::uniqueness::{certify, rule_lambdas, solve_unique};
use manlp::{is_stable, Program};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
}

fn interval() -> impl Strategy<Value = Interval> {
    (unit(), unit()).prop_map(|(a, b)| Interval::new(a.min(b), a.max(b)).unwrap())
}

fn ei_params() -> impl Strategy<Value = EiParams> {
    (1u32..=4, 1u32..=4)
        .prop_flat_map(|(a, c)| (Just(a), 1..=a, Just(c), 1..=c))
        .prop_map(|(a, b, c, d)| EiParams::new(a, b, c, d).unwrap())
}

fn value_of(kind: LatticeKind) -> BoxedStrategy<TruthValue> {
    match kind {
        LatticeKind::Unit => unit().prop_map(TruthValue::Unit).boxed(),
        LatticeKind::Interval => interval().prop_map(TruthValue::Interval).boxed(),
    }
}

fn adjoint() -> impl Strategy<Value = Adjoint> {
    prop_oneof![
        Just(Adjoint::Godel),
        Just(Adjoint::Product),
        Just(Adjoint::Lukasiewicz),
        ei_params().prop_map(Adjoint::Ei),
    ]
}

fn leq(a: &TruthValue, b: &TruthValue) -> bool {
    lattice::leq(a, b).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn conjunctors_are_monotone_and_implications_antitone(
        (adj, x, y, z) in adjoint().prop_flat_map(|a| {
            let k = a.kind();
            (Just(a), value_of(k), value_of(k), value_of(k))
        })
    ) {
        let (lo, hi) = if leq(&x, &y) { (x, y) } else if leq(&y, &x) { (y, x) } else { return Ok(()) };
        prop_assert!(leq(&adj.conj(lo, z).unwrap(), &adj.conj(hi, z).unwrap()));
        prop_assert!(leq(&adj.conj(z, lo).unwrap(), &adj.conj(z, hi).unwrap()));
        prop_assert!(leq(&adj.imp(lo, z).unwrap(), &adj.imp(hi, z).unwrap()));
        prop_assert!(leq(&adj.imp(z, hi).unwrap(), &adj.imp(z, lo).unwrap()));
    }

    #[test]
    fn negation_is_an_order_reversing_involution(a in interval(), b in interval()) {
        let (a, b) = (TruthValue::Interval(a), TruthValue::Interval(b));
        let twice = lattice::negate(lattice::negate(a));
        prop_assert!(twice.distance(&a).unwrap() < 1e-15);
        if leq(&a, &b) {
            prop_assert!(leq(&lattice::negate(b), &lattice::negate(a)));
        }
    }

    #[test]
    fn sup_is_the_least_upper_bound(xs in prop::collection::vec(interval(), 0..6)) {
        let vals: Vec<TruthValue> = xs.into_iter().map(TruthValue::Interval).collect();
        let s = lattice::sup(LatticeKind::Interval, vals.iter()).unwrap();
        prop_assert!(vals.iter().all(|v| leq(v, &s)));
        let (lo, hi) = s.endpoints();
        prop_assert!(vals.iter().any(|v| v.endpoints().0 == lo) || lo == 0.0);
        prop_assert!(vals.iter().any(|v| v.endpoints().1 == hi) || hi == 0.0);
    }

    #[test]
    fn aggregators_lie_between_min_and_max(xs in prop::collection::vec(unit(), 1..6)) {
        let vals: Vec<TruthValue> = xs.iter().copied().map(TruthValue::Unit).collect();
        let lo = Aggregator::Min.apply(&vals).unwrap();
        let hi = Aggregator::Max.apply(&vals).unwrap();
        let mean = Aggregator::Mean.apply(&vals).unwrap();
        prop_assert!(leq(&lo, &mean) && leq(&mean, &hi));
    }

    #[test]
    fn ei_residuum_is_the_greatest_solution(p in ei_params(), z in interval(), y in interval()) {
        let r = ei_residuum(p, z, y);
        let back = ei_product(p, r, y);
        prop_assert!(back.lo() <= z.lo() + 1e-12 && back.hi() <= z.hi() + 1e-12);
        let g = GridSpec::new(200).unwrap();
        let grid = brute_force_residuum(p, z, y, &g).unwrap();
        prop_assert!(grid.lo() <= r.lo() + 1e-12 && grid.hi() <= r.hi() + 1e-12);
        prop_assert!(r.lo() - grid.lo() <= g.step() + 1e-12 && r.hi() - grid.hi() <= g.step() + 1e-12);
    }

    #[test]
    fn sup_norm_is_a_metric(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = generate::random_program(&GeneratorConfig::new(LatticeKind::Interval), &mut rng);
        let [a, b, c] = [0; 3].map(|_| generate::random_interpretation(&p, &mut rng));
        let d = |x: &Interpretation, y: &Interpretation| sup_norm(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-15);
    }

    #[test]
    fn render_then_parse_is_identity(seed in any::<u64>(), interval_kind in any::<bool>()) {
        let kind = if interval_kind { LatticeKind::Interval } else { LatticeKind::Unit };
        let p = generate::random_program(&GeneratorConfig::new(kind), &mut rng(seed));
        prop_assert_eq!(parse_program(&render_program(&p), kind).unwrap(), p);
    }

    #[test]
    fn interpretations_round_trip_through_json(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = generate::random_program(&GeneratorConfig::new(LatticeKind::Interval), &mut rng);
        let i = generate::random_interpretation(&p, &mut rng);
        let text = serde_json::to_string(&i.to_json()).unwrap();
        prop_assert_eq!(Interpretation::from_json(&p, &text).unwrap(), i);
    }

    #[test]
    fn models_are_exactly_postfixpoints(seed in any::<u64>(), interval_kind in any::<bool>()) {
        let kind = if interval_kind { LatticeKind::Interval } else { LatticeKind::Unit };
        let mut rng = rng(seed);
        let p = generate::random_program(&GeneratorConfig::new(kind), &mut rng);
        let m = generate::random_interpretation(&p, &mut rng);
        prop_assert_eq!(is_model(&p, &m).unwrap(), interp_leq(&tp(&p, &m).unwrap(), &m).unwrap());
    }

    #[test]
    fn least_fixpoint_is_a_model_below_every_model(seed in any::<u64>(), interval_kind in any::<bool>()) {
        let kind = if interval_kind { LatticeKind::Interval } else { LatticeKind::Unit };
        let mut rng = rng(seed);
        let p = generate::random_program(&GeneratorConfig::new(kind).positive(), &mut rng);
        let trace = least_fixpoint(&p, &FixpointConfig::default()).unwrap();
        prop_assert!(trace.converged);
        let lfp = trace.last();
        prop_assert!(manlp::semantics::is_model_within(&p, lfp, 1e-8).unwrap());
        // Kleene iterates stay below any postfixpoint, so the limit does too.
        for m in [Interpretation::top(&p), generate::random_interpretation(&p, &mut rng)] {
            if is_model(&p, &m).unwrap() {
                prop_assert!(interp_leq(lfp, &m).unwrap(), "{} not below {}", lfp, m);
            }
        }
    }

    #[test]
    fn stable_models_are_stable(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = generate::random_program(&GeneratorConfig::new(LatticeKind::Unit), &mut rng);
        let cfg = FixpointConfig { tolerance: 1e-9, max_iterations: 500 };
        let out = stable_search(&p, &cfg, &default_starts(&p, seed)).unwrap();
        prop_assert_eq!(out.starts.len(), 10);
        for (m, _) in &out.models {
            prop_assert!(is_stable(&p, m, &cfg, 1e-7).unwrap().stable);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lower_bound_never_exceeds_upper_bound_for_matching_body_exponents(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = generate::random_eligible_program(3, 4, &mut rng);
        let bounds = manlp::uniqueness::head_weight_bounds(&p).unwrap();
        for r in p.rules() {
            let (l1, l2) = rule_lambdas(r, &p, &bounds).unwrap();
            prop_assert!(l1 >= 0.0 && l2 >= 0.0);
            if let Adjoint::Ei(e) = r.implication() {
                if e.gamma() == e.delta() {
                    prop_assert!(l1 <= l2 + 1e-12, "{r}: {l1} > {l2}");
                }
            }
        }
    }

    #[test]
    fn certified_programs_have_one_reachable_stable_model(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = generate::random_certified_program(3, 4, &mut rng);
        let cfg = FixpointConfig::default();
        let sol = solve_unique(&p, &cfg).unwrap();
        prop_assert!(sol.check.stable);
        prop_assert!(sup_norm(&tp(&p, &sol.model).unwrap(), &sol.model).unwrap() <= 1e-9);

        let starts: Vec<Interpretation> = default_starts(&p, seed).into_iter().take(5).collect();
        let out = stable_search(&p, &cfg, &starts).unwrap();
        prop_assert_eq!(out.not_converged(), 0);
        prop_assert_eq!(out.models.len(), 1);
        prop_assert!(sup_norm(&out.models[0].0, &sol.model).unwrap() <= 1e-6);

        let report = certify(&p).unwrap();
        let s = manlp::uniqueness::empirical_contraction_check(&p, 200, seed).unwrap();
        prop_assert!(s.max_ratio <= report.global_lipschitz + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Every model found analytically is seen by the grid oracle.
    #[test]
    fn oracle_covers_search_results(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cfg = GeneratorConfig { max_symbols: 3, max_rules: 5, ..GeneratorConfig::new(LatticeKind::Unit) };
        let p: Program = generate::random_program(&cfg, &mut rng);
        let fc = FixpointConfig { tolerance: 1e-10, max_iterations: 500 };
        let out = stable_search(&p, &fc, &default_starts(&p, seed)).unwrap();
        let g = GridSpec::new(10).unwrap();
        let rep = brute_force_stable(&p, &g, &fc).unwrap();
        for (m, _) in &out.models {
            prop_assert!(rep.covers(m, 2.0 * g.step() + 1e-9), "{m} missing for\n{}", render_program(&p));
        }
    }
}
