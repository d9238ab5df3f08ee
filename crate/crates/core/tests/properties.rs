use proptest::prelude::*;

use monoheat::graphs::{builtin_graphs, graph_property_suite, ScalarGraph};
use monoheat::mesh::{GammaOneSide, Mesh};
use monoheat::problem::{ProblemSpec, SolverConfig, SolverKind, SpaceTimeField};
use monoheat::stepper::solve_transient;
use monoheat::verification::{apriori_bounds, dependence_check, energy_monitors, BoundConstants};

fn graph_strategy() -> impl Strategy<Value = ScalarGraph> {
    prop_oneof![
        (0.1..5.0f64).prop_map(|a| ScalarGraph::linear(a).unwrap()),
        (0.1..3.0f64, 0.0..2.0f64).prop_map(|(a, b)| ScalarGraph::saturating(a, b).unwrap()),
        (0.1..2.0f64, 0.0..2.0f64).prop_map(|(h, s)| ScalarGraph::physical(h, s, ScalarGraph::identity()).unwrap()),
        (1.0..4.0f64).prop_map(|p| ScalarGraph::power(p).unwrap()),
        Just(ScalarGraph::sign()),
    ]
}

fn side_strategy() -> impl Strategy<Value = GammaOneSide> {
    prop_oneof![Just(GammaOneSide::Left), Just(GammaOneSide::Right), Just(GammaOneSide::Both)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn graph_calculus_holds(graph in graph_strategy(), x in -3.0..3.0f64, lambda in 0.05..2.0f64) {
        let report = graph_property_suite(&graph, &[lambda, lambda / 3.0], &[x]);
        prop_assert!(report.all_passed(), "{graph}: {:?}", report.failures().next());
    }

    #[test]
    fn resolvent_is_nonexpansive(graph in graph_strategy(), x in -4.0..4.0f64, y in -4.0..4.0f64, lambda in 0.01..3.0f64) {
        let jx = graph.resolvent(lambda, x).unwrap();
        let jy = graph.resolvent(lambda, y).unwrap();
        prop_assert!((jx - jy).abs() <= (x - y).abs() * (1.0 + 1e-10) + 1e-12);
        let ax = graph.yosida(lambda, x).unwrap();
        let ay = graph.yosida(lambda, y).unwrap();
        prop_assert!((ax - ay) * (x - y) >= -1e-10);
        prop_assert!((ax - ay).abs() <= (x - y).abs() / lambda * (1.0 + 1e-9) + 1e-10);
    }

    #[test]
    fn assembled_operators(n in 1usize..40, length in 0.2..5.0f64, nx in 1usize..7, ny in 1usize..7) {
        let m = Mesh::interval(length, n, GammaOneSide::Both).unwrap().assemble().unwrap();
        prop_assert!((m.volume() - length).abs() < 1e-12 * length);
        prop_assert!((m.boundary_measure() - 2.0).abs() < 1e-14);
        let r = Mesh::rectangle(1.5, 0.5, nx, ny, true).unwrap().assemble().unwrap();
        prop_assert!((r.volume() - 0.75).abs() < 1e-12);
        prop_assert!((r.boundary_measure() - 1.0).abs() < 1e-12);
        let ones = vec![1.0; r.node_count()];
        prop_assert!(r.stiffness.mul_vec(&ones).iter().all(|x| x.abs() < 1e-12));
        prop_assert!(r.stiffness.is_symmetric(1e-14));
    }

    #[test]
    fn trace_inequality(values in prop::collection::vec(-2.0..2.0f64, 17), side in side_strategy()) {
        let ops = Mesh::interval(1.0, 16, side).unwrap().assemble().unwrap();
        let c = ops.trace_constant().unwrap();
        let n = ops.norms(&values).unwrap();
        prop_assert!(n.boundary_l2 <= c * (n.l2 * n.l2 + n.h1 * n.h1).sqrt() * (1.0 + 1e-10) + 1e-14);
    }
}

fn data(seed: u64, n: usize) -> Vec<f64> {
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linear_phi_star_closed_form(alpha in 0.5..3.0f64, c0 in 0.5..2.0f64, seed in 0u64..1000) {
        let mesh = Mesh::interval(1.0, 12, GammaOneSide::Right).unwrap();
        let u0 = data(seed, 13);
        let spec = ProblemSpec::new(
            mesh, c0, ScalarGraph::linear(alpha).unwrap(), ScalarGraph::linear(1.0).unwrap(),
            SpaceTimeField::Nodal(data(seed + 1, 13)), SpaceTimeField::Constant(0.3), u0, 0.5,
        ).unwrap();
        let cfg = SolverConfig { tau: 0.1, ..SolverConfig::default() };
        let sol = solve_transient(&spec, &cfg).unwrap();
        let rep = energy_monitors(&sol, &spec).unwrap();
        for (l, v) in rep.levels.iter().zip(&sol.v) {
            let closed: f64 = v.iter().zip(&spec.ops.mass).map(|(v, m)| m * v * v / (2.0 * alpha * c0)).sum();
            prop_assert!((l.phi_star - closed).abs() < 1e-10 * closed.max(1.0));
        }
    }

    #[test]
    fn conservation_without_active_boundary(seed in 0u64..1000, a in 0.5..2.0f64, b in 0.0..1.0f64) {
        let mesh = Mesh::interval(1.0, 20, GammaOneSide::None).unwrap();
        let spec = ProblemSpec::new(
            mesh, 1.0, ScalarGraph::saturating(a, b).unwrap(), ScalarGraph::sign(),
            SpaceTimeField::zero(), SpaceTimeField::Constant(1.0), data(seed, 21), 0.5,
        ).unwrap();
        let cfg = SolverConfig { tau: 0.05, mass_regularization: false, newton_tol: 1e-14, ..SolverConfig::default() };
        let sol = solve_transient(&spec, &cfg).unwrap();
        let total = |v: &[f64]| v.iter().zip(&spec.ops.mass).map(|(x, m)| x * m).sum::<f64>();
        let m0 = total(&sol.v[0]);
        for v in &sol.v {
            prop_assert!((total(v) - m0).abs() < 1e-12);
        }
    }

    #[test]
    fn dissipation_without_data(seed in 0u64..1000, beta in graph_strategy()) {
        let mesh = Mesh::interval(1.0, 16, GammaOneSide::Both).unwrap();
        let spec = ProblemSpec::new(
            mesh, 1.0, ScalarGraph::saturating(1.0, 0.5).unwrap(), beta,
            SpaceTimeField::zero(), SpaceTimeField::zero(), data(seed, 17), 0.5,
        ).unwrap();
        let cfg = SolverConfig { tau: 0.05, lambda_schedule: vec![0.01], ..SolverConfig::default() };
        let sol = solve_transient(&spec, &cfg).unwrap();
        let rep = energy_monitors(&sol, &spec).unwrap();
        for p in rep.levels.windows(2) {
            prop_assert!(p[1].phi_star <= p[0].phi_star + 1e-12 * p[0].phi_star.abs().max(1.0));
        }
    }

    #[test]
    fn bounds_hold_and_ignore_solver_choice(seed in 0u64..1000, beta in graph_strategy(), alpha in 1.0..3.0f64) {
        let mesh = Mesh::interval(1.0, 16, GammaOneSide::Right).unwrap();
        let spec = ProblemSpec::new(
            mesh, 1.0, ScalarGraph::linear(alpha).unwrap(), beta,
            SpaceTimeField::Nodal(data(seed, 17)), SpaceTimeField::Constant(0.5), data(seed + 7, 17), 1.0,
        ).unwrap();
        let mut constants = Vec::new();
        for kind in [SolverKind::Newton, SolverKind::Picard] {
            let cfg = SolverConfig { tau: 0.05, lambda_schedule: vec![0.05], solver_kind: kind, max_iters: 20000, ..SolverConfig::default() };
            let sol = solve_transient(&spec, &cfg).unwrap();
            let rep = energy_monitors(&sol, &spec).unwrap();
            let b = apriori_bounds(&rep, &spec, &sol, 0.05).unwrap();
            prop_assert!(b.all_passed(), "{:?}", b.violation());
            constants.push(BoundConstants::compute(&spec, &sol, 0.05).unwrap());
        }
        prop_assert_eq!(&constants[0], &constants[1]);
    }

    #[test]
    fn dependence_margin_nonnegative(seed in 0u64..1000, alpha in 0.3..4.0f64, scale in 0.01..1.0f64) {
        let mesh = Mesh::interval(1.0, 12, GammaOneSide::Both).unwrap();
        let make = |s: u64, shift: f64| ProblemSpec::new(
            mesh.clone(), 1.0, ScalarGraph::linear(alpha).unwrap(),
            ScalarGraph::physical(1.0, 0.5, ScalarGraph::identity()).unwrap(),
            SpaceTimeField::Nodal(data(s, 13).iter().map(|x| x * scale).collect()),
            SpaceTimeField::Constant(shift), data(s + 3, 13), 1.0,
        ).unwrap();
        let a = make(seed, 0.0);
        let b = make(seed + 11, scale);
        let r = dependence_check(&a, &b, &SolverConfig { tau: 0.05, ..SolverConfig::default() }).unwrap();
        prop_assert!(r.margin >= 0.0, "{r:?}");
    }
}

#[test]
fn builtin_suite_on_acceptance_grid() {
    let samples: Vec<f64> = (0..25).map(|i| -2.88 + 0.24 * i as f64).collect();
    for g in builtin_graphs() {
        let r = graph_property_suite(&g, &[1.0, 0.5, 0.25, 0.125], &samples);
        assert!(r.all_passed(), "{g}");
    }
}
