use proptest::prelude::*;

use flexsim_core::graph::{complete_bipartite, BipartiteGraph, GraphKind, GraphSpec};
use flexsim_core::sampling::rng_from_seed;
use flexsim_core::simulator::{
    coupled_simulate, lyapunov_direct, lyapunov_series, simulate, CoupledConfig, ServiceDistribution, SimConfig,
    Simulation,
};

fn graph() -> impl Strategy<Value = BipartiteGraph> {
    let kind = prop_oneof![
        (2usize..40, 1usize..30).prop_map(|(n, m)| GraphKind::Complete { n, m }),
        (6usize..60, 2usize..40)
            .prop_flat_map(|(n, m)| (Just(n), Just(m), (m / 2).max(1)..=m))
            .prop_map(|(n, m, c)| GraphKind::FixedServerDegree { n, m, c }),
        (4usize..60, 1usize..40, 0.1f64..0.6).prop_map(|(n, m, p)| GraphKind::Inhomogeneous { n, m, p: vec![p; m] }),
        (4usize..60, 1usize..40, 0.2f64..0.6).prop_map(|(n, m, radius)| GraphKind::Geometric { n, m, radius }),
    ];
    (kind, 0u64..1000).prop_map(|(k, seed)| GraphSpec::new(k, seed).build().unwrap())
}

fn service() -> impl Strategy<Value = ServiceDistribution> {
    prop_oneof![
        Just(ServiceDistribution::Exponential),
        Just(ServiceDistribution::Deterministic),
        Just(ServiceDistribution::PARETO3),
    ]
}

fn config(d: usize, lambda: f64, seed: u64, service: ServiceDistribution) -> SimConfig {
    let mut cfg = SimConfig::new(d, lambda, 1e9, seed);
    cfg.service = service;
    cfg.allow_disconnected = true;
    cfg.verify_every = Some(1);
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn counts_and_choices_stay_consistent(
        g in graph(),
        d in 1usize..5,
        lambda in 0.3f64..0.99,
        seed in any::<u64>(),
        svc in service(),
    ) {
        let cfg = config(d, lambda, seed, svc);
        let mut sim = Simulation::new(&g, &cfg, rng_from_seed(seed)).unwrap();
        sim.enable_trace();
        let mut seen_arrivals = 0;
        for _ in 0..3000 {
            let before = sim.state().total_tasks();
            sim.step().unwrap();
            if sim.state().total_tasks() > before {
                seen_arrivals += 1;
                let trace = sim.last_arrival().unwrap();
                let min = trace.sampled.iter().map(|s| s.1).min().unwrap();
                let chosen_len = trace.sampled.iter().find(|s| s.0 == trace.chosen).unwrap().1;
                prop_assert_eq!(chosen_len, min);
                prop_assert_eq!(trace.sampled.len(), d.min(g.dispatcher_degree(trace.dispatcher)));
                let mut ids: Vec<usize> = trace.sampled.iter().map(|s| s.0).collect();
                ids.sort_unstable();
                ids.dedup();
                prop_assert_eq!(ids.len(), trace.sampled.len());
                prop_assert!(ids.iter().all(|&v| g.has_edge(v, trace.dispatcher)));
            }
            let counts = sim.state().counts();
            prop_assert_eq!(counts[0], g.n_servers() as u64);
            prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]));
        }
        prop_assert!(seen_arrivals > 0);
    }

    #[test]
    fn full_sampling_is_ordinary_jsq(n in 2usize..30, m in 1usize..10, seed in any::<u64>(), lambda in 0.5f64..0.99) {
        let g = complete_bipartite(n, m).unwrap();
        let mut sim = Simulation::new(&g, &config(n, lambda, seed, ServiceDistribution::Exponential), rng_from_seed(seed)).unwrap();
        sim.enable_trace();
        for _ in 0..2000 {
            let global_min = sim.state().lengths().iter().copied().min().unwrap();
            let before = sim.state().total_tasks();
            sim.step().unwrap();
            if sim.state().total_tasks() > before {
                let trace = sim.last_arrival().unwrap();
                prop_assert_eq!(trace.sampled.len(), n);
                let chosen = trace.sampled.iter().find(|s| s.0 == trace.chosen).unwrap().1;
                prop_assert_eq!(chosen, global_min);
            }
        }
    }

    #[test]
    fn trajectories_are_reproducible(g in graph(), seed in any::<u64>(), svc in service()) {
        let mut cfg = config(2, 0.8, seed, svc);
        cfg.horizon = 5.0;
        cfg.depth = 6;
        let a = simulate(&g, &cfg).unwrap();
        let b = simulate(&g, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.arrival_count - a.departure_count, a.final_tasks - a.initial_tasks);
        for q in &a.occupancy {
            prop_assert!(q.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn coupling_margin_never_negative(g in graph(), d in 1usize..4, lambda in 0.3f64..0.98, seed in any::<u64>()) {
        let mut cfg = CoupledConfig::new(d, lambda, 15.0, seed);
        cfg.allow_disconnected = true;
        cfg.verify_every = Some(1);
        cfg.depth = 5;
        cfg.sample_interval = 0.5;
        let out = coupled_simulate(&g, &cfg).unwrap();
        prop_assert!(out.min_margin >= 0);
        prop_assert!(out.delta_samples.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(out.margin_min_samples.iter().all(|&m| m >= 0));
        if g.is_complete() {
            prop_assert_eq!(out.delta, 0);
        }
    }

    #[test]
    fn lyapunov_forms_agree(q in prop::collection::vec(0u32..50, 1..12), k in 1usize..14) {
        let mut q: Vec<f64> = q.into_iter().map(f64::from).collect();
        q.sort_by(|a, b| b.total_cmp(a));
        let closed = lyapunov_series(&[q.clone()], k)[0];
        prop_assert!((closed - lyapunov_direct(&q, k)).abs() < 1e-9);
    }
}

#[test]
fn general_service_keeps_every_busy_server_scheduled() {
    let g = GraphSpec::new(GraphKind::FixedServerDegree { n: 50, m: 50, c: 6 }, 3).build().unwrap();
    for svc in [ServiceDistribution::Deterministic, ServiceDistribution::PARETO3] {
        let mut cfg = config(2, 0.95, 4, svc);
        cfg.horizon = 100.0;
        let rec = simulate(&g, &cfg).unwrap();
        assert!(rec.event_count > 5000);
    }
}

#[test]
fn initial_state_drains_without_arrivals_elsewhere() {
    let g = complete_bipartite(5, 5).unwrap();
    let mut cfg = config(2, 0.01, 1, ServiceDistribution::Deterministic);
    cfg.horizon = 2.5;
    cfg.sample_interval = 0.5;
    cfg.depth = 3;
    cfg.initial = Some(vec![3, 3, 3, 3, 3]);
    let rec = simulate(&g, &cfg).unwrap();
    // Unit service times: queues of three drain at t = 1, 2, 3.
    let q1_at = |t: f64| rec.occupancy[(t / 0.5) as usize][0];
    let q3_at = |t: f64| rec.occupancy[(t / 0.5) as usize][2];
    assert_eq!(q3_at(0.5), 1.0);
    assert!(q3_at(1.5) <= 0.2);
    assert!(q1_at(2.5) >= 0.8);
}
