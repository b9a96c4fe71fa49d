use graphenergy::calculus::{
    dirichlet, gradient_inner, gradient_p_norm_at, integrate, laplacian_apply, mu_inner, NodeFunction,
};
use graphenergy::dynamics::{heat_evolve, heat_evolve_euler, random_walk_step, sym_propagate};
use graphenergy::energy::energy_m;
use graphenergy::fixtures::{
    random_bipartite_topology, random_connected_graph, random_features, random_non_bipartite_topology, random_topology,
    weighted_graph, MeasureModel,
};
use graphenergy::spectral::eigendecompose;
use graphenergy::{Preset, Topology, WeightedGraph};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

fn setup(seed: u64, n: usize, d: usize) -> (WeightedGraph, NodeFunction, NodeFunction) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_connected_graph(&mut rng, n, 0.2);
    let f = random_features(&mut rng, n, d);
    let h = random_features(&mut rng, n, d);
    (g, f, h)
}

fn sub_stochastic(seed: u64, n: usize, d: usize) -> (WeightedGraph, NodeFunction) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_topology(&mut rng, n, 0.2);
    let g = weighted_graph(
        &mut rng,
        &t,
        (0.1, 2.0),
        MeasureModel::SubStochastic {
            max_slack: 1.0,
            exact_prob: 0.3,
        },
    );
    let f = random_features(&mut rng, n, d);
    (g, f)
}

/// `Ã_sym = D̃^{-1/2} (A + I) D̃^{-1/2}` assembled entry by entry.
fn dense_sym_adjacency(t: &Topology) -> DMatrix<f64> {
    let n = t.n();
    let deg: Vec<f64> = (0..n).map(|i| t.degree(i) as f64 + 1.0).collect();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 1.0 / deg[i];
        for &j in t.neighbors(i) {
            a[(i, j)] = 1.0 / (deg[i] * deg[j]).sqrt();
        }
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integration_by_parts_and_self_adjointness(seed in any::<u64>(), n in 2usize..30, d in 1usize..4) {
        let (g, f, h) = setup(seed, n, d);
        let lap_f = laplacian_apply(&g, &f).unwrap();
        let lap_h = laplacian_apply(&g, &h).unwrap();
        let lhs = mu_inner(&g, &lap_f, &h).unwrap();
        prop_assert!(rel(lhs, -gradient_inner(&g, &f, &h).unwrap()) < 1e-10);
        prop_assert!(rel(lhs, mu_inner(&g, &f, &lap_h).unwrap()) < 1e-10);
    }

    #[test]
    fn laplacian_is_linear_and_negative(seed in any::<u64>(), n in 2usize..30, d in 1usize..4, a in -3.0f64..3.0) {
        let (g, f, h) = setup(seed, n, d);
        let combo = &(&f * a) + &h;
        let lhs = laplacian_apply(&g, &combo).unwrap();
        let rhs = &(&laplacian_apply(&g, &f).unwrap() * a) + &laplacian_apply(&g, &h).unwrap();
        prop_assert!((lhs.as_matrix() - rhs.as_matrix()).abs().max() < 1e-10 * (1.0 + rhs.max_abs()));
        prop_assert!(mu_inner(&g, &laplacian_apply(&g, &f).unwrap(), &f).unwrap() <= 1e-12);
        prop_assert!(dirichlet(&g, &f).unwrap() >= 0.0);
    }

    #[test]
    fn dirichlet_is_sum_of_pointwise_gradients(seed in any::<u64>(), n in 2usize..30, d in 1usize..4) {
        let (g, f, _) = setup(seed, n, d);
        let pointwise: f64 = (0..n)
            .map(|i| g.mu()[i] * gradient_p_norm_at(&g, &f, i, 2.0).unwrap().powi(2))
            .sum();
        prop_assert!(rel(pointwise, dirichlet(&g, &f).unwrap()) < 1e-10);
    }

    #[test]
    fn classical_metrics_are_special_cases(seed in any::<u64>(), n in 2usize..30, d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_topology(&mut rng, n, 0.2);
        let x = random_features(&mut rng, n, d);
        let mean: Vec<f64> = (0..d).map(|c| (0..n).map(|i| x.get(i, c)).sum::<f64>() / n as f64).collect();
        let e_w = (0..n)
            .map(|i| (0..d).map(|c| (x.get(i, c) - mean[c]).powi(2)).sum::<f64>())
            .sum::<f64>() / n as f64;
        let e_d = (0..n)
            .map(|i| {
                t.neighbors(i)
                    .iter()
                    .map(|&j| (0..d).map(|c| (x.get(i, c) - x.get(j, c)).powi(2)).sum::<f64>())
                    .sum::<f64>()
            })
            .sum::<f64>() / n as f64;

        let unit = WeightedGraph::from_preset(&t, Preset::Adj).unwrap();
        prop_assert!(rel(energy_m(&unit, &x, 0).unwrap(), e_w) < 1e-12);
        let edges: Vec<_> = t.edges().into_iter().map(|(i, j)| (i, j, 2.0)).collect();
        let doubled = WeightedGraph::new(n, &edges, vec![1.0; n]).unwrap();
        prop_assert!(rel(energy_m(&doubled, &x, 1).unwrap(), e_d) < 1e-12);
    }

    #[test]
    fn energies_scale_quadratically(seed in any::<u64>(), n in 2usize..30, d in 1usize..4, c in -4.0f64..4.0) {
        let (g, f, _) = setup(seed, n, d);
        let scaled = &f * c;
        for m in 0..=5 {
            let e = energy_m(&g, &f, m).unwrap();
            prop_assert!(rel(energy_m(&g, &scaled, m).unwrap(), c * c * e) < 1e-10);
        }
    }

    #[test]
    fn heat_semigroup_mass_and_monotonicity(
        seed in any::<u64>(), n in 2usize..30, d in 1usize..4, s in 0.0f64..2.0, t in 0.0f64..2.0,
    ) {
        let (g, f, _) = setup(seed, n, d);
        let sd = eigendecompose(&g).unwrap();
        let fs = heat_evolve(&sd, &f, s).unwrap();
        let two_step = heat_evolve(&sd, &fs, t).unwrap();
        let one_step = heat_evolve(&sd, &f, s + t).unwrap();
        prop_assert!((two_step.as_matrix() - one_step.as_matrix()).abs().max() < 1e-10 * (1.0 + f.max_abs()));

        let m0 = integrate(&g, &f).unwrap();
        let mt = integrate(&g, &one_step).unwrap();
        let scale = 1.0 + g.total_measure() * f.max_abs();
        for (a, b) in m0.iter().zip(&mt) {
            prop_assert!((a - b).abs() < 1e-10 * scale);
        }

        let e0 = dirichlet(&g, &f).unwrap();
        let es = dirichlet(&g, &fs).unwrap();
        let est = dirichlet(&g, &one_step).unwrap();
        prop_assert!(es <= e0 * (1.0 + 1e-12) + 1e-15 && est <= es * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn unit_euler_step_is_a_walk_step(seed in any::<u64>(), n in 2usize..30, d in 1usize..4) {
        let (g, f) = sub_stochastic(seed, n, d);
        let sd = eigendecompose(&g).unwrap();
        let euler = heat_evolve_euler(&g, &sd, &f, 1.0, 1.0).unwrap();
        let walk = random_walk_step(&g, &f).unwrap();
        prop_assert!((euler.as_matrix() - walk.as_matrix()).abs().max() < 1e-14 * (1.0 + f.max_abs()));
    }

    #[test]
    fn sym_propagation_matches_dense_matrix(seed in any::<u64>(), n in 2usize..30, d in 1usize..4, k in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_topology(&mut rng, n, 0.2);
        let f = random_features(&mut rng, n, d);
        let g = WeightedGraph::from_preset(&t, Preset::RwSelfloop).unwrap();
        let sd = eigendecompose(&g).unwrap();
        let out = sym_propagate(&g, &sd, &f, k).unwrap().output;
        let dense = dense_sym_adjacency(&t).pow(k as u32) * f.as_matrix();
        prop_assert!((out.as_matrix() - dense).abs().max() < 1e-12 * (1.0 + f.max_abs()));
    }

    #[test]
    fn largest_eigenvalue_detects_bipartiteness(seed in any::<u64>(), n in 3usize..30, bipartite in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = if bipartite {
            let t = random_bipartite_topology(&mut rng, n, 0.3);
            weighted_graph(&mut rng, &t, (0.1, 2.0), MeasureModel::Stochastic)
        } else {
            let t = random_non_bipartite_topology(&mut rng, n, 0.3);
            weighted_graph(&mut rng, &t, (0.1, 2.0), MeasureModel::SubStochastic { max_slack: 0.5, exact_prob: 0.5 })
        };
        let lambda_n = eigendecompose(&g).unwrap().lambda_n();
        prop_assert_eq!((lambda_n - 2.0).abs() <= 1e-8, bipartite);
    }
}

#[test]
fn p2_self_loop_propagation_two_ways() {
    let t = Topology::new(2, &[(0, 1)]).unwrap();
    let g = WeightedGraph::from_preset(&t, Preset::RwSelfloop).unwrap();
    assert_eq!(g.mu(), &[2.0, 2.0]);
    let sd = eigendecompose(&g).unwrap();
    let f = NodeFunction::scalar(&[0.3, -1.7]).unwrap();
    let out = sym_propagate(&g, &sd, &f, 1).unwrap().output;
    let direct = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]) * f.as_matrix();
    assert!((out.as_matrix() - direct).abs().max() < 1e-12);
}
