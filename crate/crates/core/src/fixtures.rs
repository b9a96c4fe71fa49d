//! Seeded random graphs and node functions for tests, benchmarks and the
//! `verify` command.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::calculus::NodeFunction;
use crate::graph::{Topology, WeightedGraph};

/// How node measures are drawn for a random weighted graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureModel {
    /// `μ_i ~ U[lo, hi]`, independent of the weights.
    Uniform { lo: f64, hi: f64 },
    /// `μ_i = μ¹_i · (1 + s)` with `s ~ U[0, max_slack]`, or exactly `μ¹_i`
    /// with probability `exact_prob`.
    SubStochastic { max_slack: f64, exact_prob: f64 },
    /// `μ_i = μ¹_i`.
    Stochastic,
}

/// Connected topology: a random recursive spanning tree plus every other
/// pair independently with probability `p`.
pub fn random_topology<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Topology {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut present = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    let mut add = |i: usize, j: usize, edges: &mut Vec<(usize, usize)>| {
        if i != j && !present[i][j] {
            present[i][j] = true;
            present[j][i] = true;
            edges.push((i.min(j), i.max(j)));
        }
    };
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        add(order[k], parent, &mut edges);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                add(i, j, &mut edges);
            }
        }
    }
    Topology::new(n, &edges).expect("generated topology is valid")
}

/// Connected bipartite topology on `n ≥ 2` nodes.
pub fn random_bipartite_topology<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Topology {
    assert!(n >= 2);
    let mut side: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    side[0] = false;
    side[1] = true;
    let left: Vec<usize> = (0..n).filter(|&i| !side[i]).collect();
    let right: Vec<usize> = (0..n).filter(|&i| side[i]).collect();
    let mut edges = vec![(0, 1)];
    for (i, &on_right) in side.iter().enumerate().skip(2) {
        let others = if on_right { &left } else { &right };
        // Attach to an already-connected node on the other side.
        let connected: Vec<usize> = others.iter().copied().filter(|&j| j < i).collect();
        let j = connected[rng.random_range(0..connected.len())];
        edges.push((j.min(i), j.max(i)));
    }
    for &i in &left {
        for &j in &right {
            let e = (i.min(j), i.max(j));
            if rng.random::<f64>() < p && !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    Topology::new(n, &edges).expect("generated topology is valid")
}

/// Connected topology on `n ≥ 3` nodes that contains an odd cycle.
pub fn random_non_bipartite_topology<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Topology {
    assert!(n >= 3);
    loop {
        let t = random_topology(rng, n, p);
        let g = unit_graph(&t);
        if !g.is_bipartite() {
            return t;
        }
        // Close a triangle on some path a - b - c.
        let chord = (0..n).find_map(|b| {
            let nb = t.neighbors(b);
            nb.iter().enumerate().find_map(|(x, &a)| {
                nb[x + 1..]
                    .iter()
                    .find(|&&c| !t.neighbors(a).contains(&c))
                    .map(|&c| (a, c))
            })
        });
        if let Some(chord) = chord {
            let mut edges = t.edges();
            edges.push(chord);
            return Topology::new(n, &edges).expect("generated topology is valid");
        }
    }
}

fn unit_graph(t: &Topology) -> WeightedGraph {
    let edges: Vec<_> = t.edges().into_iter().map(|(i, j)| (i, j, 1.0)).collect();
    WeightedGraph::new(t.n(), &edges, vec![1.0; t.n()]).expect("unit graph is valid")
}

/// Weighted graph on `topology` with `ω ~ U[lo, hi]` and the given measure model.
pub fn weighted_graph<R: Rng + ?Sized>(
    rng: &mut R,
    topology: &Topology,
    weight_range: (f64, f64),
    measure: MeasureModel,
) -> WeightedGraph {
    let n = topology.n();
    let edges: Vec<_> = topology
        .edges()
        .into_iter()
        .map(|(i, j)| (i, j, rng.random_range(weight_range.0..=weight_range.1)))
        .collect();
    let mut degree = vec![0.0; n];
    for &(i, j, w) in &edges {
        degree[i] += w;
        degree[j] += w;
    }
    let mu: Vec<f64> = (0..n)
        .map(|i| match measure {
            MeasureModel::Uniform { lo, hi } => rng.random_range(lo..=hi),
            MeasureModel::Stochastic => degree[i],
            MeasureModel::SubStochastic { max_slack, exact_prob } => {
                if degree[i] == 0.0 {
                    1.0
                } else if rng.random::<f64>() < exact_prob {
                    degree[i]
                } else {
                    degree[i] * (1.0 + rng.random_range(0.0..=max_slack))
                }
            }
        })
        .collect();
    WeightedGraph::new(n, &edges, mu).expect("generated graph is valid")
}

/// Connected weighted graph with `n` nodes, extra-edge probability `p`,
/// `ω ~ U[0.1, 2]` and `μ ~ U[0.5, 3]`.
pub fn random_connected_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> WeightedGraph {
    let t = random_topology(rng, n, p);
    weighted_graph(rng, &t, (0.1, 2.0), MeasureModel::Uniform { lo: 0.5, hi: 3.0 })
}

/// Entries i.i.d. uniform on `[−1, 1]`.
pub fn random_features<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> NodeFunction {
    let values: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
    NodeFunction::from_rows(n, d, &values).expect("finite features")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_respect_their_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [2, 3, 7, 30] {
            let g = unit_graph(&random_topology(&mut rng, n, 0.1));
            assert!(g.is_connected());
            let b = unit_graph(&random_bipartite_topology(&mut rng, n, 0.3));
            assert!(b.is_connected() && b.is_bipartite());
            if n >= 3 {
                let nb = unit_graph(&random_non_bipartite_topology(&mut rng, n, 0.05));
                assert!(nb.is_connected() && !nb.is_bipartite());
            }
        }
        let t = random_topology(&mut rng, 20, 0.2);
        let s = weighted_graph(&mut rng, &t, (0.1, 2.0), MeasureModel::Stochastic);
        assert!(s.is_stochastic());
        let s = weighted_graph(
            &mut rng,
            &t,
            (0.1, 2.0),
            MeasureModel::SubStochastic {
                max_slack: 0.5,
                exact_prob: 0.3,
            },
        );
        assert!(s.is_sub_stochastic());
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = random_connected_graph(&mut ChaCha8Rng::seed_from_u64(5), 25, 0.1);
        let b = random_connected_graph(&mut ChaCha8Rng::seed_from_u64(5), 25, 0.1);
        assert_eq!(a, b);
    }
}
