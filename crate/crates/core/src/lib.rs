//! Calculus on weighted graphs `G = (V, E, ω, μ)`.
//!
//! The crate provides the μ-Laplacian and gradient operators, the family of
//! higher-order energies `E_m`, a dense spectral decomposition, heat and
//! random-walk dynamics with decay certificates, and a small GCN/GAT forward
//! simulator used to measure over-smoothing.
//!
//! ```
//! use graphenergy::{energy_m, NodeFunction, WeightedGraph};
//!
//! let g = WeightedGraph::new(2, &[(0, 1, 1.0)], vec![1.0, 1.0]).unwrap();
//! let f = NodeFunction::scalar(&[0.0, 1.0]).unwrap();
//! assert_eq!(energy_m(&g, &f, 1).unwrap(), 0.5);
//! ```

pub mod calculus;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod fixtures;
pub mod gnn;
pub mod graph;
pub mod io;
pub mod spectral;
pub mod verify;

pub use calculus::{dirichlet, gradient_inner, integrate, laplacian_apply, laplacian_power, mu_inner, NodeFunction};
pub use dynamics::{
    heat_evolve, heat_trajectory, random_walk_step, sym_propagate, walk_propagate, walk_trajectory, DecayCertificate,
    Trajectory,
};
pub use energy::{energy_m, energy_report, gamma_m, EnergyReport};
pub use error::{Error, Result};
pub use gnn::{forward, init_stack, Activation, Arch, LayerStack, OversmoothReport};
pub use graph::{graph_stats, GraphStats, Preset, Topology, WeightedGraph};
pub use spectral::{eigendecompose, SpectralDecomposition};
pub use verify::{run_verify, CheckRow, CheckStatus};
