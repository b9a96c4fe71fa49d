//! Heat diffusion and random-walk propagation, with decay certificates for
//! the Dirichlet integral.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::calculus::{check_nodes, dirichlet, laplacian_apply, NodeFunction};
use crate::energy::energy_m;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::spectral::{check_pair, spectral_filter, SpectralDecomposition};

/// Relative slack for `observed ≤ rate`.
pub const DECAY_TOL: f64 = 1e-9;

/// Orders recorded by default in trajectories.
pub const DEFAULT_ORDERS: [u32; 3] = [0, 1, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    HeatExact,
    HeatEuler,
    Walk,
    SymWalk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Time `t` or step count `k`.
    pub abscissa: f64,
    pub energies: BTreeMap<u32, f64>,
    pub certificate: Option<DecayCertificate>,
    pub snapshot: Option<NodeFunction>,
}

/// Recorded evolution of a node function.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub orders: Vec<u32>,
    pub samples: Vec<Sample>,
}

/// Theoretical factor versus the measured ratio of Dirichlet integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub rate: f64,
    pub observed: f64,
    pub satisfied: bool,
    pub slack: f64,
}

impl DecayCertificate {
    pub fn new(rate: f64, observed: f64) -> Self {
        Self {
            rate,
            observed,
            satisfied: observed <= rate + DECAY_TOL,
            slack: rate - observed,
        }
    }
}

/// Exact heat flow `f_t = Σ_k e^{−α_k t} C_k v_k`.
pub fn heat_evolve(sd: &SpectralDecomposition, f0: &NodeFunction, t: f64) -> Result<NodeFunction> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        if f0.n() != sd.n() {
            return Err(Error::DimensionMismatch {
                expected: sd.n(),
                got: f0.n(),
            });
        }
        return Ok(f0.clone());
    }
    spectral_filter(sd, f0, |a| (-a * t).exp())
}

/// Largest stable explicit Euler step, `2 / λ_N`.
pub fn euler_step_limit(sd: &SpectralDecomposition) -> f64 {
    let lambda_n = sd.lambda_n();
    if lambda_n > sd.zero_tol() {
        2.0 / lambda_n
    } else {
        f64::INFINITY
    }
}

/// Explicit Euler `f ← f + dt Δ_μ f` for `t / dt` steps.
pub fn heat_evolve_euler(
    g: &WeightedGraph,
    sd: &SpectralDecomposition,
    f0: &NodeFunction,
    t: f64,
    dt: f64,
) -> Result<NodeFunction> {
    check_pair(g, sd, f0)?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let limit = euler_step_limit(sd);
    if dt.is_nan() || dt <= 0.0 || dt > limit * (1.0 + 1e-12) {
        return Err(Error::UnstableStep { dt, limit });
    }
    let steps = (t / dt).round();
    if (steps * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(Error::InvalidTimeGrid { t, dt });
    }
    let mut f = f0.clone();
    for _ in 0..steps as u64 {
        let lap = laplacian_apply(g, &f)?;
        f = &f + &(&lap * dt);
    }
    Ok(f)
}

/// Certificates for `∫‖∇f_t‖² ≤ e^{−2λ_1 t} ∫‖∇f_0‖²` at each requested time.
pub fn heat_decay_certificate(
    g: &WeightedGraph,
    sd: &SpectralDecomposition,
    f0: &NodeFunction,
    times: &[f64],
) -> Result<Vec<DecayCertificate>> {
    check_pair(g, sd, f0)?;
    let gap = sd.spectral_gap()?;
    let initial = dirichlet(g, f0)?;
    if initial <= 0.0 {
        return Err(Error::ConstantInitialCondition);
    }
    times
        .iter()
        .map(|&t| {
            let ft = heat_evolve(sd, f0, t)?;
            Ok(DecayCertificate::new(
                (-2.0 * gap * t).exp(),
                dirichlet(g, &ft)? / initial,
            ))
        })
        .collect()
}

fn require_sub_stochastic(g: &WeightedGraph) -> Result<()> {
    match g.sub_stochastic_violation() {
        Some(i) => Err(Error::NotSubStochastic(i)),
        None => Ok(()),
    }
}

/// One step of `P_μ = Δ_μ + I`.
pub fn random_walk_step(g: &WeightedGraph, f: &NodeFunction) -> Result<NodeFunction> {
    require_sub_stochastic(g)?;
    let lap = laplacian_apply(g, f)?;
    Ok(f + &lap)
}

/// `P_μ^k f`.
pub fn walk_propagate(g: &WeightedGraph, f: &NodeFunction, k: usize) -> Result<NodeFunction> {
    require_sub_stochastic(g)?;
    check_nodes(g, f)?;
    let mut cur = f.clone();
    for _ in 0..k {
        cur = &cur + &laplacian_apply(g, &cur)?;
    }
    Ok(cur)
}

/// One-step contraction factor `1 − (2 − λ_N) λ_1`.
pub fn walk_rate(sd: &SpectralDecomposition) -> Result<f64> {
    let gap = sd.spectral_gap()?;
    Ok(1.0 - (2.0 - sd.lambda_n()) * gap)
}

/// Per-step certificates for a random walk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkCertificates {
    pub one_step_rate: f64,
    /// False when `λ_N = 2` (bipartite): the bound then gives no decay.
    pub strict_decay: bool,
    /// Entry `k − 1` certifies step `k`.
    pub steps: Vec<DecayCertificate>,
}

impl WalkCertificates {
    pub fn all_satisfied(&self) -> bool {
        self.steps.iter().all(|c| c.satisfied)
    }
}

/// Certificates for `∫‖∇P^k f‖² ≤ (1 − (2 − λ_N)λ_1)^k ∫‖∇f‖²`, `k = 1..=k_max`.
pub fn walk_decay_certificate(
    g: &WeightedGraph,
    sd: &SpectralDecomposition,
    f: &NodeFunction,
    k_max: usize,
) -> Result<WalkCertificates> {
    require_sub_stochastic(g)?;
    check_pair(g, sd, f)?;
    let rate = walk_rate(sd)?;
    let initial = dirichlet(g, f)?;
    if initial <= 0.0 {
        return Err(Error::ConstantInitialCondition);
    }
    let mut cur = f.clone();
    let mut steps = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        cur = &cur + &laplacian_apply(g, &cur)?;
        steps.push(DecayCertificate::new(
            rate.powi(k as i32),
            dirichlet(g, &cur)? / initial,
        ));
    }
    Ok(WalkCertificates {
        one_step_rate: rate,
        strict_decay: rate < 1.0 - 1e-12,
        steps,
    })
}

/// Result of [`sym_propagate`]. The certificate is `None` when the rescaled
/// input has zero Dirichlet integral (a fixed direction of `Ã_sym`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymPropagation {
    /// `Ã_sym^k f`.
    pub output: NodeFunction,
    pub certificate: Option<DecayCertificate>,
}

/// `Ã_sym^k f = D̃^{1/2} Ã_rw^k D̃^{−1/2} f` on a graph built with the
/// `rw_selfloop` preset (so `μ = D̃`), certifying decay of
/// `∫‖∇(D̃^{−1/2} Ã_sym^k f)‖²`.
pub fn sym_propagate(
    g: &WeightedGraph,
    sd: &SpectralDecomposition,
    f: &NodeFunction,
    k: usize,
) -> Result<SymPropagation> {
    check_pair(g, sd, f)?;
    let (inv_sqrt, sqrt) = degree_scalings(g);
    let rescaled = f.scale_rows(&inv_sqrt);
    let walked = walk_propagate(g, &rescaled, k)?;
    let output = walked.scale_rows(&sqrt);
    let initial = dirichlet(g, &rescaled)?;
    let certificate = if initial > 0.0 {
        let rate = walk_rate(sd)?;
        Some(DecayCertificate::new(
            rate.powi(k as i32),
            dirichlet(g, &walked)? / initial,
        ))
    } else {
        None
    };
    Ok(SymPropagation { output, certificate })
}

/// `(D̃^{−1/2}, D̃^{1/2})` diagonals, with `D̃ = μ`.
pub fn degree_scalings(g: &WeightedGraph) -> (Vec<f64>, Vec<f64>) {
    let sqrt: Vec<f64> = g.mu().iter().map(|m| m.sqrt()).collect();
    (sqrt.iter().map(|s| 1.0 / s).collect(), sqrt)
}

fn record(g: &WeightedGraph, f: &NodeFunction, orders: &[u32]) -> Result<BTreeMap<u32, f64>> {
    orders.iter().map(|&m| Ok((m, energy_m(g, f, m)?))).collect()
}

/// Exact heat trajectory at the given times (prepended with `t = 0` if absent).
pub fn heat_trajectory(
    g: &WeightedGraph,
    sd: &SpectralDecomposition,
    f0: &NodeFunction,
    times: &[f64],
    orders: &[u32],
    keep_snapshots: bool,
) -> Result<Trajectory> {
    check_pair(g, sd, f0)?;
    let mut grid: Vec<f64> = Vec::with_capacity(times.len() + 1);
    if times.first() != Some(&0.0) {
        grid.push(0.0);
    }
    grid.extend_from_slice(times);
    if let Some(&t) = grid.iter().find(|t| t.is_nan() || **t < 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::PreconditionViolated("times must be strictly increasing".into()));
    }
    let gap = sd.spectral_gap().ok();
    let initial = dirichlet(g, f0)?;
    let mut samples = Vec::with_capacity(grid.len());
    for t in grid {
        let ft = heat_evolve(sd, f0, t)?;
        let certificate = match gap {
            Some(gap) if initial > 0.0 => Some(DecayCertificate::new(
                (-2.0 * gap * t).exp(),
                dirichlet(g, &ft)? / initial,
            )),
            _ => None,
        };
        samples.push(Sample {
            abscissa: t,
            energies: record(g, &ft, orders)?,
            certificate,
            snapshot: keep_snapshots.then_some(ft),
        });
    }
    Ok(Trajectory {
        kind: TrajectoryKind::HeatExact,
        orders: orders.to_vec(),
        samples,
    })
}

/// Random-walk trajectory for `k = 0..=k_max`.
pub fn walk_trajectory(
    g: &WeightedGraph,
    sd: &SpectralDecomposition,
    f0: &NodeFunction,
    k_max: usize,
    orders: &[u32],
    keep_snapshots: bool,
) -> Result<Trajectory> {
    require_sub_stochastic(g)?;
    check_pair(g, sd, f0)?;
    let rate = walk_rate(sd).ok();
    let initial = dirichlet(g, f0)?;
    let mut cur = f0.clone();
    let mut samples = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k > 0 {
            cur = &cur + &laplacian_apply(g, &cur)?;
        }
        let certificate = match rate {
            Some(r) if initial > 0.0 => Some(DecayCertificate::new(r.powi(k as i32), dirichlet(g, &cur)? / initial)),
            _ => None,
        };
        samples.push(Sample {
            abscissa: k as f64,
            energies: record(g, &cur, orders)?,
            certificate,
            snapshot: keep_snapshots.then(|| cur.clone()),
        });
    }
    Ok(Trajectory {
        kind: TrajectoryKind::Walk,
        orders: orders.to_vec(),
        samples,
    })
}
