//! Forward passes of randomly initialised GCN and GAT stacks, recording the
//! derivative energies after every layer.
//!
//! Energies are always measured on the `rw_selfloop` graph of the input
//! topology. For GCN the features are first rescaled by `D̃^{−1/2}`, so that
//! the fixed direction `D̃^{1/2}·c` of `Ã_sym` has zero energy; GAT
//! aggregation is row-stochastic and features are measured as they are.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::NodeFunction;
use crate::dynamics::{degree_scalings, random_walk_step, walk_propagate, walk_rate};
use crate::energy::energy_m;
use crate::error::{Error, Result};
use crate::graph::{Preset, Topology, WeightedGraph};
use crate::spectral::eigendecompose;

/// Energies below this are recorded as zero and left out of slope fits.
pub const UNDERFLOW: f64 = 1e-300;

const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Gcn,
    Gat,
}

impl FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gcn" => Ok(Arch::Gcn),
            "gat" => Ok(Arch::Gat),
            other => Err(format!("unknown architecture `{other}` (expected gcn or gat)")),
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::Gcn => "gcn",
            Arch::Gat => "gat",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
        }
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "id" | "identity" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            other => Err(format!("unknown activation `{other}` (expected relu or id)")),
        }
    }
}

/// Weights (and, for GAT, attention vectors) of a `depth`-layer network.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub arch: Arch,
    pub activation: Activation,
    /// `dims[l]` is the input width of layer `l`; `dims[depth]` the output width.
    pub dims: Vec<usize>,
    /// `weights[l]` maps width `dims[l]` to `dims[l + 1]`.
    pub weights: Vec<DMatrix<f64>>,
    /// GAT only: `attention[l]` has length `2 · dims[l + 1]`.
    pub attention: Vec<DVector<f64>>,
}

impl LayerStack {
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    /// Identity weights (and zero attention vectors, i.e. uniform scores).
    pub fn identity(arch: Arch, depth: usize, width: usize, activation: Activation) -> Result<Self> {
        let dims = vec![width; depth + 1];
        validate_dims(depth, &dims)?;
        Ok(Self {
            arch,
            activation,
            weights: vec![DMatrix::identity(width, width); depth],
            attention: match arch {
                Arch::Gcn => Vec::new(),
                Arch::Gat => vec![DVector::zeros(2 * width); depth],
            },
            dims,
        })
    }
}

fn validate_dims(depth: usize, dims: &[usize]) -> Result<()> {
    if depth == 0 {
        return Err(Error::InvalidDims("depth must be at least 1".into()));
    }
    if dims.len() != depth + 1 {
        return Err(Error::InvalidDims(format!(
            "{} widths given for depth {depth}; expected {}",
            dims.len(),
            depth + 1
        )));
    }
    if let Some(l) = dims.iter().position(|&d| d == 0) {
        return Err(Error::InvalidDims(format!("width {l} is zero")));
    }
    Ok(())
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> DMatrix<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    // Row-major fill so the draw order does not depend on storage layout.
    let values: Vec<f64> = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    DMatrix::from_row_slice(rows, cols, &values)
}

/// Glorot-uniform initialisation, deterministic in `seed`.
pub fn init_stack(arch: Arch, depth: usize, dims: &[usize], seed: u64, activation: Activation) -> Result<LayerStack> {
    validate_dims(depth, dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(depth);
    let mut attention = Vec::new();
    for l in 0..depth {
        let (d_in, d_out) = (dims[l], dims[l + 1]);
        weights.push(glorot(&mut rng, d_in, d_out, d_in, d_out));
        if arch == Arch::Gat {
            let a = glorot(&mut rng, 2 * d_out, 1, 2 * d_out, 1);
            attention.push(a.column(0).into_owned());
        }
    }
    Ok(LayerStack {
        arch,
        activation,
        dims: dims.to_vec(),
        weights,
        attention,
    })
}

fn leaky_relu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

/// Symmetrised GAT scores on `topology` for transformed features `h`, as the
/// graph `ω_ij = exp(e_ij)`, `μ_i = exp(e_ii) + Σ_j ω_ij`.
///
/// Raw scores `LeakyReLU(a_srcᵀ h_i + a_dstᵀ h_j)` are averaged with their
/// transpose and shifted by the largest score, which leaves the induced
/// random walk unchanged.
pub fn gat_layer_graph(topology: &Topology, h: &DMatrix<f64>, a: &DVector<f64>) -> Result<WeightedGraph> {
    let n = topology.n();
    let d = h.ncols();
    if a.len() != 2 * d {
        return Err(Error::DimensionMismatch {
            expected: 2 * d,
            got: a.len(),
        });
    }
    if h.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h.nrows(),
        });
    }
    let src: Vec<f64> = (0..n).map(|i| (0..d).map(|c| a[c] * h[(i, c)]).sum()).collect();
    let dst: Vec<f64> = (0..n).map(|i| (0..d).map(|c| a[d + c] * h[(i, c)]).sum()).collect();
    let mut scores = DMatrix::zeros(n, n);
    for i in 0..n {
        scores[(i, i)] = leaky_relu(src[i] + dst[i]);
    }
    for (i, j) in topology.edges() {
        let e = 0.5 * (leaky_relu(src[i] + dst[j]) + leaky_relu(src[j] + dst[i]));
        scores[(i, j)] = e;
        scores[(j, i)] = e;
    }
    let mut shift = f64::NEG_INFINITY;
    for i in 0..n {
        shift = shift.max(scores[(i, i)]);
        for &j in topology.neighbors(i) {
            shift = shift.max(scores[(i, j)]);
        }
    }
    // Floor keeps exp() above zero; such weights are negligible anyway.
    for i in 0..n {
        scores[(i, i)] = (scores[(i, i)] - shift).max(-700.0);
        for &j in topology.neighbors(i) {
            scores[(i, j)] = (scores[(i, j)] - shift).max(-700.0);
        }
    }
    WeightedGraph::from_attention(&scores, topology)
}

/// Energy decay summary over depth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OversmoothReport {
    pub orders: Vec<u32>,
    /// Entry `l` holds `m → E_m` after layer `l` (entry 0 is the input).
    pub energies_by_depth: Vec<BTreeMap<u32, f64>>,
    pub tail_fraction: f64,
    /// Least-squares slope of `ln E_1` against depth; `None` when fewer than
    /// two depths carry non-zero energy.
    pub log_slope: Option<f64>,
    /// `C_2 = −log_slope` in `E ≤ C_1 e^{−C_2 k}`.
    pub decay_exponent: Option<f64>,
    /// `1 − (2 − λ_N) λ_1` of the propagation graph, when known.
    pub theoretical_rate: Option<f64>,
}

impl OversmoothReport {
    pub fn energy(&self, depth: usize, m: u32) -> Option<f64> {
        self.energies_by_depth.get(depth)?.get(&m).copied()
    }

    /// First depth at which `E_1` falls below `threshold`.
    pub fn depth_below(&self, threshold: f64) -> Option<usize> {
        self.energies_by_depth.iter().position(|e| e[&1] < threshold)
    }

    /// `E_1(last) / E_1(0)`.
    pub fn collapse_ratio(&self) -> f64 {
        let first = self.energies_by_depth[0][&1];
        let last = self.energies_by_depth[self.energies_by_depth.len() - 1][&1];
        last / first
    }

    /// `−ln(theoretical_rate)`, comparable with [`Self::decay_exponent`].
    pub fn theoretical_exponent(&self) -> Option<f64> {
        self.theoretical_rate.map(|r| -r.ln())
    }
}

/// Fits `ln E_1` over the last `tail_fraction` of recorded depths.
///
/// Underflowed entries are skipped. If fewer than two usable points remain
/// in the tail, every usable depth is fitted instead.
pub fn oversmooth_report(
    energies_by_depth: Vec<BTreeMap<u32, f64>>,
    tail_fraction: f64,
    theoretical_rate: Option<f64>,
) -> Result<OversmoothReport> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidTailFraction(tail_fraction));
    }
    let len = energies_by_depth.len();
    if len < 4 {
        return Err(Error::InsufficientData { needed: 4, got: len });
    }
    let e1: Vec<f64> = energies_by_depth
        .iter()
        .map(|e| {
            e.get(&1)
                .copied()
                .ok_or_else(|| Error::PreconditionViolated("E_1 not recorded".into()))
        })
        .collect::<Result<_>>()?;
    let usable = |range: std::ops::Range<usize>| -> Vec<(f64, f64)> {
        range
            .filter(|&k| e1[k] >= UNDERFLOW)
            .map(|k| (k as f64, e1[k].ln()))
            .collect()
    };
    let start = len - ((len as f64 * tail_fraction).ceil() as usize).clamp(1, len);
    let mut points = usable(start..len);
    if points.len() < 2 {
        points = usable(0..len);
    }
    match points.len() {
        0 => return Err(Error::AllZeroEnergies),
        1 => return Err(Error::InsufficientData { needed: 2, got: 1 }),
        _ => {}
    }
    let log_slope = least_squares_slope(&points);
    let orders = energies_by_depth[0].keys().copied().collect();
    Ok(OversmoothReport {
        orders,
        energies_by_depth,
        tail_fraction,
        log_slope: Some(log_slope),
        decay_exponent: Some(-log_slope),
        theoretical_rate,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Output of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub features: NodeFunction,
    pub report: OversmoothReport,
    /// Features after each layer (entry 0 is the input), when requested.
    pub layers: Option<Vec<NodeFunction>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    pub tail_fraction: f64,
    pub keep_layers: bool,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            tail_fraction: 0.5,
            keep_layers: false,
        }
    }
}

/// `X^{l+1} = φ(P^l X^l W^l)` for every layer of `stack`.
pub fn forward(
    topology: &Topology,
    stack: &LayerStack,
    x0: &NodeFunction,
    record_orders: &[u32],
) -> Result<ForwardOutput> {
    forward_with(topology, stack, x0, record_orders, ForwardOptions::default())
}

pub fn forward_with(
    topology: &Topology,
    stack: &LayerStack,
    x0: &NodeFunction,
    record_orders: &[u32],
    options: ForwardOptions,
) -> Result<ForwardOutput> {
    let n = topology.n();
    if x0.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.n(),
        });
    }
    if x0.dim() != stack.dims[0] {
        return Err(Error::DimensionMismatch {
            expected: stack.dims[0],
            got: x0.dim(),
        });
    }
    let mut orders: Vec<u32> = record_orders.to_vec();
    if !orders.contains(&1) {
        orders.push(1);
    }
    orders.sort_unstable();
    orders.dedup();

    let measure = WeightedGraph::from_preset(topology, Preset::RwSelfloop)?;
    let (inv_sqrt, sqrt) = degree_scalings(&measure);
    let observe = |x: &NodeFunction| -> Result<BTreeMap<u32, f64>> {
        let seen = match stack.arch {
            Arch::Gcn => x.scale_rows(&inv_sqrt),
            Arch::Gat => x.clone(),
        };
        orders
            .iter()
            .map(|&m| {
                let e = energy_m(&measure, &seen, m)?;
                Ok((m, if e < UNDERFLOW { 0.0 } else { e }))
            })
            .collect()
    };

    let mut x = x0.clone();
    let mut energies = Vec::with_capacity(stack.depth() + 1);
    energies.push(observe(&x)?);
    let mut layers = options.keep_layers.then(|| vec![x.clone()]);
    for l in 0..stack.depth() {
        let h = x.as_matrix() * &stack.weights[l];
        let aggregated = match stack.arch {
            Arch::Gcn => {
                let rescaled = NodeFunction::from_matrix_unchecked(h).scale_rows(&inv_sqrt);
                walk_propagate(&measure, &rescaled, 1)?.scale_rows(&sqrt)
            }
            Arch::Gat => {
                let g = gat_layer_graph(topology, &h, &stack.attention[l])?;
                random_walk_step(&g, &NodeFunction::from_matrix_unchecked(h))?
            }
        };
        let act = stack.activation;
        x = NodeFunction::new(aggregated.into_matrix().map(|v| act.apply(v)))?;
        energies.push(observe(&x)?);
        if let Some(layers) = layers.as_mut() {
            layers.push(x.clone());
        }
    }

    let theoretical_rate = match stack.arch {
        Arch::Gcn => eigendecompose(&measure).ok().and_then(|sd| walk_rate(&sd).ok()),
        Arch::Gat => None,
    };
    let report = match oversmooth_report(energies.clone(), options.tail_fraction, theoretical_rate) {
        Ok(r) => r,
        Err(Error::AllZeroEnergies | Error::InsufficientData { .. }) => OversmoothReport {
            orders,
            energies_by_depth: energies,
            tail_fraction: options.tail_fraction,
            log_slope: None,
            decay_exponent: None,
            theoretical_rate,
        },
        Err(e) => return Err(e),
    };
    Ok(ForwardOutput {
        features: x,
        report,
        layers,
    })
}
