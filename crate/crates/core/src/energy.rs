//! Higher-order derivative energies `E_m` and the inequalities relating them.
//!
//! `E_m(f) = (1/n) ∫ ‖∇^m f‖² dμ` where even orders use `(−Δ_μ)^{m/2} f`, odd
//! orders use the gradient of `(−Δ_μ)^{(m−1)/2} f`, and `m = 0` is the
//! μ-centred squared norm. The operator path here never touches the
//! spectrum; `spectral::spectral_energy` is the independent route.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::calculus::{check_nodes, dirichlet, integrate, laplacian_apply, laplacian_power, mu_norm_sq, NodeFunction};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::spectral::{check_pair, SpectralDecomposition};

/// Relative slack for the inequality checks.
pub const INEQUALITY_TOL: f64 = 1e-9;

/// `f − (1/|V|_μ) ∫ f dμ`.
pub fn center(g: &WeightedGraph, f: &NodeFunction) -> Result<NodeFunction> {
    let total = g.total_measure();
    let mean: Vec<f64> = integrate(g, f)?.into_iter().map(|s| s / total).collect();
    let shift = NodeFunction::constant(f.n(), &mean)?;
    Ok(f - &shift)
}

/// `∫ ‖∇^m f‖² dμ` without the `1/n` prefactor.
pub fn derivative_integral(g: &WeightedGraph, f: &NodeFunction, m: u32) -> Result<f64> {
    check_nodes(g, f)?;
    if m == 0 {
        return mu_norm_sq(g, &center(g, f)?);
    }
    let inner = laplacian_power(g, f, m / 2)?;
    if m.is_multiple_of(2) {
        mu_norm_sq(g, &inner)
    } else {
        dirichlet(g, &inner)
    }
}

/// `E_m(f)`.
pub fn energy_m(g: &WeightedGraph, f: &NodeFunction, m: u32) -> Result<f64> {
    Ok(derivative_integral(g, f, m)? / g.n() as f64)
}

/// `γ_m(f) = √E_m(f)`.
pub fn gamma_m(g: &WeightedGraph, f: &NodeFunction, m: u32) -> Result<f64> {
    Ok(energy_m(g, f, m)?.sqrt())
}

/// Energies for several orders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub n: usize,
    /// `m → (E_m, γ_m)`.
    pub values: BTreeMap<u32, (f64, f64)>,
}

impl EnergyReport {
    pub fn orders(&self) -> impl Iterator<Item = u32> + '_ {
        self.values.keys().copied()
    }

    pub fn energy(&self, m: u32) -> Option<f64> {
        self.values.get(&m).map(|v| v.0)
    }

    /// `n · E_m`, the unnormalised integral.
    pub fn integral(&self, m: u32) -> Option<f64> {
        self.energy(m).map(|e| e * self.n as f64)
    }
}

pub fn energy_report(g: &WeightedGraph, f: &NodeFunction, orders: &[u32]) -> Result<EnergyReport> {
    let mut values = BTreeMap::new();
    for &m in orders {
        let e = energy_m(g, f, m)?;
        values.insert(m, (e, e.sqrt()));
    }
    Ok(EnergyReport { n: g.n(), values })
}

/// One side-by-side comparison `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inequality {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; non-negative when the inequality holds exactly.
    pub slack: f64,
}

impl Inequality {
    pub fn new(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self {
            name,
            lhs,
            rhs,
            slack: rhs - lhs,
        }
    }

    pub fn holds(&self) -> bool {
        self.slack >= -INEQUALITY_TOL * (1.0 + self.lhs.abs().max(self.rhs.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareCheck {
    /// `λ_1 ∫ ‖f − mean‖² dμ`.
    pub lhs: f64,
    /// `∫ ‖∇f‖² dμ`.
    pub rhs: f64,
    /// `2 M_max ∫ ‖f − mean‖² dμ`.
    pub upper: f64,
    pub holds: bool,
}

/// Poincaré inequality and its converse on a connected graph.
pub fn poincare_check(g: &WeightedGraph, f: &NodeFunction, sd: &SpectralDecomposition) -> Result<PoincareCheck> {
    check_pair(g, sd, f)?;
    let gap = sd.spectral_gap()?;
    let centered = mu_norm_sq(g, &center(g, f)?)?;
    let lhs = gap * centered;
    let rhs = dirichlet(g, f)?;
    let upper = 2.0 * g.m_max() * centered;
    let holds =
        Inequality::new("poincare_lower", lhs, rhs).holds() && Inequality::new("poincare_upper", rhs, upper).holds();
    Ok(PoincareCheck { lhs, rhs, upper, holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentMode {
    /// Require a connected graph.
    Connected,
    /// Allow disconnected graphs, using the smallest positive eigenvalue
    /// over all components.
    PerComponent,
}

/// The four comparisons between `∫‖∇f‖²`, `∫‖Δf‖²` and `∫‖∇Δf‖²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub lambda_1: f64,
    pub two_m_max: f64,
    pub grad: f64,
    pub lap: f64,
    pub grad_lap: f64,
    pub checks: [Inequality; 4],
}

impl EquivalenceReport {
    pub fn holds(&self) -> bool {
        self.checks.iter().all(Inequality::holds)
    }
}

/// Checks
/// `λ_1 ∫‖∇f‖² ≤ ∫‖Δf‖² ≤ 2M_max ∫‖∇f‖²`,
/// `∫‖Δf‖² ≤ (1/λ_1) ∫‖∇Δf‖²` and `∫‖∇Δf‖² ≤ 2M_max ∫‖Δf‖²`.
pub fn equivalence_check(
    g: &WeightedGraph,
    f: &NodeFunction,
    sd: &SpectralDecomposition,
    mode: ComponentMode,
) -> Result<EquivalenceReport> {
    check_pair(g, sd, f)?;
    let lambda_1 = match mode {
        ComponentMode::Connected => sd.spectral_gap()?,
        ComponentMode::PerComponent => sd.first_positive().ok_or(Error::DegenerateSpectrum)?,
    };
    let two_m_max = 2.0 * g.m_max();
    let lap_f = laplacian_apply(g, f)?;
    let grad = dirichlet(g, f)?;
    let lap = mu_norm_sq(g, &lap_f)?;
    let grad_lap = dirichlet(g, &lap_f)?;
    Ok(EquivalenceReport {
        lambda_1,
        two_m_max,
        grad,
        lap,
        grad_lap,
        checks: [
            Inequality::new("grad_below_lap", lambda_1 * grad, lap),
            Inequality::new("lap_below_grad", lap, two_m_max * grad),
            Inequality::new("lap_below_grad_lap", lap, grad_lap / lambda_1),
            Inequality::new("grad_lap_below_lap", grad_lap, two_m_max * lap),
        ],
    })
}
