//! One-shot numerical audit of a graph and a pair of node functions.
//!
//! Every identity and inequality the library relies on is evaluated on the
//! given input and reported as a [`CheckRow`]. Rows that need a spectral gap
//! are reported as errors on disconnected graphs; rows whose hypotheses do
//! not apply (e.g. a walk on a graph that is not sub-stochastic) are skipped.

use std::fmt;

use serde::Serialize;

use crate::calculus::{gradient_inner, ibp_residual, laplacian_apply, mu_inner, NodeFunction};
use crate::dynamics::{heat_decay_certificate, walk_decay_certificate};
use crate::energy::{derivative_integral, equivalence_check, poincare_check, ComponentMode, Inequality};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::spectral::{eigendecompose, lambda_max_check, spectral_energy, SpectralDecomposition, BIPARTITE_TOL};

pub const IBP_TOL: f64 = 1e-10;
pub const SPECTRAL_TOL: f64 = 1e-7;
pub const EIGEN_TOL: f64 = 1e-8;
pub const HEAT_TIMES: [f64; 3] = [0.5, 1.0, 2.0];
pub const WALK_STEPS: usize = 5;
pub const SPECTRAL_ORDERS: std::ops::RangeInclusive<u32> = 0..=4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
    Error,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "true",
            CheckStatus::Fail => "false",
            CheckStatus::Skip => "skip",
            CheckStatus::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub slack: Option<f64>,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckRow {
    fn measured(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64, pass: bool) -> Self {
        CheckRow {
            name: name.into(),
            lhs: Some(lhs),
            rhs: Some(rhs),
            slack: Some(slack),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            detail: String::new(),
        }
    }

    fn inequality(name: impl Into<String>, ineq: &Inequality) -> Self {
        Self::measured(name, ineq.lhs, ineq.rhs, ineq.slack, ineq.holds())
    }

    /// `|lhs − rhs| ≤ tol · max(1, |lhs|, |rhs|)`; slack is the unused margin.
    fn equality(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let bound = tol * 1f64.max(lhs.abs()).max(rhs.abs());
        let slack = bound - (lhs - rhs).abs();
        Self::measured(name, lhs, rhs, slack, slack >= 0.0)
    }

    fn skipped(name: impl Into<String>, why: impl Into<String>) -> Self {
        CheckRow {
            name: name.into(),
            lhs: None,
            rhs: None,
            slack: None,
            status: CheckStatus::Skip,
            detail: why.into(),
        }
    }

    fn failed(name: impl Into<String>, err: &Error) -> Self {
        CheckRow {
            name: name.into(),
            lhs: None,
            rhs: None,
            slack: None,
            status: CheckStatus::Error,
            detail: format!("{err:?}"),
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self.status, CheckStatus::Pass | CheckStatus::Skip)
    }
}

/// True when no row failed or errored.
pub fn all_pass(rows: &[CheckRow]) -> bool {
    rows.iter().all(CheckRow::passed)
}

/// Runs every check on `g` with test functions `f` and `h` of equal shape.
pub fn run_verify(g: &WeightedGraph, f: &NodeFunction, h: &NodeFunction) -> Result<Vec<CheckRow>> {
    let sd = eigendecompose(g)?;
    run_verify_with(g, &sd, f, h)
}

pub fn run_verify_with(
    g: &WeightedGraph,
    sd: &SpectralDecomposition,
    f: &NodeFunction,
    h: &NodeFunction,
) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let connected = g.is_connected();

    let lap_f = laplacian_apply(g, f)?;
    let lap_h = laplacian_apply(g, h)?;
    let lhs = mu_inner(g, &lap_f, h)?;
    let rhs = -gradient_inner(g, f, h)?;
    let residual = ibp_residual(g, f, h)?;
    let bound = IBP_TOL * 1f64.max(lhs.abs()).max(rhs.abs());
    rows.push(CheckRow::measured(
        "integration_by_parts",
        lhs,
        rhs,
        bound - residual,
        residual <= bound,
    ));
    rows.push(CheckRow::equality(
        "self_adjoint",
        lhs,
        mu_inner(g, f, &lap_h)?,
        IBP_TOL,
    ));

    let lm = lambda_max_check(g, sd);
    rows.push(CheckRow::measured(
        "lambda_max",
        lm.lambda_n,
        lm.bound,
        lm.bound - lm.lambda_n,
        lm.holds,
    ));

    let scale = 1f64.max(sd.lambda_n());
    let res = sd.max_residual(g)?;
    rows.push(CheckRow::measured(
        "eigen_residual",
        res,
        EIGEN_TOL * scale,
        EIGEN_TOL * scale - res,
        res <= EIGEN_TOL * scale,
    ));
    let orth = sd.orthonormality_defect();
    rows.push(CheckRow::measured(
        "eigen_orthonormality",
        orth,
        EIGEN_TOL,
        EIGEN_TOL - orth,
        orth <= EIGEN_TOL,
    ));

    let components = g.component_labels().0;
    let zeros = sd.zero_count();
    rows.push(CheckRow::measured(
        "zero_multiplicity",
        zeros as f64,
        components as f64,
        0.0,
        zeros == components,
    ));

    match poincare_check(g, f, sd) {
        Ok(pc) => {
            rows.push(CheckRow::inequality(
                "poincare_lower",
                &Inequality::new("", pc.lhs, pc.rhs),
            ));
            rows.push(CheckRow::inequality(
                "poincare_upper",
                &Inequality::new("", pc.rhs, pc.upper),
            ));
        }
        Err(e) => {
            rows.push(CheckRow::failed("poincare_lower", &e));
            rows.push(CheckRow::failed("poincare_upper", &e));
        }
    }

    const EQUIV: [&str; 4] = [
        "grad_below_lap",
        "lap_below_grad",
        "lap_below_grad_lap",
        "grad_lap_below_lap",
    ];
    match equivalence_check(g, f, sd, ComponentMode::Connected) {
        Ok(rep) => rows.extend(
            rep.checks
                .iter()
                .map(|c| CheckRow::inequality(format!("equivalence_{}", c.name), c)),
        ),
        Err(e) => rows.extend(EQUIV.iter().map(|n| CheckRow::failed(format!("equivalence_{n}"), &e))),
    }

    for m in SPECTRAL_ORDERS {
        let name = format!("spectral_formula_m{m}");
        if m == 0 && !connected {
            rows.push(CheckRow::skipped(name, "centering is global on a disconnected graph"));
            continue;
        }
        let operator = derivative_integral(g, f, m)?;
        rows.push(CheckRow::equality(
            name,
            operator,
            spectral_energy(sd, f, m)?,
            SPECTRAL_TOL,
        ));
    }

    match heat_decay_certificate(g, sd, f, &HEAT_TIMES) {
        Ok(certs) => {
            for (t, c) in HEAT_TIMES.iter().zip(&certs) {
                let mut row = CheckRow::measured(format!("heat_decay_t{t}"), c.observed, c.rate, c.slack, c.satisfied);
                row.detail = format!("rate={} observed={}", c.rate, c.observed);
                rows.push(row);
            }
        }
        Err(Error::ConstantInitialCondition) => rows.extend(
            HEAT_TIMES
                .iter()
                .map(|t| CheckRow::skipped(format!("heat_decay_t{t}"), "f is constant")),
        ),
        Err(e) => rows.extend(
            HEAT_TIMES
                .iter()
                .map(|t| CheckRow::failed(format!("heat_decay_t{t}"), &e)),
        ),
    }

    let walk_names = (1..=WALK_STEPS).map(|k| format!("walk_decay_k{k}"));
    if let Some(i) = g.sub_stochastic_violation() {
        rows.extend(walk_names.map(|n| CheckRow::skipped(n, format!("node {i} is not sub-stochastic"))));
    } else {
        match walk_decay_certificate(g, sd, f, WALK_STEPS) {
            Ok(wc) => {
                for (name, c) in walk_names.zip(&wc.steps) {
                    let mut row = CheckRow::measured(name, c.observed, c.rate, c.slack, c.satisfied);
                    row.detail = format!("rate={} observed={}", c.rate, c.observed);
                    rows.push(row);
                }
            }
            Err(Error::ConstantInitialCondition) => {
                rows.extend(walk_names.map(|n| CheckRow::skipped(n, "f is constant")))
            }
            Err(e) => rows.extend(walk_names.map(|n| CheckRow::failed(n, &e))),
        }
    }

    rows.push(bipartite_row(g, sd));
    Ok(rows)
}

/// The spectral test against the structural 2-colouring. The spectral side
/// only characterises bipartiteness when `Σ_j ω_ij = μ_i` at every node, so
/// bipartite graphs with strict slack are skipped.
fn bipartite_row(g: &WeightedGraph, sd: &SpectralDecomposition) -> CheckRow {
    const NAME: &str = "bipartite_spectrum";
    if !g.is_connected() {
        return CheckRow::failed(NAME, &Error::DisconnectedGraph);
    }
    if let Some(i) = g.sub_stochastic_violation() {
        return CheckRow::skipped(NAME, format!("node {i} is not sub-stochastic"));
    }
    let structural = g.is_bipartite();
    if structural && !g.is_stochastic() {
        return CheckRow::skipped(NAME, "bipartite with strict measure slack");
    }
    let lambda_n = sd.lambda_n();
    let spectral = (lambda_n - 2.0).abs() <= BIPARTITE_TOL;
    let mut row = CheckRow::measured(NAME, lambda_n, 2.0, (lambda_n - 2.0).abs(), spectral == structural);
    row.detail = format!("spectral={spectral} structural={structural}");
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Preset, Topology};

    fn k22() -> WeightedGraph {
        let t = Topology::new(4, &[(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        WeightedGraph::from_preset(&t, Preset::Rw).unwrap()
    }

    fn row<'a>(rows: &'a [CheckRow], name: &str) -> &'a CheckRow {
        rows.iter().find(|r| r.name == name).unwrap()
    }

    #[test]
    fn k3_passes() {
        let t = Topology::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let g = WeightedGraph::from_preset(&t, Preset::Rw).unwrap();
        let f = NodeFunction::from_rows(3, 2, &[0.3, -1.0, 0.9, 0.2, -0.4, 0.5]).unwrap();
        let h = NodeFunction::from_rows(3, 2, &[1.0, 0.0, -0.7, 0.1, 0.2, 0.8]).unwrap();
        let rows = run_verify(&g, &f, &h).unwrap();
        assert!(all_pass(&rows), "{rows:#?}");
        assert_eq!(row(&rows, "walk_decay_k1").rhs, Some(0.25));
    }

    #[test]
    fn k22_invariance_rows() {
        let x = NodeFunction::scalar(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        let h = NodeFunction::scalar(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let rows = run_verify(&k22(), &x, &h).unwrap();
        assert!(all_pass(&rows), "{rows:#?}");
        let walk = row(&rows, "walk_decay_k3");
        assert_eq!(walk.lhs, Some(1.0));
        assert!((walk.rhs.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(row(&rows, "bipartite_spectrum").status, CheckStatus::Pass);
    }

    #[test]
    fn disconnected_graph_errors() {
        let g = WeightedGraph::new(4, &[(0, 1, 1.0), (2, 3, 1.0)], vec![1.0; 4]).unwrap();
        let f = NodeFunction::scalar(&[0.0, 1.0, 2.0, 5.0]).unwrap();
        let h = NodeFunction::scalar(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let rows = run_verify(&g, &f, &h).unwrap();
        assert!(!all_pass(&rows));
        let poincare = row(&rows, "poincare_lower");
        assert_eq!(poincare.status, CheckStatus::Error);
        assert!(poincare.detail.contains("DisconnectedGraph"));
        assert_eq!(row(&rows, "integration_by_parts").status, CheckStatus::Pass);
        assert_eq!(row(&rows, "zero_multiplicity").status, CheckStatus::Pass);
    }

    #[test]
    fn walk_rows_skip_without_sub_stochasticity() {
        let g = WeightedGraph::new(3, &[(0, 1, 2.0), (1, 2, 2.0)], vec![1.0; 3]).unwrap();
        let f = NodeFunction::scalar(&[0.0, 1.0, 3.0]).unwrap();
        let rows = run_verify(&g, &f, &f).unwrap();
        assert_eq!(row(&rows, "walk_decay_k1").status, CheckStatus::Skip);
        assert_eq!(row(&rows, "bipartite_spectrum").status, CheckStatus::Skip);
        assert!(all_pass(&rows), "{rows:#?}");
    }
}
