//! Spectrum of `−Δ_μ` in the μ-weighted inner product.
//!
//! The operator `M⁻¹(D_ω − W)` is not symmetric, but it is similar to
//! `S = M^{-1/2}(D_ω − W)M^{-1/2}`, which is. We diagonalise `S` with a dense
//! symmetric eigensolver and map its orthonormal eigenvectors back through
//! `v_k = M^{-1/2} u_k`, which makes them μ-orthonormal.
//!
//! Vector-valued functions are handled columnwise: the `n·d` eigenpairs of the
//! vector operator are the `n` scalar pairs, each repeated `d` times.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::calculus::{check_nodes, NodeFunction};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Tolerance for `λ_N ≤ 2 M_max`.
pub const LAMBDA_MAX_TOL: f64 = 1e-9;

/// Tolerance for `|λ_N − 2|` in the bipartite test.
pub const BIPARTITE_TOL: f64 = 1e-8;

/// Ascending eigenvalues of `−Δ_μ` with μ-orthonormal eigenfunctions.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    alphas: Vec<f64>,
    /// Column `k` is `v_k`.
    eigfuncs: DMatrix<f64>,
    mu: Vec<f64>,
    zero_tol: f64,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn eigfuncs(&self) -> &DMatrix<f64> {
        &self.eigfuncs
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    /// `v_k` as a scalar node function.
    pub fn eigfunc(&self, k: usize) -> NodeFunction {
        NodeFunction::from_matrix_unchecked(self.eigfuncs.columns(k, 1).into_owned())
    }

    /// Largest eigenvalue `λ_N`.
    pub fn lambda_n(&self) -> f64 {
        *self.alphas.last().expect("non-empty spectrum")
    }

    /// Number of eigenvalues classified as zero.
    pub fn zero_count(&self) -> usize {
        self.alphas.iter().filter(|&&a| a <= self.zero_tol).count()
    }

    /// Smallest strictly positive eigenvalue, regardless of connectivity.
    pub fn first_positive(&self) -> Option<f64> {
        self.alphas.iter().copied().find(|&a| a > self.zero_tol)
    }

    /// Index of the first strictly positive eigenvalue.
    pub fn first_positive_index(&self) -> Option<usize> {
        self.alphas.iter().position(|&a| a > self.zero_tol)
    }

    /// Spectral gap `λ_1`; requires exactly one zero eigenvalue.
    pub fn spectral_gap(&self) -> Result<f64> {
        if self.zero_count() != 1 {
            return Err(Error::DisconnectedGraph);
        }
        self.first_positive().ok_or(Error::DegenerateSpectrum)
    }

    /// `max_{i,j} |∫ v_i v_j dμ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                let dot: f64 = (0..n)
                    .map(|i| self.mu[i] * self.eigfuncs[(i, a)] * self.eigfuncs[(i, b)])
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max_k ‖(−Δ_μ) v_k − α_k v_k‖_μ`, measured with the operator itself.
    pub fn max_residual(&self, g: &WeightedGraph) -> Result<f64> {
        let v = NodeFunction::from_matrix_unchecked(self.eigfuncs.clone());
        let lap = crate::calculus::laplacian_apply(g, &v)?;
        let mut worst: f64 = 0.0;
        for k in 0..self.n() {
            let r: f64 = (0..self.n())
                .map(|i| {
                    let e = -lap.get(i, k) - self.alphas[k] * self.eigfuncs[(i, k)];
                    self.mu[i] * e * e
                })
                .sum();
            worst = worst.max(r.sqrt());
        }
        Ok(worst)
    }
}

/// Diagonalises `−Δ_μ` for `g`.
pub fn eigendecompose(g: &WeightedGraph) -> Result<SpectralDecomposition> {
    let n = g.n();
    let mu = g.mu().to_vec();
    let inv_sqrt: Vec<f64> = mu.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = g.weighted_degree(i) / mu[i];
        for &(j, w) in g.neighbors(i) {
            s[(i, j)] = -w * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = SymmetricEigen::try_new(s, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::NumericalFailure)?;
    if eig.eigenvalues.iter().any(|a| !a.is_finite()) {
        return Err(Error::NumericalFailure);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let alphas: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigfuncs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        // Fix the sign so the first non-negligible entry is positive.
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().copied().find(|x| x.abs() > 1e-8).unwrap_or(1.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigfuncs[(i, dst)] = sign * col[i] * inv_sqrt[i];
        }
    }
    let lambda_n = alphas.last().copied().unwrap_or(0.0);
    Ok(SpectralDecomposition {
        alphas,
        eigfuncs,
        mu,
        zero_tol: 1e-9 * lambda_n.max(1.0),
    })
}

/// Convenience wrapper around [`SpectralDecomposition::spectral_gap`].
pub fn spectral_gap(sd: &SpectralDecomposition) -> Result<f64> {
    sd.spectral_gap()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaMaxCheck {
    pub lambda_n: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Compares `λ_N` with `2 M_max`.
pub fn lambda_max_check(g: &WeightedGraph, sd: &SpectralDecomposition) -> LambdaMaxCheck {
    let lambda_n = sd.lambda_n();
    let bound = 2.0 * g.m_max();
    LambdaMaxCheck {
        lambda_n,
        bound,
        holds: lambda_n <= bound + LAMBDA_MAX_TOL,
    }
}

/// Spectral bipartiteness test `|λ_N − 2| ≤ 1e-8` for connected sub-stochastic
/// graphs.
///
/// A bipartite graph reaches `λ_N = 2` only when no node keeps holding mass,
/// i.e. `Σ_j ω_ij = μ_i` everywhere. On bipartite graphs with strict slack the
/// test returns `false`.
pub fn bipartite_spectral_test(g: &WeightedGraph, sd: &SpectralDecomposition) -> Result<bool> {
    if !g.is_connected() {
        return Err(Error::PreconditionViolated("graph is disconnected".into()));
    }
    if let Some(i) = g.sub_stochastic_violation() {
        return Err(Error::PreconditionViolated(format!("node {i} is not sub-stochastic")));
    }
    Ok((sd.lambda_n() - 2.0).abs() <= BIPARTITE_TOL)
}

/// `C_{k,c} = ∫ v_k f_c dμ`.
pub fn spectral_coefficients(sd: &SpectralDecomposition, f: &NodeFunction) -> Result<DMatrix<f64>> {
    if f.n() != sd.n() {
        return Err(Error::DimensionMismatch {
            expected: sd.n(),
            got: f.n(),
        });
    }
    let mut weighted = f.as_matrix().clone();
    for (i, &m) in sd.mu.iter().enumerate() {
        weighted.row_mut(i).scale_mut(m);
    }
    Ok(sd.eigfuncs.transpose() * weighted)
}

/// `Σ_k C_{k,c} v_k`, the inverse of [`spectral_coefficients`].
pub fn reconstruct(sd: &SpectralDecomposition, coefficients: &DMatrix<f64>) -> Result<NodeFunction> {
    if coefficients.nrows() != sd.n() {
        return Err(Error::DimensionMismatch {
            expected: sd.n(),
            got: coefficients.nrows(),
        });
    }
    NodeFunction::new(&sd.eigfuncs * coefficients)
}

/// Applies `φ(−Δ_μ)`: `f ↦ Σ_k φ(α_k) C_k v_k`.
pub fn spectral_filter(sd: &SpectralDecomposition, f: &NodeFunction, phi: impl Fn(f64) -> f64) -> Result<NodeFunction> {
    let mut c = spectral_coefficients(sd, f)?;
    for (k, &a) in sd.alphas.iter().enumerate() {
        c.row_mut(k).scale_mut(phi(a));
    }
    reconstruct(sd, &c)
}

/// `Σ_{k,c} α_k^m C_{k,c}²`, with the zero eigenvalues dropped for `m = 0`.
pub fn spectral_energy(sd: &SpectralDecomposition, f: &NodeFunction, m: u32) -> Result<f64> {
    let c = spectral_coefficients(sd, f)?;
    let mut total = 0.0;
    for (k, &a) in sd.alphas.iter().enumerate() {
        let weight = if a <= sd.zero_tol { 0.0 } else { a.powi(m as i32) };
        if weight != 0.0 {
            total += weight * c.row(k).norm_squared();
        }
    }
    Ok(total)
}

/// Checks a node function against a graph; used by callers that take both.
pub(crate) fn check_pair(g: &WeightedGraph, sd: &SpectralDecomposition, f: &NodeFunction) -> Result<()> {
    check_nodes(g, f)?;
    if sd.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: sd.n(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Preset, Topology};

    fn p2() -> WeightedGraph {
        WeightedGraph::new(2, &[(0, 1, 1.0)], vec![1.0, 1.0]).unwrap()
    }

    fn preset(n: usize, edges: &[(usize, usize)], p: Preset) -> WeightedGraph {
        WeightedGraph::from_preset(&Topology::new(n, edges).unwrap(), p).unwrap()
    }

    fn assert_spectrum(g: &WeightedGraph, expected: &[f64]) {
        let sd = eigendecompose(g).unwrap();
        assert_eq!(sd.n(), expected.len());
        for (a, e) in sd.alphas().iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{:?} vs {:?}", sd.alphas(), expected);
        }
        assert!(sd.orthonormality_defect() < 1e-10);
        assert!(sd.max_residual(g).unwrap() < 1e-10);
    }

    #[test]
    fn known_spectra() {
        assert_spectrum(&p2(), &[0.0, 2.0]);
        assert_spectrum(&preset(3, &[(0, 1), (1, 2), (0, 2)], Preset::Rw), &[0.0, 1.5, 1.5]);
        assert_spectrum(
            &preset(4, &[(0, 2), (0, 3), (1, 2), (1, 3)], Preset::Rw),
            &[0.0, 1.0, 1.0, 2.0],
        );
    }

    #[test]
    fn gaps() {
        assert!((eigendecompose(&p2()).unwrap().spectral_gap().unwrap() - 2.0).abs() < 1e-12);
        let k3 = preset(3, &[(0, 1), (1, 2), (0, 2)], Preset::Rw);
        assert!((spectral_gap(&eigendecompose(&k3).unwrap()).unwrap() - 1.5).abs() < 1e-12);
        let split = WeightedGraph::new(4, &[(0, 1, 1.0), (2, 3, 1.0)], vec![1.0; 4]).unwrap();
        let sd = eigendecompose(&split).unwrap();
        assert_eq!(sd.zero_count(), 2);
        assert_eq!(sd.spectral_gap(), Err(Error::DisconnectedGraph));
    }

    #[test]
    fn lambda_max() {
        let c = lambda_max_check(&p2(), &eigendecompose(&p2()).unwrap());
        assert!((c.lambda_n - 2.0).abs() < 1e-12 && c.bound == 2.0 && c.holds);
        let k3 = preset(3, &[(0, 1), (1, 2), (0, 2)], Preset::Rw);
        let c = lambda_max_check(&k3, &eigendecompose(&k3).unwrap());
        assert!((c.lambda_n - 1.5).abs() < 1e-12 && c.bound == 2.0 && c.holds);
    }

    #[test]
    fn attention_graph_has_lambda_n_below_two() {
        let t = Topology::new(4, &[(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let e = DMatrix::from_fn(4, 4, |i, j| 0.3 * (i + j) as f64 - 0.5);
        let g = WeightedGraph::from_attention(&e, &t).unwrap();
        let sd = eigendecompose(&g).unwrap();
        assert!(sd.lambda_n() < 2.0 - 1e-6);
        // Bipartite topology, but strict holding mass keeps λ_N away from 2.
        assert!(!bipartite_spectral_test(&g, &sd).unwrap());
    }

    #[test]
    fn bipartite_test() {
        let k22 = preset(4, &[(0, 2), (0, 3), (1, 2), (1, 3)], Preset::Rw);
        assert!(bipartite_spectral_test(&k22, &eigendecompose(&k22).unwrap()).unwrap());
        let k3 = preset(3, &[(0, 1), (1, 2), (0, 2)], Preset::Rw);
        assert!(!bipartite_spectral_test(&k3, &eigendecompose(&k3).unwrap()).unwrap());
        assert!(bipartite_spectral_test(&p2(), &eigendecompose(&p2()).unwrap()).unwrap());

        let heavy = WeightedGraph::new(2, &[(0, 1, 3.0)], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            bipartite_spectral_test(&heavy, &eigendecompose(&heavy).unwrap()),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn coefficients_on_p2() {
        let sd = eigendecompose(&p2()).unwrap();
        let s = 2f64.sqrt();
        let f = NodeFunction::scalar(&[1.0 / s, 5.0 / s]).unwrap();
        let c = spectral_coefficients(&sd, &f).unwrap();
        assert!((c[(0, 0)].abs() - 3.0).abs() < 1e-12);
        assert!((c[(1, 0)].abs() - 2.0).abs() < 1e-12);
        let back = reconstruct(&sd, &c).unwrap();
        assert!((&back - &f).max_abs() < 1e-12);

        assert!((spectral_energy(&sd, &f, 1).unwrap() - 8.0).abs() < 1e-12);
        assert!((spectral_energy(&sd, &f, 2).unwrap() - 16.0).abs() < 1e-12);
        assert!((spectral_energy(&sd, &f, 0).unwrap() - 4.0).abs() < 1e-12);

        let zero = spectral_coefficients(&sd, &NodeFunction::zeros(2, 3)).unwrap();
        assert_eq!(zero, DMatrix::zeros(2, 3));
    }

    #[test]
    fn coefficients_of_an_eigenfunction() {
        let k22 = preset(4, &[(0, 2), (0, 3), (1, 2), (1, 3)], Preset::Rw);
        let sd = eigendecompose(&k22).unwrap();
        let c = spectral_coefficients(&sd, &sd.eigfunc(1)).unwrap();
        for k in 0..4 {
            let expected = if k == 1 { 1.0 } else { 0.0 };
            assert!((c[(k, 0)] - expected).abs() < 1e-12);
        }
    }
}
