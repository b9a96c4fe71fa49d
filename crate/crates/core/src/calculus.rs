//! Integration, gradients and the μ-Laplacian on a [`WeightedGraph`].
//!
//! All sums run in ascending node order and, within a node, ascending
//! neighbour order, so results are bit-for-bit reproducible.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// A vector-valued function `f: V → R^d`, stored as an `n × d` matrix whose
/// row `i` is `f(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFunction(DMatrix<f64>);

impl NodeFunction {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() == 0 {
            return Err(Error::ZeroWidth);
        }
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if !values[(i, j)].is_finite() {
                    return Err(Error::NonFinite(i, j));
                }
            }
        }
        Ok(Self(values))
    }

    /// Row-major construction.
    pub fn from_rows(n: usize, d: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: values.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, d, values))
    }

    /// Scalar function (`d = 1`).
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::from_rows(values.len(), 1, values)
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        assert!(d > 0, "node function needs at least one column");
        Self(DMatrix::zeros(n, d))
    }

    /// Every node carries the same row `c`.
    pub fn constant(n: usize, c: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, c.len(), |_, j| c[j]))
    }

    pub(crate) fn from_matrix_unchecked(values: DMatrix<f64>) -> Self {
        debug_assert!(values.ncols() > 0);
        Self(values)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.0[(i, c)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    /// Multiplies row `i` by `factors[i]`.
    pub fn scale_rows(&self, factors: &[f64]) -> Self {
        assert_eq!(factors.len(), self.n());
        let mut out = self.0.clone();
        for (i, &s) in factors.iter().enumerate() {
            out.row_mut(i).scale_mut(s);
        }
        Self(out)
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        (1..self.n()).all(|i| (0..self.dim()).all(|c| (self.0[(i, c)] - self.0[(0, c)]).abs() <= tol))
    }
}

impl Add for &NodeFunction {
    type Output = NodeFunction;

    fn add(self, rhs: &NodeFunction) -> NodeFunction {
        NodeFunction(&self.0 + &rhs.0)
    }
}

impl Sub for &NodeFunction {
    type Output = NodeFunction;

    fn sub(self, rhs: &NodeFunction) -> NodeFunction {
        NodeFunction(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &NodeFunction {
    type Output = NodeFunction;

    fn mul(self, rhs: f64) -> NodeFunction {
        NodeFunction(&self.0 * rhs)
    }
}

pub(crate) fn check_nodes(g: &WeightedGraph, f: &NodeFunction) -> Result<()> {
    if f.n() == g.n() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: g.n(),
            got: f.n(),
        })
    }
}

pub(crate) fn check_same_shape(f: &NodeFunction, h: &NodeFunction) -> Result<()> {
    if f.n() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            got: h.n(),
        });
    }
    if f.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: h.dim(),
        });
    }
    Ok(())
}

/// `∫ f dμ = Σ_i f(i) μ_i`, componentwise.
pub fn integrate(g: &WeightedGraph, f: &NodeFunction) -> Result<Vec<f64>> {
    check_nodes(g, f)?;
    let mut out = vec![0.0; f.dim()];
    for (i, &m) in g.mu().iter().enumerate() {
        for (c, acc) in out.iter_mut().enumerate() {
            *acc += f.get(i, c) * m;
        }
    }
    Ok(out)
}

/// `∫ f · h dμ = Σ_i μ_i f(i)·h(i)`.
pub fn mu_inner(g: &WeightedGraph, f: &NodeFunction, h: &NodeFunction) -> Result<f64> {
    check_nodes(g, f)?;
    check_same_shape(f, h)?;
    let mut total = 0.0;
    for (i, &m) in g.mu().iter().enumerate() {
        let mut dot = 0.0;
        for c in 0..f.dim() {
            dot += f.get(i, c) * h.get(i, c);
        }
        total += m * dot;
    }
    Ok(total)
}

/// `∫ ‖f‖² dμ`.
pub fn mu_norm_sq(g: &WeightedGraph, f: &NodeFunction) -> Result<f64> {
    mu_inner(g, f, f)
}

/// `∫ ∇f · ∇h dμ = ½ Σ_i Σ_{j∈N_i} ω_ij (f(j) − f(i))·(h(j) − h(i))`.
pub fn gradient_inner(g: &WeightedGraph, f: &NodeFunction, h: &NodeFunction) -> Result<f64> {
    check_nodes(g, f)?;
    check_same_shape(f, h)?;
    let mut total = 0.0;
    for i in 0..g.n() {
        for &(j, w) in g.neighbors(i) {
            let mut dot = 0.0;
            for c in 0..f.dim() {
                dot += (f.get(j, c) - f.get(i, c)) * (h.get(j, c) - h.get(i, c));
            }
            total += w * dot;
        }
    }
    Ok(0.5 * total)
}

/// Dirichlet integral `∫ ‖∇f‖² dμ`.
pub fn dirichlet(g: &WeightedGraph, f: &NodeFunction) -> Result<f64> {
    gradient_inner(g, f, f)
}

/// Pointwise gradient p-norm `(Σ_{j∈N_i} ω_ij ‖f(j) − f(i)‖_p^p / (2μ_i))^{1/p}`.
pub fn gradient_p_norm_at(g: &WeightedGraph, f: &NodeFunction, i: usize, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidP(p));
    }
    check_nodes(g, f)?;
    if i >= g.n() {
        return Err(Error::IndexOutOfRange { index: i, n: g.n() });
    }
    let mut sum = 0.0;
    for &(j, w) in g.neighbors(i) {
        let diff_p: f64 = (0..f.dim()).map(|c| (f.get(j, c) - f.get(i, c)).abs().powf(p)).sum();
        sum += w * diff_p;
    }
    Ok((sum / (2.0 * g.mu()[i])).powf(1.0 / p))
}

/// `(Δ_μ f)(i) = Σ_{j∈N_i} ω_ij (f(j) − f(i)) / μ_i`.
pub fn laplacian_apply(g: &WeightedGraph, f: &NodeFunction) -> Result<NodeFunction> {
    check_nodes(g, f)?;
    let d = f.dim();
    let mut out = DMatrix::zeros(g.n(), d);
    let mut acc = vec![0.0; d];
    for i in 0..g.n() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for &(j, w) in g.neighbors(i) {
            for (c, a) in acc.iter_mut().enumerate() {
                *a += w * (f.get(j, c) - f.get(i, c));
            }
        }
        let inv = 1.0 / g.mu()[i];
        for (c, a) in acc.iter().enumerate() {
            out[(i, c)] = a * inv;
        }
    }
    Ok(NodeFunction(out))
}

/// `Δ_μ^k f` by repeated application.
pub fn laplacian_power(g: &WeightedGraph, f: &NodeFunction, k: u32) -> Result<NodeFunction> {
    check_nodes(g, f)?;
    let mut cur = f.clone();
    for _ in 0..k {
        cur = laplacian_apply(g, &cur)?;
    }
    Ok(cur)
}

/// `|∫ Δf·h dμ + ∫ ∇f·∇h dμ|`, from the Laplacian route and the gradient
/// route independently. Zero up to rounding by integration by parts.
pub fn ibp_residual(g: &WeightedGraph, f: &NodeFunction, h: &NodeFunction) -> Result<f64> {
    check_same_shape(f, h)?;
    let lap = laplacian_apply(g, f)?;
    let lhs = mu_inner(g, &lap, h)?;
    let grad = gradient_inner(g, f, h)?;
    Ok((lhs + grad).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Preset, Topology};

    fn p2() -> WeightedGraph {
        WeightedGraph::new(2, &[(0, 1, 1.0)], vec![1.0, 1.0]).unwrap()
    }

    fn k22_rw() -> WeightedGraph {
        let t = Topology::new(4, &[(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        WeightedGraph::from_preset(&t, Preset::Rw).unwrap()
    }

    fn k3_rw() -> WeightedGraph {
        let t = Topology::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        WeightedGraph::from_preset(&t, Preset::Rw).unwrap()
    }

    #[test]
    fn node_function_validation() {
        assert_eq!(NodeFunction::new(DMatrix::zeros(3, 0)), Err(Error::ZeroWidth));
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 0)] = f64::NAN;
        assert_eq!(NodeFunction::new(m), Err(Error::NonFinite(1, 0)));
        assert!(NodeFunction::from_rows(2, 2, &[1.0, 2.0, 3.0]).is_err());
        let f = NodeFunction::from_rows(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.row(1), vec![3.0, 4.0]);
    }

    #[test]
    fn integration() {
        let f = NodeFunction::scalar(&[0.0, 1.0]).unwrap();
        assert_eq!(integrate(&p2(), &f).unwrap(), vec![1.0]);
        let f = NodeFunction::scalar(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(integrate(&k22_rw(), &f).unwrap(), vec![4.0]);
        assert_eq!(integrate(&k22_rw(), &NodeFunction::zeros(4, 3)).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            integrate(&p2(), &NodeFunction::zeros(3, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gradient_inner_products() {
        let f = NodeFunction::scalar(&[0.0, 1.0]).unwrap();
        assert_eq!(gradient_inner(&p2(), &f, &f).unwrap(), 1.0);
        let x = NodeFunction::scalar(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(gradient_inner(&k22_rw(), &x, &x).unwrap(), 4.0);
        let c = NodeFunction::constant(4, &[2.5, -1.0]).unwrap();
        assert_eq!(dirichlet(&k22_rw(), &c).unwrap(), 0.0);
    }

    #[test]
    fn gradient_p_norms() {
        let f = NodeFunction::scalar(&[0.0, 1.0]).unwrap();
        let v = gradient_p_norm_at(&p2(), &f, 0, 2.0).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);

        let star = WeightedGraph::new(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)], vec![1.0; 4]).unwrap();
        let f = NodeFunction::scalar(&[0.0, 1.0, 1.0, 1.0]).unwrap();
        let v = gradient_p_norm_at(&star, &f, 0, 2.0).unwrap();
        assert!((v - 1.5f64.sqrt()).abs() < 1e-15);

        let c = NodeFunction::constant(4, &[3.0]).unwrap();
        for p in [1.0, 1.5, 2.0, 7.0] {
            assert_eq!(gradient_p_norm_at(&star, &c, 2, p).unwrap(), 0.0);
        }
        assert_eq!(gradient_p_norm_at(&star, &c, 0, 0.5), Err(Error::InvalidP(0.5)));
        assert!(matches!(
            gradient_p_norm_at(&star, &c, 9, 2.0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn laplacian() {
        let f = NodeFunction::scalar(&[0.0, 1.0]).unwrap();
        let l = laplacian_apply(&p2(), &f).unwrap();
        assert_eq!(l, NodeFunction::scalar(&[1.0, -1.0]).unwrap());

        let f = NodeFunction::scalar(&[1.0, 0.0, 0.0]).unwrap();
        let l = laplacian_apply(&k3_rw(), &f).unwrap();
        assert_eq!(l, NodeFunction::scalar(&[-1.0, 0.5, 0.5]).unwrap());

        let c = NodeFunction::constant(3, &[4.0, -2.0]).unwrap();
        assert_eq!(laplacian_apply(&k3_rw(), &c).unwrap(), NodeFunction::zeros(3, 2));
    }

    #[test]
    fn ibp_on_small_graphs() {
        let f = NodeFunction::scalar(&[0.3, -1.2, 2.0, 0.7]).unwrap();
        let h = NodeFunction::scalar(&[1.0, 0.5, -0.25, 3.0]).unwrap();
        assert!(ibp_residual(&k22_rw(), &f, &h).unwrap() < 1e-14);
        let c = NodeFunction::constant(4, &[1.0]).unwrap();
        assert_eq!(ibp_residual(&k22_rw(), &c, &c).unwrap(), 0.0);
    }
}
