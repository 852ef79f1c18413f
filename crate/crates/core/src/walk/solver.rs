//! Linear algebra for the killed walk on a finite domain: the operator
//! `I - P_U` (equivalently `(2d I - A_U) / 2d`), dense factorizations and a
//! conjugate-gradient fallback for large domains.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::lattice::{Site, SiteSet};

/// Dense/iterative solver settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Largest domain handled by a dense factorization.
    pub dense_cap: usize,
    /// Relative residual target of the iterative solver.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dense_cap: 4096,
            cg_tol: 1e-10,
            cg_max_iter: 200_000,
        }
    }
}

/// Sparse adjacency of a finite site set, in the set's index order.
#[derive(Clone, Debug)]
pub struct DomainGraph {
    dim: usize,
    /// `neighbors[i]` holds the in-domain ℓ1-neighbors of site `i`.
    neighbors: Vec<Vec<u32>>,
}

impl DomainGraph {
    pub fn new(u: &SiteSet) -> Self {
        let dim = u.dim().unwrap_or(0);
        let neighbors = u
            .iter()
            .map(|x| x.neighbors().filter_map(|y| u.index_of(&y).map(|j| j as u32)).collect())
            .collect();
        DomainGraph { dim, neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    /// `y = (I - P_U) x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let inv = 1.0 / (2 * self.dim) as f64;
        for (i, nb) in self.neighbors.iter().enumerate() {
            let s: f64 = nb.iter().map(|&j| x[j as usize]).sum();
            y[i] = x[i] - inv * s;
        }
    }

    /// Dense `I - P_U`.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let inv = 1.0 / (2 * self.dim) as f64;
        let mut m = DMatrix::<f64>::identity(n, n);
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                m[(i, j as usize)] -= inv;
            }
        }
        m
    }
}

/// A factorized or iterative solver for `(I - P_U) u = b`.
pub enum DirichletSolver {
    Dense(Cholesky<f64, Dyn>),
    Iterative { graph: DomainGraph, cfg: SolverConfig },
}

impl DirichletSolver {
    pub fn new(graph: DomainGraph, cfg: SolverConfig) -> Result<Self> {
        if graph.len() <= cfg.dense_cap {
            let chol = Cholesky::new(graph.dense())
                .ok_or_else(|| Error::invalid("domain", "I - P_U is not positive definite"))?;
            Ok(DirichletSolver::Dense(chol))
        } else {
            Ok(DirichletSolver::Iterative { graph, cfg })
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            DirichletSolver::Dense(chol) => {
                let x = chol.solve(&DVector::from_column_slice(b));
                Ok(x.as_slice().to_vec())
            }
            DirichletSolver::Iterative { graph, cfg } => conjugate_gradient(graph, b, cfg),
        }
    }
}

/// Conjugate gradients on the symmetric positive definite `I - P_U`.
pub fn conjugate_gradient(graph: &DomainGraph, b: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    let n = graph.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut rr = dot(&r, &r);
    for _ in 0..cfg.cg_max_iter {
        if rr.sqrt() <= cfg.cg_tol * bnorm {
            return Ok(x);
        }
        graph.apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= cfg.cg_tol * bnorm {
        Ok(x)
    } else {
        Err(Error::SolverStalled {
            iterations: cfg.cg_max_iter,
            residual: rr.sqrt() / bnorm,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Splits `U` into the linear system on `U` plus the list of exit sites `∂U`
/// with, for each exit site, the in-domain sites adjacent to it.
pub fn exit_structure(u: &SiteSet) -> (SiteSet, Vec<Vec<u32>>) {
    let exits = crate::lattice::boundary(u);
    let adj = exits
        .iter()
        .map(|y: &Site| y.neighbors().filter_map(|x| u.index_of(&x).map(|i| i as u32)).collect())
        .collect();
    (exits, adj)
}
