//! Green's functions of the simple random walk.
//!
//! * [`killed_green`] inverts `I - P_U` densely on an arbitrary finite domain.
//! * [`BoxGreen`] evaluates the killed Green's function of a rectangular box
//!   from the sine eigenbasis of the Dirichlet Laplacian. Writing
//!   `1/λ = ∫ e^{-λt} dt` makes every eigen-sum separable, so an entry costs
//!   `O(nodes · Σ m_i)` instead of a solve.
//! * [`free_green`] approximates `g(x, y)` on Z^d from below by
//!   `g_{B_M}(x, y)` on doubling boxes centered at `x`, and extrapolates.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::solver::{DomainGraph, SolverConfig};
use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, Site, SiteSet};

/// `g_U(x, y)` for `x, y` in a finite domain `U`.
#[derive(Clone, Debug)]
pub struct KilledGreenOperator {
    domain: SiteSet,
    kernel: DMatrix<f64>,
}

impl KilledGreenOperator {
    pub fn domain(&self) -> &SiteSet {
        &self.domain
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    /// `g_U(x, y)`, zero when either point lies outside `U`.
    pub fn get(&self, x: &Site, y: &Site) -> f64 {
        match (self.domain.index_of(x), self.domain.index_of(y)) {
            (Some(i), Some(j)) => self.kernel[(i, j)],
            _ => 0.0,
        }
    }

    /// Restriction to `K × K` for `K ⊂ U`.
    pub fn restrict(&self, k: &SiteSet) -> Result<DMatrix<f64>> {
        let idx: Vec<usize> = k
            .iter()
            .map(|x| self.domain.index_of(x).ok_or_else(|| Error::NotSubset(x.clone())))
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(idx.len(), idx.len(), |a, b| {
            self.kernel[(idx[a], idx[b])]
        }))
    }
}

/// Exact killed Green's function: solves `(2d I - A_U) G = 2d I`.
pub fn killed_green(u: &SiteSet, cfg: &SolverConfig) -> Result<KilledGreenOperator> {
    if u.is_empty() {
        return Err(Error::invalid("U", "domain must be nonempty"));
    }
    if u.len() > cfg.dense_cap {
        return Err(Error::CapacityExceeded {
            size: u.len(),
            cap: cfg.dense_cap,
        });
    }
    let q = DomainGraph::new(u).dense();
    let chol = nalgebra::Cholesky::new(q).ok_or_else(|| Error::invalid("U", "I - P_U is not positive definite"))?;
    let mut kernel = chol.inverse();
    // symmetrize away rounding so that g_U(x, y) == g_U(y, x) bitwise
    let n = kernel.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (kernel[(i, j)] + kernel[(j, i)]);
            kernel[(i, j)] = v;
            kernel[(j, i)] = v;
        }
    }
    Ok(KilledGreenOperator {
        domain: u.clone(),
        kernel,
    })
}

/// Trapezoid step in `s = ln t`.
const LOG_STEP: f64 = 1.0 / 12.0;
const LOG_T_MIN: f64 = -38.0;
/// The integrand is cut once `exp(-t Σ μ_min)` falls below `e^{-TAIL}`.
const TAIL: f64 = 60.0;

#[derive(Debug)]
struct AxisSpectrum {
    m: usize,
    /// `exp(-μ_k t_j)`, row `j`, column `k - 1`.
    decay: Vec<f64>,
    /// `sin(π r / (m + 1))` for `r` in `0..2(m + 1)`.
    sines: Vec<f64>,
}

impl AxisSpectrum {
    fn new(m: usize, nodes: &[f64]) -> Self {
        let denom = (m + 1) as f64;
        let mu: Vec<f64> = (1..=m).map(|k| 2.0 * (1.0 - (PI * k as f64 / denom).cos())).collect();
        let mut decay = Vec::with_capacity(nodes.len() * m);
        for &t in nodes {
            decay.extend(mu.iter().map(|&u| (-u * t).exp()));
        }
        let sines = (0..2 * (m + 1)).map(|r| (PI * r as f64 / denom).sin()).collect();
        AxisSpectrum { m, decay, sines }
    }

    /// `Σ_k exp(-μ_k t_j) φ_k(a) φ_k(b)` for every node `j`, with
    /// `φ_k(j) = sqrt(2/(m+1)) sin(π k j/(m+1))` and `a, b ∈ [1, m]`.
    fn heat_kernel(&self, a: usize, b: usize, n_nodes: usize) -> Vec<f64> {
        let m = self.m;
        let period = 2 * (m + 1);
        let norm = 2.0 / (m + 1) as f64;
        let w: Vec<f64> = (1..=m)
            .map(|k| norm * self.sines[(k * a) % period] * self.sines[(k * b) % period])
            .collect();
        (0..n_nodes)
            .map(|j| {
                let row = &self.decay[j * m..(j + 1) * m];
                row.iter().zip(&w).map(|(e, w)| e * w).sum()
            })
            .collect()
    }
}

/// Spectral evaluator of `g_B(x, y)` for a rectangular box `B`.
#[derive(Debug)]
pub struct BoxGreen {
    region: BoxRegion,
    /// `(t_j, w_j)` trapezoid nodes and weights for `∫_0^∞ · dt`.
    nodes: Vec<(f64, f64)>,
    axes: Vec<Arc<AxisSpectrum>>,
    cache: HashMap<(usize, usize, usize), Arc<Vec<f64>>>,
}

impl BoxGreen {
    pub fn new(region: BoxRegion) -> Self {
        let shape = region.shape();
        let gap: f64 = shape.iter().map(|&m| 2.0 * (1.0 - (PI / (m + 1) as f64).cos())).sum();
        let s_max = (TAIL / gap).ln();
        let n_nodes = ((s_max - LOG_T_MIN) / LOG_STEP).ceil() as usize + 1;
        let nodes: Vec<(f64, f64)> = (0..n_nodes)
            .map(|j| {
                let t = (LOG_T_MIN + j as f64 * LOG_STEP).exp();
                (t, LOG_STEP * t)
            })
            .collect();
        let ts: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        let mut by_len: HashMap<usize, Arc<AxisSpectrum>> = HashMap::new();
        let axes = shape
            .iter()
            .map(|&m| {
                by_len
                    .entry(m)
                    .or_insert_with(|| Arc::new(AxisSpectrum::new(m, &ts)))
                    .clone()
            })
            .collect();
        BoxGreen {
            region,
            nodes,
            axes,
            cache: HashMap::new(),
        }
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    fn axis_kernel(&mut self, axis: usize, a: usize, b: usize) -> Arc<Vec<f64>> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let m = self.axes[axis].m;
        let n = self.nodes.len();
        let spec = &self.axes[axis];
        self.cache
            .entry((m, a, b))
            .or_insert_with(|| Arc::new(spec.heat_kernel(a, b, n)))
            .clone()
    }

    /// `g_B(x, y)`; zero unless both points lie in the box.
    pub fn eval(&mut self, x: &Site, y: &Site) -> f64 {
        if !self.region.contains(x) || !self.region.contains(y) {
            return 0.0;
        }
        let d = self.region.dim();
        let lower = self.region.lower().clone();
        let kernels: Vec<Arc<Vec<f64>>> = (0..d)
            .map(|i| {
                let a = (x.coords()[i] - lower.coords()[i] + 1) as usize;
                let b = (y.coords()[i] - lower.coords()[i] + 1) as usize;
                self.axis_kernel(i, a, b)
            })
            .collect();
        let mut total = 0.0;
        for (j, &(_, w)) in self.nodes.iter().enumerate() {
            let mut p = w;
            for k in &kernels {
                p *= k[j];
            }
            total += p;
        }
        2.0 * d as f64 * total
    }
}

/// Stopping rule and search range for [`free_green`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeGreenConfig {
    /// Absolute tolerance on successive extrapolated values.
    pub tol: f64,
    /// Smallest half-width of the approximating boxes.
    pub m0: i64,
    /// Largest half-width tried before reporting non-convergence.
    pub max_m: i64,
}

impl Default for FreeGreenConfig {
    fn default() -> Self {
        FreeGreenConfig {
            tol: 1e-9,
            m0: 8,
            max_m: 1 << 14,
        }
    }
}

impl FreeGreenConfig {
    pub fn with_tol(tol: f64) -> Self {
        FreeGreenConfig { tol, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenIterate {
    /// Half-width of the box `B_M(x)`.
    pub m: i64,
    /// `g_{B_M(x)}(x, y)`, increasing in `M`.
    pub lower: f64,
    /// Richardson-extrapolated estimate, once enough iterates exist.
    pub extrapolated: Option<f64>,
}

/// Result of [`free_green`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenEstimate {
    /// Extrapolated estimate of `g(x, y)`.
    pub value: f64,
    /// Certified lower bound `g_{B_M}(x, y)` at the final `M`.
    pub lower: f64,
    pub m: i64,
    pub trace: Vec<GreenIterate>,
}

/// Richardson table for `g - g_M = a_1/M + a_2/M^2 + a_3/M^3 + ...` on
/// doubling `M`; returns the highest-order entry using the last three
/// iterates.
fn richardson(raw: &[f64]) -> Option<f64> {
    let n = raw.len();
    if n < 3 {
        return None;
    }
    let (g0, g1, g2) = (raw[n - 3], raw[n - 2], raw[n - 1]);
    let r1a = 2.0 * g1 - g0;
    let r1b = 2.0 * g2 - g1;
    Some((4.0 * r1b - r1a) / 3.0)
}

/// Canonical representative of a displacement under the symmetries of Z^d
/// (coordinate reflections and permutations).
pub fn canonical_displacement(v: &Site) -> Site {
    let mut c: Vec<i64> = v.coords().iter().map(|x| x.abs()).collect();
    c.sort_unstable();
    Site::new(c)
}

/// Batch evaluation of the free Green's function at many displacements,
/// sharing the per-axis spectral tables between them.
pub fn free_green_table(
    d: usize,
    displacements: &[Site],
    cfg: &FreeGreenConfig,
) -> Result<HashMap<Site, GreenEstimate>> {
    if d < crate::lattice::MIN_DIM {
        return Err(Error::invalid("d", format!("dimension must be >= 3, got {d}")));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::invalid("tol", "tolerance must be positive"));
    }
    let mut keys: Vec<Site> = displacements.iter().map(canonical_displacement).collect();
    keys.sort_unstable();
    keys.dedup();
    let reach = keys.iter().map(Site::norm_inf).max().unwrap_or(0);
    let mut m = cfg.m0.max(1);
    while m < 2 * reach + 2 {
        m *= 2;
    }
    let mut raw: HashMap<Site, Vec<f64>> = keys.iter().map(|k| (k.clone(), Vec::new())).collect();
    let mut traces: HashMap<Site, Vec<GreenIterate>> = keys.iter().map(|k| (k.clone(), Vec::new())).collect();
    let mut done: HashMap<Site, GreenEstimate> = HashMap::new();
    let origin = Site::origin(d);
    loop {
        if m > cfg.max_m {
            // report the worst unconverged key
            let k = keys.iter().find(|k| !done.contains_key(*k)).unwrap();
            let t = &traces[k];
            let n = t.len();
            let get = |i: usize| t[i].extrapolated.unwrap_or(t[i].lower);
            return Err(Error::NonConvergence {
                max_m: cfg.max_m,
                previous: if n >= 2 { get(n - 2) } else { f64::NAN },
                last: if n >= 1 { get(n - 1) } else { f64::NAN },
            });
        }
        log::debug!("free Green: M = {m}, {} displacements pending", keys.len() - done.len());
        let mut bg = BoxGreen::new(BoxRegion::centered(d, m));
        let pending: Vec<Site> = keys.iter().filter(|k| !done.contains_key(*k)).cloned().collect();
        for k in &pending {
            let g = bg.eval(&origin, k);
            let r = raw.get_mut(k).unwrap();
            r.push(g);
            let ex = richardson(r);
            let t = traces.get_mut(k).unwrap();
            t.push(GreenIterate {
                m,
                lower: g,
                extrapolated: ex,
            });
            let n = t.len();
            if n >= 2 {
                if let (Some(a), Some(b)) = (t[n - 2].extrapolated, t[n - 1].extrapolated) {
                    if (a - b).abs() < cfg.tol {
                        done.insert(
                            k.clone(),
                            GreenEstimate {
                                value: b,
                                lower: g,
                                m,
                                trace: t.clone(),
                            },
                        );
                    }
                }
            }
        }
        if done.len() == keys.len() {
            return Ok(done);
        }
        m *= 2;
    }
}

/// Free Green's function `g(x, y)` on Z^d, `d >= 3`.
///
/// Iterates `g_{B_M(x)}(x, y)` over doubling `M`; stops once two successive
/// Richardson-extrapolated values differ by less than `cfg.tol`.
pub fn free_green(x: &Site, y: &Site, cfg: &FreeGreenConfig) -> Result<GreenEstimate> {
    let v = y.sub(x);
    let mut table = free_green_table(x.dim(), std::slice::from_ref(&v), cfg)?;
    Ok(table.remove(&canonical_displacement(&v)).unwrap())
}

/// Free Green's matrix `[g(x, y)]_{x, y ∈ K}`.
pub fn free_green_matrix(k: &SiteSet, cfg: &FreeGreenConfig) -> Result<DMatrix<f64>> {
    let d = k.dim().ok_or_else(|| Error::invalid("K", "empty set"))?;
    let sites = k.sites();
    let mut disp = Vec::new();
    for (i, x) in sites.iter().enumerate() {
        for y in &sites[i..] {
            disp.push(y.sub(x));
        }
    }
    let table = free_green_table(d, &disp, cfg)?;
    let n = sites.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = table[&canonical_displacement(&sites[j].sub(&sites[i]))].value;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_green_is_one() {
        let u: SiteSet = [Site::origin(3)].into_iter().collect();
        let g = killed_green(&u, &SolverConfig::default()).unwrap();
        assert_eq!(g.get(&Site::origin(3), &Site::origin(3)), 1.0);
    }

    #[test]
    fn two_site_green_matches_hand_solution() {
        let e1 = Site::axis(3, 0, 1);
        let u: SiteSet = [Site::origin(3), e1.clone()].into_iter().collect();
        let g = killed_green(&u, &SolverConfig::default()).unwrap();
        assert!((g.get(&Site::origin(3), &Site::origin(3)) - 36.0 / 35.0).abs() < 1e-12);
        assert!((g.get(&Site::origin(3), &e1) - 6.0 / 35.0).abs() < 1e-12);
    }

    #[test]
    fn killed_green_rejects_oversized_domains() {
        let u = BoxRegion::centered(3, 2).to_site_set();
        let cfg = SolverConfig {
            dense_cap: 10,
            ..SolverConfig::default()
        };
        assert!(matches!(
            killed_green(&u, &cfg),
            Err(Error::CapacityExceeded { size: 125, cap: 10 })
        ));
    }

    #[test]
    fn spectral_box_green_matches_dense_solve() {
        let b = BoxRegion::new(Site::new([-2, -1, 0]), Site::new([2, 2, 3])).unwrap();
        let dense = killed_green(&b.to_site_set(), &SolverConfig::default()).unwrap();
        let mut spec = BoxGreen::new(b.clone());
        for x in b.iter().step_by(7) {
            for y in b.iter().step_by(5) {
                let a = dense.get(&x, &y);
                let s = spec.eval(&x, &y);
                assert!((a - s).abs() < 1e-12, "{x} {y}: {a} vs {s}");
            }
        }
    }

    #[test]
    fn free_green_is_symmetric_under_reflections() {
        let cfg = FreeGreenConfig::with_tol(1e-7);
        let a = free_green(&Site::origin(3), &Site::new([2, -1, 0]), &cfg).unwrap();
        let b = free_green(&Site::new([5, 5, 5]), &Site::new([4, 5, 7]), &cfg).unwrap();
        assert_eq!(a.value, b.value);
        assert!(a.lower <= a.value);
    }
}
