//! Harmonic measure, equilibrium measures and capacities.

use nalgebra::{Cholesky, DVector};

use super::green::{free_green_matrix, BoxGreen, FreeGreenConfig};
use super::solver::{exit_structure, DirichletSolver, DomainGraph, SolverConfig};
use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, Site, SiteSet};

/// Exit distribution `y ↦ P^x[X_{T_U} = y]` over `∂U`.
#[derive(Clone, Debug)]
pub struct HarmonicMeasure {
    pub exits: Vec<Site>,
    pub weights: Vec<f64>,
}

impl HarmonicMeasure {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn weight(&self, y: &Site) -> f64 {
        self.exits.iter().position(|e| e == y).map_or(0.0, |i| self.weights[i])
    }
}

/// Exact exit distribution of the walk started at `x ∈ U`.
pub fn harmonic_measure(u: &SiteSet, x: &Site, cfg: &SolverConfig) -> Result<HarmonicMeasure> {
    let ix = u.index_of(x).ok_or_else(|| Error::SiteOutsideDomain(x.clone()))?;
    let graph = DomainGraph::new(u);
    let d = graph.dim();
    let solver = DirichletSolver::new(graph, *cfg)?;
    let mut rhs = vec![0.0; u.len()];
    rhs[ix] = 1.0;
    // column x of g_U, equal to row x by symmetry
    let g = solver.solve(&rhs)?;
    let (exits, adj) = exit_structure(u);
    let inv = 1.0 / (2 * d) as f64;
    let weights = adj
        .iter()
        .map(|nb| inv * nb.iter().map(|&i| g[i as usize]).sum::<f64>())
        .collect();
    Ok(HarmonicMeasure {
        exits: exits.sites().to_vec(),
        weights,
    })
}

/// Where the walk is killed when computing an equilibrium measure.
#[derive(Clone, Debug)]
pub enum KillingDomain {
    Finite(SiteSet),
    WholeSpace(FreeGreenConfig),
}

/// `e_{K,U}(x) = P^x[H_K > T_U]` on `K` and its total mass `Cap_U(K)`.
#[derive(Clone, Debug)]
pub struct EquilibriumMeasure {
    pub target: SiteSet,
    /// `None` for the whole-space measure.
    pub domain: Option<SiteSet>,
    /// Weights in the index order of `target`.
    pub weights: Vec<f64>,
    pub capacity: f64,
}

impl EquilibriumMeasure {
    pub fn weight(&self, x: &Site) -> f64 {
        self.target.index_of(x).map_or(0.0, |i| self.weights[i])
    }
}

/// Equilibrium measure of `K` relative to a finite `U ⊃ K` or to Z^d.
///
/// The finite case solves the Dirichlet problem for
/// `u(y) = P^y[H_K < T_U]` on `U \ K` and reads off escape probabilities
/// after one step. The whole-space case solves `G_K e = 1` with the free
/// Green's matrix of `K` (last-exit decomposition).
pub fn equilibrium_and_capacity(k: &SiteSet, domain: &KillingDomain, cfg: &SolverConfig) -> Result<EquilibriumMeasure> {
    match domain {
        KillingDomain::Finite(u) => relative_equilibrium(k, u, cfg),
        KillingDomain::WholeSpace(gcfg) => whole_space_equilibrium(k, gcfg),
    }
}

fn relative_equilibrium(k: &SiteSet, u: &SiteSet, cfg: &SolverConfig) -> Result<EquilibriumMeasure> {
    if let Some(x) = k.iter().find(|x| !u.contains(x)) {
        return Err(Error::NotSubset(x.clone()));
    }
    if k.is_empty() {
        return Ok(EquilibriumMeasure {
            target: k.clone(),
            domain: Some(u.clone()),
            weights: Vec::new(),
            capacity: 0.0,
        });
    }
    let d = k.dim().unwrap();
    let inv = 1.0 / (2 * d) as f64;
    let free: SiteSet = u.iter().filter(|x| !k.contains(x)).cloned().collect();
    let hit = if free.is_empty() {
        Vec::new()
    } else {
        let graph = DomainGraph::new(&free);
        let rhs: Vec<f64> = free
            .iter()
            .map(|y| inv * y.neighbors().filter(|n| k.contains(n)).count() as f64)
            .collect();
        DirichletSolver::new(graph, *cfg)?.solve(&rhs)?
    };
    let weights: Vec<f64> = k
        .iter()
        .map(|x| {
            let escape: f64 = x
                .neighbors()
                .map(|y| {
                    if k.contains(&y) {
                        0.0
                    } else if let Some(j) = free.index_of(&y) {
                        1.0 - hit[j]
                    } else {
                        1.0
                    }
                })
                .sum();
            (inv * escape).clamp(0.0, 1.0)
        })
        .collect();
    let capacity = weights.iter().sum();
    Ok(EquilibriumMeasure {
        target: k.clone(),
        domain: Some(u.clone()),
        weights,
        capacity,
    })
}

fn whole_space_equilibrium(k: &SiteSet, gcfg: &FreeGreenConfig) -> Result<EquilibriumMeasure> {
    if k.is_empty() {
        return Ok(EquilibriumMeasure {
            target: k.clone(),
            domain: None,
            weights: Vec::new(),
            capacity: 0.0,
        });
    }
    let g = free_green_matrix(k, gcfg)?;
    let weights = solve_unit_rhs(g)?;
    let capacity = weights.iter().sum();
    Ok(EquilibriumMeasure {
        target: k.clone(),
        domain: None,
        weights,
        capacity,
    })
}

fn solve_unit_rhs(g: nalgebra::DMatrix<f64>) -> Result<Vec<f64>> {
    let n = g.nrows();
    let chol = Cholesky::new(g).ok_or_else(|| Error::invalid("K", "Green's matrix is not positive definite"))?;
    Ok(chol.solve(&DVector::from_element(n, 1.0)).as_slice().to_vec())
}

/// `Cap(K)`.
pub fn capacity(k: &SiteSet, gcfg: &FreeGreenConfig) -> Result<f64> {
    Ok(whole_space_equilibrium(k, gcfg)?.capacity)
}

/// `Cap_U(K)` for finite `U`.
pub fn relative_capacity(k: &SiteSet, u: &SiteSet, cfg: &SolverConfig) -> Result<f64> {
    Ok(relative_equilibrium(k, u, cfg)?.capacity)
}

/// `Cap_{B_M(c)}(K)` for each `M`, with `c` the center of `K`'s bounding box;
/// non-increasing in `M`, converging to `Cap(K)`.
pub fn capacity_box_sequence(k: &SiteSet, half_widths: &[i64]) -> Result<Vec<(i64, f64)>> {
    let bb = k.bounding_box().ok_or_else(|| Error::invalid("K", "empty set"))?;
    let center = Site::new((0..bb.dim()).map(|i| (bb.lower().coords()[i] + bb.upper().coords()[i]).div_euclid(2)));
    half_widths
        .iter()
        .map(|&m| {
            let region = BoxRegion::ball(&center, m);
            if let Some(x) = k.iter().find(|x| !region.contains(x)) {
                return Err(Error::NotSubset(x.clone()));
            }
            let mut bg = BoxGreen::new(region);
            let sites = k.sites();
            let n = sites.len();
            let mut g = nalgebra::DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = bg.eval(&sites[i], &sites[j]);
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
            }
            Ok((m, solve_unit_rhs(g)?.iter().sum()))
        })
        .collect()
}

/// Lower bound `|U| / max_{x ∈ U} Σ_{y ∈ U} g(x, y) <= Cap(U)`.
pub fn capacity_volume_bound(u: &SiteSet, gcfg: &FreeGreenConfig) -> Result<f64> {
    if u.is_empty() {
        return Ok(0.0);
    }
    let g = free_green_matrix(u, gcfg)?;
    let max_row = g
        .row_iter()
        .map(|r| r.iter().sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(u.len() as f64 / max_row)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> SiteSet {
        [Site::origin(3)].into_iter().collect()
    }

    #[test]
    fn harmonic_measure_of_single_site_is_uniform() {
        let h = harmonic_measure(&single(), &Site::origin(3), &SolverConfig::default()).unwrap();
        assert_eq!(h.exits.len(), 6);
        assert!(h.weights.iter().all(|&w| w == 1.0 / 6.0));
    }

    #[test]
    fn harmonic_measure_rejects_outside_start() {
        let r = harmonic_measure(&single(), &Site::axis(3, 1, 1), &SolverConfig::default());
        assert!(matches!(r, Err(Error::SiteOutsideDomain(_))));
    }

    #[test]
    fn harmonic_measure_of_unit_ball_is_symmetric() {
        let u = BoxRegion::centered(3, 1).to_site_set();
        let h = harmonic_measure(&u, &Site::origin(3), &SolverConfig::default()).unwrap();
        assert!((h.total() - 1.0).abs() < 1e-12);
        for (y, w) in h.exits.iter().zip(&h.weights) {
            let mut perm = y.coords().to_vec();
            perm.rotate_left(1);
            let flipped = Site::new(y.coords().iter().map(|c| -c));
            assert!((h.weight(&Site::new(perm)) - w).abs() < 1e-14);
            assert!((h.weight(&flipped) - w).abs() < 1e-14);
        }
    }

    #[test]
    fn equilibrium_when_target_is_domain() {
        let e =
            equilibrium_and_capacity(&single(), &KillingDomain::Finite(single()), &SolverConfig::default()).unwrap();
        assert_eq!(e.weights, vec![1.0]);
    }

    #[test]
    fn target_outside_domain_is_rejected() {
        let k: SiteSet = [Site::axis(3, 0, 5)].into_iter().collect();
        let r = equilibrium_and_capacity(&k, &KillingDomain::Finite(single()), &SolverConfig::default());
        assert!(matches!(r, Err(Error::NotSubset(_))));
    }

    #[test]
    fn box_sequence_decreases_towards_whole_space_value() {
        let k: SiteSet = BoxRegion::centered(3, 1).to_site_set();
        let seq = capacity_box_sequence(&k, &[4, 8, 16, 32, 64]).unwrap();
        for w in seq.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        let cap = capacity(&k, &FreeGreenConfig::default()).unwrap();
        let last = seq.last().unwrap().1;
        assert!(cap <= last && (last - cap) / cap < 0.05, "{cap} {last}");
    }
}
