use crate::dst::{path_eigenvalues, transform, DstPlanner};
use crate::error::{Error, Result};
use crate::lattice::{boundary, BoxRegion, Site, SiteSet};
use crate::walk::{exit_structure, DirichletSolver, DomainGraph, SolverConfig};

use super::{Domain, FieldMeta, FieldSample};

/// `φ = ψ^U + ξ^U` on `U` (or on a window of it).
#[derive(Clone, Debug)]
pub struct GibbsMarkovSplit {
    pub inner: Domain,
    pub psi: FieldSample,
    pub xi: FieldSample,
}

/// Reusable Dirichlet solver for harmonic extensions into a fixed `U`.
pub struct HarmonicExtender {
    domain: SiteSet,
    solver: DirichletSolver,
    exits: SiteSet,
    /// For each exit site, the adjacent sites of `U`.
    adjacent: Vec<Vec<u32>>,
    inv_degree: f64,
}

impl HarmonicExtender {
    pub fn new(u: &SiteSet, cfg: &SolverConfig) -> Result<Self> {
        let d = u.dim().ok_or_else(|| Error::invalid("U", "domain must be nonempty"))?;
        let solver = DirichletSolver::new(DomainGraph::new(u), *cfg)?;
        let (exits, adjacent) = exit_structure(u);
        Ok(HarmonicExtender {
            domain: u.clone(),
            solver,
            exits,
            adjacent,
            inv_degree: 1.0 / (2 * d) as f64,
        })
    }

    pub fn domain(&self) -> &SiteSet {
        &self.domain
    }

    /// The exit sites `∂U` where boundary data is read.
    pub fn exits(&self) -> &SiteSet {
        &self.exits
    }

    /// Values of `E^x[f(X_{T_U})]` in the index order of `U`.
    pub fn extend(&self, f: impl Fn(&Site) -> Option<f64>) -> Result<Vec<f64>> {
        let mut rhs = vec![0.0; self.domain.len()];
        for (y, adj) in self.exits.iter().zip(&self.adjacent) {
            let v = f(y).ok_or_else(|| Error::MissingBoundaryValue(y.clone()))?;
            for &i in adj {
                rhs[i as usize] += self.inv_degree * v;
            }
        }
        self.solver.solve(&rhs)
    }
}

/// Discrete harmonic extension into a finite `U` of boundary data on `∂U`.
pub fn harmonic_extension(
    u: &SiteSet,
    boundary_values: impl Fn(&Site) -> Option<f64>,
    cfg: &SolverConfig,
) -> Result<FieldSample> {
    let ext = HarmonicExtender::new(u, cfg)?;
    let values = ext.extend(boundary_values)?;
    FieldSample::new(
        Domain::Sites(u.clone()),
        values,
        FieldMeta::derived("harmonic extension"),
    )
}

/// Harmonic extension into a box by a fast Poisson solve in the sine basis,
/// evaluated on `window ⊂ region`.
pub fn harmonic_extension_box(
    region: &BoxRegion,
    boundary_values: impl Fn(&Site) -> Option<f64>,
    window: &BoxRegion,
) -> Result<FieldSample> {
    if !region.contains_box(window) {
        return Err(Error::invalid("window", format!("{window:?} is not inside {region:?}")));
    }
    let d = region.dim();
    let shape = region.shape();
    // rhs_x = Σ f(y) over outside neighbors y; the 1/2d of P cancels the 2d
    // in the spectral inverse, leaving division by λ_k.
    let mut rhs = vec![0.0; region.len()];
    for axis in 0..d {
        for (side, step) in [
            (region.lower().coords()[axis], -1i64),
            (region.upper().coords()[axis], 1),
        ] {
            let mut lo = region.lower().clone();
            let mut hi = region.upper().clone();
            lo.coords_mut()[axis] = side;
            hi.coords_mut()[axis] = side;
            let face = BoxRegion::new(lo, hi)?;
            for x in face.iter() {
                let mut y = x.clone();
                y.coords_mut()[axis] += step;
                let v = boundary_values(&y).ok_or_else(|| Error::MissingBoundaryValue(y.clone()))?;
                rhs[region.index_of(&x).unwrap()] += v;
            }
        }
    }
    let plans = DstPlanner::new().plans_for(&shape);
    let full: Vec<_> = shape.iter().map(|&m| 0..m).collect();
    let mut coeffs = transform(rhs, &shape, &full, &plans);
    let eig: Vec<Vec<f64>> = shape.iter().map(|&m| path_eigenvalues(m)).collect();
    let mut k = vec![0usize; d];
    for c in coeffs.iter_mut() {
        let lambda: f64 = (0..d).map(|i| eig[i][k[i]]).sum();
        *c /= lambda;
        for i in (0..d).rev() {
            k[i] += 1;
            if k[i] < shape[i] {
                break;
            }
            k[i] = 0;
        }
    }
    let keep: Vec<_> = (0..d)
        .map(|i| {
            let lo = (window.lower().coords()[i] - region.lower().coords()[i]) as usize;
            lo..lo + window.side(i)
        })
        .collect();
    let values = transform(coeffs, &shape, &keep, &plans);
    FieldSample::new(
        Domain::Box(window.clone()),
        values,
        FieldMeta::derived("harmonic extension"),
    )
}

fn split_meta(field: &FieldSample, part: &str) -> FieldMeta {
    let mut meta = field.meta.clone();
    meta.law = super::Law::Derived;
    meta.note = Some(part.to_string());
    meta
}

/// Gibbs–Markov split of `field` on a finite `U` whose closure `U ∪ ∂U` lies
/// in the field's domain.
pub fn gibbs_markov_split(field: &FieldSample, u: &SiteSet, cfg: &SolverConfig) -> Result<GibbsMarkovSplit> {
    for x in u.iter() {
        if !field.domain.contains(x) {
            return Err(Error::domain("Gibbs-Markov split: U", x.clone()));
        }
    }
    if let Some(bb) = u.bounding_box() {
        if bb.len() == u.len() {
            return gibbs_markov_split_box(field, &bb, &bb);
        }
    }
    for y in boundary(u).iter() {
        if !field.domain.contains(y) {
            return Err(Error::domain("Gibbs-Markov split: exit sites of U", y.clone()));
        }
    }
    let xi = HarmonicExtender::new(u, cfg)?.extend(|y| field.get(y))?;
    let phi: Vec<f64> = u.iter().map(|x| field.get(x).unwrap()).collect();
    let psi = phi.iter().zip(&xi).map(|(p, x)| p - x).collect();
    let inner = Domain::Sites(u.clone());
    Ok(GibbsMarkovSplit {
        psi: FieldSample::new(inner.clone(), psi, split_meta(field, "psi"))?,
        xi: FieldSample::new(inner.clone(), xi, split_meta(field, "xi"))?,
        inner,
    })
}

/// Gibbs–Markov split on a box `region`, returning `ψ` and `ξ` on `window`.
pub fn gibbs_markov_split_box(field: &FieldSample, region: &BoxRegion, window: &BoxRegion) -> Result<GibbsMarkovSplit> {
    let inside = match field.region() {
        Some(fb) => fb.contains_box(region),
        None => region.iter().all(|x| field.domain.contains(&x)),
    };
    if !inside {
        let missing = region.iter().find(|x| !field.domain.contains(x)).unwrap();
        return Err(Error::domain("Gibbs-Markov split: U", missing));
    }
    let xi = harmonic_extension_box(region, |y| field.get(y), window).map_err(|e| match e {
        Error::MissingBoundaryValue(y) => Error::domain("Gibbs-Markov split: exit sites of U", y),
        other => other,
    })?;
    let psi_values = window
        .iter()
        .zip(&xi.values)
        .map(|(x, v)| {
            field
                .get(&x)
                .map(|p| p - v)
                .ok_or_else(|| Error::domain("Gibbs-Markov split: U", x.clone()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let inner = Domain::Box(window.clone());
    Ok(GibbsMarkovSplit {
        psi: FieldSample::new(inner.clone(), psi_values, split_meta(field, "psi"))?,
        xi: FieldSample {
            meta: split_meta(field, "xi"),
            ..xi
        },
        inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::harmonic_measure;

    #[test]
    fn constant_boundary_gives_constant_field() {
        let b = BoxRegion::new(Site::new([0, 0, 0]), Site::new([3, 2, 4])).unwrap();
        let xi = harmonic_extension_box(&b, |_| Some(2.5), &b).unwrap();
        assert!(xi.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
        let xs = harmonic_extension(&b.to_site_set(), |_| Some(2.5), &SolverConfig::default()).unwrap();
        assert!(xs.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn single_site_takes_neighbor_mean() {
        let u: SiteSet = [Site::origin(3)].into_iter().collect();
        let f = |y: &Site| Some((y.coords()[0] * 3 + y.coords()[1] * 5 + y.coords()[2] * 7) as f64 + 1.0);
        let xi = harmonic_extension(&u, f, &SolverConfig::default()).unwrap();
        let mean: f64 = Site::origin(3).neighbors().map(|y| f(&y).unwrap()).sum::<f64>() / 6.0;
        assert!((xi.values[0] - mean).abs() < 1e-14);
    }

    #[test]
    fn linear_data_is_reproduced() {
        let b = BoxRegion::centered(3, 3);
        let f = |y: &Site| Some(y.coords()[0] as f64);
        let xi = harmonic_extension_box(&b, f, &b).unwrap();
        for (x, v) in b.iter().zip(&xi.values) {
            assert!((v - x.coords()[0] as f64).abs() < 1e-11);
        }
    }

    #[test]
    fn missing_boundary_value_is_named() {
        let u: SiteSet = [Site::origin(3)].into_iter().collect();
        let hole = Site::axis(3, 2, -1);
        let r = harmonic_extension(&u, |y| (y != &hole).then_some(0.0), &SolverConfig::default());
        assert!(matches!(r, Err(Error::MissingBoundaryValue(s)) if s == hole));
    }

    #[test]
    fn box_and_general_solvers_agree_with_harmonic_measure() {
        let b = BoxRegion::new(Site::new([0, 0, 0]), Site::new([3, 4, 2])).unwrap();
        let f = |y: &Site| Some(((y.coords()[0] * 31 + y.coords()[1] * 17 - y.coords()[2] * 5) % 11) as f64);
        let fast = harmonic_extension_box(&b, f, &b).unwrap();
        let u = b.to_site_set();
        let slow = harmonic_extension(&u, f, &SolverConfig::default()).unwrap();
        for x in b.iter() {
            let h = harmonic_measure(&u, &x, &SolverConfig::default()).unwrap();
            let expect: f64 = h.exits.iter().zip(&h.weights).map(|(y, w)| w * f(y).unwrap()).sum();
            assert!((fast.get(&x).unwrap() - expect).abs() < 1e-11);
            assert!((slow.get(&x).unwrap() - expect).abs() < 1e-11);
        }
    }

    #[test]
    fn split_of_zero_field_is_zero() {
        let w = BoxRegion::centered(3, 4);
        let field = FieldSample::constant(&w, 0.0);
        let s = gibbs_markov_split(
            &field,
            &BoxRegion::centered(3, 2).to_site_set(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(s.psi.values.iter().chain(&s.xi.values).all(|v| *v == 0.0));
    }

    #[test]
    fn split_requires_exit_sites_in_domain() {
        let w = BoxRegion::centered(3, 2);
        let field = FieldSample::constant(&w, 1.0);
        let r = gibbs_markov_split(&field, &w.to_site_set(), &SolverConfig::default());
        assert!(matches!(r, Err(Error::DomainTooSmall { .. })));
    }
}
