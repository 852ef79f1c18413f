//! Samplers for the Dirichlet GFF `ψ^U`, harmonic extensions `ξ^U` and the
//! Gibbs–Markov split `φ = ψ^U + ξ^U`.

mod harmonic;
mod io;

pub use harmonic::{
    gibbs_markov_split, gibbs_markov_split_box, harmonic_extension, harmonic_extension_box, GibbsMarkovSplit,
    HarmonicExtender,
};
pub use io::{read_field, write_field, MAGIC};

use nalgebra::{Cholesky, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::dst::{path_eigenvalues, transform, Dst1, DstPlanner};
use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, Site, SiteSet};
use crate::rng::SampleStream;
use crate::walk::{BoxGreen, DomainGraph, FreeGreenConfig, SolverConfig};

/// Default padding factor `κ` of the whole-space surrogate `ψ^{B_{κN}}|_{B_N}`.
pub const DEFAULT_KAPPA: i64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    DirichletBox,
    DirichletDense,
    Derived,
}

/// Everything needed to regenerate a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub law: Law,
    pub seed: u64,
    pub sample_index: u64,
    /// Box on which the Dirichlet field was sampled, when it differs from
    /// the stored domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<BoxRegion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FieldMeta {
    pub fn new(law: Law, seed: u64, sample_index: u64) -> Self {
        FieldMeta {
            law,
            seed,
            sample_index,
            source: None,
            kappa: None,
            scale: None,
            separation: None,
            note: None,
        }
    }

    pub fn derived(note: impl Into<String>) -> Self {
        FieldMeta {
            note: Some(note.into()),
            ..Self::new(Law::Derived, 0, 0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Box(BoxRegion),
    Sites(SiteSet),
}

impl Domain {
    pub fn len(&self) -> usize {
        match self {
            Domain::Box(b) => b.len(),
            Domain::Sites(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box(b) => b.dim(),
            Domain::Sites(s) => s.dim().unwrap_or(0),
        }
    }

    pub fn index_of(&self, x: &Site) -> Option<usize> {
        match self {
            Domain::Box(b) => b.index_of(x),
            Domain::Sites(s) => s.index_of(x),
        }
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.index_of(x).is_some()
    }

    pub fn site_at(&self, i: usize) -> Site {
        match self {
            Domain::Box(b) => b.site_at(i),
            Domain::Sites(s) => s.sites()[i].clone(),
        }
    }

    pub fn sites(&self) -> Box<dyn Iterator<Item = Site> + '_> {
        match self {
            Domain::Box(b) => Box::new(b.iter()),
            Domain::Sites(s) => Box::new(s.iter().cloned()),
        }
    }

    pub fn as_box(&self) -> Option<&BoxRegion> {
        match self {
            Domain::Box(b) => Some(b),
            Domain::Sites(_) => None,
        }
    }

    pub fn to_site_set(&self) -> SiteSet {
        match self {
            Domain::Box(b) => b.to_site_set(),
            Domain::Sites(s) => s.clone(),
        }
    }
}

/// A real field on a finite domain, with the values stored in the domain's
/// index order (row-major for boxes).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub domain: Domain,
    pub values: Vec<f64>,
    pub meta: FieldMeta,
}

impl FieldSample {
    pub fn new(domain: Domain, values: Vec<f64>, meta: FieldMeta) -> Result<Self> {
        if domain.len() != values.len() {
            return Err(Error::invalid(
                "values",
                format!("{} values for {} sites", values.len(), domain.len()),
            ));
        }
        Ok(FieldSample { domain, values, meta })
    }

    /// Field on a box given by a function of the site.
    pub fn from_fn(region: &BoxRegion, f: impl Fn(&Site) -> f64) -> Self {
        let values = region.iter().map(|x| f(&x)).collect();
        FieldSample {
            domain: Domain::Box(region.clone()),
            values,
            meta: FieldMeta::derived("from_fn"),
        }
    }

    pub fn constant(region: &BoxRegion, c: f64) -> Self {
        FieldSample {
            domain: Domain::Box(region.clone()),
            values: vec![c; region.len()],
            meta: FieldMeta::derived("constant"),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn get(&self, x: &Site) -> Option<f64> {
        self.domain.index_of(x).map(|i| self.values[i])
    }

    pub fn region(&self) -> Option<&BoxRegion> {
        self.domain.as_box()
    }

    /// Restriction to a sub-box of the domain.
    pub fn restrict_box(&self, sub: &BoxRegion) -> Result<FieldSample> {
        let values = sub
            .iter()
            .map(|x| self.get(&x).ok_or_else(|| Error::domain("restrict", x.clone())))
            .collect::<Result<_>>()?;
        Ok(FieldSample {
            domain: Domain::Box(sub.clone()),
            values,
            meta: self.meta.clone(),
        })
    }

    pub fn restrict_sites(&self, sub: &SiteSet) -> Result<FieldSample> {
        let values = sub
            .iter()
            .map(|x| self.get(x).ok_or_else(|| Error::domain("restrict", x.clone())))
            .collect::<Result<_>>()?;
        Ok(FieldSample {
            domain: Domain::Sites(sub.clone()),
            values,
            meta: self.meta.clone(),
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Spectral sampler of `ψ^B` for a box `B`, emitting the field on a
/// sub-window. Plans and spectral scales are shared across samples.
pub struct SpectralSampler {
    region: BoxRegion,
    window: BoxRegion,
    shape: Vec<usize>,
    keep: Vec<std::ops::Range<usize>>,
    /// `sqrt(2d / λ_k)` in row-major coefficient order.
    scales: Vec<f64>,
    plans: Vec<Dst1>,
    kappa: Option<i64>,
}

impl SpectralSampler {
    pub fn new(region: &BoxRegion, window: &BoxRegion) -> Result<Self> {
        if !region.contains_box(window) {
            return Err(Error::invalid("window", format!("{window:?} is not inside {region:?}")));
        }
        let d = region.dim();
        let shape = region.shape();
        let eig: Vec<Vec<f64>> = shape.iter().map(|&m| path_eigenvalues(m)).collect();
        let mut scales = Vec::with_capacity(region.len());
        let mut k = vec![0usize; d];
        for _ in 0..region.len() {
            let lambda: f64 = (0..d).map(|i| eig[i][k[i]]).sum();
            scales.push((2.0 * d as f64 / lambda).sqrt());
            for i in (0..d).rev() {
                k[i] += 1;
                if k[i] < shape[i] {
                    break;
                }
                k[i] = 0;
            }
        }
        let keep = (0..d)
            .map(|i| {
                let lo = (window.lower().coords()[i] - region.lower().coords()[i]) as usize;
                lo..lo + window.side(i)
            })
            .collect();
        let plans = DstPlanner::new().plans_for(&shape);
        Ok(SpectralSampler {
            region: region.clone(),
            window: window.clone(),
            shape,
            keep,
            scales,
            plans,
            kappa: None,
        })
    }

    /// Surrogate of the whole-space field on `B_N`: `ψ^{B_{κN}}` restricted
    /// to `B_N`.
    pub fn padded(d: usize, n: i64, kappa: i64) -> Result<Self> {
        if kappa < 1 {
            return Err(Error::invalid("kappa", "padding factor must be >= 1"));
        }
        let mut s = Self::new(&BoxRegion::centered(d, kappa * n), &BoxRegion::centered(d, n))?;
        s.kappa = Some(kappa);
        Ok(s)
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn window(&self) -> &BoxRegion {
        &self.window
    }

    pub fn sample(&self, seed: u64, sample_index: u64) -> FieldSample {
        let mut stream = SampleStream::new(seed, sample_index);
        let coeffs: Vec<f64> = self.scales.iter().map(|s| s * stream.gaussian()).collect();
        let values = transform(coeffs, &self.shape, &self.keep, &self.plans);
        let mut meta = FieldMeta::new(Law::DirichletBox, seed, sample_index);
        if self.window != self.region {
            meta.source = Some(self.region.clone());
        }
        meta.kappa = self.kappa;
        FieldSample {
            domain: Domain::Box(self.window.clone()),
            values,
            meta,
        }
    }
}

/// Exact sample of `ψ^B` on a box, sample index 0 of the stream `seed`.
pub fn sample_dirichlet_spectral(region: &BoxRegion, seed: u64) -> Result<FieldSample> {
    Ok(SpectralSampler::new(region, region)?.sample(seed, 0))
}

/// Dense sampler of `ψ^U` for an arbitrary finite `U`.
///
/// Factorizes the precision `I - P_U = L Lᵀ`; then `L^{-ᵀ} Z` has covariance
/// `(I - P_U)^{-1} = g_U`.
pub struct DenseSampler {
    domain: SiteSet,
    chol: Cholesky<f64, Dyn>,
}

impl DenseSampler {
    pub fn new(u: &SiteSet, cfg: &SolverConfig) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::invalid("U", "domain must be nonempty"));
        }
        if u.len() > cfg.dense_cap {
            return Err(Error::CapacityExceeded {
                size: u.len(),
                cap: cfg.dense_cap,
            });
        }
        let chol = Cholesky::new(DomainGraph::new(u).dense())
            .ok_or_else(|| Error::invalid("U", "I - P_U is not positive definite"))?;
        Ok(DenseSampler {
            domain: u.clone(),
            chol,
        })
    }

    pub fn sample(&self, seed: u64, sample_index: u64) -> FieldSample {
        let mut stream = SampleStream::new(seed, sample_index);
        let n = self.domain.len();
        let z = DVector::from_fn(n, |_, _| stream.gaussian());
        let x = self
            .chol
            .l_dirty()
            .tr_solve_lower_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        FieldSample {
            domain: Domain::Sites(self.domain.clone()),
            values: x.as_slice().to_vec(),
            meta: FieldMeta::new(Law::DirichletDense, seed, sample_index),
        }
    }
}

pub fn sample_dirichlet_dense(u: &SiteSet, seed: u64, cfg: &SolverConfig) -> Result<FieldSample> {
    Ok(DenseSampler::new(u, cfg)?.sample(seed, 0))
}

/// Covariance deficit `g(x, x) - g_{B_{κN}}(x, x)` of the surrogate at the
/// center and at a corner of `B_N`.
pub fn variance_deficit(d: usize, n: i64, kappa: i64, gcfg: &FreeGreenConfig) -> Result<(f64, f64)> {
    let origin = Site::origin(d);
    let g0 = crate::walk::free_green(&origin, &origin, gcfg)?.value;
    let mut bg = BoxGreen::new(BoxRegion::centered(d, kappa * n));
    let corner = Site::splat(d, n);
    Ok((g0 - bg.eval(&origin, &origin), g0 - bg.eval(&corner, &corner)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_sample_is_standard_gaussian() {
        let b = BoxRegion::centered(3, 0);
        let s = SpectralSampler::new(&b, &b).unwrap();
        let n = 20_000;
        let var = (0..n).map(|i| s.sample(5, i).values[0].powi(2)).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
        // 1x1x1: coefficient scale sqrt(6/6) and unit transform
        let mut st = SampleStream::new(5, 0);
        assert!((s.sample(5, 0).values[0] - st.gaussian()).abs() < 1e-15);
    }

    #[test]
    fn samples_are_reproducible() {
        let b = BoxRegion::centered(3, 3);
        let a = sample_dirichlet_spectral(&b, 9).unwrap();
        let c = sample_dirichlet_spectral(&b, 9).unwrap();
        assert_eq!(a, c);
        assert_ne!(a.values, sample_dirichlet_spectral(&b, 10).unwrap().values);
    }

    #[test]
    fn window_sample_is_restriction_of_full_sample() {
        let region = BoxRegion::centered(3, 6);
        let window = BoxRegion::new(Site::new([-2, 0, -6]), Site::new([1, 4, 6])).unwrap();
        let full = SpectralSampler::new(&region, &region).unwrap().sample(3, 2);
        let part = SpectralSampler::new(&region, &window).unwrap().sample(3, 2);
        for x in window.iter() {
            assert!((full.get(&x).unwrap() - part.get(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_sampler_rejects_oversized_domain() {
        let u = BoxRegion::centered(3, 2).to_site_set();
        let cfg = SolverConfig {
            dense_cap: 8,
            ..SolverConfig::default()
        };
        assert!(matches!(
            DenseSampler::new(&u, &cfg),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn deficit_decreases_with_padding() {
        let cfg = FreeGreenConfig::with_tol(1e-8);
        let d: Vec<(f64, f64)> = [2, 3, 4]
            .iter()
            .map(|&k| variance_deficit(3, 4, k, &cfg).unwrap())
            .collect();
        for w in d.windows(2) {
            assert!(w[1].0 < w[0].0 && w[1].1 < w[0].1);
        }
        assert!(d.iter().all(|p| p.0 > 0.0 && p.1 > p.0));
    }
}
