//! Monte Carlo estimation of level-set events on the padded Dirichlet
//! surrogate of the whole-space field.

pub mod capacity;
pub mod hstar;
pub mod stretch;
pub mod tube;

pub use capacity::{
    capacity_exposed, capacity_growth_study, exposed_sites, separated_boxes, union_capacity, CapacityRow,
    CapacityStudy, GrowthShape, UnionCapacityRow,
};
pub use hstar::{bisect_h_star, crossing, estimate_h_star, BracketMethod, CrossingRow, HStarEstimate};
pub use stretch::{
    calibrate_stretch_constant, fit_decay_models, fit_rows, is_non_increasing, stretch_row, stretch_samples,
    stretch_tail_curve, DecayFit, DecayModel, StretchCurve, StretchRow,
};
pub use tube::{
    build_tube, lower_bound_events, lower_bound_study, plant_insulation, FMode, LowerBoundReport, LowerBoundStudy,
    TubeAnalyzer, TubeRegion, TubeStudyConfig,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{variance_deficit, FieldSample, SpectralSampler, DEFAULT_KAPPA};
use crate::lattice::{coarse_cover, BoxRegion, RenormIndex, Site};
use crate::renorm::{census, classify, classify_all, ClassParams};
use crate::topology::{arm_event, level_clusters_in, local_uniqueness_events, stretch_summary, PairMode};
use crate::walk::FreeGreenConfig;

/// 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Version tag embedded in every result file.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // keep p̂ inside the interval under rounding at the endpoints
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Window and surrogate of the sampled field: `ψ^{B_{κN}}` restricted to
/// `B_N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub d: usize,
    /// Window half-width `N`.
    pub n: i64,
    pub kappa: i64,
    #[serde(default = "default_mode")]
    pub pair_mode: PairMode,
}

fn default_mode() -> PairMode {
    PairMode::Extremal
}

impl McConfig {
    pub fn new(d: usize, n: i64) -> Self {
        McConfig {
            d,
            n,
            kappa: DEFAULT_KAPPA,
            pair_mode: PairMode::Extremal,
        }
    }

    pub fn with_kappa(mut self, kappa: i64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn window(&self) -> BoxRegion {
        BoxRegion::centered(self.d, self.n)
    }

    pub fn sampler(&self) -> Result<SpectralSampler> {
        if self.d < crate::lattice::MIN_DIM {
            return Err(Error::invalid("d", "dimension must be >= 3"));
        }
        if self.n < 0 {
            return Err(Error::invalid("N", "window half-width must be >= 0"));
        }
        SpectralSampler::padded(self.d, self.n, self.kappa)
    }
}

/// Event evaluated on each sample of the window `B_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventDescriptor {
    /// `φ_0 >= h`.
    FieldAtLeast { h: f64 },
    /// `0 ↔ ∂B_R` in `{φ >= h}`.
    Arm { h: f64, r: i64 },
    /// Left-right crossing of `B_N` in `{φ >= h}`.
    Crossing { h: f64 },
    /// `∃ x, y ∈ S_N(h) ∩ B_N` with `ρ_h(x, y) > c N`.
    Stretch { h: f64, c: f64 },
    /// `LocUniq(φ, 0, h₁, h₂)` at scale `L`.
    LocUniq { h1: f64, h2: f64, l: i64 },
    /// The coarse site `0` is bad.
    Bad { params: ClassParams, l: i64, k: i64 },
    /// At least `m` bad coarse sites meet `B_R`.
    BadCount {
        params: ClassParams,
        l: i64,
        k: i64,
        r: i64,
        m: usize,
    },
}

impl EventDescriptor {
    /// Region the event reads; must lie inside the window.
    pub fn footprint(&self, d: usize, n: i64) -> Result<BoxRegion> {
        let origin = Site::origin(d);
        Ok(match self {
            EventDescriptor::FieldAtLeast { .. } => BoxRegion::ball(&origin, 0),
            EventDescriptor::Arm { r, .. } => {
                if *r < 0 {
                    return Err(Error::invalid("r", "radius must be >= 0"));
                }
                BoxRegion::ball(&origin, r + 1)
            }
            EventDescriptor::Crossing { .. } | EventDescriptor::Stretch { .. } => BoxRegion::centered(d, n),
            EventDescriptor::LocUniq { h1, h2, l } => {
                if h1 > h2 {
                    return Err(Error::invalid("h1", "h1 must not exceed h2"));
                }
                RenormIndex::new(origin, *l, 1)?.d_box()
            }
            EventDescriptor::Bad { params, l, k } => {
                params.validate()?;
                RenormIndex::new(origin, *l, *k)?.u_box().expand(1)
            }
            EventDescriptor::BadCount { params, l, k, r, .. } => {
                params.validate()?;
                let cover = coarse_cover(&BoxRegion::centered(d, *r), *l, *k)?;
                let mut lo = vec![i64::MAX; d];
                let mut hi = vec![i64::MIN; d];
                for z in &cover {
                    let u = z.u_box().expand(1);
                    for i in 0..d {
                        lo[i] = lo[i].min(u.lower().coords()[i]);
                        hi[i] = hi[i].max(u.upper().coords()[i]);
                    }
                }
                BoxRegion::new(Site::new(lo), Site::new(hi))?
            }
        })
    }

    pub fn evaluate(&self, field: &FieldSample, cfg: &McConfig) -> Result<bool> {
        let origin = Site::origin(cfg.d);
        Ok(match self {
            EventDescriptor::FieldAtLeast { h } => {
                field
                    .get(&origin)
                    .ok_or_else(|| Error::domain("field-at-least", origin.clone()))?
                    >= *h
            }
            EventDescriptor::Arm { h, r } => arm_event(field, *h, &origin, *r)?.outcome,
            EventDescriptor::Crossing { h } => crossing(field, *h, &cfg.window())?,
            EventDescriptor::Stretch { h, c } => {
                let w = cfg.window();
                let lab = level_clusters_in(field, *h, &w);
                stretch_summary(&lab, cfg.n, &w, cfg.pair_mode).exceeds(c * cfg.n as f64)
            }
            EventDescriptor::LocUniq { h1, h2, l } => {
                let z = RenormIndex::new(origin, *l, 1)?;
                local_uniqueness_events(field, &z, *h1, *h2)?.loc_uniq.outcome
            }
            EventDescriptor::Bad { params, l, k } => {
                let z = RenormIndex::new(origin, *l, *k)?;
                !classify(field, &z, params)?.good()
            }
            EventDescriptor::BadCount { params, l, k, r, m } => {
                let w = BoxRegion::centered(cfg.d, *r);
                let cover = coarse_cover(&w, *l, *k)?;
                let classes = classify_all(field, &cover, params)?;
                census(&w, *l, *k, &classes)?.bad_count >= *m
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub event: EventDescriptor,
    pub config: McConfig,
    pub n_samples: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    /// `g(0,0) - g_{B_{κN}}(0,0)`.
    pub variance_deficit: Option<f64>,
    pub version: String,
}

impl EstimationResult {
    pub fn from_counts(event: EventDescriptor, config: McConfig, seed: u64, successes: u64, n: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, n, Z_95);
        EstimationResult {
            event,
            config,
            n_samples: n,
            successes,
            p_hat: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
            ci_low,
            ci_high,
            seed,
            variance_deficit: None,
            version: CODE_VERSION.to_string(),
        }
    }
}

/// Center-site variance deficit of the surrogate, to the precision used in
/// result metadata.
pub fn surrogate_deficit(cfg: &McConfig) -> Result<f64> {
    Ok(variance_deficit(cfg.d, cfg.n.max(1), cfg.kappa, &FreeGreenConfig::with_tol(1e-8))?.0)
}

/// Evaluates `f` on samples `0..n` of the stream `seed` in parallel; the
/// output is ordered by sample index, independent of scheduling.
pub fn per_sample<T: Send>(
    sampler: &SpectralSampler,
    seed: u64,
    n: u64,
    f: impl Fn(u64, &FieldSample) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(|i| f(i, &sampler.sample(seed, i))).collect()
}

/// `n` independent samples, one event evaluation each, Wilson interval.
pub fn mc_estimate(event: &EventDescriptor, cfg: &McConfig, n: u64, seed: u64) -> Result<EstimationResult> {
    if n < 1 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    let window = cfg.window();
    let foot = event.footprint(cfg.d, cfg.n)?;
    if !window.contains_box(&foot) {
        let missing = foot.iter().find(|x| !window.contains(x)).unwrap();
        return Err(Error::domain(format!("event window B_{}", cfg.n), missing));
    }
    let sampler = cfg.sampler()?;
    let outcomes = per_sample(&sampler, seed, n, |_, f| event.evaluate(f, cfg))?;
    let successes = outcomes.iter().filter(|&&b| b).count() as u64;
    let mut r = EstimationResult::from_counts(event.clone(), *cfg, seed, successes, n);
    r.variance_deficit = Some(surrogate_deficit(cfg)?);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 100, Z_95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100, Z_95);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.95);
        let (lo, hi) = wilson_interval(50, 100, Z_95);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        // textbook value for 50/100
        assert!((lo - 0.403_831_4).abs() < 1e-6, "{lo}");
    }

    #[test]
    fn symmetric_event_is_near_half() {
        let cfg = McConfig::new(3, 2).with_kappa(2);
        let r = mc_estimate(&EventDescriptor::FieldAtLeast { h: 0.0 }, &cfg, 2000, 3).unwrap();
        assert!(r.ci_low < 0.5 && 0.5 < r.ci_high, "{r:?}");
        assert!(r.variance_deficit.unwrap() > 0.0);
    }

    #[test]
    fn impossible_and_saturated_events() {
        let cfg = McConfig::new(3, 9).with_kappa(2);
        let never = mc_estimate(&EventDescriptor::Arm { h: f64::INFINITY, r: 8 }, &cfg, 50, 1).unwrap();
        assert_eq!(never.successes, 0);
        assert_eq!(never.ci_low, 0.0);
        let always = mc_estimate(&EventDescriptor::Arm { h: -50.0, r: 8 }, &cfg, 50, 1).unwrap();
        assert_eq!(always.successes, 50);
    }

    #[test]
    fn uncovered_window_is_an_error() {
        let cfg = McConfig::new(3, 4);
        let r = mc_estimate(&EventDescriptor::Arm { h: 0.0, r: 8 }, &cfg, 10, 1);
        assert!(matches!(r, Err(Error::DomainTooSmall { .. })));
        assert!(mc_estimate(&EventDescriptor::FieldAtLeast { h: 0.0 }, &cfg, 0, 1).is_err());
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let cfg = McConfig::new(3, 4).with_kappa(2);
        let ev = EventDescriptor::Stretch { h: 0.0, c: 1.5 };
        let run = |k| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .unwrap()
                .install(|| mc_estimate(&ev, &cfg, 40, 11).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(4));
    }
}
