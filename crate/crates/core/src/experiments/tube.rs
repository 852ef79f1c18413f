//! U-shaped tubes and the detectors behind the lower bound on the stretch.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::per_sample;
use crate::error::{Error, Result};
use crate::field::{FieldSample, HarmonicExtender, SpectralSampler};
use crate::lattice::{boundary, BoxRegion, Site, SiteSet};
use crate::topology::{level_clusters_in, OpenGrid, UNREACHED};
use crate::walk::SolverConfig;

/// `P^{(i)}_{n,r}`: the `r`-neighborhood of the segment from `0` to `n e_i`
/// (`axis = i - 1`).
pub fn segment_tube(d: usize, axis: usize, n: i64, r: i64) -> BoxRegion {
    let lo = Site::splat(d, -r);
    let hi = Site::new((0..d).map(|i| if i == axis { n + r } else { r }));
    BoxRegion::new(lo, hi).expect("segment tube bounds are ordered")
}

/// `P_r(N, α) = P^{(2)}_{αN,r} ∪ (αN e₂ + P^{(1)}_{N,r}) ∪ (N e₁ + P^{(2)}_{αN,r})`.
pub fn u_tube(d: usize, n: i64, alpha: i64, r: i64) -> SiteSet {
    let up = segment_tube(d, 1, alpha * n, r);
    let top = segment_tube(d, 0, n, r).translate(&Site::axis(d, 1, alpha * n));
    let right = up.translate(&Site::axis(d, 0, n));
    let mut v: Vec<Site> = up.iter().chain(top.iter()).chain(right.iter()).collect();
    v.sort();
    v.dedup();
    v.into()
}

/// Nearest-neighbor connectivity of a site set.
pub fn is_connected(s: &SiteSet) -> bool {
    if s.len() <= 1 {
        return true;
    }
    let mut seen = vec![false; s.len()];
    let mut q = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = q.pop_front() {
        for y in s.sites()[i].neighbors() {
            if let Some(j) = s.index_of(&y) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    q.push_back(j);
                }
            }
        }
    }
    count == s.len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeRegion {
    pub d: usize,
    pub n: i64,
    pub alpha: i64,
    pub epsilon: f64,
    /// `⌊N^{ε/2}⌋`, radius of the end balls.
    pub ball_radius: i64,
    /// `⌊N^ε⌋, ⌊N^{2ε}⌋, ⌊N^{3ε}⌋`.
    pub radii: [i64; 3],
    pub p0: SiteSet,
    pub u: SiteSet,
    pub v: SiteSet,
    pub w: SiteSet,
}

impl TubeRegion {
    pub fn start(&self) -> Site {
        Site::origin(self.d)
    }

    pub fn end(&self) -> Site {
        Site::axis(self.d, 0, self.n)
    }

    /// `(2α + 1) N`, the length of the U-shaped segment path.
    pub fn detour_length(&self) -> i64 {
        (2 * self.alpha + 1) * self.n
    }

    /// The stated bound `(2α+1)N - 2⌊N^{ε/2}⌋` on `ρ` between the balls
    /// under `D ∧ F`.
    pub fn stated_bound(&self) -> i64 {
        self.detour_length() - 2 * self.ball_radius
    }

    /// Exact lower bound for a path between the balls confined to the tube
    /// of radius `r`: climb, cross and descend, each shortened by the tube
    /// and ball radii.
    pub fn confined_bound(&self, r: i64) -> i64 {
        self.detour_length() - 2 * r - 4 * self.ball_radius
    }

    /// Bounding box of `W_N` and its boundary.
    pub fn hull(&self) -> BoxRegion {
        let r = self.radii[2] + 1;
        let lo = Site::new((0..self.d).map(|_| -r));
        let hi = Site::new((0..self.d).map(|i| match i {
            0 => self.n + r,
            1 => self.alpha * self.n + r,
            _ => r,
        }));
        BoxRegion::new(lo, hi).unwrap()
    }
}

/// Tube `P_r(N, α)` at radii `0`, `⌊N^ε⌋`, `⌊N^{2ε}⌋`, `⌊N^{3ε}⌋`.
pub fn build_tube(d: usize, n: i64, alpha: i64, epsilon: f64) -> Result<TubeRegion> {
    if d < crate::lattice::MIN_DIM {
        return Err(Error::invalid("d", "dimension must be >= 3"));
    }
    if n < 2 {
        return Err(Error::invalid("N", "need N >= 2"));
    }
    if alpha < 1 {
        return Err(Error::invalid("alpha", "need alpha >= 1"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    let nf = n as f64;
    let radii = [
        nf.powf(epsilon).floor() as i64,
        nf.powf(2.0 * epsilon).floor() as i64,
        nf.powf(3.0 * epsilon).floor() as i64,
    ];
    if 2 * radii[2] >= n {
        return Err(Error::GeometryCollision(format!(
            "outer radius {} is not below N/2 = {}; the arms of W_N merge",
            radii[2],
            nf / 2.0
        )));
    }
    let t = TubeRegion {
        d,
        n,
        alpha,
        epsilon,
        ball_radius: nf.powf(epsilon / 2.0).floor() as i64,
        radii,
        p0: u_tube(d, n, alpha, 0),
        u: u_tube(d, n, alpha, radii[0]),
        v: u_tube(d, n, alpha, radii[1]),
        w: u_tube(d, n, alpha, radii[2]),
    };
    for (name, s) in [("P_0", &t.p0), ("U_N", &t.u), ("V_N", &t.v), ("W_N", &t.w)] {
        if !is_connected(s) {
            return Err(Error::GeometryCollision(format!("{name} is not connected")));
        }
    }
    Ok(t)
}

/// Reading of the insulation event `F_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FMode {
    /// No path in `{φ >= h} ∩ W_N` from `∂V_N` to `∂W_N`.
    OuterBoundary,
    /// No path from `∂V_N` to `W_N`; since `∂V_N ⊂ W_N` this says no site
    /// of `∂V_N` is open.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub d: bool,
    pub e: bool,
    pub f: bool,
    pub g: bool,
    /// `min_{U_N} ξ^{V_N}`.
    pub xi_min: f64,
    /// `-(h_* - h + δ)`.
    pub e_threshold: f64,
    /// Chemical distance between the end balls in the sampled window.
    pub rho_balls: Option<u32>,
    pub stated_bound: i64,
    pub confined_bound: i64,
    /// Under `D ∧ F`: whether `ρ >= stated_bound`.
    pub df_stated_holds: Option<bool>,
    /// Under `D ∧ F`: whether `ρ >= confined_bound`.
    pub df_confined_holds: Option<bool>,
    /// Under `G`: whether `0` and `N e₁` witness `ρ > αN` inside a cluster
    /// of diameter `> N`.
    pub g_implies_long_pair: Option<bool>,
}

/// Geometry-dependent precomputation shared by all samples.
pub struct TubeAnalyzer {
    tube: TubeRegion,
    extender: HarmonicExtender,
    dv: SiteSet,
    dw: SiteSet,
    dp0: SiteSet,
    ball0: BoxRegion,
    ball1: BoxRegion,
}

impl TubeAnalyzer {
    pub fn new(tube: &TubeRegion, cfg: &SolverConfig) -> Result<Self> {
        let r = tube.ball_radius;
        Ok(TubeAnalyzer {
            extender: HarmonicExtender::new(&tube.v, cfg)?,
            dv: boundary(&tube.v),
            dw: boundary(&tube.w),
            dp0: boundary(&tube.p0),
            ball0: BoxRegion::ball(&tube.start(), r),
            ball1: BoxRegion::ball(&tube.end(), r),
            tube: tube.clone(),
        })
    }

    pub fn tube(&self) -> &TubeRegion {
        &self.tube
    }

    fn open_in(&self, field: &FieldSample, h: f64, x: &Site) -> bool {
        field.get(x).is_some_and(|v| v >= h)
    }

    fn ball_distance(&self, g: &OpenGrid) -> Option<u32> {
        let src: Vec<usize> = self.ball0.iter().filter_map(|x| g.index(&x)).collect();
        let mut dist = Vec::new();
        g.bfs(&src, u32::MAX, &mut dist);
        self.ball1
            .iter()
            .filter_map(|x| g.index(&x))
            .map(|i| dist[i])
            .filter(|&d| d != UNREACHED)
            .min()
    }

    pub fn analyze(
        &self,
        field: &FieldSample,
        h: f64,
        h_star: f64,
        delta: f64,
        mode: FMode,
    ) -> Result<LowerBoundReport> {
        let t = &self.tube;
        let hull = t.hull();
        let window = field
            .region()
            .cloned()
            .ok_or_else(|| Error::invalid("sample", "tube analysis needs a box-shaped sample"))?;
        if let Some(x) = hull.iter().find(|x| !window.contains(x)) {
            return Err(Error::domain("tube window: W_N and its boundary", x));
        }
        // D: end balls joined inside U_N
        let gu = OpenGrid::from_fn(&hull, |x| t.u.contains(x) && self.open_in(field, h, x));
        let d = self.ball_distance(&gu).is_some();
        // E: harmonic part of V_N on U_N
        let xi = self.extender.extend(|x| field.get(x))?;
        let xi_min =
            t.u.iter()
                .map(|x| xi[t.v.index_of(x).unwrap()])
                .fold(f64::INFINITY, f64::min);
        let e_threshold = -(h_star - h + delta);
        let e = xi_min >= e_threshold;
        // F
        let f = match mode {
            FMode::Literal => !self.dv.iter().any(|x| self.open_in(field, h, x)),
            FMode::OuterBoundary => {
                let g = OpenGrid::from_fn(&hull, |x| {
                    (t.w.contains(x) || self.dw.contains(x)) && self.open_in(field, h, x)
                });
                let src: Vec<usize> = self.dv.iter().filter_map(|x| g.index(x)).collect();
                let mut dist = Vec::new();
                g.bfs(&src, u32::MAX, &mut dist);
                !self.dw.iter().any(|x| g.index(x).is_some_and(|i| dist[i] != UNREACHED))
            }
        };
        // G: P_0 is exactly a cluster
        let g = t.p0.iter().all(|x| self.open_in(field, h, x)) && !self.dp0.iter().any(|x| self.open_in(field, h, x));
        let full = OpenGrid::level_set(field, h, &window);
        let rho_balls = self.ball_distance(&full);
        let confining = match mode {
            FMode::OuterBoundary => t.radii[2],
            FMode::Literal => t.radii[1],
        };
        let (df_stated_holds, df_confined_holds) = if d && f {
            let r = rho_balls.map_or(i64::MAX, |r| r as i64);
            (Some(r >= t.stated_bound()), Some(r >= t.confined_bound(confining)))
        } else {
            (None, None)
        };
        let g_implies_long_pair = if g {
            let lab = level_clusters_in(field, h, &window);
            let a = full.index(&t.start()).unwrap();
            let b = full.index(&t.end()).unwrap();
            let large = lab.label(&t.start()).is_some_and(|l| lab.clusters()[l].diameter > t.n);
            let rho = full.distance(a, b);
            Some(large && rho.is_none_or(|r| r as i64 > t.alpha * t.n))
        } else {
            None
        };
        Ok(LowerBoundReport {
            d,
            e,
            f,
            g,
            xi_min,
            e_threshold,
            rho_balls,
            stated_bound: t.stated_bound(),
            confined_bound: t.confined_bound(confining),
            df_stated_holds,
            df_confined_holds,
            g_implies_long_pair,
        })
    }
}

/// One-shot evaluation of `D_N, E_N, F_N, G_N` on a sample.
pub fn lower_bound_events(
    field: &FieldSample,
    tube: &TubeRegion,
    h: f64,
    h_star: f64,
    delta: f64,
    mode: FMode,
) -> Result<LowerBoundReport> {
    TubeAnalyzer::new(tube, &SolverConfig::default())?.analyze(field, h, h_star, delta, mode)
}

/// Forces `G_N` and the literal `F_N`: `P_0` open, `∂P_0` and `∂V_N`
/// closed; other values untouched.
pub fn plant_insulation(field: &FieldSample, tube: &TubeRegion, h: f64) -> FieldSample {
    let mut out = field.clone();
    let closed: SiteSet = boundary(&tube.p0).union(&boundary(&tube.v));
    for (i, x) in field.domain.sites().enumerate() {
        let v = field.values[i];
        if tube.p0.contains(&x) {
            out.values[i] = v.max(h);
        } else if closed.contains(&x) {
            out.values[i] = v.min(h - 0.5);
        }
    }
    out.meta.note = Some(format!("insulated tube planted at h = {h}"));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeStudyConfig {
    pub d: usize,
    pub n: i64,
    pub alpha: i64,
    pub epsilon: f64,
    pub h: f64,
    pub h_star: f64,
    /// Defaults to `(h_* - h) / 2`.
    pub delta: Option<f64>,
    pub f_mode: FMode,
    /// Sampled window is the hull of `W_N` widened by `margin`.
    pub margin: i64,
    /// Dirichlet box is the window widened by `pad`.
    pub pad: i64,
    pub samples: u64,
    pub seed: u64,
    pub planted: bool,
}

impl TubeStudyConfig {
    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.5 * (self.h_star - self.h))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundStudy {
    pub config: TubeStudyConfig,
    pub delta: f64,
    pub d: u64,
    pub e: u64,
    pub f: u64,
    pub g: u64,
    pub df: u64,
    pub df_stated_violations: u64,
    pub df_confined_violations: u64,
    pub g_violations: u64,
    /// Smallest `ρ` between the balls among samples where `D ∧ F` fired.
    pub min_rho_given_df: Option<u32>,
}

/// Monte Carlo over samples of `ψ` on a padded box around the tube.
pub fn lower_bound_study(cfg: &TubeStudyConfig) -> Result<LowerBoundStudy> {
    let tube = build_tube(cfg.d, cfg.n, cfg.alpha, cfg.epsilon)?;
    let analyzer = TubeAnalyzer::new(&tube, &SolverConfig::default())?;
    let window = tube.hull().expand(cfg.margin.max(0));
    let sampler = SpectralSampler::new(&window.expand(cfg.pad.max(0)), &window)?;
    let delta = cfg.delta();
    let reports = per_sample(&sampler, cfg.seed, cfg.samples, |_, f| {
        if cfg.planted {
            analyzer.analyze(&plant_insulation(f, &tube, cfg.h), cfg.h, cfg.h_star, delta, cfg.f_mode)
        } else {
            analyzer.analyze(f, cfg.h, cfg.h_star, delta, cfg.f_mode)
        }
    })?;
    let count = |p: &dyn Fn(&LowerBoundReport) -> bool| reports.iter().filter(|r| p(r)).count() as u64;
    Ok(LowerBoundStudy {
        config: cfg.clone(),
        delta,
        d: count(&|r| r.d),
        e: count(&|r| r.e),
        f: count(&|r| r.f),
        g: count(&|r| r.g),
        df: count(&|r| r.d && r.f),
        df_stated_violations: count(&|r| r.df_stated_holds == Some(false)),
        df_confined_violations: count(&|r| r.df_confined_holds == Some(false)),
        g_violations: count(&|r| r.g_implies_long_pair == Some(false)),
        min_rho_given_df: reports.iter().filter(|r| r.d && r.f).filter_map(|r| r.rho_balls).min(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thin_tube_is_a_u_shaped_path() {
        let t = build_tube(3, 8, 1, 0.2).unwrap();
        assert_eq!(t.p0.len() as i64, 3 * 8 + 1);
        assert!(t.p0.contains(&Site::new([0, 8, 0])) && t.p0.contains(&Site::new([8, 0, 0])));
        assert_eq!(u_tube(3, 8, 2, 0).len() as i64, 5 * 8 + 1);
    }

    #[test]
    fn nested_radii_for_n16() {
        let t = build_tube(3, 16, 1, 0.2).unwrap();
        assert_eq!(t.radii, [1, 3, 5]);
        assert!(t.p0.is_subset(&t.u) && t.u.is_subset(&t.v) && t.v.is_subset(&t.w));
        assert!(t.w.iter().all(|x| t.hull().contains(x)));
    }

    #[test]
    fn merging_arms_are_rejected() {
        assert!(matches!(build_tube(3, 8, 1, 0.4), Err(Error::GeometryCollision(_))));
        assert!(build_tube(3, 1, 1, 0.1).is_err());
        assert!(build_tube(3, 8, 0, 0.1).is_err());
    }

    #[test]
    fn p0_distances_follow_the_u_shape() {
        let t = build_tube(3, 6, 2, 0.1).unwrap();
        let hull = t.hull();
        let g = OpenGrid::from_fn(&hull, |x| t.p0.contains(x));
        let arc = |x: &Site| -> i64 {
            let (a, b) = (x.coords()[0], x.coords()[1]);
            let top = t.alpha * t.n;
            if a == 0 {
                b
            } else if b == top {
                top + a
            } else {
                top + t.n + (top - b)
            }
        };
        for x in t.p0.iter() {
            for y in t.p0.iter() {
                let d = g.distance(g.index(x).unwrap(), g.index(y).unwrap()).unwrap() as i64;
                assert_eq!(d, (arc(x) - arc(y)).abs());
                assert!(d >= x.dist_l1(y));
            }
        }
    }

    fn window_field(t: &TubeRegion, f: impl Fn(&Site) -> f64) -> FieldSample {
        FieldSample::from_fn(&t.hull().expand(2), f)
    }

    #[test]
    fn constant_field_connects_but_does_not_insulate() {
        let t = build_tube(3, 8, 2, 0.2).unwrap();
        let r = lower_bound_events(&window_field(&t, |_| 0.0), &t, 0.0, 1.0, 0.5, FMode::OuterBoundary).unwrap();
        assert!(r.d && !r.f && !r.g);
        assert!(r.e && (r.xi_min - 0.0).abs() < 1e-9);
        assert_eq!(r.rho_balls, Some(8 - 2));
    }

    #[test]
    fn field_open_exactly_on_p0() {
        let t = build_tube(3, 8, 2, 0.2).unwrap();
        let f = window_field(&t, |x| if t.p0.contains(x) { 0.0 } else { -1.0 });
        for mode in [FMode::OuterBoundary, FMode::Literal] {
            let r = lower_bound_events(&f, &t, 0.0, 1.0, 0.5, mode).unwrap();
            assert!(r.d && r.f && r.g, "{r:?}");
            assert_eq!(r.rho_balls, Some(t.stated_bound() as u32));
            assert_eq!(r.df_stated_holds, Some(true));
            assert_eq!(r.g_implies_long_pair, Some(true));
        }
    }

    #[test]
    fn planting_forces_g_and_f() {
        let t = build_tube(3, 8, 2, 0.2).unwrap();
        let s = SpectralSampler::new(&t.hull().expand(4), &t.hull().expand(2)).unwrap();
        let f = plant_insulation(&s.sample(3, 0), &t, 0.0);
        let r = lower_bound_events(&f, &t, 0.0, 1.0, 0.5, FMode::Literal).unwrap();
        assert!(r.g && r.f && r.d);
        assert_eq!(r.df_confined_holds, Some(true));
        assert_eq!(r.g_implies_long_pair, Some(true));
    }

    #[test]
    fn small_window_is_an_error() {
        let t = build_tube(3, 8, 2, 0.2).unwrap();
        let f = FieldSample::constant(&BoxRegion::centered(3, 4), 0.0);
        assert!(lower_bound_events(&f, &t, 0.0, 1.0, 0.5, FMode::Literal).is_err());
    }
}
