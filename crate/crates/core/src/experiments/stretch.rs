//! Tail of the chemical-distance stretch and least-squares decay fits.

use serde::{Deserialize, Serialize};

use super::{per_sample, surrogate_deficit, wilson_interval, McConfig, Z_95};
use crate::error::{Error, Result};
use crate::topology::{level_clusters_in, stretch_summary, StretchSummary};

/// Per-sample stretch statistics at one window size.
pub fn stretch_samples(cfg: &McConfig, h: f64, n: u64, seed: u64) -> Result<Vec<StretchSummary>> {
    let sampler = cfg.sampler()?;
    let w = cfg.window();
    per_sample(&sampler, seed, n, |_, f| {
        let lab = level_clusters_in(f, h, &w);
        Ok(stretch_summary(&lab, cfg.n, &w, cfg.pair_mode))
    })
}

/// `factor ×` the median of `max ρ / N` over samples that have a finite pair.
pub fn calibrate_stretch_constant(samples: &[StretchSummary], n: i64, factor: f64) -> Option<f64> {
    let mut v: Vec<f64> = samples
        .iter()
        .filter_map(|s| s.max_finite.map(|m| m as f64 / n as f64))
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    let median = if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    };
    Some(factor * median)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchRow {
    pub n: i64,
    pub samples: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// No success: `p̂` is below the resolution `1/n` and the row is left out
    /// of the fits.
    pub censored: bool,
    /// Samples with at least one large cluster.
    pub with_pairs: u64,
    pub variance_deficit: f64,
}

/// Tail row at window size `n` and constant `c` from per-sample summaries.
pub fn stretch_row(n: i64, samples: &[StretchSummary], c: f64, variance_deficit: f64) -> StretchRow {
    let total = samples.len() as u64;
    let successes = samples.iter().filter(|s| s.exceeds(c * n as f64)).count() as u64;
    let (ci_low, ci_high) = wilson_interval(successes, total, Z_95);
    StretchRow {
        n,
        samples: total,
        successes,
        p_hat: if total == 0 {
            0.0
        } else {
            successes as f64 / total as f64
        },
        ci_low,
        ci_high,
        censored: successes == 0,
        with_pairs: samples.iter().filter(|s| s.large_clusters > 0).count() as u64,
        variance_deficit,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    /// `N^{1-2/d}`.
    Capacity,
    /// `N / ln N`.
    NOverLog,
    /// `N`.
    Linear,
}

impl DecayModel {
    pub const ALL: [DecayModel; 3] = [DecayModel::Capacity, DecayModel::NOverLog, DecayModel::Linear];

    pub fn rate(self, n: f64, d: usize) -> f64 {
        match self {
            DecayModel::Capacity => n.powf(1.0 - 2.0 / d as f64),
            DecayModel::NOverLog => n / n.ln(),
            DecayModel::Linear => n,
        }
    }
}

/// `-ln p̂ ≈ a · r(N)`, fitted through the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub coefficient: f64,
    pub residual_ss: f64,
    pub points: usize,
}

/// Least-squares fits of `-ln p` against each rate function; `points` are
/// `(N, p)` with `0 < p`.
pub fn fit_decay_models(points: &[(f64, f64)], d: usize) -> Vec<DecayFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|&(n, p)| (n, -p.ln()))
        .collect();
    if pts.is_empty() {
        return Vec::new();
    }
    DecayModel::ALL
        .iter()
        .map(|&model| {
            let r: Vec<f64> = pts.iter().map(|(n, _)| model.rate(*n, d)).collect();
            let srr: f64 = r.iter().map(|x| x * x).sum();
            let sry: f64 = r.iter().zip(&pts).map(|(x, (_, y))| x * y).sum();
            let a = sry / srr;
            let residual_ss = r.iter().zip(&pts).map(|(x, (_, y))| (y - a * x).powi(2)).sum();
            DecayFit {
                model,
                coefficient: a,
                residual_ss,
                points: pts.len(),
            }
        })
        .collect()
}

/// Fits over the uncensored rows.
pub fn fit_rows(rows: &[StretchRow], d: usize) -> Vec<DecayFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.censored)
        .map(|r| (r.n as f64, r.p_hat))
        .collect();
    fit_decay_models(&pts, d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchCurve {
    pub h: f64,
    pub c: f64,
    pub seed: u64,
    pub kappa: i64,
    pub rows: Vec<StretchRow>,
    pub fits: Vec<DecayFit>,
}

/// `P[∃ x, y ∈ S_N(h) ∩ B_N : ρ_h(x, y) > c N]` for each `N`, with pairs
/// and distances taken inside the window `B_N`.
pub fn stretch_tail_curve(d: usize, h: f64, c: f64, ns: &[i64], n: u64, seed: u64, kappa: i64) -> Result<StretchCurve> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] < 2 {
        return Err(Error::invalid("Ns", "sizes must be >= 2 and increasing"));
    }
    if n < 1 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    let mut rows = Vec::new();
    for &size in ns {
        let cfg = McConfig::new(d, size).with_kappa(kappa);
        let samples = stretch_samples(&cfg, h, n, seed)?;
        let row = stretch_row(size, &samples, c, surrogate_deficit(&cfg)?);
        log::debug!(
            "stretch at N = {size}: {} of {} samples exceed C N",
            row.successes,
            row.samples
        );
        rows.push(row);
    }
    Ok(StretchCurve {
        h,
        c,
        seed,
        kappa,
        fits: fit_rows(&rows, d),
        rows,
    })
}

/// Non-increasing in `N` up to overlapping confidence intervals between
/// adjacent sizes.
pub fn is_non_increasing(rows: &[StretchRow]) -> bool {
    rows.windows(2)
        .all(|w| w[1].p_hat <= w[0].p_hat || w[1].ci_low <= w[0].ci_high)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_data_is_fitted_exactly() {
        let pts: Vec<(f64, f64)> = [16.0, 32.0, 64.0, 128.0]
            .iter()
            .map(|&n: &f64| (n, (-0.7 * n.cbrt()).exp()))
            .collect();
        let fits = fit_decay_models(&pts, 3);
        let cap = fits.iter().find(|f| f.model == DecayModel::Capacity).unwrap();
        assert!((cap.coefficient - 0.7).abs() < 1e-12);
        assert!(cap.residual_ss < 1e-24);
        assert!(fits
            .iter()
            .filter(|f| f.model != DecayModel::Capacity)
            .all(|f| f.residual_ss > 1e-6));
        assert!(fit_decay_models(&[(16.0, 0.0)], 3).is_empty());
    }

    #[test]
    fn volume_bound_censors_every_row() {
        // no self-avoiding path in B_N is longer than its volume
        let c = 9.0f64.powi(3) / 4.0 + 1.0;
        let curve = stretch_tail_curve(3, -3.0, c, &[2, 4], 6, 1, 2).unwrap();
        for r in &curve.rows {
            assert!(r.censored);
            assert_eq!(r.p_hat, 0.0);
        }
        assert!(curve.fits.is_empty());
    }

    #[test]
    fn median_calibration() {
        let s = |m| StretchSummary {
            large_clusters: 1,
            max_finite: m,
            disconnected: false,
        };
        let v = [s(Some(10)), s(Some(30)), s(None), s(Some(20))];
        assert_eq!(calibrate_stretch_constant(&v, 10, 2.0), Some(4.0));
        assert_eq!(calibrate_stretch_constant(&[s(None)], 10, 2.0), None);
        let row = stretch_row(10, &v, 1.5, 0.0);
        assert_eq!((row.successes, row.with_pairs), (2, 4));
    }
}
