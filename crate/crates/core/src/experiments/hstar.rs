//! Surrogate bracket for the critical height from box-crossing curves.

use serde::{Deserialize, Serialize};

use super::{per_sample, EstimationResult, EventDescriptor, McConfig};
use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::lattice::BoxRegion;
use crate::topology::{level_clusters_in, require_domain};

/// A path in `{φ >= h} ∩ window` joins the faces `x₁ = min` and `x₁ = max`.
pub fn crossing(field: &FieldSample, h: f64, window: &BoxRegion) -> Result<bool> {
    require_domain(field, window, "crossing window")?;
    let lab = level_clusters_in(field, h, window);
    let g = lab.grid();
    let side = window.side(0) as i64 - 1;
    let mut left = vec![false; lab.clusters().len()];
    let mut right = vec![false; lab.clusters().len()];
    for i in g.interior() {
        if let Some(l) = lab.label_at(i) {
            let c = g.rel_coord(i, 0);
            if c == 0 {
                left[l] = true;
            }
            if c == side {
                right[l] = true;
            }
        }
    }
    Ok(left.iter().zip(&right).any(|(a, b)| *a && *b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingRow {
    pub n: i64,
    pub h: f64,
    pub estimate: EstimationResult,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BracketMethod {
    /// Sign change of `P_{N'}(h) - P_N(h)` between successive sizes.
    Intersection,
    /// No intersection on the grid: where the largest size falls from 0.9
    /// to 0.1.
    Steepening,
    /// Neither: the whole grid.
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HStarEstimate {
    pub lo: f64,
    pub hi: f64,
    pub method: BracketMethod,
    pub table: Vec<CrossingRow>,
}

impl HStarEstimate {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn curve(&self, n: i64) -> Vec<(f64, f64)> {
        self.table
            .iter()
            .filter(|r| r.n == n)
            .map(|r| (r.h, r.estimate.p_hat))
            .collect()
    }
}

fn check_grid(sizes: &[i64], hs: &[f64]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::invalid("sizes", "need at least two window sizes"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] < 1 {
        return Err(Error::invalid("sizes", "sizes must be positive and increasing"));
    }
    if hs.len() < 2 || hs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(
            "h-grid",
            "degenerate grid: need at least two increasing levels",
        ));
    }
    Ok(())
}

/// Crossing probabilities on the same samples for every level of `hs`
/// (common random numbers across levels).
fn crossing_curve(cfg: &McConfig, hs: &[f64], n: u64, seed: u64) -> Result<Vec<u64>> {
    let sampler = cfg.sampler()?;
    let window = cfg.window();
    let per = per_sample(&sampler, seed, n, |_, f| {
        hs.iter()
            .map(|&h| crossing(f, h, &window))
            .collect::<Result<Vec<bool>>>()
    })?;
    Ok((0..hs.len())
        .map(|j| per.iter().filter(|row| row[j]).count() as u64)
        .collect())
}

/// Crossing-probability table over `sizes × hs` and the bracket where the
/// curves of successive sizes cross.
pub fn estimate_h_star(d: usize, sizes: &[i64], hs: &[f64], n: u64, seed: u64, kappa: i64) -> Result<HStarEstimate> {
    check_grid(sizes, hs)?;
    if n < 1 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    let mut table = Vec::new();
    let mut curves = Vec::new();
    for &size in sizes {
        let cfg = McConfig::new(d, size).with_kappa(kappa);
        let counts = crossing_curve(&cfg, hs, n, seed)?;
        let deficit = super::surrogate_deficit(&cfg)?;
        let mut p = Vec::new();
        for (&h, &k) in hs.iter().zip(&counts) {
            let mut est = EstimationResult::from_counts(EventDescriptor::Crossing { h }, cfg, seed, k, n);
            est.variance_deficit = Some(deficit);
            p.push(est.p_hat);
            table.push(CrossingRow {
                n: size,
                h,
                estimate: est,
            });
        }
        curves.push(p);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for pair in curves.windows(2) {
        let diff: Vec<f64> = pair[1].iter().zip(&pair[0]).map(|(b, a)| b - a).collect();
        // larger boxes cross more often below h_* and less often above
        if let Some(j) = (0..hs.len() - 1).find(|&j| diff[j] >= 0.0 && diff[j + 1] < 0.0) {
            lo = lo.min(hs[j]);
            hi = hi.max(hs[j + 1]);
        }
    }
    if lo <= hi {
        return Ok(HStarEstimate {
            lo,
            hi,
            method: BracketMethod::Intersection,
            table,
        });
    }
    let last = curves.last().unwrap();
    let a = last.iter().position(|&p| p < 0.9);
    let b = last.iter().position(|&p| p < 0.1);
    Ok(match (a, b) {
        (Some(a), Some(b)) => HStarEstimate {
            lo: hs[a.saturating_sub(1)],
            hi: hs[b],
            method: BracketMethod::Steepening,
            table,
        },
        _ => HStarEstimate {
            lo: hs[0],
            hi: hs[hs.len() - 1],
            method: BracketMethod::Undetermined,
            table,
        },
    })
}

/// Bisection on the sign of `P_{N₂}(h) - P_{N₁}(h)` over `[lo, hi]`.
#[allow(clippy::too_many_arguments)]
pub fn bisect_h_star(
    d: usize,
    sizes: (i64, i64),
    mut lo: f64,
    mut hi: f64,
    iterations: usize,
    n: u64,
    seed: u64,
    kappa: i64,
) -> Result<f64> {
    check_grid(&[sizes.0, sizes.1], &[lo, hi])?;
    let small = McConfig::new(d, sizes.0).with_kappa(kappa);
    let large = McConfig::new(d, sizes.1).with_kappa(kappa);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        let a = crossing_curve(&small, &[mid], n, seed)?[0];
        let b = crossing_curve(&large, &[mid], n, seed)?[0];
        if b >= a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_on_constant_fields() {
        let w = BoxRegion::centered(3, 3);
        assert!(crossing(&FieldSample::constant(&w, 0.0), 0.0, &w).unwrap());
        assert!(!crossing(&FieldSample::constant(&w, 0.0), 0.1, &w).unwrap());
        // a single open column along the first axis
        let f = FieldSample::from_fn(&w, |x| {
            if x.coords()[1] == 0 && x.coords()[2] == 0 {
                1.0
            } else {
                -1.0
            }
        });
        assert!(crossing(&f, 0.0, &w).unwrap());
        let g = FieldSample::from_fn(&w, |x| {
            if x.coords()[0] == 0 && x.coords()[2] == 0 {
                1.0
            } else {
                -1.0
            }
        });
        assert!(!crossing(&g, 0.0, &w).unwrap());
    }

    #[test]
    fn extreme_levels() {
        let est = estimate_h_star(3, &[4, 8], &[-10.0, 10.0], 20, 5, 2).unwrap();
        for row in &est.table {
            if row.h < 0.0 {
                assert_eq!(row.estimate.p_hat, 1.0);
            } else {
                assert_eq!(row.estimate.p_hat, 0.0);
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(estimate_h_star(3, &[4], &[0.0, 1.0], 5, 1, 2).is_err());
        assert!(estimate_h_star(3, &[4, 8], &[0.0], 5, 1, 2).is_err());
        assert!(estimate_h_star(3, &[4, 8], &[1.0, 0.0], 5, 1, 2).is_err());
    }
}
