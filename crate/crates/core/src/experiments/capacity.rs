//! Growth of the capacity of boxes, thin tubes and unions of separated boxes.

use serde::{Deserialize, Serialize};

use super::tube::segment_tube;
use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, Site, SiteSet};
use crate::walk::{capacity, FreeGreenConfig};

/// Largest exposed set handed to the dense whole-space solve by default.
pub const DEFAULT_SITE_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum GrowthShape {
    /// `B_N`, normalized by `N^{d-2}`.
    Box,
    /// `P^{(axis+1)}_{N, ⌊N^ε⌋}`, normalized by `N / ln N`.
    Tube { axis: usize, epsilon: f64 },
}

impl GrowthShape {
    pub fn sites(&self, d: usize, n: i64) -> SiteSet {
        match *self {
            GrowthShape::Box => BoxRegion::centered(d, n).to_site_set(),
            GrowthShape::Tube { axis, epsilon } => {
                segment_tube(d, axis, n, (n as f64).powf(epsilon).floor() as i64).to_site_set()
            }
        }
    }

    pub fn normalization(&self, d: usize, n: i64) -> f64 {
        let nf = n as f64;
        match self {
            GrowthShape::Box => nf.powi(d as i32 - 2),
            GrowthShape::Tube { .. } => nf / nf.ln(),
        }
    }
}

/// Sites of `K` with a neighbor outside `K`. A walk from outside enters `K`
/// through one of them, so both sets have the same capacity.
pub fn exposed_sites(k: &SiteSet) -> SiteSet {
    k.iter()
        .filter(|x| x.neighbors().any(|y| !k.contains(&y)))
        .cloned()
        .collect()
}

/// `Cap(K)` through the smaller exposed set.
pub fn capacity_exposed(k: &SiteSet, gcfg: &FreeGreenConfig) -> Result<f64> {
    capacity(&exposed_sites(k), gcfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub n: i64,
    pub sites: usize,
    pub exposed: usize,
    pub capacity: Option<f64>,
    pub ratio: Option<f64>,
    /// The exposed set exceeded the site cap; the row is a placeholder.
    pub cap_exceeded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityStudy {
    pub d: usize,
    pub shape: GrowthShape,
    pub rows: Vec<CapacityRow>,
    /// `max ratio / min ratio` over computed rows.
    pub spread: Option<f64>,
    /// `spread <= band`.
    pub bounded: bool,
    pub band: f64,
}

/// Capacities of `shape` at each `N` with their normalized ratios; rows past
/// `site_cap` are marked instead of failing the whole table.
pub fn capacity_growth_study(
    d: usize,
    shape: GrowthShape,
    ns: &[i64],
    band: f64,
    site_cap: usize,
    gcfg: &FreeGreenConfig,
) -> Result<CapacityStudy> {
    if ns.is_empty() || ns.iter().any(|&n| n < 2) {
        return Err(Error::invalid("Ns", "sizes must be >= 2"));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let k = shape.sites(d, n);
        let ex = exposed_sites(&k);
        log::debug!("capacity at N = {n}: {} sites, {} exposed", k.len(), ex.len());
        let (cap, exceeded) = if ex.len() > site_cap {
            (None, true)
        } else {
            (Some(capacity(&ex, gcfg)?), false)
        };
        rows.push(CapacityRow {
            n,
            sites: k.len(),
            exposed: ex.len(),
            capacity: cap,
            ratio: cap.map(|c| c / shape.normalization(d, n)),
            cap_exceeded: exceeded,
        });
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let spread = (!ratios.is_empty()).then(|| {
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    });
    Ok(CapacityStudy {
        d,
        shape,
        rows,
        bounded: spread.is_some_and(|s| s <= band),
        spread,
        band,
    })
}

/// `m` boxes `z_i + [0, L)^d` with `z_i` on the grid `spacing · L · Z^d`,
/// filling a cube of `⌈m^{1/d}⌉` boxes per side in row-major order.
pub fn separated_boxes(d: usize, m: usize, l: i64, spacing: i64) -> Result<Vec<BoxRegion>> {
    if m == 0 || l < 1 || spacing < 1 {
        return Err(Error::invalid("boxes", "need m >= 1, L >= 1 and spacing >= 1"));
    }
    let mut side = 1usize;
    while side.pow(d as u32) < m {
        side += 1;
    }
    Ok((0..m)
        .map(|mut i| {
            let mut z = vec![0i64; d];
            for c in z.iter_mut().rev() {
                *c = (i % side) as i64 * spacing * l;
                i /= side;
            }
            BoxRegion::half_open_cube(&Site::new(z), 0, l)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionCapacityRow {
    pub m: usize,
    pub l: i64,
    pub capacity: f64,
    /// `Cap / (m^{1-2/d} L^{d-2})`.
    pub ratio: f64,
}

/// Normalized capacity of `m` separated boxes of side `L`.
pub fn union_capacity(d: usize, m: usize, l: i64, spacing: i64, gcfg: &FreeGreenConfig) -> Result<UnionCapacityRow> {
    let boxes = separated_boxes(d, m, l, spacing)?;
    let k: SiteSet = boxes.iter().flat_map(|b| b.iter().collect::<Vec<_>>()).collect();
    let cap = capacity_exposed(&k, gcfg)?;
    let df = d as f64;
    Ok(UnionCapacityRow {
        m,
        l,
        capacity: cap,
        ratio: cap / ((m as f64).powf(1.0 - 2.0 / df) * (l as f64).powf(df - 2.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gcfg() -> FreeGreenConfig {
        FreeGreenConfig::with_tol(1e-8)
    }

    #[test]
    fn single_site_capacity() {
        let k: SiteSet = [Site::origin(3)].into_iter().collect();
        let c = capacity_exposed(&k, &gcfg()).unwrap();
        assert!((c - 0.6595).abs() < 5e-4, "{c}");
    }

    #[test]
    fn exposed_reduction_keeps_capacity() {
        let k = BoxRegion::centered(3, 2).to_site_set();
        assert_eq!(exposed_sites(&k).len(), 125 - 27);
        let full = capacity(&k, &gcfg()).unwrap();
        let reduced = capacity_exposed(&k, &gcfg()).unwrap();
        assert!((full - reduced).abs() < 1e-6 * full, "{full} {reduced}");
    }

    #[test]
    fn box_ratios_and_site_cap() {
        let s = capacity_growth_study(3, GrowthShape::Box, &[2, 4, 6], 3.0, 400, &gcfg()).unwrap();
        assert!(!s.rows[0].cap_exceeded && !s.rows[1].cap_exceeded);
        assert!(s.rows[2].cap_exceeded && s.rows[2].capacity.is_none());
        let (a, b) = (s.rows[0].ratio.unwrap(), s.rows[1].ratio.unwrap());
        assert!(b < a && b > 0.5 * a);
        assert!(s.bounded);
    }

    #[test]
    fn box_arrangement() {
        let b = separated_boxes(3, 4, 2, 3).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b[1].lower(), &Site::new([0, 0, 6]));
        assert_eq!(b[2].lower(), &Site::new([0, 6, 0]));
        assert!(separated_boxes(3, 0, 2, 3).is_err());
    }
}
