//! Integer lattice geometry on Z^d: sites, boxes, finite site sets, the
//! coarse lattice `L Z^d` and the `C_z ⊂ D_z ⊂ U_z` box hierarchy.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Smallest dimension supported by the toolkit (transient random walk).
pub const MIN_DIM: usize = 3;

/// Default separation parameter `K`; the smallest value with `D_z ⊂ U_z`.
pub const DEFAULT_SEPARATION: i64 = 4;

type Coords = SmallVec<[i64; 4]>;

/// A point of Z^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(Coords);

impl Site {
    pub fn new(coords: impl IntoIterator<Item = i64>) -> Self {
        Site(coords.into_iter().collect())
    }

    pub fn origin(d: usize) -> Self {
        Site(smallvec::smallvec![0; d])
    }

    /// `k e_axis`.
    pub fn axis(d: usize, axis: usize, k: i64) -> Self {
        let mut s = Self::origin(d);
        s.0[axis] = k;
        s
    }

    pub fn splat(d: usize, v: i64) -> Self {
        Site(smallvec::smallvec![v; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [i64] {
        &mut self.0
    }

    pub fn norm_l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        (self.0.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt()
    }

    pub fn norm_inf(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Site) -> Site {
        debug_assert_eq!(self.dim(), other.dim());
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Site) -> Site {
        debug_assert_eq!(self.dim(), other.dim());
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn dist_l1(&self, other: &Site) -> i64 {
        self.sub(other).norm_l1()
    }

    pub fn dist_inf(&self, other: &Site) -> i64 {
        self.sub(other).norm_inf()
    }

    /// The `2d` nearest neighbors, in the order `+e_0, -e_0, +e_1, ...`.
    pub fn neighbors(&self) -> impl Iterator<Item = Site> + '_ {
        (0..2 * self.dim()).map(move |k| {
            let mut s = self.clone();
            s.0[k / 2] += if k % 2 == 0 { 1 } else { -1 };
            s
        })
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Product of inclusive integer intervals `[lower_i, upper_i]`.
///
/// Sites are enumerated in row-major order (last axis fastest).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxRegion {
    lower: Site,
    upper: Site,
}

impl BoxRegion {
    pub fn new(lower: Site, upper: Site) -> Result<Self> {
        if lower.dim() != upper.dim() || lower.dim() == 0 {
            return Err(Error::invalid("box", "corner dimensions differ or are zero"));
        }
        if let Some(i) = (0..lower.dim()).find(|&i| lower.0[i] > upper.0[i]) {
            return Err(Error::invalid(
                "box",
                format!("empty along axis {i}: lower {lower} upper {upper}"),
            ));
        }
        Ok(BoxRegion { lower, upper })
    }

    /// `B_n(center) = {x : |x - center|_inf <= n}`.
    pub fn ball(center: &Site, n: i64) -> Self {
        assert!(n >= 0, "ball radius must be non-negative");
        BoxRegion {
            lower: Site(center.0.iter().map(|c| c - n).collect()),
            upper: Site(center.0.iter().map(|c| c + n).collect()),
        }
    }

    /// `B_n` centered at the origin of Z^d.
    pub fn centered(d: usize, n: i64) -> Self {
        Self::ball(&Site::origin(d), n)
    }

    /// The box `lower + [0, side)^d` of a half-open cube.
    pub fn half_open_cube(lower: &Site, start: i64, end: i64) -> Self {
        assert!(end > start, "half-open interval [{start},{end}) is empty");
        BoxRegion {
            lower: Site(lower.0.iter().map(|c| c + start).collect()),
            upper: Site(lower.0.iter().map(|c| c + end - 1).collect()),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Site {
        &self.lower
    }

    pub fn upper(&self) -> &Site {
        &self.upper
    }

    pub fn side(&self, axis: usize) -> usize {
        (self.upper.0[axis] - self.lower.0[axis] + 1) as usize
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.dim()).map(|i| self.side(i)).collect()
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1usize; d];
        for i in (0..d - 1).rev() {
            s[i] = s[i + 1] * self.side(i + 1);
        }
        s
    }

    pub fn contains(&self, x: &Site) -> bool {
        x.dim() == self.dim() && (0..self.dim()).all(|i| self.lower.0[i] <= x.0[i] && x.0[i] <= self.upper.0[i])
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    pub fn intersect(&self, other: &BoxRegion) -> Option<BoxRegion> {
        let lower = Site::new((0..self.dim()).map(|i| self.lower.0[i].max(other.lower.0[i])));
        let upper = Site::new((0..self.dim()).map(|i| self.upper.0[i].min(other.upper.0[i])));
        BoxRegion::new(lower, upper).ok()
    }

    /// Grow by `r` sites in every direction.
    pub fn expand(&self, r: i64) -> BoxRegion {
        BoxRegion {
            lower: Site(self.lower.0.iter().map(|c| c - r).collect()),
            upper: Site(self.upper.0.iter().map(|c| c + r).collect()),
        }
    }

    pub fn translate(&self, v: &Site) -> BoxRegion {
        BoxRegion {
            lower: self.lower.add(v),
            upper: self.upper.add(v),
        }
    }

    pub fn index_of(&self, x: &Site) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx = 0usize;
        for i in 0..self.dim() {
            idx = idx * self.side(i) + (x.0[i] - self.lower.0[i]) as usize;
        }
        Some(idx)
    }

    pub fn site_at(&self, mut idx: usize) -> Site {
        let d = self.dim();
        let mut c: Coords = smallvec::smallvec![0; d];
        for i in (0..d).rev() {
            let s = self.side(i);
            c[i] = self.lower.0[i] + (idx % s) as i64;
            idx /= s;
        }
        Site(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site_at(i))
    }

    /// ℓ∞-diameter, i.e. the largest side minus one.
    pub fn diameter_inf(&self) -> i64 {
        (0..self.dim()).map(|i| self.side(i) as i64 - 1).max().unwrap_or(0)
    }

    pub fn to_site_set(&self) -> SiteSet {
        SiteSet::from_sorted_unique(self.iter().collect())
    }

    /// Sites of the box with at least one coordinate on the box's faces.
    pub fn is_on_face(&self, x: &Site) -> bool {
        (0..self.dim()).any(|i| x.0[i] == self.lower.0[i] || x.0[i] == self.upper.0[i])
    }
}

impl fmt::Debug for BoxRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{},{}]", self.lower.0[i], self.upper.0[i])?;
        }
        write!(f, "]")
    }
}

/// A finite set of sites with O(1) membership. Sites are kept sorted, which
/// fixes their linear index.
#[derive(Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<Site>", into = "Vec<Site>")]
pub struct SiteSet {
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
}

impl SiteSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn from_sorted_unique(sites: Vec<Site>) -> Self {
        let index = sites.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        SiteSet { sites, index }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.sites.first().map(Site::dim)
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.index.contains_key(x)
    }

    pub fn index_of(&self, x: &Site) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Site> {
        self.sites.iter()
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        self.iter().chain(other.iter()).cloned().collect()
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.iter().all(|x| other.contains(x))
    }

    pub fn translate(&self, v: &Site) -> SiteSet {
        self.iter().map(|x| x.add(v)).collect()
    }

    /// Smallest box containing the set, `None` when empty.
    pub fn bounding_box(&self) -> Option<BoxRegion> {
        let d = self.dim()?;
        let mut lo = self.sites[0].clone();
        let mut hi = self.sites[0].clone();
        for s in &self.sites {
            for i in 0..d {
                lo.0[i] = lo.0[i].min(s.0[i]);
                hi.0[i] = hi.0[i].max(s.0[i]);
            }
        }
        Some(BoxRegion { lower: lo, upper: hi })
    }

    /// ℓ∞-diameter of the set.
    pub fn diameter_inf(&self) -> i64 {
        self.bounding_box().map_or(0, |b| b.diameter_inf())
    }
}

impl From<Vec<Site>> for SiteSet {
    fn from(v: Vec<Site>) -> Self {
        v.into_iter().collect()
    }
}

impl From<SiteSet> for Vec<Site> {
    fn from(s: SiteSet) -> Self {
        s.sites
    }
}

impl FromIterator<Site> for SiteSet {
    fn from_iter<I: IntoIterator<Item = Site>>(iter: I) -> Self {
        let mut v: Vec<Site> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SiteSet::from_sorted_unique(v)
    }
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.sites.iter()).finish()
    }
}

/// Exterior vertex boundary `∂U = {x ∉ U : ∃ y ∈ U, |x - y|_1 = 1}`.
pub fn boundary(u: &SiteSet) -> SiteSet {
    u.iter()
        .flat_map(|y| y.neighbors().collect::<Vec<_>>())
        .filter(|x| !u.contains(x))
        .collect()
}

/// A vertex `z` of the coarse lattice `L Z^d` together with the scale `L` and
/// separation `K` that define its boxes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RenormIndex {
    z: Site,
    scale: i64,
    separation: i64,
}

/// The boxes `C_z ⊂ D_z ⊂ U_z` attached to a coarse vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenormBoxes {
    pub c: BoxRegion,
    pub d: BoxRegion,
    pub u: BoxRegion,
}

impl RenormIndex {
    pub fn new(z: Site, scale: i64, separation: i64) -> Result<Self> {
        if scale < 1 {
            return Err(Error::invalid("L", format!("scale must be >= 1, got {scale}")));
        }
        if separation < DEFAULT_SEPARATION {
            return Err(Error::invalid(
                "K",
                format!("separation must be >= 4 so that D_z ⊂ U_z, got {separation}"),
            ));
        }
        if let Some(c) = z.coords().iter().find(|c| *c % scale != 0) {
            return Err(Error::invalid(
                "z",
                format!("coordinate {c} of {z} is not a multiple of L = {scale}"),
            ));
        }
        Ok(RenormIndex { z, scale, separation })
    }

    /// The coarse vertex whose `C` box contains `x`.
    pub fn containing(x: &Site, scale: i64, separation: i64) -> Result<Self> {
        let z = Site::new(x.coords().iter().map(|c| c.div_euclid(scale) * scale));
        Self::new(z, scale, separation)
    }

    pub fn site(&self) -> &Site {
        &self.z
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn separation(&self) -> i64 {
        self.separation
    }

    pub fn dim(&self) -> usize {
        self.z.dim()
    }

    /// `C_z = z + [0, L)^d`.
    pub fn c_box(&self) -> BoxRegion {
        BoxRegion::half_open_cube(&self.z, 0, self.scale)
    }

    /// `D_z = z + [-3L, 4L)^d`.
    pub fn d_box(&self) -> BoxRegion {
        BoxRegion::half_open_cube(&self.z, -3 * self.scale, 4 * self.scale)
    }

    /// `U_z = z + [-KL + 1, L + KL - 1)^d`.
    pub fn u_box(&self) -> BoxRegion {
        let kl = self.separation * self.scale;
        BoxRegion::half_open_cube(&self.z, -kl + 1, self.scale + kl - 1)
    }

    pub fn boxes(&self) -> RenormBoxes {
        RenormBoxes {
            c: self.c_box(),
            d: self.d_box(),
            u: self.u_box(),
        }
    }

    /// Coarse nearest neighbors `x` with `|x - z|_1 = L`.
    pub fn neighbors(&self) -> Vec<RenormIndex> {
        self.z
            .neighbors()
            .map(|n| {
                let shifted = Site::new(
                    n.coords()
                        .iter()
                        .zip(self.z.coords())
                        .map(|(a, b)| b + (a - b) * self.scale),
                );
                RenormIndex {
                    z: shifted,
                    scale: self.scale,
                    separation: self.separation,
                }
            })
            .collect()
    }

    /// Coarse *-neighbors (`|x - z|_inf = L`), `3^d - 1` of them.
    pub fn star_neighbors(&self) -> Vec<RenormIndex> {
        let d = self.dim();
        let mut out = Vec::with_capacity(3usize.pow(d as u32) - 1);
        let offsets = BoxRegion::centered(d, 1);
        for off in offsets.iter() {
            if off.norm_inf() == 0 {
                continue;
            }
            let z = Site::new(
                self.z
                    .coords()
                    .iter()
                    .zip(off.coords())
                    .map(|(a, o)| a + o * self.scale),
            );
            out.push(RenormIndex {
                z,
                scale: self.scale,
                separation: self.separation,
            });
        }
        out
    }
}

/// The boxes of a coarse vertex (validates `L >= 1`, `K >= 4`).
pub fn renorm_boxes(z: &RenormIndex) -> RenormBoxes {
    z.boxes()
}

/// All coarse vertices `z ∈ L Z^d` whose `C_z` meets `region`.
pub fn coarse_cover(region: &BoxRegion, scale: i64, separation: i64) -> Result<Vec<RenormIndex>> {
    if scale < 1 {
        return Err(Error::invalid("L", format!("scale must be >= 1, got {scale}")));
    }
    let d = region.dim();
    let lo = Site::new((0..d).map(|i| region.lower().coords()[i].div_euclid(scale)));
    let hi = Site::new((0..d).map(|i| region.upper().coords()[i].div_euclid(scale)));
    let coarse = BoxRegion::new(lo, hi)?;
    coarse
        .iter()
        .map(|c| RenormIndex::new(Site::new(c.coords().iter().map(|v| v * scale)), scale, separation))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: &[i64]) -> Site {
        Site::new(c.iter().copied())
    }

    #[test]
    fn boundary_of_single_site_is_its_neighbors() {
        let u: SiteSet = [Site::origin(3)].into_iter().collect();
        let b = boundary(&u);
        assert_eq!(b.len(), 6);
        assert!(b.iter().all(|x| x.norm_l1() == 1));
    }

    #[test]
    fn boundary_of_unit_ball_and_pair() {
        // ℓ1-adjacency reaches only the face layers: 6 faces of 3x3 sites
        let b1 = BoxRegion::centered(3, 1).to_site_set();
        assert_eq!(boundary(&b1).len(), 54);
        let pair: SiteSet = [s(&[0, 0, 0]), s(&[1, 0, 0])].into_iter().collect();
        assert_eq!(boundary(&pair).len(), 10);
        assert!(boundary(&SiteSet::new()).is_empty());
    }

    #[test]
    fn renorm_boxes_match_definitions() {
        let z = RenormIndex::new(Site::origin(3), 10, 4).unwrap();
        let b = renorm_boxes(&z);
        assert_eq!(b.c, BoxRegion::new(s(&[0, 0, 0]), s(&[9, 9, 9])).unwrap());
        assert_eq!(b.d, BoxRegion::new(Site::splat(3, -30), Site::splat(3, 39)).unwrap());
        assert_eq!(b.u, BoxRegion::new(Site::splat(3, -39), Site::splat(3, 48)).unwrap());

        let unit = RenormIndex::new(Site::origin(3), 1, 4).unwrap();
        assert_eq!(unit.c_box().len(), 1);

        let shifted = RenormIndex::new(s(&[10, 0, 0]), 10, 4).unwrap();
        assert_eq!(shifted.c_box(), BoxRegion::new(s(&[10, 0, 0]), s(&[19, 9, 9])).unwrap());
        assert!(RenormIndex::new(Site::origin(3), 10, 3).is_err());
        assert!(RenormIndex::new(s(&[5, 0, 0]), 10, 4).is_err());
    }

    #[test]
    fn hierarchy_nested_exhaustively() {
        for l in 1..=3 {
            for k in 4..=5 {
                let z = RenormIndex::new(s(&[l, -l, 0]), l, k).unwrap();
                let b = z.boxes();
                assert!(b.c.iter().all(|x| b.d.contains(&x)));
                assert!(b.d.iter().all(|x| b.u.contains(&x)));
            }
        }
    }

    #[test]
    fn coarse_cover_counts() {
        assert_eq!(coarse_cover(&BoxRegion::centered(3, 9), 10, 4).unwrap().len(), 8);
        assert_eq!(coarse_cover(&BoxRegion::centered(3, 0), 7, 4).unwrap().len(), 1);
        // brute force: every multiple of L whose cell meets B_19
        let b = BoxRegion::centered(3, 19);
        let mut brute = 0;
        for a in -4..=4i64 {
            for c in -4..=4i64 {
                for e in -4..=4i64 {
                    let z = RenormIndex::new(s(&[10 * a, 10 * c, 10 * e]), 10, 4).unwrap();
                    if z.c_box().intersect(&b).is_some() {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, 64);
        assert_eq!(coarse_cover(&b, 10, 4).unwrap().len(), 64);
    }

    #[test]
    fn box_index_roundtrip() {
        let b = BoxRegion::new(s(&[-1, 2, 0]), s(&[2, 4, 1])).unwrap();
        for (i, x) in b.iter().enumerate() {
            assert_eq!(b.index_of(&x), Some(i));
        }
        assert_eq!(b.len(), 4 * 3 * 2);
        assert_eq!(b.strides(), vec![6, 2, 1]);
    }

    #[test]
    fn star_neighbors_count() {
        let z = RenormIndex::new(Site::origin(3), 2, 4).unwrap();
        assert_eq!(z.star_neighbors().len(), 26);
        assert_eq!(z.neighbors().len(), 6);
        assert!(z.neighbors().iter().all(|n| n.site().norm_l1() == 2));
    }
}
