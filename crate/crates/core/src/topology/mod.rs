//! Level sets, cluster labeling, chemical distance and local connectivity
//! events.

mod grid;

pub use grid::{max_pair_distance, OpenGrid, SpreadBound, UNREACHED};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::lattice::{BoxRegion, RenormIndex, Site};

pub const NO_CLUSTER: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub size: usize,
    /// ℓ∞-diameter.
    pub diameter: i64,
    pub bbox: BoxRegion,
}

/// Connected components of the open sites of an [`OpenGrid`] under
/// ℓ1-adjacency, labeled `0..` in order of first appearance (row-major).
#[derive(Clone, Debug)]
pub struct ClusterLabeling {
    grid: OpenGrid,
    level: f64,
    labels: Vec<u32>,
    clusters: Vec<ClusterInfo>,
}

fn find(parent: &mut [u32], mut v: u32) -> u32 {
    while parent[v as usize] != v {
        let p = parent[v as usize];
        parent[v as usize] = parent[p as usize];
        v = p;
    }
    v
}

impl ClusterLabeling {
    /// Union-find labeling.
    pub fn from_grid(grid: OpenGrid, level: f64) -> Self {
        let n = grid.padded_len();
        let d = grid.dim();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        let back: Vec<usize> = grid
            .offsets()
            .iter()
            .filter(|&&o| o < 0)
            .map(|&o| (-o) as usize)
            .collect();
        let interior: Vec<usize> = grid.interior().collect();
        for &v in &interior {
            if !grid.is_open(v) {
                continue;
            }
            for &s in &back {
                let w = v - s;
                if grid.is_open(w) {
                    let a = find(&mut parent, v as u32);
                    let b = find(&mut parent, w as u32);
                    if a != b {
                        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                        parent[hi as usize] = lo;
                    }
                }
            }
        }
        let mut labels = vec![NO_CLUSTER; n];
        let mut root_label: Vec<u32> = vec![NO_CLUSTER; n];
        let mut lo: Vec<Vec<i64>> = Vec::new();
        let mut hi: Vec<Vec<i64>> = Vec::new();
        let mut sizes: Vec<usize> = Vec::new();
        for &v in &interior {
            if !grid.is_open(v) {
                continue;
            }
            let r = find(&mut parent, v as u32) as usize;
            if root_label[r] == NO_CLUSTER {
                root_label[r] = sizes.len() as u32;
                sizes.push(0);
                lo.push(vec![i64::MAX; d]);
                hi.push(vec![i64::MIN; d]);
            }
            let l = root_label[r];
            labels[v] = l;
            let l = l as usize;
            sizes[l] += 1;
            for i in 0..d {
                let c = grid.rel_coord(v, i);
                lo[l][i] = lo[l][i].min(c);
                hi[l][i] = hi[l][i].max(c);
            }
        }
        let origin = grid.window().lower().clone();
        let clusters = (0..sizes.len())
            .map(|l| {
                let bbox = BoxRegion::new(
                    origin.add(&Site::new(lo[l].iter().copied())),
                    origin.add(&Site::new(hi[l].iter().copied())),
                )
                .expect("cluster bounding box is nonempty");
                ClusterInfo {
                    size: sizes[l],
                    diameter: bbox.diameter_inf(),
                    bbox,
                }
            })
            .collect();
        ClusterLabeling {
            grid,
            level,
            labels,
            clusters,
        }
    }

    pub fn grid(&self) -> &OpenGrid {
        &self.grid
    }

    pub fn window(&self) -> &BoxRegion {
        self.grid.window()
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn clusters(&self) -> &[ClusterInfo] {
        &self.clusters
    }

    pub fn label(&self, x: &Site) -> Option<usize> {
        self.grid.index(x).and_then(|i| self.label_at(i))
    }

    pub fn label_at(&self, idx: usize) -> Option<usize> {
        match self.labels[idx] {
            NO_CLUSTER => None,
            l => Some(l as usize),
        }
    }

    /// Padded grid indices of the members of cluster `label`, row-major.
    pub fn members(&self, label: usize) -> Vec<usize> {
        self.grid
            .interior()
            .filter(|&i| self.labels[i] == label as u32)
            .collect()
    }

    pub fn sites_of(&self, label: usize) -> Vec<Site> {
        self.members(label).into_iter().map(|i| self.grid.site(i)).collect()
    }

    /// Labels of clusters with ℓ∞-diameter at least `min_diameter`.
    pub fn clusters_with_diameter_at_least(&self, min_diameter: i64) -> Vec<usize> {
        (0..self.clusters.len())
            .filter(|&l| self.clusters[l].diameter >= min_diameter)
            .collect()
    }
}

/// Clusters of `{field >= h}` within the field's domain (its bounding box
/// for site-set domains).
pub fn level_clusters(field: &FieldSample, h: f64) -> ClusterLabeling {
    let window = match field.region() {
        Some(b) => b.clone(),
        None => field
            .domain
            .to_site_set()
            .bounding_box()
            .unwrap_or_else(|| BoxRegion::centered(field.dim().max(1), 0)),
    };
    level_clusters_in(field, h, &window)
}

/// Clusters of `{field >= h} ∩ window`.
pub fn level_clusters_in(field: &FieldSample, h: f64, window: &BoxRegion) -> ClusterLabeling {
    ClusterLabeling::from_grid(OpenGrid::level_set(field, h, window), h)
}

/// `ρ` inside `{field >= h} ∩ window`; `None` stands for infinity.
pub fn chemical_distance(field: &FieldSample, h: f64, x: &Site, y: &Site, window: &BoxRegion) -> Option<u32> {
    let g = OpenGrid::level_set(field, h, window);
    match (g.index(x), g.index(y)) {
        (Some(a), Some(b)) => g.distance(a, b),
        _ => None,
    }
}

/// A shortest open path from `a` to `b`, endpoints included.
pub fn shortest_path(g: &OpenGrid, a: usize, b: usize) -> Option<Vec<Site>> {
    let mut dist = Vec::new();
    g.bfs(&[a], u32::MAX, &mut dist);
    if dist[b] == UNREACHED {
        return None;
    }
    let mut path = vec![b];
    let mut v = b;
    while v != a {
        v = g
            .offsets()
            .iter()
            .map(|&o| (v as isize + o) as usize)
            .find(|&w| dist[w] != UNREACHED && dist[w] + 1 == dist[v])
            .expect("BFS predecessor exists");
        path.push(v);
    }
    path.reverse();
    Some(path.into_iter().map(|i| g.site(i)).collect())
}

/// How representatives of `S_N(h) ∩ B` are chosen for stretch tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    /// Every site of `S_N(h) ∩ B`.
    All,
    /// Per cluster, the sites of `B` with extremal coordinate along each
    /// axis (first in row-major order on ties).
    Extremal,
}

fn representatives(labeling: &ClusterLabeling, n: i64, b: &BoxRegion, mode: PairMode) -> Vec<(usize, Vec<usize>)> {
    let large: Vec<usize> = (0..labeling.clusters.len())
        .filter(|&l| labeling.clusters[l].diameter > n)
        .collect();
    let g = &labeling.grid;
    let d = g.dim();
    let mut out = Vec::new();
    for l in large {
        let members: Vec<usize> = labeling
            .members(l)
            .into_iter()
            .filter(|&i| b.contains(&g.site(i)))
            .collect();
        if members.is_empty() {
            continue;
        }
        let reps = match mode {
            PairMode::All => members,
            PairMode::Extremal => {
                let mut r = Vec::with_capacity(2 * d);
                for axis in 0..d {
                    let key = |&i: &usize| g.rel_coord(i, axis);
                    r.push(*members.iter().min_by_key(|i| key(i)).unwrap());
                    r.push(*members.iter().max_by_key(|i| key(i)).unwrap());
                }
                r.sort_unstable();
                r.dedup();
                r
            }
        };
        out.push((l, reps));
    }
    out
}

/// Representative pairs of `S_N(h) ∩ B`: pairs within each cluster of
/// ℓ∞-diameter `> N` and, when several such clusters meet `B`, pairs across
/// them (chemical distance infinite).
pub fn large_cluster_pairs(labeling: &ClusterLabeling, n: i64, b: &BoxRegion, mode: PairMode) -> Vec<(Site, Site)> {
    let reps = representatives(labeling, n, b, mode);
    let all: Vec<Site> = reps
        .iter()
        .flat_map(|(_, r)| r.iter().map(|&i| labeling.grid.site(i)))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            pairs.push((all[i].clone(), all[j].clone()));
        }
    }
    pairs
}

/// Largest chemical distance among representative pairs of `S_N(h) ∩ B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchSummary {
    /// Number of clusters of diameter `> N` meeting `B`.
    pub large_clusters: usize,
    /// Largest finite `ρ` over representative pairs.
    pub max_finite: Option<u32>,
    /// Whether some pair lies in different clusters (`ρ = ∞`).
    pub disconnected: bool,
}

impl StretchSummary {
    /// `∃ x, y : ρ(x, y) > t`.
    pub fn exceeds(&self, t: f64) -> bool {
        self.disconnected || self.max_finite.is_some_and(|m| m as f64 > t)
    }
}

pub fn stretch_summary(labeling: &ClusterLabeling, n: i64, b: &BoxRegion, mode: PairMode) -> StretchSummary {
    let reps = representatives(labeling, n, b, mode);
    let mut max_finite = None;
    for (_, r) in &reps {
        let (bound, _) = max_pair_distance(&labeling.grid, r, u32::MAX);
        if let SpreadBound::Within { upper } = bound {
            max_finite = Some(max_finite.map_or(upper, |m: u32| m.max(upper)));
        }
    }
    StretchSummary {
        large_clusters: reps.len(),
        max_finite,
        disconnected: reps.len() > 1,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Exist,
    Unique,
    LocUniq,
    Arm,
    D,
    E,
    F,
    G,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    Path(Vec<Site>),
    Sites(Vec<Site>),
    Pair(Site, Site),
    Note(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub kind: EventKind,
    pub outcome: bool,
    pub witness: Option<Witness>,
}

impl EventReport {
    pub fn new(kind: EventKind, outcome: bool) -> Self {
        EventReport {
            kind,
            outcome,
            witness: None,
        }
    }

    pub fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }
}

/// Errors unless every site of `region` carries a field value.
pub fn require_domain(field: &FieldSample, region: &BoxRegion, context: &str) -> Result<()> {
    if let Some(fb) = field.region() {
        if fb.contains_box(region) {
            return Ok(());
        }
    }
    match region.iter().find(|x| !field.domain.contains(x)) {
        Some(x) => Err(Error::domain(context, x)),
        None => Ok(()),
    }
}

/// `⌈L/10⌉`, the integer reading of "diameter at least L/10".
pub fn local_diameter_threshold(scale: i64) -> i64 {
    (scale + 9) / 10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalUniqueness {
    pub exist: EventReport,
    pub unique: EventReport,
    pub loc_uniq: EventReport,
}

/// Large (`diameter >= ⌈L/10⌉`) components of `{χ >= h} ∩ C`, as one
/// representative padded index each into `g_d`, the grid on `D_z`.
fn large_components(field: &FieldSample, h: f64, c: &BoxRegion, t: i64) -> Vec<(Site, ClusterInfo)> {
    let lab = level_clusters_in(field, h, c);
    lab.clusters_with_diameter_at_least(t)
        .into_iter()
        .map(|l| {
            let first = lab.members(l)[0];
            (lab.grid.site(first), lab.clusters[l].clone())
        })
        .collect()
}

/// Exist, Unique and LocUniq for `χ` at coarse site `z`. Components are
/// those of the restriction of the level set to each box.
pub fn local_uniqueness_events(field: &FieldSample, z: &RenormIndex, h1: f64, h2: f64) -> Result<LocalUniqueness> {
    if h1 > h2 {
        return Err(Error::invalid("h1", format!("h1 = {h1} exceeds h2 = {h2}")));
    }
    let boxes = z.boxes();
    require_domain(field, &boxes.d, "local uniqueness: D_z")?;
    let t = local_diameter_threshold(z.scale());
    let own = large_components(field, h2, &boxes.c, t);
    let mut exist = EventReport::new(EventKind::Exist, !own.is_empty());
    if let Some((x, info)) = own.first() {
        exist = exist.with_witness(Witness::Note(format!(
            "component at {x} with diameter {}",
            info.diameter
        )));
    }
    let conn = level_clusters_in(field, h1, &boxes.d);
    let mut unique = EventReport::new(EventKind::Unique, true);
    'outer: for nb in z.neighbors() {
        let theirs = large_components(field, h2, &nb.c_box(), t);
        for (a, _) in &theirs {
            for (b, _) in &own {
                let la = conn.label(a);
                let lb = conn.label(b);
                if la.is_none() || la != lb {
                    unique =
                        EventReport::new(EventKind::Unique, false).with_witness(Witness::Pair(a.clone(), b.clone()));
                    break 'outer;
                }
            }
        }
    }
    let loc_uniq = EventReport::new(EventKind::LocUniq, exist.outcome && unique.outcome);
    Ok(LocalUniqueness {
        exist,
        unique,
        loc_uniq,
    })
}

/// `x ↔ ∂B_R(x)` in `{field >= h}`, where `∂B_R(x)` is the outer boundary
/// `{y : |y - x|_∞ = R + 1}`.
pub fn arm_event(field: &FieldSample, h: f64, x: &Site, r: i64) -> Result<EventReport> {
    let ball = BoxRegion::ball(x, r + 1);
    require_domain(field, &ball, "arm event: B_{R+1}(x)")?;
    let g = OpenGrid::level_set(field, h, &ball);
    let start = g.index(x).unwrap();
    if !g.is_open(start) {
        return Ok(EventReport::new(EventKind::Arm, false));
    }
    let mut dist = Vec::new();
    g.bfs(&[start], u32::MAX, &mut dist);
    let hit = g
        .interior()
        .filter(|&i| dist[i] != UNREACHED && g.site(i).dist_inf(x) == r + 1)
        .min_by_key(|&i| dist[i]);
    Ok(match hit {
        Some(end) => {
            EventReport::new(EventKind::Arm, true).with_witness(Witness::Path(shortest_path(&g, start, end).unwrap()))
        }
        None => EventReport::new(EventKind::Arm, false),
    })
}
