//! Good and bad coarse boxes, the bad-box census with its *-connected
//! components, the scale schedule, and deterministic path diagnostics.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{gibbs_markov_split_box, FieldSample};
use crate::lattice::{coarse_cover, BoxRegion, RenormIndex, Site};
use crate::topology::{
    level_clusters_in, local_diameter_threshold, local_uniqueness_events, max_pair_distance, require_domain,
    shortest_path, stretch_summary, EventKind, EventReport, LocalUniqueness, OpenGrid, PairMode, SpreadBound, Witness,
};

/// Levels `(ε, h₁, h₂)` and the chemical-distance constant `C₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub epsilon: f64,
    pub h1: f64,
    pub h2: f64,
    pub c1: f64,
}

impl ClassParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if self.h1 > self.h2 {
            return Err(Error::invalid(
                "h1",
                format!("h1 = {} exceeds h2 = {}", self.h1, self.h2),
            ));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::invalid("c1", "must be positive"));
        }
        Ok(())
    }
}

/// `min_{D_z} ξ > -ε`.
pub fn classify_xi(xi: &FieldSample, z: &RenormIndex, epsilon: f64) -> Result<bool> {
    Ok(xi_minimum(xi, z)? > -epsilon)
}

fn xi_minimum(xi: &FieldSample, z: &RenormIndex) -> Result<f64> {
    let d = z.d_box();
    require_domain(xi, &d, "xi classification: D_z")?;
    Ok(d.iter().map(|x| xi.get(&x).unwrap()).fold(f64::INFINITY, f64::min))
}

/// Outcome of the ψ-goodness test at one coarse site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiReport {
    pub good: bool,
    pub local: LocalUniqueness,
    /// Bound on `max η_{z,h₁}` over `S^ψ_z(h₂) ∩ D_z`; `None` when the
    /// LocUniq part already failed and `η` was not examined.
    pub eta: Option<EtaBound>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EtaBound {
    /// Some pair is not joined inside `S^ψ_z(h₁)`.
    Infinite,
    Exceeds {
        lower: u32,
    },
    Within {
        upper: u32,
    },
}

/// Thresholded search for `max η_{z,h₁}(x, y)` over `x, y ∈ S^ψ_z(h₂) ∩ D_z`,
/// with `η` counting sites on the path (steps + 1). Paths run through the
/// components of `{ψ ≥ h₁}` of diameter `≥ ⌈L/10⌉` inside `U_z ∩` the
/// field's domain. `limit = None` computes the exact maximum.
pub fn eta_bound(psi: &FieldSample, z: &RenormIndex, h1: f64, h2: f64, limit: Option<u32>) -> Result<EtaBound> {
    let boxes = z.boxes();
    require_domain(psi, &boxes.d, "psi classification: D_z")?;
    let window = match psi.region() {
        Some(b) => b.intersect(&boxes.u).unwrap_or_else(|| boxes.d.clone()),
        None => boxes.u.clone(),
    };
    let t = local_diameter_threshold(z.scale());
    let high = level_clusters_in(psi, h2, &window);
    let low = level_clusters_in(psi, h1, &window);
    let keep: Vec<bool> = low.clusters().iter().map(|c| c.diameter >= t).collect();
    let mut graph: OpenGrid = low.grid().clone();
    for i in graph.interior().collect::<Vec<_>>() {
        if let Some(l) = low.label_at(i) {
            if !keep[l] {
                graph.set_open(i, false);
            }
        }
    }
    let targets: Vec<usize> = high
        .clusters_with_diameter_at_least(t)
        .into_iter()
        .flat_map(|l| high.members(l))
        .filter(|&i| boxes.d.contains(&high.grid().site(i)))
        .collect();
    if targets.iter().any(|&i| !graph.is_open(i)) {
        return Ok(EtaBound::Infinite);
    }
    // η <= C₁L  ⇔  steps <= C₁L - 1
    let steps_limit = limit.map_or(u32::MAX, |l| l.saturating_sub(1));
    if limit == Some(0) && !targets.is_empty() {
        return Ok(EtaBound::Exceeds { lower: 1 });
    }
    Ok(match max_pair_distance(&graph, &targets, steps_limit).0 {
        SpreadBound::Disconnected => EtaBound::Infinite,
        SpreadBound::Exceeds { lower } => EtaBound::Exceeds { lower: lower + 1 },
        SpreadBound::Within { upper } => EtaBound::Within {
            upper: if targets.is_empty() { 0 } else { upper + 1 },
        },
    })
}

/// `η` bound `⌊C₁ L⌋` used by the ψ-goodness test.
pub fn eta_limit(c1: f64, scale: i64) -> u32 {
    (c1 * scale as f64).floor().max(0.0) as u32
}

/// ψ-good at level `(h₁, h₂)`: LocUniq and `η_{z,h₁} ≤ C₁L` on large local
/// clusters in `D_z`.
pub fn classify_psi(psi: &FieldSample, z: &RenormIndex, h1: f64, h2: f64, c1: f64) -> Result<PsiReport> {
    let local = local_uniqueness_events(psi, z, h1, h2)?;
    if !local.loc_uniq.outcome {
        return Ok(PsiReport {
            good: false,
            local,
            eta: None,
        });
    }
    let eta = eta_bound(psi, z, h1, h2, Some(eta_limit(c1, z.scale())))?;
    Ok(PsiReport {
        good: matches!(eta, EtaBound::Within { .. }),
        local,
        eta: Some(eta),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxClassification {
    pub z: RenormIndex,
    pub params: ClassParams,
    pub xi_good: bool,
    pub psi_good: bool,
    /// `min_{D_z} ξ^{U_z}`.
    pub xi_min: f64,
    pub psi: PsiReport,
}

impl BoxClassification {
    pub fn good(&self) -> bool {
        self.xi_good && self.psi_good
    }
}

/// Classifies `z` on a sample of `φ` covering `U_z` and its exit sites, via
/// the Gibbs–Markov split at `U_z`.
pub fn classify(field: &FieldSample, z: &RenormIndex, params: &ClassParams) -> Result<BoxClassification> {
    params.validate()?;
    let u = z.u_box();
    require_domain(field, &u.expand(1), "classification: U_z and its exit sites")?;
    let split = gibbs_markov_split_box(field, &u, &u)?;
    let xi_min = xi_minimum(&split.xi, z)?;
    let psi = classify_psi(&split.psi, z, params.h1, params.h2, params.c1)?;
    Ok(BoxClassification {
        z: z.clone(),
        params: *params,
        xi_good: xi_min > -params.epsilon,
        psi_good: psi.good,
        xi_min,
        psi,
    })
}

/// Classifies every site of `zs`; results keep the input order.
pub fn classify_all(field: &FieldSample, zs: &[RenormIndex], params: &ClassParams) -> Result<Vec<BoxClassification>> {
    zs.par_iter().map(|z| classify(field, z, params)).collect()
}

/// Maximum `η/L` over large local clusters, with LocUniq required; used to
/// calibrate `C₁`. `None` when LocUniq fails or `η` is infinite.
pub fn eta_ratio(field: &FieldSample, z: &RenormIndex, h1: f64, h2: f64) -> Result<Option<f64>> {
    let u = z.u_box();
    require_domain(field, &u.expand(1), "calibration: U_z and its exit sites")?;
    let split = gibbs_markov_split_box(field, &u, &u)?;
    if !local_uniqueness_events(&split.psi, z, h1, h2)?.loc_uniq.outcome {
        return Ok(None);
    }
    Ok(match eta_bound(&split.psi, z, h1, h2, None)? {
        EtaBound::Within { upper } => Some(upper as f64 / z.scale() as f64),
        _ => None,
    })
}

/// Empirical `q`-quantile (nearest rank) of finite values.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

/// A *-connected component of bad coarse sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadComponent {
    pub sites: Vec<Site>,
    /// ℓ∞-diameter in lattice units.
    pub diameter: i64,
    /// Coarse nearest-neighbor boundary `∂C` (all good).
    pub boundary: Vec<Site>,
}

impl BadComponent {
    /// `C̄ = C ∪ ∂C`.
    pub fn closure(&self) -> Vec<Site> {
        let mut v: Vec<Site> = self.sites.iter().chain(&self.boundary).cloned().collect();
        v.sort();
        v
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BadClusterMap {
    pub components: Vec<BadComponent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub bad_count: usize,
    pub map: BadClusterMap,
}

/// Bad-box count over `coarse_cover(window)` and its *-components.
pub fn census(
    window: &BoxRegion,
    scale: i64,
    separation: i64,
    classifications: &[BoxClassification],
) -> Result<Census> {
    let good: HashMap<&Site, bool> = classifications.iter().map(|c| (c.z.site(), c.good())).collect();
    census_from_flags(window, scale, separation, &good)
}

/// [`census`] on a bare goodness table.
pub fn census_from_flags(
    window: &BoxRegion,
    scale: i64,
    separation: i64,
    good: &HashMap<&Site, bool>,
) -> Result<Census> {
    let cover = coarse_cover(window, scale, separation)?;
    let mut bad: Vec<Site> = Vec::new();
    for z in &cover {
        match good.get(z.site()) {
            Some(true) => {}
            Some(false) => bad.push(z.site().clone()),
            None => return Err(Error::MissingClassification(z.site().clone())),
        }
    }
    bad.sort();
    let bad_set: HashMap<Site, usize> = bad.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut seen = vec![false; bad.len()];
    let mut components = Vec::new();
    for start in 0..bad.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        let mut sites = Vec::new();
        while let Some(i) = q.pop_front() {
            sites.push(bad[i].clone());
            let z = RenormIndex::new(bad[i].clone(), scale, separation)?;
            for nb in z.star_neighbors() {
                if let Some(&j) = bad_set.get(nb.site()) {
                    if !seen[j] {
                        seen[j] = true;
                        q.push_back(j);
                    }
                }
            }
        }
        sites.sort();
        let mut boundary: Vec<Site> = Vec::new();
        for s in &sites {
            for nb in RenormIndex::new(s.clone(), scale, separation)?.neighbors() {
                if !bad_set.contains_key(nb.site()) {
                    boundary.push(nb.site().clone());
                }
            }
        }
        boundary.sort();
        boundary.dedup();
        let d = sites[0].dim();
        let diameter = (0..d)
            .map(|i| {
                let lo = sites.iter().map(|s| s.coords()[i]).min().unwrap();
                let hi = sites.iter().map(|s| s.coords()[i]).max().unwrap();
                hi - lo
            })
            .max()
            .unwrap_or(0);
        components.push(BadComponent {
            sites,
            diameter,
            boundary,
        });
    }
    Ok(Census {
        bad_count: bad.len(),
        map: BadClusterMap { components },
    })
}

/// `m_N = ⌊N^{1-2/d}/ln N⌋` and `L_N = ⌊M (N^{2/d} ln N)^{1/d}⌋`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub d: usize,
    pub n: u64,
    pub m_const: f64,
    pub m_n: u64,
    pub l_n: u64,
    /// `m_N L_N^d / N`.
    pub volume_ratio: f64,
    /// `m_N^{2/d} / L_N^{d-2}`.
    pub feasibility: f64,
    /// `m_N = 0` or `L_N = 0`.
    pub degenerate: bool,
}

pub fn scale_schedule(d: usize, n: u64, m_const: f64) -> Result<ScaleSchedule> {
    if d < crate::lattice::MIN_DIM {
        return Err(Error::invalid("d", "dimension must be >= 3"));
    }
    if n < 3 {
        return Err(Error::invalid("N", "need N >= 3 so that ln N > 1"));
    }
    if !(m_const > 0.0) {
        return Err(Error::invalid("M", "must be positive"));
    }
    let nf = n as f64;
    let df = d as f64;
    let ln = nf.ln();
    let m_n = (nf.powf(1.0 - 2.0 / df) / ln).floor() as u64;
    let l_n = (m_const * (nf.powf(2.0 / df) * ln).powf(1.0 / df)).floor() as u64;
    let degenerate = m_n == 0 || l_n == 0;
    Ok(ScaleSchedule {
        d,
        n,
        m_const,
        m_n,
        l_n,
        volume_ratio: m_n as f64 * (l_n as f64).powi(d as i32) / nf,
        feasibility: if degenerate {
            f64::NAN
        } else {
            (m_n as f64).powf(2.0 / df) / (l_n as f64).powf(df - 2.0)
        },
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodPathReport {
    pub event: EventReport,
    /// Steps of the shortest path found, if any.
    pub length: Option<u32>,
    /// `C₁ L n`.
    pub bound: f64,
    /// All boxes good but no path: the classification is inconsistent with
    /// the path property and the inputs should be kept for inspection.
    pub counterexample: bool,
}

/// Searches `E^{≥h₁-ε} ∩ ∪ D_{z_i}` for a path from `C_{z_1}` to `C_{z_n}`
/// along a nearest-neighbor chain of good coarse sites.
pub fn good_path_check(
    field: &FieldSample,
    classifications: &[BoxClassification],
    path: &[RenormIndex],
    params: &ClassParams,
) -> Result<GoodPathReport> {
    if path.is_empty() {
        return Err(Error::invalid("path", "empty coarse path"));
    }
    let table: HashMap<&Site, &BoxClassification> = classifications.iter().map(|c| (c.z.site(), c)).collect();
    for w in path.windows(2) {
        if w[0].site().dist_l1(w[1].site()) != w[0].scale() {
            return Err(Error::invalid(
                "path",
                format!("{} and {} are not coarse neighbors", w[0].site(), w[1].site()),
            ));
        }
    }
    for z in path {
        let c = table
            .get(z.site())
            .ok_or_else(|| Error::MissingClassification(z.site().clone()))?;
        if !c.good() {
            return Err(Error::invalid("path", format!("coarse site {} is not good", z.site())));
        }
    }
    let ds: Vec<BoxRegion> = path.iter().map(|z| z.d_box()).collect();
    let mut hull = ds[0].clone();
    for b in &ds[1..] {
        hull = BoxRegion::new(
            Site::new((0..b.dim()).map(|i| hull.lower().coords()[i].min(b.lower().coords()[i]))),
            Site::new((0..b.dim()).map(|i| hull.upper().coords()[i].max(b.upper().coords()[i]))),
        )?;
    }
    for b in &ds {
        require_domain(field, b, "good path: D_z")?;
    }
    let level = params.h1 - params.epsilon;
    let grid = OpenGrid::from_fn(&hull, |x| {
        ds.iter().any(|b| b.contains(x)) && field.get(x).is_some_and(|v| v >= level)
    });
    let first = path[0].c_box();
    let last = path[path.len() - 1].c_box();
    let sources: Vec<usize> = first.iter().filter_map(|x| grid.index(&x)).collect();
    let mut dist = Vec::new();
    grid.bfs(&sources, u32::MAX, &mut dist);
    let end = last
        .iter()
        .filter_map(|x| grid.index(&x))
        .filter(|&i| dist[i] != u32::MAX)
        .min_by_key(|&i| dist[i]);
    let bound = params.c1 * path[0].scale() as f64 * path.len() as f64;
    Ok(match end {
        Some(e) => {
            let length = dist[e];
            let start = *sources
                .iter()
                .filter(|&&s| dist[s] == 0)
                .find(|&&s| grid.distance(s, e) == Some(length))
                .unwrap();
            let witness = shortest_path(&grid, start, e).map(Witness::Path);
            let mut event = EventReport::new(EventKind::D, (length as f64) <= bound);
            event.witness = witness;
            GoodPathReport {
                event,
                length: Some(length),
                bound,
                counterexample: false,
            }
        }
        None => GoodPathReport {
            event: EventReport::new(EventKind::D, false),
            length: None,
            bound,
            counterexample: true,
        },
    })
}

/// Writes the field and classification table of a failed path check.
pub fn dump_counterexample(dir: &Path, field: &FieldSample, classifications: &[BoxClassification]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    crate::field::write_field(field, &dir.join("field.gff"))?;
    write_classifications(&dir.join("classification.jsonl"), classifications)
}

/// One JSON record per coarse site.
pub fn write_classifications(path: &Path, classifications: &[BoxClassification]) -> Result<()> {
    crate::io::atomic_write(path, |f| {
        let mut w = std::io::BufWriter::new(f);
        for c in classifications {
            #[derive(Serialize)]
            struct Row<'a> {
                z: &'a Site,
                scale: i64,
                separation: i64,
                good: bool,
                xi_good: bool,
                psi_good: bool,
                xi_min: f64,
                exist: bool,
                unique: bool,
                eta: Option<EtaBound>,
                params: ClassParams,
            }
            let row = Row {
                z: c.z.site(),
                scale: c.z.scale(),
                separation: c.z.separation(),
                good: c.good(),
                xi_good: c.xi_good,
                psi_good: c.psi_good,
                xi_min: c.xi_min,
                exist: c.psi.local.exist.outcome,
                unique: c.psi.local.unique.outcome,
                eta: c.psi.eta,
                params: c.params,
            };
            serde_json::to_writer(&mut w, &row)?;
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChemicalBoundReport {
    pub schedule: ScaleSchedule,
    pub params: ClassParams,
    /// `|B_{2N}|`, the number of bad coarse sites meeting `B_{2N}`.
    pub bad_count: usize,
    /// `|B_{2N}| <= m_N`; otherwise the sample is excluded.
    pub included: bool,
    /// `max ρ_h(x, y) / N` over connected representative pairs in
    /// `S_N(h) ∩ B_N`.
    pub max_ratio: Option<f64>,
    pub component_diameters: Vec<i64>,
}

/// On a sample whose bad census over `B_{2N}` is at most `m_N`, measures
/// `max ρ_h / N` over connected pairs of `S_N(h) ∩ B_N`. Uses
/// `h₁ = h + ε`, `h₂ = h + 2ε`.
pub fn chemical_bound_diagnostic(
    field: &FieldSample,
    h: f64,
    epsilon: f64,
    c1: f64,
    separation: i64,
    schedule: &ScaleSchedule,
    mode: PairMode,
) -> Result<ChemicalBoundReport> {
    // m_N = 0 still admits samples with no bad box
    if schedule.l_n == 0 {
        return Err(Error::invalid("schedule", "L_N is 0"));
    }
    let params = ClassParams {
        epsilon,
        h1: h + epsilon,
        h2: h + 2.0 * epsilon,
        c1,
    };
    let d = schedule.d;
    let n = schedule.n as i64;
    let l = schedule.l_n as i64;
    let b2n = BoxRegion::centered(d, 2 * n);
    let cover = coarse_cover(&b2n, l, separation)?;
    let classes = classify_all(field, &cover, &params)?;
    let c = census(&b2n, l, separation, &classes)?;
    let included = c.bad_count as u64 <= schedule.m_n;
    let max_ratio = if included {
        let lab = level_clusters_in(field, h, &b2n);
        let s = stretch_summary(&lab, n, &BoxRegion::centered(d, n), mode);
        s.max_finite.map(|m| m as f64 / n as f64)
    } else {
        None
    };
    Ok(ChemicalBoundReport {
        schedule: *schedule,
        params,
        bad_count: c.bad_count,
        included,
        max_ratio,
        component_diameters: c.map.components.iter().map(|k| k.diameter).collect(),
    })
}

/// Coarse sites of `cover` keyed by site, for lookups.
pub fn by_site(classifications: &[BoxClassification]) -> BTreeMap<Site, &BoxClassification> {
    classifications.iter().map(|c| (c.z.site().clone(), c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z0(l: i64) -> RenormIndex {
        RenormIndex::new(Site::origin(3), l, 4).unwrap()
    }

    #[test]
    fn xi_goodness_is_strict() {
        let z = z0(4);
        let d = z.d_box();
        assert!(classify_xi(&FieldSample::constant(&d, 0.0), &z, 0.1).unwrap());
        let f = FieldSample::from_fn(&d, |x| if x == &Site::new([1, 1, 1]) { -0.1 } else { 0.0 });
        assert!(!classify_xi(&f, &z, 0.1).unwrap());
        assert!(classify_xi(&FieldSample::constant(&z.c_box(), 0.0), &z, 0.1).is_err());
    }

    #[test]
    fn constant_psi_is_good_iff_c1_covers_d_box() {
        let z = z0(10);
        let psi = FieldSample::constant(&z.u_box(), 1.0);
        assert!(classify_psi(&psi, &z, 0.0, 1.0, 21.0).unwrap().good);
        // ℓ1 diameter of D_z is 3 * 69 steps, i.e. η = 208 sites
        match eta_bound(&psi, &z, 0.0, 1.0, None).unwrap() {
            EtaBound::Within { upper } => assert_eq!(upper, 208),
            other => panic!("{other:?}"),
        }
        assert!(!classify_psi(&psi, &z, 0.0, 1.0, 20.7).unwrap().good);
        assert!(classify_psi(&psi, &z, 0.0, 1.0, 20.8).unwrap().good);
        let low = FieldSample::constant(&z.u_box(), -2.0);
        let r = classify_psi(&low, &z, 0.0, 1.0, 21.0).unwrap();
        assert!(!r.good && !r.local.exist.outcome);
    }

    #[test]
    fn census_components() {
        let window = BoxRegion::centered(3, 19);
        let cover = coarse_cover(&window, 10, 4).unwrap();
        let mut flags: HashMap<&Site, bool> = cover.iter().map(|z| (z.site(), true)).collect();
        assert_eq!(census_from_flags(&window, 10, 4, &flags).unwrap().bad_count, 0);
        let a = Site::new([0, 0, 0]);
        let b = Site::new([10, 10, 0]);
        flags.insert(&a, false);
        flags.insert(&b, false);
        let c = census_from_flags(&window, 10, 4, &flags).unwrap();
        assert_eq!(c.bad_count, 2);
        assert_eq!(c.map.components.len(), 1);
        assert_eq!(c.map.components[0].sites.len(), 2);
        assert_eq!(c.map.components[0].diameter, 10);
        let missing = Site::new([-20, -20, -20]);
        flags.remove(&missing);
        let mut partial = flags.clone();
        partial.remove(&Site::new([-10, -10, -10]));
        assert!(matches!(
            census_from_flags(&window, 10, 4, &partial),
            Err(Error::MissingClassification(_))
        ));
    }

    #[test]
    fn schedule_examples() {
        let s = scale_schedule(3, 1_000_000, 1.0).unwrap();
        assert_eq!(s.m_n, 7);
        assert_eq!(s.l_n, 51);
        let s = scale_schedule(3, 100, 1.0).unwrap();
        // (100^{2/3} ln 100)^{1/3} = 4.63...
        assert_eq!(s.l_n, 4);
        // 100^{1/3} / ln 100 = 1.007...
        assert_eq!(s.m_n, 1);
        assert!(!s.degenerate);
        assert!(scale_schedule(3, 50, 1.0).unwrap().degenerate);
        assert!(scale_schedule(3, 2, 1.0).is_err());
    }

    #[test]
    fn good_path_on_constant_field() {
        let z = z0(4);
        let params = ClassParams {
            epsilon: 0.5,
            h1: -1.0,
            h2: -0.5,
            c1: 21.0,
        };
        let field = FieldSample::constant(&z.u_box().expand(1), 1.0);
        let c = classify(&field, &z, &params).unwrap();
        // ξ is the harmonic extension of 1 from ∂U_z: identically 1, so ψ ≡ 0
        assert!((c.xi_min - 1.0).abs() < 1e-9);
        assert!(c.good());
        let r = good_path_check(&field, &[c], std::slice::from_ref(&z), &params).unwrap();
        assert_eq!(r.length, Some(0));
        assert!(r.event.outcome && !r.counterexample);
    }
}
