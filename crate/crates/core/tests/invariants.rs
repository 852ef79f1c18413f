use std::collections::HashMap;

use gffperc::experiments::{wilson_interval, Z_95};
use gffperc::field::{read_field, write_field, Domain, FieldMeta};
use gffperc::lattice::{coarse_cover, RenormIndex};
use gffperc::renorm::census_from_flags;
use gffperc::rng::SampleStream;
use gffperc::topology::{chemical_distance, local_uniqueness_events};
use gffperc::walk::{harmonic_measure, killed_green, SolverConfig};
use gffperc::{BoxRegion, FieldSample, Site, SiteSet};
use proptest::prelude::*;

fn random_field(region: &BoxRegion, seed: u64) -> FieldSample {
    let mut rng = SampleStream::new(seed, 0);
    let values = region.iter().map(|_| rng.gaussian()).collect();
    FieldSample::new(Domain::Box(region.clone()), values, FieldMeta::derived("test")).unwrap()
}

fn cube(side: i64) -> BoxRegion {
    BoxRegion::new(Site::origin(3), Site::splat(3, side - 1)).unwrap()
}

fn site_in(side: i64) -> impl Strategy<Value = Site> {
    prop::collection::vec(0..side, 3).prop_map(Site::new)
}

fn subset_of(b: BoxRegion) -> impl Strategy<Value = SiteSet> {
    let n = b.len();
    prop::collection::vec(any::<bool>(), n)
        .prop_map(move |mask| b.iter().zip(&mask).filter(|(_, &m)| m).map(|(x, _)| x).collect())
}

fn inf(r: Option<u32>) -> u64 {
    r.map_or(u64::MAX, u64::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chemical_distance_is_a_metric_bounded_below_by_l1(seed in any::<u64>(), x in site_in(6), y in site_in(6), h in -1.0f64..0.5) {
        let w = cube(6);
        let f = random_field(&w, seed);
        let a = chemical_distance(&f, h, &x, &y, &w);
        prop_assert_eq!(a, chemical_distance(&f, h, &y, &x, &w));
        if let Some(d) = a {
            prop_assert!(i64::from(d) >= x.dist_l1(&y));
        }
        prop_assert!(inf(chemical_distance(&f, h - 0.25, &x, &y, &w)) <= inf(a));
        let inner = BoxRegion::new(Site::origin(3), Site::splat(3, 4)).unwrap();
        if inner.contains(&x) && inner.contains(&y) {
            prop_assert!(inf(chemical_distance(&f, h, &x, &y, &inner)) >= inf(a));
        }
    }

    #[test]
    fn killed_green_is_symmetric_positive_and_domain_monotone(u in subset_of(cube(3)), extra in subset_of(cube(4))) {
        prop_assume!(!u.is_empty());
        let cfg = SolverConfig::default();
        let big = u.union(&extra);
        let g = killed_green(&u, &cfg).unwrap();
        let gb = killed_green(&big, &cfg).unwrap();
        for x in u.iter() {
            prop_assert!(g.get(x, x) >= 1.0);
            for y in u.iter() {
                prop_assert_eq!(g.get(x, y), g.get(y, x));
                prop_assert!(g.get(x, y) >= 0.0);
                prop_assert!(g.get(x, y) <= gb.get(x, y) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn harmonic_measure_is_a_probability(u in subset_of(cube(3)), pick in any::<prop::sample::Index>()) {
        prop_assume!(!u.is_empty());
        let x = u.sites()[pick.index(u.len())].clone();
        let hm = harmonic_measure(&u, &x, &SolverConfig::default()).unwrap();
        prop_assert!((hm.total() - 1.0).abs() < 1e-10);
        prop_assert!(hm.weights.iter().all(|&w| w >= 0.0));
        prop_assert!(hm.exits.iter().all(|e| !u.contains(e)));
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(n in 1u64..5000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as u64;
        let (lo, hi) = wilson_interval(k, n, Z_95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn loc_uniq_is_monotone_in_h1(seed in any::<u64>(), h1 in -1.0f64..0.5, gap in 0.0f64..0.5, up in 0.0f64..1.0) {
        let z = RenormIndex::new(Site::origin(3), 4, 4).unwrap();
        let region = z.d_box().expand(8);
        let f = random_field(&region, seed);
        let h2 = h1 + gap + up;
        let lower = local_uniqueness_events(&f, &z, h1, h2).unwrap();
        let higher = local_uniqueness_events(&f, &z, h1 + gap, h2).unwrap();
        prop_assert_eq!(lower.exist.outcome, higher.exist.outcome);
        prop_assert!(!higher.loc_uniq.outcome || lower.loc_uniq.outcome);
    }

    #[test]
    fn census_grows_with_bad_sites(mask in prop::collection::vec(any::<bool>(), 27), flip in any::<prop::sample::Index>()) {
        let window = cube(6);
        let cover = coarse_cover(&window, 2, 4).unwrap();
        prop_assert_eq!(cover.len(), mask.len());
        let flags = |extra: Option<usize>| -> HashMap<&Site, bool> {
            cover
                .iter()
                .enumerate()
                .map(|(i, z)| (z.site(), !mask[i] && extra != Some(i)))
                .collect()
        };
        let base = census_from_flags(&window, 2, 4, &flags(None)).unwrap();
        let more = census_from_flags(&window, 2, 4, &flags(Some(flip.index(cover.len())))).unwrap();
        prop_assert!(more.bad_count >= base.bad_count);
        let total: usize = base.map.components.iter().map(|c| c.sites.len()).sum();
        prop_assert_eq!(total, base.bad_count);
        let good = flags(None);
        for c in &base.map.components {
            prop_assert!(c.boundary.iter().all(|s| good.get(s).copied().unwrap_or(true)));
        }
    }

    #[test]
    fn field_files_round_trip(seed in any::<u64>(), side in 1i64..5) {
        let f = random_field(&cube(side), seed);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.gff");
        write_field(&f, &p).unwrap();
        let g = read_field(&p).unwrap();
        prop_assert_eq!(&f.values, &g.values);
        prop_assert_eq!(f.region(), g.region());
    }
}
