use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::cluster::{cluster_locations, GeoCluster, GeoPoint, RegionKey};
use super::gazetteer::{normalize_region, Gazetteer, LatLon};
use crate::domain::AdRecord;
use crate::store::{AdQuery, Store, StoreError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedRegion {
    pub country_code: String,
    pub region_name: String,
    pub raw_count: u64,
    pub weighted_reach: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RegionalReport {
    pub clusters: Vec<GeoCluster>,
    pub ranks: Vec<RankedRegion>,
    pub unresolved: Vec<RankedRegion>,
}

impl RegionalReport {
    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty() && self.unresolved.is_empty()
    }

    pub fn total_weighted_reach(&self) -> f64 {
        self.ranks.iter().chain(&self.unresolved).map(|r| r.weighted_reach).sum()
    }
}

struct Tally {
    key: RegionKey,
    coord: Option<LatLon>,
    percent: f64,
    ads: BTreeSet<usize>,
}

/// Weighted reach descending, raw count descending, then region key.
pub fn rank_order(a: &RankedRegion, b: &RankedRegion) -> std::cmp::Ordering {
    b.weighted_reach
        .total_cmp(&a.weighted_reach)
        .then(b.raw_count.cmp(&a.raw_count))
        .then_with(|| (&a.country_code, &a.region_name).cmp(&(&b.country_code, &b.region_name)))
}

/// Aggregates regional shares over `ads`. Regions group by country and
/// normalized name; resolved regions take the gazetteer spelling, others keep
/// the first spelling seen.
pub fn summarize_regions(ads: &[AdRecord], gazetteer: &Gazetteer, threshold_km: f64) -> RegionalReport {
    let mut tallies: Vec<Tally> = Vec::new();
    let mut index: HashMap<(String, String), usize> = HashMap::new();
    for (i, ad) in ads.iter().enumerate() {
        for share in &ad.regional_distribution {
            let country = share.country_code.trim().to_ascii_uppercase();
            let norm = normalize_region(&share.region_name);
            let slot = *index.entry((country.clone(), norm)).or_insert_with(|| {
                let (name, coord) = match gazetteer.lookup(&country, &share.region_name) {
                    Some((name, coord)) => (name.to_string(), Some(coord)),
                    None => (share.region_name.split_whitespace().collect::<Vec<_>>().join(" "), None),
                };
                tallies.push(Tally { key: RegionKey::new(country.clone(), name), coord, percent: 0.0, ads: BTreeSet::new() });
                tallies.len() - 1
            });
            let t = &mut tallies[slot];
            t.percent += share.percentage;
            t.ads.insert(i);
        }
    }

    let mut points = Vec::new();
    let mut ranks = Vec::new();
    let mut unresolved = Vec::new();
    for t in tallies {
        let weighted = t.percent / 100.0;
        let ranked = RankedRegion {
            country_code: t.key.country_code.clone(),
            region_name: t.key.region_name.clone(),
            raw_count: t.ads.len() as u64,
            weighted_reach: weighted,
        };
        match t.coord {
            Some(coord) => {
                ranks.push(ranked);
                points.push(GeoPoint { key: t.key, coord, weighted_reach: weighted, ads: t.ads });
            }
            None => unresolved.push(ranked),
        }
    }
    ranks.sort_by(rank_order);
    unresolved.sort_by(rank_order);
    RegionalReport { clusters: cluster_locations(&points, threshold_km), ranks, unresolved }
}

pub fn regional_report(
    store: &Store,
    gazetteer: &Gazetteer,
    q: &AdQuery,
    threshold_km: f64,
) -> Result<RegionalReport, StoreError> {
    Ok(summarize_regions(&store.query_ads(q)?, gazetteer, threshold_km))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounts::{AccountStatus, Role};
    use crate::domain::{minimal_ad, RegionalShare, Timestamp};
    use crate::store::tests::{account, job};

    fn share(c: &str, r: &str, p: f64) -> RegionalShare {
        RegionalShare { country_code: c.into(), region_name: r.into(), percentage: p }
    }

    fn ad(id: &str, shares: Vec<RegionalShare>) -> AdRecord {
        let mut a = minimal_ad(id, "p1");
        a.regional_distribution = shares;
        a
    }

    #[test]
    fn ontario_and_quebec() {
        let ads = vec![
            ad("1", vec![share("CA", "Ontario", 60.0), share("CA", "Quebec", 40.0)]),
            ad("2", vec![share("CA", "Ontario", 100.0)]),
        ];
        let r = summarize_regions(&ads, &Gazetteer::bundled(), 100.0);
        assert_eq!(
            r.ranks,
            vec![
                RankedRegion { country_code: "CA".into(), region_name: "Ontario".into(), raw_count: 2, weighted_reach: 1.6 },
                RankedRegion { country_code: "CA".into(), region_name: "Quebec".into(), raw_count: 1, weighted_reach: 0.4 },
            ]
        );
        // Ontario and Quebec centroids are over 900 km apart
        assert_eq!(r.clusters.len(), 2);
        assert_eq!(r.clusters[0].members, vec![RegionKey::new("CA", "Ontario")]);
        assert_eq!(r.clusters[0].raw_count, 2);
        assert!(r.unresolved.is_empty());
    }

    #[test]
    fn unresolved_regions_keep_their_reach() {
        let ads = vec![ad("1", vec![share("CA", "Atlantis", 30.0), share("CA", " ontario", 70.0)])];
        let r = summarize_regions(&ads, &Gazetteer::bundled(), 100.0);
        assert_eq!(r.ranks[0].region_name, "Ontario");
        assert_eq!(r.unresolved.len(), 1);
        assert_eq!(r.unresolved[0].region_name, "Atlantis");
        assert!((r.total_weighted_reach() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spelling_variants_merge() {
        let ads = vec![ad("1", vec![share("CA", "Atlantis", 50.0)]), ad("2", vec![share("ca", " ATLANTIS ", 50.0)])];
        let r = summarize_regions(&ads, &Gazetteer::bundled(), 100.0);
        assert_eq!(r.unresolved.len(), 1);
        assert_eq!(r.unresolved[0].raw_count, 2);
        assert_eq!(r.unresolved[0].region_name, "Atlantis");
    }

    #[test]
    fn ties_break_on_raw_then_key() {
        let ads = vec![
            ad("1", vec![share("GB", "Wales", 50.0), share("GB", "England", 50.0)]),
            ad("2", vec![share("GB", "Scotland", 25.0), share("GB", "Northern Ireland", 25.0)]),
            ad("3", vec![share("GB", "Scotland", 25.0), share("GB", "Northern Ireland", 25.0)]),
        ];
        let r = summarize_regions(&ads, &Gazetteer::bundled(), 0.0);
        let names: Vec<_> = r.ranks.iter().map(|x| x.region_name.as_str()).collect();
        assert_eq!(names, ["Northern Ireland", "Scotland", "England", "Wales"]);
    }

    #[test]
    fn report_reads_the_window() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let alice = account(&store, "a@example.org", Role::Researcher, AccountStatus::Approved);
        let j = job(&store, &alice, "vote", crate::domain::Visibility::Private);
        let ads = vec![
            ad("1", vec![share("CA", "Ontario", 60.0), share("CA", "Quebec", 40.0)]),
            ad("2", vec![share("CA", "Ontario", 100.0)]),
        ];
        store.upsert_ads(&j.job_id, &ads, Timestamp::from_epoch_seconds(1_700_000_000)).unwrap();
        let g = Gazetteer::bundled();
        let all = AdQuery::for_user(alice.account_id.clone());
        assert_eq!(regional_report(&store, &g, &all, 100.0).unwrap().ranks.len(), 2);
        let before = all.clone().window(Timestamp::from_epoch_seconds(0), Timestamp::from_epoch_seconds(1000));
        let empty = regional_report(&store, &g, &before, 100.0).unwrap();
        assert!(empty.is_empty() && empty.clusters.is_empty());
        let pending = account(&store, "p@example.org", Role::Researcher, AccountStatus::Pending);
        assert!(matches!(
            regional_report(&store, &g, &AdQuery::for_user(pending.account_id), 100.0),
            Err(StoreError::Unauthorized)
        ));
    }
}
