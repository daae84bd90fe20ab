use std::collections::HashMap;

use futures::stream::{self, StreamExt};
use serde::Serialize;

use super::images::ImageCache;
use crate::domain::AdRecord;
use crate::store::{AdQuery, Store, StoreError};

/// Concurrent image fetches while rendering one report.
const IMAGE_FETCH_CONCURRENCY: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdvertiserEntry {
    pub page_id: String,
    pub page_name: String,
    pub ad_count: u64,
    pub total_weighted_impressions: f64,
    /// `None` renders as a placeholder avatar.
    pub profile_image_ref: Option<String>,
}

/// Groups ads by page. The name comes from the page's most recent ad by
/// analysis time (ad id breaks ties). Ordered by ad count descending, then
/// page id ascending.
pub fn rank_advertisers(ads: &[AdRecord]) -> Vec<AdvertiserEntry> {
    let mut groups: HashMap<&str, (&AdRecord, u64, f64)> = HashMap::new();
    for ad in ads {
        let mid = ad.impressions.map(|r| r.midpoint()).unwrap_or(0.0);
        let g = groups.entry(ad.page_id.as_str()).or_insert((ad, 0, 0.0));
        g.1 += 1;
        g.2 += mid;
        if (ad.analysis_time(), &ad.ad_id) > (g.0.analysis_time(), &g.0.ad_id) {
            g.0 = ad;
        }
    }
    let mut out: Vec<AdvertiserEntry> = groups
        .into_iter()
        .map(|(page_id, (latest, count, impressions))| AdvertiserEntry {
            page_id: page_id.to_string(),
            page_name: latest.page_name.clone(),
            ad_count: count,
            total_weighted_impressions: impressions,
            profile_image_ref: None,
        })
        .collect();
    out.sort_by(|a, b| b.ad_count.cmp(&a.ad_count).then_with(|| a.page_id.cmp(&b.page_id)));
    out
}

/// Ranking only; image references point at pictures already on disk.
pub fn advertiser_report(store: &Store, q: &AdQuery, images: Option<&ImageCache>) -> Result<Vec<AdvertiserEntry>, StoreError> {
    let mut rank = rank_advertisers(&store.query_ads(q)?);
    if let Some(cache) = images {
        for e in &mut rank {
            e.profile_image_ref = cache.cached(&e.page_id).map(|_| ImageCache::handle(&e.page_id));
        }
    }
    Ok(rank)
}

/// Ranking plus profile pictures, fetching any that are missing or stale.
/// A failed fetch leaves that entry without an image.
pub async fn advertiser_report_with_images(
    store: &Store,
    q: &AdQuery,
    images: &ImageCache,
) -> Result<Vec<AdvertiserEntry>, StoreError> {
    let rank = rank_advertisers(&store.query_ads(q)?);
    let rank = stream::iter(rank)
        .map(|mut e| async move {
            match images.fetch_profile_image(&e.page_id).await {
                Ok(_) => e.profile_image_ref = Some(ImageCache::handle(&e.page_id)),
                Err(err) => tracing::debug!(page_id = %e.page_id, error = %err, "profile image unavailable"),
            }
            e
        })
        .buffered(IMAGE_FETCH_CONCURRENCY)
        .collect()
        .await;
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounts::{AccountStatus, Role};
    use crate::clock::ManualClock;
    use crate::domain::{minimal_ad, InsightRange, Timestamp, Visibility};
    use crate::provider::SimulatedGraphProvider;
    use crate::store::tests::{account, job};
    use std::sync::Arc;

    fn ad(id: &str, page: &str, name: &str, t: i64) -> AdRecord {
        let mut a = minimal_ad(id, page);
        a.page_name = name.into();
        a.creation_time = Timestamp::from_epoch_seconds(t);
        a
    }

    #[test]
    fn groups_by_page() {
        let ads = vec![ad("1", "A", "a", 1), ad("2", "A", "a", 2), ad("3", "B", "b", 3)];
        let r = rank_advertisers(&ads);
        let pairs: Vec<_> = r.iter().map(|e| (e.page_id.as_str(), e.ad_count)).collect();
        assert_eq!(pairs, [("A", 2), ("B", 1)]);
        assert!(rank_advertisers(&[]).is_empty());
    }

    #[test]
    fn latest_name_and_impressions() {
        let mut old = ad("1", "A", "Old Name", 100);
        old.impressions = Some(InsightRange::new(1000, 4999).unwrap());
        let mut new = ad("2", "A", "New Name", 200);
        new.impressions = Some(InsightRange::new(5000, crate::domain::SENTINEL_UPPER).unwrap());
        let mut late_start = ad("0", "A", "Stale", 50);
        late_start.delivery_start = None;
        let r = rank_advertisers(&[new.clone(), old, late_start]);
        assert_eq!(r[0].page_name, "New Name");
        assert_eq!(r[0].total_weighted_impressions, 2999.5 + 5000.0);
    }

    #[test]
    fn ties_by_page_id() {
        let ads = vec![ad("1", "C", "c", 1), ad("2", "B", "b", 2), ad("3", "A", "a", 3), ad("4", "C", "c", 4)];
        let ids: Vec<_> = rank_advertisers(&ads).into_iter().map(|e| e.page_id).collect();
        assert_eq!(ids, ["C", "A", "B"]);
    }

    #[tokio::test]
    async fn report_attaches_images_and_survives_failures() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let alice = account(&store, "a@example.org", Role::Researcher, AccountStatus::Approved);
        let j = job(&store, &alice, "vote", Visibility::Private);
        let ads = vec![ad("1", "100200300401", "x", 1), ad("2", "100200300401", "x", 2), ad("3", "999", "y", 3)];
        store.upsert_ads(&j.job_id, &ads, Timestamp::from_epoch_seconds(10)).unwrap();
        let clock = Arc::new(ManualClock::new(Timestamp::from_epoch_seconds(1_700_000_000)));
        let cache = ImageCache::new(store.images_dir(), Arc::new(SimulatedGraphProvider::with_fixture_pages()), clock);
        let q = AdQuery::for_user(alice.account_id.clone());

        let plain = advertiser_report(&store, &q, Some(&cache)).unwrap();
        assert!(plain.iter().all(|e| e.profile_image_ref.is_none()));

        let r = advertiser_report_with_images(&store, &q, &cache).await.unwrap();
        assert_eq!(r[0].profile_image_ref.as_deref(), Some("100200300401.bin"));
        assert_eq!(r[1].page_id, "999");
        assert_eq!(r[1].profile_image_ref, None);
        assert_eq!(advertiser_report(&store, &q, Some(&cache)).unwrap(), r);
    }
}
