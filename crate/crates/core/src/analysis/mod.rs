//! Regional reach and advertiser analysis over stored ads.

mod advertisers;
mod cluster;
mod gazetteer;
mod images;
mod regions;

pub use advertisers::{advertiser_report, advertiser_report_with_images, rank_advertisers, AdvertiserEntry};
pub use cluster::{
    centroid, cluster_locations, components, haversine_km, linked, GeoCluster, GeoPoint, RegionKey,
    DEFAULT_THRESHOLD_KM, EARTH_RADIUS_KM,
};
pub use gazetteer::{normalize_region, resolve_region, Gazetteer, GazetteerError, LatLon};
pub use images::{is_path_safe_page_id, ImageCache, ImageError, ProfileImage, DEFAULT_IMAGE_TTL_SECS};
pub use regions::{rank_order, regional_report, summarize_regions, RankedRegion, RegionalReport};
