use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::gazetteer::LatLon;

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const DEFAULT_THRESHOLD_KM: f64 = 100.0;

/// Kilometres per degree of arc along a meridian.
const KM_PER_DEGREE: f64 = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

pub fn haversine_km(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

/// A region as reported by the analyzer; ordering is by country, then name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegionKey {
    pub country_code: String,
    pub region_name: String,
}

impl RegionKey {
    pub fn new(country_code: impl Into<String>, region_name: impl Into<String>) -> Self {
        RegionKey { country_code: country_code.into(), region_name: region_name.into() }
    }
}

/// A resolved region with the reach accumulated for it. `ads` holds indices
/// into whatever ad list the reach came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPoint {
    pub key: RegionKey,
    pub coord: LatLon,
    pub weighted_reach: f64,
    pub ads: BTreeSet<usize>,
}

impl GeoPoint {
    pub fn new(key: RegionKey, coord: LatLon) -> Self {
        GeoPoint { key, coord, weighted_reach: 0.0, ads: BTreeSet::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoCluster {
    pub centroid: LatLon,
    pub members: Vec<RegionKey>,
    pub raw_count: u64,
    pub weighted_reach: f64,
}

/// Two points are linked when strictly closer than the threshold, or when
/// they sit on identical coordinates.
pub fn linked(a: LatLon, b: LatLon, threshold_km: f64) -> bool {
    a == b || haversine_km(a, b) < threshold_km
}

/// Connected components of the link graph, each sorted, listed by smallest index.
pub fn components(coords: &[LatLon], threshold_km: f64) -> Vec<Vec<usize>> {
    let n = coords.len();
    let mut by_lat: Vec<usize> = (0..n).collect();
    by_lat.sort_by(|&a, &b| coords[a].lat.total_cmp(&coords[b].lat).then(a.cmp(&b)));

    // Great-circle distance is never below the meridian arc between the two
    // latitudes, so only a latitude band needs checking.
    let band = threshold_km / KM_PER_DEGREE + 1e-9;
    let mut adj = vec![Vec::new(); n];
    for (p, &i) in by_lat.iter().enumerate() {
        for &j in &by_lat[p + 1..] {
            if coords[j].lat - coords[i].lat > band {
                break;
            }
            if linked(coords[i], coords[j], threshold_km) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }

    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Mean of member coordinates. Longitudes are unwrapped across the
/// antimeridian first when that makes the group tighter.
pub fn centroid(coords: &[LatLon]) -> LatLon {
    let n = coords.len() as f64;
    let lat = coords.iter().map(|c| c.lat).sum::<f64>() / n;
    let spread = |lons: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = lons.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        hi - lo
    };
    let shifted = |lon: f64| if lon < 0.0 { lon + 360.0 } else { lon };
    let raw = spread(&mut coords.iter().map(|c| c.lon));
    let wrapped = spread(&mut coords.iter().map(|c| shifted(c.lon)));
    let mut lon = if wrapped < raw {
        coords.iter().map(|c| shifted(c.lon)).sum::<f64>() / n
    } else {
        coords.iter().map(|c| c.lon).sum::<f64>() / n
    };
    if lon > 180.0 {
        lon -= 360.0;
    }
    LatLon { lat, lon }
}

/// Single-linkage clustering. Output is ordered by weighted reach descending,
/// then by each cluster's smallest member key.
pub fn cluster_locations(points: &[GeoPoint], threshold_km: f64) -> Vec<GeoCluster> {
    let coords: Vec<LatLon> = points.iter().map(|p| p.coord).collect();
    let mut clusters: Vec<GeoCluster> = components(&coords, threshold_km)
        .into_iter()
        .map(|comp| {
            let mut members: Vec<RegionKey> = comp.iter().map(|&i| points[i].key.clone()).collect();
            members.sort();
            let ads: BTreeSet<usize> = comp.iter().flat_map(|&i| points[i].ads.iter().copied()).collect();
            let member_coords: Vec<LatLon> = comp.iter().map(|&i| coords[i]).collect();
            GeoCluster {
                centroid: centroid(&member_coords),
                members,
                raw_count: ads.len() as u64,
                weighted_reach: comp.iter().map(|&i| points[i].weighted_reach).sum(),
            }
        })
        .collect();
    clusters.sort_by(|a, b| b.weighted_reach.total_cmp(&a.weighted_reach).then_with(|| a.members[0].cmp(&b.members[0])));
    clusters
}
