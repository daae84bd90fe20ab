use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::country::is_iso_alpha2;

const BUNDLED: &str = include_str!("../../assets/gazetteer.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }

    /// Latitude in [-90, 90] and longitude in (-180, 180].
    pub fn in_bounds(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && self.lon > -180.0 && self.lon <= 180.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GazetteerError {
    #[error("cannot read gazetteer: {0}")]
    Io(String),
    #[error("gazetteer line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("gazetteer line {line}: coordinates out of bounds")]
    OutOfBounds { line: u64 },
    #[error("gazetteer line {line}: unknown country code {code:?}")]
    UnknownCountry { line: u64, code: String },
    #[error("gazetteer line {line}: duplicate entry {country}/{region}")]
    DuplicateKey { line: u64, country: String, region: String },
}

/// Trim, case-fold and collapse internal whitespace.
pub fn normalize_region(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone)]
struct Entry {
    name: String,
    coord: LatLon,
}

#[derive(Debug, Deserialize)]
struct Row {
    country_code: String,
    region_name: String,
    lat: f64,
    lon: f64,
}

/// Lookup table from (country, region name) to coordinates. Immutable once loaded.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<(String, String), Entry>,
}

impl Gazetteer {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The table shipped with the crate. Covers every region the simulated provider emits.
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED.as_bytes()).expect("bundled gazetteer is well formed")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GazetteerError> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| GazetteerError::Io(e.to_string()))?;
        Self::from_reader(file)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self, GazetteerError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut g = Gazetteer::default();
        let parse_err = |e: csv::Error| GazetteerError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        };
        let headers = rdr.headers().map_err(parse_err)?.clone();
        for record in rdr.records() {
            let record = record.map_err(parse_err)?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let row: Row = record
                .deserialize(Some(&headers))
                .map_err(|e| GazetteerError::Parse { line, message: e.to_string() })?;
            let code = row.country_code.to_ascii_uppercase();
            if !is_iso_alpha2(&code) {
                return Err(GazetteerError::UnknownCountry { line, code });
            }
            let coord = LatLon::new(row.lat, row.lon);
            if !coord.in_bounds() {
                return Err(GazetteerError::OutOfBounds { line });
            }
            if !g.insert(&code, &row.region_name, coord) {
                return Err(GazetteerError::DuplicateKey { line, country: code, region: row.region_name });
            }
        }
        Ok(g)
    }

    /// Returns false when the normalized key is already present.
    pub fn insert(&mut self, country_code: &str, region_name: &str, coord: LatLon) -> bool {
        let key = (country_code.trim().to_ascii_uppercase(), normalize_region(region_name));
        if self.entries.contains_key(&key) {
            return false;
        }
        let name = region_name.split_whitespace().collect::<Vec<_>>().join(" ");
        self.entries.insert(key, Entry { name, coord });
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, country_code: &str, region_name: &str) -> Option<LatLon> {
        self.lookup(country_code, region_name).map(|(_, c)| c)
    }

    /// The canonical spelling and coordinates for a region.
    pub fn lookup(&self, country_code: &str, region_name: &str) -> Option<(&str, LatLon)> {
        let key = (country_code.trim().to_ascii_uppercase(), normalize_region(region_name));
        self.entries.get(&key).map(|e| (e.name.as_str(), e.coord))
    }
}

pub fn resolve_region(country_code: &str, region_name: &str, g: &Gazetteer) -> Option<LatLon> {
    g.resolve(country_code, region_name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::FIXTURE_REGIONS;

    #[test]
    fn lookups_normalize() {
        let g = Gazetteer::bundled();
        let ontario = resolve_region("CA", "Ontario", &g).unwrap();
        assert_eq!(resolve_region("CA", " ontario ", &g), Some(ontario));
        assert_eq!(resolve_region("ca", "ONTARIO", &g), Some(ontario));
        assert_eq!(resolve_region("US", "new   york", &g), g.resolve("US", "New York"));
        assert_eq!(resolve_region("CA", "Atlantis", &g), None);
        assert_eq!(resolve_region("US", "Ontario", &g), None);
        assert_eq!(g.lookup("br", "são  paulo").unwrap().0, "São Paulo");
    }

    #[test]
    fn bundled_covers_simulated_regions() {
        let g = Gazetteer::bundled();
        for (c, r) in FIXTURE_REGIONS {
            assert!(g.resolve(c, r).is_some(), "{c}/{r}");
        }
    }

    #[test]
    fn rejects_bad_rows() {
        let dup = "country_code,region_name,lat,lon\nCA,Ontario,1,1\nCA, ONTARIO ,2,2\n";
        assert!(matches!(Gazetteer::from_reader(dup.as_bytes()), Err(GazetteerError::DuplicateKey { line: 3, .. })));
        let oob = "country_code,region_name,lat,lon\nCA,Ontario,91,1\n";
        assert_eq!(Gazetteer::from_reader(oob.as_bytes()).unwrap_err(), GazetteerError::OutOfBounds { line: 2 });
        let west = "country_code,region_name,lat,lon\nFJ,Edge,0,-180\n";
        assert!(matches!(Gazetteer::from_reader(west.as_bytes()), Err(GazetteerError::OutOfBounds { .. })));
        let country = "country_code,region_name,lat,lon\nZZ,Nowhere,0,0\n";
        assert!(matches!(Gazetteer::from_reader(country.as_bytes()), Err(GazetteerError::UnknownCountry { .. })));
        let junk = "country_code,region_name,lat,lon\nCA,Ontario,north,1\n";
        assert!(matches!(Gazetteer::from_reader(junk.as_bytes()), Err(GazetteerError::Parse { .. })));
    }

    #[test]
    fn loads_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "country_code,region_name,lat,lon\nGB,Cornwall,50.3,-4.9\n").unwrap();
        let g = Gazetteer::load(&path).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.resolve("GB", "cornwall"), Some(LatLon::new(50.3, -4.9)));
        assert!(matches!(Gazetteer::load(dir.path().join("missing.csv")), Err(GazetteerError::Io(_))));
    }
}
