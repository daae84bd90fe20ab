use serde::{Deserialize, Serialize};

use crate::accounts::Attestation;
use crate::analysis::{AdvertiserEntry, GeoCluster, LatLon, RankedRegion, RegionKey, RegionalReport};
use crate::domain::Timestamp;
use crate::jobs::{Job, JobId, JobState, PollReport};

pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterBody {
    pub centroid: LatLon,
    pub members: Vec<RegionKey>,
    pub raw_count: u64,
    pub weighted_reach: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankBody {
    pub country_code: String,
    pub region_name: String,
    pub raw_count: u64,
    pub weighted_reach: f64,
}

/// Wire form of a regional report; weighted values carry four decimals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionalReportBody {
    pub clusters: Vec<ClusterBody>,
    pub ranks: Vec<RankBody>,
    pub unresolved: Vec<RankBody>,
}

impl From<&GeoCluster> for ClusterBody {
    fn from(c: &GeoCluster) -> Self {
        ClusterBody {
            centroid: c.centroid,
            members: c.members.clone(),
            raw_count: c.raw_count,
            weighted_reach: round4(c.weighted_reach),
        }
    }
}

impl From<&RankedRegion> for RankBody {
    fn from(r: &RankedRegion) -> Self {
        RankBody {
            country_code: r.country_code.clone(),
            region_name: r.region_name.clone(),
            raw_count: r.raw_count,
            weighted_reach: round4(r.weighted_reach),
        }
    }
}

impl From<&RegionalReport> for RegionalReportBody {
    fn from(r: &RegionalReport) -> Self {
        RegionalReportBody {
            clusters: r.clusters.iter().map(Into::into).collect(),
            ranks: r.ranks.iter().map(Into::into).collect(),
            unresolved: r.unresolved.iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdvertisersBody {
    pub advertisers: Vec<AdvertiserEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobReportBody {
    pub job_id: JobId,
    pub state: JobState,
    pub last_poll_at: Option<Timestamp>,
    pub last_report: Option<PollReport>,
}

impl From<Job> for JobReportBody {
    fn from(j: Job) -> Self {
        JobReportBody { job_id: j.job_id, state: j.state, last_poll_at: j.last_poll_at, last_report: j.last_report }
    }
}

#[derive(Debug, Deserialize)]
pub struct SignupRequest {
    pub email: String,
    pub password: String,
    #[serde(default)]
    pub identity_confirmed: bool,
    #[serde(default)]
    pub developer_account: bool,
}

impl SignupRequest {
    pub fn attestation(&self) -> Attestation {
        Attestation { identity_confirmed: self.identity_confirmed, developer_account: self.developer_account }
    }
}

#[derive(Debug, Deserialize)]
pub struct LoginRequest {
    pub email: String,
    pub password: String,
}

#[derive(Debug, Deserialize)]
pub struct ReviewRequest {
    pub decision: String,
}
