//! Regional network model: where nodes sit, and how long a block of a given
//! size takes to travel between two regions.

use serde::{Deserialize, Serialize};

use super::SimError;

/// Six-region latency/bandwidth model. Defaults describe the public
/// measurements commonly used by blockchain network simulators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub regions: Vec<String>,
    /// Fraction of nodes per region; entries are non-negative and sum to 1.
    pub region_distribution: Vec<f64>,
    /// One-way latency from region i to region j, milliseconds.
    pub latency_ms: Vec<Vec<f64>>,
    /// Per-region upload bandwidth, bits per second.
    pub upload_bps: Vec<f64>,
    /// Per-region download bandwidth, bits per second.
    pub download_bps: Vec<f64>,
    /// Cap on uploads that cross a region boundary, bits per second.
    pub inter_region_upload_bps: f64,
    /// Cap on downloads that cross a region boundary, bits per second.
    pub inter_region_download_bps: f64,
}

impl Default for NetworkModel {
    fn default() -> Self {
        NetworkModel {
            regions: [
                "NORTH_AMERICA",
                "EUROPE",
                "SOUTH_AMERICA",
                "ASIA_PACIFIC",
                "JAPAN",
                "AUSTRALIA",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            region_distribution: vec![0.3869, 0.5159, 0.0113, 0.0574, 0.0119, 0.0166],
            latency_ms: vec![
                vec![32.0, 124.0, 184.0, 198.0, 151.0, 189.0],
                vec![124.0, 11.0, 227.0, 237.0, 252.0, 294.0],
                vec![184.0, 227.0, 88.0, 325.0, 301.0, 322.0],
                vec![198.0, 237.0, 325.0, 85.0, 58.0, 198.0],
                vec![151.0, 252.0, 301.0, 58.0, 12.0, 126.0],
                vec![189.0, 294.0, 322.0, 198.0, 126.0, 16.0],
            ],
            upload_bps: vec![
                19_200_000.0,
                20_700_000.0,
                5_800_000.0,
                15_700_000.0,
                10_200_000.0,
                11_300_000.0,
            ],
            download_bps: vec![
                52_000_000.0,
                40_000_000.0,
                18_000_000.0,
                22_800_000.0,
                22_800_000.0,
                29_900_000.0,
            ],
            inter_region_upload_bps: 600_000.0,
            inter_region_download_bps: 600_000.0,
        }
    }
}

impl NetworkModel {
    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.regions.len();
        if n == 0 {
            return Err(SimError::InvalidConfig("network has no regions".into()));
        }
        if self.region_distribution.len() != n {
            return Err(SimError::InvalidConfig(format!(
                "region_distribution has {} entries for {} regions",
                self.region_distribution.len(),
                n
            )));
        }
        if self.region_distribution.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(SimError::InvalidConfig(
                "region_distribution entries must be non-negative".into(),
            ));
        }
        let sum: f64 = self.region_distribution.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidConfig(format!(
                "region_distribution sums to {sum}, expected 1 within 1e-9"
            )));
        }
        if self.latency_ms.len() != n || self.latency_ms.iter().any(|row| row.len() != n) {
            return Err(SimError::InvalidConfig(format!(
                "latency_ms must be a {n}x{n} matrix"
            )));
        }
        if self
            .latency_ms
            .iter()
            .flatten()
            .any(|&l| !(l > 0.0) || !l.is_finite())
        {
            return Err(SimError::InvalidConfig(
                "latency_ms entries must be positive".into(),
            ));
        }
        if self.upload_bps.len() != n || self.download_bps.len() != n {
            return Err(SimError::InvalidConfig(
                "upload_bps/download_bps must have one entry per region".into(),
            ));
        }
        let bw_ok = |b: &f64| b.is_finite() && *b > 0.0;
        if !self.upload_bps.iter().all(bw_ok)
            || !self.download_bps.iter().all(bw_ok)
            || !bw_ok(&self.inter_region_upload_bps)
            || !bw_ok(&self.inter_region_download_bps)
        {
            return Err(SimError::InvalidConfig(
                "bandwidth entries must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Bottleneck bandwidth for a transfer from region `from` to region `to`:
    /// the sender's upload, the receiver's download, and the inter-regional
    /// caps when the transfer crosses a boundary.
    pub fn effective_bps(&self, from: usize, to: usize) -> f64 {
        let mut bps = self.upload_bps[from].min(self.download_bps[to]);
        if from != to {
            bps = bps
                .min(self.inter_region_upload_bps)
                .min(self.inter_region_download_bps);
        }
        bps
    }

    /// Seconds for a block of `block_bytes` to reach a node in region `to`
    /// from a miner in region `from`.
    pub fn propagation_delay_s(&self, from: usize, to: usize, block_bytes: f64) -> f64 {
        self.latency_ms[from][to] / 1000.0 + block_bytes * 8.0 / self.effective_bps(from, to)
    }

    pub fn min_latency_s(&self) -> f64 {
        self.latency_ms
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
            / 1000.0
    }
}

/// Deterministic largest-remainder apportionment of `node_count` nodes over
/// the region distribution. Keeps the regional mix exact at any scale.
pub fn region_node_counts(distribution: &[f64], node_count: u32) -> Vec<u32> {
    let n = node_count as f64;
    let mut counts: Vec<u32> = distribution.iter().map(|p| (p * n).floor() as u32).collect();
    let assigned: u32 = counts.iter().sum();
    let mut remainders: Vec<(usize, f64)> = distribution
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p * n - (p * n).floor()))
        .collect();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for k in 0..(node_count - assigned) as usize {
        counts[remainders[k % remainders.len()].0] += 1;
    }
    counts
}
