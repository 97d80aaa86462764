//! Discrete-event blockchain network simulator.
//!
//! Blocks are discovered globally at exponentially distributed intervals and
//! attributed to a miner drawn proportionally to hash rate. The miner extends
//! the best chain it has seen so far; when a recent block is still
//! propagating, the miner's view is stale and a fork appears. The run reports
//! fork rate, implied transaction throughput, and propagation percentiles.

mod network;

pub use network::{region_node_counts, NetworkModel};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::param::SimResult;

/// Default transaction size used to convert block capacity into
/// transactions per second.
pub const DEFAULT_TX_SIZE_BYTES: f64 = 500.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("chain has no mined blocks")]
    EmptyChain,
    #[error("unknown parent block index {0}")]
    UnknownParent(usize),
}

/// Inputs shared by the common blockchain simulators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of blocks to mine before stopping.
    pub block_height: u32,
    pub block_size_bytes: f64,
    /// Mean of the exponential inter-block discovery time, seconds.
    pub expected_mining_interval_s: f64,
    /// Hash calculations per millisecond per node. Every node shares this
    /// rate, so the miner draw is uniform.
    pub avg_hash_rate: f64,
    pub node_count: u32,
    pub network: NetworkModel,
    pub tx_size_bytes: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            block_height: 100,
            block_size_bytes: 1e6,
            expected_mining_interval_s: 600.0,
            avg_hash_rate: 40_000.0,
            node_count: 6_000,
            network: NetworkModel::default(),
            tx_size_bytes: DEFAULT_TX_SIZE_BYTES,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.node_count < 2 {
            return Err(SimError::InvalidConfig(format!(
                "node_count {} must be at least 2",
                self.node_count
            )));
        }
        if self.block_height == 0 {
            return Err(SimError::InvalidConfig("block_height must be positive".into()));
        }
        let positive = [
            ("block_size_bytes", self.block_size_bytes),
            ("expected_mining_interval_s", self.expected_mining_interval_s),
            ("avg_hash_rate", self.avg_hash_rate),
            ("tx_size_bytes", self.tx_size_bytes),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(SimError::InvalidConfig(format!(
                    "{name} = {v} must be a positive finite real"
                )));
            }
        }
        self.network.validate()
    }

    /// Parameter names the simulator accepts from an argument vector.
    pub fn is_known_param(name: &str) -> bool {
        matches!(
            name,
            "block_size_bytes"
                | "interval_s"
                | "expected_mining_interval_s"
                | "node_count"
                | "nodes"
                | "block_height"
                | "blocks"
                | "tx_size_bytes"
                | "avg_hash_rate"
        )
    }

    /// Apply one named argument. Counts are rounded to the nearest integer.
    pub fn apply(&mut self, name: &str, value: f64) -> Result<(), SimError> {
        match name {
            "block_size_bytes" => self.block_size_bytes = value,
            "interval_s" | "expected_mining_interval_s" => {
                self.expected_mining_interval_s = value
            }
            "node_count" | "nodes" => self.node_count = value.round() as u32,
            "block_height" | "blocks" => self.block_height = value.round() as u32,
            "tx_size_bytes" => self.tx_size_bytes = value,
            "avg_hash_rate" => self.avg_hash_rate = value,
            other => {
                return Err(SimError::InvalidConfig(format!(
                    "unknown parameter `{other}`"
                )))
            }
        }
        Ok(())
    }
}

/// One mined block. Height is derived from the parent, so the parent links
/// and heights cannot disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub parent: Option<usize>,
    pub height: u32,
    pub mined_at: f64,
    pub miner_node: u32,
    pub miner_region: usize,
}

/// Append-only block tree rooted at genesis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainState {
    blocks: Vec<Block>,
}

impl ChainState {
    /// A chain holding only the genesis block.
    pub fn new() -> Self {
        ChainState {
            blocks: vec![Block {
                parent: None,
                height: 0,
                mined_at: 0.0,
                miner_node: 0,
                miner_region: 0,
            }],
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Append a block on top of `parent`, returning its index.
    pub fn extend(
        &mut self,
        parent: usize,
        mined_at: f64,
        miner_node: u32,
        miner_region: usize,
    ) -> Result<usize, SimError> {
        let parent_height = self
            .blocks
            .get(parent)
            .ok_or(SimError::UnknownParent(parent))?
            .height;
        self.blocks.push(Block {
            parent: Some(parent),
            height: parent_height + 1,
            mined_at,
            miner_node,
            miner_region,
        });
        Ok(self.blocks.len() - 1)
    }

    /// Blocks mined after genesis.
    pub fn total_mined(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Height of the longest chain (genesis is height 0).
    pub fn main_chain_height(&self) -> u32 {
        self.blocks.iter().map(|b| b.height).max().unwrap_or(0)
    }

    /// Fraction of mined blocks that ended up off the longest chain.
    pub fn fork_rate(&self) -> Result<f64, SimError> {
        let total = self.total_mined();
        if total == 0 {
            return Err(SimError::EmptyChain);
        }
        let main = self.main_chain_height() as usize;
        Ok((total - main) as f64 / total as f64)
    }
}

/// Transactions per second implied by block capacity over the expected
/// mining interval. All arguments must be positive.
pub fn throughput(block_size_bytes: f64, interval_s: f64, tx_size_bytes: f64) -> f64 {
    (block_size_bytes / tx_size_bytes) / interval_s
}

/// Run one simulation to `block_height` mined blocks and measure the chain.
///
/// Equivalent to delivering every block to every node through an event
/// queue: a node's head at time t is the earliest-arriving block of maximal
/// height among those whose arrival time is at most t, which is exactly what
/// sequential first-seen longest-chain adoption produces. Propagation delays
/// depend only on the miner/receiver regions, so heads are resolved by a
/// scan over mined blocks instead of a per-node event queue.
pub fn run_simulation(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let network = &config.network;
    let regions = network.region_count();
    let counts = region_node_counts(&network.region_distribution, config.node_count);
    let mut cumulative = Vec::with_capacity(regions);
    let mut acc = 0u32;
    for &c in &counts {
        acc += c;
        cumulative.push(acc);
    }

    // Delay table for this block size; identical for every block.
    let mut delay = vec![vec![0.0f64; regions]; regions];
    for (from, row) in delay.iter_mut().enumerate() {
        for (to, d) in row.iter_mut().enumerate() {
            *d = network.propagation_delay_s(from, to, config.block_size_bytes);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let inter_block = Exp::new(1.0 / config.expected_mining_interval_s)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;

    let mut chain = ChainState::new();
    // Deliveries per (miner region, receiver region) pair, for the
    // propagation percentiles.
    let mut pair_deliveries = vec![vec![0u64; regions]; regions];
    let mut now = 0.0f64;

    for _ in 0..config.block_height {
        now += inter_block.sample(&mut rng);
        // Equal per-node hash rate: the rate-proportional miner draw is
        // uniform over nodes.
        let miner_node = rng.gen_range(0..config.node_count);
        let miner_region = cumulative.partition_point(|&c| c <= miner_node);

        // The miner's head: the first-seen block of maximal height among
        // those that have reached it.
        let mut head = 0usize;
        let mut head_height = 0u32;
        let mut head_arrival = 0.0f64;
        for (idx, block) in chain.blocks().iter().enumerate() {
            let arrival = if block.parent.is_none() {
                0.0
            } else if block.miner_node == miner_node {
                block.mined_at
            } else {
                block.mined_at + delay[block.miner_region][miner_region]
            };
            if arrival <= now
                && (block.height > head_height
                    || (block.height == head_height && arrival < head_arrival))
            {
                head = idx;
                head_height = block.height;
                head_arrival = arrival;
            }
        }

        chain.extend(head, now, miner_node, miner_region)?;
        for (to, c) in counts.iter().enumerate() {
            let receivers = c - u32::from(to == miner_region);
            pair_deliveries[miner_region][to] += u64::from(receivers);
        }
    }

    let fork_rate = chain.fork_rate()?;
    let tps = throughput(
        config.block_size_bytes,
        config.expected_mining_interval_s,
        config.tx_size_bytes,
    );
    let (median, p90) = weighted_delay_percentiles(&delay, &pair_deliveries);

    let mut values = BTreeMap::new();
    values.insert("fork_rate".to_string(), fork_rate);
    values.insert("throughput_tps".to_string(), tps);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("propagation_median_s".to_string(), median);
    diagnostics.insert("propagation_p90_s".to_string(), p90);
    diagnostics.insert("blocks_total".to_string(), chain.total_mined() as f64);
    diagnostics.insert(
        "main_chain_height".to_string(),
        chain.main_chain_height() as f64,
    );
    diagnostics.insert(
        "orphans".to_string(),
        (chain.total_mined() - chain.main_chain_height() as usize) as f64,
    );
    Ok(SimResult {
        values,
        diagnostics,
    })
}

/// Median and 90th percentile of delivery delays, weighted by how many
/// deliveries each (miner region, receiver region) pair saw.
fn weighted_delay_percentiles(delay: &[Vec<f64>], deliveries: &[Vec<u64>]) -> (f64, f64) {
    let mut pairs: Vec<(f64, u64)> = delay
        .iter()
        .zip(deliveries)
        .flat_map(|(drow, wrow)| drow.iter().copied().zip(wrow.iter().copied()))
        .filter(|&(_, w)| w > 0)
        .collect();
    if pairs.is_empty() {
        return (0.0, 0.0);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: u64 = pairs.iter().map(|&(_, w)| w).sum();
    let quantile = |q: f64| {
        let target = (q * total as f64).ceil().max(1.0) as u64;
        let mut cum = 0u64;
        for &(d, w) in &pairs {
            cum += w;
            if cum >= target {
                return d;
            }
        }
        pairs.last().unwrap().0
    };
    (quantile(0.5), quantile(0.9))
}
