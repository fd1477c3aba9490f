//! Execution-time model for channel-attached FFT accelerators.
//!
//! A streamed n x n transform moves exactly `32 * n^2` bytes (two passes,
//! each a full read plus a full write), so with enough accelerators to
//! overlap transfers and compute the runtime is traffic divided by aggregate
//! channel bandwidth. Channel bandwidths are effective values in GiB/s
//! (2^30 bytes/s); conservatively measured figures already fold in refresh
//! and controller overheads, so no further derating is applied.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::fft::{ensure_power_of_two, flop_count_fft, flop_count_fft2d};
use crate::stream::TileParams;

pub const BYTES_PER_GIB: f64 = (1u64 << 30) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Ddr4Dimm,
    Hbm2Channel,
}

/// One memory-channel configuration feeding the model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NmcConfig {
    pub name: String,
    pub memory: MemoryKind,
    pub channels: u32,
    /// Effective bandwidth of one channel, GiB/s.
    pub bw_per_channel_gib: f64,
    /// Memory access vector width; fixes the row-block height k = width / 8.
    #[serde(default = "default_access_width")]
    pub access_width_bytes: usize,
    /// Number of 1D FFT accelerators. The shipped default is ample: large
    /// enough that every modeled size stays bandwidth-limited.
    #[serde(default = "default_accelerators")]
    pub accelerators: u32,
    /// Per-accelerator 1D FFT throughput, flop/s. Placeholder figure; only
    /// the overlap sizing depends on it.
    #[serde(default = "default_accel_rate")]
    pub accel_rate_flops: f64,
}

fn default_access_width() -> usize {
    32
}

fn default_accelerators() -> u32 {
    256
}

fn default_accel_rate() -> f64 {
    1.0e10
}

impl NmcConfig {
    pub fn new(name: &str, memory: MemoryKind, channels: u32, bw_per_channel_gib: f64) -> Self {
        Self {
            name: name.to_string(),
            memory,
            channels,
            bw_per_channel_gib,
            access_width_bytes: default_access_width(),
            accelerators: default_accelerators(),
            accel_rate_flops: default_accel_rate(),
        }
    }

    pub fn with_accelerators(mut self, accelerators: u32) -> Self {
        self.accelerators = accelerators;
        self
    }

    pub fn aggregate_bw_gib(&self) -> f64 {
        self.channels as f64 * self.bw_per_channel_gib
    }

    pub fn aggregate_bw_bytes(&self) -> f64 {
        self.aggregate_bw_gib() * BYTES_PER_GIB
    }

    /// Column label, e.g. "2 DDR4 DIMM" or "32 HBM2 channels".
    pub fn label(&self) -> String {
        match self.memory {
            MemoryKind::Ddr4Dimm => format!("{} DDR4 DIMM", self.channels),
            MemoryKind::Hbm2Channel => {
                let unit = if self.channels == 1 { "channel" } else { "channels" };
                format!("{} HBM2 {unit}", self.channels)
            }
        }
    }

    pub fn tile_params(&self) -> Result<TileParams> {
        TileParams::from_access_width(self.access_width_bytes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::MissingField {
                context: "nmc config".to_string(),
                field: "name",
            });
        }
        if self.channels == 0 {
            return Err(Error::NonPositive { what: "channels" });
        }
        ensure_positive(self.bw_per_channel_gib, "bw_per_channel_gib")?;
        if self.accelerators == 0 {
            return Err(Error::NonPositive { what: "accelerators" });
        }
        ensure_positive(self.accel_rate_flops, "accel_rate_flops")?;
        self.tile_params()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bottleneck {
    Bandwidth,
    Compute,
}

impl std::fmt::Display for Bottleneck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bottleneck::Bandwidth => write!(f, "bandwidth"),
            Bottleneck::Compute => write!(f, "compute"),
        }
    }
}

/// Modeled execution time of one 2D FFT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub n: usize,
    pub total_bytes: u64,
    pub time_s: f64,
    pub bottleneck: Bottleneck,
    pub min_accelerators_for_overlap: u32,
}

/// Bytes a streamed n x n transform moves end to end. Matches the
/// `StreamTrace` byte accounting exactly; this is the quantity divided by
/// bandwidth below.
pub fn total_stream_bytes(n: usize) -> u64 {
    32 * (n as u64) * (n as u64)
}

/// Closed-form estimate: max of transfer time (`32 n^2 / BW`) and compute
/// time (`10 n^2 log2 n / (accelerators * rate)`), with the larger side named
/// as the bottleneck. Ties count as bandwidth-limited.
pub fn estimate_fft2d_time(n: usize, cfg: &NmcConfig) -> Result<EstimateReport> {
    ensure_power_of_two(n)?;
    cfg.validate()?;
    let bandwidth_time = total_stream_bytes(n) as f64 / cfg.aggregate_bw_bytes();
    let compute_time =
        flop_count_fft2d(n)? / (cfg.accelerators as f64 * cfg.accel_rate_flops);
    let (time_s, bottleneck) = if compute_time > bandwidth_time {
        (compute_time, Bottleneck::Compute)
    } else {
        (bandwidth_time, Bottleneck::Bandwidth)
    };
    Ok(EstimateReport {
        n,
        total_bytes: total_stream_bytes(n),
        time_s,
        bottleneck,
        min_accelerators_for_overlap: min_accelerators(n, cfg)?,
    })
}

/// Smallest accelerator count whose aggregate compute keeps up with the
/// channels: ceil(10 * log2(n) * BW_bytes / (32 * rate)), at least 1.
pub fn min_accelerators(n: usize, cfg: &NmcConfig) -> Result<u32> {
    ensure_power_of_two(n)?;
    ensure_positive(cfg.accel_rate_flops, "accel_rate_flops")?;
    ensure_positive(cfg.bw_per_channel_gib, "bw_per_channel_gib")?;
    if cfg.channels == 0 {
        return Err(Error::NonPositive { what: "channels" });
    }
    let exact = flop_count_fft2d(n)? * cfg.aggregate_bw_bytes()
        / (cfg.accel_rate_flops * total_stream_bytes(n) as f64);
    // Nudge below the ceiling so exact integer ratios stay put.
    Ok(((exact - 1e-9).ceil().max(1.0)) as u32)
}

/// Outcome of the discrete overlap simulation.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    /// `time_s` is the simulated makespan; the bottleneck is taken from the
    /// closed-form comparison at this accelerator count.
    pub report: EstimateReport,
    pub blocks_scheduled: u64,
    pub closed_form_s: f64,
}

/// Discrete three-stage pipeline over every row block of both passes:
/// read block -> 1D FFTs -> write block. Compute slots are limited to the
/// accelerator count, each slot double-buffers (so up to two blocks are in
/// flight per slot), and the channel bandwidth is shared equally among all
/// in-flight transfers. The scheduler may leave surplus accelerators idle,
/// so the reported makespan is the best over slot counts up to the
/// configured number; this keeps the makespan non-increasing in the
/// accelerator count. Single-threaded and deterministic.
pub fn simulate_pipeline(n: usize, cfg: &NmcConfig, tile: &TileParams) -> Result<PipelineReport> {
    ensure_power_of_two(n)?;
    cfg.validate()?;
    tile.validate_for(n)?;

    let blocks = 2 * (n / tile.k);
    let block_bytes = (8 * tile.k * n) as f64;
    let block_flops = tile.k as f64 * flop_count_fft(n)?;
    let bandwidth = cfg.aggregate_bw_bytes();
    let total_flops = flop_count_fft2d(n)?;

    // Scan slot counts downward; once the compute-side lower bound alone
    // exceeds the best makespan so far, every smaller count is worse too.
    let mut best = f64::INFINITY;
    let mut slots = cfg.accelerators as usize;
    while slots >= 1 {
        let compute_floor = total_flops / (slots as f64 * cfg.accel_rate_flops);
        if compute_floor > best {
            break;
        }
        let makespan = raw_pipeline_makespan(
            blocks,
            block_bytes,
            block_flops / cfg.accel_rate_flops,
            bandwidth,
            slots,
        );
        best = best.min(makespan);
        slots -= 1;
    }
    let makespan_s = best;

    let closed = estimate_fft2d_time(n, cfg)?;
    let bandwidth_time = total_stream_bytes(n) as f64 / bandwidth;
    let compute_time = flop_count_fft2d(n)? / (cfg.accelerators as f64 * cfg.accel_rate_flops);
    let bottleneck = if compute_time > bandwidth_time {
        Bottleneck::Compute
    } else {
        Bottleneck::Bandwidth
    };

    Ok(PipelineReport {
        report: EstimateReport {
            n,
            total_bytes: total_stream_bytes(n),
            time_s: makespan_s,
            bottleneck,
            min_accelerators_for_overlap: closed.min_accelerators_for_overlap,
        },
        blocks_scheduled: blocks as u64,
        closed_form_s: closed.time_s,
    })
}

/// Event loop for one fixed compute-slot count. Bandwidth sharing uses
/// virtual service accounting: every in-flight transfer accrues service at
/// `bandwidth / active` bytes per second, so a transfer admitted at service
/// level v completes when the level reaches v + block_bytes.
fn raw_pipeline_makespan(
    blocks: usize,
    block_bytes: f64,
    compute_seconds: f64,
    bandwidth: f64,
    slots: usize,
) -> f64 {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Key(f64, u64, bool); // (completion key, admission order, is_read)

    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0
                .total_cmp(&other.0)
                .then(self.1.cmp(&other.1))
                .then(self.2.cmp(&other.2))
        }
    }

    let in_flight_cap = 2 * slots;
    let mut now = 0.0f64;
    let mut service = 0.0f64; // cumulative per-transfer service, bytes
    let mut transfers: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    let mut computing: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut admitted = 0usize;
    let mut in_flight = 0usize;
    let mut ready = 0usize;
    let mut written = 0usize;
    let service_eps = block_bytes * 1e-12;

    while written < blocks {
        while admitted < blocks && in_flight < in_flight_cap {
            transfers.push(Reverse(Key(service + block_bytes, seq, true)));
            seq += 1;
            admitted += 1;
            in_flight += 1;
        }
        while ready > 0 && computing.len() < slots {
            computing.push(Reverse(Key(now + compute_seconds, seq, false)));
            seq += 1;
            ready -= 1;
        }

        let dt_transfer = transfers
            .peek()
            .map(|Reverse(key)| (key.0 - service) * transfers.len() as f64 / bandwidth)
            .unwrap_or(f64::INFINITY);
        let dt_compute = computing
            .peek()
            .map(|Reverse(key)| key.0 - now)
            .unwrap_or(f64::INFINITY);
        let dt = dt_transfer.min(dt_compute).max(0.0);
        assert!(dt.is_finite(), "pipeline stalled with work outstanding");

        if !transfers.is_empty() {
            service += dt * bandwidth / transfers.len() as f64;
        }
        now += dt;

        while let Some(Reverse(key)) = transfers.peek() {
            if key.0 > service + service_eps {
                break;
            }
            let Reverse(key) = transfers.pop().unwrap();
            if key.2 {
                ready += 1;
            } else {
                in_flight -= 1;
                written += 1;
            }
        }
        let time_eps = 1e-15 * now.max(1.0);
        while let Some(Reverse(key)) = computing.peek() {
            if key.0 > now + time_eps {
                break;
            }
            computing.pop();
            transfers.push(Reverse(Key(service + block_bytes, seq, false)));
            seq += 1;
        }
    }
    now
}
