//! Roofline construction and headline projections: peak ceilings, arithmetic
//! intensity, memory/compute classification, speedup ratios and
//! serial-fraction (Amdahl) accounting.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::fft::{ensure_power_of_two, flop_count_fft2d};
use crate::nmc::BYTES_PER_GIB;

/// A platform description from which the roofline ceilings derive.
///
/// CPU-style machines carry the four factors of the peak formula
/// `freq_ghz * ops_per_core * cores * sockets / 1000`; accelerator cards give
/// `peak_tflops` directly. Bandwidth ceilings use the vendor convention of
/// decimal GB/s.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSpec {
    pub name: String,
    pub freq_ghz: Option<f64>,
    /// Single-precision operations per core per cycle.
    pub ops_per_core: Option<f64>,
    pub cores: Option<u32>,
    pub sockets: Option<u32>,
    pub peak_bw_gbs: f64,
    #[serde(default)]
    pub peak_tflops: Option<f64>,
}

impl MachineSpec {
    pub fn cpu(
        name: &str,
        freq_ghz: f64,
        ops_per_core: f64,
        cores: u32,
        sockets: u32,
        peak_bw_gbs: f64,
    ) -> Self {
        Self {
            name: name.to_string(),
            freq_ghz: Some(freq_ghz),
            ops_per_core: Some(ops_per_core),
            cores: Some(cores),
            sockets: Some(sockets),
            peak_bw_gbs,
            peak_tflops: None,
        }
    }

    pub fn accelerator(name: &str, peak_tflops: f64, peak_bw_gbs: f64) -> Self {
        Self {
            name: name.to_string(),
            freq_ghz: None,
            ops_per_core: None,
            cores: None,
            sockets: None,
            peak_bw_gbs,
            peak_tflops: Some(peak_tflops),
        }
    }

    /// Peak performance: the stated override if present, otherwise the CPU
    /// formula.
    pub fn peak_tflops(&self) -> Result<f64> {
        match self.peak_tflops {
            Some(peak) => Ok(peak),
            None => peak_flops_cpu(self),
        }
    }

    pub fn peak_bw_tbytes(&self) -> f64 {
        self.peak_bw_gbs / 1000.0
    }

    /// Arithmetic intensity where the bandwidth ceiling meets the compute
    /// ceiling, flop/byte.
    pub fn ridge_flop_per_byte(&self) -> Result<f64> {
        Ok(self.peak_tflops()? / self.peak_bw_tbytes())
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::MissingField {
                context: "machine".to_string(),
                field: "name",
            });
        }
        ensure_positive(self.peak_bw_gbs, "peak_bw_gbs")?;
        ensure_positive(self.peak_tflops()?, "peak_tflops")?;
        Ok(())
    }
}

/// Peak single-precision throughput in TFLOP/s:
/// `freq_ghz * ops_per_core * cores * sockets / 1000`.
pub fn peak_flops_cpu(spec: &MachineSpec) -> Result<f64> {
    let missing = |field: &'static str| Error::MissingField {
        context: format!("machine `{}`", spec.name),
        field,
    };
    let freq = spec.freq_ghz.ok_or_else(|| missing("freq_ghz"))?;
    let ops = spec.ops_per_core.ok_or_else(|| missing("ops_per_core"))?;
    let cores = spec.cores.ok_or_else(|| missing("cores"))?;
    let sockets = spec.sockets.ok_or_else(|| missing("sockets"))?;
    Ok(freq * ops * cores as f64 * sockets as f64 / 1000.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Memory,
    Compute,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::Memory => write!(f, "memory"),
            Bound::Compute => write!(f, "compute"),
        }
    }
}

/// One classified kernel point on a roofline plot.
#[derive(Debug, Clone, PartialEq)]
pub struct RooflinePoint {
    pub kernel: String,
    /// Arithmetic intensity, flop/byte.
    pub ai: f64,
    /// Attained performance, TFLOP/s.
    pub perf_tflops: f64,
    pub bound: Bound,
    /// Roofline height above this point: min(peak, ai * bandwidth).
    pub ceiling_tflops: f64,
}

impl RooflinePoint {
    /// Whether the point sits under its ceiling, with `tolerance` relative
    /// headroom. Points produced by this crate's own models must pass;
    /// measured external points are merely classified.
    pub fn is_under_ceiling(&self, tolerance: f64) -> bool {
        self.perf_tflops <= self.ceiling_tflops * (1.0 + tolerance)
    }
}

/// Classify a kernel point against a machine's ceilings. A point left of the
/// ridge is memory-bound; at or right of it, compute-bound.
pub fn roofline_classify(
    kernel: &str,
    ai: f64,
    perf_tflops: f64,
    spec: &MachineSpec,
) -> Result<RooflinePoint> {
    ensure_positive(ai, "arithmetic intensity")?;
    if perf_tflops < 0.0 {
        return Err(Error::NonPositive { what: "performance" });
    }
    let ridge = spec.ridge_flop_per_byte()?;
    let bound = if ai < ridge { Bound::Memory } else { Bound::Compute };
    let ceiling_tflops = spec.peak_tflops()?.min(ai * spec.peak_bw_tbytes());
    Ok(RooflinePoint {
        kernel: kernel.to_string(),
        ai,
        perf_tflops,
        bound,
        ceiling_tflops,
    })
}

/// Unit convention for FFT arithmetic intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiConvention {
    /// flop / byte: `10 n^2 log2 n / (8 n^2)` = `1.25 * log2 n`.
    FlopPerByte,
    /// Gflop / GiB: the same ratio with flops counted in 10^9 units and
    /// bytes in 2^30 units, i.e. scaled by 2^30 / 10^9.
    GflopPerGib,
}

/// Arithmetic intensity of an n x n 2D FFT under either unit convention.
pub fn fft2d_ai(n: usize, convention: AiConvention) -> Result<f64> {
    ensure_power_of_two(n)?;
    let ai = flop_count_fft2d(n)? / (8.0 * n as f64 * n as f64);
    Ok(match convention {
        AiConvention::FlopPerByte => ai,
        AiConvention::GflopPerGib => ai * (BYTES_PER_GIB / 1.0e9),
    })
}

/// Attained performance of an n x n 2D FFT finished in `time_s`, TFLOP/s.
pub fn attained_perf_tflops(n: usize, time_s: f64) -> Result<f64> {
    ensure_positive(time_s, "time")?;
    Ok(flop_count_fft2d(n)? / time_s / 1.0e12)
}

/// Execution-time speedup of `target` over `baseline`.
pub fn speedup(t_baseline: f64, t_target: f64) -> Result<f64> {
    ensure_positive(t_baseline, "time")?;
    ensure_positive(t_target, "time")?;
    Ok(t_baseline / t_target)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmdahlProjection {
    /// Share of total time spent in the accelerated kernel, percent.
    pub share_percent: f64,
    /// Whole-pipeline speedup once the kernel runs in `new_time`.
    pub overall_speedup: f64,
}

/// Serial-fraction accounting: given per-kernel times, the share of the
/// accelerated kernel and the overall speedup when it is replaced by
/// `new_time_s` (>= 0; zero gives the acceleration limit).
pub fn amdahl_projection(
    kernel_times: &[(String, f64)],
    accelerated: &str,
    new_time_s: f64,
) -> Result<AmdahlProjection> {
    if new_time_s < 0.0 {
        return Err(Error::NonPositive { what: "new time" });
    }
    let mut total = 0.0;
    let mut old = None;
    for (kernel, time) in kernel_times {
        ensure_positive(*time, "kernel time")?;
        total += time;
        if kernel == accelerated {
            old = Some(*time);
        }
    }
    let old = old.ok_or_else(|| Error::UnknownName {
        kind: "kernel",
        name: accelerated.to_string(),
    })?;
    Ok(AmdahlProjection {
        share_percent: 100.0 * old / total,
        overall_speedup: total / (total - old + new_time_s),
    })
}
