//! CPI breakdown over a fixed hardware-counter set.
//!
//! Counters form a two-level tree rooted at run cycles: completion-stall
//! cycles split into load/store-unit and execution-unit stalls. Percentages
//! of run cycles per counter separate memory-starved kernels (dominated by
//! LSU stall share) from compute-limited ones (high completion share).

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub const PM_RUN_CYC: &str = "PM_RUN_CYC";
pub const PM_CMPLU_STALL: &str = "PM_CMPLU_STALL";
pub const PM_CMPLU_STALL_THRD: &str = "PM_CMPLU_STALL_THRD";
pub const PM_1PLUS_PPC_CMPL: &str = "PM_1PLUS_PPC_CMPL";
pub const PM_NTC_ISSUE_HOLD: &str = "PM_NTC_ISSUE_HOLD";
pub const PM_ICT_NOSLOT_CYC: &str = "PM_ICT_NOSLOT_CYC";
pub const PM_CMPLU_STALL_LSU: &str = "PM_CMPLU_STALL_LSU";
pub const PM_CMPLU_STALL_EXEC_UNIT: &str = "PM_CMPLU_STALL_EXEC_UNIT";

/// The supported counter set, in report order.
pub const COUNTERS: [&str; 8] = [
    PM_RUN_CYC,
    PM_CMPLU_STALL,
    PM_CMPLU_STALL_THRD,
    PM_1PLUS_PPC_CMPL,
    PM_NTC_ISSUE_HOLD,
    PM_ICT_NOSLOT_CYC,
    PM_CMPLU_STALL_LSU,
    PM_CMPLU_STALL_EXEC_UNIT,
];

/// (child, parent) containment edges below the root.
const TREE_EDGES: [(&str, &str); 2] = [
    (PM_CMPLU_STALL_LSU, PM_CMPLU_STALL),
    (PM_CMPLU_STALL_EXEC_UNIT, PM_CMPLU_STALL),
];

pub fn is_known_counter(name: &str) -> bool {
    COUNTERS.contains(&name)
}

/// One kernel's validated counter measurements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PmuSample {
    kernel: String,
    counters: BTreeMap<String, u64>,
}

impl PmuSample {
    /// Validates counter names, the presence of positive run cycles, and the
    /// containment edges of the counter tree.
    pub fn new(kernel: impl Into<String>, counters: BTreeMap<String, u64>) -> Result<Self> {
        let kernel = kernel.into();
        for name in counters.keys() {
            if !is_known_counter(name) {
                return Err(Error::UnknownCounterName {
                    kernel,
                    counter: name.clone(),
                });
            }
        }
        let run_cyc = *counters.get(PM_RUN_CYC).ok_or(Error::MissingCounter {
            kernel: kernel.clone(),
            counter: PM_RUN_CYC,
        })?;
        if run_cyc == 0 {
            return Err(Error::NonPositive { what: "PM_RUN_CYC" });
        }
        for (name, value) in &counters {
            if name != PM_RUN_CYC && *value > run_cyc {
                return Err(Error::Containment {
                    kernel,
                    child: name.clone(),
                    parent: PM_RUN_CYC.to_string(),
                });
            }
        }
        for (child, parent) in TREE_EDGES {
            if let (Some(c), Some(p)) = (counters.get(child), counters.get(parent)) {
                if c > p {
                    return Err(Error::Containment {
                        kernel,
                        child: child.to_string(),
                        parent: parent.to_string(),
                    });
                }
            }
        }
        Ok(Self { kernel, counters })
    }

    pub fn kernel(&self) -> &str {
        &self.kernel
    }

    pub fn counter(&self, name: &str) -> u64 {
        self.counters.get(name).copied().unwrap_or(0)
    }
}

/// Percent of run cycles per counter, for every counter present in the
/// sample.
pub fn cpi_breakdown(sample: &PmuSample) -> BTreeMap<String, f64> {
    let run_cyc = sample.counter(PM_RUN_CYC) as f64;
    sample
        .counters
        .iter()
        .map(|(name, value)| (name.clone(), 100.0 * *value as f64 / run_cyc))
        .collect()
}

/// Thresholds separating stall profiles, in percent of run cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundnessThresholds {
    /// LSU stall share at or above which a kernel counts as memory-starved.
    pub lsu_min_percent: f64,
    /// LSU share must also dominate the execution-unit share by this factor.
    pub lsu_over_exec_factor: f64,
    /// Completion share at or above which a kernel counts as compute-limited.
    pub completion_min_percent: f64,
}

impl Default for BoundnessThresholds {
    fn default() -> Self {
        Self {
            lsu_min_percent: 55.0,
            lsu_over_exec_factor: 2.0,
            completion_min_percent: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundness {
    MemoryBound,
    ComputeBound,
    Mixed,
}

impl std::fmt::Display for Boundness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundness::MemoryBound => write!(f, "memory_bound"),
            Boundness::ComputeBound => write!(f, "compute_bound"),
            Boundness::Mixed => write!(f, "mixed"),
        }
    }
}

/// Classify a breakdown: memory-bound when the LSU stall share is large and
/// dominates execution-unit stalls; compute-bound when most cycles complete
/// instructions and the LSU share stays small; mixed otherwise.
pub fn classify_boundness(
    percents: &BTreeMap<String, f64>,
    thresholds: &BoundnessThresholds,
) -> Boundness {
    let pct = |name: &str| percents.get(name).copied().unwrap_or(0.0);
    let lsu = pct(PM_CMPLU_STALL_LSU);
    let exec = pct(PM_CMPLU_STALL_EXEC_UNIT);
    let completion = pct(PM_1PLUS_PPC_CMPL);

    if lsu >= thresholds.lsu_min_percent && lsu >= thresholds.lsu_over_exec_factor * exec {
        Boundness::MemoryBound
    } else if completion >= thresholds.completion_min_percent && lsu < thresholds.lsu_min_percent {
        Boundness::ComputeBound
    } else {
        Boundness::Mixed
    }
}

/// Breakdown plus classification for one kernel, ready for reporting.
#[derive(Debug, Clone)]
pub struct KernelCpi {
    pub kernel: String,
    pub percents: BTreeMap<String, f64>,
    pub boundness: Boundness,
}

/// Analyze a set of samples with the given thresholds, preserving order.
pub fn analyze_samples(samples: &[PmuSample], thresholds: &BoundnessThresholds) -> Vec<KernelCpi> {
    samples
        .iter()
        .map(|sample| {
            let percents = cpi_breakdown(sample);
            let boundness = classify_boundness(&percents, thresholds);
            KernelCpi {
                kernel: sample.kernel().to_string(),
                percents,
                boundness,
            }
        })
        .collect()
}
