//! Streamed out-of-core 2D FFT with near-memory performance modeling.
//!
//! The crate has three layers:
//!
//! - numerics: [`fft`] (1D radix-2 kernels plus a brute-force DFT oracle) and
//!   [`stream`]/[`grid`] (the two-pass row-block engine with
//!   transpose-on-write-back over in-memory or file-backed grids);
//! - models: [`nmc`] (bandwidth-bound execution-time estimates and the
//!   read/compute/write overlap simulator) and [`roofline`]/[`cpi`]
//!   (ceilings, intensity, boundness classification, counter breakdowns);
//! - plumbing: [`ingest`] (platform catalogues, counter dumps) and
//!   [`report`] (deterministic CSV/SVG/table rendering).

pub mod cpi;
pub mod error;
pub mod fft;
pub mod grid;
pub mod ingest;
pub mod nmc;
pub mod report;
pub mod roofline;
pub mod stream;

pub use error::{Error, Result};
pub use num_complex::Complex32;

pub use cpi::{
    analyze_samples, classify_boundness, cpi_breakdown, Boundness, BoundnessThresholds, KernelCpi,
    PmuSample,
};
pub use fft::{
    dft_oracle, fft1d, flop_count_fft, flop_count_fft2d, rel_l2_error, Direction, FftPlan,
};
pub use grid::{read_descriptor, write_descriptor, ComplexGrid};
pub use ingest::{parse_counter_dump, SpecFile};
pub use nmc::{
    estimate_fft2d_time, min_accelerators, simulate_pipeline, total_stream_bytes, Bottleneck,
    EstimateReport, MemoryKind, NmcConfig, PipelineReport,
};
pub use report::{
    build_estimate_grid, format_seconds_2sig, format_tflops, parse_roofline_points,
    render_cpi, render_estimate_grid, render_roofline, size_label, EstimateGrid, ReportFormat,
};
pub use roofline::{
    amdahl_projection, attained_perf_tflops, fft2d_ai, peak_flops_cpu, roofline_classify, speedup,
    AiConvention, AmdahlProjection, Bound, MachineSpec, RooflinePoint,
};
pub use stream::{
    fft2d_reference, fft2d_streamed, transpose_blocked, PassTrace, StreamTrace, TileParams,
};
