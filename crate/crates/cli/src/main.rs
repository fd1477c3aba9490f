//! `nmfft`: streamed 2D FFT runs plus the performance-model toolbox
//! (execution-time tables, overlap simulation, rooflines, counter
//! breakdowns, serial-fraction projections, grid generation).

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nmfft_core::{
    amdahl_projection, attained_perf_tflops, estimate_fft2d_time, fft2d_ai, fft2d_reference,
    fft2d_streamed, min_accelerators, parse_counter_dump, parse_roofline_points,
    rel_l2_error, roofline_classify, simulate_pipeline, size_label, AiConvention,
    BoundnessThresholds, ComplexGrid, Direction, ReportFormat, RooflinePoint, SpecFile,
    StreamTrace, TileParams,
};
use nmfft_core::cpi::analyze_samples;
use nmfft_core::grid::{read_descriptor, write_descriptor};
use nmfft_core::report::{build_estimate_grid, render_cpi, render_estimate_grid, render_roofline};

const VERIFY_TOLERANCE: f64 = 1.0e-4;

#[derive(Parser)]
#[command(
    name = "nmfft",
    version,
    about = "Streamed out-of-core 2D FFT with memory-channel performance modeling"
)]
struct Cli {
    /// Platform catalogue (TOML); defaults to $NMFFT_SPEC, then the built-in
    /// catalogue
    #[arg(long, global = true, value_name = "FILE")]
    spec: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the streamed 2D FFT over a generated or loaded grid
    Fft2d {
        /// Grid side length (power of two; suffix k = x1024). May be omitted
        /// when --in has a sidecar descriptor
        #[arg(long, value_parser = parse_size)]
        size: Option<usize>,
        /// Rows per streamed block (k = access width / 8 bytes)
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Grid storage backend
        #[arg(long, value_enum, default_value_t = Backend::Mem)]
        backend: Backend,
        /// Input grid file (raw little-endian complex64, row-major)
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
        /// Where to store the transformed grid
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Transform direction
        #[arg(long, value_enum, default_value_t = Dir::Fwd)]
        direction: Dir,
        /// Compare against the in-memory reference transform and report the
        /// largest per-row relative error
        #[arg(long)]
        verify: bool,
        /// Seed for generated grids
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for the block pipeline
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Modeled execution times for grid sizes x memory configs
    Estimate {
        /// Comma-separated grid sides (suffix k = x1024)
        #[arg(long, default_value = "4k,8k,16k,32k")]
        sizes: String,
        /// Comma-separated config names from the catalogue, or `all`
        #[arg(long, default_value = "all")]
        configs: String,
        #[arg(long, default_value = "table", value_parser = parse_format)]
        format: ReportFormat,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Simulate read/compute/write overlap against the closed-form estimate
    Pipeline {
        #[arg(long, value_parser = parse_size)]
        size: usize,
        /// Memory config name from the catalogue
        #[arg(long)]
        config: String,
        /// Override the config's accelerator count
        #[arg(long)]
        accelerators: Option<u32>,
        /// Rows per streamed block
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Roofline ceilings and kernel points for one machine
    Roofline {
        /// Machine name from the catalogue
        #[arg(long)]
        machine: String,
        /// Model FFT points through this memory config's execution times
        #[arg(long)]
        config: Option<String>,
        #[arg(long, default_value = "4k,8k,16k,32k")]
        sizes: String,
        /// Intensity unit convention for modeled FFT points
        #[arg(long, value_enum, default_value_t = Convention::FlopPerByte)]
        convention: Convention,
        /// Extra measured points to classify (`kernel,ai,perf_tflops` CSV)
        #[arg(long, value_name = "FILE")]
        points: Option<PathBuf>,
        #[arg(long, default_value = "table", value_parser = parse_format)]
        format: ReportFormat,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Counter-dump breakdown as percent of run cycles, with a stall profile
    /// class per kernel
    Cpi {
        /// Counter dump (`kernel,counter,value` CSV)
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, default_value = "table", value_parser = parse_format)]
        format: ReportFormat,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// LSU stall share (percent) at or above which a kernel counts as
        /// memory-bound
        #[arg(long, default_value_t = 55.0)]
        lsu_min: f64,
        /// Required ratio of LSU share over execution-unit share
        #[arg(long, default_value_t = 2.0)]
        lsu_exec_factor: f64,
        /// Completion share (percent) at or above which a kernel counts as
        /// compute-bound
        #[arg(long, default_value_t = 50.0)]
        completion_min: f64,
    },
    /// Whole-pipeline speedup when one kernel is accelerated
    Amdahl {
        /// Per-kernel times, e.g. `fft=47,gridder=30,degridder=23`
        #[arg(long)]
        times: String,
        /// Kernel being accelerated
        #[arg(long)]
        accelerated: String,
        /// Its new execution time (same unit as --times; 0 gives the limit)
        #[arg(long)]
        new_time: f64,
    },
    /// Generate a random grid file with its sidecar descriptor
    GenGrid {
        #[arg(long, value_parser = parse_size)]
        size: usize,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Mem,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Fwd,
    Inv,
}

impl From<Dir> for Direction {
    fn from(d: Dir) -> Self {
        match d {
            Dir::Fwd => Direction::Forward,
            Dir::Inv => Direction::Inverse,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    FlopPerByte,
    GflopPerGib,
}

impl From<Convention> for AiConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::FlopPerByte => AiConvention::FlopPerByte,
            Convention::GflopPerGib => AiConvention::GflopPerGib,
        }
    }
}

fn parse_size(text: &str) -> Result<usize, String> {
    let text = text.trim();
    let (digits, scale) = match text.strip_suffix(['k', 'K']) {
        Some(rest) => (rest, 1024usize),
        None => (text, 1),
    };
    let value: usize = digits
        .parse()
        .map_err(|_| format!("invalid size `{text}`"))?;
    Ok(value * scale)
}

fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_size(s).map_err(|e| anyhow!(e)))
        .collect()
}

fn parse_format(text: &str) -> Result<ReportFormat, String> {
    text.parse().map_err(|e: nmfft_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let catalogue = load_catalogue(cli.spec.as_deref())?;
    match cli.command {
        Command::Fft2d {
            size,
            k,
            backend,
            input,
            out,
            direction,
            verify,
            seed,
            threads,
        } => cmd_fft2d(size, k, backend, input, out, direction.into(), verify, seed, threads),
        Command::Estimate {
            sizes,
            configs,
            format,
            out,
        } => cmd_estimate(&catalogue, &sizes, &configs, format, out),
        Command::Pipeline {
            size,
            config,
            accelerators,
            k,
        } => cmd_pipeline(&catalogue, size, &config, accelerators, k),
        Command::Roofline {
            machine,
            config,
            sizes,
            convention,
            points,
            format,
            out,
        } => cmd_roofline(
            &catalogue,
            &machine,
            config.as_deref(),
            &sizes,
            convention.into(),
            points,
            format,
            out,
        ),
        Command::Cpi {
            input,
            format,
            out,
            lsu_min,
            lsu_exec_factor,
            completion_min,
        } => {
            let thresholds = BoundnessThresholds {
                lsu_min_percent: lsu_min,
                lsu_over_exec_factor: lsu_exec_factor,
                completion_min_percent: completion_min,
            };
            cmd_cpi(&input, format, out, &thresholds)
        }
        Command::Amdahl {
            times,
            accelerated,
            new_time,
        } => cmd_amdahl(&times, &accelerated, new_time),
        Command::GenGrid { size, out, seed } => cmd_gen_grid(size, &out, seed),
    }
}

fn load_catalogue(flag: Option<&Path>) -> Result<SpecFile> {
    if let Some(path) = flag {
        return SpecFile::load(path).with_context(|| format!("loading {}", path.display()));
    }
    if let Ok(path) = std::env::var("NMFFT_SPEC") {
        if !path.is_empty() {
            return SpecFile::load(Path::new(&path)).with_context(|| format!("loading {path}"));
        }
    }
    Ok(SpecFile::builtin())
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_fft2d(
    size: Option<usize>,
    k: usize,
    backend: Backend,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    direction: Direction,
    verify: bool,
    seed: u64,
    threads: usize,
) -> Result<()> {
    let n = match (size, &input) {
        (Some(n), _) => n,
        (None, Some(path)) => read_descriptor(path)
            .with_context(|| format!("no --size and no readable sidecar for {}", path.display()))?,
        (None, None) => bail!("--size is required unless --in has a sidecar descriptor"),
    };
    let tile = TileParams::from_rows(k)?;

    let scratch_dir = tempfile::tempdir()?;
    let mut grid = match (backend, &input) {
        (Backend::Mem, Some(path)) => {
            let on_disk = ComplexGrid::open_file(path, n)?;
            ComplexGrid::from_values(n, on_disk.to_vec()?)?
        }
        (Backend::Mem, None) => {
            let mut g = ComplexGrid::zeros(n)?;
            g.fill_random(seed)?;
            g
        }
        (Backend::File, maybe_input) => {
            let work_path = out
                .clone()
                .unwrap_or_else(|| scratch_dir.path().join("work.c64"));
            if let Some(path) = maybe_input {
                ComplexGrid::open_file(path, n)?; // validates size before copying
                std::fs::copy(path, &work_path)?;
                ComplexGrid::open_file(&work_path, n)?
            } else {
                let mut g = ComplexGrid::create_file(n, &work_path)?;
                g.fill_random(seed)?;
                g
            }
        }
    };

    let pristine = if verify { Some(grid.to_vec()?) } else { None };

    let started = Instant::now();
    let trace = fft2d_streamed(&mut grid, &tile, direction, threads)?;
    let elapsed = started.elapsed();
    print_trace(n, &trace);
    println!("wall time: {:.3} ms", elapsed.as_secs_f64() * 1e3);

    if let Some(original) = pristine {
        let reference = fft2d_reference(&ComplexGrid::from_values(n, original)?, direction)?
            .to_vec()?;
        let result = grid.to_vec()?;
        let max_err = reference
            .chunks(n)
            .zip(result.chunks(n))
            .map(|(expected, actual)| rel_l2_error(actual, expected))
            .fold(0.0f64, f64::max);
        println!("max rel err = {max_err:.3e} (tol {VERIFY_TOLERANCE:.1e})");
        if max_err > VERIFY_TOLERANCE {
            bail!("verification failed: max rel err {max_err:.3e} exceeds {VERIFY_TOLERANCE:.1e}");
        }
    }

    if let Some(out_path) = out {
        if backend == Backend::Mem {
            let mut sink = ComplexGrid::create_file(n, &out_path)?;
            sink.write_rows(0, &grid.to_vec()?)?;
        }
        write_descriptor(&out_path, n)?;
        println!("result grid: {}", out_path.display());
    }
    Ok(())
}

fn print_trace(n: usize, trace: &StreamTrace) {
    for (idx, pass) in trace.passes.iter().enumerate() {
        println!(
            "pass {}: read {} B, wrote {} B, {} blocks",
            idx + 1,
            pass.bytes_read,
            pass.bytes_written,
            pass.blocks
        );
    }
    println!("total traffic: {} B (32 * {n}^2)", trace.total_bytes());
    println!("peak resident staging: {} B", trace.peak_resident_bytes);
}

fn cmd_estimate(
    catalogue: &SpecFile,
    sizes: &str,
    configs: &str,
    format: ReportFormat,
    out: Option<PathBuf>,
) -> Result<()> {
    let sizes = parse_sizes(sizes)?;
    let configs = if configs == "all" {
        catalogue.nmc_configs.clone()
    } else {
        configs
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|name| catalogue.nmc_config(name.trim()).cloned())
            .collect::<nmfft_core::Result<Vec<_>>>()?
    };
    let grid = build_estimate_grid(&sizes, &configs)?;
    let rendered = render_estimate_grid(&grid, format)?;
    emit(&rendered, out.as_deref())
}

fn cmd_pipeline(
    catalogue: &SpecFile,
    size: usize,
    config: &str,
    accelerators: Option<u32>,
    k: usize,
) -> Result<()> {
    let mut cfg = catalogue.nmc_config(config)?.clone();
    if let Some(a) = accelerators {
        cfg = cfg.with_accelerators(a);
    }
    let tile = TileParams::from_rows(k)?;
    let run = simulate_pipeline(size, &cfg, &tile)?;
    let closed = run.closed_form_s;
    let deviation = (run.report.time_s - closed) / closed * 100.0;
    println!(
        "{} ({}, {} GiB/s aggregate), grid {}",
        cfg.name,
        cfg.label(),
        cfg.aggregate_bw_gib(),
        size_label(size)
    );
    println!("blocks scheduled: {} ({} rows each)", run.blocks_scheduled, k);
    println!("accelerators: {} (overlap needs >= {})", cfg.accelerators, min_accelerators(size, &cfg)?);
    println!("closed-form estimate: {:.6} s", closed);
    println!(
        "simulated makespan: {:.6} s ({:+.2}% vs closed form)",
        run.report.time_s, deviation
    );
    println!("bottleneck: {}", run.report.bottleneck);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_roofline(
    catalogue: &SpecFile,
    machine: &str,
    config: Option<&str>,
    sizes: &str,
    convention: AiConvention,
    points_file: Option<PathBuf>,
    format: ReportFormat,
    out: Option<PathBuf>,
) -> Result<()> {
    let machine = catalogue.machine(machine)?;
    let mut points: Vec<RooflinePoint> = Vec::new();

    if let Some(config) = config {
        let cfg = catalogue.nmc_config(config)?;
        for n in parse_sizes(sizes)? {
            let time = estimate_fft2d_time(n, cfg)?.time_s;
            let perf = attained_perf_tflops(n, time)?;
            let ai = fft2d_ai(n, convention)?;
            points.push(roofline_classify(
                &format!("fft-{}", size_label(n)),
                ai,
                perf,
                machine,
            )?);
        }
    }
    if let Some(path) = &points_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        for (kernel, ai, perf) in parse_roofline_points(&text)? {
            points.push(roofline_classify(&kernel, ai, perf, machine)?);
        }
    }
    if points.is_empty() {
        bail!("nothing to plot: pass --config and/or --points");
    }
    let rendered = render_roofline(machine, &points, format)?;
    emit(&rendered, out.as_deref())
}

fn cmd_cpi(
    input: &Path,
    format: ReportFormat,
    out: Option<PathBuf>,
    thresholds: &BoundnessThresholds,
) -> Result<()> {
    let text =
        std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let samples = parse_counter_dump(&text)?;
    let rows = analyze_samples(&samples, thresholds);
    let rendered = render_cpi(&rows, format)?;
    emit(&rendered, out.as_deref())
}

fn cmd_amdahl(times: &str, accelerated: &str, new_time: f64) -> Result<()> {
    let mut kernel_times = Vec::new();
    for entry in times.split(',').filter(|s| !s.trim().is_empty()) {
        let (kernel, value) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("expected `kernel=time`, got `{entry}`"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| anyhow!("invalid time `{value}` for kernel `{kernel}`"))?;
        kernel_times.push((kernel.trim().to_string(), value));
    }
    let projection = amdahl_projection(&kernel_times, accelerated, new_time)?;
    println!(
        "{accelerated} share of total time: {:.2}%",
        projection.share_percent
    );
    println!("overall speedup: {:.4}x", projection.overall_speedup);
    Ok(())
}

fn cmd_gen_grid(size: usize, out: &Path, seed: u64) -> Result<()> {
    let mut grid = ComplexGrid::create_file(size, out)?;
    grid.fill_random(seed)?;
    let sidecar = write_descriptor(out, size)?;
    println!(
        "wrote {} ({} B) and {}",
        out.display(),
        (size * size * 8) as u64,
        sidecar.display()
    );
    Ok(())
}
