//! Streamed 2D FFT: row-block 1D transforms with transpose-on-write-back.
//!
//! The transform runs as two identical passes. Each pass streams `k` rows at
//! a time, applies a 1D FFT to every row, and writes the results back
//! transposed in k x k tiles, where `k` is the number of samples that fit in
//! one memory access vector. A pass therefore leaves the grid transposed;
//! after the second pass the orientation matches the input. Passes ping-pong
//! between the grid's own region and a scratch region of the same kind, so a
//! file-backed run keeps at most one k-row block resident per worker.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_complex::Complex32;

use crate::error::{Error, Result};
use crate::fft::{Direction, FftPlan};
use crate::grid::{ComplexGrid, Store, SAMPLE_BYTES};

/// Row-block geometry: `k` rows per block, with `k` equal to the number of
/// samples that fit in one access vector (`access_width_bytes / 8`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileParams {
    pub k: usize,
    pub access_width_bytes: usize,
}

impl TileParams {
    /// Geometry for a given block height; the access width follows as `8 * k`.
    pub fn from_rows(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::NonPositive { what: "rows per block" });
        }
        Ok(Self {
            k,
            access_width_bytes: k * SAMPLE_BYTES,
        })
    }

    /// Geometry for a given access vector width, which must hold a whole
    /// number of 8-byte samples.
    pub fn from_access_width(width_bytes: usize) -> Result<Self> {
        if width_bytes == 0 || !width_bytes.is_multiple_of(SAMPLE_BYTES) {
            return Err(Error::AccessWidth {
                width_bytes,
                sample_bytes: SAMPLE_BYTES,
            });
        }
        Ok(Self {
            k: width_bytes / SAMPLE_BYTES,
            access_width_bytes: width_bytes,
        })
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n || !n.is_multiple_of(self.k) {
            return Err(Error::BlockSize { k: self.k, n });
        }
        Ok(())
    }
}

impl Default for TileParams {
    /// 256-bit access vectors holding four 64-bit samples.
    fn default() -> Self {
        Self {
            k: 4,
            access_width_bytes: 32,
        }
    }
}

/// Byte and block counts for one streaming pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PassTrace {
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub blocks: u64,
}

/// Traffic accounting for a full streamed transform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamTrace {
    pub passes: Vec<PassTrace>,
    /// High-water mark of engine staging buffers, summed over live workers.
    pub peak_resident_bytes: u64,
}

impl StreamTrace {
    /// Total bytes moved across all passes (reads plus writes). For an n x n
    /// grid this is exactly `32 * n^2`: two passes, each reading and writing
    /// the full `8 * n^2`-byte grid once.
    pub fn total_bytes(&self) -> u64 {
        self.passes
            .iter()
            .map(|p| p.bytes_read + p.bytes_written)
            .sum()
    }
}

/// Streamed 2D FFT in place. Returns the traffic trace; the grid holds the
/// transform on return, in the same orientation as the input. `threads`
/// workers process row blocks round-robin; the result does not depend on the
/// worker count.
pub fn fft2d_streamed(
    grid: &mut ComplexGrid,
    tile: &TileParams,
    direction: Direction,
    threads: usize,
) -> Result<StreamTrace> {
    let n = grid.n();
    tile.validate_for(n)?;
    let workers = threads.max(1).min(n / tile.k);
    let plan = FftPlan::new(n)?;
    let scratch = grid.store().make_scratch(n)?;
    let meter = ResidencyMeter::default();

    let fft = Some((&plan, direction));
    let first = run_pass(grid.store(), &scratch, n, tile.k, fft, workers, &meter)?;
    let second = run_pass(&scratch, grid.store(), n, tile.k, fft, workers, &meter)?;

    Ok(StreamTrace {
        passes: vec![first, second],
        peak_resident_bytes: meter.peak(),
    })
}

/// Naive row-column reference: 1D FFT over every row, full in-memory
/// transpose, 1D FFT over every row again, transpose back. Used to verify the
/// streamed engine; requires an in-memory grid.
pub fn fft2d_reference(grid: &ComplexGrid, direction: Direction) -> Result<ComplexGrid> {
    if grid.is_file_backed() {
        return Err(Error::Unsupported(
            "reference 2D FFT requires an in-memory grid",
        ));
    }
    let n = grid.n();
    let plan = FftPlan::new(n)?;
    let mut data = grid.to_vec()?;
    for row in data.chunks_mut(n) {
        plan.execute(row, direction)?;
    }
    let mut data = naive_transpose(&data, n);
    for row in data.chunks_mut(n) {
        plan.execute(row, direction)?;
    }
    let data = naive_transpose(&data, n);
    ComplexGrid::from_values(n, data)
}

/// Full transpose via k x k tile staging: `out[i][j] = in[j][i]`. The result
/// uses the same backend kind as the input (file-backed grids transpose into
/// an anonymous temporary file).
pub fn transpose_blocked(grid: &ComplexGrid, tile: &TileParams) -> Result<ComplexGrid> {
    let n = grid.n();
    tile.validate_for(n)?;
    let out = grid.store().make_scratch(n)?;
    let meter = ResidencyMeter::default();
    run_pass(grid.store(), &out, n, tile.k, None, 1, &meter)?;
    Ok(ComplexGrid::from_store(n, out))
}

pub(crate) fn naive_transpose(data: &[Complex32], n: usize) -> Vec<Complex32> {
    let mut out = vec![Complex32::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = data[i * n + j];
        }
    }
    out
}

/// One streaming pass: for every k-row block, read it, optionally 1D-FFT each
/// row, then scatter it to the destination transposed, one k-sample access
/// vector at a time.
fn run_pass(
    src: &Store,
    dst: &Store,
    n: usize,
    k: usize,
    fft: Option<(&FftPlan, Direction)>,
    workers: usize,
    meter: &ResidencyMeter,
) -> Result<PassTrace> {
    let bytes_read = AtomicU64::new(0);
    let bytes_written = AtomicU64::new(0);
    let blocks_done = AtomicU64::new(0);
    let failure: Mutex<Option<Error>> = Mutex::new(None);

    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for worker in 0..workers {
            let bytes_read = &bytes_read;
            let bytes_written = &bytes_written;
            let blocks_done = &blocks_done;
            let failure = &failure;
            handles.push(scope.spawn(move || {
                let budget = worker_budget_bytes(n, k);
                meter.acquire(budget);
                let outcome = stream_blocks(
                    src, dst, n, k, fft, worker, workers, bytes_read, bytes_written, blocks_done,
                    failure,
                );
                meter.release(budget);
                outcome
            }));
        }
        for handle in handles {
            let joined = handle.join().expect("worker panicked");
            if let Err(err) = joined {
                let mut slot = failure.lock().unwrap();
                if slot.is_none() {
                    *slot = Some(err);
                }
            }
        }
    });

    if let Some(err) = failure.into_inner().unwrap() {
        return Err(err);
    }
    Ok(PassTrace {
        bytes_read: bytes_read.into_inner(),
        bytes_written: bytes_written.into_inner(),
        blocks: blocks_done.into_inner(),
    })
}

#[allow(clippy::too_many_arguments)]
fn stream_blocks(
    src: &Store,
    dst: &Store,
    n: usize,
    k: usize,
    fft: Option<(&FftPlan, Direction)>,
    worker: usize,
    workers: usize,
    bytes_read: &AtomicU64,
    bytes_written: &AtomicU64,
    blocks_done: &AtomicU64,
    failure: &Mutex<Option<Error>>,
) -> Result<()> {
    let blocks = n / k;
    let block_bytes = (k * n * SAMPLE_BYTES) as u64;
    let mut block = vec![Complex32::new(0.0, 0.0); k * n];
    let mut vector = vec![Complex32::new(0.0, 0.0); k];

    for b in (worker..blocks).step_by(workers) {
        if failure.lock().unwrap().is_some() {
            return Ok(()); // another worker already failed; stop early
        }
        src.read_at(b * k * n, &mut block)?;
        bytes_read.fetch_add(block_bytes, Ordering::Relaxed);

        if let Some((plan, direction)) = fft {
            for row in block.chunks_mut(n) {
                plan.execute(row, direction)?;
            }
        }

        // Source rows b*k..b*k+k land in destination columns b*k..b*k+k:
        // tile (b, c) of the block becomes tile (c, b) of the output.
        for c in 0..blocks {
            for i in 0..k {
                for (j, v) in vector.iter_mut().enumerate() {
                    *v = block[j * n + c * k + i];
                }
                dst.write_at((c * k + i) * n + b * k, &vector)?;
            }
        }
        bytes_written.fetch_add(block_bytes, Ordering::Relaxed);
        blocks_done.fetch_add(1, Ordering::Relaxed);
    }
    Ok(())
}

/// Staging bytes one worker keeps live: the k-row block, one access vector,
/// and the fixed file-I/O chunk window.
fn worker_budget_bytes(n: usize, k: usize) -> u64 {
    ((k * n + k) * SAMPLE_BYTES + 32 * 1024) as u64
}

#[derive(Default)]
struct ResidencyMeter {
    current: AtomicU64,
    peak: AtomicU64,
}

impl ResidencyMeter {
    fn acquire(&self, bytes: u64) {
        let now = self.current.fetch_add(bytes, Ordering::SeqCst) + bytes;
        self.peak.fetch_max(now, Ordering::SeqCst);
    }

    fn release(&self, bytes: u64) {
        self.current.fetch_sub(bytes, Ordering::SeqCst);
    }

    fn peak(&self) -> u64 {
        self.peak.load(Ordering::SeqCst)
    }
}
