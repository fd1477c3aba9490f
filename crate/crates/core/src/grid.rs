//! Square complex grids over in-memory or file-backed storage.
//!
//! On-disk layout: raw little-endian float32 pairs (re, im), row-major, no
//! header; a grid file holds exactly `8 * n^2` bytes. The side length travels
//! out-of-band (CLI flag or the text sidecar written next to generated grids).

use std::cell::UnsafeCell;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use num_complex::Complex32;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fft::ensure_power_of_two;

/// Bytes per complex64 sample (two float32 components).
pub const SAMPLE_BYTES: usize = 8;

/// Per-call staging window for file I/O, in samples (32 KiB). Keeps the
/// resident footprint of a file-backed pass independent of the grid size.
const IO_CHUNK_SAMPLES: usize = 4096;

/// An n x n single-precision complex grid.
pub struct ComplexGrid {
    n: usize,
    store: Store,
}

impl ComplexGrid {
    /// Zero-filled in-memory grid.
    pub fn zeros(n: usize) -> Result<Self> {
        ensure_power_of_two(n)?;
        Ok(Self {
            n,
            store: Store::Mem(MemRegion::zeros(n * n)),
        })
    }

    /// In-memory grid from row-major values; `values.len()` must equal `n^2`.
    pub fn from_values(n: usize, values: Vec<Complex32>) -> Result<Self> {
        ensure_power_of_two(n)?;
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        Ok(Self {
            n,
            store: Store::Mem(MemRegion::from_vec(values)),
        })
    }

    /// Create (or truncate) a zero-filled grid file of exactly `8 * n^2` bytes.
    pub fn create_file(n: usize, path: &Path) -> Result<Self> {
        ensure_power_of_two(n)?;
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(true)
            .open(path)?;
        file.set_len((n * n * SAMPLE_BYTES) as u64)?;
        Ok(Self {
            n,
            store: Store::File(FileRegion {
                file,
                path: Some(path.to_path_buf()),
                len_samples: n * n,
            }),
        })
    }

    /// Open an existing grid file; its length must be exactly `8 * n^2` bytes.
    pub fn open_file(path: &Path, n: usize) -> Result<Self> {
        ensure_power_of_two(n)?;
        let file = OpenOptions::new().read(true).write(true).open(path)?;
        let expected = (n * n * SAMPLE_BYTES) as u64;
        let found = file.metadata()?.len();
        if found != expected {
            return Err(Error::GridFileSize {
                path: path.to_path_buf(),
                expected,
                found,
            });
        }
        Ok(Self {
            n,
            store: Store::File(FileRegion {
                file,
                path: Some(path.to_path_buf()),
                len_samples: n * n,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_file_backed(&self) -> bool {
        matches!(self.store, Store::File(_))
    }

    /// Backing file path, if this grid lives in a named file.
    pub fn path(&self) -> Option<&Path> {
        match &self.store {
            Store::File(region) => region.path.as_deref(),
            Store::Mem(_) => None,
        }
    }

    /// Fill with uniform random samples in [-1, 1), row-major order. The
    /// stream depends only on the seed, so any backend yields the same grid.
    pub fn fill_random(&mut self, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n;
        let mut row = vec![Complex32::new(0.0, 0.0); n];
        for r in 0..n {
            for v in row.iter_mut() {
                *v = Complex32::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            self.store.write_at(r * n, &row)?;
        }
        Ok(())
    }

    /// Read `count` consecutive rows starting at `row` into `out`.
    pub fn read_rows(&self, row: usize, count: usize, out: &mut [Complex32]) -> Result<()> {
        assert!(row + count <= self.n, "row range outside grid");
        assert_eq!(out.len(), count * self.n, "buffer size mismatch");
        self.store.read_at(row * self.n, out)
    }

    /// Overwrite `data.len() / n` consecutive rows starting at `row`.
    pub fn write_rows(&mut self, row: usize, data: &[Complex32]) -> Result<()> {
        assert_eq!(data.len() % self.n, 0, "data must be whole rows");
        assert!(row * self.n + data.len() <= self.n * self.n, "row range outside grid");
        self.store.write_at(row * self.n, data)
    }

    /// Copy the whole grid into a row-major vector.
    pub fn to_vec(&self) -> Result<Vec<Complex32>> {
        let mut out = vec![Complex32::new(0.0, 0.0); self.n * self.n];
        self.store.read_at(0, &mut out)?;
        Ok(out)
    }

    pub(crate) fn store(&self) -> &Store {
        &self.store
    }

    pub(crate) fn from_store(n: usize, store: Store) -> Self {
        Self { n, store }
    }
}

impl fmt::Debug for ComplexGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexGrid")
            .field("n", &self.n)
            .field("backend", &self.store.kind())
            .finish()
    }
}

/// Path of the text sidecar describing a grid file.
pub fn descriptor_path(grid_path: &Path) -> PathBuf {
    PathBuf::from(format!("{}.desc", grid_path.display()))
}

/// Write the `key=value` sidecar next to a grid file.
pub fn write_descriptor(grid_path: &Path, n: usize) -> Result<PathBuf> {
    let path = descriptor_path(grid_path);
    std::fs::write(&path, format!("n={n}\nelement=c64le\n"))?;
    Ok(path)
}

/// Recover the side length from a grid file's sidecar.
pub fn read_descriptor(grid_path: &Path) -> Result<usize> {
    let path = descriptor_path(grid_path);
    let text = std::fs::read_to_string(&path)?;
    for (idx, line) in text.lines().enumerate() {
        if let Some(value) = line.trim().strip_prefix("n=") {
            return value.trim().parse().map_err(|_| Error::ParseLine {
                line: idx + 1,
                message: format!("invalid side length `{value}`"),
            });
        }
    }
    Err(Error::ParseLine {
        line: 1,
        message: format!("{}: no `n=` entry", path.display()),
    })
}

/// Storage behind a grid. Both variants allow positioned reads and writes
/// through a shared reference so the streaming engine can fan blocks out to
/// worker threads; callers must keep concurrent accesses disjoint.
pub(crate) enum Store {
    Mem(MemRegion),
    File(FileRegion),
}

impl Store {
    pub(crate) fn kind(&self) -> &'static str {
        match self {
            Store::Mem(_) => "mem",
            Store::File(_) => "file",
        }
    }

    pub(crate) fn read_at(&self, offset: usize, out: &mut [Complex32]) -> Result<()> {
        match self {
            Store::Mem(region) => region.read_at(offset, out),
            Store::File(region) => region.read_at(offset, out),
        }
    }

    pub(crate) fn write_at(&self, offset: usize, data: &[Complex32]) -> Result<()> {
        match self {
            Store::Mem(region) => region.write_at(offset, data),
            Store::File(region) => region.write_at(offset, data),
        }
    }

    /// A zeroed scratch region of the same kind and capacity, used as the
    /// ping-pong partner during streaming. File scratch is an anonymous
    /// temporary file, so a file-backed pass never needs a second in-memory
    /// copy of the grid.
    pub(crate) fn make_scratch(&self, n: usize) -> Result<Store> {
        match self {
            Store::Mem(_) => Ok(Store::Mem(MemRegion::zeros(n * n))),
            Store::File(_) => {
                let file = tempfile::tempfile()?;
                file.set_len((n * n * SAMPLE_BYTES) as u64)?;
                Ok(Store::File(FileRegion {
                    file,
                    path: None,
                    len_samples: n * n,
                }))
            }
        }
    }
}

pub(crate) struct MemRegion {
    data: UnsafeCell<Box<[Complex32]>>,
    len: usize,
}

// The streaming engine is the only concurrent user. Within a pass it reads
// one region and writes the other, and distinct blocks target disjoint index
// ranges, so the unsynchronized copies below never alias.
unsafe impl Sync for MemRegion {}

impl MemRegion {
    fn zeros(len: usize) -> Self {
        Self {
            data: UnsafeCell::new(vec![Complex32::new(0.0, 0.0); len].into_boxed_slice()),
            len,
        }
    }

    fn from_vec(values: Vec<Complex32>) -> Self {
        let len = values.len();
        Self {
            data: UnsafeCell::new(values.into_boxed_slice()),
            len,
        }
    }

    fn read_at(&self, offset: usize, out: &mut [Complex32]) -> Result<()> {
        assert!(offset + out.len() <= self.len, "read outside region");
        unsafe {
            let src = (*self.data.get()).as_ptr().add(offset);
            std::ptr::copy_nonoverlapping(src, out.as_mut_ptr(), out.len());
        }
        Ok(())
    }

    fn write_at(&self, offset: usize, data: &[Complex32]) -> Result<()> {
        assert!(offset + data.len() <= self.len, "write outside region");
        unsafe {
            let dst = (*self.data.get()).as_mut_ptr().add(offset);
            std::ptr::copy_nonoverlapping(data.as_ptr(), dst, data.len());
        }
        Ok(())
    }
}

pub(crate) struct FileRegion {
    file: File,
    path: Option<PathBuf>,
    len_samples: usize,
}

impl FileRegion {
    fn read_at(&self, offset: usize, out: &mut [Complex32]) -> Result<()> {
        assert!(offset + out.len() <= self.len_samples, "read outside region");
        let mut staged = vec![0u8; IO_CHUNK_SAMPLES.min(out.len().max(1)) * SAMPLE_BYTES];
        let mut done = 0;
        while done < out.len() {
            let take = IO_CHUNK_SAMPLES.min(out.len() - done);
            let bytes = &mut staged[..take * SAMPLE_BYTES];
            self.file
                .read_exact_at(bytes, ((offset + done) * SAMPLE_BYTES) as u64)?;
            for (i, chunk) in bytes.chunks_exact(SAMPLE_BYTES).enumerate() {
                let re = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
                let im = f32::from_le_bytes([chunk[4], chunk[5], chunk[6], chunk[7]]);
                out[done + i] = Complex32::new(re, im);
            }
            done += take;
        }
        Ok(())
    }

    fn write_at(&self, offset: usize, data: &[Complex32]) -> Result<()> {
        assert!(offset + data.len() <= self.len_samples, "write outside region");
        let mut staged = vec![0u8; IO_CHUNK_SAMPLES.min(data.len().max(1)) * SAMPLE_BYTES];
        let mut done = 0;
        while done < data.len() {
            let take = IO_CHUNK_SAMPLES.min(data.len() - done);
            let bytes = &mut staged[..take * SAMPLE_BYTES];
            for (i, v) in data[done..done + take].iter().enumerate() {
                bytes[i * SAMPLE_BYTES..i * SAMPLE_BYTES + 4].copy_from_slice(&v.re.to_le_bytes());
                bytes[i * SAMPLE_BYTES + 4..(i + 1) * SAMPLE_BYTES]
                    .copy_from_slice(&v.im.to_le_bytes());
            }
            self.file
                .write_all_at(bytes, ((offset + done) * SAMPLE_BYTES) as u64)?;
            done += take;
        }
        Ok(())
    }
}
