//! 1D complex FFT kernels and the brute-force DFT used to verify them.
//!
//! The transform is an iterative in-place decimation-in-time radix-2 FFT
//! over single-precision samples with double-precision twiddles. The
//! forward direction is unnormalized; the inverse scales by `1/n`.

use num_complex::{Complex32, Complex64};

use crate::error::{Error, Result};

/// Transform direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn exponent_sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

/// Precomputed twiddle table for one power-of-two transform length.
///
/// Immutable after construction; a single plan can serve many threads.
pub struct FftPlan {
    n: usize,
    /// exp(-2*pi*i*j/n) for j in 0..n/2.
    twiddles: Vec<Complex64>,
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self> {
        ensure_power_of_two(n)?;
        let mut twiddles = Vec::with_capacity(n / 2);
        for j in 0..n / 2 {
            let angle = -2.0 * std::f64::consts::PI * j as f64 / n as f64;
            twiddles.push(Complex64::new(angle.cos(), angle.sin()));
        }
        Ok(Self { n, twiddles })
    }

    /// Transform length this plan was built for.
    pub fn size(&self) -> usize {
        self.n
    }

    /// Transform one length-`n` vector in place.
    pub fn execute(&self, data: &mut [Complex32], direction: Direction) -> Result<()> {
        if data.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: data.len(),
            });
        }
        check_finite(data)?;
        if self.n == 1 {
            return Ok(());
        }

        bit_reverse_permute(data);

        let n = self.n;
        let mut block = 2;
        while block <= n {
            let half = block / 2;
            let stride = n / block;
            for start in (0..n).step_by(block) {
                for j in 0..half {
                    let mut w = self.twiddles[j * stride];
                    if direction == Direction::Inverse {
                        w = w.conj();
                    }
                    let a = widen(data[start + j]);
                    let b = widen(data[start + j + half]) * w;
                    data[start + j] = narrow(a + b);
                    data[start + j + half] = narrow(a - b);
                }
            }
            block <<= 1;
        }

        if direction == Direction::Inverse {
            let scale = 1.0 / n as f32;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
        Ok(())
    }
}

/// One-shot transform; builds a throwaway plan.
pub fn fft1d(data: &mut [Complex32], direction: Direction) -> Result<()> {
    FftPlan::new(data.len())?.execute(data, direction)
}

/// Direct O(n^2) evaluation of the same transform definition, accumulated in
/// double precision. Accepts any length >= 1; this is the ground truth the
/// fast path is checked against.
pub fn dft_oracle(data: &[Complex32], direction: Direction) -> Result<Vec<Complex32>> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_finite(data)?;
    let n = data.len();
    let sign = direction.exponent_sign();
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, v) in data.iter().enumerate() {
            // Reduce k*idx mod n so the angle stays in [0, 2*pi).
            let angle = sign * step * ((k * idx) % n) as f64;
            acc += widen(*v) * Complex64::new(angle.cos(), angle.sin());
        }
        if direction == Direction::Inverse {
            acc /= n as f64;
        }
        out.push(narrow(acc));
    }
    Ok(out)
}

/// Flop count of one length-`n` 1D transform under the 5*n*log2(n) convention.
pub fn flop_count_fft(n: usize) -> Result<f64> {
    ensure_power_of_two(n)?;
    Ok(5.0 * n as f64 * n.trailing_zeros() as f64)
}

/// Flop count of an n x n 2D transform: 2n row/column transforms of length n,
/// i.e. 10*n^2*log2(n).
pub fn flop_count_fft2d(n: usize) -> Result<f64> {
    Ok(2.0 * n as f64 * flop_count_fft(n)?)
}

/// Relative L2 distance ||actual - expected|| / ||expected||, accumulated in
/// double precision. Falls back to the absolute norm for a zero reference.
pub fn rel_l2_error(actual: &[Complex32], expected: &[Complex32]) -> f64 {
    assert_eq!(actual.len(), expected.len(), "length mismatch");
    let mut diff = 0.0f64;
    let mut norm = 0.0f64;
    for (a, e) in actual.iter().zip(expected) {
        let dr = a.re as f64 - e.re as f64;
        let di = a.im as f64 - e.im as f64;
        diff += dr * dr + di * di;
        norm += (e.re as f64).powi(2) + (e.im as f64).powi(2);
    }
    if norm == 0.0 {
        diff.sqrt()
    } else {
        (diff / norm).sqrt()
    }
}

pub(crate) fn ensure_power_of_two(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        Err(Error::NotPowerOfTwo(n))
    } else {
        Ok(())
    }
}

pub(crate) fn check_finite(data: &[Complex32]) -> Result<()> {
    for (i, v) in data.iter().enumerate() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

fn widen(v: Complex32) -> Complex64 {
    Complex64::new(v.re as f64, v.im as f64)
}

fn narrow(v: Complex64) -> Complex32 {
    Complex32::new(v.re as f32, v.im as f32)
}

fn bit_reverse_permute(data: &mut [Complex32]) {
    let n = data.len();
    let shift = usize::BITS - n.trailing_zeros();
    for i in 1..n {
        let j = i.reverse_bits() >> shift;
        if j > i {
            data.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex32> {
        (0..n)
            .map(|_| Complex32::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn impulse_transforms_to_constant() {
        let mut x = vec![Complex32::new(0.0, 0.0); 4];
        x[0] = Complex32::new(1.0, 0.0);
        fft1d(&mut x, Direction::Forward).unwrap();
        for v in &x {
            assert!((v.re - 1.0).abs() < 1e-6 && v.im.abs() < 1e-6);
        }
    }

    #[test]
    fn constant_transforms_to_scaled_impulse() {
        let mut x = vec![Complex32::new(1.0, 0.0); 4];
        fft1d(&mut x, Direction::Forward).unwrap();
        assert!((x[0].re - 4.0).abs() < 1e-6);
        for v in &x[1..] {
            assert!(v.norm() < 1e-6);
        }
    }

    #[test]
    fn oracle_unit_shift_gives_twiddle_column() {
        let x = [
            Complex32::new(0.0, 0.0),
            Complex32::new(1.0, 0.0),
            Complex32::new(0.0, 0.0),
            Complex32::new(0.0, 0.0),
        ];
        let out = dft_oracle(&x, Direction::Forward).unwrap();
        let expected = [
            Complex32::new(1.0, 0.0),
            Complex32::new(0.0, -1.0),
            Complex32::new(-1.0, 0.0),
            Complex32::new(0.0, 1.0),
        ];
        for (o, e) in out.iter().zip(&expected) {
            assert!((o - e).norm() < 1e-6, "got {o}, expected {e}");
        }
    }

    #[test]
    fn oracle_length_one_is_identity() {
        let x = [Complex32::new(0.25, -0.5)];
        let out = dft_oracle(&x, Direction::Forward).unwrap();
        assert_eq!(out[0], x[0]);
    }

    #[test]
    fn fft_matches_oracle_on_len_1024() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = random_vec(&mut rng, 1024);
        let mut fast = x.clone();
        fft1d(&mut fast, Direction::Forward).unwrap();
        let slow = dft_oracle(&x, Direction::Forward).unwrap();
        assert!(rel_l2_error(&fast, &slow) < 1e-4);
    }

    #[test]
    fn fft_matches_oracle_across_lengths_and_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for log_n in 1..=10 {
            let n = 1 << log_n;
            for direction in [Direction::Forward, Direction::Inverse] {
                let x = random_vec(&mut rng, n);
                let mut fast = x.clone();
                fft1d(&mut fast, direction).unwrap();
                let slow = dft_oracle(&x, direction).unwrap();
                assert!(
                    rel_l2_error(&fast, &slow) < 1e-4,
                    "n={n} {direction:?}"
                );
            }
        }
    }

    #[test]
    fn flop_counts() {
        assert_eq!(flop_count_fft(4096).unwrap(), 245_760.0);
        assert_eq!(flop_count_fft(2).unwrap(), 10.0);
        // 2N length-N transforms cover the rows and columns of an N x N grid.
        assert_eq!(flop_count_fft2d(4096).unwrap(), 2.0 * 4096.0 * 245_760.0);
        assert_eq!(flop_count_fft2d(4096).unwrap(), 2_013_265_920.0);
    }

    #[test]
    fn rejects_bad_lengths_and_values() {
        let mut x = vec![Complex32::new(0.0, 0.0); 3];
        assert!(matches!(
            fft1d(&mut x, Direction::Forward),
            Err(Error::NotPowerOfTwo(3))
        ));
        assert!(matches!(flop_count_fft(63), Err(Error::NotPowerOfTwo(63))));

        let mut x = vec![Complex32::new(0.0, 0.0); 4];
        x[2] = Complex32::new(f32::NAN, 0.0);
        assert!(matches!(
            fft1d(&mut x, Direction::Forward),
            Err(Error::NonFinite(2))
        ));
        assert!(matches!(
            dft_oracle(&x, Direction::Forward),
            Err(Error::NonFinite(2))
        ));
        assert!(matches!(dft_oracle(&[], Direction::Forward), Err(Error::EmptyInput)));
    }

    proptest! {
        #[test]
        fn round_trip_recovers_input(
            log_n in 1usize..=10,
            seed in any::<u64>(),
        ) {
            let n = 1 << log_n;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_vec(&mut rng, n);
            let mut y = x.clone();
            fft1d(&mut y, Direction::Forward).unwrap();
            fft1d(&mut y, Direction::Inverse).unwrap();
            prop_assert!(rel_l2_error(&y, &x) < 1e-5);
        }

        #[test]
        fn parseval_energy_is_preserved(
            log_n in 1usize..=10,
            seed in any::<u64>(),
        ) {
            let n = 1 << log_n;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_vec(&mut rng, n);
            let mut y = x.clone();
            fft1d(&mut y, Direction::Forward).unwrap();
            let time_energy: f64 = x.iter().map(|v| v.norm_sqr() as f64).sum();
            let freq_energy: f64 =
                y.iter().map(|v| v.norm_sqr() as f64).sum::<f64>() / n as f64;
            let scale = time_energy.max(1e-30);
            prop_assert!(((time_energy - freq_energy) / scale).abs() < 1e-4);
        }

        #[test]
        fn transform_is_linear(
            log_n in 1usize..=8,
            seed in any::<u64>(),
            a in -2.0f32..2.0,
            b in -2.0f32..2.0,
        ) {
            let n = 1 << log_n;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_vec(&mut rng, n);
            let y = random_vec(&mut rng, n);

            let mut combined: Vec<Complex32> = x
                .iter()
                .zip(&y)
                .map(|(xv, yv)| xv * a + yv * b)
                .collect();
            fft1d(&mut combined, Direction::Forward).unwrap();

            let mut fx = x.clone();
            let mut fy = y.clone();
            fft1d(&mut fx, Direction::Forward).unwrap();
            fft1d(&mut fy, Direction::Forward).unwrap();
            let expected: Vec<Complex32> = fx
                .iter()
                .zip(&fy)
                .map(|(xv, yv)| xv * a + yv * b)
                .collect();

            prop_assert!(rel_l2_error(&combined, &expected) < 1e-4);
        }
    }
}
