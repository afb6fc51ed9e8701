//! Weight initializers.

use rand::Rng;

use crate::numeric::matrix::Matrix;
use crate::numeric::rng::SeededRng;

/// Glorot/Xavier uniform draw on `[-l, l]` with `l = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut SeededRng) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-limit..=limit)).collect();
    Matrix::new(rows, cols, data).expect("finite draws")
}

/// `|glorot_uniform|`, for parameters constrained to be non-negative.
pub fn glorot_uniform_abs(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut SeededRng) -> Matrix {
    glorot_uniform(rows, cols, fan_in, fan_out, rng).map(f64::abs)
}
