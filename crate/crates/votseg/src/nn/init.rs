use ndarray::{Array1, Array2};
use rand::Rng;

/// Matrix with entries drawn uniformly from `[-bound, bound)`, row-major fill.
pub fn uniform<R: Rng>(shape: (usize, usize), bound: f64, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.random_range(-bound..bound))
}

pub fn uniform_vec<R: Rng>(n: usize, bound: f64, rng: &mut R) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || rng.random_range(-bound..bound))
}
