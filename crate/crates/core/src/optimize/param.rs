//! Unitaries as exponentials of anti-Hermitian generators.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Anti-Hermitian `n x n` matrix from `n^2` reals: `n` diagonal phases
/// followed by a real and an imaginary part for each upper-triangle pair in
/// row-major order.
pub fn anti_hermitian(n: usize, params: &[f64]) -> DMatrix<Complex64> {
    assert_eq!(params.len(), n * n, "need n^2 parameters");
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        k[(j, j)] = Complex64::new(0.0, params[j]);
    }
    let mut idx = n;
    for j in 0..n {
        for l in (j + 1)..n {
            let (a, b) = (params[idx], params[idx + 1]);
            idx += 2;
            k[(j, l)] = Complex64::new(a, b);
            k[(l, j)] = Complex64::new(-a, b);
        }
    }
    k
}

pub fn unitary_from_params(n: usize, params: &[f64]) -> DMatrix<Complex64> {
    anti_hermitian(n, params).exp()
}
