#![allow(dead_code)]

use loqc::optimize::param::unitary_from_params;
use loqc::ModeMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ModeMatrix {
    let params: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    ModeMatrix::new(unitary_from_params(n, &params)).unwrap()
}

pub fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_occupation(
    rng: &mut ChaCha8Rng,
    n_modes: usize,
    n_photons: u32,
) -> loqc::OccupationVector {
    let mut occ = vec![0u32; n_modes];
    for _ in 0..n_photons {
        occ[rng.gen_range(0..n_modes)] += 1;
    }
    loqc::OccupationVector::new(occ)
}
