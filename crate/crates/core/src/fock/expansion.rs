//! Reference amplitudes obtained by literally multiplying out the creation
//! operator polynomial `prod_i (sum_j U[i,j] a_j†)^{n_i}` monomial by
//! monomial. Exponential in the photon number and only meant for
//! cross-checking the permanent kernel.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{factorial, ModeMatrix, OccupationVector};
use crate::error::{Error, Result};

/// Default photon-number ceiling for the expansion.
pub const ORACLE_PHOTON_CAP: u32 = 5;

type Polynomial = BTreeMap<Vec<u32>, Complex64>;

/// Amplitude `<output| Omega(U) |input>` by symbolic expansion.
pub fn oracle_amplitude(
    u: &ModeMatrix,
    input: &OccupationVector,
    output: &OccupationVector,
) -> Result<Complex64> {
    oracle_amplitude_capped(u, input, output, ORACLE_PHOTON_CAP)
}

pub fn oracle_amplitude_capped(
    u: &ModeMatrix,
    input: &OccupationVector,
    output: &OccupationVector,
    cap: u32,
) -> Result<Complex64> {
    let n = u.n_modes();
    if input.n_modes() != n || output.n_modes() != n {
        return Err(Error::Dimension(
            "occupation vectors must match the device".into(),
        ));
    }
    let m = input.total();
    if m > cap || output.total() > cap {
        return Err(Error::Capacity(format!(
            "expansion oracle is limited to {cap} photons"
        )));
    }
    if m != output.total() {
        return Ok(Complex64::new(0.0, 0.0));
    }

    let mut poly: Polynomial = BTreeMap::new();
    poly.insert(vec![0; n], Complex64::new(1.0, 0.0));
    for (i, &count) in input.as_slice().iter().enumerate() {
        for _ in 0..count {
            let mut next: Polynomial = BTreeMap::new();
            for (monomial, coeff) in &poly {
                for j in 0..n {
                    let uij = u.get(i, j);
                    if uij == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut key = monomial.clone();
                    key[j] += 1;
                    *next.entry(key).or_default() += coeff * uij;
                }
            }
            poly = next;
        }
    }

    // (a†)^m |0> = sqrt(m!) |m>
    let coeff = poly.get(output.as_slice()).copied().unwrap_or_default();
    let out_norm: f64 = output.as_slice().iter().map(|&k| factorial(k)).product();
    Ok(coeff * (out_norm / input.factorial_product()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn identity_keeps_occupation() {
        let u = ModeMatrix::identity(3);
        let a = oracle_amplitude(&u, &vec![1, 0, 1].into(), &vec![1, 0, 1].into()).unwrap();
        assert!((a - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn phases_multiply() {
        let (alpha, beta) = (0.3, -1.1);
        let u = ModeMatrix::new(nalgebra::DMatrix::from_diagonal(
            &nalgebra::DVector::from_vec(vec![
                Complex64::from_polar(1.0, alpha),
                Complex64::from_polar(1.0, beta),
            ]),
        ))
        .unwrap();
        let a = oracle_amplitude(&u, &vec![1, 1].into(), &vec![1, 1].into()).unwrap();
        assert!((a - Complex64::from_polar(1.0, alpha + beta)).norm() < 1e-15);
    }

    #[test]
    fn bunched_pair_splits_on_beamsplitter() {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let bs = ModeMatrix::from_rows(&[vec![h, h], vec![h, -h]]).unwrap();
        let a = oracle_amplitude(&bs, &vec![2, 0].into(), &vec![1, 1].into()).unwrap();
        assert!((a - h).norm() < 1e-15);
        let p =
            crate::fock::transition_amplitude(&bs, &vec![2, 0].into(), &vec![1, 1].into()).unwrap();
        assert!((a - p).norm() < 1e-15);
    }

    #[test]
    fn photon_mismatch_is_zero_and_cap_is_enforced() {
        let u = ModeMatrix::identity(2);
        let z = oracle_amplitude(&u, &vec![1, 0].into(), &vec![1, 1].into()).unwrap();
        assert_eq!(z, Complex64::new(0.0, 0.0));
        assert!(matches!(
            oracle_amplitude(&u, &vec![3, 3].into(), &vec![3, 3].into()),
            Err(Error::Capacity(_))
        ));
    }
}
