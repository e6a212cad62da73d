//! Photon-number sectors, multi-photon propagation through a linear-optical
//! device and post-selected gate-map extraction.
//!
//! A device is described by its mode matrix `U`: each input creation operator
//! is mapped as `a_i† -> sum_j U[i,j] a_j†`. Transition amplitudes between
//! Fock states are permanents of row/column-repeated submatrices of `U`.
//!
//! Mode indices are zero-based throughout the library.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::DualRailEncoding;
use crate::metrics::GateMap;

pub mod expansion;

/// Largest sector dimension any enumeration is allowed to produce.
pub const SECTOR_CAP: usize = 1_000_000;

/// Absolute tolerance used when deciding that a complex number is zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Photon counts per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupationVector(Vec<u32>);

impl OccupationVector {
    pub fn new(occupations: Vec<u32>) -> Self {
        OccupationVector(occupations)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        OccupationVector(vec![0; n_modes])
    }

    pub fn n_modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `prod_i n_i!`
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&n| factorial(n)).product()
    }

    /// Mode indices listed with multiplicity, e.g. `(2,0,1) -> [0,0,2]`.
    pub fn mode_list(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(mode, &n)| std::iter::repeat_n(mode, n as usize))
            .collect()
    }
}

impl From<Vec<u32>> for OccupationVector {
    fn from(v: Vec<u32>) -> Self {
        OccupationVector(v)
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// An `N x N` complex matrix describing a linear-optical device.
///
/// Unitarity is not enforced; see [`ModeMatrix::is_unitary`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModeMatrix {
    entries: DMatrix<Complex64>,
}

impl ModeMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() != entries.ncols() {
            return Err(Error::Dimension(format!(
                "mode matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(ModeMatrix { entries })
    }

    pub fn identity(n_modes: usize) -> Self {
        assert!(n_modes >= 1, "mode matrix needs at least one mode");
        ModeMatrix {
            entries: DMatrix::identity(n_modes, n_modes),
        }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(
                "mode matrix rows must all have length N".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn n_modes(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    /// Largest deviation of `U† U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.n_modes();
        let prod = self.entries.adjoint() * &self.entries;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - Complex64::new(want, 0.0)).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        self.entries
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> ModeMatrix {
        ModeMatrix {
            entries: self.entries.map(|z| z * c),
        }
    }

    pub fn compose(&self, other: &ModeMatrix) -> Result<ModeMatrix> {
        if self.n_modes() != other.n_modes() {
            return Err(Error::Dimension(
                "cannot compose devices with different mode counts".into(),
            ));
        }
        Ok(ModeMatrix {
            entries: &self.entries * &other.entries,
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ModeMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Number of occupation vectors with `n_photons` photons in `n_modes` modes,
/// `C(N + M - 1, M)`, or `None` on overflow.
pub fn sector_dimension(n_modes: usize, n_photons: usize) -> Option<usize> {
    if n_modes == 0 {
        return if n_photons == 0 { Some(1) } else { Some(0) };
    }
    // C(n + m - 1, m) built incrementally; each partial product is itself a binomial.
    let mut acc: u128 = 1;
    for k in 1..=n_photons as u128 {
        acc = acc.checked_mul(n_modes as u128 - 1 + k)? / k;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// All occupation vectors of the `(n_modes, n_photons)` sector in ascending
/// lexicographic order.
pub fn enumerate_sector(n_modes: usize, n_photons: usize) -> Result<Vec<OccupationVector>> {
    if n_modes == 0 {
        return Err(Error::Validation("a sector needs at least one mode".into()));
    }
    let dim = sector_dimension(n_modes, n_photons)
        .filter(|&d| d <= SECTOR_CAP)
        .ok_or_else(|| {
            Error::Capacity(format!(
                "sector with {n_modes} modes and {n_photons} photons exceeds {SECTOR_CAP} states"
            ))
        })?;
    let mut out = Vec::with_capacity(dim);
    let mut current = vec![0u32; n_modes];
    fill_sector(&mut current, 0, n_photons as u32, &mut out);
    debug_assert_eq!(out.len(), dim);
    Ok(out)
}

fn fill_sector(current: &mut [u32], mode: usize, remaining: u32, out: &mut Vec<OccupationVector>) {
    if mode + 1 == current.len() {
        current[mode] = remaining;
        out.push(OccupationVector(current.to_vec()));
        return;
    }
    for n in 0..=remaining {
        current[mode] = n;
        fill_sector(current, mode + 1, remaining - n, out);
    }
    current[mode] = 0;
}

/// Matrix permanent by Ryser's inclusion-exclusion formula, visiting column
/// subsets in Gray-code order so each step updates the row sums by one column.
pub fn permanent(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "permanent requires a square matrix");
    match n {
        0 => return Complex64::new(1.0, 0.0),
        1 => return m[(0, 0)],
        2 => return m[(0, 0)] * m[(1, 1)] + m[(0, 1)] * m[(1, 0)],
        _ => {}
    }
    assert!(n < 64, "permanent of a {n}x{n} matrix is out of reach");

    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let next = k ^ (k >> 1);
        let flipped = (gray ^ next).trailing_zeros() as usize;
        let adding = next & (1 << flipped) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += m[(i, flipped)];
            } else {
                *s -= m[(i, flipped)];
            }
        }
        gray = next;
        let prod: Complex64 = row_sums.iter().product();
        // (-1)^(n - |S|)
        if (n as u32 - next.count_ones()).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

fn check_length(u: &ModeMatrix, occ: &OccupationVector, what: &str) -> Result<()> {
    if occ.n_modes() != u.n_modes() {
        return Err(Error::Dimension(format!(
            "{what} occupation vector has {} modes but the device has {}",
            occ.n_modes(),
            u.n_modes()
        )));
    }
    Ok(())
}

/// `<output| Omega(U) |input>` via the permanent of the row/column-repeated
/// submatrix. Different photon numbers give exactly zero.
pub fn transition_amplitude(
    u: &ModeMatrix,
    input: &OccupationVector,
    output: &OccupationVector,
) -> Result<Complex64> {
    check_length(u, input, "input")?;
    check_length(u, output, "output")?;
    Ok(amplitude_unchecked(u.entries(), input, output))
}

fn amplitude_unchecked(
    u: &DMatrix<Complex64>,
    input: &OccupationVector,
    output: &OccupationVector,
) -> Complex64 {
    if input.total() != output.total() {
        return Complex64::new(0.0, 0.0);
    }
    let rows = input.mode_list();
    let cols = output.mode_list();
    let sub = DMatrix::from_fn(rows.len(), cols.len(), |a, b| u[(rows[a], cols[b])]);
    let norm = (input.factorial_product() * output.factorial_product()).sqrt();
    permanent(&sub) / norm
}

/// Amplitudes of a state over one full photon-number sector, stored in
/// lexicographic basis order.
#[derive(Clone, Debug)]
pub struct StateVector {
    n_modes: usize,
    n_photons: usize,
    basis: Vec<OccupationVector>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OccupationVector, Complex64)> {
        self.basis.iter().zip(self.amplitudes.iter().copied())
    }

    /// Amplitude on `occ`; zero for any vector outside the sector.
    pub fn amplitude(&self, occ: &OccupationVector) -> Complex64 {
        self.basis
            .binary_search(occ)
            .map(|i| self.amplitudes[i])
            .unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Propagates a Fock state through the device, returning its expansion over
/// the full output sector.
pub fn apply_mode_transform(u: &ModeMatrix, input: &OccupationVector) -> Result<StateVector> {
    check_length(u, input, "input")?;
    let n_photons = input.total() as usize;
    let basis = enumerate_sector(u.n_modes(), n_photons)?;
    let amplitudes = basis
        .iter()
        .map(|out| amplitude_unchecked(u.entries(), input, out))
        .collect();
    Ok(StateVector {
        n_modes: u.n_modes(),
        n_photons,
        basis,
        amplitudes,
    })
}

/// Ancilla preparation and the heralding detection pattern, both on the
/// ancilla modes in encoding order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaSpec {
    pub input: OccupationVector,
    pub pattern: OccupationVector,
}

impl AncillaSpec {
    pub fn new(input: Vec<u32>, pattern: Vec<u32>) -> Result<Self> {
        if input.len() != pattern.len() {
            return Err(Error::Validation(format!(
                "ancilla input has {} modes but the measured pattern has {}",
                input.len(),
                pattern.len()
            )));
        }
        Ok(AncillaSpec {
            input: input.into(),
            pattern: pattern.into(),
        })
    }

    /// No ancilla modes at all.
    pub fn none() -> Self {
        AncillaSpec {
            input: OccupationVector::new(vec![]),
            pattern: OccupationVector::new(vec![]),
        }
    }

    /// Single photons in two ancilla modes, heralded by one photon in each.
    pub fn knill_cz() -> Self {
        AncillaSpec::new(vec![1, 1], vec![1, 1]).expect("static ancilla spec")
    }

    pub fn n_modes(&self) -> usize {
        self.input.n_modes()
    }

    pub fn n_photons(&self) -> u32 {
        self.input.total()
    }
}

/// Full-device occupation for a computational basis index plus an ancilla
/// occupation.
pub fn full_occupation(
    encoding: &DualRailEncoding,
    basis_index: usize,
    ancilla: &OccupationVector,
) -> OccupationVector {
    let mut occ = vec![0u32; encoding.n_modes()];
    for mode in encoding.occupied_modes(basis_index) {
        occ[mode] = 1;
    }
    for (&mode, &n) in encoding.ancilla_modes().iter().zip(ancilla.as_slice()) {
        occ[mode] = n;
    }
    OccupationVector(occ)
}

/// Post-selected map on the computational space:
/// `A[k,l] = <comp_k, pattern| Omega(U) |comp_l, ancilla_in>`.
///
/// Heralded outputs outside the dual-rail subspace (every other way of
/// placing the remaining photons on the computational modes) are returned
/// as the leakage block of the map.
pub fn extract_gate_map(
    u: &ModeMatrix,
    encoding: &DualRailEncoding,
    ancilla: &AncillaSpec,
) -> Result<GateMap> {
    if encoding.n_modes() != u.n_modes() {
        return Err(Error::Dimension(format!(
            "encoding covers {} modes but the device has {}",
            encoding.n_modes(),
            u.n_modes()
        )));
    }
    if ancilla.n_modes() != encoding.ancilla_modes().len() {
        return Err(Error::Dimension(format!(
            "ancilla spec has {} modes but the encoding reserves {}",
            ancilla.n_modes(),
            encoding.ancilla_modes().len()
        )));
    }
    let dim = encoding.dimension();
    let inputs: Vec<_> = (0..dim)
        .map(|l| full_occupation(encoding, l, &ancilla.input))
        .collect();
    let outputs: Vec<_> = (0..dim)
        .map(|k| full_occupation(encoding, k, &ancilla.pattern))
        .collect();
    let entries = DMatrix::from_fn(dim, dim, |k, l| {
        amplitude_unchecked(u.entries(), &inputs[l], &outputs[k])
    });

    let leaked = leakage_outputs(encoding, ancilla)?;
    let leakage = DMatrix::from_fn(leaked.len(), dim, |k, l| {
        amplitude_unchecked(u.entries(), &inputs[l], &leaked[k])
    });
    GateMap::with_leakage(entries, leakage)
}

/// Full-device outputs that carry the heralding pattern but are not
/// dual-rail basis states, in lexicographic order of the computational part.
fn leakage_outputs(
    encoding: &DualRailEncoding,
    ancilla: &AncillaSpec,
) -> Result<Vec<OccupationVector>> {
    let total = encoding.n_qubits() as u32 + ancilla.n_photons();
    let Some(remaining) = total.checked_sub(ancilla.pattern.total()) else {
        return Ok(Vec::new());
    };
    let comp = encoding.computational_modes();
    let mut out = Vec::new();
    for part in enumerate_sector(comp.len(), remaining as usize)? {
        let dual_rail = part
            .as_slice()
            .chunks(2)
            .all(|rails| rails[0] + rails[1] == 1);
        if dual_rail {
            continue;
        }
        let mut occ = vec![0u32; encoding.n_modes()];
        for (&mode, &n) in comp.iter().zip(part.as_slice()) {
            occ[mode] = n;
        }
        for (&mode, &n) in encoding
            .ancilla_modes()
            .iter()
            .zip(ancilla.pattern.as_slice())
        {
            occ[mode] = n;
        }
        out.push(OccupationVector(occ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_sector_has_one_state() {
        let s = enumerate_sector(2, 0).unwrap();
        assert_eq!(s, vec![OccupationVector::new(vec![0, 0])]);
    }

    #[test]
    fn two_photons_in_two_modes_lexicographic() {
        let s = enumerate_sector(2, 2).unwrap();
        let want: Vec<OccupationVector> =
            vec![vec![0, 2].into(), vec![1, 1].into(), vec![2, 0].into()];
        assert_eq!(s, want);
    }

    #[test]
    fn sector_sizes_match_binomials() {
        assert_eq!(enumerate_sector(6, 4).unwrap().len(), 126);
        assert_eq!(sector_dimension(6, 4), Some(126));
        assert_eq!(sector_dimension(1, 7), Some(1));
        assert_eq!(sector_dimension(8, 5), Some(792));
    }

    #[test]
    fn oversized_sector_is_refused() {
        assert!(matches!(enumerate_sector(40, 10), Err(Error::Capacity(_))));
    }

    #[test]
    fn identity_device_leaves_state_alone() {
        let out = apply_mode_transform(&ModeMatrix::identity(2), &vec![1, 0].into()).unwrap();
        assert_eq!(out.amplitude(&vec![1, 0].into()), c(1.0, 0.0));
        assert_eq!(out.amplitude(&vec![0, 1].into()), c(0.0, 0.0));
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let h = FRAC_1_SQRT_2;
        let bs = ModeMatrix::from_rows(&[vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]])
            .unwrap();
        let out = apply_mode_transform(&bs, &vec![1, 1].into()).unwrap();
        assert!(out.amplitude(&vec![1, 1].into()).norm() < 1e-15);
        assert!((out.amplitude(&vec![2, 0].into()) - c(h, 0.0)).norm() < 1e-15);
        assert!((out.amplitude(&vec![0, 2].into()) - c(-h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn permanent_small_cases() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0])
            .map(|x| c(x, 0.0));
        // 1(5*9+6*8) + 2(4*9+6*7) + 3(4*8+5*7)
        assert_eq!(permanent(&m), c(450.0, 0.0));
        let ones = DMatrix::from_element(4, 4, c(1.0, 0.0));
        assert_eq!(permanent(&ones), c(24.0, 0.0));
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let err = apply_mode_transform(&ModeMatrix::identity(3), &vec![1, 0].into()).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn different_photon_numbers_do_not_connect() {
        let u = ModeMatrix::identity(2);
        let a = transition_amplitude(&u, &vec![1, 0].into(), &vec![1, 1].into()).unwrap();
        assert_eq!(a, c(0.0, 0.0));
    }

    #[test]
    fn non_square_mode_matrix_is_rejected() {
        assert!(ModeMatrix::new(DMatrix::zeros(2, 3)).is_err());
        assert!(ModeMatrix::new(DMatrix::zeros(0, 0)).is_err());
    }
}
