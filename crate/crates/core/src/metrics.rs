//! Fidelity and success of a post-selected gate map.
//!
//! With `d = 2^q` and `A` the post-selected map,
//! `F = |Tr(A† T)|^2 / (d Tr(A† A))` and
//! `S = Tr(A† A) / (d ||U||^(2M))`, where `||U||` is the spectral norm of the
//! device matrix and `M` the total photon number.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::ModeMatrix;

/// Post-selected linear map on the `2^q`-dimensional computational space.
///
/// `entries` is the logical block (dual-rail inputs to dual-rail outputs).
/// Heralded outputs that leave the dual-rail subspace, such as two photons
/// on one qubit's rails, are kept as extra `leakage` rows: they count toward
/// `Tr(A† A)` but can never overlap a target.
#[derive(Clone, Debug, PartialEq)]
pub struct GateMap {
    entries: DMatrix<Complex64>,
    leakage: DMatrix<Complex64>,
    n_qubits: usize,
}

fn qubits_for_side(side: usize) -> Option<usize> {
    (side >= 2 && side.is_power_of_two()).then(|| side.trailing_zeros() as usize)
}

impl GateMap {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let n_qubits = (entries.nrows() == entries.ncols())
            .then(|| qubits_for_side(entries.nrows()))
            .flatten()
            .ok_or_else(|| {
                Error::Dimension(format!(
                    "gate map must be square with side 2^q, got {}x{}",
                    entries.nrows(),
                    entries.ncols()
                ))
            })?;
        let leakage = DMatrix::zeros(0, entries.ncols());
        Ok(GateMap {
            entries,
            leakage,
            n_qubits,
        })
    }

    pub fn with_leakage(entries: DMatrix<Complex64>, leakage: DMatrix<Complex64>) -> Result<Self> {
        let mut map = GateMap::new(entries)?;
        if leakage.ncols() != map.dimension() {
            return Err(Error::Dimension(format!(
                "leakage block has {} columns, expected {}",
                leakage.ncols(),
                map.dimension()
            )));
        }
        map.leakage = leakage;
        Ok(map)
    }

    pub fn leakage(&self) -> &DMatrix<Complex64> {
        &self.leakage
    }

    /// Squared norm of all leaked amplitude, summed over inputs.
    pub fn leakage_norm_sqr(&self) -> f64 {
        self.leakage.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Logical block with the leakage rows appended below it.
    pub fn stacked(&self) -> DMatrix<Complex64> {
        let d = self.dimension();
        let extra = self.leakage.nrows();
        DMatrix::from_fn(d + extra, d, |i, j| {
            if i < d {
                self.entries[(i, j)]
            } else {
                self.leakage[(i - d, j)]
            }
        })
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    /// `Tr(A† A)`, leakage included.
    pub fn hs_norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>() + self.leakage_norm_sqr()
    }

    pub fn scaled(&self, c: Complex64) -> GateMap {
        GateMap {
            entries: self.entries.map(|z| z * c),
            leakage: self.leakage.map(|z| z * c),
            n_qubits: self.n_qubits,
        }
    }
}

/// A unitary target on `q` qubits, normalized so `Tr(T† T) = 2^q`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetGate {
    name: String,
    entries: DMatrix<Complex64>,
}

impl TargetGate {
    pub fn new(name: impl Into<String>, entries: DMatrix<Complex64>) -> Result<Self> {
        let name = name.into();
        GateMap::new(entries.clone())?;
        let err = ModeMatrix::new(entries.clone())?.unitarity_error();
        if err > crate::gates::UNITARY_TOL {
            return Err(Error::Validation(format!(
                "target `{name}` is not unitary (error {err:.3e})"
            )));
        }
        Ok(TargetGate { name, entries })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn n_qubits(&self) -> usize {
        self.entries.nrows().trailing_zeros() as usize
    }

    pub fn as_gate_map(&self) -> GateMap {
        GateMap::new(self.entries.clone()).expect("validated on construction")
    }
}

/// Smallest Hilbert-Schmidt norm treated as a non-zero gate map.
const ZERO_MAP: f64 = 1e-300;

pub fn fidelity(a: &GateMap, target: &TargetGate) -> Result<f64> {
    if a.dimension() != target.entries.nrows() {
        return Err(Error::Dimension(format!(
            "gate map has dimension {} but target has {}",
            a.dimension(),
            target.entries.nrows()
        )));
    }
    let hs = a.hs_norm_sqr();
    if !(hs > ZERO_MAP) {
        return Err(Error::ZeroGateMap);
    }
    let overlap: Complex64 = a
        .entries
        .iter()
        .zip(target.entries.iter())
        .map(|(x, t)| x.conj() * t)
        .sum();
    let f = overlap.norm_sqr() / (a.dimension() as f64 * hs);
    Ok(f.clamp(0.0, 1.0))
}

/// `1 - F`.
pub fn infidelity(a: &GateMap, target: &TargetGate) -> Result<f64> {
    fidelity(a, target).map(|f| 1.0 - f)
}

/// Input-averaged heralding probability for a map built from `u` with
/// `n_photons` photons in total.
pub fn success(a: &GateMap, u: &ModeMatrix, n_photons: u32) -> f64 {
    success_with_norm(a, u.operator_norm(), n_photons)
}

pub(crate) fn success_with_norm(a: &GateMap, operator_norm: f64, n_photons: u32) -> f64 {
    a.hs_norm_sqr() / (a.dimension() as f64 * operator_norm.powi(2 * n_photons as i32))
}

/// Squared extreme singular values of `A` around its normalized
/// Hilbert-Schmidt norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormBounds {
    pub min_sq: f64,
    pub hs: f64,
    pub max_sq: f64,
}

impl NormBounds {
    pub fn ratio(&self) -> f64 {
        if self.max_sq > 0.0 {
            (self.min_sq / self.max_sq).sqrt()
        } else {
            0.0
        }
    }
}

pub fn norm_bounds(a: &GateMap) -> NormBounds {
    let sv = a.stacked().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    NormBounds {
        min_sq: min * min,
        hs: a.hs_norm_sqr() / a.dimension() as f64,
        max_sq: max * max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::target;

    fn diag(v: [f64; 4]) -> GateMap {
        GateMap::new(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            4,
            v.iter().map(|&x| Complex64::new(x, 0.0)),
        )))
        .unwrap()
    }

    #[test]
    fn target_has_unit_fidelity_with_itself() {
        let cz = target("cz", None).unwrap();
        assert!((fidelity(&cz.as_gate_map(), &cz).unwrap() - 1.0).abs() < 1e-15);
        let scaled = cz.as_gate_map().scaled(Complex64::from_polar(0.3, 1.2));
        assert!((fidelity(&scaled, &cz).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_against_cz_is_a_quarter() {
        let cz = target("cz", None).unwrap();
        let f = fidelity(&diag([1.0; 4]), &cz).unwrap();
        assert!((f - 0.25).abs() < 1e-15);
        assert!((infidelity(&diag([1.0; 4]), &cz).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_map_has_no_fidelity() {
        let cz = target("cz", None).unwrap();
        assert!(matches!(
            fidelity(&diag([0.0; 4]), &cz),
            Err(Error::ZeroGateMap)
        ));
    }

    #[test]
    fn unitary_target_with_unitary_device_succeeds_always() {
        let cz = target("cz", None).unwrap();
        let s = success(&cz.as_gate_map(), &ModeMatrix::identity(4), 2);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn norm_bounds_of_simple_maps() {
        let b = norm_bounds(&diag([1.0; 4]));
        assert!(
            (b.min_sq - 1.0).abs() < 1e-12
                && (b.hs - 1.0).abs() < 1e-12
                && (b.max_sq - 1.0).abs() < 1e-12
        );
        let b = norm_bounds(&diag([1.0, 1.0, 1.0, 0.0]));
        assert!(b.min_sq.abs() < 1e-12);
        assert!((b.hs - 0.75).abs() < 1e-15);
        assert!((b.max_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leakage_lowers_fidelity_but_counts_as_success() {
        let cz = target("cz", None).unwrap();
        let logical = cz.entries().map(|z| z * 0.5);
        let mut leak = DMatrix::zeros(1, 4);
        leak[(0, 3)] = Complex64::new(0.5, 0.0);
        let a = GateMap::with_leakage(logical, leak).unwrap();
        // overlap 4 * 0.5 = 2; Tr(A†A) = 4 * 0.25 + 0.25
        assert!((fidelity(&a, &cz).unwrap() - 4.0 / (4.0 * 1.25)).abs() < 1e-15);
        assert!((success(&a, &ModeMatrix::identity(6), 4) - 1.25 / 4.0).abs() < 1e-15);
        let b = norm_bounds(&a);
        assert!(b.min_sq <= b.hs && b.hs <= b.max_sq);
        assert!((b.max_sq - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gate_map_side_must_be_power_of_two() {
        assert!(GateMap::new(DMatrix::zeros(3, 3)).is_err());
        assert!(GateMap::new(DMatrix::zeros(4, 2)).is_err());
    }
}
