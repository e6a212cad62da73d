//! Target gates, the dual-rail encoding and the Knill-form ansatz.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ModeMatrix;
use crate::io::ComplexMatrixJson;
use crate::metrics::TargetGate;

/// Unitarity tolerance for user-supplied matrices.
pub const UNITARY_TOL: f64 = 1e-10;

/// Assignment of qubits to mode pairs plus the ancilla modes.
///
/// Qubit `r` lives on `computational_modes[2r]` (logical 0) and
/// `computational_modes[2r + 1]` (logical 1). Basis indices are big-endian
/// over qubits, so index 1 of a two-qubit register is `|01>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualRailEncoding {
    n_qubits: usize,
    computational_modes: Vec<usize>,
    ancilla_modes: Vec<usize>,
}

impl DualRailEncoding {
    pub fn new(
        n_qubits: usize,
        computational_modes: Vec<usize>,
        ancilla_modes: Vec<usize>,
    ) -> Result<Self> {
        if n_qubits == 0 || computational_modes.len() != 2 * n_qubits {
            return Err(Error::Validation(format!(
                "{n_qubits} qubit(s) need {} computational modes, got {}",
                2 * n_qubits,
                computational_modes.len()
            )));
        }
        let n = computational_modes.len() + ancilla_modes.len();
        let mut seen = vec![false; n];
        for &m in computational_modes.iter().chain(&ancilla_modes) {
            if m >= n || seen[m] {
                return Err(Error::Validation(format!(
                    "computational and ancilla modes must partition 0..{n} (mode {m} is out of range or repeated)"
                )));
            }
            seen[m] = true;
        }
        Ok(DualRailEncoding {
            n_qubits,
            computational_modes,
            ancilla_modes,
        })
    }

    /// Qubits on modes `0..2q`, ancillas on the following `n_ancilla` modes.
    pub fn standard(n_qubits: usize, n_ancilla: usize) -> Self {
        let nc = 2 * n_qubits;
        DualRailEncoding::new(n_qubits, (0..nc).collect(), (nc..nc + n_ancilla).collect())
            .expect("standard layout is always a partition")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_modes(&self) -> usize {
        self.computational_modes.len() + self.ancilla_modes.len()
    }

    /// `2^q`
    pub fn dimension(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn computational_modes(&self) -> &[usize] {
        &self.computational_modes
    }

    pub fn ancilla_modes(&self) -> &[usize] {
        &self.ancilla_modes
    }

    /// The photon-carrying mode of every qubit for a basis index.
    pub fn occupied_modes(&self, basis_index: usize) -> Vec<usize> {
        (0..self.n_qubits)
            .map(|r| {
                let bit = (basis_index >> (self.n_qubits - 1 - r)) & 1;
                self.computational_modes[2 * r + bit]
            })
            .collect()
    }
}

/// Built-in target by name. `parameter` is the phase of `CS`.
pub fn target(name: &str, parameter: Option<f64>) -> Result<TargetGate> {
    let one = Complex64::new(1.0, 0.0);
    let diag = |last: Complex64| {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![one, one, one, last]))
    };
    match name.to_ascii_lowercase().as_str() {
        "cz" => TargetGate::new("CZ", diag(-one)),
        "cs" => {
            let theta =
                parameter.ok_or_else(|| Error::Validation("CS needs a phase parameter".into()))?;
            TargetGate::new(
                format!("CS({theta})"),
                diag(Complex64::from_polar(1.0, theta)),
            )
        }
        "cnot" => {
            let mut m = DMatrix::zeros(4, 4);
            m[(0, 0)] = one;
            m[(1, 1)] = one;
            m[(2, 3)] = one;
            m[(3, 2)] = one;
            TargetGate::new("CNOT", m)
        }
        "identity" | "id" => TargetGate::new("I", DMatrix::identity(4, 4)),
        _ => Err(Error::UnknownTarget(name.to_string())),
    }
}

/// Parses the command-line target syntax: `cz`, `cnot`, `identity`,
/// `cs:<radians>` or `cs90` (phase in degrees after `cs`).
pub fn parse_target(spec: &str) -> Result<TargetGate> {
    let lower = spec.trim().to_ascii_lowercase();
    if let Some(rest) = lower.strip_prefix("cs:") {
        let theta: f64 = rest
            .parse()
            .map_err(|_| Error::Validation(format!("bad CS phase `{rest}`")))?;
        return target("cs", Some(theta));
    }
    if let Some(deg) = lower.strip_prefix("cs").filter(|r| !r.is_empty()) {
        let deg = deg.trim_start_matches('(').trim_end_matches(')');
        let deg: f64 = deg
            .parse()
            .map_err(|_| Error::UnknownTarget(spec.to_string()))?;
        return target("cs", Some(deg * PI / 180.0));
    }
    target(&lower, None)
}

/// Reads a user target: a JSON square matrix of `[re, im]` pairs.
pub fn load_target_file(path: &Path) -> Result<TargetGate> {
    let text = std::fs::read_to_string(path)?;
    let m: ComplexMatrixJson = serde_json::from_str(&text)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "user".into());
    TargetGate::new(name, m.to_matrix()?)
}

/// Knill form: identity on one mode per qubit, a unitary block on the rest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnillAnsatz {
    n_modes: usize,
    passive_modes: Vec<usize>,
    active_modes: Vec<usize>,
}

impl KnillAnsatz {
    pub fn new(n_modes: usize, mut passive_modes: Vec<usize>) -> Result<Self> {
        passive_modes.sort_unstable();
        passive_modes.dedup();
        if passive_modes.iter().any(|&m| m >= n_modes) || passive_modes.len() >= n_modes {
            return Err(Error::Validation(format!(
                "passive modes {passive_modes:?} do not fit a {n_modes}-mode device"
            )));
        }
        let active_modes = (0..n_modes)
            .filter(|m| !passive_modes.contains(m))
            .collect();
        Ok(KnillAnsatz {
            n_modes,
            passive_modes,
            active_modes,
        })
    }

    /// Six modes with modes 0 and 2 (the logical-0 rails) passive.
    pub fn cz_default() -> Self {
        KnillAnsatz::new(6, vec![0, 2]).expect("static layout")
    }

    /// Keeps one rail of every qubit passive, `bits[r]` choosing which.
    pub fn for_encoding(encoding: &DualRailEncoding, bits: &[usize]) -> Result<Self> {
        if bits.len() != encoding.n_qubits() || bits.iter().any(|&b| b > 1) {
            return Err(Error::Validation(
                "need one passive rail (0 or 1) per qubit".into(),
            ));
        }
        let passive = bits
            .iter()
            .enumerate()
            .map(|(r, &b)| encoding.computational_modes()[2 * r + b])
            .collect();
        KnillAnsatz::new(encoding.n_modes(), passive)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn passive_modes(&self) -> &[usize] {
        &self.passive_modes
    }

    pub fn active_modes(&self) -> &[usize] {
        &self.active_modes
    }

    pub fn block_size(&self) -> usize {
        self.active_modes.len()
    }

    /// Embeds without checking unitarity; the optimizer's parameterization
    /// already guarantees it.
    pub(crate) fn embed_unchecked(&self, block: &DMatrix<Complex64>) -> ModeMatrix {
        let mut full = DMatrix::identity(self.n_modes, self.n_modes);
        for (a, &i) in self.active_modes.iter().enumerate() {
            for (b, &j) in self.active_modes.iter().enumerate() {
                full[(i, j)] = block[(a, b)];
            }
        }
        ModeMatrix::new(full).expect("non-empty square")
    }

    pub fn embed(&self, block: &DMatrix<Complex64>) -> Result<ModeMatrix> {
        let k = self.block_size();
        if block.nrows() != k || block.ncols() != k {
            return Err(Error::Dimension(format!(
                "active block must be {k}x{k}, got {}x{}",
                block.nrows(),
                block.ncols()
            )));
        }
        let as_mode = ModeMatrix::new(block.clone())?;
        if !as_mode.is_unitary(UNITARY_TOL) {
            return Err(Error::Validation(format!(
                "active block is not unitary (error {:.3e})",
                as_mode.unitarity_error()
            )));
        }
        Ok(self.embed_unchecked(block))
    }

    pub fn active_block(&self, u: &ModeMatrix) -> DMatrix<Complex64> {
        let m = &self.active_modes;
        DMatrix::from_fn(m.len(), m.len(), |a, b| u.get(m[a], m[b]))
    }

    /// Whether `u` is the identity on the passive rows and columns.
    pub fn matches(&self, u: &ModeMatrix, tol: f64) -> bool {
        if u.n_modes() != self.n_modes {
            return false;
        }
        self.passive_modes.iter().all(|&p| {
            (0..self.n_modes).all(|k| {
                let want = if k == p { 1.0 } else { 0.0 };
                (u.get(p, k) - want).norm() <= tol && (u.get(k, p) - want).norm() <= tol
            })
        })
    }
}

/// Embeds a unitary active block into the six-mode CZ layout
/// (modes 0 and 2 passive).
pub fn embed_ansatz(active_block: &DMatrix<Complex64>, n_modes: usize) -> Result<ModeMatrix> {
    if n_modes != 6 {
        return Err(Error::Dimension(format!(
            "the default Knill layout has 6 modes, not {n_modes}"
        )));
    }
    KnillAnsatz::cz_default().embed(active_block)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cz_and_cs_pi_agree() {
        let cz = target("cz", None).unwrap();
        let cs = parse_target("cs:3.141592653589793").unwrap();
        assert!((cz.entries() - cs.entries())
            .iter()
            .all(|z| z.norm() < 1e-15));
        assert_eq!(cz.entries()[(3, 3)], c(-1.0, 0.0));
    }

    #[test]
    fn cs90_has_i_in_the_corner() {
        let t = parse_target("cs90").unwrap();
        assert!((t.entries()[(3, 3)] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((t.entries()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn builtins_are_unitary() {
        for name in ["cz", "cnot", "identity", "cs90", "cs:0.4"] {
            let t = parse_target(name).unwrap();
            let p = t.entries().adjoint() * t.entries();
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((p[(i, j)] - want).norm() < 1e-12, "{name}");
                }
            }
        }
    }

    #[test]
    fn unknown_target_is_an_error() {
        assert!(matches!(
            parse_target("toffoli"),
            Err(Error::UnknownTarget(_))
        ));
    }

    #[test]
    fn basis_order_is_big_endian() {
        let e = DualRailEncoding::standard(2, 2);
        assert_eq!(e.occupied_modes(0), vec![0, 2]);
        assert_eq!(e.occupied_modes(1), vec![0, 3]);
        assert_eq!(e.occupied_modes(2), vec![1, 2]);
        assert_eq!(e.occupied_modes(3), vec![1, 3]);
    }

    #[test]
    fn encoding_must_partition_modes() {
        assert!(DualRailEncoding::new(2, vec![0, 1, 2, 3], vec![3, 4]).is_err());
        assert!(DualRailEncoding::new(2, vec![0, 1, 2], vec![3]).is_err());
        assert!(DualRailEncoding::new(1, vec![2, 0], vec![1]).is_ok());
    }

    #[test]
    fn embedding_identity_gives_identity() {
        let u = embed_ansatz(&DMatrix::identity(4, 4), 6).unwrap();
        assert_eq!(u, ModeMatrix::identity(6));
    }

    #[test]
    fn embedded_rows_are_unit_vectors_and_round_trip() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut block = DMatrix::identity(4, 4);
        block[(0, 0)] = c(h, 0.0);
        block[(0, 3)] = c(0.0, h);
        block[(3, 0)] = c(0.0, h);
        block[(3, 3)] = c(h, 0.0);
        let ansatz = KnillAnsatz::cz_default();
        let u = ansatz.embed(&block).unwrap();
        for p in [0usize, 2] {
            for k in 0..6 {
                let want = if k == p { 1.0 } else { 0.0 };
                assert_eq!(u.get(p, k), c(want, 0.0));
                assert_eq!(u.get(k, p), c(want, 0.0));
            }
        }
        assert_eq!(ansatz.active_block(&u), block);
        assert!(ansatz.matches(&u, 0.0));
    }

    #[test]
    fn non_unitary_block_is_rejected() {
        let block = DMatrix::from_element(4, 4, c(0.5, 0.0));
        assert!(matches!(embed_ansatz(&block, 6), Err(Error::Validation(_))));
    }

    #[test]
    fn alternative_passive_rails() {
        let e = DualRailEncoding::standard(2, 2);
        let k = KnillAnsatz::for_encoding(&e, &[1, 1]).unwrap();
        assert_eq!(k.passive_modes(), &[1, 3]);
        assert_eq!(k.active_modes(), &[0, 2, 4, 5]);
    }
}
