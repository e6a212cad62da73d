//! Beamsplitter/phase-shifter factorization of unitary mode matrices.
//!
//! Below-diagonal entries are eliminated row by row from the bottom, right
//! to left, by right-multiplying with two-mode rotations
//!
//! ```text
//!            col j            col i
//! row j  [ e^{i phi} sin w   e^{i phi} cos w ]
//! row i  [      cos w             -sin w     ]
//! ```
//!
//! so that `U T_a T_b ... T_z D = I`. The device is then
//! `U = D^-1 T_z^-1 ... T_a^-1`; the rotation eliminated first is the
//! rightmost factor and is listed first. Entries that are already zero are
//! skipped and cost no element.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ModeMatrix;
use crate::gates::{DualRailEncoding, KnillAnsatz, UNITARY_TOL};
use crate::io;
use crate::optimize::CurvePoint;

/// Entries at or below this modulus are treated as already eliminated.
pub const ZERO_SKIP_TOL: f64 = 1e-10;

/// Largest off-diagonal residual tolerated after elimination.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// One two-mode rotation `T_{i,j}`, `i > j`, zero-based modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationElement {
    pub i: usize,
    pub j: usize,
    /// In `[0, pi/2]`.
    pub omega: f64,
    /// In `(-pi, pi]`.
    pub phi: f64,
}

impl RotationElement {
    /// The 2x2 block on rows/columns `(j, i)`.
    fn block(&self) -> [[Complex64; 2]; 2] {
        let (s, c) = self.omega.sin_cos();
        let e = Complex64::from_polar(1.0, self.phi);
        [
            [e * s, e * c],
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        ]
    }

    /// `T_{i,j}` embedded in an `n x n` identity.
    pub fn matrix(&self, n: usize) -> DMatrix<Complex64> {
        let b = self.block();
        let mut t = DMatrix::identity(n, n);
        t[(self.j, self.j)] = b[0][0];
        t[(self.j, self.i)] = b[0][1];
        t[(self.i, self.j)] = b[1][0];
        t[(self.i, self.i)] = b[1][1];
        t
    }

    /// One-based `(i, j)` as written on circuit diagrams.
    pub fn modes_one_based(&self) -> (usize, usize) {
        (self.i + 1, self.j + 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub n_modes: usize,
    /// Physical order: the first element acts first.
    pub rotations: Vec<RotationElement>,
    /// Diagonal phases of `D^-1`, applied last.
    pub output_phases: Vec<f64>,
}

impl Decomposition {
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        self.rotations.iter().map(|r| (r.i, r.j)).collect()
    }

    /// Phase shifters that are not trivially zero: one per rotation with
    /// `phi != 0` plus every non-zero output phase.
    pub fn nonzero_phase_count(&self, tol: f64) -> usize {
        self.rotations
            .iter()
            .filter(|r| wrap_angle(r.phi).abs() > tol)
            .count()
            + self
                .output_phases
                .iter()
                .filter(|p| wrap_angle(**p).abs() > tol)
                .count()
    }
}

/// Wraps into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

pub fn decompose(u: &ModeMatrix) -> Result<Decomposition> {
    let err = u.unitarity_error();
    if err > UNITARY_TOL {
        return Err(Error::Validation(format!(
            "only unitary matrices can be decomposed (unitarity error {err:.3e})"
        )));
    }
    let n = u.n_modes();
    let mut w = u.entries().clone();
    let mut rotations = Vec::new();

    for i in (1..n).rev() {
        for j in (0..i).rev() {
            let target = w[(i, j)];
            if target.norm() <= ZERO_SKIP_TOL {
                continue;
            }
            let pivot = w[(i, i)];
            let omega = pivot.norm().atan2(target.norm());
            let phi = if pivot.norm() == 0.0 {
                0.0
            } else {
                wrap_angle((-pivot / target).arg())
            };
            let rot = RotationElement { i, j, omega, phi };
            apply_right(&mut w, &rot);
            rotations.push(rot);
        }
    }

    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                worst = worst.max(w[(r, c)].norm());
            }
        }
        worst = worst.max((w[(r, r)].norm() - 1.0).abs());
    }
    if worst > RESIDUAL_TOL {
        return Err(Error::Consistency(format!(
            "elimination left a residual of {worst:.3e}"
        )));
    }

    Ok(Decomposition {
        n_modes: n,
        rotations,
        output_phases: (0..n).map(|k| w[(k, k)].arg()).collect(),
    })
}

/// `W <- W T` touching only columns `j` and `i`.
fn apply_right(w: &mut DMatrix<Complex64>, rot: &RotationElement) {
    let b = rot.block();
    for r in 0..w.nrows() {
        let (a, c) = (w[(r, rot.j)], w[(r, rot.i)]);
        w[(r, rot.j)] = a * b[0][0] + c * b[1][0];
        w[(r, rot.i)] = a * b[0][1] + c * b[1][1];
    }
}

/// `W <- T^-1 W` touching only rows `j` and `i`.
fn apply_inverse_left(w: &mut DMatrix<Complex64>, rot: &RotationElement) {
    let b = rot.block();
    // T^-1 = T†
    let inv = [
        [b[0][0].conj(), b[1][0].conj()],
        [b[0][1].conj(), b[1][1].conj()],
    ];
    for c in 0..w.ncols() {
        let (x, y) = (w[(rot.j, c)], w[(rot.i, c)]);
        w[(rot.j, c)] = inv[0][0] * x + inv[0][1] * y;
        w[(rot.i, c)] = inv[1][0] * x + inv[1][1] * y;
    }
}

pub fn reconstruct(d: &Decomposition) -> ModeMatrix {
    let n = d.n_modes;
    let mut m = DMatrix::identity(n, n);
    for rot in &d.rotations {
        apply_inverse_left(&mut m, rot);
    }
    for (k, &theta) in d.output_phases.iter().enumerate() {
        let p = Complex64::from_polar(1.0, theta);
        for c in 0..n {
            m[(k, c)] *= p;
        }
    }
    ModeMatrix::new(m).expect("n >= 1")
}

/// Diagonal-phase gauge used to compare decompositions along a family.
///
/// For a diagonal target, `U -> P U Q` with diagonal phases leaves the gate
/// map unchanged up to a global phase when `q_m = conj(p_m)` on the
/// computational modes (ancilla modes are unconstrained). The frame fixes
/// that freedom by making the pivot row real and non-negative on every
/// other interacting mode, and the pivot column real and non-negative on
/// the ancilla modes. Passive modes are never touched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugeFrame {
    pivot: usize,
    linked: Vec<usize>,
    free: Vec<usize>,
}

const GAUGE_TOL: f64 = 1e-12;

impl GaugeFrame {
    /// Frame for a Knill-form family: pivot is the first active
    /// computational mode.
    pub fn knill(ansatz: &KnillAnsatz, encoding: &DualRailEncoding) -> Self {
        let comp: Vec<usize> = encoding
            .computational_modes()
            .iter()
            .copied()
            .filter(|m| ansatz.active_modes().contains(m))
            .collect();
        GaugeFrame::from_modes(comp, encoding.ancilla_modes().to_vec())
    }

    /// Frame treating every computational mode as interacting.
    pub fn full(encoding: &DualRailEncoding) -> Self {
        GaugeFrame::from_modes(
            encoding.computational_modes().to_vec(),
            encoding.ancilla_modes().to_vec(),
        )
    }

    fn from_modes(mut comp: Vec<usize>, free: Vec<usize>) -> Self {
        comp.sort_unstable();
        let pivot = comp[0];
        GaugeFrame {
            pivot,
            linked: comp[1..].to_vec(),
            free,
        }
    }

    pub fn canonicalize(&self, u: &ModeMatrix) -> ModeMatrix {
        let n = u.n_modes();
        let unit = |z: Complex64| {
            if z.norm() <= GAUGE_TOL {
                Complex64::new(1.0, 0.0)
            } else {
                z / z.norm()
            }
        };
        let mut p = vec![Complex64::new(1.0, 0.0); n];
        let mut q = p.clone();
        let r0 = self.pivot;
        for &c in &self.linked {
            let ph = unit(u.get(r0, c));
            p[c] = ph;
            q[c] = ph.conj();
        }
        for &a in &self.free {
            q[a] = unit(u.get(r0, a)).conj();
            p[a] = unit(u.get(a, r0)).conj();
        }
        let m = DMatrix::from_fn(n, n, |i, j| p[i] * u.get(i, j) * q[j]);
        ModeMatrix::new(m).expect("same shape")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AngleRow {
    pub delta: f64,
    pub omega: Vec<f64>,
    pub phi: Vec<f64>,
    pub output_phases: Vec<f64>,
}

/// Rotation angles of every point of a family, in a fixed gauge.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleTable {
    /// Zero-based `(i, j)` of each rotation column.
    pub pairs: Vec<(usize, usize)>,
    pub rows: Vec<AngleRow>,
    /// Largest circular distance of each `phi` column from its mean.
    pub phi_max_deviation: Vec<f64>,
    /// Circular standard deviation of each `phi` column.
    pub phi_std: Vec<f64>,
    pub output_phase_std: Vec<f64>,
}

impl AngleTable {
    pub fn to_csv(&self) -> String {
        let mut header = vec!["delta".to_string()];
        for (i, j) in &self.pairs {
            header.push(format!("omega_{}_{}", i + 1, j + 1));
        }
        for (i, j) in &self.pairs {
            header.push(format!("phi_{}_{}", i + 1, j + 1));
        }
        let n_out = self.rows.first().map_or(0, |r| r.output_phases.len());
        for k in 0..n_out {
            header.push(format!("theta_{}", k + 1));
        }
        let mut out = header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = std::iter::once(r.delta)
                .chain(r.omega.iter().copied())
                .chain(r.phi.iter().copied())
                .chain(r.output_phases.iter().copied())
                .map(io::fmt_f64)
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn circular_stats(angles: &[f64]) -> (f64, f64) {
    if angles.is_empty() {
        return (0.0, 0.0);
    }
    let mean: Complex64 = angles.iter().map(|&a| Complex64::from_polar(1.0, a)).sum();
    let mu = mean.arg();
    let devs: Vec<f64> = angles.iter().map(|&a| wrap_angle(a - mu)).collect();
    let max = devs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let std = (devs.iter().map(|d| d * d).sum::<f64>() / devs.len() as f64).sqrt();
    (max, std)
}

/// Decomposes every point in `frame`'s gauge. All points must share one
/// rotation pattern.
pub fn angle_curves(points: &[CurvePoint], frame: &GaugeFrame) -> Result<AngleTable> {
    let mut pairs: Option<Vec<(usize, usize)>> = None;
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let d = decompose(&frame.canonicalize(&p.u))?;
        let found = d.pattern();
        match &pairs {
            None => pairs = Some(found),
            Some(expected) if *expected != found => {
                return Err(Error::StructuralBreak {
                    delta: p.delta,
                    expected: expected.clone(),
                    found,
                })
            }
            _ => {}
        }
        rows.push(AngleRow {
            delta: p.delta,
            omega: d.rotations.iter().map(|r| r.omega).collect(),
            phi: d.rotations.iter().map(|r| r.phi).collect(),
            output_phases: d.output_phases.clone(),
        });
    }
    let pairs = pairs.unwrap_or_default();
    let column_stats = |get: &dyn Fn(&AngleRow) -> &Vec<f64>, k: usize| {
        let col: Vec<f64> = rows.iter().map(|r| get(r)[k]).collect();
        circular_stats(&col)
    };
    let phi_stats: Vec<(f64, f64)> = (0..pairs.len())
        .map(|k| column_stats(&|r| &r.phi, k))
        .collect();
    let n_out = rows.first().map_or(0, |r| r.output_phases.len());
    let output_phase_std = (0..n_out)
        .map(|k| column_stats(&|r| &r.output_phases, k).1)
        .collect();
    Ok(AngleTable {
        pairs,
        phi_max_deviation: phi_stats.iter().map(|s| s.0).collect(),
        phi_std: phi_stats.iter().map(|s| s.1).collect(),
        output_phase_std,
        rows,
    })
}

#[derive(Serialize, Deserialize)]
struct CircuitElement {
    #[serde(rename = "type")]
    kind: String,
    modes: [usize; 2],
    omega: f64,
    phi: f64,
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    n_modes: usize,
    elements: Vec<CircuitElement>,
    output_phases: Vec<f64>,
}

/// Circuit JSON text (one-based modes, physical order).
pub fn circuit_json(d: &Decomposition) -> Result<String> {
    let file = CircuitFile {
        n_modes: d.n_modes,
        elements: d
            .rotations
            .iter()
            .map(|r| CircuitElement {
                kind: "bs".into(),
                modes: [r.i + 1, r.j + 1],
                omega: r.omega,
                phi: r.phi,
            })
            .collect(),
        output_phases: d.output_phases.clone(),
    };
    io::to_json_string(&file)
}

pub fn parse_circuit(text: &str) -> Result<Decomposition> {
    let file: CircuitFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let n = file.n_modes;
    if n == 0 || file.output_phases.len() != n {
        return Err(Error::Parse(format!(
            "circuit with {n} modes must list {n} output phases"
        )));
    }
    let rotations = file
        .elements
        .iter()
        .map(|e| {
            let [i, j] = e.modes;
            if e.kind != "bs" {
                return Err(Error::Parse(format!("unknown element type `{}`", e.kind)));
            }
            if !(1 <= j && j < i && i <= n) {
                return Err(Error::Parse(format!(
                    "bad mode pair [{i}, {j}] for {n} modes"
                )));
            }
            Ok(RotationElement {
                i: i - 1,
                j: j - 1,
                omega: e.omega,
                phi: e.phi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Decomposition {
        n_modes: n,
        rotations,
        output_phases: file.output_phases,
    })
}

pub fn export_circuit(d: &Decomposition, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, circuit_json(d)?)?;
    Ok(())
}

pub fn import_circuit(path: &Path) -> Result<Decomposition> {
    parse_circuit(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_unitary(n: usize, seed: &[f64]) -> ModeMatrix {
        ModeMatrix::new(crate::optimize::param::unitary_from_params(n, seed)).unwrap()
    }

    #[test]
    fn diagonal_needs_no_rotations() {
        let thetas = [0.1, -2.0, 3.0];
        let u = ModeMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            thetas.iter().map(|&t| Complex64::from_polar(1.0, t)),
        )))
        .unwrap();
        let d = decompose(&u).unwrap();
        assert!(d.rotations.is_empty());
        for (a, b) in d.output_phases.iter().zip(thetas) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_mode_unitary_takes_one_rotation() {
        let u = random_unitary(2, &[0.3, -0.7, 0.9, 0.4]);
        let d = decompose(&u).unwrap();
        assert_eq!(d.rotations.len(), 1);
        assert_eq!(d.output_phases.len(), 2);
        assert!(reconstruct(&d).max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn empty_decomposition_is_identity() {
        let d = Decomposition {
            n_modes: 4,
            rotations: vec![],
            output_phases: vec![0.0; 4],
        };
        assert_eq!(reconstruct(&d), ModeMatrix::identity(4));
    }

    #[test]
    fn rotation_matrix_is_unitary_and_local() {
        let r = RotationElement {
            i: 4,
            j: 1,
            omega: 0.4,
            phi: 2.2,
        };
        let t = ModeMatrix::new(r.matrix(6)).unwrap();
        assert!(t.is_unitary(1e-15));
        for a in 0..6 {
            for b in 0..6 {
                if ![1, 4].contains(&a) || ![1, 4].contains(&b) {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert_eq!(t.get(a, b), c(want, 0.0));
                }
            }
        }
    }

    #[test]
    fn each_rotation_zeroes_its_element() {
        let u = random_unitary(
            4,
            &(0..16).map(|k| (k as f64 * 0.77).sin()).collect::<Vec<_>>(),
        );
        let d = decompose(&u).unwrap();
        let mut w = u.entries().clone();
        for r in &d.rotations {
            w *= r.matrix(4);
            assert!(w[(r.i, r.j)].norm() < 1e-13);
        }
    }

    #[test]
    fn non_unitary_is_rejected() {
        let u = ModeMatrix::identity(3).scaled(c(2.0, 0.0));
        assert!(matches!(decompose(&u), Err(Error::Validation(_))));
    }

    #[test]
    fn identity_circuit_json() {
        let d = decompose(&ModeMatrix::identity(3)).unwrap();
        let text = circuit_json(&d).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["n_modes"], 3);
        assert_eq!(v["elements"].as_array().unwrap().len(), 0);
        assert_eq!(v["output_phases"].as_array().unwrap().len(), 3);
        assert!(v["output_phases"]
            .as_array()
            .unwrap()
            .iter()
            .all(|p| p.as_f64() == Some(0.0)));
    }

    #[test]
    fn circuit_parse_rejects_bad_pairs() {
        let bad = r#"{"n_modes": 2, "elements": [{"type": "bs", "modes": [1, 2], "omega": 0.1, "phi": 0.0}], "output_phases": [0, 0]}"#;
        assert!(parse_circuit(bad).is_err());
        assert!(parse_circuit("{not json").is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn round_trip_and_canonical_ranges(n in 2usize..=6, seed in proptest::collection::vec(-3.0f64..3.0, 36)) {
            let u = random_unitary(n, &seed[..n * n]);
            let d = decompose(&u).unwrap();
            prop_assert!(d.rotations.len() <= n * (n - 1) / 2);
            for r in &d.rotations {
                prop_assert!(r.i > r.j);
                prop_assert!((0.0..=PI / 2.0).contains(&r.omega));
                prop_assert!(r.phi > -PI && r.phi <= PI);
            }
            prop_assert!(reconstruct(&d).max_abs_diff(&u) < 1e-10);
            let again = parse_circuit(&circuit_json(&d).unwrap()).unwrap();
            prop_assert_eq!(again, d.clone());
            prop_assert_eq!(decompose(&u).unwrap(), d);
        }
    }
}
