//! On-disk artifacts of a run: the configuration, one JSON file per
//! optimized point, the curve table and the directory layout tying them
//! together. Mode indices in these files are 1-based.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{AncillaSpec, ModeMatrix};
use crate::gates::{self, DualRailEncoding, KnillAnsatz};
use crate::io::{self, ComplexMatrixJson};
use crate::metrics::TargetGate;
use crate::optimize::{self, AnsatzKind, CurvePoint, OptimizerConfig, Problem};

/// Target as stored in a config: a built-in name, or a name plus explicit
/// matrix so the run does not depend on the original target file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<ComplexMatrixJson>,
}

impl TargetSpec {
    pub fn builtin(name: &str) -> Self {
        TargetSpec {
            name: name.to_string(),
            matrix: None,
        }
    }

    pub fn from_gate(gate: &TargetGate) -> Self {
        TargetSpec {
            name: gate.name().to_string(),
            matrix: Some(ComplexMatrixJson::from_matrix(gate.entries())),
        }
    }

    pub fn resolve(&self) -> Result<TargetGate> {
        match &self.matrix {
            Some(m) => TargetGate::new(self.name.clone(), m.to_matrix()?),
            None => gates::parse_target(&self.name),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Lin,
}

/// `count` values from `min` to `max`; `min > max` gives a descending
/// schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for Schedule {
    fn default() -> Self {
        let (min, max, count) = optimize::DEFAULT_SCHEDULE;
        Schedule {
            min,
            max,
            count,
            spacing: Spacing::Log,
        }
    }
}

impl Schedule {
    /// Parses `min:max:count[:log|:lin]`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::Parse(format!("schedule `{text}` is not min:max:count[:log|lin]"));
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let spacing = match parts.get(3).map(|s| s.trim()) {
            None | Some("log") => Spacing::Log,
            Some("lin") => Spacing::Lin,
            _ => return Err(bad()),
        };
        let s = Schedule {
            min,
            max,
            count,
            spacing,
        };
        s.values()?;
        Ok(s)
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let (lo, hi) = if self.min <= self.max {
            (self.min, self.max)
        } else {
            (self.max, self.min)
        };
        if self.count > 1 && lo == hi {
            return Err(Error::Validation(
                "schedule with several points needs min != max".into(),
            ));
        }
        let mut v = match self.spacing {
            Spacing::Log => optimize::log_schedule(lo, hi, self.count)?,
            Spacing::Lin => {
                if !(lo > 0.0) || self.count == 0 {
                    return Err(Error::Validation(
                        "linear schedule needs 0 < min and count >= 1".into(),
                    ));
                }
                (0..self.count)
                    .map(|i| {
                        if self.count == 1 {
                            lo
                        } else {
                            lo + (hi - lo) * i as f64 / (self.count - 1) as f64
                        }
                    })
                    .collect()
            }
        };
        if self.min > self.max {
            v.reverse();
        }
        Ok(v)
    }
}

/// Everything a run depends on. Serialized as `config.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub target: TargetSpec,
    pub ancilla_input: Vec<u32>,
    pub ancilla_pattern: Vec<u32>,
    /// Passive rails of the Knill ansatz (1-based modes).
    pub passive_modes: Vec<usize>,
    pub optimizer: OptimizerConfig,
    pub schedule: Schedule,
    pub terms: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            target: TargetSpec::builtin("cz"),
            ancilla_input: vec![1, 1],
            ancilla_pattern: vec![1, 1],
            passive_modes: vec![1, 3],
            optimizer: OptimizerConfig::default(),
            schedule: Schedule::default(),
            terms: 2,
            out: PathBuf::from("run"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn problem(&self) -> Result<Problem> {
        let target = self.target.resolve()?;
        let ancilla = AncillaSpec::new(self.ancilla_input.clone(), self.ancilla_pattern.clone())?;
        let encoding = DualRailEncoding::standard(target.n_qubits(), ancilla.n_modes());
        let passive = zero_based(&self.passive_modes, encoding.n_modes())?;
        let knill = KnillAnsatz::new(encoding.n_modes(), passive)?;
        Problem::new(target, encoding, ancilla, knill)
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        self.problem()?;
        if !(self.terms == 2 || self.terms == 3) {
            return Err(Error::Validation(format!(
                "fit terms must be 2 or 3, got {}",
                self.terms
            )));
        }
        Ok(())
    }

    /// Equal up to settings that cannot change results.
    pub fn same_run(&self, other: &RunConfig) -> bool {
        let strip = |c: &RunConfig| {
            let mut c = c.clone();
            c.optimizer.threads = None;
            c.out = PathBuf::new();
            c
        };
        strip(self) == strip(other)
    }
}

fn zero_based(modes: &[usize], n_modes: usize) -> Result<Vec<usize>> {
    modes
        .iter()
        .map(|&m| {
            if (1..=n_modes).contains(&m) {
                Ok(m - 1)
            } else {
                Err(Error::Validation(format!(
                    "mode {m} is outside 1..={n_modes}"
                )))
            }
        })
        .collect()
}

fn one_based(modes: &[usize]) -> Vec<usize> {
    modes.iter().map(|m| m + 1).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingFile {
    pub n_qubits: usize,
    pub computational_modes: Vec<usize>,
    pub ancilla_modes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncillaFile {
    pub input: Vec<u32>,
    pub pattern: Vec<u32>,
}

/// One optimized device with enough context to re-evaluate it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointFile {
    pub epsilon: f64,
    pub delta: f64,
    pub success: f64,
    pub fidelity: f64,
    pub objective: f64,
    pub converged: bool,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub restart: usize,
    pub ansatz: AnsatzKind,
    pub target: TargetSpec,
    pub encoding: EncodingFile,
    pub ancilla: AncillaFile,
    pub passive_modes: Vec<usize>,
    pub params: Vec<f64>,
    pub u: ComplexMatrixJson,
}

impl PointFile {
    pub fn new(point: &CurvePoint, problem: &Problem) -> Self {
        PointFile {
            epsilon: point.epsilon,
            delta: point.delta,
            success: point.success,
            fidelity: point.fidelity(),
            objective: point.objective,
            converged: point.converged,
            gradient_norm: point.gradient_norm,
            iterations: point.iterations,
            restart: point.restart,
            ansatz: point.ansatz,
            target: TargetSpec::from_gate(&problem.target),
            encoding: EncodingFile {
                n_qubits: problem.encoding.n_qubits(),
                computational_modes: one_based(problem.encoding.computational_modes()),
                ancilla_modes: one_based(problem.encoding.ancilla_modes()),
            },
            ancilla: AncillaFile {
                input: problem.ancilla.input.as_slice().to_vec(),
                pattern: problem.ancilla.pattern.as_slice().to_vec(),
            },
            passive_modes: one_based(problem.knill.passive_modes()),
            params: point.params.clone(),
            u: ComplexMatrixJson::from_matrix(point.u.entries()),
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        let target = self.target.resolve()?;
        let n_modes = self.encoding.computational_modes.len() + self.encoding.ancilla_modes.len();
        let encoding = DualRailEncoding::new(
            self.encoding.n_qubits,
            zero_based(&self.encoding.computational_modes, n_modes)?,
            zero_based(&self.encoding.ancilla_modes, n_modes)?,
        )?;
        let ancilla = AncillaSpec::new(self.ancilla.input.clone(), self.ancilla.pattern.clone())?;
        let knill = KnillAnsatz::new(n_modes, zero_based(&self.passive_modes, n_modes)?)?;
        Problem::new(target, encoding, ancilla, knill)
    }

    pub fn matrix(&self) -> Result<ModeMatrix> {
        ModeMatrix::new(self.u.to_matrix()?)
    }

    pub fn to_point(&self) -> Result<CurvePoint> {
        Ok(CurvePoint {
            epsilon: self.epsilon,
            delta: self.delta,
            success: self.success,
            objective: self.objective,
            u: self.matrix()?,
            params: self.params.clone(),
            ansatz: self.ansatz,
            converged: self.converged,
            gradient_norm: self.gradient_norm,
            iterations: self.iterations,
            restart: self.restart,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }
}

/// One row of `curve.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epsilon: f64,
    pub delta: f64,
    pub success: f64,
    pub converged: bool,
}

impl From<&CurvePoint> for CurveRow {
    fn from(p: &CurvePoint) -> Self {
        CurveRow {
            epsilon: p.epsilon,
            delta: p.delta,
            success: p.success,
            converged: p.converged,
        }
    }
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("epsilon,delta,success,converged\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            io::fmt_f64(r.epsilon),
            io::fmt_f64(r.delta),
            io::fmt_f64(r.success),
            r.converged
        ));
    }
    out
}

pub fn write_curve(path: &Path, rows: &[CurveRow]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, curve_csv(rows))?;
    Ok(())
}

pub fn read_curve(path: &Path) -> Result<Vec<CurveRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != ["epsilon", "delta", "success", "converged"] {
        return Err(Error::Parse(format!(
            "{}: expected header epsilon,delta,success,converged",
            path.display()
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| Error::Parse(format!("{}: {e}", path.display()))))
        .collect()
}

/// Paths inside a run directory.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn curve(&self) -> PathBuf {
        self.root.join("curve.csv")
    }

    pub fn fit(&self) -> PathBuf {
        self.root.join("fit.json")
    }

    pub fn angles(&self) -> PathBuf {
        self.root.join("angles.csv")
    }

    pub fn point(&self, index: usize) -> PathBuf {
        self.root.join("points").join(format!("{index:03}.json"))
    }

    /// Forward-sweep result of a trace step, kept for `--resume`.
    pub fn checkpoint(&self, index: usize) -> PathBuf {
        self.root
            .join("checkpoints")
            .join(format!("{index:03}.json"))
    }

    pub fn circuit(&self, index: usize) -> PathBuf {
        self.root.join("circuits").join(format!("{index:03}.json"))
    }

    fn listed(&self, sub: &str) -> Result<Vec<PathBuf>> {
        let dir = self.root.join(sub);
        if !dir.is_dir() {
            return Ok(vec![]);
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        Ok(files)
    }

    pub fn point_files(&self) -> Result<Vec<PathBuf>> {
        self.listed("points")
    }

    pub fn circuit_files(&self) -> Result<Vec<PathBuf>> {
        self.listed("circuits")
    }
}
