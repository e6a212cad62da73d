//! The `loqc` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::fock::ModeMatrix;
use crate::gates::{self, UNITARY_TOL};
use crate::io::{self, ComplexMatrixJson};
use crate::optimize::{self, AnsatzKind, CurvePoint, FitResult};
use crate::reck::{self, Decomposition, GaugeFrame};
use crate::run::{self, CurveRow, PointFile, RunConfig, RunDir, Schedule, TargetSpec};

/// Exit status for results that exist but did not converge.
const EXIT_NOT_CONVERGED: u8 = 2;

/// Agreement required between stored and recomputed F and S.
const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "loqc", version, about = "Design heralded linear-optical gates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Best device for one epsilon
    Optimize(RunArgs),
    /// Trade-off curve by continuation in epsilon
    Trace {
        #[command(flatten)]
        run: RunArgs,
        /// Reuse forward-sweep checkpoints already in the output directory
        #[arg(long)]
        resume: bool,
    },
    /// Fit S = S0 + S1 sqrt(delta) [+ S2 delta] to a curve
    Fit {
        /// curve.csv or a run directory
        #[arg(default_value = "run")]
        path: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3), default_value_t = 2)]
        terms: u8,
        /// Output file (default: fit.json next to the curve)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Beamsplitter circuit for a point, a matrix file or every point of a run
    Decompose {
        path: PathBuf,
        /// Output circuit file (single input only)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-simulate points and circuits and check them
    Verify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AnsatzArg {
    Full,
    Knill,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// cz, cnot, identity, cs:<radians> or cs<degrees>
    #[arg(long, conflicts_with = "target_file")]
    pub target: Option<String>,
    /// JSON matrix of [re, im] pairs
    #[arg(long)]
    pub target_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub ansatz: Option<AnsatzArg>,
    /// Ancilla photon numbers, e.g. 1,1
    #[arg(long)]
    pub ancilla_in: Option<String>,
    /// Heralding pattern on the ancilla modes, e.g. 1,1
    #[arg(long)]
    pub ancilla_pattern: Option<String>,
    /// Passive rails of the Knill ansatz (1-based), e.g. 1,3
    #[arg(long)]
    pub passive: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// min:max:count[:log|lin]
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Run directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub terms: Option<u8>,
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    if text.trim().is_empty() {
        return Ok(vec![]);
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad {what} list `{text}`")))
        })
        .collect()
}

impl RunArgs {
    fn base(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => RunConfig::load(path),
            None => Ok(RunConfig::default()),
        }
    }

    fn apply(&self, mut c: RunConfig) -> Result<RunConfig> {
        if let Some(t) = &self.target {
            gates::parse_target(t)?;
            c.target = TargetSpec::builtin(t);
        }
        if let Some(path) = &self.target_file {
            c.target = TargetSpec::from_gate(&gates::load_target_file(path)?);
        }
        if let Some(a) = self.ansatz {
            c.optimizer.ansatz = match a {
                AnsatzArg::Full => AnsatzKind::Full,
                AnsatzArg::Knill => AnsatzKind::Knill,
            };
        }
        if let Some(t) = &self.ancilla_in {
            c.ancilla_input = parse_list(t, "ancilla")?;
        }
        if let Some(t) = &self.ancilla_pattern {
            c.ancilla_pattern = parse_list(t, "pattern")?;
        }
        if let Some(t) = &self.passive {
            c.passive_modes = parse_list(t, "mode")?;
        }
        if let Some(e) = self.epsilon {
            c.optimizer.epsilon = e;
        }
        if let Some(s) = &self.schedule {
            c.schedule = Schedule::parse(s)?;
        }
        if let Some(n) = self.restarts {
            c.optimizer.n_restarts = n;
        }
        if let Some(s) = self.seed {
            c.optimizer.rng_seed = s;
        }
        if let Some(t) = self.threads {
            c.optimizer.threads = Some(t);
        }
        if let Some(m) = self.max_iterations {
            c.optimizer.max_iterations = m;
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if let Some(t) = self.terms {
            c.terms = t as usize;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        self.apply(self.base()?)
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Optimize(args) => cmd_optimize(&args.resolve()?),
        Command::Trace { run, resume } => {
            let config = if resume {
                resume_config(&run)?
            } else {
                run.resolve()?
            };
            cmd_trace(&config, resume)
        }
        Command::Fit { path, terms, out } => cmd_fit(&path, terms as usize, out.as_deref()),
        Command::Decompose { path, out } => cmd_decompose(&path, out.as_deref()),
        Command::Verify { paths } => cmd_verify(&paths),
    }
}

fn status(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_CONVERGED)
    }
}

fn print_point(p: &CurvePoint) {
    println!(
        "eps {:.4e}  S {:.10}  delta {:.4e}  {} (gradient {:.2e}, {} iterations)",
        p.epsilon,
        p.success,
        p.delta,
        if p.converged {
            "converged"
        } else {
            "NOT converged"
        },
        p.gradient_norm,
        p.iterations
    );
}

pub fn cmd_optimize(config: &RunConfig) -> Result<ExitCode> {
    let problem = config.problem()?;
    let dir = RunDir::new(&config.out);
    io::write_json(&dir.config(), config)?;
    println!(
        "target {}  ansatz {:?}  eps {:e}  restarts {}  seed {}",
        problem.target.name(),
        config.optimizer.ansatz,
        config.optimizer.epsilon,
        config.optimizer.n_restarts,
        config.optimizer.rng_seed
    );
    let best = optimize::maximize(&config.optimizer, &problem)?;
    PointFile::new(&best, &problem).write(&dir.point(0))?;
    print_point(&best);
    println!("F = {:.12}  best restart {}", best.fidelity(), best.restart);
    println!("wrote {}", dir.point(0).display());
    Ok(status(best.converged))
}

/// Stored configuration of the run being resumed, with flag overrides. The
/// overrides may not change the results.
fn resume_config(args: &RunArgs) -> Result<RunConfig> {
    let out = match (&args.out, &args.config) {
        (Some(o), _) => o.clone(),
        (None, Some(c)) => RunConfig::load(c)?.out,
        (None, None) => RunConfig::default().out,
    };
    let stored_path = RunDir::new(&out).config();
    if !stored_path.exists() {
        return args.resolve();
    }
    let stored = RunConfig::load(&stored_path)?;
    let merged = args.apply(stored.clone())?;
    if !merged.same_run(&stored) {
        return Err(Error::Validation(format!(
            "flags change the run stored in {}; start a new output directory instead",
            stored_path.display()
        )));
    }
    Ok(merged)
}

pub fn cmd_trace(config: &RunConfig, resume: bool) -> Result<ExitCode> {
    let problem = config.problem()?;
    let schedule = config.schedule.values()?;
    let dir = RunDir::new(&config.out);

    let mut known = vec![None; schedule.len()];
    if resume {
        for (i, slot) in known.iter_mut().enumerate() {
            let path = dir.checkpoint(i);
            if path.exists() {
                *slot = Some(PointFile::read(&path)?.to_point()?);
            }
        }
        let n = known.iter().filter(|k| k.is_some()).count();
        println!(
            "resuming: {n} of {} forward-sweep points on disk",
            schedule.len()
        );
    }
    io::write_json(&dir.config(), config)?;

    let trace =
        optimize::trace_curve_resumable(&schedule, &config.optimizer, &problem, &known, |i, p| {
            PointFile::new(p, &problem).write(&dir.checkpoint(i))
        })?;
    for (i, p) in trace.points.iter().enumerate() {
        PointFile::new(p, &problem).write(&dir.point(i))?;
        print_point(p);
    }
    let rows: Vec<CurveRow> = trace.points.iter().map(CurveRow::from).collect();
    run::write_curve(&dir.curve(), &rows)?;
    println!("wrote {} ({} rows)", dir.curve().display(), rows.len());

    let converged = trace.points.iter().filter(|p| p.converged).count();
    if converged >= optimize::fit::MIN_FIT_POINTS {
        match optimize::fit_curve(&trace.points, config.terms) {
            Ok(fit) => {
                io::write_json(&dir.fit(), &fit)?;
                print_fit(&fit);
            }
            Err(e) => eprintln!("warning: no fit written: {e}"),
        }
    }
    for v in &trace.violations {
        eprintln!("monotonicity violation: {v}");
    }
    Ok(status(
        converged == trace.points.len() && trace.violations.is_empty(),
    ))
}

fn print_fit(fit: &FitResult) {
    print!("S0 = {:.6}  S1 = {:.6}", fit.s0, fit.s1);
    if let Some(s2) = fit.s2 {
        print!("  S2 = {s2:.6}");
    }
    println!(
        "  S1/S0 = {:.4}  rms residual {:.2e}",
        fit.ratio, fit.residual_rms
    );
}

pub fn cmd_fit(path: &Path, terms: usize, out: Option<&Path>) -> Result<ExitCode> {
    let csv = if path.is_dir() {
        RunDir::new(path).curve()
    } else {
        path.to_path_buf()
    };
    let rows = run::read_curve(&csv)?;
    let samples: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.converged)
        .map(|r| (r.delta, r.success))
        .collect();
    if samples.len() < rows.len() {
        println!("skipping {} non-converged rows", rows.len() - samples.len());
    }
    let fit = optimize::fit_samples(&samples, terms)?;
    let target = match out {
        Some(o) => o.to_path_buf(),
        None => csv.with_file_name("fit.json"),
    };
    io::write_json(&target, &fit)?;
    print_fit(&fit);
    println!("wrote {}", target.display());
    Ok(ExitCode::SUCCESS)
}

enum Loaded {
    Point(Box<PointFile>),
    Matrix(ModeMatrix),
    Circuit(Decomposition),
}

fn load_any(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path)?;
    let diag = |e: serde_json::Error| Error::Parse(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(diag)?;
    if value.is_array() {
        let m: ComplexMatrixJson = serde_json::from_value(value).map_err(diag)?;
        return Ok(Loaded::Matrix(ModeMatrix::new(m.to_matrix()?)?));
    }
    if value.get("elements").is_some() {
        return reck::parse_circuit(&text).map(Loaded::Circuit);
    }
    let p: PointFile = serde_json::from_value(value).map_err(diag)?;
    Ok(Loaded::Point(Box::new(p)))
}

/// `<run>/points/NNN.json` maps to `<run>/circuits/NNN.json`.
fn default_circuit_path(input: &Path) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let parent = input.parent().unwrap_or(Path::new(""));
    if parent.file_name().is_some_and(|n| n == "points") {
        let run = parent.parent().unwrap_or(Path::new(""));
        run.join("circuits").join(format!("{stem}.json"))
    } else {
        parent.join(format!("{stem}.circuit.json"))
    }
}

fn print_circuit(d: &Decomposition) {
    println!("{} modes, {} beamsplitters", d.n_modes, d.rotations.len());
    for r in &d.rotations {
        let (i, j) = r.modes_one_based();
        println!("  bs ({i},{j})  omega {:+.10}  phi {:+.10}", r.omega, r.phi);
    }
    let phases: Vec<String> = d.output_phases.iter().map(|p| format!("{p:+.6}")).collect();
    println!("  output phases [{}]", phases.join(", "));
    println!("  non-zero phase shifters: {}", d.nonzero_phase_count(1e-9));
}

pub fn cmd_decompose(path: &Path, out: Option<&Path>) -> Result<ExitCode> {
    if path.is_dir() {
        if out.is_some() {
            return Err(Error::Validation(
                "--out applies to a single input file".into(),
            ));
        }
        return decompose_run(&RunDir::new(path));
    }
    let u = match load_any(path)? {
        Loaded::Point(p) => p.matrix()?,
        Loaded::Matrix(m) => m,
        Loaded::Circuit(_) => {
            return Err(Error::Validation(format!(
                "{} is already a circuit",
                path.display()
            )))
        }
    };
    let d = reck::decompose(&u)?;
    let target = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_circuit_path(path));
    reck::export_circuit(&d, &target)?;
    print_circuit(&d);
    println!("wrote {}", target.display());
    Ok(ExitCode::SUCCESS)
}

fn decompose_run(dir: &RunDir) -> Result<ExitCode> {
    let files = dir.point_files()?;
    if files.is_empty() {
        return Err(Error::Validation(format!(
            "no point files in {}",
            dir.root.display()
        )));
    }
    let mut points = Vec::with_capacity(files.len());
    let mut problem = None;
    for f in &files {
        let pf = PointFile::read(f)?;
        let d = reck::decompose(&pf.matrix()?)?;
        reck::export_circuit(&d, &default_circuit_path(f))?;
        problem.get_or_insert(pf.problem()?);
        points.push(pf.to_point()?);
    }
    println!(
        "wrote {} circuits to {}",
        files.len(),
        dir.root.join("circuits").display()
    );
    print_circuit(&reck::decompose(&points[0].u)?);

    let problem = problem.expect("at least one point");
    let frame = match points[0].ansatz {
        AnsatzKind::Knill => GaugeFrame::knill(&problem.knill, &problem.encoding),
        AnsatzKind::Full => GaugeFrame::full(&problem.encoding),
    };
    points.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    match reck::angle_curves(&points, &frame) {
        Ok(table) => {
            std::fs::write(dir.angles(), table.to_csv())?;
            println!("phase spread along the curve (canonical gauge):");
            for (k, (i, j)) in table.pairs.iter().enumerate() {
                println!(
                    "  phi ({},{})  max deviation {:.3e}  std {:.3e}",
                    i + 1,
                    j + 1,
                    table.phi_max_deviation[k],
                    table.phi_std[k]
                );
            }
            println!("wrote {}", dir.angles().display());
        }
        Err(e) => eprintln!("warning: no angle table: {e}"),
    }
    Ok(ExitCode::SUCCESS)
}

struct Report {
    failures: usize,
    checked: usize,
}

impl Report {
    fn line(&mut self, ok: bool, what: &Path, detail: String) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} {}  {detail}",
            if ok { "ok  " } else { "FAIL" },
            what.display()
        );
    }
}

fn verify_point(p: &PointFile, path: &Path, report: &mut Report) -> Result<()> {
    let problem = p.problem()?;
    let u = p.matrix()?;
    let unitary = u.unitarity_error();
    let eval = problem.evaluate(&u, false)?;
    let f = eval.fidelity.unwrap_or(0.0);
    let df = (f - p.fidelity).abs().max((eval.delta() - p.delta).abs());
    let ds = (eval.success - p.success).abs();
    let mut ok = df <= VERIFY_TOL && ds <= VERIFY_TOL;
    let mut detail = format!(
        "F {f:.12} (|dF| {df:.1e})  S {:.12} (|dS| {ds:.1e})  unitarity {unitary:.1e}",
        eval.success
    );
    if p.params.len() == problem.n_params(p.ansatz) {
        let rebuilt = problem.matrix(p.ansatz, &p.params);
        let dp = rebuilt.max_abs_diff(&u);
        ok &= dp <= 1e-10;
        detail.push_str(&format!("  params {dp:.1e}"));
    } else {
        ok = false;
        detail.push_str("  params have the wrong length");
    }
    if p.ansatz == AnsatzKind::Knill && !problem.knill.matches(&u, 1e-10) {
        ok = false;
        detail.push_str("  passive rails touched");
    }
    report.line(ok, path, detail);
    Ok(())
}

fn verify_circuit(
    d: &Decomposition,
    path: &Path,
    reference: Option<&ModeMatrix>,
    report: &mut Report,
) -> Result<()> {
    let rebuilt = reck::reconstruct(d);
    let unitary = rebuilt.unitarity_error();
    let (err, against) = match reference {
        Some(u) if u.n_modes() == d.n_modes => (rebuilt.max_abs_diff(u), "point"),
        Some(_) => (f64::INFINITY, "point (mode count differs)"),
        None => (
            reck::reconstruct(&reck::decompose(&rebuilt)?).max_abs_diff(&rebuilt),
            "itself",
        ),
    };
    report.line(
        err < 1e-10 && unitary <= UNITARY_TOL,
        path,
        format!(
            "{} beamsplitters  reconstruction error vs {against} {err:.1e}  unitarity {unitary:.1e}",
            d.rotations.len()
        ),
    );
    Ok(())
}

fn paired_point(circuit: &Path) -> Option<ModeMatrix> {
    let stem = circuit.file_stem()?;
    let parent = circuit.parent()?;
    if parent.file_name()? != "circuits" {
        return None;
    }
    let point = parent
        .parent()?
        .join("points")
        .join(stem)
        .with_extension("json");
    PointFile::read(&point).ok()?.matrix().ok()
}

fn verify_file(path: &Path, report: &mut Report) -> Result<()> {
    match load_any(path)? {
        Loaded::Point(p) => verify_point(&p, path, report),
        Loaded::Circuit(d) => verify_circuit(&d, path, paired_point(path).as_ref(), report),
        Loaded::Matrix(m) => {
            let e = m.unitarity_error();
            report.line(e <= UNITARY_TOL, path, format!("unitarity {e:.1e}"));
            Ok(())
        }
    }
}

fn verify_run(dir: &RunDir, report: &mut Report) -> Result<()> {
    let points = dir.point_files()?;
    for f in points.iter().chain(dir.circuit_files()?.iter()) {
        verify_file(f, report)?;
    }
    let csv = dir.curve();
    if csv.exists() {
        let rows = run::read_curve(&csv)?;
        let mut mismatched = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let matches = PointFile::read(&dir.point(i))
                .map(|p| *row == CurveRow::from(&p.to_point().expect("valid point")))
                .unwrap_or(false);
            if !matches {
                mismatched.push(i);
            }
        }
        report.line(
            mismatched.is_empty(),
            &csv,
            if mismatched.is_empty() {
                format!("{} rows match their point files", rows.len())
            } else {
                format!("rows {mismatched:?} disagree with their point files")
            },
        );
        let fit_path = dir.fit();
        if fit_path.exists() {
            let stored: FitResult = io::read_json(&fit_path)?;
            let samples: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.converged)
                .map(|r| (r.delta, r.success))
                .collect();
            let terms = if stored.s2.is_some() { 3 } else { 2 };
            let fresh = optimize::fit_samples(&samples, terms)?;
            let diff = (fresh.s0 - stored.s0)
                .abs()
                .max((fresh.s1 - stored.s1).abs())
                .max((fresh.s2.unwrap_or(0.0) - stored.s2.unwrap_or(0.0)).abs());
            report.line(
                diff <= 1e-12,
                &fit_path,
                format!("refit difference {diff:.1e}"),
            );
        }
    }
    Ok(())
}

pub fn cmd_verify(paths: &[PathBuf]) -> Result<ExitCode> {
    let mut report = Report {
        failures: 0,
        checked: 0,
    };
    for p in paths {
        if p.is_dir() {
            verify_run(&RunDir::new(p), &mut report)?;
        } else {
            verify_file(p, &mut report)?;
        }
    }
    if report.checked == 0 {
        return Err(Error::Validation("nothing to verify".into()));
    }
    println!("{} checked, {} failed", report.checked, report.failures);
    Ok(if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> RunArgs {
        match Cli::try_parse_from(list).unwrap().command {
            Command::Optimize(a) => a,
            Command::Trace { run, .. } => run,
            _ => panic!("not a run command"),
        }
    }

    #[test]
    fn flags_override_defaults() {
        let c = args(&[
            "loqc",
            "optimize",
            "--target",
            "cnot",
            "--epsilon",
            "0.01",
            "--restarts",
            "7",
            "--seed",
            "9",
            "--ansatz",
            "full",
            "--passive",
            "2,4",
        ])
        .resolve()
        .unwrap();
        assert_eq!(c.target.name, "cnot");
        assert_eq!(c.optimizer.epsilon, 0.01);
        assert_eq!(c.optimizer.n_restarts, 7);
        assert_eq!(c.optimizer.rng_seed, 9);
        assert_eq!(c.optimizer.ansatz, AnsatzKind::Full);
        assert_eq!(c.passive_modes, vec![2, 4]);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(args(&["loqc", "optimize", "--restarts", "0"])
            .resolve()
            .is_err());
        assert!(args(&["loqc", "optimize", "--target", "swap"])
            .resolve()
            .is_err());
        assert!(args(&["loqc", "optimize", "--ancilla-in", "1,x"])
            .resolve()
            .is_err());
        assert!(args(&["loqc", "trace", "--schedule", "1:2"])
            .resolve()
            .is_err());
        assert!(Cli::try_parse_from(["loqc", "fit", "--terms", "4"]).is_err());
        assert!(Cli::try_parse_from([
            "loqc",
            "optimize",
            "--target",
            "cz",
            "--target-file",
            "x.json"
        ])
        .is_err());
    }

    #[test]
    fn circuit_path_follows_run_layout() {
        assert_eq!(
            default_circuit_path(Path::new("r/points/004.json")),
            PathBuf::from("r/circuits/004.json")
        );
        assert_eq!(
            default_circuit_path(Path::new("dir/u.json")),
            PathBuf::from("dir/u.circuit.json")
        );
    }
}
