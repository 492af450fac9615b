//! Batch front end: system files in, structured text reports out.
//!
//! Exit codes: 0 success, 1 I/O or usage, 2 parse, 3 unsupported structure,
//! 4 verification failure, 5 quantization inconsistency.

pub mod sysfile;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use hjwkb_core::dynamics::{self, DynError, RunSpec};
use hjwkb_core::hjsolve::{self, HJSolution, HjError, Trajectory};
use hjwkb_core::legendre::{self, CanonicalSystem, LegendreError};
use hjwkb_core::model::{ModelError, PhaseSpace};
use hjwkb_core::symexpr::{eval_numeric, AtomId, Expr};
use hjwkb_core::wkb::{self, WkbError};

pub use sysfile::{parse_system_file, SystemFile};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DRIFT_TOL: f64 = 1e-8;
pub const INDEPENDENCE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Legendre(#[from] LegendreError),
    #[error(transparent)]
    Hj(#[from] HjError),
    #[error(transparent)]
    Dynamics(#[from] DynError),
    #[error(transparent)]
    Wkb(#[from] WkbError),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Parse { .. } => 2,
            CliError::Model(ModelError::Parse(_)) => 2,
            CliError::Model(_) => 3,
            CliError::Legendre(LegendreError::Model(ModelError::Parse(_))) => 2,
            CliError::Legendre(_) => 3,
            CliError::Hj(HjError::NonSeparable(_)) => 3,
            CliError::Hj(_) => 4,
            CliError::Dynamics(DynError::BadGrid(_)) => 2,
            CliError::Dynamics(DynError::Hj(HjError::NonSeparable(_))) => 3,
            CliError::Dynamics(_) => 4,
            CliError::Wkb(WkbError::QuantizationInconsistency { .. }) => 5,
            CliError::Wkb(WkbError::Sampling { .. }) => 4,
            CliError::Wkb(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Solve,
    Verify,
    Quantize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Quantize => "quantize",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub csv: Option<PathBuf>,
    pub seed: u64,
    pub tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            csv: None,
            seed: wkb::DEFAULT_SEED,
            tol: DEFAULT_TOL,
        }
    }
}

/// Report text accumulated so far plus the failure, if any. The report is
/// printed in both cases.
#[derive(Debug)]
pub struct Outcome {
    pub report: String,
    pub error: Option<CliError>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, CliError::exit_code)
    }
}

struct Report {
    out: String,
}

impl Report {
    fn new() -> Self {
        Report { out: String::new() }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.out.push_str(s.as_ref());
        self.out.push('\n');
    }

    fn kv(&mut self, key: &str, value: impl AsRef<str>) {
        writeln!(self.out, "{key}: {}", value.as_ref()).unwrap();
    }
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn run_file(cmd: Command, path: &Path, opts: &Options) -> Outcome {
    let mut report = Report::new();
    let error = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
        .and_then(|src| run_source(cmd, &src, &path.display().to_string(), opts, &mut report))
        .err();
    if let Some(e) = &error {
        report.kv("error", e.to_string());
        report.kv("exit", e.exit_code().to_string());
    }
    Outcome {
        report: report.out,
        error,
    }
}

/// Runs `cmd` on the file contents `src`; `label` names the file in the report.
pub fn run_str(cmd: Command, src: &str, label: &str, opts: &Options) -> Outcome {
    let mut report = Report::new();
    let error = run_source(cmd, src, label, opts, &mut report).err();
    if let Some(e) = &error {
        report.kv("error", e.to_string());
        report.kv("exit", e.exit_code().to_string());
    }
    Outcome {
        report: report.out,
        error,
    }
}

fn run_source(cmd: Command, src: &str, label: &str, opts: &Options, r: &mut Report) -> Result<(), CliError> {
    r.kv("command", cmd.name());
    r.kv("file", label);
    let file = parse_system_file(src)?;
    let ph = file.phase().clone();
    r.kv("coords", ph.names().iter().collect::<Vec<_>>().join(" "));
    r.line(format!("L = {}", ph.show(&file.system.lagrangian)));
    r.kv(
        "defaults",
        "E[a] = 1, Ep[a] = 1, eta[a] = 0, lambda[a] = 0, t in [0, 10], h = 1e-3",
    );
    let cs = legendre::canonicalize(&file.system)?;
    match cmd {
        Command::Analyze => analyze(&cs, r),
        Command::Solve => solve(&cs, r),
        Command::Verify => verify(&file, &cs, opts, r),
        Command::Quantize => quantize(&file, &cs, opts, r),
    }
}

fn list_indices(ph: &PhaseSpace, idx: &[u32]) -> String {
    if idx.is_empty() {
        "none".into()
    } else {
        idx.iter().map(|i| ph.names().name(*i)).collect::<Vec<_>>().join(" ")
    }
}

fn analyze(cs: &CanonicalSystem, r: &mut Report) -> Result<(), CliError> {
    let ph = &cs.phase;
    let hs = &cs.hessian;
    r.line("hessian:");
    for row in &hs.matrix {
        r.line(format!("  [{}]", row.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")));
    }
    let n = hs.matrix.len();
    r.kv("rank", format!("{} of {n}", hs.rank));
    r.kv("a-indices", list_indices(ph, &hs.a_indices));
    r.kv("mu-indices", list_indices(ph, &hs.mu_indices));
    if cs.constraints.is_empty() {
        r.kv("constraints", "none");
    } else {
        r.line("constraints:");
        for c in &cs.constraints {
            r.line(format!("  {} = {}", c.generator().render(ph), ph.show(&c.function)));
        }
    }
    r.line(format!("H0 = {}", ph.show(&cs.h0)));
    let cl = legendre::classify_and_check_integrability(cs);
    if cl.brackets.is_empty() {
        r.kv("brackets", "none");
    } else {
        r.line("brackets:");
        for b in &cl.brackets {
            r.line(format!(
                "  {{{}, {}}} = {}; on surface: {}",
                b.left.render(ph),
                b.right.render(ph),
                ph.show(&b.raw),
                ph.show(&b.reduced)
            ));
        }
    }
    let kind = if cs.constraints.is_empty() {
        "unconstrained"
    } else if cl.first_class {
        "first-class"
    } else {
        "second-class"
    };
    let class = format!("{kind}; {}", if cl.integrable { "integrable" } else { "not integrable" });
    r.kv("classification", &class);
    let summary = if hs.is_regular() {
        format!("regular, rank {}, H0 = {}", hs.rank, ph.show(&cs.h0))
    } else {
        format!("singular, rank {} of {n}, {class}", hs.rank)
    };
    r.kv("summary", summary);
    Ok(())
}

fn render_trajectory(ph: &PhaseSpace, traj: &Trajectory, r: &mut Report) {
    r.line("trajectories:");
    for s in &traj.sectors {
        let a = s.index;
        r.line(format!("  {}(t) = {}", ph.render(AtomId::chain(a, 1)), ph.show(&s.d1)));
        r.line(format!("  {}(t) = {}", ph.render(AtomId::chain(a, 0)), ph.show(&s.d0)));
        r.line(format!("  {}(t) = {}", ph.render(AtomId::p(a)), ph.show(&s.p)));
        r.line(format!("  {}(t) = {}", ph.render(AtomId::pi(a)), ph.show(&s.pi)));
        r.line(format!(
            "  {}: family {}, branch {:+}",
            ph.names().name(a),
            s.family.name(),
            s.branch
        ));
    }
    for m in &traj.mu {
        r.line(format!("  {} = {}", ph.render(AtomId::p(m.index)), ph.show(&m.p)));
        r.line(format!("  {} = {}", ph.render(AtomId::pi(m.index)), ph.show(&m.pi)));
    }
}

fn solve(cs: &CanonicalSystem, r: &mut Report) -> Result<(), CliError> {
    let ph = &cs.phase;
    r.line("hjpdes:");
    for pde in hjsolve::build_hjpdes(cs) {
        r.line(format!("  {}", pde.render(ph)));
    }
    let hj = hjsolve::solve_separable(cs)?;
    r.line(format!("S = {}", hj.render()));
    for s in &hj.sectors {
        r.line(format!(
            "  sector {}: W = {}; radicand = {}",
            ph.names().name(s.index),
            ph.show(&s.w),
            ph.show(&s.integral.radicand)
        ));
    }
    let traj = hjsolve::derive_trajectories(&hj)?;
    render_trajectory(ph, &traj, r);
    r.kv("hj residual", ph.show(&hj.hj_residual()));
    for (g, res) in hj.constraint_residuals() {
        r.kv(&format!("constraint residual {}", g.render(ph)), ph.show(&res));
    }
    Ok(())
}

fn constants_with_defaults(file: &SystemFile, hj: &HJSolution) -> (BTreeMap<AtomId, f64>, bool) {
    let mut out = BTreeMap::new();
    let mut defaulted = false;
    for s in &hj.sectors {
        let a = s.index;
        for (atom, d) in [
            (AtomId::separation(a), 1.0),
            (AtomId::energy(a), 1.0),
            (AtomId::eta(a), 0.0),
            (AtomId::lambda(a), 0.0),
        ] {
            let v = file.constants.get(&atom).copied().unwrap_or_else(|| {
                defaulted = true;
                d
            });
            out.insert(atom, v);
        }
    }
    (out, defaulted)
}

fn render_constants(ph: &PhaseSpace, c: &BTreeMap<AtomId, f64>) -> String {
    c.iter().map(|(a, v)| format!("{} = {v}", ph.render(*a))).collect::<Vec<_>>().join(", ")
}

fn verify(file: &SystemFile, cs: &CanonicalSystem, opts: &Options, r: &mut Report) -> Result<(), CliError> {
    let ph = &cs.phase;
    let hj = hjsolve::solve_separable(cs)?;
    let traj = hjsolve::derive_trajectories(&hj)?;
    let (constants, defaulted) = constants_with_defaults(file, &hj);
    r.kv(
        "constants",
        format!("{}{}", render_constants(ph, &constants), if defaulted { " (defaults applied)" } else { "" }),
    );
    hj.validate_constants(&constants)?;
    let run = &file.run;
    r.kv("grid", format!("t0 = {}, t1 = {}, h = {}", run.t0, run.t1, run.h));

    let eom = dynamics::derive_eom(cs);
    r.line("equations of motion:");
    for l in eom.render() {
        r.line(format!("  {l}"));
    }
    let mut functions = BTreeMap::new();
    for m in &eom.parameters {
        let f = run.parameters.get(m).cloned().unwrap_or_else(Expr::zero);
        r.line(format!("  parameter {}(t) = {}", ph.render(*m), ph.show(&f)));
        functions.insert(*m, f);
    }
    let mut env = constants.clone();
    let at_t0 = [(AtomId::time(), run.t0)];
    for (m, f) in &functions {
        let v = eval_numeric(f, &at_t0[..]).map_err(|source| DynError::Eval { t: run.t0, source })?;
        env.insert(*m, v);
    }
    let mut initial = traj
        .state_at(&env, run.t0)
        .map_err(|source| DynError::Eval { t: run.t0, source })?;
    for m in &eom.parameters {
        initial.insert(*m, env[m]);
    }
    let spec = RunSpec {
        t0: run.t0,
        t1: run.t1,
        h: run.h,
        initial,
        parameter_functions: functions.clone(),
    };
    let numeric = dynamics::integrate(&eom, &spec)?;
    r.kv("steps", (numeric.times.len() - 1).to_string());
    let cmp = dynamics::compare(&numeric, &hj, &traj, opts.tol)?;
    r.line("deviations (max |numeric - closed form|):");
    for (atom, d) in &cmp.deviations {
        r.line(format!("  {} {}", ph.render(*atom), sci(*d)));
    }
    let mut failures = Vec::new();
    let dev_ok = cmp.passed;
    r.kv(
        "max deviation",
        format!("{} (tol {}) {}", sci(cmp.max_deviation), sci(opts.tol), verdict(dev_ok)),
    );
    if !dev_ok {
        failures.push("closed-form deviation");
    }
    let drift = dynamics::energy_drift(&numeric, cs)?;
    let drift_ok = drift < DRIFT_TOL;
    r.kv("H0 drift", format!("{} (tol {}) {}", sci(drift), sci(DRIFT_TOL), verdict(drift_ok)));
    if !drift_ok {
        failures.push("H0 drift");
    }
    for (g, v) in dynamics::constraint_violation(&numeric, cs)? {
        let ok = v < DRIFT_TOL;
        r.kv(
            &format!("constraint drift {}", g.render(ph)),
            format!("{} (tol {}) {}", sci(v), sci(DRIFT_TOL), verdict(ok)),
        );
        if !ok {
            failures.push("constraint drift");
        }
    }
    if !eom.parameters.is_empty() {
        let shifted: BTreeMap<AtomId, Expr> = functions
            .iter()
            .map(|(m, f)| {
                let probe = ph.parse(&format!("sin(t - ({}))", run.t0)).expect("probe parses");
                (*m, f + &probe)
            })
            .collect();
        let alt = dynamics::integrate(&eom, &RunSpec { parameter_functions: shifted, ..spec })?;
        let sector: Vec<AtomId> = hj
            .sectors
            .iter()
            .flat_map(|s| {
                let a = s.index;
                [AtomId::chain(a, 0), AtomId::chain(a, 1), AtomId::p(a), AtomId::pi(a)]
            })
            .collect();
        let diff = dynamics::max_difference(&numeric, &alt, &sector);
        let ok = diff < INDEPENDENCE_TOL;
        r.kv(
            "mu independence",
            format!(
                "max a-sector difference {} with parameters shifted by sin(t - t0) (tol {}) {}",
                sci(diff),
                sci(INDEPENDENCE_TOL),
                verdict(ok)
            ),
        );
        if !ok {
            failures.push("mu independence");
        }
    }
    if let Some(path) = &opts.csv {
        std::fs::write(path, numeric.to_csv()).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        r.kv("csv", format!("{} ({} rows)", path.display(), numeric.times.len()));
    }
    r.kv("verdict", verdict(failures.is_empty()));
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join(", ")))
    }
}

fn quantize(file: &SystemFile, cs: &CanonicalSystem, opts: &Options, r: &mut Report) -> Result<(), CliError> {
    let ph = &cs.phase;
    let hj = hjsolve::solve_separable(cs)?;
    let mut psi = wkb::build_wave_function(&hj)?;
    r.line("amplitude:");
    for f in &psi.factors {
        let name = if f.coordinate.level == 0 { "psi" } else { "phi" };
        r.line(format!(
            "  {name}[{}] = {}",
            ph.names().name(f.coordinate.index),
            ph.show(&f.factor)
        ));
    }
    if let Some(extra) = &file.perturb {
        psi.phase.explicit = &psi.phase.explicit + extra;
        r.kv("perturbation", format!("S + {}", ph.show(extra)));
    }
    r.line(format!("S = {}", psi.render_phase()));
    r.kv("seed", opts.seed.to_string());
    for (g, op) in cs.generators() {
        let series = wkb::apply_operator_series(&op, &psi)?;
        r.line(format!("{}: {}", g.render(ph), series.render(ph)));
    }
    let report = wkb::verify_quantization(cs, &psi, opts.seed)?;
    r.kv("points", report.points.to_string());
    let mut ok = true;
    for c in &report.checks {
        let name = c.generator.render(ph);
        let r0 = if c.semiclassical { "R0 = 0 (symbolic)" } else { "R0 = 0 (numeric)" };
        let mut line = format!("{name}: {r0}, sampled max |R0| = {}", sci(c.r0_sampled));
        match c.exact_annihilation {
            Some(true) => line.push_str("; exact annihilation"),
            Some(false) => {
                line.push_str(&format!(
                    "; annihilation fails, sampled max |R1|, |R2| = {}",
                    sci(c.higher_sampled.unwrap_or(f64::NAN))
                ));
                ok &= c.passed();
            }
            None => {
                let s = &c.series;
                line.push_str(&format!(
                    "; hbar^1: {}; hbar^2: {}",
                    s.r1.render(ph),
                    s.r2.render(ph)
                ));
            }
        }
        r.line(line);
    }
    r.kv("max sampled |R0|", sci(report.max_r0_sampled()));
    r.kv("verdict", if ok { "consistent" } else { "inconsistent" });
    if ok {
        Ok(())
    } else {
        Err(CliError::Verification("constraint operators do not annihilate the wave function".into()))
    }
}
