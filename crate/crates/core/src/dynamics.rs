//! Total-differential equations of motion and their numeric integration.
//!
//! For each evolving variable `y`,
//! `dy = {y, H0} dt + sum_mu [{y, H'^p_mu} dD0[q_mu] + {y, H'^pi_mu} dD1[q_mu]]`,
//! which reproduces `dD0[q_a] = dH'/dp_a`, `-dp_i = dH'/dD0[q_i]` and the
//! level-1 pair. The constrained coordinates `D0[q_mu]`, `D1[q_mu]` are not
//! evolved: they are parameters given as functions of `t` (frozen at their
//! initial values by default). For first-class systems the a-sector results
//! must not depend on that choice.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::hjsolve::{HJSolution, HjError, Trajectory};
use crate::legendre::{CanonicalSystem, Generator};
use crate::model::PhaseSpace;
use crate::symexpr::{differentiate, eval_numeric, AtomId, EvalError, Expr};

#[derive(Debug, Error)]
pub enum DynError {
    #[error("initial state lacks {0}")]
    MissingInitial(String),
    #[error("invalid time grid: {0}")]
    BadGrid(String),
    #[error("evaluation failed at t = {t}: {source}")]
    Eval { t: f64, source: EvalError },
    #[error(transparent)]
    Hj(#[from] HjError),
}

/// `dy/dt = dt_part + sum_mu coefficient_mu * d(mu)/dt`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rate {
    pub dt_part: Expr,
    pub parameter_terms: BTreeMap<AtomId, Expr>,
}

#[derive(Clone, Debug)]
pub struct EomSystem {
    pub phase: PhaseSpace,
    /// a-sector `D0`, `D1` and every `p_i`, `pi_i`, in atom order.
    pub evolving: Vec<AtomId>,
    /// mu-sector `D0`, `D1`.
    pub parameters: Vec<AtomId>,
    pub rates: BTreeMap<AtomId, Rate>,
}

impl EomSystem {
    /// Lines such as `dpi[q]/dt = -p[q] - D1[q]`.
    pub fn render(&self) -> Vec<String> {
        let ph = &self.phase;
        self.evolving
            .iter()
            .map(|y| {
                let rate = &self.rates[y];
                let mut rhs = ph.show(&rate.dt_part);
                for (m, c) in &rate.parameter_terms {
                    let coeff = ph.show(c);
                    let term = if c.is_one() {
                        format!("d{}/dt", ph.render(*m))
                    } else {
                        format!("({coeff})*d{}/dt", ph.render(*m))
                    };
                    if rhs == "0" {
                        rhs = term;
                    } else {
                        rhs = format!("{rhs} + {term}");
                    }
                }
                format!("d{}/dt = {rhs}", ph.render(*y))
            })
            .collect()
    }
}

fn generator_coordinate(g: Generator) -> Option<AtomId> {
    match g {
        Generator::Hamiltonian => None,
        Generator::P(m) => Some(AtomId::chain(m, 0)),
        Generator::Pi(m) => Some(AtomId::chain(m, 1)),
    }
}

/// `{y, G}` for a canonical atom `y`.
fn bracket_with_atom(y: AtomId, g: &Expr) -> Expr {
    match y.conjugate() {
        Some(x) if y.is_momentum() => -differentiate(g, x),
        _ => {
            let p = if y.level == 0 { AtomId::p(y.index) } else { AtomId::pi(y.index) };
            differentiate(g, p)
        }
    }
}

pub fn derive_eom(cs: &CanonicalSystem) -> EomSystem {
    let mut evolving = Vec::new();
    for &a in &cs.hessian.a_indices {
        evolving.push(AtomId::chain(a, 0));
        evolving.push(AtomId::chain(a, 1));
    }
    for i in cs.phase.indices() {
        evolving.push(AtomId::p(i));
        evolving.push(AtomId::pi(i));
    }
    evolving.sort();
    let parameters: Vec<AtomId> = cs
        .hessian
        .mu_indices
        .iter()
        .flat_map(|&m| [AtomId::chain(m, 0), AtomId::chain(m, 1)])
        .collect();
    let mut rates = BTreeMap::new();
    for &y in &evolving {
        let dt_part = bracket_with_atom(y, &cs.h0);
        let mut parameter_terms = BTreeMap::new();
        for c in &cs.constraints {
            let coeff = bracket_with_atom(y, &c.function);
            if !coeff.is_zero() {
                let m = generator_coordinate(c.generator()).expect("constraints carry a coordinate");
                parameter_terms.insert(m, coeff);
            }
        }
        rates.insert(y, Rate { dt_part, parameter_terms });
    }
    EomSystem {
        phase: cs.phase.clone(),
        evolving,
        parameters,
        rates,
    }
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
    /// Values at `t0` for every evolving atom, and for any parameter without
    /// an explicit function.
    pub initial: BTreeMap<AtomId, f64>,
    /// Parameter functions of `t` for mu-sector coordinates.
    pub parameter_functions: BTreeMap<AtomId, Expr>,
}

#[derive(Clone, Debug)]
pub struct NumericRun {
    pub phase: PhaseSpace,
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
    /// Recorded columns: evolving atoms then parameters.
    pub atoms: Vec<AtomId>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl NumericRun {
    pub fn column(&self, atom: AtomId) -> Option<usize> {
        self.atoms.iter().position(|a| *a == atom)
    }

    pub fn state_map(&self, k: usize) -> BTreeMap<AtomId, f64> {
        let mut m: BTreeMap<AtomId, f64> = self.atoms.iter().copied().zip(self.states[k].iter().copied()).collect();
        m.insert(AtomId::time(), self.times[k]);
        m
    }

    /// `t,<atoms>` header and one row per grid point, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for a in &self.atoms {
            out.push(',');
            out.push_str(&self.phase.render(*a));
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.states) {
            write!(out, "{t:.16e}").unwrap();
            for v in row {
                write!(out, ",{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Parameter values and rates at `t`.
struct Parameters {
    functions: Vec<(AtomId, Expr, Expr)>,
}

impl Parameters {
    fn new(eom: &EomSystem, spec: &RunSpec) -> Result<Self, DynError> {
        let mut functions = Vec::new();
        for &m in &eom.parameters {
            let f = match spec.parameter_functions.get(&m) {
                Some(f) => f.clone(),
                None => {
                    let v = spec
                        .initial
                        .get(&m)
                        .ok_or_else(|| DynError::MissingInitial(eom.phase.render(m)))?;
                    Expr::num(f64_to_q(*v))
                }
            };
            let rate = differentiate(&f, AtomId::time());
            functions.push((m, f, rate));
        }
        Ok(Parameters { functions })
    }

    fn values(&self, t: f64) -> Result<Vec<(AtomId, f64, f64)>, EvalError> {
        let env = [(AtomId::time(), t)];
        self.functions
            .iter()
            .map(|(m, f, r)| Ok((*m, eval_numeric(f, &env[..])?, eval_numeric(r, &env[..])?)))
            .collect()
    }
}

/// Exact rational for a finite double.
fn f64_to_q(v: f64) -> crate::symexpr::Q {
    num_rational::Ratio::<i128>::approximate_float(v).unwrap_or_else(|| crate::symexpr::q(0, 1))
}

/// Classical fixed-step fourth-order Runge-Kutta on the grid
/// `t_k = t0 + k h`, `k = 0..=n`, `n = (t1 - t0)/h`.
pub fn integrate(eom: &EomSystem, spec: &RunSpec) -> Result<NumericRun, DynError> {
    if !(spec.h > 0.0) || !spec.h.is_finite() || !(spec.t1 > spec.t0) {
        return Err(DynError::BadGrid(format!("need h > 0 and t1 > t0, got h = {}", spec.h)));
    }
    let span = spec.t1 - spec.t0;
    let n = (span / spec.h).round();
    if n < 1.0 || (n * spec.h - span).abs() > 1e-9 * span.max(1.0) {
        return Err(DynError::BadGrid(format!("h = {} does not divide [{}, {}]", spec.h, spec.t0, spec.t1)));
    }
    let n = n as usize;
    let params = Parameters::new(eom, spec)?;
    let mut y: Vec<f64> = Vec::with_capacity(eom.evolving.len());
    for a in &eom.evolving {
        y.push(
            *spec
                .initial
                .get(a)
                .ok_or_else(|| DynError::MissingInitial(eom.phase.render(*a)))?,
        );
    }
    let rates: Vec<&Rate> = eom.evolving.iter().map(|a| &eom.rates[a]).collect();
    let field = |t: f64, y: &[f64]| -> Result<Vec<f64>, DynError> {
        let wrap = |source| DynError::Eval { t, source };
        let pv = params.values(t).map_err(wrap)?;
        let mut env: BTreeMap<AtomId, f64> = eom.evolving.iter().copied().zip(y.iter().copied()).collect();
        env.insert(AtomId::time(), t);
        for (m, v, _) in &pv {
            env.insert(*m, *v);
        }
        rates
            .iter()
            .map(|r| {
                let mut d = eval_numeric(&r.dt_part, &env).map_err(wrap)?;
                for (m, c) in &r.parameter_terms {
                    let dm = pv.iter().find(|(a, _, _)| a == m).map(|x| x.2).unwrap_or(0.0);
                    d += eval_numeric(c, &env).map_err(wrap)? * dm;
                }
                Ok(d)
            })
            .collect()
    };
    let record = |t: f64, y: &[f64]| -> Result<Vec<f64>, DynError> {
        let mut row = y.to_vec();
        let pv = params.values(t).map_err(|source| DynError::Eval { t, source })?;
        row.extend(pv.iter().map(|x| x.1));
        Ok(row)
    };
    let h = spec.h;
    let mut times = vec![spec.t0];
    let mut states = vec![record(spec.t0, &y)?];
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for step in 0..n {
        let t = spec.t0 + step as f64 * h;
        let k1 = field(t, &y)?;
        let k2 = field(t + h / 2.0, &axpy(&y, &k1, h / 2.0))?;
        let k3 = field(t + h / 2.0, &axpy(&y, &k2, h / 2.0))?;
        let k4 = field(t + h, &axpy(&y, &k3, h))?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = spec.t0 + (step + 1) as f64 * h;
        times.push(t_next);
        states.push(record(t_next, &y)?);
    }
    let mut atoms = eom.evolving.clone();
    atoms.extend(eom.parameters.iter().copied());
    Ok(NumericRun {
        phase: eom.phase.clone(),
        t0: spec.t0,
        t1: spec.t1,
        h,
        atoms,
        times,
        states,
    })
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    /// Constants solved from the run's initial state.
    pub constants: BTreeMap<AtomId, f64>,
    /// Max absolute deviation per compared variable.
    pub deviations: BTreeMap<AtomId, f64>,
    pub max_deviation: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Run versus closed-form trajectory with constants fixed from the run's
/// state at `t0`.
pub fn compare(run: &NumericRun, hj: &HJSolution, traj: &Trajectory, tol: f64) -> Result<ComparisonReport, DynError> {
    if run.phase != *hj.phase() {
        return Err(HjError::ConstantsUnsolvable("run and trajectory describe different systems".into()).into());
    }
    let constants = hj.constants_from_state(&run.state_map(0), run.t0)?;
    hj.validate_constants(&constants)?;
    let mut deviations: BTreeMap<AtomId, f64> = BTreeMap::new();
    for k in 0..run.times.len() {
        let t = run.times[k];
        let mut env = constants.clone();
        let state = run.state_map(k);
        for m in &hj.canonical.hessian.mu_indices {
            for atom in [AtomId::chain(*m, 0), AtomId::chain(*m, 1)] {
                if let Some(v) = state.get(&atom) {
                    env.insert(atom, *v);
                }
            }
        }
        let closed = traj.state_at(&env, t).map_err(|source| DynError::Eval { t, source })?;
        for (atom, want) in closed {
            if let Some(got) = state.get(&atom) {
                let d = deviations.entry(atom).or_insert(0.0);
                *d = d.max((got - want).abs());
            }
        }
    }
    let max_deviation = deviations.values().copied().fold(0.0, f64::max);
    Ok(ComparisonReport {
        constants,
        deviations,
        max_deviation,
        tol,
        passed: max_deviation < tol,
    })
}

fn eval_along(run: &NumericRun, e: &Expr) -> Result<Vec<f64>, DynError> {
    (0..run.times.len())
        .map(|k| {
            eval_numeric(e, &run.state_map(k)).map_err(|source| DynError::Eval {
                t: run.times[k],
                source,
            })
        })
        .collect()
}

/// `max_k |H0(t_k) - H0(t0)|`.
pub fn energy_drift(run: &NumericRun, cs: &CanonicalSystem) -> Result<f64, DynError> {
    let values = eval_along(run, &cs.h0)?;
    Ok(values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max))
}

/// `max_k |G(t_k)|` for each constraint function `G`.
pub fn constraint_violation(run: &NumericRun, cs: &CanonicalSystem) -> Result<BTreeMap<Generator, f64>, DynError> {
    let mut out = BTreeMap::new();
    for c in &cs.constraints {
        let values = eval_along(run, &c.function)?;
        out.insert(c.generator(), values.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    Ok(out)
}

/// Largest difference between two runs on the given atoms.
pub fn max_difference(a: &NumericRun, b: &NumericRun, atoms: &[AtomId]) -> f64 {
    let mut worst = 0.0f64;
    for atom in atoms {
        if let (Some(i), Some(j)) = (a.column(*atom), b.column(*atom)) {
            for (ra, rb) in a.states.iter().zip(&b.states) {
                worst = worst.max((ra[i] - rb[j]).abs());
            }
        }
    }
    worst
}
