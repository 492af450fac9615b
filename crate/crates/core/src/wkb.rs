//! Semiclassical wave functions `Psi = A exp(i S / hbar)` and the
//! hbar-graded action of phase-space operators on them.
//!
//! Momenta act as `p0 -> (hbar/i) d/dt`, `p_i -> (hbar/i) d/dD0[q_i]`,
//! `pi_i -> (hbar/i) d/dD1[q_i]`, with coordinate factors to the left of
//! derivatives. For a term `c P_j P_k` and `L_j = A_j / A`,
//! `(c P_j P_k Psi)/Psi = c S_j S_k - i hbar c (S_jk + S_j L_k + S_k L_j) - hbar^2 c A_jk / A`,
//! and `(c P_j Psi)/Psi = c S_j - i hbar c L_j`. The exponential is never
//! expanded: `Psi` stays the pair `(A, S)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hjsolve::HJSolution;
use crate::legendre::{CanonicalSystem, Generator};
use crate::model::PhaseSpace;
use crate::symexpr::{differentiate, eval_numeric, q, substitute, AtomId, EvalError, Expr, Node, Role};

/// Default sampling seed; reports record the seed actually used.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;
pub const SAMPLE_POINTS: usize = 1000;
pub const SAMPLE_TOL: f64 = 1e-10;
/// Distance kept from the boundary of the classically allowed region.
pub const SAMPLE_MARGIN: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum WkbError {
    #[error("dS/d{coord} vanishes identically, amplitude undefined")]
    ZeroGradient { coord: String },
    #[error("amplitude factor for {coord} depends on {atom}")]
    AmplitudeDependence { coord: String, atom: String },
    #[error("momentum {momentum} enters {term} with degree {degree} > 2")]
    MomentumDegree { momentum: String, term: String, degree: u32 },
    #[error("momentum {momentum} enters {term} non-polynomially")]
    NonPolynomial { momentum: String, term: String },
    #[error("ordering ambiguity: {momentum} multiplies {term}, which depends on {coordinate}")]
    OrderingAmbiguity { momentum: String, coordinate: String, term: String },
    #[error("could not draw classically allowed sample points ({accepted} of {wanted} after {tries} tries)")]
    Sampling { accepted: usize, wanted: usize, tries: usize },
    #[error("quantization inconsistency for {generator}: R0 = {r0} does not vanish, sampled max |R0| = {sampled:e}")]
    QuantizationInconsistency { generator: String, r0: String, sampled: f64 },
}

/// `re + i im` with symbolic parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CExpr {
    pub re: Expr,
    pub im: Expr,
}

impl CExpr {
    pub fn real(re: Expr) -> Self {
        CExpr { re, im: Expr::zero() }
    }

    pub fn imaginary(im: Expr) -> Self {
        CExpr { re: Expr::zero(), im }
    }

    pub fn zero() -> Self {
        CExpr::real(Expr::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn render(&self, phase: &PhaseSpace) -> String {
        match (self.re.is_zero(), self.im.is_zero()) {
            (true, true) => "0".into(),
            (false, true) => phase.show(&self.re),
            (true, false) => format!("i*({})", phase.show(&self.im)),
            (false, false) => format!("{} + i*({})", phase.show(&self.re), phase.show(&self.im)),
        }
    }

    /// `max(|re|, |im|)` at a point.
    pub fn magnitude(&self, env: &BTreeMap<AtomId, f64>) -> Result<f64, EvalError> {
        Ok(eval_numeric(&self.re, env)?.abs().max(eval_numeric(&self.im, env)?.abs()))
    }
}

/// Explicit part of `S` plus one `int(integrand, variable)` per sector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase {
    pub explicit: Expr,
    pub integrals: Vec<(AtomId, Expr)>,
}

impl Phase {
    pub fn from_solution(hj: &HJSolution) -> Self {
        Phase {
            explicit: hj.explicit(),
            integrals: hj.sectors.iter().map(|s| (s.integral.variable, s.integral.integrand())).collect(),
        }
    }

    /// `dS/d(atom)` for coordinates and `t`.
    pub fn gradient(&self, atom: AtomId) -> Expr {
        let mut parts = vec![differentiate(&self.explicit, atom)];
        parts.extend(self.integrals.iter().filter(|(v, _)| *v == atom).map(|(_, f)| f.clone()));
        Expr::add(parts)
    }
}

/// `psi_a = p_a^{-1/2}` or `phi_a = pi_a^{-1/2}` with the momentum written
/// as an HJ gradient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmplitudeFactor {
    pub coordinate: AtomId,
    pub momentum: Expr,
    pub factor: Expr,
}

#[derive(Clone, Debug)]
pub struct WaveFunction {
    pub phase_space: PhaseSpace,
    pub factors: Vec<AmplitudeFactor>,
    pub amplitude: Expr,
    pub phase: Phase,
    /// Quantities that must stay positive in the classically allowed region.
    pub domain: Vec<Expr>,
    /// Constants that appear in `S`.
    pub constants: Vec<AtomId>,
}

impl WaveFunction {
    /// A wave function with a given amplitude and phase; the domain is
    /// unrestricted.
    pub fn from_parts(phase_space: PhaseSpace, amplitude: Expr, phase: Phase) -> Self {
        let constants = constants_in(&[&amplitude, &phase.explicit]);
        WaveFunction {
            phase_space,
            factors: Vec::new(),
            amplitude,
            phase,
            domain: Vec::new(),
            constants,
        }
    }

    /// `S` as text.
    pub fn render_phase(&self) -> String {
        let mut out = self.phase_space.show(&self.phase.explicit);
        for (v, f) in &self.phase.integrals {
            out.push_str(&format!(" + int({}, {})", self.phase_space.show(f), self.phase_space.render(*v)));
        }
        out
    }
}

fn constants_in(exprs: &[&Expr]) -> Vec<AtomId> {
    let mut out: Vec<AtomId> = exprs
        .iter()
        .flat_map(|e| e.atoms())
        .filter(|a| matches!(a.role, Role::Separation | Role::Energy))
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn build_wave_function(hj: &HJSolution) -> Result<WaveFunction, WkbError> {
    let ps = hj.phase().clone();
    let phase = Phase::from_solution(hj);
    let mu = &hj.canonical.hessian.mu_indices;
    let mut factors = Vec::new();
    for s in &hj.sectors {
        for level in [0u8, 1] {
            let coordinate = AtomId::chain(s.index, level);
            let momentum = phase.gradient(coordinate);
            if momentum.is_zero() {
                return Err(WkbError::ZeroGradient { coord: ps.render(coordinate) });
            }
            let foreign = momentum.atoms().into_iter().find(|a| {
                a.role == Role::Time || a.role == Role::Hbar || (a.is_chain() && mu.contains(&a.index))
            });
            if let Some(atom) = foreign {
                return Err(WkbError::AmplitudeDependence {
                    coord: ps.render(coordinate),
                    atom: ps.render(atom),
                });
            }
            let factor = Expr::pow(momentum.clone(), q(-1, 2));
            factors.push(AmplitudeFactor { coordinate, momentum, factor });
        }
    }
    let amplitude = Expr::mul(factors.iter().map(|f| f.factor.clone()));
    let mut domain: Vec<Expr> = hj.sectors.iter().map(|s| s.integral.radicand.clone()).collect();
    domain.extend(factors.iter().map(|f| f.momentum.clone()));
    let mut constants = constants_in(&[&amplitude, &phase.explicit]);
    for s in &hj.sectors {
        constants.push(AtomId::separation(s.index));
        constants.push(AtomId::energy(s.index));
    }
    constants.sort();
    constants.dedup();
    Ok(WaveFunction {
        phase_space: ps,
        factors,
        amplitude,
        phase,
        domain,
        constants,
    })
}

/// `(op Psi)/Psi = R0 + hbar R1 + hbar^2 R2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HbarSeries {
    pub r0: CExpr,
    pub r1: CExpr,
    pub r2: CExpr,
}

impl HbarSeries {
    pub fn coefficients(&self) -> [&CExpr; 3] {
        [&self.r0, &self.r1, &self.r2]
    }

    pub fn render(&self, phase: &PhaseSpace) -> String {
        format!(
            "R0 = {}; R1 = {}; R2 = {}",
            self.r0.render(phase),
            self.r1.render(phase),
            self.r2.render(phase)
        )
    }
}

/// Coordinate a momentum differentiates.
fn derivative_variable(momentum: AtomId) -> AtomId {
    momentum.conjugate().expect("momenta have conjugates")
}

/// Momentum powers of a canonical term and the remaining coordinate factor.
fn split_term(term: &Expr, ps: &PhaseSpace) -> Result<(Expr, Vec<AtomId>), WkbError> {
    let mut momenta = Vec::new();
    let mut coeff = Vec::new();
    for f in term.factors() {
        let (base, n) = match f.node() {
            Node::Atom(a) if a.is_momentum() => (*a, 1),
            Node::Pow(b, e) if b.as_atom().is_some_and(|a| a.is_momentum()) && e.is_integer() && *e.numer() > 0 => {
                (b.as_atom().unwrap(), *e.numer() as u32)
            }
            _ => {
                if let Some(m) = f.atoms().into_iter().find(|a| a.is_momentum()) {
                    return Err(WkbError::NonPolynomial {
                        momentum: ps.render(m),
                        term: ps.show(term),
                    });
                }
                coeff.push(f);
                continue;
            }
        };
        for _ in 0..n {
            momenta.push(base);
        }
    }
    if momenta.len() > 2 {
        return Err(WkbError::MomentumDegree {
            momentum: ps.render(momenta[0]),
            term: ps.show(term),
            degree: momenta.len() as u32,
        });
    }
    let c = Expr::mul(coeff);
    for m in &momenta {
        let x = derivative_variable(*m);
        if c.contains(x) {
            return Err(WkbError::OrderingAmbiguity {
                momentum: ps.render(*m),
                coordinate: ps.render(x),
                term: ps.show(term),
            });
        }
    }
    Ok((c, momenta))
}

pub fn apply_operator_series(op: &Expr, psi: &WaveFunction) -> Result<HbarSeries, WkbError> {
    let ps = &psi.phase_space;
    let a = &psi.amplitude;
    let grad = |m: AtomId| psi.phase.gradient(derivative_variable(m));
    let log_grad = |m: AtomId| &differentiate(a, derivative_variable(m)) / a;
    let mut r0 = Vec::new();
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    for term in op.terms() {
        let (c, momenta) = split_term(&term, ps)?;
        match momenta.as_slice() {
            [] => r0.push(c),
            [j] => {
                r0.push(&c * &grad(*j));
                r1.push(-(&c * &log_grad(*j)));
            }
            [j, k] => {
                let (sj, sk) = (grad(*j), grad(*k));
                let sjk = differentiate(&sj, derivative_variable(*k));
                r0.push(&c * &(&sj * &sk));
                r1.push(-(&c * &(sjk + &sj * &log_grad(*k) + &sk * &log_grad(*j))));
                let ajk = differentiate(&differentiate(a, derivative_variable(*j)), derivative_variable(*k));
                r2.push(-(&c * &(&ajk / a)));
            }
            _ => unreachable!("degree checked in split_term"),
        }
    }
    Ok(HbarSeries {
        r0: CExpr::real(Expr::add(r0)),
        r1: CExpr::imaginary(Expr::add(r1)),
        r2: CExpr::real(Expr::add(r2)),
    })
}

/// Generator-by-generator outcome.
#[derive(Clone, Debug)]
pub struct OperatorCheck {
    pub generator: Generator,
    pub operator: Expr,
    pub series: HbarSeries,
    /// `R0` is structurally zero.
    pub semiclassical: bool,
    /// Max `|R0|` over the sample.
    pub r0_sampled: f64,
    /// Constraint operators only: every order vanishes structurally.
    pub exact_annihilation: Option<bool>,
    /// Constraint operators only: max over the sample of `|R1|`, `|R2|`.
    pub higher_sampled: Option<f64>,
}

impl OperatorCheck {
    pub fn passed(&self) -> bool {
        let r0_ok = self.semiclassical || self.r0_sampled < SAMPLE_TOL;
        let rest_ok = match (self.exact_annihilation, self.higher_sampled) {
            (Some(exact), Some(s)) => exact || s < SAMPLE_TOL,
            _ => true,
        };
        r0_ok && rest_ok
    }
}

#[derive(Clone, Debug)]
pub struct WkbReport {
    pub seed: u64,
    pub points: usize,
    pub checks: Vec<OperatorCheck>,
}

impl WkbReport {
    pub fn check(&self, g: Generator) -> Option<&OperatorCheck> {
        self.checks.iter().find(|c| c.generator == g)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(OperatorCheck::passed)
    }

    pub fn max_r0_sampled(&self) -> f64 {
        self.checks.iter().map(|c| c.r0_sampled).fold(0.0, f64::max)
    }
}

/// Seeded points of the classically allowed region with `E_a = E'_a = 1`:
/// every domain expression is at least [`SAMPLE_MARGIN`].
pub fn sample_points(psi: &WaveFunction, n: usize, seed: u64) -> Result<Vec<BTreeMap<AtomId, f64>>, WkbError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut free: Vec<AtomId> = Vec::new();
    for i in psi.phase_space.indices() {
        free.push(AtomId::chain(i, 0));
        free.push(AtomId::chain(i, 1));
    }
    let max_tries = 200 * n.max(1);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < max_tries {
        tries += 1;
        let mut env: BTreeMap<AtomId, f64> = psi.constants.iter().map(|c| (*c, 1.0)).collect();
        env.insert(AtomId::time(), rng.gen_range(0.0..10.0));
        for a in &free {
            env.insert(*a, rng.gen_range(-3.0..3.0));
        }
        let allowed = psi
            .domain
            .iter()
            .all(|d| eval_numeric(d, &env).is_ok_and(|v| v >= SAMPLE_MARGIN));
        if allowed {
            out.push(env);
        }
    }
    if out.len() < n {
        return Err(WkbError::Sampling {
            accepted: out.len(),
            wanted: n,
            tries,
        });
    }
    Ok(out)
}

/// Largest magnitude over the points; evaluation failures count as infinite.
fn sampled_max(e: &CExpr, points: &[BTreeMap<AtomId, f64>]) -> f64 {
    points
        .iter()
        .map(|p| e.magnitude(p).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// Applies `H'0` and every constraint operator to `Psi`. `R0` must vanish
/// for each; constraint operators must also annihilate `Psi` at every order.
pub fn verify_quantization(cs: &CanonicalSystem, psi: &WaveFunction, seed: u64) -> Result<WkbReport, WkbError> {
    let points = sample_points(psi, SAMPLE_POINTS, seed)?;
    let mut checks = Vec::new();
    for (generator, operator) in cs.generators() {
        let series = apply_operator_series(&operator, psi)?;
        let semiclassical = series.r0.is_zero();
        let r0_sampled = sampled_max(&series.r0, &points);
        if !semiclassical && !(r0_sampled < SAMPLE_TOL) {
            return Err(WkbError::QuantizationInconsistency {
                generator: generator.render(&cs.phase),
                r0: series.r0.render(&cs.phase),
                sampled: r0_sampled,
            });
        }
        let (exact_annihilation, higher_sampled) = match generator {
            Generator::Hamiltonian => (None, None),
            _ => (
                Some(series.r1.is_zero() && series.r2.is_zero()),
                Some(sampled_max(&series.r1, &points).max(sampled_max(&series.r2, &points))),
            ),
        };
        checks.push(OperatorCheck {
            generator,
            operator,
            series,
            semiclassical,
            r0_sampled,
            exact_annihilation,
            higher_sampled,
        });
    }
    Ok(WkbReport {
        seed,
        points: points.len(),
        checks,
    })
}

/// `R0` with momenta replaced by HJ gradients of the underlying phase.
pub fn classical_limit(op: &Expr, psi: &WaveFunction) -> Expr {
    let mut b = BTreeMap::new();
    b.insert(AtomId::p0(), psi.phase.gradient(AtomId::time()));
    for i in psi.phase_space.indices() {
        b.insert(AtomId::p(i), psi.phase.gradient(AtomId::chain(i, 0)));
        b.insert(AtomId::pi(i), psi.phase.gradient(AtomId::chain(i, 1)));
    }
    substitute(op, &b)
}

#[cfg(test)]
mod tests;
