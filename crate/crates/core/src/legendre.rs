//! Singularity analysis and the passage to phase space.
//!
//! The supported class is Lagrangians whose Hessian over the level-2 atoms is
//! constant. Its rank splits the coordinates into a-indices, whose
//! accelerations are solved from `pi_a = dL/dD2[q_a]`, and mu-indices, whose
//! momenta become primary constraints `H'^p_mu = p_mu + H^p_mu` and
//! `H'^pi_mu = pi_mu + H^pi_mu`.
//!
//! The Hamiltonian is
//! `H0 = -L|_{D2[q_a] = w_a} + p_a D1[q_a] + pi_a w_a - D1[q_mu] H^p_mu - D2[q_mu] H^pi_mu`,
//! where `L` keeps every coordinate and only the a-sector accelerations are
//! replaced. For the class handled here it depends only on level-0/1 atoms,
//! `p_a`, `pi_a` and `t`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::{shift_time_derivative, LagrangianSystem, ModelError, PhaseSpace};
use crate::symexpr::{differentiate, substitute, AtomId, Expr, Role, Q};

#[derive(Debug, Error)]
pub enum LegendreError {
    #[error("Hessian entry W[{i}][{j}] = {entry} is not constant")]
    NonConstantHessian { i: u32, j: u32, entry: String },
    #[error("acceleration system for the a-sector is singular")]
    AccelerationUnsolvable,
    #[error("unsupported constraint for {coord}: {expr} still contains {what}")]
    UnsupportedConstraint { coord: String, expr: String, what: &'static str },
    #[error("Hamiltonian is not a phase-space function, found {atom} in {expr}")]
    ImpureHamiltonian { atom: String, expr: String },
    #[error("Poisson bracket needs phase-space arguments, found {0}")]
    NotPhaseSpace(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Hessian over level-2 atoms with its rank split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HessianReport {
    pub matrix: Vec<Vec<Q>>,
    pub rank: usize,
    pub a_indices: Vec<u32>,
    pub mu_indices: Vec<u32>,
}

impl HessianReport {
    pub fn entry(&self, i: u32, j: u32) -> Q {
        self.matrix[i as usize - 1][j as usize - 1]
    }

    pub fn is_regular(&self) -> bool {
        self.mu_indices.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintKind {
    /// `H'^p_mu = p_mu + H^p_mu`.
    P,
    /// `H'^pi_mu = pi_mu + H^pi_mu`.
    Pi,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub index: u32,
    /// `H^p_mu` or `H^pi_mu`, free of momenta.
    pub h: Expr,
    /// `p_mu + H^p_mu` or `pi_mu + H^pi_mu`.
    pub function: Expr,
}

impl Constraint {
    /// The momentum atom this constraint fixes.
    pub fn momentum(&self) -> AtomId {
        match self.kind {
            ConstraintKind::P => AtomId::p(self.index),
            ConstraintKind::Pi => AtomId::pi(self.index),
        }
    }

    /// The coordinate conjugate to [`Constraint::momentum`].
    pub fn coordinate(&self) -> AtomId {
        self.momentum().conjugate().expect("momenta have conjugates")
    }

    pub fn generator(&self) -> Generator {
        match self.kind {
            ConstraintKind::P => Generator::P(self.index),
            ConstraintKind::Pi => Generator::Pi(self.index),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CanonicalSystem {
    pub phase: PhaseSpace,
    pub lagrangian: Expr,
    pub hessian: HessianReport,
    /// `D2[q_a] = w_a` per a-index.
    pub accelerations: BTreeMap<u32, Expr>,
    /// On-shell `p_i` from the Lagrangian, display only; may hold level-3 atoms.
    pub on_shell_p: BTreeMap<u32, Expr>,
    /// On-shell `pi_i = dL/dD2[q_i]`, display only.
    pub on_shell_pi: BTreeMap<u32, Expr>,
    /// `H'^p_mu` then `H'^pi_mu` for each mu-index, in index order.
    pub constraints: Vec<Constraint>,
    pub h0: Expr,
}

impl CanonicalSystem {
    /// `H'0 = p0 + H0`.
    pub fn extended_h0(&self) -> Expr {
        self.phase.p0() + &self.h0
    }

    pub fn constraint(&self, kind: ConstraintKind, index: u32) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.kind == kind && c.index == index)
    }

    /// The generators `H'0, H'^p_mu, H'^pi_mu` in report order.
    pub fn generators(&self) -> Vec<(Generator, Expr)> {
        let mut out = vec![(Generator::Hamiltonian, self.extended_h0())];
        out.extend(self.constraints.iter().map(|c| (c.generator(), c.function.clone())));
        out
    }

    /// Constraint-surface substitutions `p_mu -> -H^p_mu`, `pi_mu -> -H^pi_mu`.
    pub fn surface_bindings(&self) -> BTreeMap<AtomId, Expr> {
        self.constraints.iter().map(|c| (c.momentum(), -&c.h)).collect()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.h0.contains(AtomId::time())
    }
}

/// Names for the generators of the canonical equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    Hamiltonian,
    P(u32),
    Pi(u32),
}

impl Generator {
    pub fn render(&self, phase: &PhaseSpace) -> String {
        match self {
            Generator::Hamiltonian => "H0'".to_string(),
            Generator::P(i) => format!("Hp'[{}]", phase.names().name(*i)),
            Generator::Pi(i) => format!("Hpi'[{}]", phase.names().name(*i)),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Hamiltonian => write!(f, "H0'"),
            Generator::P(i) => write!(f, "Hp'[q{i}]"),
            Generator::Pi(i) => write!(f, "Hpi'[q{i}]"),
        }
    }
}

pub fn hessian_and_rank(sys: &LagrangianSystem) -> Result<HessianReport, LegendreError> {
    let n = sys.phase.dim();
    let mut matrix = vec![vec![Q::zero(); n as usize]; n as usize];
    for i in 1..=n {
        let di = differentiate(&sys.lagrangian, AtomId::chain(i, 2));
        for j in 1..=n {
            let entry = differentiate(&di, AtomId::chain(j, 2));
            let value = entry.as_num().ok_or_else(|| LegendreError::NonConstantHessian {
                i,
                j,
                entry: sys.phase.show(&entry),
            })?;
            matrix[i as usize - 1][j as usize - 1] = value;
        }
    }
    let a_indices = independent_rows(&matrix);
    let mu_indices = (1..=n).filter(|i| !a_indices.contains(i)).collect();
    Ok(HessianReport {
        rank: a_indices.len(),
        matrix,
        a_indices,
        mu_indices,
    })
}

/// Greedy basis of the row space: row `i` joins when it is independent of the
/// rows already chosen, so the result is the lexicographically smallest
/// full-rank index set.
fn independent_rows(matrix: &[Vec<Q>]) -> Vec<u32> {
    // echelon rows paired with their pivot column
    let mut basis: Vec<(usize, Vec<Q>)> = Vec::new();
    let mut chosen = Vec::new();
    for (i, row) in matrix.iter().enumerate() {
        let mut r = row.clone();
        for (pivot, b) in &basis {
            if !r[*pivot].is_zero() {
                let f = r[*pivot] / b[*pivot];
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= f * *y;
                }
            }
        }
        if let Some(pivot) = r.iter().position(|x| !x.is_zero()) {
            basis.push((pivot, r));
            chosen.push(i as u32 + 1);
        }
    }
    chosen
}

/// Inverse by Gauss-Jordan elimination, `None` when singular.
fn invert(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = Q::one() / a[col][col];
        for x in a[col].iter_mut() {
            *x *= inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x -= f * *y;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn legendre_transform(sys: &LagrangianSystem, h: &HessianReport) -> Result<CanonicalSystem, LegendreError> {
    let phase = &sys.phase;
    let l = &sys.lagrangian;
    let d2 = |i: u32| AtomId::chain(i, 2);
    let dl_d2: BTreeMap<u32, Expr> = phase.indices().map(|i| (i, differentiate(l, d2(i)))).collect();
    let dl_d1: BTreeMap<u32, Expr> = phase.indices().map(|i| (i, differentiate(l, AtomId::chain(i, 1)))).collect();

    let mut on_shell_p = BTreeMap::new();
    for i in phase.indices() {
        on_shell_p.insert(i, &dl_d1[&i] - &shift_time_derivative(&dl_d2[&i])?);
    }
    let on_shell_pi = dl_d2.clone();

    // W_AA w = pi_A - g_A - W_A,mu D2_mu, where g_a is dL/dD2[q_a] at zero accelerations
    let zero_accel: BTreeMap<AtomId, Expr> = phase.indices().map(|i| (d2(i), Expr::zero())).collect();
    let a = &h.a_indices;
    let block: Vec<Vec<Q>> = a.iter().map(|&i| a.iter().map(|&j| h.entry(i, j)).collect()).collect();
    let inverse = invert(&block).ok_or(LegendreError::AccelerationUnsolvable)?;
    let rhs: Vec<Expr> = a
        .iter()
        .map(|&b| {
            let g = substitute(&dl_d2[&b], &zero_accel);
            let coupling = Expr::add(h.mu_indices.iter().map(|&m| phase.chain(m, 2).scale(h.entry(b, m))));
            phase.pi(b) - g - coupling
        })
        .collect();
    let mut accelerations = BTreeMap::new();
    for (row, &ai) in inverse.iter().zip(a) {
        let w = Expr::add(row.iter().zip(&rhs).map(|(c, r)| r.scale(*c)));
        accelerations.insert(ai, w);
    }
    let solved: BTreeMap<AtomId, Expr> = accelerations.iter().map(|(&i, w)| (d2(i), w.clone())).collect();

    let mut constraints = Vec::new();
    for &m in &h.mu_indices {
        let p_side = substitute(&on_shell_p[&m], &solved);
        let pi_side = substitute(&dl_d2[&m], &solved);
        for (kind, side) in [(ConstraintKind::P, p_side), (ConstraintKind::Pi, pi_side)] {
            let what = if side.contains_any(&|x| x.is_momentum()) {
                Some("momenta")
            } else if side.contains_any(&|x| x.role == Role::Chain && x.level >= 2) {
                Some("accelerations")
            } else {
                None
            };
            let momentum = match kind {
                ConstraintKind::P => phase.p(m),
                ConstraintKind::Pi => phase.pi(m),
            };
            if let Some(what) = what {
                return Err(LegendreError::UnsupportedConstraint {
                    coord: phase.names().name(m).to_string(),
                    expr: phase.show(&(&momentum - &side)),
                    what,
                });
            }
            let hterm = -side;
            constraints.push(Constraint {
                kind,
                index: m,
                function: &momentum + &hterm,
                h: hterm,
            });
        }
    }

    let mut parts = vec![-substitute(l, &solved)];
    for (&ai, w) in &accelerations {
        parts.push(phase.p(ai) * phase.chain(ai, 1));
        parts.push(phase.pi(ai) * w);
    }
    for c in &constraints {
        let level = match c.kind {
            ConstraintKind::P => 1,
            ConstraintKind::Pi => 2,
        };
        parts.push(-(phase.chain(c.index, level) * &c.h));
    }
    let h0 = Expr::add(parts);
    let allowed = |x: AtomId| match x.role {
        Role::Time => true,
        Role::Chain => x.level <= 1,
        Role::P | Role::Pi => a.contains(&x.index),
        _ => false,
    };
    if let Some(bad) = h0.atoms().into_iter().find(|x| !allowed(*x)) {
        return Err(LegendreError::ImpureHamiltonian {
            atom: phase.render(bad),
            expr: phase.show(&h0),
        });
    }

    Ok(CanonicalSystem {
        phase: phase.clone(),
        lagrangian: l.clone(),
        hessian: h.clone(),
        accelerations,
        on_shell_p,
        on_shell_pi,
        constraints,
        h0,
    })
}

/// Convenience: Hessian analysis followed by the Legendre transform.
pub fn canonicalize(sys: &LagrangianSystem) -> Result<CanonicalSystem, LegendreError> {
    let h = hessian_and_rank(sys)?;
    legendre_transform(sys, &h)
}

/// `{a, b}` summed over both conjugate pairs of every coordinate.
pub fn poisson_bracket(a: &Expr, b: &Expr, ps: &PhaseSpace) -> Result<Expr, LegendreError> {
    for e in [a, b] {
        if let Some(bad) = e.atoms().into_iter().find(|x| x.role == Role::Chain && x.level >= 2) {
            return Err(LegendreError::NotPhaseSpace(ps.render(bad)));
        }
    }
    let mut terms = Vec::new();
    for i in ps.indices() {
        for (x, p) in [(AtomId::chain(i, 0), AtomId::p(i)), (AtomId::chain(i, 1), AtomId::pi(i))] {
            terms.push(differentiate(a, x) * differentiate(b, p));
            terms.push(-(differentiate(a, p) * differentiate(b, x)));
        }
    }
    Ok(Expr::add(terms))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BracketEntry {
    pub left: Generator,
    pub right: Generator,
    pub raw: Expr,
    /// `raw` with the constraint-surface substitutions applied.
    pub reduced: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintClassification {
    pub brackets: Vec<BracketEntry>,
    /// Every bracket among the constraints vanishes on the constraint surface.
    pub first_class: bool,
    /// Every bracket, including those with `H'0`, vanishes on the surface.
    pub integrable: bool,
}

/// Pairwise brackets of `H'0, H'^p_mu, H'^pi_mu`. The `(t, p0)` pair is
/// included for `H'0`, so `{H'0, X} = {H0, X} - dX/dt`.
pub fn classify_and_check_integrability(cs: &CanonicalSystem) -> ConstraintClassification {
    let generators = cs.generators();
    let surface = cs.surface_bindings();
    let mut brackets = Vec::new();
    for (i, (gl, el)) in generators.iter().enumerate() {
        for (gr, er) in &generators[i + 1..] {
            let raw = if *gl == Generator::Hamiltonian {
                let b = poisson_bracket(&cs.h0, er, &cs.phase).expect("generators are phase-space functions");
                b - differentiate(er, AtomId::time())
            } else {
                poisson_bracket(el, er, &cs.phase).expect("generators are phase-space functions")
            };
            let reduced = substitute(&raw, &surface);
            brackets.push(BracketEntry {
                left: *gl,
                right: *gr,
                raw,
                reduced,
            });
        }
    }
    let first_class = brackets
        .iter()
        .filter(|b| b.left != Generator::Hamiltonian)
        .all(|b| b.reduced.is_zero());
    let integrable = brackets.iter().all(|b| b.reduced.is_zero());
    ConstraintClassification {
        brackets,
        first_class,
        integrable,
    }
}
