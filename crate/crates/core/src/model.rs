//! Derivative-chain phase space and the chain-shifting total time derivative.
//!
//! Fractional derivatives enter only through the integer-order reduction
//! `d/dt D^{k alpha} q = D^{(k+1) alpha} q`, so `alpha` is a formal label on
//! the chain levels and is never evaluated. The admissible range of `alpha`
//! is left open: the source material both bounds it by `n - 1 <= alpha < n`
//! and calls it an integer, and nothing here depends on which is meant.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::symexpr::{differentiate, parse, AtomId, CoordNames, Expr, ParseError, Role, MAX_LEVEL};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error in Lagrangian: {0}")]
    Parse(#[from] ParseError),
    #[error("no coordinates declared")]
    NoCoordinates,
    #[error("invalid coordinate name `{0}`")]
    InvalidCoordinate(String),
    #[error("coordinate `{0}` declared twice")]
    DuplicateCoordinate(String),
    #[error("{atom} may not appear in a Lagrangian: {reason}")]
    ForbiddenAtom { atom: String, reason: &'static str },
    #[error("total time derivative is configuration-space only, found {0}")]
    MomentumInTimeDerivative(String),
    #[error("chain deeper than level {MAX_LEVEL}: cannot differentiate {0}")]
    ChainOverflow(String),
}

/// Coordinates `q_1..q_N` and their chain and momentum atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseSpace {
    names: CoordNames,
}

impl PhaseSpace {
    pub fn new(names: CoordNames) -> Self {
        PhaseSpace { names }
    }

    pub fn names(&self) -> &CoordNames {
        &self.names
    }

    pub fn dim(&self) -> u32 {
        self.names.len() as u32
    }

    pub fn indices(&self) -> impl Iterator<Item = u32> {
        1..=self.dim()
    }

    pub fn chain(&self, i: u32, level: u8) -> Expr {
        Expr::atom(AtomId::chain(i, level))
    }

    pub fn p(&self, i: u32) -> Expr {
        Expr::atom(AtomId::p(i))
    }

    pub fn pi(&self, i: u32) -> Expr {
        Expr::atom(AtomId::pi(i))
    }

    pub fn time(&self) -> Expr {
        Expr::atom(AtomId::time())
    }

    pub fn p0(&self) -> Expr {
        Expr::atom(AtomId::p0())
    }

    /// Canonical coordinates `D0`, `D1` and their momenta, in atom order.
    pub fn canonical_atoms(&self) -> Vec<AtomId> {
        let mut set = BTreeSet::new();
        for i in self.indices() {
            set.insert(AtomId::chain(i, 0));
            set.insert(AtomId::chain(i, 1));
            set.insert(AtomId::p(i));
            set.insert(AtomId::pi(i));
        }
        set.into_iter().collect()
    }

    pub fn render(&self, atom: AtomId) -> String {
        self.names.render(atom)
    }

    pub fn show(&self, e: &Expr) -> String {
        e.display(&self.names).to_string()
    }

    pub fn parse(&self, source: &str) -> Result<Expr, ParseError> {
        parse(source, &self.names)
    }
}

/// A Lagrangian over chain levels 0..2 and `t`.
#[derive(Clone, Debug)]
pub struct LagrangianSystem {
    pub phase: PhaseSpace,
    pub lagrangian: Expr,
}

pub fn build_system<S: AsRef<str>>(coords: &[S], lagrangian_source: &str) -> Result<LagrangianSystem, ModelError> {
    if coords.is_empty() {
        return Err(ModelError::NoCoordinates);
    }
    let mut seen = BTreeSet::new();
    for c in coords {
        let c = c.as_ref();
        let valid = c.chars().next().is_some_and(|ch| ch.is_alphabetic() || ch == '_')
            && c.chars().all(|ch| ch.is_alphanumeric() || ch == '_' || ch == '\'');
        if !valid {
            return Err(ModelError::InvalidCoordinate(c.to_string()));
        }
        if !seen.insert(c) {
            return Err(ModelError::DuplicateCoordinate(c.to_string()));
        }
    }
    let phase = PhaseSpace::new(CoordNames::new(coords));
    let lagrangian = phase.parse(lagrangian_source)?;
    for atom in lagrangian.atoms() {
        let reason = match atom.role {
            Role::P | Role::Pi | Role::P0 => Some("momenta are phase-space quantities"),
            Role::Hbar => Some("hbar belongs to the quantum stage"),
            Role::Separation | Role::Energy | Role::Eta | Role::Lambda | Role::Additive => {
                Some("integration constants are produced by the solver")
            }
            Role::Chain if atom.level == MAX_LEVEL => Some("level-3 chain atoms only arise on shell"),
            Role::Chain | Role::Time => None,
        };
        if let Some(reason) = reason {
            return Err(ModelError::ForbiddenAtom {
                atom: phase.render(atom),
                reason,
            });
        }
    }
    Ok(LagrangianSystem { phase, lagrangian })
}

/// Total time derivative on the chain: each level-k atom advances to level
/// k+1 of the same coordinate, `dt/dt = 1`, constants are fixed.
pub fn shift_time_derivative(e: &Expr) -> Result<Expr, ModelError> {
    let mut terms = Vec::new();
    for atom in e.atoms() {
        let rate = match atom.role {
            Role::P | Role::Pi | Role::P0 => {
                return Err(ModelError::MomentumInTimeDerivative(format!("{atom}")));
            }
            Role::Chain if atom.level == MAX_LEVEL => {
                return Err(ModelError::ChainOverflow(format!("{atom}")));
            }
            Role::Chain => Expr::atom(AtomId::chain(atom.index, atom.level + 1)),
            Role::Time => Expr::one(),
            _ => continue,
        };
        terms.push(differentiate(e, atom) * rate);
    }
    Ok(Expr::add(terms))
}
