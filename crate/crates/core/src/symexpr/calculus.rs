use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, ToPrimitive};
use thiserror::Error;

use super::atom::AtomId;
use super::expr::{q, q_to_f64, Expr, Node, Q};

/// Partial derivative of `e` with respect to the atom `v`, holding every
/// other atom fixed.
pub fn differentiate(e: &Expr, v: AtomId) -> Expr {
    if !e.contains(v) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Atom(a) => {
            if *a == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(ts) => Expr::add(ts.iter().map(|t| differentiate(t, v))),
        Node::Mul(fs) => {
            let mut terms = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                let df = differentiate(f, v);
                if df.is_zero() {
                    continue;
                }
                let mut parts: Vec<Expr> = Vec::with_capacity(fs.len());
                parts.extend(fs[..i].iter().cloned());
                parts.push(df);
                parts.extend(fs[i + 1..].iter().cloned());
                terms.push(Expr::mul(parts));
            }
            Expr::add(terms)
        }
        Node::Pow(b, ex) => Expr::mul([
            Expr::num(*ex),
            Expr::pow(b.clone(), *ex - Q::one()),
            differentiate(b, v),
        ]),
        Node::Sin(a) => Expr::cos(a.clone()) * differentiate(a, v),
        Node::Cos(a) => -(Expr::sin(a.clone()) * differentiate(a, v)),
        Node::Asin(a) => {
            let radicand = Expr::one() - Expr::powi(a.clone(), 2);
            Expr::pow(radicand, q(-1, 2)) * differentiate(a, v)
        }
    }
}

/// Simultaneous substitution of atoms, followed by canonicalization.
pub fn substitute(e: &Expr, bindings: &BTreeMap<AtomId, Expr>) -> Expr {
    if bindings.is_empty() {
        return e.simplify();
    }
    subst_rec(e, bindings)
}

fn subst_rec(e: &Expr, bindings: &BTreeMap<AtomId, Expr>) -> Expr {
    match e.node() {
        Node::Atom(a) => bindings.get(a).cloned().unwrap_or_else(|| e.clone()),
        Node::Num(_) => e.clone(),
        _ => {
            if !e.contains_any(&|a| bindings.contains_key(&a)) {
                return e.simplify();
            }
            e.map_children(&|c| subst_rec(c, bindings))
        }
    }
}

pub fn substitute_one(e: &Expr, atom: AtomId, value: &Expr) -> Expr {
    let mut b = BTreeMap::new();
    b.insert(atom, value.clone());
    substitute(e, &b)
}

/// Numeric values for atoms.
pub trait Assignment {
    fn value(&self, atom: AtomId) -> Option<f64>;
}

impl Assignment for HashMap<AtomId, f64> {
    fn value(&self, atom: AtomId) -> Option<f64> {
        self.get(&atom).copied()
    }
}

impl Assignment for BTreeMap<AtomId, f64> {
    fn value(&self, atom: AtomId) -> Option<f64> {
        self.get(&atom).copied()
    }
}

impl Assignment for [(AtomId, f64)] {
    fn value(&self, atom: AtomId) -> Option<f64> {
        self.iter().find(|(a, _)| *a == atom).map(|(_, v)| *v)
    }
}

impl<F: Fn(AtomId) -> Option<f64>> Assignment for F {
    fn value(&self, atom: AtomId) -> Option<f64> {
        self(atom)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("atom {0} has no value")]
    Unbound(AtomId),
    #[error("domain error: {0}")]
    Domain(String),
}

/// IEEE double evaluation.
pub fn eval_numeric<A: Assignment + ?Sized>(e: &Expr, assignment: &A) -> Result<f64, EvalError> {
    match e.node() {
        Node::Num(c) => Ok(q_to_f64(c)),
        Node::Atom(a) => assignment.value(*a).ok_or(EvalError::Unbound(*a)),
        Node::Add(ts) => {
            let mut s = 0.0;
            for t in ts {
                s += eval_numeric(t, assignment)?;
            }
            Ok(s)
        }
        Node::Mul(fs) => {
            let mut s = 1.0;
            for f in fs {
                s *= eval_numeric(f, assignment)?;
            }
            Ok(s)
        }
        Node::Pow(b, ex) => {
            let x = eval_numeric(b, assignment)?;
            if ex.is_integer() {
                let n = ex.to_integer().to_i32().ok_or_else(|| EvalError::Domain("exponent overflow".into()))?;
                if x == 0.0 && n < 0 {
                    return Err(EvalError::Domain(format!("zero raised to {n}")));
                }
                return Ok(x.powi(n));
            }
            if x < 0.0 {
                return Err(EvalError::Domain(format!("negative base {x} under power {ex}")));
            }
            if x == 0.0 && ex.is_negative() {
                return Err(EvalError::Domain(format!("zero raised to {ex}")));
            }
            if *ex == q(1, 2) {
                Ok(x.sqrt())
            } else {
                Ok(x.powf(q_to_f64(ex)))
            }
        }
        Node::Sin(a) => Ok(eval_numeric(a, assignment)?.sin()),
        Node::Cos(a) => Ok(eval_numeric(a, assignment)?.cos()),
        Node::Asin(a) => {
            let x = eval_numeric(a, assignment)?;
            if x.abs() > 1.0 {
                return Err(EvalError::Domain(format!("asin argument {x} outside [-1, 1]")));
            }
            Ok(x.asin())
        }
    }
}
