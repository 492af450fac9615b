//! Random expression trees for property tests. Trees are built raw (not
//! canonicalized) so simplification has real work to do.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::symexpr::{eval_numeric, q, AtomId, Expr, Node, Q};

pub struct ExprGen {
    pub atoms: Vec<AtomId>,
    pub allow_functions: bool,
    pub allow_fractional: bool,
}

impl ExprGen {
    pub fn new(atoms: Vec<AtomId>) -> Self {
        ExprGen {
            atoms,
            allow_functions: true,
            allow_fractional: true,
        }
    }

    pub fn polynomial(atoms: Vec<AtomId>) -> Self {
        ExprGen {
            atoms,
            allow_functions: false,
            allow_fractional: false,
        }
    }

    pub fn leaf<R: Rng>(&self, rng: &mut R) -> Expr {
        if rng.gen_bool(0.7) {
            Expr::raw(Node::Atom(*self.atoms.choose(rng).unwrap()))
        } else {
            let n = rng.gen_range(-4..=4i128);
            let d = rng.gen_range(1..=3i128);
            Expr::raw(Node::Num(Q::new(n, d)))
        }
    }

    pub fn gen<R: Rng>(&self, rng: &mut R, depth: u32) -> Expr {
        if depth == 0 || rng.gen_bool(0.25) {
            return self.leaf(rng);
        }
        let kinds = if self.allow_functions { 6 } else { 3 };
        match rng.gen_range(0..kinds) {
            0 => {
                let n = rng.gen_range(2..=3);
                Expr::raw(Node::Add((0..n).map(|_| self.gen(rng, depth - 1)).collect()))
            }
            1 => {
                let n = rng.gen_range(2..=3);
                Expr::raw(Node::Mul((0..n).map(|_| self.gen(rng, depth - 1)).collect()))
            }
            2 => {
                let exps: &[Q] = if self.allow_fractional {
                    &[q(2, 1), q(3, 1), q(-1, 1), q(-2, 1), q(1, 2), q(-1, 2), q(3, 2)]
                } else {
                    &[q(2, 1), q(3, 1)]
                };
                let e = *exps.choose(rng).unwrap();
                Expr::raw(Node::Pow(self.gen(rng, depth - 1), e))
            }
            3 => Expr::raw(Node::Sin(self.gen(rng, depth - 1))),
            4 => Expr::raw(Node::Cos(self.gen(rng, depth - 1))),
            _ => {
                // keep the argument small so asin stays mostly in range
                let inner = Expr::raw(Node::Mul(vec![
                    Expr::raw(Node::Num(q(1, 4))),
                    Expr::raw(Node::Sin(self.gen(rng, depth - 1))),
                ]));
                Expr::raw(Node::Asin(inner))
            }
        }
    }

    pub fn point<R: Rng>(&self, rng: &mut R) -> Vec<(AtomId, f64)> {
        self.atoms.iter().map(|a| (*a, rng.gen_range(-2.0..2.0))).collect()
    }
}

/// True when some singular sub-expression (radicand, denominator, asin
/// argument) is within `margin` of its domain boundary at `point`, or fails
/// to evaluate.
pub fn near_boundary(e: &Expr, point: &[(AtomId, f64)], margin: f64) -> bool {
    let check = |x: &Expr| eval_numeric(x, point);
    match e.node() {
        Node::Num(_) | Node::Atom(_) => false,
        Node::Pow(b, ex) => {
            let singular = !ex.is_integer() || *ex < Q::from_integer(0);
            let bad = singular
                && match check(b) {
                    Ok(v) => {
                        if ex.is_integer() {
                            v.abs() < margin
                        } else {
                            v < margin
                        }
                    }
                    Err(_) => true,
                };
            bad || near_boundary(b, point, margin)
        }
        Node::Asin(a) => {
            let bad = match check(a) {
                Ok(v) => v.abs() > 1.0 - margin,
                Err(_) => true,
            };
            bad || near_boundary(a, point, margin)
        }
        _ => e.children().into_iter().any(|c| near_boundary(c, point, margin)),
    }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Largest magnitude reached by any sub-expression at `point` (infinite when
/// something fails to evaluate). Used to skip ill-conditioned samples.
pub fn peak_magnitude(e: &Expr, point: &[(AtomId, f64)]) -> f64 {
    let own = eval_numeric(e, point).map(f64::abs).unwrap_or(f64::INFINITY);
    e.children()
        .into_iter()
        .map(|c| peak_magnitude(c, point))
        .fold(own, f64::max)
}
