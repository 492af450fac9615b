use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::atom::AtomId;

/// Exact rational coefficient.
pub type Q = Ratio<i128>;

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

/// Node shapes. Variant order is part of the canonical total order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Num(Q),
    Atom(AtomId),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Q),
    Sin(Expr),
    Cos(Expr),
    Asin(Expr),
}

/// Immutable, cheaply clonable expression tree.
///
/// Every constructor except [`Expr::raw`] returns canonical form: sums and
/// products flattened and sorted, like terms and equal bases merged, constants
/// folded, products distributed over sums, and positive integer powers of sums
/// expanded.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Arc<Node>);

impl Expr {
    /// Wraps a node without canonicalizing it.
    pub fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(c: Q) -> Expr {
        Expr::raw(Node::Num(c))
    }

    pub fn int(n: i128) -> Expr {
        Expr::num(Q::from_integer(n))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn atom(a: AtomId) -> Expr {
        Expr::raw(Node::Atom(a))
    }

    pub fn as_num(&self) -> Option<Q> {
        match self.node() {
            Node::Num(c) => Some(*c),
            _ => None,
        }
    }

    pub fn as_atom(&self) -> Option<AtomId> {
        match self.node() {
            Node::Atom(a) => Some(*a),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(|c| c.is_one())
    }

    /// Summands of a canonical expression (a single-element slice otherwise).
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            Node::Num(c) if c.is_zero() => Vec::new(),
            _ => vec![self.clone()],
        }
    }

    /// Splits a term into its rational coefficient and the remaining factors.
    pub fn split_coeff(&self) -> (Q, Expr) {
        match self.node() {
            Node::Num(c) => (*c, Expr::one()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(c) => {
                    let rest = if fs.len() == 2 {
                        fs[1].clone()
                    } else {
                        Expr::raw(Node::Mul(fs[1..].to_vec()))
                    };
                    (*c, rest)
                }
                _ => (Q::one(), self.clone()),
            },
            _ => (Q::one(), self.clone()),
        }
    }

    /// Factors of a canonical product (coefficient included).
    pub fn factors(&self) -> Vec<Expr> {
        match self.node() {
            Node::Mul(fs) => fs.clone(),
            _ => vec![self.clone()],
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Num(_) | Node::Atom(_) => Vec::new(),
            Node::Add(cs) | Node::Mul(cs) => cs.iter().collect(),
            Node::Pow(b, _) | Node::Sin(b) | Node::Cos(b) | Node::Asin(b) => vec![b],
        }
    }

    pub fn atoms(&self) -> BTreeSet<AtomId> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<AtomId>) {
        match self.node() {
            Node::Atom(a) => {
                out.insert(*a);
            }
            _ => {
                for c in self.children() {
                    c.collect_atoms(out);
                }
            }
        }
    }

    pub fn contains(&self, a: AtomId) -> bool {
        match self.node() {
            Node::Atom(b) => *b == a,
            _ => self.children().into_iter().any(|c| c.contains(a)),
        }
    }

    pub fn contains_any(&self, pred: &dyn Fn(AtomId) -> bool) -> bool {
        match self.node() {
            Node::Atom(b) => pred(*b),
            _ => self.children().into_iter().any(|c| c.contains_any(pred)),
        }
    }

    /// Views a canonical expression as a polynomial in `x`, returning the
    /// coefficient of each power. `None` if `x` occurs other than as a
    /// nonnegative integer power factor of a term.
    pub fn polynomial_in(&self, x: AtomId) -> Option<BTreeMap<u32, Expr>> {
        let mut acc: BTreeMap<u32, Vec<Expr>> = BTreeMap::new();
        for term in self.terms() {
            let mut degree = 0u32;
            let mut rest = Vec::new();
            for f in term.factors() {
                match f.node() {
                    Node::Atom(a) if *a == x => degree += 1,
                    Node::Pow(b, e) if b.as_atom() == Some(x) => {
                        if !e.is_integer() || e.is_negative() {
                            return None;
                        }
                        degree += e.to_integer() as u32;
                    }
                    _ => {
                        if f.contains(x) {
                            return None;
                        }
                        rest.push(f);
                    }
                }
            }
            acc.entry(degree).or_default().push(Expr::mul(rest));
        }
        Some(acc.into_iter().map(|(k, v)| (k, Expr::add(v))).collect())
    }

    /// Exponents of the atoms of a monomial `c * a1^k1 * ...` with positive
    /// integer `k`. `None` if the term has any other kind of factor.
    pub fn monomial(&self) -> Option<(Q, BTreeMap<AtomId, u32>)> {
        let (c, rest) = self.split_coeff();
        let mut exps = BTreeMap::new();
        if rest.is_one() {
            return Some((c, exps));
        }
        for f in rest.factors() {
            match f.node() {
                Node::Atom(a) => *exps.entry(*a).or_insert(0) += 1,
                Node::Pow(b, e) if e.is_integer() && e.is_positive() => {
                    let a = b.as_atom()?;
                    *exps.entry(a).or_insert(0) += e.to_integer() as u32;
                }
                _ => return None,
            }
        }
        Some((c, exps))
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }

    // ---------------------------------------------------------------
    // canonical constructors
    // ---------------------------------------------------------------

    pub fn add<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut constant = Q::zero();
        let mut collected: BTreeMap<Expr, Q> = BTreeMap::new();
        let mut push = |t: &Expr, constant: &mut Q| {
            let (c, rest) = t.split_coeff();
            if c.is_zero() {
                return;
            }
            if rest.is_one() {
                *constant += c;
            } else {
                *collected.entry(rest).or_insert_with(Q::zero) += c;
            }
        };
        for item in items {
            match item.node() {
                Node::Add(ts) => ts.iter().for_each(|t| push(t, &mut constant)),
                _ => push(&item, &mut constant),
            }
        }
        let mut out = Vec::with_capacity(collected.len() + 1);
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        for (rest, c) in collected {
            if !c.is_zero() {
                out.push(with_coeff(c, rest));
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => {
                out.sort();
                Expr::raw(Node::Add(out))
            }
        }
    }

    pub fn mul<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut coeff = Q::one();
        let mut bases: BTreeMap<Expr, Q> = BTreeMap::new();
        let mut absorb = |f: &Expr, coeff: &mut Q| match f.node() {
            Node::Num(c) => *coeff *= *c,
            Node::Pow(b, e) => *bases.entry(b.clone()).or_insert_with(Q::zero) += *e,
            _ => *bases.entry(f.clone()).or_insert_with(Q::zero) += Q::one(),
        };
        for item in items {
            match item.node() {
                Node::Mul(fs) => fs.iter().for_each(|f| absorb(f, &mut coeff)),
                _ => absorb(&item, &mut coeff),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }

        let mut factors = Vec::new();
        let mut sums: Vec<(Expr, u32)> = Vec::new();
        // merged powers of composite bases that restructure (e.g. (x^2)^(1/2)
        // squared back to x^2) go through another round of merging
        let mut refeed = Vec::new();
        for (base, e) in bases {
            if e.is_zero() {
                continue;
            }
            match base.node() {
                Node::Num(c) => {
                    let (k, residue) = rational_power(*c, e);
                    coeff *= k;
                    if let Some(r) = residue {
                        factors.push(r);
                    }
                }
                Node::Add(_) if e.is_integer() && e.is_positive() => {
                    sums.push((base, e.to_integer() as u32));
                }
                Node::Pow(..) | Node::Mul(_) => {
                    let p = Expr::pow(base.clone(), e);
                    match p.node() {
                        Node::Pow(b, _) if *b == base => factors.push(p),
                        _ => refeed.push(p),
                    }
                }
                _ if e.is_one() => factors.push(base),
                _ => factors.push(Expr::raw(Node::Pow(base, e))),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        factors.sort();
        let monomial = assemble_product(coeff, factors);
        if !refeed.is_empty() {
            refeed.push(monomial);
            for (sum, times) in sums {
                refeed.push(Expr::raw(Node::Pow(sum, Q::from_integer(times as i128))));
            }
            return Expr::mul(refeed);
        }
        if sums.is_empty() {
            return monomial;
        }
        let mut partial = vec![monomial];
        for (sum, times) in sums {
            for _ in 0..times {
                partial = distribute(&partial, &sum.terms());
            }
        }
        Expr::add(partial)
    }

    pub fn pow(base: Expr, e: Q) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return base;
        }
        match base.node() {
            Node::Num(c) => {
                let (k, residue) = rational_power(*c, e);
                match residue {
                    Some(r) => Expr::mul([Expr::num(k), r]),
                    None => Expr::num(k),
                }
            }
            Node::Pow(inner, m) => {
                let m_even_int = m.is_integer() && m.to_integer().is_even();
                if e.is_integer() || !m_even_int {
                    Expr::pow(inner.clone(), *m * e)
                } else {
                    Expr::raw(Node::Pow(base.clone(), e))
                }
            }
            Node::Mul(fs) => {
                if e.is_integer() {
                    Expr::mul(fs.iter().map(|f| Expr::pow(f.clone(), e)))
                } else if let Some(c) = fs[0].as_num().filter(|c| c.is_positive()) {
                    let rest = Expr::mul(fs[1..].iter().cloned());
                    Expr::mul([Expr::pow(Expr::num(c), e), Expr::pow(rest, e)])
                } else {
                    Expr::raw(Node::Pow(base.clone(), e))
                }
            }
            Node::Add(ts) if e.is_integer() && e.is_positive() => {
                let mut acc = ts.clone();
                for _ in 1..e.to_integer() {
                    acc = distribute(&acc, ts);
                }
                Expr::add(acc)
            }
            _ => Expr::raw(Node::Pow(base, e)),
        }
    }

    pub fn powi(base: Expr, n: i128) -> Expr {
        Expr::pow(base, Q::from_integer(n))
    }

    pub fn sqrt(base: Expr) -> Expr {
        Expr::pow(base, q(1, 2))
    }

    pub fn recip(base: Expr) -> Expr {
        Expr::pow(base, -Q::one())
    }

    pub fn sin(arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::zero();
        }
        Expr::raw(Node::Sin(arg))
    }

    pub fn cos(arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::one();
        }
        Expr::raw(Node::Cos(arg))
    }

    pub fn asin(arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::zero();
        }
        Expr::raw(Node::Asin(arg))
    }

    pub fn scale(&self, c: Q) -> Expr {
        Expr::mul([Expr::num(c), self.clone()])
    }

    /// Rebuilds the tree bottom-up through the canonical constructors.
    pub fn simplify(&self) -> Expr {
        self.map_children(&|c| c.simplify())
    }

    /// Rebuilds this node from transformed children via canonical constructors.
    pub(crate) fn map_children(&self, f: &dyn Fn(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Atom(_) => self.clone(),
            Node::Add(ts) => Expr::add(ts.iter().map(f)),
            Node::Mul(fs) => Expr::mul(fs.iter().map(f)),
            Node::Pow(b, e) => Expr::pow(f(b), *e),
            Node::Sin(a) => Expr::sin(f(a)),
            Node::Cos(a) => Expr::cos(f(a)),
            Node::Asin(a) => Expr::asin(f(a)),
        }
    }
}

fn with_coeff(c: Q, rest: Expr) -> Expr {
    if c.is_one() {
        return rest;
    }
    let mut fs = vec![Expr::num(c)];
    match rest.node() {
        Node::Mul(inner) => fs.extend(inner.iter().cloned()),
        _ => fs.push(rest),
    }
    Expr::raw(Node::Mul(fs))
}

fn assemble_product(coeff: Q, mut factors: Vec<Expr>) -> Expr {
    if factors.is_empty() {
        return Expr::num(coeff);
    }
    if coeff.is_one() && factors.len() == 1 {
        return factors.pop().unwrap();
    }
    if !coeff.is_one() {
        factors.insert(0, Expr::num(coeff));
    }
    Expr::raw(Node::Mul(factors))
}

fn distribute(left: &[Expr], right: &[Expr]) -> Vec<Expr> {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for l in left {
        for r in right {
            out.push(Expr::mul([l.clone(), r.clone()]));
        }
    }
    out
}

/// `c^e` split into an exact rational part and an irreducible residue
/// `c^r` with `0 < r < 1` (or the untouched power for negative or zero bases).
fn rational_power(c: Q, e: Q) -> (Q, Option<Expr>) {
    if e.is_integer() {
        let n = e.to_integer();
        if c.is_zero() && n < 0 {
            return (Q::one(), Some(Expr::raw(Node::Pow(Expr::num(c), e))));
        }
        return (checked_pow(c, n), None);
    }
    if !c.is_positive() {
        return (Q::one(), Some(Expr::raw(Node::Pow(Expr::num(c), e))));
    }
    let whole = e.floor();
    let frac = e - whole;
    let k = checked_pow(c, whole.to_integer());
    let (num, den) = (*frac.numer(), *frac.denom());
    let lifted = checked_pow(c, num);
    match (exact_root(*lifted.numer(), den), exact_root(*lifted.denom(), den)) {
        (Some(a), Some(b)) => (k * Q::new(a, b), None),
        _ => (k, Some(Expr::raw(Node::Pow(Expr::num(c), frac)))),
    }
}

fn checked_pow(c: Q, n: i128) -> Q {
    let n32 = i32::try_from(n).expect("exponent too large");
    c.pow(n32)
}

fn exact_root(x: i128, n: i128) -> Option<i128> {
    if x < 0 {
        return None;
    }
    let guess = (x as f64).powf(1.0 / n as f64).round() as i128;
    (guess.saturating_sub(1)..=guess + 1)
        .filter(|g| *g >= 0)
        .find(|g| g.checked_pow(n as u32) == Some(x))
}

pub(crate) fn q_to_f64(c: &Q) -> f64 {
    c.numer().to_f64().unwrap() / c.denom().to_f64().unwrap()
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<AtomId> for Expr {
    fn from(a: AtomId) -> Self {
        Expr::atom(a)
    }
}

impl From<i128> for Expr {
    fn from(n: i128) -> Self {
        Expr::int(n)
    }
}

impl From<Q> for Expr {
    fn from(c: Q) -> Self {
        Expr::num(c)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add([a, b]));
binop!(Sub, sub, |a, b| Expr::add([a, -b]));
binop!(Mul, mul, |a, b| Expr::mul([a, b]));
binop!(Div, div, |a, b| Expr::mul([a, Expr::recip(b)]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-Q::one())
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-Q::one())
    }
}
