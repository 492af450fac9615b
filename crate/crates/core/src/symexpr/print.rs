use std::fmt;

use num_traits::{One, Signed};

use super::atom::{AtomId, CoordNames};
use super::expr::{q, Expr, Node, Q};

/// Printing context: how atoms are spelled.
pub struct Printer<'a> {
    atom: &'a dyn Fn(AtomId) -> String,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Product,
    Base,
}

impl<'a> Printer<'a> {
    pub fn new(atom: &'a dyn Fn(AtomId) -> String) -> Self {
        Printer { atom }
    }

    pub fn print(&self, e: &Expr) -> String {
        let mut out = String::new();
        self.write(e, Prec::Sum, &mut out);
        out
    }

    fn write(&self, e: &Expr, ctx: Prec, out: &mut String) {
        match e.node() {
            Node::Num(c) => {
                let wrap = ctx == Prec::Base && (c.is_negative() || !c.is_integer())
                    || ctx == Prec::Product && c.is_negative();
                paren(out, wrap, |out| out.push_str(&rational(c)));
            }
            Node::Atom(a) => out.push_str(&(self.atom)(*a)),
            Node::Add(ts) => paren(out, ctx > Prec::Sum, |out| {
                for (i, t) in ts.iter().enumerate() {
                    let (c, rest) = t.split_coeff();
                    if i == 0 {
                        self.write_term(c, &rest, out);
                    } else if c.is_negative() {
                        out.push_str(" - ");
                        self.write_term(-c, &rest, out);
                    } else {
                        out.push_str(" + ");
                        self.write_term(c, &rest, out);
                    }
                }
            }),
            Node::Mul(_) => {
                let (c, rest) = e.split_coeff();
                let wrap = ctx == Prec::Base || ctx == Prec::Product && c.is_negative();
                paren(out, wrap, |out| self.write_term(c, &rest, out));
            }
            Node::Pow(b, ex) => {
                if *ex == q(1, 2) {
                    out.push_str("sqrt(");
                    self.write(b, Prec::Sum, out);
                    out.push(')');
                    return;
                }
                paren(out, ctx == Prec::Base, |out| {
                    self.write(b, Prec::Base, out);
                    out.push('^');
                    if ex.is_integer() && ex.is_positive() {
                        out.push_str(&ex.to_string());
                    } else {
                        out.push('(');
                        out.push_str(&rational(ex));
                        out.push(')');
                    }
                });
            }
            Node::Sin(a) => self.call("sin", a, out),
            Node::Cos(a) => self.call("cos", a, out),
            Node::Asin(a) => self.call("asin", a, out),
        }
    }

    fn call(&self, name: &str, arg: &Expr, out: &mut String) {
        out.push_str(name);
        out.push('(');
        self.write(arg, Prec::Sum, out);
        out.push(')');
    }

    /// Writes `c * rest` where `rest` carries no numeric coefficient.
    fn write_term(&self, c: Q, rest: &Expr, out: &mut String) {
        if rest.is_one() {
            out.push_str(&rational(&c));
            return;
        }
        if c == -Q::one() {
            out.push('-');
        } else if !c.is_one() {
            out.push_str(&rational(&c));
            out.push('*');
        }
        let factors = rest.factors();
        for (i, f) in factors.iter().enumerate() {
            if i > 0 {
                out.push('*');
            }
            self.write(f, Prec::Product, out);
        }
    }
}

fn paren(out: &mut String, wrap: bool, body: impl FnOnce(&mut String)) {
    if wrap {
        out.push('(');
    }
    body(out);
    if wrap {
        out.push(')');
    }
}

fn rational(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl Expr {
    /// Renders with the given coordinate names.
    pub fn display<'a>(&'a self, names: &'a CoordNames) -> impl fmt::Display + 'a {
        Rendered {
            expr: self,
            names: Some(names),
        }
    }

    pub fn render_with(&self, atom: &dyn Fn(AtomId) -> String) -> String {
        Printer::new(atom).print(self)
    }
}

struct Rendered<'a> {
    expr: &'a Expr,
    names: Option<&'a CoordNames>,
}

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.names {
            Some(n) => self.expr.render_with(&|a| n.render(a)),
            None => self.expr.render_with(&|a| format!("{a}")),
        };
        f.write_str(&s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(
            &Rendered {
                expr: self,
                names: None,
            },
            f,
        )
    }
}
