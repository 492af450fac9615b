//! Closed-form integral table for the sector equation
//! `kappa W'^2 + (E + v1) x + v0 + v2 x^2 = E'` with `x = D1[q_a]`.
//!
//! `W' = int sqrt(R) dx` with `R = (E' - E x - v0 - v1 x - v2 x^2) / kappa`.
//! Two radicands are tabulated: affine (`v2 = 0`) and concave quadratic
//! (`v2 > 0`, arcsine family). Each entry stores the antiderivative, its
//! partials in `E'` and `E`, and the inversion `tau = eta + t -> (D1, D0, pi)`.
//! All closed forms use the principal root of `R`.

use num_traits::Zero;

use crate::symexpr::{q, AtomId, Expr, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `R = R0 + s x`.
    Affine,
    /// `R = m (rho^2 - (x + h)^2)`.
    Arcsine,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Affine => "affine",
            Family::Arcsine => "arcsine",
        }
    }
}

/// Rational coefficients of one separable sector of `H0`:
/// `alpha p D1 + beta D0 D1 + kappa pi^2 + v0 + v1 D1 + v2 D1^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectorCoefficients {
    pub alpha: Q,
    pub beta: Q,
    pub kappa: Q,
    pub v0: Q,
    pub v1: Q,
    pub v2: Q,
}

impl SectorCoefficients {
    pub fn family(&self) -> Family {
        if self.v2.is_zero() {
            Family::Affine
        } else {
            Family::Arcsine
        }
    }
}

/// `W'_a` resolved through the table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorIntegral {
    /// Integration variable `D1[q_a]`.
    pub variable: AtomId,
    pub radicand: Expr,
    pub family: Family,
    pub antiderivative: Expr,
    /// `dW'/dE'`.
    pub d_energy: Expr,
    /// `dW'/dE`.
    pub d_separation: Expr,
}

impl SectorIntegral {
    pub fn integrand(&self) -> Expr {
        Expr::sqrt(self.radicand.clone())
    }
}

/// Symbols shared by the table entries of sector `a`.
pub(crate) struct Symbols {
    pub e: Expr,
    pub ep: Expr,
    pub x: Expr,
    pub d0: Expr,
    pub eta: Expr,
    pub lambda: Expr,
    pub t: Expr,
}

impl Symbols {
    pub fn new(a: u32) -> Self {
        Symbols {
            e: Expr::atom(AtomId::separation(a)),
            ep: Expr::atom(AtomId::energy(a)),
            x: Expr::atom(AtomId::chain(a, 1)),
            d0: Expr::atom(AtomId::chain(a, 0)),
            eta: Expr::atom(AtomId::eta(a)),
            lambda: Expr::atom(AtomId::lambda(a)),
            t: Expr::atom(AtomId::time()),
        }
    }
}

fn n(c: Q) -> Expr {
    Expr::num(c)
}

/// `W_a = (E D0 - beta/2 D0^2) / alpha`, solving `alpha dW/dD0 + beta D0 = E`.
pub(crate) fn coordinate_part(a: u32, c: &SectorCoefficients) -> Expr {
    let s = Symbols::new(a);
    (&s.e * &s.d0 - Expr::powi(s.d0.clone(), 2).scale(c.beta / 2)).scale(Q::from_integer(1) / c.alpha)
}

pub(crate) fn radicand(a: u32, c: &SectorCoefficients) -> Expr {
    let s = Symbols::new(a);
    let inner = &s.ep - &s.e * &s.x - n(c.v0) - s.x.scale(c.v1) - Expr::powi(s.x.clone(), 2).scale(c.v2);
    inner.scale(Q::from_integer(1) / c.kappa)
}

pub(crate) fn integrate(a: u32, c: &SectorCoefficients) -> SectorIntegral {
    let s = Symbols::new(a);
    let r = radicand(a, c);
    let root = Expr::sqrt(r.clone());
    let r32 = Expr::pow(r.clone(), q(3, 2));
    let kappa = n(c.kappa);
    let (antiderivative, d_energy, d_separation) = match c.family() {
        Family::Affine => {
            let slope = -(&s.e + n(c.v1)).scale(Q::from_integer(1) / c.kappa);
            let r0 = (&s.ep - n(c.v0)).scale(Q::from_integer(1) / c.kappa);
            let anti = r32.scale(q(2, 3)) / &slope;
            let de = &root / &(&kappa * &slope);
            let ds = -(r32.scale(q(1, 3)) - &r0 * &root) / &(&kappa * &Expr::powi(slope.clone(), 2));
            (anti, de, ds)
        }
        Family::Arcsine => {
            let a = Arcsine::new(&s, c);
            let angle = Expr::asin(&a.u / &a.rho);
            let anti = (&a.u * &root).scale(q(1, 2)) + (&a.sqrt_m * &a.rho2 * &angle).scale(q(1, 2));
            let pref = Expr::recip(&kappa * &a.sqrt_m).scale(q(1, 2));
            let de = &pref * &angle;
            let ds = &pref * &(&root / &a.sqrt_m + &a.h * &angle);
            (anti, de, ds)
        }
    };
    SectorIntegral {
        variable: AtomId::chain(a, 1),
        radicand: r,
        family: c.family(),
        antiderivative,
        d_energy,
        d_separation,
    }
}

/// Arcsine-family symbols: `m = v2/kappa`, `h = (E + v1)/(2 v2)`,
/// `rho^2 = (E' - v0)/v2 + h^2`, `u = x + h`.
struct Arcsine {
    sqrt_m: Expr,
    h: Expr,
    rho2: Expr,
    rho: Expr,
    u: Expr,
    omega: Expr,
}

impl Arcsine {
    fn new(s: &Symbols, c: &SectorCoefficients) -> Self {
        let sqrt_m = Expr::sqrt(n(c.v2 / c.kappa));
        let h = (&s.e + n(c.v1)).scale(Q::from_integer(1) / (c.v2 * 2));
        let rho2 = (&s.ep - n(c.v0)).scale(Q::from_integer(1) / c.v2) + Expr::powi(h.clone(), 2);
        let rho = Expr::sqrt(rho2.clone());
        let u = &s.x + &h;
        let omega = sqrt_m.scale(c.kappa * 2);
        Arcsine {
            sqrt_m,
            h,
            rho2,
            rho,
            u,
            omega,
        }
    }
}

/// Closed-form `(D1, D0, pi)` along the flow, in `tau = eta + t`.
pub(crate) fn invert(a: u32, c: &SectorCoefficients) -> (Expr, Expr, Expr) {
    let s = Symbols::new(a);
    let tau = &s.eta + &s.t;
    let alpha = n(c.alpha);
    match c.family() {
        Family::Affine => {
            let kappa = n(c.kappa);
            let slope = -(&s.e + n(c.v1)).scale(Q::from_integer(1) / c.kappa);
            let r0 = (&s.ep - n(c.v0)).scale(Q::from_integer(1) / c.kappa);
            let ks = &kappa * &slope;
            let pi = &ks * &tau;
            let d1 = &Expr::powi(kappa.clone(), 2) * &slope * &Expr::powi(tau.clone(), 2) - &r0 / &slope;
            let cubic = Expr::powi(pi.clone(), 3).scale(q(1, 3)) - &r0 * &pi;
            let d0 = &alpha * &(&s.lambda + &(&cubic / &(&kappa * &Expr::powi(slope, 2))));
            (d1, d0, pi)
        }
        Family::Arcsine => {
            let ar = Arcsine::new(&s, c);
            let phase = &ar.omega * &tau;
            let d1 = &ar.rho * &Expr::sin(phase.clone()) - &ar.h;
            let d0 = &alpha * &(&s.lambda - &ar.h * &tau - &(&ar.rho / &ar.omega) * &Expr::cos(phase.clone()));
            let pi = &ar.sqrt_m * &ar.rho * &Expr::cos(phase);
            (d1, d0, pi)
        }
    }
}

fn f(c: Q) -> f64 {
    *c.numer() as f64 / *c.denom() as f64
}

/// Why a sector's constants cannot be used.
pub(crate) fn degeneracy(c: &SectorCoefficients, e: f64, ep: f64) -> Option<String> {
    match c.family() {
        Family::Affine => {
            let k = e + f(c.v1);
            (k.abs() < 1e-14).then(|| format!("E + {} = 0 makes the affine radicand constant", c.v1))
        }
        Family::Arcsine => {
            let h = (e + f(c.v1)) / (2.0 * f(c.v2));
            let rho2 = (ep - f(c.v0)) / f(c.v2) + h * h;
            (rho2 <= 0.0).then(|| format!("rho^2 = {rho2} <= 0 leaves no classically allowed region"))
        }
    }
}

/// Numeric `(E, E', eta, lambda)` reproducing the phase-space point
/// `(D0, D1, p, pi)` at time `t0`.
pub(crate) fn constants_from_state(
    c: &SectorCoefficients,
    d0: f64,
    x: f64,
    p: f64,
    pi: f64,
    t0: f64,
) -> Result<(f64, f64, f64, f64), String> {
    let (alpha, beta, kappa) = (f(c.alpha), f(c.beta), f(c.kappa));
    let (v0, v1, v2) = (f(c.v0), f(c.v1), f(c.v2));
    let e = alpha * p + beta * d0;
    let ep = kappa * pi * pi + (e + v1) * x + v0 + v2 * x * x;
    if let Some(reason) = degeneracy(c, e, ep) {
        return Err(reason);
    }
    let (tau, lambda) = match c.family() {
        Family::Affine => {
            let s = -(e + v1) / kappa;
            let r0 = (ep - v0) / kappa;
            let tau = pi / (kappa * s);
            let ks_tau = kappa * s * tau;
            let cubic = ks_tau.powi(3) / 3.0 - r0 * ks_tau;
            (tau, d0 / alpha - cubic / (kappa * s * s))
        }
        Family::Arcsine => {
            let m = v2 / kappa;
            let h = (e + v1) / (2.0 * v2);
            let u = x + h;
            let rho = (u * u + pi * pi / m).sqrt();
            let omega = 2.0 * kappa * m.sqrt();
            let tau = u.atan2(pi / m.sqrt()) / omega;
            (tau, d0 / alpha + h * tau + rho / omega * (omega * tau).cos())
        }
    };
    Ok((e, ep, tau - t0, lambda))
}

/// Reference constants for branch checks: `E + v1 = 1`, `E' - v0 = 1`.
pub(crate) fn reference_constants(c: &SectorCoefficients) -> (f64, f64) {
    let base = (1.0, 1.0);
    if degeneracy(c, base.0, base.1).is_none() {
        return base;
    }
    (1.0 - f(c.v1), 1.0 + f(c.v0))
}
