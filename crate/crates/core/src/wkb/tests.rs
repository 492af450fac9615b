use std::collections::BTreeMap;
use std::ops;

use num_complex::Complex64 as C;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::hjsolve::solve_separable;
use crate::legendre::canonicalize;
use crate::model::build_system;
use crate::symexpr::Q;
use crate::testgen::{close, ExprGen};

const EXAMPLE1: &str = "1/2*(D2[q]^2 - D1[q]^2)";
const EXAMPLE2: &str = "1/2*(D2[q1]^2 + D2[q2]^2) + D1[q3]*D2[q3] + D1[q3]*D0[q3] + D0[q2]*D1[q2]";

fn solve(coords: &[&str], l: &str) -> HJSolution {
    solve_separable(&canonicalize(&build_system(coords, l).unwrap()).unwrap()).unwrap()
}

fn parse(hj: &HJSolution, s: &str) -> Expr {
    hj.phase().parse(s).unwrap()
}

#[test]
fn regular_example_amplitude() {
    let hj = solve(&["q"], EXAMPLE1);
    let psi = build_wave_function(&hj).unwrap();
    assert_eq!(psi.factors.len(), 2);
    assert_eq!(psi.factors[0].factor, parse(&hj, "E[1]^(-1/2)"));
    assert_eq!(psi.factors[1].factor, parse(&hj, "(2*Ep[1] + E[1]^2 - (D1[q] + E[1])^2)^(-1/4)"));
    assert_eq!(psi.factors[0].momentum, parse(&hj, "E[1]"));
}

#[test]
fn singular_example_amplitude() {
    let hj = solve(&["q1", "q2", "q3"], EXAMPLE2);
    let psi = build_wave_function(&hj).unwrap();
    let got: Vec<Expr> = psi.factors.iter().map(|f| f.factor.clone()).collect();
    let want: Vec<Expr> = [
        "E[1]^(-1/2)",
        "(2*Ep[1] - 2*D1[q1]*E[1])^(-1/4)",
        "(E[2] + D0[q2])^(-1/2)",
        "(2*Ep[2] - 2*D1[q2]*E[2])^(-1/4)",
    ]
    .iter()
    .map(|s| parse(&hj, s))
    .collect();
    assert_eq!(got, want);
    for a in psi.amplitude.atoms() {
        assert!(a.role != Role::Time && a.role != Role::Hbar && a.index != 3, "{a}");
    }
}

#[test]
fn free_system_amplitude() {
    let hj = solve(&["q"], "1/2*D2[q]^2");
    let psi = build_wave_function(&hj).unwrap();
    assert_eq!(psi.amplitude, parse(&hj, "E[1]^(-1/2)*(2*Ep[1] - 2*E[1]*D1[q])^(-1/4)"));
}

#[test]
fn regular_example_series() {
    let hj = solve(&["q"], EXAMPLE1);
    let psi = build_wave_function(&hj).unwrap();
    let s = apply_operator_series(&hj.canonical.extended_h0(), &psi).unwrap();
    assert!(s.r0.is_zero(), "{}", s.render(hj.phase()));
    assert!(s.r1.is_zero(), "{}", s.render(hj.phase()));
    let r = "(2*Ep[1] + E[1]^2 - (D1[q] + E[1])^2)";
    let want = parse(&hj, &format!("-5/8*(D1[q] + E[1])^2*{r}^(-2) - 1/4*{r}^(-1)"));
    assert_eq!(s.r2, CExpr::real(want));
    // the unsimplified classical part, term by term
    let classical = parse(&hj, &format!("-Ep[1] + D1[q]*E[1] + 1/2*{r} + 1/2*D1[q]^2"));
    assert!(classical.is_zero());
}

#[test]
fn singular_example_series() {
    let hj = solve(&["q1", "q2", "q3"], EXAMPLE2);
    let psi = build_wave_function(&hj).unwrap();
    let h0 = apply_operator_series(&hj.canonical.extended_h0(), &psi).unwrap();
    assert!(h0.r0.is_zero());
    assert!(h0.r1.re.is_zero());
    assert_eq!(h0.r1.im, parse(&hj, "1/2*D1[q2]*(E[2] + D0[q2])^(-1)"));
    let want_r2 = parse(
        &hj,
        "-5/8*E[1]^2*(2*Ep[1] - 2*D1[q1]*E[1])^(-2) - 5/8*E[2]^2*(2*Ep[2] - 2*D1[q2]*E[2])^(-2)",
    );
    assert_eq!(h0.r2, CExpr::real(want_r2));
    for (g, op) in hj.canonical.generators().into_iter().skip(1) {
        let s = apply_operator_series(&op, &psi).unwrap();
        assert!(s.coefficients().iter().all(|c| c.is_zero()), "{g}: {}", s.render(hj.phase()));
    }
    assert_eq!(h0.r1.render(hj.phase()), "i*(1/2*D1[q2]*(D0[q2] + E[2])^(-1))");
}

#[test]
fn semiclassical_part_is_the_hj_residual() {
    for (coords, l) in [(&["q"][..], EXAMPLE1), (&["q1", "q2", "q3"][..], EXAMPLE2)] {
        let hj = solve(coords, l);
        let psi = build_wave_function(&hj).unwrap();
        let s = apply_operator_series(&hj.canonical.extended_h0(), &psi).unwrap();
        assert_eq!(s.r0.re, hj.hj_residual());
        assert_eq!(s.r0.re, classical_limit(&hj.canonical.extended_h0(), &psi));
        for ((_, op), (_, res)) in hj.canonical.generators().into_iter().skip(1).zip(hj.constraint_residuals()) {
            assert_eq!(apply_operator_series(&op, &psi).unwrap().r0.re, res);
        }
    }
}

#[test]
fn verification_on_both_examples() {
    let hj = solve(&["q"], EXAMPLE1);
    let psi = build_wave_function(&hj).unwrap();
    let report = verify_quantization(&hj.canonical, &psi, DEFAULT_SEED).unwrap();
    assert!(report.passed());
    assert_eq!(report.points, SAMPLE_POINTS);
    assert!(report.max_r0_sampled() < SAMPLE_TOL);
    assert!(report.check(Generator::Hamiltonian).unwrap().semiclassical);

    let hj = solve(&["q1", "q2", "q3"], EXAMPLE2);
    let psi = build_wave_function(&hj).unwrap();
    let report = verify_quantization(&hj.canonical, &psi, 7).unwrap();
    assert!(report.passed());
    assert_eq!(report.checks.len(), 3);
    for g in [Generator::P(3), Generator::Pi(3)] {
        let c = report.check(g).unwrap();
        assert_eq!(c.exact_annihilation, Some(true));
        assert!(c.higher_sampled.unwrap() < SAMPLE_TOL);
    }
}

#[test]
fn perturbed_phase_is_inconsistent() {
    let hj = solve(&["q"], EXAMPLE1);
    let mut psi = build_wave_function(&hj).unwrap();
    psi.phase.explicit = &psi.phase.explicit + &Expr::powi(Expr::atom(AtomId::chain(1, 1)), 3);
    match verify_quantization(&hj.canonical, &psi, DEFAULT_SEED) {
        Err(WkbError::QuantizationInconsistency { generator, sampled, .. }) => {
            assert_eq!(generator, "H0'");
            assert!(sampled > SAMPLE_TOL);
        }
        other => panic!("expected inconsistency, got {other:?}"),
    }
}

#[test]
fn samples_are_seeded_and_allowed() {
    let hj = solve(&["q1", "q2", "q3"], EXAMPLE2);
    let psi = build_wave_function(&hj).unwrap();
    let a = sample_points(&psi, 50, 11).unwrap();
    let b = sample_points(&psi, 50, 11).unwrap();
    let c = sample_points(&psi, 50, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    for p in &a {
        assert_eq!(p[&AtomId::energy(2)], 1.0);
        for d in &psi.domain {
            assert!(eval_numeric(d, p).unwrap() >= SAMPLE_MARGIN);
        }
    }
}

#[test]
fn unsupported_operators() {
    let hj = solve(&["q"], EXAMPLE1);
    let psi = build_wave_function(&hj).unwrap();
    let op = |s: &str| parse(&hj, s);
    assert!(matches!(
        apply_operator_series(&op("pi[q]^3"), &psi),
        Err(WkbError::MomentumDegree { degree: 3, .. })
    ));
    assert!(matches!(
        apply_operator_series(&op("p[q]*pi[q]*p0"), &psi),
        Err(WkbError::MomentumDegree { .. })
    ));
    assert!(matches!(
        apply_operator_series(&op("sqrt(p[q])"), &psi),
        Err(WkbError::NonPolynomial { .. })
    ));
    assert!(matches!(
        apply_operator_series(&op("D0[q]*p[q]"), &psi),
        Err(WkbError::OrderingAmbiguity { .. })
    ));
    // a coordinate factor that is not the momentum's conjugate is fine
    assert!(apply_operator_series(&op("D1[q]*p[q] + D0[q]*p0"), &psi).is_ok());
}

#[test]
fn time_derivative_gives_the_energy() {
    let hj = solve(&["q"], EXAMPLE1);
    let psi = build_wave_function(&hj).unwrap();
    let s = apply_operator_series(&Expr::atom(AtomId::p0()), &psi).unwrap();
    assert_eq!(s.r0.re, parse(&hj, "-Ep[1]"));
    assert!(s.r1.is_zero() && s.r2.is_zero());
}

/// Hyper-dual number carrying first partials along two directions and the
/// mixed second partial.
#[derive(Clone, Copy, Debug)]
struct Hd {
    v: C,
    a: C,
    b: C,
    ab: C,
}

impl Hd {
    fn constant(v: C) -> Self {
        Hd {
            v,
            a: C::new(0.0, 0.0),
            b: C::new(0.0, 0.0),
            ab: C::new(0.0, 0.0),
        }
    }

    /// `f(self)` given `f`, `f'`, `f''` at the value.
    fn chain(self, f: C, d1: C, d2: C) -> Self {
        Hd {
            v: f,
            a: d1 * self.a,
            b: d1 * self.b,
            ab: d1 * self.ab + d2 * self.a * self.b,
        }
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
}

impl ops::Add for Hd {
    type Output = Hd;
    fn add(self, o: Hd) -> Hd {
        Hd {
            v: self.v + o.v,
            a: self.a + o.a,
            b: self.b + o.b,
            ab: self.ab + o.ab,
        }
    }
}

impl ops::Mul for Hd {
    type Output = Hd;
    fn mul(self, o: Hd) -> Hd {
        Hd {
            v: self.v * o.v,
            a: self.v * o.a + self.a * o.v,
            b: self.v * o.b + self.b * o.v,
            ab: self.v * o.ab + self.a * o.b + self.b * o.a + self.ab * o.v,
        }
    }
}

fn qf(c: &Q) -> f64 {
    *c.numer() as f64 / *c.denom() as f64
}

fn eval_hd(e: &Expr, env: &BTreeMap<AtomId, f64>, da: AtomId, db: AtomId) -> Hd {
    let one = C::new(1.0, 0.0);
    match e.node() {
        Node::Num(c) => Hd::constant(C::new(qf(c), 0.0)),
        Node::Atom(x) => {
            let mut h = Hd::constant(C::new(env[x], 0.0));
            if *x == da {
                h.a = one;
            }
            if *x == db {
                h.b = one;
            }
            h
        }
        Node::Add(ts) => ts.iter().map(|t| eval_hd(t, env, da, db)).reduce(|x, y| x + y).unwrap(),
        Node::Mul(fs) => fs.iter().map(|f| eval_hd(f, env, da, db)).reduce(|x, y| x * y).unwrap(),
        Node::Pow(b, ex) => {
            let x = eval_hd(b, env, da, db);
            let n = qf(ex);
            x.chain(x.v.powf(n), n * x.v.powf(n - 1.0), n * (n - 1.0) * x.v.powf(n - 2.0))
        }
        Node::Sin(b) => {
            let x = eval_hd(b, env, da, db);
            x.chain(x.v.sin(), x.v.cos(), -x.v.sin())
        }
        Node::Cos(b) => {
            let x = eval_hd(b, env, da, db);
            x.chain(x.v.cos(), -x.v.sin(), -x.v.cos())
        }
        Node::Asin(b) => {
            let x = eval_hd(b, env, da, db);
            let s = one - x.v * x.v;
            x.chain(x.v.asin(), s.powf(-0.5), x.v * s.powf(-1.5))
        }
    }
}

/// `(op Psi)/Psi` evaluated directly from `Psi = A exp(i S / hbar)`.
fn direct_ratio(op: &Expr, amplitude: &Expr, phase: &Expr, env: &BTreeMap<AtomId, f64>, hbar: f64) -> C {
    let i = C::new(0.0, 1.0);
    let mut total = C::new(0.0, 0.0);
    for term in op.terms() {
        let mut momenta = Vec::new();
        let mut coeff = Vec::new();
        for f in term.factors() {
            match f.node() {
                Node::Atom(a) if a.is_momentum() => momenta.push(a.conjugate().unwrap()),
                Node::Pow(b, e) if b.as_atom().is_some_and(|a| a.is_momentum()) => {
                    for _ in 0..*e.numer() {
                        momenta.push(b.as_atom().unwrap().conjugate().unwrap());
                    }
                }
                _ => coeff.push(f),
            }
        }
        let c = eval_numeric(&Expr::mul(coeff), env).unwrap();
        let (da, db) = match momenta.as_slice() {
            [] => (AtomId::hbar(), AtomId::hbar()),
            [j] => (*j, AtomId::hbar()),
            [j, k] => (*j, *k),
            _ => unreachable!(),
        };
        let a = eval_hd(amplitude, env, da, db);
        let s = eval_hd(phase, env, da, db);
        let scaled = Hd {
            v: s.v * i / hbar,
            a: s.a * i / hbar,
            b: s.b * i / hbar,
            ab: s.ab * i / hbar,
        };
        let psi = a * scaled.exp();
        let k = hbar / i;
        let applied = match momenta.len() {
            0 => psi.v,
            1 => k * psi.a,
            _ => k * k * psi.ab,
        };
        total += c * applied / psi.v;
    }
    total
}

/// Quadratic through three points `(h_k, y_k)`, as `[c0, c1, c2]`.
fn fit_quadratic(h: [f64; 3], y: [C; 3]) -> [C; 3] {
    // Newton divided differences
    let d01 = (y[1] - y[0]) / (h[1] - h[0]);
    let d12 = (y[2] - y[1]) / (h[2] - h[1]);
    let c2 = (d12 - d01) / (h[2] - h[0]);
    let c1 = d01 - c2 * (h[0] + h[1]);
    let c0 = y[0] - c1 * h[0] - c2 * h[0] * h[0];
    [c0, c1, c2]
}

#[test]
fn hbar_grading_matches_direct_evaluation() {
    let ps = PhaseSpace::new(crate::symexpr::CoordNames::new(&["q1", "q2"]));
    let coords = vec![
        AtomId::chain(1, 0),
        AtomId::chain(1, 1),
        AtomId::chain(2, 0),
        AtomId::chain(2, 1),
        AtomId::time(),
    ];
    let momenta = [AtomId::p(1), AtomId::pi(1), AtomId::p(2), AtomId::pi(2), AtomId::p0()];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let hbars = [1e-2, 1e-3, 1e-4];
    let mut checked = 0;
    while checked < 100 {
        let mut terms = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let degree = rng.gen_range(0..=2);
            let chosen: Vec<AtomId> = (0..degree).map(|_| *momenta.choose(&mut rng).unwrap()).collect();
            let allowed: Vec<AtomId> = coords
                .iter()
                .copied()
                .filter(|x| chosen.iter().all(|m| m.conjugate() != Some(*x)))
                .collect();
            let c = ExprGen::polynomial(allowed).gen(&mut rng, 2).simplify();
            terms.push(Expr::mul(std::iter::once(c).chain(chosen.iter().map(|m| Expr::atom(*m)))));
        }
        let op = Expr::add(terms);
        let gen = ExprGen::polynomial(coords.clone());
        let s = gen.gen(&mut rng, 3).simplify();
        let poly = gen.gen(&mut rng, 2).simplify();
        let amplitude = Expr::sqrt(Expr::one() + Expr::powi(poly, 2));
        let psi = WaveFunction::from_parts(
            ps.clone(),
            amplitude.clone(),
            Phase {
                explicit: s.clone(),
                integrals: Vec::new(),
            },
        );
        let series = apply_operator_series(&op, &psi).unwrap();
        let env: BTreeMap<AtomId, f64> = coords.iter().map(|a| (*a, rng.gen_range(-1.0..1.0))).collect();
        let ys = hbars.map(|h| direct_ratio(&op, &amplitude, &s, &env, h));
        let fit = fit_quadratic(hbars, ys);
        for (k, coeff) in series.coefficients().iter().enumerate() {
            let re = eval_numeric(&coeff.re, &env).unwrap();
            let im = eval_numeric(&coeff.im, &env).unwrap();
            assert!(
                close(fit[k].re, re, 1e-4) && close(fit[k].im, im, 1e-4),
                "order {k}: fit {} vs {re} + i {im} for {}",
                fit[k],
                ps.show(&op)
            );
        }
        checked += 1;
    }
}
