//! End-to-end acceptance criteria. One PASS/FAIL line per criterion; the
//! process exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hjwkb_core::dynamics::{self, RunSpec};
use hjwkb_core::hjsolve::{derive_trajectories, solve_separable, HJSolution};
use hjwkb_core::legendre::{canonicalize, classify_and_check_integrability, poisson_bracket, CanonicalSystem, Generator};
use hjwkb_core::model::{build_system, PhaseSpace};
use hjwkb_core::symexpr::{differentiate, eval_numeric, q, AtomId, CoordNames, Expr, Node, Q};
use hjwkb_core::wkb::{self, CExpr};

const EXAMPLE1: &str = "1/2*(D2[q]^2 - D1[q]^2)";
const EXAMPLE2: &str = "1/2*(D2[q1]^2 + D2[q2]^2) + D1[q3]*D2[q3] + D1[q3]*D0[q3] + D0[q2]*D1[q2]";
const COORDS1: &[&str] = &["q"];
const COORDS2: &[&str] = &["q1", "q2", "q3"];

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn canonical(coords: &[&str], l: &str) -> CanonicalSystem {
    canonicalize(&build_system(coords, l).expect("system builds")).expect("canonicalizes")
}

fn parse(ph: &PhaseSpace, s: &str) -> Expr {
    ph.parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn same(ph: &PhaseSpace, what: &str, got: &Expr, want: &str) -> Result<(), String> {
    let w = parse(ph, want);
    ensure(*got == w, || format!("{what}: got {}, want {}", ph.show(got), ph.show(&w)))
}

fn unit_constants(hj: &HJSolution) -> BTreeMap<AtomId, f64> {
    let mut m = BTreeMap::new();
    for s in &hj.sectors {
        m.insert(AtomId::separation(s.index), 1.0);
        m.insert(AtomId::energy(s.index), 1.0);
        m.insert(AtomId::eta(s.index), 0.0);
        m.insert(AtomId::lambda(s.index), 0.0);
    }
    m
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let cs = canonical(COORDS1, EXAMPLE1);
    let ph = cs.phase.clone();
    same(&ph, "H0", &cs.h0, "p[q]*D1[q] + 1/2*pi[q]^2 + 1/2*D1[q]^2")?;
    let hj = solve_separable(&cs).map_err(|e| e.to_string())?;
    same(&ph, "S explicit part", &hj.explicit(), "-Ep[1]*t + D0[q]*E[1] + A")?;
    ensure(hj.sectors.len() == 1, || "one sector expected".into())?;
    same(
        &ph,
        "S integrand",
        &hj.sectors[0].integral.integrand(),
        "sqrt(2*Ep[1] + E[1]^2 - (D1[q] + E[1])^2)",
    )?;
    let traj = derive_trajectories(&hj).map_err(|e| e.to_string())?;
    let s = &traj.sectors[0];
    same(&ph, "D1[q](t)", &s.d1, "sqrt(2*Ep[1] + E[1]^2)*sin(eta[1] + t) - E[1]")?;
    same(
        &ph,
        "D0[q](t)",
        &s.d0,
        "lambda[1] - E[1]*(eta[1] + t) - sqrt(2*Ep[1] + E[1]^2)*cos(eta[1] + t)",
    )?;
    same(&ph, "p[q](t)", &s.p, "E[1]")?;
    same(&ph, "pi[q](t)", &s.pi, "sqrt(2*Ep[1] + E[1]^2)*cos(eta[1] + t)")?;
    same(&ph, "pi[q] as gradient", &hj.gradient(AtomId::chain(1, 1)), "sqrt(2*Ep[1] + E[1]^2 - (D1[q] + E[1])^2)")?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?} >= 1 s"))?;
    Ok(format!("H0, S, trajectories and momenta structurally equal; {elapsed:.2?}"))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let cs = canonical(COORDS2, EXAMPLE2);
    let ph = cs.phase.clone();
    let find = |g: Generator| {
        cs.constraints
            .iter()
            .find(|c| c.generator() == g)
            .map(|c| c.function.clone())
            .ok_or_else(|| format!("missing constraint {}", g.render(&ph)))
    };
    ensure(cs.constraints.len() == 2, || format!("{} constraints", cs.constraints.len()))?;
    same(&ph, "Hp'[q3]", &find(Generator::P(3))?, "p[q3] - D0[q3]")?;
    same(&ph, "Hpi'[q3]", &find(Generator::Pi(3))?, "pi[q3] - D1[q3]")?;
    same(
        &ph,
        "H0",
        &cs.h0,
        "p[q1]*D1[q1] + (p[q2] - D0[q2])*D1[q2] + 1/2*(pi[q1]^2 + pi[q2]^2)",
    )?;
    let cl = classify_and_check_integrability(&cs);
    ensure(cl.first_class && cl.integrable, || "not first-class and integrable".into())?;
    for b in &cl.brackets {
        ensure(b.reduced.is_zero() && b.raw.is_zero(), || {
            format!("{{{}, {}}} = {}", b.left.render(&ph), b.right.render(&ph), ph.show(&b.raw))
        })?;
    }
    let hj = solve_separable(&cs).map_err(|e| e.to_string())?;
    // W2 = D0[q2] E2 + D0[q2]^2/2, so S carries D0[q2]*E[2]
    same(
        &ph,
        "S explicit part",
        &hj.explicit(),
        "(-Ep[1] - Ep[2])*t + D0[q1]*E[1] + D0[q2]*E[2] + 1/2*D0[q2]^2 + 1/2*D0[q3]^2 + 1/2*D1[q3]^2 + A",
    )?;
    same(&ph, "S integrand q1", &hj.sectors[0].integral.integrand(), "sqrt(2*Ep[1] - 2*D1[q1]*E[1])")?;
    same(&ph, "S integrand q2", &hj.sectors[1].integral.integrand(), "sqrt(2*Ep[2] - 2*D1[q2]*E[2])")?;
    let traj = derive_trajectories(&hj).map_err(|e| e.to_string())?;
    for s in &traj.sectors {
        let a = s.index;
        let sub = |t: &str| t.replace('#', &a.to_string());
        same(&ph, "D1(t)", &s.d1, &sub("Ep[#]/E[#] - E[#]/2*(eta[#] + t)^2"))?;
        same(&ph, "D0(t)", &s.d0, &sub("lambda[#] + Ep[#]/E[#]*(eta[#] + t) - E[#]/6*(eta[#] + t)^3"))?;
        same(&ph, "pi(t)", &s.pi, &sub("-E[#]*(eta[#] + t)"))?;
    }
    same(&ph, "p[q1](t)", &traj.sectors[0].p, "E[1]")?;
    same(
        &ph,
        "p[q2](t)",
        &traj.sectors[1].p,
        "E[2] + lambda[2] + Ep[2]/E[2]*(eta[2] + t) - E[2]/6*(eta[2] + t)^3",
    )?;
    same(&ph, "p[q3]", &traj.mu[0].p, "D0[q3]")?;
    same(&ph, "pi[q3]", &traj.mu[0].pi, "D1[q3]")?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(2), || format!("runtime {elapsed:?} >= 2 s"))?;
    Ok(format!(
        "constraints, H0, S, trajectories structurally equal; {} brackets all zero; {elapsed:.2?}",
        cl.brackets.len()
    ))
}

struct RunResult {
    deviation: f64,
    drift: f64,
    constraint: f64,
}

fn run_example(cs: &CanonicalSystem, h: f64, mu: &BTreeMap<AtomId, Expr>) -> Result<RunResult, String> {
    let hj = solve_separable(cs).map_err(|e| e.to_string())?;
    let traj = derive_trajectories(&hj).map_err(|e| e.to_string())?;
    let eom = dynamics::derive_eom(cs);
    let mut env = unit_constants(&hj);
    for m in &eom.parameters {
        let f = mu.get(m).cloned().unwrap_or_else(Expr::zero);
        env.insert(*m, eval_numeric(&f, &[(AtomId::time(), 0.0)][..]).map_err(|e| e.to_string())?);
    }
    let mut initial = traj.state_at(&env, 0.0).map_err(|e| e.to_string())?;
    for m in &eom.parameters {
        initial.insert(*m, env[m]);
    }
    let spec = RunSpec {
        t0: 0.0,
        t1: 10.0,
        h,
        initial,
        parameter_functions: mu.clone(),
    };
    let run = dynamics::integrate(&eom, &spec).map_err(|e| e.to_string())?;
    let cmp = dynamics::compare(&run, &hj, &traj, 1e-6).map_err(|e| e.to_string())?;
    let drift = dynamics::energy_drift(&run, cs).map_err(|e| e.to_string())?;
    let constraint = dynamics::constraint_violation(&run, cs)
        .map_err(|e| e.to_string())?
        .values()
        .copied()
        .fold(0.0, f64::max);
    Ok(RunResult {
        deviation: cmp.max_deviation,
        drift,
        constraint,
    })
}

fn criterion_3() -> Check {
    let none = BTreeMap::new();
    let mut parts = Vec::new();
    for (name, coords, l) in [("example 1", COORDS1, EXAMPLE1), ("example 2", COORDS2, EXAMPLE2)] {
        let cs = canonical(coords, l);
        let r = run_example(&cs, 1e-3, &none)?;
        ensure(r.deviation < 1e-6, || format!("{name}: deviation {:e}", r.deviation))?;
        ensure(r.drift < 1e-8, || format!("{name}: H0 drift {:e}", r.drift))?;
        ensure(r.constraint < 1e-8, || format!("{name}: constraint drift {:e}", r.constraint))?;
        parts.push(format!(
            "{name}: dev {:.1e}, drift {:.1e}, constraints {:.1e}",
            r.deviation, r.drift, r.constraint
        ));
    }
    let cs = canonical(COORDS1, EXAMPLE1);
    let coarse = run_example(&cs, 0.1, &none)?.deviation;
    let fine = run_example(&cs, 0.05, &none)?.deviation;
    let ratio = coarse / fine;
    ensure((8.0..=32.0).contains(&ratio), || format!("convergence ratio {ratio}"))?;
    parts.push(format!("convergence ratio {ratio:.2} (h 0.1 -> 0.05)"));
    Ok(parts.join("; "))
}

fn criterion_4() -> Check {
    let mut parts = Vec::new();
    for (name, coords, l) in [("example 1", COORDS1, EXAMPLE1), ("example 2", COORDS2, EXAMPLE2)] {
        let cs = canonical(coords, l);
        let hj = solve_separable(&cs).map_err(|e| e.to_string())?;
        let psi = wkb::build_wave_function(&hj).map_err(|e| e.to_string())?;
        let series = wkb::apply_operator_series(&cs.extended_h0(), &psi).map_err(|e| e.to_string())?;
        ensure(series.r0.is_zero(), || format!("{name}: R0 = {}", series.r0.render(&cs.phase)))?;
        let report = wkb::verify_quantization(&cs, &psi, wkb::DEFAULT_SEED).map_err(|e| e.to_string())?;
        ensure(report.points == 1000, || format!("{name}: {} points", report.points))?;
        let sampled = report.max_r0_sampled();
        ensure(sampled < 1e-10, || format!("{name}: sampled |R0| {sampled:e}"))?;
        let ph = &cs.phase;
        if coords.len() == 1 {
            let r = "(2*Ep[1] + E[1]^2 - (D1[q] + E[1])^2)";
            let want = parse(ph, &format!("-5/8*(D1[q] + E[1])^2*{r}^(-2) - 1/4*{r}^(-1)"));
            ensure(series.r2 == CExpr::real(want), || format!("R2 = {}", series.r2.render(ph)))?;
            ensure(series.r1.is_zero(), || format!("R1 = {}", series.r1.render(ph)))?;
        } else {
            let base = parse(ph, "E[2] + D0[q2]");
            let inverse = Expr::pow(base, q(-1, 1));
            let has_term = series.r1.im.terms().iter().any(|t| t.factors().contains(&inverse));
            ensure(has_term, || format!("R1 = {}", series.r1.render(ph)))?;
            ensure(series.r1.im == parse(ph, "1/2*D1[q2]*(E[2] + D0[q2])^(-1)"), || {
                format!("R1 = {}", series.r1.render(ph))
            })?;
        }
        parts.push(format!("{name}: R0 = 0 symbolic, sampled max {sampled:.1e}"));
    }
    Ok(parts.join("; "))
}

fn criterion_5() -> Check {
    let cs = canonical(COORDS2, EXAMPLE2);
    let hj = solve_separable(&cs).map_err(|e| e.to_string())?;
    let psi = wkb::build_wave_function(&hj).map_err(|e| e.to_string())?;
    let report = wkb::verify_quantization(&cs, &psi, wkb::DEFAULT_SEED).map_err(|e| e.to_string())?;
    for g in [Generator::P(3), Generator::Pi(3)] {
        let c = report.check(g).ok_or_else(|| format!("no check for {}", g.render(&cs.phase)))?;
        ensure(c.series.coefficients().iter().all(|k| k.is_zero()), || {
            format!("{}: {}", g.render(&cs.phase), c.series.render(&cs.phase))
        })?;
        ensure(c.exact_annihilation == Some(true), || "annihilation not exact".into())?;
        ensure(c.r0_sampled == 0.0 && c.higher_sampled == Some(0.0), || "sampled residual nonzero".into())?;
    }
    Ok("Hp'[q3] and Hpi'[q3]: R0 = R1 = R2 = 0 structurally and at every sample".into())
}

/// Raw random trees over `atoms` for the property suites.
struct Gen {
    atoms: Vec<AtomId>,
    functions: bool,
}

impl Gen {
    fn leaf(&self, rng: &mut ChaCha8Rng) -> Expr {
        if rng.gen_bool(0.7) {
            Expr::raw(Node::Atom(*self.atoms.choose(rng).unwrap()))
        } else {
            Expr::raw(Node::Num(Q::new(rng.gen_range(-4..=4), rng.gen_range(1..=3))))
        }
    }

    fn tree(&self, rng: &mut ChaCha8Rng, depth: u32) -> Expr {
        if depth == 0 || rng.gen_bool(0.25) {
            return self.leaf(rng);
        }
        let kinds = if self.functions { 6 } else { 3 };
        match rng.gen_range(0..kinds) {
            0 => Expr::raw(Node::Add((0..rng.gen_range(2..=3)).map(|_| self.tree(rng, depth - 1)).collect())),
            1 => Expr::raw(Node::Mul((0..rng.gen_range(2..=3)).map(|_| self.tree(rng, depth - 1)).collect())),
            2 => {
                let exps: &[Q] = if self.functions {
                    &[q(2, 1), q(3, 1), q(-1, 1), q(1, 2), q(-1, 2), q(3, 2)]
                } else {
                    &[q(2, 1), q(3, 1)]
                };
                Expr::raw(Node::Pow(self.tree(rng, depth - 1), *exps.choose(rng).unwrap()))
            }
            3 => Expr::raw(Node::Sin(self.tree(rng, depth - 1))),
            4 => Expr::raw(Node::Cos(self.tree(rng, depth - 1))),
            _ => Expr::raw(Node::Asin(Expr::raw(Node::Mul(vec![
                Expr::raw(Node::Num(q(1, 4))),
                Expr::raw(Node::Sin(self.tree(rng, depth - 1))),
            ])))),
        }
    }

    fn point(&self, rng: &mut ChaCha8Rng) -> BTreeMap<AtomId, f64> {
        self.atoms.iter().map(|a| (*a, rng.gen_range(-2.0..2.0))).collect()
    }
}

/// Every sub-expression evaluates, stays below `cap` in magnitude, and keeps
/// `margin` away from singular points of powers and arcsine.
fn well_conditioned(e: &Expr, p: &BTreeMap<AtomId, f64>, margin: f64, cap: f64) -> bool {
    let Ok(v) = eval_numeric(e, p) else { return false };
    if !v.is_finite() || v.abs() > cap {
        return false;
    }
    let local = match e.node() {
        Node::Pow(b, ex) if !ex.is_integer() || *ex < Q::from_integer(0) => {
            eval_numeric(b, p).is_ok_and(|x| if ex.is_integer() { x.abs() >= margin } else { x >= margin })
        }
        Node::Asin(a) => eval_numeric(a, p).is_ok_and(|x| x.abs() <= 1.0 - margin),
        _ => true,
    };
    local && e.children().into_iter().all(|c| well_conditioned(c, p, margin, cap))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ph = PhaseSpace::new(CoordNames::new(&["x", "y"]));
    let config_atoms = vec![
        AtomId::chain(1, 0),
        AtomId::chain(1, 1),
        AtomId::chain(2, 0),
        AtomId::chain(2, 1),
        AtomId::time(),
    ];
    let smooth = Gen {
        atoms: config_atoms.clone(),
        functions: true,
    };

    // symbolic derivative vs central differences
    let mut derivative_cases = 0;
    while derivative_cases < 500 {
        let e = smooth.tree(&mut rng, 4).simplify();
        let v = *config_atoms.choose(&mut rng).unwrap();
        let d = differentiate(&e, v);
        let p = smooth.point(&mut rng);
        if !well_conditioned(&e, &p, 0.05, 1e3) || !well_conditioned(&d, &p, 0.05, 1e3) {
            continue;
        }
        let x = p[&v];
        let h = 1e-5 * x.abs().max(1.0);
        let at = |s: f64| {
            let mut q = p.clone();
            q.insert(v, x + s);
            eval_numeric(&e, &q)
        };
        let (Ok(fp), Ok(fm)) = (at(h), at(-h)) else { continue };
        let fd = (fp - fm) / (2.0 * h);
        let exact = eval_numeric(&d, &p).unwrap();
        ensure(close(exact, fd, 1e-6), || {
            format!("d/d{} of {}: symbolic {exact}, finite difference {fd}", ph.render(v), ph.show(&e))
        })?;
        derivative_cases += 1;
    }

    // Poisson bracket algebra
    let phase_atoms: Vec<AtomId> = config_atoms
        .iter()
        .copied()
        .filter(|a| a.is_chain())
        .chain([AtomId::p(1), AtomId::pi(1), AtomId::p(2), AtomId::pi(2)])
        .collect();
    let poly = Gen {
        atoms: phase_atoms.clone(),
        functions: false,
    };
    let pb = |a: &Expr, b: &Expr| poisson_bracket(a, b, &ph).map_err(|e| e.to_string());
    for _ in 0..200 {
        let (f, g, k) = (
            poly.tree(&mut rng, 3).simplify(),
            poly.tree(&mut rng, 3).simplify(),
            poly.tree(&mut rng, 2).simplify(),
        );
        ensure(pb(&f, &g)? == -pb(&g, &f)?, || format!("antisymmetry fails for {}, {}", ph.show(&f), ph.show(&g)))?;
        let lhs = pb(&f, &(&g * &k))?;
        let rhs = &pb(&f, &g)? * &k + &g * &pb(&f, &k)?;
        ensure(lhs == rhs, || format!("Leibniz fails for {}, {}, {}", ph.show(&f), ph.show(&g), ph.show(&k)))?;
    }
    for i in 1..=2u32 {
        for j in 1..=2u32 {
            let delta = if i == j { Expr::one() } else { Expr::zero() };
            let x0 = Expr::atom(AtomId::chain(i, 0));
            let x1 = Expr::atom(AtomId::chain(i, 1));
            ensure(pb(&x0, &Expr::atom(AtomId::p(j)))? == delta, || "{D0, p} != delta".into())?;
            ensure(pb(&x1, &Expr::atom(AtomId::pi(j)))? == delta, || "{D1, pi} != delta".into())?;
            ensure(pb(&x0, &Expr::atom(AtomId::pi(j)))?.is_zero(), || "{D0, pi} != 0".into())?;
            ensure(pb(&x1, &Expr::atom(AtomId::p(j)))?.is_zero(), || "{D1, p} != 0".into())?;
            ensure(pb(&x0, &Expr::atom(AtomId::chain(j, 1)))?.is_zero(), || "{D0, D1} != 0".into())?;
        }
    }

    // simplification and round trip
    let mut simplify_cases = 0;
    while simplify_cases < 500 {
        let raw = smooth.tree(&mut rng, 4);
        let s = raw.simplify();
        ensure(s.simplify() == s, || format!("simplify not idempotent on {}", ph.show(&s)))?;
        let back = parse(&ph, &ph.show(&s));
        ensure(back == s, || format!("round trip changed {} into {}", ph.show(&s), ph.show(&back)))?;
        let p = smooth.point(&mut rng);
        if !well_conditioned(&raw, &p, 0.05, 1e6) {
            continue;
        }
        let (Ok(a), Ok(b)) = (eval_numeric(&raw, &p), eval_numeric(&s, &p)) else { continue };
        ensure(close(a, b, 1e-10), || format!("simplify changed value of {}: {a} vs {b}", ph.show(&raw)))?;
        simplify_cases += 1;
    }

    // mu-parameter independence on the singular example
    let cs = canonical(COORDS2, EXAMPLE2);
    let hj = solve_separable(&cs).map_err(|e| e.to_string())?;
    let traj = derive_trajectories(&hj).map_err(|e| e.to_string())?;
    let eom = dynamics::derive_eom(&cs);
    let mut initial = traj.state_at(&{
        let mut c = unit_constants(&hj);
        c.insert(AtomId::chain(3, 0), 0.5);
        c.insert(AtomId::chain(3, 1), 1.0);
        c
    }, 0.0)
    .map_err(|e| e.to_string())?;
    initial.insert(AtomId::chain(3, 0), 0.5);
    initial.insert(AtomId::chain(3, 1), 1.0);
    let cph = &cs.phase;
    let runs: Vec<_> = [("1/2 + t^2/5", "cos(t)"), ("1/2 + sin(3*t)", "1 - t/7")]
        .iter()
        .map(|(f0, f1)| {
            let spec = RunSpec {
                t0: 0.0,
                t1: 10.0,
                h: 1e-3,
                initial: initial.clone(),
                parameter_functions: BTreeMap::from([
                    (AtomId::chain(3, 0), parse(cph, f0)),
                    (AtomId::chain(3, 1), parse(cph, f1)),
                ]),
            };
            dynamics::integrate(&eom, &spec).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let sector: Vec<AtomId> = [1, 2]
        .iter()
        .flat_map(|&a| [AtomId::chain(a, 0), AtomId::chain(a, 1), AtomId::p(a), AtomId::pi(a)])
        .collect();
    let diff = dynamics::max_difference(&runs[0], &runs[1], &sector);
    ensure(diff < 1e-9, || format!("a-sector differs by {diff:e} between parameter choices"))?;

    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("property suites took {elapsed:?}"))?;
    Ok(format!(
        "{derivative_cases} derivative cases, 200 bracket triples, {simplify_cases} simplify/round-trip cases, \
         mu independence {diff:.1e}; {elapsed:.2?}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 6] = [
        ("example 1 golden pipeline", criterion_1),
        ("example 2 golden pipeline", criterion_2),
        ("numeric-analytic agreement", criterion_3),
        ("WKB semiclassical check", criterion_4),
        ("exact constraint annihilation", criterion_5),
        ("property suites", criterion_6),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("criterion {} PASS {name}: {detail}", k + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", k + 1);
            }
            Err(_) => {
                failed += 1;
                println!("criterion {} FAIL {name}: panicked", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
