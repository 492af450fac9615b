//! Hamilton-Jacobi equations, their separable solution, and the closed-form
//! trajectories obtained from the canonical transformation.
//!
//! `S = f(t) + sum_a [W_a(D0[q_a]; E_a) + W'_a(D1[q_a]; E_a, E'_a)]
//!    + sum_mu [f_mu(D0[q_mu]) + f'_mu(D1[q_mu])] + A`, with `f(t) = -sum_a E'_a t`.
//!
//! Every monomial of `H0` must belong to a single a-sector and have one of the
//! shapes `p D1`, `D0 D1`, `pi^2`, `D1^k` (`k <= 2`) or be constant. The
//! integrals `W'_a` are never expanded into elementary functions inside `S`;
//! they are kept as [`SectorIntegral`] records that carry closed-form partials.

mod table;

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::legendre::{CanonicalSystem, ConstraintKind, Generator};
use crate::model::PhaseSpace;
use crate::symexpr::{differentiate, eval_numeric, substitute, AtomId, EvalError, Expr, Role, Q};

pub use table::{Family, SectorCoefficients, SectorIntegral};

#[derive(Debug, Error)]
pub enum HjError {
    #[error("non-separable under the separable ansatz: {0}")]
    NonSeparable(String),
    #[error("degenerate constant in sector {coord}: {reason}")]
    DegenerateConstant { coord: String, reason: String },
    #[error("cannot determine integration constants: {0}")]
    ConstantsUnsolvable(String),
    #[error("no branch of sector {coord} satisfies dD1/dt = dH0/dpi")]
    Branch { coord: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One equation of the Hamilton-Jacobi set, held with momenta standing for
/// the formal gradients `p_i = dS/dD0[q_i]`, `pi_i = dS/dD1[q_i]`,
/// `p0 = dS/dt`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HjPde {
    pub generator: Generator,
    pub lhs: Expr,
}

impl HjPde {
    pub fn render(&self, phase: &PhaseSpace) -> String {
        let names = phase.names();
        let lhs = self.lhs.render_with(&|a: AtomId| match a.role {
            Role::P => format!("dS/dD0[{}]", names.name(a.index)),
            Role::Pi => format!("dS/dD1[{}]", names.name(a.index)),
            Role::P0 => "dS/dt".to_string(),
            _ => names.render(a),
        });
        format!("{lhs} = 0")
    }
}

pub fn build_hjpdes(cs: &CanonicalSystem) -> Vec<HjPde> {
    cs.generators()
        .into_iter()
        .map(|(generator, lhs)| HjPde { generator, lhs })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sector {
    pub index: u32,
    pub coefficients: SectorCoefficients,
    /// `W_a(D0[q_a]; E_a)`.
    pub w: Expr,
    /// `W'_a(D1[q_a]; E_a, E'_a)`.
    pub integral: SectorIntegral,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuPart {
    pub index: u32,
    /// `f_mu(D0[q_mu]) = int -H^p_mu dD0[q_mu]`.
    pub f: Expr,
    /// `f'_mu(D1[q_mu]) = int -H^pi_mu dD1[q_mu]`.
    pub f_prime: Expr,
}

#[derive(Clone, Debug)]
pub struct HJSolution {
    pub canonical: CanonicalSystem,
    /// `f(t) = -sum_a E'_a t`.
    pub time_part: Expr,
    pub sectors: Vec<Sector>,
    pub mu_parts: Vec<MuPart>,
    pub additive: Expr,
}

impl HJSolution {
    pub fn phase(&self) -> &PhaseSpace {
        &self.canonical.phase
    }

    pub fn sector(&self, a: u32) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.index == a)
    }

    /// All of `S` except the tabulated integrals.
    pub fn explicit(&self) -> Expr {
        let mut parts = vec![self.time_part.clone(), self.additive.clone()];
        parts.extend(self.sectors.iter().map(|s| s.w.clone()));
        for m in &self.mu_parts {
            parts.push(m.f.clone());
            parts.push(m.f_prime.clone());
        }
        Expr::add(parts)
    }

    /// `S` in closed form, with each integral replaced by its antiderivative.
    pub fn closed_form(&self) -> Expr {
        self.explicit() + Expr::add(self.sectors.iter().map(|s| s.integral.antiderivative.clone()))
    }

    /// `dS/d(atom)`: explicit part plus tabulated partials of the integrals.
    pub fn gradient(&self, atom: AtomId) -> Expr {
        let mut parts = vec![differentiate(&self.explicit(), atom)];
        for s in &self.sectors {
            if atom == s.integral.variable {
                parts.push(s.integral.integrand());
            } else if atom == AtomId::energy(s.index) {
                parts.push(s.integral.d_energy.clone());
            } else if atom == AtomId::separation(s.index) {
                parts.push(s.integral.d_separation.clone());
            }
        }
        Expr::add(parts)
    }

    /// `S` as text, integrals shown as `int(integrand, variable)`.
    pub fn render(&self) -> String {
        let phase = self.phase();
        let mut out = phase.show(&self.explicit());
        for s in &self.sectors {
            out.push_str(&format!(
                " + int({}, {})",
                phase.show(&s.integral.integrand()),
                phase.render(s.integral.variable)
            ));
        }
        out
    }

    /// Substitutions `p_a -> dS/dD0[q_a]`, `pi_a -> dS/dD1[q_a]`, and the
    /// same for mu-momenta.
    pub fn momentum_gradients(&self) -> BTreeMap<AtomId, Expr> {
        let mut b = BTreeMap::new();
        for i in self.phase().indices() {
            b.insert(AtomId::p(i), self.gradient(AtomId::chain(i, 0)));
            b.insert(AtomId::pi(i), self.gradient(AtomId::chain(i, 1)));
        }
        b
    }

    /// `dS/dt + H0(p -> dS/dD0, pi -> dS/dD1)`; zero for a valid solution.
    pub fn hj_residual(&self) -> Expr {
        self.gradient(AtomId::time()) + substitute(&self.canonical.h0, &self.momentum_gradients())
    }

    /// `dS/dD0[q_mu] + H^p_mu` and `dS/dD1[q_mu] + H^pi_mu`.
    pub fn constraint_residuals(&self) -> Vec<(Generator, Expr)> {
        let grads = self.momentum_gradients();
        self.canonical
            .constraints
            .iter()
            .map(|c| (c.generator(), substitute(&c.function, &grads)))
            .collect()
    }

    /// Rejects constants for which a table entry degenerates.
    pub fn validate_constants(&self, values: &BTreeMap<AtomId, f64>) -> Result<(), HjError> {
        for s in &self.sectors {
            let get = |atom: AtomId| {
                values
                    .get(&atom)
                    .copied()
                    .ok_or_else(|| HjError::ConstantsUnsolvable(format!("no value for {}", self.phase().render(atom))))
            };
            let (e, ep) = (get(AtomId::separation(s.index))?, get(AtomId::energy(s.index))?);
            if let Some(reason) = table::degeneracy(&s.coefficients, e, ep) {
                return Err(self.degenerate(s.index, reason));
            }
        }
        Ok(())
    }

    fn degenerate(&self, a: u32, reason: String) -> HjError {
        HjError::DegenerateConstant {
            coord: self.phase().names().name(a).to_string(),
            reason,
        }
    }

    /// `E_a, E'_a, eta_a, lambda_a` for the a-sector phase-space point in
    /// `state` at time `t0`.
    pub fn constants_from_state(
        &self,
        state: &BTreeMap<AtomId, f64>,
        t0: f64,
    ) -> Result<BTreeMap<AtomId, f64>, HjError> {
        let mut out = BTreeMap::new();
        for s in &self.sectors {
            let a = s.index;
            let get = |atom: AtomId| {
                state
                    .get(&atom)
                    .copied()
                    .ok_or_else(|| HjError::ConstantsUnsolvable(format!("state lacks {}", self.phase().render(atom))))
            };
            let (d0, x) = (get(AtomId::chain(a, 0))?, get(AtomId::chain(a, 1))?);
            let (p, pi) = (get(AtomId::p(a))?, get(AtomId::pi(a))?);
            let (e, ep, eta, lambda) =
                table::constants_from_state(&s.coefficients, d0, x, p, pi, t0).map_err(|r| self.degenerate(a, r))?;
            out.insert(AtomId::separation(a), e);
            out.insert(AtomId::energy(a), ep);
            out.insert(AtomId::eta(a), eta);
            out.insert(AtomId::lambda(a), lambda);
        }
        Ok(out)
    }
}

/// Splits `H0` into per-sector coefficients, rejecting anything else.
pub fn decompose(cs: &CanonicalSystem) -> Result<Vec<(u32, SectorCoefficients)>, HjError> {
    let phase = &cs.phase;
    if cs.is_time_dependent() {
        return Err(HjError::NonSeparable("time-dependent Hamiltonian".into()));
    }
    let zero = Q::zero();
    let mut sectors: BTreeMap<u32, SectorCoefficients> = cs
        .hessian
        .a_indices
        .iter()
        .map(|&a| {
            let c = SectorCoefficients {
                alpha: zero,
                beta: zero,
                kappa: zero,
                v0: zero,
                v1: zero,
                v2: zero,
            };
            (a, c)
        })
        .collect();
    let offending = |term: &Expr, why: &str| HjError::NonSeparable(format!("term `{}` {why}", phase.show(term)));
    let mut constant = zero;
    for term in cs.h0.terms() {
        let (coeff, powers) = term.monomial().ok_or_else(|| offending(&term, "is not a monomial"))?;
        if powers.is_empty() {
            constant += coeff;
            continue;
        }
        let mut indices: Vec<u32> = powers.keys().map(|a| a.index).collect();
        indices.sort_unstable();
        indices.dedup();
        if indices.len() > 1 {
            return Err(offending(&term, "couples two coordinates"));
        }
        let a = indices[0];
        let Some(c) = sectors.get_mut(&a) else {
            return Err(offending(&term, "involves a constrained coordinate"));
        };
        let shape: Vec<(Role, u8, u32)> = powers.iter().map(|(x, k)| (x.role, x.level, *k)).collect();
        match shape.as_slice() {
            [(Role::Pi, _, 2)] => c.kappa += coeff,
            [(Role::Chain, 1, 1), (Role::P, _, 1)] => c.alpha += coeff,
            [(Role::Chain, 0, 1), (Role::Chain, 1, 1)] => c.beta += coeff,
            [(Role::Chain, 1, 1)] => c.v1 += coeff,
            [(Role::Chain, 1, 2)] => c.v2 += coeff,
            [(Role::Chain, 1, _)] => return Err(offending(&term, "raises the potential above degree 2")),
            _ => return Err(offending(&term, "has no separable shape")),
        }
    }
    if let Some(first) = sectors.values_mut().next() {
        first.v0 += constant;
    } else if !constant.is_zero() {
        return Err(HjError::NonSeparable("constant Hamiltonian with no a-sector".into()));
    }
    for (a, c) in &sectors {
        let name = phase.names().name(*a);
        if !c.kappa.is_positive() {
            return Err(HjError::NonSeparable(format!(
                "sector {name} needs a positive pi[{name}]^2 coefficient, found {}",
                c.kappa
            )));
        }
        if c.alpha.is_zero() {
            return Err(HjError::NonSeparable(format!("sector {name} has no p[{name}]*D1[{name}] term")));
        }
        if c.v2.is_negative() {
            return Err(HjError::NonSeparable(format!(
                "sector {name}: D1[{name}]^2 coefficient {} gives a convex radicand outside the integral table",
                c.v2
            )));
        }
    }
    Ok(sectors.into_iter().collect())
}

/// Integrates `g(x) dx` for `g` a polynomial in `x` alone.
fn integrate_polynomial(g: &Expr, x: AtomId) -> Option<Expr> {
    if g.atoms().iter().any(|a| *a != x) {
        return None;
    }
    let coeffs = g.polynomial_in(x)?;
    let xe = Expr::atom(x);
    Some(Expr::add(coeffs.into_iter().map(|(k, c)| {
        let k1 = k as i128 + 1;
        (c * Expr::powi(xe.clone(), k1)).scale(Q::new(1, k1))
    })))
}

pub fn solve_separable(cs: &CanonicalSystem) -> Result<HJSolution, HjError> {
    let phase = &cs.phase;
    let coefficients = decompose(cs)?;
    let sectors: Vec<Sector> = coefficients
        .into_iter()
        .map(|(a, c)| Sector {
            index: a,
            coefficients: c,
            w: table::coordinate_part(a, &c),
            integral: table::integrate(a, &c),
        })
        .collect();
    let mut mu_parts = Vec::new();
    for &m in &cs.hessian.mu_indices {
        let part = |kind: ConstraintKind, level: u8| -> Result<Expr, HjError> {
            let c = cs.constraint(kind, m).expect("every mu-index has both constraints");
            let x = AtomId::chain(m, level);
            integrate_polynomial(&-&c.h, x).ok_or_else(|| {
                HjError::NonSeparable(format!(
                    "constraint {} is not a polynomial in {} alone",
                    phase.show(&c.function),
                    phase.render(x)
                ))
            })
        };
        mu_parts.push(MuPart {
            index: m,
            f: part(ConstraintKind::P, 0)?,
            f_prime: part(ConstraintKind::Pi, 1)?,
        });
    }
    let time_part = -(Expr::add(sectors.iter().map(|s| Expr::atom(AtomId::energy(s.index)))) * phase.time());
    Ok(HJSolution {
        canonical: cs.clone(),
        time_part,
        sectors,
        mu_parts,
        additive: Expr::atom(AtomId::additive()),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorTrajectory {
    pub index: u32,
    pub family: Family,
    pub d0: Expr,
    pub d1: Expr,
    pub p: Expr,
    pub pi: Expr,
    /// Sign relating `pi(t)` to the principal root `sqrt(R)` just after
    /// `t = -eta`, at the reference constants.
    pub branch: i8,
}

/// Constrained coordinates stay arbitrary parameters; their momenta follow
/// from the constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuTrajectory {
    pub index: u32,
    pub p: Expr,
    pub pi: Expr,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub sectors: Vec<SectorTrajectory>,
    pub mu: Vec<MuTrajectory>,
}

impl Trajectory {
    pub fn sector(&self, a: u32) -> Option<&SectorTrajectory> {
        self.sectors.iter().find(|s| s.index == a)
    }

    /// Phase-space values at time `t`. `constants` holds `E, E', eta,
    /// lambda` per sector and any mu-coordinate parameters that are wanted.
    pub fn state_at(&self, constants: &BTreeMap<AtomId, f64>, t: f64) -> Result<BTreeMap<AtomId, f64>, EvalError> {
        let mut env = constants.clone();
        env.insert(AtomId::time(), t);
        let mut out = BTreeMap::new();
        for s in &self.sectors {
            out.insert(AtomId::chain(s.index, 0), eval_numeric(&s.d0, &env)?);
            out.insert(AtomId::chain(s.index, 1), eval_numeric(&s.d1, &env)?);
            out.insert(AtomId::p(s.index), eval_numeric(&s.p, &env)?);
            out.insert(AtomId::pi(s.index), eval_numeric(&s.pi, &env)?);
        }
        for m in &self.mu {
            for (atom, e) in [(AtomId::p(m.index), &m.p), (AtomId::pi(m.index), &m.pi)] {
                if let Ok(v) = eval_numeric(e, &env) {
                    out.insert(atom, v);
                }
            }
        }
        Ok(out)
    }
}

pub fn derive_trajectories(hj: &HJSolution) -> Result<Trajectory, HjError> {
    let mut sectors = Vec::new();
    for s in &hj.sectors {
        let a = s.index;
        let c = &s.coefficients;
        let (d1, d0, pi) = table::invert(a, c);
        // p_a = dW_a/dD0 along the flow
        let p = substitute(
            &differentiate(&s.w, AtomId::chain(a, 0)),
            &BTreeMap::from([(AtomId::chain(a, 0), d0.clone())]),
        );
        let branch = select_branch(hj, s, &d1, &pi)?;
        sectors.push(SectorTrajectory {
            index: a,
            family: c.family(),
            d0,
            d1,
            p,
            pi,
            branch,
        });
    }
    let mu = hj
        .canonical
        .hessian
        .mu_indices
        .iter()
        .map(|&m| MuTrajectory {
            index: m,
            p: hj.gradient(AtomId::chain(m, 0)),
            pi: hj.gradient(AtomId::chain(m, 1)),
        })
        .collect();
    Ok(Trajectory { sectors, mu })
}

/// Checks `dD1/dt = 2 kappa pi` just after `t = -eta` and reads off the sign
/// of `pi` against the principal root.
fn select_branch(hj: &HJSolution, s: &Sector, d1: &Expr, pi: &Expr) -> Result<i8, HjError> {
    let a = s.index;
    let (e, ep) = table::reference_constants(&s.coefficients);
    let env = |t: f64| {
        BTreeMap::from([
            (AtomId::separation(a), e),
            (AtomId::energy(a), ep),
            (AtomId::eta(a), 0.0),
            (AtomId::lambda(a), 0.0),
            (AtomId::time(), t),
        ])
    };
    let t = 1e-3;
    let dt = 1e-6;
    let rate = (eval_numeric(d1, &env(t + dt))? - eval_numeric(d1, &env(t - dt))?) / (2.0 * dt);
    let pi_t = eval_numeric(pi, &env(t))?;
    let kappa = *s.coefficients.kappa.numer() as f64 / *s.coefficients.kappa.denom() as f64;
    let mut point = env(t);
    point.insert(AtomId::chain(a, 1), eval_numeric(d1, &point)?);
    let root = eval_numeric(&s.integral.integrand(), &point)?;
    let coherent = (rate - 2.0 * kappa * pi_t).abs() <= 1e-6 * rate.abs().max(1.0);
    let matches = (pi_t.abs() - root).abs() <= 1e-9 * root.max(1.0);
    if !coherent || !matches || root == 0.0 {
        return Err(HjError::Branch {
            coord: hj.phase().names().name(a).to_string(),
        });
    }
    Ok(if pi_t >= 0.0 { 1 } else { -1 })
}
