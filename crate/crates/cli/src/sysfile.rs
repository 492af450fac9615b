//! System description files.
//!
//! ```text
//! # comment
//! coords q1 q2 q3
//! L = 1/2*(D2[q1]^2 + D2[q2]^2) + D1[q3]*D2[q3]
//! [constants]
//! E[1] = 1
//! Ep[q1] = 1
//! [run]
//! t0 = 0
//! t1 = 10
//! h = 1e-3
//! D0[q3] = 1/2 + sin(t)
//! [quantize]
//! perturb = D1[q1]^3
//! ```
//!
//! Exactly one `coords` line and one `L` line precede the optional blocks.

use std::collections::BTreeMap;

use hjwkb_core::model::{build_system, LagrangianSystem, ModelError, PhaseSpace};
use hjwkb_core::symexpr::{eval_numeric, AtomId, Expr, ParseError, Role};

use crate::CliError;

/// Right-hand side text with its position in the file (1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located {
    pub text: String,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawFile {
    pub coords: Vec<String>,
    pub lagrangian: Option<Located>,
    pub constants: Vec<(Located, Located)>,
    pub run: Vec<(Located, Located)>,
    pub quantize: Vec<(Located, Located)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    Header,
    Constants,
    Run,
    Quantize,
}

fn file_error(line: usize, column: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Splits `lhs = rhs`, keeping columns.
fn assignment(raw: &str, line: usize) -> Result<(Located, Located), CliError> {
    let eq = raw
        .find('=')
        .ok_or_else(|| file_error(line, 1, format!("expected `name = value`, found `{}`", raw.trim())))?;
    let lhs = &raw[..eq];
    let rhs = &raw[eq + 1..];
    let lead = |s: &str| s.len() - s.trim_start().len();
    let left = Located {
        text: lhs.trim().to_string(),
        line,
        column: lead(lhs) + 1,
    };
    let right = Located {
        text: rhs.trim().to_string(),
        line,
        column: eq + 2 + lead(rhs),
    };
    if right.text.is_empty() {
        return Err(file_error(line, eq + 2, "missing value after `=`"));
    }
    Ok((left, right))
}

pub fn parse_raw(source: &str) -> Result<RawFile, CliError> {
    let mut out = RawFile::default();
    let mut block = Block::Header;
    let mut seen_coords = false;
    for (k, full) in source.lines().enumerate() {
        let line = k + 1;
        let raw = full.split('#').next().unwrap_or("");
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('[') && trimmed.ends_with(']') && !trimmed.contains('=') {
            block = match trimmed {
                "[constants]" => Block::Constants,
                "[run]" => Block::Run,
                "[quantize]" => Block::Quantize,
                other => return Err(file_error(line, 1, format!("unknown block {other}"))),
            };
            continue;
        }
        match block {
            Block::Header => {
                if let Some(rest) = trimmed.strip_prefix("coords") {
                    if seen_coords {
                        return Err(file_error(line, 1, "second coords line"));
                    }
                    seen_coords = true;
                    out.coords = rest.split_whitespace().map(str::to_string).collect();
                } else {
                    let (lhs, rhs) = assignment(raw, line)?;
                    if lhs.text != "L" {
                        return Err(file_error(line, lhs.column, format!("expected `coords` or `L =`, found `{}`", lhs.text)));
                    }
                    if out.lagrangian.is_some() {
                        return Err(file_error(line, 1, "second L line"));
                    }
                    out.lagrangian = Some(rhs);
                }
            }
            Block::Constants => out.constants.push(assignment(raw, line)?),
            Block::Run => out.run.push(assignment(raw, line)?),
            Block::Quantize => out.quantize.push(assignment(raw, line)?),
        }
    }
    if !seen_coords {
        return Err(file_error(1, 1, "missing coords line"));
    }
    if out.lagrangian.is_none() {
        return Err(file_error(1, 1, "missing L line"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunBlock {
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
    /// Parameter functions of `t` for constrained coordinates.
    pub parameters: BTreeMap<AtomId, Expr>,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            t0: 0.0,
            t1: 10.0,
            h: 1e-3,
            parameters: BTreeMap::new(),
        }
    }
}

/// A parsed and resolved system file.
#[derive(Clone, Debug)]
pub struct SystemFile {
    pub system: LagrangianSystem,
    pub lagrangian_source: String,
    /// Explicitly fixed constants.
    pub constants: BTreeMap<AtomId, f64>,
    pub run: RunBlock,
    /// Extra term added to `S` before quantization.
    pub perturb: Option<Expr>,
}

impl SystemFile {
    pub fn phase(&self) -> &PhaseSpace {
        &self.system.phase
    }
}

fn located_parse_error(at: &Located, e: &ParseError) -> CliError {
    let column = if e.line <= 1 { at.column + e.column - 1 } else { e.column };
    file_error(at.line + e.line.saturating_sub(1), column, e.kind.to_string())
}

fn expr(phase: &PhaseSpace, at: &Located) -> Result<Expr, CliError> {
    phase.parse(&at.text).map_err(|e| located_parse_error(at, &e))
}

/// A real number: plain float syntax or a constant expression such as `1/3`.
fn number(phase: &PhaseSpace, at: &Located) -> Result<f64, CliError> {
    if let Ok(v) = at.text.parse::<f64>() {
        return Ok(v);
    }
    let e = expr(phase, at)?;
    eval_numeric(&e, &[][..]).map_err(|err| file_error(at.line, at.column, format!("`{}` is not a number: {err}", at.text)))
}

fn single_atom(phase: &PhaseSpace, at: &Located) -> Result<AtomId, CliError> {
    expr(phase, at)?
        .as_atom()
        .ok_or_else(|| file_error(at.line, at.column, format!("`{}` is not a single atom", at.text)))
}

pub fn parse_system_file(source: &str) -> Result<SystemFile, CliError> {
    let raw = parse_raw(source)?;
    let l = raw.lagrangian.clone().expect("checked by parse_raw");
    let system = build_system(&raw.coords, &l.text).map_err(|e| match e {
        ModelError::Parse(p) => located_parse_error(&l, &p),
        ModelError::NoCoordinates | ModelError::InvalidCoordinate(_) | ModelError::DuplicateCoordinate(_) => {
            file_error(1, 1, e.to_string())
        }
        other => CliError::Model(other),
    })?;
    let phase = system.phase.clone();
    let n = phase.dim() as u32;

    let mut constants = BTreeMap::new();
    for (lhs, rhs) in &raw.constants {
        let atom = single_atom(&phase, lhs)?;
        if !matches!(atom.role, Role::Separation | Role::Energy | Role::Eta | Role::Lambda) {
            return Err(file_error(lhs.line, lhs.column, format!("`{}` is not one of E, Ep, eta, lambda", lhs.text)));
        }
        if atom.index == 0 || atom.index > n {
            return Err(file_error(lhs.line, lhs.column, format!("`{}` refers to an undeclared index", lhs.text)));
        }
        constants.insert(atom, number(&phase, rhs)?);
    }

    let mut run = RunBlock::default();
    for (lhs, rhs) in &raw.run {
        match lhs.text.as_str() {
            "t0" => run.t0 = number(&phase, rhs)?,
            "t1" => run.t1 = number(&phase, rhs)?,
            "h" => run.h = number(&phase, rhs)?,
            _ => {
                let atom = single_atom(&phase, lhs)?;
                if !(atom.is_chain_level(0) || atom.is_chain_level(1)) {
                    return Err(file_error(lhs.line, lhs.column, format!("`{}` is not a D0 or D1 coordinate", lhs.text)));
                }
                let f = expr(&phase, rhs)?;
                if let Some(bad) = f.atoms().into_iter().find(|a| a.role != Role::Time) {
                    return Err(file_error(
                        rhs.line,
                        rhs.column,
                        format!("parameter functions depend on t only, found {}", phase.render(bad)),
                    ));
                }
                run.parameters.insert(atom, f);
            }
        }
    }

    let mut perturb = None;
    for (lhs, rhs) in &raw.quantize {
        match lhs.text.as_str() {
            "perturb" => perturb = Some(expr(&phase, rhs)?),
            other => return Err(file_error(lhs.line, lhs.column, format!("unknown quantize key `{other}`"))),
        }
    }

    Ok(SystemFile {
        system,
        lagrangian_source: l.text,
        constants,
        run,
        perturb,
    })
}
