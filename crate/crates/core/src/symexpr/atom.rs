use std::fmt;

/// What an atom stands for. The declaration order is the canonical order used
/// when sorting atoms inside sums and products.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Time,
    /// Chain coordinate `D<level>[q_i]`.
    Chain,
    /// Momentum conjugate to chain level 0.
    P,
    /// Momentum conjugate to chain level 1.
    Pi,
    /// Momentum conjugate to `t`.
    P0,
    /// Separation constant `E_a`.
    Separation,
    /// Energy-like constant `E'_a`.
    Energy,
    Eta,
    Lambda,
    /// Additive constant of the action.
    Additive,
    Hbar,
}

/// Identity of a named atom: `(role, coordinate index, chain level)`.
///
/// Coordinate indices are 1-based. Atoms without a coordinate carry index 0,
/// and only [`Role::Chain`] atoms carry a nonzero level.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId {
    pub role: Role,
    pub index: u32,
    pub level: u8,
}

pub const MAX_LEVEL: u8 = 3;

impl AtomId {
    const fn new(role: Role, index: u32, level: u8) -> Self {
        AtomId { role, index, level }
    }

    pub fn chain(index: u32, level: u8) -> Self {
        assert!(level <= MAX_LEVEL, "chain level {level} out of range");
        Self::new(Role::Chain, index, level)
    }

    pub const fn p(index: u32) -> Self {
        Self::new(Role::P, index, 0)
    }

    pub const fn pi(index: u32) -> Self {
        Self::new(Role::Pi, index, 0)
    }

    pub const fn time() -> Self {
        Self::new(Role::Time, 0, 0)
    }

    pub const fn p0() -> Self {
        Self::new(Role::P0, 0, 0)
    }

    pub const fn separation(index: u32) -> Self {
        Self::new(Role::Separation, index, 0)
    }

    pub const fn energy(index: u32) -> Self {
        Self::new(Role::Energy, index, 0)
    }

    pub const fn eta(index: u32) -> Self {
        Self::new(Role::Eta, index, 0)
    }

    pub const fn lambda(index: u32) -> Self {
        Self::new(Role::Lambda, index, 0)
    }

    pub const fn additive() -> Self {
        Self::new(Role::Additive, 0, 0)
    }

    pub const fn hbar() -> Self {
        Self::new(Role::Hbar, 0, 0)
    }

    pub fn is_momentum(&self) -> bool {
        matches!(self.role, Role::P | Role::Pi | Role::P0)
    }

    pub fn is_chain(&self) -> bool {
        self.role == Role::Chain
    }

    pub fn is_chain_level(&self, level: u8) -> bool {
        self.role == Role::Chain && self.level == level
    }

    /// Integration, separation and trajectory constants (plus `A`).
    pub fn is_constant(&self) -> bool {
        matches!(
            self.role,
            Role::Separation | Role::Energy | Role::Eta | Role::Lambda | Role::Additive
        )
    }

    /// For a momentum atom, the coordinate it is conjugate to.
    pub fn conjugate(&self) -> Option<AtomId> {
        match self.role {
            Role::P => Some(AtomId::chain(self.index, 0)),
            Role::Pi => Some(AtomId::chain(self.index, 1)),
            Role::P0 => Some(AtomId::time()),
            _ => None,
        }
    }

    /// Renders the atom using `coord` to name coordinate `i`.
    pub fn render(&self, coord: &dyn Fn(u32) -> String) -> String {
        match self.role {
            Role::Time => "t".to_string(),
            Role::Chain => format!("D{}[{}]", self.level, coord(self.index)),
            Role::P => format!("p[{}]", coord(self.index)),
            Role::Pi => format!("pi[{}]", coord(self.index)),
            Role::P0 => "p0".to_string(),
            Role::Separation => format!("E[{}]", self.index),
            Role::Energy => format!("Ep[{}]", self.index),
            Role::Eta => format!("eta[{}]", self.index),
            Role::Lambda => format!("lambda[{}]", self.index),
            Role::Additive => "A".to_string(),
            Role::Hbar => "hbar".to_string(),
        }
    }
}

impl fmt::Debug for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&|i| format!("q{i}")))
    }
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Coordinate names, mapping `q_i` (1-based) to the user's spelling.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoordNames {
    names: Vec<String>,
}

impl CoordNames {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        CoordNames {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<u32> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as u32 + 1)
    }

    pub fn name(&self, index: u32) -> String {
        match index.checked_sub(1).and_then(|i| self.names.get(i as usize)) {
            Some(n) => n.clone(),
            None => format!("q{index}"),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn render(&self, atom: AtomId) -> String {
        atom.render(&|i| self.name(i))
    }
}
