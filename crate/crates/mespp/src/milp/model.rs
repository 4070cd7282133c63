//! Solver-agnostic MILP structures: named variables, linear constraints,
//! and a linear maximization objective.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::Error;
use crate::graph::Vertex;
use crate::Result;

/// Index of a variable inside its model.
pub type VarId = usize;

/// Where a searcher move ends: a graph vertex or the fictitious terminal
/// vertex that absorbs every path after the last step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoveTarget {
    Vertex(Vertex),
    Goal,
}

/// Belief-vector slot: the capture state or a graph vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BeliefSlot {
    Capture,
    Vertex(Vertex),
}

/// Structured variable identity. The LP rendering of each family is part of
/// the file format and must stay stable:
/// `x_<s>_<t>_<v>`, `y_<s>_<t>_<u>_<v|g>`, `alpha_<t>_<v>`, `beta_<t>_<c|v>`,
/// `betaS_<s>_<t>_<v>`, `psi_<t>_<v>`, `psiS_<s>_<t>_<v>`,
/// `delta_<s>_<t>_<v>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarName {
    /// Searcher `s` occupies vertex `v` at step `t`.
    Position { s: usize, t: usize, v: Vertex },
    /// Searcher `s` moves from `from` between steps `t` and `t+1`.
    Move {
        s: usize,
        t: usize,
        from: Vertex,
        to: MoveTarget,
    },
    /// Target mass arriving at `v` at step `t` before any sensing.
    MotionMass { t: usize, v: Vertex },
    /// Belief entry after sensing at step `t`.
    Belief { t: usize, at: BeliefSlot },
    /// Belief at `v` after the first `s` searchers' sensing at step `t`.
    BeliefStage { s: usize, t: usize, v: Vertex },
    /// Whether any searcher covers `v` at step `t`.
    Coverage { t: usize, v: Vertex },
    /// Whether searcher `s` covers `v` at step `t`.
    CoverageStage { s: usize, t: usize, v: Vertex },
    /// Linearized product: stage belief at `v` masked by searcher `s`'s
    /// coverage indicator.
    UnseenMass { s: usize, t: usize, v: Vertex },
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarName::Position { s, t, v } => write!(f, "x_{s}_{t}_{v}"),
            VarName::Move { s, t, from, to } => match to {
                MoveTarget::Vertex(v) => write!(f, "y_{s}_{t}_{from}_{v}"),
                MoveTarget::Goal => write!(f, "y_{s}_{t}_{from}_g"),
            },
            VarName::MotionMass { t, v } => write!(f, "alpha_{t}_{v}"),
            VarName::Belief { t, at } => match at {
                BeliefSlot::Capture => write!(f, "beta_{t}_c"),
                BeliefSlot::Vertex(v) => write!(f, "beta_{t}_{v}"),
            },
            VarName::BeliefStage { s, t, v } => write!(f, "betaS_{s}_{t}_{v}"),
            VarName::Coverage { t, v } => write!(f, "psi_{t}_{v}"),
            VarName::CoverageStage { s, t, v } => write!(f, "psiS_{s}_{t}_{v}"),
            VarName::UnseenMass { s, t, v } => write!(f, "delta_{s}_{t}_{v}"),
        }
    }
}

/// Variable domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarKind {
    Binary,
    Continuous { lo: f64, hi: f64 },
}

/// A declared variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VarDef {
    pub name: VarName,
    pub kind: VarKind,
}

/// Sparse linear expression over model variables, kept in insertion order so
/// serialization is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, var: VarId, coefficient: f64) -> Self {
        self.push(var, coefficient);
        self
    }

    pub fn push(&mut self, var: VarId, coefficient: f64) {
        self.terms.push((var, coefficient));
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Constraint relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        }
    }
}

/// A named linear constraint `expr <relation> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
    pub relation: Relation,
    pub rhs: f64,
}

/// Which capture formulation a complete model encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Same-vertex capture, perfect sensing.
    SameVertex,
    /// Arbitrary capture range, perfect sensing.
    MultiVertex,
    /// Arbitrary capture range with false negatives.
    FalseNegative,
}

impl ModelKind {
    pub fn code(self) -> &'static str {
        match self {
            ModelKind::SameVertex => "SV",
            ModelKind::MultiVertex => "MV",
            ModelKind::FalseNegative => "FN-MV",
        }
    }
}

/// A complete or partial MILP: declared variables, named constraints, and a
/// maximization objective. Immutable once built; all collections preserve
/// construction order so two builds of the same instance are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    kind: ModelKind,
    instance_digest: String,
    vars: Vec<VarDef>,
    index: BTreeMap<VarName, VarId>,
    constraints: Vec<Constraint>,
    objective: LinExpr,
}

impl MilpModel {
    pub(crate) fn new(kind: ModelKind, instance_digest: String) -> Self {
        Self {
            kind,
            instance_digest,
            vars: Vec::new(),
            index: BTreeMap::new(),
            constraints: Vec::new(),
            objective: LinExpr::new(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn instance_digest(&self) -> &str {
        &self.instance_digest
    }

    pub(crate) fn add_var(&mut self, name: VarName, kind: VarKind) -> Result<VarId> {
        if self.index.contains_key(&name) {
            return Err(Error::InvalidInput {
                what: "model",
                message: format!("variable {name} declared twice"),
            });
        }
        let id = self.vars.len();
        self.vars.push(VarDef { name, kind });
        self.index.insert(name, id);
        Ok(id)
    }

    /// Id of a declared variable.
    pub fn var_id(&self, name: VarName) -> Option<VarId> {
        self.index.get(&name).copied()
    }

    pub fn var(&self, id: VarId) -> &VarDef {
        &self.vars[id]
    }

    pub fn vars(&self) -> &[VarDef] {
        &self.vars
    }

    pub(crate) fn add_constraint(
        &mut self,
        name: String,
        expr: LinExpr,
        relation: Relation,
        rhs: f64,
    ) -> Result<()> {
        if self.constraints.iter().any(|c| c.name == name) {
            return Err(Error::InvalidInput {
                what: "model",
                message: format!("constraint name {name} used twice"),
            });
        }
        for &(var, _) in expr.terms() {
            debug_assert!(var < self.vars.len(), "constraint references unknown var");
        }
        self.constraints.push(Constraint {
            name,
            expr,
            relation,
            rhs,
        });
        Ok(())
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub(crate) fn set_objective(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    /// Maximization objective.
    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    /// Number of declared variables matching a predicate on the name.
    pub fn count_vars(&self, predicate: impl Fn(&VarName) -> bool) -> usize {
        self.vars.iter().filter(|v| predicate(&v.name)).count()
    }

    pub fn binary_count(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }
}
