//! Assembles the planning MILPs from an [`Instance`].
//!
//! All three model kinds share the path block (searcher start/goal fixing
//! plus flow conservation over the reachable states, with a dummy terminal
//! vertex absorbing every path after the last step) and the motion block
//! (initial belief pinning plus the linear propagation of target mass).
//! They differ only in how sensing couples searcher positions to the belief:
//!
//! - same-vertex / ranged capture with perfect sensing zeroes the belief at
//!   covered vertices through an indicator and a three-inequality
//!   linearization of `belief = mass * (1 - indicator)`;
//! - ranged capture with false negatives chains one belief stage per
//!   searcher, each stage keeping a `zeta` share of the covered mass, with
//!   the same linearization trick applied per stage.
//!
//! At any integral assignment the linearizations are exact, so a feasible
//! solution's belief trajectory coincides with the exact recursion on the
//! decoded paths; the objective is the discounted sum of the capture entry.
//! Builders are deterministic: the same instance always yields the same
//! variable and constraint ordering.

use crate::belief::{CaptureConfig, CaptureMode};
use crate::error::Error;
use crate::graph::{ReachableSet, Vertex};
use crate::instance::Instance;
use crate::Result;

use super::model::{
    BeliefSlot, LinExpr, MilpModel, ModelKind, MoveTarget, Relation, VarId, VarKind, VarName,
};

/// Incremental model construction; the partial-block methods are public so
/// callers can assemble or inspect pieces in isolation.
pub struct ModelBuilder<'a> {
    instance: &'a Instance,
    reach: Vec<ReachableSet>,
    model: MilpModel,
}

impl<'a> ModelBuilder<'a> {
    pub fn new(instance: &'a Instance, kind: ModelKind) -> Result<Self> {
        Ok(Self {
            reach: instance.reachable_sets()?,
            model: MilpModel::new(kind, instance.digest()),
            instance,
        })
    }

    pub fn model(&self) -> &MilpModel {
        &self.model
    }

    pub fn into_model(self) -> MilpModel {
        self.model
    }

    fn var(&self, name: VarName) -> VarId {
        self.model
            .var_id(name)
            .unwrap_or_else(|| panic!("variable {name} not declared"))
    }

    fn position(&self, s: usize, t: usize, v: Vertex) -> VarId {
        self.var(VarName::Position { s, t, v })
    }

    fn belief(&self, t: usize, at: BeliefSlot) -> VarId {
        self.var(VarName::Belief { t, at })
    }

    fn motion_mass(&self, t: usize, v: Vertex) -> VarId {
        self.var(VarName::MotionMass { t, v })
    }

    /// Start/goal fixing and flow conservation for every searcher, plus the
    /// position and move variables they range over.
    pub fn add_path_constraints(&mut self) -> Result<()> {
        let h = self.instance.horizon;
        let m = self.instance.searcher_count();
        for s in 1..=m {
            let reach = &self.reach[s - 1];
            for t in 0..=h {
                for &v in reach.at(t) {
                    self.model
                        .add_var(VarName::Position { s, t, v }, VarKind::Binary)?;
                }
            }
        }
        for s in 1..=m {
            let reach = &self.reach[s - 1];
            for t in 0..h {
                for &from in reach.at(t) {
                    for &to in self.instance.graph.neighbors_closed(from)? {
                        self.model.add_var(
                            VarName::Move {
                                s,
                                t,
                                from,
                                to: MoveTarget::Vertex(to),
                            },
                            VarKind::Binary,
                        )?;
                    }
                }
            }
            for &from in reach.at(h) {
                self.model.add_var(
                    VarName::Move {
                        s,
                        t: h,
                        from,
                        to: MoveTarget::Goal,
                    },
                    VarKind::Binary,
                )?;
            }
        }

        for s in 1..=m {
            let reach = &self.reach[s - 1];
            let start = reach.start();

            let expr = LinExpr::new().term(self.position(s, 0, start), 1.0);
            self.model
                .add_constraint(format!("start_{s}"), expr, Relation::Eq, 1.0)?;

            let mut expr = LinExpr::new();
            for &to in self.instance.graph.neighbors_closed(start)? {
                expr.push(
                    self.var(VarName::Move {
                        s,
                        t: 0,
                        from: start,
                        to: MoveTarget::Vertex(to),
                    }),
                    1.0,
                );
            }
            self.model
                .add_constraint(format!("startflow_{s}"), expr, Relation::Eq, 1.0)?;

            let mut expr = LinExpr::new();
            for &from in reach.at(h) {
                expr.push(
                    self.var(VarName::Move {
                        s,
                        t: h,
                        from,
                        to: MoveTarget::Goal,
                    }),
                    1.0,
                );
            }
            self.model
                .add_constraint(format!("goalflow_{s}"), expr, Relation::Eq, 1.0)?;

            for t in 1..=h {
                for &v in reach.at(t) {
                    // Position implied by the moves that arrive there.
                    let mut arrive = LinExpr::new().term(self.position(s, t, v), 1.0);
                    for &from in self.instance.graph.neighbors_closed(v)? {
                        if reach.contains(from, t - 1) {
                            arrive.push(
                                self.var(VarName::Move {
                                    s,
                                    t: t - 1,
                                    from,
                                    to: MoveTarget::Vertex(v),
                                }),
                                -1.0,
                            );
                        }
                    }
                    self.model.add_constraint(
                        format!("flowin_{s}_{t}_{v}"),
                        arrive,
                        Relation::Eq,
                        0.0,
                    )?;

                    // Position implied by the moves that leave it.
                    if t < h {
                        let mut depart = LinExpr::new().term(self.position(s, t, v), 1.0);
                        for &to in self.instance.graph.neighbors_closed(v)? {
                            depart.push(
                                self.var(VarName::Move {
                                    s,
                                    t,
                                    from: v,
                                    to: MoveTarget::Vertex(to),
                                }),
                                -1.0,
                            );
                        }
                        self.model.add_constraint(
                            format!("flowout_{s}_{t}_{v}"),
                            depart,
                            Relation::Eq,
                            0.0,
                        )?;
                    } else {
                        let expr = LinExpr::new()
                            .term(self.position(s, t, v), 1.0)
                            .term(
                                self.var(VarName::Move {
                                    s,
                                    t: h,
                                    from: v,
                                    to: MoveTarget::Goal,
                                }),
                                -1.0,
                            );
                        self.model.add_constraint(
                            format!("flowend_{s}_{v}"),
                            expr,
                            Relation::Eq,
                            0.0,
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Initial-belief pinning and linear propagation of target mass, plus
    /// the belief and motion-mass variables.
    pub fn add_motion_constraints(&mut self) -> Result<()> {
        let h = self.instance.horizon;
        let n = self.instance.vertex_count();
        for t in 0..=h {
            self.model.add_var(
                VarName::Belief {
                    t,
                    at: BeliefSlot::Capture,
                },
                VarKind::Continuous { lo: 0.0, hi: 1.0 },
            )?;
            for v in 1..=n {
                self.model.add_var(
                    VarName::Belief {
                        t,
                        at: BeliefSlot::Vertex(v),
                    },
                    VarKind::Continuous { lo: 0.0, hi: 1.0 },
                )?;
            }
        }
        for t in 1..=h {
            for v in 1..=n {
                self.model.add_var(
                    VarName::MotionMass { t, v },
                    VarKind::Continuous { lo: 0.0, hi: 1.0 },
                )?;
            }
        }

        let expr = LinExpr::new().term(self.belief(0, BeliefSlot::Capture), 1.0);
        self.model.add_constraint(
            "initbelief_c".into(),
            expr,
            Relation::Eq,
            self.instance.initial_belief.capture_mass(),
        )?;
        for v in 1..=n {
            let expr = LinExpr::new().term(self.belief(0, BeliefSlot::Vertex(v)), 1.0);
            self.model.add_constraint(
                format!("initbelief_{v}"),
                expr,
                Relation::Eq,
                self.instance.initial_belief.location(v),
            )?;
        }
        for t in 1..=h {
            for v in 1..=n {
                let mut expr = LinExpr::new().term(self.motion_mass(t, v), 1.0);
                for u in 1..=n {
                    let p = self.instance.motion.entry(u, v);
                    if p != 0.0 {
                        expr.push(self.belief(t - 1, BeliefSlot::Vertex(u)), -p);
                    }
                }
                self.model
                    .add_constraint(format!("motion_{t}_{v}"), expr, Relation::Eq, 0.0)?;
            }
        }
        Ok(())
    }

    /// Searcher positions able to cover vertex `v` at step `t`, as
    /// `(searcher, position)` pairs in searcher-then-vertex order.
    fn covering_positions(&self, t: usize, v: Vertex) -> Vec<(usize, Vertex)> {
        let mut pairs = Vec::new();
        for s in 1..=self.instance.searcher_count() {
            for &u in self.reach[s - 1].at(t) {
                if self.instance.capture.covers(&self.instance.distances, u, v) {
                    pairs.push((s, u));
                }
            }
        }
        pairs
    }

    /// Perfect-sensing capture block: a shared coverage indicator per
    /// `(step, vertex)` that zeroes the post-sensing belief there. Vertices
    /// no searcher can cover at a step keep their motion mass directly and
    /// get no indicator.
    pub fn add_capture_perfect(&mut self) -> Result<()> {
        let h = self.instance.horizon;
        let n = self.instance.vertex_count();
        let m = self.instance.searcher_count() as f64;

        let mut coverable = Vec::new();
        for t in 1..=h {
            for v in 1..=n {
                let pairs = self.covering_positions(t, v);
                if !pairs.is_empty() {
                    self.model
                        .add_var(VarName::Coverage { t, v }, VarKind::Binary)?;
                }
                coverable.push(pairs);
            }
        }

        for t in 1..=h {
            for v in 1..=n {
                let pairs = &coverable[(t - 1) * n + (v - 1)];
                let belief = self.belief(t, BeliefSlot::Vertex(v));
                let mass = self.motion_mass(t, v);
                if pairs.is_empty() {
                    let expr = LinExpr::new().term(belief, 1.0).term(mass, -1.0);
                    self.model.add_constraint(
                        format!("nocover_{t}_{v}"),
                        expr,
                        Relation::Eq,
                        0.0,
                    )?;
                    continue;
                }
                let indicator = self.var(VarName::Coverage { t, v });
                self.model.add_constraint(
                    format!("lin1_{t}_{v}"),
                    LinExpr::new().term(belief, 1.0).term(indicator, 1.0),
                    Relation::Le,
                    1.0,
                )?;
                self.model.add_constraint(
                    format!("lin2_{t}_{v}"),
                    LinExpr::new().term(belief, 1.0).term(mass, -1.0),
                    Relation::Le,
                    0.0,
                )?;
                self.model.add_constraint(
                    format!("lin3_{t}_{v}"),
                    LinExpr::new()
                        .term(belief, 1.0)
                        .term(mass, -1.0)
                        .term(indicator, 1.0),
                    Relation::Ge,
                    0.0,
                )?;

                let mut occupancy = LinExpr::new();
                for &(s, u) in pairs {
                    occupancy.push(self.position(s, t, u), 1.0);
                }
                let upper = occupancy.clone().term(indicator, -m);
                self.model
                    .add_constraint(format!("capub_{t}_{v}"), upper, Relation::Le, 0.0)?;
                let mut lower = LinExpr::new().term(indicator, 1.0);
                for &(s, u) in pairs {
                    lower.push(self.position(s, t, u), -1.0);
                }
                self.model.add_constraint(
                    format!("caplb_{t}_{v}"),
                    lower,
                    Relation::Le,
                    0.0,
                )?;
            }
            self.add_capture_mass_constraint(t)?;
        }
        Ok(())
    }

    /// False-negative capture block: one belief stage per searcher and step,
    /// chained so each stage keeps a `zeta` share of the covered mass.
    pub fn add_capture_false_negatives(&mut self) -> Result<()> {
        let h = self.instance.horizon;
        let n = self.instance.vertex_count();
        let m = self.instance.searcher_count();

        for s in 1..=m {
            for t in 1..=h {
                for v in 1..=n {
                    self.model.add_var(
                        VarName::BeliefStage { s, t, v },
                        VarKind::Continuous { lo: 0.0, hi: 1.0 },
                    )?;
                }
            }
        }
        for s in 1..=m {
            for t in 1..=h {
                for v in 1..=n {
                    self.model
                        .add_var(VarName::CoverageStage { s, t, v }, VarKind::Binary)?;
                }
            }
        }
        for s in 1..=m {
            for t in 1..=h {
                for v in 1..=n {
                    self.model.add_var(
                        VarName::UnseenMass { s, t, v },
                        VarKind::Continuous { lo: 0.0, hi: 1.0 },
                    )?;
                }
            }
        }

        for t in 1..=h {
            for v in 1..=n {
                for s in 1..=m {
                    let zeta = self.instance.capture.false_negative(s);
                    let previous = if s == 1 {
                        self.motion_mass(t, v)
                    } else {
                        self.var(VarName::BeliefStage { s: s - 1, t, v })
                    };
                    let stage = self.var(VarName::BeliefStage { s, t, v });
                    let indicator = self.var(VarName::CoverageStage { s, t, v });
                    let unseen = self.var(VarName::UnseenMass { s, t, v });

                    self.model.add_constraint(
                        format!("fnlin1_{s}_{t}_{v}"),
                        LinExpr::new().term(unseen, 1.0).term(indicator, 1.0),
                        Relation::Le,
                        1.0,
                    )?;
                    self.model.add_constraint(
                        format!("fnlin2_{s}_{t}_{v}"),
                        LinExpr::new().term(unseen, 1.0).term(previous, -1.0),
                        Relation::Le,
                        0.0,
                    )?;
                    self.model.add_constraint(
                        format!("fnlin3_{s}_{t}_{v}"),
                        LinExpr::new()
                            .term(unseen, 1.0)
                            .term(previous, -1.0)
                            .term(indicator, 1.0),
                        Relation::Ge,
                        0.0,
                    )?;

                    // stage = (1 - zeta) * unseen + zeta * previous
                    let mut chain = LinExpr::new()
                        .term(stage, 1.0)
                        .term(unseen, -(1.0 - zeta));
                    if zeta != 0.0 {
                        chain.push(previous, -zeta);
                    }
                    self.model.add_constraint(
                        format!("fnchain_{s}_{t}_{v}"),
                        chain,
                        Relation::Eq,
                        0.0,
                    )?;

                    // A single searcher occupies one vertex per step, so its
                    // coverage link needs no big-M.
                    let mut occupancy = LinExpr::new();
                    for &u in self.reach[s - 1].at(t) {
                        if self.instance.capture.covers(&self.instance.distances, u, v) {
                            occupancy.push(self.position(s, t, u), 1.0);
                        }
                    }
                    let upper = occupancy.clone().term(indicator, -1.0);
                    self.model.add_constraint(
                        format!("fncapub_{s}_{t}_{v}"),
                        upper,
                        Relation::Le,
                        0.0,
                    )?;
                    let mut lower = LinExpr::new().term(indicator, 1.0);
                    for &(var, coef) in occupancy.terms() {
                        lower.push(var, -coef);
                    }
                    self.model.add_constraint(
                        format!("fncaplb_{s}_{t}_{v}"),
                        lower,
                        Relation::Le,
                        0.0,
                    )?;
                }
                let expr = LinExpr::new()
                    .term(self.belief(t, BeliefSlot::Vertex(v)), 1.0)
                    .term(self.var(VarName::BeliefStage { s: m, t, v }), -1.0);
                self.model.add_constraint(
                    format!("fnfinal_{t}_{v}"),
                    expr,
                    Relation::Eq,
                    0.0,
                )?;
            }
            self.add_capture_mass_constraint(t)?;
        }
        Ok(())
    }

    /// Capture mass is whatever probability the vertices no longer hold.
    fn add_capture_mass_constraint(&mut self, t: usize) -> Result<()> {
        let n = self.instance.vertex_count();
        let mut expr = LinExpr::new().term(self.belief(t, BeliefSlot::Capture), 1.0);
        for v in 1..=n {
            expr.push(self.belief(t, BeliefSlot::Vertex(v)), 1.0);
        }
        self.model
            .add_constraint(format!("capmass_{t}"), expr, Relation::Eq, 1.0)
    }

    /// Discounted sum of the capture entry over every step including step 0
    /// (whose value is pinned by the initial belief).
    pub fn set_reward_objective(&mut self) {
        let mut objective = LinExpr::new();
        let mut weight = 1.0;
        for t in 0..=self.instance.horizon {
            objective.push(self.belief(t, BeliefSlot::Capture), weight);
            weight *= self.instance.discount;
        }
        self.model.set_objective(objective);
    }
}

fn require_perfect_sensing(instance: &Instance, wanted: &str) -> Result<()> {
    if instance.capture.has_false_negatives() {
        return Err(Error::WrongModel {
            message: format!(
                "{wanted} model requires zero false-negative rates; build the false-negative model instead"
            ),
        });
    }
    Ok(())
}

/// Complete model for same-vertex capture with perfect sensing.
pub fn build_sv_model(instance: &Instance) -> Result<MilpModel> {
    if instance.capture.mode() != CaptureMode::SameVertex {
        return Err(Error::WrongModel {
            message: "same-vertex model requires same-vertex capture; build the ranged model instead"
                .into(),
        });
    }
    require_perfect_sensing(instance, "same-vertex")?;
    let mut builder = ModelBuilder::new(instance, ModelKind::SameVertex)?;
    builder.add_path_constraints()?;
    builder.add_motion_constraints()?;
    builder.add_capture_perfect()?;
    builder.set_reward_objective();
    Ok(builder.into_model())
}

/// Complete model for ranged capture with perfect sensing.
pub fn build_mv_model(instance: &Instance) -> Result<MilpModel> {
    require_perfect_sensing(instance, "ranged")?;
    let mut builder = ModelBuilder::new(instance, ModelKind::MultiVertex)?;
    builder.add_path_constraints()?;
    builder.add_motion_constraints()?;
    builder.add_capture_perfect()?;
    builder.set_reward_objective();
    Ok(builder.into_model())
}

/// Complete model for ranged capture with false negatives; valid for any
/// false-negative rates including zero.
pub fn build_fn_model(instance: &Instance) -> Result<MilpModel> {
    let mut builder = ModelBuilder::new(instance, ModelKind::FalseNegative)?;
    builder.add_path_constraints()?;
    builder.add_motion_constraints()?;
    builder.add_capture_false_negatives()?;
    builder.set_reward_objective();
    Ok(builder.into_model())
}

/// Picks the weakest model kind that represents the instance's capture
/// configuration exactly.
pub fn model_kind_for(config: &CaptureConfig) -> ModelKind {
    if config.has_false_negatives() {
        ModelKind::FalseNegative
    } else if config.mode() == CaptureMode::SameVertex {
        ModelKind::SameVertex
    } else {
        ModelKind::MultiVertex
    }
}

/// Builds the model kind matching the instance's capture configuration.
pub fn build_model(instance: &Instance) -> Result<MilpModel> {
    match model_kind_for(&instance.capture) {
        ModelKind::SameVertex => build_sv_model(instance),
        ModelKind::MultiVertex => build_mv_model(instance),
        ModelKind::FalseNegative => build_fn_model(instance),
    }
}

/// Returns a copy of `model` with searcher `s`'s position variables pinned
/// to the given path by equality constraints, leaving the LP structure
/// otherwise untouched.
pub fn fix_searcher_path(
    model: &MilpModel,
    instance: &Instance,
    s: usize,
    path: &[Vertex],
) -> Result<MilpModel> {
    if path.len() != instance.horizon + 1 {
        return Err(Error::InvalidInput {
            what: "fixed path",
            message: format!(
                "path must have {} vertices, got {}",
                instance.horizon + 1,
                path.len()
            ),
        });
    }
    for t in 0..path.len() - 1 {
        if !instance.graph.neighbors_closed(path[t])?.contains(&path[t + 1]) {
            return Err(Error::IllegalPlanStep {
                searcher: s,
                time: t + 1,
                from: path[t],
                to: path[t + 1],
            });
        }
    }
    let reach = ReachableSet::compute(
        &instance.graph,
        &instance.distances,
        instance.starts[s - 1],
        instance.horizon,
    )?;
    let mut fixed = model.clone();
    for (t, &on) in path.iter().enumerate() {
        if !reach.contains(on, t) {
            return Err(Error::InfeasibleFixing {
                searcher: s,
                time: t,
                vertex: on,
            });
        }
        for &v in reach.at(t) {
            let var = fixed
                .var_id(VarName::Position { s, t, v })
                .ok_or_else(|| Error::InvalidInput {
                    what: "fixed path",
                    message: format!("model has no position variable for searcher {s}"),
                })?;
            let expr = LinExpr::new().term(var, 1.0);
            let value = if v == on { 1.0 } else { 0.0 };
            fixed.add_constraint(format!("fix_{s}_{t}_{v}"), expr, Relation::Eq, value)?;
        }
    }
    Ok(fixed)
}
