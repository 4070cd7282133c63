//! MILP formulations of the search planning problem.

mod build;
mod model;

pub use build::{
    build_fn_model, build_model, build_mv_model, build_sv_model, fix_searcher_path,
    model_kind_for, ModelBuilder,
};
pub use model::{
    BeliefSlot, Constraint, LinExpr, MilpModel, ModelKind, MoveTarget, Relation, VarDef, VarId,
    VarKind, VarName,
};
