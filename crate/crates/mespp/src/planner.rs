//! Planning regimes: one centralized solve over the full horizon, and
//! distributed implicit coordination where each searcher optimizes its own
//! path in index order with teammates held fixed, replanned every step over
//! a receding horizon.

use std::time::Duration;

use crate::belief::{evaluate_joint_plan, update_belief, JointPlan};
use crate::error::Error;
use crate::graph::Vertex;
use crate::instance::Instance;
use crate::milp::{build_model, fix_searcher_path};
use crate::simulator::MissionRecord;
use crate::solver::{
    decode_paths, solve_enumeration, solve_enumeration_with_fixed, solve_external, SolveResult,
    SolveStatus, SolverBackend, SolverSpec,
};
use crate::Result;

/// Belief saturation threshold: a mission stops replanning once the capture
/// mass is within this margin of one.
pub const CAPTURE_SATURATION: f64 = 1.0 - 1e-9;

/// Telemetry of one solve inside a planning call.
#[derive(Debug, Clone)]
pub struct SolveStats {
    /// Searcher whose path was being optimized; `None` for a joint solve.
    pub searcher: Option<usize>,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub mip_gap: Option<f64>,
    pub wall_time: Duration,
}

impl SolveStats {
    fn from_result(searcher: Option<usize>, result: &SolveResult) -> Self {
        Self {
            searcher,
            status: result.status,
            objective: result.objective,
            mip_gap: result.mip_gap,
            wall_time: result.wall_time,
        }
    }
}

/// A planned joint path plus how it was obtained.
#[derive(Debug, Clone)]
pub struct PlanningOutcome {
    pub plan: JointPlan,
    /// Exact discounted reward of `plan`, recomputed with the belief
    /// recursion so it is comparable across solver backends.
    pub objective: f64,
    /// One record per solve: a single entry for centralized planning, one
    /// per searcher for distributed planning.
    pub stats: Vec<SolveStats>,
    /// Searchers that fell back to holding position because their solve
    /// failed.
    pub stay_put: Vec<usize>,
}

/// One centralized solve of the whole-team model over the instance horizon.
pub fn plan_centralized(instance: &Instance, spec: &SolverSpec) -> Result<PlanningOutcome> {
    match &spec.backend {
        SolverBackend::Enumeration => {
            let outcome = solve_enumeration(instance, spec.enumeration_cap)?;
            let objective = evaluate_joint_plan(instance, &outcome.plan)?.reward;
            Ok(PlanningOutcome {
                plan: outcome.plan,
                objective,
                stats: vec![SolveStats::from_result(None, &outcome.result)],
                stay_put: Vec::new(),
            })
        }
        SolverBackend::External { .. } => {
            let model = build_model(instance)?;
            let result = solve_external(&model, spec)?;
            match result.status {
                SolveStatus::Optimal | SolveStatus::FeasibleTimeout => {
                    let plan = decode_paths(instance, &model, &result)?;
                    let objective = evaluate_joint_plan(instance, &plan)?.reward;
                    Ok(PlanningOutcome {
                        plan,
                        objective,
                        stats: vec![SolveStats::from_result(None, &result)],
                        stay_put: Vec::new(),
                    })
                }
                SolveStatus::Infeasible | SolveStatus::Error => Err(Error::SolverFailed {
                    message: format!(
                        "centralized solve failed ({:?}): {}",
                        result.status, result.diagnostics
                    ),
                }),
            }
        }
    }
}

/// One sweep of implicit coordination from the given searcher positions:
/// searchers are planned in index order, each against the freshly planned
/// paths of lower-indexed teammates and stay-put paths of higher-indexed
/// ones. A searcher whose solve fails keeps its position for the whole
/// horizon and is flagged.
pub fn plan_distributed_step(
    instance: &Instance,
    positions: &[Vertex],
    spec: &SolverSpec,
) -> Result<PlanningOutcome> {
    let step_instance = instance.with_starts(positions.to_vec())?;
    let m = step_instance.searcher_count();
    let h = step_instance.horizon;
    let stay_put_path = |s: usize| vec![positions[s - 1]; h + 1];

    let mut planned: Vec<Option<Vec<Vertex>>> = vec![None; m];
    let mut stats = Vec::with_capacity(m);
    let mut stay_put = Vec::new();

    let base_model = match &spec.backend {
        SolverBackend::External { .. } => Some(build_model(&step_instance)?),
        SolverBackend::Enumeration => None,
    };

    for s in 1..=m {
        let teammate_path = |planned: &[Option<Vec<Vertex>>], j: usize| -> Vec<Vertex> {
            planned[j - 1].clone().unwrap_or_else(|| stay_put_path(j))
        };
        match &spec.backend {
            SolverBackend::Enumeration => {
                let mut fixed: Vec<Option<Vec<Vertex>>> =
                    (1..=m).map(|j| Some(teammate_path(&planned, j))).collect();
                fixed[s - 1] = None;
                let outcome =
                    solve_enumeration_with_fixed(&step_instance, &fixed, spec.enumeration_cap)?;
                stats.push(SolveStats::from_result(Some(s), &outcome.result));
                planned[s - 1] = Some(outcome.plan.path(s).to_vec());
            }
            SolverBackend::External { .. } => {
                let mut model = base_model.clone().expect("external backend builds a model");
                for j in 1..=m {
                    if j != s {
                        model = fix_searcher_path(
                            &model,
                            &step_instance,
                            j,
                            &teammate_path(&planned, j),
                        )?;
                    }
                }
                let result = solve_external(&model, spec)?;
                let outcome = match result.status {
                    SolveStatus::Optimal | SolveStatus::FeasibleTimeout => {
                        decode_paths(&step_instance, &model, &result)
                            .map(|plan| plan.path(s).to_vec())
                    }
                    SolveStatus::Infeasible | SolveStatus::Error => Err(Error::SolverFailed {
                        message: result.diagnostics.clone(),
                    }),
                };
                stats.push(SolveStats::from_result(Some(s), &result));
                match outcome {
                    Ok(path) => planned[s - 1] = Some(path),
                    Err(_) => {
                        // Holding position is always feasible; flag and move on.
                        planned[s - 1] = Some(stay_put_path(s));
                        stay_put.push(s);
                    }
                }
            }
        }
    }

    let plan = JointPlan::new(
        planned
            .into_iter()
            .map(|p| p.expect("every searcher planned"))
            .collect(),
    )?;
    let objective = evaluate_joint_plan(&step_instance, &plan)?.reward;
    Ok(PlanningOutcome {
        plan,
        objective,
        stats,
        stay_put,
    })
}

/// What the mission loop consults after each executed step to learn whether
/// the target was actually captured. The belief-only world never captures;
/// the simulator provides a sampled one.
pub trait MissionWorld {
    /// Advances the true world after the searchers move to `positions`;
    /// returns whether the target was captured at this step.
    fn advance(&mut self, instance: &Instance, positions: &[Vertex]) -> Result<bool>;

    /// Seed recorded in mission artifacts, when the world is randomized.
    fn seed(&self) -> Option<u64> {
        None
    }
}

/// Deterministic-belief execution: the mission tracks belief mass only and
/// stops once capture mass saturates.
#[derive(Debug, Default)]
pub struct BeliefWorld;

impl MissionWorld for BeliefWorld {
    fn advance(&mut self, _instance: &Instance, _positions: &[Vertex]) -> Result<bool> {
        Ok(false)
    }
}

/// Solve telemetry of one mission step.
#[derive(Debug, Clone)]
pub struct StepStats {
    pub time: usize,
    pub solves: Vec<SolveStats>,
}

/// Receding-horizon mission: replan with implicit coordination every step,
/// execute the first move of each searcher, update the belief, and stop at
/// the deadline, on capture, or once the belief saturates. Horizons shrink
/// near the deadline so no plan runs past it.
///
/// Replanning always starts from the current belief conditioned on the
/// target not having been captured yet; surviving a sweep (or a false
/// negative) is exactly that conditioning, so the same update covers both
/// the deterministic and the simulated world.
pub fn run_receding_horizon(
    instance: &Instance,
    spec: &SolverSpec,
    world: &mut dyn MissionWorld,
) -> Result<MissionRecord> {
    let deadline = instance.deadline;
    let mut positions = instance.starts.clone();
    let mut paths: Vec<Vec<Vertex>> = positions.iter().map(|&v| vec![v]).collect();
    let mut beliefs = vec![instance.initial_belief.clone()];
    let mut step_stats = Vec::new();
    let mut stay_put_steps = 0;
    let mut captured = false;
    let mut capture_time = deadline + 1;

    for t in 0..deadline {
        let current = beliefs.last().unwrap().clone();
        if current.capture_mass() >= CAPTURE_SATURATION {
            captured = true;
            capture_time = t;
            break;
        }
        let horizon = instance.horizon.min(deadline - t);
        let step_instance = instance
            .with_starts(positions.clone())?
            .with_horizon(horizon)?
            .with_initial_belief(current.conditioned_on_no_capture()?)?;
        let outcome = plan_distributed_step(&step_instance, &positions, spec)?;
        if !outcome.stay_put.is_empty() {
            stay_put_steps += 1;
        }

        let next = outcome.plan.positions_at(1);
        for (path, &v) in paths.iter_mut().zip(&next) {
            path.push(v);
        }
        let updated = update_belief(
            &current,
            &instance.motion,
            &next,
            &instance.capture,
            &instance.graph,
            &instance.distances,
        )?;
        beliefs.push(updated);
        step_stats.push(StepStats {
            time: t,
            solves: outcome.stats,
        });

        let hit = world.advance(instance, &next)?;
        positions = next;
        if hit {
            captured = true;
            capture_time = t + 1;
            break;
        }
    }

    if !captured && beliefs.last().unwrap().capture_mass() >= CAPTURE_SATURATION {
        captured = true;
        capture_time = beliefs.len() - 1;
    }

    Ok(MissionRecord::assemble(
        instance,
        JointPlan::new(paths)?,
        beliefs,
        captured,
        capture_time,
        step_stats,
        stay_put_steps,
        world.seed(),
    ))
}
