//! Exhaustive joint-path enumeration with exact belief scoring.
//!
//! Every legal joint path over the planning horizon is expanded depth-first
//! and scored with the exact belief recursion, sharing belief prefixes along
//! the search tree. This is simultaneously the planning baseline that the
//! MILP route is measured against and the correctness oracle for it: on any
//! instance small enough to enumerate, the best enumerated reward is the
//! true optimum.

use std::time::Instant;

use crate::belief::{update_belief, BeliefVector, JointPlan};
use crate::error::Error;
use crate::graph::Vertex;
use crate::instance::Instance;
use crate::Result;

use super::external::{SolveResult, SolveStatus};

/// Default cap on the number of joint paths an enumeration may expand.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Outcome of an exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct EnumerationOutcome {
    pub result: SolveResult,
    /// Reward-maximal joint plan; ties broken by lexicographically smallest
    /// plan in searcher-major order.
    pub plan: JointPlan,
    /// Number of complete joint paths scored.
    pub leaves: u64,
}

/// Number of legal paths of length `horizon` for one searcher, by dynamic
/// programming over step-indexed walk counts.
pub fn count_searcher_paths(instance: &Instance, start: Vertex, horizon: usize) -> Result<u128> {
    let n = instance.vertex_count();
    let mut ways = vec![0u128; n + 1];
    ways[start] = 1;
    for _ in 0..horizon {
        let mut next = vec![0u128; n + 1];
        for v in 1..=n {
            if ways[v] == 0 {
                continue;
            }
            for &to in instance.graph.neighbors_closed(v)? {
                next[to] = next[to].saturating_add(ways[v]);
            }
        }
        ways = next;
    }
    Ok(ways.iter().sum())
}

/// Estimated joint-path count: the product over searchers of their single
/// path counts (fixed searchers contribute a factor of one).
pub fn estimate_joint_paths(instance: &Instance, fixed: &[Option<Vec<Vertex>>]) -> Result<u128> {
    let mut product: u128 = 1;
    for (idx, &start) in instance.starts.iter().enumerate() {
        if fixed.get(idx).is_some_and(|f| f.is_some()) {
            continue;
        }
        let count = count_searcher_paths(instance, start, instance.horizon)?;
        product = product.saturating_mul(count);
    }
    Ok(product)
}

/// Enumerates every legal joint path over the instance horizon and returns
/// the reward-maximal one.
pub fn solve_enumeration(instance: &Instance, cap: u64) -> Result<EnumerationOutcome> {
    solve_enumeration_with_fixed(instance, &vec![None; instance.searcher_count()], cap)
}

/// Enumeration with some searchers pinned to given paths; only the free
/// searchers' moves are expanded. Used by the implicit-coordination planner
/// to optimize one searcher at a time.
pub fn solve_enumeration_with_fixed(
    instance: &Instance,
    fixed: &[Option<Vec<Vertex>>],
    cap: u64,
) -> Result<EnumerationOutcome> {
    let started = Instant::now();
    let m = instance.searcher_count();
    let h = instance.horizon;
    if fixed.len() != m {
        return Err(Error::InvalidInput {
            what: "fixed paths",
            message: format!("expected {m} entries, got {}", fixed.len()),
        });
    }
    for (idx, entry) in fixed.iter().enumerate() {
        if let Some(path) = entry {
            if path.len() != h + 1 {
                return Err(Error::InvalidInput {
                    what: "fixed paths",
                    message: format!(
                        "fixed path of searcher {} must have {} vertices, got {}",
                        idx + 1,
                        h + 1,
                        path.len()
                    ),
                });
            }
            if path[0] != instance.starts[idx] {
                return Err(Error::IllegalPlanStep {
                    searcher: idx + 1,
                    time: 0,
                    from: instance.starts[idx],
                    to: path[0],
                });
            }
            for t in 0..h {
                if !instance.graph.neighbors_closed(path[t])?.contains(&path[t + 1]) {
                    return Err(Error::IllegalPlanStep {
                        searcher: idx + 1,
                        time: t + 1,
                        from: path[t],
                        to: path[t + 1],
                    });
                }
            }
        }
    }

    let estimate = estimate_joint_paths(instance, fixed)?;
    if estimate > cap as u128 {
        return Err(Error::EnumerationCapExceeded { estimate, cap });
    }

    let mut search = Search {
        instance,
        fixed,
        paths: instance.starts.iter().map(|&s| vec![s]).collect(),
        best_reward: f64::NEG_INFINITY,
        best_plan: None,
        leaves: 0,
    };
    let initial = instance.initial_belief.clone();
    let reward0 = initial.capture_mass();
    search.expand_step(0, &initial, reward0, 1.0)?;

    let plan = JointPlan::new(search.best_plan.expect("enumeration visits at least one leaf"))?;
    let wall_time = started.elapsed();
    Ok(EnumerationOutcome {
        result: SolveResult {
            status: SolveStatus::Optimal,
            objective: Some(search.best_reward),
            assignment: Default::default(),
            mip_gap: Some(0.0),
            wall_time,
            solver: "enumeration".into(),
            diagnostics: String::new(),
        },
        plan,
        leaves: search.leaves,
    })
}

struct Search<'a> {
    instance: &'a Instance,
    fixed: &'a [Option<Vec<Vertex>>],
    paths: Vec<Vec<Vertex>>,
    best_reward: f64,
    best_plan: Option<Vec<Vec<Vertex>>>,
    leaves: u64,
}

impl Search<'_> {
    /// Expands all joint moves for the step `t -> t+1`, or scores the leaf
    /// when the horizon is exhausted.
    fn expand_step(
        &mut self,
        t: usize,
        belief: &BeliefVector,
        reward: f64,
        weight: f64,
    ) -> Result<()> {
        if t == self.instance.horizon {
            self.leaves += 1;
            if reward > self.best_reward
                || (reward == self.best_reward
                    && self
                        .best_plan
                        .as_ref()
                        .is_some_and(|best| self.paths < *best))
            {
                self.best_reward = reward;
                self.best_plan = Some(self.paths.clone());
            }
            return Ok(());
        }
        self.expand_searcher(t, 0, belief, reward, weight)
    }

    /// Chooses the next vertex of searcher `idx` for step `t+1`; once every
    /// searcher has moved, applies one belief update and descends.
    fn expand_searcher(
        &mut self,
        t: usize,
        idx: usize,
        belief: &BeliefVector,
        reward: f64,
        weight: f64,
    ) -> Result<()> {
        let m = self.instance.searcher_count();
        if idx == m {
            let positions: Vec<Vertex> = self.paths.iter().map(|p| p[t + 1]).collect();
            let next = update_belief(
                belief,
                &self.instance.motion,
                &positions,
                &self.instance.capture,
                &self.instance.graph,
                &self.instance.distances,
            )?;
            let weight = weight * self.instance.discount;
            let reward = reward + weight * next.capture_mass();
            self.expand_step(t + 1, &next, reward, weight)?;
            return Ok(());
        }
        if let Some(path) = &self.fixed[idx] {
            self.paths[idx].push(path[t + 1]);
            self.expand_searcher(t, idx + 1, belief, reward, weight)?;
            self.paths[idx].pop();
            return Ok(());
        }
        let current = self.paths[idx][t];
        let moves: Vec<Vertex> = self.instance.graph.neighbors_closed(current)?.to_vec();
        for to in moves {
            self.paths[idx].push(to);
            self.expand_searcher(t, idx + 1, belief, reward, weight)?;
            self.paths[idx].pop();
        }
        Ok(())
    }
}
