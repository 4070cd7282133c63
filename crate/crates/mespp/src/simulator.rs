//! Monte-Carlo mission execution against a sampled target, plus the
//! experiment harness that aggregates the benchmark metrics.
//!
//! A simulated mission samples the target's start from the initial belief
//! and, per step, one motion-kernel move plus an independent detection draw
//! per covering searcher. The recorded belief trajectory is the exact
//! unconditional recursion along the executed paths, so its final capture
//! entry is precisely the probability bookkeeping the empirical capture
//! frequency is checked against.
//!
//! Experiments run many seeded instances, optionally in parallel, with one
//! deterministic RNG stream per (instance, planner) pair derived from the
//! master seed; parallel scheduling cannot change any result.

use std::fmt;
use std::fmt::Write as _;
use std::time::Duration;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::belief::{discounted_reward, update_belief, BeliefVector, JointPlan};
use crate::error::Error;
use crate::graph::Vertex;
use crate::instance::Instance;
use crate::planner::{
    plan_centralized, plan_distributed_step, run_receding_horizon, BeliefWorld, MissionWorld,
    SolveStats, StepStats, CAPTURE_SATURATION,
};
use crate::solver::{SolverBackend, SolverSpec};
use crate::Result;

/// Everything recorded about one executed mission.
#[derive(Debug, Clone)]
pub struct MissionRecord {
    pub executed: JointPlan,
    /// Unconditional belief trajectory along the executed paths, one entry
    /// per step including the initial belief.
    pub beliefs: Vec<BeliefVector>,
    pub captured: bool,
    /// Step of capture; `deadline + 1` when the target was never captured.
    pub capture_time: usize,
    pub deadline: usize,
    /// Discounted capture reward of the recorded trajectory.
    pub reward: f64,
    pub step_stats: Vec<StepStats>,
    /// Mission steps in which at least one searcher fell back to staying put.
    pub stay_put_steps: usize,
    pub seed: Option<u64>,
}

impl MissionRecord {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        instance: &Instance,
        executed: JointPlan,
        beliefs: Vec<BeliefVector>,
        captured: bool,
        capture_time: usize,
        step_stats: Vec<StepStats>,
        stay_put_steps: usize,
        seed: Option<u64>,
    ) -> Self {
        let trajectory: Vec<f64> = beliefs.iter().map(|b| b.capture_mass()).collect();
        Self {
            executed,
            beliefs,
            captured,
            capture_time,
            deadline: instance.deadline,
            reward: discounted_reward(&trajectory, instance.discount),
            step_stats,
            stay_put_steps,
            seed,
        }
    }

    /// Step at which the mission ended: capture time, or the deadline when
    /// the target escaped.
    pub fn mission_time(&self) -> usize {
        if self.captured {
            self.capture_time
        } else {
            self.deadline
        }
    }

    /// Every solve performed during the mission.
    pub fn solves(&self) -> impl Iterator<Item = &SolveStats> {
        self.step_stats.iter().flat_map(|s| s.solves.iter())
    }
}

fn sample_unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

/// Draws the target's start vertex from an initial belief with zero capture
/// mass.
pub fn sample_target_start(belief: &BeliefVector, rng: &mut ChaCha8Rng) -> Result<Vertex> {
    if belief.capture_mass() > 0.0 {
        return Err(Error::UnsupportedStart(belief.capture_mass()));
    }
    let draw = sample_unit(rng);
    let mut cumulative = 0.0;
    let mut last_positive = None;
    for v in 1..=belief.vertex_count() {
        let p = belief.location(v);
        if p > 0.0 {
            last_positive = Some(v);
            cumulative += p;
            if draw < cumulative {
                return Ok(v);
            }
        }
    }
    last_positive.ok_or_else(|| Error::InvalidInput {
        what: "belief vector",
        message: "no vertex carries probability mass".into(),
    })
}

fn sample_target_move(instance: &Instance, from: Vertex, rng: &mut ChaCha8Rng) -> Vertex {
    let draw = sample_unit(rng);
    let mut cumulative = 0.0;
    let mut last_positive = from;
    for v in 1..=instance.vertex_count() {
        let p = instance.motion.entry(from, v);
        if p > 0.0 {
            last_positive = v;
            cumulative += p;
            if draw < cumulative {
                return v;
            }
        }
    }
    last_positive
}

/// Independent detection draw per covering searcher; any success captures.
fn sample_detection(
    instance: &Instance,
    positions: &[Vertex],
    target: Vertex,
    rng: &mut ChaCha8Rng,
) -> bool {
    let mut captured = false;
    for (idx, &at) in positions.iter().enumerate() {
        if instance.capture.covers(&instance.distances, at, target) {
            let miss = instance.capture.false_negative(idx + 1);
            // Draw even when the outcome is forced so the stream layout
            // does not depend on the rates.
            if sample_unit(rng) < 1.0 - miss {
                captured = true;
            }
        }
    }
    captured
}

/// Ground-truth world of one simulated mission.
#[derive(Debug, Clone)]
pub struct SimWorld {
    pub target: Vertex,
    rng: ChaCha8Rng,
    seed: u64,
}

impl SimWorld {
    /// Samples the target start from the instance's initial belief.
    pub fn from_instance(instance: &Instance, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let target = sample_target_start(&instance.initial_belief, &mut rng)?;
        Ok(Self { target, rng, seed })
    }

    /// Places the target explicitly; the RNG still drives motion/detection.
    pub fn with_target(target: Vertex, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { target, rng, seed }
    }
}

impl MissionWorld for SimWorld {
    fn advance(&mut self, instance: &Instance, positions: &[Vertex]) -> Result<bool> {
        self.target = sample_target_move(instance, self.target, &mut self.rng);
        Ok(sample_detection(instance, positions, self.target, &mut self.rng))
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }
}

/// Live state of a mission being stepped manually.
#[derive(Debug, Clone)]
pub struct MissionState {
    pub time: usize,
    pub positions: Vec<Vertex>,
    pub target: Vertex,
    /// Unconditional belief along the executed positions.
    pub belief: BeliefVector,
    pub captured: bool,
}

impl MissionState {
    pub fn new(instance: &Instance, target: Vertex) -> Self {
        Self {
            time: 0,
            positions: instance.starts.clone(),
            target,
            belief: instance.initial_belief.clone(),
            captured: false,
        }
    }
}

/// One mission step: the target moves by one kernel draw, the searchers move
/// to `actions`, detection is sampled per covering searcher, and the belief
/// advances by the exact recursion.
pub fn step_mission(
    instance: &Instance,
    state: &mut MissionState,
    actions: &[Vertex],
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    for (idx, (&from, &to)) in state.positions.iter().zip(actions).enumerate() {
        if !instance.graph.neighbors_closed(from)?.contains(&to) {
            return Err(Error::IllegalPlanStep {
                searcher: idx + 1,
                time: state.time + 1,
                from,
                to,
            });
        }
    }
    state.target = sample_target_move(instance, state.target, rng);
    state.positions = actions.to_vec();
    state.time += 1;
    if sample_detection(instance, &state.positions, state.target, rng) {
        state.captured = true;
    }
    state.belief = update_belief(
        &state.belief,
        &instance.motion,
        actions,
        &instance.capture,
        &instance.graph,
        &instance.distances,
    )?;
    Ok(())
}

/// Executes a precomputed joint plan against a world, holding the final
/// positions if the deadline outlives the plan.
pub fn run_fixed_plan_mission(
    instance: &Instance,
    plan: &JointPlan,
    world: &mut dyn MissionWorld,
) -> Result<MissionRecord> {
    plan.validate(&instance.graph, &instance.starts)?;
    let deadline = instance.deadline;
    let mut paths: Vec<Vec<Vertex>> = instance.starts.iter().map(|&v| vec![v]).collect();
    let mut beliefs = vec![instance.initial_belief.clone()];
    let mut captured = false;
    let mut capture_time = deadline + 1;

    for t in 1..=deadline {
        if beliefs.last().unwrap().capture_mass() >= CAPTURE_SATURATION {
            captured = true;
            capture_time = t - 1;
            break;
        }
        let next: Vec<Vertex> = if t <= plan.steps() {
            plan.positions_at(t)
        } else {
            paths.iter().map(|p| *p.last().unwrap()).collect()
        };
        let updated = update_belief(
            beliefs.last().unwrap(),
            &instance.motion,
            &next,
            &instance.capture,
            &instance.graph,
            &instance.distances,
        )?;
        for (path, &v) in paths.iter_mut().zip(&next) {
            path.push(v);
        }
        beliefs.push(updated);
        if world.advance(instance, &next)? {
            captured = true;
            capture_time = t;
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
        Vec::new(),
        0,
        world.seed(),
    ))
}

/// Which planning regime an experiment exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerKind {
    /// One joint solve of the configured solver backend, executed open-loop.
    Centralized,
    /// Receding-horizon implicit coordination.
    Distributed,
    /// Centralized planning by exhaustive enumeration (the explicit
    /// coordination baseline), executed open-loop.
    Enumeration,
}

impl PlannerKind {
    pub fn label(self) -> &'static str {
        match self {
            PlannerKind::Centralized => "centralized",
            PlannerKind::Distributed => "distributed",
            PlannerKind::Enumeration => "enumeration",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "centralized" => Some(Self::Centralized),
            "distributed" => Some(Self::Distributed),
            "enumeration" => Some(Self::Enumeration),
            _ => None,
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How searcher starts are placed per generated instance.
#[derive(Debug, Clone, PartialEq)]
pub enum StartPlacement {
    /// Keep the template's starts.
    Fixed,
    /// Uniform over all vertices, independent per searcher.
    UniformRandom,
    /// Uniform over the central block of a grid (middle third of rows and
    /// columns), re-drawn while colliding with the belief support.
    CentralRegion,
}

/// How the initial belief support is placed per generated instance.
#[derive(Debug, Clone, PartialEq)]
pub enum BeliefPlacement {
    /// Keep the template's initial belief.
    Fixed,
    /// Uniform mass over `k` distinct vertices sampled uniformly.
    UniformSupport { vertices: usize },
    /// One vertex drawn from each 3x3 corner block of a grid.
    CornerRegions,
}

/// Declarative description of one experiment set.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub id: String,
    /// Template instance; starts and belief may be resampled per instance.
    pub template: Instance,
    pub instances: usize,
    pub start_placement: StartPlacement,
    pub belief_placement: BeliefPlacement,
    /// Grid dimensions backing the region-based placements.
    pub grid_dims: Option<(usize, usize)>,
    pub planners: Vec<PlannerKind>,
    pub solver: SolverSpec,
    /// Per-solve timeout for centralized solves.
    pub centralized_timeout: Duration,
    /// Per-solve timeout for distributed solves.
    pub distributed_timeout: Duration,
    /// Sample a target trajectory and detection events; otherwise missions
    /// run on deterministic belief only.
    pub simulate: bool,
    pub seed: u64,
}

/// One output row: a planner's run on one generated instance.
#[derive(Debug, Clone)]
pub struct MissionRow {
    pub config_id: String,
    pub instance_index: usize,
    pub planner: PlannerKind,
    pub seed: u64,
    pub stream: u64,
    pub vertex_count: usize,
    pub searcher_count: usize,
    pub deadline: usize,
    pub horizon: usize,
    /// Oracle reward of the plan produced at time zero.
    pub reward_t0: Option<f64>,
    pub captured: Option<bool>,
    pub mission_time: Option<usize>,
    pub mission_reward: Option<f64>,
    pub solves: usize,
    pub solve_time_total: f64,
    pub solve_time_mean: f64,
    pub solve_time_max: f64,
    pub gap_mean: f64,
    pub fallbacks: usize,
    pub error: Option<String>,
}

/// Mean / median / standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub std_error: f64,
}

impl Stats {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if sorted.len() % 2 == 1 {
            sorted[sorted.len() / 2]
        } else {
            (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
        };
        let std_error = if samples.len() < 2 {
            0.0
        } else {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Some(Self {
            mean,
            median,
            std_error,
        })
    }
}

/// Per-planner aggregates over one experiment set.
#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub config_id: String,
    pub planner: PlannerKind,
    pub instances: usize,
    pub failures: usize,
    pub solve_time: Option<Stats>,
    pub mission_time: Option<Stats>,
    pub gap_mean: f64,
    /// Relative reward loss against the centralized rewards at time zero;
    /// present only when the experiment also ran the centralized planner.
    pub reward_loss: Option<Stats>,
}

/// Full experiment output.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub rows: Vec<MissionRow>,
    pub summaries: Vec<ExperimentSummary>,
}

const STREAMS_PER_INSTANCE: u64 = 8;

fn instance_rng(seed: u64, instance_index: usize, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance_index as u64 * STREAMS_PER_INSTANCE + slot);
    rng
}

fn central_block(rows: usize, cols: usize) -> Vec<Vertex> {
    let band = |len: usize| {
        let third = len / 3;
        let lo = third.min(len.saturating_sub(1));
        let hi = (len - third).max(lo + 1);
        lo..hi
    };
    let mut block = Vec::new();
    for r in band(rows) {
        for c in band(cols) {
            block.push(r * cols + c + 1);
        }
    }
    block
}

fn corner_blocks(rows: usize, cols: usize) -> Vec<Vec<Vertex>> {
    let side_r = rows.min(3);
    let side_c = cols.min(3);
    let spans_r = [(0, side_r), (rows - side_r, rows)];
    let spans_c = [(0, side_c), (cols - side_c, cols)];
    let mut blocks = Vec::new();
    for &(r0, r1) in &spans_r {
        for &(c0, c1) in &spans_c {
            let mut block = Vec::new();
            for r in r0..r1 {
                for c in c0..c1 {
                    block.push(r * cols + c + 1);
                }
            }
            block.sort_unstable();
            block.dedup();
            blocks.push(block);
        }
    }
    blocks
}

/// Generates the `index`-th instance of an experiment set.
pub fn generate_instance(config: &ExperimentConfig, index: usize) -> Result<Instance> {
    let template = &config.template;
    let n = template.vertex_count();
    let mut rng = instance_rng(config.seed, index, 0);

    let belief = match &config.belief_placement {
        BeliefPlacement::Fixed => template.initial_belief.clone(),
        BeliefPlacement::UniformSupport { vertices } => {
            let k = (*vertices).clamp(1, n);
            let mut support: Vec<Vertex> = Vec::with_capacity(k);
            while support.len() < k {
                let v = rng.random_range(1..=n);
                if !support.contains(&v) {
                    support.push(v);
                }
            }
            support.sort_unstable();
            BeliefVector::uniform_over(n, &support)?
        }
        BeliefPlacement::CornerRegions => {
            let (rows, cols) = config.grid_dims.ok_or_else(|| Error::InvalidInput {
                what: "experiment config",
                message: "corner-region belief placement needs grid dimensions".into(),
            })?;
            let mut support = Vec::new();
            for block in corner_blocks(rows, cols) {
                let v = block[rng.random_range(0..block.len())];
                if !support.contains(&v) {
                    support.push(v);
                }
            }
            support.sort_unstable();
            BeliefVector::uniform_over(n, &support)?
        }
    };

    let support: Vec<Vertex> = (1..=n).filter(|&v| belief.location(v) > 0.0).collect();
    let starts = match &config.start_placement {
        StartPlacement::Fixed => template.starts.clone(),
        StartPlacement::UniformRandom => (0..template.searcher_count())
            .map(|_| rng.random_range(1..=n))
            .collect(),
        StartPlacement::CentralRegion => {
            let (rows, cols) = config.grid_dims.ok_or_else(|| Error::InvalidInput {
                what: "experiment config",
                message: "central-region start placement needs grid dimensions".into(),
            })?;
            let block = central_block(rows, cols);
            (0..template.searcher_count())
                .map(|_| loop {
                    let v = block[rng.random_range(0..block.len())];
                    // Keep searchers off the belief support in the corner
                    // scenario so the initial separation is honored.
                    if !support.contains(&v) {
                        break v;
                    }
                })
                .collect()
        }
    };

    template.with_starts(starts)?.with_initial_belief(belief)
}

fn spec_with_timeout(base: &SolverSpec, timeout: Duration) -> SolverSpec {
    base.clone().with_timeout(timeout)
}

fn run_one_planner(
    config: &ExperimentConfig,
    instance: &Instance,
    index: usize,
    planner: PlannerKind,
    stream: u64,
) -> Result<MissionRow> {
    let spec = match planner {
        PlannerKind::Centralized => {
            spec_with_timeout(&config.solver, config.centralized_timeout)
        }
        PlannerKind::Distributed => spec_with_timeout(&config.solver, config.distributed_timeout),
        PlannerKind::Enumeration => SolverSpec {
            backend: SolverBackend::Enumeration,
            ..spec_with_timeout(&config.solver, config.centralized_timeout)
        },
    };

    let mut all_solves: Vec<SolveStats> = Vec::new();
    let mut fallbacks = 0;

    let (reward_t0, mission) = match planner {
        PlannerKind::Centralized | PlannerKind::Enumeration => {
            let outcome = plan_centralized(instance, &spec)?;
            all_solves.extend(outcome.stats.iter().cloned());
            let mission = if config.simulate {
                let mut world = SimWorld::from_instance(instance, config.seed, stream)?;
                Some(run_fixed_plan_mission(instance, &outcome.plan, &mut world)?)
            } else {
                Some(run_fixed_plan_mission(instance, &outcome.plan, &mut BeliefWorld)?)
            };
            (outcome.objective, mission)
        }
        PlannerKind::Distributed => {
            let t0 = plan_distributed_step(instance, &instance.starts.clone(), &spec)?;
            all_solves.extend(t0.stats.iter().cloned());
            fallbacks += t0.stay_put.len();
            let record = if config.simulate {
                let mut world = SimWorld::from_instance(instance, config.seed, stream)?;
                run_receding_horizon(instance, &spec, &mut world)?
            } else {
                run_receding_horizon(instance, &spec, &mut BeliefWorld)?
            };
            all_solves.extend(record.solves().cloned());
            fallbacks += record.stay_put_steps;
            (t0.objective, Some(record))
        }
    };

    let times: Vec<f64> = all_solves.iter().map(|s| s.wall_time.as_secs_f64()).collect();
    let gaps: Vec<f64> = all_solves.iter().filter_map(|s| s.mip_gap).collect();
    let time_stats = Stats::from_samples(&times);
    Ok(MissionRow {
        config_id: config.id.clone(),
        instance_index: index,
        planner,
        seed: config.seed,
        stream,
        vertex_count: instance.vertex_count(),
        searcher_count: instance.searcher_count(),
        deadline: instance.deadline,
        horizon: instance.horizon,
        reward_t0: Some(reward_t0),
        captured: mission.as_ref().map(|m| m.captured),
        mission_time: mission.as_ref().map(|m| m.mission_time()),
        mission_reward: mission.as_ref().map(|m| m.reward),
        solves: all_solves.len(),
        solve_time_total: times.iter().sum(),
        solve_time_mean: time_stats.map(|s| s.mean).unwrap_or(0.0),
        solve_time_max: times.iter().copied().fold(0.0, f64::max),
        gap_mean: Stats::from_samples(&gaps).map(|s| s.mean).unwrap_or(0.0),
        fallbacks,
        error: None,
    })
}

fn error_row(
    config: &ExperimentConfig,
    index: usize,
    planner: PlannerKind,
    stream: u64,
    message: String,
) -> MissionRow {
    MissionRow {
        config_id: config.id.clone(),
        instance_index: index,
        planner,
        seed: config.seed,
        stream,
        vertex_count: config.template.vertex_count(),
        searcher_count: config.template.searcher_count(),
        deadline: config.template.deadline,
        horizon: config.template.horizon,
        reward_t0: None,
        captured: None,
        mission_time: None,
        mission_reward: None,
        solves: 0,
        solve_time_total: 0.0,
        solve_time_mean: 0.0,
        solve_time_max: 0.0,
        gap_mean: 0.0,
        fallbacks: 0,
        error: Some(message.replace([',', '\n'], ";")),
    }
}

/// Runs every planner over every generated instance and aggregates the
/// metrics. Per-instance failures are recorded as error rows, not fatal.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    let indices: Vec<usize> = (0..config.instances).collect();
    let rows: Vec<MissionRow> = indices
        .par_iter()
        .flat_map_iter(|&index| {
            let mut rows = Vec::with_capacity(config.planners.len());
            match generate_instance(config, index) {
                Ok(instance) => {
                    for (p_idx, &planner) in config.planners.iter().enumerate() {
                        let stream =
                            index as u64 * STREAMS_PER_INSTANCE + 1 + p_idx as u64;
                        let row = run_one_planner(config, &instance, index, planner, stream)
                            .unwrap_or_else(|err| {
                                error_row(config, index, planner, stream, err.to_string())
                            });
                        rows.push(row);
                    }
                }
                Err(err) => {
                    for (p_idx, &planner) in config.planners.iter().enumerate() {
                        let stream =
                            index as u64 * STREAMS_PER_INSTANCE + 1 + p_idx as u64;
                        rows.push(error_row(config, index, planner, stream, err.to_string()));
                    }
                }
            }
            rows
        })
        .collect();

    let summaries = summarize(config, &rows);
    Ok(Experiment { rows, summaries })
}

fn summarize(config: &ExperimentConfig, rows: &[MissionRow]) -> Vec<ExperimentSummary> {
    let centralized_rewards: Vec<Option<f64>> = (0..config.instances)
        .map(|index| {
            rows.iter()
                .find(|r| {
                    r.instance_index == index
                        && r.planner == PlannerKind::Centralized
                        && r.error.is_none()
                })
                .and_then(|r| r.reward_t0)
        })
        .collect();

    config
        .planners
        .iter()
        .map(|&planner| {
            let mine: Vec<&MissionRow> =
                rows.iter().filter(|r| r.planner == planner).collect();
            let ok: Vec<&&MissionRow> = mine.iter().filter(|r| r.error.is_none()).collect();
            let failures = mine.len() - ok.len();
            let solve_times: Vec<f64> = ok.iter().map(|r| r.solve_time_mean).collect();
            let mission_times: Vec<f64> = ok
                .iter()
                .filter_map(|r| r.mission_time.map(|t| t as f64))
                .collect();
            let gaps: Vec<f64> = ok.iter().map(|r| r.gap_mean).collect();
            let losses: Vec<f64> = if planner != PlannerKind::Centralized
                && config.planners.contains(&PlannerKind::Centralized)
            {
                ok.iter()
                    .filter_map(|r| {
                        let mine = r.reward_t0?;
                        let central = centralized_rewards.get(r.instance_index).copied()??;
                        (central.abs() > 1e-12).then(|| (central - mine) / central)
                    })
                    .collect()
            } else {
                Vec::new()
            };
            ExperimentSummary {
                config_id: config.id.clone(),
                planner,
                instances: mine.len(),
                failures,
                solve_time: Stats::from_samples(&solve_times),
                mission_time: Stats::from_samples(&mission_times),
                gap_mean: Stats::from_samples(&gaps).map(|s| s.mean).unwrap_or(0.0),
                reward_loss: Stats::from_samples(&losses),
            }
        })
        .collect()
}

fn push_opt<T: fmt::Display>(out: &mut String, value: &Option<T>) {
    if let Some(v) = value {
        let _ = write!(out, "{v}");
    }
}

/// Renders mission rows as CSV, one row per (instance, planner) run.
pub fn missions_csv(rows: &[MissionRow]) -> String {
    let mut out = String::from(
        "config,instance,planner,seed,stream,n,m,tau,h,reward_t0,captured,mission_time,\
         mission_reward,solves,solve_time_total_s,solve_time_mean_s,solve_time_max_s,gap_mean,\
         fallbacks,error\n",
    );
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},",
            r.config_id,
            r.instance_index,
            r.planner,
            r.seed,
            r.stream,
            r.vertex_count,
            r.searcher_count,
            r.deadline,
            r.horizon
        );
        push_opt(&mut out, &r.reward_t0);
        out.push(',');
        push_opt(&mut out, &r.captured);
        out.push(',');
        push_opt(&mut out, &r.mission_time);
        out.push(',');
        push_opt(&mut out, &r.mission_reward);
        let _ = write!(
            out,
            ",{},{},{},{},{},{},",
            r.solves,
            r.solve_time_total,
            r.solve_time_mean,
            r.solve_time_max,
            r.gap_mean,
            r.fallbacks
        );
        push_opt(&mut out, &r.error);
        out.push('\n');
    }
    out
}

/// Blanks the wall-clock columns (headers suffixed `_s`) of a CSV. Every
/// other column in these artifacts is derived from the seed and config alone
/// and reproduces byte for byte; timing measurements are the one exception.
pub fn mask_wall_clock(csv: &str) -> String {
    let mut lines = csv.lines();
    let Some(header) = lines.next() else {
        return String::new();
    };
    let timed: Vec<bool> = header.split(',').map(|c| c.ends_with("_s")).collect();
    let mut out = String::from(header);
    out.push('\n');
    for line in lines {
        let mut first = true;
        for (idx, field) in line.split(',').enumerate() {
            if !first {
                out.push(',');
            }
            first = false;
            if !timed.get(idx).copied().unwrap_or(false) {
                out.push_str(field);
            }
        }
        out.push('\n');
    }
    out
}

/// Renders experiment summaries as CSV, one row per planner.
pub fn summary_csv(summaries: &[ExperimentSummary]) -> String {
    let mut out = String::from(
        "config,planner,instances,failures,solve_time_mean_s,solve_time_median_s,\
         solve_time_se_s,mission_time_mean,mission_time_median,mission_time_se,gap_mean,\
         reward_loss_mean,reward_loss_median,reward_loss_se\n",
    );
    for s in summaries {
        let _ = write!(
            out,
            "{},{},{},{},",
            s.config_id, s.planner, s.instances, s.failures
        );
        let push_stats = |stats: &Option<Stats>, out: &mut String| {
            if let Some(st) = stats {
                let _ = write!(out, "{},{},{}", st.mean, st.median, st.std_error);
            } else {
                out.push_str(",,");
            }
        };
        push_stats(&s.solve_time, &mut out);
        out.push(',');
        push_stats(&s.mission_time, &mut out);
        let _ = write!(out, ",{},", s.gap_mean);
        push_stats(&s.reward_loss, &mut out);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{evaluate_joint_plan, CaptureConfig, CaptureMode};
    use crate::graph::Graph;

    fn path_graph(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|v| (v, v + 1)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn target_start_sampling_is_exact_and_seeded() {
        let point = BeliefVector::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            assert_eq!(sample_target_start(&point, &mut rng).unwrap(), 3);
        }

        let uniform = BeliefVector::uniform_over(3, &[2, 3]).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let draws_a: Vec<_> = (0..50)
            .map(|_| sample_target_start(&uniform, &mut a).unwrap())
            .collect();
        let draws_b: Vec<_> = (0..50)
            .map(|_| sample_target_start(&uniform, &mut b).unwrap())
            .collect();
        assert_eq!(draws_a, draws_b);

        let started = BeliefVector::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(matches!(
            sample_target_start(&started, &mut rng),
            Err(Error::UnsupportedStart(_))
        ));
    }

    #[test]
    fn target_start_frequencies_match_belief() {
        let belief = BeliefVector::new(vec![0.0, 0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let trials = 100_000;
        let mut counts = [0usize; 5];
        for _ in 0..trials {
            counts[sample_target_start(&belief, &mut rng).unwrap()] += 1;
        }
        for v in 1..=4 {
            let p = belief.location(v);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let freq = counts[v] as f64 / trials as f64;
            assert!(
                (freq - p).abs() < 3.0 * sigma,
                "vertex {v}: freq {freq} vs p {p}"
            );
        }
    }

    fn detection_instance(m: usize, zeta: f64) -> Instance {
        Instance::builder(path_graph(2))
            .starts(vec![1; m])
            .capture(CaptureConfig::new(CaptureMode::SameVertex, vec![zeta; m]).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::new(vec![0.0, 1.0, 0.0]).unwrap())
            .deadline(1)
            .horizon(1)
            .discount(1.0)
            .build()
            .unwrap()
    }

    #[test]
    fn perfect_sensing_always_captures_in_coverage() {
        let instance = detection_instance(1, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert!(sample_detection(&instance, &[1], 1, &mut rng));
            assert!(!sample_detection(&instance, &[2], 1, &mut rng));
        }
    }

    #[test]
    fn single_searcher_false_negative_capture_rate() {
        let instance = detection_instance(1, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 100_000;
        let captures = (0..trials)
            .filter(|_| sample_detection(&instance, &[1], 1, &mut rng))
            .count();
        let p = 0.7;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let freq = captures as f64 / trials as f64;
        assert!((freq - p).abs() < 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn two_searcher_false_negative_capture_rate() {
        let instance = detection_instance(2, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let trials = 100_000;
        let captures = (0..trials)
            .filter(|_| sample_detection(&instance, &[1, 1], 1, &mut rng))
            .count();
        let p = 0.91; // 1 - 0.3^2
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let freq = captures as f64 / trials as f64;
        assert!((freq - p).abs() < 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn step_mission_tracks_positions_and_belief() {
        let instance = Instance::builder(path_graph(3))
            .starts(vec![1])
            .capture(CaptureConfig::perfect(CaptureMode::SameVertex, 1).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::uniform_over(3, &[2, 3]).unwrap())
            .deadline(2)
            .horizon(2)
            .discount(1.0)
            .build()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let target = sample_target_start(&instance.initial_belief, &mut rng).unwrap();
        let mut state = MissionState::new(&instance, target);
        step_mission(&instance, &mut state, &[2], &mut rng).unwrap();
        assert_eq!(state.time, 1);
        assert_eq!(state.positions, vec![2]);
        assert_eq!(state.belief.capture_mass(), 0.5);
        // Capture in simulation iff the target sat on vertex 2.
        assert_eq!(state.captured, target == 2);

        let err = step_mission(&instance, &mut state, &[9], &mut rng);
        assert!(err.is_err());
    }

    #[test]
    fn fixed_plan_mission_belief_matches_oracle() {
        let instance = Instance::builder(path_graph(3))
            .starts(vec![1])
            .capture(CaptureConfig::perfect(CaptureMode::SameVertex, 1).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::uniform_over(3, &[2, 3]).unwrap())
            .deadline(2)
            .horizon(2)
            .discount(1.0)
            .build()
            .unwrap();
        let plan = JointPlan::new(vec![vec![1, 2, 3]]).unwrap();
        let record = run_fixed_plan_mission(&instance, &plan, &mut BeliefWorld).unwrap();
        let eval = evaluate_joint_plan(&instance, &plan).unwrap();
        assert_eq!(record.reward, eval.reward);
        assert_eq!(
            record.beliefs.last().unwrap().capture_mass(),
            eval.beliefs.last().unwrap().capture_mass()
        );
    }

    #[test]
    fn empirical_capture_matches_final_belief_mass() {
        let instance = Instance::builder(path_graph(3))
            .starts(vec![1])
            .capture(CaptureConfig::new(CaptureMode::SameVertex, vec![0.3]).unwrap())
            .motion(crate::belief::MotionMatrix::random_walk(&path_graph(3), 0.5).unwrap())
            .initial_belief(BeliefVector::uniform_over(3, &[2, 3]).unwrap())
            .deadline(3)
            .horizon(3)
            .discount(1.0)
            .build()
            .unwrap();
        let plan = JointPlan::new(vec![vec![1, 2, 3, 3]]).unwrap();
        let predicted = evaluate_joint_plan(&instance, &plan)
            .unwrap()
            .beliefs
            .last()
            .unwrap()
            .capture_mass();

        let trials = 20_000;
        let mut captures = 0;
        for i in 0..trials {
            let mut world = SimWorld::from_instance(&instance, 123, i).unwrap();
            let record = run_fixed_plan_mission(&instance, &plan, &mut world).unwrap();
            if record.captured {
                captures += 1;
            }
        }
        let freq = captures as f64 / trials as f64;
        let sigma = (predicted * (1.0 - predicted) / trials as f64).sqrt();
        assert!(
            (freq - predicted).abs() < 3.0 * sigma,
            "freq {freq} vs predicted {predicted}"
        );
    }

    fn small_experiment(simulate: bool) -> ExperimentConfig {
        let template = Instance::builder(Graph::grid(2, 3).unwrap())
            .starts(vec![1, 6])
            .capture(CaptureConfig::perfect(CaptureMode::SameVertex, 2).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::uniform_over(6, &[2, 5]).unwrap())
            .deadline(3)
            .horizon(3)
            .discount(0.99)
            .build()
            .unwrap();
        ExperimentConfig {
            id: "unit".into(),
            template,
            instances: 4,
            start_placement: StartPlacement::UniformRandom,
            belief_placement: BeliefPlacement::UniformSupport { vertices: 2 },
            grid_dims: Some((2, 3)),
            planners: vec![PlannerKind::Centralized, PlannerKind::Distributed],
            solver: SolverSpec::enumeration(),
            centralized_timeout: Duration::from_secs(60),
            distributed_timeout: Duration::from_secs(10),
            simulate,
            seed: 99,
        }
    }

    #[test]
    fn experiment_is_seed_deterministic() {
        let config = small_experiment(true);
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(
            mask_wall_clock(&missions_csv(&a.rows)),
            mask_wall_clock(&missions_csv(&b.rows))
        );
        assert_eq!(
            mask_wall_clock(&summary_csv(&a.summaries)),
            mask_wall_clock(&summary_csv(&b.summaries))
        );
    }

    #[test]
    fn experiment_reports_dominance_in_reward_loss() {
        let config = small_experiment(false);
        let experiment = run_experiment(&config).unwrap();
        let distributed = experiment
            .summaries
            .iter()
            .find(|s| s.planner == PlannerKind::Distributed)
            .unwrap();
        let loss = distributed.reward_loss.unwrap();
        assert!(loss.mean >= -1e-9, "loss {loss:?}");
        assert_eq!(distributed.failures, 0);
    }

    #[test]
    fn generated_instances_respect_corner_scenario() {
        let template = Instance::builder(Graph::grid(6, 6).unwrap())
            .starts(vec![15, 22])
            .capture(CaptureConfig::new(CaptureMode::HopRadius(1), vec![0.3, 0.3]).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::uniform_over(36, &[1]).unwrap())
            .deadline(3)
            .horizon(2)
            .discount(0.99)
            .build()
            .unwrap();
        let config = ExperimentConfig {
            id: "corners".into(),
            template,
            instances: 6,
            start_placement: StartPlacement::CentralRegion,
            belief_placement: BeliefPlacement::CornerRegions,
            grid_dims: Some((6, 6)),
            planners: vec![PlannerKind::Distributed],
            solver: SolverSpec::enumeration(),
            centralized_timeout: Duration::from_secs(60),
            distributed_timeout: Duration::from_secs(10),
            simulate: false,
            seed: 5,
        };
        let corners = corner_blocks(6, 6);
        let central = central_block(6, 6);
        for index in 0..config.instances {
            let instance = generate_instance(&config, index).unwrap();
            let support: Vec<Vertex> = (1..=36)
                .filter(|&v| instance.initial_belief.location(v) > 0.0)
                .collect();
            assert_eq!(support.len(), 4);
            for v in &support {
                assert!(corners.iter().any(|block| block.contains(v)));
            }
            for s in &instance.starts {
                assert!(central.contains(s));
                assert!(!support.contains(s));
            }
        }
    }

    #[test]
    fn csv_rendering_has_stable_schema() {
        let config = small_experiment(false);
        let experiment = run_experiment(&config).unwrap();
        let missions = missions_csv(&experiment.rows);
        assert!(missions.starts_with("config,instance,planner,seed,stream,n,m,tau,h,"));
        assert_eq!(missions.lines().count(), 1 + config.instances * 2);
        let summary = summary_csv(&experiment.summaries);
        assert!(summary.contains("reward_loss_mean"));
        assert_eq!(summary.lines().count(), 3);
    }
}
