//! Motion models, capture models, and the exact belief recursion.
//!
//! The target state is tracked by an `(n+1)`-entry belief vector: entry 0 is
//! the accumulated capture probability, entries `1..=n` the probability that
//! the target occupies the corresponding vertex. One mission step multiplies
//! the belief by the target's motion kernel and then by one capture matrix
//! per searcher; the discounted sum of the capture entry over time is the
//! quantity every planner in this crate maximizes. [`evaluate_joint_plan`]
//! applies that recursion directly and is the ground-truth evaluator used to
//! check every solver.

use crate::error::Error;
use crate::graph::{DistanceMatrix, Graph, Vertex};
use crate::instance::Instance;
use crate::Result;

/// Belief vectors must stay normalized to 1 within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Entries this close to an exact 0 or 1 are snapped to it after an update.
const SNAP_TOL: f64 = 1e-12;

/// Row-stochastic transition kernel of the target over vertices `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl MotionMatrix {
    /// Kernel of a stationary target: the identity matrix.
    pub fn stationary(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for v in 0..n {
            entries[v * n + v] = 1.0;
        }
        Self { n, entries }
    }

    /// Lazy random walk: stay with probability `stay_prob`, otherwise move to
    /// a uniformly chosen neighbor. Isolated vertices always stay.
    pub fn random_walk(graph: &Graph, stay_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&stay_prob) {
            return Err(Error::InvalidInput {
                what: "motion kernel",
                message: format!("stay probability {stay_prob} outside [0, 1]"),
            });
        }
        let n = graph.vertex_count();
        let mut entries = vec![0.0; n * n];
        for u in 1..=n {
            let neighbors = graph.neighbors(u)?;
            if neighbors.is_empty() {
                entries[(u - 1) * n + (u - 1)] = 1.0;
            } else {
                entries[(u - 1) * n + (u - 1)] = stay_prob;
                let share = (1.0 - stay_prob) / neighbors.len() as f64;
                for &v in neighbors {
                    entries[(u - 1) * n + (v - 1)] = share;
                }
            }
        }
        Self::from_rows_flat(n, entries)
    }

    /// Builds a kernel from explicit rows, validating stochasticity.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidInput {
                    what: "motion kernel",
                    message: format!("expected {n} entries per row, got {}", row.len()),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::from_rows_flat(n, entries)
    }

    fn from_rows_flat(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput {
                what: "motion kernel",
                message: "kernel must have at least one row".into(),
            });
        }
        for (idx, &p) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput {
                    what: "motion kernel",
                    message: format!(
                        "entry ({}, {}) = {p} outside [0, 1]",
                        idx / n + 1,
                        idx % n + 1
                    ),
                });
            }
        }
        for u in 0..n {
            let sum: f64 = entries[u * n..(u + 1) * n].iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidInput {
                    what: "motion kernel",
                    message: format!("row {} sums to {sum}, expected 1", u + 1),
                });
            }
        }
        Ok(Self { n, entries })
    }

    /// Parses the motion-matrix file format: an `n=<count>` header followed
    /// by `n` rows of `n` decimal numbers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match n {
                None => {
                    let value = line
                        .strip_prefix('n')
                        .and_then(|r| r.trim_start().strip_prefix('='))
                        .ok_or_else(|| Error::Parse {
                            line: line_no,
                            message: format!("expected `n=<count>` header, got `{line}`"),
                        })?;
                    n = Some(value.trim().parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("invalid matrix size `{}`", value.trim()),
                    })?);
                }
                Some(_) => {
                    let row: std::result::Result<Vec<f64>, _> =
                        line.split_whitespace().map(str::parse).collect();
                    rows.push(row.map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("invalid matrix row `{line}`"),
                    })?);
                }
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 1,
            message: "missing `n=<count>` header".into(),
        })?;
        if rows.len() != n {
            return Err(Error::InvalidInput {
                what: "motion kernel",
                message: format!("expected {n} rows, got {}", rows.len()),
            });
        }
        Self::from_rows(&rows)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Probability of moving from `u` to `v` in one step.
    pub fn entry(&self, u: Vertex, v: Vertex) -> f64 {
        self.entries[(u - 1) * self.n + (v - 1)]
    }

    fn row(&self, u: Vertex) -> &[f64] {
        &self.entries[(u - 1) * self.n..u * self.n]
    }
}

/// `(n+1)`-entry probability vector; entry 0 is the capture mass.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    entries: Vec<f64>,
}

impl BeliefVector {
    /// Validates and wraps raw entries `[capture, b_1, ..., b_n]`.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidInput {
                what: "belief vector",
                message: "needs a capture entry plus at least one vertex entry".into(),
            });
        }
        for (i, &p) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput {
                    what: "belief vector",
                    message: format!("entry {i} = {p} outside [0, 1]"),
                });
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidInput {
                what: "belief vector",
                message: format!("entries sum to {sum}, expected 1"),
            });
        }
        Ok(Self { entries })
    }

    /// Zero capture mass and uniform probability over `support`.
    pub fn uniform_over(n: usize, support: &[Vertex]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidInput {
                what: "belief vector",
                message: "support must be nonempty".into(),
            });
        }
        let mut entries = vec![0.0; n + 1];
        let share = 1.0 / support.len() as f64;
        for &v in support {
            if v < 1 || v > n {
                return Err(Error::InvalidVertex { vertex: v, n });
            }
            if entries[v] != 0.0 {
                return Err(Error::InvalidInput {
                    what: "belief vector",
                    message: format!("vertex {v} listed twice in support"),
                });
            }
            entries[v] = share;
        }
        Self::new(entries)
    }

    /// Parses `n+1` whitespace-separated numbers, capture mass first.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut entries = Vec::with_capacity(n + 1);
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            for field in line.split_whitespace() {
                entries.push(field.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("invalid number `{field}`"),
                })?);
            }
        }
        if entries.len() != n + 1 {
            return Err(Error::InvalidInput {
                what: "belief vector",
                message: format!("expected {} numbers, got {}", n + 1, entries.len()),
            });
        }
        Self::new(entries)
    }

    pub fn vertex_count(&self) -> usize {
        self.entries.len() - 1
    }

    /// Accumulated capture probability.
    pub fn capture_mass(&self) -> f64 {
        self.entries[0]
    }

    /// Probability that the target is at vertex `v`.
    pub fn location(&self, v: Vertex) -> f64 {
        self.entries[v]
    }

    /// All entries, capture mass first.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// The belief conditioned on the target not having been captured:
    /// capture mass zeroed and location mass renormalized. This is the prior
    /// a planner should replan from after a non-detection, since surviving a
    /// sweep is exactly the event the capture entry accumulates.
    pub fn conditioned_on_no_capture(&self) -> Result<Self> {
        let remaining = 1.0 - self.entries[0];
        if remaining <= 0.0 {
            return Err(Error::InvalidInput {
                what: "belief vector",
                message: "cannot condition on no capture: capture mass is 1".into(),
            });
        }
        let mut entries = vec![0.0; self.entries.len()];
        for (out, &p) in entries[1..].iter_mut().zip(&self.entries[1..]) {
            *out = (p / remaining).min(1.0);
        }
        Self::new(entries)
    }
}

/// How a searcher's sensor covers the environment, plus per-searcher false
/// negative rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureConfig {
    mode: CaptureMode,
    false_negatives: Vec<f64>,
}

/// Sensing footprint of a searcher located at some vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptureMode {
    /// Detection only when searcher and target share a vertex.
    SameVertex,
    /// Detection of any target within the given number of hops.
    HopRadius(u32),
}

impl CaptureConfig {
    /// One false-negative rate per searcher; each must lie in `[0, 1)`.
    pub fn new(mode: CaptureMode, false_negatives: Vec<f64>) -> Result<Self> {
        if false_negatives.is_empty() {
            return Err(Error::InvalidInput {
                what: "capture config",
                message: "at least one searcher required".into(),
            });
        }
        for (i, &zeta) in false_negatives.iter().enumerate() {
            if !(0.0..1.0).contains(&zeta) {
                return Err(Error::InvalidInput {
                    what: "capture config",
                    message: format!("false-negative rate {zeta} of searcher {} outside [0, 1)", i + 1),
                });
            }
        }
        Ok(Self {
            mode,
            false_negatives,
        })
    }

    /// Perfect sensing for `m` searchers.
    pub fn perfect(mode: CaptureMode, m: usize) -> Result<Self> {
        Self::new(mode, vec![0.0; m])
    }

    pub fn mode(&self) -> CaptureMode {
        self.mode
    }

    pub fn searcher_count(&self) -> usize {
        self.false_negatives.len()
    }

    /// False-negative rate of searcher `s` (1-based).
    pub fn false_negative(&self, s: usize) -> f64 {
        self.false_negatives[s - 1]
    }

    pub fn false_negatives(&self) -> &[f64] {
        &self.false_negatives
    }

    pub fn has_false_negatives(&self) -> bool {
        self.false_negatives.iter().any(|&z| z > 0.0)
    }

    /// Whether a searcher at `from` can detect a target at `target`.
    pub fn covers(&self, distances: &DistanceMatrix, from: Vertex, target: Vertex) -> bool {
        match self.mode {
            CaptureMode::SameVertex => from == target,
            CaptureMode::HopRadius(r) => distances.hops(from, target) <= r,
        }
    }
}

/// Linear operator describing one searcher's sensing action from a fixed
/// vertex: rows and columns are indexed `0..=n` with 0 the capture state.
///
/// For a covered vertex `v`, a `1 - zeta` share of the target mass moves to
/// the capture state and a `zeta` share stays put; uncovered rows are
/// identity. Row 0 is always the unit vector, which is what makes capture
/// absorbing.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureMatrix {
    n: usize,
    zeta: f64,
    covered: Vec<bool>,
}

impl CaptureMatrix {
    /// Builds the capture matrix of searcher `s` positioned at `at`.
    pub fn build(
        graph: &Graph,
        distances: &DistanceMatrix,
        config: &CaptureConfig,
        s: usize,
        at: Vertex,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        if !graph.contains_vertex(at) {
            return Err(Error::InvalidVertex { vertex: at, n });
        }
        let covered = (1..=n).map(|v| config.covers(distances, at, v)).collect();
        Ok(Self {
            n,
            zeta: config.false_negative(s),
            covered,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn is_covered(&self, v: Vertex) -> bool {
        self.covered[v - 1]
    }

    /// Entry at row `i`, column `j` (0-based probability-state indices).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i >= 1 && self.covered[i - 1] {
            if j == 0 {
                1.0 - self.zeta
            } else if j == i {
                self.zeta
            } else {
                0.0
            }
        } else if i == j {
            1.0
        } else {
            0.0
        }
    }

    /// Dense `(n+1) x (n+1)` form; intended for inspection and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..=self.n)
            .map(|i| (0..=self.n).map(|j| self.entry(i, j)).collect())
            .collect()
    }

    /// Right-multiplies a raw belief row vector by this matrix, in place.
    pub fn apply(&self, entries: &mut [f64]) {
        let mut transferred = 0.0;
        for v in 1..=self.n {
            if self.covered[v - 1] {
                transferred += (1.0 - self.zeta) * entries[v];
                entries[v] *= self.zeta;
            }
        }
        entries[0] += transferred;
    }
}

/// One exact belief-update step: motion kernel, then every searcher's
/// capture matrix in index order.
///
/// `positions` are the searchers' vertices after moving. Entries within
/// 1e-12 of an exact 0 or 1 are snapped and the location mass is rescaled to
/// `1 - capture`, which keeps the vector normalized without ever shrinking
/// the capture entry.
pub fn update_belief(
    belief: &BeliefVector,
    motion: &MotionMatrix,
    positions: &[Vertex],
    config: &CaptureConfig,
    graph: &Graph,
    distances: &DistanceMatrix,
) -> Result<BeliefVector> {
    let n = graph.vertex_count();
    if positions.len() != config.searcher_count() {
        return Err(Error::InvalidInput {
            what: "searcher positions",
            message: format!(
                "expected {} positions, got {}",
                config.searcher_count(),
                positions.len()
            ),
        });
    }
    let mut next = vec![0.0; n + 1];
    next[0] = belief.capture_mass();
    for u in 1..=n {
        let mass = belief.location(u);
        if mass == 0.0 {
            continue;
        }
        for (slot, &p) in next[1..].iter_mut().zip(motion.row(u)) {
            *slot += mass * p;
        }
    }
    for (idx, &pos) in positions.iter().enumerate() {
        if !graph.contains_vertex(pos) {
            return Err(Error::InvalidVertex { vertex: pos, n });
        }
        let zeta = config.false_negative(idx + 1);
        let mut transferred = 0.0;
        match config.mode() {
            CaptureMode::SameVertex => {
                transferred = (1.0 - zeta) * next[pos];
                next[pos] *= zeta;
            }
            CaptureMode::HopRadius(r) => {
                for v in 1..=n {
                    if distances.hops(pos, v) <= r {
                        transferred += (1.0 - zeta) * next[v];
                        next[v] *= zeta;
                    }
                }
            }
        }
        next[0] += transferred;
    }
    for p in next.iter_mut() {
        if *p <= SNAP_TOL {
            *p = 0.0;
        } else if (*p - 1.0).abs() <= SNAP_TOL {
            *p = 1.0;
        }
    }
    let capture = next[0];
    let location_sum: f64 = next[1..].iter().sum();
    if location_sum == 0.0 {
        // Residual location mass was numerically dead; fold it into capture.
        next[0] = 1.0;
    } else if (capture + location_sum - 1.0).abs() > 1e-15 {
        let scale = (1.0 - capture) / location_sum;
        for p in &mut next[1..] {
            *p = (*p * scale).clamp(0.0, 1.0);
        }
    }
    BeliefVector::new(next)
}

/// Discounted cumulative capture probability of a capture-mass trajectory:
/// the sum of `gamma^t * b_c(t)` over the whole trajectory.
pub fn discounted_reward(capture_trajectory: &[f64], gamma: f64) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for &mass in capture_trajectory {
        total += weight * mass;
        weight *= gamma;
    }
    total
}

/// One vertex sequence per searcher, all of equal length; entry `t` of a
/// path is the searcher's vertex at step `t`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct JointPlan {
    paths: Vec<Vec<Vertex>>,
}

impl JointPlan {
    pub fn new(paths: Vec<Vec<Vertex>>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidInput {
                what: "joint plan",
                message: "needs at least one searcher path".into(),
            });
        }
        let len = paths[0].len();
        if len == 0 || paths.iter().any(|p| p.len() != len) {
            return Err(Error::InvalidInput {
                what: "joint plan",
                message: "all searcher paths must have the same nonzero length".into(),
            });
        }
        Ok(Self { paths })
    }

    pub fn searcher_count(&self) -> usize {
        self.paths.len()
    }

    /// Number of moves (path length minus one).
    pub fn steps(&self) -> usize {
        self.paths[0].len() - 1
    }

    /// Path of searcher `s` (1-based).
    pub fn path(&self, s: usize) -> &[Vertex] {
        &self.paths[s - 1]
    }

    pub fn paths(&self) -> &[Vec<Vertex>] {
        &self.paths
    }

    /// All searcher positions at step `t`.
    pub fn positions_at(&self, t: usize) -> Vec<Vertex> {
        self.paths.iter().map(|p| p[t]).collect()
    }

    /// Checks starts and that every transition is a stay or neighbor move.
    pub fn validate(&self, graph: &Graph, starts: &[Vertex]) -> Result<()> {
        if starts.len() != self.paths.len() {
            return Err(Error::InvalidInput {
                what: "joint plan",
                message: format!(
                    "plan has {} searchers, instance has {}",
                    self.paths.len(),
                    starts.len()
                ),
            });
        }
        for (idx, path) in self.paths.iter().enumerate() {
            let s = idx + 1;
            if path[0] != starts[idx] {
                return Err(Error::IllegalPlanStep {
                    searcher: s,
                    time: 0,
                    from: starts[idx],
                    to: path[0],
                });
            }
            for t in 0..path.len() - 1 {
                let legal = graph.neighbors_closed(path[t])?.contains(&path[t + 1]);
                if !legal {
                    return Err(Error::IllegalPlanStep {
                        searcher: s,
                        time: t + 1,
                        from: path[t],
                        to: path[t + 1],
                    });
                }
            }
        }
        Ok(())
    }
}

/// Belief trajectory and discounted reward of a concrete joint plan.
#[derive(Debug, Clone)]
pub struct PlanEvaluation {
    pub reward: f64,
    pub beliefs: Vec<BeliefVector>,
}

impl PlanEvaluation {
    /// Capture-mass trajectory `b_c(0..=steps)`.
    pub fn capture_trajectory(&self) -> Vec<f64> {
        self.beliefs.iter().map(|b| b.capture_mass()).collect()
    }
}

/// Runs the exact belief recursion along a joint plan and returns the
/// discounted reward plus the full belief trajectory.
///
/// This is the ground truth every solver in this crate is checked against.
pub fn evaluate_joint_plan(instance: &Instance, plan: &JointPlan) -> Result<PlanEvaluation> {
    plan.validate(&instance.graph, &instance.starts)?;
    if plan.searcher_count() != instance.searcher_count() {
        return Err(Error::InvalidInput {
            what: "joint plan",
            message: "searcher count mismatch".into(),
        });
    }
    let mut beliefs = Vec::with_capacity(plan.steps() + 1);
    beliefs.push(instance.initial_belief.clone());
    for t in 1..=plan.steps() {
        let positions = plan.positions_at(t);
        let next = update_belief(
            beliefs.last().unwrap(),
            &instance.motion,
            &positions,
            &instance.capture,
            &instance.graph,
            &instance.distances,
        )?;
        beliefs.push(next);
    }
    let trajectory: Vec<f64> = beliefs.iter().map(|b| b.capture_mass()).collect();
    let reward = discounted_reward(&trajectory, instance.discount);
    Ok(PlanEvaluation { reward, beliefs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;
    use approx::assert_abs_diff_eq;

    fn path_graph(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|v| (v, v + 1)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn stationary_kernel_is_identity() {
        for n in [1, 2, 5] {
            let m = MotionMatrix::stationary(n);
            for u in 1..=n {
                for v in 1..=n {
                    assert_eq!(m.entry(u, v), if u == v { 1.0 } else { 0.0 });
                }
                assert_abs_diff_eq!(m.row(u).iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn random_walk_rows() {
        let g = path_graph(2);
        let m = MotionMatrix::random_walk(&g, 0.5).unwrap();
        assert_eq!(m.entry(1, 1), 0.5);
        assert_eq!(m.entry(1, 2), 0.5);
        assert_eq!(m.entry(2, 1), 0.5);

        let g3 = path_graph(3);
        let m0 = MotionMatrix::random_walk(&g3, 0.0).unwrap();
        assert_eq!(m0.entry(2, 1), 0.5);
        assert_eq!(m0.entry(2, 2), 0.0);
        assert_eq!(m0.entry(2, 3), 0.5);

        let frozen = MotionMatrix::random_walk(&g3, 1.0).unwrap();
        assert_eq!(frozen, MotionMatrix::stationary(3));
    }

    #[test]
    fn motion_parse_roundtrip() {
        let m = MotionMatrix::parse("n=2\n0.25 0.75\n0.5 0.5\n").unwrap();
        assert_eq!(m.entry(1, 2), 0.75);
        assert!(MotionMatrix::parse("n=2\n0.2 0.2\n0.5 0.5\n").is_err());
        assert!(MotionMatrix::parse("0.5 0.5\n").is_err());
    }

    #[test]
    fn capture_matrix_perfect_sensing() {
        let g = path_graph(2);
        let d = DistanceMatrix::compute(&g).unwrap();
        let config = CaptureConfig::perfect(CaptureMode::SameVertex, 1).unwrap();
        let c = CaptureMatrix::build(&g, &d, &config, 1, 1).unwrap();
        assert_eq!(c.to_dense()[1], vec![1.0, 0.0, 0.0]);
        assert_eq!(c.to_dense()[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(c.to_dense()[2], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn capture_matrix_false_negative_row() {
        let g = path_graph(2);
        let d = DistanceMatrix::compute(&g).unwrap();
        let config = CaptureConfig::new(CaptureMode::SameVertex, vec![0.3]).unwrap();
        let c = CaptureMatrix::build(&g, &d, &config, 1, 1).unwrap();
        assert_eq!(c.to_dense()[1], vec![0.7, 0.3, 0.0]);
    }

    #[test]
    fn capture_matrix_radius_covers_all_of_small_path() {
        let g = path_graph(3);
        let d = DistanceMatrix::compute(&g).unwrap();
        let config = CaptureConfig::perfect(CaptureMode::HopRadius(1), 1).unwrap();
        let c = CaptureMatrix::build(&g, &d, &config, 1, 2).unwrap();
        for v in 1..=3 {
            assert!(c.is_covered(v));
            assert_eq!(c.entry(v, 0), 1.0);
        }
        // Every row must still sum to one.
        for row in c.to_dense() {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn capture_matrix_rejects_bad_vertex() {
        let g = path_graph(2);
        let d = DistanceMatrix::compute(&g).unwrap();
        let config = CaptureConfig::perfect(CaptureMode::SameVertex, 1).unwrap();
        assert!(CaptureMatrix::build(&g, &d, &config, 1, 3).is_err());
    }

    #[test]
    fn update_transfers_searched_mass() {
        let g = path_graph(2);
        let d = DistanceMatrix::compute(&g).unwrap();
        let m = MotionMatrix::stationary(2);
        let b = BeliefVector::new(vec![0.0, 0.5, 0.5]).unwrap();
        let config = CaptureConfig::perfect(CaptureMode::SameVertex, 1).unwrap();
        let next = update_belief(&b, &m, &[1], &config, &g, &d).unwrap();
        assert_eq!(next.entries(), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn update_with_false_negative_leaves_residual() {
        let g = path_graph(2);
        let d = DistanceMatrix::compute(&g).unwrap();
        let m = MotionMatrix::stationary(2);
        let b = BeliefVector::new(vec![0.0, 0.5, 0.5]).unwrap();
        let config = CaptureConfig::new(CaptureMode::SameVertex, vec![0.3]).unwrap();
        let next = update_belief(&b, &m, &[1], &config, &g, &d).unwrap();
        assert_abs_diff_eq!(next.capture_mass(), 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(next.location(1), 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(next.location(2), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn update_with_full_coverage_captures_everything() {
        let g = path_graph(2);
        let d = DistanceMatrix::compute(&g).unwrap();
        let m = MotionMatrix::stationary(2);
        let b = BeliefVector::new(vec![0.0, 0.5, 0.5]).unwrap();
        let config = CaptureConfig::perfect(CaptureMode::SameVertex, 2).unwrap();
        let next = update_belief(&b, &m, &[1, 2], &config, &g, &d).unwrap();
        assert_eq!(next.entries(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn discounted_reward_examples() {
        assert_abs_diff_eq!(discounted_reward(&[0.0, 0.5, 1.0], 1.0), 1.5);
        assert_abs_diff_eq!(discounted_reward(&[0.0, 0.5, 1.0], 0.5), 0.5);
        assert_eq!(discounted_reward(&[0.0, 0.0, 0.0], 0.9), 0.0);
    }

    fn sweep_instance() -> Instance {
        let graph = path_graph(3);
        Instance::builder(graph)
            .starts(vec![1])
            .capture(CaptureConfig::perfect(CaptureMode::SameVertex, 1).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::new(vec![0.0, 0.0, 0.5, 0.5]).unwrap())
            .deadline(2)
            .horizon(2)
            .discount(1.0)
            .build()
            .unwrap()
    }

    #[test]
    fn evaluate_sweep_plan() {
        let instance = sweep_instance();
        let plan = JointPlan::new(vec![vec![1, 2, 3]]).unwrap();
        let eval = evaluate_joint_plan(&instance, &plan).unwrap();
        assert_abs_diff_eq!(eval.reward, 1.5, epsilon = 1e-12);
        assert_eq!(eval.capture_trajectory(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn evaluate_idle_plan_collects_nothing() {
        let instance = sweep_instance();
        let plan = JointPlan::new(vec![vec![1, 1, 1]]).unwrap();
        let eval = evaluate_joint_plan(&instance, &plan).unwrap();
        assert_eq!(eval.reward, 0.0);
    }

    #[test]
    fn evaluate_already_captured_belief() {
        let graph = path_graph(2);
        let instance = Instance::builder(graph)
            .starts(vec![1])
            .capture(CaptureConfig::perfect(CaptureMode::SameVertex, 1).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::new(vec![1.0, 0.0, 0.0]).unwrap())
            .deadline(3)
            .horizon(3)
            .discount(0.5)
            .build()
            .unwrap();
        let plan = JointPlan::new(vec![vec![1, 1, 1, 1]]).unwrap();
        let eval = evaluate_joint_plan(&instance, &plan).unwrap();
        // 1 + 0.5 + 0.25 + 0.125
        assert_abs_diff_eq!(eval.reward, 1.875, epsilon = 1e-12);
    }

    #[test]
    fn evaluate_rejects_illegal_step() {
        let instance = sweep_instance();
        let plan = JointPlan::new(vec![vec![1, 3, 3]]).unwrap();
        let err = evaluate_joint_plan(&instance, &plan).unwrap_err();
        assert!(matches!(
            err,
            Error::IllegalPlanStep {
                searcher: 1,
                time: 1,
                from: 1,
                to: 3
            }
        ));
    }

    #[test]
    fn revisiting_cleared_vertex_adds_nothing() {
        let instance = sweep_instance();
        let sweep = JointPlan::new(vec![vec![1, 2, 3]]).unwrap();
        let linger = JointPlan::new(vec![vec![1, 2, 2]]).unwrap();
        let reward_sweep = evaluate_joint_plan(&instance, &sweep).unwrap().reward;
        let reward_linger = evaluate_joint_plan(&instance, &linger).unwrap().reward;
        // Staying on a cleared vertex collects only the already-captured mass.
        assert_abs_diff_eq!(reward_linger, 1.0, epsilon = 1e-12);
        assert!(reward_sweep > reward_linger);
    }

    #[test]
    fn conditioning_zeroes_capture_mass() {
        let b = BeliefVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        let c = b.conditioned_on_no_capture().unwrap();
        assert_eq!(c.capture_mass(), 0.0);
        assert_abs_diff_eq!(c.location(1), 0.5);
        assert_abs_diff_eq!(c.location(2), 0.5);
    }
}
