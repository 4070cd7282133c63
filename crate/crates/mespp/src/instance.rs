//! A complete, validated search problem: environment, team, target model,
//! and mission parameters.

use sha2::{Digest, Sha256};

use crate::belief::{BeliefVector, CaptureConfig, CaptureMode, MotionMatrix};
use crate::error::Error;
use crate::graph::{DistanceMatrix, Graph, ReachableSet, Vertex};
use crate::Result;

/// Immutable problem instance shared by model builders, solvers, planners,
/// and the simulator.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Graph,
    pub distances: DistanceMatrix,
    /// Starting vertex of each searcher, 1-based searcher index order.
    pub starts: Vec<Vertex>,
    pub capture: CaptureConfig,
    pub motion: MotionMatrix,
    pub initial_belief: BeliefVector,
    /// Mission deadline: number of steps the mission may run.
    pub deadline: usize,
    /// Planning horizon of a single solve.
    pub horizon: usize,
    /// Reward discount factor in `(0, 1]`.
    pub discount: f64,
}

impl Instance {
    pub fn builder(graph: Graph) -> InstanceBuilder {
        InstanceBuilder {
            graph,
            starts: Vec::new(),
            capture: None,
            motion: None,
            initial_belief: None,
            deadline: None,
            horizon: None,
            discount: 0.99,
        }
    }

    pub fn searcher_count(&self) -> usize {
        self.starts.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Reachability sets of every searcher up to the planning horizon.
    pub fn reachable_sets(&self) -> Result<Vec<ReachableSet>> {
        self.starts
            .iter()
            .map(|&start| ReachableSet::compute(&self.graph, &self.distances, start, self.horizon))
            .collect()
    }

    /// Same instance with new searcher starting positions.
    pub fn with_starts(&self, starts: Vec<Vertex>) -> Result<Self> {
        let mut next = self.clone();
        next.starts = starts;
        next.validate()?;
        Ok(next)
    }

    /// Same instance with a different planning horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        let mut next = self.clone();
        next.horizon = horizon;
        next.validate()?;
        Ok(next)
    }

    /// Same instance with a different initial belief.
    pub fn with_initial_belief(&self, belief: BeliefVector) -> Result<Self> {
        let mut next = self.clone();
        next.initial_belief = belief;
        next.validate()?;
        Ok(next)
    }

    fn validate(&self) -> Result<()> {
        let n = self.graph.vertex_count();
        if self.starts.is_empty() {
            return Err(Error::InvalidInput {
                what: "instance",
                message: "at least one searcher required".into(),
            });
        }
        if self.starts.len() != self.capture.searcher_count() {
            return Err(Error::InvalidInput {
                what: "instance",
                message: format!(
                    "{} searcher starts but {} false-negative rates",
                    self.starts.len(),
                    self.capture.searcher_count()
                ),
            });
        }
        for &start in &self.starts {
            if !self.graph.contains_vertex(start) {
                return Err(Error::InvalidVertex { vertex: start, n });
            }
        }
        if self.motion.vertex_count() != n {
            return Err(Error::InvalidInput {
                what: "instance",
                message: format!(
                    "motion kernel is {0}x{0} but graph has {n} vertices",
                    self.motion.vertex_count()
                ),
            });
        }
        if self.initial_belief.vertex_count() != n {
            return Err(Error::InvalidInput {
                what: "instance",
                message: format!(
                    "initial belief has {} vertex entries but graph has {n}",
                    self.initial_belief.vertex_count()
                ),
            });
        }
        if self.horizon == 0 {
            return Err(Error::InvalidInput {
                what: "instance",
                message: "planning horizon must be at least 1".into(),
            });
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::InvalidInput {
                what: "instance",
                message: format!("discount factor {} outside (0, 1]", self.discount),
            });
        }
        Ok(())
    }

    /// Stable content digest used to tag models and output artifacts.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        let push_usize = |h: &mut Sha256, value: usize| h.update((value as u64).to_le_bytes());
        push_usize(&mut hasher, self.graph.vertex_count());
        for &(u, v) in self.graph.edges() {
            push_usize(&mut hasher, u);
            push_usize(&mut hasher, v);
        }
        for &s in &self.starts {
            push_usize(&mut hasher, s);
        }
        match self.capture.mode() {
            CaptureMode::SameVertex => hasher.update([0u8]),
            CaptureMode::HopRadius(r) => {
                hasher.update([1u8]);
                hasher.update(r.to_le_bytes());
            }
        }
        for &zeta in self.capture.false_negatives() {
            hasher.update(zeta.to_le_bytes());
        }
        let n = self.graph.vertex_count();
        for u in 1..=n {
            for v in 1..=n {
                hasher.update(self.motion.entry(u, v).to_le_bytes());
            }
        }
        for &p in self.initial_belief.entries() {
            hasher.update(p.to_le_bytes());
        }
        push_usize(&mut hasher, self.deadline);
        push_usize(&mut hasher, self.horizon);
        hasher.update(self.discount.to_le_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Step-by-step construction of an [`Instance`] with validation at the end.
#[derive(Debug)]
pub struct InstanceBuilder {
    graph: Graph,
    starts: Vec<Vertex>,
    capture: Option<CaptureConfig>,
    motion: Option<MotionMatrix>,
    initial_belief: Option<BeliefVector>,
    deadline: Option<usize>,
    horizon: Option<usize>,
    discount: f64,
}

impl InstanceBuilder {
    pub fn starts(mut self, starts: Vec<Vertex>) -> Self {
        self.starts = starts;
        self
    }

    pub fn capture(mut self, capture: CaptureConfig) -> Self {
        self.capture = Some(capture);
        self
    }

    pub fn motion(mut self, motion: MotionMatrix) -> Self {
        self.motion = Some(motion);
        self
    }

    /// Target that never moves.
    pub fn stationary_target(mut self) -> Self {
        self.motion = Some(MotionMatrix::stationary(self.graph.vertex_count()));
        self
    }

    pub fn initial_belief(mut self, belief: BeliefVector) -> Self {
        self.initial_belief = Some(belief);
        self
    }

    pub fn deadline(mut self, deadline: usize) -> Self {
        self.deadline = Some(deadline);
        self
    }

    pub fn horizon(mut self, horizon: usize) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }

    pub fn build(self) -> Result<Instance> {
        let missing = |what: &'static str| Error::InvalidInput {
            what: "instance",
            message: format!("missing {what}"),
        };
        let distances = DistanceMatrix::compute(&self.graph)?;
        let deadline = self.deadline.ok_or_else(|| missing("deadline"))?;
        let horizon = self.horizon.unwrap_or(deadline);
        let instance = Instance {
            distances,
            starts: self.starts,
            capture: self.capture.ok_or_else(|| missing("capture config"))?,
            motion: self.motion.ok_or_else(|| missing("motion kernel"))?,
            initial_belief: self
                .initial_belief
                .ok_or_else(|| missing("initial belief"))?,
            deadline,
            horizon,
            discount: self.discount,
            graph: self.graph,
        };
        instance.validate()?;
        Ok(instance)
    }
}
