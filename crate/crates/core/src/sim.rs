//! Headless 1-D route world for navigation episodes.
//!
//! A route is a line of nodes spaced `node_spacing` meters apart. Each node
//! carries a unit embedding; neighbouring embeddings are correlated through
//! first-order smoothing, and "bursty" stretches share a single embedding so
//! that distinct places look alike. The map handed to the localizer is the
//! noise-free node embeddings; observations interpolate between nodes by arc
//! position and add Gaussian noise.
//!
//! One step is one inference tick: observe, localize, choose a subgoal, move.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::localization::{Localizer, LocalizerConfig, Selector};
use crate::map::TopologicalMap;
use crate::subgoal::{decide_subgoal, SubgoalDecision};

/// World stream of a seed; episodes draw from [`EPISODE_STREAM`].
const WORLD_STREAM: u64 = 0;
const EPISODE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    /// Route length in meters.
    pub length: f64,
    pub node_spacing: f64,
    pub dim: usize,
    /// Smoothing weight on the previous node embedding.
    pub alpha: f64,
    /// Inclusive node ranges sharing one embedding.
    pub bursty_regions: Vec<(usize, usize)>,
    pub bursty_perturbation: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            length: 80.0,
            node_spacing: 1.0,
            dim: 128,
            alpha: 0.5,
            bursty_regions: Vec::new(),
            bursty_perturbation: 0.01,
        }
    }
}

impl WorldConfig {
    pub fn node_count(&self) -> usize {
        (self.length / self.node_spacing + 1e-9).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.node_spacing.is_finite() && self.node_spacing > 0.0) {
            return Err(Error::InvalidParameter("node_spacing must be positive".into()));
        }
        if !(self.length.is_finite() && self.length >= 2.0 * self.node_spacing) {
            return Err(Error::InvalidParameter(format!(
                "route length {} must be at least twice the node spacing {}",
                self.length, self.node_spacing
            )));
        }
        if self.dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.bursty_perturbation.is_finite() && self.bursty_perturbation >= 0.0) {
            return Err(Error::InvalidParameter("bursty_perturbation must be >= 0".into()));
        }
        let last = self.node_count() - 1;
        for &(a, b) in &self.bursty_regions {
            if a > b || b > last {
                return Err(Error::InvalidParameter(format!(
                    "bursty region ({a}, {b}) outside nodes 0..={last}"
                )));
            }
        }
        Ok(())
    }
}

/// A generated route and the map recorded from it.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteWorld {
    pub config: WorldConfig,
    pub seed: u64,
    map: TopologicalMap,
    // Node embeddings widened from the map's f32 storage.
    nodes: Vec<Vec<f64>>,
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn unit_random(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if v.iter().any(|x| *x != 0.0) {
            normalize(&mut v);
            return v;
        }
    }
}

/// Builds the world deterministically from `(config, seed)`.
pub fn generate_world(config: &WorldConfig, seed: u64) -> Result<RouteWorld> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(WORLD_STREAM);
    let n = config.node_count();
    let dim = config.dim;
    let alpha = config.alpha;

    // Bursty members are overwritten as the chain is generated, so the
    // nodes after a region continue smoothly from the shared embedding.
    let mut base: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut shared: Option<Vec<f64>> = None;
    for s in 0..n {
        let fresh = unit_random(&mut rng, dim);
        let smoothed = match base.last() {
            None => fresh,
            Some(prev) if alpha >= 1.0 => prev.clone(),
            Some(prev) => {
                let mut v: Vec<f64> = prev
                    .iter()
                    .zip(&fresh)
                    .map(|(p, g)| alpha * p + (1.0 - alpha) * g)
                    .collect();
                normalize(&mut v);
                v
            }
        };
        let region = config
            .bursty_regions
            .iter()
            .find(|&&(start, end)| (start..=end).contains(&s));
        let next = match region {
            None => {
                shared = None;
                smoothed
            }
            Some(&(start, _)) => {
                if s == start || shared.is_none() {
                    shared = Some(smoothed);
                }
                let centre = shared.as_ref().expect("set on region entry");
                let jitter = unit_random(&mut rng, dim);
                let mut v: Vec<f64> = centre
                    .iter()
                    .zip(&jitter)
                    .map(|(c, j)| c + config.bursty_perturbation * j)
                    .collect();
                normalize(&mut v);
                v
            }
        };
        base.push(next);
    }

    RouteWorld::from_embeddings(
        config.clone(),
        seed,
        base.iter()
            .map(|v| EmbeddingVector::from_f64(v))
            .collect::<Result<_>>()?,
    )
}

impl RouteWorld {
    fn from_embeddings(config: WorldConfig, seed: u64, embeddings: Vec<EmbeddingVector>) -> Result<Self> {
        let nodes = embeddings.iter().map(|e| e.to_f64()).collect();
        let map = TopologicalMap::from_embeddings(embeddings)?;
        Ok(Self {
            config,
            seed,
            map,
            nodes,
        })
    }

    /// Lays an existing map out as a route with uniform `node_spacing`.
    pub fn from_map(map: &TopologicalMap, node_spacing: f64) -> Result<Self> {
        let config = WorldConfig {
            length: map.last_index() as f64 * node_spacing,
            node_spacing,
            dim: map.dim(),
            ..WorldConfig::default()
        };
        config.validate()?;
        Self::from_embeddings(
            config,
            0,
            map.nodes().iter().map(|n| n.embedding.clone()).collect(),
        )
    }

    pub fn map(&self) -> &TopologicalMap {
        &self.map
    }

    pub fn last_node(&self) -> usize {
        self.map.last_index()
    }

    /// Arc length of the final node.
    pub fn route_length(&self) -> f64 {
        self.last_node() as f64 * self.config.node_spacing
    }

    pub fn node_arc(&self, node: usize) -> f64 {
        node.min(self.last_node()) as f64 * self.config.node_spacing
    }

    /// Node nearest to an arc position; halfway points round up.
    pub fn nearest_node(&self, arc: f64) -> usize {
        let s = (arc / self.config.node_spacing + 0.5).floor();
        (s.max(0.0) as usize).min(self.last_node())
    }

    fn clamp_arc(&self, arc: f64) -> f64 {
        arc.clamp(0.0, self.route_length())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    /// Per-component standard deviation of additive embedding noise.
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub arc_position: f64,
    /// Meters per step.
    pub speed: f64,
}

/// Embedding seen at the robot's arc position.
///
/// Exactly at a node with zero noise this is the node's map embedding;
/// otherwise the interpolated, noised vector is renormalized to unit length.
pub fn observe(
    world: &RouteWorld,
    model: &ObservationModel,
    robot: &RobotState,
    rng: &mut impl Rng,
) -> EmbeddingVector {
    let pos = world.clamp_arc(robot.arc_position) / world.config.node_spacing;
    let last = world.last_node();
    let i = (pos.floor() as usize).min(last);
    let frac = if i == last { 0.0 } else { pos - i as f64 };

    let mut v = if frac == 0.0 {
        world.nodes[i].clone()
    } else {
        world.nodes[i]
            .iter()
            .zip(&world.nodes[i + 1])
            .map(|(a, b)| (1.0 - frac) * a + frac * b)
            .collect()
    };
    let noisy = model.noise_sigma > 0.0;
    if noisy {
        let noise = Normal::new(0.0, model.noise_sigma).expect("sigma is finite and positive");
        for x in v.iter_mut() {
            *x += noise.sample(rng);
        }
    }
    if frac != 0.0 || noisy {
        normalize(&mut v);
    }
    EmbeddingVector::from_f64(&v).expect("observation components are finite")
}

/// Moves toward the subgoal node by at most `speed`, then adds motion noise.
/// A subgoal behind the robot moves it backwards.
pub fn step_robot(
    robot: &RobotState,
    decision: &SubgoalDecision,
    world: &RouteWorld,
    motion_noise: f64,
    rng: &mut impl Rng,
) -> RobotState {
    let target = world.node_arc(decision.subgoal_node);
    let mut arc = robot.arc_position + (target - robot.arc_position).clamp(-robot.speed, robot.speed);
    if motion_noise > 0.0 {
        let noise = Normal::new(0.0, motion_noise).expect("motion noise is finite and positive");
        arc += noise.sample(rng);
    }
    RobotState {
        arc_position: world.clamp_arc(arc),
        speed: robot.speed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Meters per step.
    pub speed: f64,
    pub motion_noise: f64,
    pub noise_sigma: f64,
    /// Goal signal counts as success within this many meters of node `S`.
    pub goal_tolerance: f64,
    /// Steps without a new furthest position before the episode is stuck.
    pub stall_window: usize,
    /// Step budget as a multiple of the noise-free optimal step count.
    pub budget_factor: f64,
    /// Initial center of the sliding window.
    pub window_start: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            speed: 0.5,
            motion_noise: 0.0,
            noise_sigma: 0.0,
            goal_tolerance: 1.0,
            stall_window: 50,
            budget_factor: 4.0,
            window_start: 0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !positive(self.speed) {
            return Err(Error::InvalidParameter("speed must be positive".into()));
        }
        if !nonneg(self.motion_noise) || !nonneg(self.noise_sigma) || !nonneg(self.goal_tolerance) {
            return Err(Error::InvalidParameter(
                "noise levels and goal tolerance must be nonnegative".into(),
            ));
        }
        if self.stall_window == 0 {
            return Err(Error::InvalidParameter("stall_window must be positive".into()));
        }
        if !(self.budget_factor.is_finite() && self.budget_factor >= 1.0) {
            return Err(Error::InvalidParameter("budget_factor must be >= 1".into()));
        }
        Ok(())
    }

    /// Steps a perfect localizer needs from `start` with no noise.
    pub fn optimal_steps(&self, world: &RouteWorld, start: f64) -> usize {
        ((world.route_length() - start).max(0.0) / self.speed).ceil() as usize + 1
    }

    pub fn step_budget(&self, world: &RouteWorld, start: f64) -> usize {
        (self.budget_factor * self.optimal_steps(world, start) as f64).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    Timeout,
    FalseGoalSignal,
    Stuck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: usize,
    /// `|best_node - true_nearest_node|` per step.
    pub localization_error_series: Vec<usize>,
    pub subgoal_series: Vec<usize>,
    /// Robot arc position (meters) at each observation.
    pub arc_series: Vec<f64>,
    pub failure_reason: Option<FailureReason>,
}

impl EpisodeResult {
    pub fn mean_loc_error(&self) -> f64 {
        if self.localization_error_series.is_empty() {
            return 0.0;
        }
        self.localization_error_series.iter().sum::<usize>() as f64
            / self.localization_error_series.len() as f64
    }
}

/// Runs one navigation episode until success, a false goal signal, a stall
/// or the step budget.
pub fn run_episode(
    world: &RouteWorld,
    localizer: &LocalizerConfig,
    policy: &PolicyConfig,
    start_arc: f64,
    seed: u64,
) -> Result<EpisodeResult> {
    policy.validate()?;
    if !(start_arc.is_finite() && (0.0..=world.route_length()).contains(&start_arc)) {
        return Err(Error::InvalidParameter(format!(
            "start position {start_arc} is off the route"
        )));
    }
    let mut loc = Localizer::new(localizer, policy.window_start.min(world.last_node()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(EPISODE_STREAM);
    let obs_model = ObservationModel {
        noise_sigma: policy.noise_sigma,
    };
    let goal_arc = world.route_length();
    let budget = policy.step_budget(world, start_arc);

    let mut robot = RobotState {
        arc_position: start_arc,
        speed: policy.speed,
    };
    let mut errors = Vec::new();
    let mut subgoals = Vec::new();
    let mut arcs = Vec::new();
    let mut furthest = start_arc;
    let mut last_progress = 0;

    let finish = |steps, errors, subgoals, arcs, failure: Option<FailureReason>| EpisodeResult {
        success: failure.is_none(),
        steps,
        localization_error_series: errors,
        subgoal_series: subgoals,
        arc_series: arcs,
        failure_reason: failure,
    };

    for step in 0..budget {
        let observation = observe(world, &obs_model, &robot, &mut rng);
        let best = loc.localize(&observation, world.map())?;
        let truth = world.nearest_node(robot.arc_position);
        arcs.push(robot.arc_position);
        errors.push(best.abs_diff(truth));
        let decision = decide_subgoal(best, world.map())?;
        subgoals.push(decision.subgoal_node);

        if decision.goal_reached {
            let failure = if (goal_arc - robot.arc_position).abs() <= policy.goal_tolerance {
                None
            } else {
                Some(FailureReason::FalseGoalSignal)
            };
            return Ok(finish(step + 1, errors, subgoals, arcs, failure));
        }

        robot = step_robot(&robot, &decision, world, policy.motion_noise, &mut rng);
        if robot.arc_position > furthest + 1e-9 {
            furthest = robot.arc_position;
            last_progress = step + 1;
        } else if step + 1 - last_progress >= policy.stall_window {
            return Ok(finish(step + 1, errors, subgoals, arcs, Some(FailureReason::Stuck)));
        }
    }
    Ok(finish(budget, errors, subgoals, arcs, Some(FailureReason::Timeout)))
}

/// Where an episode starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "node")]
pub enum StartSpec {
    /// Start at node 0.
    RouteStart,
    /// Start at the middle node; the window still begins at its configured
    /// start node.
    Kidnapped,
    Node(usize),
}

impl StartSpec {
    pub fn arc(&self, world: &RouteWorld) -> f64 {
        match self {
            StartSpec::RouteStart => 0.0,
            StartSpec::Kidnapped => world.node_arc(world.last_node() / 2),
            StartSpec::Node(n) => world.node_arc(*n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub world: WorldConfig,
    pub policy: PolicyConfig,
    pub start: StartSpec,
}

/// Per-component observation noise of the "moderate" preset.
pub const MODERATE_OBSERVATION_NOISE: f64 = 0.04;
/// Per-step motion noise (meters) of the "moderate" preset.
pub const MODERATE_MOTION_NOISE: f64 = 0.3;

impl PolicyConfig {
    /// Default policy with moderate observation and motion noise.
    pub fn moderate_noise() -> Self {
        Self {
            noise_sigma: MODERATE_OBSERVATION_NOISE,
            motion_noise: MODERATE_MOTION_NOISE,
            ..Self::default()
        }
    }
}

impl Scenario {
    /// Noise-free default route from node 0.
    pub fn nominal() -> Self {
        Self {
            name: "nominal".into(),
            world: WorldConfig::default(),
            policy: PolicyConfig::default(),
            start: StartSpec::RouteStart,
        }
    }

    /// Robot placed at the middle node under moderate noise.
    pub fn kidnapped() -> Self {
        Self {
            name: "kidnapped".into(),
            world: WorldConfig::default(),
            policy: PolicyConfig::moderate_noise(),
            start: StartSpec::Kidnapped,
        }
    }

    /// A 10-node bursty stretch in the middle of the route, moderate noise.
    pub fn bursty() -> Self {
        let world = WorldConfig::default();
        let mid = (world.node_count() - 1) / 2;
        Self {
            name: "bursty".into(),
            world: WorldConfig {
                bursty_regions: vec![(mid - 5, mid + 4)],
                ..world
            },
            policy: PolicyConfig::moderate_noise(),
            start: StartSpec::RouteStart,
        }
    }
}

/// Scenarios x localizers x seeds. Each seed fixes both the world and the
/// episode noise, so every localizer sees the same worlds.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSpec {
    pub scenarios: Vec<Scenario>,
    pub localizers: Vec<LocalizerConfig>,
    pub seeds: Vec<u64>,
    /// Run every episode on this route instead of generating one per seed;
    /// seeds then only drive episode noise.
    pub fixed_world: Option<RouteWorld>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub world_id: String,
    pub selector: Selector,
    pub seed: u64,
    pub success: bool,
    pub steps: usize,
    pub failure_reason: Option<FailureReason>,
    pub mean_loc_error: f64,
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub selector: Selector,
    pub scenario: String,
    pub episodes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// Ordered by scenario, then localizer, then seed.
    pub records: Vec<EpisodeRecord>,
    pub episodes: Vec<EpisodeResult>,
    pub summary: Vec<SummaryRow>,
}

impl BatchResult {
    /// Outcome per seed for one scenario and selector, in seed order.
    pub fn outcomes(&self, scenario: &str, selector: Selector) -> Vec<bool> {
        self.records
            .iter()
            .filter(|r| r.scenario == scenario && r.selector == selector)
            .map(|r| r.success)
            .collect()
    }

    pub fn success_rate(&self, scenario: &str, selector: Selector) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.scenario == scenario && r.selector == selector)
            .map(|r| r.success_rate)
    }
}

pub fn world_id(scenario: &str, seed: u64) -> String {
    format!("{scenario}-{seed}")
}

/// Runs every (scenario, localizer, seed) cell. Episodes run in parallel;
/// output order is fixed by the grid.
pub fn run_batch(spec: &BatchSpec) -> Result<BatchResult> {
    if spec.scenarios.is_empty() || spec.localizers.is_empty() || spec.seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "batch needs at least one scenario, localizer and seed".into(),
        ));
    }
    for s in &spec.scenarios {
        s.world.validate()?;
        s.policy.validate()?;
    }
    for l in &spec.localizers {
        l.validate()?;
    }

    let worlds: Vec<Vec<RouteWorld>> = match &spec.fixed_world {
        Some(w) => vec![vec![w.clone(); spec.seeds.len()]; spec.scenarios.len()],
        None => spec
            .scenarios
            .par_iter()
            .map(|s| {
                spec.seeds
                    .iter()
                    .map(|&seed| generate_world(&s.world, seed))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?,
    };

    let mut cells = Vec::new();
    for (si, scenario) in spec.scenarios.iter().enumerate() {
        for localizer in &spec.localizers {
            for (wi, &seed) in spec.seeds.iter().enumerate() {
                cells.push((si, scenario, localizer, wi, seed));
            }
        }
    }

    let episodes: Vec<EpisodeResult> = cells
        .par_iter()
        .map(|&(si, scenario, localizer, wi, seed)| {
            let world = &worlds[si][wi];
            run_episode(world, localizer, &scenario.policy, scenario.start.arc(world), seed)
        })
        .collect::<Result<_>>()?;

    let records: Vec<EpisodeRecord> = cells
        .iter()
        .zip(&episodes)
        .map(|(&(_, scenario, localizer, _, seed), ep)| EpisodeRecord {
            world_id: match spec.fixed_world {
                Some(_) => format!("{}-map", scenario.name),
                None => world_id(&scenario.name, seed),
            },
            selector: localizer.selector,
            seed,
            success: ep.success,
            steps: ep.steps,
            failure_reason: ep.failure_reason,
            mean_loc_error: ep.mean_loc_error(),
            scenario: scenario.name.clone(),
            config_hash: None,
        })
        .collect();

    let mut summary = Vec::new();
    for scenario in &spec.scenarios {
        for localizer in &spec.localizers {
            let cell: Vec<&EpisodeRecord> = records
                .iter()
                .filter(|r| r.scenario == scenario.name && r.selector == localizer.selector)
                .collect();
            // Duplicate selectors in one batch share a row.
            if summary
                .iter()
                .any(|r: &SummaryRow| r.scenario == scenario.name && r.selector == localizer.selector)
            {
                continue;
            }
            let successes = cell.iter().filter(|r| r.success).count();
            summary.push(SummaryRow {
                selector: localizer.selector,
                scenario: scenario.name.clone(),
                episodes: cell.len(),
                success_rate: successes as f64 / cell.len() as f64,
            });
        }
    }

    Ok(BatchResult {
        records,
        episodes,
        summary,
    })
}
