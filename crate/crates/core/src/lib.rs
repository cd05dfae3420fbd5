//! Topological route navigation built on place-recognition retrieval.
//!
//! A route is recorded once as an ordered chain of node embeddings
//! ([`map`]). At run time each camera embedding is localized against the
//! chain ([`localization`]) and the node after the match becomes the next
//! subgoal ([`subgoal`]). [`sim`] drives full episodes in a synthetic 1-D
//! world and [`eval`] measures retrieval recall and selection latency.

pub mod embedding;
pub mod error;
pub mod eval;
pub mod format;
pub mod localization;
pub mod map;
pub mod sim;
pub mod subgoal;

pub use embedding::{distance_profile, l2_distance, nn_search, EmbeddingStore, EmbeddingVector};
pub use error::{Error, Result};
pub use localization::{
    bayes_localize_init, bayes_localize_step, calibrate_lambda1, global_localize_step,
    measurement_likelihood, predict, update, window_localize_step, BeliefState, Localizer,
    LocalizerConfig, MeasurementModel, MotionModel, Selector, WindowState,
};
pub use map::{build_map, load_map, route_samples, save_map, MapNode, RouteSample, TopologicalMap};
pub use subgoal::{decide_subgoal, pairwise_select, PairwiseScorerStub, SubgoalDecision};
