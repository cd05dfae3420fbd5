//! Localizing an observation against the map.
//!
//! Three strategies share one interface:
//! - a discrete Bayes filter over map nodes (uniform-band motion model,
//!   exponential distance likelihood),
//! - a sliding window around the previous match,
//! - unconstrained global nearest-neighbor search.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::embedding::{argmin, EmbeddingVector};
use crate::error::{Error, Result};
use crate::map::TopologicalMap;

/// Tolerance on the sum of a belief vector.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Below this peak value the unnormalized posterior is rescaled.
const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Probability mass over map nodes `0..=S`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    probs: Vec<f64>,
}

impl BeliefState {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidBelief("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidBelief(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidBelief(format!("sums to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights into a belief.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidBelief("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(Error::FilterDivergence);
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "belief over zero nodes");
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn delta(len: usize, at: usize) -> Self {
        assert!(at < len, "delta outside belief");
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Most probable node; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Smallest index range holding all nonzero mass.
    pub fn support(&self) -> RangeInclusive<usize> {
        let first = self.probs.iter().position(|&p| p > 0.0).unwrap_or(0);
        let last = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        first..=last
    }
}

/// Uniform transition band: from node `j` the robot reaches `i` with equal
/// probability whenever `w_l <= i - j <= w_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub w_l: i64,
    pub w_u: i64,
    /// Weight of a uniform component mixed into every transition. Zero keeps
    /// the pure band kernel.
    #[serde(default)]
    pub epsilon: f64,
}

impl Default for MotionModel {
    fn default() -> Self {
        Self {
            w_l: -1,
            w_u: 2,
            epsilon: 0.0,
        }
    }
}

impl MotionModel {
    pub fn new(w_l: i64, w_u: i64) -> Result<Self> {
        let m = Self {
            w_l,
            w_u,
            epsilon: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.w_l > self.w_u {
            return Err(Error::InvalidMotionModel {
                w_l: self.w_l,
                w_u: self.w_u,
            });
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Number of offsets in the band, `w_u - w_l + 1`.
    pub fn width(&self) -> usize {
        (self.w_u - self.w_l + 1) as usize
    }
}

/// Exponential likelihood scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    lambda1: f64,
}

impl MeasurementModel {
    pub fn new(lambda1: f64) -> Result<Self> {
        if !(lambda1.is_finite() && lambda1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda1 must be positive and finite, got {lambda1}"
            )));
        }
        Ok(Self { lambda1 })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }
}

/// Band of candidate nodes centered on the previous match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowState {
    pub center: usize,
    pub width: usize,
}

impl WindowState {
    pub fn new(center: usize, width: usize) -> Result<Self> {
        if width == 0 || width % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "window width must be odd and positive, got {width}"
            )));
        }
        Ok(Self { center, width })
    }

    /// `[center - width/2, center + width/2]` clipped to `[0, last]`.
    pub fn candidates(&self, last: usize) -> RangeInclusive<usize> {
        let half = self.width / 2;
        let center = self.center.min(last);
        center.saturating_sub(half)..=(center + half).min(last)
    }
}

fn clamp_node(i: i64, last: usize) -> usize {
    i.clamp(0, last as i64) as usize
}

/// Motion prediction on a raw mass vector. Linear in `mass`.
pub(crate) fn predict_mass(mass: &[f64], motion: &MotionModel) -> Vec<f64> {
    let n = mass.len();
    let last = n - 1;
    let share = 1.0 / motion.width() as f64;
    let mut out = vec![0.0; n];
    for (j, &p) in mass.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let w = p * share;
        for offset in motion.w_l..=motion.w_u {
            out[clamp_node(j as i64 + offset, last)] += w;
        }
    }
    if motion.epsilon > 0.0 {
        let total: f64 = mass.iter().sum();
        let floor = motion.epsilon * total / n as f64;
        for v in &mut out {
            *v = (1.0 - motion.epsilon) * *v + floor;
        }
    }
    out
}

/// Propagates the belief one step through the motion model.
///
/// Transitions that would leave the route are folded into the nearest end
/// node, so no mass is lost.
pub fn predict(belief: &BeliefState, motion: &MotionModel) -> BeliefState {
    BeliefState {
        probs: predict_mass(&belief.probs, motion),
    }
}

fn likelihood_from_distances(distances: &[f64], meas: &MeasurementModel) -> Vec<f64> {
    distances
        .iter()
        .map(|d| (-meas.lambda1 * d).exp())
        .collect()
}

/// `exp(-lambda1 * ||z_obs - z_s||)` for every node `s`.
pub fn measurement_likelihood(
    observation: &EmbeddingVector,
    map: &TopologicalMap,
    meas: &MeasurementModel,
) -> Result<Vec<f64>> {
    let distances = map.store().distance_profile(observation)?;
    Ok(likelihood_from_distances(&distances, meas))
}

/// Multiplies prior and likelihood elementwise and renormalizes.
pub fn update(prior: &BeliefState, likelihood: &[f64]) -> Result<BeliefState> {
    if likelihood.len() != prior.len() {
        return Err(Error::LengthMismatch {
            expected: prior.len(),
            actual: likelihood.len(),
        });
    }
    if likelihood.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::InvalidParameter(
            "likelihood entries must be finite and nonnegative".into(),
        ));
    }
    let mut product: Vec<f64> = prior
        .probs
        .iter()
        .zip(likelihood)
        .map(|(p, l)| p * l)
        .collect();
    let peak = product.iter().cloned().fold(0.0, f64::max);
    if peak < UNDERFLOW_FLOOR {
        let lmax = likelihood.iter().cloned().fold(0.0, f64::max);
        if lmax > 0.0 {
            product = prior
                .probs
                .iter()
                .zip(likelihood)
                .map(|(p, l)| p * (l / lmax))
                .collect();
        }
    }
    let sum: f64 = product.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::FilterDivergence);
    }
    Ok(BeliefState {
        probs: product.into_iter().map(|v| v / sum).collect(),
    })
}

/// Picks `lambda1` so the mean distance is `kappa` times less likely than the
/// best match: `lambda1 = ln(kappa) / (mean(d) - min(d))`.
///
/// Falls back to `1.0` when the spread is degenerate (below `1e-9`).
pub fn calibrate_lambda1(profile: &[f64], kappa: f64) -> Result<MeasurementModel> {
    if profile.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 distances to calibrate, got {}",
            profile.len()
        )));
    }
    if profile.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidParameter("distances must be finite".into()));
    }
    if !(kappa.is_finite() && kappa > 1.0) {
        return Err(Error::InvalidParameter(format!("kappa must exceed 1, got {kappa}")));
    }
    let min = profile.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;
    let spread = mean - min;
    if spread < 1e-9 {
        return MeasurementModel::new(1.0);
    }
    MeasurementModel::new(kappa.ln() / spread)
}

/// First filter belief, taken straight from the first query with no prior.
pub fn bayes_localize_init(
    observation: &EmbeddingVector,
    map: &TopologicalMap,
    kappa: f64,
) -> Result<(BeliefState, MeasurementModel)> {
    let distances = map.store().distance_profile(observation)?;
    let meas = calibrate_lambda1(&distances, kappa)?;
    let likelihood = stable_likelihood(&distances, &meas);
    Ok((BeliefState::from_weights(likelihood)?, meas))
}

// Eq. form in the common case; shifted by the best distance only if the plain
// exponentials underflow, which leaves the normalized result unchanged.
fn stable_likelihood(distances: &[f64], meas: &MeasurementModel) -> Vec<f64> {
    let plain = likelihood_from_distances(distances, meas);
    if plain.iter().cloned().fold(0.0, f64::max) >= UNDERFLOW_FLOOR {
        return plain;
    }
    let min = distances.iter().cloned().fold(f64::INFINITY, f64::min);
    distances
        .iter()
        .map(|d| (-meas.lambda1 * (d - min)).exp().max(f64::MIN_POSITIVE))
        .collect()
}

/// One filter iteration: predict, weigh by the observation, renormalize.
/// Returns the posterior and its most probable node.
pub fn bayes_localize_step(
    state: &BeliefState,
    observation: &EmbeddingVector,
    map: &TopologicalMap,
    motion: &MotionModel,
    meas: &MeasurementModel,
) -> Result<(BeliefState, usize)> {
    if state.len() != map.len() {
        return Err(Error::LengthMismatch {
            expected: map.len(),
            actual: state.len(),
        });
    }
    motion.validate()?;
    let prior = predict(state, motion);
    let distances = map.store().distance_profile(observation)?;
    let posterior = update(&prior, &stable_likelihood(&distances, meas))?;
    let best = posterior.argmax();
    Ok((posterior, best))
}

/// Best match inside the window; the window then re-centers on it.
pub fn window_localize_step(
    state: &WindowState,
    observation: &EmbeddingVector,
    map: &TopologicalMap,
) -> Result<(WindowState, usize)> {
    let candidates: Vec<usize> = state.candidates(map.last_index()).collect();
    let distances = map.store().distances_to(observation, &candidates)?;
    let best = candidates[argmin(&distances).expect("window is never empty")];
    Ok((
        WindowState {
            center: best,
            width: state.width,
        },
        best,
    ))
}

/// Nearest node over the whole map.
pub fn global_localize_step(observation: &EmbeddingVector, map: &TopologicalMap) -> Result<usize> {
    let distances = map.store().distance_profile(observation)?;
    Ok(argmin(&distances).expect("map is never empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Bayes,
    Window,
    Global,
}

impl Selector {
    pub fn as_str(&self) -> &'static str {
        match self {
            Selector::Bayes => "bayes",
            Selector::Window => "window",
            Selector::Global => "global",
        }
    }
}

impl std::fmt::Display for Selector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bayes" => Ok(Selector::Bayes),
            "window" => Ok(Selector::Window),
            "global" => Ok(Selector::Global),
            other => Err(Error::InvalidParameter(format!(
                "unknown selector '{other}' (expected bayes|window|global)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizerConfig {
    pub selector: Selector,
    pub w_l: i64,
    pub w_u: i64,
    pub kappa: f64,
    pub window_size: usize,
    pub epsilon_uniform: f64,
}

impl Default for LocalizerConfig {
    fn default() -> Self {
        Self {
            selector: Selector::Bayes,
            w_l: -1,
            w_u: 2,
            kappa: 4.0,
            window_size: 5,
            epsilon_uniform: 0.0,
        }
    }
}

impl LocalizerConfig {
    pub fn with_selector(selector: Selector) -> Self {
        Self {
            selector,
            ..Self::default()
        }
    }

    pub fn motion(&self) -> Result<MotionModel> {
        MotionModel::new(self.w_l, self.w_u)?.with_epsilon(self.epsilon_uniform)
    }

    pub fn validate(&self) -> Result<()> {
        self.motion()?;
        WindowState::new(0, self.window_size)?;
        if !(self.kappa.is_finite() && self.kappa > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa must exceed 1, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum LocalizerState {
    Bayes {
        motion: MotionModel,
        kappa: f64,
        filter: Option<(BeliefState, MeasurementModel)>,
    },
    Window(WindowState),
    Global,
}

/// Stateful wrapper that runs the configured strategy observation by
/// observation. Must be stepped sequentially.
#[derive(Debug, Clone)]
pub struct Localizer {
    state: LocalizerState,
}

impl Localizer {
    /// `window_start` seeds the sliding window center; the filter ignores it.
    pub fn new(config: &LocalizerConfig, window_start: usize) -> Result<Self> {
        config.validate()?;
        let state = match config.selector {
            Selector::Bayes => LocalizerState::Bayes {
                motion: config.motion()?,
                kappa: config.kappa,
                filter: None,
            },
            Selector::Window => {
                LocalizerState::Window(WindowState::new(window_start, config.window_size)?)
            }
            Selector::Global => LocalizerState::Global,
        };
        Ok(Self { state })
    }

    pub fn localize(&mut self, observation: &EmbeddingVector, map: &TopologicalMap) -> Result<usize> {
        match &mut self.state {
            LocalizerState::Bayes {
                motion,
                kappa,
                filter,
            } => {
                let (belief, meas, best) = match filter.take() {
                    None => {
                        let (belief, meas) = bayes_localize_init(observation, map, *kappa)?;
                        let best = belief.argmax();
                        (belief, meas, best)
                    }
                    Some((belief, meas)) => {
                        let (belief, best) =
                            bayes_localize_step(&belief, observation, map, motion, &meas)?;
                        (belief, meas, best)
                    }
                };
                *filter = Some((belief, meas));
                Ok(best)
            }
            LocalizerState::Window(window) => {
                let (next, best) = window_localize_step(window, observation, map)?;
                *window = next;
                Ok(best)
            }
            LocalizerState::Global => global_localize_step(observation, map),
        }
    }

    pub fn belief(&self) -> Option<&BeliefState> {
        match &self.state {
            LocalizerState::Bayes {
                filter: Some((b, _)),
                ..
            } => Some(b),
            _ => None,
        }
    }

    pub fn window(&self) -> Option<&WindowState> {
        match &self.state {
            LocalizerState::Window(w) => Some(w),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ev(v: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(v.to_vec()).unwrap()
    }

    fn line_map(n: usize) -> TopologicalMap {
        TopologicalMap::from_embeddings((0..n).map(|i| ev(&[i as f32, 0.0])).collect()).unwrap()
    }

    fn random_unit_map(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> TopologicalMap {
        let vs = (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                EmbeddingVector::from_f64(&v.iter().map(|x| x / norm).collect::<Vec<_>>()).unwrap()
            })
            .collect();
        TopologicalMap::from_embeddings(vs).unwrap()
    }

    // Dense transition matrix T[i][j] = P(i | j), built by direct enumeration.
    fn transition_matrix(n: usize, w_l: i64, w_u: i64) -> Vec<Vec<f64>> {
        let width = (w_u - w_l + 1) as f64;
        let mut t = vec![vec![0.0; n]; n];
        for j in 0..n {
            for o in w_l..=w_u {
                let i = (j as i64 + o).max(0).min(n as i64 - 1) as usize;
                t[i][j] += 1.0 / width;
            }
        }
        t
    }

    #[test]
    fn predict_delta_interior() {
        let b = BeliefState::delta(21, 5);
        let p = predict(&b, &MotionModel::default());
        for (i, &v) in p.probs().iter().enumerate() {
            let want = if (4..=7).contains(&i) { 0.25 } else { 0.0 };
            assert_eq!(v, want, "node {i}");
        }
    }

    #[test]
    fn predict_delta_clamps_at_goal() {
        let p = predict(&BeliefState::delta(21, 20), &MotionModel::default());
        assert_eq!(p.probs()[19], 0.25);
        assert_eq!(p.probs()[20], 0.75);
        assert_eq!(p.probs()[..19].iter().sum::<f64>(), 0.0);

        let p = predict(&BeliefState::delta(21, 0), &MotionModel::default());
        assert_eq!(&p.probs()[..3], &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn predict_uniform_matches_matrix_oracle() {
        for (w_l, w_u) in [(-1, 2), (0, 0), (-3, 1), (0, 4), (-2, 2)] {
            let n = 40;
            let motion = MotionModel::new(w_l, w_u).unwrap();
            let p = predict(&BeliefState::uniform(n), &motion);
            let t = transition_matrix(n, w_l, w_u);
            let u = 1.0 / n as f64;
            for i in 0..n {
                let want: f64 = t[i].iter().map(|x| x * u).sum();
                assert!((p.probs()[i] - want).abs() < 1e-12);
            }
            // Interior nodes are untouched by clamping and stay uniform.
            let lo = w_u.max(0) as usize;
            let mut hi = (n as i64 - 1 + w_l.min(0)) as usize;
            if w_u > 0 {
                hi = hi.min(n - 2);
            }
            for i in lo..=hi {
                assert!((p.probs()[i] - u).abs() < 1e-12, "({w_l},{w_u}) node {i}");
            }
        }
    }

    #[test]
    fn epsilon_mixture_keeps_mass() {
        let motion = MotionModel::default().with_epsilon(0.1).unwrap();
        let p = predict(&BeliefState::delta(10, 3), &motion);
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.probs().iter().all(|&v| v >= 0.01 - 1e-15));
        assert!(MotionModel::default().with_epsilon(1.5).is_err());
    }

    #[test]
    fn motion_model_validation() {
        assert!(MotionModel::new(2, 1).is_err());
        assert_eq!(MotionModel::new(0, 0).unwrap().width(), 1);
        assert_eq!(MotionModel::default().width(), 4);
    }

    #[test]
    fn likelihood_examples() {
        let map = line_map(5);
        let meas = MeasurementModel::new(3.7).unwrap();
        let l = measurement_likelihood(&ev(&[3.0, 0.0]), &map, &meas).unwrap();
        assert_eq!(l[3], 1.0);
        assert!(l.iter().all(|&v| v > 0.0 && v <= 1.0));

        // distances [0, 1, 2] with lambda1 = 1
        let map = line_map(3);
        let l = measurement_likelihood(&ev(&[0.0, 0.0]), &map, &MeasurementModel::new(1.0).unwrap())
            .unwrap();
        let want = [1.0, 0.36787944117144233, 0.1353352832366127];
        for (g, w) in l.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }

        let one = measurement_likelihood(&ev(&[0.3, 0.1]), &map, &MeasurementModel::new(1.3).unwrap())
            .unwrap();
        let two = measurement_likelihood(&ev(&[0.3, 0.1]), &map, &MeasurementModel::new(2.6).unwrap())
            .unwrap();
        for (a, b) in one.iter().zip(&two) {
            assert!((a * a - b).abs() <= 1e-15 * b.abs().max(1e-300));
        }

        assert!(measurement_likelihood(&ev(&[1.0]), &map, &meas).is_err());
        assert!(MeasurementModel::new(0.0).is_err());
        assert!(MeasurementModel::new(f64::INFINITY).is_err());
    }

    #[test]
    fn update_examples() {
        let prior = BeliefState::new(vec![0.5, 0.5]).unwrap();
        let post = update(&prior, &[1.0, 0.36787944117144233]).unwrap();
        assert!((post.probs()[0] - 0.7310585786300049).abs() < 1e-12);
        assert!((post.probs()[1] - 0.2689414213699951).abs() < 1e-12);

        let delta = BeliefState::delta(2, 0);
        assert_eq!(update(&delta, &[0.2, 0.9]).unwrap().probs(), &[1.0, 0.0]);

        let lik = [0.2, 0.5, 0.3, 1.0];
        let post = update(&BeliefState::uniform(4), &lik).unwrap();
        let s: f64 = lik.iter().sum();
        for (p, l) in post.probs().iter().zip(lik) {
            assert!((p - l / s).abs() < 1e-15);
        }

        assert!(matches!(update(&delta, &[0.0, 1.0]), Err(Error::FilterDivergence)));
        assert!(matches!(update(&delta, &[1.0]), Err(Error::LengthMismatch { .. })));
        assert!(update(&delta, &[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn update_survives_tiny_products() {
        let prior = BeliefState::new(vec![0.5, 0.5]).unwrap();
        let post = update(&prior, &[1e-310, 3e-310]).unwrap();
        assert!((post.probs()[0] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn calibrate_examples() {
        // min 0.2, mean 0.7
        let m = calibrate_lambda1(&[0.2, 0.7, 1.2], 4.0).unwrap();
        assert!((m.lambda1() - 2.772588722239781).abs() < 1e-12);
        assert_eq!(calibrate_lambda1(&[0.4, 0.4, 0.4], 4.0).unwrap().lambda1(), 1.0);
        assert!(calibrate_lambda1(&[0.4], 4.0).is_err());
        assert!(calibrate_lambda1(&[0.4, f64::NAN], 4.0).is_err());
        assert!(calibrate_lambda1(&[0.4, 0.5], 1.0).is_err());
    }

    #[test]
    fn calibration_is_scale_invariant() {
        let d = [0.3, 0.9, 1.4, 0.5, 2.0];
        let base = calibrate_lambda1(&d, 4.0).unwrap();
        for c in [0.01, 0.5, 3.0, 250.0] {
            let scaled: Vec<f64> = d.iter().map(|x| x * c).collect();
            let m = calibrate_lambda1(&scaled, 4.0).unwrap();
            assert!((m.lambda1() * c - base.lambda1()).abs() < 1e-9 * base.lambda1());
            let a = BeliefState::from_weights(likelihood_from_distances(&d, &base)).unwrap();
            let b = BeliefState::from_weights(likelihood_from_distances(&scaled, &m)).unwrap();
            for (x, y) in a.probs().iter().zip(b.probs()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn init_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut vs: Vec<Vec<f32>> = (0..12).map(|i| vec![10.0 * i as f32, 0.0]).collect();
        vs[7] = vec![0.0, 50.0];
        let map = TopologicalMap::from_embeddings(vs.iter().map(|v| ev(v)).collect()).unwrap();
        let (b, _) = bayes_localize_init(&ev(&[0.0, 50.0]), &map, 4.0).unwrap();
        assert_eq!(b.argmax(), 7);

        // every node equidistant from the query
        let map = TopologicalMap::from_embeddings(vec![
            ev(&[1.0, 0.0]),
            ev(&[0.0, 1.0]),
            ev(&[-1.0, 0.0]),
            ev(&[0.0, -1.0]),
        ])
        .unwrap();
        let (b, m) = bayes_localize_init(&ev(&[0.0, 0.0]), &map, 4.0).unwrap();
        assert_eq!(m.lambda1(), 1.0);
        assert!(b.probs().iter().all(|p| (p - 0.25).abs() < 1e-15));

        let map = random_unit_map(&mut rng, 15, 8);
        let obs = random_unit_map(&mut rng, 2, 8).nodes()[0].embedding.clone();
        let (b, m) = bayes_localize_init(&obs, &map, 4.0).unwrap();
        let d: Vec<f64> = map
            .nodes()
            .iter()
            .map(|n| {
                let mut acc = 0.0f64;
                for k in 0..8 {
                    let x = obs[k] as f64 - n.embedding[k] as f64;
                    acc += x * x;
                }
                acc.sqrt()
            })
            .collect();
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let lambda = 4f64.ln() / (mean - min);
        assert!((m.lambda1() - lambda).abs() < 1e-12);
        let w: Vec<f64> = d.iter().map(|x| (-lambda * x).exp()).collect();
        let s: f64 = w.iter().sum();
        for (p, x) in b.probs().iter().zip(&w) {
            assert!((p - x / s).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_exact_observations_hold_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let map = random_unit_map(&mut rng, 25, 32);
        let k = 12;
        let obs = map.nodes()[k].embedding.clone();
        let (mut belief, meas) = bayes_localize_init(&obs, &map, 4.0).unwrap();
        let motion = MotionModel::default();
        for _ in 0..10 {
            let (b, best) = bayes_localize_step(&belief, &obs, &map, &motion, &meas).unwrap();
            assert_eq!(best, k);
            assert!((k - 1..=k + 2).contains(&best));
            belief = b;
        }
    }

    #[test]
    fn filter_relocalizes_after_kidnap() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let map = random_unit_map(&mut rng, 40, 32);
        let motion = MotionModel::default();
        let (mut belief, meas) = bayes_localize_init(&map.nodes()[3].embedding, &map, 4.0).unwrap();
        for _ in 0..5 {
            belief = bayes_localize_step(&belief, &map.nodes()[3].embedding, &map, &motion, &meas)
                .unwrap()
                .0;
        }
        assert_eq!(belief.argmax(), 3);
        assert!(belief.probs()[30] > 0.0);

        let target = &map.nodes()[30].embedding;
        let mut dense = belief.probs().to_vec();
        let t = transition_matrix(40, -1, 2);
        let mut recovered_at = None;
        let mut oracle_recovered_at = None;
        for step in 1..=20 {
            let (b, best) = bayes_localize_step(&belief, target, &map, &motion, &meas).unwrap();
            belief = b;
            if best == 30 && recovered_at.is_none() {
                recovered_at = Some(step);
            }
            dense = dense_bayes_step(&t, &dense, &map, target, meas.lambda1());
            if argmax_first(&dense) == 30 && oracle_recovered_at.is_none() {
                oracle_recovered_at = Some(step);
            }
        }
        assert_eq!(recovered_at, oracle_recovered_at);
        // Frozen from the dense oracle run.
        assert_eq!(oracle_recovered_at, Some(4));
        assert_eq!(belief.argmax(), 30);
    }

    fn argmax_first(v: &[f64]) -> usize {
        let mut best = 0;
        for i in 1..v.len() {
            if v[i] > v[best] {
                best = i;
            }
        }
        best
    }

    fn dense_bayes_step(
        t: &[Vec<f64>],
        belief: &[f64],
        map: &TopologicalMap,
        obs: &EmbeddingVector,
        lambda: f64,
    ) -> Vec<f64> {
        let n = belief.len();
        let prior: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| t[i][j] * belief[j]).sum())
            .collect();
        let mut post = vec![0.0; n];
        for i in 0..n {
            let e = &map.nodes()[i].embedding;
            let mut acc = 0.0f64;
            for k in 0..e.len() {
                let d = obs[k] as f64 - e[k] as f64;
                acc += d * d;
            }
            post[i] = prior[i] * (-lambda * acc.sqrt()).exp();
        }
        let s: f64 = post.iter().sum();
        post.iter().map(|v| v / s).collect()
    }

    #[test]
    fn dominant_likelihood_wins_under_flat_prior() {
        let post = update(&BeliefState::uniform(5), &[0.1, 0.1, 0.9, 0.1, 0.1]).unwrap();
        assert_eq!(post.argmax(), 2);
    }

    #[test]
    fn window_examples() {
        let w = WindowState::new(10, 5).unwrap();
        assert_eq!(w.candidates(40), 8..=12);
        assert_eq!(WindowState::new(1, 5).unwrap().candidates(40), 0..=3);
        assert_eq!(WindowState::new(39, 5).unwrap().candidates(40), 37..=40);
        assert!(WindowState::new(1, 4).is_err());
        assert!(WindowState::new(1, 0).is_err());

        // Drift: the true match (node 30) is out of reach.
        let map = line_map(40);
        let (next, best) = window_localize_step(&w, &ev(&[30.0, 0.0]), &map).unwrap();
        assert!((8..=12).contains(&best));
        assert_eq!(best, 12);
        assert_eq!(next.center, 12);
        assert!(30 - best > 5);
    }

    #[test]
    fn global_examples() {
        let mut vs: Vec<EmbeddingVector> = (0..12).map(|i| ev(&[i as f32, 1.0])).collect();
        assert_eq!(
            global_localize_step(&ev(&[4.0, 1.0]), &TopologicalMap::from_embeddings(vs.clone()).unwrap())
                .unwrap(),
            4
        );
        vs[9] = ev(&[4.0, 1.0]);
        let map = TopologicalMap::from_embeddings(vs).unwrap();
        assert_eq!(global_localize_step(&ev(&[4.0, 1.0]), &map).unwrap(), 4);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let map = random_unit_map(&mut rng, 30, 6);
        for _ in 0..20 {
            let q = random_unit_map(&mut rng, 2, 6).nodes()[1].embedding.clone();
            let mut best = (0, f64::INFINITY);
            for (i, n) in map.nodes().iter().enumerate() {
                let d = crate::embedding::l2_distance(&q, &n.embedding).unwrap();
                if d < best.1 {
                    best = (i, d);
                }
            }
            assert_eq!(global_localize_step(&q, &map).unwrap(), best.0);
        }
    }

    #[test]
    fn step_rejects_wrong_length() {
        let map = line_map(5);
        let err = bayes_localize_step(
            &BeliefState::uniform(4),
            &ev(&[0.0, 0.0]),
            &map,
            &MotionModel::default(),
            &MeasurementModel::new(1.0).unwrap(),
        );
        assert!(matches!(err, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn config_json_shape() {
        let c: LocalizerConfig = serde_json::from_str(
            r#"{ "selector": "window", "w_l": -1, "w_u": 2, "kappa": 4.0, "window_size": 5, "epsilon_uniform": 0.0 }"#,
        )
        .unwrap();
        assert_eq!(c, LocalizerConfig::with_selector(Selector::Window));
        let partial: LocalizerConfig = serde_json::from_str(r#"{"selector":"global"}"#).unwrap();
        assert_eq!(partial.w_u, 2);
        assert!(serde_json::from_str::<LocalizerConfig>(r#"{"selector":"pairwise"}"#).is_err());
        assert!("nope".parse::<Selector>().is_err());
    }

    #[test]
    fn localizer_wrapper_tracks_state() {
        let map = line_map(10);
        let mut w = Localizer::new(&LocalizerConfig::with_selector(Selector::Window), 0).unwrap();
        assert_eq!(w.localize(&ev(&[9.0, 0.0]), &map).unwrap(), 2);
        assert_eq!(w.window().unwrap().center, 2);

        let mut b = Localizer::new(&LocalizerConfig::default(), 0).unwrap();
        assert!(b.belief().is_none());
        assert_eq!(b.localize(&ev(&[6.0, 0.0]), &map).unwrap(), 6);
        assert!(b.belief().is_some());
        assert_eq!(b.localize(&ev(&[6.0, 0.0]), &map).unwrap(), 6);
    }

    fn belief_strategy(n: usize) -> impl Strategy<Value = BeliefState> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter_map("nonzero mass", |w| {
            BeliefState::from_weights(w).ok()
        })
    }

    proptest! {
        #[test]
        fn predict_preserves_mass(b in belief_strategy(17), w_l in -4i64..=0, up in 0i64..5) {
            let m = MotionModel::new(w_l, w_l + up).unwrap();
            let p = predict(&b, &m);
            prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < NORMALIZATION_TOL);
        }

        #[test]
        fn identity_kernel(b in belief_strategy(9)) {
            prop_assert_eq!(predict(&b, &MotionModel::new(0, 0).unwrap()), b);
        }

        #[test]
        fn likelihood_is_monotone_in_distance(q in prop::collection::vec(-3.0f32..3.0, 3), lambda in 0.01f64..20.0) {
            let map = TopologicalMap::from_embeddings(vec![ev(&[0.0,0.0,0.0]), ev(&[1.0,2.0,-1.0]), ev(&[-2.0,0.5,0.5])]).unwrap();
            let q = ev(&q);
            let d = map.store().distance_profile(&q).unwrap();
            let l = measurement_likelihood(&q, &map, &MeasurementModel::new(lambda).unwrap()).unwrap();
            for i in 0..3 { for j in 0..3 {
                if d[i] < d[j] { prop_assert!(l[i] >= l[j]); }
                if l[i] > l[j] { prop_assert!(d[i] < d[j]); }
            }}
        }
    }
}
