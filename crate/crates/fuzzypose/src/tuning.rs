//! Episode runner, the transient/steady-state cost, and the search loop that
//! fits the fuzzy controller to a scenario.
//!
//! An episode couples three independent pieces: the simulator produces truth
//! and measurements, the filter consumes measurements, and the error tracker
//! feeds the gain source. Candidates in one tuning run all see the identical
//! measurement stream (common random numbers), so cost differences reflect
//! parameters rather than noise luck.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::filter::{filter_step, ErrorMode, ErrorTracker, FilterGains, FilterState, GainMode};
use crate::fuzzy::{build_model, FlcParams, PARAM_BOUNDS};
use crate::gsa::{run_gsa, GsaConfig, GsaResult, SearchSpace};
use crate::se3::{attitude_error_norm, euler_zyx, pose_error, Pose, Twist};
use crate::sim::{gen_measurements, step_true_pose, MeasurementFrame, ScenarioConfig, TrueState};
use crate::{Error, Result};

/// One sampled row of an episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub t: f64,
    /// True attitude as ZYX Euler angles `(roll, pitch, yaw)`.
    pub true_euler: [f64; 3],
    pub est_euler: [f64; 3],
    pub true_position: Vector3<f64>,
    pub est_position: Vector3<f64>,
    /// Normalized attitude error `|R_tilde|_I`.
    pub attitude_error: f64,
    /// Position error norm `|P_tilde|`.
    pub position_error: f64,
    pub e: f64,
    pub de: f64,
    pub k_op: f64,
    /// Applied gain `K = 1 + k_op`.
    pub gain: f64,
}

/// A full episode on the uniform `dt` grid (`t_final/dt + 1` rows).
#[derive(Clone, Debug)]
pub struct EpisodeSeries {
    pub dt: f64,
    pub records: Vec<EpisodeRecord>,
    /// FNV-1a hash of the raw measurement stream; equal digests mean two
    /// runs saw bit-identical measurements. Zero for series loaded from CSV.
    pub measurement_digest: u64,
}

impl EpisodeSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Weights and windows of the episode cost.
#[derive(Clone, Copy, Debug)]
pub struct CostWeights {
    /// Weight of the transient term (the steady-state term weighs 1).
    pub transient_weight: f64,
    /// Weight of the position-error sums inside both terms.
    pub position_weight: f64,
    /// Transient window in seconds, endpoints included.
    pub transient_window: (f64, f64),
    /// Steady-state window in seconds, endpoints included.
    pub steady_window: (f64, f64),
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            transient_weight: 0.3,
            position_weight: 0.2,
            transient_window: (0.0, 1.0),
            steady_window: (4.0, 14.0),
        }
    }
}

/// Everything an episode needs besides the scenario itself.
#[derive(Clone, Debug)]
pub struct EpisodeOptions {
    pub gain: GainMode,
    pub error_mode: ErrorMode,
    pub gamma: f64,
    pub s_delta: f64,
    /// Filter initialization; the bias estimate always starts at zero.
    pub initial_estimate: Pose,
    pub use_normalized_vectors: bool,
    /// Replaces the scenario's noise seed when set.
    pub seed: Option<u64>,
}

impl EpisodeOptions {
    pub fn new(gain: GainMode) -> Self {
        EpisodeOptions {
            gain,
            error_mode: ErrorMode::Measurable,
            gamma: 1.0,
            s_delta: 10.0,
            initial_estimate: Pose::identity(),
            use_normalized_vectors: false,
            seed: None,
        }
    }
}

fn fnv1a_f64(hash: &mut u64, x: f64) {
    for b in x.to_bits().to_le_bytes() {
        *hash = (*hash ^ b as u64).wrapping_mul(0x100_0000_01b3);
    }
}

fn digest_frame(hash: &mut u64, frame: &MeasurementFrame) {
    for x in frame.velocity.as_vector().iter() {
        fnv1a_f64(hash, *x);
    }
    for pair in &frame.vectors {
        for x in pair.body.iter().chain(pair.inertial.iter()) {
            fnv1a_f64(hash, *x);
        }
    }
    for lm in &frame.landmarks {
        for x in lm.body.iter().chain(lm.inertial.iter()) {
            fnv1a_f64(hash, *x);
        }
    }
}

/// Run one episode: propagate truth, corrupt measurements, drive the filter,
/// and record every step on the `dt` grid. Deterministic given the scenario
/// and seed. Fails before the loop if the scenario is unobservable, and
/// mid-run if the estimate leaves the representable range.
pub fn run_episode(scenario: &ScenarioConfig, opts: &EpisodeOptions) -> Result<EpisodeSeries> {
    scenario.validate()?;
    let observability = scenario.observability();
    if !observability.is_observable() {
        return Err(Error::Unobservable(
            "needs two non-collinear vectors plus a landmark, one vector plus two landmarks, \
             or three landmarks"
                .into(),
        ));
    }
    if !(opts.gamma > 0.0) {
        return Err(Error::Validation(format!(
            "gamma must be positive, got {}",
            opts.gamma
        )));
    }
    if !(opts.s_delta > 0.0) {
        return Err(Error::Validation(format!(
            "s_delta must be positive, got {}",
            opts.s_delta
        )));
    }
    if let GainMode::Constant(k_op) = opts.gain {
        if !(k_op >= 0.0) {
            return Err(Error::Validation(format!(
                "constant k_op must be nonnegative, got {k_op}"
            )));
        }
    }

    let steps = scenario.steps();
    let dt = scenario.dt;
    let seed = opts.seed.unwrap_or(scenario.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth = TrueState::initial();
    let mut state = FilterState::new(opts.initial_estimate, Twist::zero());
    let mut tracker = ErrorTracker::new(opts.error_mode, opts.s_delta);
    let gains = FilterGains {
        gamma: opts.gamma,
        landmark_weights: Vec::new(),
        vector_weights: Vec::new(),
        use_normalized_vectors: opts.use_normalized_vectors,
        gain: opts.gain.clone(),
    };

    let mut digest: u64 = 0xcbf2_9ce4_8422_2325;
    let mut records = Vec::with_capacity(steps + 1);

    for i in 0..=steps {
        let t = i as f64 * dt;
        let frame = gen_measurements(&truth, scenario, &mut rng)?;
        digest_frame(&mut digest, &frame);
        let signals = tracker.update(&frame, &state, Some(&truth.pose), dt)?;
        let k_op = gains.gain.k_op(signals.e, signals.de).max(0.0);

        let (r_tilde, p_tilde) = pose_error(&truth.pose, &state.pose);
        let (tr, tp, ty) = euler_zyx(&truth.pose.rotation);
        let (er, ep, ey) = euler_zyx(&state.pose.rotation);
        records.push(EpisodeRecord {
            t,
            true_euler: [tr, tp, ty],
            est_euler: [er, ep, ey],
            true_position: truth.pose.position,
            est_position: state.pose.position,
            attitude_error: attitude_error_norm(&r_tilde),
            position_error: p_tilde.norm(),
            e: signals.e,
            de: signals.de,
            k_op,
            gain: 1.0 + k_op,
        });

        if i < steps {
            state = filter_step(&state, &frame, &gains, signals, dt);
            truth = step_true_pose(&truth, dt);
            if !state.pose.position.iter().all(|x| x.is_finite()) {
                return Err(Error::Numerical(format!(
                    "pose estimate diverged at t = {:.2}",
                    t + dt
                )));
            }
        }
    }

    Ok(EpisodeSeries {
        dt,
        records,
        measurement_digest: digest,
    })
}

/// Episode cost: `w_tr * e_tr + e_ss`, each term summing
/// `|R_tilde|_I + w_p * |P_tilde|` over its window (grid samples, endpoints
/// included). Fails if the series does not cover the steady-state window.
pub fn episode_cost(series: &EpisodeSeries, weights: &CostWeights) -> Result<f64> {
    let span = series.records.last().map(|r| r.t).unwrap_or(f64::NEG_INFINITY);
    if span + 1e-9 < weights.steady_window.1 {
        return Err(Error::Validation(format!(
            "series ends at {span} s but the steady-state window runs to {} s",
            weights.steady_window.1
        )));
    }
    let window_sum = |(lo, hi): (f64, f64)| -> f64 {
        series
            .records
            .iter()
            .filter(|r| r.t >= lo - 1e-9 && r.t <= hi + 1e-9)
            .map(|r| r.attitude_error + weights.position_weight * r.position_error)
            .sum()
    };
    let transient = window_sum(weights.transient_window);
    let steady = window_sum(weights.steady_window);
    Ok(weights.transient_weight * transient + steady)
}

/// Settings of one tuning run.
#[derive(Clone, Debug)]
pub struct TuneOptions {
    pub gsa: GsaConfig,
    pub weights: CostWeights,
    pub error_mode: ErrorMode,
    pub gamma: f64,
    pub s_delta: f64,
    pub initial_estimate: Pose,
    pub use_normalized_vectors: bool,
}

impl TuneOptions {
    pub fn new(gsa: GsaConfig) -> Self {
        TuneOptions {
            gsa,
            weights: CostWeights::default(),
            error_mode: ErrorMode::Measurable,
            gamma: 1.0,
            s_delta: 10.0,
            initial_estimate: Pose::identity(),
            use_normalized_vectors: false,
        }
    }

    fn episode_options(&self, gain: GainMode) -> EpisodeOptions {
        EpisodeOptions {
            gain,
            error_mode: self.error_mode,
            gamma: self.gamma,
            s_delta: self.s_delta,
            initial_estimate: self.initial_estimate,
            use_normalized_vectors: self.use_normalized_vectors,
            seed: None,
        }
    }
}

/// Cost of one candidate parameter vector on the scenario's own seed.
pub fn candidate_cost(
    scenario: &ScenarioConfig,
    opts: &TuneOptions,
    params: &FlcParams,
) -> Result<f64> {
    let model = build_model(params)?;
    let series = run_episode(scenario, &opts.episode_options(GainMode::Fuzzy(model)))?;
    episode_cost(&series, &opts.weights)
}

/// Search the 22 membership-parameter boxes for the controller minimizing the
/// episode cost. Every candidate runs on the scenario's fixed noise seed.
/// Returns the repaired best parameters and the full search trace.
pub fn tune_flc(scenario: &ScenarioConfig, opts: &TuneOptions) -> Result<(FlcParams, GsaResult)> {
    scenario.validate()?;
    let space = SearchSpace::new(PARAM_BOUNDS.to_vec())?;
    let cost_fn = |x: &[f64]| -> Option<f64> {
        let params = FlcParams::from_slice(x).ok()?;
        candidate_cost(scenario, opts, &params)
            .ok()
            .filter(|c| c.is_finite())
    };
    let result = run_gsa(&space, cost_fn, &opts.gsa)?;
    let best = FlcParams::from_slice(&result.best_position)?.repaired();
    Ok((best, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::reference_initial_estimate;
    use approx::assert_relative_eq;

    fn constant_gain_options(k_op: f64) -> EpisodeOptions {
        EpisodeOptions::new(GainMode::Constant(k_op))
    }

    #[test]
    fn equilibrium_episode_stays_at_zero_error() {
        let scenario = ScenarioConfig::reference_noise_free(0);
        let series = run_episode(&scenario, &constant_gain_options(0.0)).unwrap();
        assert_eq!(series.len(), 1501);
        for r in &series.records {
            assert!(r.attitude_error < 1e-9, "at t = {}", r.t);
            assert!(r.position_error < 1e-9, "at t = {}", r.t);
        }
    }

    #[test]
    fn large_error_initialization_first_row() {
        let scenario = ScenarioConfig::reference(3);
        let mut opts = constant_gain_options(10.0);
        opts.initial_estimate = reference_initial_estimate();
        let series = run_episode(&scenario, &opts).unwrap();
        let first = &series.records[0];
        assert_eq!(first.t, 0.0);
        assert_relative_eq!(first.attitude_error, 0.98225, epsilon = 1e-9);
        assert_relative_eq!(first.position_error, 50f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn episodes_are_deterministic() {
        let scenario = ScenarioConfig::reference(11);
        let opts = constant_gain_options(5.0);
        let a = run_episode(&scenario, &opts).unwrap();
        let b = run_episode(&scenario, &opts).unwrap();
        assert_eq!(a.measurement_digest, b.measurement_digest);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn candidates_share_the_measurement_stream() {
        let scenario = ScenarioConfig::reference(11);
        let fuzzy = build_model(&FlcParams::midpoint()).unwrap();
        let a = run_episode(&scenario, &constant_gain_options(0.0)).unwrap();
        let b = run_episode(&scenario, &EpisodeOptions::new(GainMode::Fuzzy(fuzzy))).unwrap();
        assert_eq!(a.measurement_digest, b.measurement_digest);
    }

    #[test]
    fn unobservable_scenario_is_rejected_before_the_loop() {
        let mut scenario = ScenarioConfig::reference(0);
        scenario.landmarks.clear();
        let err = run_episode(&scenario, &constant_gain_options(0.0)).unwrap_err();
        assert!(matches!(err, Error::Unobservable(_)));
    }

    fn synthetic_series(attitude: f64, position: f64) -> EpisodeSeries {
        let dt = 0.01;
        let records = (0..=1500)
            .map(|i| EpisodeRecord {
                t: i as f64 * dt,
                true_euler: [0.0; 3],
                est_euler: [0.0; 3],
                true_position: Vector3::zeros(),
                est_position: Vector3::zeros(),
                attitude_error: attitude,
                position_error: position,
                e: 0.0,
                de: 0.0,
                k_op: 0.0,
                gain: 1.0,
            })
            .collect();
        EpisodeSeries {
            dt,
            records,
            measurement_digest: 0,
        }
    }

    #[test]
    fn cost_of_constant_error_series() {
        // 101 transient samples and 1001 steady samples of 0.1 + 0.2 * 1.0
        let series = synthetic_series(0.1, 1.0);
        let cost = episode_cost(&series, &CostWeights::default()).unwrap();
        assert_relative_eq!(cost, 0.3 * 101.0 * 0.3 + 1001.0 * 0.3, epsilon = 1e-9);
        assert_relative_eq!(cost, 309.39, epsilon = 1e-9);
    }

    #[test]
    fn zero_error_series_costs_nothing() {
        let series = synthetic_series(0.0, 0.0);
        assert_eq!(episode_cost(&series, &CostWeights::default()).unwrap(), 0.0);
    }

    #[test]
    fn position_term_scales_linearly() {
        let base = episode_cost(&synthetic_series(0.0, 1.0), &CostWeights::default()).unwrap();
        let doubled = episode_cost(&synthetic_series(0.0, 2.0), &CostWeights::default()).unwrap();
        assert_relative_eq!(doubled, 2.0 * base, epsilon = 1e-12);
        // attitude term unaffected
        let mixed = episode_cost(&synthetic_series(0.1, 2.0), &CostWeights::default()).unwrap();
        let attitude_only =
            episode_cost(&synthetic_series(0.1, 0.0), &CostWeights::default()).unwrap();
        assert_relative_eq!(mixed, attitude_only + doubled, epsilon = 1e-9);
    }

    #[test]
    fn short_series_is_rejected() {
        let mut series = synthetic_series(0.1, 0.0);
        series.records.truncate(500); // ends at t = 4.99
        assert!(matches!(
            episode_cost(&series, &CostWeights::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn micro_tune_returns_valid_params_and_trace() {
        let mut scenario = ScenarioConfig::reference(17);
        scenario.t_final = 14.0; // shortest span covering the cost windows
        let mut opts = TuneOptions::new(GsaConfig::new(4, 3, 23));
        opts.initial_estimate = reference_initial_estimate();
        let (params, result) = tune_flc(&scenario, &opts).unwrap();
        assert!(params.bound_violation().is_none());
        assert_eq!(result.cost_trace.len(), 3);
        assert!(result.cost_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(result.best_cost.is_finite());
        // the reported best must reproduce bit-for-bit
        let cost = candidate_cost(&scenario, &opts, &params).unwrap();
        assert_eq!(cost, result.best_cost);
    }

    #[test]
    fn degenerate_single_iteration_tune_picks_best_initial_candidate() {
        let mut scenario = ScenarioConfig::reference(17);
        scenario.t_final = 14.0;
        let mut opts = TuneOptions::new(GsaConfig::new(5, 1, 29));
        opts.initial_estimate = reference_initial_estimate();
        let (_, result) = tune_flc(&scenario, &opts).unwrap();
        assert_eq!(result.cost_trace.len(), 1);
        assert_eq!(result.cost_trace[0], result.best_cost);
    }
}
