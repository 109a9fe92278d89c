//! The nonlinear SE(3) filter: a wedge-product correction term built from
//! landmark and vector measurements, injected into the pose propagation
//! through a tunable gain `K = 1 + k_op`, plus a constant-bias estimator.
//!
//! All quantities follow the estimate-times-inverse error convention of
//! [`crate::se3::pose_error`]; at an exact estimate every correction term
//! annihilates and the filter dead-reckons the measured velocity.

use nalgebra::{Vector3, Vector6};

use crate::fuzzy::FlcModel;
use crate::se3::{attitude_error_norm, cross6, pose_error, se3_exp, Pose, Twist};
use crate::sim::{MeasurementFrame, RENORMALIZE_EVERY};
use crate::{Error, Result};

/// Filter state: the pose estimate and the velocity-bias estimate.
#[derive(Clone, Debug)]
pub struct FilterState {
    pub pose: Pose,
    pub bias: Twist,
    steps: u64,
}

impl FilterState {
    pub fn new(pose: Pose, bias: Twist) -> Self {
        FilterState {
            pose,
            bias,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// Where the gain offset `k_op` comes from.
#[derive(Clone, Debug)]
pub enum GainMode {
    /// Fixed nonnegative `k_op`, i.e. the classic constant-gain design.
    Constant(f64),
    /// Recomputed every step from the error signals by the fuzzy controller.
    Fuzzy(FlcModel),
}

impl GainMode {
    pub fn k_op(&self, e: f64, de: f64) -> f64 {
        match self {
            GainMode::Constant(k_op) => *k_op,
            GainMode::Fuzzy(model) => model.infer_kop(e, de),
        }
    }
}

/// Gains and weights of the filter.
#[derive(Clone, Debug)]
pub struct FilterGains {
    /// Bias adaptation rate; positive.
    pub gamma: f64,
    /// Per-landmark correction weights; observations beyond the list weigh 1.
    pub landmark_weights: Vec<f64>,
    /// Per-vector correction weights; observations beyond the list weigh 1.
    pub vector_weights: Vec<f64>,
    /// Feed the correction with normalized vector pairs instead of raw ones.
    pub use_normalized_vectors: bool,
    /// Componentwise projection bound on the bias estimate. Velocity biases
    /// are physically small; without the projection a large-gain transient
    /// can park the estimate far outside the plausible range and the filter
    /// dead-reckons itself back into a storm before it is washed out.
    pub bias_limit: f64,
    pub gain: GainMode,
}

/// Default componentwise bound on the bias estimate.
pub const DEFAULT_BIAS_LIMIT: f64 = 2.0;

impl FilterGains {
    pub fn new(gain: GainMode) -> Self {
        FilterGains {
            gamma: 1.0,
            landmark_weights: Vec::new(),
            vector_weights: Vec::new(),
            use_normalized_vectors: false,
            bias_limit: DEFAULT_BIAS_LIMIT,
            gain,
        }
    }

    fn landmark_weight(&self, i: usize) -> f64 {
        self.landmark_weights.get(i).copied().unwrap_or(1.0)
    }

    fn vector_weight(&self, i: usize) -> f64 {
        self.vector_weights.get(i).copied().unwrap_or(1.0)
    }
}

/// Error signals driving the fuzzy gain, both clamped to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorSignals {
    pub e: f64,
    pub de: f64,
}

/// The correction 6-vector `U`:
/// `1/2 sum s_i^L (T_hat [y_i; 1]) ^ [p_i; 1] + 1/2 sum s_i^R (T_hat [v_i; 0]) ^ [v_i^I; 0]`.
pub fn correction_term(
    frame: &MeasurementFrame,
    state: &FilterState,
    gains: &FilterGains,
) -> Vector6<f64> {
    let mut u = Vector6::zeros();
    for (i, lm) in frame.landmarks.iter().enumerate() {
        let mapped = state.pose.transform_point(&lm.body);
        u += gains.landmark_weight(i) * cross6(&mapped, 1.0, &lm.inertial, 1.0);
    }
    for (i, pair) in frame.vectors.iter().enumerate() {
        let (body, inertial) = if gains.use_normalized_vectors {
            (&pair.body_unit, &pair.inertial_unit)
        } else {
            (&pair.body, &pair.inertial)
        };
        let mapped = state.pose.transform_direction(body);
        u += gains.vector_weight(i) * cross6(&mapped, 0.0, inertial, 0.0);
    }
    u * 0.5
}

/// The innovation `W = [R_hat, 0; [P_hat]x R_hat, R_hat]^T U`, written with
/// cross products instead of materializing the 6x6 block matrix.
pub fn innovation(u: &Vector6<f64>, state: &FilterState) -> Vector6<f64> {
    let rt = state.pose.rotation.transposed();
    let u1 = Vector3::new(u[0], u[1], u[2]);
    let u2 = Vector3::new(u[3], u[4], u[5]);
    let w1 = rt * (u1 - state.pose.position.cross(&u2));
    let w2 = rt * u2;
    Vector6::new(w1.x, w1.y, w1.z, w2.x, w2.y, w2.z)
}

/// Bias-estimate rate `-gamma [R_hat^T, 0; -R_hat^T [P_hat]x, R_hat^T] U`.
pub fn bias_rate(u: &Vector6<f64>, state: &FilterState, gamma: f64) -> Vector6<f64> {
    let rt = state.pose.rotation.transposed();
    let u1 = Vector3::new(u[0], u[1], u[2]);
    let u2 = Vector3::new(u[3], u[4], u[5]);
    let b1 = -gamma * (rt * u1);
    let b2 = -gamma * (rt * (u2 - state.pose.position.cross(&u1)));
    Vector6::new(b1.x, b1.y, b1.z, b2.x, b2.y, b2.z)
}

/// One discrete filter step:
/// pose multiplies by `exp(wedge(Y_m - b_hat + K W) dt)`, the bias estimate
/// integrates its rate by explicit Euler and is projected onto
/// `[-bias_limit, bias_limit]` per component, and the rotation is
/// reprojected onto SO(3) every [`RENORMALIZE_EVERY`] steps.
pub fn filter_step(
    state: &FilterState,
    frame: &MeasurementFrame,
    gains: &FilterGains,
    signals: ErrorSignals,
    dt: f64,
) -> FilterState {
    let u = correction_term(frame, state, gains);
    let w = innovation(&u, state);
    let gain = 1.0 + gains.gain.k_op(signals.e, signals.de).max(0.0);

    let twist = Twist::from_vector(
        frame.velocity.as_vector() - state.bias.as_vector() + gain * w,
    );
    let mut pose = state.pose * se3_exp(&twist, dt);
    let steps = state.steps + 1;
    if steps % RENORMALIZE_EVERY == 0 {
        pose.renormalize();
    }
    let bias = Twist::from_vector(
        (state.bias.as_vector() + dt * bias_rate(&u, state, gains.gamma))
            .map(|b| b.clamp(-gains.bias_limit, gains.bias_limit)),
    );
    FilterState { pose, bias, steps }
}

/// Which error signal feeds the fuzzy controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorMode {
    /// Innovation-based error computed from the measurements — the signal a
    /// deployed filter can actually see.
    Measurable,
    /// True pose error, available in simulation studies only.
    Oracle,
}

/// Innovation-based error: mean vector misalignment
/// `1/2 (1 - (R_hat^T u_i^I) . u_i^B)` plus `0.2x` the mean landmark residual
/// norm `|R_hat^T (p_i - P_hat) - y_i|`. Unclamped.
pub fn measurable_error_raw(frame: &MeasurementFrame, state: &FilterState) -> f64 {
    let rt = state.pose.rotation.transposed();
    let mut e = 0.0;
    if !frame.vectors.is_empty() {
        let sum: f64 = frame
            .vectors
            .iter()
            .map(|pair| 0.5 * (1.0 - (rt * pair.inertial_unit).dot(&pair.body_unit)))
            .sum();
        e += sum / frame.vectors.len() as f64;
    }
    if !frame.landmarks.is_empty() {
        let sum: f64 = frame
            .landmarks
            .iter()
            .map(|lm| ((rt * (lm.inertial - state.pose.position)) - lm.body).norm())
            .sum();
        e += 0.2 * sum / frame.landmarks.len() as f64;
    }
    e
}

/// True pose error `|R_tilde|_I + 0.2 |P_tilde|`. Unclamped.
pub fn oracle_error_raw(truth: &Pose, state: &FilterState) -> f64 {
    let (r_tilde, p_tilde) = pose_error(truth, &state.pose);
    attitude_error_norm(&r_tilde) + 0.2 * p_tilde.norm()
}

/// Stateful producer of the `(e, de)` pair: clamps the raw error to `[0, 1]`
/// and differences it against the previous step at scale `dt * s_delta`.
/// The first update reports `de = 0`.
#[derive(Clone, Debug)]
pub struct ErrorTracker {
    mode: ErrorMode,
    s_delta: f64,
    previous: Option<f64>,
}

impl ErrorTracker {
    pub fn new(mode: ErrorMode, s_delta: f64) -> Self {
        ErrorTracker {
            mode,
            s_delta,
            previous: None,
        }
    }

    pub fn update(
        &mut self,
        frame: &MeasurementFrame,
        state: &FilterState,
        truth: Option<&Pose>,
        dt: f64,
    ) -> Result<ErrorSignals> {
        let raw = match self.mode {
            ErrorMode::Measurable => measurable_error_raw(frame, state),
            ErrorMode::Oracle => {
                let truth = truth.ok_or_else(|| {
                    Error::Validation("oracle error mode needs the true pose".into())
                })?;
                oracle_error_raw(truth, state)
            }
        };
        let e = raw.min(1.0).max(0.0);
        let de = match self.previous {
            None => 0.0,
            Some(prev) => ((e - prev).abs() / (dt * self.s_delta)).min(1.0),
        };
        self.previous = Some(e);
        Ok(ErrorSignals { e, de })
    }
}
