//! Deterministic rigid-body scenario: ground-truth trajectory plus corrupted
//! velocity, vector, and landmark measurements, all a pure function of
//! `(ScenarioConfig, seed)`.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::se3::{normalize3, se3_exp, Pose, RotationMatrix, Twist};
use crate::{Error, Result};

/// Steps between nearest-SO(3) reprojections on long integration runs.
pub const RENORMALIZE_EVERY: u64 = 1000;

/// One vector observation channel: a known inertial direction measured in the
/// body frame with constant bias and per-axis Gaussian noise.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSpec {
    pub inertial: Vector3<f64>,
    pub bias: Vector3<f64>,
    pub sigma: f64,
}

/// One landmark channel: a known inertial point measured in the body frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSpec {
    pub inertial: Vector3<f64>,
    pub bias: Vector3<f64>,
    pub sigma: f64,
}

/// Full description of a simulated episode.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Constant velocity-measurement bias `[b_omega; b_v]`.
    pub velocity_bias: Twist,
    pub sigma_omega: f64,
    pub sigma_v: f64,
    pub vectors: Vec<VectorSpec>,
    /// Synthesize a third vector channel as the cross product of the first
    /// two *measured* body vectors (its inertial reference is the cross
    /// product of the first two inertial directions).
    pub derive_third_vector: bool,
    pub landmarks: Vec<LandmarkSpec>,
    pub seed: u64,
}

impl ScenarioConfig {
    /// The benchmark scenario: sinusoidal angular/translational velocity, two
    /// biased vector channels plus a derived third, and one landmark, all
    /// with the standard noise levels.
    pub fn reference(seed: u64) -> Self {
        ScenarioConfig {
            dt: 0.01,
            t_final: 15.0,
            velocity_bias: Twist::new(
                Vector3::new(0.1, -0.1, 0.1),
                Vector3::new(0.2, 0.5, 0.1),
            ),
            sigma_omega: 0.2,
            sigma_v: 0.1,
            vectors: vec![
                VectorSpec {
                    inertial: Vector3::new(1.0, -1.0, 1.0) / 3f64.sqrt(),
                    bias: Vector3::new(0.1, -0.1, 0.1),
                    sigma: 0.1,
                },
                VectorSpec {
                    inertial: Vector3::new(0.0, 0.0, 1.0),
                    bias: Vector3::new(0.0, 0.0, 0.1),
                    sigma: 0.1,
                },
            ],
            derive_third_vector: true,
            landmarks: vec![LandmarkSpec {
                inertial: Vector3::new(0.5, 2f64.sqrt(), 1.0),
                bias: Vector3::zeros(),
                sigma: 0.1,
            }],
            seed,
        }
    }

    /// Same geometry with every bias and noise level zeroed.
    pub fn reference_noise_free(seed: u64) -> Self {
        let mut cfg = Self::reference(seed);
        cfg.velocity_bias = Twist::zero();
        cfg.sigma_omega = 0.0;
        cfg.sigma_v = 0.0;
        for v in &mut cfg.vectors {
            v.bias = Vector3::zeros();
            v.sigma = 0.0;
        }
        for l in &mut cfg.landmarks {
            l.bias = Vector3::zeros();
            l.sigma = 0.0;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Validation(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_final < self.dt {
            return Err(Error::Validation(format!(
                "t_final ({}) must be at least dt ({})",
                self.t_final, self.dt
            )));
        }
        if self.sigma_omega < 0.0 || self.sigma_v < 0.0 {
            return Err(Error::Validation("velocity noise sigma must be >= 0".into()));
        }
        if self.vectors.iter().any(|v| v.sigma < 0.0)
            || self.landmarks.iter().any(|l| l.sigma < 0.0)
        {
            return Err(Error::Validation("observation sigma must be >= 0".into()));
        }
        if self.derive_third_vector && self.vectors.len() < 2 {
            return Err(Error::Validation(
                "derive_third_vector needs at least two vector channels".into(),
            ));
        }
        Ok(())
    }

    /// Number of integration steps; the episode records `steps() + 1` samples.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Observability of the configured observation set (noise-free probe at
    /// the identity pose).
    pub fn observability(&self) -> ObservabilityCase {
        let mut probe = self.clone();
        probe.velocity_bias = Twist::zero();
        probe.sigma_omega = 0.0;
        probe.sigma_v = 0.0;
        for v in &mut probe.vectors {
            v.bias = Vector3::zeros();
            v.sigma = 0.0;
        }
        for l in &mut probe.landmarks {
            l.bias = Vector3::zeros();
            l.sigma = 0.0;
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        use rand::SeedableRng;
        match gen_measurements(&TrueState::initial(), &probe, &mut rng) {
            Ok(frame) => check_observability(&frame),
            Err(_) => ObservabilityCase::Unobservable,
        }
    }
}

/// Ground-truth state at time `t`.
#[derive(Clone, Debug)]
pub struct TrueState {
    pub pose: Pose,
    pub t: f64,
    steps: u64,
}

impl TrueState {
    /// Identity pose at `t = 0`.
    pub fn initial() -> Self {
        TrueState {
            pose: Pose::identity(),
            t: 0.0,
            steps: 0,
        }
    }
}

/// The benchmark group velocity: bounded sinusoids in every axis.
pub fn true_twist(t: f64) -> Twist {
    Twist::new(
        Vector3::new(
            (0.7 * t).sin(),
            0.7 * (0.5 * t + std::f64::consts::PI).sin(),
            0.5 * (0.3 * t + std::f64::consts::FRAC_PI_3).sin(),
        ),
        0.3 * Vector3::new((0.6 * t).sin(), (0.4 * t).sin(), (0.1 * t).sin()),
    )
}

/// Advance the truth one step: `pose <- pose * exp(wedge(twist) * dt)` with
/// the twist sampled at the interval start, reprojecting onto SO(3) every
/// [`RENORMALIZE_EVERY`] steps.
pub fn step_true_pose(state: &TrueState, dt: f64) -> TrueState {
    step_pose_with(state, true_twist(state.t), dt)
}

/// Same integrator with an explicit twist (tests override the trajectory).
pub fn step_pose_with(state: &TrueState, twist: Twist, dt: f64) -> TrueState {
    let mut pose = state.pose * se3_exp(&twist, dt);
    let steps = state.steps + 1;
    if steps % RENORMALIZE_EVERY == 0 {
        pose.renormalize();
    }
    TrueState {
        pose,
        t: state.t + dt,
        steps,
    }
}

/// One measured vector channel: the raw body/inertial pair and its
/// normalized counterpart.
#[derive(Clone, Debug)]
pub struct VectorPairMeasurement {
    pub body: Vector3<f64>,
    pub inertial: Vector3<f64>,
    pub body_unit: Vector3<f64>,
    pub inertial_unit: Vector3<f64>,
}

/// One landmark channel: measured body-frame offset and the known inertial
/// position it refers to.
#[derive(Clone, Debug)]
pub struct LandmarkMeasurement {
    pub body: Vector3<f64>,
    pub inertial: Vector3<f64>,
}

/// Everything the filter sees at one sample instant.
#[derive(Clone, Debug)]
pub struct MeasurementFrame {
    pub t: f64,
    /// Corrupted group velocity `Y_m = Y + b + noise`.
    pub velocity: Twist,
    pub vectors: Vec<VectorPairMeasurement>,
    pub landmarks: Vec<LandmarkMeasurement>,
    /// Vector channels dropped because a measured vector was degenerate.
    pub dropped_vectors: usize,
}

fn noise3(rng: &mut impl Rng, sigma: f64) -> Vector3<f64> {
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    Vector3::new(draw(), draw(), draw()) * sigma
}

/// Generate the corrupted measurements of one sample instant.
///
/// Draw order is fixed (angular noise, translational noise, vector channels
/// in order, then landmarks in order) so a frame stream is a pure function of
/// the configuration and the rng state.
pub fn gen_measurements(
    state: &TrueState,
    cfg: &ScenarioConfig,
    rng: &mut impl Rng,
) -> Result<MeasurementFrame> {
    let rotation_t = state.pose.rotation.transposed();
    let truth_twist = true_twist(state.t);
    let velocity = Twist::new(
        truth_twist.omega + cfg.velocity_bias.omega + noise3(rng, cfg.sigma_omega),
        truth_twist.v + cfg.velocity_bias.v + noise3(rng, cfg.sigma_v),
    );

    let mut raw_pairs: Vec<(Vector3<f64>, Vector3<f64>)> = Vec::new();
    for spec in &cfg.vectors {
        let body = rotation_t * spec.inertial + spec.bias + noise3(rng, spec.sigma);
        raw_pairs.push((body, spec.inertial));
    }
    if cfg.derive_third_vector && raw_pairs.len() >= 2 {
        let body = raw_pairs[0].0.cross(&raw_pairs[1].0);
        let inertial = raw_pairs[0].1.cross(&raw_pairs[1].1);
        raw_pairs.push((body, inertial));
    }

    let mut vectors = Vec::with_capacity(raw_pairs.len());
    let mut dropped_vectors = 0;
    for (body, inertial) in raw_pairs {
        match (normalize3(&body), normalize3(&inertial)) {
            (Ok(body_unit), Ok(inertial_unit)) => vectors.push(VectorPairMeasurement {
                body,
                inertial,
                body_unit,
                inertial_unit,
            }),
            _ => dropped_vectors += 1,
        }
    }

    let landmarks = cfg
        .landmarks
        .iter()
        .map(|spec| LandmarkMeasurement {
            body: rotation_t * (spec.inertial - state.pose.position)
                + spec.bias
                + noise3(rng, spec.sigma),
            inertial: spec.inertial,
        })
        .collect();

    Ok(MeasurementFrame {
        t: state.t,
        velocity,
        vectors,
        landmarks,
        dropped_vectors,
    })
}

/// Which observability case a frame satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservabilityCase {
    /// At least two non-collinear vectors and one landmark.
    VectorsAndLandmark,
    /// At least one vector and two landmarks.
    VectorAndLandmarks,
    /// At least three landmarks.
    LandmarksOnly,
    Unobservable,
}

impl ObservabilityCase {
    pub fn case_number(&self) -> Option<u8> {
        match self {
            ObservabilityCase::VectorsAndLandmark => Some(1),
            ObservabilityCase::VectorAndLandmarks => Some(2),
            ObservabilityCase::LandmarksOnly => Some(3),
            ObservabilityCase::Unobservable => None,
        }
    }

    pub fn is_observable(&self) -> bool {
        *self != ObservabilityCase::Unobservable
    }
}

/// First matching observability case for a frame. Collinearity is tested on
/// the normalized inertial references with tolerance `|dot| < 1 - 1e-6`.
pub fn check_observability(frame: &MeasurementFrame) -> ObservabilityCase {
    let units: Vec<_> = frame.vectors.iter().map(|v| v.inertial_unit).collect();
    let mut non_collinear_pair = false;
    for i in 0..units.len() {
        for j in i + 1..units.len() {
            if units[i].dot(&units[j]).abs() < 1.0 - 1e-6 {
                non_collinear_pair = true;
            }
        }
    }
    let landmarks = frame.landmarks.len();
    if units.len() >= 2 && non_collinear_pair && landmarks >= 1 {
        ObservabilityCase::VectorsAndLandmark
    } else if !units.is_empty() && landmarks >= 2 {
        ObservabilityCase::VectorAndLandmarks
    } else if landmarks >= 3 {
        ObservabilityCase::LandmarksOnly
    } else {
        ObservabilityCase::Unobservable
    }
}

/// Initial estimate with the large benchmark error: a rotation printed to
/// three decimals (kept verbatim, hence only approximately orthonormal) and
/// a position offset of `(4, -3, 5)`.
pub fn reference_initial_estimate() -> Pose {
    #[rustfmt::skip]
    let r = RotationMatrix::new_unchecked(nalgebra::Matrix3::new(
        -0.829, 0.293,  0.343,
         0.399, 0.157,  0.903,
         0.210, 0.943, -0.257,
    ));
    Pose::new(r, Vector3::new(4.0, -3.0, 5.0))
}
