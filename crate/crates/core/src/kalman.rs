//! Discrete linear Kalman filter over the state `(a, b, u, v)`: image position
//! in pixels and velocity in pixels per frame.
//!
//! The filter is value-typed. [`time_update`] turns an a posteriori estimate
//! into the a priori estimate for the next frame, [`measurement_update`]
//! folds a measured center back in. Both return fresh states and leave their
//! inputs untouched.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};

use crate::error::KalmanError;
use crate::geometry::Point2;

/// Initial position variance (px²) for a freshly initialized track.
pub const INIT_POSITION_VARIANCE: f64 = 10.0;
/// Initial velocity variance ((px/frame)²); large so the first measurements set the velocity.
pub const INIT_VELOCITY_VARIANCE: f64 = 100.0;

pub const DEFAULT_Q_POS: f64 = 0.01;
pub const DEFAULT_Q_VEL: f64 = 0.01;
pub const DEFAULT_R_POS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    /// `(a, b, u, v)`.
    pub x: Vector4<f64>,
    /// Estimate error covariance.
    pub p: Matrix4<f64>,
}

impl KalmanState {
    pub fn new(x: Vector4<f64>, p: Matrix4<f64>) -> Self {
        Self { x, p }
    }

    /// Stationary state at `center` with the default initial covariance.
    pub fn at_rest(center: Point2) -> Self {
        Self {
            x: Vector4::new(center.x, center.y, 0.0, 0.0),
            p: Matrix4::from_diagonal(&Vector4::new(
                INIT_POSITION_VARIANCE,
                INIT_POSITION_VARIANCE,
                INIT_VELOCITY_VARIANCE,
                INIT_VELOCITY_VARIANCE,
            )),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x[0], self.x[1])
    }

    pub fn velocity(&self) -> Point2 {
        Point2::new(self.x[2], self.x[3])
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }
}

/// A measured object center, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement(pub Vector2<f64>);

impl Measurement {
    pub fn new(a: f64, b: f64) -> Self {
        Self(Vector2::new(a, b))
    }
}

impl From<Point2> for Measurement {
    fn from(p: Point2) -> Self {
        Self::new(p.x, p.y)
    }
}

/// Process and measurement model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanParams {
    /// State transition per frame (A).
    pub transition: Matrix4<f64>,
    /// Control input matrix (B).
    pub control: Matrix4x2<f64>,
    /// Control input applied on every time update. Zero for free flight.
    pub control_input: Vector2<f64>,
    /// Observation matrix (H).
    pub observation: Matrix2x4<f64>,
    /// Process noise covariance (Q).
    pub process_noise: Matrix4<f64>,
    /// Measurement noise covariance (R).
    pub measurement_noise: Matrix2<f64>,
}

impl Default for KalmanParams {
    fn default() -> Self {
        default_cv_params(DEFAULT_Q_POS, DEFAULT_Q_VEL, DEFAULT_R_POS)
            .expect("default variances are valid")
    }
}

/// Constant-velocity model with a unit frame step and position-only observation.
pub fn default_cv_params(q_pos: f64, q_vel: f64, r_pos: f64) -> Result<KalmanParams, KalmanError> {
    for (name, value) in [("q_pos", q_pos), ("q_vel", q_vel), ("r_pos", r_pos)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(KalmanError::InvalidVariance { name, value });
        }
    }
    if r_pos <= 0.0 {
        return Err(KalmanError::NonPositiveMeasurementVariance(r_pos));
    }
    #[rustfmt::skip]
    let transition = Matrix4::new(
        1.0, 0.0, 1.0, 0.0,
        0.0, 1.0, 0.0, 1.0,
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    );
    #[rustfmt::skip]
    let observation = Matrix2x4::new(
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
    );
    Ok(KalmanParams {
        transition,
        control: Matrix4x2::zeros(),
        control_input: Vector2::zeros(),
        observation,
        process_noise: Matrix4::from_diagonal(&Vector4::new(q_pos, q_pos, q_vel, q_vel)),
        measurement_noise: Matrix2::from_diagonal(&Vector2::new(r_pos, r_pos)),
    })
}

fn symmetrize(p: Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

/// Propagates an a posteriori estimate one frame ahead.
pub fn time_update(state: &KalmanState, params: &KalmanParams) -> KalmanState {
    let a = &params.transition;
    let x = a * state.x + params.control * params.control_input;
    let p = a * state.p * a.transpose() + params.process_noise;
    KalmanState { x, p: symmetrize(p) }
}

/// `H P Hᵀ + R`.
pub fn innovation_covariance(prior: &KalmanState, params: &KalmanParams) -> Matrix2<f64> {
    let h = &params.observation;
    h * prior.p * h.transpose() + params.measurement_noise
}

fn invert_2x2(s: &Matrix2<f64>) -> Result<Matrix2<f64>, KalmanError> {
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    let scale = s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !det.is_finite() || det.abs() <= f64::EPSILON * scale * scale || det == 0.0 {
        return Err(KalmanError::SingularInnovation { det });
    }
    Ok(Matrix2::new(s[(1, 1)], -s[(0, 1)], -s[(1, 0)], s[(0, 0)]) / det)
}

/// Optimal gain `K = P⁻Hᵀ(HP⁻Hᵀ + R)⁻¹`.
pub fn kalman_gain(prior: &KalmanState, params: &KalmanParams) -> Result<Matrix4x2<f64>, KalmanError> {
    let s_inv = invert_2x2(&innovation_covariance(prior, params))?;
    Ok(prior.p * params.observation.transpose() * s_inv)
}

/// Measurement residual `z − H x⁻`.
pub fn innovation(prior: &KalmanState, z: &Measurement, params: &KalmanParams) -> Vector2<f64> {
    z.0 - params.observation * prior.x
}

/// Corrects an a priori estimate with a measurement.
pub fn measurement_update(
    prior: &KalmanState,
    z: &Measurement,
    params: &KalmanParams,
) -> Result<KalmanState, KalmanError> {
    let k = kalman_gain(prior, params)?;
    let x = prior.x + k * innovation(prior, z, params);
    let p = (Matrix4::identity() - k * params.observation) * prior.p;
    Ok(KalmanState { x, p: symmetrize(p) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(q: f64, r: f64) -> KalmanParams {
        default_cv_params(q, q, r).unwrap()
    }

    #[test]
    fn transition_moves_by_velocity() {
        let p = params(0.0, 1.0);
        let x = p.transition * Vector4::new(5.0, 7.0, 1.0, -2.0);
        assert_eq!((x[0], x[1]), (6.0, 5.0));
        let still = Vector4::new(5.0, 5.0, 0.0, 0.0);
        assert_eq!(p.transition * still, still);
    }

    #[test]
    fn observation_selects_position() {
        let p = params(0.0, 1.0);
        let z = p.observation * Vector4::new(3.0, -4.0, 9.0, 11.0);
        assert_eq!(z, Vector2::new(3.0, -4.0));
    }

    #[test]
    fn rejects_bad_variances() {
        assert!(matches!(
            default_cv_params(-1.0, 0.0, 1.0),
            Err(KalmanError::InvalidVariance { name: "q_pos", .. })
        ));
        assert!(default_cv_params(0.0, f64::NAN, 1.0).is_err());
        assert!(matches!(
            default_cv_params(0.0, 0.0, 0.0),
            Err(KalmanError::NonPositiveMeasurementVariance(_))
        ));
    }

    #[test]
    fn time_update_hand_example() {
        let s = KalmanState::new(Vector4::new(5.0, 7.0, 1.0, -2.0), Matrix4::identity());
        let out = time_update(&s, &params(0.0, 1.0));
        assert_eq!(out.x, Vector4::new(6.0, 5.0, 1.0, -2.0));
        assert_eq!(out.p.diagonal(), Vector4::new(2.0, 2.0, 1.0, 1.0));
        assert_eq!(out.p[(0, 2)], 1.0);
        assert_eq!(out.p[(1, 3)], 1.0);
        assert_eq!(out.p[(0, 1)], 0.0);
    }

    #[test]
    fn zero_velocity_zero_uncertainty_is_fixed() {
        let s = KalmanState::new(Vector4::new(5.0, 5.0, 0.0, 0.0), Matrix4::zeros());
        assert_eq!(time_update(&s, &params(0.0, 1.0)), s);
    }

    #[test]
    fn process_noise_adds_to_trace() {
        let s = KalmanState::at_rest(Point2::new(1.0, 2.0));
        let q = 0.25;
        let p = params(q, 1.0);
        let noiseless = time_update(&s, &params(0.0, 1.0));
        let noisy = time_update(&s, &p);
        assert!((noisy.p.trace() - (noiseless.p.trace() + 4.0 * q)).abs() < 1e-12);
    }

    #[test]
    fn measurement_update_hand_example() {
        let prior = KalmanState::new(Vector4::zeros(), Matrix4::identity());
        let post = measurement_update(&prior, &Measurement::new(2.0, 4.0), &params(0.0, 1.0)).unwrap();
        assert!((post.x - Vector4::new(1.0, 2.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((post.p[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((post.p[(1, 1)] - 0.5).abs() < 1e-12);
        assert_eq!(post.p[(2, 2)], 1.0);
    }

    #[test]
    fn measurement_limits() {
        let prior = KalmanState::new(Vector4::new(3.0, -1.0, 0.5, 0.5), Matrix4::identity() * 4.0);
        let z = Measurement::new(10.0, 20.0);

        let sharp = measurement_update(&prior, &z, &params(0.0, 1e-9)).unwrap();
        assert!((sharp.x[0] - 10.0).abs() < 1e-6);
        assert!((sharp.x[1] - 20.0).abs() < 1e-6);

        let blunt = measurement_update(&prior, &z, &params(0.0, 1e12)).unwrap();
        for i in 0..4 {
            let rel = (blunt.x[i] - prior.x[i]).abs() / prior.x[i].abs().max(1.0);
            assert!(rel < 1e-6, "component {i}: {} vs {}", blunt.x[i], prior.x[i]);
        }
        assert!(((blunt.p - prior.p).norm() / prior.p.norm()) < 1e-6);
    }

    #[test]
    fn singular_innovation_is_reported() {
        let prior = KalmanState::new(Vector4::zeros(), Matrix4::zeros());
        let mut p = params(0.0, 1.0);
        p.measurement_noise = Matrix2::zeros();
        assert!(matches!(
            measurement_update(&prior, &Measurement::new(1.0, 1.0), &p),
            Err(KalmanError::SingularInnovation { .. })
        ));
    }

    #[test]
    fn control_input_enters_prediction() {
        let mut p = params(0.0, 1.0);
        p.control = Matrix4x2::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0);
        p.control_input = Vector2::new(0.5, -0.5);
        let s = KalmanState::new(Vector4::new(0.0, 0.0, 1.0, 1.0), Matrix4::identity());
        let out = time_update(&s, &p);
        assert_eq!(out.x, Vector4::new(1.0, 1.0, 1.5, 0.5));
    }

    #[test]
    fn updates_are_deterministic() {
        let prior = time_update(&KalmanState::at_rest(Point2::new(100.3, 7.1)), &KalmanParams::default());
        let z = Measurement::new(101.7, 5.9);
        let a = measurement_update(&prior, &z, &KalmanParams::default()).unwrap();
        let b = measurement_update(&prior, &z, &KalmanParams::default()).unwrap();
        assert_eq!(a.x.as_slice(), b.x.as_slice());
        assert_eq!(a.p.as_slice(), b.p.as_slice());
    }
}
