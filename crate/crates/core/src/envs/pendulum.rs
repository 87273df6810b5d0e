use std::f64::consts::PI;

use super::{default_display, reject_unknown_kwargs, render_to};
use crate::env::{
    check_action, Env, EnvError, EpisodeRng, Info, Metadata, RenderMode, ResetResult, StepResult,
};
use crate::registry::{Kwargs, RegistryError};
use crate::render::{Frame, FrameSink, HumanDisplay, RenderOutput};
use crate::spaces::{BoxSpace, DType, Space, Value};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PendulumParams {
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub dt: f64,
    pub max_speed: f64,
    pub max_torque: f64,
}

impl PendulumParams {
    pub const V1: PendulumParams = PendulumParams {
        gravity: 10.0,
        mass: 1.0,
        length: 1.0,
        dt: 0.05,
        max_speed: 8.0,
        max_torque: 2.0,
    };
}

/// `theta` is kept wrapped to `(-pi, pi]`; zero is upright.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PendulumState {
    pub theta: f64,
    pub theta_dot: f64,
}

impl PendulumState {
    pub fn observation(&self) -> Vec<f64> {
        let (sin, cos) = self.theta.sin_cos();
        vec![cos, sin, self.theta_dot]
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub(crate) fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// One step of the pendulum. The torque is clipped to the allowed range;
/// the reward is computed from the state before the step.
pub fn pendulum_transition(
    state: &PendulumState,
    torque: f64,
    p: &PendulumParams,
) -> (PendulumState, f64) {
    let u = torque.clamp(-p.max_torque, p.max_torque);
    let th = wrap_angle(state.theta);
    let cost = th * th + 0.1 * state.theta_dot * state.theta_dot + 0.001 * u * u;

    let acc = 3.0 * p.gravity / (2.0 * p.length) * state.theta.sin()
        + 3.0 / (p.mass * p.length * p.length) * u;
    let theta_dot = (state.theta_dot + acc * p.dt).clamp(-p.max_speed, p.max_speed);
    let theta = wrap_angle(state.theta + theta_dot * p.dt);
    (PendulumState { theta, theta_dot }, -cost)
}

pub const PENDULUM_SCREEN_SIZE: usize = 500;

/// Swing a pendulum upright with bounded torque. Never terminates.
pub struct Pendulum {
    params: PendulumParams,
    state: Option<PendulumState>,
    last_torque: Option<f64>,
    rng: EpisodeRng,
    observation_space: Space,
    action_space: Space,
    metadata: Metadata,
    render_mode: Option<RenderMode>,
    display: Option<HumanDisplay>,
    closed: bool,
}

impl Pendulum {
    pub fn new(params: PendulumParams, render_mode: Option<RenderMode>) -> Self {
        let high = vec![1.0, 1.0, params.max_speed];
        let low = high.iter().map(|h| -h).collect();
        let observation_space =
            Space::Box(BoxSpace::new(low, high, vec![3], DType::Float64).expect("valid bounds"));
        let action_space = Space::Box(
            BoxSpace::uniform(
                -params.max_torque,
                params.max_torque,
                vec![1],
                DType::Float64,
            )
            .expect("valid bounds"),
        );
        let metadata = Metadata::new(vec![RenderMode::Human, RenderMode::RgbArray], 30);
        let display = (render_mode == Some(RenderMode::Human)).then(|| default_display(&metadata));
        Self {
            params,
            state: None,
            last_torque: None,
            rng: EpisodeRng::default(),
            observation_space,
            action_space,
            metadata,
            render_mode,
            display,
            closed: false,
        }
    }

    /// Accepts an optional real `g` overriding gravity.
    pub(super) fn from_kwargs(
        kwargs: &Kwargs,
        render_mode: Option<RenderMode>,
    ) -> Result<Box<dyn Env>, RegistryError> {
        reject_unknown_kwargs(kwargs, &["g"])?;
        let mut params = PendulumParams::V1;
        if let Some(g) = kwargs.get("g") {
            params.gravity = g.as_f64().filter(|g| g.is_finite()).ok_or_else(|| {
                RegistryError::InvalidKwargs("`g` must be a finite number".into())
            })?;
        }
        Ok(Box::new(Self::new(params, render_mode)))
    }

    pub fn params(&self) -> &PendulumParams {
        &self.params
    }

    pub fn state(&self) -> Option<PendulumState> {
        self.state
    }

    pub fn set_state(&mut self, state: PendulumState) {
        self.state = Some(state);
    }

    /// Replaces the `human` mode sink.
    pub fn set_frame_sink(&mut self, sink: Box<dyn FrameSink>, paced: bool) {
        self.display = Some(if paced {
            HumanDisplay::new(sink, self.metadata.render_fps)
        } else {
            HumanDisplay::unpaced(sink)
        });
    }
}

fn draw(state: Option<PendulumState>, torque: Option<f64>) -> Frame {
    let size = PENDULUM_SCREEN_SIZE as f64;
    let mut frame = Frame::new(PENDULUM_SCREEN_SIZE, PENDULUM_SCREEN_SIZE, [255, 255, 255]);
    let s = state.unwrap_or_default();
    let center = (size / 2.0, size / 2.0);
    let rod = size * 0.4;
    // Screen y grows downward; theta = 0 points up.
    let tip = (
        center.0 + rod * s.theta.sin(),
        center.1 - rod * s.theta.cos(),
    );
    frame.draw_line(center, tip, size * 0.04, [204, 77, 77]);
    frame.fill_circle(tip.0, tip.1, size * 0.02, [204, 77, 77]);
    frame.fill_circle(center.0, center.1, size * 0.01, [0, 0, 0]);
    if let Some(u) = torque {
        let bar = u / 2.0 * size * 0.2;
        frame.fill_rect(
            center.0,
            size * 0.9,
            center.0 + bar,
            size * 0.92,
            [60, 60, 60],
        );
    }
    frame
}

impl Env for Pendulum {
    fn observation_space(&self) -> &Space {
        &self.observation_space
    }

    fn action_space(&self) -> &Space {
        &self.action_space
    }

    fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    fn render_mode(&self) -> Option<RenderMode> {
        self.render_mode
    }

    fn reset(
        &mut self,
        seed: Option<u64>,
        _options: Option<&Info>,
    ) -> Result<ResetResult, EnvError> {
        if self.closed {
            return Err(EnvError::EnvClosed);
        }
        let rng = self.rng.reseed(seed);
        let state = PendulumState {
            theta: wrap_angle(rng.uniform(-PI, PI)),
            theta_dot: rng.uniform(-1.0, 1.0),
        };
        self.state = Some(state);
        self.last_torque = None;
        Ok(ResetResult {
            observation: Value::real(state.observation()),
            info: Info::new(),
        })
    }

    fn step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        if self.closed {
            return Err(EnvError::EnvClosed);
        }
        check_action(&self.action_space, action)?;
        let state = self
            .state
            .ok_or(EnvError::ResetNeeded("pendulum has no state before reset"))?;
        let torque = action
            .as_real()
            .map(|a| a.data()[0])
            .expect("checked against a real box");
        let (next, reward) = pendulum_transition(&state, torque, &self.params);
        self.state = Some(next);
        self.last_torque = Some(torque);
        Ok(StepResult {
            observation: Value::real(next.observation()),
            reward,
            terminated: false,
            truncated: false,
            info: Info::new(),
        })
    }

    fn render(&mut self) -> Result<Option<RenderOutput>, EnvError> {
        let (state, torque) = (self.state, self.last_torque);
        render_to(
            self.render_mode,
            &self.metadata,
            self.display.as_mut(),
            |mode| match mode {
                RenderMode::RgbArray => Some(RenderOutput::Frame(draw(state, torque))),
                _ => None,
            },
        )
    }

    fn close(&mut self) {
        self.closed = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upright_at_rest_costs_nothing() {
        let (next, reward) =
            pendulum_transition(&PendulumState::default(), 0.0, &PendulumParams::V1);
        assert_eq!(reward, 0.0);
        assert_eq!(next, PendulumState::default());
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn speed_is_clipped() {
        let fast = PendulumState {
            theta: 1.0,
            theta_dot: 7.99,
        };
        let (next, reward) = pendulum_transition(&fast, 2.0, &PendulumParams::V1);
        assert_eq!(next.theta_dot, 8.0);
        assert!(reward < 0.0);
    }

    #[test]
    fn gravity_kwarg() {
        let mut kw = Kwargs::new();
        kw.insert("g".into(), 9.81.into());
        let env = Pendulum::from_kwargs(&kw, None).unwrap();
        assert_eq!(
            env.downcast_unwrapped::<Pendulum>()
                .unwrap()
                .params()
                .gravity,
            9.81
        );
        kw.insert("mass".into(), 2.0.into());
        assert!(Pendulum::from_kwargs(&kw, None).is_err());
    }
}
