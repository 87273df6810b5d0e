use std::f64::consts::PI;

use log::warn;

use super::{default_display, reject_unknown_kwargs, render_to};
use crate::env::{
    check_action, Env, EnvError, EpisodeRng, Info, Metadata, RenderMode, ResetResult, StepResult,
};
use crate::registry::{Kwargs, RegistryError};
use crate::render::{Frame, FrameSink, HumanDisplay, RenderOutput};
use crate::spaces::{BoxSpace, DType, Space, Value};

/// Physical constants of the cart-pole task.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub force_mag: f64,
    /// Integration step in seconds.
    pub tau: f64,
    pub theta_threshold: f64,
    pub x_threshold: f64,
    /// Initial state components are uniform in `[-init_bound, init_bound)`.
    pub init_bound: f64,
}

impl CartPoleParams {
    pub const V1: CartPoleParams = CartPoleParams {
        gravity: 9.8,
        mass_cart: 1.0,
        mass_pole: 0.1,
        half_length: 0.5,
        force_mag: 10.0,
        tau: 0.02,
        theta_threshold: 12.0 * 2.0 * PI / 360.0,
        x_threshold: 2.4,
        init_bound: 0.05,
    };

    /// Same dynamics as v1; v0 differs only in its registered step limit.
    pub const V0: CartPoleParams = CartPoleParams::V1;

    pub fn is_terminal(&self, s: &CartPoleState) -> bool {
        s.x < -self.x_threshold
            || s.x > self.x_threshold
            || s.theta < -self.theta_threshold
            || s.theta > self.theta_threshold
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

/// One explicit-Euler step of the cart-pole equations. Action 1 pushes right.
pub fn cartpole_transition(
    state: &CartPoleState,
    push_right: bool,
    p: &CartPoleParams,
) -> CartPoleState {
    let force = if push_right {
        p.force_mag
    } else {
        -p.force_mag
    };
    let total_mass = p.mass_pole + p.mass_cart;
    let pole_mass_length = p.mass_pole * p.half_length;
    let (sin_theta, cos_theta) = state.theta.sin_cos();

    let temp =
        (force + pole_mass_length * state.theta_dot * state.theta_dot * sin_theta) / total_mass;
    let theta_acc = (p.gravity * sin_theta - cos_theta * temp)
        / (p.half_length * (4.0 / 3.0 - p.mass_pole * cos_theta * cos_theta / total_mass));
    let x_acc = temp - pole_mass_length * theta_acc * cos_theta / total_mass;

    CartPoleState {
        x: state.x + p.tau * state.x_dot,
        x_dot: state.x_dot + p.tau * x_acc,
        theta: state.theta + p.tau * state.theta_dot,
        theta_dot: state.theta_dot + p.tau * theta_acc,
    }
}

pub const CARTPOLE_SCREEN_WIDTH: usize = 600;
pub const CARTPOLE_SCREEN_HEIGHT: usize = 400;

/// Balance a pole on a cart by pushing left or right. Reward 1 per step.
pub struct CartPole {
    params: CartPoleParams,
    state: Option<CartPoleState>,
    rng: EpisodeRng,
    steps_beyond_terminated: Option<u32>,
    observation_space: Space,
    action_space: Space,
    metadata: Metadata,
    render_mode: Option<RenderMode>,
    display: Option<HumanDisplay>,
    closed: bool,
}

impl CartPole {
    pub fn new(params: CartPoleParams, render_mode: Option<RenderMode>) -> Self {
        let high = vec![
            params.x_threshold * 2.0,
            f64::INFINITY,
            params.theta_threshold * 2.0,
            f64::INFINITY,
        ];
        let low = high.iter().map(|h| -h).collect();
        let observation_space =
            Space::Box(BoxSpace::new(low, high, vec![4], DType::Float64).expect("valid bounds"));
        let metadata = Metadata::new(vec![RenderMode::Human, RenderMode::RgbArray], 50);
        let display = (render_mode == Some(RenderMode::Human)).then(|| default_display(&metadata));
        Self {
            params,
            state: None,
            rng: EpisodeRng::default(),
            steps_beyond_terminated: None,
            observation_space,
            action_space: Space::discrete(2).expect("n >= 1"),
            metadata,
            render_mode,
            display,
            closed: false,
        }
    }

    pub(super) fn from_kwargs(
        kwargs: &Kwargs,
        render_mode: Option<RenderMode>,
        params: CartPoleParams,
    ) -> Result<Box<dyn Env>, RegistryError> {
        reject_unknown_kwargs(kwargs, &[])?;
        Ok(Box::new(Self::new(params, render_mode)))
    }

    pub fn params(&self) -> &CartPoleParams {
        &self.params
    }

    pub fn state(&self) -> Option<CartPoleState> {
        self.state
    }

    /// Overrides the current state, e.g. to start from an exact configuration.
    pub fn set_state(&mut self, state: CartPoleState) {
        self.state = Some(state);
        self.steps_beyond_terminated = None;
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

fn draw(params: &CartPoleParams, state: Option<CartPoleState>) -> Frame {
    let (w, h) = (CARTPOLE_SCREEN_WIDTH as f64, CARTPOLE_SCREEN_HEIGHT as f64);
    let mut frame = Frame::new(
        CARTPOLE_SCREEN_HEIGHT,
        CARTPOLE_SCREEN_WIDTH,
        [255, 255, 255],
    );
    let scale = w / (params.x_threshold * 2.0);
    let pole_len = scale * 2.0 * params.half_length;
    let (cart_w, cart_h) = (50.0, 30.0);
    let track_y = h - 100.0;
    let s = state.unwrap_or_default();

    frame.draw_line((0.0, track_y), (w, track_y), 1.0, [0, 0, 0]);
    let cart_x = s.x * scale + w / 2.0;
    frame.fill_rect(
        cart_x - cart_w / 2.0,
        track_y - cart_h / 2.0,
        cart_x + cart_w / 2.0,
        track_y + cart_h / 2.0,
        [0, 0, 0],
    );
    let axle = (cart_x, track_y - cart_h / 4.0);
    let tip = (
        axle.0 + pole_len * s.theta.sin(),
        axle.1 - pole_len * s.theta.cos(),
    );
    frame.draw_line(axle, tip, 10.0, [202, 152, 101]);
    frame.fill_circle(axle.0, axle.1, 5.0, [129, 132, 203]);
    frame
}

impl Env for CartPole {
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
        let b = self.params.init_bound;
        let state = CartPoleState {
            x: rng.uniform(-b, b),
            x_dot: rng.uniform(-b, b),
            theta: rng.uniform(-b, b),
            theta_dot: rng.uniform(-b, b),
        };
        self.state = Some(state);
        self.steps_beyond_terminated = None;
        Ok(ResetResult {
            observation: Value::real(state.to_vec()),
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
            .ok_or(EnvError::ResetNeeded("cart-pole has no state before reset"))?;
        let next = cartpole_transition(&state, action.as_discrete() == Some(1), &self.params);
        self.state = Some(next);
        let terminated = self.params.is_terminal(&next);

        let reward = if !terminated {
            1.0
        } else if let Some(n) = self.steps_beyond_terminated.as_mut() {
            if *n == 0 {
                warn!("stepping a terminated cart-pole episode; call reset");
            }
            *n += 1;
            0.0
        } else {
            self.steps_beyond_terminated = Some(0);
            1.0
        };
        Ok(StepResult {
            observation: Value::real(next.to_vec()),
            reward,
            terminated,
            truncated: false,
            info: Info::new(),
        })
    }

    fn render(&mut self) -> Result<Option<RenderOutput>, EnvError> {
        let (params, state) = (self.params, self.state);
        render_to(
            self.render_mode,
            &self.metadata,
            self.display.as_mut(),
            |mode| match mode {
                RenderMode::RgbArray => Some(RenderOutput::Frame(draw(&params, state))),
                _ => None,
            },
        )
    }

    fn close(&mut self) {
        self.closed = true;
    }
}
