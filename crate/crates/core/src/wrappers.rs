//! Wrappers: environments that enclose another environment, override part of
//! its interface, and delegate the rest.
//!
//! Implement [`Wrapper`] and override only the `wrapped_*` hooks you need; the
//! blanket [`Env`] impl forwards everything else to the inner environment.

use std::time::Instant;

use crate::env::{
    check_action, Env, EnvError, Info, InfoValue, Metadata, RenderMode, ResetResult, StepResult,
    RENDER_BEFORE_RESET,
};
use crate::registry::EnvSpec;
use crate::render::RenderOutput;
use crate::seeding::Rng;
use crate::spaces::{flatten, flatten_space, Array, BoxSpace, DType, Space, Value};

/// Delegation base for wrappers.
pub trait Wrapper: Send + 'static {
    type Inner: Env;

    fn inner(&self) -> &Self::Inner;

    fn inner_mut(&mut self) -> &mut Self::Inner;

    fn wrapped_observation_space(&self) -> &Space {
        self.inner().observation_space()
    }

    fn wrapped_action_space(&self) -> &Space {
        self.inner().action_space()
    }

    fn wrapped_metadata(&self) -> &Metadata {
        self.inner().metadata()
    }

    fn wrapped_render_mode(&self) -> Option<RenderMode> {
        self.inner().render_mode()
    }

    fn wrapped_spec(&self) -> Option<&EnvSpec> {
        self.inner().spec()
    }

    fn wrapped_reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<ResetResult, EnvError> {
        self.inner_mut().reset(seed, options)
    }

    fn wrapped_step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        self.inner_mut().step(action)
    }

    fn wrapped_render(&mut self) -> Result<Option<RenderOutput>, EnvError> {
        self.inner_mut().render()
    }

    fn wrapped_close(&mut self) {
        self.inner_mut().close()
    }
}

impl<W: Wrapper> Env for W {
    fn observation_space(&self) -> &Space {
        self.wrapped_observation_space()
    }

    fn action_space(&self) -> &Space {
        self.wrapped_action_space()
    }

    fn metadata(&self) -> &Metadata {
        self.wrapped_metadata()
    }

    fn render_mode(&self) -> Option<RenderMode> {
        self.wrapped_render_mode()
    }

    fn spec(&self) -> Option<&EnvSpec> {
        self.wrapped_spec()
    }

    fn reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<ResetResult, EnvError> {
        self.wrapped_reset(seed, options)
    }

    fn step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        self.wrapped_step(action)
    }

    fn render(&mut self) -> Result<Option<RenderOutput>, EnvError> {
        self.wrapped_render()
    }

    fn close(&mut self) {
        self.wrapped_close()
    }

    fn unwrapped(&self) -> &dyn Env {
        self.inner().unwrapped()
    }
}

/// A wrapper that overrides nothing.
pub struct Passthrough<E> {
    inner: E,
}

impl<E: Env> Passthrough<E> {
    pub fn new(inner: E) -> Self {
        Self { inner }
    }

    pub fn into_inner(self) -> E {
        self.inner
    }
}

impl<E: Env> Wrapper for Passthrough<E> {
    type Inner = E;

    fn inner(&self) -> &E {
        &self.inner
    }

    fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }
}

/// Sets `truncated` on the `max_episode_steps`-th step after a reset.
/// `terminated` passes through, so a terminal state reached exactly at the
/// limit reports both flags. Stepping past the limit without a reset is an
/// error, whichever way this wrapper is nested with [`OrderEnforcing`].
pub struct TimeLimit<E> {
    inner: E,
    max_episode_steps: u32,
    elapsed_steps: u32,
}

impl<E: Env> TimeLimit<E> {
    /// # Panics
    /// If `max_episode_steps` is zero.
    pub fn new(inner: E, max_episode_steps: u32) -> Self {
        assert!(
            max_episode_steps >= 1,
            "max_episode_steps must be at least 1"
        );
        Self {
            inner,
            max_episode_steps,
            elapsed_steps: 0,
        }
    }

    pub fn max_episode_steps(&self) -> u32 {
        self.max_episode_steps
    }

    pub fn elapsed_steps(&self) -> u32 {
        self.elapsed_steps
    }
}

impl<E: Env> Wrapper for TimeLimit<E> {
    type Inner = E;

    fn inner(&self) -> &E {
        &self.inner
    }

    fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }

    fn wrapped_reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<ResetResult, EnvError> {
        let result = self.inner.reset(seed, options)?;
        self.elapsed_steps = 0;
        Ok(result)
    }

    fn wrapped_step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        if self.elapsed_steps >= self.max_episode_steps {
            return Err(EnvError::ResetNeeded(
                "step called after the time limit was reached",
            ));
        }
        let mut result = self.inner.step(action)?;
        self.elapsed_steps += 1;
        if self.elapsed_steps >= self.max_episode_steps {
            result.truncated = true;
        }
        Ok(result)
    }
}

/// Rejects `step` before the first reset and after an episode has ended.
pub struct OrderEnforcing<E> {
    inner: E,
    has_reset: bool,
    episode_over: bool,
    closed: bool,
}

impl<E: Env> OrderEnforcing<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            has_reset: false,
            episode_over: false,
            closed: false,
        }
    }

    pub fn has_reset(&self) -> bool {
        self.has_reset
    }
}

impl<E: Env> Wrapper for OrderEnforcing<E> {
    type Inner = E;

    fn inner(&self) -> &E {
        &self.inner
    }

    fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }

    fn wrapped_reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<ResetResult, EnvError> {
        if self.closed {
            return Err(EnvError::EnvClosed);
        }
        let result = self.inner.reset(seed, options)?;
        self.has_reset = true;
        self.episode_over = false;
        Ok(result)
    }

    fn wrapped_step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        if self.closed {
            return Err(EnvError::EnvClosed);
        }
        if !self.has_reset {
            return Err(EnvError::ResetNeeded("step called before reset"));
        }
        if self.episode_over {
            return Err(EnvError::ResetNeeded("step called after the episode ended"));
        }
        let result = self.inner.step(action)?;
        self.episode_over = result.done();
        Ok(result)
    }

    fn wrapped_render(&mut self) -> Result<Option<RenderOutput>, EnvError> {
        if !self.has_reset
            && self.inner.render_mode().is_some()
            && !self.inner.metadata().flag(RENDER_BEFORE_RESET)
        {
            return Err(EnvError::ResetNeeded("render called before reset"));
        }
        self.inner.render()
    }

    fn wrapped_close(&mut self) {
        self.closed = true;
        self.inner.close()
    }
}

pub type ObservationFn = Box<dyn Fn(&Value) -> Value + Send>;
pub type ActionFn = Box<dyn Fn(&Value) -> Value + Send>;
pub type RewardFn = Box<dyn Fn(f64) -> f64 + Send>;

/// Number of inner-space samples checked when a transform is installed.
pub const TRANSFORM_SPOT_CHECKS: usize = 100;

/// Maps observations through a function into a new observation space.
/// Every transformed observation is checked against the new space.
pub struct TransformObservation<E> {
    inner: E,
    transform: ObservationFn,
    space: Space,
}

impl<E: Env> TransformObservation<E> {
    /// Fails if any of a fixed set of inner-space samples maps outside `space`.
    pub fn new<F>(inner: E, transform: F, space: Space) -> Result<Self, EnvError>
    where
        F: Fn(&Value) -> Value + Send + 'static,
    {
        let mut rng = Rng::from_seed(0);
        for _ in 0..TRANSFORM_SPOT_CHECKS {
            let sample = inner.observation_space().sample(&mut rng);
            if !space.contains(&transform(&sample)) {
                return Err(EnvError::TransformedValueNotInSpace);
            }
        }
        Ok(Self {
            inner,
            transform: Box::new(transform),
            space,
        })
    }

    fn apply(&self, observation: &Value) -> Result<Value, EnvError> {
        let out = (self.transform)(observation);
        if self.space.contains(&out) {
            Ok(out)
        } else {
            Err(EnvError::TransformedValueNotInSpace)
        }
    }
}

impl<E: Env> Wrapper for TransformObservation<E> {
    type Inner = E;

    fn inner(&self) -> &E {
        &self.inner
    }

    fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }

    fn wrapped_observation_space(&self) -> &Space {
        &self.space
    }

    fn wrapped_reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<ResetResult, EnvError> {
        let mut result = self.inner.reset(seed, options)?;
        result.observation = self.apply(&result.observation)?;
        Ok(result)
    }

    fn wrapped_step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        let mut result = self.inner.step(action)?;
        result.observation = self.apply(&result.observation)?;
        Ok(result)
    }
}

/// Exposes `outer_space` as the action space and feeds `transform(action)` to
/// the inner environment.
pub struct TransformAction<E> {
    inner: E,
    transform: ActionFn,
    space: Space,
}

impl<E: Env> TransformAction<E> {
    pub fn new<F>(inner: E, transform: F, outer_space: Space) -> Self
    where
        F: Fn(&Value) -> Value + Send + 'static,
    {
        Self {
            inner,
            transform: Box::new(transform),
            space: outer_space,
        }
    }
}

impl<E: Env> Wrapper for TransformAction<E> {
    type Inner = E;

    fn inner(&self) -> &E {
        &self.inner
    }

    fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }

    fn wrapped_action_space(&self) -> &Space {
        &self.space
    }

    fn wrapped_step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        check_action(&self.space, action)?;
        let inner_action = (self.transform)(action);
        self.inner.step(&inner_action)
    }
}

pub struct TransformReward<E> {
    inner: E,
    transform: RewardFn,
}

impl<E: Env> TransformReward<E> {
    pub fn new<F>(inner: E, transform: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + 'static,
    {
        Self {
            inner,
            transform: Box::new(transform),
        }
    }
}

impl<E: Env> Wrapper for TransformReward<E> {
    type Inner = E;

    fn inner(&self) -> &E {
        &self.inner
    }

    fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }

    fn wrapped_step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        let mut result = self.inner.step(action)?;
        result.reward = (self.transform)(result.reward);
        Ok(result)
    }
}

/// Info key holding end-of-episode statistics.
pub const EPISODE_KEY: &str = "episode";

/// Episode return, length and wall time accumulated since the last reset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeStats {
    pub episode_return: f64,
    pub episode_length: u64,
    pub episode_time: f64,
}

impl EpisodeStats {
    /// `{"r": return, "l": length, "t": seconds}`
    pub fn to_info(&self) -> InfoValue {
        let mut m = Info::new();
        m.insert("r".into(), InfoValue::Float(self.episode_return));
        m.insert("l".into(), InfoValue::Int(self.episode_length as i64));
        m.insert("t".into(), InfoValue::Float(self.episode_time));
        InfoValue::Map(m)
    }

    pub fn from_info(info: &Info) -> Option<Self> {
        let m = info.get(EPISODE_KEY)?.as_map()?;
        Some(Self {
            episode_return: m.get("r")?.as_f64()?,
            episode_length: m.get("l")?.as_i64()? as u64,
            episode_time: m.get("t")?.as_f64()?,
        })
    }
}

/// Adds `info["episode"]` on the step where an episode ends.
pub struct RecordEpisodeStatistics<E> {
    inner: E,
    episode_return: f64,
    episode_length: u64,
    episode_start: Instant,
}

impl<E: Env> RecordEpisodeStatistics<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            episode_return: 0.0,
            episode_length: 0,
            episode_start: Instant::now(),
        }
    }
}

impl<E: Env> Wrapper for RecordEpisodeStatistics<E> {
    type Inner = E;

    fn inner(&self) -> &E {
        &self.inner
    }

    fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }

    fn wrapped_reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<ResetResult, EnvError> {
        let result = self.inner.reset(seed, options)?;
        self.episode_return = 0.0;
        self.episode_length = 0;
        self.episode_start = Instant::now();
        Ok(result)
    }

    fn wrapped_step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        let mut result = self.inner.step(action)?;
        self.episode_return += result.reward;
        self.episode_length += 1;
        if result.done() {
            let stats = EpisodeStats {
                episode_return: self.episode_return,
                episode_length: self.episode_length,
                episode_time: self.episode_start.elapsed().as_secs_f64(),
            };
            result.info.insert(EPISODE_KEY.into(), stats.to_info());
        }
        Ok(result)
    }
}

pub fn time_limit<E: Env>(env: E, max_episode_steps: u32) -> TimeLimit<E> {
    TimeLimit::new(env, max_episode_steps)
}

pub fn order_enforcing<E: Env>(env: E) -> OrderEnforcing<E> {
    OrderEnforcing::new(env)
}

pub fn record_episode_statistics<E: Env>(env: E) -> RecordEpisodeStatistics<E> {
    RecordEpisodeStatistics::new(env)
}

pub fn transform_reward<E: Env, F>(env: E, transform: F) -> TransformReward<E>
where
    F: Fn(f64) -> f64 + Send + 'static,
{
    TransformReward::new(env, transform)
}

pub fn clip_reward<E: Env>(env: E, min: f64, max: f64) -> TransformReward<E> {
    TransformReward::new(env, move |r| r.clamp(min, max))
}

/// Observations become their flat encoding, inside the flattened box.
pub fn flatten_observation<E: Env>(env: E) -> Result<TransformObservation<E>, EnvError> {
    let inner_space = env.observation_space().clone();
    let flat_space = flatten_space(&inner_space)?;
    TransformObservation::new(
        env,
        move |obs| match flatten(&inner_space, obs) {
            Ok(flat) => Value::real(flat),
            // Not an inner-space member; the empty tuple fails the output check.
            Err(_) => Value::Tuple(Vec::new()),
        },
        flat_space,
    )
}

fn real_box_action(env: &impl Env) -> Result<BoxSpace, EnvError> {
    match env.action_space() {
        Space::Box(b) if b.dtype() == DType::Float64 => Ok(b.clone()),
        other => Err(EnvError::InvalidArgument(format!(
            "expected a real box action space, found {other}"
        ))),
    }
}

fn map_real(action: &Value, f: impl Fn(usize, f64) -> f64) -> Value {
    match action {
        Value::Real(a) => Value::Real(
            Array::new(
                a.shape().to_vec(),
                a.data().iter().enumerate().map(|(i, &x)| f(i, x)).collect(),
            )
            .expect("shape preserved"),
        ),
        other => other.clone(),
    }
}

/// Accepts any real action of the right shape and clips it to the inner bounds.
pub fn clip_action<E: Env>(env: E) -> Result<TransformAction<E>, EnvError> {
    let inner = real_box_action(&env)?;
    let outer = BoxSpace::uniform(
        f64::NEG_INFINITY,
        f64::INFINITY,
        inner.shape().to_vec(),
        DType::Float64,
    )?;
    let (low, high) = (inner.low().to_vec(), inner.high().to_vec());
    Ok(TransformAction::new(
        env,
        move |a| map_real(a, |i, x| x.clamp(low[i], high[i])),
        Space::Box(outer),
    ))
}

/// Affinely maps actions from `[min_action, max_action]` onto the inner bounds.
pub fn rescale_action<E: Env>(
    env: E,
    min_action: f64,
    max_action: f64,
) -> Result<TransformAction<E>, EnvError> {
    let inner = real_box_action(&env)?;
    if !inner.is_bounded() {
        return Err(EnvError::InvalidArgument(
            "rescale_action needs finite inner bounds".into(),
        ));
    }
    if !(min_action.is_finite() && max_action.is_finite() && min_action < max_action) {
        return Err(EnvError::InvalidArgument(
            "rescale_action needs finite min < max".into(),
        ));
    }
    let outer = BoxSpace::uniform(
        min_action,
        max_action,
        inner.shape().to_vec(),
        DType::Float64,
    )?;
    let (low, high) = (inner.low().to_vec(), inner.high().to_vec());
    Ok(TransformAction::new(
        env,
        move |a| {
            map_real(a, |i, x| {
                let scaled =
                    low[i] + (high[i] - low[i]) * ((x - min_action) / (max_action - min_action));
                scaled.clamp(low[i], high[i])
            })
        },
        Space::Box(outer),
    ))
}
