//! The environment contract: `reset`, `step`, `render`, `close`, plus the
//! static description (spaces, metadata, spec) every environment carries.

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::registry::{EnvSpec, RegistryError};
use crate::render::RenderOutput;
use crate::seeding::Rng;
use crate::spaces::{Space, SpaceError, Value};

/// Metadata attached to resets and steps. Keys are strings and values come
/// from a small closed set so that info maps can cross thread boundaries and
/// be serialized.
pub type Info = BTreeMap<String, InfoValue>;

#[derive(Clone, Debug, PartialEq)]
pub enum InfoValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<InfoValue>),
    Map(Info),
    Value(Value),
}

impl InfoValue {
    pub fn as_i64(&self) -> Option<i64> {
        match self {
            InfoValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            InfoValue::Float(v) => Some(*v),
            InfoValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            InfoValue::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            InfoValue::Str(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&Info> {
        match self {
            InfoValue::Map(m) => Some(m),
            _ => None,
        }
    }
}

impl From<bool> for InfoValue {
    fn from(v: bool) -> Self {
        InfoValue::Bool(v)
    }
}

impl From<i64> for InfoValue {
    fn from(v: i64) -> Self {
        InfoValue::Int(v)
    }
}

impl From<f64> for InfoValue {
    fn from(v: f64) -> Self {
        InfoValue::Float(v)
    }
}

impl From<&str> for InfoValue {
    fn from(v: &str) -> Self {
        InfoValue::Str(v.to_string())
    }
}

impl From<String> for InfoValue {
    fn from(v: String) -> Self {
        InfoValue::Str(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResetResult {
    pub observation: Value,
    pub info: Info,
}

/// Outcome of one transition.
///
/// `terminated` reports that the task reached a terminal state; `truncated`
/// reports an externally imposed end such as a step limit. Both are set only
/// when the terminal state is reached exactly at the limit.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Value,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: Info,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RenderMode {
    Human,
    RgbArray,
    Ansi,
}

impl RenderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RenderMode::Human => "human",
            RenderMode::RgbArray => "rgb_array",
            RenderMode::Ansi => "ansi",
        }
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(RenderMode::Human),
            "rgb_array" => Ok(RenderMode::RgbArray),
            "ansi" => Ok(RenderMode::Ansi),
            other => Err(format!("unknown render mode `{other}`")),
        }
    }
}

/// Metadata key that lets an environment render before its first reset.
pub const RENDER_BEFORE_RESET: &str = "render_before_reset";

/// Static description of an environment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metadata {
    pub render_modes: Vec<RenderMode>,
    /// Recommended frames per second for `human` rendering.
    pub render_fps: u32,
    pub extra: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(render_modes: Vec<RenderMode>, render_fps: u32) -> Self {
        Self {
            render_modes,
            render_fps,
            extra: BTreeMap::new(),
        }
    }

    pub fn supports(&self, mode: RenderMode) -> bool {
        self.render_modes.contains(&mode)
    }

    pub fn flag(&self, key: &str) -> bool {
        self.extra.get(key).is_some_and(|v| v == "true")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("environment is closed")]
    EnvClosed,
    #[error("reset needed: {0}")]
    ResetNeeded(&'static str),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid reset options: {0}")]
    InvalidOptions(String),
    #[error("render mode is unset")]
    RenderModeUnset,
    #[error("render mode `{0}` is not supported by this environment")]
    UnsupportedRenderMode(RenderMode),
    #[error("render sink failed: {0}")]
    RenderSink(String),
    #[error("transformed value is not in the declared space")]
    TransformedValueNotInSpace,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("failed to spawn vector workers: {0}")]
    WorkerSpawnFailure(String),
    #[error("worker {index} failed: {message}")]
    WorkerFailure { index: usize, message: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl EnvError {
    /// Stable name of the error kind, for diagnostics and foreign bindings.
    pub fn name(&self) -> &'static str {
        match self {
            EnvError::EnvClosed => "EnvClosed",
            EnvError::ResetNeeded(_) => "ResetNeeded",
            EnvError::InvalidAction(_) => "InvalidAction",
            EnvError::InvalidOptions(_) => "InvalidOptions",
            EnvError::RenderModeUnset => "RenderModeUnset",
            EnvError::UnsupportedRenderMode(_) => "UnsupportedRenderMode",
            EnvError::RenderSink(_) => "RenderSink",
            EnvError::TransformedValueNotInSpace => "TransformedValueNotInSpace",
            EnvError::InvalidArgument(_) => "InvalidArgument",
            EnvError::WorkerSpawnFailure(_) => "WorkerSpawnFailure",
            EnvError::WorkerFailure { .. } => "WorkerFailure",
            EnvError::Space(_) => "SpaceError",
            EnvError::Registry(e) => e.name(),
        }
    }
}

#[doc(hidden)]
pub trait AsAny {
    fn as_any(&self) -> &dyn Any;
}

impl<T: Any> AsAny for T {
    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[doc(hidden)]
pub trait AsDynEnv {
    fn as_dyn_env(&self) -> &dyn Env;
}

impl<T: Env> AsDynEnv for T {
    fn as_dyn_env(&self) -> &dyn Env {
        self
    }
}

/// An environment. Implementors provide the spaces, metadata, `reset` and `step`.
///
/// Instances are single-owner; they may move between threads but calls on one
/// instance are serialized by the caller.
pub trait Env: AsAny + AsDynEnv + Send + 'static {
    fn observation_space(&self) -> &Space;

    fn action_space(&self) -> &Space;

    fn metadata(&self) -> &Metadata;

    /// Fixed at construction.
    fn render_mode(&self) -> Option<RenderMode> {
        None
    }

    /// The recipe this instance was created from, when created by the registry.
    fn spec(&self) -> Option<&EnvSpec> {
        None
    }

    /// Starts a new episode. A `seed` replaces the environment generator
    /// before the initial state is drawn; without one the current stream
    /// continues.
    fn reset(&mut self, seed: Option<u64>, options: Option<&Info>)
        -> Result<ResetResult, EnvError>;

    fn step(&mut self, action: &Value) -> Result<StepResult, EnvError>;

    /// `rgb_array` returns a frame, `ansi` a string, `human` pushes to the
    /// display sink and returns `None`.
    fn render(&mut self) -> Result<Option<RenderOutput>, EnvError> {
        match self.render_mode() {
            None => Err(EnvError::RenderModeUnset),
            Some(mode) => Err(EnvError::UnsupportedRenderMode(mode)),
        }
    }

    /// Releases resources. Idempotent.
    fn close(&mut self) {}

    /// The innermost, unwrapped environment.
    fn unwrapped(&self) -> &dyn Env {
        self.as_dyn_env()
    }
}

impl Env for Box<dyn Env> {
    fn observation_space(&self) -> &Space {
        (**self).observation_space()
    }

    fn action_space(&self) -> &Space {
        (**self).action_space()
    }

    fn metadata(&self) -> &Metadata {
        (**self).metadata()
    }

    fn render_mode(&self) -> Option<RenderMode> {
        (**self).render_mode()
    }

    fn spec(&self) -> Option<&EnvSpec> {
        (**self).spec()
    }

    fn reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<ResetResult, EnvError> {
        (**self).reset(seed, options)
    }

    fn step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        (**self).step(action)
    }

    fn render(&mut self) -> Result<Option<RenderOutput>, EnvError> {
        (**self).render()
    }

    fn close(&mut self) {
        (**self).close()
    }

    fn unwrapped(&self) -> &dyn Env {
        (**self).unwrapped()
    }
}

impl dyn Env {
    /// Downcasts the unwrapped environment to a concrete type.
    pub fn downcast_unwrapped<T: Env>(&self) -> Option<&T> {
        self.unwrapped().as_any().downcast_ref::<T>()
    }
}

/// The per-instance generator behind episodic seeding.
///
/// Seeded on demand: an explicit reset seed replaces the stream, and an
/// environment that is never given a seed falls back to a wall-clock seed.
#[derive(Clone, Debug, Default)]
pub struct EpisodeRng {
    rng: Option<Rng>,
}

impl EpisodeRng {
    pub fn reseed(&mut self, seed: Option<u64>) -> &mut Rng {
        match seed {
            Some(s) => self.rng.insert(Rng::from_seed(s)),
            None => self.rng.get_or_insert_with(Rng::from_entropy),
        }
    }

    pub fn get(&mut self) -> &mut Rng {
        self.rng.get_or_insert_with(Rng::from_entropy)
    }
}

/// Checks `action` against `space`, producing the standard error.
pub fn check_action(space: &Space, action: &Value) -> Result<(), EnvError> {
    if space.contains(action) {
        Ok(())
    } else {
        Err(EnvError::InvalidAction(format!(
            "{action:?} is not in {space}"
        )))
    }
}
