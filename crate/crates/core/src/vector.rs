//! Vectorized environments: N copies of one environment behind a batched
//! `reset`/`step` interface.
//!
//! Autoreset is next-step: when a sub-environment's episode ends, the step
//! that ends it reports the true final observation and flags. The following
//! step ignores that sub-environment's action, resets it (continuing its own
//! generator stream), and reports the reset observation with reward `0.0`,
//! both flags false, and the reset info.
//!
//! Two backends produce identical values. `Sequential` steps sub-environments
//! in index order on the calling thread. `Parallel` hands each
//! sub-environment its own worker thread in a rayon pool and gathers replies
//! in index order. Without the `parallel` cargo feature, the parallel backend
//! falls back to sequential execution.

use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;
use std::time::Instant;

use log::warn;

use crate::env::{Env, EnvError, Info, ResetResult, StepResult};
use crate::registry::{self, EnvSpec, MakeOptions};
use crate::render::RenderOutput;
use crate::seeding::derive_child_seeds;
use crate::spaces::{batch_space, concatenate, iterate, Space, Value};
use crate::wrappers::{EpisodeStats, EPISODE_KEY};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Backend {
    #[default]
    Sequential,
    Parallel,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Sequential => "sequential",
            Backend::Parallel => "parallel",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(Backend::Sequential),
            "parallel" => Ok(Backend::Parallel),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

/// Command sent to the worker owning one sub-environment.
#[derive(Clone, Debug, PartialEq)]
pub enum WorkerCommand {
    Reset {
        seed: Option<u64>,
        options: Option<Info>,
    },
    Step {
        action: Value,
    },
    Render,
    Close,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkerMessage {
    pub index: usize,
    pub command: WorkerCommand,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReplyPayload {
    Reset(ResetResult),
    Step(StepResult),
    Render(Option<RenderOutput>),
    Closed,
}

/// Exactly one reply is produced per command.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkerReply {
    pub index: usize,
    pub result: Result<ReplyPayload, EnvError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorStepResult {
    pub observations: Value,
    pub rewards: Vec<f64>,
    pub terminateds: Vec<bool>,
    pub truncateds: Vec<bool>,
    pub infos: Vec<Info>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorResetResult {
    pub observations: Value,
    pub infos: Vec<Info>,
}

/// Batched environment interface, implemented by [`VectorEnv`] and vector
/// wrappers.
pub trait VecEnv: Send {
    fn num_envs(&self) -> usize;

    fn single_observation_space(&self) -> &Space;

    fn single_action_space(&self) -> &Space;

    /// `batch_space(single_observation_space, num_envs)`
    fn observation_space(&self) -> &Space;

    /// `batch_space(single_action_space, num_envs)`
    fn action_space(&self) -> &Space;

    /// With a seed, sub-environment `i` is reset with
    /// `derive_child_seeds(seed, num_envs)[i]`.
    fn reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<VectorResetResult, EnvError>;

    fn step(&mut self, actions: &Value) -> Result<VectorStepResult, EnvError>;

    fn render(&mut self) -> Result<Vec<Option<RenderOutput>>, EnvError>;

    /// Idempotent.
    fn close(&mut self);
}

struct Slot {
    env: Box<dyn Env>,
    autoreset_pending: bool,
}

impl Slot {
    fn handle(&mut self, command: WorkerCommand) -> Result<ReplyPayload, EnvError> {
        match command {
            WorkerCommand::Reset { seed, options } => {
                let r = self.env.reset(seed, options.as_ref())?;
                self.autoreset_pending = false;
                Ok(ReplyPayload::Reset(r))
            }
            WorkerCommand::Step { action } => {
                if self.autoreset_pending {
                    let r = self.env.reset(None, None)?;
                    self.autoreset_pending = false;
                    return Ok(ReplyPayload::Step(StepResult {
                        observation: r.observation,
                        reward: 0.0,
                        terminated: false,
                        truncated: false,
                        info: r.info,
                    }));
                }
                let r = self.env.step(&action)?;
                self.autoreset_pending = r.done();
                Ok(ReplyPayload::Step(r))
            }
            WorkerCommand::Render => Ok(ReplyPayload::Render(self.env.render()?)),
            WorkerCommand::Close => {
                self.env.close();
                Ok(ReplyPayload::Closed)
            }
        }
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "worker panicked".to_string())
}

/// Runs one message against its slot. A panic becomes a `WorkerFailure`.
fn serve(slot: &mut Slot, message: WorkerMessage) -> WorkerReply {
    let index = message.index;
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| slot.handle(message.command)));
    WorkerReply {
        index,
        result: outcome.unwrap_or_else(|p| {
            Err(EnvError::WorkerFailure {
                index,
                message: panic_message(p),
            })
        }),
    }
}

#[cfg(feature = "parallel")]
mod pool {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;
    use std::time::{Duration, Instant};

    use rayon::prelude::*;

    use super::{serve, Slot, WorkerMessage, WorkerReply};
    use crate::env::EnvError;

    pub(super) const CLOSE_DEADLINE: Duration = Duration::from_secs(5);

    /// One thread per sub-environment.
    pub(super) struct WorkerPool {
        pool: Option<rayon::ThreadPool>,
        live: Arc<AtomicUsize>,
    }

    impl WorkerPool {
        pub(super) fn spawn(workers: usize) -> Result<Self, EnvError> {
            let live = Arc::new(AtomicUsize::new(0));
            let (started, exited) = (live.clone(), live.clone());
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("gymkit-worker-{i}"))
                .start_handler(move |_| {
                    started.fetch_add(1, Ordering::SeqCst);
                })
                .exit_handler(move |_| {
                    exited.fetch_sub(1, Ordering::SeqCst);
                })
                .build()
                .map_err(|e| EnvError::WorkerSpawnFailure(e.to_string()))?;
            Ok(Self {
                pool: Some(pool),
                live,
            })
        }

        pub(super) fn dispatch(
            &self,
            slots: &mut [Slot],
            messages: Vec<WorkerMessage>,
        ) -> Vec<WorkerReply> {
            let pool = self.pool.as_ref().expect("pool used after shutdown");
            pool.install(|| {
                slots
                    .par_iter_mut()
                    .zip(messages)
                    .with_max_len(1)
                    .map(|(slot, message)| serve(slot, message))
                    .collect()
            })
        }

        pub(super) fn live_workers(&self) -> usize {
            self.live.load(Ordering::SeqCst)
        }

        /// Drops the pool and waits for its threads to exit. Returns false if
        /// the deadline passed first.
        pub(super) fn shutdown(&mut self, deadline: Duration) -> bool {
            drop(self.pool.take());
            let start = Instant::now();
            while self.live.load(Ordering::SeqCst) > 0 {
                if start.elapsed() > deadline {
                    return false;
                }
                std::thread::sleep(Duration::from_millis(1));
            }
            true
        }
    }
}

enum Executor {
    Sequential,
    #[cfg(feature = "parallel")]
    Pool(pool::WorkerPool),
}

/// N identically specified environments stepped in lockstep.
pub struct VectorEnv {
    slots: Vec<Slot>,
    executor: Executor,
    backend: Backend,
    single_observation_space: Space,
    single_action_space: Space,
    observation_space: Space,
    action_space: Space,
    closed: bool,
    poisoned: Option<EnvError>,
}

impl fmt::Debug for VectorEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorEnv")
            .field("num_envs", &self.slots.len())
            .field("backend", &self.backend)
            .field("closed", &self.closed)
            .finish_non_exhaustive()
    }
}

impl VectorEnv {
    /// Wraps already constructed sub-environments. All must share the same
    /// observation and action spaces.
    pub fn new(envs: Vec<Box<dyn Env>>, backend: Backend) -> Result<Self, EnvError> {
        let first = envs
            .first()
            .ok_or_else(|| EnvError::InvalidArgument("num_envs must be at least 1".into()))?;
        let single_observation_space = first.observation_space().clone();
        let single_action_space = first.action_space().clone();
        if envs.iter().any(|e| {
            e.observation_space() != &single_observation_space
                || e.action_space() != &single_action_space
        }) {
            return Err(EnvError::InvalidArgument(
                "sub-environments must share their spaces".into(),
            ));
        }
        let n = envs.len();
        let executor = match backend {
            Backend::Sequential => Executor::Sequential,
            #[cfg(feature = "parallel")]
            Backend::Parallel => Executor::Pool(pool::WorkerPool::spawn(n)?),
            #[cfg(not(feature = "parallel"))]
            Backend::Parallel => Executor::Sequential,
        };
        Ok(Self {
            slots: envs
                .into_iter()
                .map(|env| Slot {
                    env,
                    autoreset_pending: false,
                })
                .collect(),
            executor,
            backend,
            observation_space: batch_space(&single_observation_space, n),
            action_space: batch_space(&single_action_space, n),
            single_observation_space,
            single_action_space,
            closed: false,
            poisoned: None,
        })
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// The sub-environments, e.g. to inspect their state.
    pub fn envs(&self) -> impl Iterator<Item = &dyn Env> {
        self.slots.iter().map(|s| s.env.as_ref())
    }

    /// Worker threads currently alive (always 0 for the sequential backend).
    pub fn live_workers(&self) -> usize {
        match &self.executor {
            Executor::Sequential => 0,
            #[cfg(feature = "parallel")]
            Executor::Pool(p) => p.live_workers(),
        }
    }

    fn check_open(&self) -> Result<(), EnvError> {
        if let Some(e) = &self.poisoned {
            return Err(e.clone());
        }
        if self.closed {
            return Err(EnvError::EnvClosed);
        }
        Ok(())
    }

    fn dispatch(&mut self, messages: Vec<WorkerMessage>) -> Vec<WorkerReply> {
        match &self.executor {
            Executor::Sequential => self
                .slots
                .iter_mut()
                .zip(messages)
                .map(|(s, m)| serve(s, m))
                .collect(),
            #[cfg(feature = "parallel")]
            Executor::Pool(p) => p.dispatch(&mut self.slots, messages),
        }
    }

    /// Sends one command per sub-environment and returns the payloads in index
    /// order, or the lowest-index error. Worker failures poison the vector env.
    fn round(&mut self, commands: Vec<WorkerCommand>) -> Result<Vec<ReplyPayload>, EnvError> {
        let messages = commands
            .into_iter()
            .enumerate()
            .map(|(index, command)| WorkerMessage { index, command })
            .collect();
        let replies = self.dispatch(messages);
        let mut payloads = Vec::with_capacity(replies.len());
        for (i, reply) in replies.into_iter().enumerate() {
            debug_assert_eq!(reply.index, i);
            match reply.result {
                Ok(p) => payloads.push(p),
                Err(e) => {
                    if matches!(e, EnvError::WorkerFailure { .. }) {
                        self.poisoned = Some(e.clone());
                    }
                    return Err(e);
                }
            }
        }
        Ok(payloads)
    }

    fn shutdown_workers(&mut self) {
        #[cfg(feature = "parallel")]
        if let Executor::Pool(p) = &mut self.executor {
            if !p.shutdown(pool::CLOSE_DEADLINE) {
                warn!(
                    "vector workers did not exit within {:?}",
                    pool::CLOSE_DEADLINE
                );
            }
        }
        self.executor = Executor::Sequential;
    }
}

impl VecEnv for VectorEnv {
    fn num_envs(&self) -> usize {
        self.slots.len()
    }

    fn single_observation_space(&self) -> &Space {
        &self.single_observation_space
    }

    fn single_action_space(&self) -> &Space {
        &self.single_action_space
    }

    fn observation_space(&self) -> &Space {
        &self.observation_space
    }

    fn action_space(&self) -> &Space {
        &self.action_space
    }

    fn reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<VectorResetResult, EnvError> {
        self.check_open()?;
        let n = self.slots.len();
        let seeds: Vec<Option<u64>> = match seed {
            Some(s) => derive_child_seeds(s, n).into_iter().map(Some).collect(),
            None => vec![None; n],
        };
        let commands = seeds
            .into_iter()
            .map(|seed| WorkerCommand::Reset {
                seed,
                options: options.cloned(),
            })
            .collect();
        let mut observations = Vec::with_capacity(n);
        let mut infos = Vec::with_capacity(n);
        for payload in self.round(commands)? {
            if let ReplyPayload::Reset(r) = payload {
                observations.push(r.observation);
                infos.push(r.info);
            }
        }
        Ok(VectorResetResult {
            observations: concatenate(&self.single_observation_space, &observations)?,
            infos,
        })
    }

    fn step(&mut self, actions: &Value) -> Result<VectorStepResult, EnvError> {
        self.check_open()?;
        if !self.action_space.contains(actions) {
            return Err(EnvError::InvalidAction(format!(
                "{actions:?} is not in {}",
                self.action_space
            )));
        }
        let commands = iterate(&self.single_action_space, actions)?
            .into_iter()
            .map(|action| WorkerCommand::Step { action })
            .collect();
        let n = self.slots.len();
        let mut out = VectorStepResult {
            observations: Value::Tuple(Vec::new()),
            rewards: Vec::with_capacity(n),
            terminateds: Vec::with_capacity(n),
            truncateds: Vec::with_capacity(n),
            infos: Vec::with_capacity(n),
        };
        let mut observations = Vec::with_capacity(n);
        for payload in self.round(commands)? {
            if let ReplyPayload::Step(r) = payload {
                observations.push(r.observation);
                out.rewards.push(r.reward);
                out.terminateds.push(r.terminated);
                out.truncateds.push(r.truncated);
                out.infos.push(r.info);
            }
        }
        out.observations = concatenate(&self.single_observation_space, &observations)?;
        Ok(out)
    }

    fn render(&mut self) -> Result<Vec<Option<RenderOutput>>, EnvError> {
        self.check_open()?;
        let commands = vec![WorkerCommand::Render; self.slots.len()];
        Ok(self
            .round(commands)?
            .into_iter()
            .filter_map(|p| match p {
                ReplyPayload::Render(r) => Some(r),
                _ => None,
            })
            .collect())
    }

    fn close(&mut self) {
        if self.closed {
            return;
        }
        self.closed = true;
        if self.poisoned.is_none() {
            let commands = vec![WorkerCommand::Close; self.slots.len()];
            if let Err(e) = self.round(commands) {
                warn!("closing vector env: {e}");
            }
        }
        self.shutdown_workers();
    }
}

impl Drop for VectorEnv {
    fn drop(&mut self) {
        self.close();
    }
}

/// Builds `num_envs` copies of a registered environment.
pub fn make_vec(id: &str, num_envs: usize, backend: Backend) -> Result<VectorEnv, EnvError> {
    let spec = registry::registry().spec(id)?;
    make_vec_from_spec(&spec, num_envs, backend)
}

pub fn make_vec_from_spec(
    spec: &EnvSpec,
    num_envs: usize,
    backend: Backend,
) -> Result<VectorEnv, EnvError> {
    if num_envs == 0 {
        return Err(EnvError::InvalidArgument(
            "num_envs must be at least 1".into(),
        ));
    }
    let envs = (0..num_envs)
        .map(|_| registry::registry().make_from_spec(spec, MakeOptions::default()))
        .collect::<Result<Vec<_>, _>>()?;
    VectorEnv::new(envs, backend)
}

/// Vector counterpart of `RecordEpisodeStatistics`: on the step where a
/// sub-environment's episode ends, its info gains `"episode"`. Autoreset
/// steps do not count toward the next episode.
pub struct VecRecordEpisodeStatistics<V> {
    inner: V,
    returns: Vec<f64>,
    lengths: Vec<u64>,
    starts: Vec<Instant>,
    pending_reset: Vec<bool>,
}

impl<V: VecEnv> VecRecordEpisodeStatistics<V> {
    pub fn new(inner: V) -> Self {
        let n = inner.num_envs();
        Self {
            inner,
            returns: vec![0.0; n],
            lengths: vec![0; n],
            starts: vec![Instant::now(); n],
            pending_reset: vec![false; n],
        }
    }

    pub fn inner(&self) -> &V {
        &self.inner
    }

    pub fn into_inner(self) -> V {
        self.inner
    }

    fn restart(&mut self, i: usize) {
        self.returns[i] = 0.0;
        self.lengths[i] = 0;
        self.starts[i] = Instant::now();
        self.pending_reset[i] = false;
    }
}

impl<V: VecEnv> VecEnv for VecRecordEpisodeStatistics<V> {
    fn num_envs(&self) -> usize {
        self.inner.num_envs()
    }

    fn single_observation_space(&self) -> &Space {
        self.inner.single_observation_space()
    }

    fn single_action_space(&self) -> &Space {
        self.inner.single_action_space()
    }

    fn observation_space(&self) -> &Space {
        self.inner.observation_space()
    }

    fn action_space(&self) -> &Space {
        self.inner.action_space()
    }

    fn reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<VectorResetResult, EnvError> {
        let r = self.inner.reset(seed, options)?;
        for i in 0..self.returns.len() {
            self.restart(i);
        }
        Ok(r)
    }

    fn step(&mut self, actions: &Value) -> Result<VectorStepResult, EnvError> {
        let mut r = self.inner.step(actions)?;
        for i in 0..self.returns.len() {
            if self.pending_reset[i] {
                self.restart(i);
                continue;
            }
            self.returns[i] += r.rewards[i];
            self.lengths[i] += 1;
            if r.terminateds[i] || r.truncateds[i] {
                let stats = EpisodeStats {
                    episode_return: self.returns[i],
                    episode_length: self.lengths[i],
                    episode_time: self.starts[i].elapsed().as_secs_f64(),
                };
                r.infos[i].insert(EPISODE_KEY.into(), stats.to_info());
                self.pending_reset[i] = true;
            }
        }
        Ok(r)
    }

    fn render(&mut self) -> Result<Vec<Option<RenderOutput>>, EnvError> {
        self.inner.render()
    }

    fn close(&mut self) {
        self.inner.close()
    }
}
