//! Generic checks every environment should pass, usable from any test
//! harness. Each check returns `Err` with a description of the first
//! mismatch.
//!
//! The vector check compares against a plain loop over N independently made
//! environments, written here without going through [`crate::vector`].

use crate::env::{Env, EnvError, Info, Metadata, ResetResult, StepResult};
use crate::registry::{self, EnvSpec, MakeOptions};
use crate::seeding::{derive_child_seeds, Rng};
use crate::spaces::{
    self, batch_space, concatenate, flatdim, flatten, iterate, unflatten, Space, Value,
};
use crate::vector::{make_vec, Backend, VecEnv, VectorResetResult, VectorStepResult};

/// A reset followed by random steps. Episodes that end are restarted with an
/// unseeded reset, recorded in `resets`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub initial: ResetResult,
    pub steps: Vec<StepResult>,
    pub resets: Vec<ResetResult>,
}

/// Drives `env` with uniformly random actions drawn from `Rng::from_seed(action_seed)`.
pub fn random_trajectory(
    env: &mut dyn Env,
    seed: u64,
    steps: usize,
    action_seed: u64,
) -> Result<Trajectory, EnvError> {
    let mut policy = Rng::from_seed(action_seed);
    let action_space = env.action_space().clone();
    let mut t = Trajectory {
        initial: env.reset(Some(seed), None)?,
        steps: Vec::with_capacity(steps),
        resets: Vec::new(),
    };
    for _ in 0..steps {
        let r = env.step(&action_space.sample(&mut policy))?;
        let done = r.done();
        t.steps.push(r);
        if done {
            t.resets.push(env.reset(None, None)?);
        }
    }
    Ok(t)
}

fn make(id: &str) -> Result<Box<dyn Env>, String> {
    registry::make(id).map_err(|e| format!("{id}: {e}"))
}

/// Observations stay inside the observation space, rewards are finite and
/// an out-of-space action is rejected with `InvalidAction`.
pub fn check_contract(id: &str, seed: u64, steps: usize) -> Result<(), String> {
    let mut env = make(id)?;
    let space = env.observation_space().clone();
    let t = random_trajectory(env.as_mut(), seed, steps, seed).map_err(|e| e.to_string())?;
    let observations = std::iter::once(&t.initial.observation)
        .chain(t.steps.iter().map(|s| &s.observation))
        .chain(t.resets.iter().map(|r| &r.observation));
    if let Some(bad) = observations.into_iter().find(|o| !space.contains(o)) {
        return Err(format!("{id}: observation {bad:?} is outside {space}"));
    }
    if let Some(bad) = t.steps.iter().find(|s| !s.reward.is_finite()) {
        return Err(format!("{id}: non-finite reward {}", bad.reward));
    }
    let foreign = Value::Text("not an action".into());
    match env.step(&foreign) {
        Err(EnvError::InvalidAction(_)) => Ok(()),
        other => Err(format!("{id}: foreign action gave {other:?}")),
    }
}

/// Two instances under identical seeds and action scripts produce identical
/// trajectories; reset with the same seed twice gives the same observation;
/// an unseeded reset after a seeded one matches across instances.
pub fn check_determinism(id: &str, seeds: &[u64], steps: usize) -> Result<(), String> {
    for &seed in seeds {
        let (mut a, mut b) = (make(id)?, make(id)?);
        let ta =
            random_trajectory(a.as_mut(), seed, steps, seed ^ 0xa5a5).map_err(|e| e.to_string())?;
        let tb =
            random_trajectory(b.as_mut(), seed, steps, seed ^ 0xa5a5).map_err(|e| e.to_string())?;
        if ta != tb {
            return Err(format!("{id}: trajectories differ for seed {seed}"));
        }

        let first = a.reset(Some(seed), None).map_err(|e| e.to_string())?;
        let again = a.reset(Some(seed), None).map_err(|e| e.to_string())?;
        if first != again {
            return Err(format!("{id}: reset(seed={seed}) is not repeatable"));
        }
        let continued_a = a.reset(None, None).map_err(|e| e.to_string())?;
        b.reset(Some(seed), None).map_err(|e| e.to_string())?;
        let continued_b = b.reset(None, None).map_err(|e| e.to_string())?;
        if continued_a != continued_b {
            return Err(format!(
                "{id}: unseeded reset after seed {seed} does not continue the stream"
            ));
        }
    }
    Ok(())
}

/// make, then serialize the attached spec, deserialize it and make again:
/// both instances must produce identical trajectories.
pub fn check_spec_round_trip(id: &str, seeds: &[u64], steps: usize) -> Result<(), String> {
    let mut original = make(id)?;
    let spec = original
        .spec()
        .cloned()
        .ok_or_else(|| format!("{id}: made env carries no spec"))?;
    let text = spec.to_json().map_err(|e| e.to_string())?;
    let restored_spec = EnvSpec::from_json(&text).map_err(|e| e.to_string())?;
    if restored_spec != spec {
        return Err(format!("{id}: spec changed across serialization: {text}"));
    }
    let mut restored = registry::make_from_spec(&restored_spec).map_err(|e| e.to_string())?;
    if restored.spec() != Some(&spec) {
        return Err(format!("{id}: remade env reports a different spec"));
    }
    for &seed in seeds {
        let a = random_trajectory(original.as_mut(), seed, steps, seed.wrapping_add(7))
            .map_err(|e| e.to_string())?;
        let b = random_trajectory(restored.as_mut(), seed, steps, seed.wrapping_add(7))
            .map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{id}: round-tripped spec diverges for seed {seed}"));
        }
    }
    Ok(())
}

/// Random batched actions for `steps` calls, from `Rng::from_seed(action_seed)`.
pub fn action_script(
    single_action_space: &Space,
    num_envs: usize,
    steps: usize,
    action_seed: u64,
) -> Vec<Value> {
    let batched = batch_space(single_action_space, num_envs);
    let mut rng = Rng::from_seed(action_seed);
    (0..steps).map(|_| batched.sample(&mut rng)).collect()
}

/// Reference results: N environments made independently, reset with child
/// seeds, with ended episodes reset one call later (reward 0, flags false).
pub fn independent_envs_oracle(
    id: &str,
    num_envs: usize,
    seed: u64,
    actions: &[Value],
) -> Result<(VectorResetResult, Vec<VectorStepResult>), String> {
    let mut envs = (0..num_envs)
        .map(|_| make(id))
        .collect::<Result<Vec<_>, _>>()?;
    let obs_space = envs[0].observation_space().clone();
    let act_space = envs[0].action_space().clone();
    let mut initial = Vec::new();
    let mut infos = Vec::new();
    for (env, child) in envs.iter_mut().zip(derive_child_seeds(seed, num_envs)) {
        let r = env.reset(Some(child), None).map_err(|e| e.to_string())?;
        initial.push(r.observation);
        infos.push(r.info);
    }
    let reset = VectorResetResult {
        observations: concatenate(&obs_space, &initial).map_err(|e| e.to_string())?,
        infos,
    };

    let mut ended = vec![false; num_envs];
    let mut results = Vec::with_capacity(actions.len());
    for batch in actions {
        let split = iterate(&act_space, batch).map_err(|e| e.to_string())?;
        let mut step = VectorStepResult {
            observations: Value::Tuple(Vec::new()),
            rewards: Vec::new(),
            terminateds: Vec::new(),
            truncateds: Vec::new(),
            infos: Vec::new(),
        };
        let mut observations = Vec::new();
        for i in 0..num_envs {
            let (obs, reward, term, trunc, info): (Value, f64, bool, bool, Info) = if ended[i] {
                let r = envs[i].reset(None, None).map_err(|e| e.to_string())?;
                ended[i] = false;
                (r.observation, 0.0, false, false, r.info)
            } else {
                let r = envs[i].step(&split[i]).map_err(|e| e.to_string())?;
                ended[i] = r.done();
                (r.observation, r.reward, r.terminated, r.truncated, r.info)
            };
            observations.push(obs);
            step.rewards.push(reward);
            step.terminateds.push(term);
            step.truncateds.push(trunc);
            step.infos.push(info);
        }
        step.observations = concatenate(&obs_space, &observations).map_err(|e| e.to_string())?;
        results.push(step);
    }
    Ok((reset, results))
}

/// Runs a vector env over the action script and returns every result.
pub fn vector_run(
    id: &str,
    num_envs: usize,
    seed: u64,
    actions: &[Value],
    backend: Backend,
) -> Result<(VectorResetResult, Vec<VectorStepResult>), String> {
    let mut venv = make_vec(id, num_envs, backend).map_err(|e| e.to_string())?;
    let reset = venv.reset(Some(seed), None).map_err(|e| e.to_string())?;
    let space = venv.observation_space().clone();
    let mut results = Vec::with_capacity(actions.len());
    for (t, a) in actions.iter().enumerate() {
        let r = venv.step(a).map_err(|e| format!("step {t}: {e}"))?;
        if !space.contains(&r.observations) {
            return Err(format!(
                "{id}: step {t} observations leave the batched space"
            ));
        }
        results.push(r);
    }
    venv.close();
    Ok((reset, results))
}

fn first_difference(a: &[VectorStepResult], b: &[VectorStepResult]) -> Option<usize> {
    a.iter()
        .zip(b)
        .position(|(x, y)| x != y)
        .or((a.len() != b.len()).then(|| a.len().min(b.len())))
}

/// The sequential backend matches [`independent_envs_oracle`] exactly.
pub fn check_vector_oracle(
    id: &str,
    num_envs: usize,
    steps: usize,
    seed: u64,
) -> Result<(), String> {
    let single = make(id)?.action_space().clone();
    let actions = action_script(&single, num_envs, steps, seed ^ 0x5eed);
    let expected = independent_envs_oracle(id, num_envs, seed, &actions)?;
    let got = vector_run(id, num_envs, seed, &actions, Backend::Sequential)?;
    if got.0 != expected.0 {
        return Err(format!(
            "{id} N={num_envs}: reset differs from independent envs"
        ));
    }
    match first_difference(&got.1, &expected.1) {
        Some(t) => Err(format!(
            "{id} N={num_envs}: step {t} differs from independent envs"
        )),
        None => Ok(()),
    }
}

/// Parallel and sequential backends return identical results.
pub fn check_backend_equivalence(
    id: &str,
    num_envs: usize,
    steps: usize,
    seed: u64,
) -> Result<(), String> {
    let single = make(id)?.action_space().clone();
    let actions = action_script(&single, num_envs, steps, seed ^ 0x5eed);
    let seq = vector_run(id, num_envs, seed, &actions, Backend::Sequential)?;
    let par = vector_run(id, num_envs, seed, &actions, Backend::Parallel)?;
    if seq.0 != par.0 {
        return Err(format!("{id} N={num_envs}: backends differ at reset"));
    }
    match first_difference(&seq.1, &par.1) {
        Some(t) => Err(format!("{id} N={num_envs}: backends differ at step {t}")),
        None => Ok(()),
    }
}

/// Environment that never terminates on its own, or terminates exactly on
/// step `terminate_at`. Observations count steps since reset.
#[derive(Debug)]
pub struct StepCounter {
    steps: i64,
    terminate_at: Option<i64>,
    observation_space: Space,
    action_space: Space,
    metadata: Metadata,
}

impl StepCounter {
    pub fn new(terminate_at: Option<i64>) -> Self {
        Self {
            steps: 0,
            terminate_at,
            observation_space: Space::Discrete(spaces::Discrete::new(1 << 20, 0).expect("n >= 1")),
            action_space: Space::discrete(1).expect("n >= 1"),
            metadata: Metadata::new(Vec::new(), 0),
        }
    }
}

impl Env for StepCounter {
    fn observation_space(&self) -> &Space {
        &self.observation_space
    }

    fn action_space(&self) -> &Space {
        &self.action_space
    }

    fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    fn reset(
        &mut self,
        _seed: Option<u64>,
        _options: Option<&Info>,
    ) -> Result<ResetResult, EnvError> {
        self.steps = 0;
        Ok(ResetResult {
            observation: Value::Discrete(0),
            info: Info::new(),
        })
    }

    fn step(&mut self, _action: &Value) -> Result<StepResult, EnvError> {
        self.steps += 1;
        Ok(StepResult {
            observation: Value::Discrete(self.steps),
            reward: 1.0,
            terminated: self.terminate_at == Some(self.steps),
            truncated: false,
            info: Info::new(),
        })
    }
}

/// Checks one space: sampled values are members, flatten/unflatten invert
/// exactly, flatdim matches the flattened length, and concatenate/iterate
/// invert each other.
pub fn check_space_algebra(
    space: &Space,
    samples: usize,
    batch: usize,
    rng: &mut Rng,
) -> Result<(), String> {
    let drawn: Vec<Value> = (0..samples).map(|_| space.sample(rng)).collect();
    if let Some(v) = drawn.iter().find(|v| !space.contains(v)) {
        return Err(format!("sample {v:?} is not in {space}"));
    }
    match flatdim(space) {
        Ok(dim) => {
            for v in &drawn {
                let flat = flatten(space, v).map_err(|e| e.to_string())?;
                if flat.len() != dim {
                    return Err(format!(
                        "flatten gave {} values, flatdim says {dim} for {space}",
                        flat.len()
                    ));
                }
                let back = unflatten(space, &flat).map_err(|e| e.to_string())?;
                if !back.bit_eq(v) {
                    return Err(format!("unflatten(flatten({v:?})) = {back:?} in {space}"));
                }
            }
        }
        Err(spaces::SpaceError::UnflattenableSpace(_)) => {}
        Err(e) => return Err(e.to_string()),
    }
    for chunk in drawn.chunks(batch.max(1)) {
        let stacked = concatenate(space, chunk).map_err(|e| e.to_string())?;
        if !batch_space(space, chunk.len()).contains(&stacked) {
            return Err(format!("stacked batch is not in batch_space of {space}"));
        }
        let split = iterate(space, &stacked).map_err(|e| e.to_string())?;
        if split.len() != chunk.len() || split.iter().zip(chunk).any(|(a, b)| !a.bit_eq(b)) {
            return Err(format!(
                "iterate(concatenate(..)) changed values in {space}"
            ));
        }
    }
    Ok(())
}

/// Ids of every registered environment.
pub fn registered_ids() -> Vec<String> {
    registry::list_registered(None)
        .into_iter()
        .map(|s| s.id.to_string())
        .collect()
}

/// Makes `id` with a step limit override.
pub fn make_limited(id: &str, max_episode_steps: u32) -> Result<Box<dyn Env>, String> {
    let options = MakeOptions {
        max_episode_steps: Some(max_episode_steps),
        ..MakeOptions::default()
    };
    registry::make_with(id, options).map_err(|e| e.to_string())
}
