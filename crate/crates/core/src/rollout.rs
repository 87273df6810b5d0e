//! Random-policy rollouts and backend throughput runs, as driven by the CLI.

use std::time::Instant;

use serde_json::{json, Map as JsonMap, Value as Json};

use crate::env::{EnvError, RenderMode};
use crate::registry::{self, MakeOptions};
use crate::seeding::Rng;
use crate::spaces::Value;
use crate::vector::{make_vec, Backend, VecEnv};

const POLICY_SEED_SALT: u64 = 0x706f_6c69_6379;

/// Generator for the random policy. Kept apart from the environment stream
/// seeded by the same user seed.
pub fn policy_rng(seed: u64) -> Rng {
    Rng::from_seed(seed ^ POLICY_SEED_SALT)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutReport {
    pub env_id: String,
    pub seed: u64,
    pub total_steps: u64,
    pub episodes_completed: u64,
    pub episode_returns: Vec<f64>,
    pub episode_lengths: Vec<u64>,
    /// Steps taken in the episode still running at the end.
    pub partial_episode_length: u64,
    /// Observations outside the observation space or other broken invariants.
    pub contract_violations: u64,
    pub wall_time_s: f64,
    pub steps_per_second: f64,
}

impl RolloutReport {
    /// Sorted-key JSON. Timing fields are left out when `timing` is false.
    pub fn to_json(&self, timing: bool) -> Json {
        let mut m = JsonMap::new();
        m.insert("env_id".into(), json!(self.env_id));
        m.insert("seed".into(), json!(self.seed));
        m.insert("total_steps".into(), json!(self.total_steps));
        m.insert("episodes_completed".into(), json!(self.episodes_completed));
        m.insert("episode_returns".into(), json!(self.episode_returns));
        m.insert("episode_lengths".into(), json!(self.episode_lengths));
        m.insert(
            "partial_episode_length".into(),
            json!(self.partial_episode_length),
        );
        m.insert(
            "contract_violations".into(),
            json!(self.contract_violations),
        );
        if timing {
            m.insert("wall_time_s".into(), json!(self.wall_time_s));
            m.insert("steps_per_second".into(), json!(self.steps_per_second));
        }
        Json::Object(m)
    }
}

/// Reset with `seed`, take `steps` uniformly random actions, reset whenever
/// an episode ends, then close.
pub fn run_rollout(
    id: &str,
    steps: u64,
    seed: u64,
    render_mode: Option<RenderMode>,
) -> Result<RolloutReport, EnvError> {
    let options = MakeOptions {
        render_mode,
        ..MakeOptions::default()
    };
    let mut env = registry::make_with(id, options)?;
    let mut policy = policy_rng(seed);
    let obs_space = env.observation_space().clone();
    let action_space = env.action_space().clone();

    let start = Instant::now();
    let mut report = RolloutReport {
        env_id: env
            .spec()
            .map(|s| s.id.to_string())
            .unwrap_or_else(|| id.to_string()),
        seed,
        total_steps: 0,
        episodes_completed: 0,
        episode_returns: Vec::new(),
        episode_lengths: Vec::new(),
        partial_episode_length: 0,
        contract_violations: 0,
        wall_time_s: 0.0,
        steps_per_second: 0.0,
    };
    let first = env.reset(Some(seed), None)?;
    report.contract_violations += u64::from(!obs_space.contains(&first.observation));
    if render_mode.is_some() {
        emit(env.render()?);
    }
    let (mut ret, mut len) = (0.0, 0u64);
    for _ in 0..steps {
        let action = action_space.sample(&mut policy);
        let r = env.step(&action)?;
        report.total_steps += 1;
        report.contract_violations +=
            u64::from(!obs_space.contains(&r.observation) || !r.reward.is_finite());
        ret += r.reward;
        len += 1;
        if render_mode.is_some() {
            emit(env.render()?);
        }
        if r.done() {
            report.episodes_completed += 1;
            report.episode_returns.push(ret);
            report.episode_lengths.push(len);
            (ret, len) = (0.0, 0);
            let again = env.reset(None, None)?;
            report.contract_violations += u64::from(!obs_space.contains(&again.observation));
        }
    }
    env.close();
    report.partial_episode_length = len;
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.steps_per_second = report.total_steps as f64 / report.wall_time_s.max(f64::EPSILON);
    Ok(report)
}

fn emit(output: Option<crate::render::RenderOutput>) {
    // `human` mode has already been shown by the environment's sink.
    if let Some(out) = output {
        match out {
            crate::render::RenderOutput::Text(t) => println!("{t}"),
            crate::render::RenderOutput::Frame(f) => {
                println!("[frame {}x{}]", f.width(), f.height())
            }
        }
    }
}

/// Order-sensitive FNV-1a digest of everything a vector env returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Digest(u64);

impl Default for Digest {
    fn default() -> Self {
        Digest(0xcbf2_9ce4_8422_2325)
    }
}

impl Digest {
    pub fn value(self) -> u64 {
        self.0
    }

    fn bytes(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn u64(&mut self, x: u64) {
        self.bytes(&x.to_le_bytes());
    }

    pub fn value_tree(&mut self, v: &Value) {
        match v {
            Value::Real(a) => {
                self.u64(0);
                a.shape().iter().for_each(|&d| self.u64(d as u64));
                a.data().iter().for_each(|x| self.u64(x.to_bits()));
            }
            Value::Integer(a) => {
                self.u64(1);
                a.shape().iter().for_each(|&d| self.u64(d as u64));
                a.data().iter().for_each(|&x| self.u64(x as u64));
            }
            Value::Discrete(x) => {
                self.u64(2);
                self.u64(*x as u64);
            }
            Value::Text(s) => {
                self.u64(3);
                self.bytes(s.as_bytes());
            }
            Value::Tuple(items) => {
                self.u64(4);
                self.u64(items.len() as u64);
                items.iter().for_each(|i| self.value_tree(i));
            }
            Value::Map(m) => {
                self.u64(5);
                for (k, v) in m {
                    self.bytes(k.as_bytes());
                    self.value_tree(v);
                }
            }
            Value::Graph(g) => {
                self.u64(6);
                g.nodes.iter().for_each(|n| self.value_tree(n));
                g.edges.iter().for_each(|e| self.value_tree(e));
                for &(a, b) in &g.edge_links {
                    self.u64(a as u64);
                    self.u64(b as u64);
                }
            }
            Value::OneOf(i, child) => {
                self.u64(7);
                self.u64(*i as u64);
                self.value_tree(child);
            }
        }
    }

    pub fn step(&mut self, r: &crate::vector::VectorStepResult) {
        self.value_tree(&r.observations);
        r.rewards.iter().for_each(|x| self.u64(x.to_bits()));
        r.terminateds.iter().for_each(|&t| self.u64(t as u64));
        r.truncateds.iter().for_each(|&t| self.u64(t as u64));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackendRun {
    pub backend: Backend,
    pub digest: Digest,
    pub wall_time_s: f64,
    /// Sub-environment transitions per second.
    pub steps_per_second: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub env_id: String,
    pub num_envs: usize,
    /// Batched steps per backend.
    pub steps: u64,
    pub seed: u64,
    pub runs: Vec<BackendRun>,
}

impl BenchReport {
    pub fn outputs_identical(&self) -> bool {
        self.runs.windows(2).all(|w| w[0].digest == w[1].digest)
    }

    pub fn to_json(&self, timing: bool) -> Json {
        let runs: Vec<Json> = self
            .runs
            .iter()
            .map(|r| {
                let mut m = JsonMap::new();
                m.insert("backend".into(), json!(r.backend.as_str()));
                m.insert("digest".into(), json!(format!("{:016x}", r.digest.value())));
                if timing {
                    m.insert("wall_time_s".into(), json!(r.wall_time_s));
                    m.insert("steps_per_second".into(), json!(r.steps_per_second));
                }
                Json::Object(m)
            })
            .collect();
        json!({
            "env_id": self.env_id,
            "num_envs": self.num_envs,
            "steps": self.steps,
            "seed": self.seed,
            "runs": runs,
            "outputs_identical": self.outputs_identical(),
        })
    }
}

/// Runs `steps` batched random steps on one backend and digests the results.
pub fn run_backend(
    id: &str,
    num_envs: usize,
    steps: u64,
    seed: u64,
    backend: Backend,
) -> Result<BackendRun, EnvError> {
    let mut venv = make_vec(id, num_envs, backend)?;
    let mut policy = policy_rng(seed);
    let action_space = venv.action_space().clone();
    let mut digest = Digest::default();
    let start = Instant::now();
    let reset = venv.reset(Some(seed), None)?;
    digest.value_tree(&reset.observations);
    for _ in 0..steps {
        let actions = action_space.sample(&mut policy);
        digest.step(&venv.step(&actions)?);
    }
    venv.close();
    let wall_time_s = start.elapsed().as_secs_f64();
    Ok(BackendRun {
        backend,
        digest,
        wall_time_s,
        steps_per_second: (steps * num_envs as u64) as f64 / wall_time_s.max(f64::EPSILON),
    })
}

/// Runs the sequential then the parallel backend on the same seed and actions.
pub fn run_bench(
    id: &str,
    num_envs: usize,
    steps: u64,
    seed: u64,
) -> Result<BenchReport, EnvError> {
    let runs = [Backend::Sequential, Backend::Parallel]
        .into_iter()
        .map(|b| run_backend(id, num_envs, steps, seed, b))
        .collect::<Result<Vec<_>, _>>()?;
    let env_id = registry::registry().spec(id)?.id.to_string();
    Ok(BenchReport {
        env_id,
        num_envs,
        steps,
        seed,
        runs,
    })
}
