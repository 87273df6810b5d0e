//! Acceptance run: one PASS/FAIL line per primary criterion.
//!
//! Tolerances and limits are pinned below. Runtime limits are measured on
//! the build under test.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gymkit::conformance::{
    check_backend_equivalence, check_determinism, check_space_algebra, check_spec_round_trip,
    check_vector_oracle, registered_ids, StepCounter,
};
use gymkit::envs::{
    CartPole, CartPoleParams, FrozenLake, LakeMap, Pendulum, PendulumParams, RIGHT,
    START_STATE_OPTION,
};
use gymkit::seeding::Rng;
use gymkit::spaces::{flatdim, BoxSpace, DType, Discrete, MultiDiscrete, Space};
use gymkit::wrappers::time_limit;
use gymkit::{Env, Info, InfoValue, Value};
use serde_json::Value as Json;

const ROLLOUT_LIMIT: Duration = Duration::from_secs(1);
const SPACES_LIMIT: Duration = Duration::from_secs(10);
const VECTOR_LIMIT: Duration = Duration::from_secs(30);
const DYNAMICS_TOL: f64 = 1e-12;
const BRANCH_TOL: f64 = 0.02;
const BRANCH_DRAWS: usize = 30_000;
const SEEDS: u64 = 20;

type Check = Result<String, String>;

fn gymkit(args: &[&str]) -> Result<(std::process::Output, Duration), String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_gymkit"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out, start.elapsed()))
}

fn listing_one_replay() -> Check {
    let args = [
        "rollout",
        "--env",
        "CartPole-v1",
        "--steps",
        "1000",
        "--seed",
        "42",
        "--format",
        "json",
    ];
    let (out, elapsed) = gymkit(&args)?;
    if !out.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let doc: Json = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let (steps, episodes, violations) = (
        doc["total_steps"].as_u64(),
        doc["episodes_completed"].as_u64(),
        doc["contract_violations"].as_u64(),
    );
    if steps != Some(1000) || episodes < Some(2) || violations != Some(0) {
        return Err(format!(
            "steps {steps:?}, episodes {episodes:?}, violations {violations:?}"
        ));
    }
    if elapsed >= ROLLOUT_LIMIT {
        return Err(format!("took {elapsed:?}, limit {ROLLOUT_LIMIT:?}"));
    }
    Ok(format!(
        "1000 steps, {} episodes, 0 violations, {elapsed:.2?} (< {ROLLOUT_LIMIT:?})",
        episodes.unwrap()
    ))
}

fn determinism_suite() -> Check {
    let seeds: Vec<u64> = (0..SEEDS).collect();
    let ids = registered_ids();
    for id in &ids {
        check_determinism(id, &seeds, 500)?;
    }
    Ok(format!("{} envs x {SEEDS} seeds x 500 steps bit-identical; seeded resets repeat; unseeded resets continue", ids.len()))
}

fn one_of_each_kind() -> Vec<Space> {
    let unit = Space::real_box(0.0, 1.0, vec![2]).unwrap();
    vec![
        Space::Box(
            BoxSpace::new(
                vec![-1.0, f64::NEG_INFINITY, 0.0],
                vec![1.0, 0.0, f64::INFINITY],
                vec![3],
                DType::Float64,
            )
            .unwrap(),
        ),
        Space::Box(BoxSpace::uniform(-3.0, 3.0, vec![2, 2], DType::Int64).unwrap()),
        Space::Discrete(Discrete::new(5, -2).unwrap()),
        Space::MultiDiscrete(MultiDiscrete::with_start(vec![2, 3], vec![0, 10]).unwrap()),
        Space::multi_binary(4).unwrap(),
        Space::text(0, 6).unwrap(),
        Space::product(vec![Space::discrete(2).unwrap(), unit.clone()]).unwrap(),
        Space::mapping(vec![
            ("a", Space::discrete(3).unwrap()),
            ("b", unit.clone()),
        ])
        .unwrap(),
        Space::sequence(Space::product(vec![Space::discrete(4).unwrap(), unit.clone()]).unwrap()),
        Space::graph(unit.clone(), Some(Space::discrete(3).unwrap())).unwrap(),
        Space::one_of(vec![Space::discrete(3).unwrap(), unit]).unwrap(),
    ]
}

fn space_algebra_suite() -> Check {
    let start = Instant::now();
    let spaces = one_of_each_kind();
    let mut rng = Rng::from_seed(2024);
    for space in &spaces {
        check_space_algebra(space, 1000, 8, &mut rng)
            .map_err(|e| format!("{}: {e}", space.kind()))?;
    }
    let parts = [
        Space::discrete(3).unwrap(),
        Space::real_box(-1.0, 1.0, vec![2, 2]).unwrap(),
        Space::multi_binary(5).unwrap(),
    ];
    let dims: usize = parts.iter().map(|s| flatdim(s).unwrap()).sum();
    let product = flatdim(&Space::product(parts.to_vec()).unwrap()).map_err(|e| e.to_string())?;
    let mapping = flatdim(
        &Space::mapping(vec![
            ("x", parts[0].clone()),
            ("y", parts[1].clone()),
            ("z", parts[2].clone()),
        ])
        .unwrap(),
    )
    .map_err(|e| e.to_string())?;
    if product != dims || mapping != dims {
        return Err(format!(
            "flatdim not additive: {product} / {mapping} vs {dims}"
        ));
    }
    let kinds: std::collections::BTreeSet<&str> = spaces.iter().map(Space::kind).collect();
    let elapsed = start.elapsed();
    if kinds.len() != 10 || elapsed >= SPACES_LIMIT {
        return Err(format!("{} kinds, {elapsed:?}", kinds.len()));
    }
    Ok(format!("10 kinds x 1000 samples: membership, flatten inversion, flatdim additivity, batch inversion; {elapsed:.2?} (< {SPACES_LIMIT:?})"))
}

fn spec_round_trip() -> Check {
    let seeds: Vec<u64> = (0..SEEDS).collect();
    let ids = registered_ids();
    for id in &ids {
        check_spec_round_trip(id, &seeds, 200)?;
    }
    Ok(format!(
        "{} envs x {SEEDS} seeds x 200 steps identical after serialize/deserialize/make",
        ids.len()
    ))
}

fn time_limit_exactness() -> Check {
    for max in [1u32, 3, 100] {
        for terminal_at_limit in [false, true] {
            let stub = StepCounter::new(terminal_at_limit.then_some(max as i64));
            let mut env = time_limit(stub, max);
            env.reset(None, None).map_err(|e| e.to_string())?;
            let mut n = 0;
            let last = loop {
                n += 1;
                let r = env.step(&Value::Discrete(0)).map_err(|e| e.to_string())?;
                if r.done() || n > max {
                    break r;
                }
            };
            if n != max || !last.truncated || last.terminated != terminal_at_limit {
                return Err(format!("max {max}: ended at {n} with {last:?}"));
            }
        }
    }
    Ok(
        "truncated at exactly max for max in {1, 3, 100}; terminal at the limit sets both flags"
            .into(),
    )
}

fn vector_equivalence() -> Check {
    let start = Instant::now();
    let ids = registered_ids();
    for id in &ids {
        for n in [1, 2, 4, 8] {
            check_vector_oracle(id, n, 500, 42)?;
            check_backend_equivalence(id, n, 500, 42)?;
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= VECTOR_LIMIT {
        return Err(format!("took {elapsed:?}, limit {VECTOR_LIMIT:?}"));
    }
    Ok(format!(
        "{} envs x N in {{1,2,4,8}} x 500 steps: sequential = independent envs, parallel = sequential; {elapsed:.2?} (< {VECTOR_LIMIT:?})",
        ids.len()
    ))
}

fn fixture(name: &str) -> Result<Json, String> {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "..",
        "core",
        "tests",
        "fixtures",
        name,
    ]
    .iter()
    .collect();
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn floats(v: &Json) -> Vec<f64> {
    v.as_array()
        .map(|a| a.iter().filter_map(Json::as_f64).collect())
        .unwrap_or_default()
}

fn max_err(got: &Value, want: &Json) -> f64 {
    let want = floats(want);
    let got = got.as_real().map(|a| a.data().to_vec()).unwrap_or_default();
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    got.iter()
        .zip(&want)
        .map(|(g, w)| (g - w).abs())
        .fold(0.0, f64::max)
}

fn dynamics_oracle() -> Check {
    let mut worst: f64 = 0.0;
    let cart = fixture("cartpole_oracle.json")?;
    for (seed, traj) in (0..SEEDS).zip(cart["trajectories"].as_array().ok_or("bad fixture")?) {
        let mut env = CartPole::new(CartPoleParams::V1, None);
        let mut actions = Rng::from_seed(seed + 1000);
        worst = worst.max(max_err(
            &env.reset(Some(seed), None)
                .map_err(|e| e.to_string())?
                .observation,
            &traj["initial"],
        ));
        let mut resets = traj["resets"].as_array().ok_or("bad fixture")?.iter();
        for want in traj["steps"].as_array().ok_or("bad fixture")? {
            let r = env
                .step(&Value::Discrete((actions.next_u64() >> 63) as i64))
                .map_err(|e| e.to_string())?;
            worst = worst.max(max_err(&r.observation, &want["obs"]));
            if r.terminated != want["terminated"].as_bool().unwrap_or(!r.terminated) {
                return Err(format!("cartpole seed {seed}: termination differs"));
            }
            if r.terminated {
                let again = env.reset(None, None).map_err(|e| e.to_string())?;
                worst = worst.max(max_err(
                    &again.observation,
                    resets.next().ok_or("missing reset")?,
                ));
            }
        }
    }
    let pend = fixture("pendulum_oracle.json")?;
    for (seed, traj) in (0..SEEDS).zip(pend["trajectories"].as_array().ok_or("bad fixture")?) {
        let mut env = Pendulum::new(PendulumParams::V1, None);
        let mut actions = Rng::from_seed(seed + 1000);
        worst = worst.max(max_err(
            &env.reset(Some(seed), None)
                .map_err(|e| e.to_string())?
                .observation,
            &traj["initial"],
        ));
        for want in traj["steps"].as_array().ok_or("bad fixture")? {
            let r = env
                .step(&Value::real(vec![actions.uniform(-2.0, 2.0)]))
                .map_err(|e| e.to_string())?;
            worst = worst.max(max_err(&r.observation, &want["obs"]));
            worst = worst.max((r.reward - want["reward"].as_f64().unwrap_or(f64::NAN)).abs());
        }
    }
    // Negated so a NaN error fails.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(worst <= DYNAMICS_TOL) {
        return Err(format!("max abs error {worst:e} > {DYNAMICS_TOL:e}"));
    }

    let mut lake = FrozenLake::new(
        LakeMap::parse(&["SFF", "FFF", "FFF"]).map_err(|e| e.to_string())?,
        true,
        None,
    );
    lake.reset(Some(2024), None).map_err(|e| e.to_string())?;
    let centre = Info::from([(START_STATE_OPTION.to_string(), InfoValue::Int(4))]);
    let mut counts = [0usize; 9];
    for _ in 0..BRANCH_DRAWS {
        lake.reset(None, Some(&centre)).map_err(|e| e.to_string())?;
        let r = lake
            .step(&Value::Discrete(RIGHT))
            .map_err(|e| e.to_string())?;
        counts[r.observation.as_discrete().unwrap_or(0) as usize] += 1;
    }
    let freqs: Vec<f64> = [7, 5, 1]
        .iter()
        .map(|&c| counts[c] as f64 / BRANCH_DRAWS as f64)
        .collect();
    if freqs.iter().any(|f| (f - 1.0 / 3.0).abs() > BRANCH_TOL) {
        return Err(format!("branch frequencies {freqs:?}"));
    }
    Ok(format!(
        "CartPole/Pendulum max abs error {worst:.1e} (<= {DYNAMICS_TOL:e}) over {SEEDS} seeds x 500 steps; FrozenLake branches {:.4}/{:.4}/{:.4} over {BRANCH_DRAWS} draws (tol {BRANCH_TOL})",
        freqs[0], freqs[1], freqs[2]
    ))
}

fn throughput_report() -> Check {
    let (out, elapsed) = gymkit(&[
        "bench",
        "--env",
        "CartPole-v1",
        "--num-envs",
        "8",
        "--steps",
        "10000",
        "--seed",
        "1",
    ])?;
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let rates: Vec<&str> = text.lines().filter(|l| l.contains("steps/s")).collect();
    if !out.status.success() || rates.len() != 2 || !text.contains("outputs identical: true") {
        return Err(format!("exit {:?}: {text}", out.status.code()));
    }
    let summary: Vec<String> = rates
        .iter()
        .map(|l| {
            l.split('(')
                .next()
                .unwrap_or(l)
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    Ok(format!(
        "{}; outputs identical: true; {elapsed:.2?}",
        summary.join(", ")
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("listing-1 replay", listing_one_replay),
        ("determinism suite", determinism_suite),
        ("space algebra suite", space_algebra_suite),
        ("spec round-trip", spec_round_trip),
        ("time-limit exactness", time_limit_exactness),
        ("vector equivalence", vector_equivalence),
        ("dynamics oracle", dynamics_oracle),
        ("throughput report", throughput_report),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
