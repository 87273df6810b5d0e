use gymkit::conformance::{check_contract, check_determinism, registered_ids};
use gymkit::seeding::Rng;
use gymkit::{make, Env, EnvError, RenderMode};

const SEEDS: std::ops::Range<u64> = 0..20;

#[test]
fn builtins_are_deterministic_under_seeding() {
    let seeds: Vec<u64> = SEEDS.collect();
    for id in registered_ids() {
        check_determinism(&id, &seeds, 500).unwrap();
    }
}

#[test]
fn builtins_respect_their_spaces() {
    for id in registered_ids() {
        for seed in SEEDS {
            check_contract(&id, seed, 200).unwrap();
        }
    }
}

#[test]
fn unseeded_reset_continues_the_generator() {
    // CartPole draws four uniforms in [-0.05, 0.05) per reset.
    let mut env = make("CartPole-v1").unwrap();
    env.reset(Some(9), None).unwrap();
    let second = env.reset(None, None).unwrap().observation;
    let mut reference = Rng::from_seed(9);
    let draws: Vec<f64> = (0..8).map(|_| reference.uniform(-0.05, 0.05)).collect();
    assert_eq!(second.as_real().unwrap().data(), &draws[4..]);
}

#[test]
fn order_is_enforced_by_make() {
    let mut env = make("CartPole-v1").unwrap();
    let action = gymkit::Value::Discrete(0);
    assert!(matches!(env.step(&action), Err(EnvError::ResetNeeded(_))));
    env.reset(Some(0), None).unwrap();
    loop {
        if env.step(&action).unwrap().done() {
            break;
        }
    }
    assert!(matches!(env.step(&action), Err(EnvError::ResetNeeded(_))));
    env.close();
    assert!(matches!(env.reset(None, None), Err(EnvError::EnvClosed)));
}

#[test]
fn render_modes() {
    let mut plain = make("CartPole-v1").unwrap();
    plain.reset(Some(0), None).unwrap();
    assert!(matches!(plain.render(), Err(EnvError::RenderModeUnset)));

    let mut rgb = gymkit::make_with(
        "CartPole-v1",
        gymkit::MakeOptions::render_mode(RenderMode::RgbArray),
    )
    .unwrap();
    rgb.reset(Some(0), None).unwrap();
    assert_eq!(
        rgb.render().unwrap().unwrap().as_frame().unwrap().shape(),
        [400, 600, 3]
    );

    let mut pend = gymkit::make_with(
        "Pendulum-v1",
        gymkit::MakeOptions::render_mode(RenderMode::RgbArray),
    )
    .unwrap();
    pend.reset(Some(0), None).unwrap();
    assert_eq!(
        pend.render().unwrap().unwrap().as_frame().unwrap().shape(),
        [500, 500, 3]
    );

    // FrozenLake may render before its first reset.
    let mut lake = gymkit::make_with(
        "FrozenLake-v1",
        gymkit::MakeOptions::render_mode(RenderMode::Ansi),
    )
    .unwrap();
    assert_eq!(
        lake.render().unwrap().unwrap().as_text().unwrap(),
        "[S]FFF\nFHFH\nFFFH\nHFFG"
    );

    assert!(gymkit::make_with(
        "CartPole-v1",
        gymkit::MakeOptions::render_mode(RenderMode::Ansi)
    )
    .is_err());
}

#[test]
fn human_mode_goes_to_the_sink() {
    let sink = gymkit::render::MemorySink::new();
    let mut env = gymkit::envs::FrozenLake::new(
        gymkit::envs::LakeMap::parse(gymkit::envs::MAP_4X4).unwrap(),
        false,
        Some(RenderMode::Human),
    );
    env.set_frame_sink(Box::new(sink.clone()), false);
    env.reset(Some(0), None).unwrap();
    assert_eq!(env.render().unwrap(), None);
    assert_eq!(sink.outputs().len(), 1);
}
