use gymkit::conformance::StepCounter;
use gymkit::prelude::*;
use gymkit::wrappers::{clip_reward, order_enforcing, time_limit, TimeLimit};
use gymkit::{EnvError, StepResult};

fn steps_until_done(env: &mut impl Env) -> (u32, StepResult) {
    env.reset(Some(0), None).unwrap();
    let mut n = 0;
    loop {
        n += 1;
        let r = env.step(&Value::Discrete(0)).unwrap();
        if r.done() {
            return (n, r);
        }
        assert!(n < 10_000);
    }
}

#[test]
fn truncates_exactly_at_the_limit() {
    for max in [1, 3, 100] {
        let mut env = time_limit(StepCounter::new(None), max);
        for _ in 0..2 {
            let (n, last) = steps_until_done(&mut env);
            assert_eq!(n, max);
            assert!(last.truncated && !last.terminated);
            assert_eq!(last.observation, Value::Discrete(max as i64));
        }
    }
}

#[test]
fn terminal_at_the_limit_sets_both_flags() {
    for max in [1, 3, 100] {
        let mut env = time_limit(StepCounter::new(Some(max as i64)), max);
        let (n, last) = steps_until_done(&mut env);
        assert_eq!(n, max);
        assert!(last.terminated && last.truncated);
    }
}

#[test]
fn terminal_before_the_limit_is_not_truncated() {
    let mut env = time_limit(StepCounter::new(Some(2)), 3);
    let (n, last) = steps_until_done(&mut env);
    assert_eq!(n, 2);
    assert!(last.terminated && !last.truncated);
}

#[test]
fn both_composition_orders_enforce_both_contracts() {
    let mut outer_limit = time_limit(order_enforcing(StepCounter::new(None)), 3);
    let mut outer_order = order_enforcing(time_limit(StepCounter::new(None), 3));
    for env in [
        &mut outer_limit as &mut dyn Env,
        &mut outer_order as &mut dyn Env,
    ] {
        assert!(matches!(
            env.step(&Value::Discrete(0)),
            Err(EnvError::ResetNeeded(_))
        ));
        env.reset(None, None).unwrap();
        for t in 1..=3 {
            let r = env.step(&Value::Discrete(0)).unwrap();
            assert_eq!(r.truncated, t == 3);
        }
        assert!(matches!(
            env.step(&Value::Discrete(0)),
            Err(EnvError::ResetNeeded(_))
        ));
    }
}

/// A wrapper written outside the crate: doubles rewards.
struct Double<E>(E);

impl<E: Env> Wrapper for Double<E> {
    type Inner = E;

    fn inner(&self) -> &E {
        &self.0
    }

    fn inner_mut(&mut self) -> &mut E {
        &mut self.0
    }

    fn wrapped_step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        let mut r = self.0.step(action)?;
        r.reward *= 2.0;
        Ok(r)
    }
}

#[test]
fn downstream_wrappers_compose() {
    let mut env = clip_reward(Double(TimeLimit::new(StepCounter::new(None), 5)), -1.5, 1.5);
    env.reset(None, None).unwrap();
    assert_eq!(env.step(&Value::Discrete(0)).unwrap().reward, 1.5);
    assert!(env
        .unwrapped()
        .as_any()
        .downcast_ref::<StepCounter>()
        .is_some());
    let boxed: Box<dyn Env> = Box::new(env);
    assert!(boxed.downcast_unwrapped::<StepCounter>().is_some());
}
