//! A reinforcement-learning environment toolkit: typed observation and action
//! spaces, the `reset`/`step` environment contract, a versioned registry,
//! composable wrappers, and vectorized execution with sequential and
//! parallel backends.
//!
//! ```
//! use gymkit::prelude::*;
//!
//! let mut env = gymkit::make("CartPole-v1").unwrap();
//! let mut rng = gymkit::seeding::Rng::from_seed(0);
//! env.reset(Some(42), None).unwrap();
//! for _ in 0..100 {
//!     let action = env.action_space().sample(&mut rng);
//!     let step = env.step(&action).unwrap();
//!     if step.terminated || step.truncated {
//!         env.reset(None, None).unwrap();
//!     }
//! }
//! env.close();
//! ```

pub mod conformance;
pub mod env;
pub mod envs;
pub mod registry;
pub mod render;
pub mod rollout;
pub mod seeding;
pub mod spaces;
pub mod vector;
pub mod wrappers;

pub use env::{Env, EnvError, Info, InfoValue, Metadata, RenderMode, ResetResult, StepResult};
pub use registry::{
    make, make_from_spec, make_with, register, EnvSpec, MakeOptions, RegistryError,
};
pub use spaces::{Space, SpaceError, Value};
pub use vector::{make_vec, Backend, VecEnv, VectorEnv};

pub mod prelude {
    pub use crate::env::{Env, Info, InfoValue, RenderMode};
    pub use crate::spaces::{Space, Value};
    pub use crate::vector::VecEnv;
    pub use crate::wrappers::Wrapper;
}
