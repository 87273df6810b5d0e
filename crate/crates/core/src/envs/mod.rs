//! Built-in reference environments and their registration table.

mod cartpole;
mod frozen_lake;
mod pendulum;

pub use cartpole::{
    cartpole_transition, CartPole, CartPoleParams, CartPoleState, CARTPOLE_SCREEN_HEIGHT,
    CARTPOLE_SCREEN_WIDTH,
};
pub use frozen_lake::{
    frozenlake_transition, transition_distribution, Cell, FrozenLake, LakeMap, Outcome, DOWN, LEFT,
    MAP_4X4, MAP_8X8, RIGHT, START_STATE_OPTION, UP,
};
pub use pendulum::{pendulum_transition, Pendulum, PendulumParams, PendulumState};

use crate::env::{EnvError, Metadata, RenderMode};
use crate::registry::{EnvSpec, Kwargs, Registry, RegistryError};
use crate::render::{FrameFileSink, HumanDisplay, RenderOutput, TerminalSink};

/// Registers every built-in entry point and versioned id.
pub fn register_builtins(registry: &Registry) {
    registry.register_entry_point("cartpole-v0", |kw, mode| {
        CartPole::from_kwargs(kw, mode, CartPoleParams::V0)
    });
    registry.register_entry_point("cartpole-v1", |kw, mode| {
        CartPole::from_kwargs(kw, mode, CartPoleParams::V1)
    });
    registry.register_entry_point("pendulum-v1", Pendulum::from_kwargs);
    registry.register_entry_point("frozen_lake-v1", FrozenLake::from_kwargs);

    let table = [
        EnvSpec::new("CartPole-v0", "cartpole-v0").map(|s| s.with_max_episode_steps(200)),
        EnvSpec::new("CartPole-v1", "cartpole-v1").map(|s| s.with_max_episode_steps(500)),
        EnvSpec::new("Pendulum-v1", "pendulum-v1").map(|s| s.with_max_episode_steps(200)),
        EnvSpec::new("FrozenLake-v1", "frozen_lake-v1").map(|s| {
            s.with_max_episode_steps(100)
                .with_kwarg("map_name", "4x4")
                .with_kwarg("is_slippery", true)
        }),
        EnvSpec::new("FrozenLake8x8-v1", "frozen_lake-v1").map(|s| {
            s.with_max_episode_steps(200)
                .with_kwarg("map_name", "8x8")
                .with_kwarg("is_slippery", true)
        }),
    ];
    for spec in table {
        registry
            .register(spec.expect("built-in ids are well formed"))
            .expect("built-in ids are registered once");
    }
}

pub(crate) fn reject_unknown_kwargs(
    kwargs: &Kwargs,
    allowed: &[&str],
) -> Result<(), RegistryError> {
    match kwargs.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(RegistryError::InvalidKwargs(format!(
            "unexpected argument `{k}`"
        ))),
        None => Ok(()),
    }
}

/// Text-capable environments print to the terminal; pixel-only ones write
/// frame files, since no window system is assumed.
pub(crate) fn default_display(metadata: &Metadata) -> HumanDisplay {
    if metadata.supports(RenderMode::Ansi) {
        HumanDisplay::new(Box::new(TerminalSink), metadata.render_fps)
    } else {
        HumanDisplay::new(Box::new(FrameFileSink::in_temp_dir()), metadata.render_fps)
    }
}

/// Shared `render` dispatch. `produce` is asked for `RgbArray` or `Ansi`
/// output; `human` shows the text form when the environment has one, else
/// the frame.
pub(crate) fn render_to(
    mode: Option<RenderMode>,
    metadata: &Metadata,
    display: Option<&mut HumanDisplay>,
    produce: impl Fn(RenderMode) -> Option<RenderOutput>,
) -> Result<Option<RenderOutput>, EnvError> {
    let mode = mode.ok_or(EnvError::RenderModeUnset)?;
    if !metadata.supports(mode) {
        return Err(EnvError::UnsupportedRenderMode(mode));
    }
    match mode {
        RenderMode::Human => {
            let output = produce(RenderMode::Ansi)
                .or_else(|| produce(RenderMode::RgbArray))
                .ok_or(EnvError::UnsupportedRenderMode(mode))?;
            if let Some(display) = display {
                display
                    .show(&output)
                    .map_err(|e| EnvError::RenderSink(e.to_string()))?;
            }
            Ok(None)
        }
        other => produce(other)
            .map(Some)
            .ok_or(EnvError::UnsupportedRenderMode(other)),
    }
}
