use std::fmt::Write as _;

use super::{default_display, reject_unknown_kwargs, render_to};
use crate::env::{
    Env, EnvError, EpisodeRng, Info, InfoValue, Metadata, RenderMode, ResetResult, StepResult,
    RENDER_BEFORE_RESET,
};
use crate::registry::{Kwargs, RegistryError};
use crate::render::{Frame, FrameSink, HumanDisplay, RenderOutput};
use crate::seeding::Rng;
use crate::spaces::{Space, Value};

pub const LEFT: i64 = 0;
pub const DOWN: i64 = 1;
pub const RIGHT: i64 = 2;
pub const UP: i64 = 3;

/// Reset option naming the initial cell index.
pub const START_STATE_OPTION: &str = "start_state";

pub const MAP_4X4: &[&str] = &["SFFF", "FHFH", "FFFH", "HFFG"];
pub const MAP_8X8: &[&str] = &[
    "SFFFFFFF", "FFFFFFFF", "FFFHFFFF", "FFFFFHFF", "FFFHFFFF", "FHHFFFHF", "FHFFHFHF", "FFFHFFFG",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Start,
    Frozen,
    Hole,
    Goal,
}

impl Cell {
    fn from_char(c: char) -> Option<Cell> {
        match c {
            'S' => Some(Cell::Start),
            'F' => Some(Cell::Frozen),
            'H' => Some(Cell::Hole),
            'G' => Some(Cell::Goal),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Cell::Start => 'S',
            Cell::Frozen => 'F',
            Cell::Hole => 'H',
            Cell::Goal => 'G',
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Cell::Hole | Cell::Goal)
    }
}

/// Rectangular grid with exactly one start cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LakeMap {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
    start: usize,
}

impl LakeMap {
    pub fn parse<S: AsRef<str>>(rows: &[S]) -> Result<Self, String> {
        let cols = rows
            .first()
            .map(|r| r.as_ref().chars().count())
            .unwrap_or(0);
        if cols == 0 {
            return Err("map must have at least one row and column".into());
        }
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.chars().count() != cols {
                return Err("map rows must have equal length".into());
            }
            for c in row.chars() {
                cells.push(Cell::from_char(c).ok_or_else(|| format!("unknown map cell `{c}`"))?);
            }
        }
        let starts: Vec<usize> = (0..cells.len())
            .filter(|&i| cells[i] == Cell::Start)
            .collect();
        if starts.len() != 1 {
            return Err(format!(
                "map must have exactly one start cell, found {}",
                starts.len()
            ));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            cells,
            start: starts[0],
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn cell(&self, pos: usize) -> Cell {
        self.cells[pos]
    }

    /// Cell reached by moving one step; walls keep the agent in place.
    pub fn moved(&self, pos: usize, direction: i64) -> usize {
        let (r, c) = (pos / self.cols, pos % self.cols);
        let (r, c) = match direction {
            LEFT => (r, c.saturating_sub(1)),
            DOWN => ((r + 1).min(self.rows - 1), c),
            RIGHT => (r, (c + 1).min(self.cols - 1)),
            UP => (r.saturating_sub(1), c),
            _ => (r, c),
        };
        r * self.cols + c
    }

    /// Grid rows with the cell at `agent` bracketed.
    pub fn ansi(&self, agent: usize) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            if r > 0 {
                out.push('\n');
            }
            for c in 0..self.cols {
                let i = r * self.cols + c;
                let ch = self.cells[i].as_char();
                if i == agent {
                    let _ = write!(out, "[{ch}]");
                } else {
                    out.push(ch);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub next: usize,
    pub reward: f64,
    pub terminated: bool,
}

fn outcome(map: &LakeMap, pos: usize, direction: i64) -> Outcome {
    if map.cell(pos).is_terminal() {
        return Outcome {
            next: pos,
            reward: 0.0,
            terminated: true,
        };
    }
    let next = map.moved(pos, direction);
    let cell = map.cell(next);
    Outcome {
        next,
        reward: if cell == Cell::Goal { 1.0 } else { 0.0 },
        terminated: cell.is_terminal(),
    }
}

fn branches(action: i64, slippery: bool) -> Vec<i64> {
    if slippery {
        vec![(action + 3) % 4, action, (action + 1) % 4]
    } else {
        vec![action]
    }
}

/// One move. When slippery, the executed direction is the intended one or
/// either perpendicular, chosen uniformly from `rng`. Returns the outcome and
/// the probability of the executed branch.
pub fn frozenlake_transition(
    map: &LakeMap,
    pos: usize,
    action: i64,
    slippery: bool,
    rng: &mut Rng,
) -> (Outcome, f64) {
    let dirs = branches(action, slippery);
    let k = if slippery { rng.below(3) as usize } else { 0 };
    (outcome(map, pos, dirs[k]), 1.0 / dirs.len() as f64)
}

/// Exact outcome distribution of one move, with branches leading to the same
/// cell merged.
pub fn transition_distribution(
    map: &LakeMap,
    pos: usize,
    action: i64,
    slippery: bool,
) -> Vec<(f64, Outcome)> {
    let dirs = branches(action, slippery);
    let p = 1.0 / dirs.len() as f64;
    let mut dist: Vec<(f64, Outcome)> = Vec::new();
    for d in dirs {
        let o = outcome(map, pos, d);
        match dist.iter_mut().find(|(_, e)| e.next == o.next) {
            Some(entry) => entry.0 += p,
            None => dist.push((p, o)),
        }
    }
    dist
}

const TILE: usize = 64;

/// Cross a frozen lake from start to goal without falling into a hole.
pub struct FrozenLake {
    map: LakeMap,
    slippery: bool,
    position: usize,
    last_action: Option<i64>,
    rng: EpisodeRng,
    observation_space: Space,
    action_space: Space,
    metadata: Metadata,
    render_mode: Option<RenderMode>,
    display: Option<HumanDisplay>,
    closed: bool,
}

impl FrozenLake {
    pub fn new(map: LakeMap, slippery: bool, render_mode: Option<RenderMode>) -> Self {
        let mut metadata = Metadata::new(
            vec![RenderMode::Human, RenderMode::Ansi, RenderMode::RgbArray],
            4,
        );
        metadata
            .extra
            .insert(RENDER_BEFORE_RESET.to_string(), "true".to_string());
        let display = (render_mode == Some(RenderMode::Human)).then(|| default_display(&metadata));
        Self {
            observation_space: Space::discrete(map.len() as u64).expect("map is non-empty"),
            action_space: Space::discrete(4).expect("n >= 1"),
            position: map.start(),
            map,
            slippery,
            last_action: None,
            rng: EpisodeRng::default(),
            metadata,
            render_mode,
            display,
            closed: false,
        }
    }

    /// Accepts `map_name` ("4x4" or "8x8"), `desc` (list of row strings,
    /// overriding `map_name`) and `is_slippery`.
    pub(super) fn from_kwargs(
        kwargs: &Kwargs,
        render_mode: Option<RenderMode>,
    ) -> Result<Box<dyn Env>, RegistryError> {
        reject_unknown_kwargs(kwargs, &["map_name", "desc", "is_slippery"])?;
        let bad = |msg: String| RegistryError::InvalidKwargs(msg);
        let map = match (kwargs.get("desc"), kwargs.get("map_name")) {
            (Some(InfoValue::List(rows)), _) => {
                let rows: Option<Vec<&str>> = rows.iter().map(InfoValue::as_str).collect();
                LakeMap::parse(&rows.ok_or_else(|| bad("`desc` must be a list of strings".into()))?)
                    .map_err(bad)?
            }
            (Some(_), _) => return Err(bad("`desc` must be a list of strings".into())),
            (None, None) => LakeMap::parse(MAP_4X4).expect("builtin map"),
            (None, Some(name)) => match name.as_str() {
                Some("4x4") => LakeMap::parse(MAP_4X4).expect("builtin map"),
                Some("8x8") => LakeMap::parse(MAP_8X8).expect("builtin map"),
                _ => return Err(bad(format!("unknown map_name {name:?}"))),
            },
        };
        let slippery = match kwargs.get("is_slippery") {
            None => true,
            Some(v) => v
                .as_bool()
                .ok_or_else(|| bad("`is_slippery` must be a boolean".into()))?,
        };
        Ok(Box::new(Self::new(map, slippery, render_mode)))
    }

    pub fn map(&self) -> &LakeMap {
        &self.map
    }

    pub fn is_slippery(&self) -> bool {
        self.slippery
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// Replaces the `human` mode sink.
    pub fn set_frame_sink(&mut self, sink: Box<dyn FrameSink>, paced: bool) {
        self.display = Some(if paced {
            HumanDisplay::new(sink, self.metadata.render_fps)
        } else {
            HumanDisplay::unpaced(sink)
        });
    }
}

fn draw(map: &LakeMap, agent: usize) -> Frame {
    let mut frame = Frame::new(map.rows() * TILE, map.cols() * TILE, [180, 200, 230]);
    for i in 0..map.len() {
        let (x, y) = (
            ((i % map.cols()) * TILE) as f64,
            ((i / map.cols()) * TILE) as f64,
        );
        let color = match map.cell(i) {
            Cell::Start => [200, 220, 240],
            Cell::Frozen => [180, 200, 230],
            Cell::Hole => [20, 40, 80],
            Cell::Goal => [230, 190, 40],
        };
        frame.fill_rect(
            x + 1.0,
            y + 1.0,
            x + TILE as f64 - 1.0,
            y + TILE as f64 - 1.0,
            color,
        );
        if i == agent {
            let half = TILE as f64 / 2.0;
            frame.fill_circle(x + half, y + half, half * 0.6, [200, 40, 40]);
        }
    }
    frame
}

impl Env for FrozenLake {
    fn observation_space(&self) -> &Space {
        &self.observation_space
    }

    fn action_space(&self) -> &Space {
        &self.action_space
    }

    fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    fn render_mode(&self) -> Option<RenderMode> {
        self.render_mode
    }

    /// Option `start_state` (integer cell index) overrides the start cell.
    fn reset(
        &mut self,
        seed: Option<u64>,
        options: Option<&Info>,
    ) -> Result<ResetResult, EnvError> {
        if self.closed {
            return Err(EnvError::EnvClosed);
        }
        self.rng.reseed(seed);
        let start = match options.and_then(|o| o.get(START_STATE_OPTION)) {
            None => self.map.start(),
            Some(v) => v
                .as_i64()
                .filter(|&s| s >= 0 && (s as usize) < self.map.len())
                .ok_or_else(|| {
                    EnvError::InvalidOptions(format!(
                        "`{START_STATE_OPTION}` must be a cell index below {}",
                        self.map.len()
                    ))
                })? as usize,
        };
        self.position = start;
        self.last_action = None;
        Ok(ResetResult {
            observation: Value::Discrete(start as i64),
            info: Info::from([("prob".to_string(), InfoValue::Float(1.0))]),
        })
    }

    fn step(&mut self, action: &Value) -> Result<StepResult, EnvError> {
        if self.closed {
            return Err(EnvError::EnvClosed);
        }
        let a = action
            .as_discrete()
            .filter(|a| (0..4).contains(a))
            .ok_or_else(|| {
                EnvError::InvalidAction(format!("{action:?} is not in {}", self.action_space))
            })?;
        let (o, prob) =
            frozenlake_transition(&self.map, self.position, a, self.slippery, self.rng.get());
        self.position = o.next;
        self.last_action = Some(a);
        Ok(StepResult {
            observation: Value::Discrete(o.next as i64),
            reward: o.reward,
            terminated: o.terminated,
            truncated: false,
            info: Info::from([("prob".to_string(), InfoValue::Float(prob))]),
        })
    }

    fn render(&mut self) -> Result<Option<RenderOutput>, EnvError> {
        let (map, agent) = (&self.map, self.position);
        render_to(
            self.render_mode,
            &self.metadata,
            self.display.as_mut(),
            |mode| match mode {
                RenderMode::Ansi => Some(RenderOutput::Text(map.ansi(agent))),
                RenderMode::RgbArray => Some(RenderOutput::Frame(draw(map, agent))),
                RenderMode::Human => None,
            },
        )
    }

    fn close(&mut self) {
        self.closed = true;
    }
}
