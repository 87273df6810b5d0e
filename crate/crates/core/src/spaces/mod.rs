//! Observation and action spaces.
//!
//! A [`Space`] describes a set of valid values. Five kinds are fundamental
//! (box, discrete, multi-discrete, multi-binary, text) and five are composite
//! (product, mapping, sequence, graph, one-of). Besides membership and seeded
//! sampling, this module provides flattening to fixed-width real vectors and
//! batching of samples along a leading axis.

mod batch;
mod flatten;
mod json;
mod sample;
mod value;

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

pub use batch::{batch_space, concatenate, iterate};
pub use flatten::{flatdim, flatten, flatten_space, unflatten};
pub use value::{Array, GraphValue, Value};

/// Sequence samples are capped at this many elements.
pub const MAX_SEQUENCE_SAMPLE_LEN: usize = 16;
/// Stop probability of the geometric sequence-length draw.
pub const SEQUENCE_STOP_PROBABILITY: f64 = 0.25;
/// Graph samples draw their node count uniformly from `1..=MAX_GRAPH_SAMPLE_NODES`.
pub const MAX_GRAPH_SAMPLE_NODES: usize = 10;

pub const ALPHANUMERIC: &str = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("space kind `{0}` has no fixed flat dimension")]
    UnflattenableSpace(&'static str),
    #[error("value is not an element of the space")]
    ValueNotInSpace,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("malformed encoding: {0}")]
    MalformedEncoding(String),
    #[error("cannot concatenate an empty batch")]
    EmptyBatch,
    #[error("value is not a batch of this space: {0}")]
    NotABatch(String),
    #[error("malformed space document: {0}")]
    MalformedDocument(String),
}

fn invalid(msg: impl Into<String>) -> SpaceError {
    SpaceError::InvalidSpace(msg.into())
}

/// Element type of a box space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DType {
    Float64,
    Int64,
}

impl DType {
    pub fn name(self) -> &'static str {
        match self {
            DType::Float64 => "float64",
            DType::Int64 => "int64",
        }
    }
}

/// A (possibly unbounded) box in `R^shape` or `Z^shape`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSpace {
    low: Vec<f64>,
    high: Vec<f64>,
    shape: Vec<usize>,
    dtype: DType,
}

impl BoxSpace {
    pub fn new(
        low: Vec<f64>,
        high: Vec<f64>,
        shape: Vec<usize>,
        dtype: DType,
    ) -> Result<Self, SpaceError> {
        let size: usize = shape.iter().product();
        if low.len() != size || high.len() != size {
            return Err(invalid(format!(
                "box bounds have {} / {} elements but shape {:?} holds {}",
                low.len(),
                high.len(),
                shape,
                size
            )));
        }
        for (i, (&l, &h)) in low.iter().zip(&high).enumerate() {
            if l.is_nan() || h.is_nan() {
                return Err(invalid(format!("box bound {i} is NaN")));
            }
            if l > h {
                return Err(invalid(format!("box bound {i}: low {l} > high {h}")));
            }
            if l == h && l.is_infinite() {
                return Err(invalid(format!("box bound {i} admits no finite value")));
            }
            if dtype == DType::Int64 {
                if !l.is_finite() || !h.is_finite() {
                    return Err(invalid("integer box bounds must be finite"));
                }
                if l.ceil() > h.floor() {
                    return Err(invalid(format!(
                        "integer box bound {i} contains no integer"
                    )));
                }
            }
        }
        Ok(Self {
            low,
            high,
            shape,
            dtype,
        })
    }

    /// Box with the same scalar bounds on every element.
    pub fn uniform(
        low: f64,
        high: f64,
        shape: Vec<usize>,
        dtype: DType,
    ) -> Result<Self, SpaceError> {
        let size = shape.iter().product();
        Self::new(vec![low; size], vec![high; size], shape, dtype)
    }

    pub fn low(&self) -> &[f64] {
        &self.low
    }

    pub fn high(&self) -> &[f64] {
        &self.high
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn size(&self) -> usize {
        self.low.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.low.iter().chain(&self.high).all(|b| b.is_finite())
    }
}

/// Integers `start, start + 1, ..., start + n - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Discrete {
    n: u64,
    start: i64,
}

impl Discrete {
    pub fn new(n: u64, start: i64) -> Result<Self, SpaceError> {
        if n == 0 {
            return Err(invalid("discrete space needs n >= 1"));
        }
        if start.checked_add(n as i64 - 1).is_none() {
            return Err(invalid("discrete range overflows int64"));
        }
        Ok(Self { n, start })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn start(&self) -> i64 {
        self.start
    }
}

/// A vector of independent discrete components. `start` defaults to zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiDiscrete {
    nvec: Vec<u64>,
    start: Vec<i64>,
}

impl MultiDiscrete {
    pub fn new(nvec: Vec<u64>) -> Result<Self, SpaceError> {
        let start = vec![0; nvec.len()];
        Self::with_start(nvec, start)
    }

    pub fn with_start(nvec: Vec<u64>, start: Vec<i64>) -> Result<Self, SpaceError> {
        if nvec.is_empty() {
            return Err(invalid("multi-discrete space needs at least one component"));
        }
        if nvec.len() != start.len() {
            return Err(invalid("multi-discrete nvec and start lengths differ"));
        }
        for (&n, &s) in nvec.iter().zip(&start) {
            Discrete::new(n, s)?;
        }
        Ok(Self { nvec, start })
    }

    pub fn nvec(&self) -> &[u64] {
        &self.nvec
    }

    pub fn start(&self) -> &[i64] {
        &self.start
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MultiBinary {
    n: usize,
}

impl MultiBinary {
    pub fn new(n: usize) -> Result<Self, SpaceError> {
        if n == 0 {
            return Err(invalid("multi-binary space needs n >= 1"));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Strings whose length (in characters) lies in `[min_length, max_length]`
/// and whose characters all belong to `charset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TextSpace {
    min_length: usize,
    max_length: usize,
    charset: Vec<char>,
}

impl TextSpace {
    pub fn new(min_length: usize, max_length: usize, charset: &str) -> Result<Self, SpaceError> {
        if min_length > max_length {
            return Err(invalid("text min_length exceeds max_length"));
        }
        let chars: Vec<char> = charset.chars().collect();
        if chars.is_empty() {
            return Err(invalid("text charset is empty"));
        }
        let unique: HashSet<char> = chars.iter().copied().collect();
        if unique.len() != chars.len() {
            return Err(invalid("text charset has repeated characters"));
        }
        Ok(Self {
            min_length,
            max_length,
            charset: chars,
        })
    }

    pub fn min_length(&self) -> usize {
        self.min_length
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn charset(&self) -> &[char] {
        &self.charset
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphSpace {
    node_space: Box<Space>,
    edge_space: Option<Box<Space>>,
}

impl GraphSpace {
    pub fn new(node_space: Space, edge_space: Option<Space>) -> Result<Self, SpaceError> {
        let leaf = |s: &Space| matches!(s, Space::Box(_) | Space::Discrete(_));
        if !leaf(&node_space) {
            return Err(invalid("graph node space must be box or discrete"));
        }
        if let Some(e) = &edge_space {
            if !leaf(e) {
                return Err(invalid("graph edge space must be box or discrete"));
            }
        }
        Ok(Self {
            node_space: Box::new(node_space),
            edge_space: edge_space.map(Box::new),
        })
    }

    pub fn node_space(&self) -> &Space {
        &self.node_space
    }

    pub fn edge_space(&self) -> Option<&Space> {
        self.edge_space.as_deref()
    }
}

/// The set of valid observations or actions.
#[derive(Clone, Debug, PartialEq)]
pub enum Space {
    Box(BoxSpace),
    Discrete(Discrete),
    MultiDiscrete(MultiDiscrete),
    MultiBinary(MultiBinary),
    Text(TextSpace),
    Product(Vec<Space>),
    /// Ordered `(key, space)` entries; order fixes the flattening layout.
    Mapping(Vec<(String, Space)>),
    Sequence(Box<Space>),
    Graph(GraphSpace),
    OneOf(Vec<Space>),
}

impl Space {
    pub fn real_box(low: f64, high: f64, shape: Vec<usize>) -> Result<Space, SpaceError> {
        BoxSpace::uniform(low, high, shape, DType::Float64).map(Space::Box)
    }

    pub fn discrete(n: u64) -> Result<Space, SpaceError> {
        Discrete::new(n, 0).map(Space::Discrete)
    }

    pub fn multi_discrete(nvec: Vec<u64>) -> Result<Space, SpaceError> {
        MultiDiscrete::new(nvec).map(Space::MultiDiscrete)
    }

    pub fn multi_binary(n: usize) -> Result<Space, SpaceError> {
        MultiBinary::new(n).map(Space::MultiBinary)
    }

    /// Text space over the 62 ASCII alphanumerics.
    pub fn text(min_length: usize, max_length: usize) -> Result<Space, SpaceError> {
        TextSpace::new(min_length, max_length, ALPHANUMERIC).map(Space::Text)
    }

    pub fn product(subspaces: Vec<Space>) -> Result<Space, SpaceError> {
        if subspaces.is_empty() {
            return Err(invalid("product space needs at least one subspace"));
        }
        Ok(Space::Product(subspaces))
    }

    pub fn mapping<K: Into<String>>(entries: Vec<(K, Space)>) -> Result<Space, SpaceError> {
        let entries: Vec<(String, Space)> =
            entries.into_iter().map(|(k, s)| (k.into(), s)).collect();
        let mut keys = HashSet::new();
        for (k, _) in &entries {
            if !keys.insert(k.as_str()) {
                return Err(invalid(format!("duplicate mapping key `{k}`")));
            }
        }
        Ok(Space::Mapping(entries))
    }

    pub fn sequence(element: Space) -> Space {
        Space::Sequence(Box::new(element))
    }

    pub fn graph(node_space: Space, edge_space: Option<Space>) -> Result<Space, SpaceError> {
        GraphSpace::new(node_space, edge_space).map(Space::Graph)
    }

    pub fn one_of(alternatives: Vec<Space>) -> Result<Space, SpaceError> {
        if alternatives.is_empty() {
            return Err(invalid("one-of space needs at least one alternative"));
        }
        Ok(Space::OneOf(alternatives))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Space::Box(_) => "box",
            Space::Discrete(_) => "discrete",
            Space::MultiDiscrete(_) => "multi_discrete",
            Space::MultiBinary(_) => "multi_binary",
            Space::Text(_) => "text",
            Space::Product(_) => "product",
            Space::Mapping(_) => "mapping",
            Space::Sequence(_) => "sequence",
            Space::Graph(_) => "graph",
            Space::OneOf(_) => "one_of",
        }
    }

    /// Re-checks the invariants of this space and every subspace. Spaces
    /// built through the constructors always pass.
    pub fn validate(&self) -> Result<(), SpaceError> {
        match self {
            Space::Box(b) => {
                BoxSpace::new(b.low.clone(), b.high.clone(), b.shape.clone(), b.dtype).map(drop)
            }
            Space::Discrete(d) => Discrete::new(d.n, d.start).map(drop),
            Space::MultiDiscrete(m) => {
                MultiDiscrete::with_start(m.nvec.clone(), m.start.clone()).map(drop)
            }
            Space::MultiBinary(m) => MultiBinary::new(m.n).map(drop),
            Space::Text(t) => TextSpace::new(
                t.min_length,
                t.max_length,
                &t.charset.iter().collect::<String>(),
            )
            .map(drop),
            Space::Product(children) | Space::OneOf(children) => {
                if children.is_empty() {
                    return Err(invalid(format!(
                        "{} space needs at least one subspace",
                        self.kind()
                    )));
                }
                children.iter().try_for_each(Space::validate)
            }
            Space::Mapping(entries) => {
                Space::mapping(
                    entries
                        .iter()
                        .map(|(k, s)| (k.clone(), s.clone()))
                        .collect(),
                )?;
                entries.iter().try_for_each(|(_, s)| s.validate())
            }
            Space::Sequence(element) => element.validate(),
            Space::Graph(g) => {
                GraphSpace::new((*g.node_space).clone(), g.edge_space.as_deref().cloned())?;
                g.node_space.validate()?;
                g.edge_space.as_deref().map_or(Ok(()), Space::validate)
            }
        }
    }

    /// True iff `value` is a member of this space.
    pub fn contains(&self, value: &Value) -> bool {
        contains(self, value)
    }

    /// Draws one member of this space from `rng`.
    pub fn sample(&self, rng: &mut crate::seeding::Rng) -> Value {
        sample::sample(self, rng)
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Box(b) => write!(f, "Box({:?}, {})", b.shape, b.dtype.name()),
            Space::Discrete(d) if d.start == 0 => write!(f, "Discrete({})", d.n),
            Space::Discrete(d) => write!(f, "Discrete({}, start={})", d.n, d.start),
            Space::MultiDiscrete(m) => write!(f, "MultiDiscrete({:?})", m.nvec),
            Space::MultiBinary(m) => write!(f, "MultiBinary({})", m.n),
            Space::Text(t) => write!(f, "Text({}, {})", t.min_length, t.max_length),
            Space::Product(c) => {
                write!(f, "Product(")?;
                for (i, s) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, ")")
            }
            Space::Mapping(e) => {
                write!(f, "Mapping(")?;
                for (i, (k, s)) in e.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}: {s}")?;
                }
                write!(f, ")")
            }
            Space::Sequence(s) => write!(f, "Sequence({s})"),
            Space::Graph(g) => match &g.edge_space {
                Some(e) => write!(f, "Graph({}, {})", g.node_space, e),
                None => write!(f, "Graph({}, None)", g.node_space),
            },
            Space::OneOf(c) => {
                write!(f, "OneOf(")?;
                for (i, s) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn within(x: f64, low: f64, high: f64) -> bool {
    low <= x && x <= high
}

/// Membership test. Structural mismatches return `false`.
pub fn contains(space: &Space, value: &Value) -> bool {
    match (space, value) {
        (Space::Box(b), Value::Real(a)) => {
            b.dtype == DType::Float64
                && a.shape() == b.shape()
                && a.data()
                    .iter()
                    .zip(b.low.iter().zip(&b.high))
                    .all(|(&x, (&l, &h))| within(x, l, h))
        }
        (Space::Box(b), Value::Integer(a)) => {
            b.dtype == DType::Int64
                && a.shape() == b.shape()
                && a.data()
                    .iter()
                    .zip(b.low.iter().zip(&b.high))
                    .all(|(&x, (&l, &h))| within(x as f64, l, h))
        }
        (Space::Discrete(d), Value::Discrete(v)) => *v >= d.start && (*v - d.start) < d.n as i64,
        (Space::MultiDiscrete(m), Value::Integer(a)) => {
            a.shape() == [m.nvec.len()]
                && a.data()
                    .iter()
                    .zip(m.nvec.iter().zip(&m.start))
                    .all(|(&x, (&n, &s))| x >= s && (x - s) < n as i64)
        }
        (Space::MultiBinary(m), Value::Integer(a)) => {
            a.shape() == [m.n] && a.data().iter().all(|&x| x == 0 || x == 1)
        }
        (Space::Text(t), Value::Text(s)) => {
            let len = s.chars().count();
            len >= t.min_length && len <= t.max_length && s.chars().all(|c| t.charset.contains(&c))
        }
        (Space::Product(children), Value::Tuple(items)) => {
            children.len() == items.len() && children.iter().zip(items).all(|(s, v)| contains(s, v))
        }
        (Space::Mapping(entries), Value::Map(map)) => {
            entries.len() == map.len()
                && entries
                    .iter()
                    .all(|(k, s)| map.get(k).is_some_and(|v| contains(s, v)))
        }
        (Space::Sequence(element), Value::Tuple(items)) => {
            items.iter().all(|v| contains(element, v))
        }
        (Space::Graph(g), Value::Graph(gv)) => {
            let nodes_ok = gv.nodes.iter().all(|v| contains(&g.node_space, v));
            let links_ok = gv
                .edge_links
                .iter()
                .all(|&(a, b)| a < gv.nodes.len() && b < gv.nodes.len());
            let edges_ok = match &g.edge_space {
                Some(es) => {
                    gv.edges.len() == gv.edge_links.len()
                        && gv.edges.iter().all(|v| contains(es, v))
                }
                None => gv.edges.is_empty() && gv.edge_links.is_empty(),
            };
            nodes_ok && links_ok && edges_ok
        }
        (Space::OneOf(alts), Value::OneOf(i, v)) => alts.get(*i).is_some_and(|s| contains(s, v)),
        _ => false,
    }
}
