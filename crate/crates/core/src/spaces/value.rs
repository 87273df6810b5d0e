use std::collections::BTreeMap;

/// A dense row-major array with an explicit shape.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Array<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T> Array<T> {
    /// Builds an array, returning `None` when `data` does not fill `shape`.
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Option<Self> {
        (shape.iter().product::<usize>() == data.len()).then_some(Self { shape, data })
    }

    /// One-dimensional array.
    pub fn vector(data: Vec<T>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Node, edge and link data for a sample of a graph space.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GraphValue {
    pub nodes: Vec<Value>,
    pub edges: Vec<Value>,
    /// `(source, target)` node indices, parallel to `edges`.
    pub edge_links: Vec<(usize, usize)>,
}

/// A sample from a [`Space`](super::Space). Only meaningful relative to the
/// space it was drawn from or checked against.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    /// Real box sample.
    Real(Array<f64>),
    /// Integer box, multi-discrete or multi-binary sample.
    Integer(Array<i64>),
    /// Discrete sample (start offset included).
    Discrete(i64),
    Text(String),
    /// Product, sequence, or fallback-batched sample.
    Tuple(Vec<Value>),
    Map(BTreeMap<String, Value>),
    Graph(GraphValue),
    /// `(alternative index, sample of that alternative)`.
    OneOf(usize, Box<Value>),
}

impl Value {
    pub fn real(data: Vec<f64>) -> Self {
        Value::Real(Array::vector(data))
    }

    pub fn integer(data: Vec<i64>) -> Self {
        Value::Integer(Array::vector(data))
    }

    pub fn as_discrete(&self) -> Option<i64> {
        match self {
            Value::Discrete(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<&Array<f64>> {
        match self {
            Value::Real(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<&Array<i64>> {
        match self {
            Value::Integer(a) => Some(a),
            _ => None,
        }
    }

    /// Structural equality that compares reals by bit pattern, so `NaN`
    /// matches itself and `0.0` differs from `-0.0`.
    pub fn bit_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => {
                a.shape == b.shape
                    && a.data.len() == b.data.len()
                    && a.data
                        .iter()
                        .zip(&b.data)
                        .all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Value::Tuple(a), Value::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.bit_eq(y))
            }
            (Value::Map(a), Value::Map(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|((ka, va), (kb, vb))| ka == kb && va.bit_eq(vb))
            }
            (Value::Graph(a), Value::Graph(b)) => {
                a.edge_links == b.edge_links
                    && a.nodes.len() == b.nodes.len()
                    && a.edges.len() == b.edges.len()
                    && a.nodes.iter().zip(&b.nodes).all(|(x, y)| x.bit_eq(y))
                    && a.edges.iter().zip(&b.edges).all(|(x, y)| x.bit_eq(y))
            }
            (Value::OneOf(i, a), Value::OneOf(j, b)) => i == j && a.bit_eq(b),
            (a, b) => a == b,
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Discrete(v)
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::real(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}
