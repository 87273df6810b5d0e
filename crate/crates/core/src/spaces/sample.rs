use super::{
    Array, BoxSpace, DType, GraphValue, Space, Value, MAX_GRAPH_SAMPLE_NODES,
    MAX_SEQUENCE_SAMPLE_LEN, SEQUENCE_STOP_PROBABILITY,
};
use crate::seeding::Rng;

pub(super) fn sample(space: &Space, rng: &mut Rng) -> Value {
    match space {
        Space::Box(b) => sample_box(b, rng),
        Space::Discrete(d) => Value::Discrete(d.start() + rng.below(d.n()) as i64),
        Space::MultiDiscrete(m) => Value::integer(
            m.nvec()
                .iter()
                .zip(m.start())
                .map(|(&n, &s)| s + rng.below(n) as i64)
                .collect(),
        ),
        Space::MultiBinary(m) => Value::integer((0..m.n()).map(|_| rng.below(2) as i64).collect()),
        Space::Text(t) => {
            let span = (t.max_length() - t.min_length() + 1) as u64;
            let len = t.min_length() + rng.below(span) as usize;
            let charset = t.charset();
            Value::Text(
                (0..len)
                    .map(|_| charset[rng.below(charset.len() as u64) as usize])
                    .collect(),
            )
        }
        Space::Product(children) => Value::Tuple(children.iter().map(|s| sample(s, rng)).collect()),
        Space::Mapping(entries) => Value::Map(
            entries
                .iter()
                .map(|(k, s)| (k.clone(), sample(s, rng)))
                .collect(),
        ),
        Space::Sequence(element) => {
            let mut len = 0;
            while len < MAX_SEQUENCE_SAMPLE_LEN && rng.next_f64() >= SEQUENCE_STOP_PROBABILITY {
                len += 1;
            }
            Value::Tuple((0..len).map(|_| sample(element, rng)).collect())
        }
        Space::Graph(g) => {
            let num_nodes = 1 + rng.below(MAX_GRAPH_SAMPLE_NODES as u64) as usize;
            let nodes = (0..num_nodes)
                .map(|_| sample(g.node_space(), rng))
                .collect();
            let mut edges = Vec::new();
            let mut edge_links = Vec::new();
            if let Some(edge_space) = g.edge_space() {
                let num_edges = rng.below(2 * num_nodes as u64 + 1) as usize;
                for _ in 0..num_edges {
                    let a = rng.below(num_nodes as u64) as usize;
                    let b = rng.below(num_nodes as u64) as usize;
                    edge_links.push((a, b));
                    edges.push(sample(edge_space, rng));
                }
            }
            Value::Graph(GraphValue {
                nodes,
                edges,
                edge_links,
            })
        }
        Space::OneOf(alternatives) => {
            let index = rng.below(alternatives.len() as u64) as usize;
            Value::OneOf(index, Box::new(sample(&alternatives[index], rng)))
        }
    }
}

fn sample_box(b: &BoxSpace, rng: &mut Rng) -> Value {
    let shape = b.shape().to_vec();
    match b.dtype() {
        DType::Float64 => {
            let data = b
                .low()
                .iter()
                .zip(b.high())
                .map(|(&low, &high)| match (low.is_finite(), high.is_finite()) {
                    // `uniform` is half-open; the clamp keeps rounding inside the bounds.
                    (true, true) => rng.uniform(low, high).clamp(low, high),
                    (false, false) => rng.standard_normal(),
                    (true, false) => low + rng.standard_exponential(),
                    (false, true) => high - rng.standard_exponential(),
                })
                .collect();
            Value::Real(Array::new(shape, data).expect("box shape matches bounds"))
        }
        DType::Int64 => {
            let data = b
                .low()
                .iter()
                .zip(b.high())
                .map(|(&low, &high)| rng.int_inclusive(low.ceil() as i64, high.floor() as i64))
                .collect();
            Value::Integer(Array::new(shape, data).expect("box shape matches bounds"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use crate::spaces::{BoxSpace, DType};

    #[test]
    fn discrete_sampling_is_deterministic() {
        let d = Space::discrete(4).unwrap();
        let (mut a, mut b) = (rng_from_seed(7), rng_from_seed(7));
        for _ in 0..100 {
            assert_eq!(d.sample(&mut a), d.sample(&mut b));
        }
    }

    #[test]
    fn bounded_box_samples_stay_inside() {
        let b = Space::Box(
            BoxSpace::new(
                vec![-1.0, 0.0, 5.0],
                vec![1.0, 1e-9, 5.0],
                vec![3],
                DType::Float64,
            )
            .unwrap(),
        );
        let mut rng = rng_from_seed(1);
        for _ in 0..1000 {
            let v = b.sample(&mut rng);
            assert!(b.contains(&v), "{v:?}");
        }
    }

    #[test]
    fn unbounded_box_samples_respect_half_bounds() {
        let b = Space::Box(
            BoxSpace::new(
                vec![f64::NEG_INFINITY, 2.0, f64::NEG_INFINITY],
                vec![f64::INFINITY, f64::INFINITY, -3.0],
                vec![3],
                DType::Float64,
            )
            .unwrap(),
        );
        let mut rng = rng_from_seed(2);
        for _ in 0..1000 {
            let v = b.sample(&mut rng);
            let d = v.as_real().unwrap().data();
            assert!(d[0].is_finite() && d[1] >= 2.0 && d[2] <= -3.0);
        }
    }

    #[test]
    fn multi_binary_codomain() {
        let m = Space::multi_binary(3).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..100 {
            let v = m.sample(&mut rng);
            assert!(v
                .as_integer()
                .unwrap()
                .data()
                .iter()
                .all(|&x| x == 0 || x == 1));
        }
    }

    #[test]
    fn sequence_length_is_capped() {
        let s = Space::sequence(Space::discrete(2).unwrap());
        let mut rng = rng_from_seed(9);
        let mut max = 0;
        for _ in 0..5000 {
            if let Value::Tuple(items) = s.sample(&mut rng) {
                max = max.max(items.len());
            }
        }
        assert_eq!(max, MAX_SEQUENCE_SAMPLE_LEN);
    }
}
