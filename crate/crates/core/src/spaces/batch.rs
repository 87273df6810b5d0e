use std::collections::BTreeMap;

use super::{Array, BoxSpace, DType, MultiDiscrete, Space, SpaceError, Value};

/// The space of `n` stacked samples of `space`.
///
/// Boxes gain a leading axis, discrete becomes multi-discrete, multi-discrete
/// and multi-binary become integer boxes with a leading axis, and products and
/// mappings batch their children. Kinds without a dense stacking (text,
/// sequence, graph, one-of) batch into a product of `n` copies.
///
/// # Panics
/// If `n` is zero.
pub fn batch_space(space: &Space, n: usize) -> Space {
    assert!(n >= 1, "batch size must be at least 1");
    match space {
        Space::Box(b) => {
            let mut shape = vec![n];
            shape.extend_from_slice(b.shape());
            Space::Box(
                BoxSpace::new(b.low().repeat(n), b.high().repeat(n), shape, b.dtype())
                    .expect("batched bounds stay valid"),
            )
        }
        Space::Discrete(d) => Space::MultiDiscrete(
            MultiDiscrete::with_start(vec![d.n(); n], vec![d.start(); n]).expect("valid discrete"),
        ),
        Space::MultiDiscrete(m) => {
            let low: Vec<f64> = m.start().iter().map(|&s| s as f64).collect();
            let high: Vec<f64> = m
                .nvec()
                .iter()
                .zip(m.start())
                .map(|(&k, &s)| (s + k as i64 - 1) as f64)
                .collect();
            Space::Box(
                BoxSpace::new(
                    low.repeat(n),
                    high.repeat(n),
                    vec![n, m.nvec().len()],
                    DType::Int64,
                )
                .expect("batched bounds stay valid"),
            )
        }
        Space::MultiBinary(m) => Space::Box(
            BoxSpace::uniform(0.0, 1.0, vec![n, m.n()], DType::Int64)
                .expect("batched bounds stay valid"),
        ),
        Space::Product(children) => {
            Space::Product(children.iter().map(|s| batch_space(s, n)).collect())
        }
        Space::Mapping(entries) => Space::Mapping(
            entries
                .iter()
                .map(|(k, s)| (k.clone(), batch_space(s, n)))
                .collect(),
        ),
        Space::Text(_) | Space::Sequence(_) | Space::Graph(_) | Space::OneOf(_) => {
            Space::Product(vec![space.clone(); n])
        }
    }
}

/// Stacks `samples` into one member of `batch_space(space, samples.len())`.
pub fn concatenate(space: &Space, samples: &[Value]) -> Result<Value, SpaceError> {
    if samples.is_empty() {
        return Err(SpaceError::EmptyBatch);
    }
    if !samples.iter().all(|v| space.contains(v)) {
        return Err(SpaceError::ValueNotInSpace);
    }
    Ok(stack(space, samples.iter()))
}

fn stack<'a, I>(space: &Space, samples: I) -> Value
where
    I: ExactSizeIterator<Item = &'a Value> + Clone,
{
    let n = samples.len();
    let leading = |inner: &[usize]| {
        let mut shape = vec![n];
        shape.extend_from_slice(inner);
        shape
    };
    match space {
        Space::Box(b) => match b.dtype() {
            DType::Float64 => {
                let data = samples
                    .flat_map(|v| v.as_real().expect("member").data().iter().copied())
                    .collect();
                Value::Real(Array::new(leading(b.shape()), data).expect("sized"))
            }
            DType::Int64 => {
                let data = samples
                    .flat_map(|v| v.as_integer().expect("member").data().iter().copied())
                    .collect();
                Value::Integer(Array::new(leading(b.shape()), data).expect("sized"))
            }
        },
        Space::Discrete(_) => {
            Value::integer(samples.map(|v| v.as_discrete().expect("member")).collect())
        }
        Space::MultiDiscrete(_) | Space::MultiBinary(_) => {
            let width = samples
                .clone()
                .next()
                .map_or(0, |v| v.as_integer().expect("member").len());
            let data = samples
                .flat_map(|v| v.as_integer().expect("member").data().iter().copied())
                .collect();
            Value::Integer(Array::new(vec![n, width], data).expect("sized"))
        }
        Space::Product(children) => Value::Tuple(
            children
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let column: Vec<&Value> = samples
                        .clone()
                        .map(|v| match v {
                            Value::Tuple(items) => &items[i],
                            _ => unreachable!("member"),
                        })
                        .collect();
                    stack(s, column.into_iter())
                })
                .collect(),
        ),
        Space::Mapping(entries) => Value::Map(
            entries
                .iter()
                .map(|(k, s)| {
                    let column: Vec<&Value> = samples
                        .clone()
                        .map(|v| match v {
                            Value::Map(m) => &m[k],
                            _ => unreachable!("member"),
                        })
                        .collect();
                    (k.clone(), stack(s, column.into_iter()))
                })
                .collect(),
        ),
        Space::Text(_) | Space::Sequence(_) | Space::Graph(_) | Space::OneOf(_) => {
            Value::Tuple(samples.cloned().collect())
        }
    }
}

/// Splits a batched value back into its samples; left inverse of [`concatenate`].
pub fn iterate(space: &Space, batched: &Value) -> Result<Vec<Value>, SpaceError> {
    let items = unstack(space, batched)?;
    if items.is_empty() {
        return Err(SpaceError::NotABatch("batch is empty".into()));
    }
    if !items.iter().all(|v| space.contains(v)) {
        return Err(SpaceError::NotABatch(
            "an element is not in the space".into(),
        ));
    }
    Ok(items)
}

fn not_a_batch(space: &Space) -> SpaceError {
    SpaceError::NotABatch(format!("value does not match batched {}", space.kind()))
}

fn split_rows<T: Clone>(array: &Array<T>, inner: &[usize]) -> Option<Vec<Array<T>>> {
    let shape = array.shape();
    if shape.len() != inner.len() + 1 || &shape[1..] != inner {
        return None;
    }
    let width: usize = inner.iter().product();
    if width == 0 {
        return Some(
            (0..shape[0])
                .map(|_| Array::new(inner.to_vec(), Vec::new()).expect("empty"))
                .collect(),
        );
    }
    Some(
        array
            .data()
            .chunks(width)
            .map(|row| Array::new(inner.to_vec(), row.to_vec()).expect("row sized"))
            .collect(),
    )
}

fn unstack(space: &Space, batched: &Value) -> Result<Vec<Value>, SpaceError> {
    let err = || not_a_batch(space);
    match (space, batched) {
        (Space::Box(b), Value::Real(a)) if b.dtype() == DType::Float64 => {
            Ok(split_rows(a, b.shape())
                .ok_or_else(err)?
                .into_iter()
                .map(Value::Real)
                .collect())
        }
        (Space::Box(b), Value::Integer(a)) if b.dtype() == DType::Int64 => {
            Ok(split_rows(a, b.shape())
                .ok_or_else(err)?
                .into_iter()
                .map(Value::Integer)
                .collect())
        }
        (Space::Discrete(_), Value::Integer(a)) if a.shape().len() == 1 => {
            Ok(a.data().iter().map(|&x| Value::Discrete(x)).collect())
        }
        (Space::MultiDiscrete(m), Value::Integer(a)) => Ok(split_rows(a, &[m.nvec().len()])
            .ok_or_else(err)?
            .into_iter()
            .map(Value::Integer)
            .collect()),
        (Space::MultiBinary(m), Value::Integer(a)) => Ok(split_rows(a, &[m.n()])
            .ok_or_else(err)?
            .into_iter()
            .map(Value::Integer)
            .collect()),
        (Space::Product(children), Value::Tuple(columns)) if children.len() == columns.len() => {
            let per_child = children
                .iter()
                .zip(columns)
                .map(|(s, c)| unstack(s, c))
                .collect::<Result<Vec<_>, _>>()?;
            let n = per_child[0].len();
            if per_child.iter().any(|c| c.len() != n) {
                return Err(SpaceError::NotABatch(
                    "product children have different batch sizes".into(),
                ));
            }
            let mut iters: Vec<_> = per_child.into_iter().map(Vec::into_iter).collect();
            Ok((0..n)
                .map(|_| {
                    Value::Tuple(
                        iters
                            .iter_mut()
                            .map(|it| it.next().expect("equal lengths"))
                            .collect(),
                    )
                })
                .collect())
        }
        (Space::Mapping(entries), Value::Map(columns)) if entries.len() == columns.len() => {
            let mut per_key = Vec::with_capacity(entries.len());
            for (k, s) in entries {
                let column = columns.get(k).ok_or_else(err)?;
                per_key.push((k.clone(), unstack(s, column)?));
            }
            let n = per_key.first().map_or(0, |(_, c)| c.len());
            if per_key.iter().any(|(_, c)| c.len() != n) {
                return Err(SpaceError::NotABatch(
                    "mapping entries have different batch sizes".into(),
                ));
            }
            let mut iters: Vec<_> = per_key
                .into_iter()
                .map(|(k, c)| (k, c.into_iter()))
                .collect();
            Ok((0..n)
                .map(|_| {
                    Value::Map(
                        iters
                            .iter_mut()
                            .map(|(k, it)| (k.clone(), it.next().expect("equal lengths")))
                            .collect::<BTreeMap<_, _>>(),
                    )
                })
                .collect())
        }
        (
            Space::Text(_) | Space::Sequence(_) | Space::Graph(_) | Space::OneOf(_),
            Value::Tuple(items),
        ) => Ok(items.clone()),
        _ => Err(err()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_batches_to_multi_discrete() {
        let d = Space::discrete(3).unwrap();
        assert_eq!(
            batch_space(&d, 2),
            Space::multi_discrete(vec![3, 3]).unwrap()
        );
        let batched = concatenate(&d, &[Value::Discrete(0), Value::Discrete(2)]).unwrap();
        assert_eq!(batched, Value::integer(vec![0, 2]));
        assert_eq!(
            iterate(&d, &Value::integer(vec![1, 2, 0])).unwrap(),
            vec![Value::Discrete(1), Value::Discrete(2), Value::Discrete(0)]
        );
    }

    #[test]
    fn box_gains_leading_axis() {
        let b = Space::real_box(-1.0, 1.0, vec![4]).unwrap();
        let Space::Box(bb) = batch_space(&b, 3) else {
            panic!()
        };
        assert_eq!(bb.shape(), &[3, 4]);
        assert_eq!(bb.low(), &[-1.0; 12]);

        let b2 = Space::real_box(0.0, 5.0, vec![2]).unwrap();
        let xs = vec![Value::real(vec![1.0, 2.0]), Value::real(vec![3.0, 4.0])];
        let batched = concatenate(&b2, &xs).unwrap();
        assert_eq!(
            batched,
            Value::Real(Array::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap())
        );
        assert_eq!(iterate(&b2, &batched).unwrap(), xs);
    }

    #[test]
    fn text_falls_back_to_product() {
        let t = Space::text(1, 4).unwrap();
        assert_eq!(
            batch_space(&t, 2),
            Space::Product(vec![t.clone(), t.clone()])
        );
    }

    #[test]
    fn errors() {
        let d = Space::discrete(3).unwrap();
        assert_eq!(concatenate(&d, &[]), Err(SpaceError::EmptyBatch));
        assert_eq!(
            concatenate(&d, &[Value::Discrete(3)]),
            Err(SpaceError::ValueNotInSpace)
        );
        assert!(matches!(
            iterate(&d, &Value::Discrete(1)),
            Err(SpaceError::NotABatch(_))
        ));
        assert!(matches!(
            iterate(&d, &Value::integer(vec![5])),
            Err(SpaceError::NotABatch(_))
        ));
        assert!(matches!(
            iterate(&d, &Value::integer(vec![])),
            Err(SpaceError::NotABatch(_))
        ));
    }

    #[test]
    fn batched_samples_are_members_of_batch_space() {
        let s = Space::mapping(vec![
            ("pos", Space::real_box(-1.0, 1.0, vec![2]).unwrap()),
            ("bits", Space::multi_binary(3).unwrap()),
            (
                "md",
                Space::MultiDiscrete(MultiDiscrete::with_start(vec![2, 4], vec![-1, 3]).unwrap()),
            ),
            ("label", Space::text(0, 3).unwrap()),
        ])
        .unwrap();
        let mut rng = crate::seeding::rng_from_seed(8);
        let xs: Vec<Value> = (0..5).map(|_| s.sample(&mut rng)).collect();
        let batched = concatenate(&s, &xs).unwrap();
        assert!(batch_space(&s, 5).contains(&batched));
        assert_eq!(iterate(&s, &batched).unwrap(), xs);
    }
}
