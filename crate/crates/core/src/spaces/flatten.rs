use std::collections::BTreeMap;

use super::{Array, BoxSpace, DType, Space, SpaceError, Value};

/// Width of the flat encoding of `space`.
pub fn flatdim(space: &Space) -> Result<usize, SpaceError> {
    match space {
        Space::Box(b) => Ok(b.size()),
        Space::Discrete(d) => Ok(d.n() as usize),
        Space::MultiDiscrete(m) => Ok(m.nvec().iter().map(|&n| n as usize).sum()),
        Space::MultiBinary(m) => Ok(m.n()),
        Space::Product(children) => children.iter().map(flatdim).sum(),
        Space::Mapping(entries) => entries.iter().map(|(_, s)| flatdim(s)).sum(),
        Space::OneOf(alternatives) => {
            Ok(1 + alternatives.iter().map(flatdim).sum::<Result<usize, _>>()?)
        }
        Space::Text(_) | Space::Sequence(_) | Space::Graph(_) => {
            Err(SpaceError::UnflattenableSpace(space.kind()))
        }
    }
}

/// Encodes `value` as a fixed-width real vector.
///
/// Discrete components become one-hot blocks with the start offset removed.
/// A one-of sample stores its alternative index in slot 0, followed by one
/// block per alternative of which only the active one is non-zero.
pub fn flatten(space: &Space, value: &Value) -> Result<Vec<f64>, SpaceError> {
    let dim = flatdim(space)?;
    if !space.contains(value) {
        return Err(SpaceError::ValueNotInSpace);
    }
    let mut out = Vec::with_capacity(dim);
    write_flat(space, value, &mut out);
    debug_assert_eq!(out.len(), dim);
    Ok(out)
}

fn one_hot(out: &mut Vec<f64>, width: usize, hot: usize) {
    let base = out.len();
    out.resize(base + width, 0.0);
    out[base + hot] = 1.0;
}

// `value` is known to be a member of `space`.
fn write_flat(space: &Space, value: &Value, out: &mut Vec<f64>) {
    match (space, value) {
        (Space::Box(_), Value::Real(a)) => out.extend_from_slice(a.data()),
        (Space::Box(_), Value::Integer(a)) => out.extend(a.data().iter().map(|&x| x as f64)),
        (Space::Discrete(d), Value::Discrete(v)) => {
            one_hot(out, d.n() as usize, (v - d.start()) as usize)
        }
        (Space::MultiDiscrete(m), Value::Integer(a)) => {
            for ((&n, &s), &x) in m.nvec().iter().zip(m.start()).zip(a.data()) {
                one_hot(out, n as usize, (x - s) as usize);
            }
        }
        (Space::MultiBinary(_), Value::Integer(a)) => {
            out.extend(a.data().iter().map(|&x| x as f64))
        }
        (Space::Product(children), Value::Tuple(items)) => {
            for (s, v) in children.iter().zip(items) {
                write_flat(s, v, out);
            }
        }
        (Space::Mapping(entries), Value::Map(map)) => {
            for (k, s) in entries {
                write_flat(s, &map[k], out);
            }
        }
        (Space::OneOf(alternatives), Value::OneOf(index, inner)) => {
            out.push(*index as f64);
            for (i, s) in alternatives.iter().enumerate() {
                if i == *index {
                    write_flat(s, inner, out);
                } else {
                    let width = flatdim(s).expect("checked by caller");
                    out.resize(out.len() + width, 0.0);
                }
            }
        }
        _ => unreachable!("membership checked before flattening"),
    }
}

/// Inverse of [`flatten`]. One-hot blocks decode by argmax, lowest index on ties.
pub fn unflatten(space: &Space, flat: &[f64]) -> Result<Value, SpaceError> {
    let dim = flatdim(space)?;
    if flat.len() != dim {
        return Err(SpaceError::DimensionMismatch {
            expected: dim,
            actual: flat.len(),
        });
    }
    let mut cursor = flat;
    read_flat(space, &mut cursor)
}

fn take<'a>(cursor: &mut &'a [f64], n: usize) -> &'a [f64] {
    let (head, tail) = cursor.split_at(n);
    *cursor = tail;
    head
}

fn decode_one_hot(block: &[f64]) -> Result<usize, SpaceError> {
    if block.iter().all(|&x| x == 0.0) {
        return Err(SpaceError::MalformedEncoding(
            "all-zero one-hot block".into(),
        ));
    }
    let mut best = 0;
    for (i, &x) in block.iter().enumerate() {
        if x > block[best] {
            best = i;
        }
    }
    Ok(best)
}

fn read_flat(space: &Space, cursor: &mut &[f64]) -> Result<Value, SpaceError> {
    Ok(match space {
        Space::Box(b) => {
            let block = take(cursor, b.size());
            match b.dtype() {
                DType::Float64 => Value::Real(
                    Array::new(b.shape().to_vec(), block.to_vec()).expect("sized by shape"),
                ),
                DType::Int64 => Value::Integer(
                    Array::new(
                        b.shape().to_vec(),
                        block.iter().map(|x| x.round() as i64).collect(),
                    )
                    .expect("sized by shape"),
                ),
            }
        }
        Space::Discrete(d) => {
            let block = take(cursor, d.n() as usize);
            Value::Discrete(d.start() + decode_one_hot(block)? as i64)
        }
        Space::MultiDiscrete(m) => {
            let mut data = Vec::with_capacity(m.nvec().len());
            for (&n, &s) in m.nvec().iter().zip(m.start()) {
                data.push(s + decode_one_hot(take(cursor, n as usize))? as i64);
            }
            Value::integer(data)
        }
        Space::MultiBinary(m) => Value::integer(
            take(cursor, m.n())
                .iter()
                .map(|&x| if x >= 0.5 { 1 } else { 0 })
                .collect(),
        ),
        Space::Product(children) => Value::Tuple(
            children
                .iter()
                .map(|s| read_flat(s, cursor))
                .collect::<Result<_, _>>()?,
        ),
        Space::Mapping(entries) => {
            let mut map = BTreeMap::new();
            for (k, s) in entries {
                map.insert(k.clone(), read_flat(s, cursor)?);
            }
            Value::Map(map)
        }
        Space::OneOf(alternatives) => {
            let tag = take(cursor, 1)[0];
            if !(tag >= 0.0 && tag.fract() == 0.0 && (tag as usize) < alternatives.len()) {
                return Err(SpaceError::MalformedEncoding(format!(
                    "one-of tag {tag} is not a valid index"
                )));
            }
            let index = tag as usize;
            let mut active = None;
            for (i, s) in alternatives.iter().enumerate() {
                if i == index {
                    active = Some(read_flat(s, cursor)?);
                } else {
                    take(cursor, flatdim(s)?);
                }
            }
            Value::OneOf(index, Box::new(active.expect("index in range")))
        }
        Space::Text(_) | Space::Sequence(_) | Space::Graph(_) => {
            return Err(SpaceError::UnflattenableSpace(space.kind()));
        }
    })
}

/// The box that contains every flattened sample of `space`.
pub fn flatten_space(space: &Space) -> Result<Space, SpaceError> {
    let dim = flatdim(space)?;
    let mut low = Vec::with_capacity(dim);
    let mut high = Vec::with_capacity(dim);
    flat_bounds(space, &mut low, &mut high);
    BoxSpace::new(low, high, vec![dim], DType::Float64).map(Space::Box)
}

fn flat_bounds(space: &Space, low: &mut Vec<f64>, high: &mut Vec<f64>) {
    match space {
        Space::Box(b) => {
            low.extend_from_slice(b.low());
            high.extend_from_slice(b.high());
        }
        Space::Discrete(_) | Space::MultiDiscrete(_) | Space::MultiBinary(_) => {
            let width = flatdim(space).expect("flattenable");
            low.resize(low.len() + width, 0.0);
            high.resize(high.len() + width, 1.0);
        }
        Space::Product(children) => children.iter().for_each(|s| flat_bounds(s, low, high)),
        Space::Mapping(entries) => entries.iter().for_each(|(_, s)| flat_bounds(s, low, high)),
        Space::OneOf(alternatives) => {
            low.push(0.0);
            high.push((alternatives.len() - 1) as f64);
            for s in alternatives {
                let start = low.len();
                flat_bounds(s, low, high);
                // Inactive blocks are zero-filled.
                for x in &mut low[start..] {
                    *x = x.min(0.0);
                }
                for x in &mut high[start..] {
                    *x = x.max(0.0);
                }
            }
        }
        Space::Text(_) | Space::Sequence(_) | Space::Graph(_) => unreachable!("flatdim rejected"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mapping_ab() -> Space {
        Space::mapping(vec![
            ("a", Space::real_box(-1.0, 1.0, vec![2]).unwrap()),
            ("b", Space::discrete(3).unwrap()),
        ])
        .unwrap()
    }

    #[test]
    fn flatdim_rules() {
        assert_eq!(
            flatdim(&Space::real_box(0.0, 1.0, vec![2, 3]).unwrap()),
            Ok(6)
        );
        assert_eq!(flatdim(&Space::discrete(5).unwrap()), Ok(5));
        assert_eq!(flatdim(&mapping_ab()), Ok(5));
        assert_eq!(flatdim(&Space::multi_discrete(vec![2, 3]).unwrap()), Ok(5));
        let one_of = Space::one_of(vec![
            Space::discrete(2).unwrap(),
            Space::multi_binary(3).unwrap(),
        ])
        .unwrap();
        assert_eq!(flatdim(&one_of), Ok(6));
        assert_eq!(
            flatdim(&Space::text(0, 3).unwrap()),
            Err(SpaceError::UnflattenableSpace("text"))
        );
        assert!(flatdim(&Space::sequence(Space::discrete(2).unwrap())).is_err());
    }

    #[test]
    fn discrete_one_hot() {
        let d = Space::discrete(4).unwrap();
        assert_eq!(
            flatten(&d, &Value::Discrete(2)).unwrap(),
            vec![0.0, 0.0, 1.0, 0.0]
        );
        assert_eq!(
            unflatten(&d, &[0.0, 0.0, 1.0, 0.0]).unwrap(),
            Value::Discrete(2)
        );
        assert_eq!(
            unflatten(&d, &[0.0, 0.0, 0.0]),
            Err(SpaceError::DimensionMismatch {
                expected: 4,
                actual: 3
            })
        );
        assert!(matches!(
            unflatten(&d, &[0.0; 4]),
            Err(SpaceError::MalformedEncoding(_))
        ));
        assert_eq!(
            flatten(&d, &Value::Discrete(4)),
            Err(SpaceError::ValueNotInSpace)
        );
    }

    #[test]
    fn one_hot_decode_ties_take_lowest_index() {
        let d = Space::Discrete(crate::spaces::Discrete::new(3, 10).unwrap());
        assert_eq!(
            unflatten(&d, &[0.2, 0.7, 0.7]).unwrap(),
            Value::Discrete(11)
        );
        assert_eq!(
            flatten(&d, &Value::Discrete(12)).unwrap(),
            vec![0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn product_concatenates_in_order() {
        let p = Space::product(vec![
            Space::discrete(2).unwrap(),
            Space::real_box(0.0, 1.0, vec![1]).unwrap(),
        ])
        .unwrap();
        let v = Value::Tuple(vec![Value::Discrete(1), Value::real(vec![0.5])]);
        let flat = flatten(&p, &v).unwrap();
        assert_eq!(flat, vec![0.0, 1.0, 0.5]);
        assert_eq!(unflatten(&p, &flat).unwrap(), v);
    }

    #[test]
    fn box_identity() {
        let b = Space::real_box(0.0, 1.0, vec![2]).unwrap();
        assert_eq!(
            unflatten(&b, &[0.1, 0.2]).unwrap(),
            Value::real(vec![0.1, 0.2])
        );
    }

    #[test]
    fn one_of_layout() {
        let s = Space::one_of(vec![
            Space::discrete(2).unwrap(),
            Space::real_box(-5.0, 5.0, vec![2]).unwrap(),
        ])
        .unwrap();
        let v = Value::OneOf(1, Box::new(Value::real(vec![3.0, -4.0])));
        let flat = flatten(&s, &v).unwrap();
        assert_eq!(flat, vec![1.0, 0.0, 0.0, 3.0, -4.0]);
        assert_eq!(unflatten(&s, &flat).unwrap(), v);
        assert!(matches!(
            unflatten(&s, &[2.0, 1.0, 0.0, 0.0, 0.0]),
            Err(SpaceError::MalformedEncoding(_))
        ));
        let Space::Box(fb) = flatten_space(&s).unwrap() else {
            panic!()
        };
        assert_eq!(fb.low(), &[0.0, 0.0, 0.0, -5.0, -5.0]);
        assert_eq!(fb.high(), &[1.0, 1.0, 1.0, 5.0, 5.0]);
    }

    #[test]
    fn flatten_space_contains_flattened_samples() {
        let s = mapping_ab();
        let fs = flatten_space(&s).unwrap();
        let mut rng = crate::seeding::rng_from_seed(3);
        for _ in 0..100 {
            let v = s.sample(&mut rng);
            assert!(fs.contains(&Value::real(flatten(&s, &v).unwrap())));
        }
    }
}
