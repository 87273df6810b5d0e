//! JSON form of space descriptions: `{"kind": ..., <kind fields>}`.
//! Infinite box bounds are written as the strings `"inf"` and `"-inf"`.

use serde_json::{json, Map, Value as Json};

use super::{BoxSpace, DType, Discrete, MultiBinary, MultiDiscrete, Space, SpaceError, TextSpace};

fn bound_to_json(x: f64) -> Json {
    if x == f64::INFINITY {
        Json::from("inf")
    } else if x == f64::NEG_INFINITY {
        Json::from("-inf")
    } else {
        Json::from(x)
    }
}

fn malformed(msg: impl Into<String>) -> SpaceError {
    SpaceError::MalformedDocument(msg.into())
}

fn bound_from_json(v: &Json) -> Result<f64, SpaceError> {
    match v {
        Json::Number(n) => n.as_f64().ok_or_else(|| malformed("bound is not a real")),
        Json::String(s) if s == "inf" => Ok(f64::INFINITY),
        Json::String(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        other => Err(malformed(format!("invalid bound {other}"))),
    }
}

fn field<'a>(obj: &'a Map<String, Json>, key: &str) -> Result<&'a Json, SpaceError> {
    obj.get(key)
        .ok_or_else(|| malformed(format!("missing field `{key}`")))
}

fn uint(obj: &Map<String, Json>, key: &str) -> Result<u64, SpaceError> {
    field(obj, key)?
        .as_u64()
        .ok_or_else(|| malformed(format!("`{key}` must be a non-negative integer")))
}

fn array<'a>(obj: &'a Map<String, Json>, key: &str) -> Result<&'a Vec<Json>, SpaceError> {
    field(obj, key)?
        .as_array()
        .ok_or_else(|| malformed(format!("`{key}` must be an array")))
}

fn uint_list(obj: &Map<String, Json>, key: &str) -> Result<Vec<u64>, SpaceError> {
    array(obj, key)?
        .iter()
        .map(|v| {
            v.as_u64()
                .ok_or_else(|| malformed(format!("`{key}` entries must be non-negative integers")))
        })
        .collect()
}

impl Space {
    pub fn to_json(&self) -> Json {
        match self {
            Space::Box(b) => json!({
                "kind": "box",
                "low": b.low().iter().copied().map(bound_to_json).collect::<Vec<_>>(),
                "high": b.high().iter().copied().map(bound_to_json).collect::<Vec<_>>(),
                "shape": b.shape(),
                "dtype": b.dtype().name(),
            }),
            Space::Discrete(d) => json!({"kind": "discrete", "n": d.n(), "start": d.start()}),
            Space::MultiDiscrete(m) => {
                json!({"kind": "multi_discrete", "nvec": m.nvec(), "start": m.start()})
            }
            Space::MultiBinary(m) => json!({"kind": "multi_binary", "n": m.n()}),
            Space::Text(t) => json!({
                "kind": "text",
                "min_length": t.min_length(),
                "max_length": t.max_length(),
                "charset": t.charset().iter().collect::<String>(),
            }),
            Space::Product(children) => json!({
                "kind": "product",
                "subspaces": children.iter().map(Space::to_json).collect::<Vec<_>>(),
            }),
            Space::Mapping(entries) => json!({
                "kind": "mapping",
                "entries": entries
                    .iter()
                    .map(|(k, s)| json!({"key": k, "space": s.to_json()}))
                    .collect::<Vec<_>>(),
            }),
            Space::Sequence(element) => json!({"kind": "sequence", "element": element.to_json()}),
            Space::Graph(g) => json!({
                "kind": "graph",
                "node_space": g.node_space().to_json(),
                "edge_space": g.edge_space().map(Space::to_json),
            }),
            Space::OneOf(alternatives) => json!({
                "kind": "one_of",
                "alternatives": alternatives.iter().map(Space::to_json).collect::<Vec<_>>(),
            }),
        }
    }

    pub fn from_json(doc: &Json) -> Result<Space, SpaceError> {
        let obj = doc
            .as_object()
            .ok_or_else(|| malformed("space must be a JSON object"))?;
        let kind = field(obj, "kind")?
            .as_str()
            .ok_or_else(|| malformed("`kind` must be a string"))?;
        let children = |key: &str| -> Result<Vec<Space>, SpaceError> {
            array(obj, key)?.iter().map(Space::from_json).collect()
        };
        match kind {
            "box" => {
                let low = array(obj, "low")?
                    .iter()
                    .map(bound_from_json)
                    .collect::<Result<Vec<_>, _>>()?;
                let high = array(obj, "high")?
                    .iter()
                    .map(bound_from_json)
                    .collect::<Result<Vec<_>, _>>()?;
                let shape = uint_list(obj, "shape")?
                    .into_iter()
                    .map(|d| d as usize)
                    .collect();
                let dtype = match field(obj, "dtype")?.as_str() {
                    Some("float64") => DType::Float64,
                    Some("int64") => DType::Int64,
                    _ => return Err(malformed("`dtype` must be \"float64\" or \"int64\"")),
                };
                BoxSpace::new(low, high, shape, dtype).map(Space::Box)
            }
            "discrete" => {
                let start = match obj.get("start") {
                    None => 0,
                    Some(v) => v
                        .as_i64()
                        .ok_or_else(|| malformed("`start` must be an integer"))?,
                };
                Discrete::new(uint(obj, "n")?, start).map(Space::Discrete)
            }
            "multi_discrete" => {
                let nvec = uint_list(obj, "nvec")?;
                let start = match obj.get("start") {
                    None => vec![0; nvec.len()],
                    Some(Json::Array(items)) => items
                        .iter()
                        .map(|v| {
                            v.as_i64()
                                .ok_or_else(|| malformed("`start` entries must be integers"))
                        })
                        .collect::<Result<_, _>>()?,
                    Some(_) => return Err(malformed("`start` must be an array")),
                };
                MultiDiscrete::with_start(nvec, start).map(Space::MultiDiscrete)
            }
            "multi_binary" => MultiBinary::new(uint(obj, "n")? as usize).map(Space::MultiBinary),
            "text" => {
                let charset = match obj.get("charset") {
                    None => super::ALPHANUMERIC,
                    Some(v) => v
                        .as_str()
                        .ok_or_else(|| malformed("`charset` must be a string"))?,
                };
                TextSpace::new(
                    uint(obj, "min_length")? as usize,
                    uint(obj, "max_length")? as usize,
                    charset,
                )
                .map(Space::Text)
            }
            "product" => Space::product(children("subspaces")?),
            "mapping" => {
                let entries = array(obj, "entries")?
                    .iter()
                    .map(|e| {
                        let e = e
                            .as_object()
                            .ok_or_else(|| malformed("mapping entries must be objects"))?;
                        let key = field(e, "key")?
                            .as_str()
                            .ok_or_else(|| malformed("mapping key must be a string"))?;
                        Ok((key.to_string(), Space::from_json(field(e, "space")?)?))
                    })
                    .collect::<Result<Vec<_>, SpaceError>>()?;
                Space::mapping(entries)
            }
            "sequence" => Ok(Space::sequence(Space::from_json(field(obj, "element")?)?)),
            "graph" => {
                let node = Space::from_json(field(obj, "node_space")?)?;
                let edge = match obj.get("edge_space") {
                    None | Some(Json::Null) => None,
                    Some(v) => Some(Space::from_json(v)?),
                };
                Space::graph(node, edge)
            }
            "one_of" => Space::one_of(children("alternatives")?),
            other => Err(malformed(format!("unknown space kind `{other}`"))),
        }
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }

    pub fn from_json_str(text: &str) -> Result<Space, SpaceError> {
        let doc: Json = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        Space::from_json(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_bounds_are_strings() {
        let b = Space::Box(
            BoxSpace::new(
                vec![f64::NEG_INFINITY, -1.5],
                vec![f64::INFINITY, 0.1],
                vec![2],
                DType::Float64,
            )
            .unwrap(),
        );
        let text = b.to_json_string();
        assert!(text.contains("\"-inf\"") && text.contains("\"inf\""));
        assert_eq!(Space::from_json_str(&text).unwrap(), b);
    }

    #[test]
    fn nested_round_trip() {
        let s = Space::mapping(vec![
            (
                "z",
                Space::one_of(vec![
                    Space::discrete(2).unwrap(),
                    Space::text(1, 3).unwrap(),
                ])
                .unwrap(),
            ),
            ("a", Space::sequence(Space::multi_binary(2).unwrap())),
            (
                "g",
                Space::graph(
                    Space::real_box(0.0, 1.0, vec![3]).unwrap(),
                    Some(Space::discrete(4).unwrap()),
                )
                .unwrap(),
            ),
            ("m", Space::multi_discrete(vec![2, 5]).unwrap()),
            (
                "p",
                Space::product(vec![Space::discrete(3).unwrap()]).unwrap(),
            ),
        ])
        .unwrap();
        let back = Space::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
        // Mapping order survives even though keys are unsorted.
        let Space::Mapping(entries) = back else {
            panic!()
        };
        assert_eq!(entries[0].0, "z");
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(Space::from_json_str("{}").is_err());
        assert!(Space::from_json_str(r#"{"kind":"discrete","n":0}"#).is_err());
        assert!(Space::from_json_str(r#"{"kind":"warp"}"#).is_err());
        assert!(Space::from_json_str(
            r#"{"kind":"box","low":[1],"high":[0],"shape":[1],"dtype":"float64"}"#
        )
        .is_err());
    }
}
