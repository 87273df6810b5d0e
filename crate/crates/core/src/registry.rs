//! Versioned environment ids, registration, creation, and spec serialization.
//!
//! Ids follow `[namespace/]name[-vN]`. A spec holds everything needed to
//! build an identical instance again: the constructor key, resolved keyword
//! arguments, and the wrapper settings applied by [`Registry::make`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::env::{Env, InfoValue, RenderMode};
use crate::wrappers::{OrderEnforcing, TimeLimit, Wrapper};

/// Keyword arguments passed to environment constructors.
pub type Kwargs = BTreeMap<String, InfoValue>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("malformed environment id `{id}`: {reason}")]
    MalformedId { id: String, reason: String },
    #[error("environment `{0}` is already registered")]
    DuplicateRegistration(String),
    #[error("environment id `{0}` has no version; registered ids must carry -vN")]
    MissingVersion(String),
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),
    #[error("environment `{id}` has no version v{requested}; available versions: {}", format_versions(.available))]
    VersionNotFound {
        id: String,
        requested: u32,
        available: Vec<u32>,
    },
    #[error("unknown entry point `{0}`")]
    UnknownEntryPoint(String),
    #[error("invalid kwargs: {0}")]
    InvalidKwargs(String),
    #[error("kwarg `{0}` cannot be serialized")]
    UnserializableKwargs(String),
    #[error("malformed spec document: {0}")]
    MalformedDocument(String),
}

fn format_versions(versions: &[u32]) -> String {
    versions
        .iter()
        .map(|v| format!("v{v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl RegistryError {
    pub fn name(&self) -> &'static str {
        match self {
            RegistryError::MalformedId { .. } => "MalformedId",
            RegistryError::DuplicateRegistration(_) => "DuplicateRegistration",
            RegistryError::MissingVersion(_) => "MissingVersion",
            RegistryError::UnknownEnvironment(_) => "UnknownEnvironment",
            RegistryError::VersionNotFound { .. } => "VersionNotFound",
            RegistryError::UnknownEntryPoint(_) => "UnknownEntryPoint",
            RegistryError::InvalidKwargs(_) => "InvalidKwargs",
            RegistryError::UnserializableKwargs(_) => "UnserializableKwargs",
            RegistryError::MalformedDocument(_) => "MalformedDocument",
        }
    }
}

/// A parsed `[namespace/]name[-vN]` identifier.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnvId {
    pub namespace: Option<String>,
    pub name: String,
    pub version: Option<u32>,
}

fn valid_name(s: &str) -> bool {
    let edge = |c: char| c.is_ascii_alphanumeric() || c == '_';
    let inner = |c: char| edge(c) || matches!(c, ':' | '.' | '-');
    match (s.chars().next(), s.chars().last()) {
        (Some(first), Some(last)) => edge(first) && edge(last) && s.chars().all(inner),
        _ => false,
    }
}

impl EnvId {
    pub fn new(namespace: Option<&str>, name: &str, version: Option<u32>) -> Self {
        Self {
            namespace: namespace.map(str::to_string),
            name: name.to_string(),
            version,
        }
    }

    pub fn parse(text: &str) -> Result<Self, RegistryError> {
        let fail = |reason: &str| RegistryError::MalformedId {
            id: text.to_string(),
            reason: reason.to_string(),
        };
        let (namespace, rest) = match text.split_once('/') {
            Some((ns, rest)) => {
                if rest.contains('/') {
                    return Err(fail("more than one `/`"));
                }
                if !valid_name(ns) {
                    return Err(fail("invalid namespace"));
                }
                (Some(ns.to_string()), rest)
            }
            None => (None, text),
        };
        // A trailing `-v...` segment that contains a digit is a version token.
        let (name, version) = match rest.rsplit_once('-') {
            Some((name, token))
                if token.starts_with('v') && token.chars().any(|c| c.is_ascii_digit()) =>
            {
                let digits = &token[1..];
                let well_formed = !digits.is_empty()
                    && digits.chars().all(|c| c.is_ascii_digit())
                    && (digits == "0" || !digits.starts_with('0'));
                if !well_formed {
                    return Err(fail("bad version token"));
                }
                let version = digits
                    .parse::<u32>()
                    .map_err(|_| fail("version out of range"))?;
                (name, Some(version))
            }
            _ => (rest, None),
        };
        if name.is_empty() {
            return Err(fail("empty name"));
        }
        if !valid_name(name) {
            return Err(fail("invalid name"));
        }
        Ok(Self {
            namespace,
            name: name.to_string(),
            version,
        })
    }

    /// The id without its version.
    pub fn unversioned(&self) -> EnvId {
        EnvId {
            version: None,
            ..self.clone()
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(ns) = &self.namespace {
            write!(f, "{ns}/")?;
        }
        f.write_str(&self.name)?;
        if let Some(v) = self.version {
            write!(f, "-v{v}")?;
        }
        Ok(())
    }
}

impl FromStr for EnvId {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvId::parse(s)
    }
}

/// Complete, serializable recipe for an environment instance.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub id: EnvId,
    /// Key into the registry's constructor table.
    pub entry_point: String,
    pub max_episode_steps: Option<u32>,
    /// Constructor arguments: registration defaults, with make-time overrides
    /// merged in on instances.
    pub kwargs: Kwargs,
    pub order_enforcing: bool,
    pub render_mode: Option<RenderMode>,
}

impl EnvSpec {
    pub fn new(id: &str, entry_point: &str) -> Result<Self, RegistryError> {
        Ok(Self {
            id: EnvId::parse(id)?,
            entry_point: entry_point.to_string(),
            max_episode_steps: None,
            kwargs: Kwargs::new(),
            order_enforcing: true,
            render_mode: None,
        })
    }

    pub fn with_max_episode_steps(mut self, steps: u32) -> Self {
        self.max_episode_steps = Some(steps);
        self
    }

    pub fn with_kwarg(mut self, key: &str, value: impl Into<InfoValue>) -> Self {
        self.kwargs.insert(key.to_string(), value.into());
        self
    }

    /// Canonical JSON: sorted keys, no insignificant whitespace.
    pub fn to_json(&self) -> Result<String, RegistryError> {
        let kwargs = self
            .kwargs
            .iter()
            .map(|(k, v)| Ok((k.clone(), kwarg_to_json(k, v)?)))
            .collect::<Result<Map<String, Json>, RegistryError>>()?;
        let doc = json!({
            "id": self.id.to_string(),
            "entry_point": self.entry_point,
            "max_episode_steps": self.max_episode_steps,
            "kwargs": kwargs,
            "order_enforcing": self.order_enforcing,
            "render_mode": self.render_mode.map(RenderMode::as_str),
        });
        Ok(doc.to_string())
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let malformed = |msg: String| RegistryError::MalformedDocument(msg);
        let doc: Json = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        let obj = doc
            .as_object()
            .ok_or_else(|| malformed("spec must be a JSON object".into()))?;
        const KNOWN: [&str; 6] = [
            "id",
            "entry_point",
            "max_episode_steps",
            "kwargs",
            "order_enforcing",
            "render_mode",
        ];
        if let Some(unknown) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(malformed(format!("unknown field `{unknown}`")));
        }
        let id = obj
            .get("id")
            .and_then(Json::as_str)
            .ok_or_else(|| malformed("missing string field `id`".into()))?;
        let entry_point = obj
            .get("entry_point")
            .and_then(Json::as_str)
            .ok_or_else(|| malformed("missing string field `entry_point`".into()))?;
        let max_episode_steps =
            match obj.get("max_episode_steps") {
                None | Some(Json::Null) => None,
                Some(v) => Some(v.as_u64().and_then(|n| u32::try_from(n).ok()).ok_or_else(
                    || malformed("`max_episode_steps` must be a non-negative integer".into()),
                )?),
            };
        let kwargs = match obj.get("kwargs") {
            None => Kwargs::new(),
            Some(Json::Object(m)) => m
                .iter()
                .map(|(k, v)| Ok((k.clone(), kwarg_from_json(v)?)))
                .collect::<Result<Kwargs, RegistryError>>()?,
            Some(_) => return Err(malformed("`kwargs` must be an object".into())),
        };
        let order_enforcing = match obj.get("order_enforcing") {
            None => true,
            Some(v) => v
                .as_bool()
                .ok_or_else(|| malformed("`order_enforcing` must be a boolean".into()))?,
        };
        let render_mode = match obj.get("render_mode") {
            None | Some(Json::Null) => None,
            Some(Json::String(s)) => Some(s.parse::<RenderMode>().map_err(malformed)?),
            Some(_) => return Err(malformed("`render_mode` must be a string or null".into())),
        };
        Ok(Self {
            id: EnvId::parse(id)?,
            entry_point: entry_point.to_string(),
            max_episode_steps,
            kwargs,
            order_enforcing,
            render_mode,
        })
    }
}

fn kwarg_to_json(key: &str, value: &InfoValue) -> Result<Json, RegistryError> {
    let unserializable = || RegistryError::UnserializableKwargs(key.to_string());
    Ok(match value {
        InfoValue::Bool(b) => Json::Bool(*b),
        InfoValue::Int(i) => Json::from(*i),
        InfoValue::Float(x) => {
            Json::Number(serde_json::Number::from_f64(*x).ok_or_else(unserializable)?)
        }
        InfoValue::Str(s) => Json::String(s.clone()),
        InfoValue::List(items) => Json::Array(
            items
                .iter()
                .map(|v| kwarg_to_json(key, v))
                .collect::<Result<_, _>>()?,
        ),
        InfoValue::Map(m) => Json::Object(
            m.iter()
                .map(|(k, v)| Ok((k.clone(), kwarg_to_json(key, v)?)))
                .collect::<Result<_, RegistryError>>()?,
        ),
        InfoValue::Value(_) => return Err(unserializable()),
    })
}

fn kwarg_from_json(value: &Json) -> Result<InfoValue, RegistryError> {
    Ok(match value {
        Json::Bool(b) => InfoValue::Bool(*b),
        Json::Number(n) if n.is_i64() => InfoValue::Int(n.as_i64().expect("checked")),
        Json::Number(n) if n.is_f64() => InfoValue::Float(n.as_f64().expect("checked")),
        Json::String(s) => InfoValue::Str(s.clone()),
        Json::Array(items) => InfoValue::List(
            items
                .iter()
                .map(kwarg_from_json)
                .collect::<Result<_, _>>()?,
        ),
        Json::Object(m) => InfoValue::Map(
            m.iter()
                .map(|(k, v)| Ok((k.clone(), kwarg_from_json(v)?)))
                .collect::<Result<_, RegistryError>>()?,
        ),
        other => {
            return Err(RegistryError::MalformedDocument(format!(
                "unsupported kwarg value {other}"
            )))
        }
    })
}

/// Builds a raw environment from resolved kwargs and an optional render mode.
pub type EnvConstructor =
    Arc<dyn Fn(&Kwargs, Option<RenderMode>) -> Result<Box<dyn Env>, RegistryError> + Send + Sync>;

/// Make-time overrides.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MakeOptions {
    pub render_mode: Option<RenderMode>,
    pub max_episode_steps: Option<u32>,
    pub kwargs: Kwargs,
}

impl MakeOptions {
    pub fn render_mode(mode: RenderMode) -> Self {
        Self {
            render_mode: Some(mode),
            ..Self::default()
        }
    }
}

type SpecKey = (Option<String>, String, u32);

fn key_of(id: &EnvId) -> Option<SpecKey> {
    Some((id.namespace.clone(), id.name.clone(), id.version?))
}

/// Environment registry. Reads may run concurrently; registrations are serialized.
#[derive(Default)]
pub struct Registry {
    specs: RwLock<BTreeMap<SpecKey, EnvSpec>>,
    entry_points: RwLock<BTreeMap<String, EnvConstructor>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("specs", &self.specs.read().expect("registry lock").len())
            .finish_non_exhaustive()
    }
}

impl Registry {
    /// An empty registry with no entry points.
    pub fn new() -> Self {
        Self::default()
    }

    /// A registry holding the built-in environments.
    pub fn with_builtins() -> Self {
        let registry = Self::new();
        crate::envs::register_builtins(&registry);
        registry
    }

    pub fn register_entry_point<F>(&self, name: &str, constructor: F)
    where
        F: Fn(&Kwargs, Option<RenderMode>) -> Result<Box<dyn Env>, RegistryError>
            + Send
            + Sync
            + 'static,
    {
        self.entry_points
            .write()
            .expect("registry lock")
            .insert(name.to_string(), Arc::new(constructor));
    }

    pub fn register(&self, spec: EnvSpec) -> Result<(), RegistryError> {
        let key =
            key_of(&spec.id).ok_or_else(|| RegistryError::MissingVersion(spec.id.to_string()))?;
        let mut specs = self.specs.write().expect("registry lock");
        if specs.contains_key(&key) {
            return Err(RegistryError::DuplicateRegistration(spec.id.to_string()));
        }
        specs.insert(key, spec);
        Ok(())
    }

    /// Registered specs ordered by (namespace, name, version).
    pub fn list(&self, namespace: Option<&str>) -> Vec<EnvSpec> {
        self.specs
            .read()
            .expect("registry lock")
            .values()
            .filter(|s| namespace.is_none() || s.id.namespace.as_deref() == namespace)
            .cloned()
            .collect()
    }

    /// Looks up a registered spec. An unversioned id resolves to the highest version.
    pub fn spec(&self, id: &str) -> Result<EnvSpec, RegistryError> {
        let id = EnvId::parse(id)?;
        let specs = self.specs.read().expect("registry lock");
        let versions: Vec<u32> = specs
            .keys()
            .filter(|(ns, name, _)| *ns == id.namespace && *name == id.name)
            .map(|(_, _, v)| *v)
            .collect();
        if versions.is_empty() {
            return Err(RegistryError::UnknownEnvironment(id.to_string()));
        }
        let version = match id.version {
            None => *versions.iter().max().expect("non-empty"),
            Some(v) if versions.contains(&v) => v,
            Some(v) => {
                return Err(RegistryError::VersionNotFound {
                    id: id.unversioned().to_string(),
                    requested: v,
                    available: versions,
                })
            }
        };
        Ok(specs[&(id.namespace, id.name, version)].clone())
    }

    pub fn make(&self, id: &str, options: MakeOptions) -> Result<Box<dyn Env>, RegistryError> {
        let spec = self.spec(id)?;
        self.make_from_spec(&spec, options)
    }

    /// Builds an environment from a spec, applying order enforcement and the
    /// time limit it records, and attaches the fully resolved spec.
    pub fn make_from_spec(
        &self,
        spec: &EnvSpec,
        options: MakeOptions,
    ) -> Result<Box<dyn Env>, RegistryError> {
        let constructor = self
            .entry_points
            .read()
            .expect("registry lock")
            .get(&spec.entry_point)
            .cloned()
            .ok_or_else(|| RegistryError::UnknownEntryPoint(spec.entry_point.clone()))?;

        let mut resolved = spec.clone();
        resolved.kwargs.extend(options.kwargs);
        if options.max_episode_steps.is_some() {
            resolved.max_episode_steps = options.max_episode_steps;
        }
        if options.render_mode.is_some() {
            resolved.render_mode = options.render_mode;
        }
        if resolved.max_episode_steps == Some(0) {
            return Err(RegistryError::InvalidKwargs(
                "max_episode_steps must be at least 1".into(),
            ));
        }

        let raw = constructor(&resolved.kwargs, resolved.render_mode)?;
        if let Some(mode) = resolved.render_mode {
            if !raw.metadata().supports(mode) {
                return Err(RegistryError::InvalidKwargs(format!(
                    "render mode `{mode}` is not supported by `{}`",
                    resolved.id
                )));
            }
        }
        let mut env = raw;
        if resolved.order_enforcing {
            env = Box::new(OrderEnforcing::new(env));
        }
        if let Some(limit) = resolved.max_episode_steps {
            env = Box::new(TimeLimit::new(env, limit));
        }
        Ok(Box::new(WithSpec {
            inner: env,
            spec: resolved,
        }))
    }
}

/// Outermost layer of a registry-made environment; answers `spec()`.
struct WithSpec {
    inner: Box<dyn Env>,
    spec: EnvSpec,
}

impl Wrapper for WithSpec {
    type Inner = Box<dyn Env>;

    fn inner(&self) -> &Self::Inner {
        &self.inner
    }

    fn inner_mut(&mut self) -> &mut Self::Inner {
        &mut self.inner
    }

    fn wrapped_spec(&self) -> Option<&EnvSpec> {
        Some(&self.spec)
    }
}

static GLOBAL: OnceLock<Registry> = OnceLock::new();

/// The process-wide registry, populated with the built-in environments.
pub fn registry() -> &'static Registry {
    GLOBAL.get_or_init(Registry::with_builtins)
}

pub fn parse_env_id(text: &str) -> Result<EnvId, RegistryError> {
    EnvId::parse(text)
}

pub fn register(spec: EnvSpec) -> Result<(), RegistryError> {
    registry().register(spec)
}

/// Creates a registered environment by id with default options.
pub fn make(id: &str) -> Result<Box<dyn Env>, RegistryError> {
    registry().make(id, MakeOptions::default())
}

pub fn make_with(id: &str, options: MakeOptions) -> Result<Box<dyn Env>, RegistryError> {
    registry().make(id, options)
}

/// Recreates an environment from a spec, e.g. one read back from `env.spec()`.
pub fn make_from_spec(spec: &EnvSpec) -> Result<Box<dyn Env>, RegistryError> {
    registry().make_from_spec(spec, MakeOptions::default())
}

pub fn list_registered(namespace: Option<&str>) -> Vec<EnvSpec> {
    registry().list(namespace)
}

pub fn serialize_spec(spec: &EnvSpec) -> Result<String, RegistryError> {
    spec.to_json()
}

pub fn deserialize_spec(text: &str) -> Result<EnvSpec, RegistryError> {
    EnvSpec::from_json(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::Value;

    #[test]
    fn parses_versioned_ids() {
        let id = EnvId::parse("CartPole-v1").unwrap();
        assert_eq!(id, EnvId::new(None, "CartPole", Some(1)));
        assert_eq!(
            EnvId::parse("CarRacing-v2").unwrap(),
            EnvId::new(None, "CarRacing", Some(2))
        );
        assert_eq!(
            EnvId::parse("MyLab/Maze-v0").unwrap(),
            EnvId::new(Some("MyLab"), "Maze", Some(0))
        );
        assert_eq!(
            EnvId::parse("Maze").unwrap(),
            EnvId::new(None, "Maze", None)
        );
        assert_eq!(
            EnvId::parse("Tic-Tac-Toe").unwrap(),
            EnvId::new(None, "Tic-Tac-Toe", None)
        );
        assert_eq!(EnvId::parse("Car-venv").unwrap().version, None);
    }

    #[test]
    fn rejects_malformed_ids() {
        for bad in [
            "", "Maze-vv2", "a/b/c-v1", "Maze-v01", "-v1", "Maze-v1x", "/Maze-v1", "Ma ze-v1",
            "Maze.-v1",
        ] {
            assert!(
                matches!(EnvId::parse(bad), Err(RegistryError::MalformedId { .. })),
                "{bad:?} should be malformed"
            );
        }
    }

    #[test]
    fn display_inverts_parse() {
        for id in ["CartPole-v1", "MyLab/Maze-v0", "Maze", "ns/x.y:z-v12"] {
            assert_eq!(EnvId::parse(id).unwrap().to_string(), id);
        }
    }

    #[test]
    fn registration_rules() {
        let r = Registry::new();
        r.register(EnvSpec::new("CartPole-v0", "cartpole").unwrap())
            .unwrap();
        r.register(EnvSpec::new("CartPole-v1", "cartpole").unwrap())
            .unwrap();
        assert_eq!(r.list(None).len(), 2);
        assert!(matches!(
            r.register(EnvSpec::new("CartPole-v1", "cartpole").unwrap()),
            Err(RegistryError::DuplicateRegistration(_))
        ));
        assert!(matches!(
            r.register(EnvSpec::new("CartPole", "cartpole").unwrap()),
            Err(RegistryError::MissingVersion(_))
        ));
    }

    #[test]
    fn listing_order_and_filter() {
        let r = Registry::new();
        assert!(r.list(None).is_empty());
        for id in ["b-v1", "Lab/a-v0", "a-v2", "a-v0"] {
            r.register(EnvSpec::new(id, "x").unwrap()).unwrap();
        }
        let ids: Vec<String> = r.list(None).iter().map(|s| s.id.to_string()).collect();
        assert_eq!(ids, ["a-v0", "a-v2", "b-v1", "Lab/a-v0"]);
        let lab: Vec<String> = r
            .list(Some("Lab"))
            .iter()
            .map(|s| s.id.to_string())
            .collect();
        assert_eq!(lab, ["Lab/a-v0"]);
    }

    #[test]
    fn version_resolution() {
        let r = Registry::new();
        r.register(EnvSpec::new("Maze-v0", "x").unwrap()).unwrap();
        r.register(EnvSpec::new("Maze-v3", "x").unwrap()).unwrap();
        assert_eq!(r.spec("Maze").unwrap().id.version, Some(3));
        match r.spec("Maze-v9") {
            Err(RegistryError::VersionNotFound { available, .. }) => {
                assert_eq!(available, vec![0, 3])
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            r.spec("Nope-v0"),
            Err(RegistryError::UnknownEnvironment(_))
        ));
        let msg = r.spec("Maze-v9").unwrap_err().to_string();
        assert!(msg.contains("v0, v3"), "{msg}");
    }

    #[test]
    fn spec_json_is_canonical_and_round_trips() {
        let spec = EnvSpec::new("Lab/Thing-v2", "thing")
            .unwrap()
            .with_max_episode_steps(7)
            .with_kwarg("rate", 1.0)
            .with_kwarg("count", 3i64)
            .with_kwarg("name", "x");
        let a = spec.to_json().unwrap();
        assert_eq!(a, spec.to_json().unwrap());
        assert_eq!(
            a,
            r#"{"entry_point":"thing","id":"Lab/Thing-v2","kwargs":{"count":3,"name":"x","rate":1.0},"max_episode_steps":7,"order_enforcing":true,"render_mode":null}"#
        );
        assert_eq!(EnvSpec::from_json(&a).unwrap(), spec);
    }

    #[test]
    fn spec_json_errors() {
        assert!(matches!(
            EnvSpec::from_json("{}"),
            Err(RegistryError::MalformedDocument(_))
        ));
        assert!(matches!(
            EnvSpec::from_json("not json"),
            Err(RegistryError::MalformedDocument(_))
        ));
        let nan = EnvSpec::new("A-v0", "a").unwrap().with_kwarg("x", f64::NAN);
        assert!(matches!(
            nan.to_json(),
            Err(RegistryError::UnserializableKwargs(_))
        ));
        let mut val = EnvSpec::new("A-v0", "a").unwrap();
        val.kwargs
            .insert("obs".into(), InfoValue::Value(Value::Discrete(1)));
        assert!(matches!(
            val.to_json(),
            Err(RegistryError::UnserializableKwargs(_))
        ));
    }
}
