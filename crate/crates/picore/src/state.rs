use crate::value::Value;
use std::collections::BTreeMap;
use std::fmt;

/// A program state: a finite map from variable names to values.
///
/// States are immutable; updates produce fresh states. Ordering and hashing
/// are structural, which gives explorers a canonical enumeration order for
/// free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct State {
    bindings: BTreeMap<String, Value>,
}

impl State {
    pub fn new() -> State {
        State::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> State
    where
        I: IntoIterator<Item = (S, Value)>,
        S: Into<String>,
    {
        State {
            bindings: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.bindings.get(var)
    }

    /// Returns a copy with `var` rebound to `value`.
    pub fn update(&self, var: &str, value: Value) -> State {
        let mut bindings = self.bindings.clone();
        bindings.insert(var.to_string(), value);
        State { bindings }
    }

    /// Applies several updates at once (simultaneous assignment).
    pub fn update_all(&self, updates: impl IntoIterator<Item = (String, Value)>) -> State {
        let mut bindings = self.bindings.clone();
        for (var, value) in updates {
            bindings.insert(var, value);
        }
        State { bindings }
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.bindings.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.bindings
                .iter()
                .map(|(k, v)| (k.clone(), v.to_json()))
                .collect(),
        )
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{} -> {}", k, v)?;
        }
        write!(f, "}}")
    }
}
