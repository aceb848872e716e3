use num_bigint::BigInt;
use std::collections::BTreeMap;
use std::fmt;

/// Runtime values: integers are arbitrary precision, symbols stand for the
/// abstract tokens of specs (cores, partitions, IRQ tags, part modes, ...),
/// and finite maps model record-like state components such as
/// `cur : Sched -> Part option`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Sym(String),
    List(Vec<Value>),
    Opt(Option<Box<Value>>),
    Map(BTreeMap<Value, Value>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn sym(s: &str) -> Value {
        Value::Sym(s.to_string())
    }

    pub fn none() -> Value {
        Value::Opt(None)
    }

    pub fn some(v: Value) -> Value {
        Value::Opt(Some(Box::new(v)))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Sym(_) => "sym",
            Value::List(_) => "list",
            Value::Opt(_) => "option",
            Value::Map(_) => "map",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Value::Int(n) => json!({ "int": n.to_string() }),
            Value::Bool(b) => json!({ "bool": b }),
            Value::Sym(s) => json!({ "sym": s }),
            Value::List(vs) => {
                json!({ "list": vs.iter().map(|v| v.to_json()).collect::<Vec<_>>() })
            }
            Value::Opt(None) => json!({ "opt": null }),
            Value::Opt(Some(v)) => json!({ "opt": v.to_json() }),
            Value::Map(m) => json!({
                "map": m.iter().map(|(k, v)| vec![k.to_json(), v.to_json()]).collect::<Vec<_>>()
            }),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{}", n),
            Value::Bool(b) => write!(f, "{}", b),
            Value::Sym(s) => write!(f, "{}", s),
            Value::List(vs) => {
                write!(f, "[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", v)?;
                }
                write!(f, "]")
            }
            Value::Opt(None) => write!(f, "none"),
            Value::Opt(Some(v)) => write!(f, "some({})", v),
            Value::Map(m) => {
                write!(f, "{{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{} -> {}", k, v)?;
                }
                write!(f, "}}")
            }
        }
    }
}
