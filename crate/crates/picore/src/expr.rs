use crate::error::{Error, Result};
use crate::state::State;
use crate::value::Value;
use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Expression trees used both for state predicates and for relations.
///
/// A state expression reads only unprimed variables (`Var`); a relation
/// expression may also read primed variables (`Prime`), which refer to the
/// post-state of a transition. `Univ` and `Empty` are the everywhere-true and
/// everywhere-false predicates (and relations); `IdRel` is the identity
/// relation on states and is only meaningful in relation position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Prime(String),
    Univ,
    Empty,
    IdRel,
    Un(UnOp, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// `update(map, key, value)`
    MapUpd(Box<Expr>, Box<Expr>, Box<Expr>),
    ListLit(Vec<Expr>),
    MapLit(Vec<(Expr, Expr)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnOp {
    Not,
    Neg,
    Head,
    Tail,
    Len,
    Some,
    IsSome,
    The,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Imp,
    Cons,
    Append,
    Mem,
    Subset,
    MapGet,
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn prime(name: &str) -> Expr {
        Expr::Prime(name.to_string())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Lit(Value::int(n))
    }

    pub fn sym(s: &str) -> Expr {
        Expr::Lit(Value::sym(s))
    }

    pub fn btrue() -> Expr {
        Expr::Lit(Value::Bool(true))
    }

    pub fn bfalse() -> Expr {
        Expr::Lit(Value::Bool(false))
    }

    pub fn is_true_lit(&self) -> bool {
        matches!(self, Expr::Lit(Value::Bool(true)))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Un(UnOp::Not, Box::new(e))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::And, a, b)
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Or, a, b)
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Eq, a, b)
    }

    pub fn imp(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Imp, a, b)
    }

    /// Conjunction of a list, `true` when empty.
    pub fn conj(es: impl IntoIterator<Item = Expr>) -> Expr {
        let mut it = es.into_iter();
        match it.next() {
            None => Expr::btrue(),
            Some(first) => it.fold(first, Expr::and),
        }
    }

    /// Disjunction of a list, `false` when empty.
    pub fn disj(es: impl IntoIterator<Item = Expr>) -> Expr {
        let mut it = es.into_iter();
        match it.next() {
            None => Expr::bfalse(),
            Some(first) => it.fold(first, Expr::or),
        }
    }

    /// Replaces reads of the given variables by literal values. Used to
    /// instantiate parameterized events and rely-guarantee specs.
    pub fn subst(&self, binding: &BTreeMap<String, Value>) -> Expr {
        match self {
            Expr::Var(n) => match binding.get(n) {
                Some(v) => Expr::Lit(v.clone()),
                None => self.clone(),
            },
            Expr::Prime(n) => match binding.get(n) {
                Some(v) => Expr::Lit(v.clone()),
                None => self.clone(),
            },
            Expr::Lit(_) | Expr::Univ | Expr::Empty | Expr::IdRel => self.clone(),
            Expr::Un(op, a) => Expr::Un(*op, Box::new(a.subst(binding))),
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, Box::new(a.subst(binding)), Box::new(b.subst(binding)))
            }
            Expr::MapUpd(m, k, v) => Expr::MapUpd(
                Box::new(m.subst(binding)),
                Box::new(k.subst(binding)),
                Box::new(v.subst(binding)),
            ),
            Expr::ListLit(es) => Expr::ListLit(es.iter().map(|e| e.subst(binding)).collect()),
            Expr::MapLit(kvs) => Expr::MapLit(
                kvs.iter()
                    .map(|(k, v)| (k.subst(binding), v.subst(binding)))
                    .collect(),
            ),
        }
    }

    /// Collects the variables read by this expression.
    pub fn support(&self) -> ExprVars {
        let mut vars = ExprVars::default();
        self.collect_vars(&mut vars);
        vars
    }

    fn collect_vars(&self, out: &mut ExprVars) {
        match self {
            Expr::Var(n) => {
                out.unprimed.insert(n.clone());
            }
            Expr::Prime(n) => {
                out.primed.insert(n.clone());
            }
            Expr::IdRel => out.has_id = true,
            Expr::Univ => out.has_univ = true,
            Expr::Lit(_) | Expr::Empty => {}
            Expr::Un(_, a) => a.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::MapUpd(m, k, v) => {
                m.collect_vars(out);
                k.collect_vars(out);
                v.collect_vars(out);
            }
            Expr::ListLit(es) => {
                for e in es {
                    e.collect_vars(out);
                }
            }
            Expr::MapLit(kvs) => {
                for (k, v) in kvs {
                    k.collect_vars(out);
                    v.collect_vars(out);
                }
            }
        }
    }
}

/// Variables read by an expression, split by primedness, plus whether the
/// identity relation or UNIV occur anywhere inside it.
#[derive(Debug, Clone, Default)]
pub struct ExprVars {
    pub unprimed: BTreeSet<String>,
    pub primed: BTreeSet<String>,
    pub has_id: bool,
    pub has_univ: bool,
}

/// How `IdRel` should treat variables outside the two states handed to the
/// evaluator. Over full states `OutsideEqual` is the only sensible choice;
/// the prover's support-projected checks run both cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdOutside {
    OutsideEqual,
    OutsideDiffers,
}

struct Env<'a> {
    pre: &'a State,
    post: Option<&'a State>,
    id_outside: IdOutside,
}

/// Evaluates a state expression in `s`. Total and side-effect free for
/// type-conforming inputs; primed reads and `Id` are rejected here.
pub fn eval(e: &Expr, s: &State) -> Result<Value> {
    eval_env(
        e,
        &Env {
            pre: s,
            post: None,
            id_outside: IdOutside::OutsideEqual,
        },
    )
}

/// Evaluates a boolean state expression, insisting on a boolean result.
pub fn eval_bool(e: &Expr, s: &State) -> Result<bool> {
    match eval(e, s)? {
        Value::Bool(b) => Ok(b),
        v => Err(Error::TypeMismatch(format!(
            "expected bool, got {}",
            v.type_name()
        ))),
    }
}

/// Decides membership of the state pair `(s, s2)` in the relation denoted by
/// `r`. `Id` holds exactly when the two states are equal.
pub fn eval_rel(r: &Expr, s: &State, s2: &State) -> Result<bool> {
    eval_rel_proj(r, s, s2, IdOutside::OutsideEqual)
}

/// Relation membership over support-projected states: `id_outside` says
/// whether the variables not present in the projection are assumed equal
/// across the pair.
pub fn eval_rel_proj(r: &Expr, s: &State, s2: &State, id_outside: IdOutside) -> Result<bool> {
    let v = eval_env(
        r,
        &Env {
            pre: s,
            post: Some(s2),
            id_outside,
        },
    )?;
    match v {
        Value::Bool(b) => Ok(b),
        v => Err(Error::TypeMismatch(format!(
            "relation must be boolean, got {}",
            v.type_name()
        ))),
    }
}

fn eval_env(e: &Expr, env: &Env) -> Result<Value> {
    match e {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Var(n) => env
            .pre
            .get(n)
            .cloned()
            .ok_or_else(|| Error::UnboundVariable(n.clone())),
        Expr::Prime(n) => match env.post {
            Some(post) => post
                .get(n)
                .cloned()
                .ok_or_else(|| Error::UnboundVariable(format!("{}'", n))),
            None => Err(Error::TypeMismatch(format!(
                "primed variable {}' in state-expression position",
                n
            ))),
        },
        Expr::Univ => Ok(Value::Bool(true)),
        Expr::Empty => Ok(Value::Bool(false)),
        Expr::IdRel => match env.post {
            Some(post) => Ok(Value::Bool(
                env.pre == post && env.id_outside == IdOutside::OutsideEqual,
            )),
            None => Err(Error::TypeMismatch(
                "Id in state-expression position".to_string(),
            )),
        },
        Expr::Un(op, a) => {
            let v = eval_env(a, env)?;
            eval_un(*op, v)
        }
        Expr::Bin(BinOp::And, a, b) => {
            if expect_bool(eval_env(a, env)?)? {
                eval_env(b, env)
            } else {
                Ok(Value::Bool(false))
            }
        }
        Expr::Bin(BinOp::Or, a, b) => {
            if expect_bool(eval_env(a, env)?)? {
                Ok(Value::Bool(true))
            } else {
                eval_env(b, env)
            }
        }
        Expr::Bin(BinOp::Imp, a, b) => {
            if expect_bool(eval_env(a, env)?)? {
                eval_env(b, env)
            } else {
                Ok(Value::Bool(true))
            }
        }
        Expr::Bin(op, a, b) => {
            let va = eval_env(a, env)?;
            let vb = eval_env(b, env)?;
            eval_bin(*op, va, vb)
        }
        Expr::MapUpd(m, k, v) => {
            let m = eval_env(m, env)?;
            let k = eval_env(k, env)?;
            let v = eval_env(v, env)?;
            match m {
                Value::Map(mut map) => {
                    map.insert(k, v);
                    Ok(Value::Map(map))
                }
                other => Err(Error::TypeMismatch(format!(
                    "update on {}",
                    other.type_name()
                ))),
            }
        }
        Expr::ListLit(es) => {
            let vs = es
                .iter()
                .map(|e| eval_env(e, env))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::List(vs))
        }
        Expr::MapLit(kvs) => {
            let mut map = BTreeMap::new();
            for (k, v) in kvs {
                map.insert(eval_env(k, env)?, eval_env(v, env)?);
            }
            Ok(Value::Map(map))
        }
    }
}

fn expect_bool(v: Value) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| Error::TypeMismatch(format!("expected bool, got {}", v.type_name())))
}

fn expect_int(v: Value) -> Result<BigInt> {
    match v {
        Value::Int(n) => Ok(n),
        v => Err(Error::TypeMismatch(format!(
            "expected int, got {}",
            v.type_name()
        ))),
    }
}

fn expect_list(v: Value) -> Result<Vec<Value>> {
    match v {
        Value::List(vs) => Ok(vs),
        v => Err(Error::TypeMismatch(format!(
            "expected list, got {}",
            v.type_name()
        ))),
    }
}

fn eval_un(op: UnOp, v: Value) -> Result<Value> {
    match op {
        UnOp::Not => Ok(Value::Bool(!expect_bool(v)?)),
        UnOp::Neg => Ok(Value::Int(-expect_int(v)?)),
        UnOp::Head => {
            let vs = expect_list(v)?;
            vs.into_iter().next().ok_or(Error::HeadOfEmpty)
        }
        UnOp::Tail => {
            // tl [] = [] as in HOL
            let mut vs = expect_list(v)?;
            if !vs.is_empty() {
                vs.remove(0);
            }
            Ok(Value::List(vs))
        }
        UnOp::Len => Ok(Value::Int(BigInt::from(expect_list(v)?.len()))),
        UnOp::Some => Ok(Value::some(v)),
        UnOp::IsSome => match v {
            Value::Opt(o) => Ok(Value::Bool(o.is_some())),
            v => Err(Error::TypeMismatch(format!(
                "issome on {}",
                v.type_name()
            ))),
        },
        UnOp::The => match v {
            Value::Opt(Some(inner)) => Ok(*inner),
            Value::Opt(None) => Err(Error::HeadOfEmpty),
            v => Err(Error::TypeMismatch(format!("the on {}", v.type_name()))),
        },
    }
}

fn eval_bin(op: BinOp, a: Value, b: Value) -> Result<Value> {
    match op {
        BinOp::Add => Ok(Value::Int(expect_int(a)? + expect_int(b)?)),
        BinOp::Sub => Ok(Value::Int(expect_int(a)? - expect_int(b)?)),
        BinOp::Mul => Ok(Value::Int(expect_int(a)? * expect_int(b)?)),
        BinOp::Eq => Ok(Value::Bool(a == b)),
        BinOp::Ne => Ok(Value::Bool(a != b)),
        BinOp::Lt => Ok(Value::Bool(expect_int(a)? < expect_int(b)?)),
        BinOp::Le => Ok(Value::Bool(expect_int(a)? <= expect_int(b)?)),
        BinOp::Gt => Ok(Value::Bool(expect_int(a)? > expect_int(b)?)),
        BinOp::Ge => Ok(Value::Bool(expect_int(a)? >= expect_int(b)?)),
        BinOp::Cons => {
            let mut vs = expect_list(b)?;
            vs.insert(0, a);
            Ok(Value::List(vs))
        }
        BinOp::Append => {
            let mut vs = expect_list(a)?;
            vs.extend(expect_list(b)?);
            Ok(Value::List(vs))
        }
        BinOp::Mem => Ok(Value::Bool(expect_list(b)?.contains(&a))),
        BinOp::Subset => {
            let xs = expect_list(a)?;
            let ys = expect_list(b)?;
            let yset: BTreeSet<_> = ys.into_iter().collect();
            Ok(Value::Bool(xs.iter().all(|x| yset.contains(x))))
        }
        BinOp::MapGet => match a {
            Value::Map(m) => m
                .get(&b)
                .cloned()
                .ok_or_else(|| Error::TypeMismatch(format!("map apply: key {} not present", b))),
            v => Err(Error::TypeMismatch(format!("apply on {}", v.type_name()))),
        },
        BinOp::And | BinOp::Or | BinOp::Imp => unreachable!("short-circuited"),
    }
}

// Display with just enough parentheses to reparse at the same precedence.

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Imp, _, _) => 0,
        Expr::Bin(BinOp::Or, _, _) => 1,
        Expr::Bin(BinOp::And, _, _) => 2,
        Expr::Un(UnOp::Not, _) => 3,
        Expr::Bin(BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, _, _) => 4,
        Expr::Bin(BinOp::Cons, _, _) => 5,
        Expr::Bin(BinOp::Add | BinOp::Sub, _, _) => 6,
        Expr::Bin(BinOp::Mul, _, _) => 7,
        Expr::Un(UnOp::Neg, _) => 8,
        _ => 9,
    }
}

fn bin_symbol(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Eq => "=",
        BinOp::Ne => "!=",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::And => "/\\",
        BinOp::Or => "\\/",
        BinOp::Imp => "==>",
        BinOp::Cons => "#",
        _ => unreachable!("function-style operator"),
    }
}

fn fmt_at(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = prec(e);
    let need_parens = p < min;
    if need_parens {
        write!(f, "(")?;
    }
    match e {
        Expr::Lit(v) => write!(f, "{}", v)?,
        Expr::Var(n) => write!(f, "{}", n)?,
        Expr::Prime(n) => write!(f, "{}'", n)?,
        Expr::Univ => write!(f, "UNIV")?,
        Expr::Empty => write!(f, "EMPTY")?,
        Expr::IdRel => write!(f, "Id")?,
        Expr::Un(UnOp::Not, a) => {
            write!(f, "~")?;
            fmt_at(a, 3, f)?;
        }
        Expr::Un(UnOp::Neg, a) => {
            write!(f, "-")?;
            fmt_at(a, 8, f)?;
        }
        Expr::Un(op, a) => {
            let name = match op {
                UnOp::Head => "hd",
                UnOp::Tail => "tl",
                UnOp::Len => "len",
                UnOp::Some => "some",
                UnOp::IsSome => "issome",
                UnOp::The => "the",
                UnOp::Not | UnOp::Neg => unreachable!(),
            };
            write!(f, "{}(", name)?;
            fmt_at(a, 0, f)?;
            write!(f, ")")?;
        }
        Expr::Bin(op @ (BinOp::Append | BinOp::Mem | BinOp::Subset | BinOp::MapGet), a, b) => {
            let name = match op {
                BinOp::Append => "append",
                BinOp::Mem => "mem",
                BinOp::Subset => "subset",
                BinOp::MapGet => "apply",
                _ => unreachable!(),
            };
            write!(f, "{}(", name)?;
            fmt_at(a, 0, f)?;
            write!(f, ", ")?;
            fmt_at(b, 0, f)?;
            write!(f, ")")?;
        }
        Expr::Bin(op, a, b) => {
            // ==> and # are right-associative, the rest left-associative.
            let (la, rb) = match op {
                BinOp::Imp | BinOp::Cons => (p + 1, p),
                _ => (p, p + 1),
            };
            fmt_at(a, la, f)?;
            write!(f, " {} ", bin_symbol(*op))?;
            fmt_at(b, rb, f)?;
        }
        Expr::MapUpd(m, k, v) => {
            write!(f, "update(")?;
            fmt_at(m, 0, f)?;
            write!(f, ", ")?;
            fmt_at(k, 0, f)?;
            write!(f, ", ")?;
            fmt_at(v, 0, f)?;
            write!(f, ")")?;
        }
        Expr::ListLit(es) => {
            write!(f, "[")?;
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                fmt_at(e, 0, f)?;
            }
            write!(f, "]")?;
        }
        Expr::MapLit(kvs) => {
            write!(f, "{{")?;
            for (i, (k, v)) in kvs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                fmt_at(k, 0, f)?;
                write!(f, " -> ")?;
                fmt_at(v, 0, f)?;
            }
            write!(f, "}}")?;
        }
    }
    if need_parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_at(self, 0, f)
    }
}
