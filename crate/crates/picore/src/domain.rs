use crate::error::{Error, Result};
use crate::expr::{eval, eval_bool, eval_rel, BinOp, Expr, ExprVars};
use crate::state::State;
use crate::value::Value;
use std::collections::{BTreeMap, BTreeSet};

/// Default ceiling on enumeration products before `StateSpaceTooLarge`.
pub const DEFAULT_CAP: u128 = 1_000_000;

/// Declared finite domains: the desk-scale commitment that makes set
/// inclusions, `Nondt` successors, and environment steps decidable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainDecl {
    vars: BTreeMap<String, Vec<Value>>,
    pub units: Vec<String>,
    /// Parameter value lists recorded when parameterized events are expanded.
    pub event_params: BTreeMap<String, Vec<Vec<Value>>>,
}

impl DomainDecl {
    pub fn new() -> DomainDecl {
        DomainDecl::default()
    }

    /// Declares the domain of a variable, deduplicating but keeping the
    /// declared order (which fixes the canonical enumeration order).
    pub fn declare(&mut self, var: &str, values: Vec<Value>) {
        let mut seen = BTreeSet::new();
        let vals: Vec<Value> = values.into_iter().filter(|v| seen.insert(v.clone())).collect();
        self.vars.insert(var.to_string(), vals);
    }

    pub fn domain_of(&self, var: &str) -> Result<&[Value]> {
        let vals = self
            .vars
            .get(var)
            .ok_or_else(|| Error::MissingDomain(var.to_string()))?;
        if vals.is_empty() {
            return Err(Error::EmptyDomain(var.to_string()));
        }
        Ok(vals)
    }

    pub fn declared_vars(&self) -> impl Iterator<Item = &String> {
        self.vars.keys()
    }

    pub fn all_vars(&self) -> BTreeSet<String> {
        self.vars.keys().cloned().collect()
    }

    /// Product of the domain sizes of `vars`.
    pub fn product_size<'a>(&self, vars: impl IntoIterator<Item = &'a String>) -> Result<u128> {
        let mut product: u128 = 1;
        for v in vars {
            let n = self.domain_of(v)?.len() as u128;
            product = product.saturating_mul(n);
        }
        Ok(product)
    }

    /// Checks that every binding of `s` lies within its declared domain.
    pub fn check_state(&self, s: &State) -> Result<()> {
        for (var, val) in s.iter() {
            let dom = self.domain_of(var)?;
            if !dom.contains(val) {
                return Err(Error::DomainEscape {
                    var: var.clone(),
                    value: val.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Enumerates every state over `vars`, the full Cartesian product of their
/// domains, in a canonical deterministic order.
pub fn enumerate_states(d: &DomainDecl, vars: &BTreeSet<String>) -> Result<Vec<State>> {
    let mut doms = Vec::with_capacity(vars.len());
    for v in vars {
        doms.push((v.clone(), d.domain_of(v)?.to_vec()));
    }
    let mut out = vec![State::new()];
    for (var, vals) in &doms {
        let mut next = Vec::with_capacity(out.len() * vals.len());
        for s in &out {
            for val in vals {
                next.push(s.update(var, val.clone()));
            }
        }
        out = next;
    }
    Ok(out)
}

/// Enumerates states over `vars` with an explicit cap.
pub fn enumerate_states_capped(
    d: &DomainDecl,
    vars: &BTreeSet<String>,
    cap: u128,
) -> Result<Vec<State>> {
    let size = d.product_size(vars.iter())?;
    if size > cap {
        return Err(Error::StateSpaceTooLarge(size, cap));
    }
    enumerate_states(d, vars)
}

/// One disjunct of a relation, split into deterministic pins (`v' = e` with
/// `e` over pre-state variables only) and residual filter conjuncts.
#[derive(Debug, Clone)]
struct Branch {
    is_id: bool,
    has_univ: bool,
    pins: Vec<(String, Expr)>,
    /// Filters over pre-state variables only; checked before building candidates.
    pre_filters: Vec<Expr>,
    /// Filters that mention primed variables (or Id); checked per candidate.
    post_filters: Vec<Expr>,
}

/// Bound on the disjunctive-normal-form expansion in `branches_of`: past
/// this many disjuncts a conjunction is kept opaque (it still works as a
/// filter, just with more candidate enumeration).
const DNF_BOUND: usize = 64;

/// Conjunct lists of a bounded DNF of `e`. Distributes ∧ over ∨ so that a
/// conjunction of disjunctive relations (e.g. the conjoined relies of an
/// event set) still exposes its pins per disjunct.
fn dnf(e: &Expr) -> Vec<Vec<Expr>> {
    match e {
        Expr::Bin(BinOp::Or, a, b) => {
            let mut out = dnf(a);
            out.extend(dnf(b));
            if out.len() > DNF_BOUND {
                vec![vec![e.clone()]]
            } else {
                out
            }
        }
        Expr::Bin(BinOp::And, a, b) => {
            let da = dnf(a);
            let db = dnf(b);
            if da.len().saturating_mul(db.len()) > DNF_BOUND {
                return vec![vec![e.clone()]];
            }
            let mut out = Vec::with_capacity(da.len() * db.len());
            for ca in &da {
                for cb in &db {
                    let mut c = ca.clone();
                    c.extend(cb.iter().cloned());
                    out.push(c);
                }
            }
            out
        }
        _ => vec![vec![e.clone()]],
    }
}

fn branches_of(r: &Expr) -> Vec<Branch> {
    dnf(r)
        .into_iter()
        .map(|conjuncts| {
            let mut b = Branch {
                is_id: false,
                has_univ: false,
                pins: Vec::new(),
                pre_filters: Vec::new(),
                post_filters: Vec::new(),
            };
            for c in conjuncts {
                match &c {
                    Expr::IdRel => b.is_id = true,
                    Expr::Univ => b.has_univ = true,
                    Expr::Bin(BinOp::Eq, lhs, rhs) => {
                        let pin = match (lhs.as_ref(), rhs.as_ref()) {
                            (Expr::Prime(v), e) | (e, Expr::Prime(v)) => {
                                let sup = e.support();
                                if sup.primed.is_empty()
                                    && !sup.has_id
                                    && !b.pins.iter().any(|(p, _)| p == v)
                                {
                                    Some((v.clone(), e.clone()))
                                } else {
                                    None
                                }
                            }
                            _ => None,
                        };
                        match pin {
                            Some(p) => b.pins.push(p),
                            None => push_filter(&mut b, c),
                        }
                    }
                    _ => push_filter(&mut b, c),
                }
            }
            b
        })
        .collect()
}

fn push_filter(b: &mut Branch, c: Expr) {
    let sup = c.support();
    if sup.primed.is_empty() && !sup.has_id {
        b.pre_filters.push(c);
    } else {
        b.post_filters.push(c);
    }
}

/// All post-states `s2` with `(s, s2)` in the relation `r`, varying only the
/// variables mentioned primed in `r` (plus an optional explicit frame); all
/// other variables keep their value from `s`. Canonical order.
///
/// A relation containing `UNIV` is rejected with `MissingFrame` unless a
/// frame lists the variables allowed to change.
pub fn rel_successors(r: &Expr, s: &State, d: &DomainDecl) -> Result<Vec<State>> {
    rel_successors_framed(r, s, d, None, DEFAULT_CAP)
}

pub fn rel_successors_framed(
    r: &Expr,
    s: &State,
    d: &DomainDecl,
    frame: Option<&BTreeSet<String>>,
    cap: u128,
) -> Result<Vec<State>> {
    let sup: ExprVars = r.support();
    if sup.has_univ && frame.is_none() {
        return Err(Error::MissingFrame);
    }
    let mut vary: BTreeSet<String> = sup.primed.clone();
    if let Some(f) = frame {
        vary.extend(f.iter().cloned());
    }
    for v in &vary {
        if s.get(v).is_none() {
            return Err(Error::UnboundVariable(format!("{}'", v)));
        }
        d.domain_of(v)?;
    }

    let mut result: BTreeSet<State> = BTreeSet::new();
    for branch in branches_of(r) {
        // Prune on pre-state-only conjuncts before enumerating candidates.
        let mut applicable = true;
        for fexpr in &branch.pre_filters {
            if !eval_bool(fexpr, s)? {
                applicable = false;
                break;
            }
        }
        if !applicable {
            continue;
        }
        if branch.is_id {
            if eval_rel(r, s, s)? {
                result.insert(s.clone());
            }
            continue;
        }
        let mut pinned: BTreeMap<String, Value> = BTreeMap::new();
        let mut pin_ok = true;
        for (v, e) in &branch.pins {
            if !vary.contains(v) {
                pin_ok = false;
                break;
            }
            let val = eval(e, s)?;
            // A pin outside the declared domain contributes no successor.
            if !d.domain_of(v)?.contains(&val) {
                pin_ok = false;
                break;
            }
            pinned.insert(v.clone(), val);
        }
        if !pin_ok {
            continue;
        }
        let free: Vec<&String> = vary.iter().filter(|v| !pinned.contains_key(*v)).collect();
        let product = d.product_size(free.iter().copied())?;
        if product > cap {
            return Err(Error::StateSpaceTooLarge(product, cap));
        }
        let mut candidates = vec![s.update_all(pinned.clone())];
        for v in &free {
            let dom = d.domain_of(v)?;
            let mut next = Vec::with_capacity(candidates.len() * dom.len());
            for c in &candidates {
                for val in dom {
                    next.push(c.update(v, val.clone()));
                }
            }
            candidates = next;
        }
        for c in candidates {
            // The whole relation is the final arbiter; the branch split is
            // only a generator.
            if eval_rel(r, s, &c)? {
                result.insert(c);
            }
        }
    }
    Ok(result.into_iter().collect())
}
