//! A proof checker for the rely-guarantee rules: every rule premise is
//! decided by enumeration over the declared finite domains, and the
//! invariant-verification pipeline reduces an invariant claim to three
//! enumerable obligations plus one derivation check.

use crate::domain::{
    enumerate_states_capped, rel_successors, rel_successors_framed, DomainDecl, DEFAULT_CAP,
};
use crate::error::{Error, Result};
use crate::expr::{eval, eval_bool, eval_rel, eval_rel_proj, BinOp, Expr, IdOutside};
use crate::semantics::atomic_runs;
use crate::state::State;
use crate::syntax::{Event, EventSystem, ExecUnitId, Program, RGCond, SpecFile};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// A syntax node decorated with its rely-guarantee condition and the extra
/// annotations (sequence midpoints, per-branch conditions) its proof rule
/// needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedNode {
    pub kind: AnnKind,
    pub rg: RGCond,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnKind {
    /// Simultaneous assignment.
    Basic(Vec<(String, Expr)>),
    Seq {
        mid: Expr,
        first: Box<AnnotatedNode>,
        second: Box<AnnotatedNode>,
    },
    Cond {
        test: Expr,
        then: Box<AnnotatedNode>,
        els: Box<AnnotatedNode>,
    },
    While {
        test: Expr,
        body: Box<AnnotatedNode>,
    },
    /// The body is checked end-to-end per pre-state, not stepwise.
    Await {
        guard: Expr,
        body: Program,
    },
    Nondt(Expr),
    /// The inner node carries the stronger specification.
    Conseq {
        inner: Box<AnnotatedNode>,
    },
    BasicEvt {
        guard: Expr,
        body: Box<AnnotatedNode>,
    },
    /// Anonymous (triggered) event wrapping a program.
    Inner {
        body: Box<AnnotatedNode>,
    },
    EvtSeq {
        mid: Expr,
        event: Box<AnnotatedNode>,
        rest: Box<AnnotatedNode>,
    },
    /// Children carry the per-event conditions (pres_i, Rs_i, Gs_i, psts_i).
    EvtSet {
        events: Vec<AnnotatedNode>,
    },
    /// Children carry the per-unit conditions (pres_k, Rs_k, Gs_k, psts_k).
    Par {
        units: BTreeMap<ExecUnitId, AnnotatedNode>,
    },
    /// pre = left.pre ∪ right.pre.
    UnPre {
        left: Box<AnnotatedNode>,
        right: Box<AnnotatedNode>,
    },
    /// pst = left.pst ∩ right.pst.
    IntPost {
        left: Box<AnnotatedNode>,
        right: Box<AnnotatedNode>,
    },
    /// One instantiation of the body per state in pre.
    UnivPre {
        body: Box<AnnotatedNode>,
    },
    /// Any program satisfies a specification with an empty precondition.
    EmptyPre(Program),
}

impl AnnotatedNode {
    pub fn new(kind: AnnKind, rg: RGCond) -> AnnotatedNode {
        AnnotatedNode { kind, rg }
    }

    fn rule_name(&self) -> &'static str {
        match &self.kind {
            AnnKind::Basic(_) => "Basic",
            AnnKind::Seq { .. } => "Seq",
            AnnKind::Cond { .. } => "Cond",
            AnnKind::While { .. } => "While",
            AnnKind::Await { .. } => "Await",
            AnnKind::Nondt(_) => "Nondt",
            AnnKind::Conseq { .. } => "Conseq",
            AnnKind::BasicEvt { .. } => "BasicEvt",
            AnnKind::Inner { .. } => "Inner",
            AnnKind::EvtSeq { .. } => "EvtSeq",
            AnnKind::EvtSet { .. } => "EvtSet",
            AnnKind::Par { .. } => "Par",
            AnnKind::UnPre { .. } => "UnPre",
            AnnKind::IntPost { .. } => "IntPost",
            AnnKind::UnivPre { .. } => "UnivPre",
            AnnKind::EmptyPre(_) => "EmptyPre",
        }
    }

    fn is_program_layer(&self) -> bool {
        matches!(
            self.kind,
            AnnKind::Basic(_)
                | AnnKind::Seq { .. }
                | AnnKind::Cond { .. }
                | AnnKind::While { .. }
                | AnnKind::Await { .. }
                | AnnKind::Nondt(_)
                | AnnKind::UnPre { .. }
                | AnnKind::IntPost { .. }
                | AnnKind::UnivPre { .. }
        )
    }

    /// Every variable read anywhere in the subtree (conditions and code).
    fn vars(&self, out: &mut BTreeSet<String>) {
        collect_expr_vars(&self.rg.pre, out);
        collect_expr_vars(&self.rg.rely, out);
        collect_expr_vars(&self.rg.guar, out);
        collect_expr_vars(&self.rg.post, out);
        match &self.kind {
            AnnKind::Basic(asgs) => {
                for (v, e) in asgs {
                    out.insert(v.clone());
                    collect_expr_vars(e, out);
                }
            }
            AnnKind::Seq { mid, first, second } => {
                collect_expr_vars(mid, out);
                first.vars(out);
                second.vars(out);
            }
            AnnKind::Cond { test, then, els } => {
                collect_expr_vars(test, out);
                then.vars(out);
                els.vars(out);
            }
            AnnKind::While { test, body } => {
                collect_expr_vars(test, out);
                body.vars(out);
            }
            AnnKind::Await { guard, body } => {
                collect_expr_vars(guard, out);
                program_vars(body, out);
            }
            AnnKind::Nondt(r) => collect_expr_vars(r, out),
            AnnKind::Conseq { inner } => inner.vars(out),
            AnnKind::BasicEvt { guard, body } => {
                collect_expr_vars(guard, out);
                body.vars(out);
            }
            AnnKind::Inner { body } | AnnKind::UnivPre { body } => body.vars(out),
            AnnKind::EvtSeq { mid, event, rest } => {
                collect_expr_vars(mid, out);
                event.vars(out);
                rest.vars(out);
            }
            AnnKind::EvtSet { events } => {
                for e in events {
                    e.vars(out);
                }
            }
            AnnKind::Par { units } => {
                for n in units.values() {
                    n.vars(out);
                }
            }
            AnnKind::UnPre { left, right } | AnnKind::IntPost { left, right } => {
                left.vars(out);
                right.vars(out);
            }
            AnnKind::EmptyPre(p) => program_vars(p, out),
        }
    }
}

fn collect_expr_vars(e: &Expr, out: &mut BTreeSet<String>) {
    let sup = e.support();
    out.extend(sup.unprimed);
    out.extend(sup.primed);
}

fn program_vars(p: &Program, out: &mut BTreeSet<String>) {
    match p {
        Program::Basic(asgs) => {
            for (v, e) in asgs {
                out.insert(v.clone());
                collect_expr_vars(e, out);
            }
        }
        Program::Seq(a, b) => {
            program_vars(a, out);
            program_vars(b, out);
        }
        Program::Cond(b, p1, p2) => {
            collect_expr_vars(b, out);
            program_vars(p1, out);
            program_vars(p2, out);
        }
        Program::While(b, body) => {
            collect_expr_vars(b, out);
            program_vars(body, out);
        }
        Program::Await(b, body) => {
            collect_expr_vars(b, out);
            program_vars(body, out);
        }
        Program::Nondt(r) => collect_expr_vars(r, out),
        Program::Done => {}
    }
}

/// A counterexample to one premise: a state or a state pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    State(State),
    Pair(State, State),
}

impl std::fmt::Display for ProofReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.fmt_indented(f, 0)
    }
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Witness::State(s) => write!(f, "{}", s),
            Witness::Pair(s, s2) => write!(f, "({}, {})", s, s2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Premise {
    pub id: String,
    pub text: String,
    pub pass: bool,
    pub witness: Option<Witness>,
}

impl Premise {
    fn from_witness(id: &str, text: String, witness: Option<Witness>) -> Premise {
        Premise {
            id: id.to_string(),
            text,
            pass: witness.is_none(),
            witness,
        }
    }

    fn flat(id: &str, text: String, pass: bool) -> Premise {
        Premise {
            id: id.to_string(),
            text,
            pass,
            witness: None,
        }
    }
}

/// Per-node check results; `accepted` holds iff every premise here and in
/// every child report passes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofReport {
    pub rule: String,
    pub premises: Vec<Premise>,
    pub children: Vec<ProofReport>,
    pub accepted: bool,
}

impl ProofReport {
    fn assemble(rule: &str, premises: Vec<Premise>, children: Vec<ProofReport>) -> ProofReport {
        let accepted =
            premises.iter().all(|p| p.pass) && children.iter().all(|c| c.accepted);
        ProofReport {
            rule: rule.to_string(),
            premises,
            children,
            accepted,
        }
    }

    /// Paths of failing premises, e.g. `Par/3` or `Par/1/EvtSet/7`.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_failures("", &mut out);
        out
    }

    fn fmt_indented(&self, f: &mut std::fmt::Formatter<'_>, depth: usize) -> std::fmt::Result {
        let pad = "  ".repeat(depth);
        writeln!(
            f,
            "{}{} [{}]",
            pad,
            self.rule,
            if self.accepted { "ok" } else { "FAIL" }
        )?;
        for p in &self.premises {
            if p.pass {
                writeln!(f, "{}  ✓ {}: {}", pad, p.id, p.text)?;
            } else {
                write!(f, "{}  ✗ {}: {}", pad, p.id, p.text)?;
                match &p.witness {
                    Some(w) => writeln!(f, " — witness {}", w)?,
                    None => writeln!(f)?,
                }
            }
        }
        for c in &self.children {
            c.fmt_indented(f, depth + 1)?;
        }
        Ok(())
    }

    fn collect_failures(&self, prefix: &str, out: &mut Vec<String>) {
        let here = if prefix.is_empty() {
            self.rule.clone()
        } else {
            format!("{}/{}", prefix, self.rule)
        };
        for p in &self.premises {
            if !p.pass {
                out.push(format!("{}/{}", here, p.id));
            }
        }
        for c in &self.children {
            c.collect_failures(&here, out);
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        json!({
            "rule": self.rule,
            "accepted": self.accepted,
            "premises": self.premises.iter().map(|p| {
                let mut o = serde_json::Map::new();
                o.insert("id".into(), json!(p.id));
                o.insert("text".into(), json!(p.text));
                o.insert("pass".into(), json!(p.pass));
                if let Some(w) = &p.witness {
                    o.insert("witness".into(), json!(w.to_string()));
                }
                serde_json::Value::Object(o)
            }).collect::<Vec<_>>(),
            "children": self.children.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        })
    }
}

/// States over exactly `vars` (the single empty state when `vars` is empty).
fn states_over(vars: &BTreeSet<String>, d: &DomainDecl, cap: u128) -> Result<Vec<State>> {
    enumerate_states_capped(d, vars, cap)
}

/// True when some declared variable outside `vars` has at least two values,
/// i.e. a concrete pair of states can differ somewhere the projected check
/// does not see. Only `Id` is sensitive to such differences.
fn outside_can_differ(vars: &BTreeSet<String>, d: &DomainDecl) -> bool {
    d.declared_vars()
        .any(|v| !vars.contains(v) && d.domain_of(v).map(|dom| dom.len() > 1).unwrap_or(false))
}

fn conjuncts_of(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::Bin(BinOp::And, a, b) => {
            let mut out = conjuncts_of(a);
            out.extend(conjuncts_of(b));
            out
        }
        _ => vec![e],
    }
}

fn disjuncts_of(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::Bin(BinOp::Or, a, b) => {
            let mut out = disjuncts_of(a);
            out.extend(disjuncts_of(b));
            out
        }
        _ => vec![e],
    }
}

/// `e` with every occurrence of `Id` replaced by `false`: the value of a
/// relation on a pair of states known to differ somewhere.
fn id_to_false(e: &Expr) -> Expr {
    match e {
        Expr::IdRel => Expr::bfalse(),
        Expr::Lit(_) | Expr::Var(_) | Expr::Prime(_) | Expr::Univ | Expr::Empty => e.clone(),
        Expr::Un(op, a) => Expr::Un(*op, Box::new(id_to_false(a))),
        Expr::Bin(op, a, b) => Expr::bin(*op, id_to_false(a), id_to_false(b)),
        Expr::MapUpd(m, k, v) => Expr::MapUpd(
            Box::new(id_to_false(m)),
            Box::new(id_to_false(k)),
            Box::new(id_to_false(v)),
        ),
        Expr::ListLit(es) => Expr::ListLit(es.iter().map(id_to_false).collect()),
        Expr::MapLit(kvs) => Expr::MapLit(
            kvs.iter()
                .map(|(k, v)| (id_to_false(k), id_to_false(v)))
                .collect(),
        ),
    }
}

/// `a ⊆ b` for state sets; `Some(s)` witnesses a violation.
pub fn subset_states(a: &Expr, b: &Expr, d: &DomainDecl, cap: u128) -> Result<Option<State>> {
    let mut vars = BTreeSet::new();
    collect_expr_vars(a, &mut vars);
    collect_expr_vars(b, &mut vars);
    for s in states_over(&vars, d, cap)? {
        if eval_bool(a, &s)? && !eval_bool(b, &s)? {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// `a ⊆ b` for relations; `Some((s, s2))` witnesses a violation.
///
/// Instead of enumerating all pairs of states, this enumerates pre-states
/// and generates the post-states of `a` with `rel_successors_framed`,
/// extending the varied variables to everything `b` mentions primed. A
/// concrete pair may additionally differ on a variable *outside* the varied
/// set; neither relation's non-`Id` atoms can see such a difference, so
/// those pairs are covered by a second pass with `Id` replaced by `false`
/// (they exist exactly when some variable outside the varied set has at
/// least two values).
pub fn subset_rel(a: &Expr, b: &Expr, d: &DomainDecl, cap: u128) -> Result<Option<(State, State)>> {
    if *b == Expr::btrue() || *b == Expr::Univ {
        return Ok(None);
    }
    // X ∧ Y ⊆ X and X ⊆ X ∨ Z hold outright; combined event-set conditions
    // (conjoined relies, disjoined guarantees) hit these shapes constantly.
    if conjuncts_of(a).contains(&b) || disjuncts_of(b).contains(&a) {
        return Ok(None);
    }
    let sup_a = a.support();
    let sup_b = b.support();
    let mut vary: BTreeSet<String> = sup_a.primed.clone();
    vary.extend(sup_b.primed.iter().cloned());
    let mut pre_vars = vary.clone();
    pre_vars.extend(sup_a.unprimed.iter().cloned());
    pre_vars.extend(sup_b.unprimed.iter().cloned());
    let states = states_over(&pre_vars, d, cap)?;
    let frame: BTreeSet<String> = vary.difference(&sup_a.primed).cloned().collect();
    for s in &states {
        for s2 in rel_successors_framed(a, s, d, Some(&frame), cap)? {
            if !eval_rel(b, s, &s2)? {
                return Ok(Some((s.clone(), s2)));
            }
        }
    }
    if (sup_a.has_id || sup_b.has_id) && outside_can_differ(&vary, d) {
        let a2 = id_to_false(a);
        let b2 = id_to_false(b);
        let frame2: BTreeSet<String> = vary
            .difference(&a2.support().primed)
            .cloned()
            .collect();
        for s in &states {
            for s2 in rel_successors_framed(&a2, s, d, Some(&frame2), cap)? {
                if !eval_rel(&b2, s, &s2)? {
                    return Ok(Some((s.clone(), s2)));
                }
            }
        }
    }
    Ok(None)
}

/// stable(pred, rel): membership in `pred` is preserved by every `rel` step.
/// `Some((s, s2))` witnesses a violation.
///
/// Post-states are generated with `rel_successors_framed`, varying the
/// variables `rel` mentions primed plus the variables `pred` reads (a
/// relation leaves variables it does not mention primed unconstrained, so
/// they may take any value in the post-state). Pairs that differ only
/// outside that varied set are visible solely to `Id` and are covered by a
/// second pass with `Id` replaced by `false`.
pub fn check_stable(
    pred: &Expr,
    rel: &Expr,
    d: &DomainDecl,
    cap: u128,
) -> Result<Option<(State, State)>> {
    let sup_r = rel.support();
    let mut pred_vars = BTreeSet::new();
    collect_expr_vars(pred, &mut pred_vars);
    // A predicate without variables is constant: a constantly-true set is
    // stable under anything, a constantly-false one vacuously so.
    if pred_vars.is_empty() {
        return Ok(None);
    }
    let mut vary: BTreeSet<String> = sup_r.primed.clone();
    vary.extend(pred_vars.iter().cloned());
    let mut pre_vars = vary.clone();
    pre_vars.extend(sup_r.unprimed.iter().cloned());
    let states = states_over(&pre_vars, d, cap)?;
    let frame: BTreeSet<String> = pred_vars.difference(&sup_r.primed).cloned().collect();
    for s in &states {
        if !eval_bool(pred, s)? {
            continue;
        }
        for s2 in rel_successors_framed(rel, s, d, Some(&frame), cap)? {
            if !eval_bool(pred, &s2)? {
                return Ok(Some((s.clone(), s2)));
            }
        }
    }
    if sup_r.has_id && outside_can_differ(&vary, d) {
        let rel2 = id_to_false(rel);
        let frame2: BTreeSet<String> = vary
            .difference(&rel2.support().primed)
            .cloned()
            .collect();
        for s in &states {
            if !eval_bool(pred, s)? {
                continue;
            }
            for s2 in rel_successors_framed(&rel2, s, d, Some(&frame2), cap)? {
                if !eval_bool(pred, &s2)? {
                    return Ok(Some((s.clone(), s2)));
                }
            }
        }
    }
    Ok(None)
}

/// ∀s. (s, s) ∈ g; `Some(s)` witnesses a violation. Reflexive pairs are
/// equal everywhere, so only the outside-equal reading applies.
pub fn check_reflexive(g: &Expr, d: &DomainDecl, cap: u128) -> Result<Option<State>> {
    let mut vars = BTreeSet::new();
    collect_expr_vars(g, &mut vars);
    for s in states_over(&vars, d, cap)? {
        if !eval_rel_proj(g, &s, &s, IdOutside::OutsideEqual)? {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

fn is_empty_set(pre: &Expr, d: &DomainDecl, cap: u128) -> Result<bool> {
    let mut vars = BTreeSet::new();
    collect_expr_vars(pre, &mut vars);
    for s in states_over(&vars, d, cap)? {
        if eval_bool(pre, &s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The singleton set {s} as a state expression.
fn state_to_expr(s: &State) -> Expr {
    Expr::conj(
        s.iter()
            .map(|(v, val)| Expr::eq(Expr::var(v), Expr::Lit(val.clone()))),
    )
}

struct Ctx<'a> {
    d: &'a DomainDecl,
    atom_bound: usize,
    cap: u128,
    /// Premise-check results memoized by printed expressions: parameterized
    /// events typically share rely/guarantee conditions, so the same
    /// inclusion and stability obligations recur across a derivation.
    pair_memo: RefCell<HashMap<(u8, String, String), Option<(State, State)>>>,
    state_memo: RefCell<HashMap<(u8, String, String), Option<State>>>,
}

impl<'a> Ctx<'a> {
    fn new(d: &'a DomainDecl, atom_bound: usize, cap: u128) -> Ctx<'a> {
        Ctx {
            d,
            atom_bound,
            cap,
            pair_memo: RefCell::new(HashMap::new()),
            state_memo: RefCell::new(HashMap::new()),
        }
    }

    fn pair_check(
        &self,
        tag: u8,
        x: &Expr,
        y: &Expr,
        run: impl FnOnce() -> Result<Option<(State, State)>>,
    ) -> Result<Option<(State, State)>> {
        let key = (tag, x.to_string(), y.to_string());
        if let Some(v) = self.pair_memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = run()?;
        self.pair_memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    fn state_check(
        &self,
        tag: u8,
        x: &Expr,
        y: &Expr,
        run: impl FnOnce() -> Result<Option<State>>,
    ) -> Result<Option<State>> {
        let key = (tag, x.to_string(), y.to_string());
        if let Some(v) = self.state_memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = run()?;
        self.state_memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    fn stable(&self, pred: &Expr, rel: &Expr) -> Result<Option<(State, State)>> {
        self.pair_check(0, pred, rel, || check_stable(pred, rel, self.d, self.cap))
    }

    fn rel_sub(&self, a: &Expr, b: &Expr) -> Result<Option<(State, State)>> {
        self.pair_check(1, a, b, || subset_rel(a, b, self.d, self.cap))
    }

    fn states_sub(&self, a: &Expr, b: &Expr) -> Result<Option<State>> {
        self.state_check(0, a, b, || subset_states(a, b, self.d, self.cap))
    }

    fn refl(&self, g: &Expr) -> Result<Option<State>> {
        self.state_check(1, g, g, || check_reflexive(g, self.d, self.cap))
    }
}

/// Checks the derivation rooted at `a` and reports every premise of every
/// rule applied, by the rules' own numbering.
pub fn check_derivation(a: &AnnotatedNode, d: &DomainDecl, atom_bound: usize) -> Result<ProofReport> {
    check_derivation_capped(a, d, atom_bound, DEFAULT_CAP)
}

pub fn check_derivation_capped(
    a: &AnnotatedNode,
    d: &DomainDecl,
    atom_bound: usize,
    cap: u128,
) -> Result<ProofReport> {
    let ctx = Ctx::new(d, atom_bound, cap);
    check_node(a, &ctx)
}

/// Checks a child derivation expected at an induced condition: the stored
/// annotation must match the condition the parent rule assigns, then the
/// child's own derivation must be accepted.
fn child_premise(
    id: &str,
    text: String,
    child: &AnnotatedNode,
    induced: &RGCond,
    ctx: &Ctx,
) -> Result<(Premise, Option<ProofReport>)> {
    if child.rg != *induced {
        return Ok((
            Premise::flat(id, format!("{} — annotation does not match the rule; insert a Conseq node to adapt it", text), false),
            None,
        ));
    }
    let report = check_node(child, ctx)?;
    let pass = report.accepted;
    Ok((Premise::flat(id, text, pass), Some(report)))
}

fn same_rg_but(rg: &RGCond, pre: Option<Expr>, post: Option<Expr>) -> RGCond {
    RGCond {
        pre: pre.unwrap_or_else(|| rg.pre.clone()),
        rely: rg.rely.clone(),
        guar: rg.guar.clone(),
        post: post.unwrap_or_else(|| rg.post.clone()),
    }
}

fn check_node(a: &AnnotatedNode, ctx: &Ctx) -> Result<ProofReport> {
    // Fig.-4 EmptyPre as a short circuit: a program specification with an
    // empty precondition holds outright.
    if a.is_program_layer() && is_empty_set(&a.rg.pre, ctx.d, ctx.cap)? {
        return Ok(ProofReport::assemble(
            "EmptyPre",
            vec![Premise::flat("1", "pre = {}".to_string(), true)],
            vec![],
        ));
    }
    let rg = &a.rg;
    let d = ctx.d;
    let cap = ctx.cap;
    let mut premises = Vec::new();
    let mut children = Vec::new();
    match &a.kind {
        AnnKind::Basic(asgs) => {
            // f applied to one state: simultaneous assignment.
            let apply = |s: &State| -> Result<State> {
                let mut upd = BTreeMap::new();
                for (v, e) in asgs {
                    upd.insert(v.clone(), eval(e, s)?);
                }
                Ok(s.update_all(upd))
            };
            let mut vars = BTreeSet::new();
            collect_expr_vars(&rg.pre, &mut vars);
            collect_expr_vars(&rg.post, &mut vars);
            collect_expr_vars(&rg.guar, &mut vars);
            for (v, e) in asgs {
                vars.insert(v.clone());
                collect_expr_vars(e, &mut vars);
            }
            let mut w1 = None;
            let mut w2 = None;
            for s in states_over(&vars, d, cap)? {
                if !eval_bool(&rg.pre, &s)? {
                    continue;
                }
                let s2 = apply(&s)?;
                if w1.is_none() && !eval_bool(&rg.post, &s2)? {
                    w1 = Some(Witness::State(s.clone()));
                }
                if w2.is_none() && !eval_rel_proj(&rg.guar, &s, &s2, IdOutside::OutsideEqual)? {
                    w2 = Some(Witness::Pair(s.clone(), s2.clone()));
                }
                if w1.is_some() && w2.is_some() {
                    break;
                }
            }
            premises.push(Premise::from_witness(
                "1",
                "pre ⊆ {s | f(s) ∈ pst}".to_string(),
                w1,
            ));
            premises.push(Premise::from_witness(
                "2",
                "{(s, f(s)) | s ∈ pre} ⊆ G".to_string(),
                w2,
            ));
            premises.push(Premise::from_witness(
                "3",
                "stable(pre, R)".to_string(),
                ctx.stable(&rg.pre, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
            premises.push(Premise::from_witness(
                "4",
                "stable(pst, R)".to_string(),
                ctx.stable(&rg.post, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
        }
        AnnKind::Seq { mid, first, second } => {
            let (p1, r1) = child_premise(
                "1",
                "P sat ⟨pre, R, G, m⟩".to_string(),
                first,
                &same_rg_but(rg, None, Some(mid.clone())),
                ctx,
            )?;
            let (p2, r2) = child_premise(
                "2",
                "Q sat ⟨m, R, G, pst⟩".to_string(),
                second,
                &same_rg_but(rg, Some(mid.clone()), None),
                ctx,
            )?;
            premises.extend([p1, p2]);
            children.extend(r1.into_iter().chain(r2));
        }
        AnnKind::Cond { test, then, els } => {
            let (p1, r1) = child_premise(
                "1",
                "P1 sat ⟨pre ∩ b, R, G, pst⟩".to_string(),
                then,
                &same_rg_but(rg, Some(Expr::and(rg.pre.clone(), test.clone())), None),
                ctx,
            )?;
            let (p2, r2) = child_premise(
                "2",
                "P2 sat ⟨pre ∩ -b, R, G, pst⟩".to_string(),
                els,
                &same_rg_but(
                    rg,
                    Some(Expr::and(rg.pre.clone(), Expr::not(test.clone()))),
                    None,
                ),
                ctx,
            )?;
            premises.extend([p1, p2]);
            children.extend(r1.into_iter().chain(r2));
            premises.push(Premise::from_witness(
                "3",
                "stable(pre, R)".to_string(),
                ctx.stable(&rg.pre, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
            premises.push(Premise::from_witness(
                "4",
                "∀s. (s, s) ∈ G".to_string(),
                ctx.refl(&rg.guar)?.map(Witness::State),
            ));
        }
        AnnKind::While { test, body } => {
            let (p1, r1) = child_premise(
                "1",
                "P sat ⟨pre ∩ b, R, G, pre⟩".to_string(),
                body,
                &same_rg_but(
                    rg,
                    Some(Expr::and(rg.pre.clone(), test.clone())),
                    Some(rg.pre.clone()),
                ),
                ctx,
            )?;
            premises.push(p1);
            children.extend(r1);
            premises.push(Premise::from_witness(
                "2",
                "pre ∩ -b ⊆ pst".to_string(),
                ctx.states_sub(&Expr::and(rg.pre.clone(), Expr::not(test.clone())), &rg.post)?
                    .map(Witness::State),
            ));
            premises.push(Premise::from_witness(
                "3",
                "stable(pre, R)".to_string(),
                ctx.stable(&rg.pre, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
            premises.push(Premise::from_witness(
                "4",
                "stable(pst, R)".to_string(),
                ctx.stable(&rg.post, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
            premises.push(Premise::from_witness(
                "5",
                "∀s. (s, s) ∈ G".to_string(),
                ctx.refl(&rg.guar)?.map(Witness::State),
            ));
        }
        AnnKind::Await { guard, body } => {
            // ∀V. P sat ⟨pre ∩ b ∩ {V}, Id, UNIV, {s | (V,s) ∈ G} ∩ pst⟩,
            // realized per state V via the atomic body runs: every run ending
            // from V must land in a state paired with V in G and in pst.
            let mut vars = BTreeSet::new();
            collect_expr_vars(&rg.pre, &mut vars);
            collect_expr_vars(guard, &mut vars);
            collect_expr_vars(&rg.guar, &mut vars);
            collect_expr_vars(&rg.post, &mut vars);
            program_vars(body, &mut vars);
            let mut w = None;
            'outer: for v in states_over(&vars, d, cap)? {
                if !eval_bool(&rg.pre, &v)? || !eval_bool(guard, &v)? {
                    continue;
                }
                for s in atomic_runs(body, &v, d, ctx.atom_bound)? {
                    if !eval_rel_proj(&rg.guar, &v, &s, IdOutside::OutsideEqual)?
                        || !eval_bool(&rg.post, &s)?
                    {
                        w = Some(Witness::Pair(v, s));
                        break 'outer;
                    }
                }
            }
            premises.push(Premise::from_witness(
                "1",
                "∀V. P sat ⟨pre ∩ b ∩ {V}, Id, UNIV, {s | (V, s) ∈ G} ∩ pst⟩".to_string(),
                w,
            ));
            premises.push(Premise::from_witness(
                "2",
                "stable(pre, R)".to_string(),
                ctx.stable(&rg.pre, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
            premises.push(Premise::from_witness(
                "3",
                "stable(pst, R)".to_string(),
                ctx.stable(&rg.post, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
        }
        AnnKind::Nondt(r) => {
            let mut vars = BTreeSet::new();
            collect_expr_vars(&rg.pre, &mut vars);
            collect_expr_vars(&rg.post, &mut vars);
            collect_expr_vars(&rg.guar, &mut vars);
            collect_expr_vars(r, &mut vars);
            let mut w1 = None;
            let mut w2 = None;
            for s in states_over(&vars, d, cap)? {
                if !eval_bool(&rg.pre, &s)? {
                    continue;
                }
                let succs = rel_successors(r, &s, d)?;
                if w1.is_none() && succs.is_empty() {
                    w1 = Some(Witness::State(s.clone()));
                }
                for s2 in &succs {
                    if w1.is_none() && !eval_bool(&rg.post, s2)? {
                        w1 = Some(Witness::State(s.clone()));
                    }
                    if w2.is_none()
                        && !eval_rel_proj(&rg.guar, &s, s2, IdOutside::OutsideEqual)?
                    {
                        w2 = Some(Witness::Pair(s.clone(), s2.clone()));
                    }
                }
                if w1.is_some() && w2.is_some() {
                    break;
                }
            }
            premises.push(Premise::from_witness(
                "1",
                "pre ⊆ {s | (∀s'. (s,s') ∈ r → s' ∈ pst) ∧ (∃s'. (s,s') ∈ r)}".to_string(),
                w1,
            ));
            premises.push(Premise::from_witness(
                "2",
                "{(s, s') | s ∈ pre ∧ (s,s') ∈ r} ⊆ G".to_string(),
                w2,
            ));
            premises.push(Premise::from_witness(
                "3",
                "stable(pre, R)".to_string(),
                ctx.stable(&rg.pre, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
            premises.push(Premise::from_witness(
                "4",
                "stable(pst, R)".to_string(),
                ctx.stable(&rg.post, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
        }
        AnnKind::Conseq { inner } => {
            premises.push(Premise::from_witness(
                "1",
                "pre ⊆ pre'".to_string(),
                ctx.states_sub(&rg.pre, &inner.rg.pre)?.map(Witness::State),
            ));
            premises.push(Premise::from_witness(
                "2",
                "R ⊆ R'".to_string(),
                ctx.rel_sub(&rg.rely, &inner.rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
            premises.push(Premise::from_witness(
                "3",
                "G' ⊆ G".to_string(),
                ctx.rel_sub(&inner.rg.guar, &rg.guar)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
            premises.push(Premise::from_witness(
                "4",
                "pst' ⊆ pst".to_string(),
                ctx.states_sub(&inner.rg.post, &rg.post)?.map(Witness::State),
            ));
            let report = check_node(inner, ctx)?;
            premises.push(Premise::flat(
                "5",
                "♯ sat ⟨pre', R', G', pst'⟩".to_string(),
                report.accepted,
            ));
            children.push(report);
        }
        AnnKind::BasicEvt { guard, body } => {
            let (p1, r1) = child_premise(
                "1",
                "body(α) sat ⟨pre ∩ guard(α), R, G, pst⟩".to_string(),
                body,
                &same_rg_but(rg, Some(Expr::and(rg.pre.clone(), guard.clone())), None),
                ctx,
            )?;
            premises.push(p1);
            children.extend(r1);
            premises.push(Premise::from_witness(
                "2",
                "stable(pre, R)".to_string(),
                ctx.stable(&rg.pre, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
            premises.push(Premise::from_witness(
                "3",
                "∀s. (s, s) ∈ G".to_string(),
                ctx.refl(&rg.guar)?.map(Witness::State),
            ));
        }
        AnnKind::Inner { body } => {
            let (p1, r1) =
                child_premise("1", "P sat ⟨pre, R, G, pst⟩".to_string(), body, rg, ctx)?;
            premises.push(p1);
            children.extend(r1);
        }
        AnnKind::EvtSeq { mid, event, rest } => {
            let (p1, r1) = child_premise(
                "1",
                "E sat ⟨pre, R, G, m⟩".to_string(),
                event,
                &same_rg_but(rg, None, Some(mid.clone())),
                ctx,
            )?;
            let (p2, r2) = child_premise(
                "2",
                "S sat ⟨m, R, G, pst⟩".to_string(),
                rest,
                &same_rg_but(rg, Some(mid.clone()), None),
                ctx,
            )?;
            premises.extend([p1, p2]);
            children.extend(r1.into_iter().chain(r2));
        }
        AnnKind::EvtSet { events } => {
            // The eight premise groups, by the rule's numbering.
            let mut all_ok = true;
            for e in events {
                let rep = check_node(e, ctx)?;
                all_ok &= rep.accepted;
                children.push(rep);
            }
            premises.push(Premise::flat(
                "1",
                "∀i. E_i sat ⟨pres_i, Rs_i, Gs_i, psts_i⟩".to_string(),
                all_ok,
            ));
            let mut w2 = None;
            'p2: for ei in events {
                for ej in events {
                    if let Some(s) = ctx.states_sub(&ei.rg.post, &ej.rg.pre)? {
                        w2 = Some(Witness::State(s));
                        break 'p2;
                    }
                }
            }
            premises.push(Premise::from_witness(
                "2",
                "∀i,j. psts_i ⊆ pres_j".to_string(),
                w2,
            ));
            let mut w3 = None;
            for e in events {
                if let Some(s) = ctx.states_sub(&rg.pre, &e.rg.pre)? {
                    w3 = Some(Witness::State(s));
                    break;
                }
            }
            premises.push(Premise::from_witness(
                "3",
                "∀i. pre ⊆ pres_i".to_string(),
                w3,
            ));
            let mut w4 = None;
            for e in events {
                if let Some(p) = ctx.rel_sub(&rg.rely, &e.rg.rely)? {
                    w4 = Some(Witness::Pair(p.0, p.1));
                    break;
                }
            }
            premises.push(Premise::from_witness("4", "∀i. R ⊆ Rs_i".to_string(), w4));
            let mut w5 = None;
            for e in events {
                if let Some(p) = ctx.rel_sub(&e.rg.guar, &rg.guar)? {
                    w5 = Some(Witness::Pair(p.0, p.1));
                    break;
                }
            }
            premises.push(Premise::from_witness("5", "∀i. Gs_i ⊆ G".to_string(), w5));
            let mut w6 = None;
            for e in events {
                if let Some(s) = ctx.states_sub(&e.rg.post, &rg.post)? {
                    w6 = Some(Witness::State(s));
                    break;
                }
            }
            premises.push(Premise::from_witness(
                "6",
                "∀i. psts_i ⊆ pst".to_string(),
                w6,
            ));
            premises.push(Premise::from_witness(
                "7",
                "stable(pre, R)".to_string(),
                ctx.stable(&rg.pre, &rg.rely)?.map(|(x, y)| Witness::Pair(x, y)),
            ));
            premises.push(Premise::from_witness(
                "8",
                "∀s. (s, s) ∈ G".to_string(),
                ctx.refl(&rg.guar)?.map(Witness::State),
            ));
        }
        AnnKind::Par { units } => {
            // The six premise groups, by the rule's numbering.
            let mut all_ok = true;
            for n in units.values() {
                let rep = check_node(n, ctx)?;
                all_ok &= rep.accepted;
                children.push(rep);
            }
            premises.push(Premise::flat(
                "1",
                "∀κ. PS(κ) sat ⟨pres_κ, Rs_κ, Gs_κ, psts_κ⟩".to_string(),
                all_ok,
            ));
            let mut w2 = None;
            for n in units.values() {
                if let Some(s) = ctx.states_sub(&rg.pre, &n.rg.pre)? {
                    w2 = Some(Witness::State(s));
                    break;
                }
            }
            premises.push(Premise::from_witness(
                "2",
                "∀κ. pre ⊆ pres_κ".to_string(),
                w2,
            ));
            let mut w3 = None;
            for n in units.values() {
                if let Some(s) = ctx.states_sub(&n.rg.post, &rg.post)? {
                    w3 = Some(Witness::State(s));
                    break;
                }
            }
            premises.push(Premise::from_witness(
                "3",
                "∀κ. psts_κ ⊆ pst".to_string(),
                w3,
            ));
            let mut w4 = None;
            for n in units.values() {
                if let Some(p) = ctx.rel_sub(&n.rg.guar, &rg.guar)? {
                    w4 = Some(Witness::Pair(p.0, p.1));
                    break;
                }
            }
            premises.push(Premise::from_witness(
                "4",
                "∀κ. Gs_κ ⊆ G".to_string(),
                w4,
            ));
            let mut w5 = None;
            for n in units.values() {
                if let Some(p) = ctx.rel_sub(&rg.rely, &n.rg.rely)? {
                    w5 = Some(Witness::Pair(p.0, p.1));
                    break;
                }
            }
            premises.push(Premise::from_witness(
                "5",
                "∀κ. R ⊆ Rs_κ".to_string(),
                w5,
            ));
            let mut w6 = None;
            'p6: for (k1, n1) in units {
                for (k2, n2) in units {
                    if k1 == k2 {
                        continue;
                    }
                    if let Some(p) = ctx.rel_sub(&n1.rg.guar, &n2.rg.rely)? {
                        w6 = Some(Witness::Pair(p.0, p.1));
                        break 'p6;
                    }
                }
            }
            premises.push(Premise::from_witness(
                "6",
                "∀κ ≠ κ'. Gs_κ ⊆ Rs_κ'".to_string(),
                w6,
            ));
        }
        AnnKind::UnPre { left, right } => {
            let (p1, r1) = child_premise(
                "1",
                "P sat ⟨pre1, R, G, pst⟩".to_string(),
                left,
                &left.rg.clone(),
                ctx,
            )?;
            let (p2, r2) = child_premise(
                "2",
                "P sat ⟨pre2, R, G, pst⟩".to_string(),
                right,
                &right.rg.clone(),
                ctx,
            )?;
            premises.extend([p1, p2]);
            children.extend(r1.into_iter().chain(r2));
            // conclusion shape: pre = pre1 ∪ pre2, R/G/pst shared
            let union = Expr::or(left.rg.pre.clone(), right.rg.pre.clone());
            let shape_ok = left.rg.rely == rg.rely
                && right.rg.rely == rg.rely
                && left.rg.guar == rg.guar
                && right.rg.guar == rg.guar
                && left.rg.post == rg.post
                && right.rg.post == rg.post;
            let w = if !shape_ok {
                Some(Witness::State(State::new()))
            } else {
                match ctx.states_sub(&rg.pre, &union)? {
                    Some(s) => Some(Witness::State(s)),
                    None => ctx.states_sub(&union, &rg.pre)?.map(Witness::State),
                }
            };
            premises.push(Premise::from_witness(
                "3",
                "pre = pre1 ∪ pre2 (and R, G, pst shared)".to_string(),
                w,
            ));
        }
        AnnKind::IntPost { left, right } => {
            let (p1, r1) = child_premise(
                "1",
                "P sat ⟨pre, R, G, pst1⟩".to_string(),
                left,
                &left.rg.clone(),
                ctx,
            )?;
            let (p2, r2) = child_premise(
                "2",
                "P sat ⟨pre, R, G, pst2⟩".to_string(),
                right,
                &right.rg.clone(),
                ctx,
            )?;
            premises.extend([p1, p2]);
            children.extend(r1.into_iter().chain(r2));
            let inter = Expr::and(left.rg.post.clone(), right.rg.post.clone());
            let shape_ok = left.rg.rely == rg.rely
                && right.rg.rely == rg.rely
                && left.rg.guar == rg.guar
                && right.rg.guar == rg.guar
                && left.rg.pre == rg.pre
                && right.rg.pre == rg.pre;
            let w = if !shape_ok {
                Some(Witness::State(State::new()))
            } else {
                match ctx.states_sub(&rg.post, &inter)? {
                    Some(s) => Some(Witness::State(s)),
                    None => ctx.states_sub(&inter, &rg.post)?.map(Witness::State),
                }
            };
            premises.push(Premise::from_witness(
                "3",
                "pst = pst1 ∩ pst2 (and pre, R, G shared)".to_string(),
                w,
            ));
        }
        AnnKind::UnivPre { body } => {
            let mut vars = BTreeSet::new();
            a.vars(&mut vars);
            let mut w = None;
            for v in states_over(&vars, d, cap)? {
                if !eval_bool(&rg.pre, &v)? {
                    continue;
                }
                let mut inst = (**body).clone();
                inst.rg = same_rg_but(rg, Some(state_to_expr(&v)), None);
                let rep = check_node(&inst, ctx)?;
                if !rep.accepted {
                    w = Some(Witness::State(v));
                    children.push(rep);
                    break;
                }
            }
            premises.push(Premise::from_witness(
                "1",
                "∀v ∈ pre. P sat ⟨{v}, R, G, pst⟩".to_string(),
                w,
            ));
        }
        AnnKind::EmptyPre(_) => {
            premises.push(Premise::from_witness(
                "1",
                "pre = {}".to_string(),
                if is_empty_set(&rg.pre, d, cap)? {
                    None
                } else {
                    Some(Witness::State(State::new()))
                },
            ));
        }
    }
    Ok(ProofReport::assemble(a.rule_name(), premises, children))
}

/// Annotates a program with a rely-guarantee condition, consuming the given
/// sequence midpoints in pre-order (one per sequential composition).
pub fn annotate_program(p: &Program, rg: &RGCond, mids: &[Expr]) -> Result<AnnotatedNode> {
    let mut idx = 0;
    annot_prog(p, rg, mids, &mut idx)
}

fn annot_prog(
    p: &Program,
    rg: &RGCond,
    mids: &[Expr],
    idx: &mut usize,
) -> Result<AnnotatedNode> {
    let kind = match p {
        Program::Basic(asgs) => AnnKind::Basic(asgs.clone()),
        Program::Done => AnnKind::Basic(vec![]),
        Program::Seq(a, b) => {
            let m = mids
                .get(*idx)
                .ok_or_else(|| {
                    Error::MissingAnnotation(
                        "not enough MID annotations for the sequential compositions".to_string(),
                    )
                })?
                .clone();
            *idx += 1;
            let first = annot_prog(a, &same_rg_but(rg, None, Some(m.clone())), mids, idx)?;
            let second = annot_prog(b, &same_rg_but(rg, Some(m.clone()), None), mids, idx)?;
            AnnKind::Seq {
                mid: m,
                first: Box::new(first),
                second: Box::new(second),
            }
        }
        Program::Cond(b, p1, p2) => {
            let then = annot_prog(
                p1,
                &same_rg_but(rg, Some(Expr::and(rg.pre.clone(), b.clone())), None),
                mids,
                idx,
            )?;
            let els = annot_prog(
                p2,
                &same_rg_but(
                    rg,
                    Some(Expr::and(rg.pre.clone(), Expr::not(b.clone()))),
                    None,
                ),
                mids,
                idx,
            )?;
            AnnKind::Cond {
                test: b.clone(),
                then: Box::new(then),
                els: Box::new(els),
            }
        }
        Program::While(b, body) => {
            let inner = annot_prog(
                body,
                &same_rg_but(
                    rg,
                    Some(Expr::and(rg.pre.clone(), b.clone())),
                    Some(rg.pre.clone()),
                ),
                mids,
                idx,
            )?;
            AnnKind::While {
                test: b.clone(),
                body: Box::new(inner),
            }
        }
        Program::Await(b, body) => AnnKind::Await {
            guard: b.clone(),
            body: (**body).clone(),
        },
        Program::Nondt(r) => AnnKind::Nondt(r.clone()),
    };
    Ok(AnnotatedNode::new(kind, rg.clone()))
}

/// Annotates an event with a rely-guarantee condition: a basic event wraps
/// its body at the guard-augmented precondition; an anonymous event wraps
/// its program at the same condition.
pub fn annotate_event(ev: &Event, rg: &RGCond, mids: &[Expr]) -> Result<AnnotatedNode> {
    match ev {
        Event::Basic { guard, body, .. } => {
            let body_rg = same_rg_but(rg, Some(Expr::and(rg.pre.clone(), guard.clone())), None);
            let child = annotate_program(body, &body_rg, mids)?;
            Ok(AnnotatedNode::new(
                AnnKind::BasicEvt {
                    guard: guard.clone(),
                    body: Box::new(child),
                },
                rg.clone(),
            ))
        }
        Event::Anon(p) => {
            let child = annotate_program(p, rg, mids)?;
            Ok(AnnotatedNode::new(
                AnnKind::Inner {
                    body: Box::new(child),
                },
                rg.clone(),
            ))
        }
    }
}

fn gamma_of(spec: &SpecFile, ev: &Event) -> Result<(RGCond, Vec<Expr>)> {
    match ev.label() {
        Some(l) => spec.gamma(l),
        None => Err(Error::MissingGamma("<anonymous event>".to_string())),
    }
}

/// Annotates an event system from the per-event conditions declared in the
/// spec file: an event set gets ⟨∩ pres, ∩ relys, ∪ guars, ∪ psts⟩; a
/// sequenced event gets an EvtSeq node with the event's postcondition as
/// midpoint, adapting both sides with Conseq nodes.
pub fn annotate_esys(es: &EventSystem, spec: &SpecFile) -> Result<AnnotatedNode> {
    match es {
        EventSystem::Set(evts) => {
            let mut children = Vec::new();
            let mut pres = Vec::new();
            let mut relys = Vec::new();
            let mut guars = Vec::new();
            let mut psts = Vec::new();
            // Duplicate conjuncts/disjuncts are dropped: parameterized events
            // typically share one rely/guarantee, and the premise checks are
            // sensitive to the size of the combined relation.
            for ev in evts {
                let (rg, mids) = gamma_of(spec, ev)?;
                for (acc, e) in [
                    (&mut pres, rg.pre.clone()),
                    (&mut relys, rg.rely.clone()),
                    (&mut guars, rg.guar.clone()),
                    (&mut psts, rg.post.clone()),
                ] {
                    if !acc.contains(&e) {
                        acc.push(e);
                    }
                }
                children.push(annotate_event(ev, &rg, &mids)?);
            }
            let rg = RGCond {
                pre: Expr::conj(pres),
                rely: Expr::conj(relys),
                guar: Expr::disj(guars),
                post: Expr::disj(psts),
            };
            Ok(AnnotatedNode::new(AnnKind::EvtSet { events: children }, rg))
        }
        EventSystem::Seq(ev, rest) => {
            let (ev_rg, ev_mids) = gamma_of(spec, ev)?;
            let ev_node = annotate_event(ev, &ev_rg, &ev_mids)?;
            let rest_node = annotate_esys(rest, spec)?;
            let mid = ev_rg.post.clone();
            let rg = RGCond {
                pre: ev_rg.pre.clone(),
                rely: Expr::and(ev_rg.rely.clone(), rest_node.rg.rely.clone()),
                guar: Expr::or(ev_rg.guar.clone(), rest_node.rg.guar.clone()),
                post: rest_node.rg.post.clone(),
            };
            let ev_child = AnnotatedNode::new(
                AnnKind::Conseq {
                    inner: Box::new(ev_node),
                },
                same_rg_but(&rg, None, Some(mid.clone())),
            );
            let rest_child = AnnotatedNode::new(
                AnnKind::Conseq {
                    inner: Box::new(rest_node),
                },
                same_rg_but(&rg, Some(mid.clone()), None),
            );
            Ok(AnnotatedNode::new(
                AnnKind::EvtSeq {
                    mid,
                    event: Box::new(ev_child),
                    rest: Box::new(rest_child),
                },
                rg,
            ))
        }
    }
}

/// Annotates the whole parallel system at a top-level condition, with each
/// unit's condition assembled from its events' declared conditions.
pub fn annotate_par(spec: &SpecFile, rg: &RGCond) -> Result<AnnotatedNode> {
    let mut units = BTreeMap::new();
    for (unit, es) in &spec.system.systems {
        units.insert(unit.clone(), annotate_esys(es, spec)?);
    }
    Ok(AnnotatedNode::new(AnnKind::Par { units }, rg.clone()))
}

/// Invariant verification pipeline: `I` is an invariant of the system
/// w.r.t. `Init` if (a) Init ⊆ I, (b) every event's declared guarantee
/// preserves I, and (c) the system derives ⟨Init, {}, UNIV, UNIV⟩.
pub fn check_invariant_via_theorem(
    spec: &SpecFile,
    inv: &Expr,
    atom_bound: usize,
) -> Result<ProofReport> {
    check_invariant_via_theorem_capped(spec, inv, atom_bound, DEFAULT_CAP)
}

pub fn check_invariant_via_theorem_capped(
    spec: &SpecFile,
    inv: &Expr,
    atom_bound: usize,
    cap: u128,
) -> Result<ProofReport> {
    let d = &spec.domains;
    let mut premises = Vec::new();
    premises.push(Premise::from_witness(
        "a",
        "Init ⊆ I".to_string(),
        subset_states(&spec.init, inv, d, cap)?.map(Witness::State),
    ));
    for ev in spec.events() {
        let label = ev
            .label()
            .ok_or_else(|| Error::MissingGamma("<anonymous event>".to_string()))?;
        let (rg, _) = spec.gamma(label)?;
        premises.push(Premise::from_witness(
            &format!("b.{}", label),
            format!("stable(I, guar(Γ({})))", label),
            check_stable(inv, &rg.guar, d, cap)?.map(|(x, y)| Witness::Pair(x, y)),
        ));
    }
    let top = RGCond {
        pre: spec.init.clone(),
        rely: Expr::Empty,
        guar: Expr::Univ,
        post: Expr::Univ,
    };
    let par = annotate_par(spec, &top)?;
    let derivation = check_derivation_capped(&par, d, atom_bound, cap)?;
    premises.push(Premise::flat(
        "c",
        "PS sat ⟨Init, {}, UNIV, UNIV⟩".to_string(),
        derivation.accepted,
    ));
    Ok(ProofReport::assemble(
        "InvariantTheorem",
        premises,
        vec![derivation],
    ))
}
