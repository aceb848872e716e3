//! Computations and everything decided over them: assumption/commitment
//! membership, rely-guarantee validity, closed-system reachability and
//! invariants, and the meta-theory predicates (simulation, serialization,
//! conjoin, compositionality) as executable checks over finite domains.

use crate::domain::{enumerate_states_capped, rel_successors, DomainDecl};
use crate::error::Result;
use crate::expr::{eval_bool, eval_rel, Expr};
use crate::semantics::{step_esys, step_event, step_par, step_program, ActLabel};
use crate::state::State;
use crate::syntax::{
    Event, EventContext, EventSystem, ExecUnitId, ParallelEventSystem, Program, RGCond,
};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::rc::Rc;

/// A subject at any syntax level; the configuration spec component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spec {
    Prog(Program),
    Evt(Event, ExecUnitId),
    Esys(EventSystem, ExecUnitId),
    Par(ParallelEventSystem),
}

impl Spec {
    /// All action successors, uniformly labeled.
    pub fn step(
        &self,
        s: &State,
        x: &EventContext,
        d: &DomainDecl,
        atom_bound: usize,
    ) -> Result<Vec<(Spec, State, EventContext, ActLabel)>> {
        match self {
            Spec::Prog(p) => Ok(step_program(p, s, d, atom_bound)?
                .into_iter()
                .map(|(pn, sn)| (Spec::Prog(pn), sn, x.clone(), ActLabel::Cmd(None)))
                .collect()),
            Spec::Evt(e, u) => Ok(step_event(e, s, x, u, d, atom_bound)?
                .into_iter()
                .map(|(en, sn, xn, l)| (Spec::Evt(en, u.clone()), sn, xn, l))
                .collect()),
            Spec::Esys(es, u) => Ok(step_esys(es, s, x, u, d, atom_bound)?
                .into_iter()
                .map(|(esn, sn, xn, l)| (Spec::Esys(esn, u.clone()), sn, xn, l))
                .collect()),
            Spec::Par(ps) => Ok(step_par(ps, s, x, d, atom_bound)?
                .into_iter()
                .map(|(pn, sn, xn, l)| (Spec::Par(pn), sn, xn, l))
                .collect()),
        }
    }

    /// Whether the subject has terminated. Event systems and parallel systems
    /// run forever (a set is always ready to trigger), so only programs and
    /// events terminate.
    pub fn terminated(&self) -> bool {
        match self {
            Spec::Prog(p) => *p == Program::Done,
            Spec::Evt(e, _) => e.is_finished(),
            Spec::Esys(_, _) | Spec::Par(_) => false,
        }
    }
}

impl fmt::Display for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spec::Prog(p) => write!(f, "{}", crate::parser::pretty_program(p)),
            Spec::Evt(e, u) => write!(f, "{} @ {}", crate::parser::pretty_event(e), u),
            Spec::Esys(es, u) => write!(f, "{} @ {}", crate::parser::pretty_esys(es), u),
            Spec::Par(ps) => {
                for (i, (u, es)) in ps.systems.iter().enumerate() {
                    if i > 0 {
                        writeln!(f, " ||")?;
                    }
                    write!(f, "UNIT {} : {}", u, crate::parser::pretty_esys(es))?;
                }
                Ok(())
            }
        }
    }
}

/// One point of a computation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub spec: Spec,
    pub state: State,
    pub ctx: EventContext,
}

impl Config {
    pub fn new(spec: Spec, state: State, ctx: EventContext) -> Config {
        Config { spec, state, ctx }
    }
}

/// An edge of a computation: an environment transition or an action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompEdge {
    Env,
    Act(ActLabel),
}

/// A finite computation: configurations linked by edges
/// (`edges.len() == configs.len() - 1`). Environment edges never change the
/// spec component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Computation {
    pub configs: Vec<Config>,
    pub edges: Vec<CompEdge>,
}

impl Computation {
    pub fn singleton(cfg: Config) -> Computation {
        Computation {
            configs: vec![cfg],
            edges: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a computation is never empty; the singleton is the base case
    }

    pub fn last(&self) -> &Config {
        self.configs.last().expect("computations are nonempty")
    }

    /// Checks that every edge is justified: env edges preserve the spec and
    /// come from `env`; action edges are semantics steps.
    pub fn replay(
        &self,
        env: &EnvModel,
        d: &DomainDecl,
        atom_bound: usize,
    ) -> Result<bool> {
        for i in 0..self.edges.len() {
            let a = &self.configs[i];
            let b = &self.configs[i + 1];
            match &self.edges[i] {
                CompEdge::Env => {
                    if a.spec != b.spec {
                        return Ok(false);
                    }
                    let allowed = env_successors(env, &a.state, &a.ctx, d)?;
                    if !allowed.contains(&(b.state.clone(), b.ctx.clone())) {
                        return Ok(false);
                    }
                }
                CompEdge::Act(lbl) => {
                    let steps = a.spec.step(&a.state, &a.ctx, d, atom_bound)?;
                    if !steps.iter().any(|(sp, sn, xn, l)| {
                        sp == &b.spec && sn == &b.state && xn == &b.ctx && l == lbl
                    }) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

/// How the environment may move between two configurations.
#[derive(Debug, Clone)]
pub enum EnvModel {
    /// No environment transitions (closed system).
    Closed,
    /// State successors from the rely relation; context unchanged.
    Rely(Expr),
    /// Any state over the declared domains and any context from the given
    /// set. This is the "arbitrary environment" restricted to a finite
    /// universe; the compositionality check needs contexts to vary so that an
    /// event occurrence on one unit shows up as an environment transition on
    /// the others.
    Arbitrary {
        states: Vec<State>,
        ctxs: Vec<EventContext>,
    },
}

/// Environment successors of `(s, x)` under the model.
pub fn env_successors(
    env: &EnvModel,
    s: &State,
    x: &EventContext,
    d: &DomainDecl,
) -> Result<Vec<(State, EventContext)>> {
    match env {
        EnvModel::Closed => Ok(vec![]),
        EnvModel::Rely(r) => Ok(rel_successors(r, s, d)?
            .into_iter()
            .map(|s2| (s2, x.clone()))
            .collect()),
        EnvModel::Arbitrary { states, ctxs } => {
            let mut out = Vec::with_capacity(states.len() * ctxs.len());
            for s2 in states {
                for x2 in ctxs {
                    out.push((s2.clone(), x2.clone()));
                }
            }
            Ok(out)
        }
    }
}

/// All outgoing computation edges of a configuration, canonically sorted.
fn successors(
    cfg: &Config,
    env: &EnvModel,
    d: &DomainDecl,
    atom_bound: usize,
) -> Result<Vec<(CompEdge, Config)>> {
    let mut out = Vec::new();
    for (s2, x2) in env_successors(env, &cfg.state, &cfg.ctx, d)? {
        out.push((CompEdge::Env, Config::new(cfg.spec.clone(), s2, x2)));
    }
    for (sp, s2, x2, lbl) in cfg.spec.step(&cfg.state, &cfg.ctx, d, atom_bound)? {
        out.push((CompEdge::Act(lbl), Config::new(sp, s2, x2)));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Lazy stream of all computations from one configuration, in canonical
/// (lexicographic) order, duplicate-free, with at most `depth` edges. The
/// singleton computation comes first.
pub struct ComputationStream<'a> {
    stack: Vec<Computation>,
    env: &'a EnvModel,
    d: &'a DomainDecl,
    depth: usize,
    atom_bound: usize,
    failed: bool,
}

impl Iterator for ComputationStream<'_> {
    type Item = Result<Computation>;

    fn next(&mut self) -> Option<Result<Computation>> {
        if self.failed {
            return None;
        }
        let w = self.stack.pop()?;
        if w.edges.len() < self.depth {
            match successors(w.last(), self.env, self.d, self.atom_bound) {
                Ok(kids) => {
                    for (edge, cfg) in kids.into_iter().rev() {
                        let mut ext = w.clone();
                        ext.edges.push(edge);
                        ext.configs.push(cfg);
                        self.stack.push(ext);
                    }
                }
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
        Some(Ok(w))
    }
}

/// All computations from `(spec, s, x)` with at most `depth` transitions.
pub fn computations<'a>(
    spec: Spec,
    s: State,
    x: EventContext,
    depth: usize,
    env: &'a EnvModel,
    d: &'a DomainDecl,
    atom_bound: usize,
) -> ComputationStream<'a> {
    ComputationStream {
        stack: vec![Computation::singleton(Config::new(spec, s, x))],
        env,
        d,
        depth,
        atom_bound,
        failed: false,
    }
}

/// Membership in the assumption A(pre, R): the first state satisfies `pre`
/// and every environment edge's state pair is in `R`.
pub fn in_assumption(w: &Computation, pre: &Expr, r: &Expr) -> Result<bool> {
    if !eval_bool(pre, &w.configs[0].state)? {
        return Ok(false);
    }
    for i in 0..w.edges.len() {
        if w.edges[i] == CompEdge::Env
            && !eval_rel(r, &w.configs[i].state, &w.configs[i + 1].state)?
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Membership in the commitment C(G, pst): every action edge's state pair is
/// in `G`, and a terminated final spec implies the final state satisfies
/// `pst`.
pub fn in_commitment(w: &Computation, g: &Expr, pst: &Expr) -> Result<bool> {
    for i in 0..w.edges.len() {
        if matches!(w.edges[i], CompEdge::Act(_))
            && !eval_rel(g, &w.configs[i].state, &w.configs[i + 1].state)?
        {
            return Ok(false);
        }
    }
    if w.last().spec.terminated() && !eval_bool(pst, &w.last().state)? {
        return Ok(false);
    }
    Ok(true)
}

/// Outcome of a bounded check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds { depth: usize },
    Counterexample { comp: Computation, clause: String },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds { depth } => write!(f, "holds (checked to depth {})", depth),
            Verdict::Counterexample { comp, clause } => {
                writeln!(f, "counterexample: {}", clause)?;
                let state_line = |cfg: &Config| format!("{} | ctx {:?}", cfg.state, ctx_names(&cfg.ctx));
                for (i, cfg) in comp.configs.iter().enumerate() {
                    if i > 0 {
                        match &comp.edges[i - 1] {
                            CompEdge::Env => writeln!(f, "  -env->")?,
                            CompEdge::Act(l) => writeln!(f, "  -{}->", l)?,
                        }
                    }
                    writeln!(f, "  {}", state_line(cfg))?;
                }
                Ok(())
            }
        }
    }
}

fn ctx_names(x: &EventContext) -> Vec<String> {
    x.entries
        .iter()
        .map(|(u, e)| match e.label() {
            Some(l) => format!("{}: {}", u, l),
            None => format!("{}: <anon>", u),
        })
        .collect()
}

/// Rebuilds the computation leading to `cfg` from a BFS parent map.
fn trace_to(
    cfg: &Config,
    parents: &BTreeMap<Config, (Config, CompEdge)>,
) -> Computation {
    let mut configs = vec![cfg.clone()];
    let mut edges = Vec::new();
    let mut cur = cfg.clone();
    while let Some((p, e)) = parents.get(&cur) {
        configs.push(p.clone());
        edges.push(e.clone());
        cur = p.clone();
    }
    configs.reverse();
    edges.reverse();
    Computation { configs, edges }
}

/// Decides bounded rely-guarantee validity: for every initial state over the
/// declared domains (pre filters inside the assumption) and empty initial
/// context, every computation with at most `depth` transitions whose
/// environment steps satisfy the rely must commit: action edges in the
/// guarantee and terminated states in the postcondition.
pub fn check_validity(
    subject: &Spec,
    rg: &RGCond,
    d: &DomainDecl,
    depth: usize,
    atom_bound: usize,
    cap: u128,
) -> Result<Verdict> {
    let env = EnvModel::Rely(rg.rely.clone());
    for s0 in enumerate_states_capped(d, &d.all_vars(), cap)? {
        if !eval_bool(&rg.pre, &s0)? {
            continue;
        }
        let root = Config::new(subject.clone(), s0, EventContext::empty());
        // remaining-steps map so deeper revisits of a known config re-expand
        let mut best: BTreeMap<Config, usize> = BTreeMap::new();
        let mut parents: BTreeMap<Config, (Config, CompEdge)> = BTreeMap::new();
        let mut queue: VecDeque<(Config, usize)> = VecDeque::new();
        best.insert(root.clone(), depth);
        queue.push_back((root, depth));
        while let Some((cfg, rem)) = queue.pop_front() {
            if cfg.spec.terminated() && !eval_bool(&rg.post, &cfg.state)? {
                return Ok(Verdict::Counterexample {
                    comp: trace_to(&cfg, &parents),
                    clause: format!(
                        "terminated state {} violates the postcondition {}",
                        cfg.state, rg.post
                    ),
                });
            }
            if rem == 0 {
                continue;
            }
            for (edge, succ) in successors(&cfg, &env, d, atom_bound)? {
                if let CompEdge::Act(_) = edge {
                    if !eval_rel(&rg.guar, &cfg.state, &succ.state)? {
                        let mut comp = trace_to(&cfg, &parents);
                        comp.edges.push(edge);
                        comp.configs.push(succ);
                        return Ok(Verdict::Counterexample {
                            clause: format!(
                                "action step leaves the guarantee {}",
                                rg.guar
                            ),
                            comp,
                        });
                    }
                }
                let known = best.get(&succ).copied();
                if known.is_none_or(|k| k < rem - 1) {
                    if known.is_none() {
                        parents.insert(succ.clone(), (cfg.clone(), edge));
                    }
                    best.insert(succ.clone(), rem - 1);
                    queue.push_back((succ, rem - 1));
                }
            }
        }
    }
    Ok(Verdict::Holds { depth })
}

struct ReachResult {
    states: BTreeSet<State>,
    violation: Option<(Computation, State)>,
}

fn closed_reach(
    subject: &Spec,
    init: &Expr,
    inv: Option<&Expr>,
    d: &DomainDecl,
    depth: usize,
    atom_bound: usize,
    cap: u128,
) -> Result<ReachResult> {
    let mut states = BTreeSet::new();
    let mut parents: BTreeMap<Config, (Config, CompEdge)> = BTreeMap::new();
    let mut best: BTreeMap<Config, usize> = BTreeMap::new();
    let mut queue: VecDeque<(Config, usize)> = VecDeque::new();
    for s0 in enumerate_states_capped(d, &d.all_vars(), cap)? {
        if !eval_bool(init, &s0)? {
            continue;
        }
        let root = Config::new(subject.clone(), s0, EventContext::empty());
        best.insert(root.clone(), depth);
        queue.push_back((root, depth));
    }
    while let Some((cfg, rem)) = queue.pop_front() {
        d.check_state(&cfg.state)?;
        states.insert(cfg.state.clone());
        if let Some(i) = inv {
            if !eval_bool(i, &cfg.state)? {
                return Ok(ReachResult {
                    states,
                    violation: Some((trace_to(&cfg, &parents), cfg.state.clone())),
                });
            }
        }
        if rem == 0 {
            continue;
        }
        for (sp, s2, x2, lbl) in cfg.spec.step(&cfg.state, &cfg.ctx, d, atom_bound)? {
            let succ = Config::new(sp, s2, x2);
            let known = best.get(&succ).copied();
            if known.is_none_or(|k| k < rem - 1) {
                if known.is_none() {
                    parents.insert(succ.clone(), (cfg.clone(), CompEdge::Act(lbl)));
                }
                best.insert(succ.clone(), rem - 1);
                queue.push_back((succ, rem - 1));
            }
        }
    }
    Ok(ReachResult {
        states,
        violation: None,
    })
}

/// States occurring in closed computations (no environment transitions) of
/// length ≤ depth+1, starting from states satisfying `init` with an empty
/// context. States outside the declared domains raise `DomainEscape`.
pub fn reachable(
    ps: &ParallelEventSystem,
    init: &Expr,
    d: &DomainDecl,
    depth: usize,
    atom_bound: usize,
    cap: u128,
) -> Result<BTreeSet<State>> {
    Ok(closed_reach(
        &Spec::Par(ps.clone()),
        init,
        None,
        d,
        depth,
        atom_bound,
        cap,
    )?
    .states)
}

/// Bounded direct invariant check: every state reachable in the closed system
/// within `depth` steps satisfies `inv`.
pub fn check_invariant_direct(
    ps: &ParallelEventSystem,
    init: &Expr,
    inv: &Expr,
    d: &DomainDecl,
    depth: usize,
    atom_bound: usize,
    cap: u128,
) -> Result<Verdict> {
    let r = closed_reach(&Spec::Par(ps.clone()), init, Some(inv), d, depth, atom_bound, cap)?;
    match r.violation {
        None => Ok(Verdict::Holds { depth }),
        Some((comp, s)) => Ok(Verdict::Counterexample {
            comp,
            clause: format!("reachable state {} violates the invariant {}", s, inv),
        }),
    }
}

/// Simulation of computations: equal lengths, pointwise-equal states and
/// contexts, pointwise-equal edges; specs are ignored.
pub fn simulation_eq(w1: &Computation, w2: &Computation) -> bool {
    w1.len() == w2.len()
        && w1.edges == w2.edges
        && w1
            .configs
            .iter()
            .zip(&w2.configs)
            .all(|(a, b)| a.state == b.state && a.ctx == b.ctx)
}

/// Searches for a serialization of `w` (a computation of an event system)
/// into computations of single events from `evs`: segments overlap at their
/// boundary configurations, each segment is replayed through the event-level
/// semantics mirroring the states, contexts, and labels of `w`, and their
/// concatenation simulates `w`. Segments end where their event has finished
/// (or at the end of `w`).
pub fn serialization_witness(
    w: &Computation,
    evs: &[Event],
    seg_bound: usize,
    d: &DomainDecl,
    atom_bound: usize,
) -> Result<Option<Vec<Computation>>> {
    if evs.is_empty() {
        return Ok(None);
    }
    if w.edges.is_empty() {
        let unit = match evs[0].label() {
            Some(l) => l.unit.clone(),
            None => ExecUnitId::new("?"),
        };
        let seg = Computation::singleton(Config::new(
            Spec::Evt(evs[0].clone(), unit),
            w.configs[0].state.clone(),
            w.configs[0].ctx.clone(),
        ));
        return Ok(Some(vec![seg]));
    }
    dfs_serialize(w, evs, 0, seg_bound, d, atom_bound)
}

fn dfs_serialize(
    w: &Computation,
    evs: &[Event],
    pos: usize,
    segs_left: usize,
    d: &DomainDecl,
    atom_bound: usize,
) -> Result<Option<Vec<Computation>>> {
    if pos == w.configs.len() - 1 {
        return Ok(Some(vec![]));
    }
    if segs_left == 0 {
        return Ok(None);
    }
    for ev in evs {
        let mut ends = replay_segment(w, ev, pos, d, atom_bound)?;
        // longest segments first: fewest segments overall
        ends.reverse();
        for (end, seg) in ends {
            if let Some(mut rest) = dfs_serialize(w, evs, end, segs_left - 1, d, atom_bound)? {
                rest.insert(0, seg);
                return Ok(Some(rest));
            }
        }
    }
    Ok(None)
}

/// Replays `w` from position `pos` through a fresh instance of `ev`,
/// returning every position where the segment may stop together with the
/// event computation built so far.
fn replay_segment(
    w: &Computation,
    ev: &Event,
    pos: usize,
    d: &DomainDecl,
    atom_bound: usize,
) -> Result<Vec<(usize, Computation)>> {
    let unit = match ev.label() {
        Some(l) => l.unit.clone(),
        None => ExecUnitId::new("?"),
    };
    let mut spec = Spec::Evt(ev.clone(), unit);
    let start = &w.configs[pos];
    let mut configs = vec![Config::new(spec.clone(), start.state.clone(), start.ctx.clone())];
    let mut edges: Vec<CompEdge> = Vec::new();
    let mut ends = Vec::new();
    let mut i = pos;
    loop {
        let at_end = i == w.configs.len() - 1;
        if i > pos && (spec.terminated() || at_end) {
            ends.push((
                i,
                Computation {
                    configs: configs.clone(),
                    edges: edges.clone(),
                },
            ));
        }
        if at_end {
            break;
        }
        let target = &w.configs[i + 1];
        match &w.edges[i] {
            CompEdge::Env => {
                configs.push(Config::new(spec.clone(), target.state.clone(), target.ctx.clone()));
                edges.push(CompEdge::Env);
            }
            CompEdge::Act(lbl) => {
                let steps = spec.step(&w.configs[i].state, &w.configs[i].ctx, d, atom_bound)?;
                match steps
                    .into_iter()
                    .find(|(_, sn, xn, l)| *sn == target.state && *xn == target.ctx && l == lbl)
                {
                    Some((sp, sn, xn, _)) => {
                        spec = sp;
                        configs.push(Config::new(spec.clone(), sn, xn));
                        edges.push(CompEdge::Act(lbl.clone()));
                    }
                    None => break,
                }
            }
        }
        i += 1;
    }
    ends.dedup_by_key(|(e, _)| *e);
    Ok(ends)
}

/// The four clauses of the conjoin relation between a parallel computation
/// and a family of per-unit computations: equal lengths; equal state and
/// context sequences; specs project; and at every step either everybody takes
/// an environment transition, or exactly the acting unit takes the action and
/// all others take environment transitions.
pub fn conjoin_check(w: &Computation, fam: &BTreeMap<ExecUnitId, Computation>) -> bool {
    // clause 1
    if fam.values().any(|c| c.len() != w.len()) {
        return false;
    }
    for j in 0..w.len() {
        let pj = &w.configs[j];
        let ps = match &pj.spec {
            Spec::Par(ps) => ps,
            _ => return false,
        };
        if ps.systems.len() != fam.len() {
            return false;
        }
        for (unit, c) in fam {
            let cj = &c.configs[j];
            // clause 2
            if cj.state != pj.state || cj.ctx != pj.ctx {
                return false;
            }
            // clause 3
            match (&cj.spec, ps.systems.get(unit)) {
                (Spec::Esys(es, u), Some(es2)) if u == unit && es == es2 => {}
                _ => return false,
            }
        }
    }
    // clause 4
    for j in 0..w.edges.len() {
        match &w.edges[j] {
            CompEdge::Env => {
                if fam.values().any(|c| c.edges[j] != CompEdge::Env) {
                    return false;
                }
            }
            CompEdge::Act(lbl) => {
                let k1 = match lbl {
                    ActLabel::Cmd(Some(u)) => u.clone(),
                    ActLabel::EvtOcc(l) => l.unit.clone(),
                    ActLabel::Cmd(None) => return false,
                };
                match fam.get(&k1) {
                    Some(c) if c.edges[j] == CompEdge::Act(lbl.clone()) => {}
                    _ => return false,
                }
                if fam
                    .iter()
                    .any(|(u, c)| *u != k1 && c.edges[j] != CompEdge::Env)
                {
                    return false;
                }
            }
        }
    }
    true
}

/// All event contexts formed from the units' own basic events (each unit
/// entry absent or one of its events). This is the finite context universe an
/// arbitrary environment ranges over.
pub fn context_space(ps: &ParallelEventSystem) -> Vec<EventContext> {
    fn unit_events(es: &EventSystem, out: &mut Vec<Event>) {
        match es {
            EventSystem::Set(evts) => out.extend(evts.iter().cloned()),
            EventSystem::Seq(e, rest) => {
                out.push(e.clone());
                unit_events(rest, out);
            }
        }
    }
    let mut ctxs = vec![EventContext::empty()];
    for (unit, es) in &ps.systems {
        let mut events = Vec::new();
        unit_events(es, &mut events);
        let mut next = ctxs.clone();
        for x in &ctxs {
            for ev in &events {
                next.push(x.set(unit, ev.clone()));
            }
        }
        ctxs = next;
    }
    ctxs.sort();
    ctxs.dedup();
    ctxs
}

// The depth-bounded computation sets compared by check_compositional are
// prefix-closed, so each is represented by its unfolding tree with subtrees
// memoized on (configuration, remaining depth); two sets are equal iff their
// trees are.
struct TreeNode {
    config: Config,
    children: Vec<(CompEdge, Rc<TreeNode>)>,
}

fn build_tree(
    cfg: Config,
    depth: usize,
    env: &EnvModel,
    d: &DomainDecl,
    atom_bound: usize,
    memo: &mut BTreeMap<(Config, usize), Rc<TreeNode>>,
) -> Result<Rc<TreeNode>> {
    if let Some(n) = memo.get(&(cfg.clone(), depth)) {
        return Ok(n.clone());
    }
    let mut children = Vec::new();
    if depth > 0 {
        for (edge, succ) in successors(&cfg, env, d, atom_bound)? {
            // Stay domain-closed: an action escaping the declared domains
            // cannot be mirrored by the finite arbitrary environment, so it
            // is outside the universe both sides range over.
            if d.check_state(&succ.state).is_err() {
                continue;
            }
            let child = build_tree(succ, depth - 1, env, d, atom_bound, memo)?;
            children.push((edge, child));
        }
    }
    let node = Rc::new(TreeNode {
        config: cfg.clone(),
        children,
    });
    memo.insert((cfg, depth), node.clone());
    Ok(node)
}

fn find_env_child(node: &Rc<TreeNode>, s: &State, x: &EventContext) -> Option<Rc<TreeNode>> {
    node.children
        .iter()
        .find(|(e, c)| *e == CompEdge::Env && c.config.state == *s && c.config.ctx == *x)
        .map(|(_, c)| c.clone())
}

type ConjTuple = BTreeMap<ExecUnitId, Rc<TreeNode>>;

/// Children of a conjoin-combination node, derived from the per-unit trees
/// exactly per Def.-3 clause 4, keyed by the resulting parallel config.
fn conjoin_children(comps: &ConjTuple) -> BTreeMap<(CompEdge, Config), ConjTuple> {
    let mut out = BTreeMap::new();
    let par_spec = |tuple: &ConjTuple| {
        ParallelEventSystem {
            systems: tuple
                .iter()
                .map(|(u, n)| match &n.config.spec {
                    Spec::Esys(es, _) => (u.clone(), es.clone()),
                    _ => unreachable!("components are event systems"),
                })
                .collect(),
        }
    };
    // all-environment case
    let (first_unit, first) = comps.iter().next().expect("at least one unit");
    for (edge, child) in &first.children {
        if *edge != CompEdge::Env {
            continue;
        }
        let (s2, x2) = (&child.config.state, &child.config.ctx);
        let mut tuple: ConjTuple = BTreeMap::new();
        tuple.insert(first_unit.clone(), child.clone());
        let ok = comps.iter().skip(1).all(|(u, n)| {
            match find_env_child(n, s2, x2) {
                Some(c) => {
                    tuple.insert(u.clone(), c);
                    true
                }
                None => false,
            }
        });
        if ok {
            let cfg = Config::new(Spec::Par(par_spec(&tuple)), s2.clone(), x2.clone());
            out.insert((CompEdge::Env, cfg), tuple);
        }
    }
    // single-action case
    for (unit, node) in comps {
        for (edge, child) in &node.children {
            let lbl = match edge {
                CompEdge::Act(l) => l,
                CompEdge::Env => continue,
            };
            let (s2, x2) = (&child.config.state, &child.config.ctx);
            let mut tuple: ConjTuple = BTreeMap::new();
            tuple.insert(unit.clone(), child.clone());
            let ok = comps.iter().filter(|(u, _)| *u != unit).all(|(u, n)| {
                match find_env_child(n, s2, x2) {
                    Some(c) => {
                        tuple.insert(u.clone(), c);
                        true
                    }
                    None => false,
                }
            });
            if ok {
                let cfg = Config::new(Spec::Par(par_spec(&tuple)), s2.clone(), x2.clone());
                out.insert((CompEdge::Act(lbl.clone()), cfg), tuple);
            }
        }
    }
    out
}

fn compare_trees(
    par: &Rc<TreeNode>,
    comps: &ConjTuple,
    path: &mut Vec<(CompEdge, Config)>,
    root: &Config,
    seen: &mut BTreeSet<(usize, Vec<usize>)>,
) -> std::result::Result<(), Verdict> {
    let key = (
        Rc::as_ptr(par) as usize,
        comps.values().map(|n| Rc::as_ptr(n) as usize).collect(),
    );
    if !seen.insert(key) {
        return Ok(());
    }
    let conj = conjoin_children(comps);
    let par_keys: Vec<(CompEdge, Config)> = par
        .children
        .iter()
        .map(|(e, c)| (e.clone(), c.config.clone()))
        .collect();
    let conj_keys: Vec<&(CompEdge, Config)> = conj.keys().collect();
    let mkce = |path: &[(CompEdge, Config)], extra: Option<&(CompEdge, Config)>, clause: String| {
        let mut configs = vec![root.clone()];
        let mut edges = Vec::new();
        for (e, c) in path {
            edges.push(e.clone());
            configs.push(c.clone());
        }
        if let Some((e, c)) = extra {
            edges.push(e.clone());
            configs.push(c.clone());
        }
        Verdict::Counterexample {
            comp: Computation { configs, edges },
            clause,
        }
    };
    for k in &par_keys {
        if !conj.contains_key(k) {
            return Err(mkce(
                path,
                Some(k),
                "computation of the parallel system has no conjoin decomposition".to_string(),
            ));
        }
    }
    for k in conj_keys {
        if !par_keys.contains(k) {
            return Err(mkce(
                path,
                Some(k),
                "conjoin combination is not a computation of the parallel system".to_string(),
            ));
        }
    }
    for (edge, child) in &par.children {
        let tuple = &conj[&(edge.clone(), child.config.clone())];
        path.push((edge.clone(), child.config.clone()));
        let r = compare_trees(child, tuple, path, root, seen);
        path.pop();
        r?;
    }
    Ok(())
}

/// Lemma-2 check: the depth-bounded computation set of the parallel system
/// equals the set of Def.-3 conjoin combinations of the units' depth-bounded
/// computation sets, both built under the same arbitrary environment
/// (declared domains for states, the spec's event contexts for contexts).
/// Both inclusions are established by walking the two prefix trees.
pub fn check_compositional(
    ps: &ParallelEventSystem,
    s: &State,
    x: &EventContext,
    depth: usize,
    d: &DomainDecl,
    atom_bound: usize,
    cap: u128,
) -> Result<Verdict> {
    let env = EnvModel::Arbitrary {
        states: enumerate_states_capped(d, &d.all_vars(), cap)?,
        ctxs: context_space(ps),
    };
    let mut memo = BTreeMap::new();
    let par_root = build_tree(
        Config::new(Spec::Par(ps.clone()), s.clone(), x.clone()),
        depth,
        &env,
        d,
        atom_bound,
        &mut memo,
    )?;
    let mut comps: ConjTuple = BTreeMap::new();
    for (unit, es) in &ps.systems {
        let node = build_tree(
            Config::new(Spec::Esys(es.clone(), unit.clone()), s.clone(), x.clone()),
            depth,
            &env,
            d,
            atom_bound,
            &mut memo,
        )?;
        comps.insert(unit.clone(), node);
    }
    let root = par_root.config.clone();
    let mut seen = BTreeSet::new();
    match compare_trees(&par_root, &comps, &mut Vec::new(), &root, &mut seen) {
        Ok(()) => Ok(Verdict::Holds { depth }),
        Err(v) => Ok(v),
    }
}

/// JSON form of a computation (states, contexts, specs as text, edges).
pub fn computation_to_json(w: &Computation) -> serde_json::Value {
    use serde_json::json;
    json!({
        "configs": w.configs.iter().map(|c| json!({
            "spec": c.spec.to_string(),
            "state": c.state.to_json(),
            "ctx": ctx_names(&c.ctx),
        })).collect::<Vec<_>>(),
        "edges": w.edges.iter().map(|e| match e {
            CompEdge::Env => json!("env"),
            CompEdge::Act(l) => json!({"act": l.to_string()}),
        }).collect::<Vec<_>>(),
    })
}

/// GraphViz form of a computation: a labeled chain.
pub fn computation_to_dot(w: &Computation) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("digraph computation {\n  rankdir=LR;\n");
    for (i, c) in w.configs.iter().enumerate() {
        let label = format!("{}", c.state).replace('"', "\\\"");
        let _ = writeln!(out, "  n{} [label=\"{}\"];", i, label);
    }
    for (i, e) in w.edges.iter().enumerate() {
        let label = match e {
            CompEdge::Env => "env".to_string(),
            CompEdge::Act(l) => l.to_string().replace('"', "\\\""),
        };
        let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", i, i + 1, label);
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BinOp;
    use crate::syntax::EventLabel;
    use crate::value::Value;

    fn d_x(vals: &[i64]) -> DomainDecl {
        let mut d = DomainDecl::new();
        d.declare("x", vals.iter().map(|&n| Value::int(n)).collect());
        d
    }

    fn sx(n: i64) -> State {
        State::from_pairs([("x", Value::int(n))])
    }

    fn assign1() -> Spec {
        Spec::Prog(Program::assign("x", Expr::int(1)))
    }

    fn collect(
        spec: Spec,
        s: State,
        depth: usize,
        env: &EnvModel,
        d: &DomainDecl,
    ) -> Vec<Computation> {
        computations(spec, s, EventContext::empty(), depth, env, d, 100)
            .collect::<Result<Vec<_>>>()
            .unwrap()
    }

    #[test]
    fn depth_zero_is_the_singleton() {
        let d = d_x(&[0, 1]);
        let ws = collect(assign1(), sx(0), 0, &EnvModel::Closed, &d);
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].len(), 1);
    }

    #[test]
    fn closed_one_action_two_computations() {
        let d = d_x(&[0, 1]);
        let ws = collect(assign1(), sx(0), 1, &EnvModel::Closed, &d);
        assert_eq!(ws.len(), 2);
    }

    #[test]
    fn rely_id_env_step_preserves_state() {
        let d = d_x(&[0, 1]);
        let env = EnvModel::Rely(Expr::IdRel);
        // singleton + 1 action extension + 1 Id env extension
        let ws = collect(assign1(), sx(0), 1, &env, &d);
        assert_eq!(ws.len(), 3);
        for w in &ws {
            for i in 0..w.edges.len() {
                if w.edges[i] == CompEdge::Env {
                    assert_eq!(w.configs[i].state, w.configs[i + 1].state);
                }
            }
        }
    }

    #[test]
    fn stream_is_duplicate_free_and_sorted() {
        let d = d_x(&[0, 1]);
        let env = EnvModel::Rely(Expr::IdRel);
        let ws = collect(assign1(), sx(0), 3, &env, &d);
        let mut sorted = ws.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(ws, sorted);
    }

    #[test]
    fn assumption_checks_first_state_and_env_edges() {
        let d = d_x(&[0, 1]);
        let pre = Expr::eq(Expr::var("x"), Expr::int(0));
        let w = Computation::singleton(Config::new(assign1(), sx(0), EventContext::empty()));
        assert!(in_assumption(&w, &pre, &Expr::IdRel).unwrap());
        let w_bad = Computation::singleton(Config::new(assign1(), sx(1), EventContext::empty()));
        assert!(!in_assumption(&w_bad, &pre, &Expr::IdRel).unwrap());
        // one env edge outside R
        let env = EnvModel::Arbitrary {
            states: vec![sx(0), sx(1)],
            ctxs: vec![EventContext::empty()],
        };
        let ws = collect(assign1(), sx(0), 1, &env, &d);
        let moved = ws
            .iter()
            .find(|w| {
                w.edges.first() == Some(&CompEdge::Env) && w.configs[1].state == sx(1)
            })
            .unwrap();
        assert!(!in_assumption(moved, &pre, &Expr::IdRel).unwrap());
    }

    #[test]
    fn commitment_checks_action_edges_and_final_state() {
        let d = d_x(&[0, 1]);
        let ws = collect(assign1(), sx(0), 1, &EnvModel::Closed, &d);
        let acted = ws.iter().find(|w| w.edges.len() == 1).unwrap();
        assert!(in_commitment(acted, &Expr::Univ, &Expr::eq(Expr::var("x"), Expr::int(1))).unwrap());
        // the (0,1) action pair is not in Id
        assert!(!in_commitment(acted, &Expr::IdRel, &Expr::Univ).unwrap());
        // terminated final state must satisfy pst
        assert!(!in_commitment(acted, &Expr::Univ, &Expr::eq(Expr::var("x"), Expr::int(0))).unwrap());
        // env-only computation with non-terminal spec is vacuously committed
        let singleton = ws.iter().find(|w| w.edges.is_empty()).unwrap();
        assert!(in_commitment(singleton, &Expr::Empty, &Expr::Empty).unwrap());
    }

    #[test]
    fn validity_holds_for_assignment() {
        let d = d_x(&[0, 1]);
        let rg = RGCond::new(
            Expr::eq(Expr::var("x"), Expr::int(0)),
            Expr::IdRel,
            Expr::Univ,
            Expr::eq(Expr::var("x"), Expr::int(1)),
        );
        let v = check_validity(&assign1(), &rg, &d, 4, 100, 1 << 20).unwrap();
        assert!(v.holds(), "{}", v);
    }

    #[test]
    fn validity_catches_guarantee_violation() {
        let d = d_x(&[0, 1]);
        let rg = RGCond::new(
            Expr::eq(Expr::var("x"), Expr::int(0)),
            Expr::IdRel,
            Expr::IdRel,
            Expr::eq(Expr::var("x"), Expr::int(1)),
        );
        let v = check_validity(&assign1(), &rg, &d, 4, 100, 1 << 20).unwrap();
        match v {
            Verdict::Counterexample { comp, .. } => {
                assert!(matches!(comp.edges.last(), Some(CompEdge::Act(_))));
            }
            Verdict::Holds { .. } => panic!("expected a counterexample"),
        }
    }

    #[test]
    fn validity_catches_postcondition_violation() {
        let d = d_x(&[0, 1]);
        let rg = RGCond::new(
            Expr::eq(Expr::var("x"), Expr::int(0)),
            Expr::IdRel,
            Expr::Univ,
            Expr::eq(Expr::var("x"), Expr::int(0)),
        );
        let v = check_validity(&assign1(), &rg, &d, 4, 100, 1 << 20).unwrap();
        assert!(!v.holds());
    }

    fn inc_event(unit: &str) -> Event {
        Event::Basic {
            label: EventLabel {
                name: "inc".to_string(),
                params: vec![],
                unit: ExecUnitId::new(unit),
            },
            guard: Expr::btrue(),
            body: Program::assign("x", Expr::bin(BinOp::Add, Expr::var("x"), Expr::int(1))),
        }
    }

    fn one_unit_ps(unit: &str) -> ParallelEventSystem {
        ParallelEventSystem::new(
            [(
                ExecUnitId::new(unit),
                EventSystem::Set(vec![inc_event(unit)]),
            )]
            .into(),
        )
        .unwrap()
    }

    #[test]
    fn reachable_depth_zero_is_init() {
        let d = d_x(&[0, 1, 2]);
        let init = Expr::eq(Expr::var("x"), Expr::int(0));
        let r = reachable(&one_unit_ps("A"), &init, &d, 0, 100, 1 << 20).unwrap();
        assert_eq!(r, [sx(0)].into());
    }

    #[test]
    fn reachable_counts_event_steps() {
        // Each iteration is two steps (trigger + assignment), so depth 4
        // reaches x = 2 and never attempts x = 3.
        let d = d_x(&[0, 1, 2]);
        let init = Expr::eq(Expr::var("x"), Expr::int(0));
        let r = reachable(&one_unit_ps("A"), &init, &d, 4, 100, 1 << 20).unwrap();
        assert_eq!(r, [sx(0), sx(1), sx(2)].into());
    }

    #[test]
    fn reachable_domain_escape_is_an_error() {
        let d = d_x(&[0, 1, 2]);
        let init = Expr::eq(Expr::var("x"), Expr::int(0));
        assert!(matches!(
            reachable(&one_unit_ps("A"), &init, &d, 6, 100, 1 << 20),
            Err(crate::error::Error::DomainEscape { .. })
        ));
    }

    #[test]
    fn reachable_stays_on_init_when_all_guards_false() {
        let mut ps = one_unit_ps("A");
        if let EventSystem::Set(evts) = ps.systems.get_mut(&ExecUnitId::new("A")).unwrap() {
            if let Event::Basic { guard, .. } = &mut evts[0] {
                *guard = Expr::bfalse();
            }
        }
        let d = d_x(&[0, 1, 2]);
        let init = Expr::eq(Expr::var("x"), Expr::int(0));
        let r = reachable(&ps, &init, &d, 6, 100, 1 << 20).unwrap();
        assert_eq!(r, [sx(0)].into());
    }

    #[test]
    fn invariant_univ_always_holds() {
        let d = d_x(&[0, 1, 2]);
        let init = Expr::eq(Expr::var("x"), Expr::int(0));
        let v = check_invariant_direct(&one_unit_ps("A"), &init, &Expr::Univ, &d, 4, 100, 1 << 20)
            .unwrap();
        assert!(v.holds());
    }

    #[test]
    fn invariant_violation_comes_with_trace() {
        let d = d_x(&[0, 1, 2]);
        let init = Expr::eq(Expr::var("x"), Expr::int(0));
        let inv = Expr::bin(BinOp::Lt, Expr::var("x"), Expr::int(2));
        let v = check_invariant_direct(&one_unit_ps("A"), &init, &inv, &d, 4, 100, 1 << 20)
            .unwrap();
        match v {
            Verdict::Counterexample { comp, .. } => {
                assert_eq!(comp.last().state, sx(2));
                assert!(comp.replay(&EnvModel::Closed, &d, 100).unwrap());
            }
            Verdict::Holds { .. } => panic!("expected a counterexample"),
        }
    }

    #[test]
    fn simulation_ignores_specs() {
        let d = d_x(&[0, 1]);
        let ws = collect(assign1(), sx(0), 1, &EnvModel::Closed, &d);
        let acted = ws.iter().find(|w| w.edges.len() == 1).unwrap();
        assert!(simulation_eq(acted, acted));
        // same states/edges, different spec component
        let mut other = acted.clone();
        other.configs[0].spec = Spec::Prog(Program::seq(
            Program::Basic(vec![]),
            Program::assign("x", Expr::int(1)),
        ));
        assert!(simulation_eq(acted, &other));
        let singleton = ws.iter().find(|w| w.edges.is_empty()).unwrap();
        assert!(!simulation_eq(acted, singleton));
    }

    #[test]
    fn serialization_of_single_event_run() {
        let d = d_x(&[0, 1, 2]);
        let ev = inc_event("A");
        let unit = ExecUnitId::new("A");
        let esys = EventSystem::Set(vec![ev.clone()]);
        let ws = collect(
            Spec::Esys(esys, unit),
            sx(0),
            2,
            &EnvModel::Closed,
            &d,
        );
        let full = ws.iter().max_by_key(|w| w.len()).unwrap();
        assert_eq!(full.len(), 3); // trigger + body step
        let witness = serialization_witness(full, &[ev], 4, &d, 100).unwrap();
        let segs = witness.expect("witness must exist");
        assert_eq!(segs.len(), 1);
        assert!(simulation_eq(full, &segs[0]));
    }

    #[test]
    fn serialization_fails_on_tampered_states() {
        let d = d_x(&[0, 1, 2]);
        let ev = inc_event("A");
        let unit = ExecUnitId::new("A");
        let esys = EventSystem::Set(vec![ev.clone()]);
        let ws = collect(Spec::Esys(esys, unit), sx(0), 2, &EnvModel::Closed, &d);
        let mut full = ws.iter().max_by_key(|w| w.len()).unwrap().clone();
        let last = full.configs.len() - 1;
        full.configs[last].state = sx(2); // tamper: the body step produced 1
        assert_eq!(
            serialization_witness(&full, &[ev], 4, &d, 100).unwrap(),
            None
        );
    }

    fn two_unit_ps() -> ParallelEventSystem {
        ParallelEventSystem::new(
            [
                (
                    ExecUnitId::new("A"),
                    EventSystem::Set(vec![inc_event("A")]),
                ),
                (
                    ExecUnitId::new("B"),
                    EventSystem::Set(vec![Event::Basic {
                        label: EventLabel {
                            name: "reset".to_string(),
                            params: vec![],
                            unit: ExecUnitId::new("B"),
                        },
                        guard: Expr::bin(BinOp::Gt, Expr::var("x"), Expr::int(0)),
                        body: Program::assign("x", Expr::int(0)),
                    }]),
                ),
            ]
            .into(),
        )
        .unwrap()
    }

    #[test]
    fn conjoin_check_accepts_projection() {
        // Build a short parallel computation and project it by hand.
        let d = d_x(&[0, 1]);
        let ps = two_unit_ps();
        let ws = collect(Spec::Par(ps.clone()), sx(0), 2, &EnvModel::Closed, &d);
        let w = ws
            .iter()
            .filter(|w| w.edges.len() == 2)
            .find(|w| w.edges.iter().all(|e| matches!(e, CompEdge::Act(_))))
            .unwrap();
        let mut fam = BTreeMap::new();
        for unit in ps.systems.keys() {
            let configs = w
                .configs
                .iter()
                .map(|c| match &c.spec {
                    Spec::Par(p) => Config::new(
                        Spec::Esys(p.systems[unit].clone(), unit.clone()),
                        c.state.clone(),
                        c.ctx.clone(),
                    ),
                    _ => unreachable!(),
                })
                .collect();
            let edges = w
                .edges
                .iter()
                .map(|e| match e {
                    CompEdge::Act(ActLabel::EvtOcc(l)) if l.unit == *unit => e.clone(),
                    CompEdge::Act(ActLabel::Cmd(Some(u))) if *u == *unit => e.clone(),
                    _ => CompEdge::Env,
                })
                .collect();
            fam.insert(unit.clone(), Computation { configs, edges });
        }
        assert!(conjoin_check(w, &fam));
        // two components acting at the same index is rejected
        let mut bad = fam.clone();
        let first_act = w.edges[0].clone();
        for c in bad.values_mut() {
            c.edges[0] = first_act.clone();
        }
        assert!(!conjoin_check(w, &bad));
        // length mismatch is rejected
        let mut short = fam.clone();
        let k = short.keys().next().unwrap().clone();
        let c = short.get_mut(&k).unwrap();
        c.configs.pop();
        c.edges.pop();
        assert!(!conjoin_check(w, &short));
    }

    #[test]
    fn compositionality_single_unit_holds() {
        let d = d_x(&[0, 1]);
        let v = check_compositional(
            &one_unit_ps("A"),
            &sx(0),
            &EventContext::empty(),
            3,
            &d,
            100,
            1 << 20,
        )
        .unwrap();
        assert!(v.holds(), "{}", v);
    }

    #[test]
    fn compositionality_two_units_holds() {
        let d = d_x(&[0, 1]);
        let v = check_compositional(
            &two_unit_ps(),
            &sx(0),
            &EventContext::empty(),
            4,
            &d,
            100,
            1 << 20,
        )
        .unwrap();
        assert!(v.holds(), "{}", v);
    }

    #[test]
    fn context_space_is_the_event_product() {
        let ps = two_unit_ps();
        // each of 2 units: empty or its single event
        assert_eq!(context_space(&ps).len(), 4);
    }

    #[test]
    fn counterexamples_replay() {
        let d = d_x(&[0, 1]);
        let rg = RGCond::new(
            Expr::eq(Expr::var("x"), Expr::int(0)),
            Expr::IdRel,
            Expr::IdRel,
            Expr::Univ,
        );
        let v = check_validity(&assign1(), &rg, &d, 4, 100, 1 << 20).unwrap();
        match v {
            Verdict::Counterexample { comp, .. } => {
                assert!(comp
                    .replay(&EnvModel::Rely(Expr::IdRel), &d, 100)
                    .unwrap());
            }
            Verdict::Holds { .. } => panic!("expected a counterexample"),
        }
    }
}
