//! Small-step operational semantics, one function per syntax level: programs,
//! events, event systems, and the parallel composition. Each function returns
//! every successor of a configuration, so nondeterminism is explicit.

use crate::domain::{rel_successors, DomainDecl};
use crate::error::{Error, Result};
use crate::expr::{eval, eval_bool};
use crate::state::State;
use crate::syntax::{Event, EventContext, EventLabel, EventSystem, ExecUnitId, ParallelEventSystem, Program};
use std::collections::BTreeSet;

/// Default ceiling on the number of program configurations explored inside
/// one atomic section.
pub const DEFAULT_ATOM_BOUND: usize = 10_000;

/// What an action transition was: an ordinary command step (labeled with its
/// unit above the program level) or the occurrence of a basic event.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActLabel {
    Cmd(Option<ExecUnitId>),
    EvtOcc(EventLabel),
}

impl std::fmt::Display for ActLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActLabel::Cmd(None) => write!(f, "c"),
            ActLabel::Cmd(Some(u)) => write!(f, "c@{}", u),
            ActLabel::EvtOcc(l) => write!(f, "occ({})", l),
        }
    }
}

/// All action successors of `(p, s)`. A `Done` program has none, and a
/// blocked `Await` has none either.
pub fn step_program(
    p: &Program,
    s: &State,
    d: &DomainDecl,
    atom_bound: usize,
) -> Result<Vec<(Program, State)>> {
    match p {
        Program::Done => Ok(vec![]),
        Program::Basic(asgns) => {
            let mut updates = Vec::with_capacity(asgns.len());
            for (v, e) in asgns {
                updates.push((v.clone(), eval(e, s)?));
            }
            Ok(vec![(Program::Done, s.update_all(updates))])
        }
        Program::Seq(p1, p2) => {
            let mut out = Vec::new();
            for (p1n, sn) in step_program(p1, s, d, atom_bound)? {
                if p1n == Program::Done {
                    out.push(((**p2).clone(), sn));
                } else {
                    out.push((Program::Seq(Box::new(p1n), p2.clone()), sn));
                }
            }
            Ok(out)
        }
        Program::Cond(b, p1, p2) => {
            if eval_bool(b, s)? {
                Ok(vec![((**p1).clone(), s.clone())])
            } else {
                Ok(vec![((**p2).clone(), s.clone())])
            }
        }
        Program::While(b, body) => {
            if eval_bool(b, s)? {
                Ok(vec![(
                    Program::seq((**body).clone(), p.clone()),
                    s.clone(),
                )])
            } else {
                Ok(vec![(Program::Done, s.clone())])
            }
        }
        Program::Await(b, body) => {
            if !eval_bool(b, s)? {
                return Ok(vec![]);
            }
            Ok(atomic_runs(body, s, d, atom_bound)?
                .into_iter()
                .map(|sn| (Program::Done, sn))
                .collect())
        }
        Program::Nondt(r) => Ok(rel_successors(r, s, d)?
            .into_iter()
            .map(|sn| (Program::Done, sn))
            .collect()),
    }
}

/// Final states of every terminating run of `p` from `s`, for the body of an
/// atomic section. Fails with `AtomBoundExceeded` once more than `atom_bound`
/// distinct configurations have been explored, so diverging bodies are
/// reported rather than looped on.
pub fn atomic_runs(
    p: &Program,
    s: &State,
    d: &DomainDecl,
    atom_bound: usize,
) -> Result<Vec<State>> {
    let mut visited: BTreeSet<(Program, State)> = BTreeSet::new();
    let mut work = vec![(p.clone(), s.clone())];
    let mut finals = BTreeSet::new();
    while let Some((pc, sc)) = work.pop() {
        if !visited.insert((pc.clone(), sc.clone())) {
            continue;
        }
        if visited.len() > atom_bound {
            return Err(Error::AtomBoundExceeded(atom_bound));
        }
        if pc == Program::Done {
            finals.insert(sc);
            continue;
        }
        for next in step_program(&pc, &sc, d, atom_bound)? {
            work.push(next);
        }
    }
    Ok(finals.into_iter().collect())
}

/// All action successors of an event configuration on `unit`: triggering a
/// basic event whose guard holds (which records it in the context), or a
/// command step of an already-running body.
pub fn step_event(
    ev: &Event,
    s: &State,
    x: &EventContext,
    unit: &ExecUnitId,
    d: &DomainDecl,
    atom_bound: usize,
) -> Result<Vec<(Event, State, EventContext, ActLabel)>> {
    match ev {
        Event::Basic { label, guard, body } => {
            if !eval_bool(guard, s)? {
                return Ok(vec![]);
            }
            Ok(vec![(
                Event::Anon(body.clone()),
                s.clone(),
                x.set(unit, ev.clone()),
                ActLabel::EvtOcc(label.clone()),
            )])
        }
        Event::Anon(p) => Ok(step_program(p, s, d, atom_bound)?
            .into_iter()
            .map(|(pn, sn)| {
                (
                    Event::Anon(pn),
                    sn,
                    x.clone(),
                    ActLabel::Cmd(Some(unit.clone())),
                )
            })
            .collect()),
    }
}

/// All action successors of an event-system configuration on `unit`. A set
/// steps by triggering one of its events, keeping the whole set as the
/// continuation; a sequence steps its first event, dropping it once its body
/// finishes.
pub fn step_esys(
    es: &EventSystem,
    s: &State,
    x: &EventContext,
    unit: &ExecUnitId,
    d: &DomainDecl,
    atom_bound: usize,
) -> Result<Vec<(EventSystem, State, EventContext, ActLabel)>> {
    match es {
        EventSystem::Set(events) => {
            let mut out = Vec::new();
            for ev in events {
                for (evn, sn, xn, lbl) in step_event(ev, s, x, unit, d, atom_bound)? {
                    out.push((
                        EventSystem::Seq(evn, Box::new(es.clone())),
                        sn,
                        xn,
                        lbl,
                    ));
                }
            }
            Ok(out)
        }
        EventSystem::Seq(ev, rest) => {
            let mut out = Vec::new();
            for (evn, sn, xn, lbl) in step_event(ev, s, x, unit, d, atom_bound)? {
                if evn.is_finished() {
                    out.push(((**rest).clone(), sn, xn, lbl));
                } else {
                    out.push((EventSystem::Seq(evn, rest.clone()), sn, xn, lbl));
                }
            }
            Ok(out)
        }
    }
}

/// All action successors of the parallel composition: any one unit steps, the
/// rest stay put, and all of them share the state.
pub fn step_par(
    pes: &ParallelEventSystem,
    s: &State,
    x: &EventContext,
    d: &DomainDecl,
    atom_bound: usize,
) -> Result<Vec<(ParallelEventSystem, State, EventContext, ActLabel)>> {
    let mut out = Vec::new();
    for (unit, esys) in &pes.systems {
        for (esn, sn, xn, lbl) in step_esys(esys, s, x, unit, d, atom_bound)? {
            let mut systems = pes.systems.clone();
            systems.insert(unit.clone(), esn);
            out.push((ParallelEventSystem { systems }, sn, xn, lbl));
        }
    }
    Ok(out)
}
