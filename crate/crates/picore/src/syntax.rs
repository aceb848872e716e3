use crate::domain::DomainDecl;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::value::Value;
use std::collections::BTreeMap;
use std::fmt;

/// Identifier of an execution unit (a core, a device, ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExecUnitId(pub String);

impl ExecUnitId {
    pub fn new(s: &str) -> ExecUnitId {
        ExecUnitId(s.to_string())
    }
}

impl fmt::Display for ExecUnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The body language of events. `Done` is the terminated program; it never
/// appears in user-written source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Program {
    /// Simultaneous assignments with pairwise-distinct targets. An empty
    /// list is a skip.
    Basic(Vec<(String, Expr)>),
    Seq(Box<Program>, Box<Program>),
    Cond(Expr, Box<Program>, Box<Program>),
    While(Expr, Box<Program>),
    Await(Expr, Box<Program>),
    Nondt(Expr),
    Done,
}

impl Program {
    pub fn seq(a: Program, b: Program) -> Program {
        Program::Seq(Box::new(a), Box::new(b))
    }

    pub fn assign(var: &str, e: Expr) -> Program {
        Program::Basic(vec![(var.to_string(), e)])
    }

    pub fn atom(body: Program) -> Program {
        Program::Await(Expr::btrue(), Box::new(body))
    }

    /// Instantiates event parameters inside every embedded expression.
    pub fn subst(&self, binding: &BTreeMap<String, Value>) -> Program {
        match self {
            Program::Basic(asgns) => Program::Basic(
                asgns
                    .iter()
                    .map(|(v, e)| (v.clone(), e.subst(binding)))
                    .collect(),
            ),
            Program::Seq(a, b) => Program::seq(a.subst(binding), b.subst(binding)),
            Program::Cond(c, t, e) => Program::Cond(
                c.subst(binding),
                Box::new(t.subst(binding)),
                Box::new(e.subst(binding)),
            ),
            Program::While(c, p) => Program::While(c.subst(binding), Box::new(p.subst(binding))),
            Program::Await(g, p) => Program::Await(g.subst(binding), Box::new(p.subst(binding))),
            Program::Nondt(r) => Program::Nondt(r.subst(binding)),
            Program::Done => Program::Done,
        }
    }
}

/// Event name, actual parameters, and execution unit: the `elabel [plist] @ k`
/// triple of the concrete syntax.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventLabel {
    pub name: String,
    pub params: Vec<Value>,
    pub unit: ExecUnitId,
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.params.is_empty() {
            write!(f, "[")?;
            for (i, p) in self.params.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", p)?;
            }
            write!(f, "]")?;
        }
        write!(f, "@{}", self.unit)
    }
}

/// A basic event is a guarded, labeled program; an anonymous event is the
/// body of a triggered event while it executes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Event {
    Basic {
        label: EventLabel,
        guard: Expr,
        body: Program,
    },
    Anon(Program),
}

impl Event {
    pub fn is_finished(&self) -> bool {
        matches!(self, Event::Anon(Program::Done))
    }

    pub fn label(&self) -> Option<&EventLabel> {
        match self {
            Event::Basic { label, .. } => Some(label),
            Event::Anon(_) => None,
        }
    }
}

/// Modular composition of events: a set triggers any enabled member over and
/// over; a sequence runs an initialization event first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventSystem {
    Set(Vec<Event>),
    Seq(Event, Box<EventSystem>),
}

/// Parallel composition: a finite map from execution units to event systems
/// sharing one state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParallelEventSystem {
    pub systems: BTreeMap<ExecUnitId, EventSystem>,
}

impl ParallelEventSystem {
    pub fn new(systems: BTreeMap<ExecUnitId, EventSystem>) -> Result<ParallelEventSystem> {
        if systems.is_empty() {
            return Err(Error::InconsistentConfig(
                "parallel event system needs at least one unit".to_string(),
            ));
        }
        Ok(ParallelEventSystem { systems })
    }

    pub fn units(&self) -> impl Iterator<Item = &ExecUnitId> {
        self.systems.keys()
    }
}

/// The event context: which basic event was last triggered on each unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct EventContext {
    pub entries: BTreeMap<ExecUnitId, Event>,
}

impl EventContext {
    pub fn empty() -> EventContext {
        EventContext::default()
    }

    pub fn set(&self, unit: &ExecUnitId, ev: Event) -> EventContext {
        let mut entries = self.entries.clone();
        entries.insert(unit.clone(), ev);
        EventContext { entries }
    }
}

/// A rely-guarantee quadruple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RGCond {
    pub pre: Expr,
    pub rely: Expr,
    pub guar: Expr,
    pub post: Expr,
}

impl RGCond {
    pub fn new(pre: Expr, rely: Expr, guar: Expr, post: Expr) -> RGCond {
        RGCond {
            pre,
            rely,
            guar,
            post,
        }
    }

    pub fn subst(&self, binding: &BTreeMap<String, Value>) -> RGCond {
        RGCond {
            pre: self.pre.subst(binding),
            rely: self.rely.subst(binding),
            guar: self.guar.subst(binding),
            post: self.post.subst(binding),
        }
    }
}

/// One `RG` declaration: a rely-guarantee quadruple for an event name, with
/// formal parameters to instantiate per triggered event, plus the optional
/// sequencing midpoints used when deriving the event body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgSpecDecl {
    pub name: String,
    /// Restricts the declaration to one unit when given.
    pub unit: Option<ExecUnitId>,
    pub formals: Vec<String>,
    pub rg: RGCond,
    pub mids: Vec<Expr>,
}

/// A parsed spec file: domains, initial-state predicate, the parallel event
/// system, the map from event labels to rely-guarantee quadruples, and named
/// invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecFile {
    pub domains: DomainDecl,
    pub init: Expr,
    pub system: ParallelEventSystem,
    pub rgspecs: Vec<RgSpecDecl>,
    pub invariants: Vec<(String, Expr)>,
}

impl SpecFile {
    /// All basic events occurring anywhere in the system.
    pub fn events(&self) -> Vec<&Event> {
        fn collect<'a>(s: &'a EventSystem, out: &mut Vec<&'a Event>) {
            match s {
                EventSystem::Set(evts) => out.extend(evts.iter()),
                EventSystem::Seq(e, rest) => {
                    out.push(e);
                    collect(rest, out);
                }
            }
        }
        let mut out = Vec::new();
        for esys in self.system.systems.values() {
            collect(esys, &mut out);
        }
        out
    }

    /// Looks up the rely-guarantee condition for a concrete event label,
    /// instantiating the declaration's formal parameters with the label's
    /// actual values. This is the Gamma function of the invariant pipeline.
    pub fn gamma(&self, label: &EventLabel) -> Result<(RGCond, Vec<Expr>)> {
        let decl = self
            .rgspecs
            .iter()
            .filter(|d| d.name == label.name)
            .find(|d| match &d.unit {
                Some(u) => *u == label.unit,
                None => true,
            })
            .ok_or_else(|| Error::MissingGamma(label.to_string()))?;
        if decl.formals.len() != label.params.len() {
            return Err(Error::MissingGamma(format!(
                "{} (expected {} parameters, label has {})",
                label,
                decl.formals.len(),
                label.params.len()
            )));
        }
        let binding: BTreeMap<String, Value> = decl
            .formals
            .iter()
            .cloned()
            .zip(label.params.iter().cloned())
            .collect();
        let rg = decl.rg.subst(&binding);
        let mids = decl.mids.iter().map(|m| m.subst(&binding)).collect();
        Ok((rg, mids))
    }

    pub fn invariant(&self, name: &str) -> Option<&Expr> {
        self.invariants
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e)
    }
}
