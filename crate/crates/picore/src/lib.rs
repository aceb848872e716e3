//! An executable toolkit for an event-based rely-guarantee language:
//! parse specs of reactive systems, run their small-step semantics, decide
//! rely-guarantee validity and invariants over finite domains by explicit
//! exploration, and check rely-guarantee proof derivations.

pub mod casestudies;
pub mod domain;
pub mod error;
pub mod explorer;
pub mod expr;
pub mod parser;
pub mod prover;
pub mod semantics;
pub mod state;
pub mod syntax;
pub mod value;

pub use domain::{enumerate_states, rel_successors, DomainDecl, DEFAULT_CAP};
pub use error::{Error, Result};
pub use explorer::{
    check_compositional, check_invariant_direct, check_validity, computations, conjoin_check,
    in_assumption, in_commitment, reachable, serialization_witness, simulation_eq, CompEdge,
    Computation, Config, EnvModel, Spec, Verdict,
};
pub use expr::{eval, eval_bool, eval_rel, BinOp, Expr, UnOp};
pub use prover::{
    annotate_esys, annotate_event, annotate_par, annotate_program, check_derivation,
    check_derivation_capped, check_invariant_via_theorem, check_invariant_via_theorem_capped,
    check_reflexive, check_stable, subset_rel, subset_states, AnnKind, AnnotatedNode, Premise,
    ProofReport, Witness,
};
pub use parser::{parse_expr_str, parse_program_str, parse_spec, pretty_spec, SourceSpan};
pub use state::State;
pub use syntax::{
    Event, EventContext, EventLabel, EventSystem, ExecUnitId, ParallelEventSystem, Program, RGCond,
    RgSpecDecl, SpecFile,
};
pub use value::Value;
