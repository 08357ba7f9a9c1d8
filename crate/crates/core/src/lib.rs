//! Deterministic simulation of four priority constructions on separating
//! classes `S(A, B)` of disjoint c.e. sets, with stage-level verifiers for
//! every invariant their correctness arguments rely on.
//!
//! The crate is organised bottom-up:
//!
//! * [`enumcore`]: stage-indexed sets, separator strings, the column pairing.
//! * [`functionals`]: rule-table stand-ins for Turing functionals and wtt operators.
//! * [`anticomplete`]: sets `A ≥wtt B` none of whose separators compute `D`.
//! * [`upclosure`]: separators of every degree above `A` when `A ≡wtt B`.
//! * [`nosupermax`]: the three-attempt construction of a separator of c.e. degree.
//! * [`twodegrees`]: the `{c, 0'}` separating spectrum construction.
//! * [`harness`]: scenario files, traces, reports, and the shipped corpus.

pub mod anticomplete;
pub mod enumcore;
mod error;
pub mod functionals;
pub mod harness;
pub mod nosupermax;
pub mod twodegrees;
pub mod upclosure;

pub use enumcore::{
    is_separator, pair, unpair, FreshCounter, PairingScheme, SeparatorSnapshot, Stage, StageSet,
};
pub use error::{Error, Result};
pub use functionals::{Evaluation, Family, FamilyKind, OracleProgram, OracleView, Rule, UseBound, UseBoundedOperator};
pub use harness::{
    load_scenario, parse_scenario, replay, run, verify, Construction, ConstructionTrace, Scenario,
    VerificationReport,
};
