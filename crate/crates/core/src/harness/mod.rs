//! Scenario and trace files, run orchestration, and the shipped corpus.

pub mod corpus;
pub mod report;
pub mod scenario;
pub mod trace;

pub use report::{Counterexample, Verdict, VerificationReport};
pub use scenario::{audit_hypotheses, load_scenario, parse_scenario, Construction, Scenario, ScenarioBody, ScenarioRecord};
pub use trace::{replay, run, verify, ConstructionTrace, Replay, TraceBody, TraceHeader, TOOL_VERSION};
pub use corpus::{build_corpus, read_manifest, Corpus, Expect, ManifestEntry};
