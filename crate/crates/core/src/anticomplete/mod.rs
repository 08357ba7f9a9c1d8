//! c.e. sets `A ≥wtt B` with infinitely many holes such that no separator
//! of `A` and `B` computes the auxiliary set `D`.
//!
//! Requirements are interleaved by priority `N_0 < R_0 < N_1 < R_1 < …`.
//! At stage `s` the first `s` strategies run in priority order; a strategy
//! *acts* when it changes `A`, `B`, `D` or its own restraint, and every
//! action initializes all lower-priority strategies. Numbers enumerated
//! while processing stage `s` are stamped `s + 1`.

mod generate;
mod search;
mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::enumcore::{FreshCounter, Stage, StageSet};
use crate::error::{Error, Result};
use crate::functionals::OracleProgram;

pub use generate::random_adversary;
pub use search::SigmaQuery;
pub use verify::AcTrace;
pub use verify::{verify_anticomplete_trace, VERDICTS};

/// A requirement, ordered by priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Actor {
    N(usize),
    R(usize),
}

impl Actor {
    pub fn priority(self) -> usize {
        match self {
            Actor::N(k) => 2 * k,
            Actor::R(e) => 2 * e + 1,
        }
    }

    pub fn from_priority(p: usize) -> Self {
        if p % 2 == 0 {
            Actor::N(p / 2)
        } else {
            Actor::R(p / 2)
        }
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::N(k) => write!(f, "N{k}"),
            Actor::R(e) => write!(f, "R{e}"),
        }
    }
}

impl FromStr for Actor {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (head, tail) = s.split_at(s.len().min(1));
        let idx: usize = tail.parse().map_err(|_| format!("bad actor {s:?}"))?;
        match head {
            "N" => Ok(Actor::N(idx)),
            "R" => Ok(Actor::R(idx)),
            _ => Err(format!("bad actor {s:?}")),
        }
    }
}

impl From<Actor> for String {
    fn from(a: Actor) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for Actor {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NStrategyState {
    pub k: usize,
    pub satisfied_at: Option<Stage>,
    pub restraint: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Claiming,
    Searching,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RStrategyState {
    pub e: usize,
    pub restraint: usize,
    pub claimed_n: Option<usize>,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Strategy {
    N(NStrategyState),
    R(RStrategyState),
}

/// One trace record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AcEvent {
    Initialized {
        stage: Stage,
        actor: Actor,
        restraint: usize,
    },
    Claimed {
        stage: Stage,
        actor: Actor,
        n: usize,
    },
    NActed {
        stage: Stage,
        actor: Actor,
        restraint: usize,
    },
    RActed {
        stage: Stage,
        actor: Actor,
        n: usize,
        sigma: String,
        m: Option<usize>,
        into_a: Vec<usize>,
        into_b: Vec<usize>,
        restraint: usize,
    },
}

impl AcEvent {
    pub fn stage(&self) -> Stage {
        match *self {
            AcEvent::Initialized { stage, .. }
            | AcEvent::Claimed { stage, .. }
            | AcEvent::NActed { stage, .. }
            | AcEvent::RActed { stage, .. } => stage,
        }
    }

    pub fn actor(&self) -> Actor {
        match *self {
            AcEvent::Initialized { actor, .. }
            | AcEvent::Claimed { actor, .. }
            | AcEvent::NActed { actor, .. }
            | AcEvent::RActed { actor, .. } => actor,
        }
    }
}

/// What an `R_e` strategy did on one loop iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct REnumeration {
    pub sigma: Vec<bool>,
    pub m: Option<usize>,
    pub into_a: Vec<usize>,
    pub into_b: Vec<usize>,
    pub into_d: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RStepOutcome {
    pub claimed: Option<usize>,
    pub action: Option<REnumeration>,
}

/// Waits for `s > k`, then restrains `(A ∪ B) ↾ (s+1)`. Returns whether it acted.
pub fn n_strategy_step(st: &mut NStrategyState, s: Stage, a: &StageSet, b: &StageSet) -> Result<bool> {
    if st.satisfied_at.is_some() || s <= st.k {
        return Ok(false);
    }
    if a.contains_at(s, s) || b.contains_at(s, s) {
        return Err(Error::HardFault {
            claim: "stage numbers are unused".into(),
            stage: s,
            detail: format!("{s} already in A ∪ B when N{} acts", st.k),
        });
    }
    st.satisfied_at = Some(s);
    st.restraint = s + 1;
    Ok(true)
}

/// One iteration of the `R_e` loop at stage `s`: claim a fresh `n` if none
/// is held, search for the least `σ ∈ 2^s` with `Φ_e^σ ↾ (n+1)[s] = D_s ↾ (n+1)`
/// consistent with `A_s`, `B_s`, and on success copy `σ` above the least
/// admissible `m` into `A`/`B` and put `n` into `D`.
pub fn r_strategy_step(
    st: &mut RStrategyState,
    s: Stage,
    a: &StageSet,
    b: &StageSet,
    d: &StageSet,
    program: &OracleProgram,
    fresh: &mut FreshCounter,
) -> Result<RStepOutcome> {
    let mut out = RStepOutcome::default();
    let n = match st.claimed_n {
        Some(n) => n,
        None => {
            let n = fresh.fresh();
            st.claimed_n = Some(n);
            st.phase = Phase::Searching;
            out.claimed = Some(n);
            n
        }
    };
    let query = SigmaQuery {
        program,
        stage: s,
        n,
        a,
        b,
        d,
    };
    let Some(sigma) = query.solve()? else {
        return Ok(out);
    };
    let m = (st.restraint..s).find(|&x| sigma[x] && !a.contains_at(x, s));
    let (mut into_a, mut into_b) = (Vec::new(), Vec::new());
    if let Some(m) = m {
        for (x, &bit) in sigma.iter().enumerate().skip(m) {
            if bit && !a.contains_at(x, s) {
                into_a.push(x);
            } else if !bit && !b.contains_at(x, s) {
                into_b.push(x);
            }
        }
    }
    st.claimed_n = None;
    st.phase = Phase::Claiming;
    out.action = Some(REnumeration {
        sigma,
        m,
        into_a,
        into_b,
        into_d: n,
    });
    Ok(out)
}

/// Full construction state between stages.
#[derive(Debug, Clone)]
pub struct AnticompleteState {
    pub a: StageSet,
    pub b: StageSet,
    pub d: StageSet,
    strategies: Vec<Strategy>,
    last_action: Vec<Option<Stage>>,
    pub stage: Stage,
    fresh: FreshCounter,
    pub events: Vec<AcEvent>,
}

impl Default for AnticompleteState {
    fn default() -> Self {
        Self::new()
    }
}

impl AnticompleteState {
    pub fn new() -> Self {
        AnticompleteState {
            a: StageSet::new(0),
            b: StageSet::new(0),
            d: StageSet::new(0),
            strategies: Vec::new(),
            last_action: Vec::new(),
            stage: 0,
            fresh: FreshCounter::new(),
            events: Vec::new(),
        }
    }

    pub fn n_state(&self, k: usize) -> Option<&NStrategyState> {
        match self.strategies.get(2 * k) {
            Some(Strategy::N(st)) => Some(st),
            _ => None,
        }
    }

    pub fn r_state(&self, e: usize) -> Option<&RStrategyState> {
        match self.strategies.get(2 * e + 1) {
            Some(Strategy::R(st)) => Some(st),
            _ => None,
        }
    }

    /// Restraint a strategy of priority `p` receives when it first appears:
    /// it counts as initialized by every earlier action above it.
    fn inherited_restraint(&self, p: usize) -> usize {
        self.last_action[..p]
            .iter()
            .flatten()
            .map(|&s| s + 1)
            .max()
            .unwrap_or(0)
    }

    fn ensure_strategies(&mut self, count: usize) {
        while self.strategies.len() < count {
            let p = self.strategies.len();
            let restraint = self.inherited_restraint(p);
            self.strategies.push(match Actor::from_priority(p) {
                Actor::N(k) => Strategy::N(NStrategyState {
                    k,
                    satisfied_at: None,
                    restraint: 0,
                }),
                Actor::R(e) => Strategy::R(RStrategyState {
                    e,
                    restraint,
                    claimed_n: None,
                    phase: Phase::Claiming,
                }),
            });
            self.last_action.push(None);
        }
    }

    /// Initialization takes effect at stage `s + 1`, so the new restraint
    /// also covers everything an `N` strategy protected at stage `s`.
    fn initialize_below(&mut self, p: usize, s: Stage) {
        self.last_action[p] = Some(s);
        for q in p + 1..self.strategies.len() {
            let restraint = match &mut self.strategies[q] {
                Strategy::N(st) => {
                    st.satisfied_at = None;
                    st.restraint = 0;
                    0
                }
                Strategy::R(st) => {
                    st.restraint = s + 1;
                    st.claimed_n = None;
                    st.phase = Phase::Claiming;
                    s + 1
                }
            };
            self.events.push(AcEvent::Initialized {
                stage: s,
                actor: Actor::from_priority(q),
                restraint,
            });
        }
    }

    fn enumerate(&mut self, x: usize, into_a: bool, s: Stage) -> Result<()> {
        let (target, other) = if into_a {
            (&mut self.a, &self.b)
        } else {
            (&mut self.b, &self.a)
        };
        if other.contains(x) {
            return Err(Error::HardFault {
                claim: "A and B are disjoint".into(),
                stage: s,
                detail: format!("{x} would enter both A and B"),
            });
        }
        target.enumerate(x, s + 1)?;
        self.fresh.observe(x);
        Ok(())
    }

    /// Processes stage `self.stage`, leaving the state at the next stage.
    pub fn run_stage(&mut self, programs: &[OracleProgram]) -> Result<()> {
        let s = self.stage;
        for set in [&mut self.a, &mut self.b, &mut self.d] {
            set.extend_horizon(s + 1);
        }
        self.ensure_strategies(s);
        let empty = OracleProgram::empty();
        for p in 0..s {
            let acted = match &mut self.strategies[p] {
                Strategy::N(st) => {
                    if n_strategy_step(st, s, &self.a, &self.b)? {
                        self.events.push(AcEvent::NActed {
                            stage: s,
                            actor: Actor::N(st.k),
                            restraint: st.restraint,
                        });
                        true
                    } else {
                        false
                    }
                }
                Strategy::R(st) => {
                    let program = programs.get(st.e).unwrap_or(&empty);
                    let restraint = st.restraint;
                    let actor = Actor::R(st.e);
                    let out = r_strategy_step(st, s, &self.a, &self.b, &self.d, program, &mut self.fresh)?;
                    if let Some(n) = out.claimed {
                        self.events.push(AcEvent::Claimed { stage: s, actor, n });
                    }
                    match out.action {
                        Some(act) => {
                            for &x in &act.into_a {
                                self.enumerate(x, true, s)?;
                            }
                            for &x in &act.into_b {
                                self.enumerate(x, false, s)?;
                            }
                            self.d.enumerate(act.into_d, s + 1)?;
                            self.events.push(AcEvent::RActed {
                                stage: s,
                                actor,
                                n: act.into_d,
                                sigma: act.sigma.iter().map(|&b| if b { '1' } else { '0' }).collect(),
                                m: act.m,
                                into_a: act.into_a,
                                into_b: act.into_b,
                                restraint,
                            });
                            true
                        }
                        None => false,
                    }
                }
            };
            if acted {
                self.initialize_below(p, s);
            }
        }
        self.stage += 1;
        Ok(())
    }
}

/// Runs stages `0 .. horizon`, ending in the stage-`horizon` state.
pub fn run_anticomplete(programs: &[OracleProgram], horizon: Stage) -> Result<AnticompleteState> {
    let mut state = AnticompleteState::new();
    while state.stage < horizon {
        state.run_stage(programs)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::Rule;

    fn empty_sets() -> (StageSet, StageSet, StageSet) {
        (StageSet::new(100), StageSet::new(100), StageSet::new(100))
    }

    #[test]
    fn stage_zero_runs_nothing() {
        let mut st = AnticompleteState::new();
        st.run_stage(&[]).unwrap();
        assert_eq!(st.stage, 1);
        assert!(st.events.is_empty());
        assert!(st.a.is_empty() && st.b.is_empty() && st.d.is_empty());
    }

    #[test]
    fn n_strategy_examples() {
        let (a, b, _) = empty_sets();
        let mut st = NStrategyState {
            k: 5,
            satisfied_at: None,
            restraint: 0,
        };
        assert!(!n_strategy_step(&mut st, 3, &a, &b).unwrap());
        assert!(n_strategy_step(&mut st, 6, &a, &b).unwrap());
        assert_eq!(st.restraint, 7);
        assert!(!n_strategy_step(&mut st, 7, &a, &b).unwrap());
        // Forced initialization at stage 10, then the next opportunity.
        st.satisfied_at = None;
        st.restraint = 0;
        assert!(n_strategy_step(&mut st, 11, &a, &b).unwrap());
        assert_eq!(st.restraint, 12);
    }

    fn r_state(restraint: usize) -> RStrategyState {
        RStrategyState {
            e: 0,
            restraint,
            claimed_n: None,
            phase: Phase::Claiming,
        }
    }

    #[test]
    fn r_step_without_sigma_keeps_searching() {
        let (a, b, d) = empty_sets();
        let mut st = r_state(0);
        let mut fresh = FreshCounter::new();
        let out = r_strategy_step(&mut st, 5, &a, &b, &d, &OracleProgram::empty(), &mut fresh).unwrap();
        assert_eq!(out.claimed, Some(0));
        assert!(out.action.is_none());
        assert_eq!(st.phase, Phase::Searching);
        assert_eq!(st.claimed_n, Some(0));
    }

    #[test]
    fn r_step_sigma_without_m_still_enumerates_n() {
        let (a, b, d) = empty_sets();
        let program = OracleProgram::new(OracleProgram::constant_family(0..10, false, 0)).unwrap();
        let mut st = r_state(0);
        let mut fresh = FreshCounter::new();
        fresh.observe(6);
        let out = r_strategy_step(&mut st, 4, &a, &b, &d, &program, &mut fresh).unwrap();
        let act = out.action.unwrap();
        assert_eq!(act.m, None);
        assert!(act.into_a.is_empty() && act.into_b.is_empty());
        assert_eq!(act.into_d, 7);
        assert_eq!(st.phase, Phase::Claiming);
    }

    #[test]
    fn r_step_copies_sigma_above_m() {
        // Φ(0) reads σ(0), Φ(1) = 0, Φ(2) reads σ(2); D = {0, 2} forces σ = 101.
        let rules = vec![
            Rule::new(vec![(0, true)], 0, true, 1),
            Rule::new(vec![(0, false)], 0, false, 1),
            Rule::new(vec![], 1, false, 0),
            Rule::new(vec![(2, true)], 2, true, 3),
            Rule::new(vec![(2, false)], 2, false, 3),
        ];
        let program = OracleProgram::new(rules).unwrap();
        let (a, b, mut d) = empty_sets();
        d.enumerate(0, 0).unwrap();
        d.enumerate(2, 0).unwrap();
        let mut st = RStrategyState {
            e: 0,
            restraint: 1,
            claimed_n: Some(2),
            phase: Phase::Searching,
        };
        let mut fresh = FreshCounter::new();
        let out = r_strategy_step(&mut st, 3, &a, &b, &d, &program, &mut fresh).unwrap();
        let act = out.action.unwrap();
        assert_eq!(act.sigma, vec![true, false, true]);
        // m = 2 is the least position ≥ r = 1 with σ(m) = 1 outside A.
        assert_eq!(act.m, Some(2));
        assert_eq!(act.into_a, vec![2]);
        assert!(act.into_b.is_empty());
        assert_eq!(act.into_d, 2);
        // With restraint 0 the least m is 0 and σ(1) = 0 sends 1 to B.
        let mut st0 = RStrategyState {
            restraint: 0,
            ..st.clone()
        };
        st0.claimed_n = Some(2);
        let act0 = r_strategy_step(&mut st0, 3, &a, &b, &d, &program, &mut fresh)
            .unwrap()
            .action
            .unwrap();
        assert_eq!(act0.m, Some(0));
        assert_eq!(act0.into_a, vec![0, 2]);
        assert_eq!(act0.into_b, vec![1]);
    }

    #[test]
    fn empty_adversary_satisfies_every_n() {
        let st = run_anticomplete(&[], 100).unwrap();
        assert!(st.d.is_empty() && st.a.is_empty() && st.b.is_empty());
        // N_k has priority 2k and first runs at stage 2k + 1.
        for k in 0..50 {
            assert_eq!(st.n_state(k).unwrap().satisfied_at, Some(2 * k + 1), "N{k}");
        }
    }

    #[test]
    fn always_zero_adversary_enumerates_once() {
        let program = OracleProgram::new(OracleProgram::constant_family(0..400, false, 0)).unwrap();
        let st = run_anticomplete(&[program], 200).unwrap();
        let r0: Vec<_> = st
            .events
            .iter()
            .filter(|e| matches!(e, AcEvent::RActed { actor: Actor::R(0), .. }))
            .collect();
        assert!(!r0.is_empty());
        assert!(!st.d.is_empty());
    }

    #[test]
    fn actor_round_trip() {
        for a in [Actor::N(0), Actor::R(12)] {
            assert_eq!(a.to_string().parse::<Actor>().unwrap(), a);
            assert_eq!(Actor::from_priority(a.priority()), a);
        }
        assert!("X3".parse::<Actor>().is_err());
    }
}
