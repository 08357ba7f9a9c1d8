//! Disjoint c.e. `A`, `B` whose separators of c.e. degree have degree
//! `deg(C)` or `0'`.
//!
//! `P_n` codes `C` into column `n` of `B`: when `n` enters `C` it puts the
//! least unblocked `⟨n, i⟩` outside `A` into `B`. `R_e` keeps, for each `m`,
//! an axiom `m ∈ V_e^{W_e↾γ}` with a witness `x` on which `Φ_e^{W_e↾γ}`
//! says 0; while the axiom survives, `x` is blocked from `B`, and if `m`
//! enters `K` the witness goes into `A`.
//!
//! Stage `s` runs invalidations, then `R_0 … R_s`, then `P_n` for each `n`
//! entering `C` at `s`. Everything enumerated at stage `s` is stamped `s`.

mod generate;
mod verify;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::enumcore::{pair, unpair, PairingScheme, Stage, StageSet};
use crate::error::{Error, Result};
use crate::functionals::{Evaluation, OracleProgram, SetOracle};

pub use generate::{random_scenario, TdParams};
pub use verify::{verify_twodegrees_trace, TdTrace, VERDICTS};

/// Scripted inputs. `column_guard` is the first search condition
/// (`x` above every `⟨n, i⟩`, `n ≤ max(e, m)`, `i ≤ n²`); switching it off
/// exists only to build faulty runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoDegreesInput {
    pub horizon: Stage,
    pub c: StageSet,
    pub k: StageSet,
    pub w: Vec<StageSet>,
    pub phi: Vec<OracleProgram>,
    pub column_guard: bool,
}

impl TwoDegreesInput {
    fn w_e(&self, e: usize) -> Option<&StageSet> {
        self.w.get(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomStatus {
    Live,
    Invalidated,
    PromotedToA,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VeAxiom {
    pub e: usize,
    pub m: usize,
    pub gamma: usize,
    pub prefix: String,
    pub x: usize,
    pub created_at: Stage,
    pub status: AxiomStatus,
    /// Stage of invalidation or promotion.
    pub ended_at: Option<Stage>,
}

impl VeAxiom {
    /// Whether the axiom blocks its witness at stage `t`. An axiom ended at
    /// `t` no longer blocks there: invalidation happens first thing in a
    /// stage, and a promoted witness is in `A` from that stage on.
    pub fn blocks_at(&self, t: Stage) -> bool {
        self.created_at <= t && self.ended_at.map_or(true, |end| t < end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SkipReason {
    InA,
    Blocked { e: usize, m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub i: usize,
    pub code: usize,
    #[serde(flatten)]
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TdEvent {
    AxiomCreated {
        stage: Stage,
        e: usize,
        m: usize,
        x: usize,
        gamma: usize,
        prefix: String,
    },
    AxiomInvalidated {
        stage: Stage,
        e: usize,
        m: usize,
        x: usize,
    },
    Promoted {
        stage: Stage,
        e: usize,
        m: usize,
        x: usize,
    },
    PFired {
        stage: Stage,
        n: usize,
        i: usize,
        code: usize,
        skipped: Vec<Skip>,
    },
}

impl TdEvent {
    pub fn stage(&self) -> Stage {
        match *self {
            TdEvent::AxiomCreated { stage, .. }
            | TdEvent::AxiomInvalidated { stage, .. }
            | TdEvent::Promoted { stage, .. }
            | TdEvent::PFired { stage, .. } => stage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PStrategyState {
    pub n: usize,
    pub fired: Option<(usize, Stage)>,
}

/// `W_e↾γ` at stage `s` as a 0/1 string.
pub fn w_prefix(w: Option<&StageSet>, gamma: usize, s: Stage) -> String {
    (0..gamma)
        .map(|p| if w.is_some_and(|w| w.contains_at(p, s)) { '1' } else { '0' })
        .collect()
}

/// Largest `⟨n, i⟩` with `n ≤ max_n`, `i ≤ n²`, under the shared pairing.
pub fn column_ceiling(max_n: usize) -> usize {
    (0..=max_n)
        .flat_map(|n| (0..=n * n).map(move |i| pair(n, i)))
        .max()
        .unwrap_or(0)
}

/// Least `x ∈ [lo, top]` with `x ∉ B_s`, `Φ(y)↓` for all `y ≤ x` and
/// `Φ(x) = 0`, together with `γ`, the largest use among `y ≤ x`.
pub fn least_witness(
    mut eval: impl FnMut(usize) -> Evaluation,
    lo: usize,
    top: usize,
    b: &StageSet,
    s: Stage,
) -> Option<(usize, usize)> {
    let mut gamma = 0;
    for x in 0..=top {
        let Evaluation::Halted { output, use_ } = eval(x) else {
            return None;
        };
        gamma = gamma.max(use_);
        if x >= lo && !output && !b.contains_at(x, s) {
            return Some((x, gamma));
        }
    }
    None
}

/// Number of `⟨n, i⟩`, `i ≤ n²`, that are in `A_s` or blocked at `s`.
pub fn block_census(a: &StageSet, axioms: &[VeAxiom], n: usize, s: Stage) -> usize {
    (0..=n * n)
        .filter(|&i| {
            let code = pair(n, i);
            a.contains_at(code, s) || axioms.iter().any(|ax| ax.x == code && ax.blocks_at(s))
        })
        .count()
}

/// `(|A_s ∩ [0, k³)|, |B_s ∩ [0, k³)|)`.
pub fn cube_census(a: &StageSet, b: &StageSet, k: usize, s: Stage) -> (usize, usize) {
    let top = k.pow(3);
    (a.range_at(0, top, s).count(), b.range_at(0, top, s).count())
}

/// `n ∈ C` read off column `n` of `B` at the horizon.
pub fn decode_c_from_b(b: &StageSet, n: usize, horizon: Stage) -> bool {
    (0..=n * n + 1).any(|i| b.contains_at(pair(n, i), horizon))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoded {
    Bit(bool),
    NotSettled,
}

/// `query ∈ B` via `C`: if `n ∉ C` the answer is 0; otherwise wait for the
/// column witness `⟨n, i⟩` and compare.
pub fn decode_b_from_c(c: &StageSet, b: &StageSet, query: usize, horizon: Stage) -> Decoded {
    let Some((n, j)) = unpair(query) else {
        return Decoded::Bit(false);
    };
    if !c.contains_at(n, horizon) {
        return Decoded::Bit(false);
    }
    let entered = c.entry_stage(n).unwrap_or(0);
    for s in entered..=horizon {
        if let Some(i) = (0..=n * n + 1).find(|&i| b.contains_at(pair(n, i), s)) {
            return Decoded::Bit(i == j);
        }
    }
    Decoded::NotSettled
}

/// The running construction.
#[derive(Debug, Clone)]
pub struct TwoDegreesState {
    pub a: StageSet,
    pub b: StageSet,
    pub axioms: Vec<VeAxiom>,
    pub p: BTreeMap<usize, PStrategyState>,
    pub events: Vec<TdEvent>,
    live: BTreeMap<(usize, usize), usize>,
    ceilings: Vec<usize>,
    pairing: PairingScheme,
}

impl TwoDegreesState {
    pub fn new(horizon: Stage) -> Self {
        TwoDegreesState {
            a: StageSet::new(horizon),
            b: StageSet::new(horizon),
            axioms: Vec::new(),
            p: BTreeMap::new(),
            events: Vec::new(),
            live: BTreeMap::new(),
            ceilings: Vec::new(),
            pairing: PairingScheme::new(),
        }
    }

    /// Least admissible `x` for `max(e, m) = n`; `None` when it cannot be
    /// at most `s` (every `⟨n, i⟩` is at least `n³`).
    fn floor(&mut self, n: usize, s: Stage) -> Option<usize> {
        if n.pow(3) > s {
            return None;
        }
        while self.ceilings.len() <= n {
            let k = self.ceilings.len();
            let top = (0..=k * k).map(|i| self.pairing.pair(k, i)).max().unwrap_or(0);
            let prev = self.ceilings.last().copied().unwrap_or(0);
            self.ceilings.push(prev.max(top));
        }
        Some(self.ceilings[n] + 1)
    }

    fn invalidate(&mut self, input: &TwoDegreesInput, s: Stage) {
        let mut gone = Vec::new();
        for (&(e, m), &idx) in &self.live {
            let ax = &self.axioms[idx];
            if w_prefix(input.w_e(e), ax.gamma, s) != ax.prefix {
                gone.push((e, m, idx));
            }
        }
        for (e, m, idx) in gone {
            self.live.remove(&(e, m));
            self.axioms[idx].status = AxiomStatus::Invalidated;
            self.axioms[idx].ended_at = Some(s);
            self.events.push(TdEvent::AxiomInvalidated {
                stage: s,
                e,
                m,
                x: self.axioms[idx].x,
            });
        }
    }

    /// `R_e` at stage `s`: promote surviving axioms whose `m` is in `K_s`,
    /// then create axioms for every `m ≤ s` outside `K_s` that has none.
    pub fn r_strategy_step(&mut self, input: &TwoDegreesInput, e: usize, s: Stage) -> Result<()> {
        let due: Vec<(usize, usize)> = self
            .live
            .range((e, 0)..(e + 1, 0))
            .filter(|(&(_, m), _)| input.k.contains_at(m, s))
            .map(|(&(_, m), &idx)| (m, idx))
            .collect();
        for (m, idx) in due {
            let x = self.axioms[idx].x;
            if self.b.contains_at(x, s) {
                return Err(Error::HardFault {
                    claim: "a promoted witness is outside B".into(),
                    stage: s,
                    detail: format!("R_{e} witness {x} for m = {m} is already in B"),
                });
            }
            self.a.enumerate(x, s)?;
            self.axioms[idx].status = AxiomStatus::PromotedToA;
            self.axioms[idx].ended_at = Some(s);
            self.live.remove(&(e, m));
            self.events.push(TdEvent::Promoted { stage: s, e, m, x });
        }

        let Some(phi) = input.phi.get(e) else {
            return Ok(());
        };
        if phi.is_empty() {
            return Ok(());
        }
        let w = input.w_e(e);
        let empty = StageSet::new(0);
        let oracle = SetOracle {
            set: w.unwrap_or(&empty),
            stage: s,
            len: phi.max_use(),
        };
        let mut memo: Vec<Evaluation> = Vec::new();
        for m in 0..=s {
            if input.k.contains_at(m, s) || self.live.contains_key(&(e, m)) {
                continue;
            }
            let lo = if input.column_guard {
                match self.floor(e.max(m), s) {
                    Some(lo) => lo,
                    None if m >= e => break,
                    None => return Ok(()),
                }
            } else {
                0
            };
            let eval = |y: usize| {
                while memo.len() <= y {
                    memo.push(phi.evaluate(&oracle, memo.len(), s));
                }
                memo[y]
            };
            let Some((x, gamma)) = least_witness(eval, lo, s, &self.b, s) else {
                continue;
            };
            let prefix = w_prefix(w, gamma, s);
            self.live.insert((e, m), self.axioms.len());
            self.axioms.push(VeAxiom {
                e,
                m,
                gamma,
                prefix: prefix.clone(),
                x,
                created_at: s,
                status: AxiomStatus::Live,
                ended_at: None,
            });
            self.events.push(TdEvent::AxiomCreated {
                stage: s,
                e,
                m,
                x,
                gamma,
                prefix,
            });
        }
        Ok(())
    }

    /// The axiom blocking `code` at stage `s`, if any.
    fn blocker(&self, code: usize) -> Option<(usize, usize)> {
        self.live
            .iter()
            .find(|(_, &idx)| self.axioms[idx].x == code)
            .map(|(&em, _)| em)
    }

    /// `P_n` at the stage `n` enters `C`.
    pub fn p_strategy_step(&mut self, n: usize, s: Stage) -> Result<Option<usize>> {
        let state = self.p.entry(n).or_insert(PStrategyState { n, fired: None });
        if state.fired.is_some() {
            return Ok(None);
        }
        let mut skipped = Vec::new();
        for i in 0..=n * n {
            let code = self.pairing.pair(n, i);
            let reason = if self.a.contains_at(code, s) {
                Some(SkipReason::InA)
            } else {
                self.blocker(code).map(|(e, m)| SkipReason::Blocked { e, m })
            };
            match reason {
                Some(reason) => skipped.push(Skip { i, code, reason }),
                None => {
                    self.b.enumerate(code, s)?;
                    self.p.insert(n, PStrategyState { n, fired: Some((i, s)) });
                    self.events.push(TdEvent::PFired {
                        stage: s,
                        n,
                        i,
                        code,
                        skipped,
                    });
                    return Ok(Some(code));
                }
            }
        }
        Err(Error::HardFault {
            claim: "column census".into(),
            stage: s,
            detail: format!("all of <{n}, 0..={}> are in A or blocked", n * n),
        })
    }

    pub fn run_stage(&mut self, input: &TwoDegreesInput, s: Stage) -> Result<()> {
        self.invalidate(input, s);
        for e in 0..input.phi.len().min(s + 1) {
            self.r_strategy_step(input, e, s)?;
        }
        let mut entering: Vec<usize> = input.c.entered_at(s).to_vec();
        entering.sort_unstable();
        for n in entering {
            self.p_strategy_step(n, s)?;
        }
        Ok(())
    }
}

pub fn run_twodegrees(input: &TwoDegreesInput) -> Result<TwoDegreesState> {
    let mut st = TwoDegreesState::new(input.horizon);
    for s in 0..=input.horizon {
        st.run_stage(input, s)?;
    }
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::Rule;

    fn input(h: Stage, c: &[(usize, Stage)], k: &[(usize, Stage)], w: Vec<StageSet>, phi: Vec<OracleProgram>) -> TwoDegreesInput {
        TwoDegreesInput {
            horizon: h,
            c: StageSet::from_events(c.iter().copied(), h).unwrap(),
            k: StageSet::from_events(k.iter().copied(), h).unwrap(),
            w,
            phi,
            column_guard: true,
        }
    }

    #[test]
    fn empty_program_creates_nothing() {
        let inp = input(60, &[(2, 7)], &[(0, 3)], vec![StageSet::new(60)], vec![OracleProgram::empty()]);
        let st = run_twodegrees(&inp).unwrap();
        assert!(st.axioms.is_empty());
        assert_eq!(st.b.events(), &[(pair(2, 0), 7)]);
        assert!(decode_c_from_b(&st.b, 2, 60));
        assert!(!decode_c_from_b(&st.b, 3, 60));
    }

    fn zero_everywhere(use_: usize) -> OracleProgram {
        let rules = (0..400).map(|y| Rule::new(vec![(0, false)], y, false, use_)).collect();
        OracleProgram::new(rules).unwrap()
    }

    #[test]
    fn three_phase_promotion() {
        // Phi_0 answers 0 everywhere reading W_0(0) = 0; W_0 stays frozen;
        // 0 enters K at stage 40.
        let h = 60;
        let inp = input(h, &[], &[(0, 40)], vec![StageSet::new(h)], vec![zero_everywhere(1)]);
        let st = run_twodegrees(&inp).unwrap();
        let created = st.axioms.iter().find(|a| a.m == 0).unwrap();
        assert_eq!(created.x, column_ceiling(0) + 1);
        assert_eq!(created.status, AxiomStatus::PromotedToA);
        assert_eq!(st.a.entry_stage(created.x), Some(40));
    }

    #[test]
    fn w_change_invalidates_and_research_follows() {
        let h = 60;
        let w = StageSet::from_events([(0, 20)], h).unwrap();
        let inp = input(h, &[], &[(0, 40)], vec![w], vec![zero_everywhere(1)]);
        let st = run_twodegrees(&inp).unwrap();
        let first = &st.axioms[0];
        assert_eq!(first.status, AxiomStatus::Invalidated);
        assert!(st.events.iter().any(|e| matches!(e, TdEvent::AxiomInvalidated { stage: 20, m: 0, .. })));
        // With W_0(0) = 1 the program diverges, so nothing replaces it.
        assert!(st.a.is_empty());
    }

    #[test]
    fn p_skips_blocked_and_a_members() {
        // Block <n, 0> by an axiom and put <n, 1> into A, then let n enter C.
        let h = 200;
        let n = 2;
        let (c0, c1) = (pair(n, 0), pair(n, 1));
        let mut st = TwoDegreesState::new(h);
        st.a.enumerate(c1, 3).unwrap();
        st.live.insert((0, 0), 0);
        st.axioms.push(VeAxiom {
            e: 0,
            m: 0,
            gamma: 0,
            prefix: String::new(),
            x: c0,
            created_at: 1,
            status: AxiomStatus::Live,
            ended_at: None,
        });
        assert_eq!(st.p_strategy_step(n, 5).unwrap(), Some(pair(n, 2)));
        let TdEvent::PFired { i, skipped, .. } = &st.events[0] else { panic!() };
        assert_eq!(*i, 2);
        assert_eq!(skipped.len(), 2);
    }

    #[test]
    fn blocked_then_promoted_codes_are_skipped() {
        // Phi_1 answers 0 only at <2, 1> = 9 and Phi_0 only at <2, 0> = 8,
        // the latter from stage 13. 0 enters K at 12, promoting 9 into A;
        // then R_0 blocks 8 for m = 1, and 2 enters C at 14.
        let zero_at = |x: usize, at: Stage| {
            let rules = (0..=x).map(|y| Rule::new(vec![], y, y != x, 0).available_at(at)).collect();
            OracleProgram::new(rules).unwrap()
        };
        let h = 30;
        let inp = input(h, &[(2, 14)], &[(0, 12)], Vec::new(), vec![zero_at(8, 13), zero_at(9, 0)]);
        let st = run_twodegrees(&inp).unwrap();
        assert_eq!(st.a.entry_stage(pair(2, 1)), Some(12));
        let fired = st.events.iter().find_map(|e| match e {
            TdEvent::PFired { i, skipped, .. } => Some((*i, skipped.clone())),
            _ => None,
        });
        let (i, skipped) = fired.unwrap();
        assert_eq!(i, 2);
        assert_eq!(skipped[0].reason, SkipReason::Blocked { e: 0, m: 1 });
        assert_eq!(skipped[1].reason, SkipReason::InA);
        assert!(verify_twodegrees_trace(&TdTrace::new(&inp, &st)).passed());
    }

    #[test]
    fn censuses_on_small_cases() {
        let e = StageSet::new(10);
        assert_eq!(cube_census(&e, &e, 4, 10), (0, 0));
        assert_eq!(block_census(&e, &[], 3, 10), 0);
        let b = StageSet::from_events([(pair(3, 0), 2)], 10).unwrap();
        assert_eq!(cube_census(&e, &b, 4, 10), (0, 1));
        let ax = VeAxiom {
            e: 0,
            m: 0,
            gamma: 0,
            prefix: String::new(),
            x: pair(3, 1),
            created_at: 0,
            status: AxiomStatus::Live,
            ended_at: Some(7),
        };
        assert_eq!(block_census(&e, std::slice::from_ref(&ax), 3, 6), 1);
        assert_eq!(block_census(&e, &[ax], 3, 7), 0);
    }

    #[test]
    fn decode_b_answers() {
        let h = 20;
        let c = StageSet::from_events([(2, 5)], h).unwrap();
        let b = StageSet::from_events([(pair(2, 1), 5)], h).unwrap();
        assert_eq!(decode_b_from_c(&c, &b, pair(2, 1), h), Decoded::Bit(true));
        assert_eq!(decode_b_from_c(&c, &b, pair(2, 0), h), Decoded::Bit(false));
        assert_eq!(decode_b_from_c(&c, &b, pair(3, 0), h), Decoded::Bit(false));
        let b_late = StageSet::new(h);
        assert_eq!(decode_b_from_c(&c, &b_late, pair(2, 0), h), Decoded::NotSettled);
    }
}
