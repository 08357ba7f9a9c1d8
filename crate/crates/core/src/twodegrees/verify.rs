//! Checker for two-degrees traces.
//!
//! Blocking is recomputed from `W_e`, `K` and the recorded prefixes rather
//! than read off the axioms' end stages, so a trace cannot hide a live block
//! by misreporting when it ended.

use std::collections::BTreeMap;

use super::{
    cube_census, decode_b_from_c, decode_c_from_b, w_prefix, AxiomStatus, Decoded, TdEvent, TwoDegreesInput,
    TwoDegreesState, VeAxiom,
};
use crate::enumcore::{pair, unpair, Stage, StageSet};
use crate::functionals::{Evaluation, OracleProgram, SetOracle};
use crate::harness::report::{Counterexample, Verdict, VerificationReport};

pub const VERDICTS: [&str; 6] = [
    "disjointness",
    "axiom_lifecycle",
    "block_soundness",
    "block_census",
    "cube_census",
    "coding",
];

/// Columns `n ≤ CENSUS_COLUMNS` and cubes `k ≤ CENSUS_COLUMNS` are counted.
pub const CENSUS_COLUMNS: usize = 10;

#[derive(Debug, Clone)]
pub struct TdTrace {
    pub horizon: Stage,
    pub c: StageSet,
    pub k: StageSet,
    pub w: Vec<StageSet>,
    pub phi: Vec<OracleProgram>,
    pub a: StageSet,
    pub b: StageSet,
    pub axioms: Vec<VeAxiom>,
    pub events: Vec<TdEvent>,
}

impl TdTrace {
    pub fn new(input: &TwoDegreesInput, st: &TwoDegreesState) -> Self {
        TdTrace {
            horizon: input.horizon,
            c: input.c.clone(),
            k: input.k.clone(),
            w: input.w.clone(),
            phi: input.phi.clone(),
            a: st.a.clone(),
            b: st.b.clone(),
            axioms: st.axioms.clone(),
            events: st.events.clone(),
        }
    }
}

struct Ctx<'a> {
    t: &'a TdTrace,
    empty: StageSet,
}

impl Ctx<'_> {
    fn w(&self, e: usize) -> &StageSet {
        self.t.w.get(e).unwrap_or(&self.empty)
    }

    fn intact(&self, ax: &VeAxiom, s: Stage) -> bool {
        w_prefix(Some(self.w(ax.e)), ax.gamma, s) == ax.prefix
    }

    /// Blocking as the definition has it: created by `s`, prefix unchanged
    /// at `s` (W is c.e., so equality at `s` means equality throughout), and
    /// not yet promoted, which `m ∈ K_s` forces.
    fn blocks(&self, ax: &VeAxiom, s: Stage) -> bool {
        ax.created_at <= s && self.intact(ax, s) && !self.t.k.contains_at(ax.m, s)
    }
}

fn by_witness(axioms: &[VeAxiom]) -> BTreeMap<usize, Vec<&VeAxiom>> {
    let mut m: BTreeMap<usize, Vec<&VeAxiom>> = BTreeMap::new();
    for ax in axioms {
        m.entry(ax.x).or_default().push(ax);
    }
    m
}

fn actor(ax: &VeAxiom) -> String {
    format!("R_{}/m={}", ax.e, ax.m)
}

fn disjointness(t: &TdTrace) -> Verdict {
    let mut v = Verdict::new("disjointness", "no element enters A or B while already in the other");
    for &(x, s) in t.a.events() {
        v.check(!t.b.contains_at(x, s), || Counterexample::at(s, "A entry already in B").element(x));
    }
    for &(x, s) in t.b.events() {
        v.check(!t.a.contains_at(x, s), || Counterexample::at(s, "B entry already in A").element(x));
    }
    v
}

/// The stage the axiom must end at, with the status it must end in.
fn expected_end(ctx: &Ctx, ax: &VeAxiom) -> Option<(Stage, AxiomStatus)> {
    for s in ax.created_at + 1..=ctx.t.horizon {
        if !ctx.intact(ax, s) {
            return Some((s, AxiomStatus::Invalidated));
        }
        if ctx.t.k.contains_at(ax.m, s) {
            return Some((s, AxiomStatus::PromotedToA));
        }
    }
    None
}

/// `Φ_e^{W_e}(y)[s]` converges for all `y ≤ x`, gives 0 at `x`, and the
/// largest least use is `γ`.
fn creation_computation(ctx: &Ctx, ax: &VeAxiom) -> Result<(), String> {
    let Some(phi) = ctx.t.phi.get(ax.e) else {
        return Err(format!("no functional with index {}", ax.e));
    };
    let oracle = SetOracle {
        set: ctx.w(ax.e),
        stage: ax.created_at,
        len: phi.max_use(),
    };
    let mut gamma = 0;
    for y in 0..=ax.x {
        match phi.evaluate(&oracle, y, ax.created_at) {
            Evaluation::Diverged => return Err(format!("computation on {y} diverges")),
            Evaluation::Halted { output, use_ } => {
                gamma = gamma.max(use_);
                if y == ax.x && output {
                    return Err(format!("computation on the witness {y} gives 1"));
                }
            }
        }
    }
    if gamma != ax.gamma {
        return Err(format!("recorded use {} but the computations use {gamma}", ax.gamma));
    }
    Ok(())
}

fn axiom_lifecycle(ctx: &Ctx) -> Verdict {
    let t = ctx.t;
    let mut v = Verdict::new("axiom_lifecycle", "axioms are created, invalidated and promoted as prescribed");

    // The axiom list and the event log describe the same history.
    let created: Vec<&TdEvent> = t
        .events
        .iter()
        .filter(|e| matches!(e, TdEvent::AxiomCreated { .. }))
        .collect();
    v.check(created.len() == t.axioms.len(), || {
        Counterexample::at(
            t.horizon,
            format!("{} creation events for {} axioms", created.len(), t.axioms.len()),
        )
    });
    for (ev, ax) in created.iter().zip(&t.axioms) {
        let TdEvent::AxiomCreated { stage, e, m, x, gamma, prefix } = ev else {
            continue;
        };
        let same = (*stage, *e, *m, *x, *gamma, prefix) == (ax.created_at, ax.e, ax.m, ax.x, ax.gamma, &ax.prefix);
        v.check(same, || {
            Counterexample::at(*stage, "creation event disagrees with the axiom record").actor(actor(ax))
        });
    }
    for ev in &t.events {
        let (stage, e, m, x, status) = match *ev {
            TdEvent::AxiomInvalidated { stage, e, m, x } => (stage, e, m, x, AxiomStatus::Invalidated),
            TdEvent::Promoted { stage, e, m, x } => (stage, e, m, x, AxiomStatus::PromotedToA),
            _ => continue,
        };
        let found = t
            .axioms
            .iter()
            .any(|ax| (ax.e, ax.m, ax.x, ax.ended_at, ax.status) == (e, m, x, Some(stage), status));
        v.check(found, || {
            Counterexample::at(stage, "end event matches no axiom").actor(format!("R_{e}/m={m}")).element(x)
        });
    }

    for ax in &t.axioms {
        let s = ax.created_at;
        let cx = || Counterexample::at(s, "").actor(actor(ax)).element(ax.x);
        v.check(ax.m <= s && ax.e <= s && ax.x <= s, || Counterexample {
            detail: "index or witness above the stage".into(),
            ..cx()
        });
        v.check(!t.k.contains_at(ax.m, s), || Counterexample {
            detail: "created while m is in K".into(),
            ..cx()
        });
        v.check(!t.b.contains_at(ax.x, s), || Counterexample {
            detail: "witness already in B at creation".into(),
            ..cx()
        });
        v.check(ctx.intact(ax, s), || Counterexample {
            detail: "recorded prefix is not W_e at creation".into(),
            ..cx()
        });
        let comp = creation_computation(ctx, ax);
        v.check(comp.is_ok(), || Counterexample {
            detail: comp.clone().err().unwrap_or_default(),
            ..cx()
        });

        let expect = expected_end(ctx, ax);
        let got = ax.ended_at.map(|end| (end, ax.status));
        let consistent = match got {
            None => ax.status == AxiomStatus::Live,
            Some((_, st)) => st != AxiomStatus::Live,
        };
        v.check(consistent && got == expect, || Counterexample {
            stage: Some(expect.or(got).map_or(t.horizon, |(end, _)| end)),
            detail: format!("ended {got:?}, expected {expect:?}"),
            ..cx()
        });
        if let Some((end, AxiomStatus::PromotedToA)) = got {
            v.check(t.a.contains_at(ax.x, end), || Counterexample {
                stage: Some(end),
                detail: "promoted witness not in A".into(),
                ..cx()
            });
        }
    }

    // One live axiom per (e, m) at a time.
    let mut per: BTreeMap<(usize, usize), Vec<&VeAxiom>> = BTreeMap::new();
    for ax in &t.axioms {
        per.entry((ax.e, ax.m)).or_default().push(ax);
    }
    for list in per.values() {
        for pair_ in list.windows(2) {
            let (p, q) = (pair_[0], pair_[1]);
            let ok = p.ended_at.is_some_and(|end| end <= q.created_at);
            v.check(ok, || {
                Counterexample::at(q.created_at, "two live axioms for the same requirement").actor(actor(q))
            });
        }
    }

    // Every A entry is a promotion at that stage.
    for &(x, s) in t.a.events() {
        let ok = t
            .axioms
            .iter()
            .any(|ax| ax.x == x && ax.status == AxiomStatus::PromotedToA && ax.ended_at == Some(s));
        v.check(ok, || Counterexample::at(s, "A entry without a promotion").element(x));
    }
    v
}

fn block_soundness(ctx: &Ctx, witnesses: &BTreeMap<usize, Vec<&VeAxiom>>) -> Verdict {
    let t = ctx.t;
    let mut v = Verdict::new("block_soundness", "B receives no blocked element");
    for ax in &t.axioms {
        let end = ax.ended_at.unwrap_or(t.horizon + 1);
        let w = ctx.w(ax.e);
        for p in 0..ax.gamma {
            let changed = w.entry_stage(p).filter(|&u| u > ax.created_at && u < end);
            v.check(changed.is_none(), || {
                Counterexample::at(changed.unwrap_or(0), format!("reported blocking after W_e({p}) changed"))
                    .actor(actor(ax))
                    .element(ax.x)
            });
        }
    }
    for &(code, s) in t.b.events() {
        let blocker = witnesses
            .get(&code)
            .and_then(|list| list.iter().find(|ax| ctx.blocks(ax, s)));
        v.check(blocker.is_none(), || {
            Counterexample::at(s, "B entry is blocked")
                .element(code)
                .actor(blocker.map(|ax| actor(ax)).unwrap_or_default())
        });
    }
    v
}

fn census_stages(t: &TdTrace) -> Vec<Stage> {
    let mut stages: Vec<Stage> = t
        .a
        .events()
        .iter()
        .chain(t.b.events())
        .chain(t.k.events())
        .map(|&(_, s)| s)
        .chain(t.axioms.iter().map(|ax| ax.created_at))
        .chain(t.w.iter().flat_map(|w| w.events().iter().map(|&(_, s)| s)))
        .filter(|&s| s <= t.horizon)
        .chain([0, t.horizon])
        .collect();
    stages.sort_unstable();
    stages.dedup();
    stages
}

fn block_census(ctx: &Ctx, witnesses: &BTreeMap<usize, Vec<&VeAxiom>>, stages: &[Stage]) -> Verdict {
    let t = ctx.t;
    let mut v = Verdict::new("block_census", "at most n² of the first n²+1 column-n codes are in A or blocked");
    let columns: Vec<Vec<usize>> = (0..=CENSUS_COLUMNS)
        .map(|n| (0..=n * n).map(|i| pair(n, i)).collect())
        .collect();
    for &s in stages {
        for (n, codes) in columns.iter().enumerate() {
            let count = codes
                .iter()
                .filter(|&&code| {
                    t.a.contains_at(code, s)
                        || witnesses
                            .get(&code)
                            .is_some_and(|list| list.iter().any(|ax| ctx.blocks(ax, s)))
                })
                .count();
            v.check(count <= n * n, || {
                Counterexample::at(s, format!("column {n}: {count} of {} codes taken", n * n + 1)).actor(format!("P_{n}"))
            });
        }
    }
    v
}

fn cube_census_verdict(t: &TdTrace, stages: &[Stage]) -> Verdict {
    let mut v = Verdict::new("cube_census", "|A ∩ k³| ≤ k² and |B ∩ k³| ≤ k");
    for &s in stages {
        for k in 0..=CENSUS_COLUMNS {
            let (ca, cb) = cube_census(&t.a, &t.b, k, s);
            v.check(ca <= k * k && cb <= k, || {
                Counterexample::at(s, format!("k = {k}: |A ∩ k³| = {ca}, |B ∩ k³| = {cb}"))
            });
        }
    }
    v
}

fn coding(ctx: &Ctx) -> Verdict {
    let t = ctx.t;
    let mut v = Verdict::new("coding", "column coding of C into B, both ways");
    let mut fired: BTreeMap<usize, Vec<(Stage, usize, usize)>> = BTreeMap::new();
    for ev in &t.events {
        let TdEvent::PFired { stage, n, i, code, .. } = *ev else {
            continue;
        };
        fired.entry(n).or_default().push((stage, i, code));
        v.check(code == pair(n, i) && i <= n * n, || {
            Counterexample::at(stage, format!("fired <{n}, {i}> as {code}")).actor(format!("P_{n}"))
        });
        v.check(t.b.entry_stage(code) == Some(stage), || {
            Counterexample::at(stage, "fired code did not enter B then").element(code).actor(format!("P_{n}"))
        });
        v.check(t.c.entry_stage(n) == Some(stage), || {
            Counterexample::at(stage, "fired without n entering C").actor(format!("P_{n}"))
        });
        for j in 0..i {
            let cj = pair(n, j);
            let taken = t.a.contains_at(cj, stage) || t.axioms.iter().any(|ax| ax.x == cj && ctx.blocks(ax, stage));
            v.check(taken, || {
                Counterexample::at(stage, format!("skipped eligible <{n}, {j}>")).element(cj).actor(format!("P_{n}"))
            });
        }
    }
    for &(n, s) in t.c.events() {
        let count = fired.get(&n).map_or(0, Vec::len);
        v.check(count == 1, || Counterexample::at(s, format!("{count} firings for C entry {n}")).actor(format!("P_{n}")));
    }
    let mut per_column: BTreeMap<usize, usize> = BTreeMap::new();
    for &(code, s) in t.b.events() {
        let from_p = fired.values().flatten().any(|&(st, _, c)| c == code && st == s);
        v.check(from_p, || Counterexample::at(s, "B entry without a firing").element(code));
        if let Some((n, _)) = unpair(code) {
            let seen = per_column.entry(n).or_default();
            *seen += 1;
            v.check(*seen <= 1, || Counterexample::at(s, format!("second code in column {n}")).element(code));
        }
    }

    let h = t.horizon;
    let columns = CENSUS_COLUMNS.max(t.c.max_element().unwrap_or(0));
    for n in 0..=columns {
        let got = decode_c_from_b(&t.b, n, h);
        v.check(got == t.c.contains_at(n, h), || {
            Counterexample::at(h, format!("column {n} decodes to {got}")).element(n)
        });
    }
    let top = (0..=CENSUS_COLUMNS)
        .flat_map(|n| (0..=n * n + 1).map(move |i| (n, i)))
        .map(|(n, i)| pair(n, i))
        .max()
        .unwrap_or(0);
    for q in (0..=top).chain(t.b.events().iter().map(|&(c, _)| c)) {
        let got = decode_b_from_c(&t.c, &t.b, q, h);
        v.check(got == Decoded::Bit(t.b.contains_at(q, h)), || {
            Counterexample::at(h, format!("query decodes to {got:?}")).element(q)
        });
    }
    v
}

pub fn verify_twodegrees_trace(t: &TdTrace) -> VerificationReport {
    let ctx = Ctx {
        t,
        empty: StageSet::new(t.horizon),
    };
    let witnesses = by_witness(&t.axioms);
    let stages = census_stages(t);
    let verdicts = vec![
        disjointness(t),
        axiom_lifecycle(&ctx),
        block_soundness(&ctx, &witnesses),
        block_census(&ctx, &witnesses, &stages),
        cube_census_verdict(t, &stages),
        coding(&ctx),
    ];
    let live = t.axioms.iter().filter(|ax| ax.status == AxiomStatus::Live).count();
    let caveats = vec![format!(
        "{live} axioms still live at horizon {}; their witnesses may yet be promoted or released",
        t.horizon
    )];
    VerificationReport {
        construction: "twodegrees".into(),
        verdicts,
        caveats,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{run_twodegrees, TwoDegreesInput};
    use super::*;
    use crate::functionals::Rule;

    /// `Φ` answering 1 below `x`, 0 at `x`, without reading the oracle.
    fn zero_at(x: usize) -> OracleProgram {
        let rules = (0..=x).map(|y| Rule::new(vec![], y, y != x, 0)).collect();
        OracleProgram::new(rules).unwrap()
    }

    fn run(h: Stage, c: &[(usize, Stage)], k: &[(usize, Stage)], phi: Vec<OracleProgram>, guard: bool) -> VerificationReport {
        let input = TwoDegreesInput {
            horizon: h,
            c: StageSet::from_events(c.iter().copied(), h).unwrap(),
            k: StageSet::from_events(k.iter().copied(), h).unwrap(),
            w: Vec::new(),
            phi,
            column_guard: guard,
        };
        let st = run_twodegrees(&input).unwrap();
        verify_twodegrees_trace(&TdTrace::new(&input, &st))
    }

    #[test]
    fn unguarded_witness_in_column_zero_breaks_only_block_census() {
        let r = run(30, &[], &[], vec![zero_at(0)], false);
        assert_eq!(r.failing(), vec!["block_census"], "{}", r.render());
        assert!(run(30, &[], &[], vec![zero_at(0)], true).passed());
    }

    #[test]
    fn unguarded_small_promotions_break_only_cube_census() {
        // Codes 2, 4, 5, 6, 7 are <n, i> with i > n², outside every census column.
        let phi = [2, 4, 5, 6, 7].map(zero_at).to_vec();
        let r = run(30, &[], &[(0, 10)], phi.clone(), false);
        assert_eq!(r.failing(), vec!["cube_census"], "{}", r.render());
        assert!(run(30, &[], &[(0, 10)], phi, true).passed());
    }

    #[test]
    fn tampered_records_are_caught() {
        let h = 40;
        let input = TwoDegreesInput {
            horizon: h,
            c: StageSet::from_events([(2, 20)], h).unwrap(),
            k: StageSet::new(h),
            w: Vec::new(),
            phi: vec![zero_at(8)],
            column_guard: true,
        };
        let st = run_twodegrees(&input).unwrap();
        let clean = TdTrace::new(&input, &st);
        assert!(verify_twodegrees_trace(&clean).passed());

        let mut t = clean.clone();
        t.axioms[0].x = 11;
        if let TdEvent::AxiomCreated { x, .. } = &mut t.events[0] {
            *x = 11;
        }
        assert_eq!(verify_twodegrees_trace(&t).failing(), vec!["axiom_lifecycle"]);

        // P_2 skipped the blocked <2, 0> = 8 and fired <2, 1> = 9; move the
        // firing onto the blocked code.
        let mut t = clean.clone();
        t.b = StageSet::from_events([(8, 20)], h).unwrap();
        for ev in &mut t.events {
            if let TdEvent::PFired { i, code, skipped, .. } = ev {
                (*i, *code) = (0, 8);
                skipped.clear();
            }
        }
        assert_eq!(verify_twodegrees_trace(&t).failing(), vec!["block_soundness"]);

        let mut t = clean.clone();
        t.b = StageSet::from_events([(9, 20), (10, 30)], h).unwrap();
        assert_eq!(verify_twodegrees_trace(&t).failing(), vec!["coding"]);

        let mut t = clean;
        t.a = StageSet::from_events([(9, 25)], h).unwrap();
        let report = verify_twodegrees_trace(&t);
        assert!(report.failing().contains(&"disjointness"), "{:?}", report.failing());
    }
}
