//! The shipped corpus: clean scenarios for every construction, certificates
//! that must be rejected, scenarios that must not load, and tampered traces
//! that must fail exactly one verdict each.
//!
//! Everything is generated from fixed seeds, so rebuilding reproduces the
//! files byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::{Construction, Scenario, ScenarioBody};
use super::trace::{run, verify, ConstructionTrace, TraceBody};
use crate::anticomplete::{self, random_adversary, AcEvent};
use crate::enumcore::{pair, Stage, StageSet};
use crate::error::{Error, Result};
use crate::functionals::{OracleProgram, Rule, UseBoundedOperator};
use crate::nosupermax::{self, chaser_scenario, random_sets, ChaserParams, Parity, SpeedupCertificate};
use crate::twodegrees::{self, random_scenario, TdEvent, TdParams, TwoDegreesInput};
use crate::upclosure::{self, random_settled, CaseTag};

pub const DEFAULT_HORIZON: Stage = 1000;
pub const ANTICOMPLETE_RUNS: u64 = 20;
pub const UPCLOSURE_RUNS_PER_CASE: u64 = 100;
pub const NOSUPERMAX_RUNS: u64 = 20;
pub const TWODEGREES_RUNS: u64 = 20;
/// Inputs the anticomplete opponents answer on; enough for `σ` of every
/// length up to the horizon.
pub const ANTICOMPLETE_INPUTS: usize = 1100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    /// Runs and verifies clean.
    Pass,
    /// Runs and verifies clean, and some certificate is rejected with a witness stage.
    Rejected,
    /// A trace on which exactly `verdict` fails.
    Fault,
    /// Loading fails the hypothesis audit.
    Hypothesis,
    /// Loading fails schema validation.
    Schema,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the corpus root.
    pub file: String,
    pub construction: Construction,
    pub expect: Expect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub note: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub entries: Vec<(ManifestEntry, String)>,
}

pub const MANIFEST: &str = "manifest.jsonl";

impl Corpus {
    fn push(&mut self, file: String, construction: Construction, expect: Expect, verdict: Option<&str>, note: impl Into<String>, text: String) {
        self.entries.push((
            ManifestEntry {
                file,
                construction,
                expect,
                verdict: verdict.map(str::to_string),
                note: note.into(),
            },
            text,
        ));
    }

    fn scenario(&mut self, name: &str, expect: Expect, sc: &Scenario) {
        let c = sc.construction();
        let note = sc.description.clone().unwrap_or_default();
        self.push(format!("scenarios/{c}/{name}.jsonl"), c, expect, None, note, sc.to_jsonl());
    }

    fn fault(&mut self, verdict: &str, note: &str, t: &ConstructionTrace) {
        let c = t.header.construction;
        self.push(format!("faults/{c}/{verdict}.jsonl"), c, Expect::Fault, Some(verdict), note, t.to_jsonl());
    }

    pub fn manifest(&self) -> String {
        self.entries
            .iter()
            .map(|(e, _)| serde_json::to_string(e).expect("manifest entries serialize") + "\n")
            .collect()
    }

    /// Writes every file plus the manifest below `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        for (entry, text) in &self.entries {
            let path = dir.join(&entry.file);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(io)?;
            }
            fs::write(&path, text).map_err(io)?;
        }
        fs::write(dir.join(MANIFEST), self.manifest()).map_err(io)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(dir.join(MANIFEST)).map_err(|e| Error::Io(e.to_string()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Builds the whole corpus in memory.
pub fn build_corpus() -> Result<Corpus> {
    let mut c = Corpus::default();
    clean_scenarios(&mut c)?;
    rejected_certificates(&mut c)?;
    invalid_scenarios(&mut c)?;
    anticomplete_faults(&mut c)?;
    upclosure_faults(&mut c)?;
    nosupermax_faults(&mut c)?;
    twodegrees_faults(&mut c)?;
    Ok(c)
}

fn chaser(seed: u64, horizon: Stage) -> Result<(StageSet, StageSet, Vec<SpeedupCertificate>)> {
    chaser_scenario(ChaserParams {
        horizon,
        seed,
        delay_a: (1, 4),
        delay_b: (1, 4),
        chase_second: true,
    })
}

fn nosupermax_scenario(a: StageSet, b: StageSet, certificates: Vec<SpeedupCertificate>) -> Scenario {
    Scenario::new(ScenarioBody::Nosupermax {
        a,
        b,
        certificates,
        window: None,
    })
}

fn clean_scenarios(c: &mut Corpus) -> Result<()> {
    let h = DEFAULT_HORIZON;
    for seed in 0..ANTICOMPLETE_RUNS {
        let programs = random_adversary(seed, 6, ANTICOMPLETE_INPUTS)?;
        let sc = Scenario::new(ScenarioBody::Anticomplete { horizon: h, programs })
            .described(format!("six random opponents, seed {seed}"));
        c.scenario(&format!("random-{seed:02}"), Expect::Pass, &sc);
    }
    let empty = Scenario::new(ScenarioBody::Anticomplete {
        horizon: 100,
        programs: Vec::new(),
    })
    .described("no opponents");
    c.scenario("empty-adversary", Expect::Pass, &empty);

    for case in [1u8, 2] {
        for seed in 0..UPCLOSURE_RUNS_PER_CASE {
            let sc = Scenario::new(ScenarioBody::Upclosure(random_settled(case, seed)?))
                .described(format!("settled case {case} instance, seed {seed}"));
            c.scenario(&format!("case{case}-{seed:03}"), Expect::Pass, &sc);
        }
    }

    for seed in 0..NOSUPERMAX_RUNS {
        let (a, b, certs) = chaser(seed, h)?;
        let sc = nosupermax_scenario(a, b, certs).described(format!("both chasers, seed {seed}"));
        c.scenario(&format!("chaser-{seed:02}"), Expect::Pass, &sc);
    }
    for seed in 0..5 {
        let (a, b) = random_sets(seed, 400)?;
        let sc = nosupermax_scenario(a, b, Vec::new()).described(format!("random disjoint sets, seed {seed}"));
        c.scenario(&format!("random-{seed}"), Expect::Pass, &sc);
    }
    let e = StageSet::new(200);
    c.scenario(
        "empty-sets",
        Expect::Pass,
        &nosupermax_scenario(e.clone(), e, Vec::new()).described("A and B empty, no certificates"),
    );

    for seed in 0..TWODEGREES_RUNS {
        let sc = Scenario::new(ScenarioBody::Twodegrees(random_scenario(TdParams::new(h, seed))?))
            .described(format!("scripted inputs, seed {seed}"));
        c.scenario(&format!("random-{seed:02}"), Expect::Pass, &sc);
    }
    c.scenario("minimal", Expect::Pass, &minimal_twodegrees());
    c.scenario("skips", Expect::Pass, &skipping_twodegrees(40)?);
    Ok(())
}

/// Empty `C` and `K`, no functionals, horizon 10.
pub fn minimal_twodegrees() -> Scenario {
    Scenario::new(ScenarioBody::Twodegrees(TwoDegreesInput {
        horizon: 10,
        c: StageSet::new(10),
        k: StageSet::new(10),
        w: Vec::new(),
        phi: Vec::new(),
        column_guard: true,
    }))
    .described("empty C and K, horizon 10")
}

/// `Φ` answering 1 below `x` and 0 at `x`, oracle-free.
fn zero_at(x: usize) -> Result<OracleProgram> {
    OracleProgram::new((0..=x).map(|y| Rule::new(vec![], y, y != x, 0)).collect())
}

/// `<2, 0> = 8` is promoted into `A` at stage 10, so when 2 enters `C` at
/// stage 20 the column skips to `<2, 1>`. Every `m ≤ h` enters `K` at
/// stage 10, so no axiom outlives that stage.
fn skipping_twodegrees(h: Stage) -> Result<Scenario> {
    Ok(Scenario::new(ScenarioBody::Twodegrees(TwoDegreesInput {
        horizon: h,
        c: StageSet::from_events([(2, 20)], h)?,
        k: StageSet::from_events((0..=h).map(|m| (m, 10)), h)?,
        w: Vec::new(),
        phi: vec![zero_at(8)?],
        column_guard: true,
    }))
    .described("column 2 skips a code already in A"))
}

fn rejected_certificates(c: &mut Corpus) -> Result<()> {
    let h = 400;
    let mutations: [(&str, fn(&mut SpeedupCertificate)); 4] = [
        ("parity", |c| {
            c.parity = match c.parity {
                Parity::Odd => Parity::Even,
                Parity::Even => Parity::Odd,
            }
        }),
        ("index", |c| {
            c.ell += 1;
            c.k += 1;
        }),
        ("settling", |c| c.settling_stage += 350),
        ("lower-index", |c| {
            c.ell -= 1;
            c.k -= 1;
        }),
    ];
    for seed in 0..3 {
        let (a, b, certs) = chaser(seed, h)?;
        for which in 0..certs.len() {
            for (label, mutate) in &mutations {
                let mut bad = certs.clone();
                mutate(&mut bad[which]);
                let sc = nosupermax_scenario(a.clone(), b.clone(), bad)
                    .described(format!("chaser seed {seed}, certificate {} with a wrong {label}", which + 1));
                let t = run(&sc)?;
                let TraceBody::Nosupermax(p) = &t.body else { unreachable!() };
                let rejected = p.speedups.iter().any(|o| !o.accepted && o.witness_stage.is_some());
                if rejected && verify(&t).passed() {
                    c.scenario(&format!("wrong-{label}-{}-{seed}", which + 1), Expect::Rejected, &sc);
                }
            }
        }
    }
    Ok(())
}

fn invalid_scenarios(c: &mut Corpus) -> Result<()> {
    let inst = random_settled(1, 0)?;
    let bad = flip_gamma(&inst, 4)?;
    let sc = Scenario::new(ScenarioBody::Upclosure(bad)).described("Gamma^A disagrees with B at bit 4");
    c.push(
        "invalid/gamma-bit-4.jsonl".into(),
        Construction::Upclosure,
        Expect::Hypothesis,
        None,
        "Gamma^A disagrees with B at bit 4",
        sc.to_jsonl(),
    );

    let text = minimal_twodegrees().to_jsonl() + "{\"record\":\"element\",\"set\":\"C\",\"x\":3,\"stage\":11}\n";
    c.push(
        "invalid/stage-beyond-horizon.jsonl".into(),
        Construction::Twodegrees,
        Expect::Schema,
        None,
        "an element stamped after the horizon",
        text,
    );

    let (mut a, b, _) = chaser(0, 120)?;
    if let Some(&(x, s)) = b.events().first() {
        a = with(&a, x, s)?;
    }
    let sc = nosupermax_scenario(a, b, Vec::new()).described("A and B share an element");
    c.push(
        "invalid/overlap.jsonl".into(),
        Construction::Nosupermax,
        Expect::Hypothesis,
        None,
        "A and B share an element",
        sc.to_jsonl(),
    );
    Ok(())
}

/// `inst` with `Γ` answering the opposite bit on input `x`.
fn flip_gamma(inst: &upclosure::UpclosureInstance, x: usize) -> Result<upclosure::UpclosureInstance> {
    let rules: Vec<Rule> = inst
        .gamma
        .program()
        .rules()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if r.input == x {
                r.output = !r.output;
            }
            r
        })
        .collect();
    let mut out = inst.clone();
    out.gamma = UseBoundedOperator::new(OracleProgram::new(rules)?, inst.gamma.bound().clone())?;
    Ok(out)
}

fn with(set: &StageSet, x: usize, s: Stage) -> Result<StageSet> {
    let mut ev = set.events().to_vec();
    ev.retain(|&(y, _)| y != x);
    ev.push((x, s));
    StageSet::from_events(ev, set.horizon())
}

fn without(set: &StageSet, x: usize) -> Result<StageSet> {
    StageSet::from_events(set.events().iter().copied().filter(|&(y, _)| y != x), set.horizon())
}

/// The first candidate on which exactly `verdict` fails.
fn isolate(verdict: &str, candidates: impl IntoIterator<Item = ConstructionTrace>) -> Result<ConstructionTrace> {
    let mut seen = Vec::new();
    for t in candidates {
        let failing: Vec<String> = verify(&t).failing().into_iter().map(str::to_string).collect();
        if failing == [verdict] {
            return Ok(t);
        }
        if seen.len() < 5 {
            seen.push(failing.join("+"));
        }
    }
    Err(Error::Hypothesis(format!("no fixture isolates {verdict}; candidates failed {seen:?}")))
}

fn ac_parts(t: &mut ConstructionTrace) -> (&mut Vec<AcEvent>, &mut StageSet, &mut StageSet, &mut StageSet) {
    match &mut t.body {
        TraceBody::Anticomplete { events, a, b, d } => (events, a, b, d),
        _ => unreachable!("anticomplete body"),
    }
}

fn anticomplete_faults(c: &mut Corpus) -> Result<()> {
    let h = 150;
    let bases: Vec<ConstructionTrace> = (1..=4)
        .map(|seed| {
            run(&Scenario::new(ScenarioBody::Anticomplete {
                horizon: h,
                programs: random_adversary(seed, 6, 200)?,
            }))
        })
        .collect::<Result<_>>()?;
    // Candidates walk each base's events from the last one back; `f` also
    // gets a variant index below `variants`.
    type Tamper<'a> = &'a dyn Fn(&mut ConstructionTrace, usize, usize) -> Result<bool>;
    let tamper = |variants: usize, f: Tamper| -> Vec<ConstructionTrace> {
        let mut out = Vec::new();
        for base in &bases {
            let n_events = ac_parts(&mut base.clone()).0.len();
            for i in (0..n_events).rev() {
                for j in 0..variants {
                    let mut t = base.clone();
                    if matches!(f(&mut t, i, j), Ok(true)) {
                        out.push(t);
                    }
                }
            }
        }
        out
    };
    let v = anticomplete::VERDICTS;

    let t = isolate(v[0], tamper(1, &|t, i, _| {
        let (events, a, _, _) = ac_parts(t);
        let AcEvent::RActed { into_a, into_b, .. } = &mut events[i] else { return Ok(false) };
        if into_b.is_empty() || into_a.is_empty() {
            return Ok(false);
        }
        for x in std::mem::take(into_a) {
            *a = without(a, x)?;
        }
        Ok(true)
    }))?;
    c.fault(v[0], "an R-action's A-entries removed, leaving its B-entries bare", &t);

    let t = isolate(v[1], tamper(1, &|t, i, _| {
        let AcEvent::RActed { restraint, .. } = &mut ac_parts(t).0[i] else { return Ok(false) };
        *restraint += 1;
        Ok(true)
    }))?;
    c.fault(v[1], "a recorded restraint raised by one", &t);

    let t = isolate(v[2], tamper(8, &|t, i, j| {
        let (events, a, b, _) = ac_parts(t);
        let AcEvent::RActed { stage, into_a, .. } = &mut events[i] else { return Ok(false) };
        let Some(&(x, _)) = b.events().iter().filter(|&&(_, e)| e <= *stage).nth(j) else { return Ok(false) };
        into_a.push(x);
        *a = with(a, x, *stage + 1)?;
        Ok(true)
    }))?;
    c.fault(v[2], "an R-action also puts an existing B-member into A", &t);

    let t = isolate(v[3], tamper(4, &|t, i, j| {
        let (events, a, b, d) = ac_parts(t);
        let AcEvent::RActed { stage, into_a, .. } = &mut events[i] else { return Ok(false) };
        let x = *stage + j;
        if a.contains(x) || b.contains(x) || d.contains(x) {
            return Ok(false);
        }
        into_a.push(x);
        *a = with(a, x, *stage + 1)?;
        Ok(true)
    }))?;
    c.fault(v[3], "an R-action enumerates a number as large as its stage", &t);

    let t = isolate(v[4], tamper(1, &|t, i, _| {
        let AcEvent::Claimed { n, .. } = &mut ac_parts(t).0[i] else { return Ok(false) };
        *n = 0;
        Ok(true)
    }))?;
    c.fault(v[4], "a claim of a number that is not fresh", &t);

    let t = isolate(v[5], tamper(1, &|t, i, _| {
        let AcEvent::NActed { restraint, .. } = &mut ac_parts(t).0[i] else { return Ok(false) };
        *restraint += 1;
        Ok(true)
    }))?;
    c.fault(v[5], "an N-action records the wrong restraint", &t);

    let t = isolate(v[6], tamper(1, &|t, i, _| {
        let AcEvent::RActed { sigma, .. } = &mut ac_parts(t).0[i] else { return Ok(false) };
        let Some(last) = sigma.pop() else { return Ok(false) };
        sigma.push(if last == '1' { '0' } else { '1' });
        Ok(true)
    }))?;
    c.fault(v[6], "the last bit of a recorded sigma flipped", &t);

    let mut t = bases[0].clone();
    let (_, a, b, d) = ac_parts(&mut t);
    let x = [a.max_element(), b.max_element(), d.max_element()]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0)
        + 1;
    *d = with(d, x, h)?;
    let t = isolate(v[7], [t])?;
    c.fault(v[7], "a D-entry no action accounts for", &t);
    Ok(())
}

fn uc_run(t: &mut ConstructionTrace) -> &mut upclosure::UpclosureRun {
    match &mut t.body {
        TraceBody::Upclosure(r) => r,
        _ => unreachable!("upclosure body"),
    }
}

fn uc_instance(t: &mut ConstructionTrace) -> &mut upclosure::UpclosureInstance {
    match &mut t.scenario.body {
        ScenarioBody::Upclosure(i) => i,
        _ => unreachable!("upclosure scenario"),
    }
}

fn upclosure_faults(c: &mut Corpus) -> Result<()> {
    let v = upclosure::VERDICTS;
    let bases: Vec<ConstructionTrace> = (0..10)
        .map(|seed| run(&Scenario::new(ScenarioBody::Upclosure(random_settled(2, seed)?))))
        .collect::<Result<_>>()?;
    let each = |f: &dyn Fn(&mut ConstructionTrace) -> Result<bool>| -> Vec<ConstructionTrace> {
        bases
            .iter()
            .filter_map(|b| {
                let mut t = b.clone();
                let ok = matches!(f(&mut t), Ok(true));
                t.rehash();
                ok.then_some(t)
            })
            .collect()
    };

    let t = isolate(v[0], each(&|t| {
        let inst = uc_instance(t);
        *inst = flip_gamma(inst, 0)?;
        Ok(true)
    }))?;
    c.fault(v[0], "Gamma answers the wrong bit on input 0", &t);

    let t = isolate(v[1], each(&|t| {
        uc_instance(t).case = CaseTag::Case1 { k: 0 };
        Ok(true)
    }))?;
    c.fault(v[1], "a case 2 instance declared as case 1", &t);

    let t = isolate(v[2], each(&|t| {
        let m = &mut uc_run(t).m.values;
        let last = m.len() - 1;
        m[last] += 1;
        Ok(true)
    }))?;
    c.fault(v[2], "the last recorded block boundary moved up by one", &t);

    let t = isolate(v[3], each(&|t| {
        let z = &mut uc_run(t).z;
        let first = z.remove(0);
        z.insert(0, if first == '1' { '0' } else { '1' });
        Ok(true)
    }))?;
    c.fault(v[3], "the first bit of Z flipped", &t);

    let t = isolate(v[4], each(&|t| {
        let d = &mut uc_run(t).decoded[0];
        d.1 += 1;
        Ok(true)
    }))?;
    c.fault(v[4], "a block's recorded decode stage moved", &t);

    let t = isolate(v[5], each(&|t| {
        let inst = uc_instance(t).clone();
        let run = uc_run(t);
        let lo = run.m.values[0];
        let filled = run.m.block(0).find(|&y| inst.a.contains(y) || inst.b.contains(y));
        match filled {
            Some(y) if (y as i64) > lo => {
                run.holes[0] = y;
                Ok(true)
            }
            _ => Ok(false),
        }
    }))?;
    c.fault(v[5], "a recorded hole that is filled", &t);

    let t = isolate(v[6], each(&|t| {
        let r = &mut uc_run(t).recovered[0];
        r.1 += 1;
        Ok(true)
    }))?;
    c.fault(v[6], "a recovery recorded at the wrong stage", &t);
    Ok(())
}

fn ns_pipeline(t: &mut ConstructionTrace) -> &mut nosupermax::Pipeline {
    match &mut t.body {
        TraceBody::Nosupermax(p) => p,
        _ => unreachable!("nosupermax body"),
    }
}

fn ns_sets(t: &mut ConstructionTrace) -> (&mut StageSet, &mut StageSet) {
    match &mut t.scenario.body {
        ScenarioBody::Nosupermax { a, b, .. } => (a, b),
        _ => unreachable!("nosupermax scenario"),
    }
}

/// Stages at which some index of the single attempt resets.
fn reset_stages(t: &nosupermax::AttemptTrace) -> Vec<Stage> {
    (2..=t.horizon)
        .filter(|&r| {
            let (cur, prev) = (&t.boundary[r], &t.boundary[r - 1]);
            let top = (r - 1) as i64;
            (1..cur.len().min(prev.len())).any(|i| cur[i] == top && prev[i] != top && cur[i - 1] == prev[i - 1] && prev[i - 1] < prev[i])
        })
        .collect()
}

fn nosupermax_faults(c: &mut Corpus) -> Result<()> {
    let v = nosupermax::VERDICTS;
    let h = 160;
    let (_, _, certs) = chaser(0, h)?;
    let (a, b) = random_sets(0, h)?;
    let single = nosupermax_scenario(a.clone(), b.clone(), Vec::new());
    let base = run(&single)?;
    let attempt = ns_pipeline(&mut base.clone()).attempts[0].clone();
    let x_snaps = attempt.x_snapshots();
    let union = |y: usize| a.contains(y) || b.contains(y);

    let t = isolate(
        v[0],
        (1..=h).flat_map(|s| {
            let entering: Vec<usize> = x_snaps[s].iter().copied().filter(|y| !x_snaps[s - 1].contains(y) && !union(*y)).collect();
            let base = &base;
            entering.into_iter().filter_map(move |y| {
                let mut t = base.clone();
                let (_, b) = ns_sets(&mut t);
                *b = with(b, y, s).ok()?;
                t.rehash();
                Some(t)
            })
        }),
    )?;
    c.fault(v[0], "B receives a number as it enters X", &t);

    let far = h + 5;
    let t = isolate(
        v[1],
        (0..h - 1).map(|s| {
            let mut t = base.clone();
            let xc = &mut ns_pipeline(&mut t).attempts[0].x_changes;
            xc[s + 1].push(far);
            xc[s + 2].push(far);
            t
        }),
    )?;
    c.fault(v[1], "a large number toggled into X and out again", &t);

    let t = isolate(
        v[2],
        (0..=h).filter(|&s| !attempt.w_entries[s].is_empty()).map(|s| {
            let mut t = base.clone();
            ns_pipeline(&mut t).attempts[0].w_entries[s].pop();
            t
        }),
    )?;
    c.fault(v[2], "a W-entry dropped from the record", &t);

    let t = isolate(
        v[3],
        (2..=h).flat_map(|s| {
            let base = &base;
            (1..attempt.boundary[s].len()).filter_map(move |i| {
                let mut t = base.clone();
                let bd = &mut ns_pipeline(&mut t).attempts[0].boundary[s];
                bd[i] -= 1;
                (bd[i] > bd[i - 1]).then_some(t)
            })
        }),
    )?;
    c.fault(v[3], "one boundary value lowered at one stage", &t);

    // Resets are faked on the last stage of a run cut short, so no later
    // stage has to agree with them.
    let cut = |r: Stage| -> Result<ConstructionTrace> { run(&single.with_horizon(r)?) };
    let t = isolate(
        v[4],
        (3..=h).flat_map(|r| {
            let Ok(t0) = cut(r) else { return Vec::new() };
            let mut probe = t0.clone();
            let prev = ns_pipeline(&mut probe).attempts[0].boundary[r - 1].clone();
            (1..prev.len())
                .rev()
                .map(|i| {
                    let mut t = t0.clone();
                    let mut fake = prev[..i].to_vec();
                    fake.push((r - 1) as i64);
                    ns_pipeline(&mut t).attempts[0].boundary[r] = fake;
                    t
                })
                .collect()
        }),
    )?;
    c.fault(v[4], "a reset recorded while the interval kept its role", &t);

    let t = isolate(
        v[5],
        reset_stages(&attempt).into_iter().filter_map(|r| {
            let mut t = cut(r).ok()?;
            let xc = &mut ns_pipeline(&mut t).attempts[0].x_changes[r];
            let hole = r - 1;
            match xc.iter().position(|&y| y == hole) {
                Some(p) => {
                    xc.remove(p);
                }
                None => xc.push(hole),
            }
            Some(t)
        }),
    )?;
    c.fault(v[5], "the new hole after a reset placed against its interval's role", &t);

    let (a, b, _) = chaser(0, h)?;
    let rejected: Vec<ConstructionTrace> = (0..certs.len())
        .filter_map(|which| {
            let mut bad = certs.clone();
            bad[which].parity = match bad[which].parity {
                Parity::Odd => Parity::Even,
                Parity::Even => Parity::Odd,
            };
            run(&nosupermax_scenario(a.clone(), b.clone(), bad)).ok()
        })
        .collect();
    let t = isolate(
        v[6],
        rejected.iter().flat_map(|t| {
            (0..ns_pipeline(&mut t.clone()).speedups.len()).filter_map(move |i| {
                let mut t = t.clone();
                let o = &mut ns_pipeline(&mut t).speedups[i];
                o.witness_stage = Some(o.witness_stage? + 1);
                Some(t)
            })
        }),
    )?;
    c.fault(v[6], "a rejection recorded with the wrong witness stage", &t);
    Ok(())
}

fn td_parts(t: &mut ConstructionTrace) -> (&mut Vec<TdEvent>, &mut Vec<twodegrees::VeAxiom>, &mut StageSet, &mut StageSet) {
    match &mut t.body {
        TraceBody::Twodegrees { events, axioms, a, b } => (events, axioms, a, b),
        _ => unreachable!("twodegrees body"),
    }
}

fn twodegrees_faults(c: &mut Corpus) -> Result<()> {
    let v = twodegrees::VERDICTS;
    let h = 40;
    let base = run(&skipping_twodegrees(h)?)?;

    // Fire the column on <2, 0>, which is already in A.
    let mut t = base.clone();
    let (events, _, _, b) = td_parts(&mut t);
    for ev in events.iter_mut() {
        if let TdEvent::PFired { i, code, skipped, .. } = ev {
            (*i, *code) = (0, pair(2, 0));
            skipped.clear();
        }
    }
    *b = StageSet::from_events([(pair(2, 0), 20)], h)?;
    let t = isolate(v[0], [t])?;
    c.fault(v[0], "a column fires on a code already promoted into A", &t);

    let t = isolate(
        v[1],
        [11, 12, 13].map(|x| {
            let mut t = base.clone();
            let (events, axioms, _, _) = td_parts(&mut t);
            axioms[0].x = x;
            for ev in events.iter_mut() {
                if let TdEvent::AxiomCreated { x: ex, .. } = ev {
                    *ex = x;
                }
            }
            t
        }),
    )?;
    c.fault(v[1], "an axiom's witness changed to one its computation does not support", &t);

    let blocked = run(&Scenario::new(ScenarioBody::Twodegrees(TwoDegreesInput {
        horizon: h,
        c: StageSet::from_events([(2, 20)], h)?,
        k: StageSet::new(h),
        w: Vec::new(),
        phi: vec![zero_at(8)?],
        column_guard: true,
    })))?;
    let mut t = blocked;
    let (events, _, _, b) = td_parts(&mut t);
    for ev in events.iter_mut() {
        if let TdEvent::PFired { i, code, skipped, .. } = ev {
            (*i, *code) = (0, pair(2, 0));
            skipped.clear();
        }
    }
    *b = StageSet::from_events([(pair(2, 0), 20)], h)?;
    let t = isolate(v[2], [t])?;
    c.fault(v[2], "a column fires on a blocked code", &t);

    let sc = Scenario::new(ScenarioBody::Twodegrees(TwoDegreesInput {
        horizon: 30,
        c: StageSet::new(30),
        k: StageSet::new(30),
        w: Vec::new(),
        phi: vec![zero_at(0)?],
        column_guard: false,
    }))
    .described("witness search without the column floor");
    let t = isolate(v[3], [run(&sc)?])?;
    c.fault(v[3], "without the floor a witness lands in column 0, which has a single code", &t);

    let sc = Scenario::new(ScenarioBody::Twodegrees(TwoDegreesInput {
        horizon: 30,
        c: StageSet::new(30),
        k: StageSet::from_events([(0, 10)], 30)?,
        w: Vec::new(),
        phi: [2, 4, 5, 6, 7].map(zero_at).into_iter().collect::<Result<_>>()?,
        column_guard: false,
    }))
    .described("witness search without the column floor, all promoted");
    let t = isolate(v[4], [run(&sc)?])?;
    c.fault(v[4], "without the floor five small codes are promoted into A", &t);

    let mut t = base;
    let (_, _, _, b) = td_parts(&mut t);
    *b = with(b, 10, 30)?;
    let t = isolate(v[5], [t])?;
    c.fault(v[5], "a second code of a fired column in B", &t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::trace::ConstructionTrace;

    #[test]
    fn fault_fixtures_isolate_and_round_trip() {
        let mut c = Corpus::default();
        twodegrees_faults(&mut c).unwrap();
        upclosure_faults(&mut c).unwrap();
        assert_eq!(c.entries.len(), 13);
        for (entry, text) in &c.entries {
            let t = ConstructionTrace::parse(text).unwrap();
            assert_eq!(t.to_jsonl(), *text);
            assert_eq!(verify(&t).failing(), vec![entry.verdict.as_deref().unwrap()]);
        }
    }
}
