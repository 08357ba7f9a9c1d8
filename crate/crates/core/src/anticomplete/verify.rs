//! Trace checker for the anticomplete construction. Everything is recomputed
//! from the event log and the final set logs; nothing is taken from the
//! running state.

use std::collections::{BTreeMap, BTreeSet};

use super::search::SigmaQuery;
use super::{AcEvent, Actor};
use crate::enumcore::{Stage, StageSet};
use crate::functionals::OracleProgram;
use crate::harness::report::{Counterexample, Verdict, VerificationReport};

/// Invariant names in report order.
pub const VERDICTS: [&str; 8] = [
    "wtt_promise",
    "restraint_discipline",
    "disjointness",
    "stage_bound",
    "freshness",
    "n_preservation",
    "sigma_witness",
    "entry_attribution",
];

/// The parts of a trace the checker reads.
#[derive(Debug, Clone)]
pub struct AcTrace {
    pub horizon: Stage,
    pub programs: Vec<OracleProgram>,
    pub events: Vec<AcEvent>,
    pub a: StageSet,
    pub b: StageSet,
    pub d: StageSet,
}

fn acted_stage(ev: &AcEvent) -> Option<(Actor, Stage)> {
    match ev {
        AcEvent::NActed { stage, actor, .. } | AcEvent::RActed { stage, actor, .. } => Some((*actor, *stage)),
        _ => None,
    }
}

pub fn verify_anticomplete_trace(t: &AcTrace) -> VerificationReport {
    let mut wtt = Verdict::new(VERDICTS[0], "B is wtt below A: every B-entry has a smaller A-entry at the same stage");
    let mut restraint = Verdict::new(VERDICTS[1], "no strategy enumerates below the stage it was last initialized");
    let mut disjoint = Verdict::new(VERDICTS[2], "A and B are disjoint");
    let mut bound = Verdict::new(VERDICTS[3], "numbers entering A or B at stage s+1 are below s");
    let mut fresh = Verdict::new(VERDICTS[4], "claimed numbers are large and each D-entry is a live claim");
    let mut npres = Verdict::new(VERDICTS[5], "N_k keeps its stage out of A and B once it acts");
    let mut sigma_v = Verdict::new(VERDICTS[6], "each R-action uses the least sigma agreeing with D and the least admissible m");
    let mut attrib = Verdict::new(VERDICTS[7], "every set entry comes from exactly one recorded action");

    // (i) For each stamp, compare against the least A-entry with that stamp.
    let mut a_by_stamp: BTreeMap<Stage, usize> = BTreeMap::new();
    for &(x, s) in t.a.events() {
        let e = a_by_stamp.entry(s).or_insert(x);
        *e = (*e).min(x);
    }
    for &(x, s) in t.b.events() {
        let ok = a_by_stamp.get(&s).is_some_and(|&a| a < x);
        wtt.check(ok, || {
            Counterexample::at(s, "B-entry without a smaller A-entry at the same stage").element(x)
        });
    }

    // (iii) and (iv).
    for &(x, s) in t.a.events() {
        disjoint.check(!t.b.contains(x), || Counterexample::at(s, "element in both A and B").element(x));
    }
    for (name, set) in [("A", &t.a), ("B", &t.b)] {
        for &(x, s) in set.events() {
            bound.check(s >= 1 && x + 1 < s, || {
                Counterexample::at(s, format!("{name}-entry not below the acting stage")).element(x)
            });
        }
    }

    // (ii): restraints derived from higher-priority action stages.
    let mut actions: Vec<(usize, Stage)> = Vec::new();
    let derived = |actions: &[(usize, Stage)], p: usize| {
        actions
            .iter()
            .filter(|&&(q, _)| q < p)
            .map(|&(_, s)| s + 1)
            .max()
            .unwrap_or(0)
    };

    // (v) bookkeeping.
    let mut mentioned: BTreeSet<usize> = BTreeSet::new();
    let mut last_claim: Option<usize> = None;
    let mut live: BTreeMap<Actor, usize> = BTreeMap::new();
    let mut d_counts: BTreeMap<Actor, (usize, Stage)> = BTreeMap::new();

    // (vi) bookkeeping: last acting stage and last initialization per N_k.
    let mut n_acted: BTreeMap<usize, Stage> = BTreeMap::new();
    let mut n_init: BTreeMap<usize, Stage> = BTreeMap::new();

    // (viii) bookkeeping.
    let mut attributed: [BTreeMap<usize, usize>; 3] = Default::default();
    let empty = OracleProgram::empty();

    for ev in &t.events {
        match ev {
            AcEvent::Initialized { stage, actor, .. } => {
                live.remove(actor);
                if let Actor::N(k) = actor {
                    n_init.insert(*k, *stage);
                }
            }
            AcEvent::Claimed { stage, actor, n } => {
                let s = *stage;
                // Numbers mentioned so far: earlier claims and set entries up to stage s.
                for set in [&t.a, &t.b, &t.d] {
                    for x in set.range_at(0, usize::MAX, s) {
                        mentioned.insert(x);
                    }
                }
                let above = mentioned.last().is_none_or(|&m| *n > m) && last_claim.is_none_or(|c| *n > c);
                fresh.check(above, || {
                    Counterexample::at(s, "claimed number is not larger than all earlier numbers")
                        .actor(actor)
                        .element(*n)
                });
                mentioned.insert(*n);
                last_claim = Some(*n);
                live.insert(*actor, *n);
            }
            AcEvent::NActed { stage, actor, restraint: r } => {
                if let Actor::N(k) = actor {
                    n_acted.insert(*k, *stage);
                    npres.check(*r == stage + 1, || {
                        Counterexample::at(*stage, format!("N-restraint {r} differs from stage + 1")).actor(actor)
                    });
                }
            }
            AcEvent::RActed {
                stage,
                actor,
                n,
                sigma,
                m,
                into_a,
                into_b,
                restraint: r,
            } => {
                let s = *stage;
                let p = actor.priority();
                let want_r = derived(&actions, p);
                restraint.check(*r == want_r, || {
                    Counterexample::at(s, format!("recorded restraint {r}, derived {want_r}")).actor(actor)
                });
                for &x in into_a.iter().chain(into_b) {
                    restraint.check(x >= want_r, || {
                        Counterexample::at(s, format!("enumerated below restraint {want_r}"))
                            .actor(actor)
                            .element(x)
                    });
                }

                fresh.check(live.get(actor) == Some(n), || {
                    Counterexample::at(s, "D-entry is not the strategy's live claim").actor(actor).element(*n)
                });
                live.remove(actor);
                let c = d_counts.entry(*actor).or_insert((0, s));
                *c = (c.0 + 1, s);

                // (vii) σ agrees with D and with A_s, B_s, is least, and m is least.
                let Actor::R(e) = *actor else {
                    sigma_v.fail(Counterexample::at(s, "R-action by an N strategy").actor(actor));
                    continue;
                };
                let program = t.programs.get(e).unwrap_or(&empty);
                let bits: Vec<bool> = sigma.chars().map(|c| c == '1').collect();
                sigma_v.check(bits.len() == s, || {
                    Counterexample::at(s, format!("sigma has length {}", bits.len())).actor(actor)
                });
                let consistent = bits.iter().enumerate().all(|(x, &bit)| {
                    (!t.a.contains_at(x, s) || bit) && (!t.b.contains_at(x, s) || !bit)
                });
                sigma_v.check(consistent, || {
                    Counterexample::at(s, "sigma contradicts A_s or B_s").actor(actor)
                });
                let agrees = (0..=*n).all(|y| program.evaluate(&bits, y, s).output() == Some(t.d.contains_at(y, s)));
                sigma_v.check(agrees, || {
                    Counterexample::at(s, "Phi^sigma does not match D below n+1").actor(actor).element(*n)
                });
                let least = SigmaQuery {
                    program,
                    stage: s,
                    n: *n,
                    a: &t.a,
                    b: &t.b,
                    d: &t.d,
                }
                .solve();
                sigma_v.check(matches!(&least, Ok(Some(l)) if *l == bits), || {
                    Counterexample::at(s, "sigma is not the lexicographically least solution").actor(actor)
                });
                let want_m = (want_r..s.min(bits.len())).find(|&x| bits[x] && !t.a.contains_at(x, s));
                sigma_v.check(*m == want_m, || {
                    Counterexample::at(s, format!("m = {m:?}, least admissible is {want_m:?}")).actor(actor)
                });

                for (slot, xs) in [(0, into_a.as_slice()), (1, into_b.as_slice()), (2, std::slice::from_ref(n))] {
                    for &x in xs {
                        *attributed[slot].entry(x).or_insert(0) += 1;
                        let set = [&t.a, &t.b, &t.d][slot];
                        attrib.check(set.entry_stage(x) == Some(s + 1), || {
                            Counterexample::at(s, format!("recorded entry into {} not stamped s+1", ["A", "B", "D"][slot]))
                                .actor(actor)
                                .element(x)
                        });
                    }
                }
            }
        }
        if let Some((actor, s)) = acted_stage(ev) {
            actions.push((actor.priority(), s));
        }
    }

    for (slot, set) in [&t.a, &t.b, &t.d].into_iter().enumerate() {
        for &(x, s) in set.events() {
            let count = attributed[slot].get(&x).copied().unwrap_or(0);
            attrib.check(count == 1, || {
                Counterexample::at(s, format!("{} entry attributed to {count} actions", ["A", "B", "D"][slot])).element(x)
            });
        }
    }

    for (&k, &s) in &n_acted {
        let injured = n_init.get(&k).is_some_and(|&i| i > s);
        if !injured {
            npres.check(!t.a.contains(s) && !t.b.contains(s), || {
                Counterexample::at(s, "protected stage number entered A or B")
                    .actor(Actor::N(k))
                    .element(s)
            });
        }
    }

    let mut caveats = vec![
        "finite-injury limits are not certified: D-contribution counts below are horizon-relative".to_string(),
    ];
    let window_start = t.horizon - t.horizon / 5;
    for (actor, (count, last)) in &d_counts {
        caveats.push(format!(
            "{actor}: {count} D-entries, last at stage {last}{}",
            if *last < window_start { ", flat over the final window" } else { "" }
        ));
    }

    VerificationReport {
        construction: "anticomplete".into(),
        verdicts: vec![wtt, restraint, disjoint, bound, fresh, npres, sigma_v, attrib],
        caveats,
    }
}
