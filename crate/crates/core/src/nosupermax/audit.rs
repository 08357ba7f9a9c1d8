//! Checker for three-attempt traces.
//!
//! `X` is rebuilt from the recorded change lists and `W` is derived from
//! `X`, `A`, `B` alone. Resets are read off the recorded boundaries: index
//! `j` resets at stage `r` when its value moves to `r - 1` while `x_{j-1}`
//! stays put.

use std::collections::BTreeMap;

use super::{apply_speedup, bullet3_holds, detect_outcome, in_role, restamp, AttemptTrace, Pipeline, SpeedupCertificate};
use crate::enumcore::{Stage, StageSet};
use crate::harness::report::{Counterexample, Verdict, VerificationReport};

pub const VERDICTS: [&str; 7] = [
    "separator",
    "change_discipline",
    "w_triggers",
    "boundary_shape",
    "reset_census",
    "hole_permission",
    "speedup",
];

#[derive(Debug, Clone)]
pub struct NsTrace {
    pub horizon: Stage,
    pub a: StageSet,
    pub b: StageSet,
    pub certificates: Vec<SpeedupCertificate>,
    pub window: Option<usize>,
    pub pipeline: Pipeline,
}

/// Per-element change stages, for membership queries at any stage.
struct History(BTreeMap<usize, Vec<Stage>>);

impl History {
    fn of(t: &AttemptTrace) -> Self {
        let mut m: BTreeMap<usize, Vec<Stage>> = BTreeMap::new();
        for (s, ch) in t.x_changes.iter().enumerate() {
            for &y in ch {
                m.entry(y).or_default().push(s);
            }
        }
        History(m)
    }

    fn at(&self, y: usize, s: Stage) -> bool {
        self.0.get(&y).is_some_and(|v| v.partition_point(|&c| c <= s) % 2 == 1)
    }

    /// Whether `y` has membership `want` at some stage in `[lo, hi]`.
    fn ever(&self, y: usize, want: bool, lo: Stage, hi: Stage) -> bool {
        if self.at(y, lo) == want {
            return true;
        }
        self.0
            .get(&y)
            .is_some_and(|v| v.iter().any(|&c| c > lo && c <= hi))
    }
}

/// `z ∈ X_s ∩ B_{s+1}` or `z ∈ co-X_s ∩ A_{s+1}` among the new entries.
fn triggers(hist: &History, a: &StageSet, b: &StageSet, s: Stage) -> Vec<usize> {
    let mut v: Vec<usize> = b
        .entered_at(s + 1)
        .iter()
        .copied()
        .filter(|&z| hist.at(z, s))
        .chain(a.entered_at(s + 1).iter().copied().filter(|&z| !hist.at(z, s)))
        .collect();
    v.sort_unstable();
    v
}

fn in_union(a: &StageSet, b: &StageSet, y: usize, s: Stage) -> bool {
    a.contains_at(y, s) || b.contains_at(y, s)
}

struct Verdicts {
    sep: Verdict,
    disc: Verdict,
    wt: Verdict,
    shape: Verdict,
    census: Verdict,
    holes: Verdict,
    speed: Verdict,
}

/// An earlier attempt together with the certificate of its failure.
struct Prior<'a> {
    trace: &'a AttemptTrace,
    hist: History,
    cert: &'a SpeedupCertificate,
}

fn check_attempt(t: &AttemptTrace, a: &StageSet, b: &StageSet, orig: (&StageSet, &StageSet), priors: &[Prior<'_>], v: &mut Verdicts) {
    let actor = format!("X{}", t.attempt);
    let hist = History::of(t);
    let h = t.horizon;

    // Separator, change discipline, W.
    let mut in_w: BTreeMap<usize, Stage> = BTreeMap::new();
    for s in 0..=h {
        for &(y, e) in a.events() {
            if e <= s {
                v.sep.check(hist.at(y, s), || Counterexample::at(s, "A-member outside X").actor(&actor).element(y));
            }
        }
        for &(y, e) in b.events() {
            if e <= s {
                v.sep.check(!hist.at(y, s), || Counterexample::at(s, "B-member inside X").actor(&actor).element(y));
            }
        }
        if s == h {
            break;
        }
        let trig = triggers(&hist, a, b, s);
        let zmin = trig.first().copied();
        let w_new: Vec<usize> = trig.iter().copied().filter(|z| !in_w.contains_key(z)).collect();
        for &z in &w_new {
            in_w.insert(z, s + 1);
        }
        let changed = t.x_changes.get(s + 1).map(Vec::as_slice).unwrap_or(&[]);
        for &x in changed {
            let was = hist.at(x, s);
            let ok = (was && b.contains_at(x, s + 1) && !b.contains_at(x, s))
                || (!was && a.contains_at(x, s + 1) && !a.contains_at(x, s))
                || zmin.is_some_and(|z| z < x)
                || x == s;
            v.disc.check(ok, || Counterexample::at(s + 1, "X changed with no trigger below it").actor(&actor).element(x));
            if s > x {
                v.wt.check(w_new.iter().any(|&z| z <= x), || {
                    Counterexample::at(s + 1, "X changed below the stage with no W-entry at or below it")
                        .actor(&actor)
                        .element(x)
                });
            }
        }
        for &z in &w_new {
            v.wt.check(changed.contains(&z), || Counterexample::at(s + 1, "W-entry without an X change").actor(&actor).element(z));
        }
        let recorded = t.w_entries.get(s + 1).cloned().unwrap_or_default();
        v.wt.check(recorded == w_new, || {
            Counterexample::at(s + 1, format!("recorded W-entries {recorded:?}, derived {w_new:?}")).actor(&actor)
        });
    }

    // Boundary shape.
    for s in 1..=h {
        let cur = &t.boundary[s];
        let prev = &t.boundary[s - 1];
        let top = (s - 1) as i64;
        let ok_ends = cur.first() == Some(&t.base) && (cur.last() == Some(&top) || (t.base >= top && cur.len() == 1));
        v.shape.check(ok_ends, || Counterexample::at(s, format!("sequence {cur:?} does not run from the base to s")).actor(&actor));
        v.shape.check(cur.windows(2).all(|w| w[0] < w[1]), || {
            Counterexample::at(s, "sequence not strictly increasing").actor(&actor)
        });
        for (i, (&new, &old)) in cur.iter().zip(prev).enumerate().skip(1) {
            v.shape.check(new == old || new == top, || {
                Counterexample::at(s, format!("x_{} moved from {old} to {new}", i as i64 - 1)).actor(&actor)
            });
        }
    }

    // Resets: census and hole permission.
    for r in 2..=h {
        let cur = &t.boundary[r];
        let prev = &t.boundary[r - 1];
        let top = (r - 1) as i64;
        for i in 1..cur.len().min(prev.len()) {
            let j = i as i64 - 1;
            let (old, new) = (prev[i], cur[i]);
            if new != top || old == new || cur[i - 1] != prev[i - 1] || prev[i - 1] >= old {
                continue;
            }
            let lo = cur[i - 1];
            let role = in_role(j, t.flip);
            let mut s0 = r - 1;
            while s0 > 1 && t.x_at(j, s0 - 1) == Some(old) && t.x_at(j - 1, s0 - 1) == Some(lo) {
                s0 -= 1;
            }
            for y in (lo + 1) as usize..=old as usize {
                if !in_union(a, b, y, r) {
                    v.census.check(!hist.ever(y, role, s0, r - 1), || {
                        Counterexample::at(r, format!("x_{j} reset although {y} kept its role since stage {s0}"))
                            .actor(&actor)
                            .element(y)
                    });
                }
            }

            let s = r - 1;
            let zmin = triggers(&hist, a, b, s).first().copied();
            let route: Option<usize> = ((lo + 1) as usize..=old as usize).find(|&y| {
                if role {
                    hist.at(y, s) && a.contains_at(y, r) && !a.contains_at(y, s)
                } else {
                    !hist.at(y, s) && b.contains_at(y, r) && !b.contains_at(y, s)
                }
            });
            for hole in (old + 1) as usize..=s {
                if in_union(a, b, hole, r) {
                    continue;
                }
                let permitted = hole == s || zmin.is_some_and(|z| z < hole);
                v.holes.check(permitted || route.is_some(), || {
                    Counterexample::at(r, format!("hole above the reset x_{j} neither permitted nor explained"))
                        .actor(&actor)
                        .element(hole)
                });
                if permitted {
                    v.holes.check(hist.at(hole, r) == role, || {
                        Counterexample::at(r, format!("permitted hole did not follow the role of interval {j}"))
                            .actor(&actor)
                            .element(hole)
                    });
                }
            }
            // A route witness is not yet in A (or B) at stage s, so every
            // earlier certificate's third bullet pins its membership there.
            if let Some(y) = route {
                let o = t.stage_map[s];
                for p in priors {
                    let Some(u) = p.trace.stage_map.iter().position(|&g| g == o) else {
                        v.holes.fail(Counterexample::at(r, "stage missing from an earlier timeline").actor(&actor));
                        continue;
                    };
                    let k_in = in_role(p.cert.k, p.trace.flip);
                    v.holes.check(bullet3_holds(y, k_in, p.hist.at(y, u), orig.0, orig.1, o), || {
                        Counterexample::at(r, format!("route witness contradicts the certificate of attempt {}", p.trace.attempt))
                            .actor(&actor)
                            .element(y)
                    });
                }
            }
        }
    }
}

/// Re-checks the three bullets for an accepted certificate, positionwise.
fn check_bullets(t: &AttemptTrace, a: &StageSet, b: &StageSet, cert: &SpeedupCertificate, map: &[Stage], v: &mut Verdict) {
    let h = t.horizon;
    let hist = History::of(t);
    let actor = format!("X{}", t.attempt);
    for n in 0..cert.k {
        let limit = t.x_at(n, h);
        for u in cert.settling_stage..=h {
            v.check(limit.is_some() && t.x_at(n, u) == limit, || {
                Counterexample::at(u, format!("x_{n} not at its final value")).actor(&actor)
            });
        }
    }
    let base = t.x_at(cert.ell, h).unwrap_or(t.base);
    let k_in = in_role(cert.k, t.flip);
    for (i, &u) in map.iter().enumerate() {
        v.check(u >= cert.settling_stage && (i == 0 || map[i - 1] < u), || {
            Counterexample::at(u, "selected stages not increasing from the settling stage").actor(&actor)
        });
        v.check(t.x_at(cert.k, u).is_some_and(|x| x > i as i64), || {
            Counterexample::at(u, format!("x_{} not above the new stage {i}", cert.k)).actor(&actor)
        });
        for y in (base + 1).max(0) as usize..=i {
            v.check(bullet3_holds(y, k_in, hist.at(y, u), a, b, u), || {
                Counterexample::at(u, format!("third bullet fails at new stage {i}")).actor(&actor).element(y)
            });
        }
    }
}

pub fn verify_nosupermax_trace(tr: &NsTrace) -> VerificationReport {
    let mut v = Verdicts {
        sep: Verdict::new(VERDICTS[0], "A_s is inside X_s and X_s misses B_s at every stage"),
        disc: Verdict::new(VERDICTS[1], "every X change is an A- or B-hit, lies above one, or is the current stage"),
        wt: Verdict::new(VERDICTS[2], "W-entries change X, and X changes below the stage have a W-entry at or below them"),
        shape: Verdict::new(VERDICTS[3], "boundaries increase strictly, end at the stage, and move only to the stage"),
        census: Verdict::new(VERDICTS[4], "a reset interval holds no number that kept the interval's role"),
        holes: Verdict::new(VERDICTS[5], "holes above a reset are permitted and follow the role, unless a prior failure explains them"),
        speed: Verdict::new(VERDICTS[6], "accepted certificates satisfy all three bullets on every selected stage"),
    };
    let p = &tr.pipeline;
    let mut caveats = vec!["attempt outcomes are horizon-relative: limits are reported as values at the horizon".to_string()];

    let mut priors: Vec<Prior<'_>> = Vec::new();
    for (i, t) in p.attempts.iter().enumerate() {
        let a = restamp(&tr.a, &t.stage_map);
        let b = restamp(&tr.b, &t.stage_map);
        check_attempt(t, &a, &b, (&tr.a, &tr.b), &priors, &mut v);

        let window = tr.window.unwrap_or(t.horizon / 5);
        if let Ok(rep) = detect_outcome(t, &a, &b, window.min(t.horizon)) {
            caveats.push(format!(
                "attempt {}: x_0..x_{} unchanged over the last {window} stages, x_{} moving",
                t.attempt, rep.ell, rep.k
            ));
        }

        let Some(recorded) = p.speedups.get(i) else {
            continue;
        };
        let Some(cert) = tr.certificates.get(i) else {
            v.speed.fail(Counterexample::at(t.horizon, "speedup record without a certificate"));
            continue;
        };
        let prior = i.checked_sub(1).and_then(|j| tr.certificates.get(j));
        match apply_speedup(t, &a, &b, cert, prior, tr.window) {
            Ok(again) => v.speed.check(&again == recorded, || {
                Counterexample::at(t.horizon, format!("recorded outcome {recorded:?} differs from the recomputation {again:?}"))
            }),
            Err(e) => v.speed.fail(Counterexample::at(t.horizon, format!("certificate check errored: {e}"))),
        }
        if recorded.accepted {
            check_bullets(t, &a, &b, cert, &recorded.stage_map, &mut v.speed);
            let next = p.attempts.get(i + 1);
            let want_map: Vec<Stage> = recorded.stage_map.iter().map(|&u| t.stage_map[u]).collect();
            let want_base = t.x_at(cert.ell, t.horizon).unwrap_or(t.base);
            let want_flip = if i == 0 { !in_role(cert.k, false) } else { t.flip };
            v.speed.check(
                next.is_some_and(|n| n.stage_map == want_map && n.base == want_base && n.flip == want_flip),
                || Counterexample::at(t.horizon, "next attempt does not run on the certified timeline"),
            );
        } else {
            v.speed.check(recorded.witness_stage.is_some() && p.attempts.len() == i + 1, || {
                Counterexample::at(t.horizon, "rejection without a witness stage, or a later attempt ran anyway")
            });
        }
        priors.push(Prior {
            trace: t,
            hist: History::of(t),
            cert,
        });
    }
    let expected = tr.certificates.len().min(2);
    let stopped = p.speedups.last().is_some_and(|o| !o.accepted);
    v.speed.check(p.speedups.len() == expected || stopped, || {
        Counterexample::at(tr.horizon, format!("{} certificates but {} speedup records", expected, p.speedups.len()))
    });

    VerificationReport {
        construction: "nosupermax".into(),
        verdicts: vec![v.sep, v.disc, v.wt, v.shape, v.census, v.holes, v.speed],
        caveats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nosupermax::{chaser_scenario, run_pipeline, ChaserParams};

    fn trace(a: StageSet, b: StageSet, h: Stage, certificates: Vec<SpeedupCertificate>) -> NsTrace {
        let pipeline = run_pipeline(&a, &b, h, &certificates, None).unwrap();
        NsTrace {
            horizon: h,
            a,
            b,
            certificates,
            window: None,
            pipeline,
        }
    }

    fn chaser(seed: u64, h: Stage, second: bool) -> NsTrace {
        let (a, b, certs) = chaser_scenario(ChaserParams {
            horizon: h,
            seed,
            delay_a: (1, 4),
            delay_b: (1, 4),
            chase_second: second,
        })
        .unwrap();
        trace(a, b, h, certs)
    }

    #[test]
    fn empty_sets_are_clean() {
        let t = trace(StageSet::new(120), StageSet::new(120), 120, vec![]);
        let r = verify_nosupermax_trace(&t);
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn chaser_runs_reach_attempt_three_clean() {
        for seed in 0..3 {
            let t = chaser(seed, 300, true);
            let r = verify_nosupermax_trace(&t);
            assert!(r.passed(), "seed {seed}\n{}", r.render());
            assert_eq!(t.pipeline.attempts.len(), 3, "{:?}", t.pipeline.speedups);
        }
    }
}
