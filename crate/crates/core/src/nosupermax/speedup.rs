//! Outcome detection and certificate-driven re-indexing between attempts.

use serde::{Deserialize, Serialize};

use super::{in_role, AttemptTrace, XCursor};
use crate::enumcore::{Stage, StageSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(n: i64) -> Parity {
        if n.rem_euclid(2) == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

/// Claimed failure of one attempt: `x_0 … x_ell` have settled by
/// `settling_stage` and `x_k`, `k = ell + 1`, never does.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeedupCertificate {
    pub attempt: usize,
    pub ell: i64,
    pub k: i64,
    pub parity: Parity,
    pub settling_stage: Stage,
}

/// Result of validating a certificate against the certified attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeedupOutcome {
    pub attempt: usize,
    pub accepted: bool,
    pub reason: Option<String>,
    pub witness_stage: Option<Stage>,
    /// Stage `t` of the next attempt is stage `stage_map[t]` of the
    /// certified attempt.
    pub stage_map: Vec<Stage>,
}

impl SpeedupOutcome {
    fn reject(attempt: usize, stage: Stage, reason: impl Into<String>) -> Self {
        SpeedupOutcome {
            attempt,
            accepted: false,
            reason: Some(reason.into()),
            witness_stage: Some(stage),
            stage_map: Vec::new(),
        }
    }
}

/// Re-stamps `set` onto a subsequence of its stages: an element entering at
/// `u` enters at the least `t` with `map[t] ≥ u`, or not at all.
pub fn restamp(set: &StageSet, map: &[Stage]) -> StageSet {
    let horizon = map.len().saturating_sub(1);
    let mut out = StageSet::new(horizon);
    let mut events: Vec<(usize, Stage)> = set
        .events()
        .iter()
        .filter_map(|&(x, u)| {
            let t = map.partition_point(|&g| g < u);
            (t < map.len()).then_some((x, t))
        })
        .collect();
    events.sort_by_key(|&(x, t)| (t, x));
    for (x, t) in events {
        out.enumerate(x, t).expect("stamps fit the new horizon");
    }
    out
}

/// The third bullet at one stage: for an in-role `k`, `y ∈ A_u ∪ co-X_u`;
/// for an out-role `k`, `y ∈ X_u ∪ B_u`.
pub fn bullet3_holds(y: usize, k_in: bool, in_x: bool, a: &StageSet, b: &StageSet, u: Stage) -> bool {
    if k_in {
        a.contains_at(y, u) || !in_x
    } else {
        in_x || b.contains_at(y, u)
    }
}

/// Validates `cert` against `trace` (whose timeline sets are `a`, `b`) and
/// selects the stages of the next attempt.
///
/// Stage `t` of the next attempt is the least stage `u ≥ settling_stage`
/// after the previous selection where `x_k` is defined and `> t` and every
/// `y ∈ (x_ell, t]` satisfies the third bullet. The first bullet (`x_n`
/// constant for `n < k`) is checked at every stage from `settling_stage`.
pub fn apply_speedup(
    trace: &AttemptTrace,
    a: &StageSet,
    b: &StageSet,
    cert: &SpeedupCertificate,
    prior: Option<&SpeedupCertificate>,
    window: Option<usize>,
) -> Result<SpeedupOutcome> {
    let h = trace.horizon;
    let window = window.unwrap_or(h / 5);
    if window > h {
        return Err(Error::WindowExceedsHorizon { window, horizon: h });
    }
    let at = trace.attempt;
    let settle = cert.settling_stage;
    if cert.attempt != at {
        return Ok(SpeedupOutcome::reject(at, settle, format!("certificate names attempt {}", cert.attempt)));
    }
    if cert.ell < -1 || cert.k != cert.ell + 1 {
        return Ok(SpeedupOutcome::reject(at, settle, "k must equal ell + 1"));
    }
    if Parity::of(cert.k) != cert.parity {
        return Ok(SpeedupOutcome::reject(at, settle, "declared parity does not match k"));
    }
    if settle > h {
        return Ok(SpeedupOutcome::reject(at, h, "settling stage beyond the horizon"));
    }
    let k_in = in_role(cert.k, trace.flip);
    if let Some(p) = prior {
        if in_role(p.k, false) == k_in {
            return Ok(SpeedupOutcome::reject(at, settle, "fails in the same manner as the previous attempt"));
        }
    }

    for n in 0..cert.k {
        let limit = trace.x_at(n, h);
        if limit.is_none() {
            return Ok(SpeedupOutcome::reject(at, h, format!("x_{n} undefined at the horizon")));
        }
        if let Some(u) = (settle..=h).find(|&u| trace.x_at(n, u) != limit) {
            return Ok(SpeedupOutcome::reject(at, u, format!("x_{n} moves at stage {u}")));
        }
    }
    // A finite run can only show divergence as movement late in the run.
    let moved = |u: Stage| matches!((trace.x_at(cert.k, u - 1), trace.x_at(cert.k, u)), (Some(p), Some(q)) if p != q);
    if !(h - window + 1..=h).any(|u| u >= 1 && moved(u)) {
        let last = (1..=h).rev().find(|&u| moved(u)).unwrap_or(settle);
        return Ok(SpeedupOutcome::reject(at, last, format!("x_{} does not move in the final window", cert.k)));
    }
    let base = trace.x_at(cert.ell, h).unwrap_or(trace.base);

    let mut map = Vec::new();
    let mut cursor = XCursor::new(trace);
    for u in settle..=h {
        cursor.advance_to(u);
        let t = map.len() as i64;
        let second = trace.x_at(cert.k, u).is_some_and(|v| v > t);
        let third = second
            && ((base + 1).max(0)..=t).all(|y| bullet3_holds(y as usize, k_in, cursor.contains(y as usize), a, b, u));
        if third {
            map.push(u);
        }
    }
    let Some(&last) = map.last() else {
        return Ok(SpeedupOutcome::reject(at, settle, "no qualifying stages"));
    };
    if h - last > window {
        return Ok(SpeedupOutcome::reject(at, last, format!("stalled: no qualifying stage after {last}")));
    }
    Ok(SpeedupOutcome {
        attempt: at,
        accepted: true,
        reason: None,
        witness_stage: None,
        stage_map: map,
    })
}

/// A hole of `A ∪ B` at the horizon inside one settled interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalWitness {
    pub n: i64,
    pub lo: i64,
    pub hi: i64,
    /// Least hole whose `X`-membership matches the interval's role.
    pub hole: Option<usize>,
}

/// Horizon-relative description of how an attempt is doing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub attempt: usize,
    pub ell: i64,
    pub k: i64,
    /// Role of `x_k`'s interval: true when it tries to put holes into `X`.
    pub k_in: bool,
    pub settling_stage: Stage,
    /// `(value at horizon, last change stage)` for `x_0 … x_ell`.
    pub entries: Vec<(i64, Stage)>,
    pub witnesses: Vec<IntervalWitness>,
}

/// Longest prefix of the boundary unchanged over the final `window`
/// stages, with a parity witness per settled interval.
pub fn detect_outcome(trace: &AttemptTrace, a: &StageSet, b: &StageSet, window: usize) -> Result<OutcomeReport> {
    let h = trace.horizon;
    if window > h {
        return Err(Error::WindowExceedsHorizon { window, horizon: h });
    }
    let from = h - window;
    let mut entries = Vec::new();
    let mut n = 0i64;
    while let Some(v) = trace.x_at(n, h) {
        if (from..=h).any(|u| trace.x_at(n, u) != Some(v)) {
            break;
        }
        let mut since = from;
        while since > 0 && trace.x_at(n, since - 1) == Some(v) {
            since -= 1;
        }
        entries.push((v, since));
        n += 1;
    }
    let ell = n - 1;
    let settling_stage = entries.iter().map(|e| e.1).max().unwrap_or(0);

    let mut cursor = XCursor::new(trace);
    cursor.advance_to(h);
    let mut witnesses = Vec::new();
    let mut lo = trace.base;
    for (i, &(hi, _)) in entries.iter().enumerate() {
        let want_in = in_role(i as i64, trace.flip);
        let hole = ((lo + 1).max(0)..=hi)
            .map(|y| y as usize)
            .find(|&y| !a.contains_at(y, h) && !b.contains_at(y, h) && cursor.contains(y) == want_in);
        witnesses.push(IntervalWitness { n: i as i64, lo, hi, hole });
        lo = hi;
    }
    Ok(OutcomeReport {
        attempt: trace.attempt,
        ell,
        k: ell + 1,
        k_in: in_role(ell + 1, trace.flip),
        settling_stage,
        entries,
        witnesses,
    })
}

/// The certificate a report suggests.
pub fn propose_certificate(report: &OutcomeReport) -> SpeedupCertificate {
    SpeedupCertificate {
        attempt: report.attempt,
        ell: report.ell,
        k: report.k,
        parity: Parity::of(report.k),
        settling_stage: report.settling_stage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nosupermax::run_attempt_raw;

    fn run(a: &StageSet, b: &StageSet, h: Stage) -> AttemptTrace {
        run_attempt_raw(1, a, b, h, -1, false, (0..=h).collect()).unwrap()
    }

    #[test]
    fn restamp_moves_entries_forward() {
        let a = StageSet::from_events([(1, 0), (2, 3), (3, 4), (4, 9)], 10).unwrap();
        let r = restamp(&a, &[2, 4, 6]);
        assert_eq!(r.entry_stage(1), Some(0));
        assert_eq!(r.entry_stage(2), Some(1));
        assert_eq!(r.entry_stage(3), Some(1));
        assert_eq!(r.entry_stage(4), None);
        assert_eq!(r.horizon(), 2);
    }

    #[test]
    fn empty_sets_settle_with_witnesses_everywhere() {
        let e = StageSet::new(200);
        let t = run(&e, &e, 200);
        let rep = detect_outcome(&t, &e, &e, 40).unwrap();
        assert!(rep.ell >= 100, "ell = {}", rep.ell);
        assert!(rep.witnesses.iter().all(|w| w.hole.is_some()));
        // Nothing is failing, so the suggested certificate stalls.
        let cert = propose_certificate(&rep);
        let out = apply_speedup(&t, &e, &e, &cert, None, None).unwrap();
        assert!(!out.accepted);
        assert!(out.witness_stage.is_some());
    }

    #[test]
    fn window_beyond_horizon() {
        let e = StageSet::new(10);
        let t = run(&e, &e, 10);
        assert_eq!(
            detect_outcome(&t, &e, &e, 11),
            Err(Error::WindowExceedsHorizon { window: 11, horizon: 10 })
        );
    }

    #[test]
    fn everything_above_ten_covered() {
        // A ∪ B eventually contains every number above 10.
        let h = 300;
        let ev: Vec<(usize, Stage)> = (11..h).map(|y| (y, y + 1)).collect();
        let a = StageSet::from_events(ev.iter().copied().filter(|e| e.0 % 2 == 0), h).unwrap();
        let b = StageSet::from_events(ev.iter().copied().filter(|e| e.0 % 2 == 1), h).unwrap();
        let t = run(&a, &b, h);
        let rep = detect_outcome(&t, &a, &b, 60).unwrap();
        assert!(rep.entries.iter().all(|e| e.0 <= 11), "{rep:?}");
        for w in &rep.witnesses {
            if let Some(y) = w.hole {
                assert!(y <= 10);
            }
        }
    }

    #[test]
    fn malformed_certificates_rejected() {
        let e = StageSet::new(50);
        let t = run(&e, &e, 50);
        let good = SpeedupCertificate {
            attempt: 1,
            ell: 0,
            k: 1,
            parity: Parity::Odd,
            settling_stage: 2,
        };
        for bad in [
            SpeedupCertificate { k: 2, ..good.clone() },
            SpeedupCertificate { parity: Parity::Even, ..good.clone() },
            SpeedupCertificate { attempt: 2, ..good.clone() },
            SpeedupCertificate { settling_stage: 99, ..good.clone() },
        ] {
            let out = apply_speedup(&t, &e, &e, &bad, None, None).unwrap();
            assert!(!out.accepted && out.witness_stage.is_some(), "{bad:?}");
        }
    }
}
