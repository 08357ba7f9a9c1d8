//! A separator `X` of c.e. degree that is neither `=* A` nor `=* co-B`,
//! built in up to three attempts.
//!
//! Each attempt keeps a boundary sequence `x_{-1} < x_0 < … < x_k = s` per
//! stage. Intervals `(x_{n-1}, x_n]` alternate between an *in* role (try to
//! put holes of `A ∪ B` into `X`) and an *out* role (keep them out). An
//! attempt fails when some `x_k` never settles; the next attempt consumes a
//! [`SpeedupCertificate`] describing that failure and works on a
//! re-indexed timeline above `x_ℓ`.
//!
//! Within a stage the boundary is updated before `X`.

mod adversary;
mod audit;
mod speedup;

use serde::{Deserialize, Serialize};

use crate::enumcore::{Stage, StageSet};
use crate::error::{Error, Result};

pub use adversary::{chaser_scenario, random_sets, ChaserParams};
pub use audit::{verify_nosupermax_trace, NsTrace, VERDICTS};
pub use speedup::{
    apply_speedup, bullet3_holds, detect_outcome, propose_certificate, restamp, OutcomeReport, Parity, SpeedupCertificate,
    SpeedupOutcome,
};

/// Boundary values; `x_{-1}` is `-1` in the first attempt.
pub type Boundary = Vec<i64>;

/// Whether interval index `n` (the interval `(x_{n-1}, x_n]`) tries to put
/// holes into `X`. Odd indices do, unless the roles are flipped.
pub fn in_role(n: i64, flip: bool) -> bool {
    (n.rem_euclid(2) == 1) != flip
}

/// Per-position membership at the current stage.
#[derive(Debug, Clone, Default)]
pub(crate) struct Bits(Vec<bool>);

impl Bits {
    pub(crate) fn get(&self, y: usize) -> bool {
        self.0.get(y).copied().unwrap_or(false)
    }

    pub(crate) fn put(&mut self, y: usize, v: bool) {
        if y >= self.0.len() {
            if !v {
                return;
            }
            self.0.resize(y + 1, false);
        }
        self.0[y] = v;
    }
}

/// Snapshot of `A` and `B` at one stage plus what is new at that stage.
pub struct StageView<'a> {
    pub a: &'a StageSet,
    pub b: &'a StageSet,
    pub stage: Stage,
}

impl StageView<'_> {
    fn in_union(&self, y: usize) -> bool {
        self.a.contains_at(y, self.stage) || self.b.contains_at(y, self.stage)
    }
}

/// Least `z` with `z ∈ X_s ∩ B_{s+1}` or `z ∈ co-X_s ∩ A_{s+1}`; only new
/// entries can qualify since `A_s ⊆ X_s` and `X_s ∩ B_s = ∅`.
fn least_trigger(x_prev: &Bits, a: &StageSet, b: &StageSet, next: Stage) -> Option<usize> {
    let from_b = b.entered_at(next).iter().copied().filter(|&z| x_prev.get(z));
    let from_a = a.entered_at(next).iter().copied().filter(|&z| !x_prev.get(z));
    from_b.chain(from_a).min()
}

/// `y` is permitted at stage `s+1`: outside `A_{s+1} ∪ B_{s+1}`, and either
/// `y = s` or some `z < y` lies in `X_s ∩ B_{s+1}` or `co-X_s ∩ A_{s+1}`.
pub fn permitted(y: usize, s: Stage, x_prev: &[bool], a: &StageSet, b: &StageSet) -> bool {
    let bits = Bits(x_prev.to_vec());
    permitted_with(y, s, least_trigger(&bits, a, b, s + 1), a, b)
}

fn permitted_with(y: usize, s: Stage, trigger: Option<usize>, a: &StageSet, b: &StageSet) -> bool {
    !a.contains_at(y, s + 1) && !b.contains_at(y, s + 1) && (y == s || trigger.is_some_and(|z| z < y))
}

/// The boundary at stage `s+1` from the boundary at stage `s`.
///
/// `x_{-1} = base`. Given `x_n < s`: if the old `x_{n+1}` is undefined or
/// `≤ x_n`, then `x_{n+1} = s`; otherwise the old value is kept when the
/// interval `(x_n, old]` contains a witness for its role, else reset to `s`.
pub fn boundary_update(
    old: &[i64],
    base: i64,
    flip: bool,
    s: Stage,
    x_prev: &[bool],
    a: &StageSet,
    b: &StageSet,
) -> Boundary {
    let bits = Bits(x_prev.to_vec());
    let trigger = least_trigger(&bits, a, b, s + 1);
    boundary_with(old, base, flip, s, &bits, trigger, &StageView { a, b, stage: s + 1 })
}

fn boundary_with(old: &[i64], base: i64, flip: bool, s: Stage, x_prev: &Bits, trigger: Option<usize>, now: &StageView<'_>) -> Boundary {
    let s_i = s as i64;
    let mut seq = vec![base];
    while let Some(&cur) = seq.last() {
        if cur >= s_i {
            break;
        }
        let n = seq.len() as i64 - 1;
        let next = match old.get(seq.len()) {
            Some(&o) if o > cur => {
                let lo = (cur + 1) as usize;
                let hi = o as usize;
                let want_in = in_role(n, flip);
                let witness = (lo..=hi).any(|y| {
                    !now.in_union(y)
                        && (x_prev.get(y) == want_in || trigger.is_some_and(|z| z < y) || y == s)
                });
                if witness {
                    o
                } else {
                    s_i
                }
            }
            _ => s_i,
        };
        seq.push(next);
    }
    seq
}

/// `X_{s+1}` from `X_s` and the stage-`s+1` boundary: `A` in, `B` out,
/// permitted numbers follow their interval's role, everything else stays.
/// Returns the changed positions.
fn x_update_with(x: &mut Bits, boundary: &[i64], flip: bool, s: Stage, trigger: Option<usize>, a: &StageSet, b: &StageSet) -> Vec<usize> {
    let next = s + 1;
    let mut changed = Vec::new();
    let set = |x: &mut Bits, y: usize, v: bool, changed: &mut Vec<usize>| {
        if x.get(y) != v {
            x.put(y, v);
            changed.push(y);
        }
    };
    for &y in a.entered_at(next) {
        set(x, y, true, &mut changed);
    }
    for &y in b.entered_at(next) {
        set(x, y, false, &mut changed);
    }
    // Only y = s and y above the trigger can be permitted.
    let lo = trigger.map_or(s, |z| (z + 1).min(s));
    for w in boundary.windows(2).enumerate() {
        let (idx, pair) = w;
        let (l, h) = (pair[0], pair[1]);
        let role_in = in_role(idx as i64, flip);
        let from = ((l + 1).max(lo as i64)) as usize;
        for y in from..=(h.max(-1) as usize).min(s) {
            if (h as usize) < from {
                break;
            }
            if permitted_with(y, s, trigger, a, b) {
                set(x, y, role_in, &mut changed);
            }
        }
    }
    changed.sort_unstable();
    changed
}

/// `X_{s+1}` as a full characteristic string on `[0, len)`.
pub fn x_update(x_prev: &[bool], boundary: &[i64], flip: bool, s: Stage, a: &StageSet, b: &StageSet, len: usize) -> Vec<bool> {
    let mut bits = Bits(x_prev.to_vec());
    let trigger = least_trigger(&bits, a, b, s + 1);
    x_update_with(&mut bits, boundary, flip, s, trigger, a, b);
    (0..len).map(|y| bits.get(y)).collect()
}

/// One attempt on one timeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptTrace {
    pub attempt: usize,
    pub base: i64,
    pub flip: bool,
    pub horizon: Stage,
    /// Stage `t` of this timeline is original stage `stage_map[t]`.
    pub stage_map: Vec<Stage>,
    /// Boundary per stage; empty at stage 0.
    pub boundary: Vec<Boundary>,
    /// Positions whose `X`-membership differs from the previous stage; at
    /// stage 0 the initial members.
    pub x_changes: Vec<Vec<usize>>,
    /// `W_{s} \ W_{s-1}` per stage.
    pub w_entries: Vec<Vec<usize>>,
}

impl AttemptTrace {
    /// `X_s` for every stage, as sorted member lists.
    pub fn x_snapshots(&self) -> Vec<Vec<usize>> {
        let mut cur = Bits::default();
        let mut out = Vec::with_capacity(self.x_changes.len());
        let mut top = 0;
        for ch in &self.x_changes {
            for &y in ch {
                cur.put(y, !cur.get(y));
                top = top.max(y + 1);
            }
            out.push((0..top).filter(|&y| cur.get(y)).collect());
        }
        out
    }

    /// `x_n` at stage `s`, if defined.
    pub fn x_at(&self, n: i64, s: Stage) -> Option<i64> {
        self.boundary.get(s)?.get((n + 1) as usize).copied()
    }
}

/// Walks `X_s` of one attempt forward, one stage at a time.
pub struct XCursor<'a> {
    trace: &'a AttemptTrace,
    next: Stage,
    bits: Bits,
}

impl<'a> XCursor<'a> {
    pub fn new(trace: &'a AttemptTrace) -> Self {
        XCursor {
            trace,
            next: 0,
            bits: Bits::default(),
        }
    }

    /// Moves to stage `s`; stages only go forward.
    pub fn advance_to(&mut self, s: Stage) {
        while self.next <= s && self.next < self.trace.x_changes.len() {
            for &y in &self.trace.x_changes[self.next] {
                self.bits.put(y, !self.bits.get(y));
            }
            self.next += 1;
        }
    }

    pub fn contains(&self, y: usize) -> bool {
        self.bits.get(y)
    }
}

/// Runs one attempt on the timeline given by `a`, `b` (already re-stamped).
pub fn run_attempt_raw(attempt: usize, a: &StageSet, b: &StageSet, horizon: Stage, base: i64, flip: bool, stage_map: Vec<Stage>) -> Result<AttemptTrace> {
    let mut runner = AttemptRunner::new(attempt, a, base, flip, horizon, stage_map)?;
    for _ in 0..horizon {
        runner.step(a, b)?;
    }
    Ok(runner.finish())
}

/// Stage-by-stage driver for one attempt. The sets passed to [`step`]
/// must already hold their entries for the stage being computed, which
/// lets an adversary react to the attempt as it runs.
///
/// [`step`]: AttemptRunner::step
pub struct AttemptRunner {
    trace: AttemptTrace,
    x: Bits,
    in_w: Bits,
}

impl AttemptRunner {
    pub fn new(attempt: usize, a: &StageSet, base: i64, flip: bool, horizon: Stage, stage_map: Vec<Stage>) -> Result<Self> {
        if !(1..=3).contains(&attempt) {
            return Err(Error::NoSuchAttempt(attempt));
        }
        let mut x = Bits::default();
        let mut initial: Vec<usize> = a.entered_at(0).to_vec();
        initial.sort_unstable();
        for &y in &initial {
            x.put(y, true);
        }
        Ok(AttemptRunner {
            trace: AttemptTrace {
                attempt,
                base,
                flip,
                horizon,
                stage_map,
                boundary: vec![Vec::new()],
                x_changes: vec![initial],
                w_entries: vec![Vec::new()],
            },
            x,
            in_w: Bits::default(),
        })
    }

    /// The stage most recently computed.
    pub fn stage(&self) -> Stage {
        self.trace.boundary.len() - 1
    }

    pub fn in_x(&self, y: usize) -> bool {
        self.x.get(y)
    }

    pub fn boundary(&self) -> &[i64] {
        &self.trace.boundary[self.stage()]
    }

    /// Computes stage `s+1` from stage `s`: boundary first, then `X`.
    pub fn step(&mut self, a: &StageSet, b: &StageSet) -> Result<()> {
        let s = self.stage();
        let next = s + 1;
        for &y in a.entered_at(next) {
            if b.contains_at(y, next) {
                return Err(Error::HardFault {
                    claim: "A and B are disjoint".into(),
                    stage: next,
                    detail: format!("{y} in both sets"),
                });
            }
        }
        let t = &self.trace;
        let trigger = least_trigger(&self.x, a, b, next);
        let now = StageView { a, b, stage: next };
        let bnd = boundary_with(&t.boundary[s], t.base, t.flip, s, &self.x, trigger, &now);

        let mut w_new: Vec<usize> = b
            .entered_at(next)
            .iter()
            .copied()
            .filter(|&z| self.x.get(z))
            .chain(a.entered_at(next).iter().copied().filter(|&z| !self.x.get(z)))
            .filter(|&z| !self.in_w.get(z))
            .collect();
        w_new.sort_unstable();
        for &z in &w_new {
            self.in_w.put(z, true);
        }

        let changed = x_update_with(&mut self.x, &bnd, t.flip, s, trigger, a, b);
        self.trace.boundary.push(bnd);
        self.trace.x_changes.push(changed);
        self.trace.w_entries.push(w_new);
        Ok(())
    }

    pub fn finish(self) -> AttemptTrace {
        self.trace
    }
}

/// Results of the whole pipeline for one scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pipeline {
    pub attempts: Vec<AttemptTrace>,
    pub speedups: Vec<SpeedupOutcome>,
}

/// Runs attempt 1, then one further attempt per accepted certificate.
pub fn run_pipeline(a: &StageSet, b: &StageSet, horizon: Stage, certs: &[SpeedupCertificate], window: Option<usize>) -> Result<Pipeline> {
    let identity: Vec<Stage> = (0..=horizon).collect();
    let first = run_attempt_raw(1, a, b, horizon, -1, false, identity)?;
    let mut attempts = vec![first];
    let mut speedups = Vec::new();
    for (i, cert) in certs.iter().enumerate().take(2) {
        let prev = attempts.last().expect("attempt 1 present");
        if cert.attempt != prev.attempt {
            return Err(Error::MissingCertificate {
                attempt: prev.attempt + 1,
                needed: i + 1,
            });
        }
        let prior = certs[..i].last();
        let (pa, pb) = timeline_sets(a, b, &prev.stage_map);
        let outcome = apply_speedup(prev, &pa, &pb, cert, prior, window)?;
        let accepted = outcome.accepted;
        let map: Vec<Stage> = outcome.stage_map.iter().map(|&u| prev.stage_map[u]).collect();
        let base = prev.x_at(cert.ell, prev.horizon).unwrap_or(prev.base);
        let flip = if i == 0 { !in_role(cert.k, false) } else { prev.flip };
        speedups.push(outcome);
        if !accepted {
            break;
        }
        let (na, nb) = timeline_sets(a, b, &map);
        let h = map.len() - 1;
        attempts.push(run_attempt_raw(prev.attempt + 1, &na, &nb, h, base, flip, map)?);
    }
    Ok(Pipeline { attempts, speedups })
}

/// `A`, `B` re-stamped onto the timeline `map` (stage `t` ↦ original `map[t]`).
pub fn timeline_sets(a: &StageSet, b: &StageSet, map: &[Stage]) -> (StageSet, StageSet) {
    (restamp(a, map), restamp(b, map))
}

/// Entry point matching the attempt-indexed interface: attempt 1 needs no
/// certificate, attempt 2 one accepted certificate, attempt 3 two.
pub fn run_attempt(attempt: usize, a: &StageSet, b: &StageSet, horizon: Stage, certs: &[SpeedupCertificate], window: Option<usize>) -> Result<AttemptTrace> {
    if !(1..=3).contains(&attempt) {
        return Err(Error::NoSuchAttempt(attempt));
    }
    if certs.len() < attempt - 1 {
        return Err(Error::MissingCertificate {
            attempt,
            needed: attempt - 1,
        });
    }
    let p = run_pipeline(a, b, horizon, &certs[..attempt - 1], window)?;
    p.attempts.into_iter().nth(attempt - 1).ok_or(Error::MissingCertificate {
        attempt,
        needed: attempt - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty(h: Stage) -> StageSet {
        StageSet::new(h)
    }

    #[test]
    fn first_stage_from_empty() {
        let e = empty(5);
        assert_eq!(boundary_update(&[], -1, false, 0, &[], &e, &e), vec![-1, 0]);
        let t = run_attempt_raw(1, &e, &e, 5, -1, false, (0..=5).collect()).unwrap();
        assert_eq!(t.boundary[1], vec![-1, 0]);
        assert_eq!(t.boundary[2], vec![-1, 0, 1]);
    }

    /// Recomputes each stage from the previous stage only, with plain
    /// vectors, and compares.
    #[test]
    fn empty_sets_match_stagewise_recomputation() {
        let e = empty(50);
        let t = run_attempt_raw(1, &e, &e, 50, -1, false, (0..=50).collect()).unwrap();
        let xs = t.x_snapshots();
        let mut x = vec![false; 60];
        for s in 0..50 {
            let bnd = boundary_update(&t.boundary[s], -1, false, s, &x, &e, &e);
            assert_eq!(bnd, t.boundary[s + 1], "stage {}", s + 1);
            x = x_update(&x, &bnd, false, s, &e, &e, 60);
            let members: Vec<usize> = (0..60).filter(|&y| x[y]).collect();
            assert_eq!(members, xs[s + 1]);
        }
        // Everything settles: the boundary only ever grows by the new stage.
        for s in 1..50 {
            assert_eq!(t.boundary[s + 1][..t.boundary[s].len()], t.boundary[s][..]);
        }
    }

    #[test]
    fn killing_the_only_witness_resets() {
        // x = [-1, 0, 1] at stage 2 with 1 ∈ X the in-role witness for x_1.
        let e = empty(5);
        let x_prev = vec![false, true];
        assert_eq!(boundary_update(&[-1, 0, 1], -1, false, 2, &x_prev, &e, &e), vec![-1, 0, 1, 2]);
        let a = StageSet::from_events([(1, 3)], 5).unwrap();
        assert_eq!(boundary_update(&[-1, 0, 1], -1, false, 2, &x_prev, &a, &e), vec![-1, 0, 2]);
    }

    #[test]
    fn permission_examples() {
        let e = empty(10);
        assert!(permitted(5, 5, &[], &e, &e));
        let b = StageSet::from_events([(5, 6)], 10).unwrap();
        assert!(!permitted(5, 5, &[], &e, &b));
        // z = 2 ∈ X_s ∩ B_{s+1} permits y = 4.
        let b = StageSet::from_events([(2, 8)], 10).unwrap();
        assert!(permitted(4, 7, &[false, false, true], &e, &b));
        assert!(!permitted(4, 7, &[false, false, false], &e, &b));
        assert!(!permitted(1, 7, &[false, false, true], &e, &b));
    }

    #[test]
    fn x_update_rule_order() {
        // y = 3 enters A while lying in an out-role interval: A wins.
        let a = StageSet::from_events([(3, 5)], 10).unwrap();
        let e = empty(10);
        let x = x_update(&[false; 6], &[-1, 4], false, 4, &a, &e, 6);
        assert!(x[3]);
        // y = 4 = s permitted in the in-role interval (0, 4]: enters X.
        let x = x_update(&[false; 6], &[-1, 0, 4], false, 4, &e, &e, 6);
        assert_eq!(x, vec![false, false, false, false, true, false]);
    }

    /// Positionwise application of the five rules on a 30-element domain.
    #[test]
    fn x_update_matches_positionwise_rules() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = 29;
            let mut a_ev = Vec::new();
            let mut b_ev = Vec::new();
            for y in 0..30 {
                match rng.gen_range(0..8) {
                    0 => a_ev.push((y, rng.gen_range(29..=30))),
                    1 => b_ev.push((y, rng.gen_range(29..=30))),
                    _ => {}
                }
            }
            let a = StageSet::from_events(a_ev, 30).unwrap();
            let b = StageSet::from_events(b_ev, 30).unwrap();
            let x_prev: Vec<bool> = (0..30)
                .map(|y| a.contains_at(y, s) || (!b.contains_at(y, s) && rng.gen_bool(0.4)))
                .collect();
            let mut bnd = vec![-1i64];
            while *bnd.last().unwrap() < s as i64 {
                let next = rng.gen_range(*bnd.last().unwrap() + 1..=s as i64);
                bnd.push(next);
            }
            let got = x_update(&x_prev, &bnd, false, s, &a, &b, 30);
            for y in 0..30 {
                let trig = (0..y).any(|z| (x_prev[z] && b.contains_at(z, s + 1)) || (!x_prev[z] && a.contains_at(z, s + 1)));
                let perm = !a.contains_at(y, s + 1) && !b.contains_at(y, s + 1) && (y == s || trig);
                let idx = bnd.windows(2).position(|w| w[0] < y as i64 && y as i64 <= w[1]).unwrap();
                let want = if a.contains_at(y, s + 1) {
                    true
                } else if b.contains_at(y, s + 1) {
                    false
                } else if perm {
                    idx % 2 == 1
                } else {
                    x_prev[y]
                };
                assert_eq!(got[y], want, "y = {y}, boundary {bnd:?}");
            }
        }
    }

    #[test]
    fn attempt_index_checked() {
        let e = empty(5);
        assert_eq!(run_attempt(4, &e, &e, 5, &[], None), Err(Error::NoSuchAttempt(4)));
        assert_eq!(
            run_attempt(2, &e, &e, 5, &[], None),
            Err(Error::MissingCertificate { attempt: 2, needed: 1 })
        );
    }
}
