//! An adversary that makes the first two attempts fail in opposite ways.
//!
//! It co-simulates the attempts. The first chaser puts every hole that sits
//! in `X_1` above `x_0 = 0` into `A` after a delay, so `X_1 =* A`. The
//! second chaser watches the second attempt on the sped-up timeline and
//! puts every hole outside `X_2` into `B` after a delay, so `X_2 =* co-B`.
//! Holes outside `X_1` and inside `X_2` are left alone and stay holes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bullet3_holds, AttemptRunner, Parity, SpeedupCertificate};
use crate::enumcore::{Stage, StageSet};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChaserParams {
    pub horizon: Stage,
    pub seed: u64,
    /// Inclusive delay range, in stages of the first attempt.
    pub delay_a: (usize, usize),
    /// Inclusive delay range, in stages of the second attempt.
    pub delay_b: (usize, usize),
    /// Whether the second chaser runs at all.
    pub chase_second: bool,
}

/// The certificates the chasers aim for.
pub fn chaser_certificates(chase_second: bool) -> Vec<SpeedupCertificate> {
    let mut certs = vec![SpeedupCertificate {
        attempt: 1,
        ell: 0,
        k: 1,
        parity: Parity::Odd,
        settling_stage: 1,
    }];
    if chase_second {
        certs.push(SpeedupCertificate {
            attempt: 2,
            ell: -1,
            k: 0,
            parity: Parity::Even,
            settling_stage: 0,
        });
    }
    certs
}

/// Scripted `A`, `B` produced by the chasers, with the certificates they
/// aim for.
pub fn chaser_scenario(p: ChaserParams) -> Result<(StageSet, StageSet, Vec<SpeedupCertificate>)> {
    let h = p.horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let delay_a: Vec<usize> = (0..=h).map(|_| rng.gen_range(p.delay_a.0..=p.delay_a.1)).collect();
    let delay_b: Vec<usize> = (0..=h).map(|_| rng.gen_range(p.delay_b.0..=p.delay_b.1)).collect();

    let mut a = StageSet::new(h);
    let mut b = StageSet::new(h);
    let mut first = AttemptRunner::new(1, &a, -1, false, h, (0..=h).collect())?;
    let mut a2 = StageSet::new(h);
    let mut b2 = StageSet::new(h);
    let mut second: Option<AttemptRunner> = None;
    let mut selected = 0usize;
    let mut since_a: Vec<Option<Stage>> = vec![None; h + 1];
    let mut since_b: Vec<Option<Stage>> = vec![None; h + 1];

    for u in 1..=h {
        first.step(&a, &b)?;

        // Speedup selection for the first certificate, as apply_speedup does it.
        let t = selected;
        let x1_ok = first.boundary().get(2).is_some_and(|&v| v > t as i64);
        let chosen = x1_ok && (1..=t).all(|y| bullet3_holds(y, true, first.in_x(y), &a, &b, u));
        if chosen {
            for (src, dst) in [(&a, &mut a2), (&b, &mut b2)] {
                for x in src.range_at(0, usize::MAX, u) {
                    if !dst.contains(x) {
                        dst.enumerate(x, t)?;
                    }
                }
            }
            match second.as_mut() {
                None => second = Some(AttemptRunner::new(2, &a2, 0, false, h, Vec::new())?),
                Some(r) => r.step(&a2, &b2)?,
            }
            selected += 1;
        }
        if u == h {
            break;
        }

        let hole = |y: usize| !a.contains(y) && !b.contains(y);
        let mut into_a = Vec::new();
        for y in 1..u {
            if first.in_x(y) && hole(y) {
                let since = *since_a[y].get_or_insert(u);
                if u - since >= delay_a[y] {
                    into_a.push(y);
                }
            }
        }
        let mut into_b = Vec::new();
        if let (true, true, Some(r)) = (p.chase_second, chosen, second.as_ref()) {
            let t2 = r.stage();
            for y in 1..=t2.min(h) {
                if !r.in_x(y) && hole(y) && !into_a.contains(&y) {
                    let since = *since_b[y].get_or_insert(t2);
                    if t2 - since >= delay_b[y] {
                        into_b.push(y);
                    }
                }
            }
        }
        for y in into_a {
            a.enumerate(y, u + 1)?;
        }
        for y in into_b {
            b.enumerate(y, u + 1)?;
        }
    }
    Ok((a, b, chaser_certificates(p.chase_second)))
}
/// Disjoint `A`, `B` with no strategy behind them: each `x` below half the
/// horizon goes to one side or neither, a random number of stages after `x`.
pub fn random_sets(seed: u64, horizon: Stage) -> Result<(StageSet, StageSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for x in 0..horizon / 2 {
        let side = rng.gen_range(0..4);
        let s = x + rng.gen_range(0..40);
        if s > horizon {
            continue;
        }
        match side {
            0 => a.push((x, s)),
            1 => b.push((x, s)),
            _ => {}
        }
    }
    Ok((StageSet::from_events(a, horizon)?, StageSet::from_events(b, horizon)?))
}

