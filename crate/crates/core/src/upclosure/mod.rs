//! Separators of every Turing degree above `A` when `A ≡wtt B`.
//!
//! Given `Γ^A = B`, `Δ^B = A` with common use bound `f`, the domain is cut
//! into blocks `(m_n, m_{n+1}]`. A separator `Z` copies `A` on block `n` when
//! `n ∉ C` and copies `co-B` when `n ∈ C`. Each block contains a hole of
//! `A ∪ B`, so `Z` can tell the two choices apart by watching `A_s` and `B_s`.
//!
//! Finite data cannot decide which case holds; scenarios declare it and the
//! declaration is checked for consistency at the horizon.

mod generate;
mod verify;

use serde::{Deserialize, Serialize};

use crate::enumcore::{SeparatorSnapshot, Stage, StageSet};
use crate::error::{Error, Result};
use crate::functionals::{SetOracle, UseBound, UseBoundedOperator};

pub use generate::random_settled;
pub use verify::{verify_upclosure_trace, UcTrace, VERDICTS};

/// Which side of the case split a scenario claims to be on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum CaseTag {
    /// Only finitely many `x` have `(x, f(x)] ⊆ A ∪ B`, none of them `≥ k`.
    Case1 { k: usize },
    /// Infinitely many such `x`.
    Case2,
}

/// Block boundaries `m_0 < m_1 < …`; `m_0 = -1` in case 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MSequence {
    pub values: Vec<i64>,
}

impl MSequence {
    pub fn blocks(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// Block `n` as the half-open range `(m_n, m_{n+1}]` of positions.
    pub fn block(&self, n: usize) -> std::ops::RangeInclusive<usize> {
        let lo = (self.values[n] + 1) as usize;
        let hi = self.values[n + 1] as usize;
        lo..=hi
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] < w[1])
    }
}

/// Result of [`m_sequence`]: the values found, or the index that is not
/// witnessed below the horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MOutcome {
    Complete(MSequence),
    NotYet { n: usize, prefix: MSequence },
}

/// Everything the construction reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpclosureInstance {
    pub horizon: Stage,
    /// Positions `[0, domain)` carry the scripted sets.
    pub domain: usize,
    pub blocks: usize,
    pub a: StageSet,
    pub b: StageSet,
    /// Block indices; only the horizon value matters.
    pub c: StageSet,
    pub gamma: UseBoundedOperator,
    pub delta: UseBoundedOperator,
    pub f: UseBound,
    pub case: CaseTag,
}

/// `A ∪ B` at stage `s` contains every position in `(lo, hi]`; positions
/// at or beyond `domain` count as holes.
pub(crate) fn covered(a: &StageSet, b: &StageSet, lo: i64, hi: usize, s: Stage, domain: usize) -> bool {
    ((lo + 1) as usize..=hi).all(|y| y < domain && (a.contains_at(y, s) || b.contains_at(y, s)))
}

/// Horizon audit of the case declaration and the holes hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseReport {
    pub consistent: bool,
    /// The infinitely-many-holes hypothesis, finitized.
    pub holes_ok: bool,
    pub covered_xs: Vec<usize>,
    pub holes: usize,
}

/// Case 1 (`k`) is consistent when no checkable `x ≥ k` has its interval
/// `(x, f(x)]` covered at the horizon; case 2 when at least `⌈domain/10⌉`
/// do. The holes hypothesis needs `⌈domain/16⌉` holes in the domain.
pub fn classify_case(a: &StageSet, b: &StageSet, f: &UseBound, domain: usize, horizon: Stage, declared: CaseTag) -> CaseReport {
    let covered_xs: Vec<usize> = (0..domain.min(f.len()))
        .filter(|&x| covered(a, b, x as i64, f.table()[x], horizon, domain))
        .collect();
    let holes = (0..domain)
        .filter(|&y| !a.contains_at(y, horizon) && !b.contains_at(y, horizon))
        .count();
    let consistent = match declared {
        CaseTag::Case1 { k } => covered_xs.iter().all(|&x| x < k),
        CaseTag::Case2 => covered_xs.len() >= domain.div_ceil(10),
    };
    CaseReport {
        consistent,
        holes_ok: holes >= domain.div_ceil(16).max(1),
        covered_xs,
        holes,
    }
}

/// The first `count` values of the block sequence, read off stage-`s` snapshots.
pub fn m_sequence(case: CaseTag, a: &StageSet, b: &StageSet, s: Stage, f: &UseBound, domain: usize, count: usize) -> Result<MOutcome> {
    match case {
        CaseTag::Case1 { k } => {
            let mut values = Vec::with_capacity(count);
            let mut m = k;
            for i in 0..count {
                values.push(m as i64);
                if i + 1 < count {
                    m = f.get(m)?;
                }
            }
            Ok(MOutcome::Complete(MSequence { values }))
        }
        CaseTag::Case2 => {
            let mut values = vec![-1i64];
            while values.len() < count {
                let prev = *values.last().expect("m_0 present");
                let start = (prev + 1) as usize;
                let next = (start..domain.min(f.len()))
                    .find(|&x| !covered(a, b, prev, x, s, domain) && covered(a, b, x as i64, f.table()[x], s, domain));
                match next {
                    Some(x) => values.push(x as i64),
                    None => {
                        return Ok(MOutcome::NotYet {
                            n: values.len(),
                            prefix: MSequence { values },
                        })
                    }
                }
            }
            Ok(MOutcome::Complete(MSequence { values }))
        }
    }
}

/// `Z` of length `m_last + 1`: `A` below `m_0`, then per block `A` or `co-B`
/// according to `C`, all read at stage `s`.
pub fn encode_separator(c: &StageSet, m: &MSequence, a: &StageSet, b: &StageSet, s: Stage, len: usize) -> Result<SeparatorSnapshot> {
    let last = *m.values.last().unwrap_or(&-1);
    if (len as i64) > last + 1 {
        return Err(Error::MSequenceTooShort { needed: len - 1 });
    }
    let mut z = SeparatorSnapshot::zeros(len);
    let first = m.values.first().copied().unwrap_or(-1);
    for y in 0..len.min((first + 1).max(0) as usize) {
        z.set(y, a.contains_at(y, s));
    }
    for n in 0..m.blocks() {
        let use_co_b = c.contains_at(n, s);
        for y in m.block(n) {
            if y < len {
                z.set(y, if use_co_b { !b.contains_at(y, s) } else { a.contains_at(y, s) });
            }
        }
    }
    Ok(z)
}

fn agrees_with_a(z: &SeparatorSnapshot, a: &StageSet, block: std::ops::RangeInclusive<usize>, s: Stage) -> bool {
    block.into_iter().all(|y| z.get(y) == Some(a.contains_at(y, s)))
}

fn agrees_with_co_b(z: &SeparatorSnapshot, b: &StageSet, block: std::ops::RangeInclusive<usize>, s: Stage) -> bool {
    block.into_iter().all(|y| z.get(y) == Some(!b.contains_at(y, s)))
}

/// Both agreements at stage `s` on the block `(lo, hi]`.
pub fn agreements(z: &SeparatorSnapshot, a: &StageSet, b: &StageSet, lo: i64, hi: i64, s: Stage) -> (bool, bool) {
    let block = (lo + 1) as usize..=hi as usize;
    (agrees_with_a(z, a, block.clone(), s), agrees_with_co_b(z, b, block, s))
}

/// Waits for the first stage at which `Z` agrees with exactly one of `A_s`
/// and `co-B_s` on `(lo, hi]`; returns `1` for `co-B`.
pub fn decode_block(z: &SeparatorSnapshot, a: &StageSet, b: &StageSet, lo: i64, hi: i64, horizon: Stage) -> Result<(bool, Stage)> {
    for s in 0..=horizon {
        match agreements(z, a, b, lo, hi, s) {
            (true, false) => return Ok((false, s)),
            (false, true) => return Ok((true, s)),
            _ => {}
        }
    }
    Err(Error::UndecidedAtHorizon { lo, hi })
}

/// Finds `m_{n+1}` from `Z` and `m_0 … m_n` by the stage search: earlier
/// blocks settled, earlier covers complete, and a least `x > m_n` on which
/// both operators agree with the stage-`s` sets, `Z` agrees with one side,
/// `(m_n, x]` has a hole and `(x, f(x)]` is covered.
pub fn recover_m_next(
    z: &SeparatorSnapshot,
    a: &StageSet,
    b: &StageSet,
    gamma: &UseBoundedOperator,
    delta: &UseBoundedOperator,
    f: &UseBound,
    prefix: &MSequence,
    domain: usize,
    horizon: Stage,
) -> Result<(i64, Stage)> {
    let m = &prefix.values;
    let n = m.len() - 1;
    let m_n = m[n];
    let top = z.len().min(f.len());
    let oracle_len = f.table().last().copied().unwrap_or(0);
    for s in 0..=horizon {
        let settled = (0..n).all(|i| {
            let (x, y) = agreements(z, a, b, m[i], m[i + 1], s);
            x || y
        });
        if !settled {
            continue;
        }
        let mut covers = true;
        for &mi in &m[1..] {
            let mi = mi as usize;
            covers &= covered(a, b, mi as i64, f.get(mi)?, s, domain);
        }
        if !covers {
            continue;
        }
        let a_s = SetOracle { set: a, stage: s, len: oracle_len };
        let b_s = SetOracle { set: b, stage: s, len: oracle_len };
        // Operator agreement is monotone in x, so scan it incrementally.
        let lo = (m_n + 1) as usize;
        let mut ops_ok = true;
        for y in 0..lo.min(top) {
            ops_ok &= gamma.apply(&a_s, y, s)? == Some(b.contains_at(y, s))
                && delta.apply(&b_s, y, s)? == Some(a.contains_at(y, s));
        }
        for x in lo..top {
            ops_ok = ops_ok
                && gamma.apply(&a_s, x, s)? == Some(b.contains_at(x, s))
                && delta.apply(&b_s, x, s)? == Some(a.contains_at(x, s));
            if !ops_ok {
                break;
            }
            let (ag_a, ag_b) = agreements(z, a, b, m_n, x as i64, s);
            if (ag_a || ag_b)
                && !covered(a, b, m_n, x, s, domain)
                && covered(a, b, x as i64, f.get(x)?, s, domain)
            {
                return Ok((x as i64, s));
            }
        }
    }
    Err(Error::NotSettled { horizon })
}

/// Output of one run: the blocks, the separator and both decoders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpclosureRun {
    pub m: MSequence,
    pub z: String,
    /// Per block: decoded bit and the stage it settled.
    pub decoded: Vec<(bool, Stage)>,
    /// Per block: a hole of `A ∪ B` inside it.
    pub holes: Vec<usize>,
    /// Case 2 only: `m_{n+1}` recovered from `Z`, with its stage.
    pub recovered: Vec<(i64, Stage)>,
}

pub fn run_upclosure(inst: &UpclosureInstance) -> Result<UpclosureRun> {
    let h = inst.horizon;
    let m = match m_sequence(inst.case, &inst.a, &inst.b, h, &inst.f, inst.domain, inst.blocks + 1)? {
        MOutcome::Complete(m) => m,
        MOutcome::NotYet { n, .. } => {
            return Err(Error::Hypothesis(format!("m_{n} is not witnessed below the horizon")))
        }
    };
    let len = (*m.values.last().expect("nonempty") + 1) as usize;
    let z = encode_separator(&inst.c, &m, &inst.a, &inst.b, h, len)?;
    let mut decoded = Vec::with_capacity(inst.blocks);
    let mut holes = Vec::with_capacity(inst.blocks);
    for n in 0..inst.blocks {
        decoded.push(decode_block(&z, &inst.a, &inst.b, m.values[n], m.values[n + 1], h)?);
        let hole = m
            .block(n)
            .find(|&y| !inst.a.contains_at(y, h) && !inst.b.contains_at(y, h))
            .ok_or_else(|| Error::Hypothesis(format!("block {n} has no hole at the horizon")))?;
        holes.push(hole);
    }
    let mut recovered = Vec::new();
    if inst.case == CaseTag::Case2 {
        for n in 0..inst.blocks {
            let prefix = MSequence {
                values: m.values[..=n].to_vec(),
            };
            recovered.push(recover_m_next(
                &z, &inst.a, &inst.b, &inst.gamma, &inst.delta, &inst.f, &prefix, inst.domain, h,
            )?);
        }
    }
    Ok(UpclosureRun {
        m,
        z: z.to_string(),
        decoded,
        holes,
        recovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{OracleProgram, Rule};

    fn set(xs: &[(usize, Stage)], h: Stage) -> StageSet {
        StageSet::from_events(xs.iter().copied(), h).unwrap()
    }

    #[test]
    fn case1_sequences() {
        let e = StageSet::new(10);
        let f = UseBound::shift(20, 1).unwrap();
        let out = m_sequence(CaseTag::Case1 { k: 3 }, &e, &e, 10, &f, 20, 3).unwrap();
        assert_eq!(out, MOutcome::Complete(MSequence { values: vec![3, 4, 5] }));
        let f = UseBound::new((0..20).map(|x| 2 * x + 1).collect()).unwrap();
        let out = m_sequence(CaseTag::Case1 { k: 1 }, &e, &e, 10, &f, 20, 3).unwrap();
        assert_eq!(out, MOutcome::Complete(MSequence { values: vec![1, 3, 7] }));
        let short = UseBound::shift(2, 1).unwrap();
        assert_eq!(
            m_sequence(CaseTag::Case1 { k: 1 }, &e, &e, 10, &short, 20, 4),
            Err(Error::BoundTableExhausted { x: 2 })
        );
    }

    #[test]
    fn classify_examples() {
        let e = StageSet::new(10);
        let f = UseBound::shift(20, 1).unwrap();
        let r = classify_case(&e, &e, &f, 20, 10, CaseTag::Case1 { k: 0 });
        assert!(r.consistent && r.holes_ok);
        let evens = set(&(0..20).step_by(2).map(|x| (x, 1)).collect::<Vec<_>>(), 10);
        let odds = set(&(1..20).step_by(2).map(|x| (x, 1)).collect::<Vec<_>>(), 10);
        let r = classify_case(&evens, &odds, &f, 20, 10, CaseTag::Case1 { k: 0 });
        assert!(!r.holes_ok);
    }

    /// Brute-force covered-interval count with `f(x) = x + 2`.
    #[test]
    fn classify_counts_covered_intervals() {
        let f = UseBound::shift(20, 2).unwrap();
        // Exactly (5,7] and (9,11] covered.
        let a = set(&[(6, 1), (10, 1)], 5);
        let b = set(&[(7, 2), (11, 2)], 5);
        let r = classify_case(&a, &b, &f, 20, 5, CaseTag::Case2);
        let brute: Vec<usize> = (0..20)
            .filter(|&x| (x + 1..=x + 2).all(|y| y < 20 && (a.contains(y) || b.contains(y))))
            .collect();
        assert_eq!(r.covered_xs, brute);
        assert_eq!(brute, vec![5, 9]);
        assert!(r.consistent, "2 ≥ ⌈20/10⌉");
        let r = classify_case(&a, &b, &f, 40, 5, CaseTag::Case2);
        assert!(!r.consistent);
    }

    #[test]
    fn case2_sequence_matches_direct_search() {
        let f = UseBound::shift(20, 2).unwrap();
        let a = set(&[(3, 1), (9, 1), (10, 2)], 5);
        let b = set(&[(4, 1), (15, 2), (16, 1)], 5);
        let MOutcome::NotYet { prefix, n } = m_sequence(CaseTag::Case2, &a, &b, 5, &f, 20, 10).unwrap() else {
            panic!("only finitely many covered intervals");
        };
        // Direct recursion from the bullets.
        let cov = |lo: usize, hi: usize| (lo + 1..=hi).all(|y| y < 20 && (a.contains(y) || b.contains(y)));
        let mut want = vec![-1i64];
        loop {
            let prev = *want.last().unwrap();
            let next = ((prev + 1) as usize..20).find(|&x| {
                let hole = ((prev + 1) as usize..=x).any(|y| !a.contains(y) && !b.contains(y));
                hole && cov(x, x + 2)
            });
            match next {
                Some(x) => want.push(x as i64),
                None => break,
            }
        }
        assert_eq!(prefix.values, want);
        assert_eq!(n, want.len());
        assert_eq!(want, vec![-1, 2, 8, 14]);
    }

    #[test]
    fn encode_branches() {
        let a = set(&[(1, 1), (4, 1)], 3);
        let b = set(&[(2, 1), (5, 1)], 3);
        let m = MSequence { values: vec![0, 3, 6] };
        let none = StageSet::new(3);
        let z = encode_separator(&none, &m, &a, &b, 3, 7).unwrap();
        assert_eq!(z.to_string(), "0100100");
        let all = set(&[(0, 0), (1, 0)], 3);
        let z = encode_separator(&all, &m, &a, &b, 3, 7).unwrap();
        assert_eq!(z.to_string(), "0101101");
        let one = set(&[(1, 0)], 3);
        let z = encode_separator(&one, &m, &a, &b, 3, 7).unwrap();
        for y in 0..7 {
            let want = match y {
                0 => a.contains(0),
                1..=3 => a.contains(y),
                _ => !b.contains(y),
            };
            assert_eq!(z.get(y), Some(want), "position {y}");
        }
        assert_eq!(
            encode_separator(&none, &m, &a, &b, 3, 9),
            Err(Error::MSequenceTooShort { needed: 8 })
        );
        assert_eq!(decode_block(&z, &a, &b, 0, 3, 3), Ok((false, 1)));
        assert_eq!(decode_block(&z, &a, &b, 3, 6, 3), Ok((true, 1)));
    }

    #[test]
    fn undecided_block() {
        let a = set(&[(1, 1)], 3);
        let b = StageSet::new(3);
        let z = SeparatorSnapshot::parse("0010").unwrap();
        // Z misses 1 ∈ A and contains 2 ∉ co-B: agrees with neither side.
        assert_eq!(decode_block(&z, &a, &b, 0, 3, 3), Err(Error::UndecidedAtHorizon { lo: 0, hi: 3 }));
    }

    fn identity_ops(len: usize, f: &UseBound) -> (UseBoundedOperator, UseBoundedOperator) {
        // Γ^A(x) = 0 and Δ^B(x) = 0 on the whole domain: A = B = ∅ settled.
        let rules: Vec<Rule> = (0..len).map(|x| Rule::new(vec![], x, false, 0)).collect();
        let p = OracleProgram::new(rules).unwrap();
        (
            UseBoundedOperator::new(p.clone(), f.clone()).unwrap(),
            UseBoundedOperator::new(p, f.clone()).unwrap(),
        )
    }

    #[test]
    fn corrupted_block_is_not_recovered() {
        let f = UseBound::shift(12, 1).unwrap();
        let (g, d) = identity_ops(12, &f);
        let e = StageSet::new(4);
        let z = SeparatorSnapshot::parse("1111").unwrap();
        let prefix = MSequence { values: vec![-1] };
        // With A = B = ∅ no interval is ever covered.
        assert_eq!(recover_m_next(&z, &e, &e, &g, &d, &f, &prefix, 12, 4), Err(Error::NotSettled { horizon: 4 }));
    }
}
