//! Random settled instances satisfying the hypotheses by construction.
//!
//! The domain is a run of contiguous groups. Each group has a few option
//! patterns `(a_o, b_o)` with `a_o ∩ b_o = ∅`, pairwise distinct on both
//! sides; one option is the final state of `A`, `B` on the group. `Γ` reads
//! the whole `A`-pattern of the group and answers with the matching `b_o`,
//! `Δ` symmetrically, and `f(x)` is one past the end of `x`'s group. Before
//! the sets settle the operators may follow a different option or diverge.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{classify_case, m_sequence, CaseTag, MOutcome, UpclosureInstance};
use crate::enumcore::StageSet;
use crate::error::Result;
use crate::functionals::{OracleProgram, Rule, UseBound, UseBoundedOperator};

const MAX_DOMAIN: usize = 64;
const MAX_BLOCKS: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cell {
    A,
    B,
    Hole,
}

struct Group {
    start: usize,
    options: Vec<Vec<Cell>>,
    chosen: usize,
}

impl Group {
    fn end(&self) -> usize {
        self.start + self.options[0].len()
    }
}

fn random_group(rng: &mut ChaCha8Rng, start: usize, len: usize, p_cover: f64, first_hole: bool) -> Group {
    let mut options: Vec<Vec<Cell>> = Vec::new();
    let want = rng.gen_range(1..=3);
    for _ in 0..want * 4 {
        if options.len() == want {
            break;
        }
        let pat: Vec<Cell> = (0..len)
            .map(|i| {
                if (i == 0 && first_hole) || !rng.gen_bool(p_cover) {
                    Cell::Hole
                } else if rng.gen_bool(0.5) {
                    Cell::A
                } else {
                    Cell::B
                }
            })
            .collect();
        let a_side = |p: &Vec<Cell>| p.iter().map(|&c| c == Cell::A).collect::<Vec<_>>();
        let b_side = |p: &Vec<Cell>| p.iter().map(|&c| c == Cell::B).collect::<Vec<_>>();
        if options.iter().all(|o| a_side(o) != a_side(&pat) && b_side(o) != b_side(&pat)) {
            options.push(pat);
        }
    }
    let chosen = rng.gen_range(0..options.len());
    Group { start, options, chosen }
}

fn operators(groups: &[Group], domain: usize) -> Result<(UseBoundedOperator, UseBoundedOperator, UseBound)> {
    let mut table = vec![0; domain];
    let (mut g_rules, mut d_rules) = (Vec::new(), Vec::new());
    for g in groups {
        let end = g.end();
        for x in g.start..end {
            table[x] = end;
        }
        for pat in &g.options {
            let guard = |side: Cell| -> Vec<(usize, bool)> {
                pat.iter().enumerate().map(|(i, &c)| (g.start + i, c == side)).collect()
            };
            for (i, &cell) in pat.iter().enumerate() {
                g_rules.push(Rule::new(guard(Cell::A), g.start + i, cell == Cell::B, end));
                d_rules.push(Rule::new(guard(Cell::B), g.start + i, cell == Cell::A, end));
            }
        }
    }
    let f = UseBound::new(table)?;
    Ok((
        UseBoundedOperator::new(OracleProgram::new(g_rules)?, f.clone())?,
        UseBoundedOperator::new(OracleProgram::new(d_rules)?, f.clone())?,
        f,
    ))
}

fn sizes(rng: &mut ChaCha8Rng, count: usize, budget: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut used = 0;
    for _ in 0..count {
        let len = rng.gen_range(2..=6);
        if used + len > budget {
            break;
        }
        used += len;
        out.push(len);
    }
    out
}

/// A settled instance for the given case (`1` or `2`), reproducible from `seed`.
pub fn random_settled(case: u8, seed: u64) -> Result<UpclosureInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(case) << 56));
    loop {
        let horizon = rng.gen_range(30..=80);
        let mut blocks = rng.gen_range(1..=MAX_BLOCKS);
        let mut groups = Vec::new();
        let mut start = 0;
        let declared = if case == 1 {
            let prefix = rng.gen_range(0..=2);
            let lens = sizes(&mut rng, prefix + blocks + 1, MAX_DOMAIN);
            if lens.len() < prefix + 2 {
                continue;
            }
            blocks = blocks.min(lens.len() - prefix - 1);
            for (j, &len) in lens.iter().enumerate() {
                groups.push(random_group(&mut rng, start, len, 0.6, j >= prefix));
                start += len;
            }
            CaseTag::Case1 { k: groups[prefix].start }
        } else {
            for len in sizes(&mut rng, 32, MAX_DOMAIN) {
                groups.push(random_group(&mut rng, start, len, 0.8, false));
                start += len;
            }
            CaseTag::Case2
        };
        let domain = start;
        let settle = horizon * 3 / 4;
        let (mut a_ev, mut b_ev) = (Vec::new(), Vec::new());
        for g in &groups {
            for (i, &cell) in g.options[g.chosen].iter().enumerate() {
                let stage = rng.gen_range(1..=settle);
                match cell {
                    Cell::A => a_ev.push((g.start + i, stage)),
                    Cell::B => b_ev.push((g.start + i, stage)),
                    Cell::Hole => {}
                }
            }
        }
        a_ev.shuffle(&mut rng);
        b_ev.shuffle(&mut rng);
        let a = StageSet::from_events(a_ev, horizon)?;
        let b = StageSet::from_events(b_ev, horizon)?;
        let (gamma, delta, f) = operators(&groups, domain)?;

        if case != 1 {
            match m_sequence(CaseTag::Case2, &a, &b, horizon, &f, domain, MAX_BLOCKS + 1)? {
                MOutcome::Complete(m) => blocks = blocks.min(m.blocks()),
                MOutcome::NotYet { n, .. } if n >= 2 => blocks = blocks.min(n - 1),
                MOutcome::NotYet { .. } => continue,
            }
        }
        let report = classify_case(&a, &b, &f, domain, horizon, declared);
        if !report.consistent || !report.holes_ok {
            continue;
        }
        let mut c_ev = Vec::new();
        for n in 0..blocks {
            if rng.gen_bool(0.5) {
                c_ev.push((n, rng.gen_range(0..=horizon)));
            }
        }
        let c = StageSet::from_events(c_ev, horizon)?;
        return Ok(UpclosureInstance {
            horizon,
            domain,
            blocks,
            a,
            b,
            c,
            gamma,
            delta,
            f,
            case: declared,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::SetOracle;

    #[test]
    fn instances_satisfy_hypotheses() {
        for case in [1u8, 2] {
            for seed in 0..40 {
                let inst = random_settled(case, seed).unwrap();
                let h = inst.horizon;
                assert!(inst.domain <= MAX_DOMAIN && inst.blocks >= 1 && inst.blocks <= MAX_BLOCKS);
                let a_h = SetOracle { set: &inst.a, stage: h, len: inst.domain };
                let b_h = SetOracle { set: &inst.b, stage: h, len: inst.domain };
                for x in 0..inst.domain {
                    assert!(!(inst.a.contains(x) && inst.b.contains(x)));
                    assert_eq!(inst.gamma.apply(&a_h, x, h).unwrap(), Some(inst.b.contains(x)));
                    assert_eq!(inst.delta.apply(&b_h, x, h).unwrap(), Some(inst.a.contains(x)));
                }
            }
        }
    }

    #[test]
    fn reproducible_from_seed() {
        let x = random_settled(2, 7).unwrap();
        let y = random_settled(2, 7).unwrap();
        assert_eq!(x.a, y.a);
        assert_eq!(x.c, y.c);
        assert_eq!(x.f, y.f);
    }
}
