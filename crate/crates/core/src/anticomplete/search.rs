//! Lexicographically least σ ∈ 2^s meeting a conjunction of rule guards.
//!
//! Each input `y ≤ n` contributes a clause: σ must satisfy the guard of at
//! least one visible rule for `y` with the wanted output. Determinism of the
//! program means a σ satisfying a good guard cannot also satisfy a bad one,
//! so the clause form is exact.

use crate::enumcore::{Stage, StageSet};
use crate::error::{Error, Result};
use crate::functionals::OracleProgram;

pub(crate) const NODE_BUDGET: usize = 200_000;

type Guard<'a> = &'a [(usize, bool)];

/// The search problem at one stage, kept separate so tests can call it
/// without building a construction state.
pub struct SigmaQuery<'a> {
    pub program: &'a OracleProgram,
    pub stage: Stage,
    pub n: usize,
    pub a: &'a StageSet,
    pub b: &'a StageSet,
    pub d: &'a StageSet,
}

impl SigmaQuery<'_> {
    pub fn solve(&self) -> Result<Option<Vec<bool>>> {
        let s = self.stage;
        let mut clauses: Vec<Vec<Guard<'_>>> = Vec::with_capacity(self.n + 1);
        for y in 0..=self.n {
            let want = self.d.contains_at(y, s);
            let alts: Vec<Guard<'_>> = self
                .program
                .rules_for(y)
                .filter(|r| r.available_at <= s && r.use_ <= s && r.output == want)
                .map(|r| r.guard.as_slice())
                .collect();
            if alts.is_empty() {
                return Ok(None);
            }
            clauses.push(alts);
        }
        // Clauses come first: most queries die on an input with no rules.
        let mut assign: Vec<Option<bool>> = vec![None; s];
        for (x, slot) in assign.iter_mut().enumerate() {
            if self.a.contains_at(x, s) {
                *slot = Some(true);
            } else if self.b.contains_at(x, s) {
                *slot = Some(false);
            }
        }
        let mut nodes = 0;
        match lexmin(assign, clauses, &mut nodes) {
            Some(found) => Ok(Some(found)),
            None if nodes > NODE_BUDGET => Err(Error::SearchBudget { stage: s }),
            None => Ok(None),
        }
    }
}

fn consistent(assign: &[Option<bool>], g: Guard<'_>) -> bool {
    g.iter().all(|&(p, b)| assign[p].is_none_or(|v| v == b))
}

fn satisfied(assign: &[Option<bool>], g: Guard<'_>) -> bool {
    g.iter().all(|&(p, b)| assign[p] == Some(b))
}

fn lexmin<'a>(
    mut assign: Vec<Option<bool>>,
    mut clauses: Vec<Vec<Guard<'a>>>,
    nodes: &mut usize,
) -> Option<Vec<bool>> {
    *nodes += 1;
    if *nodes > NODE_BUDGET {
        return None;
    }
    // Unit propagation to a fixed point.
    loop {
        let mut changed = false;
        let mut open = Vec::with_capacity(clauses.len());
        for mut alts in clauses {
            alts.retain(|g| consistent(&assign, g));
            if alts.is_empty() {
                return None;
            }
            if alts.iter().any(|g| satisfied(&assign, g)) {
                continue;
            }
            if alts.len() == 1 {
                for &(p, b) in alts[0] {
                    assign[p] = Some(b);
                }
                changed = true;
                continue;
            }
            open.push(alts);
        }
        clauses = open;
        if !changed {
            break;
        }
    }
    if clauses.is_empty() {
        return Some(assign.into_iter().map(|v| v.unwrap_or(false)).collect());
    }
    let p = clauses
        .iter()
        .flatten()
        .flat_map(|g| g.iter())
        .filter(|&&(p, _)| assign[p].is_none())
        .map(|&(p, _)| p)
        .min()
        .expect("open clause has an unassigned position");
    for bit in [false, true] {
        let mut next = assign.clone();
        next[p] = Some(bit);
        if let Some(found) = lexmin(next, clauses.clone(), nodes) {
            return Some(found);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::Rule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(q: &SigmaQuery<'_>) -> Option<Vec<bool>> {
        let s = q.stage;
        (0..1u64 << s)
            .map(|m| (0..s).map(|i| m >> (s - 1 - i) & 1 == 1).collect::<Vec<bool>>())
            .find(|sigma| {
                (0..s).all(|x| {
                    (!q.a.contains_at(x, s) || sigma[x]) && (!q.b.contains_at(x, s) || !sigma[x])
                }) && (0..=q.n).all(|y| {
                    q.program.evaluate(sigma, y, s).output() == Some(q.d.contains_at(y, s))
                })
            })
    }

    #[test]
    fn agrees_with_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut found = 0;
        for _ in 0..300 {
            let s = rng.gen_range(1..=9);
            let n = rng.gen_range(0..4);
            let mut rules = Vec::new();
            for y in 0..=n {
                for _ in 0..rng.gen_range(0..4) {
                    let use_ = rng.gen_range(1..=s + 1);
                    let k = rng.gen_range(0..=use_.min(3));
                    let mut guard = Vec::new();
                    for _ in 0..k {
                        let p = rng.gen_range(0..use_);
                        if guard.iter().all(|&(q, _)| q != p) {
                            guard.push((p, rng.gen()));
                        }
                    }
                    let mut trial = rules.clone();
                    trial.push(Rule::new(guard, y, rng.gen(), use_));
                    if OracleProgram::new(trial.clone()).is_ok() {
                        rules = trial;
                    }
                }
            }
            let program = OracleProgram::new(rules).unwrap();
            let mut a = StageSet::new(s);
            let mut b = StageSet::new(s);
            let mut d = StageSet::new(s);
            for x in 0..s {
                match rng.gen_range(0..6) {
                    0 => {
                        a.enumerate(x, 0).unwrap();
                    }
                    1 => {
                        b.enumerate(x, 0).unwrap();
                    }
                    _ => {}
                }
            }
            for y in 0..=n {
                if rng.gen_bool(0.3) {
                    d.enumerate(y, 0).unwrap();
                }
            }
            let q = SigmaQuery {
                program: &program,
                stage: s,
                n,
                a: &a,
                b: &b,
                d: &d,
            };
            let got = q.solve().unwrap();
            assert_eq!(got, brute(&q));
            found += got.is_some() as usize;
        }
        assert!(found > 10, "too few satisfiable instances ({found})");
    }
}
