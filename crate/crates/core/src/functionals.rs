//! Finite rule tables standing in for Turing functionals `Φ_e` and for the
//! wtt operators `Γ`, `Δ` with their use bound `f`.
//!
//! A rule says: on input `y`, if the oracle agrees with `guard`, the
//! computation halts with `output` and oracle use `use_`, provided the stage
//! is at least `available_at`. Programs never diverge by looping; a
//! computation diverges exactly when no visible rule matches.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::enumcore::{SeparatorSnapshot, Stage, StageSet};
use crate::error::{Error, Result};

/// Read access to a finite oracle string.
pub trait OracleView {
    fn oracle_len(&self) -> usize;
    /// Bit at `pos`; callers only ask for `pos < oracle_len()`.
    fn bit(&self, pos: usize) -> bool;
}

impl OracleView for [bool] {
    fn oracle_len(&self) -> usize {
        self.len()
    }
    fn bit(&self, pos: usize) -> bool {
        self[pos]
    }
}

impl OracleView for Vec<bool> {
    fn oracle_len(&self) -> usize {
        self.len()
    }
    fn bit(&self, pos: usize) -> bool {
        self[pos]
    }
}

impl OracleView for SeparatorSnapshot {
    fn oracle_len(&self) -> usize {
        self.len()
    }
    fn bit(&self, pos: usize) -> bool {
        self.bits()[pos]
    }
}

/// The stage-`s` snapshot of a [`StageSet`] read as a string of length `len`.
#[derive(Debug, Clone, Copy)]
pub struct SetOracle<'a> {
    pub set: &'a StageSet,
    pub stage: Stage,
    pub len: usize,
}

impl OracleView for SetOracle<'_> {
    fn oracle_len(&self) -> usize {
        self.len
    }
    fn bit(&self, pos: usize) -> bool {
        self.set.contains_at(pos, self.stage)
    }
}

/// The first `len` bits of another oracle.
pub struct Prefix<'a, O: OracleView + ?Sized> {
    pub inner: &'a O,
    pub len: usize,
}

impl<O: OracleView + ?Sized> OracleView for Prefix<'_, O> {
    fn oracle_len(&self) -> usize {
        self.len.min(self.inner.oracle_len())
    }
    fn bit(&self, pos: usize) -> bool {
        self.inner.bit(pos)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub guard: Vec<(usize, bool)>,
    pub input: usize,
    pub output: bool,
    pub use_: usize,
    pub available_at: Stage,
}

impl Rule {
    pub fn new(guard: Vec<(usize, bool)>, input: usize, output: bool, use_: usize) -> Self {
        Rule {
            guard,
            input,
            output,
            use_,
            available_at: 0,
        }
    }

    pub fn available_at(mut self, s: Stage) -> Self {
        self.available_at = s;
        self
    }

    pub fn matches<O: OracleView + ?Sized>(&self, oracle: &O) -> bool {
        self.use_ <= oracle.oracle_len() && self.guard.iter().all(|&(p, b)| oracle.bit(p) == b)
    }

    fn compatible(&self, other: &Rule) -> bool {
        self.guard.iter().all(|&(p, b)| {
            other
                .guard
                .iter()
                .all(|&(q, c)| p != q || b == c)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    Halted { output: bool, use_: usize },
    Diverged,
}

impl Evaluation {
    pub fn output(self) -> Option<bool> {
        match self {
            Evaluation::Halted { output, .. } => Some(output),
            Evaluation::Diverged => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleProgram {
    rules: Vec<Rule>,
    by_input: BTreeMap<usize, Vec<usize>>,
    /// Families the leading rules were expanded from.
    families: Vec<Family>,
    expanded: usize,
}

impl OracleProgram {
    /// The nowhere-convergent program.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates use-honesty and determinism.
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        let mut by_input: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, r) in rules.iter().enumerate() {
            if let Some(&(p, _)) = r.guard.iter().find(|&&(p, _)| p >= r.use_) {
                return Err(Error::InvalidProgram(format!(
                    "rule {idx} (input {}) reads position {p} at or beyond its use {}",
                    r.input, r.use_
                )));
            }
            for (j, &(p, b)) in r.guard.iter().enumerate() {
                if r.guard[..j].iter().any(|&(q, c)| q == p && c != b) {
                    return Err(Error::InvalidProgram(format!(
                        "rule {idx} (input {}) has contradictory guard at position {p}",
                        r.input
                    )));
                }
            }
            let same = by_input.entry(r.input).or_default();
            for &other in same.iter() {
                let o = &rules[other];
                if r.compatible(o) && (r.output != o.output || r.use_ != o.use_) {
                    return Err(Error::InvalidProgram(format!(
                        "rules {other} and {idx} on input {} have compatible guards but disagree",
                        r.input
                    )));
                }
            }
            same.push(idx);
        }
        Ok(OracleProgram {
            rules,
            by_input,
            families: Vec::new(),
            expanded: 0,
        })
    }

    /// The expansion of `families` followed by `rules`, validated as one program.
    pub fn with_families(families: Vec<Family>, rules: Vec<Rule>) -> Result<Self> {
        let mut all: Vec<Rule> = families.iter().flat_map(Family::rules).collect();
        let expanded = all.len();
        all.extend(rules);
        let mut p = Self::new(all)?;
        p.families = families;
        p.expanded = expanded;
        Ok(p)
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    /// Rules not produced by a family.
    pub fn explicit_rules(&self) -> &[Rule] {
        &self.rules[self.expanded..]
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules_for(&self, y: usize) -> impl Iterator<Item = &Rule> + '_ {
        self.by_input
            .get(&y)
            .into_iter()
            .flatten()
            .map(move |&i| &self.rules[i])
    }

    /// Largest use over all rules.
    pub fn max_use(&self) -> usize {
        self.rules.iter().map(|r| r.use_).max().unwrap_or(0)
    }

    /// `Φ^oracle(y)[s]`: the visible matching rule of least use (ties broken
    /// by least availability stage), or divergence.
    pub fn evaluate<O: OracleView + ?Sized>(&self, oracle: &O, y: usize, s: Stage) -> Evaluation {
        self.rules_for(y)
            .filter(|r| r.available_at <= s && r.matches(oracle))
            .min_by_key(|r| (r.use_, r.available_at))
            .map_or(Evaluation::Diverged, |r| Evaluation::Halted {
                output: r.output,
                use_: r.use_,
            })
    }

    /// On input `y` (for `y` in `inputs`), output the oracle bit at `y + offset`.
    pub fn copy_family(inputs: std::ops::Range<usize>, offset: usize, available_at: Stage) -> Vec<Rule> {
        inputs
            .flat_map(|y| {
                let p = y + offset;
                [false, true]
                    .map(|b| Rule::new(vec![(p, b)], y, b, p + 1).available_at(available_at))
            })
            .collect()
    }

    /// On input `y` (for `y` in `inputs`), output `value` without reading the oracle.
    pub fn constant_family(inputs: std::ops::Range<usize>, value: bool, available_at: Stage) -> Vec<Rule> {
        inputs
            .map(|y| Rule::new(vec![], y, value, 0).available_at(available_at))
            .collect()
    }
}

/// A run of inputs `[from, to)` answered by one pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    pub from: usize,
    pub to: usize,
    #[serde(flatten)]
    pub kind: FamilyKind,
    pub available_at: Stage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// Input `y` answers the bit at `y + offset`, negated if asked.
    Copy { offset: usize, negated: bool },
    /// Every input answers the bit at `position`, negated if asked.
    Read { position: usize, negated: bool },
    Constant { value: bool },
}

impl Family {
    pub fn rules(&self) -> Vec<Rule> {
        let at = self.available_at;
        let bit_rules = |y: usize, p: usize, negated: bool| {
            [false, true].map(|b| Rule::new(vec![(p, b)], y, b != negated, p + 1).available_at(at))
        };
        match self.kind {
            FamilyKind::Copy { offset, negated } => (self.from..self.to).flat_map(|y| bit_rules(y, y + offset, negated)).collect(),
            FamilyKind::Read { position, negated } => (self.from..self.to).flat_map(|y| bit_rules(y, position, negated)).collect(),
            FamilyKind::Constant { value } => OracleProgram::constant_family(self.from..self.to, value, at),
        }
    }
}

/// A finite monotone table `x ↦ f(x)` with `f(x) > x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UseBound {
    table: Vec<usize>,
}

impl UseBound {
    pub fn new(table: Vec<usize>) -> Result<Self> {
        for (x, &fx) in table.iter().enumerate() {
            if fx <= x {
                return Err(Error::InvalidBound(format!("f({x}) = {fx} is not > {x}")));
            }
            if x > 0 && table[x - 1] > fx {
                return Err(Error::InvalidBound(format!(
                    "f({}) = {} > f({x}) = {fx}",
                    x - 1,
                    table[x - 1]
                )));
            }
        }
        Ok(UseBound { table })
    }

    /// `f(x) = x + delta` on `[0, len)`.
    pub fn shift(len: usize, delta: usize) -> Result<Self> {
        Self::new((0..len).map(|x| x + delta).collect())
    }

    pub fn get(&self, x: usize) -> Result<usize> {
        self.table
            .get(x)
            .copied()
            .ok_or(Error::BoundTableExhausted { x })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }
}

/// A wtt operator: a program whose use on `x` never exceeds `bound(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UseBoundedOperator {
    program: OracleProgram,
    bound: UseBound,
}

impl UseBoundedOperator {
    pub fn new(program: OracleProgram, bound: UseBound) -> Result<Self> {
        for r in program.rules() {
            let fx = bound.get(r.input)?;
            if r.use_ > fx {
                return Err(Error::InvalidProgram(format!(
                    "rule on input {} has use {} > f({}) = {fx}",
                    r.input, r.use_, r.input
                )));
            }
        }
        Ok(UseBoundedOperator { program, bound })
    }

    pub fn program(&self) -> &OracleProgram {
        &self.program
    }

    pub fn bound(&self) -> &UseBound {
        &self.bound
    }

    /// Evaluates on the oracle cut to length `f(x)`.
    pub fn apply<O: OracleView + ?Sized>(&self, oracle: &O, x: usize, s: Stage) -> Result<Option<bool>> {
        let fx = self.bound.get(x)?;
        let cut = Prefix { inner: oracle, len: fx };
        Ok(self.program.evaluate(&cut, x, s).output())
    }

    /// `op^oracle ↾ (x+1) = target ↾ (x+1)`, all computations convergent.
    pub fn agrees_below<O: OracleView + ?Sized>(
        &self,
        oracle: &O,
        target: impl Fn(usize) -> bool,
        x: usize,
        s: Stage,
    ) -> Result<bool> {
        for y in 0..=x {
            if self.apply(oracle, y, s)? != Some(target(y)) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Free-function form of [`UseBoundedOperator::apply`] on a finite set.
pub fn wtt_apply(
    op: &UseBoundedOperator,
    oracle: &std::collections::BTreeSet<usize>,
    x: usize,
    s: Stage,
) -> Result<Option<bool>> {
    let fx = op.bound().get(x)?;
    let bits = SeparatorSnapshot::from_set(oracle, fx);
    op.apply(&bits, x, s)
}

/// Free-function form of [`OracleProgram::evaluate`].
pub fn evaluate(prog: &OracleProgram, oracle: &SeparatorSnapshot, y: usize, s: Stage) -> Evaluation {
    prog.evaluate(oracle, y, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn all_strings(len: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1u32 << len).map(move |m| (0..len).map(|i| m >> i & 1 == 1).collect())
    }

    /// Random valid program: every rule on input y uses a full guard on the
    /// positions below its use, so compatible guards with different uses
    /// are avoided by giving each input a single use.
    fn random_program(rng: &mut ChaCha8Rng, n_rules: usize) -> OracleProgram {
        let mut rules = Vec::new();
        let mut uses = BTreeMap::new();
        while rules.len() < n_rules {
            let input = rng.gen_range(0..4);
            let use_ = *uses.entry(input).or_insert_with(|| rng.gen_range(1..=6));
            let guard: Vec<(usize, bool)> = (0..use_).map(|p| (p, rng.gen())).collect();
            let candidate = Rule::new(guard, input, rng.gen(), use_).available_at(rng.gen_range(0..3));
            let mut trial = rules.clone();
            trial.push(candidate);
            if OracleProgram::new(trial.clone()).is_ok() {
                rules = trial;
            }
        }
        OracleProgram::new(rules).unwrap()
    }

    #[test]
    fn empty_program_diverges() {
        let p = OracleProgram::empty();
        for y in 0..5 {
            assert_eq!(p.evaluate(&vec![true, false], y, 10), Evaluation::Diverged);
        }
    }

    #[test]
    fn direct_match() {
        let p = OracleProgram::new(vec![Rule::new(vec![(0, true)], 5, false, 1)]).unwrap();
        let o = SeparatorSnapshot::parse("1011").unwrap();
        assert_eq!(
            evaluate(&p, &o, 5, 0),
            Evaluation::Halted {
                output: false,
                use_: 1
            }
        );
        // Oracle shorter than the use diverges.
        let q = OracleProgram::new(vec![Rule::new(vec![(0, true)], 5, false, 3)]).unwrap();
        assert_eq!(q.evaluate(&vec![true, true], 5, 0), Evaluation::Diverged);
    }

    #[test]
    fn availability_delays_convergence() {
        let p = OracleProgram::new(vec![Rule::new(vec![], 0, true, 0).available_at(4)]).unwrap();
        assert_eq!(p.evaluate(&vec![], 0, 3), Evaluation::Diverged);
        assert_eq!(p.evaluate(&vec![], 0, 4).output(), Some(true));
    }

    #[test]
    fn invalid_programs_rejected() {
        assert!(OracleProgram::new(vec![Rule::new(vec![(2, true)], 0, true, 2)]).is_err());
        assert!(OracleProgram::new(vec![
            Rule::new(vec![(0, true)], 0, true, 1),
            Rule::new(vec![], 0, false, 1),
        ])
        .is_err());
        assert!(OracleProgram::new(vec![
            Rule::new(vec![(0, true)], 0, true, 1),
            Rule::new(vec![(0, false)], 0, false, 1),
        ])
        .is_ok());
    }

    #[test]
    fn evaluate_agrees_with_rule_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_program(&mut rng, 10);
            for len in 0..=6 {
                for o in all_strings(len) {
                    for y in 0..4 {
                        for s in 0..4 {
                            let scan: Vec<&Rule> = p
                                .rules()
                                .iter()
                                .filter(|r| {
                                    r.input == y
                                        && r.available_at <= s
                                        && r.use_ <= o.len()
                                        && r.guard.iter().all(|&(q, b)| o[q] == b)
                                })
                                .collect();
                            let expect = scan
                                .iter()
                                .min_by_key(|r| (r.use_, r.available_at))
                                .map_or(Evaluation::Diverged, |r| Evaluation::Halted {
                                    output: r.output,
                                    use_: r.use_,
                                });
                            assert_eq!(p.evaluate(&o, y, s), expect);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn use_honesty_by_bit_flipping() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let p = random_program(&mut rng, 10);
            for o in all_strings(8) {
                for y in 0..4 {
                    let r = p.evaluate(&o, y, 5);
                    if let Evaluation::Halted { use_, .. } = r {
                        for flip in use_..8 {
                            let mut o2 = o.clone();
                            o2[flip] = !o2[flip];
                            assert_eq!(p.evaluate(&o2, y, 5), r);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn convergence_is_stage_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let p = random_program(&mut rng, 10);
            for o in all_strings(6) {
                for y in 0..4 {
                    for s in 0..4 {
                        if let r @ Evaluation::Halted { .. } = p.evaluate(&o, y, s) {
                            for t in s..8 {
                                assert_eq!(p.evaluate(&o, y, t), r);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn use_bound_validation() {
        assert!(UseBound::new(vec![1, 2, 3]).is_ok());
        assert!(UseBound::new(vec![1, 1, 3]).is_err());
        assert!(UseBound::new(vec![2, 1]).is_err());
        let f = UseBound::shift(3, 1).unwrap();
        assert_eq!(f.get(3), Err(Error::BoundTableExhausted { x: 3 }));
    }

    fn identity_operator(len: usize) -> UseBoundedOperator {
        let rules = OracleProgram::copy_family(0..len, 0, 0);
        UseBoundedOperator::new(OracleProgram::new(rules).unwrap(), UseBound::shift(len, 1).unwrap()).unwrap()
    }

    #[test]
    fn wtt_identity_examples() {
        let op = identity_operator(10);
        assert_eq!(wtt_apply(&op, &BTreeSet::from([2]), 2, 0).unwrap(), Some(true));
        assert_eq!(wtt_apply(&op, &BTreeSet::new(), 2, 0).unwrap(), Some(false));
        assert_eq!(
            wtt_apply(&op, &BTreeSet::new(), 10, 0),
            Err(Error::BoundTableExhausted { x: 10 })
        );
    }

    #[test]
    fn operator_rejects_use_above_bound() {
        let rules = OracleProgram::copy_family(0..3, 1, 0);
        let prog = OracleProgram::new(rules).unwrap();
        assert!(UseBoundedOperator::new(prog.clone(), UseBound::shift(3, 1).unwrap()).is_err());
        assert!(UseBoundedOperator::new(prog, UseBound::shift(3, 2).unwrap()).is_ok());
    }

    #[test]
    fn agreement_matches_bitwise_comparison() {
        // Γ copies A shifted by one into B: B(x) = A(x+1).
        let rules = OracleProgram::copy_family(0..9, 1, 0);
        let op = UseBoundedOperator::new(OracleProgram::new(rules).unwrap(), UseBound::shift(9, 2).unwrap()).unwrap();
        let a = StageSet::from_events([(1, 0), (4, 2), (7, 3)], 5).unwrap();
        let b = StageSet::from_events([(0, 0), (3, 2), (6, 3)], 5).unwrap();
        for x in 0..=8 {
            let oracle = SetOracle { set: &a, stage: 5, len: 12 };
            let brute = (0..=x).all(|y| a.contains(y + 1) == b.contains(y));
            assert_eq!(op.agrees_below(&oracle, |y| b.contains(y), x, 5).unwrap(), brute);
        }
        // At stage 2 the pair is not yet in step.
        let early = SetOracle { set: &a, stage: 2, len: 12 };
        assert!(op.agrees_below(&early, |y| b.contains_at(y, 2), 8, 2).unwrap());
        assert!(!op.agrees_below(&early, |y| b.contains_at(y, 5), 8, 2).unwrap());
    }
}
