//! Random scripted inputs that keep the requirements busy.
//!
//! Each `Φ_e` answers short runs of inputs below `inputs`, either outright
//! or by reading one bit of `W_e`, with answers appearing at random stages. `W_e`
//! and `K` enumerate small numbers, so axioms get invalidated and promoted.
//! After a first pass, a few columns are made to enter `C` at stages where
//! one of their codes is blocked or already in `A`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{run_twodegrees, TwoDegreesInput};
use crate::enumcore::{pair, Stage, StageSet};
use crate::error::Result;
use crate::functionals::{Family, FamilyKind, OracleProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TdParams {
    pub horizon: Stage,
    pub seed: u64,
    pub functionals: usize,
    /// Inputs on which each functional may answer.
    pub inputs: usize,
    /// `W_e`, `K` and `C` draw from `[0, small)`, `[0, small)`, `[0, columns]`.
    pub small: usize,
    pub columns: usize,
    /// Extra `C` entries aimed at columns under pressure.
    pub targeted: usize,
}

impl TdParams {
    pub fn new(horizon: Stage, seed: u64) -> Self {
        TdParams {
            horizon,
            seed,
            functionals: 5,
            inputs: 120,
            small: 8,
            columns: 10,
            targeted: 3,
        }
    }
}

fn random_set(rng: &mut ChaCha8Rng, range: usize, count: usize, horizon: Stage) -> Result<StageSet> {
    let mut set = StageSet::new(horizon);
    for _ in 0..count {
        let x = rng.gen_range(0..range);
        let s = rng.gen_range(0..=horizon);
        if !set.contains(x) {
            set.enumerate(x, s)?;
        }
    }
    StageSet::from_events(set.events().iter().copied(), horizon)
}

fn random_program(rng: &mut ChaCha8Rng, inputs: usize, bits: usize, horizon: Stage) -> Result<OracleProgram> {
    let mut families = Vec::new();
    let mut from = 0;
    while from < inputs {
        let to = (from + rng.gen_range(1..=6)).min(inputs);
        if rng.gen_bool(0.015) {
            from = to;
            continue;
        }
        let available_at = if rng.gen_bool(0.6) { 0 } else { rng.gen_range(0..horizon / 3) };
        let kind = if rng.gen_bool(0.6) {
            FamilyKind::Constant { value: !rng.gen_bool(0.35) }
        } else {
            FamilyKind::Read {
                position: rng.gen_range(0..bits),
                negated: rng.gen(),
            }
        };
        families.push(Family {
            from,
            to,
            kind,
            available_at,
        });
        from = to;
    }
    OracleProgram::with_families(families, Vec::new())
}

/// The first stage at which some `⟨n, i⟩`, `i ≤ n²`, is in `A` or blocked,
/// among columns not yet in `C`.
fn pressured_column(input: &TwoDegreesInput, columns: usize, rng: &mut ChaCha8Rng) -> Result<Option<(usize, Stage)>> {
    let st = run_twodegrees(input)?;
    let mut found = Vec::new();
    for n in 0..=columns {
        if input.c.contains(n) {
            continue;
        }
        let first = (0..=n * n)
            .map(|i| pair(n, i))
            .filter_map(|code| {
                let blocked = st.axioms.iter().filter(|ax| ax.x == code).map(|ax| ax.created_at);
                blocked.chain(st.a.entry_stage(code)).min()
            })
            .min();
        if let Some(s) = first {
            found.push((n, s));
        }
    }
    if found.is_empty() {
        return Ok(None);
    }
    Ok(Some(found[rng.gen_range(0..found.len())]))
}

/// A scripted input drawn from `p`.
pub fn random_scenario(p: TdParams) -> Result<TwoDegreesInput> {
    let h = p.horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let bits = p.small.min(6).max(1);
    let w = (0..p.functionals)
        .map(|_| {
            let count = rng.gen_range(0..=bits);
            random_set(&mut rng, bits, count, h)
        })
        .collect::<Result<Vec<_>>>()?;
    let phi = (0..p.functionals)
        .map(|_| random_program(&mut rng, p.inputs, bits, h))
        .collect::<Result<Vec<_>>>()?;
    let k_count = rng.gen_range(1..=p.small);
    let k = random_set(&mut rng, p.small, k_count, h)?;
    let c_count = rng.gen_range(1..=p.columns / 2);
    let c = random_set(&mut rng, p.columns + 1, c_count, h)?;
    let mut input = TwoDegreesInput {
        horizon: h,
        c,
        k,
        w,
        phi,
        column_guard: true,
    };
    for _ in 0..p.targeted {
        let Some((n, s)) = pressured_column(&input, p.columns, &mut rng)? else {
            break;
        };
        let mut events = input.c.events().to_vec();
        events.push((n, s));
        input.c = StageSet::from_events(events, h)?;
    }
    Ok(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_runs_are_clean() {
        for seed in 0..3 {
            let input = random_scenario(TdParams::new(300, seed)).unwrap();
            let st = run_twodegrees(&input).unwrap();
            let trace = super::super::TdTrace {
                horizon: input.horizon,
                c: input.c.clone(),
                k: input.k.clone(),
                w: input.w.clone(),
                phi: input.phi.clone(),
                a: st.a.clone(),
                b: st.b.clone(),
                axioms: st.axioms.clone(),
                events: st.events.clone(),
            };
            let report = super::super::verify_twodegrees_trace(&trace);
            assert!(report.passed(), "seed {seed}\n{}", report.render());
            assert!(!st.axioms.is_empty());
        }
    }
}
