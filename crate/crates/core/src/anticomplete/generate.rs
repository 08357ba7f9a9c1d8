//! Random opponents: each `Φ_e` answers runs of inputs by bit copies,
//! negated copies or constants, switched on at random stages.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::functionals::{Family, FamilyKind, OracleProgram};

/// Inputs `[0, inputs)` cut into runs, each answered by one family.
fn random_program(rng: &mut ChaCha8Rng, inputs: usize) -> Result<OracleProgram> {
    let style = rng.gen_range(0..4);
    let offset = rng.gen_range(0..6);
    let base_at = rng.gen_range(0..40);
    let mut families = Vec::new();
    let mut from = 0;
    while from < inputs {
        let to = (from + rng.gen_range(20..150)).min(inputs);
        let available_at = if rng.gen_bool(0.8) { base_at } else { rng.gen_range(0..200) };
        let kind = match style {
            0 => FamilyKind::Copy { offset, negated: false },
            1 => FamilyKind::Constant { value: rng.gen_bool(0.2) },
            2 if rng.gen_bool(0.7) => FamilyKind::Copy {
                offset: rng.gen_range(0..4),
                negated: false,
            },
            2 => FamilyKind::Constant { value: rng.gen() },
            _ => FamilyKind::Copy { offset, negated: true },
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

/// `count` opponents answering on inputs below `inputs`, reproducible from `seed`.
pub fn random_adversary(seed: u64, count: usize, inputs: usize) -> Result<Vec<OracleProgram>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_program(&mut rng, inputs)).collect()
}
