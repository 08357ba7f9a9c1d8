//! Checker for upclosure traces. Each recorded artifact (blocks, `Z`,
//! decodes, holes, recoveries) is compared against a recomputation from the
//! scripted inputs alone, so a corrupted artifact fails only its own verdict.

use std::collections::BTreeSet;

use super::{agreements, classify_case, recover_m_next, CaseTag, MSequence, UpclosureInstance, UpclosureRun};
use crate::enumcore::{is_separator, SeparatorSnapshot, Stage};
use crate::functionals::SetOracle;
use crate::harness::report::{Counterexample, Verdict, VerificationReport};

pub const VERDICTS: [&str; 7] = [
    "hypotheses",
    "case_consistency",
    "m_sequence",
    "separator",
    "round_trip",
    "mutual_exclusion",
    "m_recovery",
];

#[derive(Debug, Clone)]
pub struct UcTrace {
    pub instance: UpclosureInstance,
    pub run: UpclosureRun,
}

/// Block boundaries straight from the definition, on horizon snapshots.
fn direct_m(inst: &UpclosureInstance) -> Option<Vec<i64>> {
    let h = inst.horizon;
    let union: BTreeSet<usize> = inst
        .a
        .snapshot(h)
        .ok()?
        .union(&inst.b.snapshot(h).ok()?)
        .copied()
        .collect();
    let inside = |lo: i64, hi: usize| ((lo + 1) as usize..=hi).all(|y| union.contains(&y));
    let f = inst.f.table();
    let mut m: Vec<i64> = Vec::new();
    match inst.case {
        CaseTag::Case1 { k } => {
            m.push(k as i64);
            while m.len() < inst.blocks + 1 {
                m.push(*f.get(*m.last()? as usize)? as i64);
            }
        }
        CaseTag::Case2 => {
            m.push(-1);
            while m.len() < inst.blocks + 1 {
                let prev = *m.last()?;
                let x = ((prev + 1) as usize..f.len()).find(|&x| !inside(prev, x) && inside(x as i64, f[x]))?;
                m.push(x as i64);
            }
        }
    }
    Some(m)
}

fn direct_z(inst: &UpclosureInstance, m: &[i64]) -> SeparatorSnapshot {
    let h = inst.horizon;
    let len = (*m.last().unwrap_or(&-1) + 1) as usize;
    let bits = (0..len)
        .map(|y| {
            let block = m.windows(2).position(|w| w[0] < y as i64 && y as i64 <= w[1]);
            match block {
                Some(n) if inst.c.contains_at(n, h) => !inst.b.contains_at(y, h),
                _ => inst.a.contains_at(y, h),
            }
        })
        .collect();
    SeparatorSnapshot::new(bits)
}

/// Stage-by-stage agreement scan written against snapshots.
fn direct_decode(inst: &UpclosureInstance, z: &SeparatorSnapshot, lo: i64, hi: i64) -> Option<(bool, Stage)> {
    for s in 0..=inst.horizon {
        let a = inst.a.snapshot(s).ok()?;
        let b = inst.b.snapshot(s).ok()?;
        let block = (lo + 1) as usize..=hi as usize;
        let with_a = block.clone().all(|y| z.get(y) == Some(a.contains(&y)));
        let with_cob = block.into_iter().all(|y| z.get(y) == Some(!b.contains(&y)));
        if with_a != with_cob {
            return Some((with_cob, s));
        }
    }
    None
}

pub fn verify_upclosure_trace(t: &UcTrace) -> VerificationReport {
    let inst = &t.instance;
    let run = &t.run;
    let h = inst.horizon;
    let mut hyp = Verdict::new(VERDICTS[0], "A and B are disjoint, Gamma^A = B, Delta^B = A, and holes remain");
    let mut case_v = Verdict::new(VERDICTS[1], "the declared case is consistent with the covered intervals at the horizon");
    let mut m_v = Verdict::new(VERDICTS[2], "the block boundaries follow the case definition and increase strictly");
    let mut sep = Verdict::new(VERDICTS[3], "Z is a separator copying A or co-B blockwise according to C");
    let mut rt = Verdict::new(VERDICTS[4], "decoding Z block by block returns C");
    let mut mx = Verdict::new(VERDICTS[5], "no block agrees with both A_s and co-B_s at any stage");
    let mut rec = Verdict::new(VERDICTS[6], "the least x found by the stage search equals the next block boundary");
    let mut caveats = Vec::new();

    let oracle_len = inst.f.table().last().copied().unwrap_or(0).max(inst.domain);
    let a_h = SetOracle { set: &inst.a, stage: h, len: oracle_len };
    let b_h = SetOracle { set: &inst.b, stage: h, len: oracle_len };
    for x in 0..inst.domain {
        hyp.check(!(inst.a.contains_at(x, h) && inst.b.contains_at(x, h)), || {
            Counterexample::at(h, "element in A and B").element(x)
        });
        hyp.check(inst.gamma.apply(&a_h, x, h).ok().flatten() == Some(inst.b.contains_at(x, h)), || {
            Counterexample::at(h, "Gamma^A differs from B").element(x)
        });
        hyp.check(inst.delta.apply(&b_h, x, h).ok().flatten() == Some(inst.a.contains_at(x, h)), || {
            Counterexample::at(h, "Delta^B differs from A").element(x)
        });
    }
    let report = classify_case(&inst.a, &inst.b, &inst.f, inst.domain, h, inst.case);
    hyp.check(report.holes_ok, || {
        Counterexample::at(h, format!("only {} holes in a domain of {}", report.holes, inst.domain))
    });
    case_v.check(report.consistent, || {
        Counterexample::at(h, format!("{:?} inconsistent with covered x {:?}", inst.case, report.covered_xs))
    });

    if !hyp.passed || !case_v.passed {
        caveats.push("hypotheses or case declaration failed; dependent verdicts not evaluated".into());
        return VerificationReport {
            construction: "upclosure".into(),
            verdicts: vec![hyp, case_v],
            caveats,
        };
    }
    caveats.push("the case split is certified only at the horizon, not in the limit".into());

    let Some(m) = direct_m(inst) else {
        m_v.fail(Counterexample::at(h, "block boundaries not witnessed below the horizon"));
        return VerificationReport {
            construction: "upclosure".into(),
            verdicts: vec![hyp, case_v, m_v],
            caveats,
        };
    };
    m_v.check(run.m.values == m, || {
        Counterexample::at(h, format!("recorded {:?}, direct {:?}", run.m.values, m))
    });
    m_v.check(run.m.is_strictly_increasing(), || Counterexample::at(h, "not strictly increasing"));

    let z = direct_z(inst, &m);
    let recorded_z = SeparatorSnapshot::parse(&run.z);
    sep.check(recorded_z.as_ref() == Some(&z), || {
        Counterexample::at(h, format!("recorded Z {} differs from the blockwise definition {z}", run.z))
    });
    if let Some(rz) = &recorded_z {
        let len = rz.len();
        let a: BTreeSet<usize> = inst.a.range_at(0, len, h).collect();
        let b: BTreeSet<usize> = inst.b.range_at(0, len, h).collect();
        sep.check(is_separator(rz, &a, &b).unwrap_or(false), || {
            Counterexample::at(h, "recorded Z is not a separator of A and B")
        });
    }

    for n in 0..inst.blocks {
        let (lo, hi) = (m[n], m[n + 1]);
        let want = inst.c.contains_at(n, h);
        let direct = direct_decode(inst, &z, lo, hi);
        rt.check(direct.map(|d| d.0) == Some(want), || {
            Counterexample::at(h, format!("block {n} decodes to {direct:?}, C says {want}")).element(n)
        });
        rt.check(run.decoded.get(n).copied() == direct, || {
            Counterexample::at(h, format!("recorded decode {:?}, direct {direct:?}", run.decoded.get(n))).element(n)
        });

        let hole = run.holes.get(n).copied();
        let hole_ok = hole.is_some_and(|y| {
            (lo < y as i64 && y as i64 <= hi) && !inst.a.contains_at(y, h) && !inst.b.contains_at(y, h)
        });
        mx.check(hole_ok, || {
            Counterexample::at(h, format!("recorded hole {hole:?} is not a hole of block {n}")).element(n)
        });
        for s in 0..=h {
            let (with_a, with_cob) = agreements(&z, &inst.a, &inst.b, lo, hi, s);
            mx.check(!(with_a && with_cob), || {
                Counterexample::at(s, format!("block {n} agrees with A_s and co-B_s")).element(n)
            });
        }
    }

    if inst.case == CaseTag::Case2 {
        for n in 0..inst.blocks {
            let prefix = MSequence {
                values: m[..=n].to_vec(),
            };
            let found = recover_m_next(&z, &inst.a, &inst.b, &inst.gamma, &inst.delta, &inst.f, &prefix, inst.domain, h);
            let want = m[n + 1];
            rec.check(matches!(found, Ok((y, _)) if y == want), || {
                Counterexample::at(h, format!("search gives {found:?}, m_{} = {want}", n + 1)).element(n)
            });
            rec.check(run.recovered.get(n).is_some_and(|r| r.0 == want) && run.recovered.get(n) == found.as_ref().ok(), || {
                Counterexample::at(h, format!("recorded recovery {:?}", run.recovered.get(n))).element(n)
            });
            if let (Ok((_, s)), Some((bit, ds))) = (&found, run.decoded.get(n)) {
                if ds > s {
                    caveats.push(format!("block {n}: decoded {bit} at stage {ds}, after the recovery stage {s}"));
                }
            }
        }
    } else {
        rec.check(run.recovered.is_empty(), || Counterexample::at(h, "case 1 trace records recoveries"));
    }

    VerificationReport {
        construction: "upclosure".into(),
        verdicts: vec![hyp, case_v, m_v, sep, rt, mx, rec],
        caveats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::upclosure::{random_settled, run_upclosure};

    #[test]
    fn random_instances_verify_clean() {
        for case in [1u8, 2] {
            for seed in 0..25 {
                let instance = random_settled(case, seed).unwrap();
                let run = run_upclosure(&instance).unwrap();
                let report = verify_upclosure_trace(&UcTrace { instance, run });
                assert!(report.passed(), "case {case} seed {seed}\n{}", report.render());
            }
        }
    }

    #[test]
    fn flipped_z_bit_fails_only_separator() {
        let instance = random_settled(1, 3).unwrap();
        let mut run = run_upclosure(&instance).unwrap();
        let mut bits: Vec<char> = run.z.chars().collect();
        bits[0] = if bits[0] == '1' { '0' } else { '1' };
        run.z = bits.into_iter().collect();
        let report = verify_upclosure_trace(&UcTrace { instance, run });
        assert_eq!(report.failing(), vec!["separator"]);
    }
}
