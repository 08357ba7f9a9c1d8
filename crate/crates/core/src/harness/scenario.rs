//! Scenario files: a header record, then one record per scripted element,
//! rule family, rule, use-bound table or certificate. Every record is one
//! JSON object on its own line, tagged by `record`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::enumcore::{Stage, StageSet};
use crate::error::{Error, Result};
use crate::functionals::{Family, OracleProgram, Rule, SetOracle, UseBound, UseBoundedOperator};
use crate::nosupermax::{Parity, SpeedupCertificate};
use crate::twodegrees::TwoDegreesInput;
use crate::upclosure::{CaseTag, UpclosureInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Anticomplete,
    Upclosure,
    Nosupermax,
    Twodegrees,
}

impl Construction {
    pub const ALL: [Construction; 4] = [
        Construction::Anticomplete,
        Construction::Upclosure,
        Construction::Nosupermax,
        Construction::Twodegrees,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Construction::Anticomplete => "anticomplete",
            Construction::Upclosure => "upclosure",
            Construction::Nosupermax => "nosupermax",
            Construction::Twodegrees => "twodegrees",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Construction {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Construction::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown construction {s:?}"))
    }
}

/// One line of a scenario file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ScenarioRecord {
    Scenario {
        construction: Construction,
        horizon: Stage,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        description: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        blocks: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        case: Option<CaseTag>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        column_guard: Option<bool>,
        /// Number of `Φ_e` (and `W_e`) slots, so trailing empty ones survive.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        programs: Option<usize>,
    },
    Element {
        set: String,
        x: usize,
        stage: Stage,
    },
    Family {
        program: String,
        #[serde(flatten)]
        family: Family,
    },
    Rule {
        program: String,
        input: usize,
        guard: Vec<(usize, bool)>,
        output: bool,
        #[serde(rename = "use")]
        use_: usize,
        available_at: Stage,
    },
    UseBound {
        table: Vec<usize>,
    },
    Certificate {
        attempt: usize,
        ell: i64,
        k: i64,
        parity: Parity,
        settling_stage: Stage,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioBody {
    Anticomplete {
        horizon: Stage,
        programs: Vec<OracleProgram>,
    },
    Upclosure(UpclosureInstance),
    Nosupermax {
        a: StageSet,
        b: StageSet,
        certificates: Vec<SpeedupCertificate>,
        window: Option<usize>,
    },
    Twodegrees(TwoDegreesInput),
}

/// A fully explicit scripted input for one construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub description: Option<String>,
    pub body: ScenarioBody,
}

impl Scenario {
    pub fn new(body: ScenarioBody) -> Self {
        Scenario { description: None, body }
    }

    pub fn described(mut self, text: impl Into<String>) -> Self {
        self.description = Some(text.into());
        self
    }

    pub fn construction(&self) -> Construction {
        match self.body {
            ScenarioBody::Anticomplete { .. } => Construction::Anticomplete,
            ScenarioBody::Upclosure(_) => Construction::Upclosure,
            ScenarioBody::Nosupermax { .. } => Construction::Nosupermax,
            ScenarioBody::Twodegrees(_) => Construction::Twodegrees,
        }
    }

    pub fn horizon(&self) -> Stage {
        match &self.body {
            ScenarioBody::Anticomplete { horizon, .. } => *horizon,
            ScenarioBody::Upclosure(inst) => inst.horizon,
            ScenarioBody::Nosupermax { a, .. } => a.horizon(),
            ScenarioBody::Twodegrees(input) => input.horizon,
        }
    }

    pub fn records(&self) -> Vec<ScenarioRecord> {
        let (mut domain, mut blocks, mut case, mut window, mut column_guard, mut slots) = (None, None, None, None, None, None);
        let mut out = Vec::new();
        match &self.body {
            ScenarioBody::Anticomplete { programs, .. } => {
                slots = Some(programs.len());
                push_programs(&mut out, "phi", programs);
            }
            ScenarioBody::Upclosure(inst) => {
                (domain, blocks, case) = (Some(inst.domain), Some(inst.blocks), Some(inst.case));
                push_set(&mut out, "A", &inst.a);
                push_set(&mut out, "B", &inst.b);
                push_set(&mut out, "C", &inst.c);
                out.push(ScenarioRecord::UseBound {
                    table: inst.f.table().to_vec(),
                });
                push_program(&mut out, "gamma".into(), inst.gamma.program());
                push_program(&mut out, "delta".into(), inst.delta.program());
            }
            ScenarioBody::Nosupermax {
                a,
                b,
                certificates,
                window: w,
            } => {
                window = *w;
                push_set(&mut out, "A", a);
                push_set(&mut out, "B", b);
                for c in certificates {
                    out.push(ScenarioRecord::Certificate {
                        attempt: c.attempt,
                        ell: c.ell,
                        k: c.k,
                        parity: c.parity,
                        settling_stage: c.settling_stage,
                    });
                }
            }
            ScenarioBody::Twodegrees(input) => {
                column_guard = (!input.column_guard).then_some(false);
                slots = Some(input.phi.len().max(input.w.len()));
                push_set(&mut out, "C", &input.c);
                push_set(&mut out, "K", &input.k);
                for (e, w) in input.w.iter().enumerate() {
                    push_set(&mut out, &format!("W{e}"), w);
                }
                push_programs(&mut out, "phi", &input.phi);
            }
        }
        out.insert(
            0,
            ScenarioRecord::Scenario {
                construction: self.construction(),
                horizon: self.horizon(),
                description: self.description.clone(),
                domain,
                blocks,
                case,
                window,
                column_guard,
                programs: slots,
            },
        );
        out
    }

    /// Canonical file contents.
    pub fn to_jsonl(&self) -> String {
        let mut text = String::new();
        for r in self.records() {
            text.push_str(&serde_json::to_string(&r).expect("records serialize"));
            text.push('\n');
        }
        text
    }

    /// Hex SHA-256 of the canonical contents.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }

    /// The same scenario cut (or stretched) to a new horizon; scripted
    /// events beyond it are dropped.
    pub fn with_horizon(&self, horizon: Stage) -> Result<Scenario> {
        let mut records = self.records();
        records.retain(|r| match r {
            ScenarioRecord::Element { stage, .. } => *stage <= horizon,
            ScenarioRecord::Certificate { settling_stage, .. } => *settling_stage <= horizon,
            _ => true,
        });
        if let Some(ScenarioRecord::Scenario { horizon: h, .. }) = records.first_mut() {
            *h = horizon;
        }
        from_records(records.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect())
    }
}

fn push_set(out: &mut Vec<ScenarioRecord>, name: &str, set: &StageSet) {
    let mut events = set.events().to_vec();
    events.sort_by_key(|&(x, s)| (s, x));
    for (x, stage) in events {
        out.push(ScenarioRecord::Element {
            set: name.to_string(),
            x,
            stage,
        });
    }
}

fn push_program(out: &mut Vec<ScenarioRecord>, name: String, p: &OracleProgram) {
    for f in p.families() {
        out.push(ScenarioRecord::Family {
            program: name.clone(),
            family: *f,
        });
    }
    for r in p.explicit_rules() {
        out.push(ScenarioRecord::Rule {
            program: name.clone(),
            input: r.input,
            guard: r.guard.clone(),
            output: r.output,
            use_: r.use_,
            available_at: r.available_at,
        });
    }
}

fn push_programs(out: &mut Vec<ScenarioRecord>, prefix: &str, programs: &[OracleProgram]) {
    for (e, p) in programs.iter().enumerate() {
        push_program(out, format!("{prefix}{e}"), p);
    }
}

fn schema(line: usize, message: impl Into<String>) -> Error {
    Error::Schema {
        line,
        message: message.into(),
    }
}

/// Index `e` of a name like `phi3` or `W3`.
fn indexed(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix).filter(|t| !t.is_empty()).and_then(|t| t.parse().ok())
}

#[derive(Default)]
struct ProgramParts {
    first_line: usize,
    families: Vec<Family>,
    rules: Vec<Rule>,
}

fn build_program(parts: Option<ProgramParts>, name: &str) -> Result<OracleProgram> {
    let Some(parts) = parts else {
        return Ok(OracleProgram::empty());
    };
    OracleProgram::with_families(parts.families, parts.rules).map_err(|e| schema(parts.first_line, format!("program {name}: {e}")))
}

fn from_records(records: Vec<(usize, ScenarioRecord)>) -> Result<Scenario> {
    let mut iter = records.into_iter();
    let Some((
        hline,
        ScenarioRecord::Scenario {
            construction,
            horizon,
            description,
            domain,
            blocks,
            case,
            window,
            column_guard,
            programs: slots,
        },
    )) = iter.next()
    else {
        return Err(schema(1, "first record must be the scenario header"));
    };

    let mut sets: BTreeMap<String, (usize, Vec<(usize, Stage)>)> = BTreeMap::new();
    let mut seen: BTreeSet<(String, usize)> = BTreeSet::new();
    let mut programs: BTreeMap<String, ProgramParts> = BTreeMap::new();
    let mut table: Option<Vec<usize>> = None;
    let mut certificates = Vec::new();

    let set_ok = |name: &str| match construction {
        Construction::Anticomplete => false,
        Construction::Upclosure => matches!(name, "A" | "B" | "C"),
        Construction::Nosupermax => matches!(name, "A" | "B"),
        Construction::Twodegrees => matches!(name, "C" | "K") || indexed(name, "W").is_some(),
    };
    let program_ok = |name: &str| match construction {
        Construction::Anticomplete | Construction::Twodegrees => indexed(name, "phi").is_some(),
        Construction::Upclosure => matches!(name, "gamma" | "delta"),
        Construction::Nosupermax => false,
    };

    for (line, rec) in iter {
        match rec {
            ScenarioRecord::Scenario { .. } => return Err(schema(line, "second scenario header")),
            ScenarioRecord::Element { set, x, stage } => {
                if !set_ok(&set) {
                    return Err(schema(line, format!("{construction} scenarios have no set {set:?}")));
                }
                if stage > horizon {
                    return Err(schema(
                        line,
                        format!("element {x} of {set} stamped {stage}, beyond the horizon {horizon}"),
                    ));
                }
                if !seen.insert((set.clone(), x)) {
                    return Err(schema(line, format!("element {x} of {set} listed twice")));
                }
                sets.entry(set).or_insert((line, Vec::new())).1.push((x, stage));
            }
            ScenarioRecord::Family { program, family } => {
                if !program_ok(&program) {
                    return Err(schema(line, format!("{construction} scenarios have no program {program:?}")));
                }
                if family.from > family.to {
                    return Err(schema(line, format!("family range {}..{} is reversed", family.from, family.to)));
                }
                let parts = programs.entry(program).or_insert_with(|| ProgramParts {
                    first_line: line,
                    ..Default::default()
                });
                parts.families.push(family);
            }
            ScenarioRecord::Rule {
                program,
                input,
                guard,
                output,
                use_,
                available_at,
            } => {
                if !program_ok(&program) {
                    return Err(schema(line, format!("{construction} scenarios have no program {program:?}")));
                }
                let parts = programs.entry(program).or_insert_with(|| ProgramParts {
                    first_line: line,
                    ..Default::default()
                });
                parts.rules.push(Rule::new(guard, input, output, use_).available_at(available_at));
            }
            ScenarioRecord::UseBound { table: t } => {
                if construction != Construction::Upclosure {
                    return Err(schema(line, "only upclosure scenarios carry a use bound"));
                }
                if table.replace(t).is_some() {
                    return Err(schema(line, "second use bound"));
                }
            }
            ScenarioRecord::Certificate {
                attempt,
                ell,
                k,
                parity,
                settling_stage,
            } => {
                if construction != Construction::Nosupermax {
                    return Err(schema(line, "only nosupermax scenarios carry certificates"));
                }
                certificates.push(SpeedupCertificate {
                    attempt,
                    ell,
                    k,
                    parity,
                    settling_stage,
                });
            }
        }
    }

    type Sets = BTreeMap<String, (usize, Vec<(usize, Stage)>)>;
    let take_set = |sets: &mut Sets, name: &str| -> Result<StageSet> {
        match sets.remove(name) {
            Some((line, events)) => StageSet::from_events(events, horizon).map_err(|e| schema(line, format!("set {name}: {e}"))),
            None => Ok(StageSet::new(horizon)),
        }
    };
    let body = match construction {
        Construction::Anticomplete => {
            let count = programs
                .keys()
                .filter_map(|n| indexed(n, "phi"))
                .map(|e| e + 1)
                .max()
                .unwrap_or(0)
                .max(slots.unwrap_or(0));
            let list = (0..count)
                .map(|e| build_program(programs.remove(&format!("phi{e}")), &format!("phi{e}")))
                .collect::<Result<Vec<_>>>()?;
            if let Some(name) = programs.keys().next() {
                return Err(schema(hline, format!("program {name} is not a canonical name")));
            }
            ScenarioBody::Anticomplete { horizon, programs: list }
        }
        Construction::Upclosure => {
            let need = |v: Option<usize>, what: &str| v.ok_or_else(|| schema(hline, format!("upclosure header needs {what}")));
            let domain = need(domain, "domain")?;
            let blocks = need(blocks, "blocks")?;
            let case = case.ok_or_else(|| schema(hline, "upclosure header needs case"))?;
            let f = UseBound::new(table.ok_or_else(|| schema(hline, "upclosure scenario needs a use bound"))?)
                .map_err(|e| schema(hline, e.to_string()))?;
            let gamma = build_program(programs.remove("gamma"), "gamma")?;
            let delta = build_program(programs.remove("delta"), "delta")?;
            let op = |p: OracleProgram, name: &str| {
                UseBoundedOperator::new(p, f.clone()).map_err(|e| schema(hline, format!("{name}: {e}")))
            };
            ScenarioBody::Upclosure(UpclosureInstance {
                horizon,
                domain,
                blocks,
                a: take_set(&mut sets, "A")?,
                b: take_set(&mut sets, "B")?,
                c: take_set(&mut sets, "C")?,
                gamma: op(gamma, "gamma")?,
                delta: op(delta, "delta")?,
                f,
                case,
            })
        }
        Construction::Nosupermax => ScenarioBody::Nosupermax {
            a: take_set(&mut sets, "A")?,
            b: take_set(&mut sets, "B")?,
            certificates,
            window,
        },
        Construction::Twodegrees => {
            let count = programs
                .keys()
                .filter_map(|n| indexed(n, "phi"))
                .chain(sets.keys().filter_map(|n| indexed(n, "W")))
                .map(|e| e + 1)
                .max()
                .unwrap_or(0)
                .max(slots.unwrap_or(0));
            let phi = (0..count)
                .map(|e| build_program(programs.remove(&format!("phi{e}")), &format!("phi{e}")))
                .collect::<Result<Vec<_>>>()?;
            let w = (0..count).map(|e| take_set(&mut sets, &format!("W{e}"))).collect::<Result<Vec<_>>>()?;
            let c = take_set(&mut sets, "C")?;
            let k = take_set(&mut sets, "K")?;
            if let Some(name) = programs.keys().chain(sets.keys()).next() {
                return Err(schema(hline, format!("{name} is not a canonical name")));
            }
            ScenarioBody::Twodegrees(TwoDegreesInput {
                horizon,
                c,
                k,
                w,
                phi,
                column_guard: column_guard.unwrap_or(true),
            })
        }
    };
    Ok(Scenario { description, body })
}

/// Parses scenario text, checking the schema but not the hypotheses.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: ScenarioRecord = serde_json::from_str(raw).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "empty scenario".into(),
        });
    }
    from_records(records)
}

/// Reads, parses and audits a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let sc = parse_scenario(&text)?;
    audit_hypotheses(&sc)?;
    Ok(sc)
}

/// The assumptions a construction takes on faith, checked on the scripted
/// data up to the horizon.
pub fn audit_hypotheses(sc: &Scenario) -> Result<()> {
    let disjoint = |a: &StageSet, b: &StageSet| -> Result<()> {
        match a.events().iter().find(|&&(x, _)| b.contains(x)) {
            Some(&(x, _)) => Err(Error::Hypothesis(format!("{x} is in both A and B"))),
            None => Ok(()),
        }
    };
    match &sc.body {
        ScenarioBody::Anticomplete { .. } | ScenarioBody::Twodegrees(_) => Ok(()),
        ScenarioBody::Nosupermax { a, b, .. } => disjoint(a, b),
        ScenarioBody::Upclosure(inst) => {
            disjoint(&inst.a, &inst.b)?;
            let h = inst.horizon;
            let len = inst.f.table().last().copied().unwrap_or(0).max(inst.domain);
            let a_h = SetOracle { set: &inst.a, stage: h, len };
            let b_h = SetOracle { set: &inst.b, stage: h, len };
            for x in 0..inst.domain {
                let g = inst.gamma.apply(&a_h, x, h)?;
                if g != Some(inst.b.contains_at(x, h)) {
                    return Err(Error::Hypothesis(format!("Gamma^A differs from B at bit {x}: {g:?}")));
                }
                let d = inst.delta.apply(&b_h, x, h)?;
                if d != Some(inst.a.contains_at(x, h)) {
                    return Err(Error::Hypothesis(format!("Delta^B differs from A at bit {x}: {d:?}")));
                }
            }
            Ok(())
        }
    }
}
