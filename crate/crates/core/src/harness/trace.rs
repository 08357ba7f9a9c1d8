//! Trace files: a header, the scenario records it was run from, then the
//! construction's own records. Each line is `{"record": kind, ...}`; the
//! payload of construction records sits under `body`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::report::VerificationReport;
use super::scenario::{parse_scenario, Construction, Scenario, ScenarioBody, ScenarioRecord};
use crate::anticomplete::{run_anticomplete, verify_anticomplete_trace, AcEvent, AcTrace};
use crate::enumcore::{Stage, StageSet, PAIRING_SCHEME_ID};
use crate::error::{Error, Result};
use crate::nosupermax::{run_pipeline, verify_nosupermax_trace, AttemptTrace, NsTrace, Pipeline, SpeedupOutcome};
use crate::twodegrees::{run_twodegrees, verify_twodegrees_trace, TdEvent, TdTrace, VeAxiom};
use crate::upclosure::{run_upclosure, verify_upclosure_trace, UcTrace, UpclosureRun};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub construction: Construction,
    pub horizon: Stage,
    pub scenario_hash: String,
    pub pairing_scheme: String,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceBody {
    Anticomplete {
        events: Vec<AcEvent>,
        a: StageSet,
        b: StageSet,
        d: StageSet,
    },
    Upclosure(UpclosureRun),
    Nosupermax(Pipeline),
    Twodegrees {
        events: Vec<TdEvent>,
        axioms: Vec<VeAxiom>,
        a: StageSet,
        b: StageSet,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionTrace {
    pub header: TraceHeader,
    pub scenario: Scenario,
    pub body: TraceBody,
}

fn notes(c: Construction) -> Vec<String> {
    match c {
        Construction::Nosupermax => vec![
            "boundary reset: the stability test compares the old upper value with the new lower value as written, and the reset assigns the upper index".into(),
        ],
        _ => Vec::new(),
    }
}

/// Runs the scenario's construction.
pub fn run(sc: &Scenario) -> Result<ConstructionTrace> {
    let h = sc.horizon();
    let body = match &sc.body {
        ScenarioBody::Anticomplete { programs, horizon } => {
            let st = run_anticomplete(programs, *horizon)?;
            TraceBody::Anticomplete {
                events: st.events,
                a: st.a,
                b: st.b,
                d: st.d,
            }
        }
        ScenarioBody::Upclosure(inst) => TraceBody::Upclosure(run_upclosure(inst)?),
        ScenarioBody::Nosupermax {
            a,
            b,
            certificates,
            window,
        } => TraceBody::Nosupermax(run_pipeline(a, b, h, certificates, *window)?),
        ScenarioBody::Twodegrees(input) => {
            let st = run_twodegrees(input)?;
            TraceBody::Twodegrees {
                events: st.events,
                axioms: st.axioms,
                a: st.a,
                b: st.b,
            }
        }
    };
    Ok(ConstructionTrace {
        header: TraceHeader {
            construction: sc.construction(),
            horizon: h,
            scenario_hash: sc.hash(),
            pairing_scheme: PAIRING_SCHEME_ID.into(),
            tool_version: TOOL_VERSION.into(),
            notes: notes(sc.construction()),
        },
        scenario: sc.clone(),
        body,
    })
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    record: &'a str,
    body: &'a T,
}

#[derive(Serialize, Deserialize)]
struct Element {
    record: String,
    set: String,
    x: usize,
    stage: Stage,
}

#[derive(Serialize)]
struct HeaderLine<'a> {
    record: &'a str,
    #[serde(flatten)]
    header: &'a TraceHeader,
}

#[derive(Serialize, Deserialize)]
struct InputLine {
    record: String,
    line: ScenarioRecord,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("trace records serialize")
}

impl ConstructionTrace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |v: String| {
            out.push_str(&v);
            out.push('\n');
        };
        push(json(&HeaderLine {
            record: "header",
            header: &self.header,
        }));
        for line in self.scenario.records() {
            push(json(&InputLine {
                record: "input".into(),
                line,
            }));
        }
        let elements = |name: &str, set: &StageSet| -> Vec<String> {
            set.events()
                .iter()
                .map(|&(x, stage)| {
                    json(&Element {
                        record: "element".into(),
                        set: name.into(),
                        x,
                        stage,
                    })
                })
                .collect()
        };
        match &self.body {
            TraceBody::Anticomplete { events, a, b, d } => {
                for e in events {
                    push(json(&Tagged { record: "event", body: e }));
                }
                for (name, set) in [("A", a), ("B", b), ("D", d)] {
                    elements(name, set).into_iter().for_each(&mut push);
                }
            }
            TraceBody::Upclosure(run) => push(json(&Tagged { record: "result", body: run })),
            TraceBody::Nosupermax(p) => {
                for t in &p.attempts {
                    push(json(&Tagged { record: "attempt", body: t }));
                }
                for s in &p.speedups {
                    push(json(&Tagged { record: "speedup", body: s }));
                }
            }
            TraceBody::Twodegrees { events, axioms, a, b } => {
                for e in events {
                    push(json(&Tagged { record: "event", body: e }));
                }
                for ax in axioms {
                    push(json(&Tagged { record: "axiom", body: ax }));
                }
                for (name, set) in [("A", a), ("B", b)] {
                    elements(name, set).into_iter().for_each(&mut push);
                }
            }
        }
        out
    }

    /// Parses trace text; the embedded scenario must hash to the header's value.
    pub fn parse(text: &str) -> Result<ConstructionTrace> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut header: Option<TraceHeader> = None;
        let mut scenario_lines = Vec::new();
        let mut bodies: Vec<(usize, String, Value)> = Vec::new();
        let mut elements: Vec<(usize, Element)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let v: Value = serde_json::from_str(raw).map_err(|e| perr(line, e.to_string()))?;
            let kind = v.get("record").and_then(Value::as_str).unwrap_or_default().to_string();
            match kind.as_str() {
                "header" => {
                    if header.is_some() || line != 1 {
                        return Err(perr(line, "header must be the first and only header line".into()));
                    }
                    header = Some(serde_json::from_value(v).map_err(|e| perr(line, e.to_string()))?);
                }
                "input" => {
                    let l: InputLine = serde_json::from_value(v).map_err(|e| perr(line, e.to_string()))?;
                    scenario_lines.push(serde_json::to_string(&l.line).expect("records serialize"));
                }
                "element" => elements.push((line, serde_json::from_value(v).map_err(|e| perr(line, e.to_string()))?)),
                "event" | "axiom" | "attempt" | "speedup" | "result" => {
                    let body = v.get("body").cloned().ok_or_else(|| perr(line, "record without body".into()))?;
                    bodies.push((line, kind, body));
                }
                other => return Err(perr(line, format!("unknown record kind {other:?}"))),
            }
        }
        let header = header.ok_or_else(|| perr(1, "missing header".into()))?;
        let scenario = parse_scenario(&scenario_lines.join("\n"))?;
        if scenario.hash() != header.scenario_hash {
            return Err(perr(1, "embedded scenario does not match the header hash".into()));
        }
        if scenario.construction() != header.construction {
            return Err(perr(1, "header names a different construction".into()));
        }
        let h = header.horizon;
        let take = |kind: &'static str| bodies.iter().filter(move |(_, k, _)| k == kind);
        fn decode<T: for<'de> Deserialize<'de>>(line: usize, v: &Value) -> Result<T> {
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })
        }
        let set = |name: &str| -> Result<StageSet> {
            let evs: Vec<(usize, Stage)> = elements.iter().filter(|(_, e)| e.set == name).map(|(_, e)| (e.x, e.stage)).collect();
            let line = elements.iter().find(|(_, e)| e.set == name).map_or(1, |(l, _)| *l);
            StageSet::from_events(evs, h).map_err(|e| perr(line, e.to_string()))
        };
        let body = match header.construction {
            Construction::Anticomplete => TraceBody::Anticomplete {
                events: take("event").map(|(l, _, v)| decode(*l, v)).collect::<Result<_>>()?,
                a: set("A")?,
                b: set("B")?,
                d: set("D")?,
            },
            Construction::Upclosure => {
                let (l, _, v) = take("result").next().ok_or_else(|| perr(1, "missing result record".into()))?;
                TraceBody::Upclosure(decode(*l, v)?)
            }
            Construction::Nosupermax => TraceBody::Nosupermax(Pipeline {
                attempts: take("attempt").map(|(l, _, v)| decode::<AttemptTrace>(*l, v)).collect::<Result<_>>()?,
                speedups: take("speedup").map(|(l, _, v)| decode::<SpeedupOutcome>(*l, v)).collect::<Result<_>>()?,
            }),
            Construction::Twodegrees => TraceBody::Twodegrees {
                events: take("event").map(|(l, _, v)| decode(*l, v)).collect::<Result<_>>()?,
                axioms: take("axiom").map(|(l, _, v)| decode(*l, v)).collect::<Result<_>>()?,
                a: set("A")?,
                b: set("B")?,
            },
        };
        Ok(ConstructionTrace { header, scenario, body })
    }

    /// Recomputes the header hash after the embedded scenario was edited.
    pub fn rehash(&mut self) {
        self.header.scenario_hash = self.scenario.hash();
    }
}

/// Runs the invariant suite for the trace's construction.
pub fn verify(t: &ConstructionTrace) -> VerificationReport {
    let h = t.header.horizon;
    match (&t.scenario.body, &t.body) {
        (ScenarioBody::Anticomplete { programs, .. }, TraceBody::Anticomplete { events, a, b, d }) => {
            verify_anticomplete_trace(&AcTrace {
                horizon: h,
                programs: programs.clone(),
                events: events.clone(),
                a: a.clone(),
                b: b.clone(),
                d: d.clone(),
            })
        }
        (ScenarioBody::Upclosure(inst), TraceBody::Upclosure(run)) => verify_upclosure_trace(&UcTrace {
            instance: inst.clone(),
            run: run.clone(),
        }),
        (
            ScenarioBody::Nosupermax {
                a,
                b,
                certificates,
                window,
            },
            TraceBody::Nosupermax(p),
        ) => verify_nosupermax_trace(&NsTrace {
            horizon: h,
            a: a.clone(),
            b: b.clone(),
            certificates: certificates.clone(),
            window: *window,
            pipeline: p.clone(),
        }),
        (ScenarioBody::Twodegrees(input), TraceBody::Twodegrees { events, axioms, a, b }) => {
            verify_twodegrees_trace(&TdTrace {
                horizon: h,
                c: input.c.clone(),
                k: input.k.clone(),
                w: input.w.clone(),
                phi: input.phi.clone(),
                a: a.clone(),
                b: b.clone(),
                axioms: axioms.clone(),
                events: events.clone(),
            })
        }
        _ => unreachable!("parse and run pair bodies with their scenarios"),
    }
}

/// Outcome of re-running a trace's scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub identical: bool,
    /// First differing line, 1-based.
    pub first_difference: Option<usize>,
}

/// Re-runs the embedded scenario and compares the fresh trace byte for byte.
pub fn replay(text: &str) -> Result<Replay> {
    let t = ConstructionTrace::parse(text)?;
    let fresh = run(&t.scenario)?.to_jsonl();
    if fresh == text {
        return Ok(Replay {
            identical: true,
            first_difference: None,
        });
    }
    let first = fresh
        .lines()
        .zip(text.lines())
        .position(|(a, b)| a != b)
        .unwrap_or_else(|| fresh.lines().count().min(text.lines().count()));
    Ok(Replay {
        identical: false,
        first_difference: Some(first + 1),
    })
}
