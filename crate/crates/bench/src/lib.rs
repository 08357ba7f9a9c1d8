//! Fixed workloads for timing runs and verification.

use sepclass_core::anticomplete::random_adversary;
use sepclass_core::harness::{Scenario, ScenarioBody};
use sepclass_core::nosupermax::{chaser_scenario, ChaserParams};
use sepclass_core::twodegrees::{random_scenario, TdParams};
use sepclass_core::upclosure::random_settled;
use sepclass_core::Result;

/// One scenario per construction at roughly the given horizon; upclosure
/// instances carry their own horizons and ignore it.
pub fn workloads(horizon: usize) -> Result<Vec<(&'static str, Scenario)>> {
    let (a, b, certificates) = chaser_scenario(ChaserParams {
        horizon,
        seed: 0,
        delay_a: (1, 4),
        delay_b: (1, 4),
        chase_second: true,
    })?;
    Ok(vec![
        (
            "anticomplete",
            Scenario::new(ScenarioBody::Anticomplete {
                horizon,
                programs: random_adversary(0, 6, horizon + horizon / 10)?,
            }),
        ),
        ("upclosure", Scenario::new(ScenarioBody::Upclosure(random_settled(2, 0)?))),
        (
            "nosupermax",
            Scenario::new(ScenarioBody::Nosupermax {
                a,
                b,
                certificates,
                window: None,
            }),
        ),
        ("twodegrees", Scenario::new(ScenarioBody::Twodegrees(random_scenario(TdParams::new(horizon, 0))?))),
    ])
}
