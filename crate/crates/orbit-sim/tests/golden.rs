//! Golden regression for the shipped default scenario.
//!
//! The values below were produced by the first verified run and are frozen
//! bitwise: any change to the workload generator, the schedulers, or the
//! pipeline arithmetic that moves them is a behavioural change and must be
//! deliberate.

use orbit_sim::scenario::Scenario;
use orbit_sim::sim::run;

#[test]
fn default_scenario_metrics_are_frozen() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/default.json");
    let scenario = Scenario::load(path).unwrap();
    let out = run(&scenario).unwrap();

    assert_eq!(out.metrics.arrived, 100);
    assert_eq!(out.metrics.completed, 100);
    assert_eq!(out.metrics.completion_rate, 1.0);
    assert_eq!(out.metrics.total_gain, 109.26413666423059);
    assert_eq!(out.metrics.avg_latency, 10.689212756559982);

    let first = &out.trace[0];
    assert_eq!(first.exit, 4);
    assert_eq!(first.partition, 0);
    assert_eq!(first.o3, Some(68.71503198848157));

    // One task the optimizer downgrades below the deepest exit to fit its
    // window — regression canary for the downgrade path.
    let second = &out.trace[1];
    assert_eq!(second.exit, 3);
    assert_eq!(second.o3, Some(101.77988396174143));
}
