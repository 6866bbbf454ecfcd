use permlab::runner::{parse_time_grid, run, ExperimentConfig, ResultEnvelope, Task};
use proptest::prelude::*;

fn quick_config(task: Task) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(task);
    match task {
        Task::Sample => cfg.samples = Some(2_000),
        Task::Diagrams => {
            cfg.edge = 5;
            cfg.time_grid = Some("0.5:1:0.5".into());
        }
        Task::Eq51 => cfg.sizes = Some(vec![20, 40]),
        Task::Permanent => cfg.edge = 6,
        Task::Conjecture1Report => cfg.time_grid = Some("0:2:1".into()),
        Task::HeatKernel => cfg.step = Some(0.01),
        Task::Rho => cfg.order = Some(16),
        _ => {}
    }
    cfg
}

#[test]
fn every_task_runs_and_round_trips() {
    for task in Task::ALL {
        let out = run(&quick_config(task)).unwrap_or_else(|e| panic!("{task:?}: {e}"));
        let text = out.envelope.to_json().unwrap();
        let back = ResultEnvelope::from_json(&text).unwrap();
        assert_eq!(back, out.envelope, "{task:?}");
        assert_eq!(back.to_json().unwrap(), text);
        assert!(!out.table.rows.is_empty(), "{task:?}");
        assert!(out.table.rows.iter().all(|r| r.len() == out.table.header.len()));
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    for task in [Task::Sample, Task::Extend, Task::Permanent, Task::Eq51] {
        let cfg = quick_config(task);
        assert_eq!(run(&cfg).unwrap().envelope.to_json().unwrap(), run(&cfg).unwrap().envelope.to_json().unwrap());
    }
}

#[test]
fn envelope_carries_what_is_needed_to_rerun() {
    let mut cfg = quick_config(Task::Extend);
    cfg.r = 0.5;
    cfg.seed = 9;
    cfg.threads = Some(2);
    let env = run(&cfg).unwrap().envelope;
    assert_eq!(env.parameters.r, 0.5);
    assert_eq!(env.parameters.threads, None);
    assert_eq!(env.provenance.seed, 9);
    assert_eq!(env.provenance.step_sizes["extension_rk4"], 0.005);
    let rerun = run(&env.parameters).unwrap().envelope;
    assert_eq!(rerun.values, env.values);
}

#[test]
fn limit_scan_through_the_runner() {
    let mut cfg = ExperimentConfig::new(Task::Diagrams);
    cfg.kind = Some(permlab::diagrams::DiagramKind::LowerLimits);
    cfg.sizes = Some(vec![8, 12, 16]);
    let out = run(&cfg).unwrap();
    let limit = out.envelope.values["scan"]["extrapolation"]["limit"].as_f64().unwrap();
    assert!((limit + 1.0).abs() < 0.05);
    assert_eq!(out.table.header, vec!["L", "t", "value"]);
}

proptest! {
    #[test]
    fn grid_endpoints(a in 0.0f64..10.0, n in 1usize..50, step in 0.01f64..1.0) {
        let b = a + n as f64 * step;
        let g = parse_time_grid(&format!("{a}:{b}:{step}")).unwrap();
        prop_assert_eq!(g.len(), n + 1);
        prop_assert!((g[n] - b).abs() < 1e-9);
    }
}
