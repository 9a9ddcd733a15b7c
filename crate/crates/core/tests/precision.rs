use rcp_placement::baseline::{run_frame_by_frame, FrameSolverConfig};
use rcp_placement::metrics::tracking_error_rows;
use rcp_placement::rcp::run_rcp;
use rcp_placement::scenario::{generate_scenario, ScenarioGenConfig};
use rcp_placement::{AnnealSchedule32, AnnealSchedule64, ControllerGains32, ControllerGains64, Scenario32, Scenario64};

fn file() -> rcp_placement::scenario::ScenarioFile {
    generate_scenario(&ScenarioGenConfig {
        seed: 21,
        num_clusters: 3,
        nodes_per_cluster: 20,
        num_controllers: 3,
        steps: 120,
        horizon: 6.0,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn f32_rcp_run_tracks_f64() {
    let f = file();
    let s64 = Scenario64::from_file(&f).unwrap();
    let s32 = Scenario32::from_file(&f).unwrap();
    let a = run_rcp(
        &s64,
        &ControllerGains64::new(s64.k0).unwrap(),
        &AnnealSchedule64::new(s64.t0_temperature, s64.alpha, 1e-6).unwrap(),
    )
    .unwrap();
    let b = run_rcp(
        &s32,
        &ControllerGains32::new(s32.k0).unwrap(),
        &AnnealSchedule32::new(s32.t0_temperature, s32.alpha, 1e-6).unwrap(),
    )
    .unwrap();
    assert_eq!(a.rows.len(), b.rows.len());
    let gap = tracking_error_rows(a.final_controllers().unwrap(), b.final_controllers().unwrap()).unwrap();
    // controllers split from a near-coincident start, which amplifies rounding differences
    assert!(gap < 1e-2, "f32 and f64 placements diverged by {gap}");
}

#[test]
fn f32_frame_run_matches_f64_placements() {
    let mut f = file();
    f.steps = 4;
    let s64 = Scenario64::from_file(&f).unwrap();
    let s32 = Scenario32::from_file(&f).unwrap();
    let a = run_frame_by_frame(&s64, &FrameSolverConfig::with_t0(s64.t0_temperature)).unwrap();
    let b = run_frame_by_frame(&s32, &FrameSolverConfig::with_t0(s32.t0_temperature)).unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let gap = tracking_error_rows(&ra.controllers, &rb.controllers).unwrap();
        assert!(gap < 1e-3, "step {}: {gap}", ra.step);
    }
}
