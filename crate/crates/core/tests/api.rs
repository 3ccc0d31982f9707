use num_complex::Complex64 as C64;
use twotime::currents::{standard_current, BoundaryPair, CurrentField};
use twotime::scenario::{parse_scenario, run, RunOptions};
use twotime::spacetime::Event;
use twotime::states::{WaveModel, Wavefunction};
use twotime::trajectories::{integrate_flowline, FlowOptions};

#[test]
fn plane_wave_flow_velocity() {
    let sch = WaveModel::Schrodinger { mass: 1.0 };
    let kg = WaveModel::KleinGordon { mass: 1.0 };
    for (model, v) in [(sch, 0.7), (kg, 0.7 / kg.energy(0.7))] {
        let psi = Wavefunction::plane_wave(model, 0.7, model.energy(0.7), C64::new(1.0, 0.0));
        let j = standard_current(&psi, Event::new(0.3, -1.2));
        assert!((j.v1 / j.v0 - v).abs() < 1e-12, "{model:?}: {j:?}");
    }
}

#[test]
fn rest_frame_flowline_moves_only_in_time() {
    let model = WaveModel::KleinGordon { mass: 1.0 };
    let rest = Wavefunction::plane_wave(model, 0.0, model.energy(0.0), C64::new(1.0, 0.0));
    let field = CurrentField::Conditional(BoundaryPair::new(rest.clone(), rest, C64::new(1.0, 0.0)).unwrap());
    let traj = integrate_flowline(&field, Event::new(0.0, 0.25), &FlowOptions::new(1.0, 0.01)).unwrap();
    let last = traj.samples.last().unwrap().event;
    assert!(last.t > 0.0);
    assert!((last.x - 0.25).abs() < 1e-12);
    assert!(field.j(last).v1.abs() < 1e-12);
}

#[test]
fn scenario_text_runs_end_to_end() {
    let text = r#"
name = "api"
model = { kind = "schrodinger", mass = 1.0 }
[states.psi]
kind = "gaussian-position"
x0 = 0.0
sigma = 1.0
[task]
kind = "current-grid"
initial = "psi"
t = { start = 0.0, stop = 0.5, count = 2 }
x = { start = -1.0, stop = 1.0, count = 3 }
"#;
    let loaded = parse_scenario(text, true).unwrap();
    let report = run(&loaded, &RunOptions { out_dir: None, seed: Some(3) }).unwrap();
    assert!(report.passed());
    assert_eq!(report.seed, 3);
}
