use std::f64::consts::PI;

use tipbeam::asymptotics::{orbit_error, predict_periodic, project_omega};
use tipbeam::fem::{assemble, interpolate_mode, simulate, SimOptions};
use tipbeam::spectral::{find_modes, j_exceptional, nodal_mode, Operator};
use tipbeam::{BeamParams, BeamState, Law, NonlinearLaws};

fn laws() -> NonlinearLaws {
    NonlinearLaws::new(Law::LinearCubic { c1: 2.0, c3: 5.0 }, Law::Arctan { gain: 1.5, scale: 0.3 }, 0.5, 0.2)
}

#[test]
fn feedback_stays_inactive_on_the_orbit() {
    let unit = BeamParams::new(1.2, 0.8, 1.5, 0.7, 1.0);
    let params = unit.with_inertia(j_exceptional(2, &unit).unwrap());
    let disc = assemble(&params, 48).unwrap();
    let star = nodal_mode(2, &params).unwrap();
    let other = find_modes(Operator::A, &params, 1).unwrap().remove(0);
    let a = interpolate_mode(&star, &disc.mesh).unwrap();
    let b = interpolate_mode(&other, &disc.mesh).unwrap();
    let raw = BeamState::new(disc.mesh, a.iter().zip(&b).map(|(x, y)| x - y).collect(), b.clone()).unwrap();
    let y0 = project_omega(&raw, &params, &star).unwrap();
    let period = 2.0 * PI / star.mu_abs;
    let rec = simulate(&disc, &laws(), &y0, &SimOptions::new(period / 2000.0, 10.0 * period, 10)).unwrap();
    let amplitude = y0.q.iter().chain(&y0.qdot).fold(0.0f64, |m, x| m.max(x.abs()));
    let law = laws();
    let force = rec
        .tip_values
        .iter()
        .zip(&rec.tip_velocities)
        .map(|(u, v)| law.k1(*u).abs() + law.k2(*v).abs())
        .fold(0.0, f64::max);
    assert!(force < 1e-6 * amplitude, "{force:e}");
    // energy is conserved up to the negligible leakage
    let e0 = rec.initial_energy();
    assert!((rec.final_energy() - e0).abs() < 1e-8 * e0);
    let orbit = predict_periodic(&y0, &params, 2).unwrap();
    assert!(orbit_error(&rec, &orbit, (9.0 * period, 10.0 * period)).unwrap() < 1e-3);
}

#[test]
fn generic_inertia_decays() {
    let params = BeamParams::new(1.0, 1.0, 1.0, 0.5, 0.3);
    let disc = assemble(&params, 16).unwrap();
    let mode = find_modes(Operator::A, &params, 1).unwrap().remove(0);
    let q = interpolate_mode(&mode, &disc.mesh).unwrap();
    let y0 = BeamState::new(disc.mesh, q, vec![0.0; disc.dofs()]).unwrap();
    let period = 2.0 * PI / mode.mu_abs;
    let rec = simulate(&disc, &laws(), &y0, &SimOptions::new(2e-3, 30.0 * period, 10)).unwrap();
    let e0 = rec.initial_energy();
    assert!(rec.energies.windows(2).all(|w| w[1] <= w[0] + 1e-12 * e0));
    assert!(rec.final_energy() < 1e-2 * e0, "{}", rec.final_energy() / e0);
}
