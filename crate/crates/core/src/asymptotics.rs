//! Long-time behavior: the projection onto the non-decaying subspace, the
//! predicted periodic limit for exceptional inertias, and classification of
//! simulated trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{interpolate_mode, TrajectoryRecord};
use crate::model::{inner_h, BeamParams, BeamState, Mesh, NonlinearLaws};
use crate::quadrature::CompositeGauss;
use crate::spectral::{find_modes, is_exceptional, j_exceptional, nodal_mode, InertiaClass, Mode, Operator, NODAL_J_TOL};

/// `(a cos ωt + b sin ωt)·u*(x)` with `u*` the nodal mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub ell: u32,
    pub mode: Mode,
    pub a: f64,
    pub b: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Decayed,
    Periodic,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub classification: Classification,
    /// Mean energy over the tail window.
    pub nu_estimate: f64,
    pub initial_energy: f64,
    /// Energy change across the tail relative to its mean.
    pub tail_relative_slope: f64,
    pub tail_window: (f64, f64),
    pub inertia: InertiaClass,
    pub orbit: Option<PeriodicOrbit>,
    /// Error against the predicted orbit over the tail window (0 without an orbit).
    pub orbit_error: f64,
    /// `|V(0) − V(T) − Σ dt·k₂(v̄)v̄|`
    pub energy_balance_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitThresholds {
    /// Decayed when the tail energy is below this fraction of `V(0)`.
    pub decay_fraction: f64,
    /// Fraction of the samples forming the tail.
    pub tail_fraction: f64,
    /// Largest relative energy change across the tail counted as stationary.
    pub stationary_slope: f64,
    /// Largest orbit error counted as convergence to the predicted orbit.
    pub orbit_tolerance: f64,
    /// Relative tolerance of the exceptional-inertia test.
    pub exceptional_rel_tol: f64,
    pub ell_max: u32,
    /// Required horizon in periods of the slowest mode.
    pub min_periods: f64,
}

impl Default for LimitThresholds {
    fn default() -> Self {
        Self {
            decay_fraction: 1e-2,
            tail_fraction: 0.1,
            stationary_slope: 1e-2,
            orbit_tolerance: 5e-2,
            exceptional_rel_tol: 1e-8,
            ell_max: 64,
            min_periods: 20.0,
        }
    }
}

fn exceptional_ell(mode: &Mode, params: &BeamParams) -> Result<u32> {
    let ell = mode.nodal_ell.ok_or(Error::NotExceptional(params.tip_inertia))?;
    let target = j_exceptional(ell, params)?;
    if (params.tip_inertia - target).abs() > NODAL_J_TOL * target {
        return Err(Error::NotExceptional(params.tip_inertia));
    }
    Ok(ell)
}

/// Hermite DOFs of the nodal mode; the tip value is exactly zero.
fn nodal_dofs(mode: &Mode, mesh: &Mesh) -> Result<Vec<f64>> {
    let mut q = interpolate_mode(mode, mesh)?;
    q[mesh.tip_value_index()] = 0.0;
    Ok(q)
}

/// Orthogonal projection of `y0` onto `span{[u*,0], [0,u*]}` in the state inner product,
/// with `u*` interpolated on the state's mesh.
///
/// The coefficients are `Λ⟨u₀″,u*″⟩ / (Λ‖u*″‖²)` and
/// `(ρ⟨v₀,u*⟩ + ξ₀u*′(L)) / (ρ‖u*‖² + J u*′(L)²)`; for the exact normalized mode the
/// denominators are 1 and `1/|μ|²`.
pub fn project_omega(y0: &BeamState, params: &BeamParams, mode: &Mode) -> Result<BeamState> {
    exceptional_ell(mode, params)?;
    let mesh = y0.mesh;
    let shape = nodal_dofs(mode, &mesh)?;
    let zero = vec![0.0; mesh.dofs()];
    let e1 = BeamState::new(mesh, shape.clone(), zero.clone())?;
    let e2 = BeamState::new(mesh, zero, shape.clone())?;
    let alpha = inner_h(y0, &e1, params)? / inner_h(&e1, &e1, params)?;
    let beta = inner_h(y0, &e2, params)? / inner_h(&e2, &e2, params)?;
    BeamState::new(
        mesh,
        shape.iter().map(|x| alpha * x).collect(),
        shape.iter().map(|x| beta * x).collect(),
    )
}

/// Quadrature aligned with the state's elements and resolving the mode.
fn mode_grid(mesh: &Mesh, mode: &Mode) -> CompositeGauss {
    CompositeGauss::element_aligned(mesh.length, mesh.n_elements, 2.0 * mode.p)
}

/// Periodic orbit reached from `y0` when `J = J_ℓ`:
/// `a = Λ⟨u₀″,u*″⟩`, `b = ω(ρ⟨v₀,u*⟩ + ξ₀u*′(L))`.
pub fn predict_periodic(y0: &BeamState, params: &BeamParams, ell: u32) -> Result<PeriodicOrbit> {
    let mode = nodal_mode(ell, params).map_err(|e| match e {
        Error::InertiaMismatch { given, .. } => Error::NotExceptional(given),
        other => other,
    })?;
    let mesh = y0.mesh;
    mesh.check_len(&y0.q)?;
    mesh.check_len(&y0.qdot)?;
    let grid = mode_grid(&mesh, &mode);
    let bending = grid.integrate(|x| mesh.eval(&y0.q, x)[2] * mode.derivative(x, 2));
    let kinetic = grid.integrate(|x| mesh.eval(&y0.qdot, x)[0] * mode.value(x));
    let omega = mode.mu_abs;
    let a = params.lambda * bending;
    let b = omega * (params.rho * kinetic + y0.xi(params) * mode.du_l);
    Ok(PeriodicOrbit {
        ell,
        mode,
        a,
        b,
        omega,
    })
}

fn check_x(orbit: &PeriodicOrbit, x: f64) -> Result<()> {
    if !(0.0..=orbit.mode.length).contains(&x) {
        return Err(Error::InvalidArgument(format!("x = {x} outside [0, {}]", orbit.mode.length)));
    }
    Ok(())
}

impl PeriodicOrbit {
    /// `a cos ωt + b sin ωt`
    pub fn amplitude(&self, t: f64) -> f64 {
        let (s, c) = (self.omega * t).sin_cos();
        self.a * c + self.b * s
    }

    /// Time derivative of [`PeriodicOrbit::amplitude`].
    pub fn amplitude_rate(&self, t: f64) -> f64 {
        let (s, c) = (self.omega * t).sin_cos();
        self.omega * (-self.a * s + self.b * c)
    }

    /// Predicted `v′(L, t) = ξ(t)/J`.
    pub fn tip_slope_rate(&self, t: f64) -> f64 {
        self.amplitude_rate(t) * self.mode.du_l
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// Orbit state at time `t`, interpolated on `mesh`.
    pub fn state(&self, t: f64, mesh: &Mesh) -> Result<BeamState> {
        let shape = nodal_dofs(&self.mode, mesh)?;
        let (amp, rate) = (self.amplitude(t), self.amplitude_rate(t));
        BeamState::new(
            *mesh,
            shape.iter().map(|x| amp * x).collect(),
            shape.iter().map(|x| rate * x).collect(),
        )
    }
}

/// Displacement of the orbit at `(t, x)`.
pub fn eval_periodic(orbit: &PeriodicOrbit, t: f64, x: f64) -> Result<f64> {
    check_x(orbit, x)?;
    Ok(orbit.amplitude(t) * orbit.mode.value(x))
}

/// Relative discrepancy between a trajectory and an orbit over `window`.
///
/// Two channels are measured: the relative L²-in-time error of the tip slope rate
/// `v′(L,t)` and the relative energy-norm error of the snapshots in the window.
/// The larger of the two is returned.
pub fn orbit_error(traj: &TrajectoryRecord, orbit: &PeriodicOrbit, window: (f64, f64)) -> Result<f64> {
    let (start, end) = window;
    let inside = |t: f64| t >= start && t <= end;
    let mut diff2 = 0.0;
    let mut ref2 = 0.0;
    let mut sim2 = 0.0;
    let mut count = 0;
    for (t, sim) in traj.times.iter().zip(&traj.tip_slope_rates) {
        if !inside(*t) {
            continue;
        }
        let pred = orbit.tip_slope_rate(*t);
        diff2 += (sim - pred).powi(2);
        ref2 += pred * pred;
        sim2 += sim * sim;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyWindow { start, end });
    }
    let relative = |diff2: f64, ref2: f64, sim2: f64| {
        if ref2 > 0.0 {
            (diff2 / ref2).sqrt()
        } else if sim2 > 0.0 {
            1.0
        } else {
            0.0
        }
    };
    let mut error = relative(diff2, ref2, sim2);

    let (mut diff2, mut ref2, mut sim2) = (0.0, 0.0, 0.0);
    let mut any = false;
    for snap in traj.snapshots.iter().filter(|s| inside(s.t)) {
        let sim = snap.state(traj.mesh);
        let pred = orbit.state(snap.t, &traj.mesh)?;
        let delta = sim.combine(1.0, &pred, -1.0)?;
        diff2 += inner_h(&delta, &delta, &traj.params)?;
        ref2 += inner_h(&pred, &pred, &traj.params)?;
        sim2 += inner_h(&sim, &sim, &traj.params)?;
        any = true;
    }
    if any {
        error = error.max(relative(diff2, ref2, sim2));
    }
    Ok(error)
}

/// Period of the slowest mode of the full payload problem.
pub fn slowest_period(params: &BeamParams) -> Result<f64> {
    let mode = find_modes(Operator::A, params, 1)?.remove(0);
    Ok(2.0 * std::f64::consts::PI / mode.mu_abs)
}

/// Decide whether a trajectory decays, settles on the predicted orbit, or neither.
///
/// The prediction uses the snapshot at `t = 0` as initial data.
pub fn classify_limit(
    traj: &TrajectoryRecord,
    params: &BeamParams,
    laws: &NonlinearLaws,
    thresholds: &LimitThresholds,
) -> Result<LimitReport> {
    let _ = laws;
    let horizon = traj.horizon();
    let required = thresholds.min_periods * slowest_period(params)?;
    if horizon < required {
        return Err(Error::HorizonTooShort { horizon, required });
    }
    let n = traj.energies.len();
    let tail_len = ((n as f64 * thresholds.tail_fraction).ceil() as usize).clamp(1, n);
    let tail = n - tail_len;
    let tail_times = &traj.times[tail..];
    let tail_energies = &traj.energies[tail..];
    let nu = tail_energies.iter().sum::<f64>() / tail_len as f64;
    let v0 = traj.initial_energy();
    let energy_balance_defect = (v0 - traj.final_energy() - traj.stats.dissipated_work).abs();
    let tail_window = (tail_times[0], horizon);
    let tail_relative_slope = if nu > 0.0 {
        (tail_energies[0] - tail_energies[tail_len - 1]).abs() / nu
    } else {
        0.0
    };
    let inertia = is_exceptional(params.tip_inertia, params, thresholds.exceptional_rel_tol, thresholds.ell_max)?;

    let mut report = LimitReport {
        classification: Classification::Undetermined,
        nu_estimate: nu,
        initial_energy: v0,
        tail_relative_slope,
        tail_window,
        inertia,
        orbit: None,
        orbit_error: 0.0,
        energy_balance_defect,
    };

    if let InertiaClass::Exceptional(ell) = inertia {
        if let Some(first) = traj.snapshots.first().filter(|s| s.t == 0.0) {
            let orbit = predict_periodic(&first.state(traj.mesh), params, ell)?;
            report.orbit_error = orbit_error(traj, &orbit, tail_window)?;
            report.orbit = Some(orbit);
        }
    }

    report.classification = if v0 == 0.0 || nu < thresholds.decay_fraction * v0 {
        Classification::Decayed
    } else if tail_relative_slope < thresholds.stationary_slope
        && report.orbit.is_some()
        && report.orbit_error < thresholds.orbit_tolerance
    {
        Classification::Periodic
    } else {
        Classification::Undetermined
    };
    Ok(report)
}
