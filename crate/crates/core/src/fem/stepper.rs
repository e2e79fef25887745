//! Implicit midpoint rule for `M q̈ + K q + e_tip[k₁(q_tip) + k₂(q̇_tip)] = 0`.
//!
//! The boundary force acts on one DOF, so the coupled Newton system reduces
//! exactly to a scalar equation for the midpoint tip velocity `s = v̄_tip`:
//! with `S = (2/dt)M + (dt/2)K`, `z = S⁻¹((2/dt)M v⁻ − K q⁻)` and `w = S⁻¹e_tip`,
//! the midpoint velocity is `v̄ = z − w·f(s)` where
//! `f(s) = k₁(q⁻_tip + dt·s/2) + k₂(s)` and `s` solves `s − z_tip + w_tip·f(s) = 0`.

use serde::{Deserialize, Serialize};

use super::{discrete_energy, energy_change, BandedCholesky, DiscreteOperator};
use crate::error::{Error, Result};
use crate::model::{BeamParams, BeamState, Mesh, NonlinearLaws};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 25,
        }
    }
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub newton_iterations: usize,
    /// Midpoint tip velocity `v̄_tip`.
    pub tip_velocity_mid: f64,
    /// Midpoint tip displacement `q̄_tip`.
    pub tip_value_mid: f64,
    /// `dt·k₂(v̄_tip)·v̄_tip`, the work removed by the damper.
    pub damper_work: f64,
}

/// The factored step matrix for a fixed `dt`.
#[derive(Debug, Clone)]
pub struct MidpointStepper<'a> {
    disc: &'a DiscreteOperator,
    dt: f64,
    factor: BandedCholesky,
    tip_response: Vec<f64>,
    newton: NewtonSettings,
}

impl<'a> MidpointStepper<'a> {
    pub fn new(disc: &'a DiscreteOperator, dt: f64, newton: NewtonSettings) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !(newton.tol > 0.0) || newton.max_iter == 0 {
            return Err(Error::InvalidArgument("Newton tolerance and iteration cap must be positive".into()));
        }
        let factor = disc.mass.combine(2.0 / dt, &disc.stiffness, 0.5 * dt).cholesky()?;
        let mut e_tip = vec![0.0; disc.dofs()];
        e_tip[disc.tip_value_index()] = 1.0;
        let tip_response = factor.solve(&e_tip);
        Ok(Self {
            disc,
            dt,
            factor,
            tip_response,
            newton,
        })
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `(q, v)` by one step in place.
    pub fn step(&self, laws: &NonlinearLaws, q: &mut [f64], v: &mut [f64]) -> Result<StepInfo> {
        let disc = self.disc;
        let dt = self.dt;
        let tip = disc.tip_value_index();

        let mut rhs = disc.mass.matvec(v);
        let kq = disc.stiffness.matvec(q);
        rhs.iter_mut().zip(&kq).for_each(|(r, k)| *r = 2.0 / dt * *r - k);
        self.factor.solve_in_place(&mut rhs);
        let z = rhs;

        let g = self.tip_response[tip];
        let q_tip = q[tip];
        let force = |s: f64| laws.k1(q_tip + 0.5 * dt * s) + laws.k2(s);
        let mut s = z[tip];
        let mut iterations = 0;
        loop {
            let f = force(s);
            let residual = s - z[tip] + g * f;
            let scale = z[tip].abs() + s.abs() + (g * f).abs();
            if !residual.is_finite() {
                return Err(Error::NewtonDivergence { iterations, residual });
            }
            if residual.abs() <= self.newton.tol * scale {
                break;
            }
            if iterations == self.newton.max_iter {
                return Err(Error::NewtonDivergence { iterations, residual });
            }
            let slope = 1.0 + g * (0.5 * dt * laws.dk1(q_tip + 0.5 * dt * s) + laws.dk2(s));
            s -= residual / slope;
            iterations += 1;
        }

        let f = force(s);
        for i in 0..q.len() {
            let v_mid = z[i] - self.tip_response[i] * f;
            q[i] += dt * v_mid;
            v[i] = 2.0 * v_mid - v[i];
        }
        Ok(StepInfo {
            newton_iterations: iterations,
            tip_velocity_mid: s,
            tip_value_mid: q_tip + 0.5 * dt * s,
            damper_work: dt * laws.k2(s) * s,
        })
    }
}

/// One implicit-midpoint step of `state`.
pub fn step_midpoint(
    disc: &DiscreteOperator,
    laws: &NonlinearLaws,
    state: &BeamState,
    dt: f64,
    newton: NewtonSettings,
) -> Result<BeamState> {
    if state.mesh != disc.mesh {
        return Err(Error::DimensionMismatch {
            expected: disc.dofs(),
            found: state.mesh.dofs(),
        });
    }
    disc.mesh.check_len(&state.q)?;
    disc.mesh.check_len(&state.qdot)?;
    let stepper = MidpointStepper::new(disc, dt, newton)?;
    let mut next = state.clone();
    stepper.step(laws, &mut next.q, &mut next.qdot)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Requested step; the horizon is split into `ceil(T/dt)` equal steps.
    pub dt: f64,
    pub t_end: f64,
    /// Record the series every `stride` steps.
    pub stride: usize,
    /// Store a full snapshot every `snapshot_stride` steps (rounded up to a multiple of `stride`; 0 disables).
    pub snapshot_stride: usize,
    pub newton: NewtonSettings,
    /// Smallest substep as a fraction of `t_end`.
    pub dt_floor_fraction: f64,
}

impl SimOptions {
    pub fn new(dt: f64, t_end: f64, stride: usize) -> Self {
        Self {
            dt,
            t_end,
            stride,
            snapshot_stride: 16 * stride.max(1),
            newton: NewtonSettings::default(),
            dt_floor_fraction: 1e-8,
        }
    }

    pub fn with_snapshot_stride(mut self, snapshot_stride: usize) -> Self {
        self.snapshot_stride = snapshot_stride;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
}

impl Snapshot {
    pub fn state(&self, mesh: Mesh) -> BeamState {
        BeamState {
            mesh,
            q: self.q.clone(),
            qdot: self.qdot.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub max_newton_iterations: usize,
    /// Steps retried with halved substeps after a Newton failure.
    pub rejected_steps: usize,
    /// Largest single-step increase of the discrete energy (0 if none).
    pub max_energy_increase: f64,
    /// Largest `|ΔV + dt·k₂(v̄)v̄|` over all steps.
    pub max_balance_defect: f64,
    /// `Σ dt·k₂(v̄_tip)v̄_tip`.
    pub dissipated_work: f64,
    /// Effective macro step `T / ceil(T/dt)`.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub params: BeamParams,
    pub mesh: Mesh,
    pub laws_id: String,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// `−k₂(v_L)v_L` at the sample times.
    pub dissipations: Vec<f64>,
    pub tip_values: Vec<f64>,
    pub tip_velocities: Vec<f64>,
    pub tip_slope_rates: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub stats: IntegratorStats,
}

impl TrajectoryRecord {
    fn new(disc: &DiscreteOperator, laws: &NonlinearLaws) -> Self {
        Self {
            params: disc.params,
            mesh: disc.mesh,
            laws_id: laws.id(),
            times: Vec::new(),
            energies: Vec::new(),
            dissipations: Vec::new(),
            tip_values: Vec::new(),
            tip_velocities: Vec::new(),
            tip_slope_rates: Vec::new(),
            snapshots: Vec::new(),
            stats: IntegratorStats::default(),
        }
    }

    fn record(&mut self, disc: &DiscreteOperator, laws: &NonlinearLaws, t: f64, energy: f64, q: &[f64], v: &[f64]) {
        let vl = v[disc.tip_value_index()];
        self.times.push(t);
        self.energies.push(energy);
        self.dissipations.push(-laws.k2(vl) * vl);
        self.tip_values.push(q[disc.tip_value_index()]);
        self.tip_velocities.push(vl);
        self.tip_slope_rates.push(v[disc.tip_slope_index()]);
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn initial_energy(&self) -> f64 {
        self.energies.first().copied().unwrap_or(0.0)
    }

    pub fn final_energy(&self) -> f64 {
        self.energies.last().copied().unwrap_or(0.0)
    }
}

/// Steppers for `dt, dt/2, dt/4, …`, built on demand.
struct StepperLadder<'a> {
    disc: &'a DiscreteOperator,
    newton: NewtonSettings,
    dt: f64,
    floor: f64,
    levels: Vec<MidpointStepper<'a>>,
}

impl<'a> StepperLadder<'a> {
    fn level(&mut self, k: usize) -> Result<&MidpointStepper<'a>> {
        while self.levels.len() <= k {
            let dt = self.dt / (1u64 << self.levels.len()) as f64;
            self.levels.push(MidpointStepper::new(self.disc, dt, self.newton)?);
        }
        Ok(&self.levels[k])
    }

    /// Advance by `dt/2^k`, splitting into halves whenever Newton fails.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &mut self,
        laws: &NonlinearLaws,
        q: &mut Vec<f64>,
        v: &mut Vec<f64>,
        energy: &mut f64,
        k: usize,
        t: f64,
        stats: &mut IntegratorStats,
    ) -> Result<()> {
        let (saved_q, saved_v) = (q.clone(), v.clone());
        let outcome = self.level(k)?.step(laws, q, v);
        match outcome {
            Ok(info) => {
                let next = discrete_energy(self.disc, q, v, laws)?;
                let change = energy_change(self.disc, laws, (&saved_q, &saved_v), (q, v))?;
                stats.steps += 1;
                stats.newton_iterations += info.newton_iterations;
                stats.max_newton_iterations = stats.max_newton_iterations.max(info.newton_iterations);
                stats.max_energy_increase = stats.max_energy_increase.max(change);
                stats.max_balance_defect = stats.max_balance_defect.max((change + info.damper_work).abs());
                stats.dissipated_work += info.damper_work;
                *energy = next;
                Ok(())
            }
            Err(Error::NewtonDivergence { .. }) => {
                *q = saved_q;
                *v = saved_v;
                let half = self.dt / (1u64 << (k + 1)) as f64;
                if half < self.floor || k >= 62 {
                    return Err(Error::StepUnderflow {
                        t,
                        dt: half,
                        floor: self.floor,
                    });
                }
                stats.rejected_steps += 1;
                self.advance(laws, q, v, energy, k + 1, t, stats)?;
                self.advance(laws, q, v, energy, k + 1, t + half, stats)
            }
            Err(other) => Err(other),
        }
    }
}

/// Integrate from `initial` over `[0, T]` and record the trajectory.
pub fn simulate(
    disc: &DiscreteOperator,
    laws: &NonlinearLaws,
    initial: &BeamState,
    options: &SimOptions,
) -> Result<TrajectoryRecord> {
    if !(options.dt > 0.0 && options.dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {}", options.dt)));
    }
    if !(options.t_end > 0.0 && options.t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("T must be positive, got {}", options.t_end)));
    }
    if options.stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    if initial.mesh != disc.mesh {
        return Err(Error::DimensionMismatch {
            expected: disc.dofs(),
            found: initial.mesh.dofs(),
        });
    }
    disc.mesh.check_len(&initial.q)?;
    disc.mesh.check_len(&initial.qdot)?;

    let n_steps = (options.t_end / options.dt).ceil().max(1.0) as usize;
    let dt = options.t_end / n_steps as f64;
    let stride = options.stride;
    let snapshot_stride = match options.snapshot_stride {
        0 => 0,
        s => s.div_ceil(stride) * stride,
    };
    let mut ladder = StepperLadder {
        disc,
        newton: options.newton,
        dt,
        floor: options.dt_floor_fraction * options.t_end,
        levels: Vec::new(),
    };

    let mut record = TrajectoryRecord::new(disc, laws);
    record.stats.dt = dt;
    let mut q = initial.q.clone();
    let mut v = initial.qdot.clone();
    let mut energy = discrete_energy(disc, &q, &v, laws)?;
    record.record(disc, laws, 0.0, energy, &q, &v);
    if snapshot_stride > 0 {
        record.snapshots.push(Snapshot {
            t: 0.0,
            q: q.clone(),
            qdot: v.clone(),
        });
    }

    let mut stats = IntegratorStats {
        dt,
        ..Default::default()
    };
    for n in 1..=n_steps {
        let t_prev = (n - 1) as f64 * dt;
        ladder.advance(laws, &mut q, &mut v, &mut energy, 0, t_prev, &mut stats)?;
        let t = if n == n_steps { options.t_end } else { n as f64 * dt };
        if n % stride == 0 || n == n_steps {
            record.record(disc, laws, t, energy, &q, &v);
        }
        if snapshot_stride > 0 && n % snapshot_stride == 0 {
            record.snapshots.push(Snapshot {
                t,
                q: q.clone(),
                qdot: v.clone(),
            });
        }
    }
    record.stats = stats;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, interpolate_mode};
    use crate::model::Law;
    use crate::spectral::{find_modes, Operator};
    use approx::assert_relative_eq;

    const UNIT: BeamParams = BeamParams::unit();

    fn first_mode_state(disc: &DiscreteOperator, amplitude: f64, velocity: f64) -> BeamState {
        let mode = find_modes(Operator::A, &disc.params, 1).unwrap().remove(0);
        let q = interpolate_mode(&mode, &disc.mesh).unwrap();
        let qd: Vec<f64> = q.iter().map(|x| velocity * mode.mu_abs * x).collect();
        let q = q.iter().map(|x| amplitude * x).collect();
        BeamState::new(disc.mesh, q, qd).unwrap()
    }

    fn linear_damped() -> NonlinearLaws {
        NonlinearLaws::new(Law::Linear { c: 1.0 }, Law::Linear { c: 1.0 }, 0.5, 0.5)
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let disc = assemble(&UNIT, 8).unwrap();
        let s = disc.zero_state();
        let next = step_midpoint(&disc, &linear_damped(), &s, 0.01, NewtonSettings::default()).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn conservative_energy_drift_over_ten_thousand_steps() {
        let disc = assemble(&UNIT, 16).unwrap();
        let laws = NonlinearLaws::conservative();
        let s = first_mode_state(&disc, 1.0, 0.3);
        let stepper = MidpointStepper::new(&disc, 1e-3, NewtonSettings::default()).unwrap();
        let (mut q, mut v) = (s.q.clone(), s.qdot.clone());
        let e0 = discrete_energy(&disc, &q, &v, &laws).unwrap();
        for _ in 0..10_000 {
            stepper.step(&laws, &mut q, &mut v).unwrap();
        }
        let e1 = discrete_energy(&disc, &q, &v, &laws).unwrap();
        assert!(((e1 - e0) / e0).abs() < 1e-10, "{}", (e1 - e0) / e0);
    }

    #[test]
    fn linear_damper_energy_drop_is_exact() {
        let disc = assemble(&UNIT, 16).unwrap();
        let laws = linear_damped();
        let s = first_mode_state(&disc, 1.0, 0.7);
        let stepper = MidpointStepper::new(&disc, 2e-3, NewtonSettings::default()).unwrap();
        let (mut q, mut v) = (s.q.clone(), s.qdot.clone());
        let e0 = discrete_energy(&disc, &q, &v, &laws).unwrap();
        for _ in 0..50 {
            let (q0, v0) = (q.clone(), v.clone());
            let info = stepper.step(&laws, &mut q, &mut v).unwrap();
            let change = energy_change(&disc, &laws, (&q0, &v0), (&q, &v)).unwrap();
            let vbar = info.tip_velocity_mid;
            let predicted = -2e-3 * vbar * vbar;
            assert!((change - predicted).abs() <= 1e-12 * e0, "{change} vs {predicted}");
        }
    }

    #[test]
    fn scalar_newton_solves_the_coupled_system() {
        // full residual of the midpoint equations after one nonlinear step
        let disc = assemble(&UNIT, 8).unwrap();
        let laws = NonlinearLaws::new(Law::LinearCubic { c1: 1.0, c3: 40.0 }, Law::Arctan { gain: 3.0, scale: 0.1 }, 0.1, 0.1);
        let s = first_mode_state(&disc, 2.0, 1.5);
        let dt = 5e-3;
        let next = step_midpoint(&disc, &laws, &s, dt, NewtonSettings::default()).unwrap();
        let tip = disc.tip_value_index();
        let q_mid: Vec<f64> = s.q.iter().zip(&next.q).map(|(a, b)| 0.5 * (a + b)).collect();
        let v_mid: Vec<f64> = s.qdot.iter().zip(&next.qdot).map(|(a, b)| 0.5 * (a + b)).collect();
        let dv: Vec<f64> = s.qdot.iter().zip(&next.qdot).map(|(a, b)| (b - a) / dt).collect();
        let mut r = disc.mass.matvec(&dv);
        let kq = disc.stiffness.matvec(&q_mid);
        r.iter_mut().zip(&kq).for_each(|(a, b)| *a += b);
        r[tip] += laws.k1(q_mid[tip]) + laws.k2(v_mid[tip]);
        let scale: f64 = kq.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(r.iter().all(|x| x.abs() < 1e-9 * scale), "{r:?}");
        for i in 0..disc.dofs() {
            assert_relative_eq!((next.q[i] - s.q[i]) / dt, v_mid[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn simulate_zero_initial_data() {
        let disc = assemble(&UNIT, 4).unwrap();
        let rec = simulate(&disc, &linear_damped(), &disc.zero_state(), &SimOptions::new(0.01, 1.0, 10)).unwrap();
        assert!(rec.energies.iter().all(|e| *e == 0.0));
        assert!(rec.tip_values.iter().all(|e| *e == 0.0));
        assert_eq!(rec.times.len(), 11);
        assert_eq!(rec.horizon(), 1.0);
    }

    #[test]
    fn simulate_records_balance_and_monotone_energy() {
        let disc = assemble(&UNIT, 16).unwrap();
        let laws = linear_damped();
        let s = first_mode_state(&disc, 1.0, 0.0);
        let rec = simulate(&disc, &laws, &s, &SimOptions::new(2e-3, 20.0, 5)).unwrap();
        assert!(rec.times.windows(2).all(|w| w[0] < w[1]));
        assert!(rec.energies.windows(2).all(|w| w[1] <= w[0] + 1e-14 * rec.initial_energy()));
        let balance = rec.initial_energy() - rec.final_energy() - rec.stats.dissipated_work;
        assert!(balance.abs() < 1e-6 * rec.initial_energy());
        assert!(rec.stats.max_energy_increase <= 1e-15 * rec.initial_energy());
        assert_eq!(rec.stats.steps, 10_000);
        assert_eq!(rec.snapshots.first().unwrap().t, 0.0);
        assert!(rec.snapshots.iter().skip(1).all(|s| s.t > 0.0));
    }

    #[test]
    fn nonlinear_spring_keeps_energy_within_slack() {
        let disc = assemble(&UNIT, 16).unwrap();
        let laws = NonlinearLaws::new(Law::LinearCubic { c1: 1.0, c3: 1.0 }, Law::Linear { c: 1.0 }, 0.5, 0.5);
        let s = first_mode_state(&disc, 1.0, 0.0);
        let rec = simulate(&disc, &laws, &s, &SimOptions::new(1e-3, 10.0, 10)).unwrap();
        assert!(rec.stats.max_energy_increase < 1e-8 * rec.initial_energy());
    }

    #[test]
    fn stiff_spring_triggers_step_halving() {
        let disc = assemble(&UNIT, 4).unwrap();
        let laws = NonlinearLaws::new(Law::Cubic { c: 1e4 }, Law::Linear { c: 1.0 }, 0.5, 0.5);
        let s = first_mode_state(&disc, 1.0, 0.0);
        let mut options = SimOptions::new(0.05, 0.2, 1);
        options.newton.max_iter = 4;
        let rec = simulate(&disc, &laws, &s, &options).unwrap();
        assert!(rec.stats.rejected_steps > 0);
        assert!(rec.final_energy() <= rec.initial_energy());
    }

    #[test]
    fn step_underflow_is_reported() {
        let disc = assemble(&UNIT, 4).unwrap();
        let laws = NonlinearLaws::new(Law::Cubic { c: 1e6 }, Law::Linear { c: 1.0 }, 0.5, 0.5);
        let s = first_mode_state(&disc, 3.0, 0.0);
        let mut options = SimOptions::new(0.05, 0.2, 1);
        options.newton.max_iter = 1;
        options.dt_floor_fraction = 0.1;
        assert!(matches!(simulate(&disc, &laws, &s, &options), Err(Error::StepUnderflow { .. })));
    }

    #[test]
    fn invalid_options_rejected() {
        let disc = assemble(&UNIT, 4).unwrap();
        let laws = linear_damped();
        let s = disc.zero_state();
        assert!(simulate(&disc, &laws, &s, &SimOptions::new(0.0, 1.0, 1)).is_err());
        assert!(simulate(&disc, &laws, &s, &SimOptions::new(0.1, -1.0, 1)).is_err());
        assert!(simulate(&disc, &laws, &s, &SimOptions::new(0.1, 1.0, 0)).is_err());
        let other = BeamState::zeros(Mesh::new(1.0, 5).unwrap());
        assert!(simulate(&disc, &laws, &other, &SimOptions::new(0.1, 1.0, 1)).is_err());
    }
}
