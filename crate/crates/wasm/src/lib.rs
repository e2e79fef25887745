//! Browser bindings for the beam laboratory.
//!
//! Three operations are exposed to JavaScript, each returning a JSON string:
//! [`mode_shapes`], [`inertia_scan`] and [`energy_curve`]. The pure-Rust versions
//! ([`mode_curves`], [`scan_inertia`], [`simulate_energy`]) carry the logic and are what
//! the native tests exercise.

use std::f64::consts::PI;

use serde::Serialize;
use tipbeam::asymptotics::predict_periodic;
use tipbeam::fem::{assemble, interpolate_mode, simulate, SimOptions};
use tipbeam::model::{validate_params, BeamParams};
use tipbeam::spectral::{exceptional_set, find_modes, is_exceptional, nearest_exceptional, nodal_mode, InertiaClass, Operator};
use tipbeam::{BeamState, Law, NonlinearLaws};
use wasm_bindgen::prelude::*;

/// Relative tolerance for treating a slider value of `J` as exceptional.
pub const EXCEPTIONAL_REL_TOL: f64 = 1e-8;
const ELL_MAX: u32 = 64;
/// Most points returned per series.
pub const MAX_POINTS: usize = 1500;

#[derive(Debug, Clone, Serialize)]
pub struct ModeCurve {
    pub index: usize,
    pub p: f64,
    pub omega: f64,
    pub tip_value: f64,
    pub tip_slope: f64,
    pub nodal: bool,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InertiaScan {
    pub entries: Vec<(u32, f64)>,
    pub nearest_ell: u32,
    pub nearest_j: f64,
    pub relative_distance: f64,
    pub exceptional: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyCurve {
    pub t: Vec<f64>,
    pub energy: Vec<f64>,
    pub tip_value: Vec<f64>,
    pub initial_energy: f64,
    pub final_fraction: f64,
    /// `ℓ` when `J` is exceptional.
    pub exceptional: Option<u32>,
    /// Energy of the predicted periodic limit, `(a² + b²)/2`.
    pub limit_energy: Option<f64>,
    pub slowest_period: f64,
}

fn params(rho: f64, lambda: f64, length: f64, tip_mass: f64, tip_inertia: f64) -> Result<BeamParams, String> {
    let p = BeamParams::new(rho, lambda, length, tip_mass, tip_inertia);
    let report = validate_params(&p);
    if report.passed {
        Ok(p)
    } else {
        let names: Vec<_> = report.violations.iter().map(|v| v.check.as_str()).collect();
        Err(format!("parameters must be positive: {}", names.join(", ")))
    }
}

fn operator(name: &str) -> Result<Operator, String> {
    name.parse().map_err(|e| format!("{e}"))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Normalized mode shapes sampled at `samples` points.
pub fn mode_curves(params: &BeamParams, op: Operator, count: usize, samples: usize) -> Result<Vec<ModeCurve>, String> {
    if !(1..=24).contains(&count) || !(2..=MAX_POINTS).contains(&samples) {
        return Err(format!("count must be 1..=24 and samples 2..={MAX_POINTS}"));
    }
    let modes = find_modes(op, params, count).map_err(|e| e.to_string())?;
    Ok(modes
        .into_iter()
        .map(|mode| {
            let x: Vec<f64> = (0..samples).map(|i| params.length * i as f64 / (samples - 1) as f64).collect();
            let u = x.iter().map(|&x| mode.value(x)).collect();
            ModeCurve {
                index: mode.index,
                p: mode.p,
                omega: mode.mu_abs,
                tip_value: mode.u_l,
                tip_slope: mode.du_l,
                nodal: mode.u_l.abs() < 1e-9 * mode.du_l.abs().max(1.0),
                x,
                u,
            }
        })
        .collect())
}

/// Exceptional inertias up to `lmax` and where the current `J` sits among them.
pub fn scan_inertia(params: &BeamParams, lmax: u32) -> Result<InertiaScan, String> {
    let set = exceptional_set(params, lmax.clamp(1, 200)).map_err(|e| e.to_string())?;
    let (nearest_ell, nearest_j) = nearest_exceptional(params.tip_inertia, params).map_err(|e| e.to_string())?;
    let class = is_exceptional(params.tip_inertia, params, EXCEPTIONAL_REL_TOL, ELL_MAX).map_err(|e| e.to_string())?;
    Ok(InertiaScan {
        entries: set.entries,
        nearest_ell,
        nearest_j,
        relative_distance: (params.tip_inertia - nearest_j).abs() / nearest_j,
        exceptional: matches!(class, InertiaClass::Exceptional(_)),
    })
}

/// Energy history from the slowest payload mode plus, for exceptional `J`, the nodal mode.
///
/// `snap_ell > 0` replaces `J` by `J_ℓ`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_energy(
    params: &BeamParams,
    spring_cubic: f64,
    damper_gain: f64,
    generic_amplitude: f64,
    nodal_amplitude: f64,
    periods: f64,
    n_elements: usize,
) -> Result<EnergyCurve, String> {
    if !(4..=64).contains(&n_elements) || !(periods > 0.0 && periods <= 200.0) {
        return Err("n_elements must be 4..=64 and periods in (0, 200]".into());
    }
    let err = |e: tipbeam::Error| e.to_string();
    let laws = NonlinearLaws::new(
        Law::LinearCubic { c1: 1.0, c3: spring_cubic },
        Law::Linear { c: damper_gain },
        0.5 * damper_gain,
        1.0,
    );
    let disc = assemble(params, n_elements).map_err(err)?;
    let slow = find_modes(Operator::A, params, 1).map_err(err)?.remove(0);
    let slowest_period = 2.0 * PI / slow.mu_abs;
    let mut q: Vec<f64> = interpolate_mode(&slow, &disc.mesh)
        .map_err(err)?
        .iter()
        .map(|x| generic_amplitude * x)
        .collect();
    let class = is_exceptional(params.tip_inertia, params, EXCEPTIONAL_REL_TOL, ELL_MAX).map_err(err)?;
    let mut shortest = slowest_period;
    let exceptional = match class {
        InertiaClass::Exceptional(ell) => {
            let star = nodal_mode(ell, params).map_err(err)?;
            shortest = shortest.min(2.0 * PI / star.mu_abs);
            for (qi, s) in q.iter_mut().zip(interpolate_mode(&star, &disc.mesh).map_err(err)?) {
                *qi += nodal_amplitude * s;
            }
            Some(ell)
        }
        InertiaClass::Generic => None,
    };
    let y0 = BeamState::new(disc.mesh, q, vec![0.0; disc.dofs()]).map_err(err)?;
    let t_end = periods * slowest_period;
    let dt = shortest / 200.0;
    let steps = (t_end / dt).ceil() as usize;
    let stride = steps.div_ceil(MAX_POINTS).max(1);
    let rec = simulate(&disc, &laws, &y0, &SimOptions::new(dt, t_end, stride).with_snapshot_stride(0)).map_err(err)?;
    let limit_energy = match exceptional {
        Some(ell) => {
            let orbit = predict_periodic(&y0, params, ell).map_err(err)?;
            Some(0.5 * (orbit.a * orbit.a + orbit.b * orbit.b))
        }
        None => None,
    };
    let initial_energy = rec.initial_energy();
    Ok(EnergyCurve {
        final_fraction: if initial_energy > 0.0 { rec.final_energy() / initial_energy } else { 0.0 },
        t: rec.times,
        energy: rec.energies,
        tip_value: rec.tip_values,
        initial_energy,
        exceptional,
        limit_energy,
        slowest_period,
    })
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn mode_shapes(
    rho: f64,
    lambda: f64,
    length: f64,
    tip_mass: f64,
    tip_inertia: f64,
    op: &str,
    count: usize,
    samples: usize,
) -> Result<String, String> {
    let p = params(rho, lambda, length, tip_mass, tip_inertia)?;
    to_json(&mode_curves(&p, operator(op)?, count, samples)?)
}

#[wasm_bindgen]
pub fn inertia_scan(rho: f64, lambda: f64, length: f64, tip_mass: f64, tip_inertia: f64, lmax: u32) -> Result<String, String> {
    let p = params(rho, lambda, length, tip_mass, tip_inertia)?;
    to_json(&scan_inertia(&p, lmax)?)
}

/// `J_ℓ` for the given beam, for snapping the inertia slider.
#[wasm_bindgen]
pub fn exceptional_inertia(rho: f64, length: f64, ell: u32) -> Result<f64, String> {
    let p = params(rho, 1.0, length, 1.0, 1.0)?;
    tipbeam::spectral::j_exceptional(ell, &p).map_err(|e| e.to_string())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn energy_curve(
    rho: f64,
    lambda: f64,
    length: f64,
    tip_mass: f64,
    tip_inertia: f64,
    spring_cubic: f64,
    damper_gain: f64,
    generic_amplitude: f64,
    nodal_amplitude: f64,
    periods: f64,
    n_elements: usize,
) -> Result<String, String> {
    let p = params(rho, lambda, length, tip_mass, tip_inertia)?;
    to_json(&simulate_energy(
        &p,
        spring_cubic,
        damper_gain,
        generic_amplitude,
        nodal_amplitude,
        periods,
        n_elements,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_curves_are_clamped_and_ordered() {
        let curves = mode_curves(&BeamParams::unit(), Operator::A, 4, 101).unwrap();
        assert_eq!(curves.len(), 4);
        for pair in curves.windows(2) {
            assert!(pair[0].p < pair[1].p);
        }
        for c in &curves {
            assert_eq!(c.x.len(), 101);
            assert!(c.u[0].abs() < 1e-14);
            assert_eq!(c.x[100], 1.0);
        }
        assert!(mode_curves(&BeamParams::unit(), Operator::B, 0, 10).is_err());
    }

    #[test]
    fn nodal_mode_is_flagged_at_exceptional_inertia() {
        let j1 = exceptional_inertia(1.0, 1.0, 1).unwrap();
        let p = BeamParams::unit().with_inertia(j1);
        let curves = mode_curves(&p, Operator::B, 2, 11).unwrap();
        assert!(!curves[0].nodal && curves[1].nodal);
        let scan = scan_inertia(&p, 5).unwrap();
        assert!(scan.exceptional);
        assert_eq!(scan.nearest_ell, 1);
        assert_eq!(scan.entries.len(), 5);
        assert!(!scan_inertia(&BeamParams::unit(), 5).unwrap().exceptional);
    }

    #[test]
    fn energy_curves_decay_or_plateau() {
        let generic = simulate_energy(&BeamParams::unit(), 1.0, 1.0, 1.0, 1.0, 20.0, 12).unwrap();
        assert!(generic.exceptional.is_none() && generic.limit_energy.is_none());
        assert!(generic.final_fraction < 0.05, "{}", generic.final_fraction);
        assert!(generic.t.len() <= MAX_POINTS + 2);

        let j1 = exceptional_inertia(1.0, 1.0, 1).unwrap();
        let special = simulate_energy(&BeamParams::unit().with_inertia(j1), 1.0, 1.0, 1.0, 1.0, 20.0, 12).unwrap();
        assert_eq!(special.exceptional, Some(1));
        let limit = special.limit_energy.unwrap();
        let last = *special.energy.last().unwrap();
        assert!((last - limit).abs() < 0.05 * limit, "{last} vs {limit}");
    }

    #[test]
    fn wrappers_report_bad_input() {
        assert!(mode_shapes(1.0, 1.0, 1.0, 0.0, 1.0, "A", 3, 10).unwrap_err().contains("m"));
        assert!(mode_shapes(1.0, 1.0, 1.0, 1.0, 1.0, "C", 3, 10).is_err());
        let json = inertia_scan(1.0, 1.0, 1.0, 1.0, 1.0, 3).unwrap();
        assert!(json.contains("\"exceptional\":false"));
        assert!(energy_curve(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 500.0, 8).is_err());
    }
}
