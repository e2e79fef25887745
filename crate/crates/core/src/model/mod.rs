//! Physical parameters, admissibility of the feedback laws, and the energy
//! functionals of the beam–payload system.

mod hermite;
mod laws;

pub use hermite::{hermite_basis, Mesh};
pub use laws::{Law, NonlinearLaws, SampleGrid, ScalarLaw};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gk15;

/// Tolerance of the sampled admissibility checks.
pub const LAW_CHECK_TOL: f64 = 1e-12;
/// Relative tolerance of the spring-energy quadrature fallback.
pub const K1_QUAD_TOL: f64 = 1e-10;

/// Constants of the beam and its tip payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Mass per unit length ρ.
    pub rho: f64,
    /// Bending stiffness Λ.
    pub lambda: f64,
    pub length: f64,
    /// Tip mass m.
    pub tip_mass: f64,
    /// Tip moment of inertia J.
    pub tip_inertia: f64,
}

impl BeamParams {
    pub const fn new(rho: f64, lambda: f64, length: f64, tip_mass: f64, tip_inertia: f64) -> Self {
        Self {
            rho,
            lambda,
            length,
            tip_mass,
            tip_inertia,
        }
    }

    /// ρ = Λ = L = m = J = 1.
    pub const fn unit() -> Self {
        Self::new(1.0, 1.0, 1.0, 1.0, 1.0)
    }

    pub fn with_inertia(self, tip_inertia: f64) -> Self {
        Self { tip_inertia, ..self }
    }

    /// Angular frequency `√(Λ/ρ)·p²` belonging to wavenumber `p`.
    #[inline]
    pub fn omega(&self, p: f64) -> f64 {
        (self.lambda / self.rho).sqrt() * p * p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    /// Worst offending sample point, when the check is sampled.
    pub point: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            passed: violations.is_empty(),
            violations,
        }
    }
}

pub fn validate_params(p: &BeamParams) -> ValidationReport {
    let fields = [
        ("rho", p.rho),
        ("Lambda", p.lambda),
        ("L", p.length),
        ("m", p.tip_mass),
        ("J", p.tip_inertia),
    ];
    let violations = fields
        .iter()
        .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
        .map(|(name, v)| Violation {
            check: (*name).to_string(),
            point: None,
            value: *v,
        })
        .collect();
    ValidationReport::from_violations(violations)
}

/// Tracks the most negative value of a sampled check.
struct Worst {
    check: &'static str,
    point: f64,
    value: f64,
}

impl Worst {
    fn new(check: &'static str) -> Self {
        Self {
            check,
            point: f64::NAN,
            value: f64::INFINITY,
        }
    }

    fn observe(&mut self, z: f64, margin: f64) {
        if margin < self.value || margin.is_nan() {
            self.point = z;
            self.value = margin;
        }
    }

    fn into_violation(self) -> Option<Violation> {
        (self.value < -LAW_CHECK_TOL || self.value.is_nan()).then(|| Violation {
            check: self.check.to_string(),
            point: Some(self.point),
            value: self.value,
        })
    }
}

/// Sampled check of the admissibility assumptions on the feedback laws:
/// nonnegative spring energy, monotone damper through the origin, and the
/// quadratic lower bound of the damper near 0.
pub fn validate_laws(laws: &NonlinearLaws) -> Result<ValidationReport> {
    if laws.grid.count == 0 || !(laws.grid.hi >= laws.grid.lo) {
        return Err(Error::InvalidArgument("law sample grid is empty".into()));
    }
    if !(laws.delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {}", laws.delta)));
    }

    let mut spring_energy = Worst::new("K1_nonnegative");
    let mut damper_slope = Worst::new("dk2_nonnegative");
    let mut quad_bound = Worst::new("k2_quadratic_bound");
    for z in laws.grid.points() {
        spring_energy.observe(z, antiderivative_k1(laws, z)?);
        damper_slope.observe(z, laws.dk2(z));
        if z.abs() < laws.delta {
            quad_bound.observe(z, laws.k2(z).abs() - laws.k_bound * z * z);
        }
    }

    let mut violations: Vec<Violation> = [spring_energy, damper_slope]
        .into_iter()
        .filter_map(Worst::into_violation)
        .collect();
    let k2_origin = laws.k2(0.0);
    if k2_origin.abs() > LAW_CHECK_TOL {
        violations.push(Violation {
            check: "k2_zero_at_origin".into(),
            point: Some(0.0),
            value: k2_origin,
        });
    }
    if !(laws.k_bound > 0.0) {
        violations.push(Violation {
            check: "k2_quadratic_bound".into(),
            point: None,
            value: laws.k_bound,
        });
    } else if let Some(v) = quad_bound.into_violation() {
        violations.push(v);
    }
    Ok(ValidationReport::from_violations(violations))
}

/// Spring energy `K₁(z) = ∫₀ᶻ k₁(s) ds`; closed form when the law provides one.
pub fn antiderivative_k1(laws: &NonlinearLaws, z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::InvalidArgument(format!("spring elongation must be finite, got {z}")));
    }
    if let Some(v) = laws.spring.antiderivative(z) {
        return Ok(v);
    }
    adaptive_gk15(|s| laws.k1(s), 0.0, z, K1_QUAD_TOL)
}

/// Discrete beam state: Hermite DOFs of the deflection `u` and velocity `v = u_t`.
///
/// The tip momenta ξ = J v'(L) and ψ = m v(L) are derived, not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamState {
    pub mesh: Mesh,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
}

impl BeamState {
    pub fn new(mesh: Mesh, q: Vec<f64>, qdot: Vec<f64>) -> Result<Self> {
        mesh.check_len(&q)?;
        mesh.check_len(&qdot)?;
        Ok(Self { mesh, q, qdot })
    }

    pub fn zeros(mesh: Mesh) -> Self {
        Self {
            mesh,
            q: vec![0.0; mesh.dofs()],
            qdot: vec![0.0; mesh.dofs()],
        }
    }

    fn check(&self) -> Result<()> {
        self.mesh.check_len(&self.q)?;
        self.mesh.check_len(&self.qdot)
    }

    #[inline]
    pub fn tip_value(&self) -> f64 {
        self.q[self.mesh.tip_value_index()]
    }

    #[inline]
    pub fn tip_velocity(&self) -> f64 {
        self.qdot[self.mesh.tip_value_index()]
    }

    #[inline]
    pub fn tip_slope_rate(&self) -> f64 {
        self.qdot[self.mesh.tip_slope_index()]
    }

    /// ξ = J v'(L)
    pub fn xi(&self, p: &BeamParams) -> f64 {
        p.tip_inertia * self.tip_slope_rate()
    }

    /// ψ = m v(L)
    pub fn psi(&self, p: &BeamParams) -> f64 {
        p.tip_mass * self.tip_velocity()
    }

    /// `a·self + b·other` on the same mesh.
    pub fn combine(&self, a: f64, other: &BeamState, b: f64) -> Result<BeamState> {
        if self.mesh != other.mesh {
            return Err(Error::DimensionMismatch {
                expected: self.mesh.dofs(),
                found: other.mesh.dofs(),
            });
        }
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(x, y)| a * x + b * y).collect();
        Ok(BeamState {
            mesh: self.mesh,
            q: mix(&self.q, &other.q),
            qdot: mix(&self.qdot, &other.qdot),
        })
    }
}

/// Points per element of the Gauss rule used for the energy integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub points_per_element: usize,
}

impl Default for QuadratureSpec {
    /// Four points integrate products of cubics (degree 6) exactly.
    fn default() -> Self {
        Self { points_per_element: 4 }
    }
}

/// Lyapunov function V: bending + beam kinetic + tip kinetic + spring energy.
pub fn energy_v(s: &BeamState, p: &BeamParams, laws: &NonlinearLaws, quad: QuadratureSpec) -> Result<f64> {
    s.check()?;
    if quad.points_per_element == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one point per element".into()));
    }
    let mesh = &s.mesh;
    let bending = mesh.integrate(quad.points_per_element, |e, xi| mesh.eval_local(&s.q, e, xi)[2].powi(2));
    let kinetic = mesh.integrate(quad.points_per_element, |e, xi| mesh.eval_local(&s.qdot, e, xi)[0].powi(2));
    let tip = p.tip_mass * s.tip_velocity().powi(2) + p.tip_inertia * s.tip_slope_rate().powi(2);
    Ok(0.5 * (p.lambda * bending + p.rho * kinetic + tip) + antiderivative_k1(laws, s.tip_value())?)
}

/// The energy inner product on states:
/// `Λ/2⟨u₁″,u₂″⟩ + ρ/2⟨v₁,v₂⟩ + ξ₁ξ₂/(2J) + ψ₁ψ₂/(2m)`.
pub fn inner_h(s1: &BeamState, s2: &BeamState, p: &BeamParams) -> Result<f64> {
    s1.check()?;
    s2.check()?;
    if s1.mesh != s2.mesh {
        return Err(Error::DimensionMismatch {
            expected: s1.mesh.dofs(),
            found: s2.mesh.dofs(),
        });
    }
    let mesh = &s1.mesh;
    let order = QuadratureSpec::default().points_per_element;
    let bending = mesh.integrate(order, |e, xi| {
        mesh.eval_local(&s1.q, e, xi)[2] * mesh.eval_local(&s2.q, e, xi)[2]
    });
    let kinetic = mesh.integrate(order, |e, xi| {
        mesh.eval_local(&s1.qdot, e, xi)[0] * mesh.eval_local(&s2.qdot, e, xi)[0]
    });
    Ok(0.5 * p.lambda * bending
        + 0.5 * p.rho * kinetic
        + s1.xi(p) * s2.xi(p) / (2.0 * p.tip_inertia)
        + s1.psi(p) * s2.psi(p) / (2.0 * p.tip_mass))
}

/// `dV/dt = −k₂(ψ/m)·ψ/m`, the rate of energy loss through the damper.
pub fn dissipation_rate(s: &BeamState, p: &BeamParams, laws: &NonlinearLaws) -> f64 {
    let tip_velocity = s.psi(p) / p.tip_mass;
    -laws.k2(tip_velocity) * tip_velocity
}
