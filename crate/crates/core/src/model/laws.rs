//! Boundary feedback laws: the tip spring k₁ and the tip damper k₂.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// A scalar constitutive law `z ↦ k(z)` with its derivative.
///
/// Custom laws plug in by implementing this trait; the built-in catalogue is [`Law`].
pub trait ScalarLaw: Send + Sync + fmt::Debug {
    fn value(&self, z: f64) -> f64;

    fn derivative(&self, z: f64) -> f64;

    /// Closed-form `∫₀ᶻ k(s) ds`, if known.
    fn antiderivative(&self, _z: f64) -> Option<f64> {
        None
    }

    /// Stable identifier recorded in run manifests.
    fn id(&self) -> String;
}

/// Built-in law catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Law {
    Zero,
    /// `c z`
    Linear { c: f64 },
    /// `c z³`
    Cubic { c: f64 },
    /// `c1 z + c3 z³`
    LinearCubic { c1: f64, c3: f64 },
    /// `gain · scale · atan(z / scale)`: linear with slope `gain` near 0, saturating at `gain·scale·π/2`.
    Arctan { gain: f64, scale: f64 },
}

impl Law {
    pub fn catalogue_key(&self) -> &'static str {
        match self {
            Law::Zero => "zero",
            Law::Linear { .. } => "linear",
            Law::Cubic { .. } => "cubic",
            Law::LinearCubic { .. } => "linear_cubic",
            Law::Arctan { .. } => "arctan",
        }
    }

    pub fn coefficients(&self) -> Vec<f64> {
        match *self {
            Law::Zero => vec![],
            Law::Linear { c } | Law::Cubic { c } => vec![c],
            Law::LinearCubic { c1, c3 } => vec![c1, c3],
            Law::Arctan { gain, scale } => vec![gain, scale],
        }
    }

    /// Inverse of [`Law::catalogue_key`] + [`Law::coefficients`].
    pub fn from_key(key: &str, coeffs: &[f64]) -> Option<Law> {
        let law = match (key, coeffs) {
            ("zero", []) => Law::Zero,
            ("linear", [c]) => Law::Linear { c: *c },
            ("cubic", [c]) => Law::Cubic { c: *c },
            ("linear_cubic", [c1, c3]) => Law::LinearCubic { c1: *c1, c3: *c3 },
            ("arctan", [gain, scale]) if *scale > 0.0 => Law::Arctan {
                gain: *gain,
                scale: *scale,
            },
            _ => return None,
        };
        Some(law)
    }

    /// True when `k` is affine in `z` (the spring energy is then quadratic).
    pub fn is_linear(&self) -> bool {
        matches!(self, Law::Zero | Law::Linear { .. })
    }
}

impl ScalarLaw for Law {
    fn value(&self, z: f64) -> f64 {
        match *self {
            Law::Zero => 0.0,
            Law::Linear { c } => c * z,
            Law::Cubic { c } => c * z * z * z,
            Law::LinearCubic { c1, c3 } => c1 * z + c3 * z * z * z,
            Law::Arctan { gain, scale } => gain * scale * (z / scale).atan(),
        }
    }

    fn derivative(&self, z: f64) -> f64 {
        match *self {
            Law::Zero => 0.0,
            Law::Linear { c } => c,
            Law::Cubic { c } => 3.0 * c * z * z,
            Law::LinearCubic { c1, c3 } => c1 + 3.0 * c3 * z * z,
            Law::Arctan { gain, scale } => {
                let r = z / scale;
                gain / (1.0 + r * r)
            }
        }
    }

    fn antiderivative(&self, z: f64) -> Option<f64> {
        let z2 = z * z;
        Some(match *self {
            Law::Zero => 0.0,
            Law::Linear { c } => 0.5 * c * z2,
            Law::Cubic { c } => 0.25 * c * z2 * z2,
            Law::LinearCubic { c1, c3 } => 0.5 * c1 * z2 + 0.25 * c3 * z2 * z2,
            Law::Arctan { gain, scale } => {
                let r = z / scale;
                gain * scale * (z * r.atan() - 0.5 * scale * (r * r).ln_1p())
            }
        })
    }

    fn id(&self) -> String {
        let coeffs: Vec<String> = self.coefficients().iter().map(|c| format!("{c}")).collect();
        format!("{}({})", self.catalogue_key(), coeffs.join(","))
    }
}

/// Points at which the admissibility conditions are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self {
            lo: -2.0,
            hi: 2.0,
            count: 10_000,
        }
    }
}

impl SampleGrid {
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.count;
        (0..n).map(move |i| {
            if n == 1 {
                0.5 * (self.lo + self.hi)
            } else {
                self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64
            }
        })
    }
}

/// The boundary feedback pair together with the constants of the quadratic
/// lower bound `|k₂(z)| ≥ K z²` on `(-δ, δ)`.
#[derive(Debug, Clone)]
pub struct NonlinearLaws {
    pub spring: Arc<dyn ScalarLaw>,
    pub damper: Arc<dyn ScalarLaw>,
    pub k_bound: f64,
    pub delta: f64,
    pub grid: SampleGrid,
}

impl NonlinearLaws {
    pub fn new(spring: Law, damper: Law, k_bound: f64, delta: f64) -> Self {
        Self {
            spring: Arc::new(spring),
            damper: Arc::new(damper),
            k_bound,
            delta,
            grid: SampleGrid::default(),
        }
    }

    pub fn with_custom(spring: Arc<dyn ScalarLaw>, damper: Arc<dyn ScalarLaw>, k_bound: f64, delta: f64) -> Self {
        Self {
            spring,
            damper,
            k_bound,
            delta,
            grid: SampleGrid::default(),
        }
    }

    pub fn with_grid(mut self, grid: SampleGrid) -> Self {
        self.grid = grid;
        self
    }

    /// No spring, no damper: the conservative linear beam.
    pub fn conservative() -> Self {
        Self::new(Law::Zero, Law::Zero, 1.0, 1.0)
    }

    #[inline]
    pub fn k1(&self, z: f64) -> f64 {
        self.spring.value(z)
    }

    #[inline]
    pub fn dk1(&self, z: f64) -> f64 {
        self.spring.derivative(z)
    }

    #[inline]
    pub fn k2(&self, z: f64) -> f64 {
        self.damper.value(z)
    }

    #[inline]
    pub fn dk2(&self, z: f64) -> f64 {
        self.damper.derivative(z)
    }

    pub fn id(&self) -> String {
        format!("spring={};damper={}", self.spring.id(), self.damper.id())
    }
}
