//! Transcendental eigenproblems of the conservative beam.
//!
//! Two boundary problems share the clamped end and the rotational tip row
//! `Jμ²u′(L) + Λu″(L) = 0`:
//!
//! * [`Operator::A`], the full payload: `mμ²u(L) − Λu‴(L) = 0`;
//! * [`Operator::B`], the translation-free problem: `u‴(L) = 0`.
//!
//! With `μ² = −(Λ/ρ)p⁴` every eigenfunction is
//! `u = C1(cosh px − cos px) + C2(sinh px − sin px)`. Internally shapes are
//! held in the equivalent form
//! `a cos px + b sin px + c e^{−px} + d e^{p(x−L)}`, whose terms stay bounded
//! on `[0, L]` for every `p`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_params, BeamParams};
use crate::quadrature::CompositeGauss;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operator {
    /// Tip mass and tip inertia.
    A,
    /// Tip inertia only; shear-free tip.
    B,
}

impl std::fmt::Display for Operator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Operator::A => "A",
            Operator::B => "B",
        })
    }
}

impl std::str::FromStr for Operator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Operator::A),
            "B" | "b" => Ok(Operator::B),
            other => Err(Error::InvalidArgument(format!("unknown operator '{other}', expected A or B"))),
        }
    }
}

/// Relative characteristic residual accepted for polished roots.
pub const ROOT_TOL: f64 = 1e-12;
/// Relative characteristic residual accepted by [`build_mode`].
pub const BUILD_TOL: f64 = 1e-8;
/// Subcells scanned inside every coarse cell of width `π/(8L)`.
pub const SUBCELLS: usize = 8;
/// Direct evaluation of `J_ℓ` is used while `ℓπ` stays below this.
const DIRECT_J_LIMIT: f64 = 700.0;

/// Shape `a cos px + b sin px + c e^{−px} + d e^{p(x−L)}` with
/// `a = −c − dε`, `b = c − dε`, `ε = e^{−pL}` (clamped at 0 by construction).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Shape {
    p: f64,
    length: f64,
    c: f64,
    d: f64,
}

impl Shape {
    fn new(p: f64, length: f64, c: f64, d: f64) -> Self {
        Self { p, length, c, d }
    }

    fn trig(&self) -> (f64, f64) {
        let eps = (-self.p * self.length).exp();
        (-self.c - self.d * eps, self.c - self.d * eps)
    }

    /// `u^{(k)}(x) / p^k` and the sum of the absolute values of its four terms.
    fn bracket(&self, x: f64, k: u32) -> (f64, f64) {
        let (a, b) = self.trig();
        let (s, c) = (self.p * x).sin_cos();
        let (cos_part, sin_part) = match k % 4 {
            0 => (a * c, b * s),
            1 => (-a * s, b * c),
            2 => (-a * c, -b * s),
            _ => (a * s, -b * c),
        };
        let left = if k.is_multiple_of(2) { 1.0 } else { -1.0 } * self.c * (-self.p * x).exp();
        let right = self.d * (self.p * (x - self.length)).exp();
        (
            cos_part + sin_part + left + right,
            cos_part.abs() + sin_part.abs() + left.abs() + right.abs(),
        )
    }

    fn derivative(&self, x: f64, k: u32) -> f64 {
        self.p.powi(k as i32) * self.bracket(x, k).0
    }

    fn scaled(&self, f: f64) -> Self {
        Self {
            c: self.c * f,
            d: self.d * f,
            ..*self
        }
    }

    /// `(C1, C2)` of the hyperbolic–trigonometric form.
    fn classical(&self) -> (f64, f64) {
        let eps = (-self.p * self.length).exp();
        (self.c + self.d * eps, -self.c + self.d * eps)
    }
}

fn check_wavenumber(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("wavenumber must be positive and finite, got {p}")));
    }
    Ok(())
}

fn check_params(params: &BeamParams) -> Result<()> {
    let report = validate_params(params);
    if !report.passed {
        let names: Vec<&str> = report.violations.iter().map(|v| v.check.as_str()).collect();
        return Err(Error::InvalidArgument(format!("non-positive parameters: {}", names.join(", "))));
    }
    Ok(())
}

/// The two boundary rows at `x = L`, applied to a shape, in units where the
/// classical `B` determinant is recovered exactly.
fn boundary_rows(op: Operator, shape: &Shape, params: &BeamParams) -> [(f64, f64); 2] {
    let p = shape.p;
    let l = shape.length;
    let lam = params.lambda;
    let inertia = params.tip_inertia * lam * p.powi(4) / params.rho;
    let d = |k| shape.bracket(l, k);
    let (d0, m0) = d(0);
    let (d1, m1) = d(1);
    let (d2, m2) = d(2);
    let (d3, m3) = d(3);
    let translation = match op {
        Operator::B => (d3, m3),
        Operator::A => {
            let mass = params.tip_mass * lam * p / params.rho;
            (-mass * d0 - lam * d3, mass * m0 + lam * m3)
        }
    };
    let rotation = (-inertia * d1 + lam * p * d2, inertia * m1 + lam * p * m2);
    [translation, rotation]
}

/// Row matrix on the basis `g1 = e^{−px} − cos px + sin px`,
/// `g2 = e^{p(x−L)} − ε(cos px + sin px)`, and the term magnitude of each row.
fn row_matrix(op: Operator, p: f64, params: &BeamParams) -> ([[f64; 2]; 2], [f64; 2]) {
    let g1 = Shape::new(p, params.length, 1.0, 0.0);
    let g2 = Shape::new(p, params.length, 0.0, 1.0);
    let r1 = boundary_rows(op, &g1, params);
    let r2 = boundary_rows(op, &g2, params);
    (
        [[r1[0].0, r2[0].0], [r1[1].0, r2[1].0]],
        [r1[0].1.hypot(r2[0].1), r1[1].1.hypot(r2[1].1)],
    )
}

/// Characteristic function of `op`, divided by `cosh pL`.
///
/// For [`Operator::B`] this is the determinant of the `(C1, C2)` system with rows
/// `u‴(L)/p³` and `(Jμ²u′(L) + Λu″(L))/p`, scaled by `1/cosh pL`; the scaling keeps
/// it finite for every `p` without changing its zeros or signs.
pub fn characteristic(op: Operator, p: f64, params: &BeamParams) -> Result<f64> {
    check_wavenumber(p)?;
    let (r, _) = row_matrix(op, p, params);
    let eps2 = (-2.0 * p * params.length).exp();
    Ok((r[0][0] * r[1][1] - r[0][1] * r[1][0]) / (1.0 + eps2))
}

pub fn char_b(p: f64, params: &BeamParams) -> Result<f64> {
    characteristic(Operator::B, p, params)
}

pub fn char_a(p: f64, params: &BeamParams) -> Result<f64> {
    characteristic(Operator::A, p, params)
}

/// `|char(p)|` relative to the size of the terms entering each row.
///
/// Row norms are not used as the scale: at an exceptional inertia the rotational
/// row vanishes identically at the nodal wavenumber.
pub fn relative_char(op: Operator, p: f64, params: &BeamParams) -> Result<f64> {
    check_wavenumber(p)?;
    let (r, scale) = row_matrix(op, p, params);
    let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
    Ok(det.abs() / (scale[0] * scale[1]))
}

/// One eigenpair. Shape: `norm·(c1(cosh px − cos px) + c2(sinh px − sin px))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// 1-based rank among the returned roots; 0 when built directly from a wavenumber.
    pub index: usize,
    pub op: Operator,
    pub p: f64,
    /// Angular frequency `|μ| = √(Λ/ρ)p²`.
    pub mu_abs: f64,
    pub c1: f64,
    pub c2: f64,
    pub norm: f64,
    pub u_l: f64,
    pub du_l: f64,
    /// Set for the tip-node mode of an exceptional inertia.
    pub nodal_ell: Option<u32>,
    pub length: f64,
    /// Normalized coefficient of `e^{−px}` in the bounded representation.
    pub decaying: f64,
    /// Normalized coefficient of `e^{p(x−L)}` in the bounded representation.
    pub growing: f64,
}

impl Mode {
    fn shape(&self) -> Shape {
        Shape::new(self.p, self.length, self.decaying, self.growing)
    }

    /// `d`-th derivative at `x`, any order, no range check.
    pub fn derivative(&self, x: f64, d: u32) -> f64 {
        self.shape().derivative(x, d)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    pub fn is_nodal(&self) -> bool {
        self.nodal_ell.is_some()
    }
}

/// `d`-th derivative (`d ≤ 3`) of the normalized shape at `x ∈ [0, L]`.
pub fn mode_eval(mode: &Mode, x: f64, d: u32) -> Result<f64> {
    if !(0.0..=mode.length).contains(&x) {
        return Err(Error::InvalidArgument(format!("x = {x} outside [0, {}]", mode.length)));
    }
    if d > 3 {
        return Err(Error::InvalidArgument(format!("derivative order {d} above 3")));
    }
    Ok(mode.derivative(x, d))
}

/// Composite rule resolving products of shapes with wavenumbers up to `p_max`.
pub fn mode_quadrature(length: f64, p_max: f64) -> CompositeGauss {
    CompositeGauss::for_wavenumber(length, 2.0 * p_max)
}

fn squared_norm(shape: &Shape, op: Operator, params: &BeamParams) -> f64 {
    let grid = mode_quadrature(params.length, shape.p);
    let bending = grid.integrate(|x| shape.derivative(x, 2).powi(2));
    let mass = grid.integrate(|x| shape.derivative(x, 0).powi(2));
    let omega = params.omega(shape.p);
    let mut tip = params.tip_inertia * shape.derivative(params.length, 1).powi(2);
    if op == Operator::A {
        tip += params.tip_mass * shape.derivative(params.length, 0).powi(2);
    }
    0.5 * params.lambda * bending + 0.5 * omega * omega * (params.rho * mass + tip)
}

/// Normalize, fix the sign by `u′(L) > 0` and fill in the cached tip values.
fn finish_mode(op: Operator, shape: Shape, params: &BeamParams, nodal_ell: Option<u32>) -> Mode {
    let (c1, _) = shape.classical();
    let unit_c1 = shape.scaled(1.0 / c1);
    let norm = 1.0 / squared_norm(&unit_c1, op, params).sqrt();
    let mut normalized = unit_c1.scaled(norm);
    let l = params.length;
    let sign = (0..4)
        .map(|k| normalized.derivative(l, [1, 0, 2, 3][k]))
        .find(|v| *v != 0.0)
        .map_or(1.0, f64::signum);
    normalized = normalized.scaled(sign);
    let (_, c2) = unit_c1.classical();
    Mode {
        index: 0,
        op,
        p: shape.p,
        mu_abs: params.omega(shape.p),
        c1: sign,
        c2: sign * c2,
        norm,
        u_l: normalized.derivative(l, 0),
        du_l: normalized.derivative(l, 1),
        nodal_ell,
        length: l,
        decaying: normalized.c,
        growing: normalized.d,
    }
}

/// Mode of `op` at the eigen-wavenumber `p`.
pub fn build_mode(op: Operator, p: f64, params: &BeamParams) -> Result<Mode> {
    check_params(params)?;
    let residual = relative_char(op, p, params)?;
    if !(residual <= BUILD_TOL) {
        return Err(Error::NotARoot { p, residual });
    }
    let (r, _) = row_matrix(op, p, params);
    let row = match op {
        Operator::B => r[0],
        Operator::A => {
            if r[0][0].hypot(r[0][1]) >= r[1][0].hypot(r[1][1]) {
                r[0]
            } else {
                r[1]
            }
        }
    };
    let shape = Shape::new(p, params.length, row[1], -row[0]);
    Ok(finish_mode(op, shape, params, None))
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    if flo.abs() <= fhi.abs() {
        lo
    } else {
        hi
    }
}

/// Highest wavenumber scanned when looking for `count` roots.
pub fn scan_cap(count: usize, length: f64) -> f64 {
    (2 * count + 16) as f64 * PI / length
}

/// The `count` smallest eigen-wavenumbers of `op`, ascending, as normalized modes.
pub fn find_modes(op: Operator, params: &BeamParams, count: usize) -> Result<Vec<Mode>> {
    check_params(params)?;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let l = params.length;
    let step = PI / (8.0 * l);
    let sub = step / SUBCELLS as f64;
    let cap = scan_cap(count, l);
    let f = |p: f64| characteristic(op, p, params).expect("positive wavenumber");

    let mut roots = Vec::with_capacity(count);
    let mut lo = 1e-3 * step;
    let mut flo = f(lo);
    let mut k = 1usize;
    while roots.len() < count {
        let hi = 1e-3 * step + k as f64 * sub;
        if hi > cap {
            return Err(Error::BracketExhausted {
                found: roots.len(),
                requested: count,
                p_max: cap,
            });
        }
        let fhi = f(hi);
        if (flo >= 0.0) != (fhi >= 0.0) {
            let root = bisect(f, lo, hi);
            let residual = relative_char(op, root, params)?;
            if !(residual < ROOT_TOL) {
                return Err(Error::NotARoot { p: root, residual });
            }
            roots.push(root);
        }
        lo = hi;
        flo = fhi;
        k += 1;
    }

    roots
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut mode = build_mode(op, p, params)?;
            mode.index = i + 1;
            Ok(mode)
        })
        .collect()
}

/// `J_ℓ = ρ(L/ℓπ)³((−1)^ℓ + cosh ℓπ)/sinh ℓπ`, the inertia at which mode `ℓπ/L`
/// of the translation-free problem has a node at the tip.
pub fn j_exceptional(ell: u32, params: &BeamParams) -> Result<f64> {
    if ell == 0 {
        return Err(Error::InvalidArgument("ell must be at least 1".into()));
    }
    let x = ell as f64 * PI;
    let base = params.rho * (params.length / x).powi(3);
    let parity = if ell.is_multiple_of(2) { 1.0 } else { -1.0 };
    let factor = if x <= DIRECT_J_LIMIT {
        (parity + x.cosh()) / x.sinh()
    } else {
        hyperbolic_factor(ell)
    };
    Ok(base * factor)
}

/// `tanh(ℓπ/2)` for odd `ℓ`, `coth(ℓπ/2)` for even `ℓ`.
pub fn hyperbolic_factor(ell: u32) -> f64 {
    let t = (0.5 * ell as f64 * PI).tanh();
    if ell % 2 == 1 {
        t
    } else {
        1.0 / t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalSet {
    /// `(ℓ, J_ℓ)`, strictly decreasing in `J_ℓ`.
    pub entries: Vec<(u32, f64)>,
}

pub fn exceptional_set(params: &BeamParams, ell_max: u32) -> Result<ExceptionalSet> {
    if ell_max == 0 {
        return Err(Error::InvalidArgument("ell_max must be at least 1".into()));
    }
    let entries = (1..=ell_max)
        .map(|ell| j_exceptional(ell, params).map(|j| (ell, j)))
        .collect::<Result<_>>()?;
    Ok(ExceptionalSet { entries })
}

/// Entry of the exceptional set closest to `j` in relative distance.
pub fn nearest_exceptional(j: f64, params: &BeamParams) -> Result<(u32, f64)> {
    let guess = (params.length / PI * (params.rho / j).cbrt()).round().max(1.0);
    let guess = if guess.is_finite() { guess.min(u32::MAX as f64 - 8.0) as u32 } else { 1 };
    let mut best = (1, j_exceptional(1, params)?);
    let mut best_dist = f64::INFINITY;
    for ell in guess.saturating_sub(3).max(1)..=guess + 3 {
        let candidate = j_exceptional(ell, params)?;
        let dist = (j - candidate).abs() / candidate;
        if dist < best_dist {
            best = (ell, candidate);
            best_dist = dist;
        }
    }
    Ok(best)
}

/// Relative tolerance with which [`nodal_mode`] matches `J` against `J_ℓ`.
pub const NODAL_J_TOL: f64 = 1e-10;

/// The tip-node eigenfunction with `p = ℓπ/L`; requires `J = J_ℓ`.
pub fn nodal_mode(ell: u32, params: &BeamParams) -> Result<Mode> {
    check_params(params)?;
    let target = j_exceptional(ell, params)?;
    if (params.tip_inertia - target).abs() > NODAL_J_TOL * target {
        let (nearest_ell, nearest_j) = nearest_exceptional(params.tip_inertia, params)?;
        return Err(Error::InertiaMismatch {
            given: params.tip_inertia,
            nearest_ell,
            nearest_j,
        });
    }
    let x = ell as f64 * PI;
    let s = if ell.is_multiple_of(2) { 1.0 } else { -1.0 };
    let eps = (-x).exp();
    // C1 = 1, C2 = −sinh x/(cosh x + s), rewritten in powers of e^{−x}
    let c2 = -(1.0 - eps * eps) / (1.0 + eps * eps + 2.0 * s * eps);
    let shape = Shape::new(x / params.length, params.length, 0.5 * (1.0 - c2), s / (1.0 + s * eps));
    Ok(finish_mode(Operator::B, shape, params, Some(ell)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InertiaClass {
    Generic,
    Exceptional(u32),
}

/// Classify `j` against `J_1..J_{ell_max}` with relative tolerance `rel_tol`.
pub fn is_exceptional(j: f64, params: &BeamParams, rel_tol: f64, ell_max: u32) -> Result<InertiaClass> {
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let set = exceptional_set(params, ell_max + 1)?;
    let half_gap = set
        .entries
        .windows(2)
        .map(|w| 0.5 * (w[0].1 - w[1].1) / w[0].1)
        .fold(f64::INFINITY, f64::min);
    if rel_tol > half_gap {
        return Err(Error::ToleranceTooLarge { rel_tol, half_gap });
    }
    Ok(set.entries[..ell_max as usize]
        .iter()
        .find(|(_, jl)| (j - jl).abs() / jl <= rel_tol)
        .map_or(InertiaClass::Generic, |(ell, _)| InertiaClass::Exceptional(*ell)))
}

/// Matrix of pairwise inner products of the mode state vectors.
pub fn gram_matrix(modes: &[Mode], params: &BeamParams) -> DMatrix<f64> {
    let n = modes.len();
    let p_max = modes.iter().map(|m| m.p).fold(0.0, f64::max);
    let grid = mode_quadrature(params.length, p_max);
    let l = params.length;
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (mi, mj) = (&modes[i], &modes[j]);
            let bending = grid.integrate(|x| mi.derivative(x, 2) * mj.derivative(x, 2));
            let mass = grid.integrate(|x| mi.value(x) * mj.value(x));
            let mut tip = params.tip_inertia * mi.derivative(l, 1) * mj.derivative(l, 1);
            if mi.op == Operator::A && mj.op == Operator::A {
                tip += params.tip_mass * mi.value(l) * mj.value(l);
            }
            let entry = 0.5 * params.lambda * bending
                + 0.5 * params.omega(mi.p) * params.omega(mj.p) * (params.rho * mass + tip);
            g[(i, j)] = entry;
            g[(j, i)] = entry;
        }
    }
    g
}

/// Largest relative violation of the beam equation and the two boundary rows.
pub fn eigen_residual(mode: &Mode, params: &BeamParams) -> f64 {
    let shape = mode.shape();
    let p4 = mode.p.powi(4);
    let grid = mode_quadrature(params.length, mode.p);
    // ρμ²u + Λu⁗ with μ² = −(Λ/ρ)p⁴
    let interior = grid.integrate(|x| (shape.derivative(x, 4) - p4 * shape.derivative(x, 0)).powi(2));
    let scale = grid.integrate(|x| (p4 * shape.derivative(x, 0)).powi(2));
    let pde = (interior / scale).sqrt();

    let rows = boundary_rows(mode.op, &shape, params);
    rows.iter()
        .map(|(value, magnitude)| value.abs() / magnitude)
        .fold(pde, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const UNIT: BeamParams = BeamParams::unit();

    // high-precision roots for ρ = Λ = L = m = J = 1
    const A_ROOTS: [f64; 8] = [
        0.931_611_384_112_234_2,
        1.841_350_633_001_745,
        4.900_873_153_835_315,
        7.966_393_396_600_853,
        11.078_933_776_165_724,
        14.203_194_336_711_908,
        17.333_442_268_619_655,
        20.467_018_080_553_472,
    ];
    const B_ROOTS: [f64; 8] = [
        0.987_527_965_639_418_9,
        2.393_233_768_914_631_5,
        5.500_851_619_305_698,
        8.640_155_226_863_454,
        11.781_278_319_658_525,
        14.922_715_588_909_398,
        18.064_242_587_774_644,
        21.205_802_847_617_87,
    ];
    const J_UNIT: [f64; 10] = [
        0.029_579_570_134_262_435,
        0.004_046_526_948_183_446,
        0.001_194_308_499_507_290_3,
        0.000_503_933_740_285_439_2,
        0.000_258_012_197_699_816_4,
        0.000_149_312_661_357_731_76,
        9.402_779_712_841_572e-5,
        6.299_127_819_137_489e-5,
        4.424_078_797_416_404_6e-5,
        3.225_153_443_320_095_4e-5,
    ];

    /// The textbook determinant, evaluated literally.
    fn classical_char_b(p: f64, params: &BeamParams) -> f64 {
        let pl = p * params.length;
        let (sh, ch, s, c) = (pl.sinh(), pl.cosh(), pl.sin(), pl.cos());
        let mu2 = -params.lambda * p.powi(4) / params.rho;
        let j = params.tip_inertia;
        let lam = params.lambda;
        let r11 = sh - s;
        let r12 = ch + c;
        let r21 = j * mu2 * (sh + s) + p * lam * (ch + c);
        let r22 = j * mu2 * (ch - c) + p * lam * (sh + s);
        r11 * r22 - r12 * r21
    }

    fn classical_eval(mode: &Mode, x: f64) -> f64 {
        let px = mode.p * x;
        mode.norm * (mode.c1 * (px.cosh() - px.cos()) + mode.c2 * (px.sinh() - px.sin()))
    }

    fn exceptional_params(ell: u32) -> BeamParams {
        let j = j_exceptional(ell, &UNIT).unwrap();
        UNIT.with_inertia(j)
    }

    #[test]
    fn scaled_char_matches_classical_determinant() {
        let params = BeamParams::new(1.3, 0.8, 1.1, 0.5, 0.7);
        for k in 1..200 {
            let p = 0.05 * k as f64;
            let got = char_b(p, &params).unwrap();
            let want = classical_char_b(p, &params) / (p * params.length).cosh();
            // the literal form loses about eps·cosh(pL) relative to its largest terms
            let scale = (1.0 + params.tip_inertia * params.lambda * p.powi(4) / params.rho + p) * (p * params.length).cosh();
            assert!((got - want).abs() < 1e-14 * scale, "p={p}: {got} vs {want}");
        }
    }

    #[test]
    fn char_rejects_nonpositive_wavenumber() {
        assert!(char_b(0.0, &UNIT).is_err());
        assert!(char_a(-1.0, &UNIT).is_err());
        assert!(char_a(f64::NAN, &UNIT).is_err());
    }

    #[test]
    fn char_stays_finite_far_past_overflow() {
        for p in [700.0, 1000.0, 5000.0] {
            assert!(char_b(p, &UNIT).unwrap().is_finite());
            assert!(char_a(p, &UNIT).unwrap().is_finite());
        }
    }

    #[test]
    fn roots_match_high_precision_values() {
        let a = find_modes(Operator::A, &UNIT, 8).unwrap();
        let b = find_modes(Operator::B, &UNIT, 8).unwrap();
        for (m, want) in a.iter().zip(A_ROOTS) {
            assert_relative_eq!(m.p, want, max_relative = 1e-13);
        }
        for (m, want) in b.iter().zip(B_ROOTS) {
            assert_relative_eq!(m.p, want, max_relative = 1e-13);
        }
        assert_eq!(a.iter().map(|m| m.index).collect::<Vec<_>>(), (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn fine_grid_scan_finds_the_same_brackets() {
        // independent scan at step 10⁻³ counting sign changes below the 6th root
        for op in [Operator::A, Operator::B] {
            let modes = find_modes(op, &UNIT, 6).unwrap();
            let top = modes[5].p + 1e-3;
            let mut changes = 0;
            let mut prev = characteristic(op, 1e-3, &UNIT).unwrap();
            let mut p = 2e-3;
            while p < top {
                let cur = characteristic(op, p, &UNIT).unwrap();
                if (cur >= 0.0) != (prev >= 0.0) {
                    changes += 1;
                }
                prev = cur;
                p += 1e-3;
            }
            assert_eq!(changes, 6, "{op}");
        }
    }

    #[test]
    fn modes_are_clamped_and_tip_cached() {
        for op in [Operator::A, Operator::B] {
            for m in find_modes(op, &UNIT, 6).unwrap() {
                assert!(mode_eval(&m, 0.0, 0).unwrap().abs() < 1e-14);
                assert!(mode_eval(&m, 0.0, 1).unwrap().abs() < 1e-13);
                assert_eq!(mode_eval(&m, 1.0, 0).unwrap(), m.u_l);
                assert_eq!(mode_eval(&m, 1.0, 1).unwrap(), m.du_l);
                assert!(m.du_l > 0.0);
                assert_relative_eq!(m.mu_abs, m.p * m.p, max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn stable_form_agrees_with_classical_form() {
        for op in [Operator::A, Operator::B] {
            for m in find_modes(op, &UNIT, 5).unwrap() {
                for k in 0..=20 {
                    let x = k as f64 / 20.0;
                    let scale = 1.0 / (m.p * m.p);
                    assert!((m.value(x) - classical_eval(&m, x)).abs() < 1e-12 * scale.max(1.0));
                }
            }
        }
    }

    #[test]
    fn b_modes_have_shear_free_tip_by_finite_differences() {
        let h = 5e-3;
        for m in find_modes(Operator::B, &UNIT, 4).unwrap() {
            let umax = (0..=100).map(|k| m.value(k as f64 / 100.0).abs()).fold(0.0, f64::max);
            // one-sided 4th-order stencil for u‴ at the right end, evaluated from u alone
            let u = |x: f64| m.value(x);
            let l = 1.0;
            let third = (-49.0 / 8.0 * u(l) + 29.0 * u(l - h) - 461.0 / 8.0 * u(l - 2.0 * h) + 62.0 * u(l - 3.0 * h)
                - 307.0 / 8.0 * u(l - 4.0 * h)
                + 13.0 * u(l - 5.0 * h)
                - 15.0 / 8.0 * u(l - 6.0 * h))
                / h.powi(3);
            let scale = m.p.powi(3) * umax;
            assert!(third.abs() < 1e-4 * scale, "n={} u'''(L)≈{third}", m.index);
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let m = &find_modes(Operator::A, &UNIT, 3).unwrap()[2];
        for x in [0.2, 0.5, 0.77] {
            for (d, h) in [(1u32, 1e-5), (2, 1e-4), (3, 1e-3)] {
                let f = |y: f64| m.derivative(y, d - 1);
                let fd = (f(x + h) - f(x - h)) / (2.0 * h);
                let exact = mode_eval(m, x, d).unwrap();
                assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "d={d} x={x}");
            }
        }
        assert!(mode_eval(m, 1.0 + 1e-9, 0).is_err());
        assert!(mode_eval(m, -1e-9, 0).is_err());
        assert!(mode_eval(m, 0.5, 4).is_err());
    }

    #[test]
    fn residuals_and_gram_on_unit_params() {
        for op in [Operator::A, Operator::B] {
            let modes = find_modes(op, &UNIT, 8).unwrap();
            for m in &modes {
                assert!(eigen_residual(m, &UNIT) < 1e-8, "{op} n={} res={}", m.index, eigen_residual(m, &UNIT));
            }
            let g = gram_matrix(&modes, &UNIT);
            let err = (g - DMatrix::identity(8, 8)).abs().max();
            assert!(err < 1e-8, "{op}: {err}");
        }
    }

    #[test]
    fn equipartition_of_normalized_modes() {
        for op in [Operator::A, Operator::B] {
            for m in find_modes(op, &UNIT, 6).unwrap() {
                let grid = mode_quadrature(1.0, m.p);
                let bending = grid.integrate(|x| m.derivative(x, 2).powi(2));
                assert_relative_eq!(UNIT.lambda * bending, 1.0, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn single_mode_gram_is_one() {
        let m = find_modes(Operator::B, &UNIT, 1).unwrap();
        let g = gram_matrix(&m, &UNIT);
        assert_eq!(g.shape(), (1, 1));
        assert_relative_eq!(g[(0, 0)], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn perturbed_wavenumber_has_large_residual() {
        for op in [Operator::A, Operator::B] {
            for m in find_modes(op, &UNIT, 4).unwrap() {
                let off = Mode { p: m.p * 1.01, ..m.clone() };
                assert!(eigen_residual(&off, &UNIT) > 1e-3, "{op} n={}", m.index);
            }
        }
    }

    #[test]
    fn residual_is_scale_invariant() {
        let m = find_modes(Operator::B, &UNIT, 3).unwrap().remove(2);
        let off = Mode { p: m.p * 1.001, ..m.clone() };
        let scaled = Mode {
            decaying: 7.5 * off.decaying,
            growing: 7.5 * off.growing,
            ..off.clone()
        };
        assert_relative_eq!(eigen_residual(&off, &UNIT), eigen_residual(&scaled, &UNIT), max_relative = 1e-12);
    }

    #[test]
    fn build_mode_rejects_non_roots() {
        assert!(matches!(build_mode(Operator::B, 1.5, &UNIT), Err(Error::NotARoot { .. })));
        assert!(build_mode(Operator::B, B_ROOTS[2], &UNIT).is_ok());
    }

    #[test]
    fn find_modes_validates_inputs() {
        assert!(find_modes(Operator::A, &UNIT, 0).is_err());
        assert!(find_modes(Operator::A, &BeamParams { rho: 0.0, ..UNIT }, 1).is_err());
    }

    #[test]
    fn exceptional_inertia_table() {
        for (ell, want) in (1..=10).zip(J_UNIT) {
            let j = j_exceptional(ell, &UNIT).unwrap();
            assert_relative_eq!(j, want, max_relative = 1e-14);
            let stable = (1.0 / (ell as f64 * PI)).powi(3) * hyperbolic_factor(ell);
            assert_relative_eq!(j, stable, max_relative = 1e-12);
        }
        let pi_len = BeamParams { length: PI, ..UNIT };
        assert!((j_exceptional(1, &pi_len).unwrap() - 0.917_152_3).abs() < 1e-6);
        assert!((j_exceptional(2, &pi_len).unwrap() - 0.125_467_7).abs() < 1e-6);
        // listed example value 0.0295794 is 2.6e-7 below the exact value
        assert!((j_exceptional(1, &UNIT).unwrap() - 0.029_579_4).abs() < 5e-7);
        assert!(j_exceptional(0, &UNIT).is_err());
    }

    #[test]
    fn exceptional_set_decreases_and_approaches_cubic_law() {
        let set = exceptional_set(&UNIT, 10).unwrap();
        assert!(set.entries.windows(2).all(|w| w[0].1 > w[1].1 && w[1].1 > 0.0));
        let (ell, j) = set.entries[9];
        let ratio = j / (1.0 / (ell as f64 * PI)).powi(3);
        assert!((ratio - 1.0).abs() < 1e-8);
        // large ℓ switch to the stable forms
        let j300 = j_exceptional(300, &UNIT).unwrap();
        assert_relative_eq!(j300, (1.0 / (300.0 * PI)).powi(3), max_relative = 1e-14);
    }

    #[test]
    fn nodal_mode_identities() {
        for ell in [1, 2, 3] {
            let params = exceptional_params(ell);
            let m = nodal_mode(ell, &params).unwrap();
            assert_eq!(m.p, ell as f64 * PI);
            assert!(m.u_l.abs() < 1e-12, "{}", m.u_l);
            assert!(m.derivative(1.0, 3).abs() < 1e-10 * m.p.powi(3));
            assert!(eigen_residual(&m, &params) < 1e-8);
            assert!(relative_char(Operator::A, m.p, &params).unwrap() < 1e-8);
            assert!(relative_char(Operator::B, m.p, &params).unwrap() < 1e-8);
            // closed-form shape up to normalization
            let x = ell as f64 * PI;
            let c2 = -x.sinh() / (x.cosh() + if ell % 2 == 0 { 1.0 } else { -1.0 });
            assert_relative_eq!(m.c2 / m.c1, c2, max_relative = 1e-12);
        }
    }

    #[test]
    fn nodal_mode_is_a_root_of_both_problems() {
        let params = exceptional_params(1);
        let a = find_modes(Operator::A, &params, 3).unwrap();
        let b = find_modes(Operator::B, &params, 3).unwrap();
        assert_relative_eq!(a[1].p, PI, max_relative = 1e-12);
        assert_relative_eq!(b[1].p, PI, max_relative = 1e-12);
        let nodal = nodal_mode(1, &params).unwrap();
        for x in [0.3, 0.6, 1.0] {
            assert!((b[1].value(x) - nodal.value(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn generic_b_modes_do_not_vanish_at_tip() {
        for m in find_modes(Operator::B, &UNIT, 8).unwrap() {
            assert!(m.u_l.abs() > 1e-6);
        }
    }

    #[test]
    fn nodal_mode_rejects_wrong_inertia() {
        let err = nodal_mode(1, &UNIT.with_inertia(0.0041)).unwrap_err();
        match err {
            Error::InertiaMismatch { nearest_ell, nearest_j, .. } => {
                assert_eq!(nearest_ell, 2);
                assert_relative_eq!(nearest_j, J_UNIT[1], max_relative = 1e-14);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inertia_classification() {
        let j1 = J_UNIT[0];
        assert_eq!(is_exceptional(j1, &UNIT, 1e-8, 10).unwrap(), InertiaClass::Exceptional(1));
        assert_eq!(is_exceptional(1.0, &UNIT, 1e-8, 10).unwrap(), InertiaClass::Generic);
        let mid = 0.5 * (J_UNIT[0] + J_UNIT[1]);
        assert_eq!(is_exceptional(mid, &UNIT, 1e-8, 10).unwrap(), InertiaClass::Generic);
        assert!(matches!(is_exceptional(1.0, &UNIT, 0.4, 10), Err(Error::ToleranceTooLarge { .. })));
        assert!(is_exceptional(1.0, &UNIT, 0.0, 10).is_err());
    }

    #[test]
    fn large_wavenumber_modes_stay_finite() {
        let params = BeamParams { length: 40.0, ..UNIT };
        let modes = find_modes(Operator::B, &params, 4).unwrap();
        for m in &modes {
            assert!(m.value(40.0).is_finite() && m.norm.is_finite());
            assert!(eigen_residual(m, &params) < 1e-8);
        }
        let high = nodal_mode(300, &params.with_inertia(j_exceptional(300, &params).unwrap())).unwrap();
        assert!(high.u_l.abs() < 1e-12 && high.du_l.is_finite());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_params_give_valid_increasing_modes(
            rho in 0.3f64..3.0,
            lambda in 0.3f64..3.0,
            length in 0.5f64..2.5,
            m in 0.05f64..5.0,
            j in 0.001f64..2.0,
        ) {
            let params = BeamParams::new(rho, lambda, length, m, j);
            for op in [Operator::A, Operator::B] {
                let modes = find_modes(op, &params, 5).unwrap();
                prop_assert!(modes.windows(2).all(|w| w[0].p < w[1].p));
                for mode in &modes {
                    prop_assert!(relative_char(op, mode.p, &params).unwrap() < ROOT_TOL);
                    prop_assert!(eigen_residual(mode, &params) < 1e-8);
                }
                let g = gram_matrix(&modes, &params);
                prop_assert!((g - DMatrix::identity(5, 5)).abs().max() < 1e-8);
            }
        }
    }
}
