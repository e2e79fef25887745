//! Gauss–Legendre rules, composite grids and an adaptive Gauss–Kronrod integrator.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed composite Gauss–Legendre rule: a list of abscissae with weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeGauss {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss points per panel used by the wavelength-based grids.
const PANEL_ORDER: usize = 10;
/// Sampling density for trigonometric/hyperbolic integrands.
pub const POINTS_PER_WAVELENGTH: f64 = 40.0;

impl CompositeGauss {
    /// `panels` equal panels on [a, b], each carrying an `order`-point rule.
    pub fn uniform(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let breaks: Vec<f64> = (0..=panels)
            .map(|k| a + (b - a) * k as f64 / panels as f64)
            .collect();
        Self::on_breaks(&breaks, order)
    }

    /// One `order`-point rule on every interval between consecutive breakpoints.
    pub fn on_breaks(breaks: &[f64], order: usize) -> Self {
        let (xs, ws) = gauss_legendre(order);
        let mut points = Vec::with_capacity(order * breaks.len());
        let mut weights = Vec::with_capacity(order * breaks.len());
        for pair in breaks.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in xs.iter().zip(&ws) {
                points.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { points, weights }
    }

    /// Grid on [0, length] resolving oscillations of wavenumber up to `p_max`
    /// with at least [`POINTS_PER_WAVELENGTH`] points per wavelength.
    pub fn for_wavenumber(length: f64, p_max: f64) -> Self {
        Self::uniform(0.0, length, Self::panels_for(length, p_max), PANEL_ORDER)
    }

    /// Like [`CompositeGauss::for_wavenumber`], but every panel boundary of the
    /// uniform mesh with `n_elements` elements is also a panel boundary.
    pub fn element_aligned(length: f64, n_elements: usize, p_max: f64) -> Self {
        let per_element = Self::panels_for(length, p_max).div_ceil(n_elements).max(1);
        Self::uniform(0.0, length, n_elements * per_element, PANEL_ORDER)
    }

    fn panels_for(length: f64, p_max: f64) -> usize {
        let wavelengths = p_max.max(0.0) * length / (2.0 * PI);
        let points = (POINTS_PER_WAVELENGTH * wavelengths).ceil().max(POINTS_PER_WAVELENGTH);
        (points / PANEL_ORDER as f64).ceil() as usize
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over [a, b].
///
/// Bisects the panel with the largest error estimate until the total estimate
/// drops below `rel_tol * |I|` (or an absolute floor for vanishing integrals).
pub fn adaptive_gk15<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_PANELS: usize = 2000;
    let (i0, e0) = gk15(&mut f, a, b);
    let mut panels = vec![(a, b, i0, e0)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Quadrature { a, b, estimate: err });
        }
        let floor = 1e3 * f64::EPSILON * panels.iter().map(|p| p.2.abs()).sum::<f64>();
        if err <= (rel_tol * total.abs()).max(floor) || err == 0.0 {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Quadrature { a, b, estimate: err });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("nonempty");
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (il, el) = gk15(&mut f, lo, mid);
        let (ir, er) = gk15(&mut f, mid, hi);
        panels.push((lo, mid, il, el));
        panels.push((mid, hi, ir, er));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_rule_is_exact_to_degree_2n_minus_1() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-14, "n={n} deg={deg}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn composite_rule_integrates_oscillatory_exponential() {
        let p = 17.3;
        let grid = CompositeGauss::for_wavenumber(1.0, 2.0 * p);
        let num = grid.integrate(|x| (p * x).sin() * (p * x).cosh() / p.cosh());
        // closed form of ∫ sin(px) cosh(px) dx
        let anti = |x: f64| {
            let (s, c) = ((p * x).sin(), (p * x).cos());
            ((p * x).sinh() * s - (p * x).cosh() * c) / (2.0 * p) / p.cosh()
        };
        assert_relative_eq!(num, anti(1.0) - anti(0.0), max_relative = 1e-13);
    }

    #[test]
    fn element_aligned_grid_has_element_breaks() {
        let grid = CompositeGauss::element_aligned(2.0, 7, 3.0);
        assert_eq!(grid.points.len() % 7, 0);
        let total: f64 = grid.weights.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let v = adaptive_gk15(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert_relative_eq!(v, exact, max_relative = 1e-10);
    }

    #[test]
    fn adaptive_reports_divergent_integrand() {
        assert!(adaptive_gk15(|x| 1.0 / x.abs(), -1.0, 1.0, 1e-10).is_err());
    }
}
