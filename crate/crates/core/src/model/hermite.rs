//! Uniform mesh of C¹ Hermite cubic elements on [0, L] with the clamped node removed.
//!
//! DOF layout: node `i = 1..=N` carries `u(x_i)` at `2(i-1)` and `u'(x_i)` at `2(i-1)+1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub n_elements: usize,
    pub length: f64,
}

/// Hermite shape functions and their first two x-derivatives at local coordinate `xi ∈ [0,1]`.
pub fn hermite_basis(xi: f64, h: f64) -> [[f64; 4]; 3] {
    let x2 = xi * xi;
    let x3 = x2 * xi;
    [
        [
            1.0 - 3.0 * x2 + 2.0 * x3,
            h * (xi - 2.0 * x2 + x3),
            3.0 * x2 - 2.0 * x3,
            h * (x3 - x2),
        ],
        [
            6.0 * (x2 - xi) / h,
            1.0 - 4.0 * xi + 3.0 * x2,
            6.0 * (xi - x2) / h,
            3.0 * x2 - 2.0 * xi,
        ],
        [
            (12.0 * xi - 6.0) / (h * h),
            (6.0 * xi - 4.0) / h,
            (6.0 - 12.0 * xi) / (h * h),
            (6.0 * xi - 2.0) / h,
        ],
    ]
}

impl Mesh {
    pub fn new(length: f64, n_elements: usize) -> Result<Self> {
        if n_elements < 1 {
            return Err(Error::InvalidArgument("n_elements must be at least 1".into()));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument(format!("beam length must be positive, got {length}")));
        }
        Ok(Self { n_elements, length })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.length / self.n_elements as f64
    }

    #[inline]
    pub fn dofs(&self) -> usize {
        2 * self.n_elements
    }

    #[inline]
    pub fn tip_value_index(&self) -> usize {
        2 * self.n_elements - 2
    }

    #[inline]
    pub fn tip_slope_index(&self) -> usize {
        2 * self.n_elements - 1
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_elements {
            self.length
        } else {
            i as f64 * self.h()
        }
    }

    /// Global DOF indices of element `e` (None for the eliminated clamped DOFs).
    pub fn element_dofs(&self, e: usize) -> [Option<usize>; 4] {
        let left = if e == 0 { [None, None] } else { [Some(2 * e - 2), Some(2 * e - 1)] };
        [left[0], left[1], Some(2 * e), Some(2 * e + 1)]
    }

    /// Local DOF values of element `e` gathered from a global vector.
    pub fn gather(&self, dofs: &[f64], e: usize) -> [f64; 4] {
        self.element_dofs(e).map(|g| g.map_or(0.0, |i| dofs[i]))
    }

    /// Element index and local coordinate of `x` (clamped into [0, L]).
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let h = self.h();
        let x = x.clamp(0.0, self.length);
        let e = ((x / h).floor() as usize).min(self.n_elements - 1);
        (e, (x - e as f64 * h) / h)
    }

    /// `[u, u', u'']` of the Hermite field with coefficients `dofs` at `x`.
    pub fn eval(&self, dofs: &[f64], x: f64) -> [f64; 3] {
        let (e, xi) = self.locate(x);
        self.eval_local(dofs, e, xi)
    }

    pub fn eval_local(&self, dofs: &[f64], e: usize, xi: f64) -> [f64; 3] {
        let local = self.gather(dofs, e);
        let basis = hermite_basis(xi, self.h());
        basis.map(|row| row.iter().zip(&local).map(|(n, d)| n * d).sum())
    }

    pub fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.dofs(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Sum over elements of an `order`-point Gauss rule; `f(e, xi)` is the integrand.
    pub fn integrate<F: FnMut(usize, f64) -> f64>(&self, order: usize, mut f: F) -> f64 {
        let (nodes, weights) = crate::quadrature::gauss_legendre(order);
        let h = self.h();
        let mut total = 0.0;
        for e in 0..self.n_elements {
            let mut acc = 0.0;
            for (x, w) in nodes.iter().zip(&weights) {
                acc += w * f(e, 0.5 * (x + 1.0));
            }
            total += 0.5 * h * acc;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_interpolates_nodal_values_and_slopes() {
        let h = 0.3;
        let b0 = hermite_basis(0.0, h);
        let b1 = hermite_basis(1.0, h);
        assert_eq!(b0[0], [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(b1[0], [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(b0[1], [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(b1[1], [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn cubic_is_reproduced_exactly() {
        // u = x²(1 + x), u(0)=u'(0)=0
        let mesh = Mesh::new(1.3, 5).unwrap();
        let u = |x: f64| [x * x * (1.0 + x), 2.0 * x + 3.0 * x * x, 2.0 + 6.0 * x];
        let mut dofs = vec![0.0; mesh.dofs()];
        for i in 1..=mesh.n_elements {
            let [v, s, _] = u(mesh.node(i));
            dofs[2 * i - 2] = v;
            dofs[2 * i - 1] = s;
        }
        for k in 0..=37 {
            let x = 1.3 * k as f64 / 37.0;
            let got = mesh.eval(&dofs, x);
            let want = u(x);
            for d in 0..3 {
                assert!((got[d] - want[d]).abs() < 1e-12, "x={x} d={d}");
            }
        }
    }

    #[test]
    fn zero_elements_rejected() {
        assert!(Mesh::new(1.0, 0).is_err());
    }
}
