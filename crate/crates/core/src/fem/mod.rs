//! Hermite cubic discretization of the beam with tip payload, and an
//! implicit-midpoint integrator for the boundary-feedback dynamics.

mod banded;
mod stepper;

pub use banded::{BandedCholesky, BandedSym};
pub use stepper::{
    simulate, step_midpoint, IntegratorStats, MidpointStepper, NewtonSettings, SimOptions, Snapshot, StepInfo,
    TrajectoryRecord,
};

use crate::error::{Error, Result};
use crate::model::{antiderivative_k1, BeamParams, BeamState, Mesh, NonlinearLaws};
use crate::spectral::Mode;

/// Half-bandwidth of the assembled matrices (two nodes × two DOFs, minus one).
pub const HALF_BANDWIDTH: usize = 3;
/// Tolerance of the clamped-end check in [`interpolate`].
pub const CLAMP_TOL: f64 = 1e-12;

/// Assembled mass and stiffness of the clamped beam with tip payload.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub params: BeamParams,
    pub mesh: Mesh,
    /// Consistent mass plus `m` and `J` on the tip DOFs.
    pub mass: BandedSym,
    pub stiffness: BandedSym,
}

fn element_stiffness(lambda: f64, h: f64) -> [[f64; 4]; 4] {
    let c = lambda / (h * h * h);
    let h2 = h * h;
    [
        [12.0, 6.0 * h, -12.0, 6.0 * h],
        [6.0 * h, 4.0 * h2, -6.0 * h, 2.0 * h2],
        [-12.0, -6.0 * h, 12.0, -6.0 * h],
        [6.0 * h, 2.0 * h2, -6.0 * h, 4.0 * h2],
    ]
    .map(|row| row.map(|v| c * v))
}

fn element_mass(rho: f64, h: f64) -> [[f64; 4]; 4] {
    let c = rho * h / 420.0;
    let h2 = h * h;
    [
        [156.0, 22.0 * h, 54.0, -13.0 * h],
        [22.0 * h, 4.0 * h2, 13.0 * h, -3.0 * h2],
        [54.0, 13.0 * h, 156.0, -22.0 * h],
        [-13.0 * h, -3.0 * h2, -22.0 * h, 4.0 * h2],
    ]
    .map(|row| row.map(|v| c * v))
}

pub fn assemble(params: &BeamParams, n_elements: usize) -> Result<DiscreteOperator> {
    let mesh = Mesh::new(params.length, n_elements)?;
    let h = mesh.h();
    let ke = element_stiffness(params.lambda, h);
    let me = element_mass(params.rho, h);
    let n = mesh.dofs();
    let mut stiffness = BandedSym::zeros(n, HALF_BANDWIDTH);
    let mut mass = BandedSym::zeros(n, HALF_BANDWIDTH);
    for e in 0..n_elements {
        let dofs = mesh.element_dofs(e);
        for a in 0..4 {
            for b in 0..=a {
                if let (Some(i), Some(j)) = (dofs[a], dofs[b]) {
                    stiffness.add(i, j, ke[a][b]);
                    mass.add(i, j, me[a][b]);
                }
            }
        }
    }
    mass.add(mesh.tip_value_index(), mesh.tip_value_index(), params.tip_mass);
    mass.add(mesh.tip_slope_index(), mesh.tip_slope_index(), params.tip_inertia);
    Ok(DiscreteOperator {
        params: *params,
        mesh,
        mass,
        stiffness,
    })
}

impl DiscreteOperator {
    #[inline]
    pub fn dofs(&self) -> usize {
        self.mesh.dofs()
    }

    #[inline]
    pub fn tip_value_index(&self) -> usize {
        self.mesh.tip_value_index()
    }

    #[inline]
    pub fn tip_slope_index(&self) -> usize {
        self.mesh.tip_slope_index()
    }

    /// `½ q₁ᵀKq₂ + ½ v₁ᵀMv₂`; equals the state inner product on the mesh.
    pub fn inner(&self, s1: &BeamState, s2: &BeamState) -> Result<f64> {
        for s in [s1, s2] {
            if s.mesh != self.mesh {
                return Err(Error::DimensionMismatch {
                    expected: self.dofs(),
                    found: s.mesh.dofs(),
                });
            }
            self.mesh.check_len(&s.q)?;
            self.mesh.check_len(&s.qdot)?;
        }
        Ok(0.5 * bending_bilinear(&self.mesh, self.params.lambda, &s1.q, &s2.q)
            + 0.5 * self.mass.bilinear(&s1.qdot, &s2.qdot))
    }

    pub fn zero_state(&self) -> BeamState {
        BeamState::zeros(self.mesh)
    }
}

/// Nodal values and slopes of `u`, where `u(x)` returns `(u(x), u′(x))`.
pub fn interpolate<F: Fn(f64) -> (f64, f64)>(u: F, mesh: &Mesh) -> Result<Vec<f64>> {
    let (value, slope) = u(0.0);
    if value.abs() > CLAMP_TOL || slope.abs() > CLAMP_TOL {
        return Err(Error::ClampViolation { value, slope });
    }
    let mut q = vec![0.0; mesh.dofs()];
    for i in 1..=mesh.n_elements {
        let (v, s) = u(mesh.node(i));
        q[2 * i - 2] = v;
        q[2 * i - 1] = s;
    }
    Ok(q)
}

/// Interpolated DOFs of a mode shape.
pub fn interpolate_mode(mode: &Mode, mesh: &Mesh) -> Result<Vec<f64>> {
    if (mode.length - mesh.length).abs() > 1e-12 * mesh.length {
        return Err(Error::InvalidArgument(format!(
            "mode length {} differs from mesh length {}",
            mode.length, mesh.length
        )));
    }
    interpolate(|x| (mode.derivative(x, 0), mode.derivative(x, 1)), mesh)
}

/// Curvature of the local cubic at both element ends.
fn end_curvatures(mesh: &Mesh, q: &[f64], e: usize) -> (f64, f64) {
    let h = mesh.h();
    let [u1, s1, u2, s2] = mesh.gather(q, e);
    let chord = 6.0 * (u2 - u1) / h;
    ((chord - 4.0 * s1 - 2.0 * s2) / h, (-chord + 2.0 * s1 + 4.0 * s2) / h)
}

/// `qᵀKw`, summed element by element from end curvatures.
///
/// Equal to `stiffness.bilinear(q, w)` in exact arithmetic; the global product
/// loses about `ε·‖K‖‖q‖²` to cancellation, which grows like the cube of the element count.
pub fn bending_bilinear(mesh: &Mesh, lambda: f64, q: &[f64], w: &[f64]) -> f64 {
    let h = mesh.h();
    let sum: f64 = (0..mesh.n_elements)
        .map(|e| {
            let (qa, qb) = end_curvatures(mesh, q, e);
            let (wa, wb) = end_curvatures(mesh, w, e);
            2.0 * qa * wa + qa * wb + qb * wa + 2.0 * qb * wb
        })
        .sum();
    lambda * h / 6.0 * sum
}

/// `½ qdotᵀ M qdot + ½ qᵀ K q + K₁(q_tip)`.
pub fn discrete_energy(disc: &DiscreteOperator, q: &[f64], qdot: &[f64], laws: &NonlinearLaws) -> Result<f64> {
    disc.mesh.check_len(q)?;
    disc.mesh.check_len(qdot)?;
    Ok(0.5 * disc.mass.bilinear(qdot, qdot)
        + 0.5 * bending_bilinear(&disc.mesh, disc.params.lambda, q, q)
        + antiderivative_k1(laws, q[disc.tip_value_index()])?)
}

/// `V(q₁, v₁) − V(q₀, v₀)` evaluated as `½(q₁−q₀)ᵀK(q₁+q₀) + ½(v₁−v₀)ᵀM(v₁+v₀) + ΔK₁`.
///
/// Differencing two separately evaluated energies loses accuracy relative to the
/// (small) change itself; this form keeps it accurate relative to itself.
pub fn energy_change(
    disc: &DiscreteOperator,
    laws: &NonlinearLaws,
    before: (&[f64], &[f64]),
    after: (&[f64], &[f64]),
) -> Result<f64> {
    let (q0, v0) = before;
    let (q1, v1) = after;
    for x in [q0, v0, q1, v1] {
        disc.mesh.check_len(x)?;
    }
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
    let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
    let tip = disc.tip_value_index();
    Ok(0.5 * bending_bilinear(&disc.mesh, disc.params.lambda, &diff(q1, q0), &sum(q1, q0))
        + 0.5 * disc.mass.bilinear(&diff(v1, v0), &sum(v1, v0))
        + antiderivative_k1(laws, q1[tip])?
        - antiderivative_k1(laws, q0[tip])?)
}

/// Iteration cap per eigenpair in [`fem_frequencies`].
pub const EIGEN_MAX_ITER: usize = 20_000;
/// Relative change of the eigenvalue estimate accepted as converged.
pub const EIGEN_TOL: f64 = 1e-13;

/// Square roots of the `count` smallest generalized eigenvalues of `(K, M)`,
/// by inverse iteration at shift 0 with `M`-orthogonal deflation.
pub fn fem_frequencies(disc: &DiscreteOperator, count: usize) -> Result<Vec<f64>> {
    let n = disc.dofs();
    if count == 0 || count > n {
        return Err(Error::InvalidArgument(format!("count must be in 1..={n}, got {count}")));
    }
    let factor = disc.stiffness.cholesky()?;
    let mass = &disc.mass;
    let mut found: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut freqs = Vec::with_capacity(count);

    let deflate = |x: &mut Vec<f64>, found: &[Vec<f64>]| {
        for _ in 0..2 {
            for y in found {
                let c = mass.bilinear(x, y);
                x.iter_mut().zip(y).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = mass.bilinear(x, x).sqrt();
        x.iter_mut().for_each(|a| *a /= norm);
    };

    for k in 0..count {
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i + 3 * k) as f64 * 0.618).sin()).collect();
        deflate(&mut x, &found);
        // θ = xᵀM K⁻¹M x is the Rayleigh quotient of K⁻¹M in the M-inner product;
        // it avoids the cancellation in xᵀKx on fine meshes.
        let mut theta = 0.0;
        let mut converged = false;
        for _ in 0..EIGEN_MAX_ITER {
            let mx = mass.matvec(&x);
            let mut y = factor.solve(&mx);
            let next: f64 = mx.iter().zip(&y).map(|(a, b)| a * b).sum();
            deflate(&mut y, &found);
            x = y;
            if (next - theta).abs() <= EIGEN_TOL * next {
                theta = next;
                converged = true;
                break;
            }
            theta = next;
        }
        let lambda = 1.0 / theta;
        if !converged {
            return Err(Error::NotConverged {
                what: "inverse iteration",
                iterations: EIGEN_MAX_ITER,
            });
        }
        freqs.push(lambda.sqrt());
        found.push(x);
    }
    Ok(freqs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{energy_v, inner_h, Law};
    use crate::spectral::{find_modes, j_exceptional, nodal_mode, Operator};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    const UNIT: BeamParams = BeamParams::unit();

    fn tip_free(disc: &DiscreteOperator) -> DMatrix<f64> {
        let mut m = disc.mass.to_dense();
        m[(disc.tip_value_index(), disc.tip_value_index())] -= disc.params.tip_mass;
        m[(disc.tip_slope_index(), disc.tip_slope_index())] -= disc.params.tip_inertia;
        m
    }

    #[test]
    fn single_element_matrices() {
        let disc = assemble(&UNIT, 1).unwrap();
        let k = disc.stiffness.to_dense();
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[12.0, -6.0, -6.0, 4.0]));
        let m = tip_free(&disc);
        let want = DMatrix::from_row_slice(2, 2, &[156.0, -22.0, -22.0, 4.0]) / 420.0;
        assert!((m - want).abs().max() < 1e-16);
    }

    #[test]
    fn tip_augmentation_is_exact() {
        let p = BeamParams::new(1.0, 1.0, 1.0, 0.37, 0.11);
        let with = assemble(&p, 4).unwrap();
        let without = tip_free(&with);
        let m = with.mass.to_dense();
        let (tv, ts) = (with.tip_value_index(), with.tip_slope_index());
        assert_eq!(m[(tv, tv)] - without[(tv, tv)], 0.37);
        assert_eq!(m[(ts, ts)] - without[(ts, ts)], 0.11);
    }

    #[test]
    fn matrices_symmetric_positive_definite() {
        for n in [1, 4, 16] {
            let disc = assemble(&BeamParams::new(1.2, 0.8, 1.5, 0.5, 0.2), n).unwrap();
            for a in [disc.mass.to_dense(), disc.stiffness.to_dense()] {
                assert!((&a - a.transpose()).abs().max() == 0.0);
                assert!(a.clone().cholesky().is_some());
            }
            assert!(disc.mass.cholesky().is_ok() && disc.stiffness.cholesky().is_ok());
        }
        assert!(assemble(&UNIT, 0).is_err());
    }

    #[test]
    fn interpolation_of_parabola_and_clamp_check() {
        let mesh = Mesh::new(1.0, 4).unwrap();
        let q = interpolate(|x| (x * x, 2.0 * x), &mesh).unwrap();
        for i in 1..=4 {
            let x = mesh.node(i);
            assert_eq!(q[2 * i - 2], x * x);
            assert_eq!(q[2 * i - 1], 2.0 * x);
        }
        assert!(matches!(interpolate(|x| (x + 1.0, 1.0), &mesh), Err(Error::ClampViolation { .. })));
    }

    #[test]
    fn nodal_mode_interpolates_to_zero_tip() {
        let params = UNIT.with_inertia(j_exceptional(1, &UNIT).unwrap());
        let mode = nodal_mode(1, &params).unwrap();
        let mesh = Mesh::new(1.0, 16).unwrap();
        let q = interpolate_mode(&mode, &mesh).unwrap();
        assert!(q[mesh.tip_value_index()].abs() < 1e-12);
        assert_eq!(q[mesh.tip_slope_index()], mode.du_l);
    }

    #[test]
    fn interpolation_energy_error_is_second_order() {
        // ‖(u − I_h u)″‖ for a B-mode: ratio ≈ 4 per halving
        let mode = find_modes(Operator::B, &UNIT, 3).unwrap().remove(2);
        let err = |n: usize| {
            let mesh = Mesh::new(1.0, n).unwrap();
            let q = interpolate_mode(&mode, &mesh).unwrap();
            mesh.integrate(6, |e, xi| {
                let x = (e as f64 + xi) * mesh.h();
                (mesh.eval_local(&q, e, xi)[2] - mode.derivative(x, 2)).powi(2)
            })
            .sqrt()
        };
        let errs: Vec<f64> = [8, 16, 32, 64].iter().map(|&n| err(n)).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.7 && ratio < 4.3, "{errs:?}");
        }
    }

    #[test]
    fn discrete_energy_matches_continuum_energy() {
        let laws = NonlinearLaws::new(Law::Cubic { c: 1.0 }, Law::Linear { c: 1.0 }, 0.5, 0.5);
        for n in [1, 2, 7] {
            let disc = assemble(&UNIT, n).unwrap();
            let q = interpolate(|x| (x * x, 2.0 * x), &disc.mesh).unwrap();
            let v = vec![0.0; disc.dofs()];
            assert_relative_eq!(discrete_energy(&disc, &q, &v, &laws).unwrap(), 2.25, max_relative = 1e-10);
        }
        let disc = assemble(&UNIT, 3).unwrap();
        let zero = vec![0.0; disc.dofs()];
        assert_eq!(discrete_energy(&disc, &zero, &zero, &laws).unwrap(), 0.0);
        assert!(discrete_energy(&disc, &zero[1..], &zero, &laws).is_err());
    }

    #[test]
    fn rotation_rate_energy_exceeds_payload_part() {
        let disc = assemble(&UNIT, 8).unwrap();
        let mut v = vec![0.0; disc.dofs()];
        let r = 0.7;
        v[disc.tip_slope_index()] = r;
        let e = discrete_energy(&disc, &vec![0.0; disc.dofs()], &v, &NonlinearLaws::conservative()).unwrap();
        assert!(e > 0.5 * UNIT.tip_inertia * r * r);
        assert_relative_eq!(e, 0.5 * disc.mass.get(disc.tip_slope_index(), disc.tip_slope_index()) * r * r);
    }

    fn arb_state(disc: &DiscreteOperator) -> impl Strategy<Value = BeamState> {
        let mesh = disc.mesh;
        (
            prop::collection::vec(-1.0f64..1.0, mesh.dofs()),
            prop::collection::vec(-1.0f64..1.0, mesh.dofs()),
        )
            .prop_map(move |(q, v)| BeamState::new(mesh, q, v).unwrap())
    }

    proptest! {
        #[test]
        fn matrix_forms_agree_with_quadrature_forms(
            (s1, s2) in {
                let disc = assemble(&BeamParams::new(1.3, 0.7, 1.9, 0.4, 0.25), 6).unwrap();
                (arb_state(&disc), arb_state(&disc))
            }
        ) {
            let params = BeamParams::new(1.3, 0.7, 1.9, 0.4, 0.25);
            let disc = assemble(&params, 6).unwrap();
            let a = disc.inner(&s1, &s2).unwrap();
            let b = inner_h(&s1, &s2, &params).unwrap();
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
            let laws = NonlinearLaws::new(Law::LinearCubic { c1: 1.0, c3: 2.0 }, Law::Zero, 1.0, 1.0);
            let e1 = discrete_energy(&disc, &s1.q, &s1.qdot, &laws).unwrap();
            let e2 = energy_v(&s1, &params, &laws, Default::default()).unwrap();
            prop_assert!((e1 - e2).abs() < 1e-12 * (1.0 + e1));
            // bending energy of u alone equals ½qᵀKq
            let still = BeamState::new(disc.mesh, s1.q.clone(), vec![0.0; disc.dofs()]).unwrap();
            let e3 = energy_v(&still, &params, &NonlinearLaws::conservative(), Default::default()).unwrap();
            prop_assert!((e3 - 0.5 * disc.stiffness.bilinear(&s1.q, &s1.q)).abs() < 1e-12 * (1.0 + e3));
            let k12 = disc.stiffness.bilinear(&s1.q, &s2.q);
            let local = bending_bilinear(&disc.mesh, params.lambda, &s1.q, &s2.q);
            prop_assert!((k12 - local).abs() < 1e-11 * (1.0 + k12.abs()));
        }
    }

    #[test]
    fn elementwise_bending_energy_resists_cancellation() {
        // smooth data on a fine mesh: the global product is dominated by round-off
        let params = BeamParams::unit();
        let disc = assemble(&params, 128).unwrap();
        let q = interpolate(|x| (x * x, 2.0 * x), &disc.mesh).unwrap();
        let exact = 2.0; // ½·∫₀¹ 2² dx
        let local = 0.5 * bending_bilinear(&disc.mesh, 1.0, &q, &q);
        assert!((local - exact).abs() < 1e-13, "{}", local - exact);
    }

    #[test]
    fn frequencies_agree_with_dense_oracle() {
        let disc = assemble(&BeamParams::new(1.0, 1.0, 1.0, 0.6, 0.3), 10).unwrap();
        let got = fem_frequencies(&disc, 5).unwrap();
        // dense symmetric reduction L⁻¹ K L⁻ᵀ
        let l = disc.mass.to_dense().cholesky().unwrap().l();
        let linv = l.clone().try_inverse().unwrap();
        let reduced = &linv * disc.stiffness.to_dense() * linv.transpose();
        let mut eig: Vec<f64> = reduced.symmetric_eigen().eigenvalues.iter().map(|v| v.sqrt()).collect();
        eig.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&eig) {
            assert_relative_eq!(*g, *w, max_relative = 1e-10);
        }
        assert!(got.windows(2).all(|w| w[0] < w[1]));
        assert!(fem_frequencies(&disc, 0).is_err());
        assert!(fem_frequencies(&disc, 21).is_err());
    }

    #[test]
    fn frequencies_converge_to_a_spectrum() {
        let modes = find_modes(Operator::A, &UNIT, 3).unwrap();
        let mut prev = [f64::INFINITY; 3];
        for n in [16, 32, 64] {
            let f = fem_frequencies(&assemble(&UNIT, n).unwrap(), 3).unwrap();
            for k in 0..3 {
                let err = (f[k] - modes[k].mu_abs).abs() / modes[k].mu_abs;
                assert!(err < prev[k], "n={n} k={k}");
                prev[k] = err;
            }
        }
        assert!(prev.iter().all(|e| *e < 1e-4));
    }
}
