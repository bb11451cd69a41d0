//! Stencil machinery for derivative-free gradients on the volume plane.
//!
//! Sample points are placed at `x ± r δ_i` where the `δ_i` form an
//! orthonormal basis of the hyperplane `cᵀv = 0`, so every sample keeps the
//! structural volume of the center. Points that would drop a component below
//! a small floor are repaired by clamping those components and rescaling the
//! rest back onto the plane. The stencil gradient is the minimum-norm
//! least-squares solution of the finite-difference system over all samples.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DfoError {
    #[error("need at least two members for a stencil basis")]
    TooFewVariables,
    #[error("cost vector must be strictly positive and finite")]
    BadCostVector,
    #[error("center volume {got} differs from the sample plane volume {want}")]
    OffPlane { got: f64, want: f64 },
    #[error("sample repair impossible: plane volume {volume} below floor volume {floor}")]
    RepairImpossible { volume: f64, floor: f64 },
    #[error("{0}")]
    Invalid(String),
}

/// Orthonormal basis of the kernel of `cᵀ`, in a deterministic order.
#[derive(Debug, Clone)]
pub struct StencilBasis {
    vectors: Vec<Vec<f64>>,
}

impl StencilBasis {
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Builds the basis by projecting the coordinate axes onto the kernel of
/// `cᵀ` in index order and orthonormalizing, discarding the one projection
/// that becomes dependent. Deterministic for a fixed `c`.
pub fn kernel_basis(costs: &[f64]) -> Result<StencilBasis, DfoError> {
    let m = costs.len();
    if m < 2 {
        return Err(DfoError::TooFewVariables);
    }
    if costs.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(DfoError::BadCostVector);
    }
    let c = DVector::from_column_slice(costs);
    let c_norm2 = c.dot(&c);

    let mut vectors: Vec<DVector<f64>> = Vec::with_capacity(m - 1);
    for axis in 0..m {
        if vectors.len() == m - 1 {
            break;
        }
        // Project the axis onto the kernel, then against the accepted set.
        let mut v = DVector::zeros(m);
        v[axis] = 1.0;
        let coeff = c[axis] / c_norm2;
        v -= &c * coeff;
        for u in &vectors {
            let coeff = u.dot(&v);
            v -= u * coeff;
        }
        let norm = v.norm();
        if norm > 1e-10 {
            vectors.push(v / norm);
        }
    }
    if vectors.len() != m - 1 {
        return Err(DfoError::Invalid(format!(
            "kernel basis has rank {} instead of {}",
            vectors.len(),
            m - 1
        )));
    }
    Ok(StencilBasis {
        vectors: vectors
            .into_iter()
            .map(|v| v.iter().copied().collect())
            .collect(),
    })
}

/// One stencil sample point.
#[derive(Debug, Clone)]
pub struct SamplePoint {
    pub areas: Vec<f64>,
    /// Whether the clamping repair touched this point.
    pub repaired: bool,
}

/// Generates the `2(m-1)` sample points `x ± r δ_i` (paired per basis
/// direction) and repairs any point with a component under `epsilon`:
/// those components are clamped to `epsilon` and the remaining ones scaled
/// by a common factor so the point returns to the plane `cᵀz = plane_volume`.
///
/// The center must already lie on that plane.
pub fn sample_set(
    center: &[f64],
    radius: f64,
    basis: &StencilBasis,
    costs: &[f64],
    plane_volume: f64,
    epsilon: f64,
) -> Result<Vec<SamplePoint>, DfoError> {
    let m = center.len();
    if costs.len() != m || basis.vectors().iter().any(|v| v.len() != m) {
        return Err(DfoError::Invalid("dimension mismatch".into()));
    }
    if !(radius > 0.0) {
        return Err(DfoError::Invalid(format!("radius {radius} must be positive")));
    }
    let center_volume: f64 = costs.iter().zip(center).map(|(c, x)| c * x).sum();
    if (center_volume - plane_volume).abs() > 1e-8 * (1.0 + plane_volume.abs()) {
        return Err(DfoError::OffPlane {
            got: center_volume,
            want: plane_volume,
        });
    }
    let floor: f64 = costs.iter().map(|c| c * epsilon).sum();
    if plane_volume <= floor {
        return Err(DfoError::RepairImpossible {
            volume: plane_volume,
            floor,
        });
    }

    let mut points = Vec::with_capacity(2 * basis.len());
    for dir in basis.vectors() {
        for sign in [1.0, -1.0] {
            let raw: Vec<f64> = center
                .iter()
                .zip(dir)
                .map(|(x, d)| x + sign * radius * d)
                .collect();
            points.push(repair(raw, costs, plane_volume, epsilon)?);
        }
    }
    Ok(points)
}

fn repair(
    mut z: Vec<f64>,
    costs: &[f64],
    plane_volume: f64,
    epsilon: f64,
) -> Result<SamplePoint, DfoError> {
    let m = z.len();
    let mut clamped = vec![false; m];
    let mut touched = false;
    loop {
        let mut new_clamp = false;
        for i in 0..m {
            if !clamped[i] && z[i] < epsilon {
                z[i] = epsilon;
                clamped[i] = true;
                new_clamp = true;
                touched = true;
            }
        }
        if !new_clamp {
            break;
        }
        let clamped_volume: f64 = (0..m)
            .filter(|&i| clamped[i])
            .map(|i| costs[i] * epsilon)
            .sum();
        let free_volume: f64 = (0..m)
            .filter(|&i| !clamped[i])
            .map(|i| costs[i] * z[i])
            .sum();
        let target = plane_volume - clamped_volume;
        if target <= 0.0 || free_volume <= 0.0 {
            return Err(DfoError::RepairImpossible {
                volume: plane_volume,
                floor: clamped_volume,
            });
        }
        let scale = target / free_volume;
        for i in 0..m {
            if !clamped[i] {
                z[i] *= scale;
            }
        }
    }
    Ok(SamplePoint {
        areas: z,
        repaired: touched,
    })
}

/// A complete stencil: the center with its objective value and the sample
/// points with theirs.
#[derive(Debug, Clone)]
pub struct StencilSample {
    pub center: Vec<f64>,
    pub center_value: f64,
    pub points: Vec<SamplePoint>,
    pub values: Vec<f64>,
    pub radius: f64,
}

impl StencilSample {
    /// Smallest sample value; drives the radius-control test.
    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &v| a.min(v))
    }
}

#[derive(Debug, Clone)]
pub struct StencilGradient {
    pub gradient: Vec<f64>,
    /// Set when the difference system carried no information (all rows or
    /// all values vanished); the gradient is zero in that case.
    pub degenerate: bool,
}

/// Minimum-norm least-squares solution of `Y g = δ`, with the rows of `Y`
/// holding the sample offsets and `δ` the value differences against the
/// center.
///
/// Samples whose value is not finite (an unstable realization) carry no
/// usable difference information and are left out of the system; the result
/// is degenerate only when no usable row remains.
pub fn stencil_gradient(sample: &StencilSample) -> StencilGradient {
    let m = sample.center.len();
    assert_eq!(
        sample.points.len(),
        sample.values.len(),
        "one value per sample point"
    );

    let usable: Vec<usize> = (0..sample.points.len())
        .filter(|&r| sample.values[r].is_finite())
        .collect();
    let rows = usable.len();
    if rows == 0 {
        return StencilGradient {
            gradient: vec![0.0; m],
            degenerate: true,
        };
    }

    let mut y = DMatrix::zeros(rows, m);
    let mut delta = DVector::zeros(rows);
    for (out_row, &r) in usable.iter().enumerate() {
        for j in 0..m {
            y[(out_row, j)] = sample.points[r].areas[j] - sample.center[j];
        }
        delta[out_row] = sample.values[r] - sample.center_value;
    }
    if y.amax() == 0.0 {
        return StencilGradient {
            gradient: vec![0.0; m],
            degenerate: true,
        };
    }

    let svd = y.svd(true, true);
    let sigma_max = svd.singular_values.amax();
    let cutoff = 1e-12 * sigma_max.max(1.0);
    match svd.solve(&delta, cutoff) {
        Ok(g) if g.iter().all(|v| v.is_finite()) => StencilGradient {
            gradient: g.iter().copied().collect(),
            degenerate: false,
        },
        _ => StencilGradient {
            gradient: vec![0.0; m],
            degenerate: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn evaluate(sampleless: &[SamplePoint], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        sampleless.iter().map(|p| f(&p.areas)).collect()
    }

    #[test]
    fn two_member_basis() {
        let basis = kernel_basis(&[1.0, 1.0]).unwrap();
        assert_eq!(basis.len(), 1);
        let v = &basis.vectors()[0];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0].abs() - s).abs() < 1e-12);
        assert!((v[1].abs() - s).abs() < 1e-12);
        assert!((v[0] + v[1]).abs() < 1e-12);
    }

    #[test]
    fn three_member_basis_sums_to_zero() {
        let basis = kernel_basis(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(basis.len(), 2);
        for v in basis.vectors() {
            assert!(v.iter().sum::<f64>().abs() < 1e-12);
            assert!((dot(v, v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_is_orthonormal_and_in_kernel() {
        let costs = vec![1000.0, 1414.0, 2236.0, 1000.0, 812.5, 990.0];
        let basis = kernel_basis(&costs).unwrap();
        assert_eq!(basis.len(), 5);
        for (i, u) in basis.vectors().iter().enumerate() {
            assert!(dot(u, &costs).abs() < 1e-9 * dot(&costs, &costs).sqrt());
            for (j, v) in basis.vectors().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(u, v) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn basis_needs_two_members() {
        assert!(matches!(kernel_basis(&[1.0]), Err(DfoError::TooFewVariables)));
        assert!(matches!(
            kernel_basis(&[1.0, -2.0]),
            Err(DfoError::BadCostVector)
        ));
    }

    #[test]
    fn untouched_points_are_exact_offsets() {
        let costs = vec![1.0, 1.0, 1.0];
        let basis = kernel_basis(&costs).unwrap();
        let center = vec![1.0, 1.0, 1.0];
        let pts = sample_set(&center, 0.1, &basis, &costs, 3.0, 1e-6).unwrap();
        assert_eq!(pts.len(), 4);
        for (pair, dir) in pts.chunks(2).zip(basis.vectors()) {
            for (point, sign) in pair.iter().zip([1.0, -1.0]) {
                assert!(!point.repaired);
                for j in 0..3 {
                    let want = center[j] + sign * 0.1 * dir[j];
                    assert!((point.areas[j] - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn repair_clamps_and_rescales() {
        let costs = vec![1.0, 1.0, 1.0];
        let eps = 1e-6;
        let point = repair(vec![2.5, 1.0, -0.5], &costs, 3.0, eps).unwrap();
        assert!(point.repaired);
        assert!((point.areas[2] - eps).abs() < 1e-18);
        let scale = (3.0 - eps) / 3.5;
        assert!((point.areas[0] - 2.5 * scale).abs() < 1e-12);
        assert!((point.areas[1] - 1.0 * scale).abs() < 1e-12);
        let vol = dot(&costs, &point.areas);
        assert!((vol - 3.0).abs() < 1e-10 * 3.0);
    }

    #[test]
    fn repair_volume_exact_on_fuzz() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let m = rng.random_range(2..8);
            let costs: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..2000.0)).collect();
            let center: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..3.0)).collect();
            let volume = dot(&costs, &center);
            // Radii large enough to push components negative and force repair.
            let radius = rng.random_range(0.05..5.0);
            let basis = kernel_basis(&costs).unwrap();
            let points = sample_set(&center, radius, &basis, &costs, volume, 1e-6).unwrap();
            for point in points {
                let vol = dot(&costs, &point.areas);
                assert!(
                    (vol - volume).abs() <= 1e-10 * volume.abs(),
                    "volume {vol} vs {volume}"
                );
                assert!(point.areas.iter().all(|&a| a >= 1e-6 - 1e-18));
            }
        }
    }

    #[test]
    fn plane_volume_below_floor_is_rejected() {
        let costs = vec![1.0, 1.0];
        let basis = kernel_basis(&costs).unwrap();
        let err = sample_set(&[5e-7, 5e-7], 1.0, &basis, &costs, 1e-6, 1e-6).unwrap_err();
        assert!(matches!(err, DfoError::RepairImpossible { .. }));
    }

    #[test]
    fn linear_objective_recovers_projected_gradient() {
        let costs = vec![1000.0, 1414.0, 2236.0, 900.0];
        let basis = kernel_basis(&costs).unwrap();
        let center = vec![10.0, 10.0, 10.0, 10.0];
        let plane: f64 = dot(&costs, &center);
        let grad_true = [3.0, -1.0, 0.5, 2.0];
        let f = |x: &[f64]| dot(&grad_true, x) + 7.0;

        let points = sample_set(&center, 0.5, &basis, &costs, plane, 1e-9).unwrap();
        let values = evaluate(&points, f);
        let sample = StencilSample {
            center: center.clone(),
            center_value: f(&center),
            points,
            values,
            radius: 0.5,
        };
        let g = stencil_gradient(&sample);
        assert!(!g.degenerate);

        // Expected: projection of the true gradient onto the plane.
        let c_norm2 = dot(&costs, &costs);
        let coeff = dot(&grad_true, &costs) / c_norm2;
        for j in 0..4 {
            let want = grad_true[j] - coeff * costs[j];
            assert!(
                (g.gradient[j] - want).abs() < 1e-10,
                "component {j}: {} vs {want}",
                g.gradient[j]
            );
        }
        // The stencil gradient lives in the kernel.
        assert!(dot(&g.gradient, &costs).abs() < 1e-10 * c_norm2.sqrt());
    }

    #[test]
    fn constant_objective_gives_zero_gradient() {
        let costs = vec![1.0, 2.0, 3.0];
        let basis = kernel_basis(&costs).unwrap();
        let center = vec![6.0, 6.0, 6.0];
        let plane = dot(&costs, &center);
        let points = sample_set(&center, 0.25, &basis, &costs, plane, 1e-9).unwrap();
        let values = vec![42.0; points.len()];
        let sample = StencilSample {
            center,
            center_value: 42.0,
            points,
            values,
            radius: 0.25,
        };
        let g = stencil_gradient(&sample);
        assert!(g.gradient.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn normal_gradient_projects_to_zero() {
        // f = |x|² at a center where the true gradient is parallel to c.
        let costs = vec![1.0, 1.0, 1.0];
        let basis = kernel_basis(&costs).unwrap();
        let center = vec![1.0, 1.0, 1.0];
        let f = |x: &[f64]| dot(x, x);
        let points = sample_set(&center, 0.1, &basis, &costs, 3.0, 1e-9).unwrap();
        let values = evaluate(&points, f);
        let sample = StencilSample {
            center: center.clone(),
            center_value: f(&center),
            points,
            values,
            radius: 0.1,
        };
        let g = stencil_gradient(&sample);
        for v in &g.gradient {
            assert!(v.abs() < 1e-9, "expected in-plane gradient to vanish, got {v}");
        }
    }

    #[test]
    fn normal_equations_residual_vanishes() {
        let costs = vec![3.0, 1.0, 2.0, 5.0, 4.0];
        let basis = kernel_basis(&costs).unwrap();
        let center = vec![2.0, 3.0, 4.0, 5.0, 6.0];
        let plane = dot(&costs, &center);
        let f = |x: &[f64]| x.iter().map(|v| v.powi(3)).sum::<f64>();
        let points = sample_set(&center, 0.3, &basis, &costs, plane, 1e-9).unwrap();
        let values = evaluate(&points, f);
        let sample = StencilSample {
            center: center.clone(),
            center_value: f(&center),
            points: points.clone(),
            values: values.clone(),
            radius: 0.3,
        };
        let g = stencil_gradient(&sample);
        // Yᵀ(Y g - δ) = 0 characterizes the least-squares solution.
        let m = center.len();
        let mut resid = vec![0.0; points.len()];
        for (r, point) in points.iter().enumerate() {
            let mut acc = -(values[r] - sample.center_value);
            for j in 0..m {
                acc += (point.areas[j] - center[j]) * g.gradient[j];
            }
            resid[r] = acc;
        }
        for j in 0..m {
            let mut acc = 0.0;
            for (r, point) in points.iter().enumerate() {
                acc += (point.areas[j] - center[j]) * resid[r];
            }
            assert!(acc.abs() < 1e-9, "normal equation residual {acc}");
        }
    }

    #[test]
    fn stencil_error_shrinks_with_radius() {
        // Smooth non-quadratic objective: error should fall at least linearly
        // on a radius ladder.
        let costs = vec![2.0, 1.0, 1.5, 1.0];
        let basis = kernel_basis(&costs).unwrap();
        let center = vec![1.0, 2.0, 1.5, 1.2];
        let plane = dot(&costs, &center);
        let f = |x: &[f64]| (0.3 * x[0] + 0.1 * x[1]).exp() + (0.2 * x[2] - 0.4 * x[3]).exp();
        let grad_f = |x: &[f64]| {
            let e1 = (0.3 * x[0] + 0.1 * x[1]).exp();
            let e2 = (0.2 * x[2] - 0.4 * x[3]).exp();
            vec![0.3 * e1, 0.1 * e1, 0.2 * e2, -0.4 * e2]
        };
        let c_norm2 = dot(&costs, &costs);
        let g_true = grad_f(&center);
        let coeff = dot(&g_true, &costs) / c_norm2;
        let projected: Vec<f64> = (0..4).map(|j| g_true[j] - coeff * costs[j]).collect();

        let mut errors = Vec::new();
        for &radius in &[0.4, 0.2, 0.1, 0.05] {
            let points = sample_set(&center, radius, &basis, &costs, plane, 1e-12).unwrap();
            let values = evaluate(&points, f);
            let sample = StencilSample {
                center: center.clone(),
                center_value: f(&center),
                points,
                values,
                radius,
            };
            let g = stencil_gradient(&sample);
            let err: f64 = (0..4)
                .map(|j| (g.gradient[j] - projected[j]).powi(2))
                .sum::<f64>()
                .sqrt();
            errors.push(err);
        }
        for pair in errors.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(order >= 0.9, "observed order {order} from errors {errors:?}");
        }
    }
}
