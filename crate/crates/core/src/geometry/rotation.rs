//! x-y-z Euler angles with the extrinsic convention `R = Rz(γ)·Ry(β)·Rx(α)`.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::{Error, Result};

const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

/// `cos β` below which the decomposition is treated as gimbal-locked.
const GIMBAL_COS_THRESHOLD: f64 = 1e-7;

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

pub fn euler_to_matrix(rotation: [f64; 3]) -> Matrix3<f64> {
    let (sa, ca) = rotation[0].sin_cos();
    let (sb, cb) = rotation[1].sin_cos();
    let (sc, cc) = rotation[2].sin_cos();
    Matrix3::new(
        cb * cc,
        sa * sb * cc - ca * sc,
        ca * sb * cc + sa * sc,
        cb * sc,
        sa * sb * sc + ca * cc,
        ca * sb * sc - sa * cc,
        -sb,
        sa * cb,
        ca * cb,
    )
}

/// Inverse of [`euler_to_matrix`]. Angles are returned in `[-π, π)`; at gimbal
/// lock the x angle is pinned to zero.
pub fn matrix_to_euler(m: &Matrix3<f64>) -> Result<[f64; 3]> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("non-finite rotation matrix".into()));
    }
    let gram_error = (m.transpose() * m - Matrix3::identity()).abs().max();
    let det = m.determinant();
    if gram_error > ORTHONORMAL_TOLERANCE || (det - 1.0).abs() > ORTHONORMAL_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "not a rotation matrix (|MᵀM - I| = {gram_error:.3e}, det = {det:.9})"
        )));
    }

    let cos_b = m[(0, 0)].hypot(m[(1, 0)]);
    let beta = (-m[(2, 0)]).atan2(cos_b);
    let (alpha, gamma) = if cos_b < GIMBAL_COS_THRESHOLD {
        (0.0, (-m[(0, 1)]).atan2(m[(1, 1)]))
    } else {
        (m[(2, 1)].atan2(m[(2, 2)]), m[(1, 0)].atan2(m[(0, 0)]))
    };
    Ok([wrap_angle(alpha), wrap_angle(beta), wrap_angle(gamma)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rx(a: f64) -> Matrix3<f64> {
        let (s, c) = a.sin_cos();
        Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
    }

    fn rz(a: f64) -> Matrix3<f64> {
        let (s, c) = a.sin_cos();
        Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    }

    #[test]
    fn zero_is_identity() {
        assert_eq!(euler_to_matrix([0.0; 3]), Matrix3::identity());
        assert_eq!(matrix_to_euler(&Matrix3::identity()).unwrap(), [0.0; 3]);
    }

    #[test]
    fn quarter_turn_about_z() {
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let m = euler_to_matrix([0.0, 0.0, PI / 2.0]);
        assert!((m - expected).abs().max() < 1e-15);
        let e = matrix_to_euler(&expected).unwrap();
        assert!(e[0].abs() < 1e-15 && e[1].abs() < 1e-15);
        assert!((e[2] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn composition_is_z_after_x() {
        let m = euler_to_matrix([PI / 2.0, 0.0, PI / 2.0]);
        // hand product of Rz(90°)·Rx(90°)
        let by_hand = Matrix3::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        assert!((m - by_hand).abs().max() < 1e-15);
        assert!((m - rz(PI / 2.0) * rx(PI / 2.0)).abs().max() < 1e-15);
    }

    #[test]
    fn roundtrip_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let r = [
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
            ];
            let m = euler_to_matrix(r);
            assert!((m.transpose() * m - Matrix3::identity()).abs().max() < 1e-9);
            assert!((m.determinant() - 1.0).abs() < 1e-9);
            let back = euler_to_matrix(matrix_to_euler(&m).unwrap());
            assert!((back - m).abs().max() < 1e-6);
        }
    }

    #[test]
    fn gimbal_lock_pins_x_angle() {
        for beta in [PI / 2.0, -PI / 2.0] {
            let m = euler_to_matrix([0.4, beta, -0.3]);
            let e = matrix_to_euler(&m).unwrap();
            assert_eq!(e[0], 0.0);
            assert!((euler_to_matrix(e) - m).abs().max() < 1e-6);
        }
    }

    #[test]
    fn rejects_non_rotations() {
        let mirror = -Matrix3::<f64>::identity();
        assert!(matrix_to_euler(&mirror).is_err());
        let skew = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matrix_to_euler(&skew).is_err());
    }

    #[test]
    fn wrap_into_half_open_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.25), 0.25);
        assert!(wrap_angle(-1e-18) < PI);
    }
}
