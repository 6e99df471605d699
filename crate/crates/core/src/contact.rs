//! Penalty contact energy between edge pairs and adaptive contact stiffness.
//!
//! Distances are scaled by 1/h so the contact threshold is Δ̄ = 2. The energy
//! is a function of the scaled distance only. Gradients pick up a factor
//! 1/h and Hessians 1/h² when mapped back to physical coordinates.

use nalgebra::{SMatrix, SVector, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{pair_distance, DistanceResult};
use crate::jet::{Jet, Scalar};

pub type Vec12 = SVector<f64, 12>;
pub type Mat12 = SMatrix<f64, 12, 12>;

#[derive(Clone, Debug, PartialEq)]
pub struct ContactParams {
    /// Rod radius h [m].
    pub radius: f64,
    /// Scaled distance tolerance δ̄ = δ/h.
    pub delta_bar: f64,
    /// Current contact stiffness k.
    pub stiffness: f64,
    /// Stiffness scale factor s.
    pub scale: f64,
}

impl ContactParams {
    /// Physical distance tolerance δ [m].
    pub fn delta(&self) -> f64 {
        self.delta_bar * self.radius
    }

    /// Energy stiffness in scaled coordinates, K1 = 15/δ̄.
    pub fn k1(&self) -> f64 {
        15.0 / self.delta_bar
    }
}

/// Placeholder stiffness used until a candidate pair first appears.
pub fn initial_stiffness(scale: f64, axial_stiffness: f64, rest_length: f64, delta: f64) -> f64 {
    scale * axial_stiffness / rest_length * delta
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// E(Δ̄) and its first two derivatives with respect to Δ̄.
pub fn contact_energy_derivatives(dbar: f64, delta_bar: f64) -> Result<(f64, f64, f64)> {
    if dbar <= 0.0 {
        return Err(Error::NonPositiveDistance { distance: dbar });
    }
    if dbar <= 2.0 - delta_bar {
        let gap = 2.0 - dbar;
        return Ok((gap * gap, -2.0 * gap, 2.0));
    }
    if dbar >= 2.0 + delta_bar {
        return Ok((0.0, 0.0, 0.0));
    }
    let k1 = 15.0 / delta_bar;
    let z = k1 * (2.0 - dbar);
    let g = softplus(z) / k1;
    let sig = logistic(z);
    Ok((g * g, -2.0 * g * sig, 2.0 * sig * sig + 2.0 * g * k1 * sig * (1.0 - sig)))
}

/// Scaled contact energy E(Δ̄).
pub fn contact_energy(dbar: f64, delta_bar: f64) -> Result<f64> {
    contact_energy_derivatives(dbar, delta_bar).map(|d| d.0)
}

/// Energy k·E, nodal forces −k∇E, and their Jacobian −k∇²E for one pair,
/// ordered as (x_i, x_{i+1}, x_j, x_{j+1}).
#[derive(Clone, Debug, PartialEq)]
pub struct ContactResponse {
    pub energy: f64,
    pub force: Vec12,
    pub jacobian: Mat12,
}

impl ContactResponse {
    pub fn zero() -> Self {
        ContactResponse {
            energy: 0.0,
            force: Vec12::zeros(),
            jacobian: Mat12::zeros(),
        }
    }

    /// Force on stencil node `a` (0..4).
    pub fn node_force(&self, a: usize) -> Vector3<f64> {
        self.force.fixed_rows::<3>(3 * a).into_owned()
    }
}

pub fn contact_force_jacobian(x: &[Vector3<f64>; 4], dist: &DistanceResult, params: &ContactParams) -> Result<ContactResponse> {
    let h = params.radius;
    if dist.distance >= 2.0 * h + params.delta() {
        return Ok(ContactResponse::zero());
    }
    let jets: [[Jet<12>; 3]; 4] =
        std::array::from_fn(|a| std::array::from_fn(|k| Jet::var(x[a][k], 3 * a + k)));
    let d = pair_distance(&jets, dist.kind, dist.beta_i, dist.beta_j);
    let (e, e1, e2) = contact_energy_derivatives(d.re() / h, params.delta_bar)?;
    let k = params.stiffness;
    let grad = Vec12::from_column_slice(&d.g);
    let hess = Mat12::from_fn(|r, c| d.h[r][c]);
    Ok(ContactResponse {
        energy: k * e,
        force: grad * (-k * e1 / h),
        jacobian: (grad * grad.transpose() * (e2 / (h * h)) + hess * (e1 / h)) * -k,
    })
}

/// k = s · max ℱ over candidate nodes; keeps `previous` when there is
/// nothing to measure.
pub fn update_contact_stiffness(force_norms: &[f64], scale: f64, previous: f64) -> f64 {
    let max = force_norms.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        max * scale
    } else {
        previous
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::closest_points;
    use proptest::prelude::*;

    #[test]
    fn energy_branch_values() {
        let db = 1e-3;
        assert_eq!(contact_energy(2.0 + db, db).unwrap(), 0.0);
        assert_eq!(contact_energy(3.0, db).unwrap(), 0.0);
        assert!((contact_energy(2.0 - db, db).unwrap() - db * db).abs() < 1e-12 * db * db);
        let expected = (db * std::f64::consts::LN_2 / 15.0).powi(2);
        assert!((contact_energy(2.0, db).unwrap() - expected).abs() < 1e-12 * expected);
        assert_eq!(contact_energy(0.0, db), Err(Error::NonPositiveDistance { distance: 0.0 }));
    }

    #[test]
    fn seams_are_continuous() {
        for db in [1e-5, 1e-3, 0.1] {
            let lo = 2.0 - db;
            let quad = (2.0 - lo) * (2.0 - lo);
            let k1 = 15.0 / db;
            let mid = (softplus(k1 * (2.0 - lo)) / k1).powi(2);
            assert!((quad - mid).abs() / (db * db) < 1e-6);
            let hi = contact_energy(2.0 + db - 1e-15, db).unwrap();
            assert!(hi.sqrt() < db * 1e-6);
        }
    }

    #[test]
    fn stiffness_update() {
        assert_eq!(update_contact_stiffness(&[1.0, 2.0, 3.0], 1e5, 7.0), 3e5);
        assert_eq!(update_contact_stiffness(&[], 1e5, 7.0), 7.0);
    }

    fn params() -> ContactParams {
        ContactParams {
            radius: 0.1,
            delta_bar: 0.05,
            stiffness: 3.0,
            scale: 1e5,
        }
    }

    #[test]
    fn out_of_range_pair_has_no_response() {
        let x = [
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, -1.0, 0.3),
            Vector3::new(0.0, 1.0, 0.3),
        ];
        let r = contact_force_jacobian(&x, &closest_points(&x), &params()).unwrap();
        assert_eq!(r, ContactResponse::zero());
    }

    #[test]
    fn parallel_rods_push_apart_along_normal() {
        let x = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.2, 0.199, 0.0),
            Vector3::new(0.8, 0.199, 0.0),
        ];
        let r = contact_force_jacobian(&x, &closest_points(&x), &params()).unwrap();
        let on_i = r.node_force(0) + r.node_force(1);
        let on_j = r.node_force(2) + r.node_force(3);
        assert!((on_i + on_j).norm() < 1e-12 * on_i.norm());
        assert!(on_i.y < 0.0 && on_i.x.abs() < 1e-12 * on_i.norm() && on_i.z.abs() < 1e-12 * on_i.norm());
    }

    fn energy_at(x: &[Vector3<f64>; 4], d: &DistanceResult, p: &ContactParams) -> f64 {
        let lifted = std::array::from_fn(|a| crate::jet::v3::lift::<f64>(&x[a]));
        let dist = pair_distance(&lifted, d.kind, d.beta_i, d.beta_j);
        p.stiffness * contact_energy(dist / p.radius, p.delta_bar).unwrap()
    }

    proptest! {
        #[test]
        fn monotone_decreasing_energy(a in 0.01..2.1f64, b in 0.01..2.1f64) {
            let db = 0.05;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9 && lo < 2.0 + db);
            prop_assert!(contact_energy(lo, db).unwrap() > contact_energy(hi, db).unwrap());
            let (f_lo, f_hi) = (contact_energy_derivatives(lo, db).unwrap().1, contact_energy_derivatives(hi, db).unwrap().1);
            prop_assert!(f_lo.abs() >= f_hi.abs());
        }

        #[test]
        fn force_and_jacobian_match_finite_differences(
            p in prop::array::uniform4((-0.3..0.3f64, -0.3..0.3f64, -0.3..0.3f64)),
            gap in 0.16..0.2049f64,
        ) {
            let pr = params();
            let mut x = [
                Vector3::new(-0.5, 0.0, 0.0),
                Vector3::new(0.5, 0.0, 0.0),
                Vector3::new(0.0, -0.5, gap),
                Vector3::new(0.0, 0.5, gap),
            ];
            for (a, q) in p.iter().enumerate() {
                x[a] += Vector3::new(q.0, q.1, 0.02 * q.2);
            }
            let d = closest_points(&x);
            prop_assume!(d.distance < 0.2049 && d.distance > 0.15);
            let r = contact_force_jacobian(&x, &d, &pr).unwrap();
            let step = 1e-7;
            let fmax = r.force.amax();
            let jmax = r.jacobian.amax();
            for k in 0..12 {
                let (mut xp, mut xm) = (x, x);
                xp[k / 3][k % 3] += step;
                xm[k / 3][k % 3] -= step;
                // Keep the classification of the base point so the FD
                // stays within one branch of the distance.
                let dp = DistanceResult { ..d };
                let fd = -(energy_at(&xp, &dp, &pr) - energy_at(&xm, &dp, &pr)) / (2.0 * step);
                prop_assert!((fd - r.force[k]).abs() <= 1e-4 * fmax.max(1e-12), "force {}: {} vs {}", k, fd, r.force[k]);
                let rp = contact_force_jacobian(&xp, &d, &pr).unwrap();
                let rm = contact_force_jacobian(&xm, &d, &pr).unwrap();
                for row in 0..12 {
                    let fdj = (rp.force[row] - rm.force[row]) / (2.0 * step);
                    prop_assert!((fdj - r.jacobian[(row, k)]).abs() <= 1e-3 * jmax.max(1e-12));
                }
            }
            let sum: Vector3<f64> = (0..4).map(|a| r.node_force(a)).sum();
            prop_assert!(sum.norm() <= 1e-10 * fmax.max(1e-300));
            prop_assert!((r.jacobian - r.jacobian.transpose()).amax() <= 1e-12 * jmax.max(1e-300));
        }
    }
}
