//! Smoothed Coulomb friction for contacting edge pairs.
//!
//! Nodal velocities are taken as (x − x₀)/Δt so the friction force is a
//! function of positions within a step. The Jacobian includes both the
//! explicit position dependence and the dependence through the contact
//! forces, which fixes the normal, the β ratios and the normal-force
//! magnitudes.

use nalgebra::{Matrix3, RowVector3, Vector3};

use crate::contact::{ContactResponse, Mat12, Vec12};
use crate::error::{Error, Result};

/// Below this tangential speed the slip direction is undefined.
pub const ZERO_SLIP_SPEED: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct FrictionParams {
    pub mu: f64,
    /// Slipping tolerance ν [m/s].
    pub nu: f64,
    pub dt: f64,
}

impl FrictionParams {
    pub fn k2(&self) -> f64 {
        15.0 / self.nu
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrictionResponse {
    pub force: Vec12,
    pub jacobian: Mat12,
}

impl FrictionResponse {
    pub fn zero() -> Self {
        FrictionResponse {
            force: Vec12::zeros(),
            jacobian: Mat12::zeros(),
        }
    }

    pub fn node_force(&self, a: usize) -> Vector3<f64> {
        self.force.fixed_rows::<3>(3 * a).into_owned()
    }
}

/// Unit normal from the two nodal contact forces on edge i.
pub fn contact_normal(f_i: &Vector3<f64>, f_i1: &Vector3<f64>) -> Result<Vector3<f64>> {
    let s = f_i + f_i1;
    let norm = s.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroNormalForce);
    }
    Ok(s / norm)
}

/// Tangential part of v_i,rel − v_j,rel with β-interpolated edge velocities.
pub fn relative_tangential_velocity(v: &[Vector3<f64>; 4], beta_i: f64, beta_j: f64, n: &Vector3<f64>) -> Vector3<f64> {
    let rel = v[0] * (1.0 - beta_i) + v[1] * beta_i - v[2] * (1.0 - beta_j) - v[3] * beta_j;
    rel - n * n.dot(&rel)
}

/// γ = 2/(1 + exp(−K2‖v_T‖)) − 1.
pub fn slip_ratio(speed: f64, nu: f64) -> f64 {
    // Written as tanh to avoid cancellation at small speeds.
    (0.5 * 15.0 / nu * speed).tanh()
}

fn slip_ratio_derivative(speed: f64, nu: f64) -> f64 {
    let k2 = 15.0 / nu;
    let t = (0.5 * k2 * speed).tanh();
    0.5 * k2 * (1.0 - t * t)
}

const SIGNS: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

fn unit_or_zero(v: &Vector3<f64>) -> Vector3<f64> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        Vector3::zeros()
    }
}

/// Friction forces and their total position Jacobian for one pair.
/// `x0` are the positions at the start of the step.
pub fn friction_response(
    x: &[Vector3<f64>; 4],
    x0: &[Vector3<f64>; 4],
    contact: &ContactResponse,
    params: &FrictionParams,
) -> FrictionResponse {
    if params.mu == 0.0 {
        return FrictionResponse::zero();
    }
    let fc: [Vector3<f64>; 4] = std::array::from_fn(|a| contact.node_force(a));
    let s_i = fc[0] + fc[1];
    let s_j = fc[2] + fc[3];
    let (ns_i, ns_j) = (s_i.norm(), s_j.norm());
    let Ok(n) = contact_normal(&fc[0], &fc[1]) else {
        return FrictionResponse::zero();
    };
    if ns_j == 0.0 {
        return FrictionResponse::zero();
    }
    let n_j = s_j / ns_j;
    let mags: [f64; 4] = std::array::from_fn(|a| fc[a].norm());
    let beta_i = mags[1] / ns_i;
    let beta_j = mags[3] / ns_j;

    let dt = params.dt;
    let v: [Vector3<f64>; 4] = std::array::from_fn(|a| (x[a] - x0[a]) / dt);
    let rel = v[0] * (1.0 - beta_i) + v[1] * beta_i - v[2] * (1.0 - beta_j) - v[3] * beta_j;
    let proj = Matrix3::identity() - n * n.transpose();
    let vt = proj * rel;
    let speed = vt.norm();
    if speed < ZERO_SLIP_SPEED {
        return FrictionResponse::zero();
    }
    let that = vt / speed;
    let gamma = slip_ratio(speed, params.nu);
    let dgamma = slip_ratio_derivative(speed, params.nu);
    let mu = params.mu;

    let mut force = Vec12::zeros();
    for a in 0..4 {
        force.fixed_rows_mut::<3>(3 * a).copy_from(&(that * (SIGNS[a] * mu * gamma * mags[a])));
    }

    let tt = that * that.transpose();
    let g = tt * dgamma + (Matrix3::identity() - tt) * (gamma / speed);
    let gp = g * proj;

    // Explicit dependence through the velocities, with forces held fixed.
    let weights = [1.0 - beta_i, beta_i, -(1.0 - beta_j), -beta_j];
    let mut jac = Mat12::zeros();
    for a in 0..4 {
        for b in 0..4 {
            let block = gp * (SIGNS[a] * mu * mags[a] * weights[b] / dt);
            jac.fixed_view_mut::<3, 3>(3 * a, 3 * b).copy_from(&block);
        }
    }

    // dv_T/dF_c for each contact-force block.
    let q = -(Matrix3::identity() * n.dot(&rel) + n * rel.transpose()) * proj / ns_i;
    let da = proj * (v[1] - v[0]);
    let db = proj * (v[2] - v[3]);
    let dbi_df0: RowVector3<f64> = -n.transpose() * (mags[1] / (ns_i * ns_i));
    let dbi_df1: RowVector3<f64> = unit_or_zero(&fc[1]).transpose() / ns_i + dbi_df0;
    let dbj_df2: RowVector3<f64> = -n_j.transpose() * (mags[3] / (ns_j * ns_j));
    let dbj_df3: RowVector3<f64> = unit_or_zero(&fc[3]).transpose() / ns_j + dbj_df2;
    let dvt_df = [q + da * dbi_df0, q + da * dbi_df1, db * dbj_df2, db * dbj_df3];

    let gamma_t = that * gamma;
    for a in 0..4 {
        let fhat = unit_or_zero(&fc[a]);
        for c in 0..4 {
            let mut block = g * dvt_df[c] * mags[a];
            if a == c {
                block += gamma_t * fhat.transpose();
            }
            block *= SIGNS[a] * mu;
            // Chain through ∂F^c_c/∂x, rows 3c..3c+3 of the contact Jacobian.
            let dfc_dx = contact.jacobian.fixed_rows::<3>(3 * c);
            let contrib = block * dfc_dx;
            let mut rows = jac.fixed_rows_mut::<3>(3 * a);
            rows += contrib;
        }
    }

    FrictionResponse { force, jacobian: jac }
}

pub fn friction_forces(x: &[Vector3<f64>; 4], x0: &[Vector3<f64>; 4], contact: &ContactResponse, params: &FrictionParams) -> Vec12 {
    friction_response(x, x0, contact, params).force
}

pub fn friction_jacobian(x: &[Vector3<f64>; 4], x0: &[Vector3<f64>; 4], contact: &ContactResponse, params: &FrictionParams) -> Mat12 {
    friction_response(x, x0, contact, params).jacobian
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{contact_force_jacobian, ContactParams};
    use crate::geometry::closest_points;
    use proptest::prelude::*;

    #[test]
    fn normal_examples() {
        let z = Vector3::z();
        assert_eq!(contact_normal(&z, &z).unwrap(), z);
        let n = contact_normal(&Vector3::x(), &Vector3::y()).unwrap();
        assert!((n - Vector3::new(1.0, 1.0, 0.0) / 2f64.sqrt()).norm() < 1e-15);
        assert_eq!(contact_normal(&z, &-z), Err(Error::ZeroNormalForce));
    }

    #[test]
    fn tangential_velocity_examples() {
        let n = Vector3::z();
        let rest = [Vector3::zeros(); 4];
        assert_eq!(relative_tangential_velocity(&rest, 0.3, 0.6, &n), Vector3::zeros());
        let normal = [n, n, Vector3::zeros(), Vector3::zeros()];
        assert!(relative_tangential_velocity(&normal, 0.3, 0.6, &n).norm() < 1e-15);
        let tangent = [Vector3::x(), Vector3::x(), Vector3::zeros(), Vector3::zeros()];
        assert_eq!(relative_tangential_velocity(&tangent, 0.3, 0.6, &n), Vector3::x());
    }

    #[test]
    fn slip_ratio_examples() {
        assert_eq!(slip_ratio(0.0, 1e-4), 0.0);
        let expected = 2.0 / (1.0 + (-15f64).exp()) - 1.0;
        assert!((slip_ratio(1e-4, 1e-4) - expected).abs() < 1e-15);
        assert!(slip_ratio(1e-5, 1e-4) < 0.65);
        let mut last = -1.0;
        for k in 0..100 {
            let g = slip_ratio(k as f64 * 2e-6, 1e-4);
            assert!(g > last || g == 1.0);
            last = g;
        }
    }

    fn setup(p: &[f64]) -> ([Vector3<f64>; 4], [Vector3<f64>; 4], ContactParams) {
        let x = [
            Vector3::new(-0.5 + 0.1 * p[0], 0.1 * p[1], 0.0),
            Vector3::new(0.5 + 0.1 * p[2], 0.1 * p[3], 0.01 * p[4]),
            Vector3::new(0.1 * p[5], -0.5, 0.195 + 0.005 * p[6]),
            Vector3::new(0.1 * p[7], 0.5, 0.195 + 0.005 * p[8]),
        ];
        let dir = Vector3::new(p[9], p[10], p[11]);
        let x0 = [x[0] - dir * 1e-7, x[1] - dir * 2e-7, x[2] + dir * 1e-7, x[3]];
        let cp = ContactParams {
            radius: 0.1,
            delta_bar: 0.05,
            stiffness: 2.0,
            scale: 1e5,
        };
        (x, x0, cp)
    }

    fn params(mu: f64) -> FrictionParams {
        FrictionParams { mu, nu: 1e-4, dt: 1e-3 }
    }

    #[test]
    fn frictionless_and_resting_give_zero() {
        let (x, x0, cp) = setup(&[0.3; 12]);
        let c = contact_force_jacobian(&x, &closest_points(&x), &cp).unwrap();
        assert_eq!(friction_response(&x, &x0, &c, &params(0.0)), FrictionResponse::zero());
        assert_eq!(friction_response(&x, &x, &c, &params(0.5)), FrictionResponse::zero());
    }

    proptest! {
        #[test]
        fn cone_tangency_and_dissipation(p in prop::collection::vec(-1.0..1.0f64, 12), mu in 0.05..1.0f64) {
            let (x, x0, cp) = setup(&p);
            let d = closest_points(&x);
            let c = contact_force_jacobian(&x, &d, &cp).unwrap();
            prop_assume!(c.force.norm() > 0.0);
            let fp = params(mu);
            let r = friction_response(&x, &x0, &c, &fp);
            let n = contact_normal(&c.node_force(0), &c.node_force(1)).unwrap();
            let v: [Vector3<f64>; 4] = std::array::from_fn(|a| (x[a] - x0[a]) / fp.dt);
            let beta_i = c.node_force(1).norm() / (c.node_force(0) + c.node_force(1)).norm();
            let beta_j = c.node_force(3).norm() / (c.node_force(2) + c.node_force(3)).norm();
            let vt = relative_tangential_velocity(&v, beta_i, beta_j, &n);
            for a in 0..4 {
                let f = r.node_force(a);
                prop_assert!(f.dot(&n).abs() <= 1e-10 * f.norm().max(1e-300));
                prop_assert!(f.norm() <= mu * c.node_force(a).norm() * (1.0 + 1e-10));
            }
            prop_assert!((r.node_force(0) + r.node_force(1)).dot(&vt) <= 0.0);
        }

        #[test]
        fn chain_rule_jacobian_matches_finite_differences(p in prop::collection::vec(-1.0..1.0f64, 12)) {
            let (x, x0, cp) = setup(&p);
            let d = closest_points(&x);
            let c = contact_force_jacobian(&x, &d, &cp).unwrap();
            prop_assume!(c.force.norm() > 0.0);
            let fp = params(0.4);
            let r = friction_response(&x, &x0, &c, &fp);
            let composed = |xx: &[Vector3<f64>; 4]| {
                let cc = contact_force_jacobian(xx, &d, &cp).unwrap();
                friction_forces(xx, &x0, &cc, &fp)
            };
            let step = 1e-10;
            let scale = r.jacobian.amax();
            for k in 0..12 {
                let (mut xp, mut xm) = (x, x);
                xp[k / 3][k % 3] += step;
                xm[k / 3][k % 3] -= step;
                let col = (composed(&xp) - composed(&xm)) / (2.0 * step);
                for row in 0..12 {
                    prop_assert!(
                        (col[row] - r.jacobian[(row, k)]).abs() <= 1e-3 * scale,
                        "({}, {}): fd {} vs {}", row, k, col[row], r.jacobian[(row, k)]
                    );
                }
            }
        }
    }
}
