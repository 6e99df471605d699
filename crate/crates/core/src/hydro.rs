//! Regularized Stokeslet segments.
//!
//! Every edge carries a force density that varies linearly between its end
//! nodes. Integrating the regularized Stokeslet along the edge in closed form
//! gives the fluid velocity induced at any evaluation point, and collecting
//! these contributions over all edges of all rods gives a dense mobility
//! matrix with 8πη·U = A·f.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::dense;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RssParams {
    /// Dynamic viscosity η [Pa·s].
    pub viscosity: f64,
    /// Regularization length ε [m].
    pub epsilon: f64,
}

/// T_{k,l} = ∫₀¹ α^k R_α^l dα with R_α = sqrt(‖r₀ + αe‖² + ε²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TIntegrals {
    pub t0m1: f64,
    pub t0m3: f64,
    pub t1m1: f64,
    pub t1m3: f64,
    pub t2m3: f64,
    pub t3m3: f64,
}

/// log(‖e‖R + r·e), rewritten when r·e < 0 to avoid cancellation.
fn log_arg(r: &Vector3<f64>, e: &Vector3<f64>, len: f64, rr: f64, eps2: f64) -> Result<f64> {
    let re = r.dot(e);
    let value = if re >= 0.0 {
        len * rr + re
    } else {
        (r.cross(e).norm_squared() + eps2 * len * len) / (len * rr - re)
    };
    if value > 0.0 && value.is_finite() {
        Ok(value.ln())
    } else {
        Err(Error::LogSingularity)
    }
}

pub fn t_integrals(r0: &Vector3<f64>, e: &Vector3<f64>, eps: f64) -> Result<TIntegrals> {
    let a = e.norm_squared();
    let len = a.sqrt();
    if len == 0.0 {
        return Err(Error::DegenerateEdge { edge: 0 });
    }
    let eps2 = eps * eps;
    let r1 = r0 + e;
    let b = r0.dot(e);
    let c = r0.norm_squared() + eps2;
    let d = r0.cross(e).norm_squared() + eps2 * a;
    let big_r0 = c.sqrt();
    let big_r1 = (r1.norm_squared() + eps2).sqrt();

    let t0m1 = (log_arg(&r1, e, len, big_r1, eps2)? - log_arg(r0, e, len, big_r0, eps2)?) / len;
    let t0m3 = ((a + b) / big_r1 - b / big_r0) / d;
    // R₁ − R₀ written without subtracting nearly equal numbers.
    let dr = (a + 2.0 * b) / (big_r0 + big_r1);
    let t1m1 = (dr - b * t0m1) / a;
    let t1m3 = (dr / (big_r0 * big_r1) - b * t0m3) / a;
    let t2m3 = (t0m1 - 2.0 * b * t1m3 - c * t0m3) / a;
    let t3m3 = (t1m1 - 2.0 * b * t2m3 - c * t1m3) / a;
    Ok(TIntegrals {
        t0m1,
        t0m3,
        t1m1,
        t1m3,
        t2m3,
        t3m3,
    })
}

/// Blocks (A₁, A₂) with 8πη·u(x̂) = A₁ f_i + A₂ f_{i+1} for one edge,
/// where r₀ = x_i − x̂ and e = x_{i+1} − x_i.
pub fn edge_blocks(r0: &Vector3<f64>, e: &Vector3<f64>, eps: f64) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let t = t_integrals(r0, e, eps)?;
    let eps2 = eps * eps;
    let rr = r0 * r0.transpose();
    let re = r0 * e.transpose() + e * r0.transpose();
    let ee = e * e.transpose();
    let id = Matrix3::identity();
    let m0 = id * (t.t0m1 + eps2 * t.t0m3) + rr * t.t0m3 + re * t.t1m3 + ee * t.t2m3;
    let m1 = id * (t.t1m1 + eps2 * t.t1m3) + rr * t.t1m3 + re * t.t2m3 + ee * t.t3m3;
    let len = e.norm();
    Ok(((m0 - m1) * len, m1 * len))
}

/// 8πη·u at `x_hat` induced by one edge (x_i, x_{i+1}) carrying force
/// densities `f0` at x_i and `f1` at x_{i+1}.
pub fn edge_velocity_contribution(
    x_hat: &Vector3<f64>,
    edge: (&Vector3<f64>, &Vector3<f64>),
    f0: &Vector3<f64>,
    f1: &Vector3<f64>,
    params: &RssParams,
) -> Result<Vector3<f64>> {
    let (a1, a2) = edge_blocks(&(edge.0 - x_hat), &(edge.1 - edge.0), params.epsilon)?;
    Ok(a1 * f0 + a2 * f1)
}

#[derive(Clone, Debug)]
pub struct MobilityMatrix {
    pub matrix: DMatrix<f64>,
    /// Index of each rod's first node in the global node numbering.
    pub offsets: Vec<usize>,
}

pub fn assemble_mobility(rods: &[&[Vector3<f64>]], params: &RssParams) -> Result<MobilityMatrix> {
    let mut offsets = Vec::with_capacity(rods.len());
    let mut total = 0;
    for r in rods {
        offsets.push(total);
        total += r.len();
    }
    let points: Vec<Vector3<f64>> = rods.iter().flat_map(|r| r.iter().copied()).collect();
    let mut m = DMatrix::zeros(3 * total, 3 * total);
    for (rod, nodes) in rods.iter().enumerate() {
        for i in 0..nodes.len() - 1 {
            let e = nodes[i + 1] - nodes[i];
            let (ci, cj) = (offsets[rod] + i, offsets[rod] + i + 1);
            for (p, x_hat) in points.iter().enumerate() {
                let (a1, a2) = edge_blocks(&(nodes[i] - x_hat), &e, params.epsilon)?;
                for r in 0..3 {
                    for c in 0..3 {
                        m[(3 * p + r, 3 * ci + c)] += a1[(r, c)];
                        m[(3 * p + r, 3 * cj + c)] += a2[(r, c)];
                    }
                }
            }
        }
    }
    Ok(MobilityMatrix { matrix: m, offsets })
}

/// Force the fluid exerts on each node: solve A f = 8πη·U for the force
/// densities and return −f·Δl, so a body moving through still fluid feels
/// drag opposing its motion.
pub fn hydrodynamic_forces(
    rods: &[&[Vector3<f64>]],
    velocities: &[&[Vector3<f64>]],
    voronoi: &[&[f64]],
    params: &RssParams,
) -> Result<Vec<Vec<Vector3<f64>>>> {
    let moving = velocities.iter().any(|vs| vs.iter().any(|v| v.norm_squared() > 0.0));
    if !moving {
        return Ok(rods.iter().map(|r| vec![Vector3::zeros(); r.len()]).collect());
    }
    let mobility = assemble_mobility(rods, params)?;
    let scale = 8.0 * std::f64::consts::PI * params.viscosity;
    let rhs: Vec<f64> = velocities.iter().flat_map(|vs| vs.iter().flat_map(|v| (v * scale).into_iter().copied().collect::<Vec<_>>())).collect();
    let f = dense::solve(&mobility.matrix, &rhs).ok_or(Error::SingularMobility)?;
    Ok(rods
        .iter()
        .enumerate()
        .map(|(rod, nodes)| {
            (0..nodes.len())
                .map(|i| {
                    let g = 3 * (mobility.offsets[rod] + i);
                    -Vector3::new(f[g], f[g + 1], f[g + 2]) * voronoi[rod][i]
                })
                .collect()
        })
        .collect())
}
