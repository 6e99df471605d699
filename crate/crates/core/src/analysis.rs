//! Post-processing: trajectory difference, propulsive force, and the
//! geometric measures used to track bundling.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::closest_points;
use crate::io::{ClampReaction, Trajectory};

/// Normalized average difference ē(t) = Σ‖x_a − x_b‖ / (M N h) per record.
pub fn average_difference(a: &Trajectory, b: &Trajectory, radius: f64) -> Result<Vec<(f64, f64)>> {
    if a.layout() != b.layout() {
        return Err(Error::ShapeMismatch(format!("rod layouts {:?} vs {:?}", a.layout(), b.layout())));
    }
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} records vs {}",
            a.snapshots.len(),
            b.snapshots.len()
        )));
    }
    let layout = a.layout();
    let m = layout.len();
    let mut out = Vec::with_capacity(a.snapshots.len());
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        let scale = sa.time.abs().max(sb.time.abs()).max(1.0);
        if (sa.time - sb.time).abs() > 1e-12 * scale {
            return Err(Error::ShapeMismatch(format!("time {} vs {}", sa.time, sb.time)));
        }
        let mut sum = 0.0;
        let mut count = 0;
        for (ra, rb) in sa.nodes.iter().zip(&sb.nodes) {
            if ra.len() != rb.len() {
                return Err(Error::ShapeMismatch(format!("record at t = {} changes layout", sa.time)));
            }
            sum += ra.iter().zip(rb).map(|(x, y)| (x - y).norm()).sum::<f64>();
            count = count.max(ra.len());
        }
        out.push((sa.time, sum / (m as f64 * count as f64 * radius)));
    }
    Ok(out)
}

/// Propulsive force per record time: the axial (z) component of the clamp
/// reactions summed over all clamped nodes. Returns (t, F_p, F̄_p) with
/// F̄_p = F_p h² / (EI).
pub fn propulsive_force(reactions: &[ClampReaction], bending_stiffness: f64, radius: f64) -> Vec<(f64, f64, f64)> {
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for r in reactions {
        match out.last_mut() {
            Some(last) if last.0 == r.time => last.1 += r.force.z,
            _ => out.push((r.time, r.force.z, 0.0)),
        }
    }
    for row in &mut out {
        row.2 = row.1 * radius * radius / bending_stiffness;
    }
    out
}

/// Mean of the normalized force over records with t ≥ `from`.
pub fn window_average(series: &[(f64, f64, f64)], from: f64) -> Option<f64> {
    let vals: Vec<f64> = series.iter().filter(|r| r.0 >= from).map(|r| r.2).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Smallest centerline distance between edges of different rods.
pub fn min_inter_rod_distance(rods: &[&[Vector3<f64>]]) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..rods.len() {
        for b in a + 1..rods.len() {
            for ea in rods[a].windows(2) {
                let (ca, ra) = ((ea[0] + ea[1]) * 0.5, (ea[1] - ea[0]).norm() * 0.5);
                for eb in rods[b].windows(2) {
                    let (cb, rb) = ((eb[0] + eb[1]) * 0.5, (eb[1] - eb[0]).norm() * 0.5);
                    // Bounding spheres cannot beat the current best.
                    if (ca - cb).norm() - ra - rb >= best {
                        continue;
                    }
                    let d = closest_points(&[ea[0], ea[1], eb[0], eb[1]]).distance;
                    best = best.min(d);
                }
            }
        }
    }
    best
}

/// Mean over the distal-half nodes of one rod of the distance to the
/// nearest distal-half node of the other, averaged over all rod pairs.
pub fn distal_gap(rods: &[&[Vector3<f64>]]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0;
    for a in 0..rods.len() {
        for b in a + 1..rods.len() {
            let (ra, rb) = (rods[a], rods[b]);
            let da = &ra[ra.len() / 2..];
            let db = &rb[rb.len() / 2..];
            let mean = da
                .iter()
                .map(|x| db.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
                .sum::<f64>()
                / da.len() as f64;
            total += mean;
            pairs += 1;
        }
    }
    if pairs == 0 {
        f64::NAN
    } else {
        total / pairs as f64
    }
}
