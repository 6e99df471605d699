//! Edge-pair proximity: candidate detection and minimum-distance classification.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::jet::v3::{self, V3};
use crate::jet::Scalar;

/// Edges whose cross product is this small relative to their lengths are
/// treated as parallel.
pub const PARALLEL_TOL: f64 = 1e-10;

/// An unordered pair of edges, stored with `(rod_a, edge_i) < (rod_b, edge_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgePairKey {
    pub rod_a: usize,
    pub edge_i: usize,
    pub rod_b: usize,
    pub edge_j: usize,
}

impl EdgePairKey {
    /// Canonical key, or `None` for a pair of the same or adjacent edges of one rod.
    pub fn new(rod_a: usize, edge_i: usize, rod_b: usize, edge_j: usize) -> Option<Self> {
        if rod_a == rod_b && edge_i.abs_diff(edge_j) <= 1 {
            return None;
        }
        let (a, b) = if (rod_a, edge_i) <= (rod_b, edge_j) {
            ((rod_a, edge_i), (rod_b, edge_j))
        } else {
            ((rod_b, edge_j), (rod_a, edge_i))
        };
        Some(EdgePairKey {
            rod_a: a.0,
            edge_i: a.1,
            rod_b: b.0,
            edge_j: b.1,
        })
    }

    /// The four node positions (x_i, x_{i+1}, x_j, x_{j+1}).
    pub fn stencil(&self, rods: &[&[Vector3<f64>]]) -> [Vector3<f64>; 4] {
        let a = rods[self.rod_a];
        let b = rods[self.rod_b];
        [a[self.edge_i], a[self.edge_i + 1], b[self.edge_j], b[self.edge_j + 1]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContactKind {
    PointPoint,
    PointEdge,
    EdgeEdge,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceResult {
    pub kind: ContactKind,
    pub distance: f64,
    pub beta_i: f64,
    pub beta_j: f64,
    pub c_i: Vector3<f64>,
    pub c_j: Vector3<f64>,
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn is_clamped(b: f64) -> bool {
    b == 0.0 || b == 1.0
}

fn kind_of(beta_i: f64, beta_j: f64) -> ContactKind {
    match (is_clamped(beta_i), is_clamped(beta_j)) {
        (true, true) => ContactKind::PointPoint,
        (false, false) => ContactKind::EdgeEdge,
        _ => ContactKind::PointEdge,
    }
}

/// Closest-point parameters between segments, following Lumelsky's
/// clamping procedure. Parallel segments pick, among the minimizers, the
/// parameter pair nearest (0.5, 0.5).
pub fn classify_and_beta(x: &[Vector3<f64>; 4]) -> (ContactKind, f64, f64) {
    let d1 = x[1] - x[0];
    let d2 = x[3] - x[2];
    let r = x[0] - x[2];
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let b = d1.dot(&d2);
    let c = d1.dot(&r);
    let f = d2.dot(&r);

    if d1.cross(&d2).norm() < PARALLEL_TOL * (a * e).sqrt() {
        let (bi, bj) = parallel_betas(x, a, e, b, c, f);
        return (kind_of(bi, bj), bi, bj);
    }

    let denom = a * e - b * b;
    let mut s = clamp01((b * f - c * e) / denom);
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = clamp01(-c / a);
    } else if t > 1.0 {
        t = 1.0;
        s = clamp01((b - c) / a);
    }
    (kind_of(s, t), s, t)
}

fn parallel_betas(x: &[Vector3<f64>; 4], a: f64, e: f64, b: f64, c: f64, f: f64) -> (f64, f64) {
    // Each candidate fixes one endpoint and projects it onto the other edge.
    let candidates = [
        (0.0, clamp01(f / e)),
        (1.0, clamp01((b + f) / e)),
        (clamp01(-c / a), 0.0),
        (clamp01((b - c) / a), 1.0),
    ];
    let dist = |(s, t): (f64, f64)| ((x[0] + (x[1] - x[0]) * s) - (x[2] + (x[3] - x[2]) * t)).norm();
    let best = candidates.iter().map(|&p| dist(p)).fold(f64::INFINITY, f64::min);
    let scale = (a.sqrt() + e.sqrt()).max(best);
    candidates
        .iter()
        .copied()
        .filter(|&p| dist(p) <= best + 1e-12 * scale)
        .min_by(|p, q| {
            let dp = (p.0 - 0.5).powi(2) + (p.1 - 0.5).powi(2);
            let dq = (q.0 - 0.5).powi(2) + (q.1 - 0.5).powi(2);
            dp.total_cmp(&dq)
        })
        .unwrap()
}

/// Classification, distance and closest points for one edge pair.
pub fn closest_points(x: &[Vector3<f64>; 4]) -> DistanceResult {
    let (kind, beta_i, beta_j) = classify_and_beta(x);
    let c_i = x[0] + (x[1] - x[0]) * beta_i;
    let c_j = x[2] + (x[3] - x[2]) * beta_j;
    DistanceResult {
        kind,
        distance: (c_i - c_j).norm(),
        beta_i,
        beta_j,
        c_i,
        c_j,
    }
}

pub fn distance_pp(x_a: &Vector3<f64>, x_b: &Vector3<f64>) -> f64 {
    (x_a - x_b).norm()
}

/// Distance from `x_c` to the line through `x_a` and `x_b`.
pub fn distance_pe(x_a: &Vector3<f64>, x_b: &Vector3<f64>, x_c: &Vector3<f64>) -> Result<f64> {
    if (x_a - x_b).norm() < 1e-12 {
        return Err(Error::DegenerateEdge { edge: 0 });
    }
    Ok(pe::<f64>(v3::lift(x_a), v3::lift(x_b), v3::lift(x_c)))
}

/// Distance between the infinite lines carrying two non-parallel edges.
pub fn distance_ee(
    x_i: &Vector3<f64>,
    x_i1: &Vector3<f64>,
    x_j: &Vector3<f64>,
    x_j1: &Vector3<f64>,
) -> Result<f64> {
    let ei = x_i1 - x_i;
    let ej = x_j1 - x_j;
    if ei.cross(&ej).norm() < PARALLEL_TOL * ei.norm() * ej.norm() {
        return Err(Error::ParallelEdges);
    }
    Ok(ee::<f64>(v3::lift(x_i), v3::lift(x_i1), v3::lift(x_j), v3::lift(x_j1)))
}

fn pe<S: Scalar>(a: V3<S>, b: V3<S>, c: V3<S>) -> S {
    let ab = v3::sub(a, b);
    v3::norm(v3::cross(ab, v3::sub(b, c))) / v3::norm(ab)
}

fn ee<S: Scalar>(xi: V3<S>, xi1: V3<S>, xj: V3<S>, xj1: V3<S>) -> S {
    let u = v3::cross(v3::sub(xi1, xi), v3::sub(xj1, xj));
    (v3::dot(v3::sub(xi, xj), u) / v3::norm(u)).abs()
}

/// Minimum distance as a smooth function of the stencil, using the formula
/// selected by a fixed classification. Differentiating this gives the
/// contact distance gradient and Hessian within one branch.
pub fn pair_distance<S: Scalar>(x: &[V3<S>; 4], kind: ContactKind, beta_i: f64, beta_j: f64) -> S {
    let end_i = if beta_i < 0.5 { x[0] } else { x[1] };
    let end_j = if beta_j < 0.5 { x[2] } else { x[3] };
    match kind {
        ContactKind::PointPoint => v3::norm(v3::sub(end_i, end_j)),
        ContactKind::PointEdge if is_clamped(beta_i) => pe(x[2], x[3], end_i),
        ContactKind::PointEdge => pe(x[0], x[1], end_j),
        ContactKind::EdgeEdge => ee(x[0], x[1], x[2], x[3]),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateSet {
    pub pairs: Vec<EdgePairKey>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContactSet {
    pub pairs: Vec<(EdgePairKey, DistanceResult)>,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Distinct (rod, node) indices touched by the candidate pairs.
    pub fn nodes(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self
            .pairs
            .iter()
            .flat_map(|k| {
                [
                    (k.rod_a, k.edge_i),
                    (k.rod_a, k.edge_i + 1),
                    (k.rod_b, k.edge_j),
                    (k.rod_b, k.edge_j + 1),
                ]
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

struct EdgeBox {
    rod: usize,
    edge: usize,
    lo: Vector3<f64>,
    hi: Vector3<f64>,
}

/// All valid pairs with Δ < 2h + δ̂.
pub fn build_candidate_set(rods: &[&[Vector3<f64>]], radius: f64, margin: f64) -> CandidateSet {
    let threshold = 2.0 * radius + margin;
    let boxes: Vec<EdgeBox> = rods
        .iter()
        .enumerate()
        .flat_map(|(r, nodes)| {
            nodes.windows(2).enumerate().map(move |(i, w)| EdgeBox {
                rod: r,
                edge: i,
                lo: w[0].inf(&w[1]),
                hi: w[0].sup(&w[1]),
            })
        })
        .collect();
    let mut pairs = Vec::new();
    for (a, ba) in boxes.iter().enumerate() {
        for bb in &boxes[a + 1..] {
            let separated = (0..3).any(|k| ba.lo[k] - bb.hi[k] >= threshold || bb.lo[k] - ba.hi[k] >= threshold);
            if separated {
                continue;
            }
            let Some(key) = EdgePairKey::new(ba.rod, ba.edge, bb.rod, bb.edge) else {
                continue;
            };
            if closest_points(&key.stencil(rods)).distance < threshold {
                pairs.push(key);
            }
        }
    }
    pairs.sort_unstable();
    CandidateSet { pairs }
}

/// Candidates with Δ < 2h + δ at the current positions.
pub fn refresh_contact_set(candidates: &CandidateSet, rods: &[&[Vector3<f64>]], radius: f64, delta: f64) -> ContactSet {
    let threshold = 2.0 * radius + delta;
    ContactSet {
        pairs: candidates
            .pairs
            .iter()
            .filter_map(|k| {
                let d = closest_points(&k.stencil(rods));
                (d.distance < threshold).then_some((*k, d))
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    #[test]
    fn crossing_skew_edges_are_edge_edge() {
        let x = [v(-1.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, -1.0, 0.5), v(0.0, 1.0, 0.5)];
        let d = closest_points(&x);
        assert_eq!(d.kind, ContactKind::EdgeEdge);
        assert!((d.beta_i - 0.5).abs() < 1e-15 && (d.beta_j - 0.5).abs() < 1e-15);
        assert!((d.distance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diverging_edges_are_point_point() {
        let x = [v(0.0, 0.0, 0.0), v(-1.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(2.0, 1.0, 0.0)];
        let (kind, bi, bj) = classify_and_beta(&x);
        assert_eq!(kind, ContactKind::PointPoint);
        assert_eq!((bi, bj), (0.0, 0.0));
    }

    #[test]
    fn distance_formulas() {
        assert_eq!(distance_pp(&v(0.0, 0.0, 0.0), &v(3.0, 4.0, 0.0)), 5.0);
        assert_eq!(distance_pp(&v(1.0, 2.0, 3.0), &v(1.0, 2.0, 3.0)), 0.0);
        assert_eq!(distance_pe(&v(-1.0, 0.0, 0.0), &v(1.0, 0.0, 0.0), &v(0.0, 1.0, 0.0)).unwrap(), 1.0);
        assert_eq!(distance_pe(&v(-1.0, 0.0, 0.0), &v(1.0, 0.0, 0.0), &v(3.0, 0.0, 0.0)).unwrap(), 0.0);
        let d = distance_ee(&v(0.0, 0.0, 0.0), &v(1.0, 0.0, 0.0), &v(0.0, 0.0, 0.7), &v(0.0, 1.0, 0.7)).unwrap();
        assert!((d - 0.7).abs() < 1e-15);
        let d = distance_ee(&v(-1.0, 0.0, 0.0), &v(1.0, 0.0, 0.0), &v(0.0, -1.0, 0.0), &v(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(
            distance_ee(&v(0.0, 0.0, 0.0), &v(1.0, 0.0, 0.0), &v(0.0, 1.0, 0.0), &v(2.0, 1.0, 0.0)),
            Err(Error::ParallelEdges)
        );
        assert!(distance_pe(&v(0.0, 0.0, 0.0), &v(0.0, 0.0, 0.0), &v(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn overlapping_parallel_edges_pick_central_pair() {
        let x = [v(0.0, 0.0, 0.0), v(2.0, 0.0, 0.0), v(1.0, 1.0, 0.0), v(3.0, 1.0, 0.0)];
        let d = closest_points(&x);
        assert_ne!(d.kind, ContactKind::EdgeEdge);
        assert!((d.distance - 1.0).abs() < 1e-14);
        // Candidates (1, 0.5) and (0.5, 0) tie on distance to the centre;
        // the earlier one in the fixed candidate order wins.
        assert_eq!((d.beta_i, d.beta_j), (1.0, 0.5));
    }

    #[test]
    fn adjacent_edges_are_excluded() {
        assert!(EdgePairKey::new(0, 3, 0, 4).is_none());
        assert!(EdgePairKey::new(0, 3, 0, 3).is_none());
        assert_eq!(EdgePairKey::new(1, 2, 0, 5), EdgePairKey::new(0, 5, 1, 2));
    }

    #[test]
    fn far_rods_have_no_candidates() {
        let a: Vec<_> = (0..11).map(|i| v(i as f64, 0.0, 0.0)).collect();
        let b: Vec<_> = (0..11).map(|i| v(i as f64, 1.0, 0.0)).collect();
        let rods = [a.as_slice(), b.as_slice()];
        assert!(build_candidate_set(&rods, 0.1, 0.02).is_empty());
    }

    #[test]
    fn touching_crossed_rods_contain_crossing_pair() {
        let a: Vec<_> = (0..11).map(|i| v(i as f64 - 5.0, 0.0, 0.0)).collect();
        let b: Vec<_> = (0..11).map(|i| v(0.5, i as f64 - 5.5, 0.19)).collect();
        let rods = [a.as_slice(), b.as_slice()];
        let set = build_candidate_set(&rods, 0.1, 0.02);
        assert!(set.pairs.contains(&EdgePairKey::new(0, 5, 1, 5).unwrap()));
        let active = refresh_contact_set(&set, &rods, 0.1, 0.0);
        assert_eq!(active.pairs.len(), set.pairs.len());
        assert!(refresh_contact_set(&set, &rods, 0.05, 0.0).pairs.is_empty());
    }

    fn point() -> impl Strategy<Value = Vector3<f64>> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| v(x, y, z))
    }

    proptest! {
        #[test]
        fn selected_formula_matches_closest_points(p in prop::array::uniform4(point())) {
            prop_assume!((p[1] - p[0]).norm() > 1e-3 && (p[3] - p[2]).norm() > 1e-3);
            let d = closest_points(&p);
            let lifted = [v3::lift::<f64>(&p[0]), v3::lift(&p[1]), v3::lift(&p[2]), v3::lift(&p[3])];
            let by_formula = pair_distance(&lifted, d.kind, d.beta_i, d.beta_j);
            prop_assert!((by_formula - d.distance).abs() < 1e-10);
            prop_assert!(((d.c_i - d.c_j).norm() - d.distance).abs() <= 1e-12 * d.distance.max(1e-300));
        }

        #[test]
        fn distance_is_symmetric(p in prop::array::uniform4(point())) {
            prop_assume!((p[1] - p[0]).norm() > 1e-3 && (p[3] - p[2]).norm() > 1e-3);
            let a = closest_points(&p).distance;
            let b = closest_points(&[p[2], p[3], p[0], p[1]]).distance;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn contact_set_is_subset_of_candidates(
            a in prop::collection::vec(point(), 6),
            b in prop::collection::vec(point(), 6),
        ) {
            let rods = [a.as_slice(), b.as_slice()];
            let wide = build_candidate_set(&rods, 0.1, 0.1);
            let narrow = build_candidate_set(&rods, 0.1, 0.0);
            prop_assert!(narrow.pairs.iter().all(|k| wide.pairs.contains(k)));
            let active = refresh_contact_set(&wide, &rods, 0.1, 0.0);
            let keys: Vec<_> = active.pairs.iter().map(|(k, _)| *k).collect();
            prop_assert_eq!(keys, narrow.pairs);
        }
    }
}
