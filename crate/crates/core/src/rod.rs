//! Discrete elastic rod kinematics and elastic energy.
//!
//! Degrees of freedom of a rod with `N` nodes are laid out as
//! `[x_0, θ^0, x_1, θ^1, ..., x_{N-2}, θ^{N-2}, x_{N-1}]` (4N − 1 values).
//!
//! Reference frames are not integrated. Each rod keeps an *anchor*: the
//! reference frame and reference twist at the configuration where frames
//! were last updated. The reference frame at any other node configuration is
//! the anchor frame parallel-transported from the anchor tangent to the
//! current tangent. The elastic energy is therefore a single smooth function
//! of the DOFs between frame updates, and its derivatives are exact.

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::jet::v3::{self, V3};
use crate::jet::{Jet, Scalar};

const DEGENERATE_EDGE: f64 = 1e-12;
const ANTIPARALLEL_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialParams {
    /// Young's modulus [Pa].
    pub youngs_modulus: f64,
    /// Shear modulus [Pa].
    pub shear_modulus: f64,
    /// Cross-section area [m²].
    pub area: f64,
    /// Second moments about the material directors [m⁴].
    pub i1: f64,
    pub i2: f64,
    /// Polar second moment [m⁴].
    pub polar_moment: f64,
    /// Density [kg/m³].
    pub density: f64,
    /// Cross-section radius [m].
    pub radius: f64,
}

impl MaterialParams {
    /// Circular cross-section of radius `radius`.
    pub fn circular(youngs_modulus: f64, shear_modulus: f64, density: f64, radius: f64) -> Self {
        let pi = std::f64::consts::PI;
        let r2 = radius * radius;
        MaterialParams {
            youngs_modulus,
            shear_modulus,
            area: pi * r2,
            i1: pi * r2 * r2 / 4.0,
            i2: pi * r2 * r2 / 4.0,
            polar_moment: pi * r2 * r2 / 2.0,
            density,
            radius,
        }
    }

    /// Isotropic material given Poisson's ratio: G = E / (2(1 + ν)).
    pub fn from_poisson(youngs_modulus: f64, poisson: f64, density: f64, radius: f64) -> Self {
        Self::circular(youngs_modulus, youngs_modulus / (2.0 * (1.0 + poisson)), density, radius)
    }

    pub fn bending_stiffness(&self) -> f64 {
        self.youngs_modulus * self.i1
    }
}

/// Orthonormal triad attached to an edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: Vector3<f64>,
    pub d1: Vector3<f64>,
    pub d2: Vector3<f64>,
}

impl Frame {
    /// Frame rotated about its tangent by `angle`.
    pub fn rotated(&self, angle: f64) -> Frame {
        let (s, c) = angle.sin_cos();
        Frame {
            t: self.t,
            d1: self.d1 * c + self.d2 * s,
            d2: -self.d1 * s + self.d2 * c,
        }
    }

    fn from_tangent_director(t: Vector3<f64>, d1: Vector3<f64>) -> Frame {
        // Project out numerical drift before completing the triad.
        let d1 = (d1 - t * t.dot(&d1)).normalize();
        Frame { t, d1, d2: t.cross(&d1) }
    }
}

/// Undeformed quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct RestShape {
    /// ‖ē^i‖ per edge.
    pub edge_lengths: Vec<f64>,
    /// (κ̄^(1), κ̄^(2)) per node; zero at the two ends.
    pub curvatures: Vec<[f64; 2]>,
    /// Voronoi length per node.
    pub voronoi: Vec<f64>,
}

impl RestShape {
    pub fn voronoi_lengths(edge_lengths: &[f64]) -> Vec<f64> {
        let n = edge_lengths.len() + 1;
        (0..n)
            .map(|i| {
                let left = if i > 0 { edge_lengths[i - 1] } else { 0.0 };
                let right = if i + 1 < n { edge_lengths[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct RodState {
    pub nodes: Vec<Vector3<f64>>,
    pub twists: Vec<f64>,
    pub node_velocities: Vec<Vector3<f64>>,
    pub twist_rates: Vec<f64>,
    pub rest: RestShape,
    anchor: Vec<Frame>,
    anchor_ref_twist: Vec<f64>,
}

#[inline]
pub fn node_dof(i: usize) -> usize {
    4 * i
}

#[inline]
pub fn twist_dof(i: usize) -> usize {
    4 * i + 3
}

fn edge_vectors(nodes: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
    nodes
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let e = w[1] - w[0];
            if e.norm() < DEGENERATE_EDGE {
                Err(Error::DegenerateEdge { edge: i })
            } else {
                Ok(e)
            }
        })
        .collect()
}

/// Director perpendicular to `t`, chosen from the least-aligned axis.
pub fn perpendicular(t: &Vector3<f64>) -> Vector3<f64> {
    let axis = if t.x.abs() <= t.y.abs() && t.x.abs() <= t.z.abs() {
        Vector3::x()
    } else if t.y.abs() <= t.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    (axis - t * t.dot(&axis)).normalize()
}

/// Parallel transport of `v` along the minimal rotation taking unit `from` to unit `to`.
pub fn parallel_transport(from: &Vector3<f64>, to: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
    let r = transport(v3::lift(from), v3::lift(to), v3::lift(v));
    Vector3::new(r[0], r[1], r[2])
}

fn transport<S: Scalar>(from: V3<S>, to: V3<S>, v: V3<S>) -> V3<S> {
    let c = v3::cross(from, to);
    let cs = v3::dot(from, to);
    let k = v3::dot(c, v) / (cs + 1.0);
    v3::add(v3::add(v3::scale(v, cs), v3::cross(c, v)), v3::scale(c, k))
}

fn signed_angle<S: Scalar>(u: V3<S>, v: V3<S>, axis: V3<S>) -> S {
    S::atan2(v3::dot(v3::cross(u, v), axis), v3::dot(u, v))
}

/// Strain measures at one interior node, generic so they can be differentiated.
struct NodeStrains<S> {
    kappa: [S; 2],
    twist: S,
    ref_twist: S,
}

struct NodeAnchor<'a> {
    frames: [&'a Frame; 2],
    ref_twist: f64,
}

fn node_strains<S: Scalar>(e0: V3<S>, e1: V3<S>, th0: S, th1: S, anchor: &NodeAnchor) -> NodeStrains<S> {
    let l0 = v3::norm(e0);
    let l1 = v3::norm(e1);
    let t0 = v3::scale(e0, S::cst(1.0) / l0);
    let t1 = v3::scale(e1, S::cst(1.0) / l1);

    let ref0 = transport(v3::lift(&anchor.frames[0].t), t0, v3::lift(&anchor.frames[0].d1));
    let ref1 = transport(v3::lift(&anchor.frames[1].t), t1, v3::lift(&anchor.frames[1].d1));
    let ref0_2 = v3::cross(t0, ref0);
    let ref1_2 = v3::cross(t1, ref1);

    let (s0, c0) = (th0.sin(), th0.cos());
    let (s1, c1) = (th1.sin(), th1.cos());
    let m1_0 = v3::add(v3::scale(ref0, c0), v3::scale(ref0_2, s0));
    let m2_0 = v3::sub(v3::scale(ref0_2, c0), v3::scale(ref0, s0));
    let m1_1 = v3::add(v3::scale(ref1, c1), v3::scale(ref1_2, s1));
    let m2_1 = v3::sub(v3::scale(ref1_2, c1), v3::scale(ref1, s1));

    let denom = l0 * l1 + v3::dot(e0, e1);
    let kappa_b = v3::scale(v3::cross(e0, e1), S::cst(2.0) / denom);
    let kappa = [
        v3::dot(v3::add(m2_0, m2_1), kappa_b) * 0.5,
        v3::dot(v3::add(m1_0, m1_1), kappa_b) * 0.5,
    ];

    let transported = transport(t0, t1, ref0);
    let raw = signed_angle(transported, ref1, t1);
    let two_pi = 2.0 * std::f64::consts::PI;
    let shift = two_pi * ((anchor.ref_twist - raw.re()) / two_pi).round();
    let ref_twist = raw + shift;
    let twist = th1 - th0 + ref_twist;
    NodeStrains { kappa, twist, ref_twist }
}

fn bend_twist_energy<S: Scalar>(
    e0: V3<S>,
    e1: V3<S>,
    th0: S,
    th1: S,
    anchor: &NodeAnchor,
    kappa_bar: [f64; 2],
    voronoi: f64,
    mat: &MaterialParams,
) -> S {
    let s = node_strains(e0, e1, th0, th1, anchor);
    let dk1 = s.kappa[0] - kappa_bar[0];
    let dk2 = s.kappa[1] - kappa_bar[1];
    let e = mat.youngs_modulus;
    let bend = (dk1 * dk1 * (e * mat.i1) + dk2 * dk2 * (e * mat.i2)) * (0.5 / voronoi);
    let twist = s.twist * s.twist * (0.5 * mat.shear_modulus * mat.polar_moment / voronoi);
    bend + twist
}

/// Linear map from the eight stencil variables (e^{i-1}, e^i, θ^{i-1}, θ^i)
/// to the eleven contiguous DOFs starting at x_{i-1}.
fn stencil_map(var: usize) -> &'static [(usize, f64)] {
    const MAP: [[(usize, f64); 2]; 8] = [
        [(0, -1.0), (4, 1.0)],
        [(1, -1.0), (5, 1.0)],
        [(2, -1.0), (6, 1.0)],
        [(4, -1.0), (8, 1.0)],
        [(5, -1.0), (9, 1.0)],
        [(6, -1.0), (10, 1.0)],
        [(3, 1.0), (3, 0.0)],
        [(7, 1.0), (7, 0.0)],
    ];
    &MAP[var]
}

/// Accumulates into a caller-owned dense Hessian (column-major slice view).
pub trait HessianSink {
    fn add(&mut self, row: usize, col: usize, value: f64);
}

impl HessianSink for nalgebra::DMatrix<f64> {
    #[inline]
    fn add(&mut self, row: usize, col: usize, value: f64) {
        self[(row, col)] += value;
    }
}

impl RodState {
    /// Builds a rod whose first reference director is `first_director`
    /// (projected onto the plane normal to the first edge), with reference
    /// frames space-parallel transported along the rod so every reference
    /// twist starts at zero. The rest shape is the given configuration.
    pub fn new(nodes: Vec<Vector3<f64>>, twists: Vec<f64>, first_director: Option<Vector3<f64>>) -> Result<Self> {
        assert!(nodes.len() >= 2, "a rod needs at least two nodes");
        assert_eq!(twists.len(), nodes.len() - 1, "one twist per edge");
        let edges = edge_vectors(&nodes)?;
        let mut anchor = Vec::with_capacity(edges.len());
        let t0 = edges[0].normalize();
        let d0 = first_director.unwrap_or_else(|| perpendicular(&t0));
        anchor.push(Frame::from_tangent_director(t0, d0));
        for e in &edges[1..] {
            let prev: &Frame = anchor.last().unwrap();
            let t = e.normalize();
            if prev.t.dot(&t) <= -1.0 + 1e-12 {
                return Err(Error::AntiparallelEdges { node: anchor.len() });
            }
            let d1 = parallel_transport(&prev.t, &t, &prev.d1);
            anchor.push(Frame::from_tangent_director(t, d1));
        }
        let n = nodes.len();
        let mut rod = RodState {
            node_velocities: vec![Vector3::zeros(); n],
            twist_rates: vec![0.0; n - 1],
            rest: RestShape {
                edge_lengths: vec![],
                curvatures: vec![],
                voronoi: vec![],
            },
            anchor,
            anchor_ref_twist: vec![0.0; n],
            nodes,
            twists,
        };
        rod.set_rest_from_current()?;
        Ok(rod)
    }

    /// Makes the current configuration stress-free in stretching and bending.
    pub fn set_rest_from_current(&mut self) -> Result<()> {
        let edge_lengths: Vec<f64> = edge_vectors(&self.nodes)?.iter().map(|e| e.norm()).collect();
        let voronoi = RestShape::voronoi_lengths(&edge_lengths);
        let mut curvatures = vec![[0.0; 2]; self.num_nodes()];
        for (i, c) in curvatures.iter_mut().enumerate().take(self.num_nodes() - 1).skip(1) {
            let (k1, k2) = self.material_curvatures(i)?;
            *c = [k1, k2];
        }
        self.rest = RestShape {
            edge_lengths,
            curvatures,
            voronoi,
        };
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn num_dofs(&self) -> usize {
        4 * self.nodes.len() - 1
    }

    pub fn edge(&self, i: usize) -> Vector3<f64> {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn dofs(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.num_dofs()];
        for (i, x) in self.nodes.iter().enumerate() {
            q[node_dof(i)..node_dof(i) + 3].copy_from_slice(x.as_slice());
        }
        for (i, th) in self.twists.iter().enumerate() {
            q[twist_dof(i)] = *th;
        }
        q
    }

    pub fn dof_velocities(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.num_dofs()];
        for (i, x) in self.node_velocities.iter().enumerate() {
            v[node_dof(i)..node_dof(i) + 3].copy_from_slice(x.as_slice());
        }
        for (i, w) in self.twist_rates.iter().enumerate() {
            v[twist_dof(i)] = *w;
        }
        v
    }

    /// Overwrites positions and twists, keeping the frame anchor.
    pub fn set_dofs(&mut self, q: &[f64]) {
        assert_eq!(q.len(), self.num_dofs());
        for (i, x) in self.nodes.iter_mut().enumerate() {
            *x = Vector3::new(q[node_dof(i)], q[node_dof(i) + 1], q[node_dof(i) + 2]);
        }
        for (i, th) in self.twists.iter_mut().enumerate() {
            *th = q[twist_dof(i)];
        }
    }

    pub fn set_dof_velocities(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.num_dofs());
        for (i, x) in self.node_velocities.iter_mut().enumerate() {
            *x = Vector3::new(v[node_dof(i)], v[node_dof(i) + 1], v[node_dof(i) + 2]);
        }
        for (i, w) in self.twist_rates.iter_mut().enumerate() {
            *w = v[twist_dof(i)];
        }
    }

    fn node_anchor(&self, i: usize) -> NodeAnchor<'_> {
        NodeAnchor {
            frames: [&self.anchor[i - 1], &self.anchor[i]],
            ref_twist: self.anchor_ref_twist[i],
        }
    }

    /// Reference frames at the current nodes.
    pub fn reference_frames(&self) -> Vec<Frame> {
        self.anchor
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let t = self.edge(i).normalize();
                Frame::from_tangent_director(t, parallel_transport(&a.t, &t, &a.d1))
            })
            .collect()
    }

    /// Material frames: reference frames rotated about the tangent by θ^i.
    pub fn material_frames(&self) -> Vec<Frame> {
        self.reference_frames()
            .iter()
            .zip(&self.twists)
            .map(|(f, th)| f.rotated(*th))
            .collect()
    }

    /// Reference twist m_ref per node (zero at the ends).
    pub fn reference_twists(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_nodes()];
        for (i, m) in out.iter_mut().enumerate().take(self.num_nodes() - 1).skip(1) {
            *m = self.strains_at(i).ref_twist;
        }
        out
    }

    fn strains_at(&self, i: usize) -> NodeStrains<f64> {
        node_strains(
            v3::lift(&self.edge(i - 1)),
            v3::lift(&self.edge(i)),
            self.twists[i - 1],
            self.twists[i],
            &self.node_anchor(i),
        )
    }

    /// ε^i = ‖e^i‖ / ‖ē^i‖ − 1.
    pub fn stretch_strain(&self, edge: usize) -> f64 {
        self.edge(edge).norm() / self.rest.edge_lengths[edge] - 1.0
    }

    /// (κb)_i at interior node `i`.
    pub fn curvature_binormal(&self, i: usize) -> Result<Vector3<f64>> {
        assert!(i >= 1 && i + 1 < self.num_nodes(), "interior node required");
        let (e0, e1) = (self.edge(i - 1), self.edge(i));
        let denom = e0.norm() * e1.norm() + e0.dot(&e1);
        if denom <= ANTIPARALLEL_TOL * e0.norm() * e1.norm() {
            return Err(Error::AntiparallelEdges { node: i });
        }
        Ok(e0.cross(&e1) * (2.0 / denom))
    }

    /// (κ^(1), κ^(2)) at interior node `i`, with
    /// κ^(1) = ½(m2^{i-1} + m2^i)·(κb)_i and κ^(2) = ½(m1^{i-1} + m1^i)·(κb)_i.
    pub fn material_curvatures(&self, i: usize) -> Result<(f64, f64)> {
        self.curvature_binormal(i)?;
        let s = self.strains_at(i);
        Ok((s.kappa[0], s.kappa[1]))
    }

    /// τ_i = θ^i − θ^{i-1} + m_ref^i.
    pub fn twist_strain(&self, i: usize) -> f64 {
        assert!(i >= 1 && i + 1 < self.num_nodes(), "interior node required");
        self.strains_at(i).twist
    }

    /// Stretching, bending, and twisting energies.
    pub fn elastic_energy_parts(&self, mat: &MaterialParams) -> (f64, f64, f64) {
        let ea = mat.youngs_modulus * mat.area;
        let stretch: f64 = (0..self.num_edges())
            .map(|i| {
                let eps = self.stretch_strain(i);
                0.5 * ea * eps * eps * self.rest.edge_lengths[i]
            })
            .sum();
        let mut bend = 0.0;
        let mut twist = 0.0;
        for i in 1..self.num_nodes() - 1 {
            let s = self.strains_at(i);
            let kb = self.rest.curvatures[i];
            let dl = self.rest.voronoi[i];
            let d1 = s.kappa[0] - kb[0];
            let d2 = s.kappa[1] - kb[1];
            bend += 0.5 / dl * mat.youngs_modulus * (mat.i1 * d1 * d1 + mat.i2 * d2 * d2);
            twist += 0.5 * mat.shear_modulus * mat.polar_moment / dl * s.twist * s.twist;
        }
        (stretch, bend, twist)
    }

    pub fn elastic_energy(&self, mat: &MaterialParams) -> f64 {
        let (s, b, t) = self.elastic_energy_parts(mat);
        s + b + t
    }

    /// Gradient of the elastic energy into `grad[offset..]`, and optionally
    /// its Hessian into `hess` at the same offset.
    pub fn accumulate_elastic<H: HessianSink>(
        &self,
        mat: &MaterialParams,
        grad: &mut [f64],
        mut hess: Option<&mut H>,
        offset: usize,
    ) {
        let ea = mat.youngs_modulus * mat.area;
        for i in 0..self.num_edges() {
            let e = self.edge(i);
            let len = e.norm();
            let rest = self.rest.edge_lengths[i];
            let t = e / len;
            let eps = len / rest - 1.0;
            let g = t * (ea * eps);
            let (a, b) = (offset + node_dof(i), offset + node_dof(i + 1));
            for k in 0..3 {
                grad[a + k] -= g[k];
                grad[b + k] += g[k];
            }
            if let Some(h) = hess.as_deref_mut() {
                let tt = t * t.transpose();
                let block: Matrix3<f64> = tt * (ea / rest) + (Matrix3::identity() - tt) * (ea * eps / len);
                for r in 0..3 {
                    for c in 0..3 {
                        let v = block[(r, c)];
                        h.add(a + r, a + c, v);
                        h.add(b + r, b + c, v);
                        h.add(a + r, b + c, -v);
                        h.add(b + r, a + c, -v);
                    }
                }
            }
        }

        for i in 1..self.num_nodes() - 1 {
            let e0 = self.edge(i - 1);
            let e1 = self.edge(i);
            let je0 = [Jet::<8>::var(e0.x, 0), Jet::var(e0.y, 1), Jet::var(e0.z, 2)];
            let je1 = [Jet::<8>::var(e1.x, 3), Jet::var(e1.y, 4), Jet::var(e1.z, 5)];
            let th0 = Jet::var(self.twists[i - 1], 6);
            let th1 = Jet::var(self.twists[i], 7);
            let en = bend_twist_energy(
                je0,
                je1,
                th0,
                th1,
                &self.node_anchor(i),
                self.rest.curvatures[i],
                self.rest.voronoi[i],
                mat,
            );
            let base = offset + node_dof(i - 1);
            for a in 0..8 {
                for &(dof, c) in stencil_map(a) {
                    grad[base + dof] += c * en.g[a];
                }
            }
            if let Some(h) = hess.as_deref_mut() {
                for a in 0..8 {
                    for b in 0..8 {
                        let v = en.h[a][b];
                        if v == 0.0 {
                            continue;
                        }
                        for &(da, ca) in stencil_map(a) {
                            for &(db, cb) in stencil_map(b) {
                                if ca != 0.0 && cb != 0.0 {
                                    h.add(base + da, base + db, ca * cb * v);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// F^int = −∂E/∂q, one entry per DOF.
    pub fn internal_forces(&self, mat: &MaterialParams) -> Vec<f64> {
        let mut g = vec![0.0; self.num_dofs()];
        self.accumulate_elastic::<nalgebra::DMatrix<f64>>(mat, &mut g, None, 0);
        g.iter_mut().for_each(|v| *v = -*v);
        g
    }

    /// Hessian of the elastic energy, i.e. −∂F^int/∂q.
    pub fn internal_jacobian(&self, mat: &MaterialParams) -> nalgebra::DMatrix<f64> {
        let n = self.num_dofs();
        let mut h = nalgebra::DMatrix::zeros(n, n);
        let mut g = vec![0.0; n];
        self.accumulate_elastic(mat, &mut g, Some(&mut h), 0);
        h
    }

    /// Diagonal lumped mass: ρAΔl_i per node coordinate, ρJ‖ē^i‖ per twist.
    pub fn lumped_mass(&self, mat: &MaterialParams) -> Vec<f64> {
        let mut m = vec![0.0; self.num_dofs()];
        for (i, dl) in self.rest.voronoi.iter().enumerate() {
            for k in 0..3 {
                m[node_dof(i) + k] = mat.density * mat.area * dl;
            }
        }
        for (i, l) in self.rest.edge_lengths.iter().enumerate() {
            m[twist_dof(i)] = mat.density * mat.polar_moment * l;
        }
        m
    }

    /// Moves to `new_nodes`, time-parallel transporting every reference
    /// frame from its current tangent to the new tangent and recomputing
    /// reference twists. The result is re-anchored at the new configuration.
    pub fn update_frames(&self, new_nodes: &[Vector3<f64>]) -> Result<RodState> {
        assert_eq!(new_nodes.len(), self.nodes.len());
        let new_edges = edge_vectors(new_nodes)?;
        let current = self.reference_frames();
        let old_ref_twist = self.reference_twists();
        let mut next = self.clone();
        next.nodes = new_nodes.to_vec();
        next.anchor = current
            .iter()
            .zip(&new_edges)
            .map(|(f, e)| {
                let t = e.normalize();
                Frame::from_tangent_director(t, parallel_transport(&f.t, &t, &f.d1))
            })
            .collect();
        next.anchor_ref_twist = old_ref_twist;
        let fresh = next.reference_twists();
        next.anchor_ref_twist = fresh;
        Ok(next)
    }

    /// Re-anchors frames at the current configuration.
    pub fn rebase(&mut self) -> Result<()> {
        let frames = self.reference_frames();
        let twists = self.reference_twists();
        edge_vectors(&self.nodes)?;
        self.anchor = frames;
        self.anchor_ref_twist = twists;
        Ok(())
    }

    /// Rigidly rotates and translates nodes, velocities and frame anchor.
    pub fn transformed(&self, rot: &Rotation3<f64>, shift: &Vector3<f64>) -> RodState {
        let mut out = self.clone();
        for x in out.nodes.iter_mut() {
            *x = rot * *x + shift;
        }
        for v in out.node_velocities.iter_mut() {
            *v = rot * *v;
        }
        for f in out.anchor.iter_mut() {
            *f = Frame {
                t: rot * f.t,
                d1: rot * f.d1,
                d2: rot * f.d2,
            };
        }
        out
    }
}
