//! Interval meshes for radial problems and structured triangulations of
//! axis-aligned rectangles.

use std::collections::HashMap;

use crate::error::{invalid, Result};
use crate::fem::quadrature::gauss_legendre;

pub type Point = [f64; 2];

/// Mesh of the radial interval `[0, R]`.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    pub r_max: f64,
    pub nodes: Vec<f64>,
    pub elements: Vec<(usize, usize)>,
}

impl Mesh1D {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let (a, b) = self.elements[e];
        (self.nodes[a], self.nodes[b])
    }

    /// Index of the element containing `r` (right-closed on the last one).
    pub fn locate(&self, r: f64) -> Option<usize> {
        if !(0.0..=self.r_max).contains(&r) {
            return None;
        }
        let idx = self.nodes.partition_point(|&x| x <= r);
        Some(idx.saturating_sub(1).min(self.elements.len() - 1))
    }

    /// Ratio of the largest to the smallest element length.
    pub fn quasi_uniformity(&self) -> f64 {
        let lens = self
            .elements
            .iter()
            .map(|&(a, b)| self.nodes[b] - self.nodes[a]);
        let (lo, hi) = lens.fold((f64::INFINITY, 0.0f64), |(lo, hi), l| {
            (lo.min(l), hi.max(l))
        });
        hi / lo
    }

    pub fn total_length(&self) -> f64 {
        self.elements
            .iter()
            .map(|&(a, b)| self.nodes[b] - self.nodes[a])
            .sum()
    }
}

pub fn build_interval_mesh(r_max: f64, n: usize) -> Result<Mesh1D> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return invalid(format!("interval length must be positive, got {r_max}"));
    }
    if n == 0 {
        return invalid("interval mesh needs at least one element");
    }
    let h = r_max / n as f64;
    let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    nodes[n] = r_max;
    let elements = (0..n).map(|i| (i, i + 1)).collect();
    Ok(Mesh1D {
        r_max,
        nodes,
        elements,
    })
}

/// Which side of the rectangle a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn normal(self) -> Point {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }

    /// Counterclockwise unit tangent, the normal rotated by +90 degrees.
    pub fn tangent(self) -> Point {
        let n = self.normal();
        [-n[1], n[0]]
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub normal: Point,
    pub tangent: Point,
    pub triangle: usize,
    pub side: Side,
}

/// Structured triangulation of `[x0,x1] x [y0,y1]`: an `nx x ny` grid of
/// rectangles, each cut along its SW-NE diagonal.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

pub fn build_rect_mesh(
    x_range: (f64, f64),
    y_range: (f64, f64),
    nx: usize,
    ny: usize,
) -> Result<Mesh2D> {
    let (x0, x1) = x_range;
    let (y0, y1) = y_range;
    if !(x1 > x0) || !(y1 > y0) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
        return invalid(format!("degenerate rectangle {x_range:?} x {y_range:?}"));
    }
    if nx == 0 || ny == 0 {
        return invalid("rectangle mesh needs nx, ny >= 1");
    }
    let hx = (x1 - x0) / nx as f64;
    let hy = (y1 - y0) / ny as f64;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = if j == ny { y1 } else { y0 + j as f64 * hy };
        for i in 0..=nx {
            let x = if i == nx { x1 } else { x0 + i as f64 * hx };
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let sw = vid(i, j);
            let se = vid(i + 1, j);
            let ne = vid(i + 1, j + 1);
            let nw = vid(i, j + 1);
            triangles.push([sw, se, ne]);
            triangles.push([sw, ne, nw]);
        }
    }
    // cell (i,j) owns triangles 2*(j*nx+i) (lower-right) and +1 (upper-left)
    let lower = |i: usize, j: usize| 2 * (j * nx + i);
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    let mut push = |a: usize, b: usize, tri: usize, side: Side| {
        boundary_edges.push(BoundaryEdge {
            vertices: [a, b],
            normal: side.normal(),
            tangent: side.tangent(),
            triangle: tri,
            side,
        });
    };
    for i in 0..nx {
        push(vid(i, 0), vid(i + 1, 0), lower(i, 0), Side::Bottom);
    }
    for j in 0..ny {
        push(vid(nx, j), vid(nx, j + 1), lower(nx - 1, j), Side::Right);
    }
    for i in (0..nx).rev() {
        push(vid(i + 1, ny), vid(i, ny), lower(i, ny - 1) + 1, Side::Top);
    }
    for j in (0..ny).rev() {
        push(vid(0, j + 1), vid(0, j), lower(0, j) + 1, Side::Left);
    }
    Ok(Mesh2D {
        x_range,
        y_range,
        nx,
        ny,
        vertices,
        triangles,
        boundary_edges,
    })
}

impl Mesh2D {
    pub fn hx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_range.1 - self.y_range.0) / self.ny as f64
    }

    /// Largest triangle diameter.
    pub fn h(&self) -> f64 {
        self.hx().hypot(self.hy())
    }

    pub fn center(&self) -> Point {
        [
            0.5 * (self.x_range.0 + self.x_range.1),
            0.5 * (self.y_range.0 + self.y_range.1),
        ]
    }

    pub fn area(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) * (self.y_range.1 - self.y_range.0)
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let p = self.triangles[t].map(|v| self.vertices[v]);
        let d = |a: Point, b: Point| (a[0] - b[0]).hypot(a[1] - b[1]);
        d(p[0], p[1]).max(d(p[1], p[2])).max(d(p[2], p[0]))
    }

    pub fn quasi_uniformity(&self) -> f64 {
        let (lo, hi) = (0..self.triangles.len())
            .map(|t| self.diameter(t))
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
                (lo.min(d), hi.max(d))
            });
        hi / lo
    }

    /// Counts how many triangles share each undirected edge.
    pub fn edge_multiplicity(&self) -> HashMap<(usize, usize), usize> {
        let mut count = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        count
    }

    /// Triangle containing `p` and its reference coordinates. Points on the
    /// closed rectangle only; ties go to the lower-left cell.
    pub fn locate(&self, p: Point) -> Option<(usize, Point)> {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let tol = 1e-12 * (x1 - x0).max(y1 - y0);
        if p[0] < x0 - tol || p[0] > x1 + tol || p[1] < y0 - tol || p[1] > y1 + tol {
            return None;
        }
        let fx = ((p[0] - x0) / self.hx()).clamp(0.0, self.nx as f64);
        let fy = ((p[1] - y0) / self.hy()).clamp(0.0, self.ny as f64);
        let i = (fx.floor() as usize).min(self.nx - 1);
        let j = (fy.floor() as usize).min(self.ny - 1);
        let s = fx - i as f64;
        let t = fy - j as f64;
        let base = 2 * (j * self.nx + i);
        // lower-right triangle (sw, se, ne): reference x = s - t, y = t
        if s >= t {
            Some((base, [s - t, t]))
        } else {
            // upper-left triangle (sw, ne, nw): p = sw + xi*(1,1) + eta*(0,1)
            Some((base + 1, [s, t - s]))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryQuadPoint {
    pub point: Point,
    pub weight: f64,
    pub normal: Point,
    pub tangent: Point,
    pub edge: usize,
}

/// Gauss-Legendre points with `order` nodes on every boundary edge.
pub fn boundary_trace_quadrature(mesh: &Mesh2D, order: usize) -> Result<Vec<BoundaryQuadPoint>> {
    if order == 0 {
        return invalid("boundary quadrature order must be >= 1");
    }
    let (pts, wts) = gauss_legendre(order);
    let mut out = Vec::with_capacity(mesh.boundary_edges.len() * order);
    for (e, edge) in mesh.boundary_edges.iter().enumerate() {
        let a = mesh.vertices[edge.vertices[0]];
        let b = mesh.vertices[edge.vertices[1]];
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        for (&t, &w) in pts.iter().zip(&wts) {
            out.push(BoundaryQuadPoint {
                point: [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                weight: w * len,
                normal: edge.normal,
                tangent: edge.tangent,
                edge: e,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Mesh2D {
        build_rect_mesh((0.0, 1.0), (0.0, 1.0), n, n).unwrap()
    }

    #[test]
    fn interval_mesh_examples() {
        let m = build_interval_mesh(1.0, 1).unwrap();
        assert_eq!(m.nodes, vec![0.0, 1.0]);
        assert_eq!(m.elements.len(), 1);
        let m = build_interval_mesh(1.0, 4).unwrap();
        assert_eq!(m.nodes, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let m = build_interval_mesh(2.0, 5).unwrap();
        for e in 0..5 {
            let (a, b) = m.element_bounds(e);
            assert!((b - a - 0.4).abs() < 1e-15);
        }
        assert!((m.quasi_uniformity() - 1.0).abs() < 1e-12);
        assert!((m.total_length() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn interval_mesh_rejects_bad_input() {
        assert!(build_interval_mesh(0.0, 3).is_err());
        assert!(build_interval_mesh(-1.0, 3).is_err());
        assert!(build_interval_mesh(1.0, 0).is_err());
    }

    #[test]
    fn interval_locate() {
        let m = build_interval_mesh(1.0, 4).unwrap();
        assert_eq!(m.locate(0.0), Some(0));
        assert_eq!(m.locate(0.3), Some(1));
        assert_eq!(m.locate(1.0), Some(3));
        assert_eq!(m.locate(1.5), None);
    }

    #[test]
    fn rect_mesh_counts() {
        let m = unit(1);
        assert_eq!(m.triangles.len(), 2);
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.boundary_edges.len(), 4);
        let m = unit(2);
        assert_eq!(m.triangles.len(), 8);
        assert_eq!(m.vertices.len(), 9);
    }

    #[test]
    fn rect_mesh_area_and_orientation() {
        let m = unit(4);
        let total: f64 = (0..m.triangles.len()).map(|t| m.signed_area(t)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!((0..m.triangles.len()).all(|t| m.signed_area(t) > 0.0));
        assert!(m.quasi_uniformity() <= 2.0);
        let m = build_rect_mesh((-0.57, 0.57), (-0.3, 0.4), 7, 3).unwrap();
        let total: f64 = (0..m.triangles.len()).map(|t| m.signed_area(t)).sum();
        assert!((total - m.area()).abs() < 1e-13);
    }

    #[test]
    fn rect_mesh_is_conforming() {
        let m = unit(5);
        let mult = m.edge_multiplicity();
        let boundary: std::collections::HashSet<_> = m
            .boundary_edges
            .iter()
            .map(|e| {
                (
                    e.vertices[0].min(e.vertices[1]),
                    e.vertices[0].max(e.vertices[1]),
                )
            })
            .collect();
        for (edge, count) in mult {
            if boundary.contains(&edge) {
                assert_eq!(count, 1);
            } else {
                assert_eq!(count, 2, "interior edge {edge:?}");
            }
        }
    }

    #[test]
    fn boundary_normals_point_outward() {
        let m = build_rect_mesh((0.0, 2.0), (-1.0, 1.0), 3, 4).unwrap();
        let c = m.center();
        for e in &m.boundary_edges {
            let a = m.vertices[e.vertices[0]];
            let b = m.vertices[e.vertices[1]];
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let dot = e.normal[0] * (mid[0] - c[0]) + e.normal[1] * (mid[1] - c[1]);
            assert!(dot > 0.0);
            // the owning triangle contains both edge vertices
            let tri = m.triangles[e.triangle];
            assert!(tri.contains(&e.vertices[0]) && tri.contains(&e.vertices[1]));
        }
    }

    #[test]
    fn bottom_edge_geometry() {
        let m = unit(1);
        let e = &m.boundary_edges[0];
        assert_eq!(m.vertices[e.vertices[0]], [0.0, 0.0]);
        assert_eq!(m.vertices[e.vertices[1]], [1.0, 0.0]);
        assert_eq!(e.normal, [0.0, -1.0]);
        assert_eq!(e.tangent, [1.0, 0.0]);
    }

    #[test]
    fn boundary_quadrature_perimeter_and_moment() {
        for order in 1..6 {
            let q = boundary_trace_quadrature(&unit(3), order).unwrap();
            let total: f64 = q.iter().map(|p| p.weight).sum();
            assert!((total - 4.0).abs() < 1e-13);
        }
        // edge by edge: bottom 1/3, right 1, top 1/3, left 0
        let q = boundary_trace_quadrature(&unit(2), 2).unwrap();
        let val: f64 = q.iter().map(|p| p.weight * p.point[0] * p.point[0]).sum();
        assert!((val - 5.0 / 3.0).abs() < 1e-13);
        assert!(boundary_trace_quadrature(&unit(2), 0).is_err());
    }

    #[test]
    fn locate_maps_back() {
        let m = build_rect_mesh((-0.5, 0.5), (-0.5, 0.5), 4, 3).unwrap();
        for &p in &[[0.1, -0.2], [-0.5, -0.5], [0.5, 0.5], [0.0, 0.1666]] {
            let (t, r) = m.locate(p).unwrap();
            let [a, b, c] = m.triangles[t].map(|v| m.vertices[v]);
            let x = a[0] + r[0] * (b[0] - a[0]) + r[1] * (c[0] - a[0]);
            let y = a[1] + r[0] * (b[1] - a[1]) + r[1] * (c[1] - a[1]);
            assert!((x - p[0]).abs() < 1e-13 && (y - p[1]).abs() < 1e-13);
            assert!(r[0] >= -1e-12 && r[1] >= -1e-12 && r[0] + r[1] <= 1.0 + 1e-12);
        }
        assert!(m.locate([0.6, 0.0]).is_none());
    }
}
