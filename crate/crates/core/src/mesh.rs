//! Structured rectangular meshes of 9-node quadrilaterals.
//!
//! Node numbering is lexicographic over the `(2nx+1) × (2ny+1)` grid of
//! biquadratic nodes, x fastest. Within an element the local ordering is
//! fixed everywhere in the crate (and matches VTK's biquadratic quad):
//!
//! ```text
//!   3 --- 6 --- 2
//!   |           |
//!   7     8     5
//!   |           |
//!   0 --- 4 --- 1
//! ```
//!
//! corners counterclockwise from `(-1, -1)`, then edge midpoints
//! counterclockwise starting with the bottom edge, then the center.
//! Rotations live on the corner nodes only; they are numbered
//! lexicographically over the `(nx+1) × (ny+1)` corner grid. The multiplier
//! has one value per element.

use ccst_linalg::Scalar;

use crate::{CoreError, Result};

/// Grid offsets `(di, dj)` of each local node from the element's lower-left node.
pub const LOCAL_NODE_OFFSETS: [(usize, usize); 9] = [
    (0, 0),
    (2, 0),
    (2, 2),
    (0, 2),
    (1, 0),
    (2, 1),
    (1, 2),
    (0, 1),
    (1, 1),
];

/// Local `(edge start corner, midside, edge end corner)` for each side of an element.
const SIDE_LOCAL_NODES: [[usize; 3]; 4] = [
    [3, 7, 0], // left, walked top to bottom so the outward normal is on the right
    [1, 5, 2], // right
    [0, 4, 1], // bottom
    [2, 6, 3], // top
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
            Side::Bottom => 2,
            Side::Top => 3,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "bottom" => Ok(Side::Bottom),
            "top" => Ok(Side::Top),
            other => Err(format!("unknown side '{other}'")),
        }
    }
}

/// One element edge lying on the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub element: usize,
    /// Local Q2 node indices along the edge (start, midside, end).
    pub local_nodes: [usize; 3],
}

/// Nodes on one side: biquadratic node ids and rotation (corner) ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryNodes {
    pub q2: Vec<usize>,
    pub q1: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    width: T,
    height: T,
    nx: usize,
    ny: usize,
    nodes: Vec<[T; 2]>,
    elements: Vec<[usize; 9]>,
    corner_nodes: Vec<usize>,
    corner_of_node: Vec<Option<usize>>,
}

impl<T: Scalar> Mesh<T> {
    /// Builds a `width × height` rectangle with its lower-left corner at the origin.
    pub fn rectangle(width: T, height: T, nx: usize, ny: usize) -> Result<Self> {
        if !(width > T::zero()) || !width.is_finite() {
            return Err(CoreError::InvalidParameter {
                field: "width",
                value: width.to_f64_lossy(),
                reason: "must be positive",
            });
        }
        if !(height > T::zero()) || !height.is_finite() {
            return Err(CoreError::InvalidParameter {
                field: "height",
                value: height.to_f64_lossy(),
                reason: "must be positive",
            });
        }
        for (field, n) in [("nx", nx), ("ny", ny)] {
            if n == 0 {
                return Err(CoreError::InvalidParameter {
                    field,
                    value: 0.0,
                    reason: "element count must be at least 1",
                });
            }
        }
        let gx = 2 * nx + 1;
        let gy = 2 * ny + 1;
        let two_nx = T::from_usize_lossy(2 * nx);
        let two_ny = T::from_usize_lossy(2 * ny);
        let mut nodes = Vec::with_capacity(gx * gy);
        let mut corner_nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut corner_of_node = Vec::with_capacity(gx * gy);
        for j in 0..gy {
            // endpoints are set exactly so boundary detection never depends on rounding
            let y = if j == gy - 1 {
                height
            } else {
                height * T::from_usize_lossy(j) / two_ny
            };
            for i in 0..gx {
                let x = if i == gx - 1 {
                    width
                } else {
                    width * T::from_usize_lossy(i) / two_nx
                };
                if i % 2 == 0 && j % 2 == 0 {
                    corner_of_node.push(Some(corner_nodes.len()));
                    corner_nodes.push(nodes.len());
                } else {
                    corner_of_node.push(None);
                }
                nodes.push([x, y]);
            }
        }
        let mut elements = Vec::with_capacity(nx * ny);
        for ey in 0..ny {
            for ex in 0..nx {
                let mut conn = [0usize; 9];
                for (k, &(di, dj)) in LOCAL_NODE_OFFSETS.iter().enumerate() {
                    conn[k] = (2 * ey + dj) * gx + 2 * ex + di;
                }
                elements.push(conn);
            }
        }
        Ok(Self {
            width,
            height,
            nx,
            ny,
            nodes,
            elements,
            corner_nodes,
            corner_of_node,
        })
    }

    pub fn width(&self) -> T {
        self.width
    }
    pub fn height(&self) -> T {
        self.height
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }
    pub fn elements(&self) -> &[[usize; 9]] {
        &self.elements
    }
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }
    pub fn num_corners(&self) -> usize {
        self.corner_nodes.len()
    }
    /// Q2 node id of each rotation DOF.
    pub fn corner_nodes(&self) -> &[usize] {
        &self.corner_nodes
    }
    /// Rotation index of a Q2 node, if it is a corner node.
    pub fn corner_of_node(&self, node: usize) -> Option<usize> {
        self.corner_of_node[node]
    }

    /// Rotation (corner) indices of an element in local corner order.
    pub fn element_corners(&self, element: usize) -> [usize; 4] {
        let conn = &self.elements[element];
        std::array::from_fn(|k| self.corner_of_node[conn[k]].expect("corner node"))
    }

    pub fn element_coords(&self, element: usize) -> [[T; 2]; 9] {
        let conn = &self.elements[element];
        std::array::from_fn(|k| self.nodes[conn[k]])
    }

    pub fn element_center(&self, element: usize) -> [T; 2] {
        self.nodes[self.elements[element][8]]
    }

    /// Characteristic element edge length (the larger of the two spacings).
    pub fn element_size(&self) -> T {
        let dx = self.width / T::from_usize_lossy(self.nx);
        let dy = self.height / T::from_usize_lossy(self.ny);
        dx.max(dy)
    }

    fn side_tolerance(&self) -> T {
        T::lit(1e-12) * self.width.max(self.height)
    }

    fn on_side(&self, p: [T; 2], side: Side) -> bool {
        let tol = self.side_tolerance();
        match side {
            Side::Left => p[0].abs() <= tol,
            Side::Right => (p[0] - self.width).abs() <= tol,
            Side::Bottom => p[1].abs() <= tol,
            Side::Top => (p[1] - self.height).abs() <= tol,
        }
    }

    pub fn boundary_nodes(&self, side: Side) -> BoundaryNodes {
        let q2: Vec<usize> = (0..self.nodes.len())
            .filter(|&n| self.on_side(self.nodes[n], side))
            .collect();
        let q1 = q2.iter().filter_map(|&n| self.corner_of_node[n]).collect();
        BoundaryNodes { q2, q1 }
    }

    /// Element edges on one side, ordered along the side.
    pub fn boundary_edges(&self, side: Side) -> Vec<BoundaryEdge> {
        let (nx, ny) = (self.nx, self.ny);
        let elements: Vec<usize> = match side {
            Side::Left => (0..ny).map(|ey| ey * nx).collect(),
            Side::Right => (0..ny).map(|ey| ey * nx + nx - 1).collect(),
            Side::Bottom => (0..nx).collect(),
            Side::Top => (0..nx).map(|ex| (ny - 1) * nx + ex).collect(),
        };
        elements
            .into_iter()
            .map(|element| BoundaryEdge {
                element,
                local_nodes: SIDE_LOCAL_NODES[side.index()],
            })
            .collect()
    }

    /// Element containing `(x, y)` and the point's reference coordinates in it.
    /// Points outside the rectangle are clamped onto it.
    pub fn locate(&self, x: T, y: T) -> (usize, T, T) {
        let dx = self.width / T::from_usize_lossy(self.nx);
        let dy = self.height / T::from_usize_lossy(self.ny);
        let cell = |v: T, d: T, n: usize| -> usize {
            let k = (v / d).floor().to_f64_lossy();
            if k.is_nan() || k < 0.0 {
                0
            } else {
                (k as usize).min(n - 1)
            }
        };
        let ex = cell(x, dx, self.nx);
        let ey = cell(y, dy, self.ny);
        let e = ey * self.nx + ex;
        let [x0, y0] = self.nodes[self.elements[e][0]];
        let two = T::lit(2.0);
        let one = T::one();
        let xi = (two * (x - x0) / dx - one).max(-one).min(one);
        let eta = (two * (y - y0) / dy - one).max(-one).min(one);
        (e, xi, eta)
    }

    /// Q2 node nearest to `(x, y)`; ties go to the lower id.
    pub fn nearest_node(&self, x: T, y: T) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (n, p) in self.nodes.iter().enumerate() {
            let d = (p[0] - x).powi(2) + (p[1] - y).powi(2);
            if d < best_d {
                best_d = d;
                best = n;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn single_element_counts() {
        let m = Mesh::rectangle(1.0, 1.0, 1, 1).unwrap();
        assert_eq!(m.num_nodes(), 9);
        assert_eq!(m.num_corners(), 4);
        assert_eq!(m.num_elements(), 1);
        let left = m.boundary_nodes(Side::Left);
        assert_eq!(left.q2.len(), 3);
        assert_eq!(left.q1.len(), 2);
    }

    #[test]
    fn cantilever_counts() {
        // (2·40+1)(2·4+1) = 729 nodes, 41·5 = 205 corners
        let m = Mesh::rectangle(10.0, 1.0, 40, 4).unwrap();
        assert_eq!(m.num_nodes(), 729);
        assert_eq!(m.num_corners(), 205);
        assert_eq!(m.num_elements(), 160);
        assert_eq!(m.boundary_nodes(Side::Left).q2.len(), 9);
    }

    #[test]
    fn strip_element_size() {
        let m = Mesh::<f64>::rectangle(1.5, 0.3, 30, 6).unwrap();
        assert_eq!(m.num_elements(), 180);
        assert!((m.element_size() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Mesh::rectangle(0.0, 1.0, 1, 1).is_err());
        assert!(Mesh::rectangle(1.0, -1.0, 1, 1).is_err());
        assert!(Mesh::rectangle(1.0, 1.0, 0, 1).is_err());
        assert!(Mesh::rectangle(1.0, 1.0, 1, 0).is_err());
    }

    #[test]
    fn local_ordering_is_counterclockwise() {
        let m = Mesh::rectangle(2.0, 2.0, 1, 1).unwrap();
        let c = m.element_coords(0);
        let expected = [
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 2.0],
            [0.0, 2.0],
            [1.0, 0.0],
            [2.0, 1.0],
            [1.0, 2.0],
            [0.0, 1.0],
            [1.0, 1.0],
        ];
        assert_eq!(c, expected);
    }

    #[test]
    fn node_sharing_pattern() {
        let m = Mesh::rectangle(3.0, 2.0, 3, 2).unwrap();
        let mut uses: HashMap<usize, usize> = HashMap::new();
        for conn in m.elements() {
            for &n in conn {
                *uses.entry(n).or_default() += 1;
            }
        }
        for conn in m.elements() {
            for &mid in &conn[4..8] {
                assert!(uses[&mid] <= 2);
            }
            assert_eq!(uses[&conn[8]], 1);
        }
    }

    #[test]
    fn union_of_sides_is_the_boundary() {
        let m = Mesh::rectangle(2.0, 1.0, 4, 3).unwrap();
        let mut all: Vec<usize> = Side::ALL
            .iter()
            .flat_map(|&s| m.boundary_nodes(s).q2)
            .collect();
        all.sort();
        all.dedup();
        let expected: Vec<usize> = (0..m.num_nodes())
            .filter(|&n| {
                let [x, y] = m.nodes()[n];
                x == 0.0 || x == 2.0 || y == 0.0 || y == 1.0
            })
            .collect();
        assert_eq!(all, expected);
    }

    #[test]
    fn boundary_edges_lie_on_their_side() {
        let m = Mesh::rectangle(2.0, 1.0, 4, 3).unwrap();
        for side in Side::ALL {
            let nodes = m.boundary_nodes(side).q2;
            for edge in m.boundary_edges(side) {
                for &k in &edge.local_nodes {
                    assert!(nodes.contains(&m.elements()[edge.element][k]));
                }
            }
        }
    }

    #[test]
    fn deterministic_construction() {
        let a = Mesh::rectangle(1.3, 0.7, 5, 3).unwrap();
        let b = Mesh::rectangle(1.3, 0.7, 5, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn locate_and_nearest() {
        let m = Mesh::<f64>::rectangle(2.0, 1.0, 2, 1).unwrap();
        let (e, xi, eta) = m.locate(1.5, 0.25);
        assert_eq!(e, 1);
        assert!((xi - 0.0).abs() < 1e-15 && (eta + 0.5).abs() < 1e-15);
        let n = m.nearest_node(1.49, 0.51);
        assert_eq!(m.nodes()[n], [1.5, 0.5]);
    }
}
