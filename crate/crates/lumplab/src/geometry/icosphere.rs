//! Icosphere construction: uniform quadrisection plus conformity-preserving
//! local refinement by longest-edge bisection.

use std::collections::HashMap;

use super::{cross3, norm3, scale3, sub3, GeometryError, SpherePoint};

/// A local refinement request: every triangle touching the geodesic disk of
/// the given radius around `center` is bisected until its circumradius drops
/// below `radius / 16`.
#[derive(Debug, Clone, Copy)]
pub struct RefinePass {
    pub center: SpherePoint,
    pub radius: f64,
}

pub(crate) struct Skeleton {
    pub vertices: Vec<SpherePoint>,
    pub triangles: Vec<[usize; 3]>,
}

/// Bookkeeping for an open refinement session.
pub(crate) struct RefineState {
    directed: HashMap<(usize, usize), usize>,
    splits: usize,
    budget: usize,
}

impl Skeleton {
    /// Unit icosahedron with outward-oriented faces.
    pub fn icosahedron() -> Self {
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let raw: [[f64; 3]; 12] = [
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ];
        let vertices = raw.iter().map(|&v| SpherePoint::normalized(v)).collect();
        let triangles = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        Self {
            vertices,
            triangles,
        }
    }

    /// One round of uniform quadrisection with normalized edge midpoints.
    pub fn subdivide_all(&mut self) {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut new_triangles = Vec::with_capacity(self.triangles.len() * 4);
        let old = std::mem::take(&mut self.triangles);
        for [a, b, c] in old {
            let ab = self.midpoint(&mut midpoints, a, b);
            let bc = self.midpoint(&mut midpoints, b, c);
            let ca = self.midpoint(&mut midpoints, c, a);
            new_triangles.push([a, ab, ca]);
            new_triangles.push([b, bc, ab]);
            new_triangles.push([c, ca, bc]);
            new_triangles.push([ab, bc, ca]);
        }
        self.triangles = new_triangles;
    }

    fn midpoint(
        &mut self,
        cache: &mut HashMap<(usize, usize), usize>,
        i: usize,
        j: usize,
    ) -> usize {
        let key = if i < j { (i, j) } else { (j, i) };
        if let Some(&idx) = cache.get(&key) {
            return idx;
        }
        let m = SpherePoint::normalized(scale3(
            super::add3(self.vertices[i].coords(), self.vertices[j].coords()),
            0.5,
        ));
        let idx = self.vertices.len();
        self.vertices.push(m);
        cache.insert(key, idx);
        idx
    }

    /// Bisects triangles intersecting the pass disk until their circumradii
    /// fall below `radius / 16`. Conformity is maintained by propagating
    /// longest-edge bisection into neighbors, so no hanging nodes appear.
    pub fn refine_near(&mut self, pass: &RefinePass) -> Result<(), GeometryError> {
        let target = pass.radius / 16.0;
        let mut state = self.start_refinement()?;
        loop {
            let mut did_any = false;
            let count = self.triangles.len();
            for t in 0..count {
                if self.violates(t, pass, target) {
                    self.bisect_in(&mut state, t)?;
                    did_any = true;
                }
            }
            if !did_any {
                break;
            }
        }
        Ok(())
    }

    /// Opens a refinement session (directed-edge adjacency plus a split
    /// budget guarding against runaway propagation).
    pub(crate) fn start_refinement(&self) -> Result<RefineState, GeometryError> {
        Ok(RefineState {
            directed: self.directed_map()?,
            splits: 0,
            budget: 400 * self.triangles.len() + 2_000_000,
        })
    }

    fn violates(&self, t: usize, pass: &RefinePass, target: f64) -> bool {
        let tri = self.triangles[t];
        let near = tri
            .iter()
            .any(|&v| self.vertices[v].geodesic_distance(&pass.center) <= pass.radius);
        near && self.circumradius(t) >= target
    }

    fn circumradius(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        let p = [
            self.vertices[tri[0]].coords(),
            self.vertices[tri[1]].coords(),
            self.vertices[tri[2]].coords(),
        ];
        let a = norm3(sub3(p[1], p[0]));
        let b = norm3(sub3(p[2], p[1]));
        let c = norm3(sub3(p[0], p[2]));
        let area = 0.5 * norm3(cross3(sub3(p[1], p[0]), sub3(p[2], p[0])));
        if area <= 0.0 {
            return f64::INFINITY;
        }
        a * b * c / (4.0 * area)
    }

    fn directed_map(&self) -> Result<HashMap<(usize, usize), usize>, GeometryError> {
        let mut map = HashMap::with_capacity(self.triangles.len() * 3);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let key = (tri[k], tri[(k + 1) % 3]);
                if map.insert(key, t).is_some() {
                    return Err(GeometryError::InvalidMesh(format!(
                        "directed edge {key:?} is not unique"
                    )));
                }
            }
        }
        Ok(map)
    }

    /// Longest edge of triangle `t` as a directed pair, using edge length
    /// with the undirected index pair as a deterministic tie-break. Both
    /// triangles sharing an edge agree on this order.
    fn longest_edge(&self, t: usize) -> (usize, usize) {
        let tri = self.triangles[t];
        let mut best: Option<(f64, (usize, usize), (usize, usize))> = None;
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            let len = norm3(sub3(self.vertices[i].coords(), self.vertices[j].coords()));
            let key = if i < j { (i, j) } else { (j, i) };
            let cand = (len, key, (i, j));
            let better = match &best {
                None => true,
                Some((bl, bk, _)) => (len, key) > (*bl, *bk),
            };
            if better {
                best = Some(cand);
            }
        }
        best.expect("triangle has three edges").2
    }

    /// Longest-edge bisection of triangle `t`, recursing into neighbors so
    /// that every split is a matched pair across the shared edge.
    pub(crate) fn bisect_in(
        &mut self,
        state: &mut RefineState,
        t: usize,
    ) -> Result<(), GeometryError> {
        let directed = &mut state.directed;
        let mut stack = vec![t];
        while let Some(&top) = stack.last() {
            let (a, b) = self.longest_edge(top);
            let neighbor = *directed.get(&(b, a)).ok_or_else(|| {
                GeometryError::InvalidMesh(format!("edge ({b},{a}) has no neighbor"))
            })?;
            let (na, nb) = self.longest_edge(neighbor);
            let same = (na == b && nb == a) || (na == a && nb == b);
            if same {
                self.split_pair(top, neighbor, a, b, directed);
                state.splits += 2;
                if state.splits > state.budget {
                    return Err(GeometryError::InvalidMesh(
                        "refinement did not terminate within budget".into(),
                    ));
                }
                stack.pop();
            } else {
                if stack.len() > self.triangles.len() {
                    return Err(GeometryError::InvalidMesh(
                        "bisection propagation path exceeded mesh size".into(),
                    ));
                }
                stack.push(neighbor);
            }
        }
        Ok(())
    }

    /// Splits the matched pair (t contains a→b, tn contains b→a) at the
    /// normalized midpoint of (a, b).
    fn split_pair(
        &mut self,
        t: usize,
        tn: usize,
        a: usize,
        b: usize,
        directed: &mut HashMap<(usize, usize), usize>,
    ) {
        let c = third_vertex(self.triangles[t], a, b);
        let d = third_vertex(self.triangles[tn], b, a);
        let m = self.vertices.len();
        self.vertices.push(SpherePoint::normalized(scale3(
            super::add3(self.vertices[a].coords(), self.vertices[b].coords()),
            0.5,
        )));

        for key in [(a, b), (b, c), (c, a)] {
            directed.remove(&key);
        }
        for key in [(b, a), (a, d), (d, b)] {
            directed.remove(&key);
        }

        // t: (a,b,c) -> (a,m,c) in place, (m,b,c) appended
        self.triangles[t] = [a, m, c];
        let t_new = self.triangles.len();
        self.triangles.push([m, b, c]);
        // tn: (b,a,d) -> (b,m,d) in place, (m,a,d) appended
        self.triangles[tn] = [b, m, d];
        let tn_new = self.triangles.len();
        self.triangles.push([m, a, d]);

        for (key, tri) in [
            ((a, m), t),
            ((m, c), t),
            ((c, a), t),
            ((m, b), t_new),
            ((b, c), t_new),
            ((c, m), t_new),
            ((b, m), tn),
            ((m, d), tn),
            ((d, b), tn),
            ((m, a), tn_new),
            ((a, d), tn_new),
            ((d, m), tn_new),
        ] {
            directed.insert(key, tri);
        }
    }
}

fn third_vertex(tri: [usize; 3], a: usize, b: usize) -> usize {
    for &v in &tri {
        if v != a && v != b {
            return v;
        }
    }
    unreachable!("triangle does not contain the split edge");
}
