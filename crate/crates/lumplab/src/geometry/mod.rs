//! Domain-sphere geometry: unit vectors, stereographic charts, and
//! triangulated meshes with marked vertices.
//!
//! The domain is the round unit 2-sphere. Meshes are geodesic icospheres
//! (optionally refined near a point) carrying everything the energy and
//! degree computations need: per-edge cotangent weights, per-triangle corner
//! cotangents, planar triangle areas, and a stereographic coordinate per
//! vertex.
//!
//! Chart convention: the `South` chart is `z = (x + iy) / (1 - n3)` with
//! projection pole at the north pole `(0, 0, 1)`, so `z = 0` is the south
//! pole and `|z| = 1` is the equator. The `North` chart satisfies
//! `z_north = 1 / z_south` on the overlap.

use num_complex::Complex64;
use thiserror::Error;

mod icosphere;
mod io;

pub use icosphere::RefinePass;
pub(crate) use icosphere::Skeleton;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("cannot normalize a zero-length vector")]
    ZeroVector,
    #[error("point coincides with the projection pole of the {0:?} chart")]
    ChartSingularity(Chart),
    #[error("non-finite stereographic coordinate")]
    InvalidCoordinate,
    #[error("marked points {a} and {b} snap to the same mesh vertex {vertex}")]
    MarkedPointCollision { a: usize, b: usize, vertex: usize },
    #[error("triangle {0} is degenerate (near-zero area)")]
    DegenerateTriangle(usize),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("mesh file parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// 3-vector helpers (used throughout the crate)
// ---------------------------------------------------------------------------

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

// ---------------------------------------------------------------------------
// SpherePoint
// ---------------------------------------------------------------------------

/// A point on the unit 2-sphere, stored as a unit 3-vector.
///
/// Every constructor normalizes, so `‖n‖ = 1` holds to machine precision.
/// The same type serves as a value on the target sphere (see [`TargetValue`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    n: [f64; 3],
}

/// A point on the target 2-sphere. Domain and target are both round unit
/// spheres, so the representation is shared.
pub type TargetValue = SpherePoint;

impl SpherePoint {
    /// Normalizes `(x, y, z)` onto the unit sphere.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let n = norm3([x, y, z]);
        if !(n.is_finite() && n > 0.0) {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Self {
            n: [x / n, y / n, z / n],
        })
    }

    pub(crate) fn normalized(v: [f64; 3]) -> Self {
        let n = norm3(v);
        debug_assert!(n > 0.0);
        Self {
            n: [v[0] / n, v[1] / n, v[2] / n],
        }
    }

    pub fn north_pole() -> Self {
        Self { n: [0.0, 0.0, 1.0] }
    }

    pub fn south_pole() -> Self {
        Self {
            n: [0.0, 0.0, -1.0],
        }
    }

    pub fn coords(&self) -> [f64; 3] {
        self.n
    }

    pub fn x(&self) -> f64 {
        self.n[0]
    }

    pub fn y(&self) -> f64 {
        self.n[1]
    }

    pub fn z(&self) -> f64 {
        self.n[2]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        dot3(self.n, other.n)
    }

    /// Euclidean (chordal) distance between two points, in [0, 2].
    pub fn chordal_distance(&self, other: &Self) -> f64 {
        norm3(sub3(self.n, other.n))
    }

    /// Great-circle distance (the angle between the unit vectors), in [0, π].
    pub fn geodesic_distance(&self, other: &Self) -> f64 {
        // atan2 form is accurate for both nearby and antipodal points.
        let c = cross3(self.n, other.n);
        norm3(c).atan2(self.dot(other))
    }

    /// Stereographic coordinate in the given chart.
    ///
    /// Fails with `ChartSingularity` at the chart's projection pole.
    pub fn to_stereo(&self, chart: Chart) -> Result<StereoCoord, GeometryError> {
        let [x, y, z] = self.n;
        match chart {
            Chart::South => {
                let denom = 1.0 - z;
                if denom <= 0.0 {
                    return Err(GeometryError::ChartSingularity(chart));
                }
                Ok(StereoCoord {
                    z: Complex64::new(x / denom, y / denom),
                    chart,
                })
            }
            Chart::North => {
                let denom = 1.0 + z;
                if denom <= 0.0 {
                    return Err(GeometryError::ChartSingularity(chart));
                }
                Ok(StereoCoord {
                    z: Complex64::new(x / denom, -y / denom),
                    chart,
                })
            }
        }
    }

    /// South-chart coordinate on the extended plane; the north pole maps to ∞.
    pub fn to_ext(&self) -> ExtComplex {
        let [x, y, z] = self.n;
        let denom = 1.0 - z;
        if denom <= 0.0 {
            ExtComplex::Infinity
        } else {
            ExtComplex::Finite(Complex64::new(x / denom, y / denom))
        }
    }

    /// Inverse of [`SpherePoint::to_ext`].
    pub fn from_ext(w: ExtComplex) -> Self {
        w.to_sphere()
    }
}

// ---------------------------------------------------------------------------
// Stereographic charts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// `z = (x + iy) / (1 - n3)`; covers everything but the north pole.
    South,
    /// `z = (x - iy) / (1 + n3)`; covers everything but the south pole.
    North,
}

/// A finite stereographic coordinate together with its chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoCoord {
    pub z: Complex64,
    pub chart: Chart,
}

impl StereoCoord {
    pub fn new(z: Complex64, chart: Chart) -> Self {
        Self { z, chart }
    }

    /// Maps the coordinate back to the sphere.
    ///
    /// Fails with `InvalidCoordinate` if `z` is not finite.
    pub fn to_sphere(&self) -> Result<SpherePoint, GeometryError> {
        if !(self.z.re.is_finite() && self.z.im.is_finite()) {
            return Err(GeometryError::InvalidCoordinate);
        }
        let r2 = self.z.norm_sqr();
        let s = 1.0 / (1.0 + r2);
        let p = match self.chart {
            Chart::South => [
                2.0 * self.z.re * s,
                2.0 * self.z.im * s,
                (r2 - 1.0) * s,
            ],
            Chart::North => [
                2.0 * self.z.re * s,
                -2.0 * self.z.im * s,
                (1.0 - r2) * s,
            ],
        };
        Ok(SpherePoint::normalized(p))
    }

    /// South-chart value on the extended plane (`1/z` for north-chart
    /// coordinates; the chart center of the north chart is ∞).
    pub fn to_ext(&self) -> ExtComplex {
        match self.chart {
            Chart::South => ExtComplex::Finite(self.z),
            Chart::North => {
                if self.z.norm_sqr() == 0.0 {
                    ExtComplex::Infinity
                } else {
                    ExtComplex::Finite(self.z.inv())
                }
            }
        }
    }

    /// The same point expressed in the other chart (`z ↦ 1/z` on the overlap).
    pub fn transition(&self) -> Result<StereoCoord, GeometryError> {
        if self.z.norm_sqr() == 0.0 {
            // The chart center is the other chart's projection pole.
            return Err(GeometryError::ChartSingularity(match self.chart {
                Chart::South => Chart::North,
                Chart::North => Chart::South,
            }));
        }
        Ok(StereoCoord {
            z: self.z.inv(),
            chart: match self.chart {
                Chart::South => Chart::North,
                Chart::North => Chart::South,
            },
        })
    }
}

/// Forward stereographic projection.
pub fn stereo_from_sphere(p: &SpherePoint, chart: Chart) -> Result<StereoCoord, GeometryError> {
    p.to_stereo(chart)
}

/// Inverse stereographic projection.
pub fn sphere_from_stereo(c: &StereoCoord) -> Result<SpherePoint, GeometryError> {
    c.to_sphere()
}

// ---------------------------------------------------------------------------
// Extended complex plane (Riemann sphere values)
// ---------------------------------------------------------------------------

/// A point of the extended complex plane ℂ ∪ {∞}.
///
/// Used both for target values `W` (south-chart coordinate on the target
/// sphere, with `W = ∞` at the target north pole) and for domain coordinates
/// fed to closed-form maps.
#[derive(Debug, Clone, Copy)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    pub const ZERO: ExtComplex = ExtComplex::Finite(Complex64::new(0.0, 0.0));

    pub fn new(re: f64, im: f64) -> Self {
        ExtComplex::Finite(Complex64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtComplex::Infinity)
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match self {
            ExtComplex::Finite(c) => Some(*c),
            ExtComplex::Infinity => None,
        }
    }

    /// Unit-vector form on the target sphere (south chart, ∞ ↦ north pole).
    ///
    /// Well-conditioned for all magnitudes: large values route through the
    /// north chart.
    pub fn to_sphere(&self) -> SpherePoint {
        match self {
            ExtComplex::Infinity => SpherePoint::north_pole(),
            ExtComplex::Finite(z) => {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return SpherePoint::north_pole();
                }
                let r2 = z.norm_sqr();
                if r2 <= 1.0 {
                    let s = 1.0 / (1.0 + r2);
                    SpherePoint::normalized([2.0 * z.re * s, 2.0 * z.im * s, (r2 - 1.0) * s])
                } else {
                    // Evaluate via u = 1/z to avoid overflow as |z| grows.
                    let u = z.inv();
                    let u2 = u.norm_sqr();
                    let s = 1.0 / (1.0 + u2);
                    SpherePoint::normalized([2.0 * u.re * s, -2.0 * u.im * s, (1.0 - u2) * s])
                }
            }
        }
    }

    pub fn from_sphere(p: &SpherePoint) -> Self {
        p.to_ext()
    }

    /// Chordal distance on the Riemann sphere (Euclidean distance of the
    /// unit-vector forms, so ∞ is a regular value). Range [0, 2].
    pub fn chordal_distance(&self, other: &ExtComplex) -> f64 {
        self.to_sphere().chordal_distance(&other.to_sphere())
    }
}

impl From<Complex64> for ExtComplex {
    fn from(c: Complex64) -> Self {
        ExtComplex::Finite(c)
    }
}

impl From<f64> for ExtComplex {
    fn from(x: f64) -> Self {
        ExtComplex::Finite(Complex64::new(x, 0.0))
    }
}

impl std::fmt::Display for ExtComplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtComplex::Infinity => write!(f, "inf"),
            ExtComplex::Finite(c) => {
                if c.im == 0.0 {
                    write!(f, "{}", c.re)
                } else if c.re == 0.0 {
                    write!(f, "{}i", c.im)
                } else if c.im < 0.0 {
                    write!(f, "{}{}i", c.re, c.im)
                } else {
                    write!(f, "{}+{}i", c.re, c.im)
                }
            }
        }
    }
}

impl std::str::FromStr for ExtComplex {
    type Err = String;

    /// Parses "inf", a real like "-0.5", an imaginary like "2i", or "a+bi".
    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            return Ok(ExtComplex::Infinity);
        }
        if let Some(body) = t.strip_suffix(['i', 'I']) {
            // Split "a+b" / "a-b" at the sign of the imaginary part (not the
            // leading sign and not an exponent sign).
            let bytes = body.as_bytes();
            let mut split = None;
            for k in (1..bytes.len()).rev() {
                let c = bytes[k] as char;
                if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                    split = Some(k);
                    break;
                }
            }
            if let Some(k) = split {
                let re: f64 = body[..k].parse().map_err(|_| format!("bad complex `{t}`"))?;
                let im_str = &body[k..];
                let im: f64 = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    im_str.parse().map_err(|_| format!("bad complex `{t}`"))?
                };
                return Ok(ExtComplex::new(re, im));
            }
            let im: f64 = if body.is_empty() || body == "+" {
                1.0
            } else if body == "-" {
                -1.0
            } else {
                body.parse().map_err(|_| format!("bad complex `{t}`"))?
            };
            return Ok(ExtComplex::new(0.0, im));
        }
        let re: f64 = t.parse().map_err(|_| format!("bad number `{t}`"))?;
        Ok(ExtComplex::new(re, 0.0))
    }
}

// ---------------------------------------------------------------------------
// DomainMesh
// ---------------------------------------------------------------------------

/// An undirected mesh edge with its cotangent weight
/// `w = (cot α + cot β) / 2`, where α and β are the angles opposite the edge
/// in its two adjacent triangles.
#[derive(Debug, Clone, Copy)]
pub struct MeshEdge {
    pub a: usize,
    pub b: usize,
    pub cotan_weight: f64,
}

/// A closed, oriented, genus-0 triangle mesh on the unit sphere with marked
/// vertices and precomputed integration weights.
#[derive(Debug, Clone)]
pub struct DomainMesh {
    vertices: Vec<SpherePoint>,
    triangles: Vec<[usize; 3]>,
    marked: Vec<usize>,
    snap_distances: Vec<f64>,
    edges: Vec<MeshEdge>,
    /// `corner_cotans[t][k]` = cot of the interior angle at corner `k` of
    /// triangle `t` (angles of the flat embedded triangle).
    corner_cotans: Vec<[f64; 3]>,
    /// Planar triangle areas; these are the quadrature weights.
    areas: Vec<f64>,
    stereo: Vec<StereoCoord>,
    mean_edge_length: f64,
}

impl DomainMesh {
    /// Builds a geodesic icosphere with `subdivisions` rounds of uniform
    /// quadrisection, snaps `marked_points` to their nearest vertices, and
    /// optionally refines locally (see [`RefinePass`]).
    pub fn build_icosphere(
        subdivisions: usize,
        marked_points: &[SpherePoint],
        refine: Option<RefinePass>,
    ) -> Result<Self, GeometryError> {
        let passes: Vec<RefinePass> = refine.into_iter().collect();
        Self::build_icosphere_refined(subdivisions, marked_points, &passes)
    }

    /// Like [`DomainMesh::build_icosphere`] but with a sequence of refinement
    /// passes, applied in order. Nesting passes with decreasing radii grades
    /// the mesh toward a point.
    pub fn build_icosphere_refined(
        subdivisions: usize,
        marked_points: &[SpherePoint],
        passes: &[RefinePass],
    ) -> Result<Self, GeometryError> {
        let mut skel = icosphere::Skeleton::icosahedron();
        for _ in 0..subdivisions {
            skel.subdivide_all();
        }
        for pass in passes {
            skel.refine_near(pass)?;
        }
        Self::finalize(skel.vertices, skel.triangles, marked_points)
    }

    /// Assembles a mesh from raw vertices/triangles, snapping marked points.
    pub(crate) fn finalize(
        vertices: Vec<SpherePoint>,
        triangles: Vec<[usize; 3]>,
        marked_points: &[SpherePoint],
    ) -> Result<Self, GeometryError> {
        let mut marked = Vec::with_capacity(marked_points.len());
        let mut snap_distances = Vec::with_capacity(marked_points.len());
        for p in marked_points {
            let (idx, _) = nearest_vertex(&vertices, p);
            snap_distances.push(vertices[idx].geodesic_distance(p));
            marked.push(idx);
        }
        for i in 0..marked.len() {
            for j in (i + 1)..marked.len() {
                if marked[i] == marked[j] {
                    return Err(GeometryError::MarkedPointCollision {
                        a: i,
                        b: j,
                        vertex: marked[i],
                    });
                }
            }
        }
        Self::from_parts(vertices, triangles, marked, snap_distances)
    }

    pub(crate) fn from_parts(
        vertices: Vec<SpherePoint>,
        triangles: Vec<[usize; 3]>,
        marked: Vec<usize>,
        snap_distances: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        for (i, m) in marked.iter().enumerate() {
            if *m >= vertices.len() {
                return Err(GeometryError::InvalidMesh(format!(
                    "marked vertex {i} is out of range"
                )));
            }
        }
        let edges = collect_edges(&vertices, &triangles)?;
        let mut corner_cotans = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut edge_total = 0.0;
        let mut edge_count = 0usize;
        for (t, tri) in triangles.iter().enumerate() {
            let p = [
                vertices[tri[0]].coords(),
                vertices[tri[1]].coords(),
                vertices[tri[2]].coords(),
            ];
            let mut cot = [0.0; 3];
            for k in 0..3 {
                let u = sub3(p[(k + 1) % 3], p[k]);
                let w = sub3(p[(k + 2) % 3], p[k]);
                let cr = norm3(cross3(u, w));
                if cr < 1e-14 {
                    return Err(GeometryError::DegenerateTriangle(t));
                }
                cot[k] = dot3(u, w) / cr;
            }
            corner_cotans.push(cot);
            let area = 0.5 * norm3(cross3(sub3(p[1], p[0]), sub3(p[2], p[0])));
            if area < 1e-15 {
                return Err(GeometryError::DegenerateTriangle(t));
            }
            areas.push(area);
            for k in 0..3 {
                edge_total += norm3(sub3(p[(k + 1) % 3], p[k]));
                edge_count += 1;
            }
        }
        let stereo = vertices
            .iter()
            .map(|v| {
                let chart = if v.z() <= 0.0 { Chart::South } else { Chart::North };
                v.to_stereo(chart).expect("vertex cannot sit on both poles")
            })
            .collect();
        let mean_edge_length = edge_total / edge_count as f64;
        let mesh = Self {
            vertices,
            triangles,
            marked,
            snap_distances,
            edges,
            corner_cotans,
            areas,
            stereo,
            mean_edge_length,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Combinatorial sanity checks: closed oriented surface of genus 0.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let v = self.vertices.len() as i64;
        let e = self.edges.len() as i64;
        let f = self.triangles.len() as i64;
        if v - e + f != 2 {
            return Err(GeometryError::InvalidMesh(format!(
                "Euler characteristic V - E + F = {} (want 2)",
                v - e + f
            )));
        }
        // collect_edges already verified the paired-opposite-orientation
        // condition; check outwardness here.
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.vertices[tri[0]].coords();
            let b = self.vertices[tri[1]].coords();
            let c = self.vertices[tri[2]].coords();
            let n = cross3(sub3(b, a), sub3(c, a));
            let centroid = add3(add3(a, b), c);
            if dot3(n, centroid) <= 0.0 {
                return Err(GeometryError::InvalidMesh(format!(
                    "triangle {t} is not outward-oriented"
                )));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[SpherePoint] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn marked_vertices(&self) -> &[usize] {
        &self.marked
    }

    /// Geodesic distance from each requested marked point to the vertex it
    /// snapped to, in input order.
    pub fn snap_distances(&self) -> &[f64] {
        &self.snap_distances
    }

    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    pub fn corner_cotans(&self) -> &[[f64; 3]] {
        &self.corner_cotans
    }

    /// Per-triangle quadrature weights (planar triangle areas). Positive,
    /// and their sum converges to 4π under subdivision.
    pub fn triangle_area_weights(&self) -> &[f64] {
        &self.areas
    }

    pub fn vertex_stereo(&self) -> &[StereoCoord] {
        &self.stereo
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.mean_edge_length
    }

    /// Mean edge length of one triangle.
    pub fn triangle_edge_scale(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        let p = [
            self.vertices[tri[0]].coords(),
            self.vertices[tri[1]].coords(),
            self.vertices[tri[2]].coords(),
        ];
        (norm3(sub3(p[1], p[0])) + norm3(sub3(p[2], p[1])) + norm3(sub3(p[0], p[2]))) / 3.0
    }

    /// Normalized centroid of triangle `t`.
    pub fn triangle_centroid(&self, t: usize) -> SpherePoint {
        let tri = self.triangles[t];
        SpherePoint::normalized(add3(
            add3(
                self.vertices[tri[0]].coords(),
                self.vertices[tri[1]].coords(),
            ),
            self.vertices[tri[2]].coords(),
        ))
    }

    /// Writes the mesh in the plain-text exchange format.
    pub fn write_text<W: std::io::Write>(&self, w: &mut W) -> Result<(), GeometryError> {
        io::write_mesh(self, w)
    }

    /// Reads a mesh written by [`DomainMesh::write_text`].
    pub fn read_text<R: std::io::BufRead>(r: R) -> Result<Self, GeometryError> {
        io::read_mesh(r)
    }
}

fn nearest_vertex(vertices: &[SpherePoint], p: &SpherePoint) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, v) in vertices.iter().enumerate() {
        let d = v.chordal_distance(p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Builds the undirected edge list with cotangent weights, verifying that
/// every directed edge appears exactly once (closed oriented manifold).
fn collect_edges(
    vertices: &[SpherePoint],
    triangles: &[[usize; 3]],
) -> Result<Vec<MeshEdge>, GeometryError> {
    use std::collections::HashMap;
    let mut half: HashMap<(usize, usize), f64> = HashMap::new();
    for tri in triangles {
        let p = [
            vertices[tri[0]].coords(),
            vertices[tri[1]].coords(),
            vertices[tri[2]].coords(),
        ];
        for k in 0..3 {
            let i = tri[(k + 1) % 3];
            let j = tri[(k + 2) % 3];
            let u = sub3(p[(k + 1) % 3], p[k]);
            let w = sub3(p[(k + 2) % 3], p[k]);
            let cr = norm3(cross3(u, w));
            let cot = if cr < 1e-300 { 0.0 } else { dot3(u, w) / cr };
            if half.insert((i, j), cot).is_some() {
                return Err(GeometryError::InvalidMesh(format!(
                    "directed edge ({i},{j}) appears more than once"
                )));
            }
        }
    }
    let mut edges = Vec::with_capacity(half.len() / 2);
    for (&(i, j), &cot_a) in half.iter() {
        if i < j {
            let cot_b = match half.get(&(j, i)) {
                Some(c) => *c,
                None => {
                    return Err(GeometryError::InvalidMesh(format!(
                        "edge ({i},{j}) lacks an oppositely oriented partner"
                    )))
                }
            };
            edges.push(MeshEdge {
                a: i,
                b: j,
                cotan_weight: 0.5 * (cot_a + cot_b),
            });
        }
    }
    // Deterministic order regardless of hash-map iteration.
    edges.sort_unstable_by_key(|e| (e.a, e.b));
    if 2 * edges.len() != half.len() {
        return Err(GeometryError::InvalidMesh(
            "unpaired directed edges remain".into(),
        ));
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn south_chart_center_and_equator() {
        let sp = SpherePoint::south_pole();
        let c = sp.to_stereo(Chart::South).unwrap();
        assert!(c.z.norm() < 1e-15);

        let eq = SpherePoint::new(1.0, 0.0, 0.0).unwrap();
        let c = eq.to_stereo(Chart::South).unwrap();
        assert!((c.z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn chart_transition_is_reciprocal() {
        // z_south = 2 on the real axis -> z_north = 0.5
        let p = StereoCoord::new(Complex64::new(2.0, 0.0), Chart::South)
            .to_sphere()
            .unwrap();
        let n = p.to_stereo(Chart::North).unwrap();
        assert!((n.z - Complex64::new(0.5, 0.0)).norm() < 1e-12);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let r = 0.5 + 1.5 * rng.gen::<f64>();
            let th = std::f64::consts::TAU * rng.gen::<f64>();
            let z = Complex64::from_polar(r, th);
            let p = StereoCoord::new(z, Chart::South).to_sphere().unwrap();
            let zn = p.to_stereo(Chart::North).unwrap().z;
            assert!((zn - z.inv()).norm() < 1e-10, "transition failed at z={z}");
        }
    }

    #[test]
    fn projection_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut max_err: f64 = 0.0;
        for _ in 0..1000 {
            let p = SpherePoint::new(
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
            )
            .unwrap();
            for chart in [Chart::South, Chart::North] {
                let back = p.to_stereo(chart).unwrap().to_sphere().unwrap();
                max_err = max_err.max(p.chordal_distance(&back));
            }
        }
        assert!(max_err < 1e-12, "roundtrip error {max_err}");
    }

    #[test]
    fn pole_input_signals_singularity() {
        let np = SpherePoint::north_pole();
        assert!(matches!(
            np.to_stereo(Chart::South),
            Err(GeometryError::ChartSingularity(Chart::South))
        ));
        assert!(np.to_stereo(Chart::North).is_ok());
    }

    #[test]
    fn ext_complex_matches_poles() {
        assert!(ExtComplex::ZERO
            .to_sphere()
            .chordal_distance(&SpherePoint::south_pole())
            < 1e-15);
        assert!(ExtComplex::Infinity
            .to_sphere()
            .chordal_distance(&SpherePoint::north_pole())
            < 1e-15);
        // z=1 is on the equator
        let e = ExtComplex::new(1.0, 0.0).to_sphere();
        assert!(e.chordal_distance(&SpherePoint::new(1.0, 0.0, 0.0).unwrap()) < 1e-15);
    }

    #[test]
    fn ext_complex_large_values_are_stable() {
        let z = ExtComplex::new(1e200, -3e199);
        let p = z.to_sphere();
        assert!(p.chordal_distance(&SpherePoint::north_pole()) < 1e-150);
    }

    #[test]
    fn ext_complex_parsing() {
        let cases = [
            ("inf", ExtComplex::Infinity),
            ("0", ExtComplex::ZERO),
            ("-1.5", ExtComplex::new(-1.5, 0.0)),
            ("2i", ExtComplex::new(0.0, 2.0)),
            ("-i", ExtComplex::new(0.0, -1.0)),
            ("1+2i", ExtComplex::new(1.0, 2.0)),
            ("0.5-0.25i", ExtComplex::new(0.5, -0.25)),
            ("1e-3+2e-4i", ExtComplex::new(1e-3, 2e-4)),
        ];
        for (s, want) in cases {
            let got: ExtComplex = s.parse().unwrap();
            assert!(got.chordal_distance(&want) < 1e-12, "parse `{s}`");
        }
        assert!("abc".parse::<ExtComplex>().is_err());
    }

    #[test]
    fn icosahedron_counts() {
        let mesh = DomainMesh::build_icosphere(0, &[], None).unwrap();
        assert_eq!(mesh.vertex_count(), 12);
        assert_eq!(mesh.edge_count(), 30);
        assert_eq!(mesh.triangle_count(), 20);
    }

    #[test]
    fn subdivision_counts() {
        for s in 0..4 {
            let mesh = DomainMesh::build_icosphere(s, &[], None).unwrap();
            assert_eq!(mesh.triangle_count(), 20 * 4usize.pow(s as u32));
            assert_eq!(mesh.vertex_count(), 10 * 4usize.pow(s as u32) + 2);
        }
    }

    #[test]
    fn area_weights_positive_and_converging() {
        let sphere_area = 4.0 * std::f64::consts::PI;
        let mut last_err = f64::NAN;
        for s in 2..=5 {
            let mesh = DomainMesh::build_icosphere(s, &[], None).unwrap();
            let total: f64 = mesh.triangle_area_weights().iter().sum();
            assert!(mesh.triangle_area_weights().iter().all(|&a| a > 0.0));
            let err = (sphere_area - total).abs() / sphere_area;
            if s >= 4 {
                assert!(err < 1e-3, "area error {err} at s={s}");
            }
            if !last_err.is_nan() {
                let ratio = last_err / err;
                assert!(
                    (3.5..=4.5).contains(&ratio),
                    "area convergence ratio {ratio} at s={s}"
                );
            }
            last_err = err;
        }
    }

    #[test]
    fn marked_points_snap_to_equator() {
        // South-chart z = ±1 are the equatorial points (±1, 0, 0).
        let m1 = SpherePoint::new(1.0, 0.0, 0.0).unwrap();
        let m2 = SpherePoint::new(-1.0, 0.0, 0.0).unwrap();
        let mesh = DomainMesh::build_icosphere(3, &[m1, m2], None).unwrap();
        assert_eq!(mesh.marked_vertices().len(), 2);
        let h = mesh.mean_edge_length();
        for (k, &v) in mesh.marked_vertices().iter().enumerate() {
            let p = mesh.vertices()[v];
            let want = if k == 0 { m1 } else { m2 };
            assert!(p.geodesic_distance(&want) <= h, "snap too far");
            assert!(mesh.snap_distances()[k] <= h);
        }
    }

    #[test]
    fn marked_collision_detected() {
        let m1 = SpherePoint::new(1.0, 0.0, 0.0).unwrap();
        let m2 = SpherePoint::new(1.0, 1e-9, 0.0).unwrap();
        let err = DomainMesh::build_icosphere(2, &[m1, m2], None);
        assert!(matches!(
            err,
            Err(GeometryError::MarkedPointCollision { .. })
        ));
    }

    #[test]
    fn local_refinement_meets_circumradius_target() {
        let center = SpherePoint::south_pole();
        let radius = 0.5;
        let mesh = DomainMesh::build_icosphere(
            2,
            &[],
            Some(RefinePass { center, radius }),
        )
        .unwrap();
        mesh.validate().unwrap();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let within = tri
                .iter()
                .any(|&v| mesh.vertices()[v].geodesic_distance(&center) <= radius);
            if within {
                let p = [
                    mesh.vertices()[tri[0]].coords(),
                    mesh.vertices()[tri[1]].coords(),
                    mesh.vertices()[tri[2]].coords(),
                ];
                let a = norm3(sub3(p[1], p[0]));
                let b = norm3(sub3(p[2], p[1]));
                let c = norm3(sub3(p[0], p[2]));
                let area = mesh.triangle_area_weights()[t];
                let circum = a * b * c / (4.0 * area);
                assert!(
                    circum < radius / 16.0,
                    "triangle {t} circumradius {circum} vs target {}",
                    radius / 16.0
                );
            }
        }
    }

    #[test]
    fn nested_refinement_stays_valid() {
        let center = SpherePoint::south_pole();
        let passes: Vec<RefinePass> = [0.8, 0.4, 0.2, 0.1]
            .iter()
            .map(|&radius| RefinePass { center, radius })
            .collect();
        let mesh = DomainMesh::build_icosphere_refined(2, &[], &passes).unwrap();
        mesh.validate().unwrap();
        assert!(mesh.triangle_count() > 20 * 16);
    }
}
