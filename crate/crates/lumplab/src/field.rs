//! Sphere-valued lattice fields with basing constraints.
//!
//! A [`LatticeField`] assigns a unit target vector to every mesh vertex.
//! Basing data pins prescribed target values at marked vertices; it is the
//! discrete form of fixing boundary values at the ends of the punctured
//! domain. Fields are value-semantic and store their mesh behind an `Arc`,
//! so they are cheap to clone and safe to share across threads.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::geometry::{DomainMesh, ExtComplex, SpherePoint, TargetValue};
use crate::profile::{ProfileLimit, RadialProfile};

/// Residual above which a sampled map is rejected as genuinely unbased, as
/// opposed to floating-point noise.
pub const SAMPLING_BASING_TOL: f64 = 1e-6;

/// Residual below which a field counts as based.
pub const BASED_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("sampled map misses basing value at vertex {vertex}: residual {residual:.3e}")]
    BasingViolation { vertex: usize, residual: f64 },
    #[error("field has {values} values but the mesh has {vertices} vertices")]
    ShapeMismatch { values: usize, vertices: usize },
    #[error("basing vertex {0} is out of range or repeated")]
    InvalidBasing(usize),
    #[error("basing expects {expected} values, got {got}")]
    BasingArity { expected: usize, got: usize },
    #[error("hedgehog value is ambiguous at the chart pole (finite nonzero profile with winding {m})")]
    AmbiguousAtPole { m: i32 },
    #[error("field snapshot parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered basing constraints: (vertex index, required target value).
///
/// Target values may repeat; vertex indices may not.
#[derive(Debug, Clone)]
pub struct BasingData {
    pairs: Vec<(usize, TargetValue)>,
}

impl BasingData {
    pub fn new(pairs: Vec<(usize, TargetValue)>) -> Self {
        Self { pairs }
    }

    /// Pairs the mesh's marked vertices, in order, with the given values.
    pub fn from_marked(mesh: &DomainMesh, values: &[TargetValue]) -> Result<Self, FieldError> {
        if values.len() != mesh.marked_vertices().len() {
            return Err(FieldError::BasingArity {
                expected: mesh.marked_vertices().len(),
                got: values.len(),
            });
        }
        Ok(Self {
            pairs: mesh
                .marked_vertices()
                .iter()
                .copied()
                .zip(values.iter().copied())
                .collect(),
        })
    }

    pub fn empty() -> Self {
        Self { pairs: Vec::new() }
    }

    pub fn pairs(&self) -> &[(usize, TargetValue)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.pairs.iter().any(|(i, _)| *i == v)
    }

    fn validate(&self, mesh: &DomainMesh) -> Result<(), FieldError> {
        for (k, (v, _)) in self.pairs.iter().enumerate() {
            if *v >= mesh.vertex_count() {
                return Err(FieldError::InvalidBasing(*v));
            }
            if self.pairs[..k].iter().any(|(u, _)| u == v) {
                return Err(FieldError::InvalidBasing(*v));
            }
        }
        Ok(())
    }

    /// True when both basings pin the same vertices to the same values
    /// (within `BASED_TOL`), in the same order.
    pub fn same_as(&self, other: &BasingData) -> bool {
        self.pairs.len() == other.pairs.len()
            && self
                .pairs
                .iter()
                .zip(other.pairs.iter())
                .all(|((v, q), (w, p))| v == w && q.chordal_distance(p) < BASED_TOL)
    }
}

/// Result of a basing check.
#[derive(Debug, Clone, Copy)]
pub struct BasingReport {
    pub ok: bool,
    pub max_residual: f64,
}

/// A unit-vector target value per mesh vertex, plus basing data.
#[derive(Debug, Clone)]
pub struct LatticeField {
    mesh: Arc<DomainMesh>,
    values: Vec<TargetValue>,
    basing: BasingData,
    sampling_residuals: Vec<f64>,
}

impl LatticeField {
    /// Samples a closed-form map `W(z)` given in the south chart of the
    /// domain (`z = ∞` is passed for a vertex at the north pole).
    ///
    /// Basing vertices whose sampled value sits within
    /// [`SAMPLING_BASING_TOL`] of the required value are set to it exactly;
    /// larger residuals reject the map as unbased.
    pub fn from_stereo_map<F>(
        mesh: &Arc<DomainMesh>,
        map: F,
        basing: BasingData,
    ) -> Result<Self, FieldError>
    where
        F: Fn(ExtComplex) -> ExtComplex,
    {
        basing.validate(mesh)?;
        let values: Vec<TargetValue> = mesh
            .vertices()
            .iter()
            .map(|v| map(v.to_ext()).to_sphere())
            .collect();
        Self::finish_sampled(mesh, values, basing)
    }

    /// The rotationally equivariant field `W(z) = f(|z|) (z/|z|)^m`.
    pub fn hedgehog(
        mesh: &Arc<DomainMesh>,
        profile: &RadialProfile,
        m: i32,
        basing: BasingData,
    ) -> Result<Self, FieldError> {
        basing.validate(mesh)?;
        let mut values = Vec::with_capacity(mesh.vertex_count());
        for v in mesh.vertices() {
            values.push(hedgehog_value(v, profile, m)?.to_sphere());
        }
        Self::finish_sampled(mesh, values, basing)
    }

    /// The constant field at `q`. Basing residuals follow the same rules as
    /// sampled maps, so a constant that contradicts its basing is rejected.
    pub fn constant(
        mesh: &Arc<DomainMesh>,
        q: TargetValue,
        basing: BasingData,
    ) -> Result<Self, FieldError> {
        basing.validate(mesh)?;
        let values = vec![q; mesh.vertex_count()];
        Self::finish_sampled(mesh, values, basing)
    }

    /// Wraps explicit per-vertex values. Values are renormalized; basing is
    /// recorded but not enforced, so `is_based` may report false.
    pub fn from_values(
        mesh: &Arc<DomainMesh>,
        values: Vec<TargetValue>,
        basing: BasingData,
    ) -> Result<Self, FieldError> {
        if values.len() != mesh.vertex_count() {
            return Err(FieldError::ShapeMismatch {
                values: values.len(),
                vertices: mesh.vertex_count(),
            });
        }
        basing.validate(mesh)?;
        let residuals = vec![0.0; basing.len()];
        Ok(Self {
            mesh: Arc::clone(mesh),
            values,
            basing,
            sampling_residuals: residuals,
        })
    }

    fn finish_sampled(
        mesh: &Arc<DomainMesh>,
        mut values: Vec<TargetValue>,
        basing: BasingData,
    ) -> Result<Self, FieldError> {
        let mut residuals = Vec::with_capacity(basing.len());
        for (v, q) in basing.pairs() {
            let residual = values[*v].chordal_distance(q);
            if residual > SAMPLING_BASING_TOL {
                return Err(FieldError::BasingViolation {
                    vertex: *v,
                    residual,
                });
            }
            values[*v] = *q;
            residuals.push(residual);
        }
        Ok(Self {
            mesh: Arc::clone(mesh),
            values,
            basing,
            sampling_residuals: residuals,
        })
    }

    pub fn mesh(&self) -> &Arc<DomainMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[TargetValue] {
        &self.values
    }

    pub fn basing(&self) -> &BasingData {
        &self.basing
    }

    /// Chordal distance between each sampled value and its basing value,
    /// measured before the exact pin was applied.
    pub fn sampling_residuals(&self) -> &[f64] {
        &self.sampling_residuals
    }

    /// Checks the basing constraints (chordal residual on the target sphere).
    pub fn is_based(&self) -> BasingReport {
        let mut max_residual: f64 = 0.0;
        for (v, q) in self.basing.pairs() {
            max_residual = max_residual.max(self.values[*v].chordal_distance(q));
        }
        BasingReport {
            ok: max_residual < BASED_TOL,
            max_residual,
        }
    }

    /// Replaces the values, keeping mesh and basing. Used by descent steps.
    pub fn with_values(&self, values: Vec<TargetValue>) -> Result<Self, FieldError> {
        Self::from_values(&self.mesh, values, self.basing.clone())
    }

    /// Adds a random tangent displacement of the given amplitude at every
    /// vertex except the basing ones, then renormalizes.
    pub fn perturbed_tangent<R: Rng>(&self, amplitude: f64, rng: &mut R) -> Self {
        let mut values = self.values.clone();
        for (i, val) in values.iter_mut().enumerate() {
            if self.basing.contains_vertex(i) {
                continue;
            }
            let n = val.coords();
            let (t1, t2) = tangent_basis(n);
            let a = amplitude * (2.0 * rng.gen::<f64>() - 1.0);
            let b = amplitude * (2.0 * rng.gen::<f64>() - 1.0);
            let moved = [
                n[0] + a * t1[0] + b * t2[0],
                n[1] + a * t1[1] + b * t2[1],
                n[2] + a * t1[2] + b * t2[2],
            ];
            *val = SpherePoint::normalized(moved);
        }
        Self {
            mesh: Arc::clone(&self.mesh),
            values,
            basing: self.basing.clone(),
            sampling_residuals: self.sampling_residuals.clone(),
        }
    }

    /// Writes the plain-text snapshot format: two header lines (mesh label
    /// and basing tuple) followed by one `x y z` line per vertex.
    pub fn write_snapshot<W: Write>(&self, mesh_label: &str, w: &mut W) -> Result<(), FieldError> {
        writeln!(w, "# mesh: {mesh_label}")?;
        let basing: Vec<String> = self
            .basing
            .pairs()
            .iter()
            .map(|(v, q)| {
                let [x, y, z] = q.coords();
                format!("{v}:{x},{y},{z}")
            })
            .collect();
        writeln!(w, "# basing: {}", basing.join(" "))?;
        for val in &self.values {
            let [x, y, z] = val.coords();
            writeln!(w, "{x} {y} {z}")?;
        }
        Ok(())
    }

    /// Reads a snapshot written by [`LatticeField::write_snapshot`] back onto
    /// its mesh.
    pub fn read_snapshot<R: BufRead>(mesh: &Arc<DomainMesh>, r: R) -> Result<Self, FieldError> {
        let mut values = Vec::new();
        let mut basing_pairs = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = k + 1;
            if let Some(rest) = line.strip_prefix("# basing:") {
                for tok in rest.split_whitespace() {
                    let (v, coords) = tok.split_once(':').ok_or(FieldError::ParseError {
                        line: lineno,
                        msg: "basing entry must be v:x,y,z".into(),
                    })?;
                    let v: usize = v.parse().map_err(|_| FieldError::ParseError {
                        line: lineno,
                        msg: "bad basing vertex index".into(),
                    })?;
                    let xs: Vec<f64> = coords
                        .split(',')
                        .map(|t| t.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| FieldError::ParseError {
                            line: lineno,
                            msg: "bad basing coordinates".into(),
                        })?;
                    if xs.len() != 3 {
                        return Err(FieldError::ParseError {
                            line: lineno,
                            msg: "basing value needs 3 coordinates".into(),
                        });
                    }
                    let q = SpherePoint::new(xs[0], xs[1], xs[2]).map_err(|e| {
                        FieldError::ParseError {
                            line: lineno,
                            msg: e.to_string(),
                        }
                    })?;
                    basing_pairs.push((v, q));
                }
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let xs: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| FieldError::ParseError {
                    line: lineno,
                    msg: "bad value line".into(),
                })?;
            if xs.len() != 3 {
                return Err(FieldError::ParseError {
                    line: lineno,
                    msg: "value line must have 3 floats".into(),
                });
            }
            values.push(
                SpherePoint::new(xs[0], xs[1], xs[2]).map_err(|e| FieldError::ParseError {
                    line: lineno,
                    msg: e.to_string(),
                })?,
            );
        }
        Self::from_values(mesh, values, BasingData::new(basing_pairs))
    }
}

/// Hedgehog value at one vertex, on the extended plane.
fn hedgehog_value(
    v: &SpherePoint,
    profile: &RadialProfile,
    m: i32,
) -> Result<ExtComplex, FieldError> {
    match v.to_ext() {
        ExtComplex::Infinity => match profile.limit_at_infinity() {
            ProfileLimit::Zero => Ok(ExtComplex::ZERO),
            ProfileLimit::Infinite => Ok(ExtComplex::Infinity),
            ProfileLimit::Finite if m == 0 => {
                Ok(ExtComplex::new(profile.value(profile.r_max()), 0.0))
            }
            ProfileLimit::Finite => Err(FieldError::AmbiguousAtPole { m }),
        },
        ExtComplex::Finite(z) => {
            let r = z.norm();
            if r < 1e-13 {
                // Chart center: the phase is undefined, so only profiles
                // that send 0 to a pole of the target chart are usable.
                return match profile.limit_at_zero() {
                    ProfileLimit::Zero => Ok(ExtComplex::ZERO),
                    ProfileLimit::Infinite => Ok(ExtComplex::Infinity),
                    ProfileLimit::Finite if m == 0 => {
                        Ok(ExtComplex::new(profile.value(1e-13), 0.0))
                    }
                    ProfileLimit::Finite => Err(FieldError::AmbiguousAtPole { m }),
                };
            }
            let f = profile.value(r);
            if !f.is_finite() || f.abs() > 1e150 {
                return Ok(ExtComplex::Infinity);
            }
            let phase = (z / r).powi(m);
            Ok(ExtComplex::Finite(f * phase))
        }
    }
}

fn tangent_basis(n: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    // pick the axis least aligned with n
    let pick = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        [1.0, 0.0, 0.0]
    } else if n[1].abs() <= n[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let d = n[0] * pick[0] + n[1] * pick[1] + n[2] * pick[2];
    let mut t1 = [pick[0] - d * n[0], pick[1] - d * n[1], pick[2] - d * n[2]];
    let l = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    t1 = [t1[0] / l, t1[1] / l, t1[2] / l];
    let t2 = [
        n[1] * t1[2] - n[2] * t1[1],
        n[2] * t1[0] - n[0] * t1[2],
        n[0] * t1[1] - n[1] * t1[0],
    ];
    (t1, t2)
}

/// Convenience: the identity map `W(z) = z` as a sampler.
pub fn identity_map(z: ExtComplex) -> ExtComplex {
    z
}

/// Convenience: the power map `W(z) = z^k`, `k ≥ 1`.
pub fn power_map(k: u32) -> impl Fn(ExtComplex) -> ExtComplex {
    move |z: ExtComplex| match z {
        ExtComplex::Infinity => ExtComplex::Infinity,
        ExtComplex::Finite(c) => {
            let r = c.norm();
            if r > 1e60 {
                return ExtComplex::Infinity;
            }
            ExtComplex::Finite(c.powi(k as i32))
        }
    }
}

/// Convenience: the constant map `W ≡ w`.
pub fn constant_map(w: ExtComplex) -> impl Fn(ExtComplex) -> ExtComplex {
    move |_| w
}

/// Convenience: a Complex-valued closure lifted to the extended plane, with
/// `∞ ↦ ∞`.
pub fn finite_map<F: Fn(Complex64) -> Complex64>(f: F) -> impl Fn(ExtComplex) -> ExtComplex {
    move |z: ExtComplex| match z {
        ExtComplex::Infinity => ExtComplex::Infinity,
        ExtComplex::Finite(c) => ExtComplex::Finite(f(c)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;
    use rand::SeedableRng;

    fn mesh(subdiv: usize) -> Arc<DomainMesh> {
        Arc::new(DomainMesh::build_icosphere(subdiv, &[], None).unwrap())
    }

    fn based_mesh(subdiv: usize) -> Arc<DomainMesh> {
        let marked = [
            SpherePoint::new(1.0, 0.0, 0.0).unwrap(),
            SpherePoint::new(-1.0, 0.0, 0.0).unwrap(),
        ];
        Arc::new(DomainMesh::build_icosphere(subdiv, &marked, None).unwrap())
    }

    #[test]
    fn constant_map_hits_south_pole() {
        let m = mesh(1);
        let f = LatticeField::from_stereo_map(&m, |_| ExtComplex::ZERO, BasingData::empty())
            .unwrap();
        for v in f.values() {
            assert!(v.chordal_distance(&SpherePoint::south_pole()) < 1e-15);
        }
    }

    #[test]
    fn identity_map_reproduces_vertices() {
        let m = mesh(2);
        let f = LatticeField::from_stereo_map(&m, identity_map, BasingData::empty()).unwrap();
        for (v, val) in m.vertices().iter().zip(f.values()) {
            assert!(v.chordal_distance(val) < 1e-12);
        }
    }

    #[test]
    fn unit_norm_after_sampling() {
        let m = mesh(2);
        let f = LatticeField::from_stereo_map(&m, power_map(3), BasingData::empty()).unwrap();
        for v in f.values() {
            let [x, y, z] = v.coords();
            assert!(((x * x + y * y + z * z).sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn readback_reproduces_map() {
        // sample W(z) = z², read W back from the unit vectors
        let m = mesh(2);
        let f = LatticeField::from_stereo_map(&m, power_map(2), BasingData::empty()).unwrap();
        for (v, val) in m.vertices().iter().zip(f.values()) {
            let z = match v.to_ext() {
                ExtComplex::Finite(z) => z,
                ExtComplex::Infinity => continue,
            };
            let w_back = val.to_ext();
            let expected = power_map(2)(ExtComplex::Finite(z));
            assert!(
                w_back.chordal_distance(&expected) < 1e-9,
                "vertex z={z} readback mismatch"
            );
        }
    }

    #[test]
    fn based_constant_field() {
        let m = based_mesh(2);
        let q = SpherePoint::south_pole();
        let basing = BasingData::from_marked(&m, &[q, q]).unwrap();
        let f = LatticeField::constant(&m, q, basing).unwrap();
        let rep = f.is_based();
        assert!(rep.ok);
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn mismatched_constant_rejected_and_reportable() {
        let m = based_mesh(2);
        let q = SpherePoint::south_pole();
        let other = SpherePoint::north_pole();
        let basing = BasingData::from_marked(&m, &[q, other]).unwrap();
        // constructor rejects
        assert!(matches!(
            LatticeField::constant(&m, q, basing.clone()),
            Err(FieldError::BasingViolation { .. })
        ));
        // raw field reports not-based
        let f = LatticeField::from_values(&m, vec![q; m.vertex_count()], basing).unwrap();
        assert!(!f.is_based().ok);
    }

    #[test]
    fn hedgehog_identity_matches_sampler() {
        let m = mesh(2);
        let prof = RadialProfile::power(1);
        let hh = LatticeField::hedgehog(&m, &prof, 1, BasingData::empty()).unwrap();
        let direct =
            LatticeField::from_stereo_map(&m, identity_map, BasingData::empty()).unwrap();
        for (a, b) in hh.values().iter().zip(direct.values()) {
            assert!(a.chordal_distance(b) < 1e-12);
        }
    }

    #[test]
    fn hedgehog_constant_profile_is_constant_field() {
        let m = mesh(1);
        let prof = RadialProfile::constant(0.0);
        let f = LatticeField::hedgehog(&m, &prof, 1, BasingData::empty()).unwrap();
        for v in f.values() {
            assert!(v.chordal_distance(&SpherePoint::south_pole()) < 1e-15);
        }
    }

    #[test]
    fn perturbation_respects_basing() {
        let m = based_mesh(2);
        let q = SpherePoint::south_pole();
        let basing = BasingData::from_marked(&m, &[q, q]).unwrap();
        let f = LatticeField::constant(&m, q, basing).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = f.perturbed_tangent(0.2, &mut rng);
        assert!(g.is_based().ok);
        // some vertex moved
        let moved = g
            .values()
            .iter()
            .zip(f.values())
            .any(|(a, b)| a.chordal_distance(b) > 1e-3);
        assert!(moved);
    }

    #[test]
    fn snapshot_roundtrip() {
        let m = based_mesh(1);
        let q = SpherePoint::south_pole();
        let basing = BasingData::from_marked(&m, &[q, q]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let f = LatticeField::constant(&m, q, basing)
            .unwrap()
            .perturbed_tangent(0.1, &mut rng);
        let mut buf = Vec::new();
        f.write_snapshot("mesh.txt", &mut buf).unwrap();
        let back = LatticeField::read_snapshot(&m, std::io::BufReader::new(&buf[..])).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!(a.chordal_distance(b) < 1e-14);
        }
        assert!(back.basing().same_as(f.basing()));
    }

    #[test]
    fn stereo_coord_chart_assignment() {
        let m = mesh(2);
        for (v, c) in m.vertices().iter().zip(m.vertex_stereo()) {
            match c.chart {
                Chart::South => assert!(v.z() <= 0.0),
                Chart::North => assert!(v.z() > 0.0),
            }
        }
    }
}
