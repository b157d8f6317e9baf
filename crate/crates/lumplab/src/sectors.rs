//! Topological sector bookkeeping for based fields.
//!
//! For maps between 2-spheres the free homotopy class is the degree, and for
//! a simply connected target two based maps are based-homotopic exactly when
//! they are freely homotopic. A sector is therefore labelled completely by
//! the pair (degree, basing tuple): no homotopy needs to be constructed to
//! decide equivalence. That classification is *wrong* for targets with
//! nontrivial fundamental group (e.g. the projective plane of nematic order
//! parameters), so the target model is explicit and anything but the sphere
//! is refused.

use serde::Serialize;
use thiserror::Error;

use crate::energy::lattice_degree;
use crate::field::{LatticeField, BASED_TOL};
use crate::geometry::TargetValue;

#[derive(Debug, Error)]
pub enum SectorError {
    #[error("degree unresolved (raw {0:.4}); refine the mesh")]
    Unresolved(f64),
    #[error("field violates its basing (residual {0:.3e})")]
    BasingViolation(f64),
    #[error("fields are incomparable: {0}")]
    IncomparableFields(String),
    #[error("sector classification by degree requires a simply connected target")]
    TargetNotSimplyConnected,
}

/// Target spaces the classifier knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetModel {
    /// The round 2-sphere (simply connected; classification is complete).
    UnitSphere,
    /// The projective plane (π₁ = ℤ/2; classification by degree is invalid).
    RealProjectivePlane,
}

/// A based homotopy class: degree plus the basing tuple.
#[derive(Debug, Clone, Serialize)]
pub struct SectorDescriptor {
    pub degree: i64,
    /// Marked vertex indices, in basing order.
    pub marked_vertices: Vec<usize>,
    /// Required values at those vertices.
    #[serde(serialize_with = "serialize_values")]
    pub basing_values: Vec<TargetValue>,
}

fn serialize_values<S: serde::Serializer>(
    values: &[TargetValue],
    s: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for v in values {
        seq.serialize_element(&v.coords())?;
    }
    seq.end()
}

impl PartialEq for SectorDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree
            && self.marked_vertices == other.marked_vertices
            && self.basing_values.len() == other.basing_values.len()
            && self
                .basing_values
                .iter()
                .zip(&other.basing_values)
                .all(|(a, b)| a.chordal_distance(b) < BASED_TOL)
    }
}

impl std::fmt::Display for SectorDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let qs: Vec<String> = self
            .basing_values
            .iter()
            .map(|q| format!("{}", q.to_ext()))
            .collect();
        write!(f, "deg={}, q=({})", self.degree, qs.join(","))
    }
}

/// The sector of a based field: its resolved degree plus its basing data.
pub fn sector_of(field: &LatticeField) -> Result<SectorDescriptor, SectorError> {
    let rep = field.is_based();
    if !rep.ok {
        return Err(SectorError::BasingViolation(rep.max_residual));
    }
    let deg = lattice_degree(field);
    if !deg.resolved {
        return Err(SectorError::Unresolved(deg.raw));
    }
    let (marked_vertices, basing_values) = field
        .basing()
        .pairs()
        .iter()
        .map(|(v, q)| (*v, *q))
        .unzip();
    Ok(SectorDescriptor {
        degree: deg.rounded,
        marked_vertices,
        basing_values,
    })
}

/// Decides based homotopy equivalence of two fields sharing a mesh and
/// basing: true exactly when their sectors agree. Fields with different
/// meshes or basing data live in different function spaces and are
/// incomparable rather than inequivalent.
pub fn same_sector(f: &LatticeField, g: &LatticeField) -> Result<bool, SectorError> {
    same_sector_on(f, g, TargetModel::UnitSphere)
}

/// [`same_sector`] with the target model spelled out; refuses targets where
/// degree-plus-basing is not a complete invariant.
pub fn same_sector_on(
    f: &LatticeField,
    g: &LatticeField,
    target: TargetModel,
) -> Result<bool, SectorError> {
    if target != TargetModel::UnitSphere {
        return Err(SectorError::TargetNotSimplyConnected);
    }
    let mf = f.mesh();
    let mg = g.mesh();
    if mf.vertex_count() != mg.vertex_count()
        || mf.triangle_count() != mg.triangle_count()
        || mf.marked_vertices() != mg.marked_vertices()
    {
        return Err(SectorError::IncomparableFields(
            "fields live on different meshes".into(),
        ));
    }
    if !f.basing().same_as(g.basing()) {
        return Err(SectorError::IncomparableFields(
            "fields carry different basing data".into(),
        ));
    }
    Ok(sector_of(f)? == sector_of(g)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{family_field, CutoffFunction, SweepMeshConfig};
    use crate::field::{BasingData, LatticeField};
    use crate::geometry::{DomainMesh, SpherePoint};
    use rand::SeedableRng;
    use std::sync::Arc;

    #[test]
    fn constant_field_sector() {
        let marked = [
            SpherePoint::new(1.0, 0.0, 0.0).unwrap(),
            SpherePoint::new(-1.0, 0.0, 0.0).unwrap(),
        ];
        let mesh = Arc::new(DomainMesh::build_icosphere(2, &marked, None).unwrap());
        let q = SpherePoint::south_pole();
        let basing = BasingData::from_marked(&mesh, &[q, q]).unwrap();
        let f = LatticeField::constant(&mesh, q, basing).unwrap();
        let sector = sector_of(&f).unwrap();
        assert_eq!(sector.degree, 0);
        assert_eq!(sector.basing_values.len(), 2);
        assert_eq!(format!("{sector}"), "deg=0, q=(0,0)");
    }

    #[test]
    fn family_members_share_a_sector() {
        let h = CutoffFunction::smoothstep();
        let cfg = SweepMeshConfig {
            base_subdivisions: 2,
            ..SweepMeshConfig::default()
        };
        // same ε so the graded meshes coincide; different members via
        // perturbation
        let f = family_field(0.2, &h, &cfg).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let g = f.perturbed_tangent(0.05, &mut rng);
        assert!(same_sector(&f, &g).unwrap());
    }

    #[test]
    fn degree_mismatch_is_not_equivalent() {
        let h = CutoffFunction::smoothstep();
        let cfg = SweepMeshConfig {
            base_subdivisions: 2,
            ..SweepMeshConfig::default()
        };
        let f = family_field(0.2, &h, &cfg).unwrap();
        let constant = LatticeField::constant(
            f.mesh(),
            SpherePoint::south_pole(),
            f.basing().clone(),
        )
        .unwrap();
        assert!(!same_sector(&f, &constant).unwrap());
    }

    #[test]
    fn different_basing_is_incomparable() {
        let marked = [
            SpherePoint::new(1.0, 0.0, 0.0).unwrap(),
            SpherePoint::new(-1.0, 0.0, 0.0).unwrap(),
        ];
        let mesh = Arc::new(DomainMesh::build_icosphere(2, &marked, None).unwrap());
        let q = SpherePoint::south_pole();
        let p = SpherePoint::north_pole();
        let f = LatticeField::constant(
            &mesh,
            q,
            BasingData::from_marked(&mesh, &[q, q]).unwrap(),
        )
        .unwrap();
        let g = LatticeField::constant(
            &mesh,
            p,
            BasingData::from_marked(&mesh, &[p, p]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            same_sector(&f, &g),
            Err(SectorError::IncomparableFields(_))
        ));
    }

    #[test]
    fn projective_target_is_refused() {
        let mesh = Arc::new(DomainMesh::build_icosphere(1, &[], None).unwrap());
        let f = LatticeField::constant(&mesh, SpherePoint::south_pole(), BasingData::empty())
            .unwrap();
        assert!(matches!(
            same_sector_on(&f, &f, TargetModel::RealProjectivePlane),
            Err(SectorError::TargetNotSimplyConnected)
        ));
    }

    #[test]
    fn perturbation_stability() {
        let h = CutoffFunction::smoothstep();
        let cfg = SweepMeshConfig {
            base_subdivisions: 2,
            ..SweepMeshConfig::default()
        };
        let f = family_field(0.1, &h, &cfg).unwrap();
        let s0 = sector_of(&f).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let g = f.perturbed_tangent(0.01, &mut rng);
            assert_eq!(sector_of(&g).unwrap(), s0);
        }
    }
}
