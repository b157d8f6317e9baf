//! Energy descent within a fixed based sector.
//!
//! Projected gradient descent with backtracking: each step moves vertex
//! values in their tangent planes, renormalizes onto the sphere, and pins
//! the basing vertices exactly. Descent is monotone by construction.
//!
//! Two outcomes matter. With distinct basing values the sector contains an
//! exact rational lump and the flow converges to it. With coincident basing
//! values at degree 1 the sector contains no minimizer: the flow drives a
//! bubble of energy π below the mesh scale instead. The collapse this crate
//! reports is numerical evidence of non-attainment, not a proof — once the
//! bubble is smaller than a few triangles the discrete field unwinds, which
//! a continuum field cannot do.

use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

use crate::energy::{lattice_energy, EnergyError};
use crate::field::{FieldError, LatticeField};
use crate::geometry::{dot3, DomainMesh, SpherePoint};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("initial field violates its basing (residual {0:.3e})")]
    NotBased(f64),
    #[error("line search failed at iteration {iteration}: no step decreases E = {energy:.9}")]
    LineSearchFailure { iteration: usize, energy: f64 },
    #[error("field has no energy concentration to measure")]
    NoLump,
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowOutcome {
    /// Gradient norm fell below the tolerance.
    Converged,
    /// The energy bubble shrank past the mesh scale while its peak density
    /// kept growing.
    Collapsed,
    /// Iteration budget exhausted first.
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct FlowParams {
    pub max_iter: usize,
    /// Convergence threshold on the Euclidean norm of the projected gradient.
    pub g_tol: f64,
    /// Collapse fires when the lump width drops below this multiple of the
    /// local edge length at the density peak.
    pub collapse_edge_factor: f64,
    /// Diagnostics (degree, width, density) are sampled every this many
    /// accepted steps.
    pub log_every: usize,
    pub initial_step: f64,
    /// Write a field snapshot into the trace every this many accepted steps
    /// (0 disables).
    pub snapshot_every: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            g_tol: 1e-3,
            collapse_edge_factor: 3.0,
            log_every: 10,
            initial_step: 0.5,
            snapshot_every: 0,
        }
    }
}

/// One logged diagnostic sample along a descent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowStep {
    pub iteration: usize,
    pub energy: f64,
    pub degree_raw: f64,
    pub lump_width: f64,
    pub max_density: f64,
}

/// Full record of one descent run.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub steps: Vec<FlowStep>,
    pub outcome: FlowOutcome,
    pub final_field: LatticeField,
    pub iterations: usize,
    pub final_energy: f64,
    pub snapshots: Vec<(usize, LatticeField)>,
}

impl FlowTrace {
    /// Writes the logged steps as CSV.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "iteration,E,degreeRaw,lumpWidth,maxDensity")?;
        for s in &self.steps {
            writeln!(
                w,
                "{},{},{},{},{}",
                s.iteration, s.energy, s.degree_raw, s.lump_width, s.max_density
            )?;
        }
        Ok(())
    }
}

/// Projected gradient descent with backtracking line search.
///
/// Terminates `Converged` when the gradient norm drops below `g_tol`,
/// `Collapsed` when the lump width crosses the mesh scale with the peak
/// density still growing, and `MaxIterations` otherwise. Basing vertices
/// never move, so the basing holds exactly along the whole trace.
pub fn descend(initial: &LatticeField, params: &FlowParams) -> Result<FlowTrace, FlowError> {
    let report = initial.is_based();
    if !report.ok {
        return Err(FlowError::NotBased(report.max_residual));
    }
    let mesh = Arc::clone(initial.mesh());
    let mut field = initial.clone();
    let mut energy = edge_energy(&mesh, field.values());

    let mut steps = Vec::new();
    let mut snapshots = Vec::new();
    let log = |field: &LatticeField, energy: f64, iter: usize, steps: &mut Vec<FlowStep>| {
        let diag = diagnostics(field, energy, iter);
        steps.push(diag);
        diag
    };

    let first = log(&field, energy, 0, &mut steps);
    let peak_reference = first.max_density;

    let mut alpha = params.initial_step;
    let mut outcome = FlowOutcome::MaxIterations;
    let mut iterations = params.max_iter;

    for iter in 1..=params.max_iter {
        let grad = crate::energy::lattice_energy_gradient(&field);
        let gnorm2: f64 = grad.iter().map(|g| dot3(*g, *g)).sum();
        let gnorm = gnorm2.sqrt();
        if gnorm < params.g_tol {
            outcome = FlowOutcome::Converged;
            iterations = iter - 1;
            log(&field, energy, iter - 1, &mut steps);
            break;
        }

        // backtracking with a gently growing trial step
        alpha = (alpha * 1.5).min(4.0);
        let mut accepted = false;
        for _ in 0..60 {
            let trial = step_values(field.values(), &grad, alpha);
            let trial_energy = edge_energy(&mesh, &trial);
            if trial_energy <= energy - 1e-4 * alpha * gnorm2 {
                field = field.with_values(trial)?;
                energy = trial_energy;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(FlowError::LineSearchFailure {
                iteration: iter,
                energy,
            });
        }

        if params.snapshot_every > 0 && iter % params.snapshot_every == 0 {
            snapshots.push((iter, field.clone()));
        }

        if iter % params.log_every == 0 {
            let diag = log(&field, energy, iter, &mut steps);
            // collapse: width below a few local edges with the peak density
            // still climbing past its starting level
            if diag.lump_width.is_finite() && diag.max_density > 2.0 * peak_reference {
                let peak_tri = peak_density_triangle(&field);
                let local_edge = mesh.triangle_edge_scale(peak_tri);
                if diag.lump_width < params.collapse_edge_factor * local_edge {
                    outcome = FlowOutcome::Collapsed;
                    iterations = iter;
                    break;
                }
            }
        }
    }

    if outcome == FlowOutcome::MaxIterations {
        log(&field, energy, params.max_iter, &mut steps);
    }

    Ok(FlowTrace {
        steps,
        outcome,
        final_energy: energy,
        final_field: field,
        iterations,
        snapshots,
    })
}

/// Energy-weighted angular second moment of the energy distribution: the
/// "size" of the lump on the domain sphere.
pub fn lump_width(field: &LatticeField) -> Result<f64, FlowError> {
    let report = lattice_energy(field)?;
    width_from_density(field.mesh(), &report.per_triangle_density).ok_or(FlowError::NoLump)
}

/// Degree history of a trace: raw degree per logged step plus the first step
/// at which it strays more than 0.01 from the initial integer. For collapse
/// runs that marks loss of resolution, never a genuine jump before it.
#[derive(Debug, Clone, Serialize)]
pub struct DegreeHistory {
    pub samples: Vec<(usize, f64)>,
    pub first_flagged: Option<usize>,
}

pub fn monitor_degree(trace: &FlowTrace) -> DegreeHistory {
    let initial = trace
        .steps
        .first()
        .map(|s| s.degree_raw.round())
        .unwrap_or(0.0);
    let mut first_flagged = None;
    let mut samples = Vec::with_capacity(trace.steps.len());
    for s in &trace.steps {
        samples.push((s.iteration, s.degree_raw));
        if first_flagged.is_none() && (s.degree_raw - initial).abs() > 0.01 {
            first_flagged = Some(s.iteration);
        }
    }
    DegreeHistory {
        samples,
        first_flagged,
    }
}

// ---------------------------------------------------------------------------
// internals
// ---------------------------------------------------------------------------

/// Cotangent edge-sum energy; the same quantity lattice_energy reports, in a
/// form cheap enough for line-search trials.
fn edge_energy(mesh: &DomainMesh, values: &[SpherePoint]) -> f64 {
    let mut e = 0.0;
    for edge in mesh.edges() {
        let a = values[edge.a].coords();
        let b = values[edge.b].coords();
        let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        e += edge.cotan_weight * dot3(d, d);
    }
    e / 8.0
}

fn step_values(values: &[SpherePoint], grad: &[[f64; 3]], alpha: f64) -> Vec<SpherePoint> {
    values
        .iter()
        .zip(grad)
        .map(|(v, g)| {
            if g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0 {
                *v
            } else {
                let n = v.coords();
                SpherePoint::normalized([
                    n[0] - alpha * g[0],
                    n[1] - alpha * g[1],
                    n[2] - alpha * g[2],
                ])
            }
        })
        .collect()
}

fn diagnostics(field: &LatticeField, energy: f64, iteration: usize) -> FlowStep {
    let mesh = field.mesh();
    let values = field.values();
    let mut density = Vec::with_capacity(mesh.triangle_count());
    for (tri, cot) in mesh.triangles().iter().zip(mesh.corner_cotans()) {
        let n = [
            values[tri[0]].coords(),
            values[tri[1]].coords(),
            values[tri[2]].coords(),
        ];
        let mut d = 0.0;
        for k in 0..3 {
            let a = n[(k + 1) % 3];
            let b = n[(k + 2) % 3];
            let dx = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
            d += cot[k] * dot3(dx, dx);
        }
        density.push((d / 16.0).max(0.0));
    }
    let mut degree = 0.0;
    for tri in mesh.triangles() {
        degree += crate::energy::signed_solid_angle(
            values[tri[0]].coords(),
            values[tri[1]].coords(),
            values[tri[2]].coords(),
        );
    }
    degree /= 4.0 * std::f64::consts::PI;

    let width = width_from_density(mesh, &density).unwrap_or(f64::NAN);
    let max_density = density
        .iter()
        .zip(mesh.triangle_area_weights())
        .map(|(d, a)| d / a)
        .fold(0.0_f64, f64::max);

    FlowStep {
        iteration,
        energy,
        degree_raw: degree,
        lump_width: width,
        max_density,
    }
}

fn peak_density_triangle(field: &LatticeField) -> usize {
    let mesh = field.mesh();
    let values = field.values();
    let mut best = (0usize, -1.0f64);
    for (t, (tri, cot)) in mesh
        .triangles()
        .iter()
        .zip(mesh.corner_cotans())
        .enumerate()
    {
        let n = [
            values[tri[0]].coords(),
            values[tri[1]].coords(),
            values[tri[2]].coords(),
        ];
        let mut d = 0.0;
        for k in 0..3 {
            let a = n[(k + 1) % 3];
            let b = n[(k + 2) % 3];
            let dx = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
            d += cot[k] * dot3(dx, dx);
        }
        let per_area = (d / 16.0).max(0.0) / mesh.triangle_area_weights()[t];
        if per_area > best.1 {
            best = (t, per_area);
        }
    }
    best.0
}

/// Width about the density-weighted center. Near-uniform densities have an
/// ill-defined Euclidean mean; fall back to the density peak as center.
fn width_from_density(mesh: &DomainMesh, density: &[f64]) -> Option<f64> {
    let total: f64 = density.iter().sum();
    if total < 1e-14 {
        return None;
    }
    let mut mean = [0.0f64; 3];
    let mut peak = (0usize, -1.0f64);
    for (t, &d) in density.iter().enumerate() {
        let c = mesh.triangle_centroid(t).coords();
        mean[0] += d * c[0];
        mean[1] += d * c[1];
        mean[2] += d * c[2];
        let per_area = d / mesh.triangle_area_weights()[t];
        if per_area > peak.1 {
            peak = (t, per_area);
        }
    }
    let mean_norm = dot3(mean, mean).sqrt() / total;
    let center = if mean_norm > 1e-6 {
        SpherePoint::normalized([mean[0], mean[1], mean[2]])
    } else {
        mesh.triangle_centroid(peak.0)
    };
    let mut second = 0.0;
    for (t, &d) in density.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let ang = mesh.triangle_centroid(t).geodesic_distance(&center);
        second += d * ang * ang;
    }
    Some((second / total).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{family_field, CutoffFunction, SweepMeshConfig};
    use crate::field::BasingData;
    use crate::geometry::ExtComplex;
    use crate::ratmaps::solve_based_mobius;

    fn based_mesh(subdiv: usize) -> Arc<DomainMesh> {
        let marked = [
            SpherePoint::new(1.0, 0.0, 0.0).unwrap(),
            SpherePoint::new(-1.0, 0.0, 0.0).unwrap(),
        ];
        Arc::new(DomainMesh::build_icosphere(subdiv, &marked, None).unwrap())
    }

    #[test]
    fn width_of_shrinking_family_grows_with_epsilon() {
        let h = CutoffFunction::smoothstep();
        let cfg = SweepMeshConfig {
            base_subdivisions: 2,
            ..SweepMeshConfig::default()
        };
        let mut last = 0.0;
        for eps in [0.05, 0.1, 0.2] {
            let f = family_field(eps, &h, &cfg).unwrap();
            let w = lump_width(&f).unwrap();
            assert!(w > last, "width {w} at ε={eps} not increasing");
            last = w;
        }
    }

    #[test]
    fn width_of_identity_is_order_one() {
        let mesh = Arc::new(DomainMesh::build_icosphere(3, &[], None).unwrap());
        let f = LatticeField::from_stereo_map(&mesh, crate::field::identity_map, BasingData::empty())
            .unwrap();
        let w = lump_width(&f).unwrap();
        assert!(w > 0.5 && w < 2.5, "identity width {w}");
    }

    #[test]
    fn zero_energy_field_has_no_lump() {
        let mesh = Arc::new(DomainMesh::build_icosphere(2, &[], None).unwrap());
        let f = LatticeField::constant(&mesh, SpherePoint::north_pole(), BasingData::empty())
            .unwrap();
        assert!(matches!(lump_width(&f), Err(FlowError::NoLump)));
    }

    #[test]
    fn exact_lump_converges_immediately() {
        // sampled Möbius lump: already critical up to discretization
        let mesh = based_mesh(4);
        let marked = mesh.marked_vertices();
        let p1 = mesh.vertices()[marked[0]].to_ext();
        let p2 = mesh.vertices()[marked[1]].to_ext();
        let sol = solve_based_mobius(p1, p2, ExtComplex::ZERO, ExtComplex::Infinity).unwrap();
        let rep = sol.family().unwrap().representative();
        let basing = BasingData::from_marked(
            &mesh,
            &[ExtComplex::ZERO.to_sphere(), ExtComplex::Infinity.to_sphere()],
        )
        .unwrap();
        let f = LatticeField::from_stereo_map(&mesh, rep.sampler(), basing).unwrap();

        let params = FlowParams {
            g_tol: 0.2,
            max_iter: 50,
            ..FlowParams::default()
        };
        let e0 = lattice_energy(&f).unwrap().energy;
        let trace = descend(&f, &params).unwrap();
        assert_eq!(trace.outcome, FlowOutcome::Converged);
        assert!(trace.iterations <= 5, "took {} iterations", trace.iterations);
        assert!((trace.final_energy - e0).abs() < 1e-8);
    }

    #[test]
    fn descent_is_monotone_and_preserves_basing() {
        let mesh = based_mesh(3);
        let q = [ExtComplex::ZERO.to_sphere(), ExtComplex::Infinity.to_sphere()];
        let basing = BasingData::from_marked(&mesh, &q).unwrap();
        let marked = mesh.marked_vertices();
        let p1 = mesh.vertices()[marked[0]].to_ext();
        let p2 = mesh.vertices()[marked[1]].to_ext();
        let sol = solve_based_mobius(p1, p2, ExtComplex::ZERO, ExtComplex::Infinity).unwrap();
        let rep = sol.family().unwrap().representative();
        let f = LatticeField::from_stereo_map(&mesh, rep.sampler(), basing).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(17);
        let f: LatticeField = f.perturbed_tangent(0.25, &mut rng);

        let params = FlowParams {
            g_tol: 5e-3,
            max_iter: 20_000,
            log_every: 5,
            ..FlowParams::default()
        };
        let trace = descend(&f, &params).unwrap();
        for pair in trace.steps.windows(2) {
            assert!(
                pair[1].energy <= pair[0].energy + 1e-12,
                "energy increased between logged steps"
            );
        }
        assert!(trace.final_field.is_based().ok);
        for v in trace.final_field.values() {
            let [x, y, z] = v.coords();
            assert!(((x * x + y * y + z * z).sqrt() - 1.0).abs() < 1e-10);
        }
    }
}
