//! Rational maps of the Riemann sphere: exact finite-energy lumps.
//!
//! A degree-n rational map saturates the Bogomolny bound, so it globally
//! minimizes energy in its free homotopy class. Adding basing constraints
//! cuts out the moduli of based lumps; at degree 1 that moduli is either a
//! two-complex-parameter family of Möbius maps (distinct basing values) or
//! empty (coincident basing values — a bijection of the sphere cannot take
//! one value twice). [`solve_based_mobius`] decides which.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

use crate::energy::{lattice_energy, EnergyError, EnergyReport};
use crate::field::{BasingData, FieldError, LatticeField};
use crate::geometry::{DomainMesh, ExtComplex, GeometryError, Skeleton, SpherePoint};

#[derive(Debug, Error)]
pub enum RatMapError {
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("numerator and denominator share a root (resultant magnitude {0:.3e})")]
    CommonRoot(f64),
    #[error("map is indeterminate (0/0) at z = {0}")]
    IndeterminateValue(String),
    #[error("base points coincide; the based-Möbius problem needs p1 ≠ p2")]
    CoincidentBasePoints,
    #[error("family parameter λ must be nonzero")]
    ZeroLambda,
    #[error("degree unresolved after refinement: raw {raw:.4}; {hint}")]
    UnderResolved { raw: f64, hint: String },
    #[error(
        "sampled energy {energy:.6} differs from π·{degree} = {expected:.6} by more than {tolerance:.1}%"
    )]
    EnergyMismatch {
        energy: f64,
        degree: i64,
        expected: f64,
        tolerance: f64,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

// ---------------------------------------------------------------------------
// RationalMap
// ---------------------------------------------------------------------------

/// `W(z) = p(z)/q(z)` with coprime polynomials, coefficients in ascending
/// order. The degree is `max(deg p, deg q)`.
#[derive(Debug, Clone, Serialize)]
pub struct RationalMap {
    #[serde(serialize_with = "serialize_coeffs")]
    numerator: Vec<Complex64>,
    #[serde(serialize_with = "serialize_coeffs")]
    denominator: Vec<Complex64>,
}

fn serialize_coeffs<S: serde::Serializer>(
    coeffs: &[Complex64],
    s: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(coeffs.len()))?;
    for c in coeffs {
        seq.serialize_element(&[c.re, c.im])?;
    }
    seq.end()
}

impl RationalMap {
    /// Validates, trims trailing zero coefficients, scales so the largest
    /// coefficient has unit magnitude, and rejects shared roots.
    pub fn new(
        numerator: Vec<Complex64>,
        denominator: Vec<Complex64>,
    ) -> Result<Self, RatMapError> {
        let mut p = trim(numerator);
        let mut q = trim(denominator);
        if p.is_empty() && q.is_empty() {
            return Err(RatMapError::InvalidCoefficients(
                "numerator and denominator are both zero".into(),
            ));
        }
        if q.is_empty() {
            return Err(RatMapError::InvalidCoefficients(
                "denominator is identically zero".into(),
            ));
        }
        if p.is_empty() {
            // the constant 0 map
            return Ok(Self {
                numerator: vec![Complex64::new(0.0, 0.0)],
                denominator: vec![Complex64::new(1.0, 0.0)],
            });
        }
        let scale = p
            .iter()
            .chain(q.iter())
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
        for c in p.iter_mut().chain(q.iter_mut()) {
            *c /= scale;
        }
        let res = resultant_magnitude(&p, &q);
        if res <= 1e-12 {
            return Err(RatMapError::CommonRoot(res));
        }
        Ok(Self {
            numerator: p,
            denominator: q,
        })
    }

    /// `W(z) = z`.
    pub fn identity() -> Self {
        Self::new(
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0)],
        )
        .expect("identity is a valid map")
    }

    /// `W(z) = z^k`.
    pub fn power(k: u32) -> Self {
        let mut num = vec![Complex64::new(0.0, 0.0); k as usize + 1];
        num[k as usize] = Complex64::new(1.0, 0.0);
        Self::new(num, vec![Complex64::new(1.0, 0.0)]).expect("z^k is a valid map")
    }

    pub fn numerator(&self) -> &[Complex64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[Complex64] {
        &self.denominator
    }

    pub fn degree(&self) -> usize {
        (self.numerator.len() - 1).max(self.denominator.len() - 1)
    }

    /// Evaluates on the extended plane: poles give ∞ and `z = ∞` is decided
    /// by the leading coefficients. Large arguments route through `u = 1/z`
    /// for stability.
    pub fn eval(&self, z: ExtComplex) -> Result<ExtComplex, RatMapError> {
        let dp = self.numerator.len() - 1;
        let dq = self.denominator.len() - 1;
        match z {
            ExtComplex::Infinity => Ok(self.value_at_infinity()),
            ExtComplex::Finite(z) => {
                if z.norm() <= 1.0 {
                    let pv = horner(&self.numerator, z);
                    let qv = horner(&self.denominator, z);
                    ratio(pv, qv, z)
                } else {
                    // W(z) = z^(dp-dq) · p_rev(1/z) / q_rev(1/z)
                    let u = z.inv();
                    let pv = horner_rev(&self.numerator, u);
                    let qv = horner_rev(&self.denominator, u);
                    let base = ratio(pv, qv, z)?;
                    let shift = dp as i32 - dq as i32;
                    Ok(match base {
                        ExtComplex::Infinity => ExtComplex::Infinity,
                        ExtComplex::Finite(b) => {
                            let log_mag = shift as f64 * z.norm().ln();
                            if log_mag > 700.0 {
                                ExtComplex::Infinity
                            } else if log_mag < -700.0 {
                                ExtComplex::Finite(Complex64::new(0.0, 0.0))
                            } else {
                                ExtComplex::Finite(b * z.powi(shift))
                            }
                        }
                    })
                }
            }
        }
    }

    fn value_at_infinity(&self) -> ExtComplex {
        let dp = self.numerator.len() - 1;
        let dq = self.denominator.len() - 1;
        match dp.cmp(&dq) {
            std::cmp::Ordering::Greater => ExtComplex::Infinity,
            std::cmp::Ordering::Less => ExtComplex::Finite(Complex64::new(0.0, 0.0)),
            std::cmp::Ordering::Equal => {
                ExtComplex::Finite(self.numerator[dp] / self.denominator[dq])
            }
        }
    }

    /// Sampling closure for [`LatticeField::from_stereo_map`]. The coprime
    /// invariant rules out indeterminate values, so evaluation cannot fail.
    pub fn sampler(&self) -> impl Fn(ExtComplex) -> ExtComplex + '_ {
        move |z| self.eval(z).expect("coprime rational map is everywhere defined")
    }
}

fn trim(mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
    let top = coeffs.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    let cut = top * 1e-14;
    while let Some(last) = coeffs.last() {
        if last.norm() <= cut {
            coeffs.pop();
        } else {
            break;
        }
    }
    coeffs
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Evaluates the degree-reversed polynomial `z^d · p(1/z)` at `u = 1/z`.
fn horner_rev(coeffs: &[Complex64], u: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter() {
        acc = acc * u + c;
    }
    acc
}

fn ratio(p: Complex64, q: Complex64, at: Complex64) -> Result<ExtComplex, RatMapError> {
    let pn = p.norm();
    let qn = q.norm();
    if qn == 0.0 {
        if pn == 0.0 {
            return Err(RatMapError::IndeterminateValue(format!("{at}")));
        }
        return Ok(ExtComplex::Infinity);
    }
    Ok(ExtComplex::Finite(p / q))
}

/// |det of the Sylvester matrix| for polynomials scaled to unit max
/// coefficient; zero iff the polynomials share a root.
fn resultant_magnitude(p: &[Complex64], q: &[Complex64]) -> f64 {
    let dp = p.len() - 1;
    let dq = q.len() - 1;
    if dp == 0 || dq == 0 {
        // constants share no roots
        return 1.0;
    }
    let n = dp + dq;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    // dq rows of p's coefficients (descending), then dp rows of q's
    for r in 0..dq {
        for (k, c) in p.iter().rev().enumerate() {
            m[r][r + k] = *c;
        }
    }
    for r in 0..dp {
        for (k, c) in q.iter().rev().enumerate() {
            m[dq + r][r + k] = *c;
        }
    }
    complex_det_magnitude(m)
}

fn complex_det_magnitude(mut m: Vec<Vec<Complex64>>) -> f64 {
    let n = m.len();
    let mut det_mag = 1.0_f64;
    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, m[r][col].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty column");
        if pivot_mag == 0.0 {
            return 0.0;
        }
        m.swap(col, pivot_row);
        det_mag *= pivot_mag;
        let pivot = m[col][col];
        for r in (col + 1)..n {
            let factor = m[r][col] / pivot;
            for k in col..n {
                let sub = factor * m[col][k];
                m[r][k] -= sub;
            }
        }
    }
    det_mag
}

// ---------------------------------------------------------------------------
// Möbius transformations and the based degree-1 problem
// ---------------------------------------------------------------------------

/// `(az + b)/(cz + d)` as a projective 2×2 matrix.
#[derive(Debug, Clone, Copy)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// Scaling `z ↦ λz`.
    pub fn dilation(lambda: Complex64) -> Self {
        Self {
            a: lambda,
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// The map sending `z1 ↦ 0` and `z2 ↦ ∞` (requires `z1 ≠ z2`).
    pub fn sending_to_zero_inf(z1: ExtComplex, z2: ExtComplex) -> Result<Self, RatMapError> {
        if z1.chordal_distance(&z2) < 1e-12 {
            return Err(RatMapError::CoincidentBasePoints);
        }
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Ok(match (z1, z2) {
            (ExtComplex::Finite(a), ExtComplex::Finite(b)) => Self {
                a: one,
                b: -a,
                c: one,
                d: -b,
            },
            (ExtComplex::Infinity, ExtComplex::Finite(b)) => Self {
                a: zero,
                b: one,
                c: one,
                d: -b,
            },
            (ExtComplex::Finite(a), ExtComplex::Infinity) => Self {
                a: one,
                b: -a,
                c: zero,
                d: one,
            },
            (ExtComplex::Infinity, ExtComplex::Infinity) => {
                unreachable!("coincident points already rejected")
            }
        }
        .normalized())
    }

    /// Scales so `ad − bc = 1`.
    pub fn normalized(self) -> Self {
        let det = self.a * self.d - self.b * self.c;
        let s = det.sqrt().inv();
        Self {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
            d: self.d * s,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Matrix product: `(self ∘ other)(z) = self(other(z))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn apply(&self, z: ExtComplex) -> ExtComplex {
        match z {
            ExtComplex::Infinity => {
                if self.c.norm() == 0.0 {
                    ExtComplex::Infinity
                } else {
                    ExtComplex::Finite(self.a / self.c)
                }
            }
            ExtComplex::Finite(z) => {
                let num = self.a * z + self.b;
                let den = self.c * z + self.d;
                if den.norm() == 0.0 {
                    ExtComplex::Infinity
                } else {
                    ExtComplex::Finite(num / den)
                }
            }
        }
    }

    pub fn to_rational_map(&self) -> Result<RationalMap, RatMapError> {
        RationalMap::new(vec![self.b, self.a], vec![self.d, self.c])
    }
}

/// Solution set of the degree-1 based problem `W(p1) = q1`, `W(p2) = q2`.
#[derive(Debug, Clone)]
pub enum BasedMobius {
    /// Coincident basing values: no degree-1 holomorphic map exists, since a
    /// Möbius map takes each value exactly once.
    Empty,
    /// Distinct basing values: the solutions are `T⁻¹ ∘ D_λ ∘ S`, a family
    /// over λ ∈ ℂ \ {0} (two complex parameters counting the overall
    /// coefficient scale).
    Family(MobiusFamily),
}

impl BasedMobius {
    pub fn is_empty(&self) -> bool {
        matches!(self, BasedMobius::Empty)
    }

    pub fn family(&self) -> Option<&MobiusFamily> {
        match self {
            BasedMobius::Empty => None,
            BasedMobius::Family(f) => Some(f),
        }
    }
}

/// The solution family of a solvable based degree-1 problem.
#[derive(Debug, Clone)]
pub struct MobiusFamily {
    /// Sends `p1 ↦ 0`, `p2 ↦ ∞`.
    pub source: Mobius,
    /// Sends `0 ↦ q1`, `∞ ↦ q2`.
    pub target_inverse: Mobius,
}

impl MobiusFamily {
    /// The λ = 1 member.
    pub fn representative(&self) -> RationalMap {
        self.member(Complex64::new(1.0, 0.0))
            .expect("λ = 1 is a valid member")
    }

    pub fn member(&self, lambda: Complex64) -> Result<RationalMap, RatMapError> {
        if lambda.norm() == 0.0 {
            return Err(RatMapError::ZeroLambda);
        }
        self.target_inverse
            .compose(&Mobius::dilation(lambda))
            .compose(&self.source)
            .to_rational_map()
    }

    /// Human-readable parametrization of the family.
    pub fn descriptor(&self) -> String {
        let s = &self.source;
        let t = &self.target_inverse;
        format!(
            "W_λ(z) = T⁻¹(λ·S(z)), λ ∈ ℂ\\{{0}}, with S(z) = ({a}·z + {b})/({c}·z + {d}) and \
             T⁻¹(u) = ({e}·u + {f})/({g}·u + {h})",
            a = fmt_c(s.a),
            b = fmt_c(s.b),
            c = fmt_c(s.c),
            d = fmt_c(s.d),
            e = fmt_c(t.a),
            f = fmt_c(t.b),
            g = fmt_c(t.c),
            h = fmt_c(t.d),
        )
    }
}

fn fmt_c(c: Complex64) -> String {
    if c.im.abs() < 1e-12 {
        format!("{:.4}", c.re)
    } else {
        format!("({:.4}{:+.4}i)", c.re, c.im)
    }
}

/// Decides the degree-1 based problem. Returns the (possibly empty) solution
/// set; emptiness is an answer, not an error.
pub fn solve_based_mobius(
    p1: ExtComplex,
    p2: ExtComplex,
    q1: ExtComplex,
    q2: ExtComplex,
) -> Result<BasedMobius, RatMapError> {
    if p1.chordal_distance(&p2) < 1e-12 {
        return Err(RatMapError::CoincidentBasePoints);
    }
    if q1.chordal_distance(&q2) < 1e-12 {
        return Ok(BasedMobius::Empty);
    }
    let source = Mobius::sending_to_zero_inf(p1, p2)?;
    let target_inverse = Mobius::sending_to_zero_inf(q1, q2)?.inverse();
    Ok(BasedMobius::Family(MobiusFamily {
        source,
        target_inverse,
    }))
}

// ---------------------------------------------------------------------------
// Sampled energy check
// ---------------------------------------------------------------------------

/// Mesh settings for [`energy_check`].
#[derive(Debug, Clone)]
pub struct RatMeshConfig {
    pub base_subdivisions: usize,
    /// Refine triangles whose image diameter on the target exceeds this
    /// chordal length.
    pub image_edge_target: f64,
    pub max_refine_rounds: usize,
    /// Accepted relative deviation of E from π·degree.
    pub energy_tolerance: f64,
}

impl Default for RatMeshConfig {
    fn default() -> Self {
        Self {
            base_subdivisions: 4,
            image_edge_target: 0.055,
            max_refine_rounds: 10,
            energy_tolerance: 0.005,
        }
    }
}

/// Samples the map onto a mesh adaptively refined where the image moves
/// fastest (near zeros and poles), then verifies Bogomolny saturation:
/// degree equals the algebraic degree and `E` is within the tolerance of
/// `π·degree`.
pub fn energy_check(
    map: &RationalMap,
    cfg: &RatMeshConfig,
) -> Result<(EnergyReport, Arc<DomainMesh>), RatMapError> {
    let mesh = Arc::new(adaptive_mesh(map, cfg)?);
    let field = LatticeField::from_stereo_map(&mesh, map.sampler(), BasingData::empty())?;
    let report = lattice_energy(&field)?;
    let expected_degree = map.degree() as i64;
    if !report.resolved || report.degree != expected_degree {
        return Err(RatMapError::UnderResolved {
            raw: report.degree_raw,
            hint: format!(
                "increase base_subdivisions (now {}) or lower image_edge_target (now {})",
                cfg.base_subdivisions, cfg.image_edge_target
            ),
        });
    }
    let expected = PI * expected_degree.unsigned_abs() as f64;
    if expected > 0.0 {
        let rel = (report.energy - expected).abs() / expected;
        if rel > cfg.energy_tolerance {
            return Err(RatMapError::EnergyMismatch {
                energy: report.energy,
                degree: report.degree,
                expected,
                tolerance: cfg.energy_tolerance * 100.0,
            });
        }
    }
    Ok((report, mesh))
}

fn adaptive_mesh(map: &RationalMap, cfg: &RatMeshConfig) -> Result<DomainMesh, RatMapError> {
    let mut skel = Skeleton::icosahedron();
    for _ in 0..cfg.base_subdivisions {
        skel.subdivide_all();
    }
    for _ in 0..cfg.max_refine_rounds {
        let images: Vec<SpherePoint> = skel
            .vertices
            .iter()
            .map(|v| map.eval(v.to_ext()).map(|w| w.to_sphere()))
            .collect::<Result<_, _>>()?;
        let mut marked: Vec<(usize, [usize; 3])> = Vec::new();
        for (t, tri) in skel.triangles.iter().enumerate() {
            let d01 = images[tri[0]].chordal_distance(&images[tri[1]]);
            let d12 = images[tri[1]].chordal_distance(&images[tri[2]]);
            let d20 = images[tri[2]].chordal_distance(&images[tri[0]]);
            if d01.max(d12).max(d20) > cfg.image_edge_target {
                marked.push((t, *tri));
            }
        }
        if marked.is_empty() {
            break;
        }
        let mut state = skel.start_refinement()?;
        for (t, tri) in marked {
            // propagation may have split this slot already
            if skel.triangles[t] == tri {
                skel.bisect_in(&mut state, t)?;
            }
        }
    }
    Ok(DomainMesh::finalize(skel.vertices, skel.triangles, &[])?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluation_basics() {
        let idm = RationalMap::identity();
        let v = idm.eval(ExtComplex::new(2.0, 0.0)).unwrap();
        assert!(v.chordal_distance(&ExtComplex::new(2.0, 0.0)) < 1e-15);

        // 1/z at 0 is ∞
        let inv = RationalMap::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(inv.eval(ExtComplex::ZERO).unwrap().is_infinite());
        assert!(inv
            .eval(ExtComplex::Infinity)
            .unwrap()
            .chordal_distance(&ExtComplex::ZERO)
            < 1e-15);

        // inner branch of the shrinking family: ε²/z at z = ε gives ε
        let eps = 0.05;
        let core =
            RationalMap::new(vec![c(eps * eps, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let v = core.eval(ExtComplex::new(eps, 0.0)).unwrap();
        assert!(v.chordal_distance(&ExtComplex::new(eps, 0.0)) < 1e-12);
    }

    #[test]
    fn large_argument_evaluation_is_stable() {
        let m = RationalMap::power(3);
        assert!(m.eval(ExtComplex::new(1e200, 0.0)).unwrap().is_infinite());
        let n = RationalMap::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        let v = n.eval(ExtComplex::new(1e200, 0.0)).unwrap();
        assert!(v.chordal_distance(&ExtComplex::ZERO) < 1e-12);
    }

    #[test]
    fn common_root_rejected() {
        // (z-1)/(z-1)
        let err = RationalMap::new(vec![c(-1.0, 0.0), c(1.0, 0.0)], vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(err, Err(RatMapError::CommonRoot(_))));
        // (z²-1)/(z-1)
        let err = RationalMap::new(
            vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(-1.0, 0.0), c(1.0, 0.0)],
        );
        assert!(matches!(err, Err(RatMapError::CommonRoot(_))));
    }

    #[test]
    fn coincident_basing_is_empty() {
        let p1 = ExtComplex::new(1.0, 0.0);
        let p2 = ExtComplex::new(-1.0, 0.0);
        let sol = solve_based_mobius(p1, p2, ExtComplex::ZERO, ExtComplex::ZERO).unwrap();
        assert!(sol.is_empty());
    }

    #[test]
    fn distinct_basing_representative_zero_inf() {
        let p1 = ExtComplex::new(1.0, 0.0);
        let p2 = ExtComplex::new(-1.0, 0.0);
        let sol = solve_based_mobius(p1, p2, ExtComplex::ZERO, ExtComplex::Infinity).unwrap();
        let rep = sol.family().unwrap().representative();
        // residuals at the base points
        assert!(rep.eval(p1).unwrap().chordal_distance(&ExtComplex::ZERO) < 1e-12);
        assert!(rep.eval(p2).unwrap().is_infinite());
        // matches (z-1)/(z+1) up to scale: check two more points
        let at0 = rep.eval(ExtComplex::ZERO).unwrap();
        assert!(at0.chordal_distance(&ExtComplex::new(-1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn distinct_basing_representative_identity() {
        let p1 = ExtComplex::new(1.0, 0.0);
        let p2 = ExtComplex::new(-1.0, 0.0);
        let sol = solve_based_mobius(
            p1,
            p2,
            ExtComplex::new(1.0, 0.0),
            ExtComplex::new(-1.0, 0.0),
        )
        .unwrap();
        let rep = sol.family().unwrap().representative();
        for z in [
            ExtComplex::ZERO,
            ExtComplex::new(0.3, -0.2),
            ExtComplex::Infinity,
            ExtComplex::new(5.0, 1.0),
        ] {
            assert!(
                rep.eval(z).unwrap().chordal_distance(&z) < 1e-12,
                "representative should be the identity"
            );
        }
    }

    #[test]
    fn family_members_all_satisfy_basing() {
        let p1 = ExtComplex::new(1.0, 0.0);
        let p2 = ExtComplex::new(-1.0, 0.0);
        let q1 = ExtComplex::new(0.3, 0.7);
        let q2 = ExtComplex::Infinity;
        let sol = solve_based_mobius(p1, p2, q1, q2).unwrap();
        let fam = sol.family().unwrap();
        for lambda in [c(1.0, 0.0), c(0.5, 0.0), c(0.0, 2.0), c(-3.0, 1.0)] {
            let m = fam.member(lambda).unwrap();
            assert!(m.eval(p1).unwrap().chordal_distance(&q1) < 1e-12);
            assert!(m.eval(p2).unwrap().chordal_distance(&q2) < 1e-12);
            assert_eq!(m.degree(), 1);
        }
        assert!(fam.member(c(0.0, 0.0)).is_err());
        assert!(!fam.descriptor().is_empty());
    }

    #[test]
    fn identity_energy_check() {
        let cfg = RatMeshConfig {
            base_subdivisions: 4,
            image_edge_target: 0.07,
            ..RatMeshConfig::default()
        };
        let (report, _) = energy_check(&RationalMap::identity(), &cfg).unwrap();
        assert_eq!(report.degree, 1);
        let rel = (report.energy - PI).abs() / PI;
        assert!(rel < 0.005, "E = {}, rel = {rel}", report.energy);
    }

    #[test]
    fn based_mobius_energy_check() {
        let sol = solve_based_mobius(
            ExtComplex::new(1.0, 0.0),
            ExtComplex::new(-1.0, 0.0),
            ExtComplex::ZERO,
            ExtComplex::Infinity,
        )
        .unwrap();
        let rep = sol.family().unwrap().representative();
        let cfg = RatMeshConfig {
            base_subdivisions: 4,
            image_edge_target: 0.07,
            ..RatMeshConfig::default()
        };
        let (report, _) = energy_check(&rep, &cfg).unwrap();
        assert_eq!(report.degree, 1);
        assert!((report.energy - PI).abs() / PI < 0.005);
    }
}
