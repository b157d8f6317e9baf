//! Radial profiles for rotationally equivariant fields.
//!
//! A profile `f: [0, ∞) → [0, ∞]` together with an integer winding `m`
//! defines the hedgehog map `W(z) = f(|z|) · (z/|z|)^m`. Profiles carry their
//! smooth-piece breakpoints so quadrature can integrate piece by piece, and a
//! tail mode describing `f` beyond the last breakpoint.

use std::sync::Arc;

/// Behavior of a profile beyond its last breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `f(r) = f(r_max)` for `r ≥ r_max`.
    Constant,
    /// The closures stay valid on `[r_max, ∞)`; the radial energy integral
    /// over the tail is evaluated under the inversion `r ↦ 1/r`.
    Extended,
}

/// A piecewise-C¹ radial profile with an explicit derivative.
#[derive(Clone)]
pub struct RadialProfile {
    breakpoints: Vec<f64>,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    tail: Tail,
}

impl std::fmt::Debug for RadialProfile {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("RadialProfile")
            .field("breakpoints", &self.breakpoints)
            .field("tail", &self.tail)
            .finish()
    }
}

impl RadialProfile {
    /// `breakpoints` must be strictly increasing and positive; the smooth
    /// pieces are `[0, b₁], [b₁, b₂], …, [b_{n-1}, b_n]`.
    pub fn new(
        breakpoints: Vec<f64>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tail: Tail,
    ) -> Self {
        assert!(!breakpoints.is_empty(), "profile needs at least one breakpoint");
        assert!(
            breakpoints.windows(2).all(|w| w[0] < w[1]) && breakpoints[0] > 0.0,
            "breakpoints must be positive and strictly increasing"
        );
        Self {
            breakpoints,
            f: Arc::new(f),
            df: Arc::new(df),
            tail,
        }
    }

    /// `f(r) = r^k` for integer `k ≥ 1`; `W = f(|z|)(z/|z|)^k` is then the
    /// power map `z^k`.
    pub fn power(k: u32) -> Self {
        assert!(k >= 1);
        Self::new(
            vec![1.0],
            move |r| r.powi(k as i32),
            move |r| k as f64 * r.powi(k as i32 - 1),
            Tail::Extended,
        )
    }

    /// The constant profile `f ≡ v`.
    pub fn constant(v: f64) -> Self {
        Self::new(vec![1.0], move |_| v, |_| 0.0, Tail::Constant)
    }

    pub fn value(&self, r: f64) -> f64 {
        match self.tail {
            Tail::Constant if r >= self.r_max() => (self.f)(self.r_max()),
            _ => (self.f)(r),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self.tail {
            Tail::Constant if r >= self.r_max() => 0.0,
            _ => (self.df)(r),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn r_max(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Limit class of `f` at `r → ∞`, used when a mesh vertex sits exactly at
    /// the chart pole.
    pub fn limit_at_infinity(&self) -> ProfileLimit {
        let v = match self.tail {
            Tail::Constant => self.value(self.r_max()),
            Tail::Extended => self.value(1e30),
        };
        classify(v)
    }

    /// Limit class of `f` at `r → 0⁺`.
    pub fn limit_at_zero(&self) -> ProfileLimit {
        classify(self.value(1e-30))
    }
}

/// Coarse classification of a profile value for pole handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileLimit {
    Zero,
    Infinite,
    Finite,
}

fn classify(v: f64) -> ProfileLimit {
    if !v.is_finite() || v.abs() > 1e12 {
        ProfileLimit::Infinite
    } else if v.abs() < 1e-12 {
        ProfileLimit::Zero
    } else {
        ProfileLimit::Finite
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_profile_values() {
        let p = RadialProfile::power(2);
        assert_eq!(p.value(3.0), 9.0);
        assert_eq!(p.derivative(3.0), 6.0);
        assert_eq!(p.limit_at_infinity(), ProfileLimit::Infinite);
        assert_eq!(p.limit_at_zero(), ProfileLimit::Zero);
    }

    #[test]
    fn constant_profile_clamps() {
        let p = RadialProfile::constant(0.75);
        assert_eq!(p.value(10.0), 0.75);
        assert_eq!(p.derivative(10.0), 0.0);
        assert_eq!(p.limit_at_infinity(), ProfileLimit::Finite);
    }
}
