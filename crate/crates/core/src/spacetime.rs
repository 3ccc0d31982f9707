//! Minkowski geometry in one space and one time dimension.
//!
//! Signature is (+,−) and natural units are used throughout. The metric is
//! never stored; lowering an index flips the sign of the spatial component.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Default band around `v·v = 0` inside which a vector counts as null.
pub const DEFAULT_NULL_TOL: f64 = 1e-10;

/// A point in spacetime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: f64,
}

impl Event {
    pub const fn new(t: f64, x: f64) -> Self {
        Self { t, x }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite()
    }

    /// Displacement along a contravariant vector.
    pub fn offset(self, v: FourVector, scale: f64) -> Event {
        Event::new(self.t + scale * v.v0, self.x + scale * v.v1)
    }

    /// Contravariant displacement `other - self`.
    pub fn to(self, other: Event) -> FourVector {
        FourVector::new(other.t - self.t, other.x - self.x)
    }
}

/// Contravariant two-component vector `(v0, v1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FourVector {
    pub v0: f64,
    pub v1: f64,
}

impl FourVector {
    pub const ZERO: FourVector = FourVector { v0: 0.0, v1: 0.0 };

    pub const fn new(v0: f64, v1: f64) -> Self {
        Self { v0, v1 }
    }

    /// Covariant components `(v_0, v_1) = (v0, -v1)`.
    pub fn lower(self) -> [f64; 2] {
        [self.v0, -self.v1]
    }

    /// Build from covariant components.
    pub fn raise(lowered: [f64; 2]) -> Self {
        Self::new(lowered[0], -lowered[1])
    }

    pub fn square(self) -> f64 {
        minkowski_dot(self, self)
    }

    /// Largest absolute component, used for relative tolerances.
    pub fn max_abs(self) -> f64 {
        self.v0.abs().max(self.v1.abs())
    }

    pub fn is_finite(self) -> bool {
        self.v0.is_finite() && self.v1.is_finite()
    }

    pub fn components(self) -> [f64; 2] {
        [self.v0, self.v1]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, rhs: FourVector) -> FourVector {
        FourVector::new(self.v0 + rhs.v0, self.v1 + rhs.v1)
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, rhs: FourVector) -> FourVector {
        FourVector::new(self.v0 - rhs.v0, self.v1 - rhs.v1)
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        FourVector::new(-self.v0, -self.v1)
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, rhs: f64) -> FourVector {
        FourVector::new(self.v0 * rhs, self.v1 * rhs)
    }
}

impl Mul<FourVector> for f64 {
    type Output = FourVector;
    fn mul(self, rhs: FourVector) -> FourVector {
        rhs * self
    }
}

/// Character of a vector with respect to the light cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalClass {
    Timelike,
    Spacelike,
    Null,
}

impl CausalClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CausalClass::Timelike => "timelike",
            CausalClass::Spacelike => "spacelike",
            CausalClass::Null => "null",
        }
    }

    /// `+1` for timelike, `-1` for spacelike, `0` for null.
    pub fn sign(self) -> f64 {
        match self {
            CausalClass::Timelike => 1.0,
            CausalClass::Spacelike => -1.0,
            CausalClass::Null => 0.0,
        }
    }
}

impl fmt::Display for CausalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn minkowski_dot(a: FourVector, b: FourVector) -> f64 {
    a.v0 * b.v0 - a.v1 * b.v1
}

/// Classify `v` by the sign of `v·v` against the band `[-tol, tol]`.
pub fn causal_class(v: FourVector, tol: f64) -> CausalClass {
    debug_assert!(tol >= 0.0);
    let s = v.square();
    if s > tol {
        CausalClass::Timelike
    } else if s < -tol {
        CausalClass::Spacelike
    } else {
        CausalClass::Null
    }
}

/// `|dx·dx|^(1/2)`, real on both sides of the light cone.
pub fn proper_time_increment(dx: FourVector) -> f64 {
    dx.square().abs().sqrt()
}

/// Unit vector `v / |v·v|^(1/2)`, or `None` for a null vector.
pub fn unit(v: FourVector, tol: f64) -> Option<FourVector> {
    match causal_class(v, tol) {
        CausalClass::Null => None,
        _ => Some(v * (1.0 / proper_time_increment(v))),
    }
}

/// Active Lorentz boost with the given rapidity.
pub fn boost(v: FourVector, rapidity: f64) -> FourVector {
    let (sh, ch) = (rapidity.sinh(), rapidity.cosh());
    FourVector::new(ch * v.v0 + sh * v.v1, sh * v.v0 + ch * v.v1)
}
