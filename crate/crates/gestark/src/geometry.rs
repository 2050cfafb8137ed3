//! Miller-index directions and the four-valley ⟨111⟩ geometry of the
//! germanium conduction band.
//!
//! Valley axes are headless: every consumer works with the projector n̂n̂ᵀ,
//! so the sign chosen for each representative never matters.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::Result;

/// Tolerance for unit-norm and valley-completeness checks.
pub const GEOMETRY_TOL: f64 = 1e-12;

/// |cos| margin classifying two directions as parallel or perpendicular.
pub const ALIGNMENT_TOL: f64 = 1e-9;

fn gcd(a: i32, b: i32) -> i32 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

/// Crystallographic direction [h k l].
///
/// Indices are reduced by the gcd of their absolute values on construction,
/// so `[2,2,0]` and `[1,1,0]` compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MillerDirection {
    h: i32,
    k: i32,
    l: i32,
}

impl MillerDirection {
    pub fn new(h: i32, k: i32, l: i32) -> Result<Self> {
        if h == 0 && k == 0 && l == 0 {
            return Err(Error::ZeroDirection);
        }
        let g = gcd(gcd(h, k), l);
        Ok(Self {
            h: h / g,
            k: k / g,
            l: l / g,
        })
    }

    pub fn indices(&self) -> [i32; 3] {
        [self.h, self.k, self.l]
    }

    /// Sign-normalized key (first nonzero index positive).
    ///
    /// Two directions that differ only by an overall sign describe the same
    /// headless axis and share a key.
    pub fn axis_key(&self) -> [i32; 3] {
        let v = [self.h, self.k, self.l];
        let lead = v.iter().find(|&&x| x != 0).copied().unwrap_or(1);
        if lead < 0 {
            [-v[0], -v[1], -v[2]]
        } else {
            v
        }
    }

    /// Unit vector along the direction. Infallible: the zero direction is
    /// rejected at construction.
    pub fn unit_vector(&self) -> UnitVector3 {
        let v = Vector3::new(f64::from(self.h), f64::from(self.k), f64::from(self.l));
        UnitVector3::from_vector(v).expect("nonzero by construction")
    }
}

impl fmt::Display for MillerDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.h, self.k, self.l)
    }
}

impl Serialize for MillerDirection {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MillerDirection {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [h, k, l] = <[i32; 3]>::deserialize(deserializer)?;
        MillerDirection::new(h, k, l).map_err(serde::de::Error::custom)
    }
}

/// Direction in real space with |v| = 1 within [`GEOMETRY_TOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector3(Vector3<f64>);

impl UnitVector3 {
    /// Wraps a vector that is already unit length.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vector3::new(x, y, z);
        let norm = v.norm();
        if (norm - 1.0).abs() > GEOMETRY_TOL {
            return Err(Error::NotUnitLength { norm });
        }
        Ok(Self(v))
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if norm < GEOMETRY_TOL {
            return Err(Error::ZeroDirection);
        }
        Ok(Self(v / norm))
    }

    pub fn dot(&self, other: &UnitVector3) -> f64 {
        self.0.dot(&other.0)
    }

    /// The antiparallel direction; exact component negation.
    pub fn flipped(&self) -> UnitVector3 {
        UnitVector3(-self.0)
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }
}

/// Squared projection (ê·n̂)² of one unit direction onto another; sign-free,
/// so headless axes are safe.
pub fn projection_squared(e_hat: &UnitVector3, axis: &UnitVector3) -> f64 {
    let d = e_hat.dot(axis);
    d * d
}

/// Relative orientation of an electric- and magnetic-field direction pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldGeometry {
    Parallel,
    Perpendicular,
    Oblique,
}

impl fmt::Display for FieldGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldGeometry::Parallel => "parallel",
            FieldGeometry::Perpendicular => "perpendicular",
            FieldGeometry::Oblique => "oblique",
        };
        f.write_str(s)
    }
}

/// Classifies the angle between two directions as parallel, perpendicular,
/// or oblique using [`ALIGNMENT_TOL`].
pub fn classify_geometry(e_dir: &MillerDirection, b_dir: &MillerDirection) -> FieldGeometry {
    let cos = e_dir.unit_vector().dot(&b_dir.unit_vector()).abs();
    if cos > 1.0 - ALIGNMENT_TOL {
        FieldGeometry::Parallel
    } else if cos < ALIGNMENT_TOL {
        FieldGeometry::Perpendicular
    } else {
        FieldGeometry::Oblique
    }
}

/// The four ⟨111⟩ conduction-band valley axes of germanium.
///
/// Representatives are chosen with positive z, but only n̂n̂ᵀ is ever
/// consumed downstream. The family satisfies Σᵢ n̂ᵢn̂ᵢᵀ = (4/3)·I.
#[derive(Debug, Clone)]
pub struct ValleySet {
    axes: [UnitVector3; 4],
}

impl ValleySet {
    pub fn germanium() -> Self {
        let make = |h: i32, k: i32, l: i32| {
            MillerDirection::new(h, k, l)
                .expect("nonzero")
                .unit_vector()
        };
        Self {
            axes: [
                make(1, 1, 1),
                make(-1, 1, 1),
                make(1, -1, 1),
                make(-1, -1, 1),
            ],
        }
    }

    pub fn axes(&self) -> &[UnitVector3; 4] {
        &self.axes
    }

    /// Σᵢ n̂ᵢn̂ᵢᵀ, equal to (4/3)·I for the complete ⟨111⟩ family.
    pub fn completeness_matrix(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for axis in &self.axes {
            let v = axis.as_vector();
            m += v * v.transpose();
        }
        m
    }
}
