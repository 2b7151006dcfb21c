//! Closed-form analysis of the minimal planar case: three sensors in the
//! plane, TDOAs taken against sensor 0.
//!
//! A pair `t = (τ10, τ20)` is mapped to the line `m0 + l0(t) + λ v(t)`; the
//! sources on that line are the roots of `a λ² + 2 b λ + c = 0` whose range
//! to `m0`, which works out to `−λ W`, is non-negative.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::geometry::{SensorArray, POSITION_EPS};

/// Absolute tolerance on the hexagon facets and on `a`, `b`.
pub const TOL_REGION: f64 = 1e-9;
/// Forward-map agreement required of inverted sources.
pub const TOL_INVERSION: f64 = 1e-8;
/// Facet slack, relative to the longest baseline, below which the two
/// preimages are indistinguishable from rounding in the forward map.
const FOLD_SLACK: f64 = 1e-12;

/// Three non-collinear sensors in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarConfig {
    m: [Vector2<f64>; 3],
    d10: Vector2<f64>,
    d20: Vector2<f64>,
    /// Baseline lengths `‖m1−m0‖`, `‖m2−m0‖`, `‖m2−m1‖`.
    lengths: [f64; 3],
    w: f64,
}

/// The reduced measurement `(τ10, τ20)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarTau {
    pub tau10: f64,
    pub tau20: f64,
}

impl PlanarTau {
    pub fn new(tau10: f64, tau20: f64) -> Self {
        Self { tau10, tau20 }
    }

    pub fn is_finite(&self) -> bool {
        self.tau10.is_finite() && self.tau20.is_finite()
    }

    pub fn distance(&self, other: &PlanarTau) -> f64 {
        (self.tau10 - other.tau10).hypot(self.tau20 - other.tau20)
    }
}

/// Regions of the reduced TDOA plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Strictly inside the inscribed ellipse.
    InteriorEllipse,
    /// On the ellipse where a finite source exists.
    OnEllipseImage,
    /// Between the ellipse and the hexagon where the map is two-to-one.
    CubicPositiveInHexagon,
    /// On a hexagon facet (including vertices) inside the image.
    OnBoundaryImage,
    NotInImage,
}

impl Region {
    pub fn multiplicity(self) -> usize {
        match self {
            Region::NotInImage => 0,
            Region::CubicPositiveInHexagon => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::InteriorEllipse => "interior_ellipse",
            Region::OnEllipseImage => "on_ellipse_image",
            Region::CubicPositiveInHexagon => "cubic_positive_in_hexagon",
            Region::OnBoundaryImage => "on_boundary_image",
            Region::NotInImage => "not_in_image",
        }
    }
}

/// Region together with the number of sources mapping onto the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionClass {
    pub region: Region,
    pub multiplicity: usize,
    /// Set when the point lies on the ellipse but no finite source exists.
    pub at_infinity: bool,
}

impl RegionClass {
    fn of(region: Region) -> Self {
        Self {
            region,
            multiplicity: region.multiplicity(),
            at_infinity: false,
        }
    }
}

/// Hexagon membership with a flag for points on a facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HexagonMembership {
    pub inside: bool,
    pub on_boundary: bool,
}

/// Coefficients of the quadratic in `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Reduced discriminant `b² − a c`. It factors as a quarter of the product
/// of the three facet slacks `d² − τ²`, which is evaluated instead because
/// the expanded form cancels badly next to the hexagon boundary.
pub fn discriminant(cfg: &PlanarConfig, t: PlanarTau) -> f64 {
    let [d10, d20, d21] = cfg.lengths;
    let slack = |d: f64, tau: f64| (d - tau) * (d + tau);
    0.25 * slack(d10, t.tau10) * slack(d20, t.tau20) * slack(d21, t.tau20 - t.tau10)
}

fn rotate(u: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-u.y, u.x)
}

impl PlanarConfig {
    pub fn new(m0: [f64; 2], m1: [f64; 2], m2: [f64; 2]) -> Result<Self> {
        let m = [Vector2::from(m0), Vector2::from(m1), Vector2::from(m2)];
        if m.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite);
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            if (m[a] - m[b]).norm() <= POSITION_EPS {
                return Err(Error::CoincidentSensors(a, b));
            }
        }
        let d10 = m[1] - m[0];
        let d20 = m[2] - m[0];
        let lengths = [d10.norm(), d20.norm(), (m[2] - m[1]).norm()];
        let w = Matrix2::from_columns(&[d10, d20]).determinant();
        if w.abs() <= 1e-12 * lengths[0] * lengths[1] {
            return Err(Error::Collinear);
        }
        Ok(Self {
            m,
            d10,
            d20,
            lengths,
            w,
        })
    }

    /// From a three-sensor planar array.
    pub fn from_array(array: &SensorArray) -> Result<Self> {
        if array.dim() != 2 {
            return Err(Error::UnsupportedDimension(array.dim()));
        }
        if array.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: array.len(),
            });
        }
        let p = |k: usize| [array.sensor(k)[0], array.sensor(k)[1]];
        Self::new(p(0), p(1), p(2))
    }

    pub fn sensor(&self, k: usize) -> Vector2<f64> {
        self.m[k]
    }

    /// `det[m1−m0, m2−m0]`.
    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn d10(&self) -> f64 {
        self.lengths[0]
    }

    pub fn d20(&self) -> f64 {
        self.lengths[1]
    }

    pub fn d21(&self) -> f64 {
        self.lengths[2]
    }

    /// Reduced TDOAs of a source.
    pub fn forward(&self, x: Vector2<f64>) -> PlanarTau {
        let r0 = (x - self.m[0]).norm();
        PlanarTau::new((x - self.m[1]).norm() - r0, (x - self.m[2]).norm() - r0)
    }

    /// The hexagon vertices, images of sources placed on `m0`, `m1`, `m2`.
    pub fn vertices(&self) -> [PlanarTau; 3] {
        let [d10, d20, d21] = self.lengths;
        [
            PlanarTau::new(d10, d20),
            PlanarTau::new(-d10, d21 - d10),
            PlanarTau::new(d21 - d20, -d20),
        ]
    }
}

/// Direction `v` and offset `l0` of the line carrying the candidate sources.
pub fn aux_vectors(cfg: &PlanarConfig, t: PlanarTau) -> (Vector2<f64>, Vector2<f64>) {
    let v = rotate(cfg.d10 * t.tau20 - cfg.d20 * t.tau10);
    let [d10, d20, _] = cfg.lengths;
    let l0 = rotate(
        cfg.d10 * (d20 * d20 - t.tau20 * t.tau20) - cfg.d20 * (d10 * d10 - t.tau10 * t.tau10),
    ) / (2.0 * cfg.w);
    (v, l0)
}

pub fn abc(cfg: &PlanarConfig, t: PlanarTau) -> Quadratic {
    let (v, l0) = aux_vectors(cfg, t);
    Quadratic {
        a: v.norm_squared() - cfg.w * cfg.w,
        b: v.dot(&l0),
        c: l0.norm_squared(),
    }
}

fn min_slack(cfg: &PlanarConfig, t: PlanarTau) -> f64 {
    let [d10, d20, d21] = cfg.lengths;
    (d10 - t.tau10.abs())
        .min(d20 - t.tau20.abs())
        .min(d21 - (t.tau20 - t.tau10).abs())
}

pub fn hexagon_contains(cfg: &PlanarConfig, t: PlanarTau) -> HexagonMembership {
    let min = min_slack(cfg, t);
    HexagonMembership {
        inside: min >= -TOL_REGION,
        on_boundary: min.abs() <= TOL_REGION,
    }
}

pub fn classify(cfg: &PlanarConfig, t: PlanarTau) -> RegionClass {
    if !t.is_finite() || !hexagon_contains(cfg, t).inside {
        return RegionClass::of(Region::NotInImage);
    }
    let hex = hexagon_contains(cfg, t);
    let q = abc(cfg, t);
    // b measured along the orientation of the sensor triangle
    let b = q.b * cfg.w.signum();
    let on_ellipse = q.a.abs() <= TOL_REGION;
    if on_ellipse {
        // the finite root −c/(2b) gives a non-negative range only for b > 0;
        // facet tangency points have no finite preimage
        if b > TOL_REGION && !hex.on_boundary {
            return RegionClass::of(Region::OnEllipseImage);
        }
        return RegionClass {
            at_infinity: true,
            ..RegionClass::of(Region::NotInImage)
        };
    }
    // Near a facet the map folds: a slack of ε separates the two preimages by
    // O(√ε). The facet band counts as one-to-one only when the candidates
    // merge, or when the slack is at the rounding level of the forward map.
    let (v, _) = aux_vectors(cfg, t);
    let split = 2.0 * discriminant(cfg, t).max(0.0).sqrt() * v.norm() / q.a.abs();
    let rounding = FOLD_SLACK * cfg.lengths.iter().copied().fold(0.0, f64::max);
    if hex.on_boundary && (split <= TOL_INVERSION || min_slack(cfg, t) <= rounding) {
        return if b >= -TOL_REGION {
            RegionClass::of(Region::OnBoundaryImage)
        } else {
            RegionClass::of(Region::NotInImage)
        };
    }
    if q.a < 0.0 {
        RegionClass::of(Region::InteriorEllipse)
    } else if b > TOL_REGION {
        RegionClass::of(Region::CubicPositiveInHexagon)
    } else {
        RegionClass::of(Region::NotInImage)
    }
}

/// Roots of `a λ² + 2 b λ + c` given the reduced discriminant, by the
/// cancellation-free form. A negative discriminant is clamped to zero.
pub fn lambda_roots(q: &Quadratic, disc: f64) -> Vec<f64> {
    if q.a.abs() <= TOL_REGION {
        if q.b == 0.0 {
            return Vec::new();
        }
        return vec![-q.c / (2.0 * q.b)];
    }
    let sq = disc.max(0.0).sqrt();
    let s = -(q.b + if q.b >= 0.0 { sq } else { -sq });
    if s == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![s / q.a, q.c / s]
}

/// Sources consistent with `t`: one where the map is one-to-one, two where
/// it is two-to-one.
pub fn invert(cfg: &PlanarConfig, t: PlanarTau) -> Result<Vec<Vector2<f64>>> {
    let class = classify(cfg, t);
    if class.at_infinity {
        return Err(Error::SourceAtInfinity);
    }
    if class.multiplicity == 0 {
        return Err(Error::NotInImage);
    }
    let (v, l0) = aux_vectors(cfg, t);
    let q = abc(cfg, t);
    let mut roots = if class.region == Region::OnBoundaryImage {
        // double root
        vec![-q.b / q.a]
    } else {
        lambda_roots(&q, discriminant(cfg, t))
    };
    // range to m0 is −λW; largest first
    roots.sort_by(|x, y| (-x * cfg.w).total_cmp(&(-y * cfg.w)).reverse());
    roots.truncate(class.multiplicity);
    if roots.is_empty() {
        return Err(Error::SourceAtInfinity);
    }
    Ok(roots
        .into_iter()
        .map(|lambda| cfg.m[0] + l0 + v * lambda)
        .collect())
}
