//! Sensor arrays, the canonical pair ordering of the TDOA space and the
//! forward TDOA maps.
//!
//! Sound speed is normalized to 1 everywhere in this crate, so a TDOA is a
//! range difference in meters. For an array of `n + 1` sensors the complete
//! TDOA vector has `q = n(n + 1) / 2` entries, one per ordered pair `(j, i)`
//! with `j > i`, laid out in the canonical order
//!
//! ```text
//! (1,0), (2,0), ..., (n,0), (2,1), (3,1), ..., (n,1), (3,2), ..., (n,n-1)
//! ```
//!
//! i.e. the `n` pairs referred to sensor 0 first, then the remaining pairs
//! sorted by their lower index and then by their upper index.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Minimum distance (meters) between two sensors, or between a source and a
/// sensor where unit vectors are needed.
pub const POSITION_EPS: f64 = 1e-9;

/// Points are plain column vectors of length 2 or 3 (meters).
pub type Point = DVector<f64>;

/// An ordered sensor pair `(hi, lo)` with `hi > lo`. The associated TDOA is
/// `‖x − m_hi‖ − ‖x − m_lo‖`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub hi: usize,
    pub lo: usize,
}

impl Pair {
    pub const fn new(hi: usize, lo: usize) -> Self {
        Self { hi, lo }
    }

    /// Validates `hi > lo` and `hi <= n`.
    pub fn checked(hi: usize, lo: usize, n: usize) -> Result<Self> {
        let pair = Self { hi, lo };
        if hi <= lo || hi > n {
            return Err(Error::InvalidPair(pair));
        }
        Ok(pair)
    }

    pub fn contains(&self, sensor: usize) -> bool {
        self.hi == sensor || self.lo == sensor
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.hi, self.lo)
    }
}

/// Number of pairs for `n + 1` sensors.
pub const fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// The canonical pair list for `n + 1` sensors.
pub fn canonical_pairs(n: usize) -> Vec<Pair> {
    let mut pairs = Vec::with_capacity(pair_count(n));
    pairs.extend((1..=n).map(|j| Pair::new(j, 0)));
    for i in 1..n {
        pairs.extend((i + 1..=n).map(|j| Pair::new(j, i)));
    }
    pairs
}

/// Position of `pair` in the canonical list, if it is a valid pair.
pub fn pair_index(n: usize, pair: Pair) -> Option<usize> {
    let Pair { hi, lo } = pair;
    if hi <= lo || hi > n {
        return None;
    }
    if lo == 0 {
        return Some(hi - 1);
    }
    // rows for lower index 1..lo-1 come first, each holding n - k pairs
    let before: usize = (1..lo).map(|k| n - k).sum();
    Some(n + before + (hi - lo - 1))
}

/// Positions of `n + 1` sensors in 2D or 3D.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorArray {
    positions: Vec<Point>,
    dim: usize,
}

impl SensorArray {
    pub fn new(positions: Vec<Point>) -> Result<Self> {
        if positions.len() < 3 {
            return Err(Error::TooFewSensors(positions.len()));
        }
        let dim = positions[0].len();
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        for p in &positions {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        for a in 0..positions.len() {
            for b in a + 1..positions.len() {
                if (&positions[a] - &positions[b]).norm() <= POSITION_EPS {
                    return Err(Error::CoincidentSensors(a, b));
                }
            }
        }
        Ok(Self { positions, dim })
    }

    /// Convenience constructor from coordinate slices.
    pub fn from_coords<R: AsRef<[f64]>>(coords: &[R]) -> Result<Self> {
        Self::new(
            coords
                .iter()
                .map(|c| DVector::from_column_slice(c.as_ref()))
                .collect(),
        )
    }

    /// Seven-sensor cross: one sensor at the origin and one at `±arm` on
    /// each axis, in the order `+x, −x, +y, −y, +z, −z`.
    pub fn cross7(arm: f64) -> Result<Self> {
        Self::from_coords(&[
            [0.0, 0.0, 0.0],
            [arm, 0.0, 0.0],
            [-arm, 0.0, 0.0],
            [0.0, arm, 0.0],
            [0.0, -arm, 0.0],
            [0.0, 0.0, arm],
            [0.0, 0.0, -arm],
        ])
    }

    /// Index of the last sensor; the array holds `n + 1` sensors.
    pub fn n(&self) -> usize {
        self.positions.len() - 1
    }

    /// Dimension of the complete TDOA space.
    pub fn q(&self) -> usize {
        pair_count(self.n())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn sensor(&self, k: usize) -> &Point {
        &self.positions[k]
    }

    pub fn pairs(&self) -> Vec<Pair> {
        canonical_pairs(self.n())
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        (&self.positions[a] - &self.positions[b]).norm()
    }

    /// Same geometry shifted by `offset`.
    pub fn translated(&self, offset: &Point) -> Result<Self> {
        Self::new(self.positions.iter().map(|p| p + offset).collect())
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    fn ranges(&self, x: &Point) -> Vec<f64> {
        self.positions.iter().map(|m| (x - m).norm()).collect()
    }

    /// Complete TDOA vector of a source at `x`.
    pub fn tdoa_full(&self, x: &Point) -> Result<TdoaVector> {
        self.check_point(x)?;
        let r = self.ranges(x);
        let values = DVector::from_iterator(
            self.q(),
            canonical_pairs(self.n()).iter().map(|p| r[p.hi] - r[p.lo]),
        );
        Ok(TdoaVector {
            n: self.n(),
            values,
        })
    }

    /// TDOAs of the given pairs, in the given order.
    pub fn tdoa_pairs(&self, x: &Point, pairs: &[Pair]) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let r = self.ranges(x);
        pairs
            .iter()
            .map(|p| {
                if p.hi <= p.lo || p.hi > self.n() {
                    Err(Error::InvalidPair(*p))
                } else {
                    Ok(r[p.hi] - r[p.lo])
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(DVector::from_vec)
    }

    /// The `n` TDOAs `τ_{k,ref}` for every `k ≠ ref`, in increasing `k`.
    pub fn tdoa_reduced(&self, x: &Point, reference: usize) -> Result<DVector<f64>> {
        if reference > self.n() {
            return Err(Error::IndexOutOfRange {
                index: reference,
                len: self.len(),
            });
        }
        self.check_point(x)?;
        let r = self.ranges(x);
        Ok(DVector::from_iterator(
            self.n(),
            (0..self.len())
                .filter(|&k| k != reference)
                .map(|k| r[k] - r[reference]),
        ))
    }

    /// Jacobian of [`tdoa_full`](Self::tdoa_full) with respect to the source
    /// position, `q × dim`.
    pub fn tdoa_jacobian(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.jacobian_pairs(x, &self.pairs())
    }

    /// Jacobian rows for an arbitrary pair list.
    pub fn jacobian_pairs(&self, x: &Point, pairs: &[Pair]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let units = self.unit_vectors(x)?;
        let mut jac = DMatrix::zeros(pairs.len(), self.dim);
        for (row, p) in pairs.iter().enumerate() {
            if p.hi <= p.lo || p.hi > self.n() {
                return Err(Error::InvalidPair(*p));
            }
            let g = &units[p.hi] - &units[p.lo];
            jac.row_mut(row).copy_from(&g.transpose());
        }
        Ok(jac)
    }

    fn unit_vectors(&self, x: &Point) -> Result<Vec<Point>> {
        self.positions
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let d = x - m;
                let norm = d.norm();
                if norm <= POSITION_EPS {
                    Err(Error::AtSensor(k))
                } else {
                    Ok(d / norm)
                }
            })
            .collect()
    }
}

/// A point of the complete TDOA space, in canonical pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct TdoaVector {
    n: usize,
    values: DVector<f64>,
}

impl TdoaVector {
    pub fn new(n: usize, values: DVector<f64>) -> Result<Self> {
        if values.len() != pair_count(n) {
            return Err(Error::DimensionMismatch {
                expected: pair_count(n),
                found: values.len(),
            });
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn pairs(&self) -> Vec<Pair> {
        canonical_pairs(self.n)
    }

    pub fn get(&self, pair: Pair) -> Option<f64> {
        pair_index(self.n, pair).map(|k| self.values[k])
    }

    /// The nonredundant entries `τ_10, …, τ_n0`.
    pub fn reference_part(&self) -> DVector<f64> {
        self.values.rows(0, self.n).into_owned()
    }

    /// `τ_{k,ref}` for every `k ≠ ref` in increasing `k`, matching
    /// [`SensorArray::tdoa_reduced`]. Pairs with `k < ref` are sign-flipped.
    pub fn reduced(&self, reference: usize) -> Result<DVector<f64>> {
        if reference > self.n {
            return Err(Error::IndexOutOfRange {
                index: reference,
                len: self.n + 1,
            });
        }
        Ok(DVector::from_iterator(
            self.n,
            (0..=self.n).filter(|&k| k != reference).map(|k| {
                if k > reference {
                    self.values[pair_index(self.n, Pair::new(k, reference)).expect("valid pair")]
                } else {
                    -self.values[pair_index(self.n, Pair::new(reference, k)).expect("valid pair")]
                }
            }),
        ))
    }
}
