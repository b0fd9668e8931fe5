//! Node placement in the unit square and the regular cell lattice with its
//! nine sub-lattices.
//!
//! The unit square is `{(x, y): |x|, |y| <= 1/2}`. A lattice of `r x r` cells
//! partitions it; cell `(1, 1)` sits at the lower-left corner. Cells whose
//! column and row indices agree modulo 3 form one of nine sub-lattices, so two
//! same-class cells are always separated by at least two foreign cells.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{real, Real};

/// A point in the closed unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        let half = real::<T>(0.5);
        if x.abs() > half || y.abs() > half || !x.is_finite() || !y.is_finite() {
            return Err(Error::OutsideSquare {
                x: x.to_f64().unwrap_or(f64::NAN),
                y: y.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Point { x, y })
    }

    pub fn distance(&self, other: &Point<T>) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// The `r x r` cell grid built for a given node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice<T> {
    /// Cells per side.
    pub r: u32,
    /// Cell side length, `1/r`.
    pub x0: T,
    /// Total number of cells, `r^2`.
    pub g: u32,
    /// Node count the lattice was dimensioned for.
    pub n_ref: usize,
}

/// Cell coordinates, 1-based; `(1, 1)` is the lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellCoord {
    /// Column index in `1..=r`.
    pub v1: u32,
    /// Row index in `1..=r`.
    pub v2: u32,
}

/// One of the nine sub-lattice classes, `3 * ((v1-1) % 3) + ((v2-1) % 3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubLatticeId(pub u8);

impl<T: Real> Lattice<T> {
    /// Lattice of about `n / (9 ln n)` cells: `r = max(1, round(sqrt(n / (9 ln n))))`.
    ///
    /// The integrality relaxation keeps a perfect square grid; `r >= 1` so
    /// degenerate inputs still run.
    pub fn build(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("lattice needs n >= 2, got {n}")));
        }
        Self::from_cells(n as f64 / (9.0 * (n as f64).ln()), n)
    }

    /// Cluster-scheme lattice of about `n^d / (9 ln n)` cells.
    pub fn for_cluster(n: usize, d: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("lattice needs n >= 2, got {n}")));
        }
        let d = d.to_f64().unwrap_or(f64::NAN);
        if !(0.0 < d && d < 1.0) {
            return Err(Error::invalid(format!("d must lie in (0, 1), got {d}")));
        }
        let nf = n as f64;
        Self::from_cells(nf.powf(d) / (9.0 * nf.ln()), n)
    }

    fn from_cells(cells: f64, n_ref: usize) -> Result<Self> {
        let r = cells.sqrt().round().max(1.0) as u32;
        Ok(Lattice {
            r,
            x0: T::one() / real::<T>(r as f64),
            g: r * r,
            n_ref,
        })
    }

    /// Linear 0-based index of a cell (column-major is not used; row-major).
    pub fn cell_index(&self, c: CellCoord) -> usize {
        ((c.v2 - 1) as usize) * self.r as usize + (c.v1 - 1) as usize
    }

    pub fn coord_of_index(&self, idx: usize) -> CellCoord {
        CellCoord {
            v1: (idx % self.r as usize) as u32 + 1,
            v2: (idx / self.r as usize) as u32 + 1,
        }
    }

    /// Centre point of a cell.
    pub fn cell_center(&self, c: CellCoord) -> Point<T> {
        let r = real::<T>(self.r as f64);
        let half = real::<T>(0.5);
        let to_mid = |v: u32| (real::<T>(v as f64) - half) / r - half;
        Point {
            x: to_mid(c.v1),
            y: to_mid(c.v2),
        }
    }

    pub fn contains(&self, c: CellCoord) -> bool {
        (1..=self.r).contains(&c.v1) && (1..=self.r).contains(&c.v2)
    }
}

/// Maps a point to its cell: `v = floor((coord + 1/2) * r) + 1`, clamped to
/// `[1, r]`. Cells are half-open so boundary points go to the higher-index
/// cell, except along the top/right edge where the clamp applies.
pub fn cell_of<T: Real>(p: &Point<T>, lat: &Lattice<T>) -> Result<CellCoord> {
    let half = real::<T>(0.5);
    if p.x.abs() > half || p.y.abs() > half {
        return Err(Error::OutsideSquare {
            x: p.x.to_f64().unwrap_or(f64::NAN),
            y: p.y.to_f64().unwrap_or(f64::NAN),
        });
    }
    let r = real::<T>(lat.r as f64);
    let axis = |coord: T| -> u32 {
        let v = ((coord + half) * r).floor() + T::one();
        let v = v.to_u64().unwrap_or(1).max(1);
        (v.min(lat.r as u64)) as u32
    };
    Ok(CellCoord {
        v1: axis(p.x),
        v2: axis(p.y),
    })
}

/// The edge-adjacent cells: 2 for corners, 3 for edges, 4 for interior cells.
pub fn neighbors<T: Real>(c: CellCoord, lat: &Lattice<T>) -> Vec<CellCoord> {
    let mut out = Vec::with_capacity(4);
    if c.v1 > 1 {
        out.push(CellCoord { v1: c.v1 - 1, v2: c.v2 });
    }
    if c.v1 < lat.r {
        out.push(CellCoord { v1: c.v1 + 1, v2: c.v2 });
    }
    if c.v2 > 1 {
        out.push(CellCoord { v1: c.v1, v2: c.v2 - 1 });
    }
    if c.v2 < lat.r {
        out.push(CellCoord { v1: c.v1, v2: c.v2 + 1 });
    }
    out
}

pub fn sublattice_of(c: CellCoord) -> SubLatticeId {
    SubLatticeId((3 * ((c.v1 - 1) % 3) + ((c.v2 - 1) % 3)) as u8)
}

/// Ring index of `other` around `center` within their shared sub-lattice:
/// Chebyshev cell distance divided by 3, or 0 for the same cell.
///
/// Any point of a ring-`i` cell (or of its neighbours, which is where the
/// interfering transmitters sit) is at Euclidean distance at least
/// `x0 * (3i - 2)` from any point of the centre cell.
pub fn ring_index(center: CellCoord, other: CellCoord) -> Result<u32> {
    if sublattice_of(center) != sublattice_of(other) {
        return Err(Error::SublatticeMismatch(
            center.v1, center.v2, other.v1, other.v2,
        ));
    }
    let d1 = center.v1.abs_diff(other.v1);
    let d2 = center.v2.abs_diff(other.v2);
    Ok(d1.max(d2) / 3)
}

/// Places `count` iid uniform points in the unit square.
pub fn place_nodes<T: Real, R: Rng>(count: usize, rng: &mut R) -> Vec<Point<T>> {
    (0..count)
        .map(|_| Point {
            x: real::<T>(rng.gen::<f64>() - 0.5),
            y: real::<T>(rng.gen::<f64>() - 0.5),
        })
        .collect()
}
