//! Grid domains: unions of axis-aligned unit lattice cells (boxes, lattice
//! animals, 1D intervals) carrying a mesh subdivision for the discrete
//! operators built on top of them.

use crate::{Error, Result};
use std::collections::BTreeSet;

/// A cell is the unit cube `a + [0,1]^d` for an integer base point `a`.
/// The domain is the union of its cells; `subdiv = m` fixes the mesh width
/// `h = 1/m` used when the domain is discretized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridDomain {
    d: usize,
    cells: BTreeSet<Vec<i64>>,
    subdiv: u32,
}

/// Inclusive integer range of cell bases for the lattice stand-in of the
/// centered box of side `s`: round(s) cells per axis, centered, leaning
/// left when the count is odd.
pub fn centered_cell_range(s: f64) -> (i64, i64) {
    let n = s.round() as i64;
    let lo = -((n + 1) / 2);
    (lo, lo + n - 1)
}

impl GridDomain {
    pub fn new(d: usize, cells: BTreeSet<Vec<i64>>, subdiv: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("domain dimension must be >= 1".into()));
        }
        if subdiv < 2 {
            return Err(Error::InvalidInput("mesh subdivision must be >= 2".into()));
        }
        if cells.is_empty() {
            return Err(Error::InvalidInput("domain needs at least one cell".into()));
        }
        if cells.iter().any(|c| c.len() != d) {
            return Err(Error::InvalidInput("cell dimension mismatch".into()));
        }
        Ok(GridDomain { d, cells, subdiv })
    }

    /// Lattice box standing in for the centered box `[-s/2, s/2]^d`,
    /// with `round(s)` cells per axis.
    pub fn centered_box(d: usize, s: f64, subdiv: u32) -> Result<Self> {
        let (lo, hi) = centered_cell_range(s);
        if hi < lo {
            return Err(Error::InvalidInput(format!(
                "centered box of side {s} contains no unit cell"
            )));
        }
        let mut cells = BTreeSet::new();
        let mut cur = vec![lo; d];
        loop {
            cells.insert(cur.clone());
            let mut axis = 0;
            loop {
                if axis == d {
                    return Self::new(d, cells, subdiv);
                }
                cur[axis] += 1;
                if cur[axis] <= hi {
                    break;
                }
                cur[axis] = lo;
                axis += 1;
            }
        }
    }

    /// 1D interval of cells `[lo, hi]` (inclusive bases), i.e. the segment
    /// `[lo, hi+1]`.
    pub fn interval(lo: i64, hi: i64, subdiv: u32) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidInput("empty interval".into()));
        }
        let cells = (lo..=hi).map(|a| vec![a]).collect();
        Self::new(1, cells, subdiv)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn subdiv(&self) -> u32 {
        self.subdiv
    }

    pub fn mesh_h(&self) -> f64 {
        1.0 / self.subdiv as f64
    }

    pub fn cells(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.cells.iter()
    }

    pub fn cell_set(&self) -> &BTreeSet<Vec<i64>> {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn contains_cell(&self, a: &[i64]) -> bool {
        self.cells.contains(a)
    }

    pub fn with_subdiv(&self, subdiv: u32) -> Result<Self> {
        Self::new(self.d, self.cells.clone(), subdiv)
    }

    /// Inclusive range of cell bases per axis.
    pub fn bounding_box(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![i64::MAX; self.d];
        let mut hi = vec![i64::MIN; self.d];
        for c in &self.cells {
            for i in 0..self.d {
                lo[i] = lo[i].min(c[i]);
                hi[i] = hi[i].max(c[i]);
            }
        }
        (lo, hi)
    }

    /// True when the cells form a single face-connected component.
    pub fn is_face_connected(&self) -> bool {
        let start = self.cells.iter().next().unwrap().clone();
        let mut seen = BTreeSet::new();
        seen.insert(start.clone());
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            for axis in 0..self.d {
                for step in [-1i64, 1] {
                    let mut n = c.clone();
                    n[axis] += step;
                    if self.cells.contains(&n) && seen.insert(n.clone()) {
                        stack.push(n);
                    }
                }
            }
        }
        seen.len() == self.cells.len()
    }

    /// Euclidean distance from `x` to the union of closed cells
    /// (0 when `x` lies inside).
    pub fn distance(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d);
        let mut best = f64::INFINITY;
        for c in &self.cells {
            let mut sq = 0.0;
            for i in 0..self.d {
                let lo = c[i] as f64;
                let hi = lo + 1.0;
                let gap = (lo - x[i]).max(x[i] - hi).max(0.0);
                sq += gap * gap;
            }
            best = best.min(sq);
            if best == 0.0 {
                return 0.0;
            }
        }
        best.sqrt()
    }

    /// Distance from `x` to the domain scaled by `r` (the union of cells
    /// `r·a + [0,r]^d`).
    pub fn distance_scaled(&self, x: &[f64], r: f64) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v / r).collect();
        r * self.distance(&y)
    }
}
