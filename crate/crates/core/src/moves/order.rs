use std::cmp::Ordering;

use crate::encoder::EncodedInstance;
use crate::error::{invalid, Error, Result};
use crate::tables::{Axes, Table2, Table3};

/// Elimination order on 2-way tables of one shape: compare the total mass
/// on forbidden cells first, then entries lexicographically with forbidden
/// cells ahead of enabled ones (each class row-major). The table whose
/// first differing entry is larger is the greater one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Order2 {
    rows: usize,
    cols: usize,
    forbidden: Vec<bool>,
    /// Cell index at each lexicographic position.
    by_rank: Vec<usize>,
    /// Lexicographic position of each cell.
    rank: Vec<usize>,
}

impl Order2 {
    pub fn elimination(rows: usize, cols: usize, forbidden: Vec<bool>) -> Result<Self> {
        if forbidden.len() != rows * cols {
            return invalid("forbidden mask does not match the table shape");
        }
        let by_rank: Vec<usize> = (0..rows * cols)
            .filter(|&c| forbidden[c])
            .chain((0..rows * cols).filter(|&c| !forbidden[c]))
            .collect();
        let mut rank = vec![0; rows * cols];
        for (pos, &c) in by_rank.iter().enumerate() {
            rank[c] = pos;
        }
        Ok(Order2 {
            rows,
            cols,
            forbidden,
            by_rank,
            rank,
        })
    }

    /// Plain lexicographic order (nothing forbidden).
    pub fn lex(rows: usize, cols: usize) -> Self {
        Self::elimination(rows, cols, vec![false; rows * cols]).expect("sized")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_forbidden(&self, i: usize, j: usize) -> bool {
        self.forbidden[i * self.cols + j]
    }

    #[inline]
    pub fn cell_weight(&self, i: usize, j: usize) -> i64 {
        i64::from(self.is_forbidden(i, j))
    }

    #[inline]
    pub fn rank(&self, i: usize, j: usize) -> usize {
        self.rank[i * self.cols + j]
    }

    /// Cells in lexicographic priority order.
    pub fn cells_by_rank(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.by_rank.iter().map(move |&c| (c / self.cols, c % self.cols))
    }

    /// Total mass on forbidden cells.
    pub fn weight(&self, t: &Table2) -> Result<i64> {
        t.as_slice()
            .iter()
            .zip(&self.forbidden)
            .filter(|(_, &f)| f)
            .try_fold(0i64, |acc, (&v, _)| acc.checked_add(v))
            .ok_or(Error::Overflow("weight"))
    }

    /// Compares two tables of this order's shape.
    pub fn compare(&self, a: &Table2, b: &Table2) -> Ordering {
        let wa: i128 = self.weight_wide(a);
        let wb: i128 = self.weight_wide(b);
        wa.cmp(&wb).then_with(|| {
            let (x, y) = (a.as_slice(), b.as_slice());
            self.by_rank
                .iter()
                .find(|&&c| x[c] != y[c])
                .map_or(Ordering::Equal, |&c| x[c].cmp(&y[c]))
        })
    }

    fn weight_wide(&self, t: &Table2) -> i128 {
        t.as_slice()
            .iter()
            .zip(&self.forbidden)
            .filter(|(_, &f)| f)
            .map(|(&v, _)| v as i128)
            .sum()
    }
}

/// The composite order on `l × m × n` tables: the xz projection under its
/// elimination order, then the yz projection, then slices `0, 1, …` in turn.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermOrder {
    dims: [usize; 3],
    pub xz: Order2,
    pub yz: Order2,
    pub slices: Vec<Order2>,
}

impl TermOrder {
    /// Orders eliminating the complement of `enabled` (indexed like
    /// [`Table3`] entries) in every projection and slice.
    pub fn from_enabled(dims: [usize; 3], enabled: &[bool]) -> Result<Self> {
        let [l, m, n] = dims;
        if enabled.len() != l * m * n {
            return invalid("enabled mask does not match the table shape");
        }
        let on = |i: usize, j: usize, k: usize| enabled[(i * m + j) * n + k];
        let mut xz = vec![true; l * n];
        let mut yz = vec![true; m * n];
        let mut slices = vec![vec![true; l * m]; n];
        for i in 0..l {
            for j in 0..m {
                for k in 0..n {
                    if on(i, j, k) {
                        xz[i * n + k] = false;
                        yz[j * n + k] = false;
                        slices[k][i * m + j] = false;
                    }
                }
            }
        }
        Ok(TermOrder {
            dims,
            xz: Order2::elimination(l, n, xz)?,
            yz: Order2::elimination(m, n, yz)?,
            slices: slices
                .into_iter()
                .map(|f| Order2::elimination(l, m, f))
                .collect::<Result<_>>()?,
        })
    }

    pub fn for_instance(inst: &EncodedInstance) -> Result<Self> {
        Self::from_enabled(inst.dims(), inst.enabled_mask())
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Three-tier comparison of tables with equal margins.
    pub fn compare(&self, a: &Table3, b: &Table3) -> Result<Ordering> {
        if a.dims() != self.dims || b.dims() != self.dims {
            return invalid("table shape does not match the term order");
        }
        if a.margins()? != b.margins()? {
            return invalid("only tables with equal margins are comparable");
        }
        let ord = self
            .xz
            .compare(&a.project(Axes::XZ)?, &b.project(Axes::XZ)?)
            .then(self.yz.compare(&a.project(Axes::YZ)?, &b.project(Axes::YZ)?));
        if ord != Ordering::Equal {
            return Ok(ord);
        }
        for (k, slice_order) in self.slices.iter().enumerate() {
            let o = slice_order.compare(&a.project(Axes::Slice(k))?, &b.project(Axes::Slice(k))?);
            if o != Ordering::Equal {
                return Ok(o);
            }
        }
        Ok(Ordering::Equal)
    }

    /// Total forbidden mass of every slice.
    pub fn slice_weights(&self, t: &Table3) -> Result<Vec<i64>> {
        self.slices
            .iter()
            .enumerate()
            .map(|(k, o)| o.weight(&t.project(Axes::Slice(k))?))
            .collect()
    }
}

/// `a` compared with `b` under `ord`.
pub fn term_compare(a: &Table3, b: &Table3, ord: &TermOrder) -> Result<Ordering> {
    ord.compare(a, b)
}
