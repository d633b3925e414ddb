//! Moves between tables with equal margins, term orders on those tables,
//! and the feasibility game played with them.
//!
//! A move is stored as the delta added to a table: applying `g` to `t`
//! gives `t + g`. A move reduces `t` under an order when `t + g ≥ 0` and
//! `t + g ≺ t`.

mod circuits;
mod fiber;
pub(crate) mod flow;
mod ifp;
mod order;
mod reduce;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tables::{Table2, Table3};

pub use circuits::{
    conformal_decomposition, enumerate_actions_2way, enumerate_circuits_2way, for_each_circuit,
    lift_degree, lift_move, liftings, slice_embed, GroebnerMoves, LiftAxis,
};
pub use fiber::{enumerate_fiber_2way, enumerate_fiber_direct};
pub use ifp::{
    ifp_solve, ifp_solve_with, replay_certificate, solve_system, Budget, Certificate, IfpOutcome,
    NoReason, Strategy,
};
pub use order::{term_compare, Order2, TermOrder};
pub use reduce::{
    find_reducing_circuit, reduce_2way, reduce_to_sink, Policy, Reduction, Reduction2,
};

/// A 2-way move: entries in `{-1, 0, 1}` with zero row and column sums.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Table2", into = "Table2")]
pub struct Move2(Table2);

impl Move2 {
    pub fn new(t: Table2) -> Result<Self> {
        if t.as_slice().iter().any(|v| !(-1..=1).contains(v)) {
            return invalid("move entries must lie in {-1, 0, 1}");
        }
        if t.row_sums()?.iter().chain(&t.col_sums()?).any(|&s| s != 0) {
            return invalid("move line sums must be zero");
        }
        Ok(Move2(t))
    }

    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Table2::from_rows(rows)?)
    }

    /// Builds a move from its `+1` and `-1` cells without re-checking sums.
    pub(crate) fn from_cells(
        rows: usize,
        cols: usize,
        plus: &[(usize, usize)],
        minus: &[(usize, usize)],
    ) -> Self {
        let mut t = Table2::zeros(rows, cols);
        for &(i, j) in plus {
            t.set(i, j, 1);
        }
        for &(i, j) in minus {
            t.set(i, j, -1);
        }
        Move2(t)
    }

    pub fn table(&self) -> &Table2 {
        &self.0
    }

    pub fn into_table(self) -> Table2 {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.0.get(i, j)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn positive_part(&self) -> Table2 {
        let mut t = self.0.clone();
        for i in 0..t.rows() {
            for j in 0..t.cols() {
                t.set(i, j, t.get(i, j).max(0));
            }
        }
        t
    }

    pub fn negative_part(&self) -> Table2 {
        let mut t = self.0.clone();
        for i in 0..t.rows() {
            for j in 0..t.cols() {
                t.set(i, j, (-t.get(i, j)).max(0));
            }
        }
        t
    }

    pub fn negated(&self) -> Move2 {
        Move2(self.0.negated())
    }

    pub fn support_size(&self) -> usize {
        self.0.as_slice().iter().filter(|&&v| v != 0).count()
    }

    /// `t + times·self` when that stays nonnegative.
    pub fn apply(&self, t: &Table2, times: i64) -> Option<Table2> {
        if t.shape() != self.shape() {
            return None;
        }
        let data = t
            .as_slice()
            .iter()
            .zip(self.0.as_slice())
            .map(|(&a, &g)| a.checked_add(g.checked_mul(times)?).filter(|&v| v >= 0))
            .collect::<Option<Vec<_>>>()?;
        Table2::from_vec(t.rows(), t.cols(), data).ok()
    }
}

impl TryFrom<Table2> for Move2 {
    type Error = crate::Error;

    fn try_from(t: Table2) -> Result<Self> {
        Move2::new(t)
    }
}

impl From<Move2> for Table2 {
    fn from(m: Move2) -> Table2 {
        m.0
    }
}

/// A 3-way move: entries in `{-1, 0, 1}` preserving all three families of
/// plane sums.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move3(Table3);

impl Move3 {
    pub fn new(t: Table3) -> Result<Self> {
        if t.as_slice().iter().any(|v| !(-1..=1).contains(v)) {
            return invalid("move entries must lie in {-1, 0, 1}");
        }
        let m = t.margins()?;
        if m.x.iter().chain(&m.y).chain(&m.z).any(|&s| s != 0) {
            return invalid("move plane sums must be zero");
        }
        Ok(Move3(t))
    }

    pub(crate) fn from_table_unchecked(t: Table3) -> Self {
        Move3(t)
    }

    pub fn table(&self) -> &Table3 {
        &self.0
    }

    pub fn dims(&self) -> [usize; 3] {
        self.0.dims()
    }

    pub fn is_zero(&self) -> bool {
        self.0.as_slice().iter().all(|&v| v == 0)
    }

    /// Nonzero cells as `(i, j, k, value)`.
    pub fn cells(&self) -> Vec<(usize, usize, usize, i64)> {
        let [_, m, n] = self.dims();
        self.0
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(idx, &v)| (idx / (m * n), (idx / n) % m, idx % n, v))
            .collect()
    }

    /// `t + times·self` when that stays nonnegative.
    pub fn apply(&self, t: &Table3, times: i64) -> Option<Table3> {
        if t.dims() != self.dims() {
            return None;
        }
        let [l, m, n] = t.dims();
        let data = t
            .as_slice()
            .iter()
            .zip(self.0.as_slice())
            .map(|(&a, &g)| a.checked_add(g.checked_mul(times)?).filter(|&v| v >= 0))
            .collect::<Option<Vec<_>>>()?;
        Table3::from_vec(l, m, n, data).ok()
    }
}
