//! Rounding a real-valued network output to the nearest legal action.
//!
//! Without bounds on the number of `+1` entries the problem is a min-cost
//! circulation (see [`flow`]). With bounds, a depth-first search assigns
//! `-1`, `0` or `1` to each cell in row-major order and bounds the remaining
//! cost by the cheapest completion of the open rows (ignoring columns) and of
//! the open columns (ignoring rows). Values are tried in increasing order and
//! the incumbent only changes on a strict improvement. Both paths resolve
//! ties to the lexicographically smallest action.

mod flow;

use crate::error::{invalid, Error, Result};
use crate::moves::{enumerate_actions_2way, Move2};
use crate::tables::Table2;

/// Costs within this margin count as equal.
pub const TIE_EPS: f64 = 1e-9;

/// A real `rows × cols` matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealTable {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!("expected {} entries, got {}", rows * cols, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("target entries must be finite");
        }
        Ok(RealTable { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return invalid("ragged rows");
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Header `rows cols` then one whitespace-separated row per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut dim = || -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse("missing dimensions".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("dimension: {e}")))
        };
        let (rows, cols) = (dim()?, dim()?);
        let data = tokens
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("entry {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_vec(rows, cols, data)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProjectOptions {
    /// Exponent of the per-entry cost `|ã - a|^d`; 1 or 2.
    pub d: u32,
    /// Lower bound on the number of `+1` entries.
    pub c1: Option<usize>,
    /// Upper bound on the number of `+1` entries.
    pub c2: Option<usize>,
    /// Forbid `-1` on cells where the state is zero, so the result is legal.
    pub respect_state: bool,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        ProjectOptions {
            d: 2,
            c1: None,
            c2: None,
            respect_state: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub action: Move2,
    pub distance: f64,
}

/// Per-cell cost of `-1`, `0`, `1`; `None` marks a value the cell may not take.
pub(crate) type CellCosts = [Option<f64>; 3];

/// Lexicographically first minimiser of `Σ cost(cell, value)` over nonzero
/// `{-1,0,1}` tables with zero line sums whose `+1` count lies in
/// `[min_plus, max_plus]`.
pub(crate) fn ternary_min(
    m: usize,
    n: usize,
    costs: &[CellCosts],
    min_plus: usize,
    max_plus: usize,
) -> Option<(Vec<i8>, f64)> {
    // a row holds as many `-1` as `+1` entries
    let most = (m * (n / 2)).min(n * (m / 2));
    let convex = costs.iter().all(|c| match (c[0], c[1], c[2]) {
        (Some(lo), Some(mid), Some(hi)) => lo + hi >= 2.0 * mid - TIE_EPS,
        (_, Some(_), _) => true,
        _ => false,
    });
    if m >= 2 && n >= 2 && min_plus <= 1 && max_plus >= most && convex {
        return flow::min_circulation(m, n, costs);
    }
    ternary_search(m, n, costs, min_plus, max_plus)
}

/// [`ternary_min`] by branch and bound, for any costs and `+1` bounds.
pub(crate) fn ternary_search(
    m: usize,
    n: usize,
    costs: &[CellCosts],
    min_plus: usize,
    max_plus: usize,
) -> Option<(Vec<i8>, f64)> {
    let min_plus = min_plus.max(1);
    if m < 2 || n < 2 || min_plus > max_plus {
        return None;
    }
    let search = Ternary::new(m, n, costs);
    let mut st = State {
        row_sum: 0,
        col_sums: vec![0; n],
        plus: 0,
        cur: vec![0; m * n],
        best: None,
        min_plus,
        max_plus,
    };
    search.dfs(0, 0.0, &mut st);
    st.best
}

struct Ternary<'a> {
    m: usize,
    n: usize,
    costs: &'a [CellCosts],
    /// `row_dp[(i * (n + 1) + j) * width + s + n]`: cheapest fill of cells
    /// `j..n` of row `i` summing to `s`.
    row_dp: Vec<f64>,
    /// `col_dp[(j * (m + 1) + i) * width + s + m]`, the same for column `j`
    /// from row `i` down.
    col_dp: Vec<f64>,
    /// Cheapest zero-sum fill of rows `i..m`, row constraints only.
    rows_below: Vec<f64>,
}

struct State {
    row_sum: i64,
    col_sums: Vec<i64>,
    plus: usize,
    cur: Vec<i8>,
    best: Option<(Vec<i8>, f64)>,
    min_plus: usize,
    max_plus: usize,
}

impl<'a> Ternary<'a> {
    fn new(m: usize, n: usize, costs: &'a [CellCosts]) -> Self {
        let rw = 2 * n + 1;
        let mut row_dp = vec![f64::INFINITY; m * (n + 1) * rw];
        for i in 0..m {
            row_dp[(i * (n + 1) + n) * rw + n] = 0.0;
            for j in (0..n).rev() {
                for s in -(n as i64)..=(n as i64) {
                    let mut best = f64::INFINITY;
                    for (vi, c) in costs[i * n + j].iter().enumerate() {
                        let (Some(c), rest) = (c, s - (vi as i64 - 1)) else { continue };
                        if rest.abs() <= n as i64 {
                            best = best.min(c + row_dp[(i * (n + 1) + j + 1) * rw + (rest + n as i64) as usize]);
                        }
                    }
                    row_dp[(i * (n + 1) + j) * rw + (s + n as i64) as usize] = best;
                }
            }
        }
        let cw = 2 * m + 1;
        let mut col_dp = vec![f64::INFINITY; n * (m + 1) * cw];
        for j in 0..n {
            col_dp[(j * (m + 1) + m) * cw + m] = 0.0;
            for i in (0..m).rev() {
                for s in -(m as i64)..=(m as i64) {
                    let mut best = f64::INFINITY;
                    for (vi, c) in costs[i * n + j].iter().enumerate() {
                        let (Some(c), rest) = (c, s - (vi as i64 - 1)) else { continue };
                        if rest.abs() <= m as i64 {
                            best = best.min(c + col_dp[(j * (m + 1) + i + 1) * cw + (rest + m as i64) as usize]);
                        }
                    }
                    col_dp[(j * (m + 1) + i) * cw + (s + m as i64) as usize] = best;
                }
            }
        }
        let mut rows_below = vec![0.0; m + 1];
        for i in (0..m).rev() {
            rows_below[i] = rows_below[i + 1] + row_dp[(i * (n + 1)) * rw + n];
        }
        Ternary {
            m,
            n,
            costs,
            row_dp,
            col_dp,
            rows_below,
        }
    }

    fn row_need(&self, i: usize, j: usize, s: i64) -> f64 {
        let n = self.n as i64;
        if s.abs() > n {
            return f64::INFINITY;
        }
        self.row_dp[(i * (self.n + 1) + j) * (2 * self.n + 1) + (s + n) as usize]
    }

    fn col_need(&self, j: usize, i: usize, s: i64) -> f64 {
        let m = self.m as i64;
        if s.abs() > m {
            return f64::INFINITY;
        }
        self.col_dp[(j * (self.m + 1) + i) * (2 * self.m + 1) + (s + m) as usize]
    }

    /// Lower bound on the cost of cells from `pos` on.
    fn bound(&self, pos: usize, st: &State) -> f64 {
        let (i, j) = (pos / self.n, pos % self.n);
        let rows = self.row_need(i, j, -st.row_sum) + self.rows_below[i + 1];
        let cols: f64 = (0..self.n)
            .map(|c| {
                let start = if c >= j { i } else { i + 1 };
                self.col_need(c, start, -st.col_sums[c])
            })
            .sum();
        rows.max(cols)
    }

    fn dfs(&self, pos: usize, cost: f64, st: &mut State) {
        let (m, n) = (self.m, self.n);
        if pos == m * n {
            if st.plus >= st.min_plus && st.best.as_ref().is_none_or(|(_, b)| cost < b - TIE_EPS) {
                st.best = Some((st.cur.clone(), cost));
            }
            return;
        }
        let lb = cost + self.bound(pos, st);
        if !lb.is_finite() || st.best.as_ref().is_some_and(|(_, b)| lb >= b - TIE_EPS) {
            return;
        }
        let j = pos % n;
        for (vi, c) in self.costs[pos].iter().enumerate() {
            let Some(c) = c else { continue };
            let v = vi as i64 - 1;
            if v == 1 && st.plus == st.max_plus {
                continue;
            }
            st.cur[pos] = v as i8;
            st.row_sum += v;
            st.col_sums[j] += v;
            st.plus += usize::from(v == 1);
            if j + 1 < n || st.row_sum == 0 {
                self.dfs(pos + 1, cost + c, st);
            }
            st.plus -= usize::from(v == 1);
            st.col_sums[j] -= v;
            st.row_sum -= v;
        }
        st.cur[pos] = 0;
    }
}

fn entry_cost(target: f64, v: f64, d: u32) -> f64 {
    let e = (v - target).abs();
    if d == 1 {
        e
    } else {
        e * e
    }
}

fn check(state: &Table2, target: &RealTable, opts: &ProjectOptions) -> Result<()> {
    if state.shape() != target.shape() {
        return invalid("state and target shapes differ");
    }
    if !matches!(opts.d, 1 | 2) {
        return invalid("d must be 1 or 2");
    }
    Ok(())
}

fn plus_range(opts: &ProjectOptions, m: usize, n: usize) -> (usize, usize) {
    (opts.c1.unwrap_or(1).max(1), opts.c2.unwrap_or(m * n))
}

/// The action closest to `target` in `Σ |ã - a|^d`.
pub fn project_action(state: &Table2, target: &RealTable, opts: &ProjectOptions) -> Result<Projection> {
    check(state, target, opts)?;
    let (m, n) = state.shape();
    let costs: Vec<CellCosts> = (0..m * n)
        .map(|p| {
            let a = target.as_slice()[p];
            let blocked = opts.respect_state && state.as_slice()[p] == 0;
            [
                (!blocked).then(|| entry_cost(a, -1.0, opts.d)),
                Some(entry_cost(a, 0.0, opts.d)),
                Some(entry_cost(a, 1.0, opts.d)),
            ]
        })
        .collect();
    let (lo, hi) = plus_range(opts, m, n);
    let (cells, distance) = ternary_min(m, n, &costs, lo, hi)
        .ok_or_else(|| Error::ProjectionInfeasible("no action satisfies the constraints".into()))?;
    let table = Table2::from_vec(m, n, cells.into_iter().map(i64::from).collect())?;
    Ok(Projection {
        action: Move2::new(table)?,
        distance,
    })
}

/// Reference answer by scanning every action in lexicographic order; for
/// tables with at most 16 cells.
pub fn brute_force_project(state: &Table2, target: &RealTable, opts: &ProjectOptions) -> Result<Projection> {
    check(state, target, opts)?;
    let (m, n) = state.shape();
    if m * n > 16 {
        return Err(Error::TooLarge(format!("{m}x{n} is too large to enumerate")));
    }
    let (lo, hi) = plus_range(opts, m, n);
    let mut best: Option<Projection> = None;
    for g in enumerate_actions_2way(m, n) {
        let t = g.table().as_slice();
        let plus = t.iter().filter(|&&v| v == 1).count();
        if plus < lo || plus > hi {
            continue;
        }
        if opts.respect_state && t.iter().zip(state.as_slice()).any(|(&v, &s)| v < 0 && s == 0) {
            continue;
        }
        let cost: f64 = t
            .iter()
            .zip(target.as_slice())
            .map(|(&v, &a)| entry_cost(a, v as f64, opts.d))
            .sum();
        if best.as_ref().is_none_or(|b| cost < b.distance - TIE_EPS) {
            best = Some(Projection { action: g, distance: cost });
        }
    }
    best.ok_or_else(|| Error::ProjectionInfeasible("no action satisfies the constraints".into()))
}
