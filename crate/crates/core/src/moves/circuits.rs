use std::collections::HashSet;
use std::ops::ControlFlow;

use crate::error::{invalid, Error, Result};
use crate::tables::{Table2, Table3};

use super::{Move2, Move3};

/// Visits every signed circuit of an `m × n` table whose cells satisfy
/// `allowed`.
///
/// A circuit is a cycle `r_1 c_1 r_2 c_2 … r_k c_k` of the complete
/// bipartite graph; it has `+1` at `(r_s, c_s)` and `-1` at `(r_{s+1}, c_s)`.
/// Fixing `r_1` as the smallest row makes each signed circuit appear once.
pub fn for_each_circuit<F>(
    m: usize,
    n: usize,
    allowed: &dyn Fn(usize, usize) -> bool,
    mut f: F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize], &[usize]) -> ControlFlow<()>,
{
    let mut rows = Vec::with_capacity(m);
    let mut cols = Vec::with_capacity(n);
    let mut row_used = vec![false; m];
    let mut col_used = vec![false; n];
    for r0 in 0..m {
        rows.push(r0);
        row_used[r0] = true;
        extend(
            m, n, allowed, &mut rows, &mut cols, &mut row_used, &mut col_used, &mut f,
        )?;
        row_used[r0] = false;
        rows.pop();
    }
    ControlFlow::Continue(())
}

// Extends a path ending at a row by one column, closing the cycle whenever the
// column can return to the first row.
#[allow(clippy::too_many_arguments)]
fn extend<F>(
    m: usize,
    n: usize,
    allowed: &dyn Fn(usize, usize) -> bool,
    rows: &mut Vec<usize>,
    cols: &mut Vec<usize>,
    row_used: &mut [bool],
    col_used: &mut [bool],
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize], &[usize]) -> ControlFlow<()>,
{
    let r0 = rows[0];
    let last = *rows.last().unwrap();
    for c in 0..n {
        if col_used[c] || !allowed(last, c) {
            continue;
        }
        cols.push(c);
        col_used[c] = true;
        if rows.len() >= 2 && allowed(r0, c) {
            f(rows, cols)?;
        }
        for r in r0 + 1..m {
            if !row_used[r] && allowed(r, c) {
                rows.push(r);
                row_used[r] = true;
                extend(m, n, allowed, rows, cols, row_used, col_used, f)?;
                row_used[r] = false;
                rows.pop();
            }
        }
        col_used[c] = false;
        cols.pop();
    }
    ControlFlow::Continue(())
}

pub(crate) fn cycle_cells(rows: &[usize], cols: &[usize]) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let k = rows.len();
    let plus = (0..k).map(|s| (rows[s], cols[s])).collect();
    let minus = (0..k).map(|s| (rows[(s + 1) % k], cols[s])).collect();
    (plus, minus)
}

/// All signed circuits of an `m × n` table: the minimal-support `{0, ±1}`
/// matrices with zero line sums. Each circuit appears once per sign.
pub fn enumerate_circuits_2way(m: usize, n: usize) -> Vec<Move2> {
    let mut out = Vec::new();
    if m < 2 || n < 2 {
        return out;
    }
    let _ = for_each_circuit(m, n, &|_, _| true, |rows, cols| {
        let (plus, minus) = cycle_cells(rows, cols);
        out.push(Move2::from_cells(m, n, &plus, &minus));
        ControlFlow::Continue(())
    });
    out
}

/// The action space of the 2-way game: every nonzero `{-1, 0, 1}` matrix with
/// zero line sums, in lexicographic order of the row-major entry vector.
pub fn enumerate_actions_2way(m: usize, n: usize) -> Vec<Move2> {
    let mut out = Vec::new();
    if m < 2 || n < 2 {
        return out;
    }
    let mut cur = vec![0i64; m * n];
    let mut col = vec![0i64; n];
    actions_rec(m, n, 0, 0, &mut cur, &mut col, &mut out);
    out
}

fn actions_rec(
    m: usize,
    n: usize,
    pos: usize,
    row_sum: i64,
    cur: &mut [i64],
    col: &mut [i64],
    out: &mut Vec<Move2>,
) {
    if pos == m * n {
        if cur.iter().any(|&v| v != 0) {
            let t = Table2::from_vec(m, n, cur.to_vec()).expect("sized");
            out.push(Move2(t));
        }
        return;
    }
    let (i, j) = (pos / n, pos % n);
    let rows_left = (m - i - 1) as i64;
    let cells_left = (n - j - 1) as i64;
    for v in [-1i64, 0, 1] {
        let rs = row_sum + v;
        let cs = col[j] + v;
        if rs.abs() > cells_left || cs.abs() > rows_left {
            continue;
        }
        cur[pos] = v;
        col[j] = cs;
        actions_rec(m, n, pos + 1, if j + 1 == n { 0 } else { rs }, cur, col, out);
        col[j] -= v;
    }
    cur[pos] = 0;
}

/// Writes a zero-line-sum integer table as a sum of circuits, each with a
/// positive multiplicity and sign-compatible with `delta` (every circuit is
/// `+1` only where `delta > 0` and `-1` only where `delta < 0`).
///
/// Applying the circuits in order to a nonnegative `t` with `t + delta ≥ 0`
/// never leaves the nonnegative orthant.
pub fn conformal_decomposition(delta: &Table2) -> Result<Vec<(Move2, i64)>> {
    if delta.row_sums()?.iter().chain(&delta.col_sums()?).any(|&s| s != 0) {
        return invalid("only tables with zero line sums decompose into circuits");
    }
    let (m, n) = delta.shape();
    let mut rest = delta.clone();
    let mut out = Vec::new();
    while let Some(start) = (0..m).find(|&i| (0..n).any(|j| rest.get(i, j) > 0)) {
        // walk row -> positive cell -> column -> negative cell -> row until a row repeats
        let mut seen = vec![usize::MAX; m];
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut r = start;
        loop {
            if seen[r] != usize::MAX {
                let from = seen[r];
                rows.drain(..from);
                cols.drain(..from);
                break;
            }
            seen[r] = rows.len();
            rows.push(r);
            let c = (0..n)
                .find(|&j| rest.get(r, j) > 0)
                .ok_or_else(|| Error::InvalidInput("unbalanced row".into()))?;
            cols.push(c);
            r = (0..m)
                .find(|&i| rest.get(i, c) < 0)
                .ok_or_else(|| Error::InvalidInput("unbalanced column".into()))?;
        }
        let (plus, minus) = cycle_cells(&rows, &cols);
        let mult = plus
            .iter()
            .map(|&(i, j)| rest.get(i, j))
            .chain(minus.iter().map(|&(i, j)| -rest.get(i, j)))
            .min()
            .unwrap();
        for &(i, j) in &plus {
            rest.add_at(i, j, -mult);
        }
        for &(i, j) in &minus {
            rest.add_at(i, j, mult);
        }
        out.push((Move2::from_cells(m, n, &plus, &minus), mult));
    }
    Ok(out)
}

/// Places a 2-way `l × m` move on horizontal slice `k` of an `l × m × n`
/// table.
pub fn slice_embed(g: &Move2, k: usize, n: usize) -> Result<Move3> {
    if k >= n {
        return invalid(format!("slice {k} out of range for height {n}"));
    }
    let (l, m) = g.shape();
    let mut t = Table3::zeros(l, m, n);
    t.set_slice(k, g.table())?;
    Ok(Move3(t))
}

/// Which projection a 2-way move lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftAxis {
    /// `g` is an `l × n` table indexed by `(i, k)`; the lift picks `j`s.
    XZ,
    /// `g` is an `m × n` table indexed by `(j, k)`; the lift picks `i`s.
    YZ,
}

/// Pairs the `-1` and `+1` cells of a projected move column by column:
/// `(k, removed_from, added_to)` in increasing `k`, then increasing row.
pub(crate) fn pairs(g: &Move2) -> Vec<(usize, usize, usize)> {
    let (rows, cols) = g.shape();
    let mut out = Vec::new();
    for k in 0..cols {
        let minus: Vec<usize> = (0..rows).filter(|&i| g.get(i, k) < 0).collect();
        let plus: Vec<usize> = (0..rows).filter(|&i| g.get(i, k) > 0).collect();
        out.extend(minus.into_iter().zip(plus).map(|(a, b)| (k, a, b)));
    }
    out
}

/// Number of index choices a lift of `g` needs.
pub fn lift_degree(g: &Move2) -> usize {
    pairs(g).len()
}

/// Lifts a move of the xz (or yz) projection to a 3-way move using one free
/// index per pair of cells. `other` is the size of the free axis.
///
/// Fails when two units land on one cell, which would leave `{-1, 0, 1}`.
pub fn lift_move(g: &Move2, axis: LiftAxis, assignment: &[usize], other: usize) -> Result<Move3> {
    let ps = pairs(g);
    if assignment.len() != ps.len() {
        return invalid(format!(
            "lift needs {} indices, got {}",
            ps.len(),
            assignment.len()
        ));
    }
    if assignment.iter().any(|&a| a >= other) {
        return invalid("lift index out of range");
    }
    let (rows, n) = g.shape();
    let mut t = match axis {
        LiftAxis::XZ => Table3::zeros(rows, other, n),
        LiftAxis::YZ => Table3::zeros(other, rows, n),
    };
    for (&(k, from, to), &free) in ps.iter().zip(assignment) {
        match axis {
            LiftAxis::XZ => {
                t.add_at(from, free, k, -1);
                t.add_at(to, free, k, 1);
            }
            LiftAxis::YZ => {
                t.add_at(free, from, k, -1);
                t.add_at(free, to, k, 1);
            }
        }
    }
    if t.as_slice().iter().any(|v| !(-1..=1).contains(v)) {
        return invalid("lifting collides on a cell");
    }
    Ok(Move3(t))
}

/// Every non-colliding lift of `g`.
pub fn liftings(g: &Move2, axis: LiftAxis, other: usize) -> Vec<Move3> {
    let t = lift_degree(g);
    let mut out = Vec::new();
    if other == 0 {
        return out;
    }
    let mut assignment = vec![0usize; t];
    loop {
        if let Ok(mv) = lift_move(g, axis, &assignment, other) {
            out.push(mv);
        }
        let mut pos = 0;
        loop {
            if pos == t {
                return out;
            }
            assignment[pos] += 1;
            if assignment[pos] < other {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// The move set `L(G_xz) ∪ L(G_yz) ∪ F(G_1, …, G_n)` for `l × m × n` tables,
/// built from 2-way circuits. Only meant for small shapes: the reduction
/// engine generates the moves it needs on the fly instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroebnerMoves {
    pub dims: [usize; 3],
}

impl GroebnerMoves {
    pub fn new(dims: [usize; 3]) -> Self {
        GroebnerMoves { dims }
    }

    pub fn lifted_xz(&self) -> Vec<Move3> {
        let [l, m, n] = self.dims;
        enumerate_circuits_2way(l, n)
            .iter()
            .flat_map(|g| liftings(g, LiftAxis::XZ, m))
            .collect()
    }

    pub fn lifted_yz(&self) -> Vec<Move3> {
        let [l, m, n] = self.dims;
        enumerate_circuits_2way(m, n)
            .iter()
            .flat_map(|g| liftings(g, LiftAxis::YZ, l))
            .collect()
    }

    pub fn slice_moves(&self) -> Vec<Move3> {
        let [l, m, n] = self.dims;
        let base = enumerate_circuits_2way(l, m);
        (0..n)
            .flat_map(|k| base.iter().map(move |g| slice_embed(g, k, n).expect("k < n")))
            .collect()
    }

    /// The union without duplicates, in the order lifted xz, lifted yz, slices.
    pub fn all(&self) -> Vec<Move3> {
        let mut seen = HashSet::new();
        self.lifted_xz()
            .into_iter()
            .chain(self.lifted_yz())
            .chain(self.slice_moves())
            .filter(|mv| seen.insert(mv.clone()))
            .collect()
    }
}
