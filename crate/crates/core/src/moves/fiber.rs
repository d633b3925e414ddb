use std::collections::{BTreeSet, VecDeque};
use std::ops::ControlFlow;

use crate::error::{invalid, Error, Result};
use crate::tables::{Margins2, Table2};

use super::circuits::{cycle_cells, for_each_circuit};
use super::Move2;

/// All tables with the anchor's margins and support inside `enabled`,
/// reached by breadth-first search along circuits that stay inside the
/// enabled cells. Sorted; fails with [`Error::BudgetExhausted`] past `cap`
/// tables.
pub fn enumerate_fiber_2way(anchor: &Table2, enabled: &[bool], cap: usize) -> Result<Vec<Table2>> {
    let (m, n) = anchor.shape();
    if enabled.len() != m * n {
        return invalid("enabled mask does not match the table shape");
    }
    if !anchor.is_nonnegative() {
        return invalid("anchor must be nonnegative");
    }
    if anchor
        .as_slice()
        .iter()
        .zip(enabled)
        .any(|(&v, &on)| v != 0 && !on)
    {
        return invalid("anchor has mass on a forbidden cell");
    }
    let mut moves = Vec::new();
    if m >= 2 && n >= 2 {
        let _ = for_each_circuit(m, n, &|i, j| enabled[i * n + j], |rows, cols| {
            let (plus, minus) = cycle_cells(rows, cols);
            moves.push(Move2::from_cells(m, n, &plus, &minus));
            ControlFlow::Continue(())
        });
    }
    let mut seen = BTreeSet::from([anchor.clone()]);
    let mut queue = VecDeque::from([anchor.clone()]);
    while let Some(t) = queue.pop_front() {
        for g in &moves {
            if let Some(next) = g.apply(&t, 1) {
                if !seen.contains(&next) {
                    if seen.len() >= cap {
                        return Err(Error::BudgetExhausted(format!("fiber exceeds {cap} tables")));
                    }
                    seen.insert(next.clone());
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// Direct enumeration of every nonnegative table with the given margins
/// (and, optionally, support inside `enabled`), filling cells row-major.
/// Sorted; fails past `cap` tables.
pub fn enumerate_fiber_direct(
    margins: &Margins2,
    enabled: Option<&[bool]>,
    cap: usize,
) -> Result<Vec<Table2>> {
    let (m, n) = (margins.rows.len(), margins.cols.len());
    if margins.rows.iter().chain(&margins.cols).any(|&v| v < 0) {
        return invalid("margins must be nonnegative");
    }
    if enabled.is_some_and(|e| e.len() != m * n) {
        return invalid("enabled mask does not match the margins");
    }
    let mut out = Vec::new();
    if margins.rows.iter().sum::<i64>() != margins.cols.iter().sum::<i64>() {
        return Ok(out);
    }
    let mut rows = margins.rows.clone();
    let mut cols = margins.cols.clone();
    let mut cur = vec![0i64; m * n];
    fill(m, n, 0, enabled, &mut rows, &mut cols, &mut cur, &mut out, cap)?;
    out.sort();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn fill(
    m: usize,
    n: usize,
    pos: usize,
    enabled: Option<&[bool]>,
    rows: &mut [i64],
    cols: &mut [i64],
    cur: &mut [i64],
    out: &mut Vec<Table2>,
    cap: usize,
) -> Result<()> {
    if pos == m * n {
        if rows.iter().chain(cols.iter()).all(|&v| v == 0) {
            if out.len() >= cap {
                return Err(Error::BudgetExhausted(format!("fiber exceeds {cap} tables")));
            }
            out.push(Table2::from_vec(m, n, cur.to_vec())?);
        }
        return Ok(());
    }
    let (i, j) = (pos / n, pos % n);
    let on = enabled.map_or(true, |e| e[pos]);
    let hi = if on { rows[i].min(cols[j]) } else { 0 };
    // the last cell of a row must take the rest of the row
    let lo = if j + 1 == n { rows[i] } else { 0 };
    for v in lo..=hi {
        cur[pos] = v;
        rows[i] -= v;
        cols[j] -= v;
        fill(m, n, pos + 1, enabled, rows, cols, cur, out, cap)?;
        rows[i] += v;
        cols[j] += v;
    }
    cur[pos] = 0;
    Ok(())
}
