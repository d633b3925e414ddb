//! Dense integer 2-way and 3-way tables, their margins, axis projections and
//! the greedy northwest-corner construction.
//!
//! Entries are `i64` and every sum is overflow-checked. Tables themselves do
//! not forbid negative entries (differences of tables are useful in move
//! arithmetic); operations that need a genuine lattice point check
//! [`Table2::is_nonnegative`] / [`Table3::is_nonnegative`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub(crate) fn checked_sum<'a>(values: impl IntoIterator<Item = &'a i64>) -> Result<i64> {
    values
        .into_iter()
        .try_fold(0i64, |acc, &v| acc.checked_add(v))
        .ok_or(Error::Overflow("table sum"))
}

/// An `rows × cols` integer table stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Table2 {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl Table2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Table2 {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "expected {} entries for a {rows}x{cols} table, got {}",
                rows * cols,
                data.len()
            ));
        }
        Ok(Table2 { rows, cols, data })
    }

    /// Builds a table from nested rows; all rows must have the same length.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return invalid(format!("row {i} has length {}, expected {cols}", r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Table2 {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: i64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub(crate) fn add_at(&mut self, i: usize, j: usize, delta: i64) {
        self.data[i * self.cols + j] += delta;
    }

    /// Entries in canonical (row-major) order.
    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.cols.max(1)).map(|c| c.to_vec()).take(self.rows).collect()
    }

    pub fn row_sums(&self) -> Result<Vec<i64>> {
        (0..self.rows)
            .map(|i| checked_sum(&self.data[i * self.cols..(i + 1) * self.cols]))
            .collect()
    }

    pub fn col_sums(&self) -> Result<Vec<i64>> {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .try_fold(0i64, |acc, i| acc.checked_add(self.get(i, j)))
                    .ok_or(Error::Overflow("column sum"))
            })
            .collect()
    }

    pub fn margins(&self) -> Result<Margins2> {
        Ok(Margins2 {
            rows: self.row_sums()?,
            cols: self.col_sums()?,
        })
    }

    pub fn total(&self) -> Result<i64> {
        checked_sum(&self.data)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Largest absolute entry (0 for an empty table).
    pub fn max_abs(&self) -> i64 {
        self.data.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    /// Entrywise sum, overflow-checked.
    pub fn checked_add(&self, other: &Table2) -> Result<Table2> {
        if self.shape() != other.shape() {
            return invalid(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow("table addition")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Table2 {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn checked_sub(&self, other: &Table2) -> Result<Table2> {
        let neg = Table2 {
            rows: other.rows,
            cols: other.cols,
            data: other.data.iter().map(|v| -v).collect(),
        };
        self.checked_add(&neg)
    }

    pub fn negated(&self) -> Table2 {
        Table2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| -v).collect(),
        }
    }

    /// Indices `(i, j)` of nonzero entries in canonical order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j) != 0)
            .collect()
    }

    /// Text form: a `rows cols` header line, then one line per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for row in self.to_rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Table2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.to_rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:>3}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// An `l × m × n` integer table stored with `i` slowest and `k` fastest.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Table3 {
    dims: [usize; 3],
    data: Vec<i64>,
}

/// Axis selector for [`Table3::project`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axes {
    /// Sum over `j`; entry `(i, k)`.
    XZ,
    /// Sum over `i`; entry `(j, k)`.
    YZ,
    /// The horizontal slice at height `k`; entry `(i, j)`.
    Slice(usize),
}

impl Table3 {
    pub fn zeros(l: usize, m: usize, n: usize) -> Self {
        Table3 {
            dims: [l, m, n],
            data: vec![0; l * m * n],
        }
    }

    pub fn from_vec(l: usize, m: usize, n: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != l * m * n {
            return invalid(format!(
                "expected {} entries for a {l}x{m}x{n} table, got {}",
                l * m * n,
                data.len()
            ));
        }
        Ok(Table3 {
            dims: [l, m, n],
            data,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> i64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: i64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    #[inline]
    pub(crate) fn add_at(&mut self, i: usize, j: usize, k: usize, delta: i64) {
        let o = self.offset(i, j, k);
        self.data[o] += delta;
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0)
    }

    pub fn total(&self) -> Result<i64> {
        checked_sum(&self.data)
    }

    pub fn project(&self, axes: Axes) -> Result<Table2> {
        let [l, m, n] = self.dims;
        let mut out = match axes {
            Axes::XZ => Table2::zeros(l, n),
            Axes::YZ => Table2::zeros(m, n),
            Axes::Slice(k) => {
                if k >= n {
                    return invalid(format!("slice {k} out of range for height {n}"));
                }
                Table2::zeros(l, m)
            }
        };
        for i in 0..l {
            for j in 0..m {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    let (a, b) = match axes {
                        Axes::XZ => (i, k),
                        Axes::YZ => (j, k),
                        Axes::Slice(s) if s == k => (i, j),
                        Axes::Slice(_) => continue,
                    };
                    let cur = out.get(a, b);
                    out.set(a, b, cur.checked_add(v).ok_or(Error::Overflow("projection"))?);
                }
            }
        }
        Ok(out)
    }

    /// Overwrites slice `k` with a `l × m` table.
    pub fn set_slice(&mut self, k: usize, slice: &Table2) -> Result<()> {
        let [l, m, n] = self.dims;
        if k >= n || slice.shape() != (l, m) {
            return invalid("slice shape or index mismatch");
        }
        for i in 0..l {
            for j in 0..m {
                self.set(i, j, k, slice.get(i, j));
            }
        }
        Ok(())
    }

    pub fn margins(&self) -> Result<Margins3> {
        let [l, m, n] = self.dims;
        let mut x = vec![0i64; l];
        let mut y = vec![0i64; m];
        let mut z = vec![0i64; n];
        for i in 0..l {
            for j in 0..m {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    x[i] = x[i].checked_add(v).ok_or(Error::Overflow("x margin"))?;
                    y[j] = y[j].checked_add(v).ok_or(Error::Overflow("y margin"))?;
                    z[k] = z[k].checked_add(v).ok_or(Error::Overflow("z margin"))?;
                }
            }
        }
        Ok(Margins3 { x, y, z })
    }

    pub fn checked_sub(&self, other: &Table3) -> Result<Table3> {
        if self.dims != other.dims {
            return invalid("shape mismatch");
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.checked_sub(*b).ok_or(Error::Overflow("table difference")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Table3 {
            dims: self.dims,
            data,
        })
    }

    /// Text form: an `l m n` header line, then one line per `(i, j)` pair
    /// holding the `n` entries along `k`.
    pub fn to_text(&self) -> String {
        let [l, m, n] = self.dims;
        let mut out = format!("{l} {m} {n}\n");
        for i in 0..l {
            for j in 0..m {
                let line: Vec<String> = (0..n).map(|k| self.get(i, j, k).to_string()).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// Row and column sums of a 2-way table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Margins2 {
    pub rows: Vec<i64>,
    pub cols: Vec<i64>,
}

impl Margins2 {
    pub fn new(rows: Vec<i64>, cols: Vec<i64>) -> Self {
        Margins2 { rows, cols }
    }

    pub fn check_real_feasibility(&self) -> Result<bool> {
        check_real_feasibility(&[&self.rows, &self.cols])
    }

    pub fn to_text(&self) -> String {
        margins_to_text(&[&self.rows, &self.cols])
    }
}

/// The three 1-margin families of a 3-way table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Margins3 {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub z: Vec<i64>,
}

impl Margins3 {
    pub fn new(x: Vec<i64>, y: Vec<i64>, z: Vec<i64>) -> Self {
        Margins3 { x, y, z }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.x.len(), self.y.len(), self.z.len()]
    }

    pub fn check_real_feasibility(&self) -> Result<bool> {
        check_real_feasibility(&[&self.x, &self.y, &self.z])
    }

    pub fn to_text(&self) -> String {
        margins_to_text(&[&self.x, &self.y, &self.z])
    }
}

/// A transportation polytope with these margins is nonempty over the reals
/// exactly when every margin vector has the same total.
///
/// ```
/// use ifp_core::tables::check_real_feasibility;
/// assert!(check_real_feasibility(&[&[3, 2], &[1, 4]]).unwrap());
/// assert!(!check_real_feasibility(&[&[1], &[2]]).unwrap());
/// ```
pub fn check_real_feasibility(margins: &[&[i64]]) -> Result<bool> {
    let mut total = None;
    let mut equal = true;
    for (idx, vec) in margins.iter().enumerate() {
        if let Some(pos) = vec.iter().position(|&v| v < 0) {
            return invalid(format!("margin {idx} has negative entry at {pos}"));
        }
        let t = checked_sum(vec.iter())?;
        match total {
            None => total = Some(t),
            Some(prev) if prev != t => equal = false,
            _ => {}
        }
    }
    Ok(equal)
}

/// Row-major sequence of all `(i, j)` pairs.
pub fn canonical_order_2(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .collect()
}

/// All `(i, j, k)` triples with `i` slowest.
pub fn canonical_order_3(l: usize, m: usize, n: usize) -> Vec<(usize, usize, usize)> {
    (0..l)
        .flat_map(|i| (0..m).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
        .collect()
}

fn require_feasible(ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::MarginMismatch(
            "margin vectors have different totals".into(),
        ))
    }
}

/// Greedy northwest-corner rule for 2-way tables: each entry of `sequence`
/// in turn takes the largest value its row and column still allow.
///
/// ```
/// use ifp_core::tables::{canonical_order_2, northwest_corner_2, Margins2};
/// let margins = Margins2::new(vec![3, 2], vec![1, 4]);
/// let t = northwest_corner_2(&margins, &canonical_order_2(2, 2)).unwrap();
/// assert_eq!(t.to_rows(), vec![vec![1, 2], vec![0, 2]]);
/// ```
pub fn northwest_corner_2(margins: &Margins2, sequence: &[(usize, usize)]) -> Result<Table2> {
    require_feasible(margins.check_real_feasibility()?)?;
    let (rows, cols) = (margins.rows.len(), margins.cols.len());
    let mut seen = vec![false; rows * cols];
    if sequence.len() != rows * cols {
        return invalid(format!(
            "sequence has {} entries, expected {}",
            sequence.len(),
            rows * cols
        ));
    }
    for &(i, j) in sequence {
        if i >= rows || j >= cols || std::mem::replace(&mut seen[i * cols + j], true) {
            return invalid(format!("sequence entry ({i}, {j}) is out of range or repeated"));
        }
    }
    let mut row_left = margins.rows.clone();
    let mut col_left = margins.cols.clone();
    let mut table = Table2::zeros(rows, cols);
    for &(i, j) in sequence {
        let v = row_left[i].min(col_left[j]);
        table.set(i, j, v);
        row_left[i] -= v;
        col_left[j] -= v;
    }
    Ok(table)
}

/// Greedy northwest-corner rule for 3-way axial tables: each triple takes
/// the minimum of its three remaining plane sums.
pub fn northwest_corner_3(
    margins: &Margins3,
    sequence: &[(usize, usize, usize)],
) -> Result<Table3> {
    require_feasible(margins.check_real_feasibility()?)?;
    let [l, m, n] = margins.dims();
    if sequence.len() != l * m * n {
        return invalid(format!(
            "sequence has {} entries, expected {}",
            sequence.len(),
            l * m * n
        ));
    }
    let mut seen = vec![false; l * m * n];
    for &(i, j, k) in sequence {
        if i >= l || j >= m || k >= n || std::mem::replace(&mut seen[(i * m + j) * n + k], true)
        {
            return invalid(format!(
                "sequence entry ({i}, {j}, {k}) is out of range or repeated"
            ));
        }
    }
    let (mut a1, mut a2, mut a3) = (margins.x.clone(), margins.y.clone(), margins.z.clone());
    let mut table = Table3::zeros(l, m, n);
    for &(i, j, k) in sequence {
        let v = a1[i].min(a2[j]).min(a3[k]);
        table.set(i, j, k, v);
        a1[i] -= v;
        a2[j] -= v;
        a3[k] -= v;
    }
    Ok(table)
}

fn margins_to_text(vectors: &[&[i64]]) -> String {
    let mut out = String::new();
    for v in vectors {
        let line: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// A table read from the text format; the header decides the arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyTable {
    Two(Table2),
    Three(Table3),
}

fn parse_ints(s: &str) -> Result<Vec<i64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<i64>()
                .map_err(|e| Error::Parse(format!("bad integer {t:?}: {e}")))
        })
        .collect()
}

/// Parses `l m [n]` followed by the entries in canonical order.
pub fn parse_table(text: &str) -> Result<AnyTable> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty table file".into()))?;
    let dims = parse_ints(header)?;
    let body: Vec<i64> = lines
        .map(parse_ints)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let dim = |v: i64| -> Result<usize> {
        usize::try_from(v).map_err(|_| Error::Parse(format!("negative dimension {v}")))
    };
    match dims.as_slice() {
        [r, c] => Ok(AnyTable::Two(Table2::from_vec(dim(*r)?, dim(*c)?, body)?)),
        [l, m, n] => Ok(AnyTable::Three(Table3::from_vec(
            dim(*l)?,
            dim(*m)?,
            dim(*n)?,
            body,
        )?)),
        _ => Err(Error::Parse(format!(
            "table header must hold 2 or 3 dimensions, got {}",
            dims.len()
        ))),
    }
}

pub fn parse_table2(text: &str) -> Result<Table2> {
    match parse_table(text)? {
        AnyTable::Two(t) => Ok(t),
        AnyTable::Three(_) => Err(Error::Parse("expected a 2-way table".into())),
    }
}

/// Parses one margin vector per non-empty line.
pub fn parse_margins(text: &str) -> Result<Vec<Vec<i64>>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(parse_ints)
        .collect()
}
