//! Rewriting `{y ≥ 0 : Ay = b}` as the face of an `r × r × h` plane-sum
//! transportation polytope cut out by forbidden entries.
//!
//! The pipeline is [`reduce_coefficients`] (binary expansion into a
//! `{-1, 0, 1, 2}` matrix), a coordinate bound `U`, and
//! [`encode_plane_sum`]. Each variable owns a square box of rows/columns;
//! the vertical plane sums are all `U`, so inside a box every diagonal
//! entry carries `y_j` and every off-diagonal enabled entry carries the
//! complement `U - y_j`. Equation `k` lives on horizontal plane `k`; the
//! last plane absorbs the copies no equation needs.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tables::{Margins3, Table3};

pub type Triple = (usize, usize, usize);

/// An integer system `Ay = b` with `y ≥ 0` implied.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalLinearSystem {
    a: Vec<Vec<i64>>,
    b: Vec<i64>,
    vars: usize,
}

impl RationalLinearSystem {
    pub fn new(a: Vec<Vec<i64>>, b: Vec<i64>, vars: usize) -> Result<Self> {
        if a.len() != b.len() {
            return invalid(format!("{} rows in A but {} entries in b", a.len(), b.len()));
        }
        if let Some(i) = a.iter().position(|row| row.len() != vars) {
            return invalid(format!("row {i} of A does not have {vars} columns"));
        }
        Ok(RationalLinearSystem { a, b, vars })
    }

    /// Convenience constructor for a non-empty coefficient matrix.
    pub fn from_rows(a: Vec<Vec<i64>>, b: Vec<i64>) -> Result<Self> {
        let vars = a.first().map_or(0, Vec::len);
        Self::new(a, b, vars)
    }

    pub fn equations(&self) -> usize {
        self.a.len()
    }

    pub fn variables(&self) -> usize {
        self.vars
    }

    pub fn coeff(&self, row: usize, col: usize) -> i64 {
        self.a[row][col]
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.a
    }

    pub fn rhs(&self) -> &[i64] {
        &self.b
    }

    /// Whether `y` is a nonnegative solution of `Ay = b`.
    pub fn is_solution(&self, y: &[i64]) -> bool {
        y.len() == self.vars
            && y.iter().all(|&v| v >= 0)
            && self.a.iter().zip(&self.b).all(|(row, &rhs)| {
                row.iter()
                    .zip(y)
                    .try_fold(0i64, |acc, (&c, &v)| acc.checked_add(c.checked_mul(v)?))
                    == Some(rhs)
            })
    }

    /// Text form: an `m n` header, then one line `a_1 … a_n b` per equation.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.a.len(), self.vars);
        for (row, rhs) in self.a.iter().zip(&self.b) {
            let mut parts: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            parts.push(rhs.to_string());
            out.push_str(&parts.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = ints(lines.next().ok_or_else(|| Error::Parse("empty system".into()))?)?;
        let [m, n] = header[..] else {
            return Err(Error::Parse("system header must be `m n`".into()));
        };
        let (m, n) = (to_usize(m)?, to_usize(n)?);
        let mut a = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for idx in 0..m {
            let mut row = ints(
                lines
                    .next()
                    .ok_or_else(|| Error::Parse(format!("missing equation {idx}")))?,
            )?;
            if row.len() != n + 1 {
                return Err(Error::Parse(format!(
                    "equation {idx} has {} numbers, expected {}",
                    row.len(),
                    n + 1
                )));
            }
            b.push(row.pop().unwrap());
            a.push(row);
        }
        Self::new(a, b, n)
    }
}

fn ints(line: &str) -> Result<Vec<i64>> {
    line.split_whitespace()
        .map(|t| t.parse().map_err(|e| Error::Parse(format!("bad integer {t:?}: {e}"))))
        .collect()
}

fn to_usize(v: i64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Parse(format!("expected a nonnegative count, got {v}")))
}

/// Name of a column of a coefficient-reduced system: original variable and
/// bit position, so the column stands for `2^bit · y_var`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnLabel {
    pub var: usize,
    pub bit: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedSystem {
    pub system: RationalLinearSystem,
    /// `embedding[j]` is the column holding `y_j` itself (bit 0).
    pub embedding: Vec<usize>,
    pub labels: Vec<ColumnLabel>,
}

impl ReducedSystem {
    /// Largest bit index of any chain.
    pub fn max_bit(&self) -> u32 {
        self.labels.iter().map(|l| l.bit).max().unwrap_or(0)
    }

    /// Maps an original solution to the reduced coordinates.
    pub fn lift(&self, y: &[i64]) -> Option<Vec<i64>> {
        self.labels
            .iter()
            .map(|l| y.get(l.var)?.checked_mul(1i64.checked_shl(l.bit)?))
            .collect()
    }

    pub fn project(&self, x: &[i64]) -> Vec<i64> {
        self.embedding.iter().map(|&c| x[c]).collect()
    }
}

/// Rewrites every coefficient by its binary expansion so the result has
/// entries in `{-1, 0, 1, 2}`.
///
/// Variable `y_j` becomes a chain `x_{j,0}, …, x_{j,k_j}` tied together by
/// rows `2 x_{j,s} - x_{j,s+1} = 0`, appended after the original rows, and a
/// term `a·y_j` becomes `±Σ t_s x_{j,s}` over the set bits of `|a|`.
pub fn reduce_coefficients(sys: &RationalLinearSystem) -> ReducedSystem {
    let m = sys.equations();
    let n = sys.variables();
    let bits: Vec<u32> = (0..n)
        .map(|j| {
            (0..m)
                .map(|i| sys.coeff(i, j).unsigned_abs())
                .filter(|&a| a != 0)
                .map(|a| 63 - a.leading_zeros())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut labels = Vec::new();
    let mut embedding = Vec::with_capacity(n);
    for (j, &k) in bits.iter().enumerate() {
        embedding.push(labels.len());
        labels.extend((0..=k).map(|bit| ColumnLabel { var: j, bit }));
    }
    let width = labels.len();
    let mut a = Vec::with_capacity(m + width - n);
    let mut b = Vec::with_capacity(m + width - n);
    for i in 0..m {
        let mut row = vec![0i64; width];
        for j in 0..n {
            let c = sys.coeff(i, j);
            let mag = c.unsigned_abs();
            for bit in 0..=bits[j] {
                if (mag >> bit) & 1 == 1 {
                    row[embedding[j] + bit as usize] = c.signum();
                }
            }
        }
        a.push(row);
        b.push(sys.rhs()[i]);
    }
    for j in 0..n {
        for bit in 0..bits[j] as usize {
            let mut row = vec![0i64; width];
            row[embedding[j] + bit] = 2;
            row[embedding[j] + bit + 1] = -1;
            a.push(row);
            b.push(0);
        }
    }
    ReducedSystem {
        system: RationalLinearSystem::new(a, b, width).expect("consistent by construction"),
        embedding,
        labels,
    }
}

fn isqrt_ceil(v: u128) -> u128 {
    if v == 0 {
        return 0;
    }
    let mut r = (v as f64).sqrt() as u128;
    while r * r > v {
        r -= 1;
    }
    while r * r < v {
        r += 1;
    }
    r
}

/// Hadamard bound on the subdeterminants of `(A | b)`: the ceiling of the
/// product of the Euclidean norms of its nonzero rows.
///
/// By Cramer's rule every vertex coordinate is a ratio of two such
/// subdeterminants with a nonzero integer denominator, so the result bounds
/// every coordinate of every vertex of `{y ≥ 0 : Ay = b}`.
pub fn compute_bound_u(sys: &RationalLinearSystem) -> Result<i64> {
    let mut product: u128 = 1;
    for (row, &rhs) in sys.matrix().iter().zip(sys.rhs()) {
        let sq = row
            .iter()
            .chain(std::iter::once(&rhs))
            .try_fold(0u128, |acc, &v| {
                let v = v.unsigned_abs() as u128;
                acc.checked_add(v.checked_mul(v)?)
            })
            .ok_or(Error::Overflow("row norm"))?;
        if sq > 0 {
            product = product
                .checked_mul(sq)
                .ok_or(Error::Overflow("Hadamard bound"))?;
        }
    }
    i64::try_from(isqrt_ceil(product)).map_err(|_| Error::Overflow("Hadamard bound"))
}

fn bareiss_det(mut m: Vec<Vec<i128>>) -> Result<i128> {
    let n = m.len();
    if n == 0 {
        return Ok(1);
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i][j]
                    .checked_mul(m[k][k])
                    .and_then(|a| a.checked_sub(m[i][k].checked_mul(m[k][j])?))
                    .ok_or(Error::Overflow("determinant"))?;
                m[i][j] = num / prev;
            }
        }
        prev = m[k][k];
    }
    Ok(sign * m[n - 1][n - 1])
}

/// Row indices of a maximal linearly independent subset of the rows.
fn independent_rows(rows: &[Vec<i128>]) -> Result<Vec<usize>> {
    let mut basis: Vec<Vec<i128>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut chosen = Vec::new();
    for (idx, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        for (b, &p) in basis.iter().zip(&pivots) {
            if r[p] != 0 {
                let (f1, f2) = (b[p], r[p]);
                for c in 0..r.len() {
                    r[c] = r[c]
                        .checked_mul(f1)
                        .and_then(|x| x.checked_sub(b[c].checked_mul(f2)?))
                        .ok_or(Error::Overflow("rank"))?;
                }
                let g = r.iter().fold(0i128, |g, &v| gcd(g, v.abs()));
                if g > 1 {
                    r.iter_mut().for_each(|v| *v /= g);
                }
            }
        }
        if let Some(p) = r.iter().position(|&v| v != 0) {
            basis.push(r);
            pivots.push(p);
            chosen.push(idx);
        }
    }
    Ok(chosen)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Exact Cramer's-rule bound: the largest coordinate over all basic feasible
/// solutions. Returns `Ok(None)` when more than `max_bases` column subsets
/// would have to be examined, and `Ok(Some(0))` for an empty polytope.
pub fn vertex_bound(sys: &RationalLinearSystem, max_bases: u128) -> Result<Option<i64>> {
    let n = sys.variables();
    let a: Vec<Vec<i128>> = sys
        .matrix()
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let augmented: Vec<Vec<i128>> = a
        .iter()
        .zip(sys.rhs())
        .map(|(r, &b)| r.iter().copied().chain(std::iter::once(b as i128)).collect())
        .collect();
    let rows = independent_rows(&a)?;
    if independent_rows(&augmented)?.len() != rows.len() {
        return Ok(Some(0));
    }
    let rank = rows.len();
    if binomial(n, rank) > max_bases {
        return Ok(None);
    }
    let rhs: Vec<i128> = rows.iter().map(|&r| sys.rhs()[r] as i128).collect();
    let mut best: i128 = 0;
    let mut cols: Vec<usize> = (0..rank).collect();
    loop {
        let basis: Vec<Vec<i128>> = rows
            .iter()
            .map(|&r| cols.iter().map(|&c| a[r][c]).collect())
            .collect();
        let det = bareiss_det(basis.clone())?;
        if det != 0 {
            let mut coords = Vec::with_capacity(rank);
            for c in 0..rank {
                let mut replaced = basis.clone();
                for (row, &b) in replaced.iter_mut().zip(&rhs) {
                    row[c] = b;
                }
                coords.push(bareiss_det(replaced)?);
            }
            // coordinate = num / det; feasible when every ratio is nonnegative
            if coords.iter().all(|&num| num == 0 || (num > 0) == (det > 0)) {
                for num in coords {
                    let (p, q) = (num.abs(), det.abs());
                    best = best.max((p + q - 1) / q);
                }
            }
        }
        // next combination
        let mut idx = rank;
        loop {
            if idx == 0 {
                return i64::try_from(best)
                    .map(Some)
                    .map_err(|_| Error::Overflow("vertex bound"));
            }
            idx -= 1;
            if cols[idx] != idx + n - rank {
                break;
            }
        }
        cols[idx] += 1;
        for t in idx + 1..rank {
            cols[t] = cols[t - 1] + 1;
        }
    }
}

/// How `full_encode` picks the coordinate bound `U`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundChoice {
    /// [`compute_bound_u`] on the reduced system.
    Hadamard,
    /// [`vertex_bound`] on the reduced system, falling back to Hadamard when
    /// there are too many bases to enumerate.
    #[default]
    Vertex,
    /// A caller-supplied bound on the original coordinates; it is scaled by
    /// the longest binary chain so that chain columns stay inside the box.
    Fixed(i64),
}

/// Which box and which horizontal plane each enabled entry belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedInstance {
    pub r: usize,
    pub h: usize,
    pub bound: i64,
    pub u: Vec<i64>,
    pub v: Vec<i64>,
    pub w: Vec<i64>,
    /// Enabled triples in canonical order.
    pub enabled: Vec<Triple>,
    /// Entry of each original variable, `None` for variables that appear in
    /// no equation (they have no box and decode to 0).
    pub sigma: Vec<Option<Triple>>,
    /// Row/column range of the box of every encoded column.
    pub boxes: Vec<Range<usize>>,
    /// Plane of the diagonal entry `(s, s, ·)` for every row `s`.
    pub k_plus: Vec<usize>,
    /// Plane of the complement entry in row `s`.
    pub k_minus: Vec<usize>,
    /// Provenance of each encoded column when coefficient reduction ran.
    pub labels: Vec<ColumnLabel>,
    #[serde(skip)]
    mask: Vec<bool>,
}

impl EncodedInstance {
    pub fn dims(&self) -> [usize; 3] {
        [self.r, self.r, self.h]
    }

    pub fn margins(&self) -> Margins3 {
        Margins3::new(self.u.clone(), self.v.clone(), self.w.clone())
    }

    #[inline]
    pub fn is_enabled(&self, i: usize, j: usize, k: usize) -> bool {
        self.mask[(i * self.r + j) * self.h + k]
    }

    /// Membership mask indexed like [`Table3`] entries.
    pub fn enabled_mask(&self) -> &[bool] {
        &self.mask
    }

    fn rebuild_mask(&mut self) {
        self.mask = vec![false; self.r * self.r * self.h];
        for &(i, j, k) in &self.enabled {
            self.mask[(i * self.r + j) * self.h + k] = true;
        }
    }

    /// Builds an instance from explicit parts; used by the file reader.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        r: usize,
        h: usize,
        bound: i64,
        u: Vec<i64>,
        v: Vec<i64>,
        w: Vec<i64>,
        mut enabled: Vec<Triple>,
        sigma: Vec<Option<Triple>>,
    ) -> Result<Self> {
        if u.len() != r || v.len() != r || w.len() != h {
            return invalid("margin lengths do not match r and h");
        }
        if enabled.iter().any(|&(i, j, k)| i >= r || j >= r || k >= h) {
            return invalid("enabled triple out of range");
        }
        if sigma.iter().flatten().any(|&(i, j, k)| i >= r || j >= r || k >= h) {
            return invalid("sigma entry out of range");
        }
        enabled.sort_unstable();
        enabled.dedup();
        let mut inst = EncodedInstance {
            r,
            h,
            bound,
            u,
            v,
            w,
            enabled,
            sigma,
            boxes: Vec::new(),
            k_plus: Vec::new(),
            k_minus: Vec::new(),
            labels: Vec::new(),
            mask: Vec::new(),
        };
        inst.rebuild_mask();
        Ok(inst)
    }

    /// Checks that `t` is a lattice point of the face and reads off `y`.
    pub fn decode_solution(&self, t: &Table3) -> Result<Vec<i64>> {
        if t.dims() != self.dims() {
            return Err(Error::InvalidWitness(format!(
                "table has shape {:?}, expected {:?}",
                t.dims(),
                self.dims()
            )));
        }
        if !t.is_nonnegative() {
            return Err(Error::InvalidWitness("negative entry".into()));
        }
        if t.margins()? != self.margins() {
            return Err(Error::InvalidWitness("plane sums differ from u, v, w".into()));
        }
        for (idx, (&val, &on)) in t.as_slice().iter().zip(&self.mask).enumerate() {
            if val != 0 && !on {
                let k = idx % self.h;
                let j = (idx / self.h) % self.r;
                let i = idx / (self.h * self.r);
                return Err(Error::InvalidWitness(format!(
                    "forbidden entry ({i}, {j}, {k}) holds {val}"
                )));
            }
        }
        Ok(self
            .sigma
            .iter()
            .map(|s| s.map_or(0, |(i, j, k)| t.get(i, j, k)))
            .collect())
    }

    /// The face table that encodes the (reduced-coordinate) point `x`.
    ///
    /// Returns `None` when `x` leaves the box `[0, U]` or does not satisfy
    /// the encoded equations.
    pub fn embed_columns(&self, x: &[i64]) -> Option<Table3> {
        if x.len() != self.boxes.len() {
            return None;
        }
        let mut t = Table3::zeros(self.r, self.r, self.h);
        for (col, range) in self.boxes.iter().enumerate() {
            let y = x[col];
            if y < 0 || y > self.bound {
                return None;
            }
            let len = range.len();
            for s in range.clone() {
                let next = range.start + (s - range.start + 1) % len;
                t.add_at(s, s, self.k_plus[s], y);
                t.add_at(s, if len == 1 { s } else { next }, self.k_minus[s], self.bound - y);
            }
        }
        (t.margins().ok()? == self.margins()).then_some(t)
    }

    /// Text form: `r h U`, the u/v/w lines, then `e i j k` per enabled entry,
    /// `s var i j k` (or `s var -`) per variable, `p s k+ k-` per row and
    /// `l var bit` per reduced column. Indices are 0-based; `p` and `l` lines
    /// are optional on input.
    pub fn to_text(&self) -> String {
        let join = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = format!("{} {} {}\n", self.r, self.h, self.bound);
        let _ = writeln!(out, "{}", join(&self.u));
        let _ = writeln!(out, "{}", join(&self.v));
        let _ = writeln!(out, "{}", join(&self.w));
        for &(i, j, k) in &self.enabled {
            let _ = writeln!(out, "e {i} {j} {k}");
        }
        for (var, s) in self.sigma.iter().enumerate() {
            match s {
                Some((i, j, k)) => {
                    let _ = writeln!(out, "s {var} {i} {j} {k}");
                }
                None => {
                    let _ = writeln!(out, "s {var} -");
                }
            }
        }
        if !self.boxes.is_empty() {
            for s in 0..self.r {
                let _ = writeln!(out, "p {s} {} {}", self.k_plus[s], self.k_minus[s]);
            }
        }
        for l in &self.labels {
            let _ = writeln!(out, "l {} {}", l.var, l.bit);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("instance file is missing {what}")))
        };
        let header = ints(next("header")?)?;
        let [r, h, bound] = header[..] else {
            return Err(Error::Parse("instance header must be `r h U`".into()));
        };
        let (r, h) = (to_usize(r)?, to_usize(h)?);
        let u = ints(next("u")?)?;
        let v = ints(next("v")?)?;
        let w = ints(next("w")?)?;
        let mut enabled = Vec::new();
        let mut sigma: Vec<(usize, Option<Triple>)> = Vec::new();
        let mut planes: Vec<(usize, usize, usize)> = Vec::new();
        let mut labels = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            let nums = |xs: &[&str]| -> Result<Vec<usize>> {
                xs.iter()
                    .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                    .collect()
            };
            match (tag, rest.as_slice()) {
                ("e", xs) if xs.len() == 3 => {
                    let n = nums(xs)?;
                    enabled.push((n[0], n[1], n[2]));
                }
                ("s", [var, "-"]) => sigma.push((nums(&[var])?[0], None)),
                ("s", xs) if xs.len() == 4 => {
                    let n = nums(xs)?;
                    sigma.push((n[0], Some((n[1], n[2], n[3]))));
                }
                ("p", xs) if xs.len() == 3 => {
                    let n = nums(xs)?;
                    planes.push((n[0], n[1], n[2]));
                }
                ("l", xs) if xs.len() == 2 => {
                    let n = nums(xs)?;
                    let bit = u32::try_from(n[1]).map_err(|_| Error::Parse("bit index too large".into()))?;
                    labels.push(ColumnLabel { var: n[0], bit });
                }
                _ => return Err(Error::Parse(format!("unrecognised instance line {line:?}"))),
            }
        }
        sigma.sort_by_key(|s| s.0);
        if sigma.iter().enumerate().any(|(idx, s)| s.0 != idx) {
            return Err(Error::Parse("sigma lines must cover variables 0..n exactly once".into()));
        }
        let mut inst = Self::from_parts(
            r,
            h,
            bound,
            u,
            v,
            w,
            enabled,
            sigma.into_iter().map(|s| s.1).collect(),
        )?;
        inst.labels = labels;
        inst.derive_boxes(&planes);
        Ok(inst)
    }

    /// Recovers box structure from explicit `(row, k+, k-)` planes, or from
    /// the enabled set when it has the shape produced by
    /// [`encode_plane_sum`]; leaves it empty otherwise.
    fn derive_boxes(&mut self, planes: &[(usize, usize, usize)]) {
        let r = self.r;
        let mut k_plus = vec![usize::MAX; r];
        let mut k_minus = vec![usize::MAX; r];
        let mut partner = vec![usize::MAX; r];
        if planes.len() == r && planes.iter().all(|p| p.0 < r) {
            for &(s, kp, km) in planes {
                k_plus[s] = kp;
                k_minus[s] = km;
            }
            for &(i, j, k) in &self.enabled {
                if k == k_minus[i] {
                    partner[i] = j;
                }
            }
        } else {
            // a one-row box has two diagonal entries; sigma names the k+ one
            let mut sigma_plane = vec![usize::MAX; r];
            for &(i, _, k) in self.sigma.iter().flatten() {
                sigma_plane[i] = k;
            }
            for &(i, j, k) in &self.enabled {
                if i == j && (k == sigma_plane[i] || (sigma_plane[i] == usize::MAX && k_plus[i] == usize::MAX)) {
                    k_plus[i] = k;
                } else {
                    k_minus[i] = k;
                    partner[i] = j;
                }
            }
        }
        if k_plus.iter().chain(&k_minus).chain(&partner).any(|&k| k == usize::MAX) {
            return;
        }
        let mut boxes = Vec::new();
        let mut start = 0;
        while start < r {
            let mut end = start + 1;
            while end < r && partner[end - 1] == end {
                end += 1;
            }
            boxes.push(start..end);
            start = end;
        }
        self.boxes = boxes;
        self.k_plus = k_plus;
        self.k_minus = k_minus;
    }
}

/// Box size for one column: the larger of its positive coefficient mass and
/// its negative coefficient mass.
pub fn box_size(sys: &RationalLinearSystem, col: usize) -> Result<usize> {
    let (mut pos, mut neg) = (0i64, 0i64);
    for i in 0..sys.equations() {
        let c = sys.coeff(i, col);
        if c > 0 {
            pos = pos.checked_add(c).ok_or(Error::Overflow("box size"))?;
        } else {
            neg = neg.checked_add(-c).ok_or(Error::Overflow("box size"))?;
        }
    }
    usize::try_from(pos.max(neg)).map_err(|_| Error::Overflow("box size"))
}

/// Encodes `{y ≥ 0 : Ay = b, y ≤ U}` as the enabled-entry face of an
/// `r × r × h` plane-sum transportation polytope.
///
/// Any integer coefficients are accepted; [`reduce_coefficients`] only
/// keeps `r` small. Fails with [`Error::InfeasibleRhs`] when some plane sum
/// would be negative, which certifies that no point of the box solves the
/// system.
pub fn encode_plane_sum(sys: &RationalLinearSystem, bound: i64) -> Result<EncodedInstance> {
    if bound < 0 {
        return invalid("the coordinate bound must be nonnegative");
    }
    let m = sys.equations();
    let n = sys.variables();
    let h = m + 1;
    let sizes = (0..n).map(|c| box_size(sys, c)).collect::<Result<Vec<_>>>()?;
    let r = sizes.iter().sum::<usize>();

    let mut boxes = Vec::with_capacity(n);
    let mut k_plus = Vec::with_capacity(r);
    let mut k_minus = Vec::with_capacity(r);
    let mut start = 0;
    for (col, &size) in sizes.iter().enumerate() {
        boxes.push(start..start + size);
        let mut plus = Vec::with_capacity(size);
        let mut minus = Vec::with_capacity(size);
        for eq in 0..m {
            let c = sys.coeff(eq, col);
            let copies = c.unsigned_abs() as usize;
            if c > 0 {
                plus.extend(std::iter::repeat(eq).take(copies));
            } else if c < 0 {
                minus.extend(std::iter::repeat(eq).take(copies));
            }
        }
        plus.resize(size, m);
        minus.resize(size, m);
        k_plus.extend(plus);
        k_minus.extend(minus);
        start += size;
    }

    let mut enabled = Vec::with_capacity(2 * r);
    for range in &boxes {
        let len = range.len();
        for s in range.clone() {
            enabled.push((s, s, k_plus[s]));
            let col = if len == 1 {
                s
            } else {
                range.start + (s - range.start + 1) % len
            };
            enabled.push((s, col, k_minus[s]));
        }
    }

    let mut w = Vec::with_capacity(h);
    for eq in 0..m {
        let neg = (0..n)
            .map(|c| sys.coeff(eq, c))
            .filter(|&c| c < 0)
            .try_fold(0i64, |acc, c| acc.checked_add(-c))
            .ok_or(Error::Overflow("plane sum"))?;
        let value = neg
            .checked_mul(bound)
            .and_then(|x| x.checked_add(sys.rhs()[eq]))
            .ok_or(Error::Overflow("plane sum"))?;
        w.push(value);
    }
    let total = i64::try_from(r)
        .ok()
        .and_then(|r| r.checked_mul(bound))
        .ok_or(Error::Overflow("slack plane"))?;
    let used = w
        .iter()
        .try_fold(0i64, |acc, &x| acc.checked_add(x))
        .ok_or(Error::Overflow("slack plane"))?;
    w.push(total.checked_sub(used).ok_or(Error::Overflow("slack plane"))?);
    if let Some((plane, &value)) = w.iter().enumerate().find(|(_, &x)| x < 0) {
        return Err(Error::InfeasibleRhs { plane, value });
    }

    let sigma = boxes
        .iter()
        .map(|range| (!range.is_empty()).then(|| (range.start, range.start, k_plus[range.start])))
        .collect();
    let mut inst = EncodedInstance::from_parts(
        r,
        h,
        bound,
        vec![bound; r],
        vec![bound; r],
        w,
        enabled,
        sigma,
    )?;
    inst.boxes = boxes;
    inst.k_plus = k_plus;
    inst.k_minus = k_minus;
    inst.labels = (0..n).map(|var| ColumnLabel { var, bit: 0 }).collect();
    Ok(inst)
}

/// The bound `full_encode` will use for a reduced system.
pub fn choose_bound(reduced: &ReducedSystem, choice: BoundChoice) -> Result<i64> {
    match choice {
        BoundChoice::Hadamard => compute_bound_u(&reduced.system),
        BoundChoice::Vertex => match vertex_bound(&reduced.system, 1 << 16)? {
            Some(b) => Ok(b),
            None => compute_bound_u(&reduced.system),
        },
        BoundChoice::Fixed(b) => {
            if b < 0 {
                return invalid("the coordinate bound must be nonnegative");
            }
            1i64.checked_shl(reduced.max_bit())
                .and_then(|s| s.checked_mul(b))
                .ok_or(Error::Overflow("scaled bound"))
        }
    }
}

/// Coefficient reduction, bound, and plane-sum encoding in one step. The
/// returned instance decodes to the original variables.
pub fn full_encode(sys: &RationalLinearSystem, choice: BoundChoice) -> Result<EncodedInstance> {
    let reduced = reduce_coefficients(sys);
    let bound = choose_bound(&reduced, choice)?;
    let mut inst = encode_plane_sum(&reduced.system, bound)?;
    inst.sigma = reduced
        .embedding
        .iter()
        .map(|&c| inst.sigma[c])
        .collect();
    inst.labels = reduced.labels;
    Ok(inst)
}
