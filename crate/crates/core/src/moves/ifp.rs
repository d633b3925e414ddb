//! The feasibility game: start from the northwest-corner table, reduce it to
//! the sink, and search the zero-weight projection fibers for a table whose
//! slices all reduce to zero forbidden mass.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::encoder::{full_encode, BoundChoice, EncodedInstance, RationalLinearSystem};
use crate::error::{Error, Result};
use crate::tables::{canonical_order_3, northwest_corner_3, parse_table, AnyTable, Axes, Table2, Table3};

use super::fiber::enumerate_fiber_2way;
use super::flow::{FlowNet, INF};
use super::order::TermOrder;
use super::reduce::{reduce_2way, Policy, Walker};
use super::Move3;

/// Resource caps. Exceeding one yields [`IfpOutcome::BudgetExhausted`],
/// never a NO.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Search nodes (pruned strategy) or fiber tables (exhaustive strategy).
    pub fiber_cap: u64,
    /// Unit move applications along the certificate path.
    pub step_cap: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            fiber_cap: 1_000_000,
            step_cap: 1_000_000,
        }
    }
}

/// How the zero-weight projection fibers are searched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Depth-first over the cells of the xz projection with max-flow
    /// pruning; the yz projection and the slices come out of a flow.
    #[default]
    Pruned,
    /// Enumerate both zero-weight fibers and try every pair, reducing the
    /// northwest-corner slices of each. Only for tiny instances.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoReason {
    /// The encoding itself has a negative plane sum.
    InfeasibleRhs { plane: usize, value: i64 },
    /// The sink still carries forbidden mass in a projection.
    ProjectionWeight { xz: i64, yz: i64 },
    /// Every zero-weight pair of projections leaves forbidden mass in some
    /// slice.
    SliceWeight { explored: u64 },
}

/// A YES answer with everything needed to check it independently.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    /// The northwest-corner table the game starts from.
    pub start: Table3,
    /// Moves and repetition counts leading from `start` to `witness`.
    pub moves: Vec<(Move3, i64)>,
    /// A table of the face.
    pub witness: Table3,
    /// The decoded lattice point.
    pub solution: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IfpOutcome {
    Yes(Box<Certificate>),
    No(NoReason),
    BudgetExhausted(String),
}

impl IfpOutcome {
    pub fn is_yes(&self) -> bool {
        matches!(self, IfpOutcome::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, IfpOutcome::No(_))
    }
}

/// Decides whether the face encoded by `inst` has a lattice point.
///
/// ```
/// use ifp_core::encoder::{encode_plane_sum, RationalLinearSystem};
/// use ifp_core::moves::{ifp_solve, Budget, IfpOutcome};
///
/// let sys = RationalLinearSystem::from_rows(vec![vec![1]], vec![2]).unwrap();
/// let inst = encode_plane_sum(&sys, 2).unwrap();
/// match ifp_solve(&inst, &Budget::default()).unwrap() {
///     IfpOutcome::Yes(cert) => assert_eq!(cert.solution, vec![2]),
///     other => panic!("{other:?}"),
/// }
/// ```
pub fn ifp_solve(inst: &EncodedInstance, budget: &Budget) -> Result<IfpOutcome> {
    ifp_solve_with(inst, budget, Strategy::Pruned)
}

pub fn ifp_solve_with(inst: &EncodedInstance, budget: &Budget, strategy: Strategy) -> Result<IfpOutcome> {
    match run(inst, budget, strategy) {
        Err(Error::BudgetExhausted(msg)) => Ok(IfpOutcome::BudgetExhausted(msg)),
        other => other,
    }
}

/// Encodes and solves a system; a negative plane sum in the encoding is a NO.
pub fn solve_system(
    sys: &RationalLinearSystem,
    bound: BoundChoice,
    budget: &Budget,
    strategy: Strategy,
) -> Result<IfpOutcome> {
    match full_encode(sys, bound) {
        Ok(inst) => ifp_solve_with(&inst, budget, strategy),
        Err(Error::InfeasibleRhs { plane, value }) => {
            Ok(IfpOutcome::No(NoReason::InfeasibleRhs { plane, value }))
        }
        Err(e) => Err(e),
    }
}

fn run(inst: &EncodedInstance, budget: &Budget, strategy: Strategy) -> Result<IfpOutcome> {
    let [l, m, n] = inst.dims();
    let start = northwest_corner_3(&inst.margins(), &canonical_order_3(l, m, n))?;
    let order = TermOrder::for_instance(inst)?;

    let mut walker = Walker::new(start.clone(), budget.step_cap, None);
    walker.reduce_all(&order)?;
    let sink = walker.table.clone();
    let a0 = sink.project(Axes::XZ)?;
    let b0 = sink.project(Axes::YZ)?;
    let (wxz, wyz) = (order.xz.weight(&a0)?, order.yz.weight(&b0)?);
    if wxz > 0 || wyz > 0 {
        return Ok(IfpOutcome::No(NoReason::ProjectionWeight { xz: wxz, yz: wyz }));
    }

    let found = match strategy {
        Strategy::Pruned => {
            let mut search = XzSearch::new(inst, budget.fiber_cap);
            search.run()?
        }
        Strategy::Exhaustive => exhaustive(inst, &order, &a0, &b0, budget)?,
    };
    let (a, b) = match found {
        Found::Pair(a, b) => (a, b),
        Found::None(explored) => return Ok(IfpOutcome::No(NoReason::SliceWeight { explored })),
    };

    walker.transport_projection(&a, false)?;
    walker.transport_projection(&b, true)?;
    for tier in 2..2 + n {
        walker.reduce_tier(&order, tier)?;
    }
    let witness = walker.table.clone();
    if order.slice_weights(&witness)?.iter().any(|&w| w != 0) {
        return Err(Error::InvalidWitness(
            "slice reduction left forbidden mass on a feasible pair".into(),
        ));
    }
    let solution = inst.decode_solution(&witness)?;
    Ok(IfpOutcome::Yes(Box::new(Certificate {
        start,
        moves: walker.moves,
        witness,
        solution,
    })))
}

enum Found {
    Pair(Table2, Table2),
    None(u64),
}

fn xz_enabled(inst: &EncodedInstance) -> Vec<bool> {
    let [l, _, n] = inst.dims();
    let mut out = vec![false; l * n];
    for &(i, _, k) in &inst.enabled {
        out[i * n + k] = true;
    }
    out
}

fn yz_enabled(inst: &EncodedInstance) -> Vec<bool> {
    let [_, m, n] = inst.dims();
    let mut out = vec![false; m * n];
    for &(_, j, k) in &inst.enabled {
        out[j * n + k] = true;
    }
    out
}

fn slice_margins(a: &Table2, b: &Table2, k: usize) -> (Vec<i64>, Vec<i64>) {
    (
        (0..a.rows()).map(|i| a.get(i, k)).collect(),
        (0..b.rows()).map(|j| b.get(j, k)).collect(),
    )
}

fn exhaustive(
    inst: &EncodedInstance,
    order: &TermOrder,
    a0: &Table2,
    b0: &Table2,
    budget: &Budget,
) -> Result<Found> {
    let [l, m, n] = inst.dims();
    let cap = usize::try_from(budget.fiber_cap).unwrap_or(usize::MAX);
    let xs = enumerate_fiber_2way(a0, &xz_enabled(inst), cap)?;
    let ys = enumerate_fiber_2way(b0, &yz_enabled(inst), cap)?;
    if (xs.len() as u128) * (ys.len() as u128) > budget.fiber_cap as u128 {
        return Err(Error::BudgetExhausted(format!(
            "{} x {} projection pairs exceed the fiber cap",
            xs.len(),
            ys.len()
        )));
    }
    let mut explored = 0u64;
    for a in &xs {
        'pairs: for b in &ys {
            explored += 1;
            for k in 0..n {
                let (rows, cols) = slice_margins(a, b, k);
                let order_k: Vec<(usize, usize)> =
                    (0..l).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
                let slice = crate::tables::northwest_corner_2(
                    &crate::tables::Margins2::new(rows, cols),
                    &order_k,
                )?;
                let red = reduce_2way(&slice, &order.slices[k], Policy::Canonical, budget.step_cap)?;
                if order.slices[k].weight(&red.table)? != 0 {
                    continue 'pairs;
                }
            }
            return Ok(Found::Pair(a.clone(), b.clone()));
        }
    }
    Ok(Found::None(explored))
}

/// Depth-first search over the enabled cells of the xz projection.
///
/// A partial assignment survives when (1) the unassigned enabled cells can
/// still complete it to a table with the xz margins, and (2) mass can still
/// be routed from every `(i, k)` through enabled `(i, j, k)` cells to the y
/// margins. Once every cell is assigned, (2) is exact: its flow is a table
/// of the face.
struct XzSearch<'a> {
    inst: &'a EncodedInstance,
    cells: Vec<(usize, usize)>,
    value: Vec<i64>,
    fixed: Vec<bool>,
    row_left: Vec<i64>,
    col_left: Vec<i64>,
    nodes: u64,
    cap: u64,
}

impl<'a> XzSearch<'a> {
    fn new(inst: &'a EncodedInstance, cap: u64) -> Self {
        let [l, _, n] = inst.dims();
        let enabled = xz_enabled(inst);
        let cells = (0..l)
            .flat_map(|i| (0..n).map(move |k| (i, k)))
            .filter(|&(i, k)| enabled[i * n + k])
            .collect();
        XzSearch {
            inst,
            cells,
            value: vec![0; l * n],
            fixed: vec![false; l * n],
            row_left: inst.u.clone(),
            col_left: inst.w.clone(),
            nodes: 0,
            cap,
        }
    }

    fn run(&mut self) -> Result<Found> {
        if !self.completable() {
            return Ok(Found::None(self.nodes));
        }
        match self.dfs(0)? {
            Some(pair) => Ok(pair),
            None => Ok(Found::None(self.nodes)),
        }
    }

    fn dfs(&mut self, idx: usize) -> Result<Option<Found>> {
        let n = self.inst.h;
        if idx == self.cells.len() {
            return Ok(self.route().map(|x| {
                let a = x.project(Axes::XZ).expect("shape");
                let b = x.project(Axes::YZ).expect("shape");
                Found::Pair(a, b)
            }));
        }
        let (i, k) = self.cells[idx];
        let last_in_row = !self.cells[idx + 1..].iter().any(|&(r, _)| r == i);
        let last_in_col = !self.cells[idx + 1..].iter().any(|&(_, c)| c == k);
        let hi = self.row_left[i].min(self.col_left[k]);
        let mut lo = 0;
        if last_in_row {
            lo = lo.max(self.row_left[i]);
        }
        if last_in_col {
            lo = lo.max(self.col_left[k]);
        }
        let cell = i * n + k;
        for v in lo..=hi {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Err(Error::BudgetExhausted(format!(
                    "projection search exceeds {} nodes",
                    self.cap
                )));
            }
            self.value[cell] = v;
            self.fixed[cell] = true;
            self.row_left[i] -= v;
            self.col_left[k] -= v;
            let ok = self.completable() && self.route().is_some();
            let result = if ok { self.dfs(idx + 1)? } else { None };
            self.row_left[i] += v;
            self.col_left[k] += v;
            self.fixed[cell] = false;
            self.value[cell] = 0;
            if result.is_some() {
                return Ok(result);
            }
        }
        Ok(None)
    }

    // (1): transportation completion of the xz projection
    fn completable(&self) -> bool {
        let [l, _, n] = self.inst.dims();
        if self.row_left.iter().chain(&self.col_left).any(|&v| v < 0) {
            return false;
        }
        let need: i64 = self.row_left.iter().sum();
        if need != self.col_left.iter().sum::<i64>() {
            return false;
        }
        let (s, t) = (l + n, l + n + 1);
        let mut net = FlowNet::new(l + n + 2);
        for i in 0..l {
            net.add_edge(s, i, self.row_left[i]);
        }
        for k in 0..n {
            net.add_edge(l + k, t, self.col_left[k]);
        }
        for &(i, k) in &self.cells {
            if !self.fixed[i * n + k] {
                net.add_edge(i, l + k, INF);
            }
        }
        net.max_flow(s, t) == need
    }

    // (2): route xz mass to the y margins through enabled cells; returns the
    // routed table when every y margin is met
    fn route(&self) -> Option<Table3> {
        let [l, m, n] = self.inst.dims();
        let cell_node = |i: usize, k: usize| l + i * n + k;
        let y_node = |j: usize| l + l * n + j;
        let (s, t) = (l + l * n + m, l + l * n + m + 1);
        let mut net = FlowNet::new(t + 1);
        for i in 0..l {
            net.add_edge(s, i, self.row_left[i]);
        }
        for &(i, k) in &self.cells {
            let c = i * n + k;
            if self.fixed[c] {
                net.add_edge(s, cell_node(i, k), self.value[c]);
            } else {
                net.add_edge(i, cell_node(i, k), INF);
            }
        }
        let mut routed = Vec::with_capacity(self.inst.enabled.len());
        for &(i, j, k) in &self.inst.enabled {
            routed.push(((i, j, k), net.add_edge(cell_node(i, k), y_node(j), INF)));
        }
        for j in 0..m {
            net.add_edge(y_node(j), t, self.inst.v[j]);
        }
        let total: i64 = self.inst.v.iter().sum();
        if net.max_flow(s, t) != total {
            return None;
        }
        let mut x = Table3::zeros(l, m, n);
        for ((i, j, k), e) in routed {
            x.set(i, j, k, net.flow_on(e));
        }
        Some(x)
    }
}

/// Replays a certificate against an instance: the start table must have the
/// instance margins, every move must be a valid 3-way move that keeps the
/// table nonnegative, and the path must end at the witness, which must
/// decode to the stated solution.
pub fn replay_certificate(inst: &EncodedInstance, cert: &Certificate) -> Result<Vec<i64>> {
    if !cert.start.is_nonnegative() || cert.start.margins()? != inst.margins() {
        return Err(Error::InvalidWitness("start table does not match the instance".into()));
    }
    let mut cur = cert.start.clone();
    for (idx, (mv, times)) in cert.moves.iter().enumerate() {
        let mv = Move3::new(mv.table().clone())?;
        if *times < 1 {
            return Err(Error::InvalidWitness(format!("move {idx} has count {times}")));
        }
        cur = mv
            .apply(&cur, *times)
            .ok_or_else(|| Error::IllegalMove(format!("move {idx} leaves the nonnegative orthant")))?;
    }
    if cur != cert.witness {
        return Err(Error::InvalidWitness("the move path does not end at the witness".into()));
    }
    let y = inst.decode_solution(&cur)?;
    if y != cert.solution {
        return Err(Error::InvalidWitness("witness decodes to a different solution".into()));
    }
    Ok(y)
}

impl Certificate {
    /// Text form: a `solution` line, the `start` and `witness` tables, then
    /// `moves N` and one line per move: the count, the number of cells, and
    /// `i j k value` for each nonzero cell.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sol: Vec<String> = self.solution.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "solution {}", sol.join(" "));
        out.push_str("start\n");
        out.push_str(&self.start.to_text());
        out.push_str("witness\n");
        out.push_str(&self.witness.to_text());
        let _ = writeln!(out, "moves {}", self.moves.len());
        for (mv, times) in &self.moves {
            let cells = mv.cells();
            let _ = write!(out, "{times} {}", cells.len());
            for (i, j, k, v) in cells {
                let _ = write!(out, " {i} {j} {k} {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let perr = |msg: &str| Error::Parse(format!("certificate: {msg}"));
        let mut pos = 0;
        let solution = lines
            .first()
            .and_then(|l| l.strip_prefix("solution"))
            .ok_or_else(|| perr("missing solution line"))?
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|_| perr("bad solution entry")))
            .collect::<Result<Vec<_>>>()?;
        pos += 1;
        let table = |tag: &str, pos: &mut usize| -> Result<Table3> {
            if lines.get(*pos) != Some(&tag) {
                return Err(perr(&format!("expected `{tag}`")));
            }
            let header: Vec<usize> = lines
                .get(*pos + 1)
                .ok_or_else(|| perr("missing table header"))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| perr("bad table header")))
                .collect::<Result<_>>()?;
            let [l, m, _] = header[..] else {
                return Err(perr("3-way table expected"));
            };
            let end = *pos + 2 + l * m;
            let chunk = lines.get(*pos + 1..end).ok_or_else(|| perr("truncated table"))?;
            *pos = end;
            match parse_table(&chunk.join("\n"))? {
                AnyTable::Three(t) => Ok(t),
                AnyTable::Two(_) => Err(perr("3-way table expected")),
            }
        };
        let start = table("start", &mut pos)?;
        let witness = table("witness", &mut pos)?;
        let count: usize = lines
            .get(pos)
            .and_then(|l| l.strip_prefix("moves"))
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| perr("missing `moves N` line"))?;
        pos += 1;
        let [l, m, n] = start.dims();
        let mut moves = Vec::with_capacity(count);
        for line in lines.get(pos..pos + count).ok_or_else(|| perr("truncated move list"))? {
            let nums: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| perr("bad move entry")))
                .collect::<Result<_>>()?;
            let (times, cells) = match nums[..] {
                [t, c, ..] => (t, c as usize),
                _ => return Err(perr("short move line")),
            };
            if nums.len() != 2 + 4 * cells {
                return Err(perr("move line has the wrong number of entries"));
            }
            let mut t = Table3::zeros(l, m, n);
            for c in nums[2..].chunks(4) {
                let (i, j, k) = (c[0] as usize, c[1] as usize, c[2] as usize);
                if i >= l || j >= m || k >= n {
                    return Err(perr("move cell out of range"));
                }
                t.set(i, j, k, c[3]);
            }
            moves.push((Move3::from_table_unchecked(t), times));
        }
        Ok(Certificate {
            start,
            moves,
            witness,
            solution,
        })
    }
}
