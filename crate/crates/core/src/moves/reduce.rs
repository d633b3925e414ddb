use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::tables::{Axes, Table2, Table3};

use super::circuits::{conformal_decomposition, pairs, slice_embed};
use super::order::{Order2, TermOrder};
use super::{Move2, Move3};

/// How the next reducing move is picked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Policy {
    /// Deterministic: the first circuit found in a fixed search order,
    /// applied as many times as it stays applicable; tiers in order.
    #[default]
    Canonical,
    /// Random circuits, random lifts, random tier interleaving, one unit at
    /// a time. The sink must not depend on these choices.
    Seeded(u64),
}

struct Arc {
    from: usize,
    to: usize,
    cost: i64,
    cell: (usize, usize),
    add: bool,
}

// Rows are nodes 0..r, columns r..r+c. Raising cell (i, k) is the arc i -> k
// with the cell's weight as cost; lowering it (only when positive) is k -> i
// with the negated weight. A simple cycle is a circuit and its cost is the
// change in forbidden mass.
fn arcs(t: &Table2, order: &Order2, above_rank: Option<usize>) -> Vec<Arc> {
    let (r, c) = t.shape();
    let mut out = Vec::with_capacity(2 * r * c);
    for i in 0..r {
        for k in 0..c {
            if above_rank.is_some_and(|min| order.rank(i, k) <= min) {
                continue;
            }
            let w = order.cell_weight(i, k);
            out.push(Arc {
                from: i,
                to: r + k,
                cost: w,
                cell: (i, k),
                add: true,
            });
            if t.get(i, k) >= 1 {
                out.push(Arc {
                    from: r + k,
                    to: i,
                    cost: -w,
                    cell: (i, k),
                    add: false,
                });
            }
        }
    }
    out
}

fn negative_cycle(nodes: usize, arcs: &[Arc]) -> Option<Vec<usize>> {
    let mut dist = vec![0i64; nodes];
    let mut pred = vec![usize::MAX; nodes];
    let mut last = None;
    for _ in 0..=nodes {
        last = None;
        for (idx, a) in arcs.iter().enumerate() {
            if dist[a.from] + a.cost < dist[a.to] {
                dist[a.to] = dist[a.from] + a.cost;
                pred[a.to] = idx;
                last = Some(a.to);
            }
        }
        last?;
    }
    let mut v = last?;
    for _ in 0..nodes {
        v = arcs[pred[v]].from;
    }
    let start = v;
    let mut cycle = Vec::new();
    loop {
        let a = pred[v];
        cycle.push(a);
        v = arcs[a].from;
        if v == start {
            break;
        }
    }
    cycle.reverse();
    Some(cycle)
}

fn shortest_path(nodes: usize, arcs: &[Arc], src: usize, dst: usize) -> Option<(i64, Vec<usize>)> {
    let mut dist = vec![i64::MAX; nodes];
    let mut pred = vec![usize::MAX; nodes];
    dist[src] = 0;
    for _ in 0..nodes {
        let mut changed = false;
        for (idx, a) in arcs.iter().enumerate() {
            if dist[a.from] != i64::MAX && dist[a.from] + a.cost < dist[a.to] {
                dist[a.to] = dist[a.from] + a.cost;
                pred[a.to] = idx;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if dist[dst] == i64::MAX {
        return None;
    }
    let mut path = Vec::new();
    let mut v = dst;
    while v != src {
        let a = pred[v];
        path.push(a);
        v = arcs[a].from;
    }
    path.reverse();
    Some((dist[dst], path))
}

fn circuit_from(rows: usize, cols: usize, arcs: &[Arc], used: &[usize]) -> Move2 {
    let plus: Vec<_> = used.iter().filter(|&&a| arcs[a].add).map(|&a| arcs[a].cell).collect();
    let minus: Vec<_> = used.iter().filter(|&&a| !arcs[a].add).map(|&a| arcs[a].cell).collect();
    Move2::from_cells(rows, cols, &plus, &minus)
}

fn search(t: &Table2, order: &Order2, mut rng: Option<&mut ChaCha8Rng>) -> Option<Move2> {
    let (r, c) = t.shape();
    let nodes = r + c;
    // lowering forbidden mass
    let mut all = arcs(t, order, None);
    if let Some(g) = rng.as_mut() {
        all.shuffle(*g);
    }
    if let Some(cyc) = negative_cycle(nodes, &all) {
        return Some(circuit_from(r, c, &all, &cyc));
    }
    // equal forbidden mass, lexicographically smaller: lower cell e and
    // touch only later cells
    let mut cells: Vec<(usize, usize)> = order.cells_by_rank().collect();
    if let Some(g) = rng.as_mut() {
        cells.shuffle(*g);
    }
    for (i, k) in cells {
        if t.get(i, k) < 1 {
            continue;
        }
        let later = arcs(t, order, Some(order.rank(i, k)));
        if let Some((cost, path)) = shortest_path(nodes, &later, i, r + k) {
            if cost == order.cell_weight(i, k) {
                let mut g = circuit_from(r, c, &later, &path);
                g.0.set(i, k, -1);
                return Some(g);
            }
        }
    }
    None
}

/// A circuit `g` with `t + g ≥ 0` and `t + g ≺ t`, or `None` when `t` is the
/// minimum of its fiber under `order`.
///
/// Circuits lowering the forbidden mass are negative cycles of the exchange
/// graph; once none is left, a circuit whose first changed cell (in the
/// lexicographic order) goes down is a shortest path through later cells.
pub fn find_reducing_circuit(t: &Table2, order: &Order2) -> Option<Move2> {
    search(t, order, None)
}

/// Result of a 2-way reduction: the normal form and the applied circuits
/// with their multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction2 {
    pub table: Table2,
    pub moves: Vec<(Move2, i64)>,
    pub steps: u64,
}

fn max_applicable(t: &Table2, g: &Move2) -> i64 {
    let (r, c) = t.shape();
    let mut best = i64::MAX;
    for i in 0..r {
        for k in 0..c {
            if g.get(i, k) < 0 {
                best = best.min(t.get(i, k));
            }
        }
    }
    best
}

/// Reduces a 2-way table to the minimum of its fiber under `order`.
pub fn reduce_2way(t: &Table2, order: &Order2, policy: Policy, step_cap: u64) -> Result<Reduction2> {
    if t.shape() != order.shape() {
        return invalid("table shape does not match the order");
    }
    if !t.is_nonnegative() {
        return invalid("reduction needs a nonnegative table");
    }
    let mut rng = match policy {
        Policy::Canonical => None,
        Policy::Seeded(s) => Some(ChaCha8Rng::seed_from_u64(s)),
    };
    let mut cur = t.clone();
    let mut moves = Vec::new();
    let mut steps = 0u64;
    while let Some(g) = search(&cur, order, rng.as_mut()) {
        let times = if rng.is_some() { 1 } else { max_applicable(&cur, &g) };
        steps = steps.saturating_add(times as u64);
        if steps > step_cap {
            return Err(Error::BudgetExhausted(format!("more than {step_cap} reduction steps")));
        }
        cur = g.apply(&cur, times).ok_or(Error::Overflow("reduction step"))?;
        moves.push((g, times));
    }
    Ok(Reduction2 {
        table: cur,
        moves,
        steps,
    })
}

/// Result of a 3-way reduction: the sink and the path of lifted and slice
/// moves leading to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub table: Table3,
    pub moves: Vec<(Move3, i64)>,
    pub steps: u64,
}

pub(crate) struct Walker<'a> {
    pub table: Table3,
    pub moves: Vec<(Move3, i64)>,
    pub steps: u64,
    cap: u64,
    rng: Option<&'a mut ChaCha8Rng>,
}

impl<'a> Walker<'a> {
    pub fn new(table: Table3, cap: u64, rng: Option<&'a mut ChaCha8Rng>) -> Self {
        Walker {
            table,
            moves: Vec::new(),
            steps: 0,
            cap,
            rng,
        }
    }

    fn record(&mut self, mv: Move3, times: i64) -> Result<()> {
        self.steps = self.steps.saturating_add(times as u64);
        if self.steps > self.cap {
            return Err(Error::BudgetExhausted(format!(
                "more than {} reduction steps",
                self.cap
            )));
        }
        self.table = mv.apply(&self.table, times).ok_or_else(|| {
            Error::IllegalMove("a lifted move left the nonnegative orthant".into())
        })?;
        match self.moves.last_mut() {
            Some((last, n)) if *last == mv => *n += times,
            _ => self.moves.push((mv, times)),
        }
        Ok(())
    }

    /// Applies `times` copies of a move of the xz (`yz == false`) or yz
    /// projection, choosing for every pair of cells a free index whose entry
    /// can be lowered.
    pub fn apply_projected(&mut self, g: &Move2, yz: bool, mut times: i64) -> Result<()> {
        let [l, m, n] = self.table.dims();
        let ps = pairs(g);
        while times > 0 {
            let mut choice = Vec::with_capacity(ps.len());
            let mut room = times;
            for &(k, from, _) in &ps {
                let others = if yz { l } else { m };
                let value = |free: usize| {
                    if yz {
                        self.table.get(free, from, k)
                    } else {
                        self.table.get(from, free, k)
                    }
                };
                let candidates: Vec<usize> = (0..others).filter(|&f| value(f) >= 1).collect();
                let free = match self.rng.as_mut() {
                    Some(rng) => candidates.choose(*rng),
                    None => candidates.first(),
                }
                .copied()
                .ok_or_else(|| Error::IllegalMove("projected move is not applicable".into()))?;
                room = room.min(value(free));
                choice.push(free);
            }
            if self.rng.is_some() {
                room = 1;
            }
            let mut t = Table3::zeros(l, m, n);
            for (&(k, from, to), &free) in ps.iter().zip(&choice) {
                if yz {
                    t.add_at(free, from, k, -1);
                    t.add_at(free, to, k, 1);
                } else {
                    t.add_at(from, free, k, -1);
                    t.add_at(to, free, k, 1);
                }
            }
            self.record(Move3::from_table_unchecked(t), room)?;
            times -= room;
        }
        Ok(())
    }

    pub fn apply_slice(&mut self, g: &Move2, k: usize, times: i64) -> Result<()> {
        let n = self.table.dims()[2];
        self.record(slice_embed(g, k, n)?, times)
    }

    /// Moves the xz or yz projection to `target` along sign-compatible
    /// circuits, lifting each.
    pub fn transport_projection(&mut self, target: &Table2, yz: bool) -> Result<()> {
        let cur = self.table.project(if yz { Axes::YZ } else { Axes::XZ })?;
        let delta = target.checked_sub(&cur)?;
        for (g, times) in conformal_decomposition(&delta)? {
            self.apply_projected(&g, yz, times)?;
        }
        Ok(())
    }

    /// Reduces the projection (tier 0 = xz, 1 = yz) or slice (`2 + k`) by
    /// one circuit; returns whether anything changed.
    fn reduce_tier_once(&mut self, order: &TermOrder, tier: usize) -> Result<bool> {
        let (proj, ord) = match tier {
            0 => (self.table.project(Axes::XZ)?, &order.xz),
            1 => (self.table.project(Axes::YZ)?, &order.yz),
            t => (self.table.project(Axes::Slice(t - 2))?, &order.slices[t - 2]),
        };
        let Some(g) = search(&proj, ord, self.rng.as_deref_mut()) else {
            return Ok(false);
        };
        let times = if self.rng.is_some() { 1 } else { max_applicable(&proj, &g) };
        match tier {
            0 => self.apply_projected(&g, false, times)?,
            1 => self.apply_projected(&g, true, times)?,
            t => self.apply_slice(&g, t - 2, times)?,
        }
        Ok(true)
    }

    pub fn reduce_tier(&mut self, order: &TermOrder, tier: usize) -> Result<()> {
        while self.reduce_tier_once(order, tier)? {}
        Ok(())
    }

    pub fn reduce_all(&mut self, order: &TermOrder) -> Result<()> {
        let tiers = 2 + self.table.dims()[2];
        if self.rng.is_none() {
            for tier in 0..tiers {
                self.reduce_tier(order, tier)?;
            }
            return Ok(());
        }
        let mut live: Vec<usize> = (0..tiers).collect();
        while !live.is_empty() {
            let idx = self.rng.as_mut().map_or(0, |g| g.gen_range(0..live.len()));
            let tier = live[idx];
            if !self.reduce_tier_once(order, tier)? {
                live.swap_remove(idx);
            } else {
                // a changed projection can re-enable later slices
                live = (0..tiers).collect();
            }
        }
        Ok(())
    }
}

/// Reduces `t` to the unique sink of its fiber under the composite order,
/// generating lifted and slice moves on the fly.
///
/// The xz projection is reduced by lifted circuits, then the yz projection,
/// then each slice; because lifted moves fix the other projection and
/// slice moves fix both, the sink is the same for every [`Policy`].
pub fn reduce_to_sink(t: &Table3, order: &TermOrder, policy: Policy, step_cap: u64) -> Result<Reduction> {
    if t.dims() != order.dims() {
        return invalid("table shape does not match the term order");
    }
    if !t.is_nonnegative() {
        return invalid("reduction needs a nonnegative table");
    }
    let mut rng = match policy {
        Policy::Canonical => None,
        Policy::Seeded(s) => Some(ChaCha8Rng::seed_from_u64(s)),
    };
    let mut walker = Walker::new(t.clone(), step_cap, rng.as_mut());
    walker.reduce_all(order)?;
    Ok(Reduction {
        table: walker.table,
        moves: walker.moves,
        steps: walker.steps,
    })
}
