//! Ternary minimisation as a min-cost circulation.
//!
//! Rows and columns are the nodes of a bipartite graph. Raising cell `(i, j)`
//! by one moves a unit from row `i` to column `j`, lowering it moves a unit
//! back, so zero line sums are exactly flow conservation. With costs convex
//! in the cell value the residual graph carries the marginal cost of each
//! unit step and the usual optimality conditions apply: no negative cycle.
//!
//! The lexicographically smallest optimum is found by fixing cells in
//! row-major order, each time moving to the smallest value whose best
//! completion still costs the optimum. A change at one cell is priced by a
//! shortest path through the free cells.

use super::{CellCosts, TIE_EPS};

/// Slack for one relaxation; far below `TIE_EPS`.
const RELAX_EPS: f64 = 1e-12;

/// Upper limit on cancelled cycles before giving up on further gains.
const MAX_CANCELS: usize = 1_000_000;

#[derive(Clone, Copy)]
struct Arc {
    from: usize,
    to: usize,
    cell: usize,
    dir: i8,
    cost: f64,
}

#[derive(Clone)]
struct Residual<'a> {
    m: usize,
    n: usize,
    costs: &'a [CellCosts],
    x: Vec<i8>,
    /// Cells no path or cycle may change.
    fixed: Vec<bool>,
}

fn cost_of(c: &CellCosts, v: i8) -> Option<f64> {
    c[(v + 1) as usize]
}

impl<'a> Residual<'a> {
    fn nodes(&self) -> usize {
        self.m + self.n
    }

    fn total(&self) -> f64 {
        self.x
            .iter()
            .zip(self.costs)
            .map(|(&v, c)| cost_of(c, v).expect("only allowed values are used"))
            .sum()
    }

    fn arcs(&self) -> Vec<Arc> {
        let mut arcs = Vec::with_capacity(2 * self.x.len());
        for (cell, (&v, c)) in self.x.iter().zip(self.costs).enumerate() {
            if self.fixed[cell] {
                continue;
            }
            let (row, col) = (cell / self.n, self.m + cell % self.n);
            let here = cost_of(c, v).expect("only allowed values are used");
            if v < 1 {
                if let Some(up) = cost_of(c, v + 1) {
                    arcs.push(Arc { from: row, to: col, cell, dir: 1, cost: up - here });
                }
            }
            if v > -1 {
                if let Some(down) = cost_of(c, v - 1) {
                    arcs.push(Arc { from: col, to: row, cell, dir: -1, cost: down - here });
                }
            }
        }
        arcs
    }

    /// Bellman-Ford from `sources`. Returns distances, the arc into each
    /// node, and a node still relaxing after `V` passes if any.
    fn bellman_ford(&self, arcs: &[Arc], sources: &[usize]) -> (Vec<f64>, Vec<Option<usize>>, Option<usize>) {
        let v = self.nodes();
        let mut dist = vec![f64::INFINITY; v];
        let mut pred = vec![None; v];
        for &s in sources {
            dist[s] = 0.0;
        }
        for _ in 0..v {
            let mut last = None;
            for (k, a) in arcs.iter().enumerate() {
                let d = dist[a.from] + a.cost;
                if d < dist[a.to] - RELAX_EPS {
                    dist[a.to] = d;
                    pred[a.to] = Some(k);
                    last = Some(a.to);
                }
            }
            if last.is_none() {
                return (dist, pred, None);
            }
        }
        // one more pass tells whether anything still improves
        let mut witness = None;
        for (k, a) in arcs.iter().enumerate() {
            let d = dist[a.from] + a.cost;
            if d < dist[a.to] - RELAX_EPS {
                dist[a.to] = d;
                pred[a.to] = Some(k);
                witness = Some(a.to);
            }
        }
        (dist, pred, witness)
    }

    /// Arcs of the path ending at `to`, walking predecessors back to a node
    /// without one; `None` if the walk does not terminate.
    fn path_to(&self, arcs: &[Arc], pred: &[Option<usize>], to: usize) -> Option<Vec<usize>> {
        let mut out = Vec::new();
        let mut node = to;
        while let Some(k) = pred[node] {
            out.push(k);
            if out.len() > self.nodes() {
                return None;
            }
            node = arcs[k].from;
        }
        Some(out)
    }

    fn cycle_through(&self, arcs: &[Arc], pred: &[Option<usize>], start: usize) -> Option<Vec<usize>> {
        let mut node = start;
        for _ in 0..self.nodes() {
            node = arcs[pred[node]?].from;
        }
        let mut out = Vec::new();
        let mut cur = node;
        loop {
            let k = pred[cur]?;
            out.push(k);
            cur = arcs[k].from;
            if cur == node {
                return Some(out);
            }
            if out.len() > self.nodes() {
                return None;
            }
        }
    }

    fn apply(&mut self, arcs: &[Arc], picked: &[usize]) {
        for &k in picked {
            let a = arcs[k];
            self.x[a.cell] += a.dir;
            debug_assert!((-1..=1).contains(&self.x[a.cell]));
        }
    }

    fn cancel_negative_cycles(&mut self) {
        let all: Vec<usize> = (0..self.nodes()).collect();
        for _ in 0..MAX_CANCELS {
            let arcs = self.arcs();
            let (_, pred, witness) = self.bellman_ford(&arcs, &all);
            let Some(w) = witness else { return };
            let Some(cycle) = self.cycle_through(&arcs, &pred, w) else { return };
            let gain: f64 = cycle.iter().map(|&k| arcs[k].cost).sum();
            if gain >= -RELAX_EPS || !distinct_cells(&arcs, &cycle) {
                return;
            }
            self.apply(&arcs, &cycle);
        }
    }

    /// Pushes `units` units along successive shortest paths from `from` to
    /// `to`; false if some unit has no path.
    fn push(&mut self, from: usize, to: usize, units: usize) -> bool {
        for _ in 0..units {
            let arcs = self.arcs();
            let (dist, pred, _) = self.bellman_ford(&arcs, &[from]);
            if !dist[to].is_finite() {
                return false;
            }
            let Some(path) = self.path_to(&arcs, &pred, to) else { return false };
            if !distinct_cells(&arcs, &path) {
                return false;
            }
            self.apply(&arcs, &path);
        }
        true
    }

    /// Sets free cell `cell` to `v`, fixes it, and rebalances the free cells
    /// at least cost. `None` if no rebalancing exists.
    fn moved(&self, cell: usize, v: i8) -> Option<Residual<'a>> {
        cost_of(&self.costs[cell], v)?;
        let delta = v - self.x[cell];
        let (row, col) = (cell / self.n, self.m + cell % self.n);
        let mut next = self.clone();
        next.x[cell] = v;
        next.fixed[cell] = true;
        // lowering a cell leaves its row and column short, refilled by a
        // path from the row to the column; raising needs the reverse
        let ok = if delta < 0 {
            next.push(row, col, delta.unsigned_abs() as usize)
        } else {
            next.push(col, row, delta as usize)
        };
        ok.then_some(next)
    }
}

fn distinct_cells(arcs: &[Arc], picked: &[usize]) -> bool {
    let mut cells: Vec<usize> = picked.iter().map(|&k| arcs[k].cell).collect();
    cells.sort_unstable();
    cells.windows(2).all(|w| w[0] != w[1])
}

/// Lexicographically smallest nonzero minimiser, or `None` if every
/// allowed table is zero. Needs `cost(-1) + cost(1) >= 2 cost(0)` per cell.
pub(crate) fn min_circulation(m: usize, n: usize, costs: &[CellCosts]) -> Option<(Vec<i8>, f64)> {
    let cells = m * n;
    let mut r = Residual {
        m,
        n,
        costs,
        x: vec![0; cells],
        fixed: vec![false; cells],
    };
    r.cancel_negative_cycles();
    let mut start = 0;
    let opt;
    if r.x.iter().any(|&v| v != 0) {
        opt = r.total();
    } else {
        // the empty table is optimal, so the answer is the cheapest table
        // whose first nonzero cell is `q`, over all `q`
        let mut best: Vec<[Option<(f64, Residual)>; 2]> = Vec::with_capacity(cells);
        for q in 0..cells {
            let mut base = r.clone();
            base.fixed[..q].iter_mut().for_each(|f| *f = true);
            let pick = |v: i8| base.moved(q, v).map(|t| (t.total(), t));
            best.push([pick(-1), pick(1)]);
        }
        let cost = |b: &Option<(f64, Residual)>| b.as_ref().map_or(f64::INFINITY, |(c, _)| *c);
        let mut suffix = vec![f64::INFINITY; cells + 1];
        for q in (0..cells).rev() {
            suffix[q] = suffix[q + 1].min(cost(&best[q][0])).min(cost(&best[q][1]));
        }
        opt = suffix[0];
        if !opt.is_finite() {
            return None;
        }
        let mut chosen = None;
        for (p, pair) in best.into_iter().enumerate() {
            let [down, up] = pair;
            if cost(&down) <= opt + TIE_EPS {
                chosen = down.map(|(_, t)| (p, t));
                break;
            }
            if suffix[p + 1] <= opt + TIE_EPS {
                continue;
            }
            chosen = up.map(|(_, t)| (p, t));
            break;
        }
        let (p, t) = chosen?;
        r = t;
        start = p + 1;
    }
    for p in start..cells {
        let cur = r.x[p];
        for v in -1..cur {
            if let Some(t) = r.moved(p, v) {
                if t.total() <= opt + TIE_EPS && t.x.iter().any(|&x| x != 0) {
                    r = t;
                    break;
                }
            }
        }
        r.fixed[p] = true;
    }
    let total = r.total();
    Some((r.x, total))
}

#[cfg(test)]
mod tests {
    use super::super::ternary_search;
    use super::*;
    use proptest::prelude::*;

    /// Convex per-cell costs, either integer (many ties) or real, with `-1`
    /// sometimes blocked.
    fn costs(cells: usize) -> impl Strategy<Value = Vec<CellCosts>> {
        let real = (-2.0f64..2.0, 0.0f64..3.0, any::<bool>()).prop_map(|(slope, curve, blocked)| {
            [(!blocked).then_some(curve - slope), Some(0.0), Some(curve + slope)]
        });
        let int = (-2i32..=2, 0i32..=2, any::<bool>()).prop_map(|(slope, curve, blocked)| {
            [(!blocked).then_some(f64::from(curve - slope)), Some(0.0), Some(f64::from(curve + slope))]
        });
        prop::collection::vec(prop_oneof![real, int], cells)
    }

    fn case() -> impl Strategy<Value = (usize, usize, Vec<CellCosts>)> {
        (2usize..=4, 2usize..=4).prop_flat_map(|(m, n)| (Just(m), Just(n), costs(m * n)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(600))]
        #[test]
        fn agrees_with_the_search((m, n, costs) in case()) {
            let flow = min_circulation(m, n, &costs);
            let search = ternary_search(m, n, &costs, 1, m * n);
            match (flow, search) {
                (Some((a, ca)), Some((b, cb))) => {
                    prop_assert!((ca - cb).abs() < 1e-9, "{ca} vs {cb}");
                    prop_assert_eq!(a, b);
                }
                (None, None) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn large_grids_are_fast() {
        let (m, n) = (20, 20);
        let costs: Vec<CellCosts> = (0..m * n)
            .map(|k| {
                let a = ((k * 37 % 101) as f64 / 50.0) - 1.0;
                [Some((a + 1.0).powi(2)), Some(a * a), Some((a - 1.0).powi(2))]
            })
            .collect();
        let (x, _) = min_circulation(m, n, &costs).unwrap();
        for i in 0..m {
            assert_eq!(x[i * n..(i + 1) * n].iter().map(|&v| i32::from(v)).sum::<i32>(), 0);
        }
    }
}
