//! Baseline players for the 2-way game: a one-step greedy policy and a
//! breadth-first search that finds shortest solutions.

use std::collections::{HashMap, VecDeque};

use crate::error::Result;
use crate::game::{self, GameConfig, GameState, Transition};
use crate::moves::{enumerate_actions_2way, enumerate_circuits_2way, Move2};
use crate::projection::{ternary_min, CellCosts};
use crate::tables::Table2;

/// What the greedy policy optimises over the goal cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GreedyCriterion {
    /// Drive goal mass down, towards a terminal state.
    #[default]
    MinimizeGoalMass,
    /// Push goal mass up.
    MaximizeGoalMass,
}

/// The move set a player draws from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Candidates {
    /// Circuits: a single signed cycle of alternating `+1`/`-1` cells.
    #[default]
    Circuits,
    /// Every nonzero `{-1,0,1}` table with zero line sums.
    Actions,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GreedyOptions {
    pub criterion: GreedyCriterion,
    pub candidates: Candidates,
}

/// Greedy player with its candidate list cached per shape.
pub struct Greedy {
    opts: GreedyOptions,
    shape: (usize, usize),
    circuits: Vec<Move2>,
}

impl Greedy {
    pub fn new(m: usize, n: usize, opts: GreedyOptions) -> Self {
        let circuits = match opts.candidates {
            Candidates::Circuits => enumerate_circuits_2way(m, n),
            Candidates::Actions => Vec::new(),
        };
        Greedy {
            opts,
            shape: (m, n),
            circuits,
        }
    }

    /// The legal candidate that most improves goal mass, smallest first on
    /// ties; `None` when nothing strictly improves it.
    pub fn choose(&self, t: &Table2, goal: &[(usize, usize)]) -> Option<Move2> {
        assert_eq!(t.shape(), self.shape, "table shape differs from the player's");
        let sign = match self.opts.criterion {
            GreedyCriterion::MinimizeGoalMass => 1,
            GreedyCriterion::MaximizeGoalMass => -1,
        };
        match self.opts.candidates {
            Candidates::Circuits => self
                .circuits
                .iter()
                .filter(|g| g.apply(t, 1).is_some())
                .map(|g| (sign * goal.iter().map(|&(i, j)| g.get(i, j)).sum::<i64>(), g))
                .filter(|&(score, _)| score < 0)
                .min()
                .map(|(_, g)| g.clone()),
            Candidates::Actions => {
                let (m, n) = self.shape;
                let costs: Vec<CellCosts> = (0..m * n)
                    .map(|p| {
                        let w = if goal.contains(&(p / n, p % n)) { sign as f64 } else { 0.0 };
                        [(t.as_slice()[p] > 0).then_some(-w), Some(0.0), Some(w)]
                    })
                    .collect();
                let (cells, score) = ternary_min(m, n, &costs, 1, m * n)?;
                if score >= -0.5 {
                    return None;
                }
                let table = Table2::from_vec(m, n, cells.into_iter().map(i64::from).collect()).ok()?;
                Move2::new(table).ok()
            }
        }
    }
}

pub fn greedy_step(t: &Table2, goal: &[(usize, usize)], opts: GreedyOptions) -> Option<Move2> {
    let (m, n) = t.shape();
    Greedy::new(m, n, opts).choose(t, goal)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RolloutEnd {
    Solved,
    /// No candidate improves the goal mass.
    Stuck,
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rollout {
    pub transitions: Vec<Transition>,
    pub end: RolloutEnd,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

/// Plays greedy moves from `state` until the goal is reached, no move
/// improves, or the step budget runs out.
pub fn greedy_rollout(cfg: &GameConfig, state: &GameState, opts: GreedyOptions) -> Result<Rollout> {
    let player = Greedy::new(cfg.m, cfg.n, opts);
    let mut state = state.clone();
    let mut transitions = Vec::new();
    loop {
        if game::is_terminal(&state.table, &cfg.goal) {
            return Ok(Rollout { transitions, end: RolloutEnd::Solved });
        }
        if state.step_count >= cfg.max_steps {
            return Ok(Rollout { transitions, end: RolloutEnd::Timeout });
        }
        let Some(g) = player.choose(&state.table, &cfg.goal) else {
            return Ok(Rollout { transitions, end: RolloutEnd::Stuck });
        };
        let (next, tr) = game::step(cfg, &state, g.table())?;
        transitions.push(tr);
        state = next;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BfsOutcome {
    /// A shortest move sequence to a terminal state.
    Solved(Vec<Move2>),
    /// No terminal state is reachable.
    Unreachable,
    /// More than the cap of states was visited.
    BudgetExhausted { visited: usize },
}

impl BfsOutcome {
    pub fn path_len(&self) -> Option<usize> {
        match self {
            BfsOutcome::Solved(p) => Some(p.len()),
            _ => None,
        }
    }
}

/// Breadth-first search over the tables reachable from `t`.
pub fn bfs_solve(t: &Table2, goal: &[(usize, usize)], candidates: Candidates, node_cap: usize) -> BfsOutcome {
    let (m, n) = t.shape();
    if game::is_terminal(t, goal) {
        return BfsOutcome::Solved(Vec::new());
    }
    let moves = match candidates {
        Candidates::Circuits => enumerate_circuits_2way(m, n),
        Candidates::Actions => enumerate_actions_2way(m, n),
    };
    let mut parent: HashMap<Table2, (Table2, usize)> = HashMap::new();
    let mut queue = VecDeque::from([t.clone()]);
    let mut visited = 1;
    while let Some(cur) = queue.pop_front() {
        for (idx, g) in moves.iter().enumerate() {
            let Some(next) = g.apply(&cur, 1) else { continue };
            if next == *t || parent.contains_key(&next) {
                continue;
            }
            if visited >= node_cap {
                return BfsOutcome::BudgetExhausted { visited };
            }
            visited += 1;
            parent.insert(next.clone(), (cur.clone(), idx));
            if game::is_terminal(&next, goal) {
                let mut path = Vec::new();
                let mut at = next;
                while at != *t {
                    let (prev, idx) = parent[&at].clone();
                    path.push(moves[idx].clone());
                    at = prev;
                }
                path.reverse();
                return BfsOutcome::Solved(path);
            }
            queue.push_back(next);
        }
    }
    BfsOutcome::Unreachable
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_clears_a_goal_cell() {
        let t = Table2::from_rows(&[[1, 0], [0, 1]]).unwrap();
        let g = greedy_step(&t, &[(0, 0)], GreedyOptions::default()).unwrap();
        assert_eq!(g, Move2::from_rows(&[[-1, 1], [1, -1]]).unwrap());
        let h = greedy_step(
            &t,
            &[(0, 0)],
            GreedyOptions {
                candidates: Candidates::Actions,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn greedy_stops_without_improvement() {
        let t = Table2::from_rows(&[[1, 0], [0, 0]]).unwrap();
        assert_eq!(greedy_step(&t, &[(0, 0)], GreedyOptions::default()), None);
    }

    #[test]
    fn bfs_finds_short_paths() {
        let t = Table2::from_rows(&[[2, 0], [0, 2]]).unwrap();
        let out = bfs_solve(&t, &[(0, 0)], Candidates::Circuits, 100);
        assert_eq!(out.path_len(), Some(2));
        let stuck = Table2::from_rows(&[[1, 0], [0, 0]]).unwrap();
        assert_eq!(bfs_solve(&stuck, &[(0, 0)], Candidates::Actions, 100), BfsOutcome::Unreachable);
    }
}
