//! The 2-way table game: move between tables with fixed row and column sums
//! until every goal cell is zero.

use std::fmt::Write as _;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::moves::Move2;
use crate::tables::{Margins2, Table2};

pub type Reward = Ratio<i64>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardVariant {
    /// `-1/‖s'‖∞` while a goal cell is nonzero, else 0.
    Eq1,
    /// `-1` while a goal cell is nonzero, else 0.
    #[default]
    UnitPenalty,
}

impl RewardVariant {
    pub fn name(self) -> &'static str {
        match self {
            RewardVariant::Eq1 => "eq1",
            RewardVariant::UnitPenalty => "unit-penalty",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eq1" => Ok(RewardVariant::Eq1),
            "unit-penalty" | "unit_penalty" => Ok(RewardVariant::UnitPenalty),
            other => Err(Error::Parse(format!("unknown reward variant {other:?}"))),
        }
    }
}

/// Why an episode ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoneCause {
    Goal,
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub m: usize,
    pub n: usize,
    pub goal: Vec<(usize, usize)>,
    pub lb: i64,
    pub ub: i64,
    pub reward_variant: RewardVariant,
    pub max_steps: u32,
    pub seed: u64,
    /// Chance that a non-goal cell starts at zero.
    pub forbidden_prob: f64,
    /// When set, instances come from a random walk away from a solved table
    /// of this length, so they are solvable.
    pub walk_len: Option<u32>,
}

impl GameConfig {
    pub fn new(m: usize, n: usize, goal: Vec<(usize, usize)>, lb: i64, ub: i64) -> Result<Self> {
        let cfg = GameConfig {
            m,
            n,
            goal,
            lb,
            ub,
            reward_variant: RewardVariant::default(),
            max_steps: 400,
            seed: 0,
            forbidden_prob: 0.0,
            walk_len: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return invalid("the grid must be at least 1x1");
        }
        if self.goal.is_empty() {
            return invalid("the goal set must not be empty");
        }
        if self.goal.iter().any(|&(i, j)| i >= self.m || j >= self.n) {
            return invalid("goal cell outside the grid");
        }
        if self.lb < 0 || self.lb > self.ub {
            return invalid("margin bounds must satisfy 0 <= lb <= ub");
        }
        if !(0.0..=1.0).contains(&self.forbidden_prob) {
            return invalid("forbidden_prob must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn is_goal(&self, i: usize, j: usize) -> bool {
        self.goal.contains(&(i, j))
    }

    /// `key=value` lines; `goal` is a `;`-separated list of `i,j` cells.
    pub fn parse(text: &str) -> Result<Self> {
        let mut m = None;
        let mut n = None;
        let mut goal = None;
        let mut lb = 0;
        let mut ub = None;
        let mut variant = RewardVariant::default();
        let mut max_steps = 400;
        let mut seed = 0;
        let mut forbidden_prob = 0.0;
        let mut walk_len = None;
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("{key}: {e}"));
            match key {
                "m" => m = Some(value.parse().map_err(|e| bad(&e))?),
                "n" => n = Some(value.parse().map_err(|e| bad(&e))?),
                "lb" => lb = value.parse().map_err(|e| bad(&e))?,
                "ub" => ub = Some(value.parse().map_err(|e| bad(&e))?),
                "reward_variant" => variant = RewardVariant::parse(value)?,
                "max_steps" => max_steps = value.parse().map_err(|e| bad(&e))?,
                "seed" => seed = value.parse().map_err(|e| bad(&e))?,
                "forbidden_prob" => forbidden_prob = value.parse().map_err(|e| bad(&e))?,
                "walk_len" => walk_len = Some(value.parse().map_err(|e| bad(&e))?),
                "goal" => goal = Some(parse_cells(value)?),
                other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
            }
        }
        let cfg = GameConfig {
            m: m.ok_or_else(|| Error::Parse("missing m".into()))?,
            n: n.ok_or_else(|| Error::Parse("missing n".into()))?,
            goal: goal.ok_or_else(|| Error::Parse("missing goal".into()))?,
            lb,
            ub: ub.ok_or_else(|| Error::Parse("missing ub".into()))?,
            reward_variant: variant,
            max_steps,
            seed,
            forbidden_prob,
            walk_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let cells: Vec<String> = self.goal.iter().map(|(i, j)| format!("{i},{j}")).collect();
        let _ = writeln!(out, "m={}\nn={}", self.m, self.n);
        let _ = writeln!(out, "goal={}", cells.join(";"));
        let _ = writeln!(out, "lb={}\nub={}", self.lb, self.ub);
        let _ = writeln!(out, "reward_variant={}", self.reward_variant.name());
        let _ = writeln!(out, "max_steps={}\nseed={}", self.max_steps, self.seed);
        let _ = writeln!(out, "forbidden_prob={}", self.forbidden_prob);
        if let Some(w) = self.walk_len {
            let _ = writeln!(out, "walk_len={w}");
        }
        out
    }
}

fn parse_cells(value: &str) -> Result<Vec<(usize, usize)>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(|cell| {
            let (i, j) = cell
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("goal cell {cell:?} is not `i,j`")))?;
            let p = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("goal cell {cell:?}: {e}")))
            };
            Ok((p(i)?, p(j)?))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub table: Table2,
    pub margins: Margins2,
    pub step_count: u32,
}

impl GameState {
    pub fn new(table: Table2) -> Result<Self> {
        if !table.is_nonnegative() {
            return invalid("game tables are nonnegative");
        }
        Ok(GameState {
            margins: table.margins()?,
            table,
            step_count: 0,
        })
    }
}

/// One step of an episode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub state: Table2,
    pub action: Table2,
    pub next_state: Table2,
    pub reward: Reward,
    pub done: bool,
    pub cause: Option<DoneCause>,
}

/// Random table with row sums in `[lb, ub]`; each non-goal cell is held at
/// zero with probability `forbidden_prob`.
pub fn generate_instance<R: Rng>(cfg: &GameConfig, rng: &mut R) -> Result<GameState> {
    cfg.validate()?;
    let table = random_table(cfg, rng, false);
    GameState::new(table)
}

fn random_table<R: Rng>(cfg: &GameConfig, rng: &mut R, goal_zero: bool) -> Table2 {
    let mut t = Table2::zeros(cfg.m, cfg.n);
    for i in 0..cfg.m {
        let mut open: Vec<usize> = (0..cfg.n)
            .filter(|&j| {
                if cfg.is_goal(i, j) {
                    !goal_zero
                } else {
                    !rng.gen_bool(cfg.forbidden_prob)
                }
            })
            .collect();
        if open.is_empty() {
            // keep the row able to reach lb
            let spare: Vec<usize> = (0..cfg.n).filter(|&j| !goal_zero || !cfg.is_goal(i, j)).collect();
            match spare.choose(rng) {
                Some(&j) => open.push(j),
                None => continue,
            }
        }
        let total = rng.gen_range(cfg.lb..=cfg.ub);
        // uniform composition of `total` into `open.len()` parts
        let mut cuts: Vec<i64> = (1..open.len()).map(|_| rng.gen_range(0..=total)).collect();
        cuts.push(0);
        cuts.push(total);
        cuts.sort_unstable();
        for (w, &j) in cuts.windows(2).zip(&open) {
            t.set(i, j, w[1] - w[0]);
        }
    }
    t
}

/// A state solvable in at most `walk_len` steps: a table with zero goal
/// cells followed by `walk_len` random legal circuits, reversed. Each step
/// prefers a circuit that does not land on a terminal table, so the walk
/// rarely ends where it started.
pub fn generate_solvable_instance<R: Rng>(cfg: &GameConfig, rng: &mut R, walk_len: u32) -> Result<GameState> {
    cfg.validate()?;
    let mut table = random_table(cfg, rng, true);
    for _ in 0..walk_len {
        let mut pick = None;
        for _ in 0..8 {
            let Some(g) = random_legal_circuit(&table, rng) else { break };
            let next = g.apply(&table, 1).expect("legal");
            let done = is_terminal(&next, &cfg.goal);
            pick = Some(next);
            if !done {
                break;
            }
        }
        match pick {
            Some(next) => table = next,
            None => break,
        }
    }
    GameState::new(table)
}

/// A uniformly drawn circuit among a batch of random tries, falling back to
/// the full list of legal circuits.
pub fn random_legal_circuit<R: Rng>(t: &Table2, rng: &mut R) -> Option<Move2> {
    let (m, n) = t.shape();
    if m < 2 || n < 2 {
        return None;
    }
    for _ in 0..64 {
        let k = rng.gen_range(2..=m.min(n));
        let mut rows: Vec<usize> = (0..m).collect();
        let mut cols: Vec<usize> = (0..n).collect();
        rows.shuffle(rng);
        cols.shuffle(rng);
        let (rows, cols) = (&rows[..k], &cols[..k]);
        let plus: Vec<_> = (0..k).map(|s| (rows[s], cols[s])).collect();
        let minus: Vec<_> = (0..k).map(|s| (rows[(s + 1) % k], cols[s])).collect();
        let g = Move2::from_cells(m, n, &plus, &minus);
        if is_legal_table(t, &g) {
            return Some(g);
        }
    }
    let legal: Vec<Move2> = crate::moves::enumerate_circuits_2way(m, n)
        .into_iter()
        .filter(|g| is_legal_table(t, g))
        .collect();
    legal.choose(rng).cloned()
}

fn is_legal_table(t: &Table2, g: &Move2) -> bool {
    !g.is_zero() && g.apply(t, 1).is_some()
}

/// Whether `action` is a nonzero `{-1, 0, 1}` table with zero line sums that
/// keeps the state nonnegative.
pub fn is_legal(state: &GameState, action: &Table2) -> bool {
    action.shape() == state.table.shape()
        && Move2::new(action.clone()).is_ok_and(|g| is_legal_table(&state.table, &g))
}

/// Every goal cell is zero.
pub fn is_terminal(table: &Table2, goal: &[(usize, usize)]) -> bool {
    goal.iter().all(|&(i, j)| table.get(i, j) == 0)
}

pub fn reward_for(variant: RewardVariant, next: &Table2, goal: &[(usize, usize)]) -> Reward {
    if is_terminal(next, goal) {
        return Reward::from_integer(0);
    }
    match variant {
        RewardVariant::UnitPenalty => Reward::from_integer(-1),
        RewardVariant::Eq1 => Reward::new(-1, next.max_abs().max(1)),
    }
}

/// Applies a legal action. The episode ends when every goal cell is zero or
/// `max_steps` steps have been taken.
pub fn step(cfg: &GameConfig, state: &GameState, action: &Table2) -> Result<(GameState, Transition)> {
    if state.step_count >= cfg.max_steps || is_terminal(&state.table, &cfg.goal) {
        return Err(Error::IllegalMove("the episode is over".into()));
    }
    if !is_legal(state, action) {
        return Err(Error::IllegalMove(
            "actions must be nonzero {-1,0,1} tables with zero line sums that keep the state nonnegative"
                .into(),
        ));
    }
    let next_table = state.table.checked_add(action)?;
    let next = GameState {
        table: next_table.clone(),
        margins: state.margins.clone(),
        step_count: state.step_count + 1,
    };
    let reward = reward_for(cfg.reward_variant, &next_table, &cfg.goal);
    let cause = if is_terminal(&next_table, &cfg.goal) {
        Some(DoneCause::Goal)
    } else if next.step_count >= cfg.max_steps {
        Some(DoneCause::Timeout)
    } else {
        None
    };
    let tr = Transition {
        state: state.table.clone(),
        action: action.clone(),
        next_state: next_table,
        reward,
        done: cause.is_some(),
        cause,
    };
    Ok((next, tr))
}

/// Nearest `f64` to the reward.
pub fn reward_decimal(r: &Reward) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> GameConfig {
        GameConfig::new(2, 2, vec![(0, 0)], 0, 3).unwrap()
    }

    #[test]
    fn zero_bounds_give_zero_table() {
        let mut c = cfg();
        c.ub = 0;
        let s = generate_instance(&c, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(s.table.is_zero());
    }

    #[test]
    fn legality() {
        let s = GameState::new(Table2::from_rows(&[[1, 0], [0, 1]]).unwrap()).unwrap();
        assert!(!is_legal(&s, &Table2::zeros(2, 2)));
        assert!(is_legal(&s, &Table2::from_rows(&[[-1, 1], [1, -1]]).unwrap()));
        assert!(!is_legal(&s, &Table2::from_rows(&[[1, -1], [-1, 1]]).unwrap()));
    }

    #[test]
    fn rewards() {
        let goal = [(0, 0)];
        let t = Table2::from_rows(&[[4, 0], [0, 1]]).unwrap();
        assert_eq!(reward_for(RewardVariant::Eq1, &t, &goal), Reward::new(-1, 4));
        assert_eq!(reward_for(RewardVariant::UnitPenalty, &t, &goal), Reward::from_integer(-1));
        let done = Table2::from_rows(&[[0, 4], [1, 0]]).unwrap();
        assert_eq!(reward_for(RewardVariant::Eq1, &done, &goal), Reward::from_integer(0));
    }

    #[test]
    fn config_round_trip() {
        let mut c = cfg();
        c.walk_len = Some(3);
        c.reward_variant = RewardVariant::Eq1;
        assert_eq!(GameConfig::parse(&c.to_text()).unwrap(), c);
    }
}
