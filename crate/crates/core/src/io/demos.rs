use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{reward_from_str, reward_to_f64, reward_to_string, table_from_rows, table_to_rows};
use crate::error::{Error, Result};
use crate::game::{DoneCause, RewardVariant, Transition};

/// One line of a demonstration file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemoRecord {
    pub episode: u64,
    pub step: u32,
    pub reward_variant: RewardVariant,
    pub transition: Transition,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    episode: u64,
    step: u32,
    reward_variant: RewardVariant,
    state: Vec<Vec<i64>>,
    action: Vec<Vec<i64>>,
    next_state: Vec<Vec<i64>>,
    /// Decimal value, for readers that do not need exactness.
    reward: f64,
    reward_exact: String,
    done: bool,
    cause: Option<DoneCause>,
}

impl DemoRecord {
    pub fn to_json(&self) -> String {
        let t = &self.transition;
        let line = Line {
            episode: self.episode,
            step: self.step,
            reward_variant: self.reward_variant,
            state: table_to_rows(&t.state),
            action: table_to_rows(&t.action),
            next_state: table_to_rows(&t.next_state),
            reward: reward_to_f64(&t.reward),
            reward_exact: reward_to_string(&t.reward),
            done: t.done,
            cause: t.cause,
        };
        serde_json::to_string(&line).expect("demo lines serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let line: Line = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let reward = reward_from_str(&line.reward_exact)?;
        if reward_to_f64(&reward) != line.reward {
            return Err(Error::Parse(format!(
                "reward {} disagrees with reward_exact {}",
                line.reward, line.reward_exact
            )));
        }
        Ok(DemoRecord {
            episode: line.episode,
            step: line.step,
            reward_variant: line.reward_variant,
            transition: Transition {
                state: table_from_rows(&line.state)?,
                action: table_from_rows(&line.action)?,
                next_state: table_from_rows(&line.next_state)?,
                reward,
                done: line.done,
                cause: line.cause,
            },
        })
    }
}

pub fn write_demos<W: Write>(mut w: W, records: &[DemoRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_json())?;
    }
    w.flush()
}

/// Reads one record per non-blank line; errors name the line number.
pub fn read_demos<R: BufRead>(r: R) -> Result<Vec<DemoRecord>> {
    let mut out = Vec::new();
    for (no, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            DemoRecord::from_json(&line).map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?,
        );
    }
    Ok(out)
}
