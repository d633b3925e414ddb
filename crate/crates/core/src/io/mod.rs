//! Wire formats: demonstration files and the JSON-lines environment
//! protocol.

mod demos;
mod protocol;

pub use demos::{read_demos, write_demos, DemoRecord};
pub use protocol::{serve, Session, PROTOCOL_VERSION};
#[cfg(unix)]
pub use protocol::serve_unix;

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::game::Reward;
use crate::tables::Table2;

/// Nested row arrays, the JSON shape of a table.
pub fn table_to_rows(t: &Table2) -> Vec<Vec<i64>> {
    t.to_rows()
}

pub fn table_from_rows(rows: &[Vec<i64>]) -> Result<Table2> {
    if rows.is_empty() {
        return Err(Error::Parse("empty table".into()));
    }
    Table2::from_rows(rows)
}

/// `-1/4` style text; integers drop the denominator.
pub fn reward_to_string(r: &Reward) -> String {
    r.to_string()
}

pub fn reward_from_str(s: &str) -> Result<Reward> {
    Reward::from_str(s).map_err(|e| Error::Parse(format!("reward {s:?}: {e}")))
}

pub fn reward_to_f64(r: &Reward) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
