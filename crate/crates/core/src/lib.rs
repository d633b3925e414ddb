//! Integer feasibility of polytopes as a game on integer tables with fixed
//! margins.
//!
//! [`encoder`] rewrites `{y ≥ 0 : Ay = b}` as a face of a 3-way plane-sum
//! transportation polytope, [`moves`] decides whether that face has a
//! lattice point by reducing tables along Gröbner moves, and [`game`],
//! [`projection`] and [`solvers`] expose the 2-way version as an
//! environment for learning agents. [`io`] holds the file formats and the
//! line protocol spoken by external learners.

pub mod encoder;
pub mod error;
pub mod game;
pub mod io;
pub mod moves;
pub mod projection;
pub mod solvers;
pub mod tables;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tables.md")]
    mod tables {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/game.md")]
    mod game {}
    #[doc = include_str!("../../../book/src/projection.md")]
    mod projection {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
}
