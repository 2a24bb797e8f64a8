pub mod corpus;
pub mod error;
pub mod grid;
pub mod hull;
pub mod intervals;
pub mod io;
pub mod positioning;
pub mod theorems;
pub mod transport;
pub mod verdict;
pub mod rational;

pub use error::{Error, Result};
pub use grid::GridSet;
pub use hull::Polytope;
pub use intervals::{IntervalSet, TorusSet};
pub use rational::{Rational, RationalScalar};
