pub mod dual;
pub mod error;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod primal;
pub mod risk;
pub mod runner;

pub use error::SolveError;
