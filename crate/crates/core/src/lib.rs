pub mod error;
pub mod expr;
pub mod flow;
pub mod manifold;
pub mod report;
pub mod verify;
pub mod warped;
