pub mod bench;
pub mod common;
pub mod eval;
pub mod infer;
pub mod oracle;
pub mod traces;
pub mod train;
