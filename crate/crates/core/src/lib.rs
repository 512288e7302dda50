pub mod analysis;
pub mod cli;
pub mod compile;
pub mod exec;
pub mod io;
pub mod library;
pub mod machine;
pub mod quantum;
