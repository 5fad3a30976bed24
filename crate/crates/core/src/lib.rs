pub mod agents;
pub mod bench;
pub mod cli;
pub mod domains;
pub mod dsl;
pub mod engine;
pub mod fsutil;
pub mod llm;
pub mod repr;
pub mod value;
