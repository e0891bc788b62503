pub mod baseline;
pub mod bench;
pub mod datalog;
pub mod loader;
pub mod planner;
pub mod runtime;
pub mod storage;
