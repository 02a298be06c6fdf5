pub mod math;
pub mod orbit;
pub mod scene;
pub mod trainee;
pub mod env;
pub mod agent;
pub mod metrics;
pub mod harness;
pub mod acceptance;
