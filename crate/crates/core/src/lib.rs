pub mod experiment;
pub mod morphology;
pub mod neat;
pub mod physics;
pub mod rollout;
pub mod stats;
