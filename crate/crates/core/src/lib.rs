//! Group testing for federated learning: pool clients into overlapping test
//! groups, test the aggregated group models, and decode the noisy outcomes
//! into an estimate of which clients are malicious.

pub mod codes;
pub mod trellis;
pub mod decoder;
pub mod rng;
pub mod flsim;
pub mod experiment;
