use std::fmt;

use serde::Serialize;

use super::ExperimentError;
use crate::codes::{privacy_level, AssignmentMatrix};

/// Cost of one secure aggregation over `k` clients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SecAggCostModel {
    /// `c(k) = k`.
    #[default]
    Linear,
}

impl SecAggCostModel {
    pub fn cost(self, k: usize) -> f64 {
        match self {
            SecAggCostModel::Linear => k as f64,
        }
    }
}

/// Secure-aggregation cost of a training run with one group-testing round,
/// assuming nobody is excluded afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommCost {
    pub before: f64,
    pub testing_round: f64,
    pub after: f64,
    /// Testing round relative to one secure aggregation over all clients.
    pub testing_ratio: f64,
}

impl CommCost {
    pub fn total(&self) -> f64 {
        self.before + self.testing_round + self.after
    }
}

pub fn comm_cost(
    n: usize,
    m: usize,
    max_group_size: usize,
    rounds: usize,
    test_round: usize,
    model: SecAggCostModel,
) -> Result<CommCost, ExperimentError> {
    if n == 0 || m == 0 || max_group_size == 0 || max_group_size > n {
        return Err(ExperimentError::Config(format!(
            "need positive n, m and group size at most n, got n = {n}, m = {m}, group size = {max_group_size}"
        )));
    }
    if test_round == 0 || test_round > rounds {
        return Err(ExperimentError::Config(format!("test_round {test_round} not in 1..={rounds}")));
    }
    let full = model.cost(n);
    let testing_round = m as f64 * model.cost(max_group_size);
    Ok(CommCost {
        before: (test_round - 1) as f64 * full,
        testing_round,
        after: (rounds - test_round) as f64 * full,
        testing_ratio: testing_round / full,
    })
}

/// Privacy level and group layout of an assignment matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrivacyReport {
    pub privacy_level: usize,
    pub groups: usize,
    pub clients: usize,
    pub group_sizes: Vec<usize>,
}

pub fn privacy_report(a: &AssignmentMatrix) -> Result<PrivacyReport, ExperimentError> {
    Ok(PrivacyReport {
        privacy_level: privacy_level(a)?,
        groups: a.groups(),
        clients: a.clients(),
        group_sizes: a.group_sizes(),
    })
}

impl fmt::Display for PrivacyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.group_sizes.iter().map(|s| s.to_string()).collect();
        writeln!(f, "privacy level: {}", self.privacy_level)?;
        writeln!(f, "clients: {}", self.clients)?;
        writeln!(f, "groups: {}", self.groups)?;
        write!(f, "group sizes: {}", sizes.join(" "))
    }
}
