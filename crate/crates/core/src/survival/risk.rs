use crate::error::{Error, Result};

use super::SurvivalDataset;

/// Distinct event times with their event and at-risk sets.
///
/// Subjects are kept sorted by observed time, so every risk set is a suffix
/// of [`RiskStructure::order`]. A subject censored exactly at an event time is
/// still at risk at that time.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskStructure {
    event_times: Vec<f64>,
    order: Vec<usize>,
    risk_start: Vec<usize>,
    event_sets: Vec<Vec<usize>>,
}

impl RiskStructure {
    /// Number of distinct event times.
    pub fn k(&self) -> usize {
        self.event_times.len()
    }

    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    /// Subject indices sorted by observed time (ties by index).
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Position in [`order`](Self::order) where risk set `j` begins.
    pub fn risk_start(&self, j: usize) -> usize {
        self.risk_start[j]
    }

    pub fn risk_set(&self, j: usize) -> &[usize] {
        &self.order[self.risk_start[j]..]
    }

    pub fn event_set(&self, j: usize) -> &[usize] {
        &self.event_sets[j]
    }

    /// `d_j`
    pub fn d(&self, j: usize) -> usize {
        self.event_sets[j].len()
    }

    /// `n_j`
    pub fn n_at_risk(&self, j: usize) -> usize {
        self.order.len() - self.risk_start[j]
    }

    pub fn d_counts(&self) -> Vec<usize> {
        (0..self.k()).map(|j| self.d(j)).collect()
    }

    pub fn n_counts(&self) -> Vec<usize> {
        (0..self.k()).map(|j| self.n_at_risk(j)).collect()
    }

    pub fn max_ties(&self) -> usize {
        (0..self.k()).map(|j| self.d(j)).max().unwrap_or(0)
    }

    pub fn has_ties(&self) -> bool {
        self.max_ties() > 1
    }

    /// Flags the members of event set `j`, indexed by subject.
    pub(crate) fn event_mask(&self, j: usize) -> Vec<bool> {
        let mut mask = vec![false; self.order.len()];
        for &i in self.event_set(j) {
            mask[i] = true;
        }
        mask
    }
}

/// Extracts the distinct event times and their event and risk sets.
pub fn build_risk_structure(data: &SurvivalDataset) -> Result<RiskStructure> {
    let times = data.times();
    let status = data.status();
    let mut order: Vec<usize> = (0..data.n()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));

    let mut event_times = Vec::new();
    let mut risk_start = Vec::new();
    let mut event_sets = Vec::new();
    let mut pos = 0;
    while pos < order.len() {
        let t = times[order[pos]];
        let mut end = pos;
        while end < order.len() && times[order[end]] == t {
            end += 1;
        }
        let events: Vec<usize> = order[pos..end]
            .iter()
            .copied()
            .filter(|&i| status[i])
            .collect();
        if !events.is_empty() {
            event_times.push(t);
            risk_start.push(pos);
            event_sets.push(events);
        }
        pos = end;
    }
    if event_times.is_empty() {
        return Err(Error::Structure("no events in the data".into()));
    }
    Ok(RiskStructure {
        event_times,
        order,
        risk_start,
        event_sets,
    })
}
