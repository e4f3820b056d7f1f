//! Outcome distributions over the records that survive to the end of a run.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{digits, PROBABILITY_TOL, STRUCTURE_TOL};
use crate::scenario::{Record, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistributionError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown label `{label}` for agent `{agent}`")]
    UnknownLabel { agent: String, label: String },
    #[error("record of {agent} erased; outcome undefined at end of experiment")]
    RecordErased { agent: String },
    #[error("outcome tuple must name every retained agent exactly once")]
    IncompleteTuple,
}

/// One retained record: the agent and its possible readings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordAxis {
    pub agent: String,
    pub labels: Vec<String>,
}

/// Joint reading of all retained records, in time order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutcomeTuple(pub Vec<(String, String)>);

impl fmt::Display for OutcomeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(a, l)| format!("{a}={l}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Probability of every outcome tuple, dense in row-major order over the
/// retained axes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    axes: Vec<RecordAxis>,
    erased: Vec<String>,
    weights: Vec<f64>,
    regime_tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Implication {
    Holds,
    /// Probability of the antecedent occurring with the consequent violated.
    Fails {
        probability: f64,
    },
}

impl Implication {
    pub fn holds(self) -> bool {
        matches!(self, Implication::Holds)
    }
}

impl OutcomeDistribution {
    /// Builds a distribution, clamping weights below [`STRUCTURE_TOL`] to 0.
    pub fn new(
        axes: Vec<RecordAxis>,
        erased: Vec<String>,
        weights: Vec<f64>,
        regime_tag: String,
    ) -> Self {
        let expected: usize = axes.iter().map(|a| a.labels.len()).product();
        assert_eq!(weights.len(), expected, "weight count must match the axes");
        let weights = weights
            .into_iter()
            .map(|w| if w.abs() <= STRUCTURE_TOL { 0.0 } else { w })
            .collect();
        OutcomeDistribution {
            axes,
            erased,
            weights,
            regime_tag,
        }
    }

    /// Retained and erased agents of `s`, in execution order.
    pub fn layout(s: &Scenario) -> (Vec<RecordAxis>, Vec<String>) {
        let mut axes = Vec::new();
        let mut erased = Vec::new();
        for i in s.ordered_measurements() {
            let m = s.measurement(i);
            match m.record {
                Record::Retained => axes.push(RecordAxis {
                    agent: m.agent.clone(),
                    labels: m.basis.labels().to_vec(),
                }),
                Record::Erased => erased.push(m.agent.clone()),
            }
        }
        (axes, erased)
    }

    pub fn axes(&self) -> &[RecordAxis] {
        &self.axes
    }

    pub fn erased(&self) -> &[String] {
        &self.erased
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn regime_tag(&self) -> &str {
        &self.regime_tag
    }

    pub fn agents(&self) -> impl Iterator<Item = &str> {
        self.axes.iter().map(|a| a.agent.as_str())
    }

    fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.labels.len()).collect()
    }

    pub fn tuple(&self, index: usize) -> OutcomeTuple {
        OutcomeTuple(
            digits(index, &self.dims())
                .iter()
                .zip(&self.axes)
                .map(|(&d, a)| (a.agent.clone(), a.labels[d].clone()))
                .collect(),
        )
    }

    /// Tuples with their probabilities, in time order then label order.
    pub fn iter(&self) -> impl Iterator<Item = (OutcomeTuple, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (self.tuple(i), w))
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= PROBABILITY_TOL
    }

    fn axis(&self, agent: &str) -> Result<usize, DistributionError> {
        if let Some(i) = self.axes.iter().position(|a| a.agent == agent) {
            return Ok(i);
        }
        if self.erased.iter().any(|a| a == agent) {
            return Err(DistributionError::RecordErased {
                agent: agent.to_string(),
            });
        }
        Err(DistributionError::UnknownAgent(agent.to_string()))
    }

    fn resolve(&self, agent: &str, label: &str) -> Result<(usize, usize), DistributionError> {
        let axis = self.axis(agent)?;
        let pos = self.axes[axis]
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| DistributionError::UnknownLabel {
                agent: agent.to_string(),
                label: label.to_string(),
            })?;
        Ok((axis, pos))
    }

    /// Probability that every `(agent, label)` constraint holds; agents not
    /// mentioned are summed over.
    pub fn probability(&self, constraints: &[(&str, &str)]) -> Result<f64, DistributionError> {
        let resolved = constraints
            .iter()
            .map(|(a, l)| self.resolve(a, l))
            .collect::<Result<Vec<_>, _>>()?;
        let dims = self.dims();
        Ok(self
            .weights
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let d = digits(*i, &dims);
                resolved.iter().all(|&(axis, pos)| d[axis] == pos)
            })
            .map(|(_, w)| w)
            .sum())
    }

    /// Probability of one complete outcome tuple.
    pub fn get(&self, tuple: &[(&str, &str)]) -> Result<f64, DistributionError> {
        if tuple.len() != self.axes.len() {
            return Err(DistributionError::IncompleteTuple);
        }
        let mut seen = vec![false; self.axes.len()];
        for (a, _) in tuple {
            let axis = self.axis(a)?;
            if std::mem::replace(&mut seen[axis], true) {
                return Err(DistributionError::IncompleteTuple);
            }
        }
        self.probability(tuple)
    }

    /// Sums out every agent not in `keep`; kept axes stay in time order.
    pub fn marginal(&self, keep: &[&str]) -> Result<OutcomeDistribution, DistributionError> {
        let kept: Vec<usize> = {
            let mut v = keep
                .iter()
                .map(|a| self.axis(a))
                .collect::<Result<Vec<_>, _>>()?;
            v.sort_unstable();
            v.dedup();
            v
        };
        let axes: Vec<RecordAxis> = kept.iter().map(|&k| self.axes[k].clone()).collect();
        let new_dims: Vec<usize> = axes.iter().map(|a| a.labels.len()).collect();
        let mut weights = vec![0.0; new_dims.iter().product()];
        let dims = self.dims();
        for (i, &w) in self.weights.iter().enumerate() {
            let d = digits(i, &dims);
            let j = kept.iter().fold(0, |acc, &k| acc * dims[k] + d[k]);
            weights[j] += w;
        }
        Ok(OutcomeDistribution::new(
            axes,
            self.erased.clone(),
            weights,
            format!("{} | marginal on {}", self.regime_tag, keep.join(", ")),
        ))
    }

    /// Does `given` imply `then`? Holds when the probability of `given`
    /// occurring without `then` is at most [`PROBABILITY_TOL`].
    pub fn implication(
        &self,
        given: (&str, &str),
        then: (&str, &str),
    ) -> Result<Implication, DistributionError> {
        let (ga, gp) = self.resolve(given.0, given.1)?;
        let (ta, tp) = self.resolve(then.0, then.1)?;
        let dims = self.dims();
        let violated: f64 = self
            .weights
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let d = digits(*i, &dims);
                d[ga] == gp && d[ta] != tp
            })
            .map(|(_, w)| w)
            .sum();
        Ok(if violated <= PROBABILITY_TOL {
            Implication::Holds
        } else {
            Implication::Fails {
                probability: violated,
            }
        })
    }

    /// Largest entrywise difference; `None` when the tuple layouts differ.
    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> Option<f64> {
        if self.axes != other.axes {
            return None;
        }
        Some(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_coins() -> OutcomeDistribution {
        let axes = vec![
            RecordAxis {
                agent: "A".into(),
                labels: vec!["h".into(), "t".into()],
            },
            RecordAxis {
                agent: "B".into(),
                labels: vec!["h".into(), "t".into()],
            },
        ];
        OutcomeDistribution::new(
            axes,
            vec!["E".into()],
            vec![0.5, 0.0, 0.25, 0.25],
            "test".into(),
        )
    }

    #[test]
    fn marginal_sums_dropped_agents() {
        let d = two_coins();
        let m = d.marginal(&["B"]).unwrap();
        assert_eq!(m.weights(), &[0.75, 0.25]);
        assert_eq!(d.marginal(&["A", "B"]).unwrap().weights(), d.weights());
        assert_eq!(
            d.marginal(&["Z"]),
            Err(DistributionError::UnknownAgent("Z".into()))
        );
    }

    #[test]
    fn implication_and_erased_agents() {
        let d = two_coins();
        assert_eq!(
            d.implication(("A", "h"), ("B", "h")),
            Ok(Implication::Holds)
        );
        assert_eq!(
            d.implication(("B", "t"), ("A", "h")),
            Ok(Implication::Fails { probability: 0.25 })
        );
        assert_eq!(
            d.implication(("E", "x"), ("A", "h")),
            Err(DistributionError::RecordErased { agent: "E".into() })
        );
        assert!(matches!(
            d.implication(("A", "x"), ("B", "h")),
            Err(DistributionError::UnknownLabel { .. })
        ));
    }

    #[test]
    fn tuples_and_lookup() {
        let d = two_coins();
        assert_eq!(d.tuple(2).to_string(), "(A=t, B=h)");
        assert_eq!(d.get(&[("B", "h"), ("A", "t")]), Ok(0.25));
        assert_eq!(
            d.get(&[("A", "t")]),
            Err(DistributionError::IncompleteTuple)
        );
        assert!(d.is_normalized());
    }

    #[test]
    fn tiny_weights_are_clamped() {
        let axes = vec![RecordAxis {
            agent: "A".into(),
            labels: vec!["x".into(), "y".into()],
        }];
        let d = OutcomeDistribution::new(axes, vec![], vec![1.0, 3e-17], "t".into());
        assert_eq!(d.weights(), &[1.0, 0.0]);
    }
}
