//! Feynman path engine.
//!
//! A virtual path picks one basis label for every measurement. Its amplitude
//! is the product of evolution matrix elements along the path. Paths that
//! end in the same surviving records are added as amplitudes over the
//! branches of erased measurements, and the resulting groups are added as
//! probabilities.
//!
//! Measurements need not act on the whole system. A measurement is
//! *terminal* when no later event touches its targets; its branch vector is
//! the final bra on those targets. Subsystems covered by no terminal
//! measurement keep a final computational-basis label (the path's
//! `residual`), which distinguishes paths just as a record would.

mod distribution;
mod graph;

pub use distribution::{
    DistributionError, Implication, OutcomeDistribution, OutcomeTuple, RecordAxis,
};
pub use graph::{real_path_graph, GraphEdge, GraphLayer, RealPathGraph};

use serde::Serialize;
use thiserror::Error;

use crate::hilbert::{
    apply_on, digits, partial_inner, Complex, Operator, StateVector, STRUCTURE_TOL,
};
use crate::scenario::{validate, Event, Record, Scenario, Violation};

/// One measurement outcome along a path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Branch {
    pub event: usize,
    pub label: String,
}

/// Final computational label of a subsystem no terminal measurement covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Residual {
    pub subsystem: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VirtualPath {
    /// One branch per measurement, in execution order.
    pub branches: Vec<Branch>,
    pub residual: Vec<Residual>,
    pub amplitude: Complex,
}

impl VirtualPath {
    pub fn is_zero(&self) -> bool {
        self.amplitude.norm() <= STRUCTURE_TOL
    }

    pub fn label_of(&self, event: usize) -> Option<&str> {
        self.branches
            .iter()
            .find(|b| b.event == event)
            .map(|b| b.label.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error(transparent)]
    Invalid(#[from] Violation),
    #[error("branches must name every measurement once, in execution order")]
    BranchMismatch,
    #[error("unknown label `{label}` for event {event}")]
    UnknownLabel { event: usize, label: String },
    #[error("residual must name every subsystem outside the terminal measurements, in order")]
    ResidualMismatch,
}

/// Precomputed execution plan shared by enumeration and single-path
/// evaluation.
struct Plan {
    order: Vec<usize>,
    measurements: Vec<usize>,
    slots: Vec<Vec<usize>>,
    terminal: Vec<bool>,
    residual_slots: Vec<usize>,
}

impl Plan {
    fn new(s: &Scenario) -> Plan {
        let order = s.ordered_events();
        let slots: Vec<Vec<usize>> = s.events.iter().map(|e| s.slots(e.targets())).collect();
        let mut terminal = vec![false; s.events.len()];
        for (pos, &e) in order.iter().enumerate() {
            if s.events[e].as_measurement().is_some() {
                terminal[e] = order[pos + 1..]
                    .iter()
                    .all(|&l| !slots[l].iter().any(|x| slots[e].contains(x)));
            }
        }
        let residual_slots = (0..s.subsystems.len())
            .filter(|k| !(0..s.events.len()).any(|e| terminal[e] && slots[e].contains(k)))
            .collect();
        Plan {
            measurements: s.ordered_measurements(),
            order,
            slots,
            terminal,
            residual_slots,
        }
    }

    /// Applies the events in order, projecting non-terminal measurements on
    /// the chosen branch vectors. `choice[k]` is the label index of the k-th
    /// measurement.
    fn evolve(&self, s: &Scenario, choice: &[usize]) -> StateVector {
        let mut v = s.initial.clone();
        let mut k = 0;
        for &e in &self.order {
            match &s.events[e] {
                Event::Unitary(u) => {
                    v = apply_on(&u.op, &self.slots[e], &v).expect("validated dims");
                }
                Event::Measurement(m) => {
                    if !self.terminal[e] {
                        let p = Operator::projector(&m.basis.vectors()[choice[k]]);
                        v = apply_on(&p, &self.slots[e], &v).expect("validated dims");
                    }
                    k += 1;
                }
            }
        }
        v
    }

    /// Contracts the terminal branch vectors against `v`, leaving one
    /// amplitude per residual configuration.
    fn close(&self, s: &Scenario, choice: &[usize], v: &StateVector) -> StateVector {
        let mut parts: Vec<(&[usize], &StateVector)> = Vec::new();
        for (k, &e) in self.measurements.iter().enumerate() {
            if self.terminal[e] {
                let m = s.measurement(e);
                parts.push((&self.slots[e], &m.basis.vectors()[choice[k]]));
            }
        }
        let mut slots = Vec::new();
        let mut bra_dims = Vec::new();
        for (sl, b) in &parts {
            slots.extend_from_slice(sl);
            bra_dims.extend_from_slice(b.dims());
        }
        let local: Vec<(Vec<usize>, &StateVector)> = {
            let mut offset = 0;
            parts
                .iter()
                .map(|(sl, b)| {
                    let r = (offset..offset + sl.len()).collect();
                    offset += sl.len();
                    (r, *b)
                })
                .collect()
        };
        let refs: Vec<(&[usize], &StateVector)> =
            local.iter().map(|(r, b)| (r.as_slice(), *b)).collect();
        let bra = StateVector::product_on_slots(&refs, &bra_dims).expect("bra dims");
        // `partial_inner` keeps the remaining slots in declaration order,
        // which is the residual order.
        partial_inner(&bra, &slots, v).expect("validated dims")
    }

    fn label_counts(&self, s: &Scenario) -> Vec<usize> {
        self.measurements
            .iter()
            .map(|&e| s.measurement(e).basis.len())
            .collect()
    }

    fn residual_dims(&self, s: &Scenario) -> Vec<usize> {
        self.residual_slots
            .iter()
            .map(|&k| s.subsystems[k].dim)
            .collect()
    }
}

/// Every virtual path of `s`: the Cartesian product of all measurement
/// label sets (last measurement varying fastest), then of the residual
/// labels. Zero-amplitude paths are kept.
pub fn enumerate_paths(s: &Scenario) -> Result<Vec<VirtualPath>, Violation> {
    validate(s)?;
    let plan = Plan::new(s);
    let counts = plan.label_counts(s);
    let rdims = plan.residual_dims(s);
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total * rdims.iter().product::<usize>());
    for index in 0..total {
        let choice = digits(index, &counts);
        let v = plan.evolve(s, &choice);
        let amps = plan.close(s, &choice, &v);
        let branches: Vec<Branch> = plan
            .measurements
            .iter()
            .zip(&choice)
            .map(|(&e, &c)| Branch {
                event: e,
                label: s.measurement(e).basis.labels()[c].clone(),
            })
            .collect();
        for (r, &amplitude) in amps.amps().iter().enumerate() {
            let residual = digits(r, &rdims)
                .iter()
                .zip(&plan.residual_slots)
                .map(|(&d, &k)| Residual {
                    subsystem: s.subsystems[k].name.clone(),
                    label: s.subsystems[k].basis_labels[d].clone(),
                })
                .collect();
            out.push(VirtualPath {
                branches: branches.clone(),
                residual,
                amplitude,
            });
        }
    }
    Ok(out)
}

/// Amplitude of one path: the initial state carried through every event,
/// with each measurement contributing the matrix element onto its branch.
pub fn path_amplitude(
    branches: &[Branch],
    residual: &[Residual],
    s: &Scenario,
) -> Result<Complex, PathError> {
    validate(s)?;
    let plan = Plan::new(s);
    if branches.len() != plan.measurements.len() {
        return Err(PathError::BranchMismatch);
    }
    let mut choice = Vec::with_capacity(branches.len());
    for (b, &e) in branches.iter().zip(&plan.measurements) {
        if b.event != e {
            return Err(PathError::BranchMismatch);
        }
        let pos =
            s.measurement(e)
                .basis
                .position(&b.label)
                .ok_or_else(|| PathError::UnknownLabel {
                    event: e,
                    label: b.label.clone(),
                })?;
        choice.push(pos);
    }
    if residual.len() != plan.residual_slots.len() {
        return Err(PathError::ResidualMismatch);
    }
    let mut r_index = 0;
    for (r, &k) in residual.iter().zip(&plan.residual_slots) {
        let sub = &s.subsystems[k];
        if r.subsystem != sub.name {
            return Err(PathError::ResidualMismatch);
        }
        let d = sub
            .basis_labels
            .iter()
            .position(|l| *l == r.label)
            .ok_or(PathError::ResidualMismatch)?;
        r_index = r_index * sub.dim + d;
    }
    let v = plan.evolve(s, &choice);
    Ok(plan.close(s, &choice, &v).amps()[r_index])
}

/// Adds amplitudes of paths that agree on every retained record and on the
/// residual labels, then adds the squared moduli per retained tuple.
/// Summation follows path order, so the result is deterministic.
pub fn reduce(paths: &[VirtualPath], s: &Scenario) -> OutcomeDistribution {
    let plan = Plan::new(s);
    let (axes, erased) = OutcomeDistribution::layout(s);
    let retained: Vec<(usize, usize)> = plan
        .measurements
        .iter()
        .enumerate()
        .filter(|(_, &e)| s.measurement(e).record == Record::Retained)
        .map(|(k, &e)| (k, e))
        .collect();
    let tuple_count: usize = axes.iter().map(|a| a.labels.len()).product();
    let rdims = plan.residual_dims(s);
    let residual_count: usize = rdims.iter().product();
    let mut groups = vec![Complex::new(0.0, 0.0); tuple_count * residual_count];
    for p in paths {
        let t = retained.iter().fold(0, |acc, &(k, e)| {
            let m = s.measurement(e);
            acc * m.basis.len() + m.basis.position(&p.branches[k].label).expect("path label")
        });
        let r = p
            .residual
            .iter()
            .zip(&plan.residual_slots)
            .fold(0, |acc, (res, &k)| {
                let sub = &s.subsystems[k];
                acc * sub.dim
                    + sub
                        .basis_labels
                        .iter()
                        .position(|l| *l == res.label)
                        .expect("residual label")
            });
        groups[t * residual_count + r] += p.amplitude;
    }
    let weights = groups
        .chunks(residual_count)
        .map(|g| g.iter().map(|a| a.norm_sqr()).sum())
        .collect();
    OutcomeDistribution::new(axes, erased, weights, s.regime_description())
}

/// `reduce(enumerate_paths(s), s)`.
pub fn distribution(s: &Scenario) -> Result<OutcomeDistribution, Violation> {
    Ok(reduce(&enumerate_paths(s)?, s))
}
