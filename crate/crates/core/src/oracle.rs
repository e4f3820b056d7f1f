//! Unitary dilation of a scenario.
//!
//! Every measurement becomes a coupling to its own pointer ancilla with
//! levels `|D(0)⟩, |D(label₁)⟩, …`. A retained record is read from its
//! pointer at the end. An erased record is destroyed by its eraser, which
//! couples to the composite of its targets and the erased pointer in the
//! basis `Φ_j = Σ_i ⟨b_i|j⟩ |D(i)⟩|b_i⟩`. All probabilities come from
//! pointer projectors on the final state.
//!
//! A coupling only has to send `|D(0)⟩|Φ_j⟩` to `|D(j)⟩|Φ_j⟩`. It is
//! completed as a controlled swap: on `Φ_j` it exchanges `D(0)` and `D(j)`,
//! and outside the span of the `Φ_j` it is the identity.

use serde::Serialize;
use thiserror::Error;

use crate::hilbert::{apply_on, digits, strides, Complex, Operator, StateVector, STRUCTURE_TOL};
use crate::paths::{OutcomeDistribution, RecordAxis};
use crate::scenario::{validate, Event, Record, Scenario, Violation};

const ZERO: Complex = Complex::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Invalid(#[from] Violation),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown label `{label}` for agent `{agent}`")]
    UnknownLabel { agent: String, label: String },
    #[error("record of {agent} erased; outcome undefined at end of experiment")]
    RecordErased { agent: String },
    #[error("record of {agent} is retained; read it with joint_probability")]
    NotErased { agent: String },
}

/// Pointer ancilla of one measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ancilla {
    pub event: usize,
    pub agent: String,
    pub slot: usize,
    /// Outcome labels; pointer level `k + 1` records `labels[k]`.
    pub labels: Vec<String>,
    pub record: Record,
}

impl Ancilla {
    pub fn dim(&self) -> usize {
        self.labels.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    pub event: usize,
    /// Slots the measurement reads: its targets, then the pointers of the
    /// records it erases.
    pub register: Vec<usize>,
    pub pointer: usize,
    /// Dims of `register`, then the pointer dim.
    pub dims: Vec<usize>,
    /// `Φ_j` over the register, one per outcome.
    pub branches: Vec<StateVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Step {
    Free {
        event: usize,
        slots: Vec<usize>,
        op: Operator,
    },
    Couple(Coupling),
}

impl Step {
    pub fn event(&self) -> usize {
        match self {
            Step::Free { event, .. } => *event,
            Step::Couple(c) => c.event,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Erasure {
    pub erased: usize,
    pub eraser: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilatedScenario {
    pub base: Scenario,
    /// Base dims followed by one pointer dim per measurement.
    pub dims: Vec<usize>,
    pub ancillas: Vec<Ancilla>,
    /// Execution order.
    pub steps: Vec<Step>,
    pub erasure_map: Vec<Erasure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilatedState {
    pub psi: StateVector,
    pub time_index: u64,
}

/// Readings of an erased pointer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pointer<'a> {
    Ready,
    Recorded(&'a str),
}

fn offsets(slots: &[usize], dims: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let local: Vec<usize> = slots.iter().map(|&s| dims[s]).collect();
    (0..local.iter().product())
        .map(|l| {
            digits(l, &local)
                .iter()
                .zip(slots)
                .map(|(d, &s)| d * st[s])
                .sum()
        })
        .collect()
}

fn complement(slots: &[usize], dims: &[usize]) -> Vec<usize> {
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !slots.contains(k)).collect();
    offsets(&rest, dims)
}

impl Coupling {
    /// Applies the coupling to `psi`, whose dims contain the register and
    /// pointer slots.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let dims = psi.dims();
        let reg = offsets(&self.register, dims);
        let pstride = strides(dims)[self.pointer];
        let levels = dims[self.pointer];
        let mut amps = psi.amps().to_vec();
        let mut block = vec![vec![ZERO; reg.len()]; levels];
        let mut overlap = vec![vec![ZERO; levels]; self.branches.len()];
        for base in complement(&[self.register.as_slice(), &[self.pointer]].concat(), dims) {
            for (q, row) in block.iter_mut().enumerate() {
                for (x, &o) in row.iter_mut().zip(&reg) {
                    *x = amps[base + q * pstride + o];
                }
            }
            for (phi, c) in self.branches.iter().zip(overlap.iter_mut()) {
                for (q, row) in block.iter().enumerate() {
                    c[q] = phi.amps().iter().zip(row).map(|(a, b)| a.conj() * b).sum();
                }
            }
            for (q, row) in block.iter().enumerate() {
                for (x, &o) in reg.iter().enumerate() {
                    let mut v = row[x];
                    for (j, (phi, c)) in self.branches.iter().zip(&overlap).enumerate() {
                        let swapped = if q == 0 {
                            j + 1
                        } else if q == j + 1 {
                            0
                        } else {
                            q
                        };
                        v += phi.amps()[x] * (c[swapped] - c[q]);
                    }
                    amps[base + q * pstride + o] = v;
                }
            }
        }
        StateVector::new(dims.to_vec(), amps).expect("same dims")
    }

    /// Dense matrix on register ⊗ pointer.
    pub fn matrix(&self) -> Operator {
        let n: usize = self.dims.iter().product();
        let local = Coupling {
            register: (0..self.register.len()).collect(),
            pointer: self.register.len(),
            ..self.clone()
        };
        let mut entries = vec![ZERO; n * n];
        for c in 0..n {
            let col = local.apply(&StateVector::basis(self.dims.clone(), c));
            for (r, a) in col.amps().iter().enumerate() {
                entries[r * n + c] = *a;
            }
        }
        Operator::new(self.dims.clone(), entries).expect("square")
    }
}

/// Builds the dilation: one pointer ancilla per measurement, couplings in
/// execution order, erasers reading the composite of targets and erased
/// pointers.
pub fn dilate(s: &Scenario) -> Result<DilatedScenario, Violation> {
    validate(s)?;
    let erasers = s.erasers()?;
    let base_dims = s.dims();
    let n = base_dims.len();
    let mut dims = base_dims.clone();
    let mut ancillas = Vec::new();
    for (k, e) in s.ordered_measurements().into_iter().enumerate() {
        let m = s.measurement(e);
        ancillas.push(Ancilla {
            event: e,
            agent: m.agent.clone(),
            slot: n + k,
            labels: m.basis.labels().to_vec(),
            record: m.record,
        });
        dims.push(m.basis.len() + 1);
    }
    let ancilla_of = |e: usize| ancillas.iter().find(|a| a.event == e).expect("measurement");
    let mut steps: Vec<Step> = Vec::new();
    for e in s.ordered_events() {
        let slots = s.slots(s.events[e].targets());
        match &s.events[e] {
            Event::Unitary(u) => steps.push(Step::Free {
                event: e,
                slots,
                op: u.op.clone(),
            }),
            Event::Measurement(m) => {
                let erased: Vec<usize> = erasers
                    .iter()
                    .filter(|(_, by)| *by == e)
                    .map(|(er, _)| *er)
                    .collect();
                let mut register = slots.clone();
                register.extend(erased.iter().map(|&er| ancilla_of(er).slot));
                let reg_dims: Vec<usize> = register.iter().map(|&r| dims[r]).collect();
                let ndims = m.targets.len();
                let branches = m
                    .basis
                    .vectors()
                    .iter()
                    .map(|v| {
                        // |j⟩ ⊗ |D(0)⟩… then every erased record's own
                        // coupling, giving Σ_i ⟨b_i|j⟩ |D(i)⟩|b_i⟩.
                        let mut amps = vec![ZERO; reg_dims.iter().product()];
                        let st = strides(&reg_dims);
                        for (x, a) in v.amps().iter().enumerate() {
                            let d = digits(x, &reg_dims[..ndims]);
                            let idx: usize = d.iter().zip(&st).map(|(d, s)| d * s).sum();
                            amps[idx] = *a;
                        }
                        let mut phi = StateVector::new(reg_dims.clone(), amps).expect("dims");
                        for (k, &er) in erased.iter().enumerate() {
                            let em = s.measurement(er);
                            let local_targets: Vec<usize> = s
                                .slots(&em.targets)
                                .iter()
                                .map(|t| slots.iter().position(|x| x == t).expect("eraser covers"))
                                .collect();
                            let c = Coupling {
                                event: er,
                                dims: Vec::new(),
                                register: local_targets,
                                pointer: ndims + k,
                                branches: em.basis.vectors().to_vec(),
                            };
                            phi = c.apply(&phi);
                        }
                        phi
                    })
                    .collect();
                let pointer = ancilla_of(e).slot;
                let mut cdims = reg_dims;
                cdims.push(dims[pointer]);
                steps.push(Step::Couple(Coupling {
                    event: e,
                    register,
                    pointer,
                    dims: cdims,
                    branches,
                }));
            }
        }
    }
    Ok(DilatedScenario {
        base: s.clone(),
        dims,
        erasure_map: erasers
            .into_iter()
            .map(|(erased, eraser)| Erasure { erased, eraser })
            .collect(),
        ancillas,
        steps,
    })
}

impl DilatedScenario {
    /// Initial system state with every pointer at `D(0)`.
    pub fn initial_state(&self) -> StateVector {
        let n = self.base.dims().len();
        let amps = self.base.initial.amps();
        let ready: usize = self.dims[n..].iter().product();
        // Pointer index 0 on every ancilla: base index times the ancilla block.
        let mut out = vec![ZERO; amps.len() * ready];
        for (i, a) in amps.iter().enumerate() {
            out[i * ready] = *a;
        }
        StateVector::new(self.dims.clone(), out).expect("dims")
    }

    fn step_time(&self, step: &Step) -> u64 {
        self.base.events[step.event()].time_index()
    }

    fn run(&self, psi: StateVector, step: &Step) -> StateVector {
        match step {
            Step::Free { slots, op, .. } => apply_on(op, slots, &psi).expect("dims"),
            Step::Couple(c) => c.apply(&psi),
        }
    }

    pub fn ancilla(&self, agent: &str) -> Result<&Ancilla, OracleError> {
        self.ancillas
            .iter()
            .find(|a| a.agent == agent)
            .ok_or_else(|| OracleError::UnknownAgent(agent.to_string()))
    }
}

/// Full evolution up to the scenario's final time.
pub fn evolve(d: &DilatedScenario) -> DilatedState {
    evolve_until(d, d.base.final_time)
}

/// Applies every step whose event time is at most `time`.
pub fn evolve_until(d: &DilatedScenario, time: u64) -> DilatedState {
    let psi = d
        .steps
        .iter()
        .filter(|st| d.step_time(st) <= time)
        .fold(d.initial_state(), |psi, st| d.run(psi, st));
    DilatedState {
        psi,
        time_index: time,
    }
}

/// The state after each step, starting with the initial one.
pub fn evolve_trace(d: &DilatedScenario) -> Vec<DilatedState> {
    let mut out = vec![DilatedState {
        psi: d.initial_state(),
        time_index: 0,
    }];
    for st in &d.steps {
        let psi = d.run(out.last().expect("nonempty").psi.clone(), st);
        out.push(DilatedState {
            psi,
            time_index: d.step_time(st),
        });
    }
    out
}

/// Sum of |ψ|² over indices whose pointer levels match every `(slot, level)`.
fn pointer_weight(st: &DilatedState, fixed: &[(usize, usize)]) -> f64 {
    let dims = st.psi.dims();
    st.psi
        .amps()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let d = digits(*i, dims);
            fixed.iter().all(|&(slot, level)| d[slot] == level)
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

fn retained_level(
    d: &DilatedScenario,
    agent: &str,
    label: &str,
) -> Result<(usize, usize), OracleError> {
    let a = d.ancilla(agent)?;
    if a.record == Record::Erased {
        return Err(OracleError::RecordErased {
            agent: agent.to_string(),
        });
    }
    label_level(a, label)
}

fn label_level(a: &Ancilla, label: &str) -> Result<(usize, usize), OracleError> {
    let k = a
        .labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| OracleError::UnknownLabel {
            agent: a.agent.clone(),
            label: label.to_string(),
        })?;
    Ok((a.slot, k + 1))
}

/// Probability that the retained pointers named in `selection` read the
/// given labels; unnamed pointers are summed over.
pub fn joint_probability(
    d: &DilatedScenario,
    st: &DilatedState,
    selection: &[(&str, &str)],
) -> Result<f64, OracleError> {
    let fixed = selection
        .iter()
        .map(|(a, l)| retained_level(d, a, l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(pointer_weight(st, &fixed))
}

/// Reads the pointer of an erased record after its erasure, jointly with
/// retained readings. A `Recorded` reading here says nothing about which
/// branch the erased measurement found.
pub fn inspect_record(
    d: &DilatedScenario,
    st: &DilatedState,
    agent: &str,
    pointer: Pointer<'_>,
    final_selection: &[(&str, &str)],
) -> Result<f64, OracleError> {
    let a = d.ancilla(agent)?;
    if a.record != Record::Erased {
        return Err(OracleError::NotErased {
            agent: agent.to_string(),
        });
    }
    let mut fixed = vec![match pointer {
        Pointer::Ready => (a.slot, 0),
        Pointer::Recorded(label) => label_level(a, label)?,
    }];
    for (ag, l) in final_selection {
        fixed.push(retained_level(d, ag, l)?);
    }
    Ok(pointer_weight(st, &fixed))
}

/// Population with some retained pointer still at `D(0)`; zero for a
/// correct dilation evolved to the end.
pub fn unrecorded_population(d: &DilatedScenario, st: &DilatedState) -> f64 {
    let slots: Vec<usize> = d
        .ancillas
        .iter()
        .filter(|a| a.record == Record::Retained)
        .map(|a| a.slot)
        .collect();
    let dims = st.psi.dims();
    st.psi
        .amps()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let dg = digits(*i, dims);
            slots.iter().any(|&s| dg[s] == 0)
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// The distribution of retained pointer readings, in one pass over `st`.
pub fn distribution(d: &DilatedScenario, st: &DilatedState) -> OutcomeDistribution {
    let (axes, erased) = OutcomeDistribution::layout(&d.base);
    let slots: Vec<usize> = d
        .ancillas
        .iter()
        .filter(|a| a.record == Record::Retained)
        .map(|a| a.slot)
        .collect();
    let widths: Vec<usize> = axes.iter().map(|a: &RecordAxis| a.labels.len()).collect();
    let mut weights = vec![0.0; widths.iter().product()];
    let dims = st.psi.dims();
    for (i, a) in st.psi.amps().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let dg = digits(i, dims);
        if slots.iter().any(|&s| dg[s] == 0) {
            continue;
        }
        let t = slots
            .iter()
            .zip(&widths)
            .fold(0, |acc, (&s, &w)| acc * w + dg[s] - 1);
        weights[t] += p;
    }
    OutcomeDistribution::new(axes, erased, weights, d.base.regime_description())
}

/// Dilates, evolves and reads the final distribution.
pub fn oracle_distribution(s: &Scenario) -> Result<OutcomeDistribution, Violation> {
    let d = dilate(s)?;
    let st = evolve(&d);
    debug_assert!((st.psi.norm_sqr() - 1.0).abs() <= 1e-9);
    debug_assert!(unrecorded_population(&d, &st) <= 1e-9);
    Ok(distribution(&d, &st))
}

/// Largest deviation from unitarity over all couplings.
pub fn coupling_defect(d: &DilatedScenario) -> f64 {
    d.steps
        .iter()
        .filter_map(|st| match st {
            Step::Couple(c) => Some(c.matrix().unitarity_defect()),
            Step::Free { .. } => None,
        })
        .fold(0.0, f64::max)
}

/// Whether each coupling sends `|D(0)⟩|Φ_j⟩` to `|D(j)⟩|Φ_j⟩`.
pub fn couplings_record(d: &DilatedScenario) -> bool {
    d.steps.iter().all(|st| {
        let Step::Couple(c) = st else { return true };
        let local = Coupling {
            register: (0..c.register.len()).collect(),
            pointer: c.register.len(),
            ..c.clone()
        };
        let levels = *c.dims.last().expect("pointer");
        c.branches.iter().enumerate().all(|(j, phi)| {
            let ready = crate::hilbert::tensor(phi, &StateVector::basis(vec![levels], 0));
            let want = crate::hilbert::tensor(phi, &StateVector::basis(vec![levels], j + 1));
            local
                .apply(&ready)
                .max_abs_diff(&want)
                .is_some_and(|x| x <= STRUCTURE_TOL)
        })
    })
}
