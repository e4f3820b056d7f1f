//! Declarative experiment description: subsystems, initial state, and a
//! time-ordered list of unitaries and measurements whose records are either
//! retained to the end of the run or erased before it.

mod dsl;
mod expr;

pub use dsl::{
    parse_scenario, parse_scenario_bytes, serialize_scenario, ParseError, ParseErrorKind,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{
    embed, validate_basis, Basis, BasisViolation, Operator, StateVector, STRUCTURE_TOL,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemSpec {
    pub name: String,
    pub dim: usize,
    /// Computational basis labels, one per level.
    pub basis_labels: Vec<String>,
}

impl SubsystemSpec {
    pub fn new(name: &str, labels: &[&str]) -> Self {
        SubsystemSpec {
            name: name.to_string(),
            dim: labels.len(),
            basis_labels: labels.iter().map(|l| l.to_string()).collect(),
        }
    }
}

/// Whether a measurement's material record survives to the end of the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Record {
    Retained,
    Erased,
}

impl Record {
    pub fn keyword(self) -> &'static str {
        match self {
            Record::Retained => "retained",
            Record::Erased => "erased",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitaryEvent {
    pub time_index: u64,
    pub targets: Vec<String>,
    pub op: Operator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEvent {
    pub time_index: u64,
    pub agent: String,
    pub targets: Vec<String>,
    pub basis: Basis,
    pub record: Record,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Event {
    Unitary(UnitaryEvent),
    Measurement(MeasurementEvent),
}

impl Event {
    pub fn time_index(&self) -> u64 {
        match self {
            Event::Unitary(u) => u.time_index,
            Event::Measurement(m) => m.time_index,
        }
    }

    pub fn targets(&self) -> &[String] {
        match self {
            Event::Unitary(u) => &u.targets,
            Event::Measurement(m) => &m.targets,
        }
    }

    pub fn as_measurement(&self) -> Option<&MeasurementEvent> {
        match self {
            Event::Measurement(m) => Some(m),
            Event::Unitary(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub subsystems: Vec<SubsystemSpec>,
    pub initial: StateVector,
    pub events: Vec<Event>,
    pub final_time: u64,
}

/// The first broken scenario invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("no subsystems declared")]
    NoSubsystems,
    #[error("invalid {what} `{value}`")]
    BadIdentifier { what: &'static str, value: String },
    #[error("subsystem `{0}` declared twice")]
    DuplicateSubsystem(String),
    #[error("subsystem `{name}`: {reason}")]
    BadSubsystem { name: String, reason: String },
    #[error("initial state has dims {found:?}, expected {expected:?}")]
    InitialDims {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("initial state norm ≠ 1 (squared norm {norm_sqr})")]
    InitialNorm { norm_sqr: f64 },
    #[error("event {event}: no targets")]
    NoTargets { event: usize },
    #[error("event {event}: unknown subsystem `{name}`")]
    UnknownSubsystem { event: usize, name: String },
    #[error("event {event}: subsystem `{name}` targeted twice")]
    DuplicateTarget { event: usize, name: String },
    #[error("event {event}: operator dims {found:?} do not match targets {expected:?}")]
    EventDims {
        event: usize,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("event {event}: matrix is not unitary (‖U†U − I‖ = {defect:e})")]
    NotUnitary { event: usize, defect: f64 },
    #[error("event {event}: {violation}")]
    Basis {
        event: usize,
        violation: BasisViolation,
    },
    #[error("event {event}: agent `{agent}` already measures in event {previous}")]
    DuplicateAgent {
        event: usize,
        previous: usize,
        agent: String,
    },
    #[error("event {event}: time index goes backwards")]
    TimeOrder { event: usize },
    #[error("events {first} and {second} share a time index and overlapping targets")]
    SimultaneousOverlap { first: usize, second: usize },
    #[error("final time {final_time} precedes event time {latest}")]
    FinalTime { final_time: u64, latest: u64 },
    #[error("no measurements: the experiment has no outcomes")]
    NoMeasurements,
    #[error(
        "event {event}: no surviving final record (last events must be retained measurements)"
    )]
    NoSurvivingFinalRecord { event: usize },
    #[error("event {event}: erased record is never touched again, so nothing erases it")]
    NoEraser { event: usize },
    #[error("event {event}: eraser event {eraser} must be a retained measurement")]
    EraserErased { event: usize, eraser: usize },
    #[error("event {event}: eraser event {eraser} does not cover all erased targets")]
    EraserPartial { event: usize, eraser: usize },
    #[error(
        "event {event}: eraser event {eraser} is followed by event {later} on the same subsystems"
    )]
    EraserNotFinal {
        event: usize,
        eraser: usize,
        later: usize,
    },
    #[error("event {event}: unitary event {unitary} disturbs the record before it is erased")]
    RecordDisturbed { event: usize, unitary: usize },
}

impl Violation {
    /// Index of the event the violation points at, if any.
    pub fn event(&self) -> Option<usize> {
        use Violation::*;
        match self {
            NoSubsystems
            | BadIdentifier { .. }
            | DuplicateSubsystem(_)
            | BadSubsystem { .. }
            | InitialDims { .. }
            | InitialNorm { .. }
            | FinalTime { .. }
            | NoMeasurements => None,
            NoTargets { event }
            | UnknownSubsystem { event, .. }
            | DuplicateTarget { event, .. }
            | EventDims { event, .. }
            | NotUnitary { event, .. }
            | Basis { event, .. }
            | DuplicateAgent { event, .. }
            | TimeOrder { event }
            | NoSurvivingFinalRecord { event }
            | NoEraser { event }
            | EraserErased { event, .. }
            | EraserPartial { event, .. }
            | EraserNotFinal { event, .. }
            | RecordDisturbed { event, .. } => Some(*event),
            SimultaneousOverlap { second, .. } => Some(*second),
        }
    }
}

impl Scenario {
    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn subsystem_index(&self, name: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.name == name)
    }

    /// Slot indices of `targets`, in the order given. Panics on unknown
    /// names; only call on validated scenarios.
    pub fn slots(&self, targets: &[String]) -> Vec<usize> {
        targets
            .iter()
            .map(|t| {
                self.subsystem_index(t)
                    .unwrap_or_else(|| panic!("unknown subsystem `{t}`"))
            })
            .collect()
    }

    /// Event indices in execution order: by time index, ties broken by the
    /// lowest declared subsystem among the event's targets.
    pub fn ordered_events(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.events.len()).collect();
        order.sort_by_key(|&i| {
            let ev = &self.events[i];
            let first = ev
                .targets()
                .iter()
                .filter_map(|t| self.subsystem_index(t))
                .min()
                .unwrap_or(usize::MAX);
            (ev.time_index(), first)
        });
        order
    }

    /// Measurement event indices in execution order.
    pub fn ordered_measurements(&self) -> Vec<usize> {
        self.ordered_events()
            .into_iter()
            .filter(|&i| self.events[i].as_measurement().is_some())
            .collect()
    }

    pub fn measurement(&self, event: usize) -> &MeasurementEvent {
        self.events[event]
            .as_measurement()
            .expect("event is not a measurement")
    }

    pub fn measurement_by_agent(&self, agent: &str) -> Option<(usize, &MeasurementEvent)> {
        self.events.iter().enumerate().find_map(|(i, e)| {
            e.as_measurement()
                .filter(|m| m.agent == agent)
                .map(|m| (i, m))
        })
    }

    /// For every erased measurement, the later retained measurement that
    /// destroys its record: the next event touching the erased targets
    /// that is not a record-preserving unitary.
    pub fn erasers(&self) -> Result<Vec<(usize, usize)>, Violation> {
        let order = self.ordered_events();
        let dims = self.dims();
        let mut out = Vec::new();
        for (pos, &ei) in order.iter().enumerate() {
            let Some(m) = self.events[ei].as_measurement() else {
                continue;
            };
            if m.record != Record::Erased {
                continue;
            }
            let erased_slots = self.slots(&m.targets);
            let mut eraser = None;
            for &later in &order[pos + 1..] {
                let ev = &self.events[later];
                let slots = self.slots(ev.targets());
                if !slots.iter().any(|s| erased_slots.contains(s)) {
                    continue;
                }
                match ev {
                    Event::Unitary(u) => {
                        if !preserves_record(u, &slots, m, &erased_slots, &dims) {
                            return Err(Violation::RecordDisturbed {
                                event: ei,
                                unitary: later,
                            });
                        }
                    }
                    Event::Measurement(e) => {
                        if e.record != Record::Retained {
                            return Err(Violation::EraserErased {
                                event: ei,
                                eraser: later,
                            });
                        }
                        if !erased_slots.iter().all(|s| slots.contains(s)) {
                            return Err(Violation::EraserPartial {
                                event: ei,
                                eraser: later,
                            });
                        }
                        eraser = Some(later);
                        break;
                    }
                }
            }
            let Some(eraser) = eraser else {
                return Err(Violation::NoEraser { event: ei });
            };
            let eraser_pos = order.iter().position(|&e| e == eraser).unwrap();
            let eraser_slots = self.slots(self.events[eraser].targets());
            for &later in &order[eraser_pos + 1..] {
                let slots = self.slots(self.events[later].targets());
                if slots.iter().any(|s| eraser_slots.contains(s)) {
                    return Err(Violation::EraserNotFinal {
                        event: ei,
                        eraser,
                        later,
                    });
                }
            }
            out.push((ei, eraser));
        }
        Ok(out)
    }

    /// Agents whose records are retained, in execution order.
    pub fn retained_agents(&self) -> Vec<&str> {
        self.ordered_measurements()
            .into_iter()
            .map(|i| self.measurement(i))
            .filter(|m| m.record == Record::Retained)
            .map(|m| m.agent.as_str())
            .collect()
    }

    /// Short description of which records survive, e.g.
    /// `retained: Fbar, Wbar, W; erased: F`.
    pub fn regime_description(&self) -> String {
        let mut retained = Vec::new();
        let mut erased = Vec::new();
        for i in self.ordered_measurements() {
            let m = self.measurement(i);
            match m.record {
                Record::Retained => retained.push(m.agent.as_str()),
                Record::Erased => erased.push(m.agent.as_str()),
            }
        }
        let mut s = format!("retained: {}", retained.join(", "));
        if !erased.is_empty() {
            s.push_str(&format!("; erased: {}", erased.join(", ")));
        }
        s
    }

    /// Structural equality with amplitudes compared to `tol`.
    pub fn approx_eq(&self, other: &Scenario, tol: f64) -> bool {
        fn states(a: &StateVector, b: &StateVector, tol: f64) -> bool {
            a.max_abs_diff(b).is_some_and(|d| d <= tol)
        }
        fn events(a: &Event, b: &Event, tol: f64) -> bool {
            match (a, b) {
                (Event::Unitary(x), Event::Unitary(y)) => {
                    x.time_index == y.time_index
                        && x.targets == y.targets
                        && x.op.max_abs_diff(&y.op).is_some_and(|d| d <= tol)
                }
                (Event::Measurement(x), Event::Measurement(y)) => {
                    x.time_index == y.time_index
                        && x.agent == y.agent
                        && x.targets == y.targets
                        && x.record == y.record
                        && x.basis.dims() == y.basis.dims()
                        && x.basis.labels() == y.basis.labels()
                        && x.basis.len() == y.basis.len()
                        && x.basis
                            .vectors()
                            .iter()
                            .zip(y.basis.vectors())
                            .all(|(u, v)| states(u, v, tol))
                }
                _ => false,
            }
        }
        self.name == other.name
            && self.subsystems == other.subsystems
            && self.final_time == other.final_time
            && states(&self.initial, &other.initial, tol)
            && self.events.len() == other.events.len()
            && self
                .events
                .iter()
                .zip(&other.events)
                .all(|(a, b)| events(a, b, tol))
    }

    /// Canonical JSON interchange form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Scenario, JsonError> {
        let s: Scenario = serde_json::from_str(text)?;
        validate(&s)?;
        Ok(s)
    }
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed scenario JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] Violation),
}

/// A unitary keeps an erased record intact when it commutes with every
/// projector of the erased measurement.
fn preserves_record(
    u: &UnitaryEvent,
    u_slots: &[usize],
    m: &MeasurementEvent,
    m_slots: &[usize],
    dims: &[usize],
) -> bool {
    let mut union: Vec<usize> = u_slots.to_vec();
    for s in m_slots {
        if !union.contains(s) {
            union.push(*s);
        }
    }
    let local_dims: Vec<usize> = union.iter().map(|&s| dims[s]).collect();
    let position = |s: &usize| union.iter().position(|x| x == s).unwrap();
    let u_local: Vec<usize> = u_slots.iter().map(position).collect();
    let m_local: Vec<usize> = m_slots.iter().map(position).collect();
    let Ok(big_u) = embed(&u.op, &u_local, &local_dims) else {
        return false;
    };
    m.basis.vectors().iter().all(|v| {
        let Ok(p) = embed(&Operator::projector(v), &m_local, &local_dims) else {
            return false;
        };
        match (big_u.compose(&p), p.compose(&big_u)) {
            (Ok(up), Ok(pu)) => up.max_abs_diff(&pu).is_some_and(|d| d <= STRUCTURE_TOL),
            _ => false,
        }
    })
}

/// Checks every scenario invariant, reporting the first violation.
pub fn validate(s: &Scenario) -> Result<(), Violation> {
    if s.subsystems.is_empty() {
        return Err(Violation::NoSubsystems);
    }
    let ident = |what: &'static str, value: &str| {
        if dsl::is_identifier(value) {
            Ok(())
        } else {
            Err(Violation::BadIdentifier {
                what,
                value: value.to_string(),
            })
        }
    };
    if !s.name.is_empty() && !dsl::is_name(&s.name) {
        return Err(Violation::BadIdentifier {
            what: "scenario name",
            value: s.name.clone(),
        });
    }
    for sub in &s.subsystems {
        ident("subsystem name", &sub.name)?;
        for l in &sub.basis_labels {
            ident("label", l)?;
        }
    }
    for m in s.events.iter().filter_map(Event::as_measurement) {
        ident("agent name", &m.agent)?;
        for l in m.basis.labels() {
            ident("outcome label", l)?;
        }
    }
    for (i, sub) in s.subsystems.iter().enumerate() {
        if s.subsystems[..i].iter().any(|o| o.name == sub.name) {
            return Err(Violation::DuplicateSubsystem(sub.name.clone()));
        }
        let bad = |reason: &str| Violation::BadSubsystem {
            name: sub.name.clone(),
            reason: reason.to_string(),
        };
        if sub.dim == 0 {
            return Err(bad("dimension must be positive"));
        }
        if sub.basis_labels.len() != sub.dim {
            return Err(bad("label count differs from dimension"));
        }
        for (j, l) in sub.basis_labels.iter().enumerate() {
            if sub.basis_labels[..j].contains(l) {
                return Err(bad(&format!("label `{l}` repeated")));
            }
        }
    }
    let dims = s.dims();
    if s.initial.dims() != dims.as_slice() {
        return Err(Violation::InitialDims {
            expected: dims,
            found: s.initial.dims().to_vec(),
        });
    }
    if !s.initial.is_normalized() {
        return Err(Violation::InitialNorm {
            norm_sqr: s.initial.norm_sqr(),
        });
    }

    let mut agents: Vec<(usize, &str)> = Vec::new();
    for (event, ev) in s.events.iter().enumerate() {
        let targets = ev.targets();
        if targets.is_empty() {
            return Err(Violation::NoTargets { event });
        }
        let mut local = Vec::new();
        for (j, t) in targets.iter().enumerate() {
            let Some(idx) = s.subsystem_index(t) else {
                return Err(Violation::UnknownSubsystem {
                    event,
                    name: t.clone(),
                });
            };
            if targets[..j].contains(t) {
                return Err(Violation::DuplicateTarget {
                    event,
                    name: t.clone(),
                });
            }
            local.push(dims[idx]);
        }
        match ev {
            Event::Unitary(u) => {
                if u.op.dims() != local.as_slice() {
                    return Err(Violation::EventDims {
                        event,
                        expected: local,
                        found: u.op.dims().to_vec(),
                    });
                }
                let defect = u.op.unitarity_defect();
                if defect > STRUCTURE_TOL {
                    return Err(Violation::NotUnitary { event, defect });
                }
            }
            Event::Measurement(m) => {
                if m.basis.dims() != local.as_slice() {
                    return Err(Violation::EventDims {
                        event,
                        expected: local,
                        found: m.basis.dims().to_vec(),
                    });
                }
                validate_basis(&m.basis)
                    .map_err(|violation| Violation::Basis { event, violation })?;
                if let Some(&(previous, _)) = agents.iter().find(|(_, a)| *a == m.agent) {
                    return Err(Violation::DuplicateAgent {
                        event,
                        previous,
                        agent: m.agent.clone(),
                    });
                }
                agents.push((event, &m.agent));
            }
        }
        if event > 0 {
            let prev = &s.events[event - 1];
            if ev.time_index() < prev.time_index() {
                return Err(Violation::TimeOrder { event });
            }
        }
        for (first, other) in s.events[..event].iter().enumerate() {
            if other.time_index() == ev.time_index()
                && other.targets().iter().any(|t| targets.contains(t))
            {
                return Err(Violation::SimultaneousOverlap {
                    first,
                    second: event,
                });
            }
        }
    }

    if let Some(latest) = s.events.iter().map(Event::time_index).max() {
        if s.final_time < latest {
            return Err(Violation::FinalTime {
                final_time: s.final_time,
                latest,
            });
        }
    }
    if agents.is_empty() {
        return Err(Violation::NoMeasurements);
    }
    let last_time = s.events.iter().map(Event::time_index).max().unwrap_or(0);
    for (event, ev) in s.events.iter().enumerate() {
        if ev.time_index() != last_time {
            continue;
        }
        match ev {
            Event::Measurement(m) if m.record == Record::Retained => {}
            _ => return Err(Violation::NoSurvivingFinalRecord { event }),
        }
    }
    s.erasers()?;
    Ok(())
}
