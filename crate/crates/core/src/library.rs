//! Built-in scenarios: the probe double slit, the two single-friend cases
//! and the two-friends/two-Wigners experiment in its four record regimes.
//! Each also ships as a `.scn` file under `scenarios/`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::hilbert::{Basis, Complex, Operator, StateVector, STRUCTURE_TOL};
use crate::scenario::{
    parse_scenario, validate, Event, MeasurementEvent, Record, Scenario, SubsystemSpec,
    UnitaryEvent, Violation,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LibraryError {
    #[error("coefficient matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error(transparent)]
    Invalid(#[from] Violation),
    #[error("unknown built-in `{0}`")]
    UnknownBuiltin(String),
    #[error(
        "built-in `{0}` needs a regime: both_erased, fbar_preserved, f_preserved or both_preserved"
    )]
    RegimeRequired(String),
    #[error("unknown regime `{0}`")]
    UnknownRegime(String),
}

/// Which of the two friends' records survive the Wigners' measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeTag {
    BothErased,
    FbarPreserved,
    FPreserved,
    BothPreserved,
}

impl RegimeTag {
    pub const ALL: [RegimeTag; 4] = [
        RegimeTag::BothErased,
        RegimeTag::FbarPreserved,
        RegimeTag::FPreserved,
        RegimeTag::BothPreserved,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegimeTag::BothErased => "both_erased",
            RegimeTag::FbarPreserved => "fbar_preserved",
            RegimeTag::FPreserved => "f_preserved",
            RegimeTag::BothPreserved => "both_preserved",
        }
    }

    /// Records of (Fbar, F).
    pub fn records(self) -> (Record, Record) {
        use Record::{Erased, Retained};
        match self {
            RegimeTag::BothErased => (Erased, Erased),
            RegimeTag::FbarPreserved => (Retained, Erased),
            RegimeTag::FPreserved => (Erased, Retained),
            RegimeTag::BothPreserved => (Retained, Retained),
        }
    }
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegimeTag {
    type Err = LibraryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegimeTag::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| LibraryError::UnknownRegime(s.to_string()))
    }
}

/// Single-friend cases: I keeps F's record, II erases it by measuring the
/// composite of system and device.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    I,
    II,
}

fn c(re: f64) -> Complex {
    Complex::new(re, 0.0)
}

fn qubit(amps: [Complex; 2]) -> StateVector {
    StateVector::new(vec![2], amps.to_vec()).expect("two amplitudes")
}

fn basis(labels: [&str; 2], vectors: [[Complex; 2]; 2]) -> Basis {
    Basis::new(
        vec![2],
        labels.iter().map(|l| l.to_string()).collect(),
        vectors.iter().map(|v| qubit(*v)).collect(),
    )
    .expect("orthonormal by construction")
}

fn measure(time: u64, agent: &str, target: &str, basis: Basis, record: Record) -> Event {
    Event::Measurement(MeasurementEvent {
        time_index: time,
        agent: agent.to_string(),
        targets: vec![target.to_string()],
        basis,
        record,
    })
}

/// `α, β, γ, δ` for the Hadamard-type second basis.
pub fn hadamard() -> (Complex, Complex, Complex, Complex) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    (c(h), c(h), c(h), c(-h))
}

/// The generic preparation `0.6|up⟩ + 0.8|down⟩`.
pub fn default_s0() -> StateVector {
    qubit([c(0.6), c(0.8)])
}

fn second_basis(
    labels: [&str; 2],
    alpha: Complex,
    beta: Complex,
    gamma: Complex,
    delta: Complex,
) -> Result<Basis, LibraryError> {
    let m = Operator::from_rows(vec![2], vec![vec![alpha, beta], vec![gamma, delta]]).expect("2x2");
    let defect = m.unitarity_defect();
    if defect > STRUCTURE_TOL {
        return Err(LibraryError::NotUnitary { defect });
    }
    Ok(basis(labels, [[alpha, beta], [gamma, delta]]))
}

fn up_down() -> Basis {
    basis(["up", "down"], [[c(1.0), c(0.0)], [c(0.0), c(1.0)]])
}

/// Two-level system measured by a first probe (F, in `up/down`, only when
/// `engage_first_probe`) and then by a second one (W) in
/// `fail = α|up⟩ + β|down⟩`, `ok = γ|up⟩ + δ|down⟩`.
pub fn double_slit(
    alpha: Complex,
    beta: Complex,
    gamma: Complex,
    delta: Complex,
    s0: &StateVector,
    engage_first_probe: bool,
) -> Result<Scenario, LibraryError> {
    let second = second_basis(["fail", "ok"], alpha, beta, gamma, delta)?;
    let mut events = Vec::new();
    if engage_first_probe {
        events.push(measure(1, "F", "S", up_down(), Record::Retained));
    }
    events.push(measure(2, "W", "S", second, Record::Retained));
    let s = Scenario {
        name: "double_slit".into(),
        subsystems: vec![SubsystemSpec::new("S", &["up", "down"])],
        initial: s0.clone(),
        events,
        final_time: 2,
    };
    validate(&s)?;
    Ok(s)
}

/// Friend F measures `up/down`, then W measures in the `α, β, γ, δ` basis.
/// In case II W's outcomes `Fail`, `Ok` refer to the composite of system and
/// F's device, which erases F's record.
pub fn wfs(
    case: Case,
    alpha: Complex,
    beta: Complex,
    gamma: Complex,
    delta: Complex,
    s0: &StateVector,
) -> Result<Scenario, LibraryError> {
    let (name, labels, record) = match case {
        Case::I => ("wfs_case1", ["fail", "ok"], Record::Retained),
        Case::II => ("wfs_case2", ["Fail", "Ok"], Record::Erased),
    };
    let second = second_basis(labels, alpha, beta, gamma, delta)?;
    let s = Scenario {
        name: name.into(),
        subsystems: vec![SubsystemSpec::new("S", &["up", "down"])],
        initial: s0.clone(),
        events: vec![
            measure(1, "F", "S", up_down(), record),
            measure(2, "W", "S", second, Record::Retained),
        ],
        final_time: 2,
    };
    validate(&s)?;
    Ok(s)
}

/// Coin–spin unitary: nothing on heads, on tails
/// `|up⟩ → (|up⟩ − |down⟩)/√2`, `|down⟩ → (|up⟩ + |down⟩)/√2`.
pub fn coin_spin_unitary() -> Operator {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (o, l) = (c(0.0), c(1.0));
    Operator::from_rows(
        vec![2, 2],
        vec![
            vec![l, o, o, o],
            vec![o, l, o, o],
            vec![o, o, c(h), c(h)],
            vec![o, o, c(-h), c(h)],
        ],
    )
    .expect("4x4")
}

/// Two friends and two Wigners. Fbar reads a coin prepared in
/// `(|heads⟩ + √2|tails⟩)/√3`, the coin then rotates the spin, F reads the
/// spin, and Wbar, W measure the two labs in rotated bases. The regime
/// decides which friends' records those final measurements erase.
pub fn two_wigners(regime: RegimeTag) -> Scenario {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (fbar, f) = regime.records();
    let third = 1.0 / 3f64.sqrt();
    // order: heads·up, heads·down, tails·up, tails·down
    let initial = StateVector::new(
        vec![2, 2],
        vec![c(0.0), c(third), c(0.0), c(2f64.sqrt() * third)],
    )
    .expect("4 amplitudes");
    let events = vec![
        measure(
            1,
            "Fbar",
            "coin",
            basis(["heads", "tails"], [[c(1.0), c(0.0)], [c(0.0), c(1.0)]]),
            fbar,
        ),
        Event::Unitary(UnitaryEvent {
            time_index: 2,
            targets: vec!["coin".into(), "spin".into()],
            op: coin_spin_unitary(),
        }),
        measure(3, "F", "spin", up_down(), f),
        measure(
            4,
            "Wbar",
            "coin",
            basis(["failbar", "okbar"], [[c(h), c(h)], [c(h), c(-h)]]),
            Record::Retained,
        ),
        measure(
            5,
            "W",
            "spin",
            basis(["fail", "ok"], [[c(h), c(h)], [c(h), c(-h)]]),
            Record::Retained,
        ),
    ];
    Scenario {
        name: format!("2w2f_{}", regime.name()),
        subsystems: vec![
            SubsystemSpec::new("coin", &["heads", "tails"]),
            SubsystemSpec::new("spin", &["up", "down"]),
        ],
        initial,
        events,
        final_time: 5,
    }
}

/// Shipped `.scn` sources, by built-in name.
pub const SHIPPED: [(&str, &str); 7] = [
    (
        "double_slit",
        include_str!("../../../scenarios/double_slit.scn"),
    ),
    (
        "wfs_case1",
        include_str!("../../../scenarios/wfs_case1.scn"),
    ),
    (
        "wfs_case2",
        include_str!("../../../scenarios/wfs_case2.scn"),
    ),
    (
        "2w2f_both_erased",
        include_str!("../../../scenarios/2w2f_both_erased.scn"),
    ),
    (
        "2w2f_fbar_preserved",
        include_str!("../../../scenarios/2w2f_fbar_preserved.scn"),
    ),
    (
        "2w2f_f_preserved",
        include_str!("../../../scenarios/2w2f_f_preserved.scn"),
    ),
    (
        "2w2f_both_preserved",
        include_str!("../../../scenarios/2w2f_both_preserved.scn"),
    ),
];

/// Names accepted by [`builtin`].
pub fn builtin_names() -> Vec<&'static str> {
    let mut v = vec!["2w2f"];
    v.extend(SHIPPED.iter().map(|(n, _)| *n));
    v
}

/// Generates a built-in. `2w2f` needs `regime`; the other names carry
/// their own.
pub fn builtin(name: &str, regime: Option<RegimeTag>) -> Result<Scenario, LibraryError> {
    let (a, b, g, d) = hadamard();
    let s0 = default_s0();
    match name {
        "double_slit" => double_slit(a, b, g, d, &s0, true),
        "wfs_case1" => wfs(Case::I, a, b, g, d, &s0),
        "wfs_case2" => wfs(Case::II, a, b, g, d, &s0),
        "2w2f" => regime
            .map(two_wigners)
            .ok_or_else(|| LibraryError::RegimeRequired(name.to_string())),
        _ => match name.strip_prefix("2w2f_") {
            Some(r) => Ok(two_wigners(r.parse()?)),
            None => Err(LibraryError::UnknownBuiltin(name.to_string())),
        },
    }
}

/// Parses the shipped file of a built-in.
pub fn shipped(name: &str) -> Option<Scenario> {
    SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_scenario(text).expect("shipped scenario parses"))
}
