//! Shared helpers for the integration tests: a random generator of valid
//! scenarios and a hand-coded model of the two-friends experiment that does
//! not go through the library.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wigner_paths::hilbert::{Basis, Complex, Operator, StateVector};
use wigner_paths::scenario::{
    validate, Event, MeasurementEvent, Record, Scenario, SubsystemSpec, UnitaryEvent,
};

/// Largest dilated dimension the generator accepts, to keep the oracle fast.
pub const MAX_DILATED_DIM: usize = 6000;
/// Largest number of virtual paths the generator accepts.
pub const MAX_PATHS: usize = 2000;

fn random_complex(rng: &mut impl Rng) -> Complex {
    Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Columns of a random unitary, by Gram–Schmidt on random complex vectors.
pub fn random_unitary_columns(rng: &mut impl Rng, n: usize) -> Vec<Vec<Complex>> {
    let mut cols: Vec<Vec<Complex>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<Complex> = (0..n).map(|_| random_complex(rng)).collect();
        for c in &cols {
            let overlap: Complex = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(c) {
                *x -= overlap * y;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        cols.push(v.into_iter().map(|x| x / norm).collect());
    }
    cols
}

fn random_state(rng: &mut impl Rng, dims: &[usize]) -> StateVector {
    let n: usize = dims.iter().product();
    let v = random_unitary_columns(rng, n).swap_remove(0);
    StateVector::new(dims.to_vec(), v).unwrap()
}

fn random_targets(rng: &mut impl Rng, count: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..count).collect();
    let k = rng.gen_range(1..=count.min(2));
    let mut out = Vec::new();
    for _ in 0..k {
        out.push(all.swap_remove(rng.gen_range(0..all.len())));
    }
    out
}

/// One attempt at a scenario; may be invalid.
fn candidate(rng: &mut impl Rng) -> Scenario {
    let count = rng.gen_range(1..=3);
    let subsystems: Vec<SubsystemSpec> = (0..count)
        .map(|k| {
            let dim = rng.gen_range(2..=3);
            let labels: Vec<String> = (0..dim).map(|l| format!("l{l}")).collect();
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            SubsystemSpec::new(&format!("s{k}"), &refs)
        })
        .collect();
    let dims: Vec<usize> = subsystems.iter().map(|s| s.dim).collect();
    let n_events = rng.gen_range(1..=4);
    let mut events = Vec::new();
    let mut time = 0;
    for e in 0..n_events {
        // occasionally share a time step with the previous event
        if e == 0 || !rng.gen_bool(0.2) {
            time += 1;
        }
        let targets = random_targets(rng, count);
        let local: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
        let n: usize = local.iter().product();
        let names: Vec<String> = targets.iter().map(|&t| format!("s{t}")).collect();
        let cols = random_unitary_columns(rng, n);
        let last = e + 1 == n_events;
        if !last && rng.gen_bool(0.35) {
            let mut entries = vec![Complex::new(0.0, 0.0); n * n];
            for (c, col) in cols.iter().enumerate() {
                for (r, x) in col.iter().enumerate() {
                    entries[r * n + c] = *x;
                }
            }
            events.push(Event::Unitary(UnitaryEvent {
                time_index: time,
                targets: names,
                op: Operator::new(local, entries).unwrap(),
            }));
        } else {
            let vectors = cols
                .into_iter()
                .map(|c| StateVector::new(local.clone(), c).unwrap())
                .collect();
            let labels = (0..n).map(|i| format!("o{i}")).collect();
            let record = if !last && rng.gen_bool(0.4) {
                Record::Erased
            } else {
                Record::Retained
            };
            events.push(Event::Measurement(MeasurementEvent {
                time_index: time,
                agent: format!("A{e}"),
                targets: names,
                basis: Basis::unchecked(local, labels, vectors),
                record,
            }));
        }
    }
    Scenario {
        name: "random".into(),
        subsystems,
        initial: random_state(rng, &dims),
        events,
        final_time: time,
    }
}

fn small_enough(s: &Scenario) -> bool {
    let base: usize = s.dims().iter().product();
    let mut dilated = base;
    let mut paths = 1usize;
    for e in &s.events {
        if let Event::Measurement(m) = e {
            dilated *= m.basis.len() + 1;
            paths *= m.basis.len();
        }
    }
    dilated <= MAX_DILATED_DIM && paths * base <= MAX_PATHS
}

/// A valid random scenario (rejection sampling against `validate`).
pub fn random_scenario(rng: &mut impl Rng) -> Scenario {
    loop {
        let s = candidate(rng);
        if small_enough(&s) && validate(&s).is_ok() {
            return s;
        }
    }
}

pub fn scenario_from_seed(seed: u64) -> Scenario {
    random_scenario(&mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn has_erasure(s: &Scenario) -> bool {
    s.events.iter().any(|e| {
        e.as_measurement()
            .is_some_and(|m| m.record == Record::Erased)
    })
}

/// Hand-coded two-friends experiment on plain f64 arrays.
pub mod friends {
    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    /// ⟨label|computational⟩ for Wbar's and W's bases: index 0 fail(bar),
    /// 1 ok(bar); both are (|0⟩ ± |1⟩)/√2.
    fn wigner(label: usize, level: usize) -> f64 {
        if label == 1 && level == 1 {
            -H
        } else {
            H
        }
    }

    /// ⟨coin, spin|U|coin, spin'⟩; coin 0 heads, spin 0 up.
    fn u(coin: usize, spin: usize, spin_in: usize) -> f64 {
        match (coin, spin, spin_in) {
            (0, a, b) => (a == b) as u8 as f64,
            (1, 0, 0) | (1, 0, 1) | (1, 1, 1) => H,
            (1, 1, 0) => -H,
            _ => unreachable!(),
        }
    }

    fn phi0(coin: usize, spin: usize) -> f64 {
        match (coin, spin) {
            (0, 1) => 1.0 / 3f64.sqrt(),
            (1, 1) => 2f64.sqrt() / 3f64.sqrt(),
            _ => 0.0,
        }
    }

    /// A(wbar⊗w ← coin⊗spin ← coin ← Φ0).
    pub fn amplitude(wbar: usize, w: usize, coin: usize, spin: usize) -> f64 {
        let evolved: f64 = (0..2).map(|s| u(coin, spin, s) * phi0(coin, s)).sum();
        wigner(wbar, coin) * wigner(w, spin) * evolved
    }

    /// The twelve nonzero paths in table order: (wbar, w, coin, spin).
    pub fn twelve() -> Vec<(usize, usize, usize, usize)> {
        let mut out = Vec::new();
        for wbar in 0..2 {
            for w in 0..2 {
                for (coin, spin) in [(0, 1), (1, 1), (1, 0)] {
                    out.push((wbar, w, coin, spin));
                }
            }
        }
        out
    }
}
