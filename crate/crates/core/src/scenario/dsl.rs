//! Line-oriented `.scn` scenario format.
//!
//! ```text
//! # comments run to end of line
//! scenario 2w2f_both_erased
//! subsystem coin 2 heads tails
//! subsystem spin 2 up down
//!
//! state
//!   heads down = 1/sqrt(3)
//!   tails down = sqrt(2)/sqrt(3)
//! end
//!
//! measure at 1 by Fbar on coin erased
//!   heads = 1, 0
//!   tails = 0, 1
//! end
//!
//! unitary at 2 on coin spin
//!   1, 0, 0, 0
//!   0, 1, 0, 0
//!   0, 0, 1/sqrt(2), 1/sqrt(2)
//!   0, 0, -1/sqrt(2), 1/sqrt(2)
//! end
//!
//! final 5
//! ```
//!
//! State lines give one computational label per subsystem (declaration
//! order); unlisted components are zero. Matrix rows and basis vectors are
//! row-major over the listed targets.

use thiserror::Error;

use super::expr::{eval, format_complex};
use super::{
    validate, Event, MeasurementEvent, Record, Scenario, SubsystemSpec, UnitaryEvent, Violation,
};
use crate::hilbert::{Basis, Complex, Operator, StateVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("lexical error: {0}")]
    Lexical(String),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),
    #[error("unknown label `{label}` for subsystem `{subsystem}`")]
    UnknownLabel { subsystem: String, label: String },
    #[error("{0}")]
    Invalid(Violation),
}

/// Diagnostic with a 1-based source location.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Copy)]
struct Word<'a> {
    text: &'a str,
    /// Byte offset within the line.
    at: usize,
}

struct Line<'a> {
    number: usize,
    text: &'a str,
    words: Vec<Word<'a>>,
}

impl Line<'_> {
    fn column(&self, at: usize) -> usize {
        self.text[..at.min(self.text.len())].chars().count() + 1
    }

    fn error(&self, at: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.number,
            column: self.column(at),
            kind,
        }
    }

    fn syntax(&self, at: usize, msg: impl Into<String>) -> ParseError {
        self.error(at, ParseErrorKind::Syntax(msg.into()))
    }
}

fn split_words(text: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Word {
                    text: &text[s..i],
                    at: s,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Word {
            text: &text[s..],
            at: s,
        });
    }
    out
}

pub fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

pub fn is_name(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || b == b'.')
}

/// Where each part of the scenario came from, for locating validation errors.
#[derive(Default)]
struct Origins {
    subsystems: Vec<(usize, usize)>,
    state: Option<(usize, usize)>,
    events: Vec<(usize, usize)>,
    final_time: Option<(usize, usize)>,
    eof: (usize, usize),
}

enum Block<'a> {
    None,
    State {
        header: usize,
        entries: Vec<(Vec<Word<'a>>, Complex, usize)>,
    },
    Unitary {
        time: u64,
        targets: Vec<String>,
        rows: Vec<Vec<Complex>>,
    },
    Measure {
        time: u64,
        agent: String,
        targets: Vec<String>,
        record: Record,
        labels: Vec<String>,
        vectors: Vec<Vec<Complex>>,
    },
}

struct Builder {
    name: String,
    subsystems: Vec<SubsystemSpec>,
    initial: Option<StateVector>,
    events: Vec<Event>,
    final_time: Option<u64>,
    origins: Origins,
}

/// Parses raw bytes; invalid UTF-8 is a lexical error.
pub fn parse_scenario_bytes(bytes: &[u8]) -> Result<Scenario, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_scenario(text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            let line = valid.iter().filter(|&&b| b == b'\n').count() + 1;
            let line_start = valid.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
            let column =
                std::str::from_utf8(&valid[line_start..]).map_or(1, |s| s.chars().count() + 1);
            Err(ParseError {
                line,
                column,
                kind: ParseErrorKind::Lexical("invalid UTF-8".into()),
            })
        }
    }
}

/// Parses and validates a `.scn` document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut b = Builder {
        name: String::new(),
        subsystems: Vec::new(),
        initial: None,
        events: Vec::new(),
        final_time: None,
        origins: Origins::default(),
    };
    let mut block = Block::None;
    let mut block_line = (0, 0);
    let mut last_line = 0;

    for (idx, raw) in text.split('\n').enumerate() {
        let number = idx + 1;
        last_line = number;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some((at, c)) = raw
            .char_indices()
            .find(|&(_, c)| c.is_control() && c != '\t')
        {
            let line = Line {
                number,
                text: raw,
                words: Vec::new(),
            };
            return Err(line.error(
                at,
                ParseErrorKind::Lexical(format!("control character U+{:04X}", c as u32)),
            ));
        }
        let content = raw.split('#').next().unwrap_or("");
        let line = Line {
            number,
            text: raw,
            words: split_words(content),
        };
        if line.words.is_empty() {
            continue;
        }
        let head = line.words[0];

        if !matches!(block, Block::None) {
            if head.text == "end" {
                if line.words.len() > 1 {
                    return Err(line.syntax(line.words[1].at, "unexpected text after `end`"));
                }
                let finished = std::mem::replace(&mut block, Block::None);
                b.finish_block(finished, block_line, &line)?;
                continue;
            }
            b.block_line(&mut block, &line, content)?;
            continue;
        }

        match head.text {
            "scenario" => {
                let [_, name] = line.words[..] else {
                    return Err(line.syntax(head.at, "expected `scenario <name>`"));
                };
                if !is_name(name.text) {
                    return Err(
                        line.syntax(name.at, format!("invalid scenario name `{}`", name.text))
                    );
                }
                b.name = name.text.to_string();
            }
            "subsystem" => {
                if b.initial.is_some() || !b.events.is_empty() {
                    return Err(line.syntax(
                        head.at,
                        "subsystems must be declared before the state and events",
                    ));
                }
                b.subsystem(&line)?;
            }
            "state" => {
                if line.words.len() > 1 {
                    return Err(line.syntax(line.words[1].at, "unexpected text after `state`"));
                }
                if b.subsystems.is_empty() {
                    return Err(
                        line.error(head.at, ParseErrorKind::Invalid(Violation::NoSubsystems))
                    );
                }
                if b.initial.is_some() {
                    return Err(line.syntax(head.at, "state declared twice"));
                }
                block = Block::State {
                    header: number,
                    entries: Vec::new(),
                };
                block_line = (number, line.column(head.at));
            }
            "unitary" => {
                block = b.unitary_header(&line)?;
                block_line = (number, line.column(head.at));
            }
            "measure" => {
                block = b.measure_header(&line)?;
                block_line = (number, line.column(head.at));
            }
            "final" => {
                let [_, t] = line.words[..] else {
                    return Err(line.syntax(head.at, "expected `final <time>`"));
                };
                b.final_time = Some(parse_time(&line, t)?);
                b.origins.final_time = Some((number, line.column(head.at)));
            }
            "end" => return Err(line.syntax(head.at, "`end` without an open block")),
            other => {
                return Err(line.syntax(head.at, format!("unknown directive `{other}`")));
            }
        }
    }

    b.origins.eof = (last_line.max(1), 1);
    if !matches!(block, Block::None) {
        return Err(ParseError {
            line: block_line.0,
            column: block_line.1,
            kind: ParseErrorKind::Syntax("block is missing its `end`".into()),
        });
    }
    b.build()
}

fn parse_time(line: &Line, w: Word) -> Result<u64, ParseError> {
    w.text.parse().map_err(|_| {
        line.syntax(
            w.at,
            format!("expected a non-negative integer time, found `{}`", w.text),
        )
    })
}

/// Splits `text` (starting at byte `base` of the line) on commas and
/// evaluates each piece.
fn parse_row(line: &Line, text: &str, base: usize) -> Result<Vec<Complex>, ParseError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for piece in text.split(',') {
        let lead = piece.len() - piece.trim_start().len();
        let at = base + offset + lead;
        let value = eval(piece.trim()).map_err(|e| {
            let kind = if e.lexical {
                ParseErrorKind::Lexical(e.message)
            } else {
                ParseErrorKind::Syntax(e.message)
            };
            line.error(at + e.offset, kind)
        })?;
        out.push(value);
        offset += piece.len() + 1;
    }
    Ok(out)
}

impl Builder {
    fn subsystem(&mut self, line: &Line) -> Result<(), ParseError> {
        let w = &line.words;
        if w.len() < 3 {
            return Err(line.syntax(w[0].at, "expected `subsystem <name> <dim> <labels…>`"));
        }
        let name = w[1];
        if !is_identifier(name.text) {
            return Err(line.syntax(name.at, format!("invalid subsystem name `{}`", name.text)));
        }
        if self.subsystems.iter().any(|s| s.name == name.text) {
            return Err(line.error(
                name.at,
                ParseErrorKind::Invalid(Violation::DuplicateSubsystem(name.text.to_string())),
            ));
        }
        let dim: usize = w[2]
            .text
            .parse()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| line.syntax(w[2].at, "dimension must be a positive integer"))?;
        let labels = &w[3..];
        if labels.len() != dim {
            return Err(line.syntax(
                w[2].at,
                format!("dimension {dim} but {} labels", labels.len()),
            ));
        }
        for (i, l) in labels.iter().enumerate() {
            if !is_identifier(l.text) {
                return Err(line.syntax(l.at, format!("invalid label `{}`", l.text)));
            }
            if labels[..i].iter().any(|o| o.text == l.text) {
                return Err(line.syntax(l.at, format!("label `{}` repeated", l.text)));
            }
        }
        self.subsystems.push(SubsystemSpec {
            name: name.text.to_string(),
            dim,
            basis_labels: labels.iter().map(|l| l.text.to_string()).collect(),
        });
        self.origins
            .subsystems
            .push((line.number, line.column(w[0].at)));
        Ok(())
    }

    fn targets(&self, line: &Line, words: &[Word]) -> Result<Vec<String>, ParseError> {
        if words.is_empty() {
            let at = line.words.last().map_or(0, |w| w.at);
            return Err(line.syntax(at, "expected at least one target subsystem"));
        }
        words
            .iter()
            .map(|w| {
                if self.subsystems.iter().any(|s| s.name == w.text) {
                    Ok(w.text.to_string())
                } else {
                    Err(line.error(w.at, ParseErrorKind::UnknownSubsystem(w.text.to_string())))
                }
            })
            .collect()
    }

    fn unitary_header<'a>(&self, line: &Line<'a>) -> Result<Block<'a>, ParseError> {
        let w = &line.words;
        if w.len() < 5 || w[1].text != "at" || w[3].text != "on" {
            return Err(line.syntax(w[0].at, "expected `unitary at <time> on <subsystems…>`"));
        }
        let time = parse_time(line, w[2])?;
        let targets = self.targets(line, &w[4..])?;
        Ok(Block::Unitary {
            time,
            targets,
            rows: Vec::new(),
        })
    }

    fn measure_header<'a>(&self, line: &Line<'a>) -> Result<Block<'a>, ParseError> {
        let w = &line.words;
        let usage = "expected `measure at <time> by <agent> on <subsystems…> retained|erased`";
        if w.len() < 8 || w[1].text != "at" || w[3].text != "by" || w[5].text != "on" {
            return Err(line.syntax(w[0].at, usage));
        }
        let time = parse_time(line, w[2])?;
        let agent = w[4];
        if !is_identifier(agent.text) {
            return Err(line.syntax(agent.at, format!("invalid agent name `{}`", agent.text)));
        }
        let last = w[w.len() - 1];
        let record = match last.text {
            "retained" => Record::Retained,
            "erased" => Record::Erased,
            other => {
                return Err(line.syntax(
                    last.at,
                    format!("expected `retained` or `erased`, found `{other}`"),
                ));
            }
        };
        let targets = self.targets(line, &w[6..w.len() - 1])?;
        Ok(Block::Measure {
            time,
            agent: agent.text.to_string(),
            targets,
            record,
            labels: Vec::new(),
            vectors: Vec::new(),
        })
    }

    fn side(&self, targets: &[String]) -> usize {
        targets
            .iter()
            .map(|t| {
                self.subsystems
                    .iter()
                    .find(|s| &s.name == t)
                    .map_or(1, |s| s.dim)
            })
            .product()
    }

    fn target_dims(&self, targets: &[String]) -> Vec<usize> {
        targets
            .iter()
            .map(|t| {
                self.subsystems
                    .iter()
                    .find(|s| &s.name == t)
                    .map_or(1, |s| s.dim)
            })
            .collect()
    }

    fn block_line<'a>(
        &self,
        block: &mut Block<'a>,
        line: &Line<'a>,
        content: &'a str,
    ) -> Result<(), ParseError> {
        match block {
            Block::None => unreachable!(),
            Block::State { entries, .. } => {
                let Some(eq) = content.find('=') else {
                    return Err(line.syntax(line.words[0].at, "expected `<labels…> = <amplitude>`"));
                };
                let labels = split_words(&content[..eq]);
                if labels.len() != self.subsystems.len() {
                    return Err(line.syntax(
                        line.words[0].at,
                        format!(
                            "expected one label for each of the {} subsystems, found {}",
                            self.subsystems.len(),
                            labels.len()
                        ),
                    ));
                }
                for (l, sub) in labels.iter().zip(&self.subsystems) {
                    if !sub.basis_labels.iter().any(|x| x == l.text) {
                        return Err(line.error(
                            l.at,
                            ParseErrorKind::UnknownLabel {
                                subsystem: sub.name.clone(),
                                label: l.text.to_string(),
                            },
                        ));
                    }
                }
                let values = parse_row(line, &content[eq + 1..], eq + 1)?;
                if values.len() != 1 {
                    return Err(line.syntax(eq + 1, "expected a single amplitude"));
                }
                entries.push((labels, values[0], line.number));
            }
            Block::Unitary { targets, rows, .. } => {
                let side = self.side(targets);
                let row = parse_row(line, content, 0)?;
                if row.len() != side {
                    return Err(line.syntax(
                        line.words[0].at,
                        format!("expected {side} entries in matrix row, found {}", row.len()),
                    ));
                }
                if rows.len() == side {
                    return Err(line.syntax(
                        line.words[0].at,
                        format!("matrix has more than {side} rows"),
                    ));
                }
                rows.push(row);
            }
            Block::Measure {
                targets,
                labels,
                vectors,
                ..
            } => {
                let side = self.side(targets);
                let Some(eq) = content.find('=') else {
                    return Err(line.syntax(line.words[0].at, "expected `<label> = <components…>`"));
                };
                let names = split_words(&content[..eq]);
                let [label] = names[..] else {
                    return Err(line.syntax(line.words[0].at, "expected exactly one outcome label"));
                };
                if !is_identifier(label.text) {
                    return Err(
                        line.syntax(label.at, format!("invalid outcome label `{}`", label.text))
                    );
                }
                if labels.iter().any(|l| l == label.text) {
                    return Err(line.error(
                        label.at,
                        ParseErrorKind::Invalid(Violation::Basis {
                            event: self.events.len(),
                            violation: crate::hilbert::BasisViolation::DuplicateLabel(
                                label.text.to_string(),
                            ),
                        }),
                    ));
                }
                let row = parse_row(line, &content[eq + 1..], eq + 1)?;
                if row.len() != side {
                    return Err(line.syntax(
                        eq + 1,
                        format!("expected {side} components, found {}", row.len()),
                    ));
                }
                labels.push(label.text.to_string());
                vectors.push(row);
            }
        }
        Ok(())
    }

    fn finish_block(
        &mut self,
        block: Block,
        origin: (usize, usize),
        end_line: &Line,
    ) -> Result<(), ParseError> {
        let at_origin = |kind| ParseError {
            line: origin.0,
            column: origin.1,
            kind,
        };
        match block {
            Block::None => unreachable!(),
            Block::State { header, entries } => {
                let dims: Vec<usize> = self.subsystems.iter().map(|s| s.dim).collect();
                let mut amps = vec![Complex::new(0.0, 0.0); dims.iter().product()];
                let mut seen = vec![false; amps.len()];
                for (labels, value, number) in entries {
                    let mut index = 0;
                    for (l, sub) in labels.iter().zip(&self.subsystems) {
                        let digit = sub.basis_labels.iter().position(|x| x == l.text).unwrap();
                        index = index * sub.dim + digit;
                    }
                    if seen[index] {
                        return Err(ParseError {
                            line: number,
                            column: 1,
                            kind: ParseErrorKind::Syntax("component assigned twice".into()),
                        });
                    }
                    seen[index] = true;
                    amps[index] = value;
                }
                let state = StateVector::new(dims, amps)
                    .map_err(|e| at_origin(ParseErrorKind::Syntax(e.to_string())))?;
                self.initial = Some(state);
                self.origins.state = Some((header, origin.1));
            }
            Block::Unitary {
                time,
                targets,
                rows,
            } => {
                let side = self.side(&targets);
                if rows.len() != side {
                    return Err(end_line.syntax(
                        end_line.words[0].at,
                        format!("expected {side} matrix rows, found {}", rows.len()),
                    ));
                }
                let op = Operator::from_rows(self.target_dims(&targets), rows)
                    .map_err(|e| at_origin(ParseErrorKind::Syntax(e.to_string())))?;
                self.events.push(Event::Unitary(UnitaryEvent {
                    time_index: time,
                    targets,
                    op,
                }));
                self.origins.events.push(origin);
            }
            Block::Measure {
                time,
                agent,
                targets,
                record,
                labels,
                vectors,
            } => {
                let dims = self.target_dims(&targets);
                let vectors = vectors
                    .into_iter()
                    .map(|v| StateVector::new(dims.clone(), v))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| at_origin(ParseErrorKind::Syntax(e.to_string())))?;
                self.events.push(Event::Measurement(MeasurementEvent {
                    time_index: time,
                    agent,
                    targets,
                    basis: Basis::unchecked(dims, labels, vectors),
                    record,
                }));
                self.origins.events.push(origin);
            }
        }
        Ok(())
    }

    fn build(self) -> Result<Scenario, ParseError> {
        let o = &self.origins;
        let at = |(line, column): (usize, usize), v: Violation| ParseError {
            line,
            column,
            kind: ParseErrorKind::Invalid(v),
        };
        if self.subsystems.is_empty() {
            return Err(at((1, 1), Violation::NoSubsystems));
        }
        let Some(initial) = self.initial.clone() else {
            return Err(ParseError {
                line: o.eof.0,
                column: 1,
                kind: ParseErrorKind::Syntax("missing `state` block".into()),
            });
        };
        let final_time = self
            .final_time
            .unwrap_or_else(|| self.events.iter().map(Event::time_index).max().unwrap_or(0));
        let scenario = Scenario {
            name: self.name,
            subsystems: self.subsystems,
            initial,
            events: self.events,
            final_time,
        };
        validate(&scenario).map_err(|v| {
            let place = match &v {
                Violation::DuplicateSubsystem(name) | Violation::BadSubsystem { name, .. } => {
                    scenario
                        .subsystem_index(name)
                        .map_or(o.eof, |i| o.subsystems[i])
                }
                Violation::InitialDims { .. } | Violation::InitialNorm { .. } => {
                    o.state.unwrap_or(o.eof)
                }
                Violation::FinalTime { .. } => o.final_time.unwrap_or(o.eof),
                _ => v.event().map_or(o.eof, |e| o.events[e]),
            };
            at(place, v)
        })?;
        Ok(scenario)
    }
}

fn row(values: &[Complex]) -> String {
    values
        .iter()
        .map(|&z| format_complex(z))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Writes `s` in `.scn` form; [`parse_scenario`] reads it back exactly.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    if !s.name.is_empty() {
        out.push_str(&format!("scenario {}\n", s.name));
    }
    for sub in &s.subsystems {
        out.push_str(&format!(
            "subsystem {} {} {}\n",
            sub.name,
            sub.dim,
            sub.basis_labels.join(" ")
        ));
    }
    out.push_str("\nstate\n");
    let dims = s.dims();
    for (i, amp) in s.initial.amps().iter().enumerate() {
        if *amp == Complex::new(0.0, 0.0) {
            continue;
        }
        let labels: Vec<&str> = crate::hilbert::digits(i, &dims)
            .iter()
            .zip(&s.subsystems)
            .map(|(&d, sub)| sub.basis_labels[d].as_str())
            .collect();
        out.push_str(&format!(
            "  {} = {}\n",
            labels.join(" "),
            format_complex(*amp)
        ));
    }
    out.push_str("end\n");
    for ev in &s.events {
        out.push('\n');
        match ev {
            Event::Unitary(u) => {
                out.push_str(&format!(
                    "unitary at {} on {}\n",
                    u.time_index,
                    u.targets.join(" ")
                ));
                for r in u.op.rows() {
                    out.push_str(&format!("  {}\n", row(r)));
                }
            }
            Event::Measurement(m) => {
                out.push_str(&format!(
                    "measure at {} by {} on {} {}\n",
                    m.time_index,
                    m.agent,
                    m.targets.join(" "),
                    m.record.keyword()
                ));
                for (label, v) in m.basis.labels().iter().zip(m.basis.vectors()) {
                    out.push_str(&format!("  {} = {}\n", label, row(v.amps())));
                }
            }
        }
        out.push_str("end\n");
    }
    out.push_str(&format!("\nfinal {}\n", s.final_time));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
scenario tiny
subsystem q 2 zero one
state
  zero = 0.6
  one = 0.8i
end
measure at 1 by A on q retained
  plus = 1/sqrt(2), 1/sqrt(2)
  minus = 1/sqrt(2), -1/sqrt(2)
end
";

    #[test]
    fn parses_small_scenario() {
        let s = parse_scenario(SMALL).unwrap();
        assert_eq!(s.name, "tiny");
        assert_eq!(s.final_time, 1);
        assert_eq!(s.initial.amps()[1], Complex::new(0.0, 0.8));
        assert_eq!(s.measurement(0).basis.labels(), &["plus", "minus"]);
    }

    #[test]
    fn empty_input_reports_no_subsystems() {
        let e = parse_scenario("").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Invalid(Violation::NoSubsystems));
        assert!(e.to_string().contains("no subsystems declared"));
        assert_eq!((e.line, e.column), (1, 1));
    }

    #[test]
    fn degenerate_basis_names_the_pair() {
        let text = SMALL.replace(
            "minus = 1/sqrt(2), -1/sqrt(2)",
            "minus = 1/sqrt(2), 1/sqrt(2)",
        );
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.line, 7);
        match e.kind {
            ParseErrorKind::Invalid(Violation::Basis {
                violation: crate::hilbert::BasisViolation::Overlap { first, second, .. },
                ..
            }) => assert_eq!((first, second), (0, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_basis_vectors_1_0() {
        let text = "subsystem q 2 a b\nstate\n a = 1\nend\nmeasure at 1 by A on q retained\n x = 1, 0\n y = 1, 0\nend\n";
        let e = parse_scenario(text).unwrap_err();
        assert!(
            e.to_string().contains("basis vectors 0 and 1 overlap"),
            "{e}"
        );
    }

    #[test]
    fn unknown_names_are_located() {
        let text = SMALL.replace("on q retained", "on qq retained");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownSubsystem("qq".into()));
        assert_eq!((e.line, e.column), (7, 22));

        let text = SMALL.replace("  one = 0.8i", "  won = 0.8i");
        let e = parse_scenario(&text).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnknownLabel { .. }));
        assert_eq!((e.line, e.column), (5, 3));
    }

    #[test]
    fn lexical_errors_are_located() {
        let text = SMALL.replace("0.8i", "0.8j");
        let e = parse_scenario(&text).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Lexical(_)), "{e}");
        assert_eq!(e.line, 5);
        let e = parse_scenario_bytes(b"subsystem q 2 a b\n\xff").unwrap_err();
        assert_eq!((e.line, e.column), (2, 1));
    }

    #[test]
    fn unnormalized_state_points_at_state_block() {
        let text = SMALL.replace("0.8i", "0.9i");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(
            e.kind,
            ParseErrorKind::Invalid(Violation::InitialNorm { .. })
        ));
    }

    #[test]
    fn non_unitary_matrix_is_reported() {
        let text = SMALL.replace(
            "measure at 1",
            "unitary at 0 on q\n  1, 1\n  0, 1\nend\nmeasure at 1",
        );
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.line, 7);
        assert!(matches!(
            e.kind,
            ParseErrorKind::Invalid(Violation::NotUnitary { .. })
        ));
    }

    #[test]
    fn missing_final_record() {
        let text = SMALL.replace("retained", "erased");
        let e = parse_scenario(&text).unwrap_err();
        assert!(e.to_string().contains("no surviving final record"), "{e}");
    }

    #[test]
    fn unterminated_block() {
        let text = SMALL.trim_end().trim_end_matches("end");
        let e = parse_scenario(text).unwrap_err();
        assert_eq!(e.line, 7);
        assert!(e.to_string().contains("missing its `end`"));
    }

    #[test]
    fn round_trip_small() {
        let s = parse_scenario(SMALL).unwrap();
        let text = serialize_scenario(&s);
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }

    #[test]
    fn crlf_and_comments() {
        let text = SMALL.replace('\n', " # note\r\n");
        assert_eq!(
            parse_scenario(&text).unwrap(),
            parse_scenario(SMALL).unwrap()
        );
    }
}
