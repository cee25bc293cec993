//! Line-oriented circuit description format (`.circ`).
//!
//! The format is a straight-line program, one stage per line, UTF-8 with LF
//! endings. `#` starts a comment. Grammar:
//!
//! ```text
//! circuit <name> electrons=<n>
//! modes <mode> <mode> ...
//! input <mode>
//! output <mode>
//! pbs in=<m,...> transmit=<m:dir,...> reflect=<m:dir,...> [checkpoint=<tag>]
//! hwp port=<m> [checkpoint=<tag>]
//! phase port=<m> phi=<pi|-pi|float> [checkpoint=<tag>]
//! spinh spin=<k> [checkpoint=<tag>]
//! switch port=<m> out=<m> [checkpoint=<tag>]
//! delay port=<m> [checkpoint=<tag>]
//! cavity id=<name> spin=<k> porta=<m:dir> portb=<m> [checkpoint=<tag>]
//! ```
//!
//! `dir` is `along` or `against` (the cavity's portb entry direction is the
//! opposite of porta's). The three gate builders emit this format and parse
//! back structurally equal.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::circuits::{CircuitSpec, ElementOp, PbsPort, Stage};
use crate::state::{Direction, Mode};

#[derive(Debug, Error, PartialEq)]
pub enum CircuitFileError {
    #[error("line {line}: unknown element '{name}'")]
    UnknownElement { name: String, line: usize },
    #[error("line {line}: {detail}")]
    Syntax { line: usize, detail: String },
    #[error("line {line}: undeclared mode '{mode}'")]
    UndeclaredMode { mode: String, line: usize },
    #[error("missing 'circuit <name> electrons=<n>' header")]
    MissingHeader,
    #[error("missing '{0}' declaration")]
    MissingDeclaration(&'static str),
    #[error("line {line}: duplicate checkpoint tag '{tag}'")]
    DuplicateCheckpoint { tag: String, line: usize },
}

fn dir_token(dir: Direction) -> &'static str {
    match dir {
        Direction::AlongZ => "along",
        Direction::AgainstZ => "against",
    }
}

fn parse_dir(token: &str, line: usize) -> Result<Direction, CircuitFileError> {
    match token {
        "along" => Ok(Direction::AlongZ),
        "against" => Ok(Direction::AgainstZ),
        other => Err(CircuitFileError::Syntax {
            line,
            detail: format!("unknown direction '{other}' (expected along|against)"),
        }),
    }
}

fn fmt_phi(phi: f64) -> String {
    if (phi - std::f64::consts::PI).abs() < 1e-15 {
        "pi".to_string()
    } else if (phi + std::f64::consts::PI).abs() < 1e-15 {
        "-pi".to_string()
    } else {
        format!("{phi}")
    }
}

fn parse_phi(token: &str, line: usize) -> Result<f64, CircuitFileError> {
    match token {
        "pi" => Ok(std::f64::consts::PI),
        "-pi" => Ok(-std::f64::consts::PI),
        other => other.parse().map_err(|_| CircuitFileError::Syntax {
            line,
            detail: format!("bad phase '{other}'"),
        }),
    }
}

/// Render a circuit in the canonical `.circ` form.
pub fn emit_circuit(circuit: &CircuitSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "circuit {} electrons={}\n",
        circuit.name, circuit.electron_count
    ));
    let mode_list: Vec<&str> = circuit.modes.iter().map(|m| m.as_str()).collect();
    out.push_str(&format!("modes {}\n", mode_list.join(" ")));
    out.push_str(&format!("input {}\n", circuit.input_mode));
    out.push_str(&format!("output {}\n", circuit.output_mode));
    for stage in &circuit.stages {
        let body = match &stage.op {
            ElementOp::Pbs { ports } => {
                let ins: Vec<String> = ports.iter().map(|p| p.input.to_string()).collect();
                let ts: Vec<String> = ports
                    .iter()
                    .map(|p| format!("{}:{}", p.transmit, dir_token(p.transmit_dir)))
                    .collect();
                let rs: Vec<String> = ports
                    .iter()
                    .map(|p| format!("{}:{}", p.reflect, dir_token(p.reflect_dir)))
                    .collect();
                format!(
                    "pbs in={} transmit={} reflect={}",
                    ins.join(","),
                    ts.join(","),
                    rs.join(",")
                )
            }
            ElementOp::Hwp { port } => format!("hwp port={port}"),
            ElementOp::PhaseShift { port, phi } => {
                format!("phase port={port} phi={}", fmt_phi(*phi))
            }
            ElementOp::SpinHadamard { spin } => format!("spinh spin={spin}"),
            ElementOp::Switch { port, target } => format!("switch port={port} out={target}"),
            ElementOp::Delay { port } => format!("delay port={port}"),
            ElementOp::Cavity {
                cavity,
                spin,
                port_a,
                entry_a,
                port_b,
            } => format!(
                "cavity id={cavity} spin={spin} porta={port_a}:{} portb={port_b}",
                dir_token(*entry_a)
            ),
        };
        out.push_str(&body);
        if let Some(tag) = &stage.checkpoint {
            out.push_str(&format!(" checkpoint={tag}"));
        }
        out.push('\n');
    }
    out
}

struct LineArgs<'a> {
    line: usize,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> LineArgs<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn require(&self, key: &str) -> Result<&'a str, CircuitFileError> {
        self.get(key).ok_or_else(|| CircuitFileError::Syntax {
            line: self.line,
            detail: format!("missing {key}=..."),
        })
    }
}

fn split_pairs<'a>(tokens: &[&'a str], line: usize) -> Result<LineArgs<'a>, CircuitFileError> {
    let mut pairs = vec![];
    for token in tokens {
        match token.split_once('=') {
            Some((k, v)) => pairs.push((k, v)),
            None => {
                return Err(CircuitFileError::Syntax {
                    line,
                    detail: format!("expected key=value, got '{token}'"),
                })
            }
        }
    }
    Ok(LineArgs { line, pairs })
}

fn parse_usize(value: &str, line: usize, what: &str) -> Result<usize, CircuitFileError> {
    value.parse().map_err(|_| CircuitFileError::Syntax {
        line,
        detail: format!("bad {what} '{value}'"),
    })
}

fn parse_target(token: &str, line: usize) -> Result<(Mode, Direction), CircuitFileError> {
    match token.split_once(':') {
        Some((mode, dir)) => Ok((Mode::from(mode), parse_dir(dir, line)?)),
        None => Err(CircuitFileError::Syntax {
            line,
            detail: format!("expected mode:dir, got '{token}'"),
        }),
    }
}

/// Parse the `.circ` text into a circuit, with line-numbered errors.
pub fn parse_circuit(text: &str) -> Result<CircuitSpec, CircuitFileError> {
    let mut name: Option<(String, usize)> = None;
    let mut modes: Option<BTreeSet<Mode>> = None;
    let mut input_mode = None;
    let mut output_mode = None;
    let mut stages: Vec<Stage> = vec![];
    let mut tags: BTreeSet<String> = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let head = tokens[0];

        if name.is_none() {
            if head != "circuit" {
                return Err(CircuitFileError::MissingHeader);
            }
            if tokens.len() != 3 {
                return Err(CircuitFileError::Syntax {
                    line,
                    detail: "expected: circuit <name> electrons=<n>".to_string(),
                });
            }
            let args = split_pairs(&tokens[2..], line)?;
            let electrons = parse_usize(args.require("electrons")?, line, "electron count")?;
            name = Some((tokens[1].to_string(), electrons));
            continue;
        }

        match head {
            "modes" => {
                modes = Some(tokens[1..].iter().map(|t| Mode::from(*t)).collect());
                continue;
            }
            "input" | "output" => {
                if tokens.len() != 2 {
                    return Err(CircuitFileError::Syntax {
                        line,
                        detail: format!("expected: {head} <mode>"),
                    });
                }
                if head == "input" {
                    input_mode = Some(Mode::from(tokens[1]));
                } else {
                    output_mode = Some(Mode::from(tokens[1]));
                }
                continue;
            }
            _ => {}
        }

        let declared = modes
            .as_ref()
            .ok_or(CircuitFileError::MissingDeclaration("modes"))?;
        let check_mode = |mode: &Mode| -> Result<(), CircuitFileError> {
            if declared.contains(mode) {
                Ok(())
            } else {
                Err(CircuitFileError::UndeclaredMode {
                    mode: mode.to_string(),
                    line,
                })
            }
        };

        let args = split_pairs(&tokens[1..], line)?;
        let op = match head {
            "pbs" => {
                let ins: Vec<Mode> = args
                    .require("in")?
                    .split(',')
                    .map(Mode::from)
                    .collect();
                let transmit: Vec<(Mode, Direction)> = args
                    .require("transmit")?
                    .split(',')
                    .map(|t| parse_target(t, line))
                    .collect::<Result<_, _>>()?;
                let reflect: Vec<(Mode, Direction)> = args
                    .require("reflect")?
                    .split(',')
                    .map(|t| parse_target(t, line))
                    .collect::<Result<_, _>>()?;
                if ins.len() != transmit.len() || ins.len() != reflect.len() {
                    return Err(CircuitFileError::Syntax {
                        line,
                        detail: "in/transmit/reflect lists differ in length".to_string(),
                    });
                }
                let ports: Vec<PbsPort> = ins
                    .into_iter()
                    .zip(transmit)
                    .zip(reflect)
                    .map(|((input, (tm, td)), (rm, rd))| PbsPort {
                        input,
                        transmit: tm,
                        transmit_dir: td,
                        reflect: rm,
                        reflect_dir: rd,
                    })
                    .collect();
                for p in &ports {
                    check_mode(&p.input)?;
                    check_mode(&p.transmit)?;
                    check_mode(&p.reflect)?;
                }
                ElementOp::Pbs { ports }
            }
            "hwp" => {
                let port = Mode::from(args.require("port")?);
                check_mode(&port)?;
                ElementOp::Hwp { port }
            }
            "phase" => {
                let port = Mode::from(args.require("port")?);
                check_mode(&port)?;
                ElementOp::PhaseShift {
                    port,
                    phi: parse_phi(args.require("phi")?, line)?,
                }
            }
            "spinh" => ElementOp::SpinHadamard {
                spin: parse_usize(args.require("spin")?, line, "spin index")?,
            },
            "switch" => {
                let port = Mode::from(args.require("port")?);
                let target = Mode::from(args.require("out")?);
                check_mode(&port)?;
                check_mode(&target)?;
                ElementOp::Switch { port, target }
            }
            "delay" => {
                let port = Mode::from(args.require("port")?);
                check_mode(&port)?;
                ElementOp::Delay { port }
            }
            "cavity" => {
                let (port_a, entry_a) = parse_target(args.require("porta")?, line)?;
                let port_b = Mode::from(args.require("portb")?);
                check_mode(&port_a)?;
                check_mode(&port_b)?;
                ElementOp::Cavity {
                    cavity: args.require("id")?.to_string(),
                    spin: parse_usize(args.require("spin")?, line, "spin index")?,
                    port_a,
                    entry_a,
                    port_b,
                }
            }
            other => {
                return Err(CircuitFileError::UnknownElement {
                    name: other.to_string(),
                    line,
                })
            }
        };

        let checkpoint = args.get("checkpoint").map(|t| t.to_string());
        if let Some(tag) = &checkpoint {
            if !tags.insert(tag.clone()) {
                return Err(CircuitFileError::DuplicateCheckpoint {
                    tag: tag.clone(),
                    line,
                });
            }
        }
        stages.push(Stage { op, checkpoint });
    }

    let (name, electron_count) = name.ok_or(CircuitFileError::MissingHeader)?;
    let modes = modes.ok_or(CircuitFileError::MissingDeclaration("modes"))?;
    let input_mode = input_mode.ok_or(CircuitFileError::MissingDeclaration("input"))?;
    let output_mode = output_mode.ok_or(CircuitFileError::MissingDeclaration("output"))?;
    Ok(CircuitSpec {
        name,
        electron_count,
        modes,
        input_mode,
        output_mode,
        stages,
    })
}
