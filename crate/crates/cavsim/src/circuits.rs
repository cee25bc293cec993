//! Unrolled circuit programs for the CNOT, Toffoli, and Fredkin gates,
//! executable against the ideal or lossy cavity model.
//!
//! Circuits are straight-line: cavity revisits and Fredkin rounds appear as
//! repeated stages. Stage checkpoints tag the points where the intermediate
//! state has a known closed form, so a run can be audited stage by stage.
//!
//! Wiring conventions shared by all three builders: a splitting PBS sends R
//! to the path entering the cavity against z and L to the path entering along
//! z; reflection at the cavity flips polarization and direction, so after the
//! interaction each loop path carries a single polarization and the loop PBS
//! recombines both packets onto one outgoing mode. The final PBS merges the
//! direct rail (R) with the loop rail (L) onto the output mode; in the lossy
//! model the orthogonal remainders exit on its second port ("out2").

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::ScatterCoefficients;
use crate::elements::{
    make_delay, make_hwp, make_pbs, make_phase_shift, make_spin_hadamard, ElementError,
    ElementMap, PortTarget,
};
use crate::state::{
    BasisLabel, Direction, HybridState, Mode, PhotonLabel, Polarization, Spin, SpinConfig,
};

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("element error at stage {stage} ({element}): {source}")]
    Element {
        stage: usize,
        element: String,
        source: ElementError,
    },
    #[error("stage {stage} references undeclared mode {mode}")]
    UndeclaredMode { stage: usize, mode: Mode },
    #[error("duplicate checkpoint tag {tag}")]
    DuplicateCheckpoint { tag: String },
    #[error("stage {stage} spin index {index} out of range for {electrons} electrons")]
    SpinOutOfRange {
        stage: usize,
        index: usize,
        electrons: usize,
    },
    #[error("input state must sit on mode {expected} with {electrons} electrons")]
    BadInput { expected: Mode, electrons: usize },
    #[error(transparent)]
    State(#[from] crate::state::StateError),
}

/// Which of the three gates a circuit realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Cnot,
    Toffoli,
    Fredkin,
}

impl GateKind {
    pub fn electron_count(self) -> usize {
        match self {
            GateKind::Cnot => 1,
            GateKind::Toffoli | GateKind::Fredkin => 2,
        }
    }

    /// Number of cavity traversals made by the L branch (the exponents of the
    /// closed-form efficiencies).
    pub fn cavity_passes(self) -> u32 {
        match self {
            GateKind::Cnot => 1,
            GateKind::Toffoli => 3,
            GateKind::Fredkin => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Cnot => "CNOT",
            GateKind::Toffoli => "Toffoli",
            GateKind::Fredkin => "Fredkin",
        }
    }

    pub fn build(self) -> CircuitSpec {
        match self {
            GateKind::Cnot => build_cnot(),
            GateKind::Toffoli => build_toffoli(),
            GateKind::Fredkin => build_fredkin(),
        }
    }

    pub fn parse(name: &str) -> Option<GateKind> {
        match name.to_ascii_lowercase().as_str() {
            "cnot" => Some(GateKind::Cnot),
            "toffoli" => Some(GateKind::Toffoli),
            "fredkin" => Some(GateKind::Fredkin),
            _ => None,
        }
    }
}

/// One PBS assignment inside a stage description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbsPort {
    pub input: Mode,
    pub transmit: Mode,
    pub transmit_dir: Direction,
    pub reflect: Mode,
    pub reflect_dir: Direction,
}

/// Data-only description of one circuit element application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElementOp {
    Pbs { ports: Vec<PbsPort> },
    Hwp { port: Mode },
    PhaseShift { port: Mode, phi: f64 },
    SpinHadamard { spin: usize },
    Switch { port: Mode, target: Mode },
    Delay { port: Mode },
    Cavity {
        cavity: String,
        spin: usize,
        port_a: Mode,
        entry_a: Direction,
        port_b: Mode,
    },
}

impl ElementOp {
    pub fn name(&self) -> &'static str {
        match self {
            ElementOp::Pbs { .. } => "pbs",
            ElementOp::Hwp { .. } => "hwp",
            ElementOp::PhaseShift { .. } => "phase",
            ElementOp::SpinHadamard { .. } => "spinh",
            ElementOp::Switch { .. } => "switch",
            ElementOp::Delay { .. } => "delay",
            ElementOp::Cavity { .. } => "cavity",
        }
    }

    fn modes(&self) -> Vec<Mode> {
        match self {
            ElementOp::Pbs { ports } => ports
                .iter()
                .flat_map(|p| [p.input.clone(), p.transmit.clone(), p.reflect.clone()])
                .collect(),
            ElementOp::Hwp { port }
            | ElementOp::PhaseShift { port, .. }
            | ElementOp::Delay { port } => vec![port.clone()],
            ElementOp::Switch { port, target } => vec![port.clone(), target.clone()],
            ElementOp::Cavity { port_a, port_b, .. } => vec![port_a.clone(), port_b.clone()],
            ElementOp::SpinHadamard { .. } => vec![],
        }
    }

    fn spin_index(&self) -> Option<usize> {
        match self {
            ElementOp::SpinHadamard { spin } => Some(*spin),
            ElementOp::Cavity { spin, .. } => Some(*spin),
            _ => None,
        }
    }

    /// Compile the description into an applicable linear map under the given
    /// cavity model. `leak_sink` tags this stage's loss sink when tracking is
    /// on.
    pub fn compile(
        &self,
        model: &CavityModel,
        leak_sink: Option<String>,
    ) -> Result<ElementMap, ElementError> {
        match self {
            ElementOp::Pbs { ports } => {
                let inputs: Vec<Mode> = ports.iter().map(|p| p.input.clone()).collect();
                let transmit: Vec<PortTarget> = ports
                    .iter()
                    .map(|p| PortTarget {
                        mode: p.transmit.clone(),
                        set_direction: Some(p.transmit_dir),
                    })
                    .collect();
                let reflect: Vec<PortTarget> = ports
                    .iter()
                    .map(|p| PortTarget {
                        mode: p.reflect.clone(),
                        set_direction: Some(p.reflect_dir),
                    })
                    .collect();
                make_pbs(&inputs, &transmit, &reflect)
            }
            ElementOp::Hwp { port } => Ok(make_hwp(port.clone())),
            ElementOp::PhaseShift { port, phi } => Ok(make_phase_shift(port.clone(), *phi)),
            ElementOp::SpinHadamard { spin } => Ok(make_spin_hadamard(*spin)),
            ElementOp::Switch { port, target } => Ok(crate::elements::make_switch(
                port.clone(),
                target.clone(),
                target.clone(),
                true,
            )),
            ElementOp::Delay { port } => Ok(make_delay(port.clone())),
            ElementOp::Cavity {
                cavity,
                spin,
                port_a,
                entry_a,
                port_b,
            } => match model {
                CavityModel::Ideal => Ok(crate::cavity::ideal_cavity_map(
                    cavity.clone(),
                    *spin,
                    port_a.clone(),
                    *entry_a,
                    port_b.clone(),
                )),
                CavityModel::Lossy(coeffs) => Ok(crate::cavity::lossy_cavity_map(
                    cavity.clone(),
                    *spin,
                    port_a.clone(),
                    *entry_a,
                    port_b.clone(),
                    coeffs,
                    leak_sink,
                )),
            },
        }
    }
}

/// One stage of an unrolled circuit, optionally tagged as a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub op: ElementOp,
    pub checkpoint: Option<String>,
}

impl Stage {
    pub fn new(op: ElementOp) -> Self {
        Stage { op, checkpoint: None }
    }

    pub fn tagged(op: ElementOp, tag: &str) -> Self {
        Stage {
            op,
            checkpoint: Some(tag.to_string()),
        }
    }
}

/// Ordered, unrolled circuit program with declared mode set and port wiring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub name: String,
    pub electron_count: usize,
    pub modes: BTreeSet<Mode>,
    pub input_mode: Mode,
    pub output_mode: Mode,
    pub stages: Vec<Stage>,
}

impl CircuitSpec {
    /// Check mode declarations, checkpoint uniqueness, and spin ranges.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut tags = BTreeSet::new();
        for (i, stage) in self.stages.iter().enumerate() {
            for mode in stage.op.modes() {
                if !self.modes.contains(&mode) {
                    return Err(CircuitError::UndeclaredMode { stage: i, mode });
                }
            }
            if let Some(spin) = stage.op.spin_index() {
                if spin >= self.electron_count {
                    return Err(CircuitError::SpinOutOfRange {
                        stage: i,
                        index: spin,
                        electrons: self.electron_count,
                    });
                }
            }
            if let Some(tag) = &stage.checkpoint {
                if !tags.insert(tag.clone()) {
                    return Err(CircuitError::DuplicateCheckpoint { tag: tag.clone() });
                }
            }
        }
        Ok(())
    }

    pub fn checkpoint_tags(&self) -> Vec<String> {
        self.stages
            .iter()
            .filter_map(|s| s.checkpoint.clone())
            .collect()
    }
}

/// Cavity model a circuit runs against.
#[derive(Debug, Clone, PartialEq)]
pub enum CavityModel {
    Ideal,
    Lossy(ScatterCoefficients),
}

impl CavityModel {
    pub fn is_lossy(&self) -> bool {
        matches!(self, CavityModel::Lossy(_))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Route per-stage loss deficits onto tagged "leaked:<stage>" sinks.
    pub track_leakage: bool,
}

/// Result of a circuit run. `survival` multiplies, per cavity stage, the
/// amplitude-weighted photon survival probability of the amplitude entering
/// that stage; it is 1 for the ideal model.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: HybridState,
    pub survival: f64,
}

/// States captured at every tagged checkpoint, in execution order.
#[derive(Debug, Clone)]
pub struct StageTrace {
    pub entries: Vec<(String, HybridState)>,
}

impl StageTrace {
    pub fn get(&self, tag: &str) -> Option<&HybridState> {
        self.entries
            .iter()
            .find(|(t, _)| t == tag)
            .map(|(_, s)| s)
    }
}

fn check_input(circuit: &CircuitSpec, input: &HybridState) -> Result<(), CircuitError> {
    let ok = input.terms().all(|(label, _)| {
        label.photon.path == circuit.input_mode && label.spins.len() == circuit.electron_count
    });
    if ok && !input.is_empty() {
        Ok(())
    } else {
        Err(CircuitError::BadInput {
            expected: circuit.input_mode.clone(),
            electrons: circuit.electron_count,
        })
    }
}

/// Amplitude-weighted survival factor for the amplitude entering one cavity
/// stage, relative to the whole state.
fn stage_survival(state: &HybridState, map: &ElementMap) -> f64 {
    let cav = match map.cavity_map() {
        Some(c) => c,
        None => return 1.0,
    };
    let mags = match &cav.mags {
        Some(m) => m,
        None => return 1.0,
    };
    let total = state.squared_norm();
    if total <= 0.0 {
        return 1.0;
    }
    let mut entering = 0.0;
    let mut surviving = 0.0;
    for (label, amp) in state.terms() {
        let on_a = label.photon.path == cav.port_a;
        let on_b = label.photon.path == cav.port_b;
        if !on_a && !on_b {
            continue;
        }
        let entry = if on_a { cav.entry_a } else { cav.entry_a.flipped() };
        let spin = label.spins.get(cav.spin_index).unwrap_or(Spin::Up);
        let weight = amp.norm_sqr();
        let s = if crate::cavity::couples(label.photon.polarization, entry, spin) {
            mags.survival_hot()
        } else {
            mags.survival_cold()
        };
        entering += weight;
        surviving += weight * s;
    }
    ((total - entering) + surviving) / total
}

fn execute(
    circuit: &CircuitSpec,
    input: &HybridState,
    model: &CavityModel,
    options: RunOptions,
    mut tap: Option<&mut StageTrace>,
) -> Result<RunOutcome, CircuitError> {
    circuit.validate()?;
    check_input(circuit, input)?;
    let mut state = input.clone();
    let mut survival = 1.0;
    for (i, stage) in circuit.stages.iter().enumerate() {
        let sink = options.track_leakage.then(|| format!("stage{i}"));
        let map = stage
            .op
            .compile(model, sink)
            .map_err(|source| CircuitError::Element {
                stage: i,
                element: stage.op.name().to_string(),
                source,
            })?;
        if model.is_lossy() {
            survival *= stage_survival(&state, &map);
        }
        state = map.apply(&state).map_err(|source| CircuitError::Element {
            stage: i,
            element: stage.op.name().to_string(),
            source,
        })?;
        if let (Some(trace), Some(tag)) = (tap.as_deref_mut(), &stage.checkpoint) {
            trace.entries.push((tag.clone(), state.clone()));
        }
    }
    Ok(RunOutcome { state, survival })
}

/// Sequential application of all stage maps.
pub fn run_circuit(
    circuit: &CircuitSpec,
    input: &HybridState,
    model: &CavityModel,
) -> Result<HybridState, CircuitError> {
    execute(circuit, input, model, RunOptions::default(), None).map(|o| o.state)
}

pub fn run_circuit_full(
    circuit: &CircuitSpec,
    input: &HybridState,
    model: &CavityModel,
    options: RunOptions,
) -> Result<RunOutcome, CircuitError> {
    execute(circuit, input, model, options, None)
}

/// Run while capturing the state at every tagged checkpoint.
pub fn run_with_trace(
    circuit: &CircuitSpec,
    input: &HybridState,
    model: &CavityModel,
) -> Result<(RunOutcome, StageTrace), CircuitError> {
    let mut trace = StageTrace { entries: vec![] };
    let outcome = execute(circuit, input, model, RunOptions::default(), Some(&mut trace))?;
    Ok((outcome, trace))
}

/// Computational basis of a gate: {R, L} x {up, down}^n, photon-major, first
/// electron next.
pub fn computational_basis(electron_count: usize) -> Vec<(Polarization, SpinConfig)> {
    let mut basis = vec![];
    for pol in [Polarization::R, Polarization::L] {
        for bits in 0..(1usize << electron_count) {
            let spins: Vec<Spin> = (0..electron_count)
                .map(|i| {
                    if bits >> (electron_count - 1 - i) & 1 == 0 {
                        Spin::Up
                    } else {
                        Spin::Down
                    }
                })
                .collect();
            basis.push((pol, SpinConfig::new(spins)));
        }
    }
    basis
}

/// Basis input state on the circuit's injection mode.
pub fn basis_input(circuit: &CircuitSpec, pol: Polarization, spins: &SpinConfig) -> HybridState {
    HybridState::basis(BasisLabel::new(
        PhotonLabel {
            path: circuit.input_mode.clone(),
            polarization: pol,
            direction: Direction::AlongZ,
        },
        spins.clone(),
    ))
}

/// Gate matrix in the computational basis: column k is the circuit output on
/// basis input k, projected onto the output mode.
pub fn extract_gate_matrix(
    circuit: &CircuitSpec,
    model: &CavityModel,
) -> Result<crate::analysis::SquareMatrix, CircuitError> {
    let basis = computational_basis(circuit.electron_count);
    let dim = basis.len();
    let mut matrix = crate::analysis::SquareMatrix::zeros(dim);
    for (col, (pol, spins)) in basis.iter().enumerate() {
        let output = run_circuit(circuit, &basis_input(circuit, *pol, spins), model)?;
        for (row, (pol_out, spins_out)) in basis.iter().enumerate() {
            let label = BasisLabel::new(
                PhotonLabel {
                    path: circuit.output_mode.clone(),
                    polarization: *pol_out,
                    direction: Direction::AlongZ,
                },
                spins_out.clone(),
            );
            matrix.set(row, col, output.amplitude(&label));
        }
    }
    Ok(matrix)
}

const ALONG: Direction = Direction::AlongZ;
const AGAINST: Direction = Direction::AgainstZ;

fn pbs1(input: &str, transmit: &str, tdir: Direction, reflect: &str, rdir: Direction) -> ElementOp {
    ElementOp::Pbs {
        ports: vec![PbsPort {
            input: Mode::from(input),
            transmit: Mode::from(transmit),
            transmit_dir: tdir,
            reflect: Mode::from(reflect),
            reflect_dir: rdir,
        }],
    }
}

/// Two-input merge: R from `in_r` and L from `in_l` exit on `out`; the
/// orthogonal components exit on the second port `out2`.
fn pbs_merge(in_r: &str, in_l: &str, out: &str, out2: &str) -> ElementOp {
    ElementOp::Pbs {
        ports: vec![
            PbsPort {
                input: Mode::from(in_r),
                transmit: Mode::from(out),
                transmit_dir: ALONG,
                reflect: Mode::from(out2),
                reflect_dir: ALONG,
            },
            PbsPort {
                input: Mode::from(in_l),
                transmit: Mode::from(out2),
                transmit_dir: ALONG,
                reflect: Mode::from(out),
                reflect_dir: ALONG,
            },
        ],
    }
}

fn cavity(id: &str, spin: usize, port_a: &str, port_b: &str) -> ElementOp {
    ElementOp::Cavity {
        cavity: id.to_string(),
        spin,
        port_a: Mode::from(port_a),
        entry_a: AGAINST,
        port_b: Mode::from(port_b),
    }
}

fn modes(names: &[&str]) -> BTreeSet<Mode> {
    names.iter().map(|n| Mode::from(*n)).collect()
}

/// CNOT: photon polarization controls a flip of the single electron spin.
///
/// PBS1 splits the photon; the L packet is rotated, split across both cavity
/// entries (with a π shifter on path 4), scattered once, recombined, rotated
/// back, and merged with the direct rail at PBS3.
pub fn build_cnot() -> CircuitSpec {
    let stages = vec![
        Stage::tagged(pbs1("in", "1", ALONG, "2", ALONG), "Eq3"),
        Stage::new(ElementOp::Hwp { port: Mode::from("2") }),
        Stage::new(ElementOp::SpinHadamard { spin: 0 }),
        Stage::new(pbs1("2", "3", AGAINST, "4", ALONG)),
        Stage::tagged(
            ElementOp::PhaseShift {
                port: Mode::from("4"),
                phi: std::f64::consts::PI,
            },
            "Eq6",
        ),
        Stage::tagged(cavity("c1", 0, "3", "4"), "Eq7"),
        Stage::new(ElementOp::PhaseShift {
            port: Mode::from("4"),
            phi: std::f64::consts::PI,
        }),
        Stage::new(pbs_merge("4", "3", "5", "x1")),
        Stage::new(ElementOp::Hwp { port: Mode::from("5") }),
        Stage::new(ElementOp::SpinHadamard { spin: 0 }),
        Stage::new(ElementOp::Delay { port: Mode::from("1") }),
        Stage::tagged(pbs_merge("1", "5", "out", "out2"), "Eq8"),
    ];
    CircuitSpec {
        name: "cnot".to_string(),
        electron_count: 1,
        modes: modes(&["in", "1", "2", "3", "4", "5", "x1", "out", "out2"]),
        input_mode: Mode::from("in"),
        output_mode: Mode::from("out"),
        stages,
    }
}

/// Toffoli: the photon and the electron in cavity 1 control a flip of the
/// electron in cavity 2. The L packet scatters off cavity 1, is rotated and
/// scattered off cavity 2, rotated back, phase-shifted, and sent through
/// cavity 1 a second time before the final merge.
pub fn build_toffoli() -> CircuitSpec {
    let stages = vec![
        Stage::tagged(pbs1("in", "1", ALONG, "2", ALONG), "Eq13"),
        Stage::new(pbs1("2", "3", AGAINST, "4", ALONG)),
        Stage::tagged(cavity("c1", 0, "3", "4"), "Eq14"),
        Stage::new(pbs_merge("4", "3", "5", "x1")),
        Stage::new(ElementOp::Hwp { port: Mode::from("5") }),
        Stage::new(ElementOp::SpinHadamard { spin: 1 }),
        Stage::tagged(pbs1("5", "6", AGAINST, "7", ALONG), "Eq15"),
        Stage::tagged(cavity("c2", 1, "6", "7"), "Eq16"),
        Stage::new(pbs_merge("7", "6", "8", "x2")),
        Stage::new(ElementOp::Hwp { port: Mode::from("8") }),
        Stage::tagged(ElementOp::SpinHadamard { spin: 1 }, "Eq17"),
        Stage::new(ElementOp::PhaseShift {
            port: Mode::from("8"),
            phi: std::f64::consts::PI,
        }),
        Stage::new(pbs1("8", "9", AGAINST, "10", ALONG)),
        Stage::tagged(cavity("c1", 0, "9", "10"), "Eq18"),
        Stage::new(pbs_merge("10", "9", "11", "x3")),
        Stage::new(ElementOp::Delay { port: Mode::from("1") }),
        Stage::tagged(pbs_merge("1", "11", "out", "out2"), "Eq19"),
    ];
    CircuitSpec {
        name: "toffoli".to_string(),
        electron_count: 2,
        modes: modes(&[
            "in", "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "x1", "x2", "x3",
            "out", "out2",
        ]),
        input_mode: Mode::from("in"),
        output_mode: Mode::from("out"),
        stages,
    }
}

/// One Fredkin round: cavity 1 then cavity 2, entered from `entry`, exiting
/// on mode 8.
fn fredkin_round(entry: &str, stages: &mut Vec<Stage>, tags: [Option<&str>; 3]) {
    stages.push(Stage::new(pbs1(entry, "3", AGAINST, "4", ALONG)));
    let cav1 = cavity("c1", 0, "3", "4");
    stages.push(match tags[0] {
        Some(tag) => Stage::tagged(cav1, tag),
        None => Stage::new(cav1),
    });
    stages.push(Stage::new(pbs_merge("4", "3", "5", "x1")));
    stages.push(Stage::new(pbs1("5", "6", AGAINST, "7", ALONG)));
    let cav2 = cavity("c2", 1, "6", "7");
    stages.push(match tags[1] {
        Some(tag) => Stage::tagged(cav2, tag),
        None => Stage::new(cav2),
    });
    let merge = pbs_merge("7", "6", "8", "x2");
    stages.push(match tags[2] {
        Some(tag) => Stage::tagged(merge, tag),
        None => Stage::new(merge),
    });
}

/// Loop-back between rounds: switch mode 8 onto the rail 9 carrying the
/// wave-plate, then rotate photon and both electrons.
fn fredkin_interlude(stages: &mut Vec<Stage>, tag: Option<&str>) {
    stages.push(Stage::new(ElementOp::Switch {
        port: Mode::from("8"),
        target: Mode::from("9"),
    }));
    stages.push(Stage::new(ElementOp::Hwp { port: Mode::from("9") }));
    stages.push(Stage::new(ElementOp::SpinHadamard { spin: 0 }));
    let he2 = ElementOp::SpinHadamard { spin: 1 };
    stages.push(match tag {
        Some(t) => Stage::tagged(he2, t),
        None => Stage::new(he2),
    });
}

/// Fredkin: the photon polarization controls a swap of the two electron
/// spins. Three unrolled rounds through both cavities, with photon and spin
/// Hadamards applied entering rounds two and three.
pub fn build_fredkin() -> CircuitSpec {
    let mut stages = vec![Stage::tagged(pbs1("in", "1", ALONG, "2", ALONG), "Eq23")];
    fredkin_round("2", &mut stages, [Some("Eq25"), Some("Eq26"), Some("Eq27")]);
    fredkin_interlude(&mut stages, None);
    fredkin_round("9", &mut stages, [None, None, None]);
    fredkin_interlude(&mut stages, Some("Eq29"));
    fredkin_round("9", &mut stages, [None, None, Some("Eq30")]);
    stages.push(Stage::new(ElementOp::Switch {
        port: Mode::from("8"),
        target: Mode::from("10"),
    }));
    stages.push(Stage::new(ElementOp::Delay { port: Mode::from("1") }));
    stages.push(Stage::tagged(pbs_merge("1", "10", "out", "out2"), "Eq31"));
    CircuitSpec {
        name: "fredkin".to_string(),
        electron_count: 2,
        modes: modes(&[
            "in", "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "x1", "x2", "out", "out2",
        ]),
        input_mode: Mode::from("in"),
        output_mode: Mode::from("out"),
        stages,
    }
}

/// Coherently sum the amplitudes on the two terminal ports of the final PBS
/// onto the output mode, per (polarization, spins). This is the bookkeeping
/// under which the closed-form fidelities are defined: the merged packets are
/// labeled by polarization alone.
pub fn collapse_terminal_ports(circuit: &CircuitSpec, state: &HybridState) -> HybridState {
    let out2 = Mode::from("out2");
    let mut collapsed = HybridState::zero().with_prune_threshold(state.prune_threshold());
    for (label, amp) in state.terms() {
        if label.photon.path == circuit.output_mode || label.photon.path == out2 {
            collapsed.add_amplitude(
                BasisLabel::new(
                    PhotonLabel {
                        path: circuit.output_mode.clone(),
                        polarization: label.photon.polarization,
                        direction: Direction::AlongZ,
                    },
                    label.spins.clone(),
                ),
                *amp,
            );
        } else {
            collapsed.add_amplitude(label.clone(), *amp);
        }
    }
    collapsed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{resonant_coefficients, CavityParams};
    use crate::state::Polarization::*;
    use crate::state::Spin::*;
    use crate::state::C64;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn out_label(circuit: &CircuitSpec, pol: Polarization, spins: &[Spin]) -> BasisLabel {
        BasisLabel::new(
            PhotonLabel {
                path: circuit.output_mode.clone(),
                polarization: pol,
                direction: Direction::AlongZ,
            },
            SpinConfig::new(spins.to_vec()),
        )
    }

    #[test]
    fn builders_validate() {
        for circuit in [build_cnot(), build_toffoli(), build_fredkin()] {
            circuit.validate().unwrap();
        }
    }

    #[test]
    fn cnot_flips_spin_when_photon_is_l() {
        let circuit = build_cnot();
        let input = basis_input(&circuit, L, &SpinConfig::new(vec![Up]));
        let output = run_circuit(&circuit, &input, &CavityModel::Ideal).unwrap();
        assert!((output.amplitude(&out_label(&circuit, L, &[Down])) - c(1.0)).norm() < 1e-12);
        assert!((output.squared_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cnot_leaves_r_branch_unchanged() {
        let circuit = build_cnot();
        let h = c(std::f64::consts::FRAC_1_SQRT_2);
        let input = basis_input(&circuit, R, &SpinConfig::new(vec![Up]))
            .scaled(h)
            .sum(&basis_input(&circuit, R, &SpinConfig::new(vec![Down])).scaled(h));
        let output = run_circuit(&circuit, &input, &CavityModel::Ideal).unwrap();
        assert!((output.amplitude(&out_label(&circuit, R, &[Up])) - h).norm() < 1e-12);
        assert!((output.amplitude(&out_label(&circuit, R, &[Down])) - h).norm() < 1e-12);
    }

    #[test]
    fn toffoli_flips_target_only_for_l_and_down_control() {
        let circuit = build_toffoli();
        let model = CavityModel::Ideal;
        let output = run_circuit(
            &circuit,
            &basis_input(&circuit, L, &SpinConfig::new(vec![Down, Up])),
            &model,
        )
        .unwrap();
        assert!((output.amplitude(&out_label(&circuit, L, &[Down, Down])) - c(1.0)).norm() < 1e-12);

        // control spin up blocks the flip
        let output = run_circuit(
            &circuit,
            &basis_input(&circuit, L, &SpinConfig::new(vec![Up, Down])),
            &model,
        )
        .unwrap();
        assert!((output.amplitude(&out_label(&circuit, L, &[Up, Down])) - c(1.0)).norm() < 1e-12);

        // photon R leaves every spin configuration unchanged
        for spins in [[Up, Up], [Up, Down], [Down, Up], [Down, Down]] {
            let output = run_circuit(
                &circuit,
                &basis_input(&circuit, R, &SpinConfig::new(spins.to_vec())),
                &model,
            )
            .unwrap();
            assert!((output.amplitude(&out_label(&circuit, R, &spins)) - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn fredkin_swaps_spins_when_photon_is_l() {
        let circuit = build_fredkin();
        let model = CavityModel::Ideal;
        let output = run_circuit(
            &circuit,
            &basis_input(&circuit, L, &SpinConfig::new(vec![Up, Down])),
            &model,
        )
        .unwrap();
        assert!((output.amplitude(&out_label(&circuit, L, &[Down, Up])) - c(1.0)).norm() < 1e-12);

        let output = run_circuit(
            &circuit,
            &basis_input(&circuit, R, &SpinConfig::new(vec![Up, Down])),
            &model,
        )
        .unwrap();
        assert!((output.amplitude(&out_label(&circuit, R, &[Up, Down])) - c(1.0)).norm() < 1e-12);

        // symmetric configurations are fixed points of the swap
        let output = run_circuit(
            &circuit,
            &basis_input(&circuit, L, &SpinConfig::new(vec![Up, Up])),
            &model,
        )
        .unwrap();
        assert!((output.amplitude(&out_label(&circuit, L, &[Up, Up])) - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn empty_stage_list_returns_input_unchanged() {
        let circuit = CircuitSpec {
            name: "empty".to_string(),
            electron_count: 1,
            modes: modes(&["in", "out"]),
            input_mode: Mode::from("in"),
            output_mode: Mode::from("out"),
            stages: vec![],
        };
        let input = basis_input(&circuit, R, &SpinConfig::new(vec![Up]));
        let output = run_circuit(&circuit, &input, &CavityModel::Ideal).unwrap();
        assert!(output.max_deviation(&input) < 1e-15);
    }

    #[test]
    fn ideal_runs_never_touch_the_secondary_terminal_port() {
        for circuit in [build_cnot(), build_toffoli(), build_fredkin()] {
            for (pol, spins) in computational_basis(circuit.electron_count) {
                let output =
                    run_circuit(&circuit, &basis_input(&circuit, pol, &spins), &CavityModel::Ideal)
                        .unwrap();
                let support = output.support();
                assert_eq!(support.len(), 1, "{}: support {support:?}", circuit.name);
                assert!(support.contains(&circuit.output_mode));
            }
        }
    }

    #[test]
    fn cnot_stage_support_follows_the_diagram() {
        // photon-path exclusivity: occupied modes per stage for an L input
        let circuit = build_cnot();
        let input = basis_input(&circuit, L, &SpinConfig::new(vec![Up]));
        let model = CavityModel::Ideal;
        let mut state = input;
        let expected: Vec<Vec<&str>> = vec![
            vec!["2"],        // PBS1
            vec!["2"],        // HWP
            vec!["2"],        // He
            vec!["3", "4"],   // PBS2 split
            vec!["3", "4"],   // P_pi
            vec!["3", "4"],   // cavity
            vec!["3", "4"],   // P_pi
            vec!["5"],        // PBS2 merge
            vec!["5"],        // HWP
            vec!["5"],        // He
            vec!["5"],        // DL (on mode 1)
            vec!["out"],      // PBS3 merge
        ];
        for (stage, expect) in circuit.stages.iter().zip(expected) {
            let map = stage.op.compile(&model, None).unwrap();
            state = map.apply(&state).unwrap();
            let support = state.support();
            let expect: BTreeSet<Mode> = expect.into_iter().map(Mode::from).collect();
            assert_eq!(support, expect, "after {}", stage.op.name());
        }
    }

    #[test]
    fn one_fredkin_round_realizes_the_round_matrix() {
        // the single-round action on the L branch, in the basis
        // (R,L) x (spin1) x (spin2), is the published 8x8 round matrix
        let mut stages = vec![];
        fredkin_round("9", &mut stages, [None, None, None]);
        let circuit = CircuitSpec {
            name: "fredkin-round".to_string(),
            electron_count: 2,
            modes: modes(&["9", "3", "4", "5", "6", "7", "8", "x1", "x2"]),
            input_mode: Mode::from("9"),
            output_mode: Mode::from("8"),
            stages,
        };
        let matrix = extract_gate_matrix(&circuit, &CavityModel::Ideal).unwrap();
        let mut expected = crate::analysis::SquareMatrix::zeros(8);
        let entries: [(usize, usize, f64); 8] = [
            (0, 0, 1.0),
            (5, 1, -1.0),
            (6, 2, -1.0),
            (3, 3, 1.0),
            (4, 4, 1.0),
            (1, 5, -1.0),
            (2, 6, -1.0),
            (7, 7, 1.0),
        ];
        for (row, col, v) in entries {
            expected.set(row, col, c(v));
        }
        assert!(matrix.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn lossy_cnot_run_keeps_unit_survival_norm_structure() {
        let coeffs =
            resonant_coefficients(&CavityParams::resonant(0.5, 0.25, 0.1)).unwrap();
        let circuit = build_cnot();
        let input = basis_input(&circuit, L, &SpinConfig::new(vec![Up]));
        let outcome = run_circuit_full(
            &circuit,
            &input,
            &CavityModel::Lossy(coeffs),
            RunOptions::default(),
        )
        .unwrap();
        // single cold+hot mixed pass: survival is the mean pass survival
        let expected = coeffs.magnitudes().mean_survival();
        assert!((outcome.survival - expected).abs() < 1e-12);
    }

    #[test]
    fn leak_tracking_routes_deficit_onto_stage_sinks() {
        let coeffs =
            resonant_coefficients(&CavityParams::resonant(0.5, 0.25, 0.1)).unwrap();
        let circuit = build_cnot();
        let input = basis_input(&circuit, L, &SpinConfig::new(vec![Up]));
        let outcome = run_circuit_full(
            &circuit,
            &input,
            &CavityModel::Lossy(coeffs),
            RunOptions { track_leakage: true },
        )
        .unwrap();
        let leaked = outcome.state.leaked_norm();
        // one pass over an equal cold/hot mixture
        let m = coeffs.magnitudes();
        let expected = 1.0 - m.mean_survival();
        assert!((leaked - expected).abs() < 1e-12);
    }

    #[test]
    fn undeclared_mode_is_rejected() {
        let mut circuit = build_cnot();
        circuit.stages.push(Stage::new(ElementOp::Hwp {
            port: Mode::from("99"),
        }));
        assert!(matches!(
            circuit.validate(),
            Err(CircuitError::UndeclaredMode { .. })
        ));
    }

    #[test]
    fn wrong_input_mode_is_rejected() {
        let circuit = build_cnot();
        let input = HybridState::basis(BasisLabel::new(
            PhotonLabel::new(R, "5", Direction::AlongZ),
            SpinConfig::new(vec![Up]),
        ));
        assert!(matches!(
            run_circuit(&circuit, &input, &CavityModel::Ideal),
            Err(CircuitError::BadInput { .. })
        ));
    }
}
