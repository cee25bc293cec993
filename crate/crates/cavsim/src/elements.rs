//! Linear maps for the circuit elements: polarizing beam splitters, half-wave
//! plates, phase shifters, optical switches, delay lines, electron-spin
//! Hadamards, and the cavity interaction itself.
//!
//! An [`ElementMap`] is a partial linear map over basis labels. Photon
//! elements declare the path modes they act on; amplitude on an undeclared
//! mode passes through as identity, while amplitude on a declared mode with
//! no route is an error (it means the circuit wiring is wrong).

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::cavity::{ideal_scatter, lossy_scatter, CoeffMagnitudes};
use crate::state::{BasisLabel, Direction, HybridState, Mode, PhotonLabel, Polarization, Spin, C64};

pub const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Error, PartialEq)]
pub enum ElementError {
    #[error("amplitude on declared port ({polarization}, {mode}) has no route")]
    UnroutedAmplitude {
        polarization: Polarization,
        mode: Mode,
    },
    #[error("spin index {index} out of range for {spin_count} electrons")]
    SpinIndexOutOfRange { index: usize, spin_count: usize },
    #[error("overlapping port assignment: {detail}")]
    OverlappingPorts { detail: String },
    #[error("transmit/reflect port lists must match the input list length")]
    MismatchedPortLists,
    #[error("cavity ports must be distinct")]
    DegenerateCavityPorts,
}

/// Element kinds, mirroring the circuit diagrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Pbs,
    Hwp,
    PhaseShift,
    Switch,
    Delay,
    SpinHadamard,
    CavityIdeal,
    CavityLossy,
}

/// Output of one photon route: polarization, mode, direction handling, amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonTerm {
    pub polarization: Polarization,
    pub mode: Mode,
    pub direction: DirAction,
    pub amplitude: C64,
}

/// What a route does to the propagation-direction label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirAction {
    /// Carry the incoming label through.
    Keep,
    /// Overwrite with a fixed direction (used where the wiring fixes the
    /// geometry, e.g. on cavity entry paths and at recombination ports).
    Set(Direction),
}

impl DirAction {
    fn resolve(self, incoming: Direction) -> Direction {
        match self {
            DirAction::Keep => incoming,
            DirAction::Set(d) => d,
        }
    }
}

/// Target port of one PBS assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PortTarget {
    pub mode: Mode,
    pub set_direction: Option<Direction>,
}

impl PortTarget {
    pub fn new(mode: impl Into<String>, set_direction: Option<Direction>) -> Self {
        PortTarget {
            mode: Mode::new(mode),
            set_direction,
        }
    }
}

/// Cavity interaction data: two ports on opposite mirrors plus the electron
/// index. `entry_a` is the propagation direction of a photon entering through
/// `port_a`; `port_b` is entered moving the opposite way. `mags: None` is the
/// ideal unit; `Some` applies the lossy rules.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityMap {
    pub cavity_id: String,
    pub spin_index: usize,
    pub port_a: Mode,
    pub entry_a: Direction,
    pub port_b: Mode,
    pub mags: Option<CoeffMagnitudes>,
    pub leak_sink: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum MapInner {
    Photon {
        domain: BTreeSet<Mode>,
        routes: BTreeMap<(Polarization, Mode), Vec<PhotonTerm>>,
    },
    Spin {
        index: usize,
        // matrix[out][in] over the (up, down) basis
        matrix: [[C64; 2]; 2],
    },
    Cavity(CavityMap),
}

/// A linear map over hybrid basis labels, total over its declared ports and
/// identity elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMap {
    kind: ElementKind,
    inner: MapInner,
}

impl ElementMap {
    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub(crate) fn cavity(map: CavityMap) -> ElementMap {
        let kind = if map.mags.is_some() {
            ElementKind::CavityLossy
        } else {
            ElementKind::CavityIdeal
        };
        ElementMap {
            kind,
            inner: MapInner::Cavity(map),
        }
    }

    fn photon(kind: ElementKind, routes: BTreeMap<(Polarization, Mode), Vec<PhotonTerm>>) -> Self {
        let domain = routes.keys().map(|(_, m)| m.clone()).collect();
        ElementMap {
            kind,
            inner: MapInner::Photon { domain, routes },
        }
    }

    /// Modes the cavity variant scatters on, if any.
    pub fn cavity_ports(&self) -> Option<(&Mode, &Mode)> {
        match &self.inner {
            MapInner::Cavity(c) => Some((&c.port_a, &c.port_b)),
            _ => None,
        }
    }

    pub fn cavity_map(&self) -> Option<&CavityMap> {
        match &self.inner {
            MapInner::Cavity(c) => Some(c),
            _ => None,
        }
    }

    /// Linear extension of the element to a full state.
    pub fn apply(&self, state: &HybridState) -> Result<HybridState, ElementError> {
        let mut out = HybridState::zero().with_prune_threshold(state.prune_threshold());
        match &self.inner {
            MapInner::Photon { domain, routes } => {
                for (label, amp) in state.terms() {
                    let photon = &label.photon;
                    if !domain.contains(&photon.path) {
                        out.add_amplitude(label.clone(), *amp);
                        continue;
                    }
                    let key = (photon.polarization, photon.path.clone());
                    let terms =
                        routes
                            .get(&key)
                            .ok_or_else(|| ElementError::UnroutedAmplitude {
                                polarization: photon.polarization,
                                mode: photon.path.clone(),
                            })?;
                    for term in terms {
                        let new_photon = PhotonLabel {
                            path: term.mode.clone(),
                            polarization: term.polarization,
                            direction: term.direction.resolve(photon.direction),
                        };
                        out.add_amplitude(
                            BasisLabel::new(new_photon, label.spins.clone()),
                            amp * term.amplitude,
                        );
                    }
                }
            }
            MapInner::Spin { index, matrix } => {
                for (label, amp) in state.terms() {
                    let spin =
                        label
                            .spins
                            .get(*index)
                            .ok_or(ElementError::SpinIndexOutOfRange {
                                index: *index,
                                spin_count: label.spins.len(),
                            })?;
                    let col = match spin {
                        Spin::Up => 0,
                        Spin::Down => 1,
                    };
                    for (row, new_spin) in [(0, Spin::Up), (1, Spin::Down)] {
                        let coeff = matrix[row][col];
                        if coeff.norm() == 0.0 {
                            continue;
                        }
                        let new_label = BasisLabel::new(
                            label.photon.clone(),
                            label.spins.with_spin(*index, new_spin),
                        );
                        out.add_amplitude(new_label, amp * coeff);
                    }
                }
            }
            MapInner::Cavity(cav) => {
                for (label, amp) in state.terms() {
                    let photon = &label.photon;
                    let on_a = photon.path == cav.port_a;
                    let on_b = photon.path == cav.port_b;
                    if !on_a && !on_b {
                        out.add_amplitude(label.clone(), *amp);
                        continue;
                    }
                    let spin =
                        label
                            .spins
                            .get(cav.spin_index)
                            .ok_or(ElementError::SpinIndexOutOfRange {
                                index: cav.spin_index,
                                spin_count: label.spins.len(),
                            })?;
                    let entry = if on_a {
                        cav.entry_a
                    } else {
                        cav.entry_a.flipped()
                    };
                    let terms = match &cav.mags {
                        None => ideal_scatter(photon.polarization, entry, spin),
                        Some(m) => lossy_scatter(photon.polarization, entry, spin, m),
                    };
                    let mut survived = 0.0;
                    for (pol, dir, coeff) in terms {
                        // direction kept means transmitted to the other port;
                        // direction flipped means reflected back out the same port
                        let port = if dir == entry {
                            if on_a {
                                cav.port_b.clone()
                            } else {
                                cav.port_a.clone()
                            }
                        } else {
                            photon.path.clone()
                        };
                        survived += coeff * coeff;
                        out.add_amplitude(
                            BasisLabel::new(
                                PhotonLabel {
                                    path: port,
                                    polarization: pol,
                                    direction: dir,
                                },
                                label.spins.clone(),
                            ),
                            amp * coeff,
                        );
                    }
                    if let Some(tag) = &cav.leak_sink {
                        let deficit = (1.0 - survived).max(0.0);
                        if deficit > 0.0 {
                            let sink = if tag.is_empty() {
                                Mode::new("leaked")
                            } else {
                                Mode::new(format!("leaked:{tag}"))
                            };
                            out.add_amplitude(
                                BasisLabel::new(
                                    PhotonLabel {
                                        path: sink,
                                        polarization: photon.polarization,
                                        direction: entry,
                                    },
                                    label.spins.clone(),
                                ),
                                amp * deficit.sqrt(),
                            );
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Polarizing beam splitter: R transmits in_k -> transmit_k, L reflects
/// in_k -> reflect_k, unit amplitude, no phase. Optional per-target direction
/// assignment pins the geometry on cavity entry paths.
pub fn make_pbs(
    in_ports: &[Mode],
    transmit: &[PortTarget],
    reflect: &[PortTarget],
) -> Result<ElementMap, ElementError> {
    if in_ports.len() != transmit.len() || in_ports.len() != reflect.len() {
        return Err(ElementError::MismatchedPortLists);
    }
    let mut seen_in = BTreeSet::new();
    for port in in_ports {
        if !seen_in.insert(port.clone()) {
            return Err(ElementError::OverlappingPorts {
                detail: format!("input port {port} listed twice"),
            });
        }
    }
    for (pol, targets) in [(Polarization::R, transmit), (Polarization::L, reflect)] {
        let mut seen = BTreeSet::new();
        for target in targets {
            if !seen.insert(target.mode.clone()) {
                return Err(ElementError::OverlappingPorts {
                    detail: format!("{pol} output port {} assigned twice", target.mode),
                });
            }
        }
    }

    let mut routes = BTreeMap::new();
    for (k, input) in in_ports.iter().enumerate() {
        for (pol, target) in [(Polarization::R, &transmit[k]), (Polarization::L, &reflect[k])] {
            routes.insert(
                (pol, input.clone()),
                vec![PhotonTerm {
                    polarization: pol,
                    mode: target.mode.clone(),
                    direction: target
                        .set_direction
                        .map(DirAction::Set)
                        .unwrap_or(DirAction::Keep),
                    amplitude: C64::new(1.0, 0.0),
                }],
            );
        }
    }
    Ok(ElementMap::photon(ElementKind::Pbs, routes))
}

/// Half-wave plate on one port: R -> (R+L)/sqrt(2), L -> (R-L)/sqrt(2).
pub fn make_hwp(port: Mode) -> ElementMap {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut routes = BTreeMap::new();
    for (pol, signs) in [(Polarization::R, [1.0, 1.0]), (Polarization::L, [1.0, -1.0])] {
        routes.insert(
            (pol, port.clone()),
            vec![
                PhotonTerm {
                    polarization: Polarization::R,
                    mode: port.clone(),
                    direction: DirAction::Keep,
                    amplitude: h * signs[0],
                },
                PhotonTerm {
                    polarization: Polarization::L,
                    mode: port.clone(),
                    direction: DirAction::Keep,
                    amplitude: h * signs[1],
                },
            ],
        );
    }
    ElementMap::photon(ElementKind::Hwp, routes)
}

/// Phase shifter: multiplies both polarizations on the port by e^{i phi}.
pub fn make_phase_shift(port: Mode, phi: f64) -> ElementMap {
    let factor = C64::from_polar(1.0, phi);
    let mut routes = BTreeMap::new();
    for pol in [Polarization::R, Polarization::L] {
        routes.insert(
            (pol, port.clone()),
            vec![PhotonTerm {
                polarization: pol,
                mode: port.clone(),
                direction: DirAction::Keep,
                amplitude: factor,
            }],
        );
    }
    ElementMap::photon(ElementKind::PhaseShift, routes)
}

/// Electron-spin Hadamard: up -> (up+down)/sqrt(2), down -> (up-down)/sqrt(2).
pub fn make_spin_hadamard(spin_index: usize) -> ElementMap {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    ElementMap {
        kind: ElementKind::SpinHadamard,
        inner: MapInner::Spin {
            index: spin_index,
            matrix: [[h, h], [h, -h]],
        },
    }
}

/// Optical switch, compiled to a static reroute: all amplitude on `port`
/// moves to `route_a` or `route_b` depending on the round selector.
pub fn make_switch(port: Mode, route_a: Mode, route_b: Mode, select_a: bool) -> ElementMap {
    let target = if select_a { route_a } else { route_b };
    make_reroute(ElementKind::Switch, port, target)
}

/// Time-delay device: identity on the port (timing has no amplitude effect
/// here).
pub fn make_delay(port: Mode) -> ElementMap {
    make_reroute(ElementKind::Delay, port.clone(), port)
}

fn make_reroute(kind: ElementKind, port: Mode, target: Mode) -> ElementMap {
    let mut routes = BTreeMap::new();
    for pol in [Polarization::R, Polarization::L] {
        routes.insert(
            (pol, port.clone()),
            vec![PhotonTerm {
                polarization: pol,
                mode: target.clone(),
                direction: DirAction::Keep,
                amplitude: C64::new(1.0, 0.0),
            }],
        );
    }
    ElementMap::photon(kind, routes)
}
