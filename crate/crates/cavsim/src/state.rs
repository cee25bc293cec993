//! Exact complex-amplitude representation of the hybrid photon + n-electron-spin
//! system.
//!
//! A [`HybridState`] is a sparse map from discrete basis labels to complex
//! amplitudes. A basis label combines the photon's polarization, spatial path
//! mode, and propagation direction with the configuration of every electron
//! spin. Path modes are strings so that circuit wiring reads exactly like the
//! wire numbers in the gate diagrams.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Default magnitude below which amplitudes are dropped from the sparse map.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-15;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("tensor factor {index} has zero norm")]
    ZeroNormFactor { index: usize },
    #[error("cannot normalize a state with zero norm")]
    ZeroNorm,
}

/// Circular polarization of the photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    R,
    L,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::R => Polarization::L,
            Polarization::L => Polarization::R,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::R => write!(f, "R"),
            Polarization::L => write!(f, "L"),
        }
    }
}

/// Propagation direction relative to the cavity z axis.
///
/// Only the cavity interaction reads this label; every other element carries
/// it through untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    AlongZ,
    AgainstZ,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::AlongZ => Direction::AgainstZ,
            Direction::AgainstZ => Direction::AlongZ,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::AlongZ => write!(f, "alongZ"),
            Direction::AgainstZ => write!(f, "againstZ"),
        }
    }
}

/// Photon spin projection: +1 for R along z and L against z, -1 otherwise.
pub fn photon_spin(polarization: Polarization, direction: Direction) -> i8 {
    match (polarization, direction) {
        (Polarization::R, Direction::AlongZ) | (Polarization::L, Direction::AgainstZ) => 1,
        _ => -1,
    }
}

/// Electron spin projection along z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn flipped(self) -> Self {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spin::Up => write!(f, "up"),
            Spin::Down => write!(f, "down"),
        }
    }
}

/// Spatial path mode label. Wire numbers from the gate diagrams ("1".."11"),
/// plus reserved sinks starting with "leaked".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mode(String);

impl Mode {
    pub fn new(name: impl Into<String>) -> Self {
        Mode(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True for the reserved loss sinks ("leaked" or "leaked:<tag>").
    pub fn is_leaked(&self) -> bool {
        self.0 == "leaked" || self.0.starts_with("leaked:")
    }
}

impl From<&str> for Mode {
    fn from(s: &str) -> Self {
        Mode(s.to_string())
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Single-photon part of a basis label.
///
/// Fields are declared in label sort order (path, polarization, direction) so
/// the derived ordering matches the serialized record ordering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhotonLabel {
    pub path: Mode,
    pub polarization: Polarization,
    pub direction: Direction,
}

impl PhotonLabel {
    pub fn new(polarization: Polarization, path: impl Into<String>, direction: Direction) -> Self {
        PhotonLabel {
            path: Mode::new(path),
            polarization,
            direction,
        }
    }
}

/// Ordered configuration of the electron spins (one or two electrons here).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpinConfig(Vec<Spin>);

impl SpinConfig {
    pub fn new(spins: impl Into<Vec<Spin>>) -> Self {
        SpinConfig(spins.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<Spin> {
        self.0.get(index).copied()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.0
    }

    pub fn with_spin(&self, index: usize, spin: Spin) -> Self {
        let mut spins = self.0.clone();
        spins[index] = spin;
        SpinConfig(spins)
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            match s {
                Spin::Up => write!(f, "u")?,
                Spin::Down => write!(f, "d")?,
            }
        }
        Ok(())
    }
}

/// Full basis label of the hybrid system: photon ⊗ spins.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisLabel {
    pub photon: PhotonLabel,
    pub spins: SpinConfig,
}

impl BasisLabel {
    pub fn new(photon: PhotonLabel, spins: SpinConfig) -> Self {
        BasisLabel { photon, spins }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.photon.polarization, self.photon.path, self.photon.direction, self.spins
        )
    }
}

/// One serialized amplitude record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplitudeRecord {
    pub polarization: String,
    pub path: String,
    pub direction: String,
    pub spins: Vec<String>,
    pub re: f64,
    pub im: f64,
}

/// Sparse complex-amplitude map over hybrid basis labels.
///
/// Values are immutable in spirit: every operation produces a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    amps: BTreeMap<BasisLabel, C64>,
    prune_threshold: f64,
}

impl Default for HybridState {
    fn default() -> Self {
        Self::zero()
    }
}

impl HybridState {
    pub fn zero() -> Self {
        HybridState {
            amps: BTreeMap::new(),
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
        }
    }

    pub fn with_prune_threshold(mut self, threshold: f64) -> Self {
        self.prune_threshold = threshold;
        self
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune_threshold
    }

    /// Build a state from explicit (label, amplitude) terms.
    pub fn from_terms(terms: impl IntoIterator<Item = (BasisLabel, C64)>) -> Self {
        let mut state = HybridState::zero();
        for (label, amp) in terms {
            state.add_amplitude(label, amp);
        }
        state
    }

    /// Single basis state with amplitude 1.
    pub fn basis(label: BasisLabel) -> Self {
        Self::from_terms([(label, C64::new(1.0, 0.0))])
    }

    /// Accumulate an amplitude onto a label, pruning tiny results.
    pub fn add_amplitude(&mut self, label: BasisLabel, amp: C64) {
        let new = self.amplitude(&label) + amp;
        if new.norm() < self.prune_threshold {
            self.amps.remove(&label);
        } else {
            self.amps.insert(label, new);
        }
    }

    pub fn amplitude(&self, label: &BasisLabel) -> C64 {
        self.amps.get(label).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisLabel, &C64)> {
        self.amps.iter()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Tensor product of a single-photon state with a list of single-spin
    /// states. Factors are expected normalized; a zero-norm factor is
    /// rejected.
    pub fn tensor_product(
        photon: &[(PhotonLabel, C64)],
        spins: &[(C64, C64)],
    ) -> Result<Self, StateError> {
        let photon_norm: f64 = photon.iter().map(|(_, a)| a.norm_sqr()).sum();
        if photon_norm == 0.0 {
            return Err(StateError::ZeroNormFactor { index: 0 });
        }
        for (i, (up, down)) in spins.iter().enumerate() {
            if up.norm_sqr() + down.norm_sqr() == 0.0 {
                return Err(StateError::ZeroNormFactor { index: i + 1 });
            }
        }

        let mut state = HybridState::zero();
        let n = spins.len();
        for (label, photon_amp) in photon {
            // walk all 2^n spin configurations
            for bits in 0..(1usize << n) {
                let mut amp = *photon_amp;
                let mut config = Vec::with_capacity(n);
                for (i, (up, down)) in spins.iter().enumerate() {
                    if bits >> i & 1 == 0 {
                        config.push(Spin::Up);
                        amp *= up;
                    } else {
                        config.push(Spin::Down);
                        amp *= down;
                    }
                }
                if amp.norm() > 0.0 {
                    state.add_amplitude(
                        BasisLabel::new(label.clone(), SpinConfig::new(config)),
                        amp,
                    );
                }
            }
        }
        Ok(state)
    }

    /// Inner product ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &HybridState) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (label, amp) in &self.amps {
            acc += amp.conj() * other.amplitude(label);
        }
        acc
    }

    pub fn squared_norm(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&self) -> Result<Self, StateError> {
        let norm = self.squared_norm().sqrt();
        if norm < 1e-300 {
            return Err(StateError::ZeroNorm);
        }
        Ok(self.scaled(C64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = HybridState::zero().with_prune_threshold(self.prune_threshold);
        for (label, amp) in &self.amps {
            out.add_amplitude(label.clone(), amp * factor);
        }
        out
    }

    /// Pointwise sum of two states.
    pub fn sum(&self, other: &HybridState) -> Self {
        let mut out = self.clone();
        for (label, amp) in &other.amps {
            out.add_amplitude(label.clone(), *amp);
        }
        out
    }

    /// Zero out every amplitude whose path mode is not in `modes`.
    pub fn restrict_to_modes(&self, modes: &BTreeSet<Mode>) -> Self {
        let mut out = HybridState::zero().with_prune_threshold(self.prune_threshold);
        for (label, amp) in &self.amps {
            if modes.contains(&label.photon.path) {
                out.add_amplitude(label.clone(), *amp);
            }
        }
        out
    }

    pub fn restrict_to_mode(&self, mode: &Mode) -> Self {
        let mut set = BTreeSet::new();
        set.insert(mode.clone());
        self.restrict_to_modes(&set)
    }

    /// Drop every amplitude sitting on a reserved leak sink.
    pub fn drop_leaked(&self) -> Self {
        let mut out = HybridState::zero().with_prune_threshold(self.prune_threshold);
        for (label, amp) in &self.amps {
            if !label.photon.path.is_leaked() {
                out.add_amplitude(label.clone(), *amp);
            }
        }
        out
    }

    /// Squared norm of the leak-sink part.
    pub fn leaked_norm(&self) -> f64 {
        self.amps
            .iter()
            .filter(|(l, _)| l.photon.path.is_leaked())
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Set of path modes carrying nonzero amplitude.
    pub fn support(&self) -> BTreeSet<Mode> {
        self.amps
            .keys()
            .map(|l| l.photon.path.clone())
            .collect()
    }

    /// Largest amplitude difference against another state over the union of
    /// their supports.
    pub fn max_deviation(&self, other: &HybridState) -> f64 {
        let mut dev: f64 = 0.0;
        for (label, amp) in &self.amps {
            dev = dev.max((amp - other.amplitude(label)).norm());
        }
        for (label, amp) in &other.amps {
            dev = dev.max((amp - self.amplitude(label)).norm());
        }
        dev
    }

    /// Amplitude records sorted lexicographically by label (path, polarization,
    /// direction, spins).
    pub fn to_records(&self) -> Vec<AmplitudeRecord> {
        self.amps
            .iter()
            .map(|(label, amp)| AmplitudeRecord {
                polarization: label.photon.polarization.to_string(),
                path: label.photon.path.to_string(),
                direction: label.photon.direction.to_string(),
                spins: label.spins.spins().iter().map(|s| s.to_string()).collect(),
                re: amp.re,
                im: amp.im,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_records()).expect("amplitude records serialize")
    }
}
