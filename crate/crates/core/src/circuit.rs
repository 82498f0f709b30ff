//! Optical circuits: single-mode sources, beam-splitter phase-gates, phase
//! rotations and loss channels acting on covariance matrices.
//!
//! Gate convention: a phase-gate on `(i, j)` first rotates mode `j` by the
//! gate phase, then mixes the pair with
//! `a_i' = √T a_i + √(1-T) a_j`, `a_j' = -√(1-T) a_i + √T a_j`.

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{physicality_margin, CovarianceMatrix, GaussianState, ModePartition};
use crate::io::PartitionJson;

/// Slack on `v_min * v_max >= 1` for sources.
pub const SOURCE_TOL: f64 = 1e-9;

/// Circuit outputs with a physicality margin below `-OUTPUT_TOL` are an error.
pub const OUTPUT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Vacuum,
    SqueezedThermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    #[serde(default = "one")]
    pub v_min: f64,
    #[serde(default = "one")]
    pub v_max: f64,
    /// Angle of the minor axis, degrees.
    #[serde(default)]
    pub orientation_deg: f64,
}

fn one() -> f64 {
    1.0
}

impl SourceSpec {
    pub fn vacuum() -> Self {
        SourceSpec { kind: SourceKind::Vacuum, v_min: 1.0, v_max: 1.0, orientation_deg: 0.0 }
    }

    pub fn squeezed_thermal(v_min: f64, v_max: f64) -> Self {
        SourceSpec { kind: SourceKind::SqueezedThermal, v_min, v_max, orientation_deg: 0.0 }
    }

    pub fn with_orientation(self, orientation_deg: f64) -> Self {
        SourceSpec { orientation_deg, ..self }
    }

    /// Both variances at or above the vacuum level but unequal.
    pub fn is_hot(&self) -> bool {
        self.kind == SourceKind::SqueezedThermal && self.v_min >= 1.0 && self.v_min != self.v_max
    }

    pub fn is_pure(&self) -> bool {
        self.kind == SourceKind::Vacuum || (self.v_min * self.v_max - 1.0).abs() <= SOURCE_TOL
    }

    fn validate(&self, index: Option<usize>) -> Result<()> {
        if self.kind == SourceKind::Vacuum {
            return Ok(());
        }
        if !(self.v_min >= 0.0) || !self.v_max.is_finite() || self.v_max < self.v_min {
            return Err(Error::invalid(format!(
                "source{} needs 0 <= v_min <= v_max, got ({}, {})",
                index.map(|i| format!(" {}", i + 1)).unwrap_or_default(),
                self.v_min,
                self.v_max
            )));
        }
        if !self.orientation_deg.is_finite() {
            return Err(Error::invalid("source orientation must be finite"));
        }
        let product = self.v_min * self.v_max;
        if product < 1.0 - SOURCE_TOL {
            return Err(Error::UnphysicalSource { index, product });
        }
        Ok(())
    }
}

fn rotation(angle_deg: f64) -> Matrix2<f64> {
    let (s, c) = angle_deg.to_radians().sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// `R diag(v_min, v_max) Rᵀ` with `R` the rotation by the source orientation.
pub fn source_covariance(spec: &SourceSpec) -> Result<Matrix2<f64>> {
    spec.validate(None)?;
    Ok(source_block(spec))
}

fn source_block(spec: &SourceSpec) -> Matrix2<f64> {
    match spec.kind {
        SourceKind::Vacuum => Matrix2::identity(),
        SourceKind::SqueezedThermal => {
            let r = rotation(spec.orientation_deg);
            r * Matrix2::new(spec.v_min, 0.0, 0.0, spec.v_max) * r.transpose()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGateSpec {
    pub modes: (usize, usize),
    /// Power transmissivity `T`.
    pub transmissivity: f64,
    /// Relative phase on the second mode, degrees.
    pub phase_deg: f64,
}

impl PhaseGateSpec {
    pub fn new(i: usize, j: usize, transmissivity: f64, phase_deg: f64) -> Self {
        PhaseGateSpec { modes: (i, j), transmissivity, phase_deg: phase_deg.rem_euclid(360.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateSpec {
    Rotation { mode: usize, angle_deg: f64 },
    PhaseGate(PhaseGateSpec),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub mode: usize,
    pub efficiency: f64,
}

/// Sources (one per mode), gates applied in order, then losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitJson", into = "CircuitJson")]
pub struct CircuitSpec {
    pub sources: Vec<SourceSpec>,
    pub gates: Vec<GateSpec>,
    pub losses: Vec<LossSpec>,
    /// Carried into the simulated covariance file.
    pub partition: Option<ModePartition>,
}

impl CircuitSpec {
    pub fn n_modes(&self) -> usize {
        self.sources.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_modes();
        if n == 0 {
            return Err(Error::invalid("circuit needs at least one source"));
        }
        for (k, s) in self.sources.iter().enumerate() {
            s.validate(Some(k))?;
        }
        let check_mode = |m: usize| {
            if m >= n {
                Err(Error::invalid(format!("mode {} out of range for {n} modes", m + 1)))
            } else {
                Ok(())
            }
        };
        for g in &self.gates {
            match g {
                GateSpec::Rotation { mode, angle_deg } => {
                    check_mode(*mode)?;
                    if !angle_deg.is_finite() {
                        return Err(Error::invalid("rotation angle must be finite"));
                    }
                }
                GateSpec::PhaseGate(pg) => {
                    check_mode(pg.modes.0)?;
                    check_mode(pg.modes.1)?;
                    check_gate(pg)?;
                }
            }
        }
        for l in &self.losses {
            check_mode(l.mode)?;
            check_efficiency(l.efficiency)?;
        }
        if let Some(p) = &self.partition {
            if p.n_modes() != n {
                return Err(Error::invalid(format!("partition covers {} modes, circuit has {n}", p.n_modes())));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Transmissivities of the phase-gates, in gate order.
    pub fn transmissivities(&self) -> Vec<f64> {
        self.phase_gates().map(|g| g.transmissivity).collect()
    }

    pub fn phase_gates(&self) -> impl Iterator<Item = &PhaseGateSpec> {
        self.gates.iter().filter_map(|g| match g {
            GateSpec::PhaseGate(pg) => Some(pg),
            GateSpec::Rotation { .. } => None,
        })
    }
}

fn check_gate(pg: &PhaseGateSpec) -> Result<()> {
    if pg.modes.0 == pg.modes.1 {
        return Err(Error::invalid(format!("phase-gate needs two distinct modes, got {} twice", pg.modes.0 + 1)));
    }
    if !(0.0..=1.0).contains(&pg.transmissivity) {
        return Err(Error::invalid(format!("transmissivity must lie in [0, 1], got {}", pg.transmissivity)));
    }
    if !pg.phase_deg.is_finite() {
        return Err(Error::invalid("gate phase must be finite"));
    }
    Ok(())
}

fn check_efficiency(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(format!("loss efficiency must lie in (0, 1], got {eta}")));
    }
    Ok(())
}

/// `γ ← S γ Sᵀ` and `d ← S d` for `S` acting on the listed modes only.
fn apply_local(state: &GaussianState, modes: &[usize], s: &DMatrix<f64>) -> GaussianState {
    let coords: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let k = coords.len();
    let mut g = state.matrix().clone();
    let dim = g.nrows();
    // Rows, then columns.
    let mut rows = DMatrix::zeros(k, dim);
    for (a, &ra) in coords.iter().enumerate() {
        rows.row_mut(a).copy_from(&g.row(ra));
    }
    let rows = s * rows;
    for (a, &ra) in coords.iter().enumerate() {
        g.row_mut(ra).copy_from(&rows.row(a));
    }
    let mut cols = DMatrix::zeros(dim, k);
    for (a, &ca) in coords.iter().enumerate() {
        cols.column_mut(a).copy_from(&g.column(ca));
    }
    let cols = cols * s.transpose();
    for (a, &ca) in coords.iter().enumerate() {
        g.column_mut(ca).copy_from(&cols.column(a));
    }
    symmetrize(&mut g);
    let mean = state.mean.as_ref().map(|d| {
        let local = s * DVector::from_iterator(k, coords.iter().map(|&c| d[c]));
        let mut out = d.clone();
        for (a, &c) in coords.iter().enumerate() {
            out[c] = local[a];
        }
        out
    });
    GaussianState { cov: CovarianceMatrix::from_symmetric_unchecked(g), mean }
}

fn symmetrize(g: &mut DMatrix<f64>) {
    let n = g.nrows();
    for r in 0..n {
        for c in r + 1..n {
            let v = 0.5 * (g[(r, c)] + g[(c, r)]);
            g[(r, c)] = v;
            g[(c, r)] = v;
        }
    }
}

fn check_state_mode(state: &GaussianState, mode: usize) -> Result<()> {
    if mode >= state.n_modes() {
        return Err(Error::invalid(format!("mode {} out of range for {} modes", mode + 1, state.n_modes())));
    }
    Ok(())
}

pub fn apply_phase_rotation(state: &GaussianState, mode: usize, angle_deg: f64) -> Result<GaussianState> {
    check_state_mode(state, mode)?;
    let r = rotation(angle_deg);
    let s = DMatrix::from_row_slice(2, 2, &[r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]]);
    Ok(apply_local(state, &[mode], &s))
}

/// Symplectic matrix of a phase-gate on the ordered pair `(i, j)`.
fn phase_gate_matrix(transmissivity: f64, phase_deg: f64) -> DMatrix<f64> {
    let t = transmissivity.sqrt();
    let r = (1.0 - transmissivity).sqrt();
    let rot = rotation(phase_deg);
    let mut s = DMatrix::zeros(4, 4);
    for a in 0..2 {
        s[(a, a)] = t;
        for b in 0..2 {
            s[(a, 2 + b)] = r * rot[(a, b)];
            s[(2 + a, 2 + b)] = t * rot[(a, b)];
        }
        s[(2 + a, a)] = -r;
    }
    s
}

pub fn apply_phase_gate(state: &GaussianState, gate: &PhaseGateSpec) -> Result<GaussianState> {
    check_gate(gate)?;
    let (i, j) = gate.modes;
    check_state_mode(state, i)?;
    check_state_mode(state, j)?;
    Ok(apply_local(state, &[i, j], &phase_gate_matrix(gate.transmissivity, gate.phase_deg)))
}

/// Mixes the mode with vacuum: `γ ← X γ X + (1-η) I_mode`, `X = √η` on the mode.
pub fn apply_loss(state: &GaussianState, loss: &LossSpec) -> Result<GaussianState> {
    check_efficiency(loss.efficiency)?;
    check_state_mode(state, loss.mode)?;
    let eta = loss.efficiency;
    let root = eta.sqrt();
    let mut g = state.matrix().clone();
    let dim = g.nrows();
    let own = [2 * loss.mode, 2 * loss.mode + 1];
    for &a in &own {
        for c in 0..dim {
            if own.contains(&c) {
                g[(a, c)] = eta * g[(a, c)] + if a == c { 1.0 - eta } else { 0.0 };
            } else {
                g[(a, c)] *= root;
                g[(c, a)] *= root;
            }
        }
    }
    let mean = state.mean.as_ref().map(|d| {
        let mut out = d.clone();
        for &a in &own {
            out[a] *= root;
        }
        out
    });
    Ok(GaussianState { cov: CovarianceMatrix::from_symmetric_unchecked(g), mean })
}

/// Gates applied in order to `initial`, without sources or losses.
pub fn apply_gates(initial: &GaussianState, gates: &[GateSpec]) -> Result<GaussianState> {
    let mut state = initial.clone();
    for g in gates {
        state = match g {
            GateSpec::Rotation { mode, angle_deg } => apply_phase_rotation(&state, *mode, *angle_deg)?,
            GateSpec::PhaseGate(pg) => apply_phase_gate(&state, pg)?,
        };
    }
    Ok(state)
}

/// Direct sum of the source covariances.
pub fn source_state(sources: &[SourceSpec]) -> Result<GaussianState> {
    let n = sources.len();
    if n == 0 {
        return Err(Error::invalid("circuit needs at least one source"));
    }
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for (k, s) in sources.iter().enumerate() {
        s.validate(Some(k))?;
        let b = source_block(s);
        for r in 0..2 {
            for c in 0..2 {
                g[(2 * k + r, 2 * k + c)] = b[(r, c)];
            }
        }
    }
    symmetrize(&mut g);
    Ok(GaussianState::new(CovarianceMatrix::from_symmetric_unchecked(g)))
}

pub fn simulate_circuit(spec: &CircuitSpec) -> Result<GaussianState> {
    spec.validate()?;
    let mut state = apply_gates(&source_state(&spec.sources)?, &spec.gates)?;
    for l in &spec.losses {
        state = apply_loss(&state, l)?;
    }
    let margin = physicality_margin(&state);
    if margin < -OUTPUT_TOL {
        return Err(Error::InvalidState(format!("circuit output is unphysical (margin {margin:e})")));
    }
    Ok(state)
}

/// OPA variance pairs of the three-source circuit; the fourth input is vacuum.
pub const PAPER_SOURCES: [(f64, f64); 3] = [(2.0, 3.46), (0.54, 5.16), (0.63, 2.54)];

/// Phases of PG1, PG2, PG3 and of the fixed fourth splitter, degrees.
pub const PAPER_PHASES: [f64; 4] = [90.0, 41.0, 140.0, 0.0];

/// Mode pairs of PG1, PG2, PG3 and the fourth splitter (zero-based).
pub const PAPER_GATE_MODES: [(usize, usize); 4] = [(2, 0), (3, 1), (2, 3), (0, 1)];

/// Order in which PG2 and PG3 act; the remaining gates are fixed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateOrder {
    #[default]
    Pg2First,
    Pg3First,
}

/// The four-mode three-OPA circuit with splitting ratios as parameters.
pub fn paper_circuit(ratios: [f64; 4], partition: ModePartition) -> CircuitSpec {
    paper_circuit_ordered(ratios, partition, GateOrder::default())
}

pub fn paper_circuit_ordered(ratios: [f64; 4], partition: ModePartition, order: GateOrder) -> CircuitSpec {
    let mut sources: Vec<SourceSpec> = PAPER_SOURCES.iter().map(|&(a, b)| SourceSpec::squeezed_thermal(a, b)).collect();
    sources.push(SourceSpec::vacuum());
    let mut idx = [0, 1, 2, 3];
    if order == GateOrder::Pg3First {
        idx.swap(1, 2);
    }
    let gates = idx
        .iter()
        .map(|&k| {
            let (i, j) = PAPER_GATE_MODES[k];
            GateSpec::PhaseGate(PhaseGateSpec::new(i, j, ratios[k], PAPER_PHASES[k]))
        })
        .collect();
    CircuitSpec { sources, gates, losses: Vec::new(), partition: Some(partition) }
}

/// Default bipartition of the circuit output: modes {1,4} | {2,3}.
pub fn paper_partition() -> ModePartition {
    ModePartition::new(vec![0, 3], vec![1, 2], 4).expect("static partition")
}

/// Source `(v_min, v_max, orientation_deg)` of the bound entangled preset.
/// Starting from the three-source circuit, a circuit walk over every knob
/// drifted these slightly from the nominal OPA values.
pub const BOUND_STATE_SOURCES: [(f64, f64, f64); 3] = [(1.96, 3.45, 5.0), (0.53, 5.11, 0.0), (0.63, 2.49, -1.0)];

/// Splitting ratios of the bound entangled preset.
pub const BOUND_STATE_RATIOS: [f64; 4] = [0.76, 0.05, 0.61, 0.68];

pub const BOUND_STATE_PHASES: [f64; 4] = [90.0, 41.0, 143.0, 0.0];

/// Variance of the nominally vacuum fourth input. Pure vacuum leaves the
/// output on the physicality boundary; this amount balances the statistical
/// distance from separability against the distance from distillability.
pub const BOUND_STATE_IDLER_NOISE: f64 = 1.0125;

/// A circuit whose output is bound entangled across {1,4} | {2,3}, with
/// E ≈ 0.0146, P ≈ 0.0171 and physicality margin 0.0125.
pub fn bound_state_preset() -> CircuitSpec {
    let mut spec = paper_circuit(BOUND_STATE_RATIOS, paper_partition());
    for (src, &(v_min, v_max, angle)) in spec.sources.iter_mut().zip(&BOUND_STATE_SOURCES) {
        *src = SourceSpec::squeezed_thermal(v_min, v_max).with_orientation(angle);
    }
    spec.sources[3] = SourceSpec::squeezed_thermal(BOUND_STATE_IDLER_NOISE, BOUND_STATE_IDLER_NOISE);
    for (gate, &phase) in spec.gates.iter_mut().zip(&BOUND_STATE_PHASES) {
        if let GateSpec::PhaseGate(g) = gate {
            g.phase_deg = phase;
        }
    }
    spec
}

// File representation: one-based modes.

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CircuitJson {
    sources: Vec<SourceSpec>,
    #[serde(default)]
    gates: Vec<GateJson>,
    #[serde(default)]
    losses: Vec<LossJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<PartitionJson>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum GateType {
    Rotation,
    Beamsplitter,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GateJson {
    #[serde(rename = "type")]
    kind: GateType,
    modes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transmissivity: Option<f64>,
    #[serde(default)]
    phase_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LossJson {
    mode: usize,
    efficiency: f64,
}

fn zero_based(m: usize, field: &str) -> Result<usize> {
    m.checked_sub(1).ok_or_else(|| Error::format(field, "mode indices are one-based"))
}

impl TryFrom<CircuitJson> for CircuitSpec {
    type Error = Error;

    fn try_from(j: CircuitJson) -> Result<Self> {
        let n = j.sources.len();
        let mut gates = Vec::with_capacity(j.gates.len());
        for (k, g) in j.gates.iter().enumerate() {
            let field = format!("gates[{k}]");
            let modes: Vec<usize> = g.modes.iter().map(|&m| zero_based(m, &field)).collect::<Result<_>>()?;
            gates.push(match (g.kind, modes.as_slice()) {
                (GateType::Rotation, [m]) => GateSpec::Rotation { mode: *m, angle_deg: g.phase_deg },
                (GateType::Beamsplitter, [a, b]) => {
                    let t =
                        g.transmissivity.ok_or_else(|| Error::format(&field, "beamsplitter needs a transmissivity"))?;
                    GateSpec::PhaseGate(PhaseGateSpec::new(*a, *b, t, g.phase_deg))
                }
                (GateType::Rotation, _) => return Err(Error::format(field, "rotation takes exactly one mode")),
                (GateType::Beamsplitter, _) => {
                    return Err(Error::format(field, "beamsplitter takes exactly two modes"))
                }
            });
        }
        let losses = j
            .losses
            .iter()
            .enumerate()
            .map(|(k, l)| Ok(LossSpec { mode: zero_based(l.mode, &format!("losses[{k}]"))?, efficiency: l.efficiency }))
            .collect::<Result<_>>()?;
        let partition = j.partition.as_ref().map(|p| p.to_partition(n)).transpose()?;
        let spec = CircuitSpec { sources: j.sources, gates, losses, partition };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<CircuitSpec> for CircuitJson {
    fn from(spec: CircuitSpec) -> Self {
        let gates = spec
            .gates
            .iter()
            .map(|g| match g {
                GateSpec::Rotation { mode, angle_deg } => GateJson {
                    kind: GateType::Rotation,
                    modes: vec![mode + 1],
                    transmissivity: None,
                    phase_deg: *angle_deg,
                },
                GateSpec::PhaseGate(pg) => GateJson {
                    kind: GateType::Beamsplitter,
                    modes: vec![pg.modes.0 + 1, pg.modes.1 + 1],
                    transmissivity: Some(pg.transmissivity),
                    phase_deg: pg.phase_deg,
                },
            })
            .collect();
        CircuitJson {
            sources: spec.sources,
            gates,
            losses: spec.losses.iter().map(|l| LossJson { mode: l.mode + 1, efficiency: l.efficiency }).collect(),
            partition: spec.partition.as_ref().map(PartitionJson::from),
        }
    }
}
