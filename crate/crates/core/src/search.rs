//! Random-walk search for bound entangled states, over the 16-parameter
//! two-party normal form and over circuit parameters.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certifier::{
    entanglement_exceeds, entanglement_in_bracket, entanglement_measure, ppt_measure, CertifierConfig, PPT_BAND,
};
use crate::circuit::{simulate_circuit, CircuitSpec, GateSpec, SourceKind};
use crate::error::{Error, Result};
use crate::gaussian::{physicality_margin, CovarianceMatrix, GaussianState, ModePartition};
use crate::io::CovarianceFile;
use crate::rng::{derive, Stream};
use std::sync::atomic::{AtomicBool, Ordering};

pub const N_PARAMS: usize = 16;

/// Candidates with a physicality margin below `-PHYSICALITY_TOL` are skipped.
pub const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormParams {
    pub lambda: [f64; N_PARAMS],
}

impl NormalFormParams {
    pub fn new(lambda: [f64; N_PARAMS]) -> Self {
        NormalFormParams { lambda }
    }

    /// Shift of the four diagonal parameters.
    pub fn shift_diagonal(mut self, offset: f64) -> Self {
        for v in &mut self.lambda[..4] {
            *v += offset;
        }
        self
    }
}

/// Positions of `λ_5 … λ_16` (one-based λ, zero-based upper-triangle entry).
const OFF_DIAGONAL: [(usize, usize, usize); 12] = [
    (5, 0, 4),
    (6, 1, 5),
    (7, 2, 6),
    (8, 3, 7),
    (9, 0, 6),
    (10, 0, 7),
    (11, 1, 6),
    (12, 1, 7),
    (13, 2, 4),
    (14, 2, 5),
    (15, 3, 4),
    (16, 3, 5),
];

/// Four-mode covariance matrix in normal form; party A holds modes 1 and 2.
pub fn normal_form_matrix(params: &NormalFormParams) -> CovarianceMatrix {
    let l = &params.lambda;
    let mut g = nalgebra::DMatrix::zeros(8, 8);
    for k in 0..4 {
        g[(2 * k, 2 * k)] = l[k];
        g[(2 * k + 1, 2 * k + 1)] = l[k];
    }
    for &(idx, r, c) in &OFF_DIAGONAL {
        g[(r, c)] = l[idx - 1];
        g[(c, r)] = l[idx - 1];
    }
    CovarianceMatrix::from_symmetric_unchecked(g)
}

pub fn normal_form_partition() -> ModePartition {
    ModePartition::new(vec![0, 1], vec![2, 3], 4).expect("static partition")
}

/// Each `λ` uniform on `[-1/2, 1/2]`.
pub fn sample_hypercube<R: Rng + ?Sized>(rng: &mut R) -> NormalFormParams {
    let mut lambda = [0.0; N_PARAMS];
    for v in &mut lambda {
        *v = rng.random_range(-0.5..=0.5);
    }
    NormalFormParams { lambda }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Improvement {
    /// Take the first acceptable candidate in evaluation order.
    #[default]
    First,
    /// Evaluate every candidate and take the one with the largest `min{E, P}`.
    Best,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveOrder {
    /// Seeded shuffle per step.
    #[default]
    Shuffled,
    Fixed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Acceptance {
    /// `E' > E` and `P' > P`.
    #[default]
    BothImprove,
    /// `min{E', P'} > min{E, P}`.
    MinImproves,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Axis displacement.
    pub step: f64,
    /// Plane rotation angle, radians.
    pub rotation_angle: f64,
    pub max_steps: usize,
    pub seed: u64,
    /// Stop once `min{E, P}` reaches this value.
    pub objective_floor: f64,
    pub certifier: CertifierConfig,
    /// Hypercube draws allowed before giving up on a seed state.
    pub draw_budget: u64,
    /// Added to `λ_1 … λ_4` of every hypercube draw.
    pub diagonal_offset: f64,
    /// Stop after this many certifier calls (0 = unlimited).
    pub max_certifier_calls: u64,
    pub improvement: Improvement,
    pub order: MoveOrder,
    pub acceptance: Acceptance,
    /// Fresh seed states tried after a walk ends in a local optimum.
    pub max_restarts: usize,
    #[serde(skip)]
    pub stop: StopFlag,
}

/// Cooperative cancellation: once the flag is set, walks return their best
/// point so far with [`StopReason::Interrupted`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StopFlag(pub Option<&'static AtomicBool>);

impl StopFlag {
    pub fn is_set(&self) -> bool {
        self.0.is_some_and(|f| f.load(Ordering::Relaxed))
    }
}

impl PartialEq for StopFlag {
    fn eq(&self, other: &Self) -> bool {
        match (self.0, other.0) {
            (Some(a), Some(b)) => std::ptr::eq(a, b),
            (None, None) => true,
            _ => false,
        }
    }
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            step: 0.01,
            rotation_angle: 0.01,
            max_steps: 10_000,
            seed: 0,
            objective_floor: f64::INFINITY,
            certifier: CertifierConfig::default(),
            draw_budget: 1_000_000,
            diagonal_offset: 1.5,
            max_certifier_calls: 0,
            improvement: Improvement::First,
            order: MoveOrder::Shuffled,
            acceptance: Acceptance::BothImprove,
            max_restarts: 100,
            stop: StopFlag::default(),
        }
    }
}

impl WalkConfig {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.rotation_angle.is_finite() {
            return Err(Error::invalid(format!(
                "walk needs step > 0 and a finite rotation angle, got {} and {}",
                self.step, self.rotation_angle
            )));
        }
        Ok(())
    }
}

/// `2·16` axis moves (`+δ`, `-δ` per coordinate) followed by `2·120` plane
/// rotations (`+θ`, `-θ` per plane `(a, b)`, `a < b`).
pub fn walk_moves(params: &NormalFormParams, config: &WalkConfig) -> Vec<NormalFormParams> {
    let mut out = Vec::with_capacity(2 * N_PARAMS + N_PARAMS * (N_PARAMS - 1));
    for k in 0..N_PARAMS {
        for d in [config.step, -config.step] {
            let mut p = *params;
            p.lambda[k] += d;
            out.push(p);
        }
    }
    for a in 0..N_PARAMS {
        for b in a + 1..N_PARAMS {
            for angle in [config.rotation_angle, -config.rotation_angle] {
                let (s, c) = angle.sin_cos();
                let mut p = *params;
                let (x, y) = (params.lambda[a], params.lambda[b]);
                p.lambda[a] = c * x - s * y;
                p.lambda[b] = s * x + c * y;
                out.push(p);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub step: usize,
    /// Index into the candidate list of that step; `None` for the start point.
    pub candidate: Option<usize>,
    pub e: f64,
    pub p: f64,
    pub certifier_calls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "kebab-case")]
pub enum SearchParams {
    NormalForm { lambda: [f64; N_PARAMS] },
    Circuit { circuit: CircuitSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxSteps,
    ObjectiveFloor,
    LocalOptimum,
    CallBudget,
    EmptyMask,
    Interrupted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_params: SearchParams,
    pub best_cov: CovarianceFile,
    pub best_e: f64,
    pub best_p: f64,
    pub trajectory: Vec<TrajectoryStep>,
    pub rng_seed: u64,
    pub steps_taken: usize,
    pub stop_reason: StopReason,
    /// Restarts before the reported run began.
    pub restarts: usize,
    /// Totals over all runs.
    pub certifier_calls: u64,
    /// Hypercube draws spent finding the seed state.
    pub draws: u64,
    /// Candidates rejected because the separability program was undecided.
    pub indeterminate_candidates: u64,
}

impl SearchResult {
    pub fn best_state(&self) -> Result<GaussianState> {
        self.best_cov.state()
    }

    pub fn objective(&self) -> f64 {
        self.best_e.min(self.best_p)
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    e: f64,
    p: f64,
}

enum Verdict {
    Accept(Point),
    Reject,
    Indeterminate,
}

/// Shared acceptance machinery: cheap physicality and PPT screens first, then a
/// single feasibility solve deciding `E' > E`, and a full bisection only for
/// accepted candidates.
struct Evaluator {
    partition: ModePartition,
    certifier: CertifierConfig,
    acceptance: Acceptance,
    calls: u64,
    indeterminate: u64,
}

impl Evaluator {
    fn new(partition: ModePartition, config: &WalkConfig) -> Self {
        Evaluator { partition, certifier: config.certifier, acceptance: config.acceptance, calls: 0, indeterminate: 0 }
    }

    fn full(&mut self, state: &GaussianState) -> Result<Point> {
        self.calls += 1;
        let p = ppt_measure(state, &self.partition)?;
        let e = entanglement_measure(state, &self.partition, &self.certifier)?;
        Ok(Point { e: e.value, p })
    }

    fn judge(&mut self, state: &GaussianState, current: &Point) -> Result<Verdict> {
        if physicality_margin(state) < -PHYSICALITY_TOL {
            return Ok(Verdict::Reject);
        }
        let p = ppt_measure(state, &self.partition)?;
        let e_needed = match self.acceptance {
            Acceptance::BothImprove => {
                if p <= current.p {
                    return Ok(Verdict::Reject);
                }
                current.e
            }
            Acceptance::MinImproves => {
                let floor = current.e.min(current.p);
                if p <= floor {
                    return Ok(Verdict::Reject);
                }
                floor
            }
        };
        self.calls += 1;
        match entanglement_exceeds(state, &self.partition, e_needed, &self.certifier) {
            Ok((false, _)) => return Ok(Verdict::Reject),
            Ok((true, _)) => {}
            Err(Error::Indeterminate { .. }) => {
                self.indeterminate += 1;
                return Ok(Verdict::Indeterminate);
            }
            Err(e) => return Err(e),
        }
        self.calls += 1;
        let hi = (1.0 - e_needed).max(0.0);
        match entanglement_in_bracket(state, &self.partition, 0.0, hi, &self.certifier) {
            Ok(est) => Ok(Verdict::Accept(Point { e: est.value, p })),
            Err(Error::Indeterminate { .. }) => {
                self.indeterminate += 1;
                Ok(Verdict::Indeterminate)
            }
            Err(e) => Err(e),
        }
    }
}

/// Generic walk over a candidate generator.
fn walk<T: Clone>(
    start: T,
    start_state: GaussianState,
    start_point: Point,
    config: &WalkConfig,
    ev: &mut Evaluator,
    restart: usize,
    mut moves: impl FnMut(&T) -> Vec<T>,
    mut realize: impl FnMut(&T) -> Option<GaussianState>,
) -> Result<(T, GaussianState, Point, Vec<TrajectoryStep>, usize, StopReason)> {
    let mut current = start;
    let mut state = start_state;
    let mut point = start_point;
    let mut trajectory =
        vec![TrajectoryStep { step: 0, candidate: None, e: point.e, p: point.p, certifier_calls: ev.calls }];
    let mut steps = 0;
    let reason = loop {
        if config.stop.is_set() {
            break StopReason::Interrupted;
        }
        if point.e.min(point.p) >= config.objective_floor {
            break StopReason::ObjectiveFloor;
        }
        if steps >= config.max_steps {
            break StopReason::MaxSteps;
        }
        if config.max_certifier_calls > 0 && ev.calls >= config.max_certifier_calls {
            break StopReason::CallBudget;
        }
        let candidates = moves(&current);
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        if config.order == MoveOrder::Shuffled {
            order.shuffle(&mut derive(config.seed, Stream::Shuffle, ((restart as u64) << 32) | steps as u64));
        }
        let mut chosen: Option<(usize, GaussianState, Point)> = None;
        for &k in &order {
            if config.max_certifier_calls > 0 && ev.calls >= config.max_certifier_calls {
                break;
            }
            let Some(cand_state) = realize(&candidates[k]) else { continue };
            let reference = match (&chosen, config.improvement) {
                (Some((_, _, best)), Improvement::Best) => *best,
                _ => point,
            };
            if let Verdict::Accept(p) = ev.judge(&cand_state, &reference)? {
                let better = match &chosen {
                    Some((_, _, best)) => p.e.min(p.p) > best.e.min(best.p),
                    None => true,
                };
                if better {
                    chosen = Some((k, cand_state, p));
                }
                if config.improvement == Improvement::First {
                    break;
                }
            }
        }
        match chosen {
            Some((k, s, p)) => {
                steps += 1;
                current = candidates[k].clone();
                state = s;
                point = p;
                trajectory.push(TrajectoryStep {
                    step: steps,
                    candidate: Some(k),
                    e: p.e,
                    p: p.p,
                    certifier_calls: ev.calls,
                });
            }
            None if config.max_certifier_calls > 0 && ev.calls >= config.max_certifier_calls => {
                break StopReason::CallBudget
            }
            None => break StopReason::LocalOptimum,
        }
    };
    Ok((current, state, point, trajectory, steps, reason))
}

/// Hypercube draws (diagonal shifted by `config.diagonal_offset`) from the
/// run's hypercube stream, shared across restarts.
struct SeedSampler {
    rng: rand_chacha::ChaCha8Rng,
    draws: u64,
}

impl SeedSampler {
    fn new(seed: u64) -> Self {
        SeedSampler { rng: derive(seed, Stream::Hypercube, 0), draws: 0 }
    }

    /// Next draw that is physical with `E > tol` and `P > 0`.
    fn next(&mut self, config: &WalkConfig, ev: &mut Evaluator) -> Result<NormalFormParams> {
        while self.draws < config.draw_budget && !config.stop.is_set() {
            self.draws += 1;
            let params = sample_hypercube(&mut self.rng).shift_diagonal(config.diagonal_offset);
            let state = GaussianState::new(normal_form_matrix(&params));
            if physicality_margin(&state) < -PHYSICALITY_TOL || ppt_measure(&state, &ev.partition)? <= PPT_BAND {
                continue;
            }
            ev.calls += 1;
            match entanglement_exceeds(&state, &ev.partition, config.certifier.tol, &config.certifier) {
                Ok((true, _)) => return Ok(params),
                Ok((false, _)) => {}
                Err(Error::Indeterminate { .. }) => ev.indeterminate += 1,
                Err(e) => return Err(e),
            }
        }
        Err(Error::SearchExhausted { draws: self.draws })
    }
}

/// First bound entangled hypercube draw; returns it with the number of draws
/// and certifier calls spent.
pub fn find_seed_state(config: &WalkConfig) -> Result<(NormalFormParams, u64, u64)> {
    let mut ev = Evaluator::new(normal_form_partition(), config);
    let mut sampler = SeedSampler::new(config.seed);
    let params = sampler.next(config, &mut ev)?;
    Ok((params, sampler.draws, ev.calls))
}

/// Walks from hypercube seed states. A walk stuck in a local optimum below the
/// objective floor restarts from a fresh seed, up to `config.max_restarts`
/// times; the best run is reported.
pub fn random_walk_normal_form(config: &WalkConfig) -> Result<SearchResult> {
    config.validate()?;
    let mut ev = Evaluator::new(normal_form_partition(), config);
    let mut sampler = SeedSampler::new(config.seed);
    let mut best: Option<SearchResult> = None;
    for restart in 0..=config.max_restarts {
        let start = match sampler.next(config, &mut ev) {
            Ok(p) => p,
            Err(Error::SearchExhausted { .. }) if best.is_some() => break,
            Err(e) => return Err(e),
        };
        let run = normal_form_run(start, config, &mut ev, restart)?;
        let reason = run.stop_reason;
        if best.as_ref().is_none_or(|b| run.objective() > b.objective()) {
            best = Some(run);
        }
        if reason != StopReason::LocalOptimum {
            break;
        }
    }
    let mut best = best.expect("at least one run");
    best.certifier_calls = ev.calls;
    best.draws = sampler.draws;
    best.indeterminate_candidates = ev.indeterminate;
    Ok(best)
}

/// Single walk from a given start point (which need not be bound entangled).
pub fn random_walk_normal_form_from(start: NormalFormParams, config: &WalkConfig) -> Result<SearchResult> {
    config.validate()?;
    let mut ev = Evaluator::new(normal_form_partition(), config);
    normal_form_run(start, config, &mut ev, 0)
}

fn normal_form_run(
    start: NormalFormParams,
    config: &WalkConfig,
    ev: &mut Evaluator,
    restart: usize,
) -> Result<SearchResult> {
    let state = GaussianState::new(normal_form_matrix(&start));
    let point = ev.full(&state)?;
    let (best, state, point, trajectory, steps, reason) = walk(
        start,
        state,
        point,
        config,
        ev,
        restart,
        |p| walk_moves(p, config),
        |p| Some(GaussianState::new(normal_form_matrix(p))),
    )?;
    Ok(SearchResult {
        best_params: SearchParams::NormalForm { lambda: best.lambda },
        best_cov: CovarianceFile::from_state(&state, Some(&ev.partition)),
        best_e: point.e,
        best_p: point.p,
        trajectory,
        rng_seed: config.seed,
        steps_taken: steps,
        stop_reason: reason,
        restarts: restart,
        certifier_calls: ev.calls,
        draws: 0,
        indeterminate_candidates: ev.indeterminate,
    })
}

/// Which circuit parameters the walk may change.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitMask {
    pub source_variances: bool,
    pub orientations: bool,
    pub transmissivities: bool,
    pub phases: bool,
}

impl CircuitMask {
    pub fn ratios() -> Self {
        CircuitMask { transmissivities: true, ..Default::default() }
    }

    pub fn is_empty(&self) -> bool {
        !(self.source_variances || self.orientations || self.transmissivities || self.phases)
    }

    /// Parses a comma-separated list of `variances`, `orientations`, `ratios`,
    /// `phases`; the empty string gives the empty mask.
    pub fn parse(text: &str) -> Result<Self> {
        let mut mask = CircuitMask::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "variances" => mask.source_variances = true,
                "orientations" => mask.orientations = true,
                "ratios" => mask.transmissivities = true,
                "phases" => mask.phases = true,
                other => return Err(Error::invalid(format!("unknown circuit parameter class `{other}`"))),
            }
        }
        Ok(mask)
    }
}

/// Step sizes of the circuit walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitSteps {
    pub variance: f64,
    pub ratio: f64,
    pub angle_deg: f64,
}

impl Default for CircuitSteps {
    fn default() -> Self {
        CircuitSteps { variance: 0.01, ratio: 0.01, angle_deg: 1.0 }
    }
}

#[derive(Debug, Clone, Copy)]
enum Knob {
    VMin(usize),
    VMax(usize),
    Orientation(usize),
    Ratio(usize),
    Phase(usize),
}

fn knobs(spec: &CircuitSpec, mask: &CircuitMask) -> Vec<Knob> {
    let mut out = Vec::new();
    for (k, s) in spec.sources.iter().enumerate() {
        if s.kind != SourceKind::SqueezedThermal {
            continue;
        }
        if mask.source_variances {
            out.extend([Knob::VMin(k), Knob::VMax(k)]);
        }
        if mask.orientations {
            out.push(Knob::Orientation(k));
        }
    }
    for (k, g) in spec.gates.iter().enumerate() {
        match g {
            GateSpec::PhaseGate(_) => {
                if mask.transmissivities {
                    out.push(Knob::Ratio(k));
                }
                if mask.phases {
                    out.push(Knob::Phase(k));
                }
            }
            GateSpec::Rotation { .. } => {
                if mask.phases {
                    out.push(Knob::Phase(k));
                }
            }
        }
    }
    out
}

fn nudge(spec: &CircuitSpec, knob: Knob, sign: f64, steps: &CircuitSteps) -> CircuitSpec {
    let mut s = spec.clone();
    match knob {
        Knob::VMin(k) => s.sources[k].v_min += sign * steps.variance,
        Knob::VMax(k) => s.sources[k].v_max += sign * steps.variance,
        Knob::Orientation(k) => s.sources[k].orientation_deg += sign * steps.angle_deg,
        Knob::Ratio(k) => {
            if let GateSpec::PhaseGate(g) = &mut s.gates[k] {
                g.transmissivity += sign * steps.ratio;
            }
        }
        Knob::Phase(k) => match &mut s.gates[k] {
            GateSpec::PhaseGate(g) => g.phase_deg = (g.phase_deg + sign * steps.angle_deg).rem_euclid(360.0),
            GateSpec::Rotation { angle_deg, .. } => *angle_deg += sign * steps.angle_deg,
        },
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub pass: bool,
    pub reasons: Vec<String>,
}

/// Default floor on `v_min` for [`feasibility_filter`].
pub const SQUEEZING_FLOOR: f64 = 0.5;

/// Passes iff every source has `v_min >= floor` and at most one source is hot.
pub fn feasibility_filter(spec: &CircuitSpec, squeezing_floor: f64) -> FilterVerdict {
    let mut reasons = Vec::new();
    let hot = spec.sources.iter().filter(|s| s.is_hot()).count();
    if hot > 1 {
        reasons.push("multiple hot-squeezed modes".to_string());
    }
    let low: Vec<String> = spec
        .sources
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == SourceKind::SqueezedThermal && s.v_min < squeezing_floor)
        .map(|(k, _)| (k + 1).to_string())
        .collect();
    if !low.is_empty() {
        reasons.push(format!("unachievable squeezing (source {})", low.join(", ")));
    }
    FilterVerdict { pass: reasons.is_empty(), reasons }
}

/// Axis moves over the masked circuit parameters. Candidates that leave the
/// valid parameter range or fail [`feasibility_filter`] are skipped.
pub fn random_walk_circuit(
    base: &CircuitSpec,
    mask: &CircuitMask,
    steps: &CircuitSteps,
    config: &WalkConfig,
) -> Result<SearchResult> {
    config.validate()?;
    let partition =
        base.partition.clone().ok_or_else(|| Error::invalid("circuit walk needs a partition in the base circuit"))?;
    let mut ev = Evaluator::new(partition.clone(), config);
    let state = simulate_circuit(base)?;
    let point = ev.full(&state)?;
    let knob_list = knobs(base, mask);
    let cfg = if knob_list.is_empty() { WalkConfig { max_steps: 0, ..*config } } else { *config };
    let (best, state, point, trajectory, steps_taken, reason) = walk(
        base.clone(),
        state,
        point,
        &cfg,
        &mut ev,
        0,
        |spec| knob_list.iter().flat_map(|&k| [nudge(spec, k, 1.0, steps), nudge(spec, k, -1.0, steps)]).collect(),
        |spec| {
            if !feasibility_filter(spec, SQUEEZING_FLOOR).pass && mask.source_variances {
                return None;
            }
            simulate_circuit(spec).ok()
        },
    )?;
    Ok(SearchResult {
        best_params: SearchParams::Circuit { circuit: best },
        best_cov: CovarianceFile::from_state(&state, Some(&partition)),
        best_e: point.e,
        best_p: point.p,
        trajectory,
        rng_seed: config.seed,
        steps_taken,
        stop_reason: if knob_list.is_empty() { StopReason::EmptyMask } else { reason },
        restarts: 0,
        certifier_calls: ev.calls,
        draws: 0,
        indeterminate_candidates: ev.indeterminate,
    })
}
