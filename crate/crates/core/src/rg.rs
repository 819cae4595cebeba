//! The renormalization loop, its trace, and reconstructions of the input state.

use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::bounds::{aggregate_local_modes, entanglement_bound, BoundReport};
use crate::distiller::{
    classify_bands, global_distiller, local_distill, region_modes, BandCounts, BandLabel, BandStatus,
    DistillerBands,
};
use crate::gaussian::{rotate, subspace_entropy, CorrelationMatrix, Lattice};
use crate::linalg::{self, CMat};
use crate::model::{ground_state_correlation_with, DegeneracyPolicy, FermiTieBreak, ModelSpec};
use crate::wannier::{wannierize_bands, WannierBasis};
use crate::zipper::{
    assemble_zipper, block, factorization_residual, round_to_factorized, FactorizationResidual,
};
use crate::{c64, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RGConfig {
    /// Threshold per step; the last entry repeats.
    pub epsilon_schedule: Vec<f64>,
    pub region_width_cells: usize,
    pub blocking_factor: usize,
    /// Distiller eigenvalues with `|lambda| < delta_null` are courier.
    pub delta_null: f64,
    /// Smallest accepted gap between frozen and courier bands.
    pub gap_min: f64,
    pub max_steps: usize,
    /// Stop once at most this many courier modes remain.
    pub core_size_threshold: usize,
    /// A step aborts when the frozen residual exceeds this multiple of epsilon.
    pub residual_abort_multiplier: f64,
    pub degeneracy: DegeneracyPolicy,
    pub epsilon_clock: EpsilonClock,
}

/// How steps are mapped onto `epsilon_schedule`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonClock {
    /// Step `i` uses entry `min(i, last)`.
    #[default]
    Absolute,
    /// The schedule starts at the first step whose local region has a frozen
    /// mode; earlier steps use the first entry.
    FirstDistillation,
}

impl EpsilonClock {
    pub fn as_str(&self) -> &'static str {
        match self {
            EpsilonClock::Absolute => "absolute",
            EpsilonClock::FirstDistillation => "first_distillation",
        }
    }
}

impl Default for RGConfig {
    fn default() -> Self {
        RGConfig {
            epsilon_schedule: vec![1e-4],
            region_width_cells: 2,
            blocking_factor: 2,
            delta_null: 1e-6,
            gap_min: 0.1,
            max_steps: 64,
            core_size_threshold: 8,
            residual_abort_multiplier: 10.0,
            degeneracy: DegeneracyPolicy::default(),
            epsilon_clock: EpsilonClock::Absolute,
        }
    }
}

impl RGConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        RGConfig {
            epsilon_schedule: vec![epsilon],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon_schedule.is_empty() {
            return Err(Error::Config("epsilon_schedule is empty".into()));
        }
        if let Some(bad) = self.epsilon_schedule.iter().find(|&&e| !(e > 0.0 && e < 0.5)) {
            return Err(Error::Config(format!("epsilon_schedule entry {bad} outside (0, 1/2)")));
        }
        let positive = [
            ("region_width_cells", self.region_width_cells as f64),
            ("blocking_factor", self.blocking_factor as f64),
            ("delta_null", self.delta_null),
            ("gap_min", self.gap_min),
            ("max_steps", self.max_steps as f64),
            ("residual_abort_multiplier", self.residual_abort_multiplier),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    /// Threshold used at (zero-based) step `i`.
    pub fn epsilon(&self, i: usize) -> f64 {
        self.epsilon_schedule[i.min(self.epsilon_schedule.len() - 1)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    CoreThreshold,
    FullyDistilled,
    MaxSteps,
    ConsecutiveRejections,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::CoreThreshold => "core_threshold",
            TerminationReason::FullyDistilled => "fully_distilled",
            TerminationReason::MaxSteps => "max_steps",
            TerminationReason::ConsecutiveRejections => "consecutive_rejections",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Accepted,
    /// Nothing frozen anywhere; the zipper is the identity.
    Trivial,
    Rejected(String),
}

#[derive(Clone, Debug)]
pub struct WannierSummary {
    pub group: BandLabel,
    pub count: usize,
    pub decay_rate: f64,
    pub max_spread: f64,
    pub condition: f64,
}

impl WannierSummary {
    fn of(group: BandLabel, basis: &WannierBasis) -> Self {
        WannierSummary {
            group,
            count: basis.len(),
            decay_rate: basis.decay_rate(),
            max_spread: basis.max_spread(),
            condition: basis.condition,
        }
    }
}

/// Diagnostics of an accepted zipper step.
#[derive(Clone, Debug)]
pub struct ZipperRecord {
    pub unitarity_residual: f64,
    pub spectrum_residual: f64,
    pub residual: FactorizationResidual,
    pub courier_eigen_range: Option<(f64, f64)>,
    pub clipped: bool,
    /// Entropy of the rotated state on the frozen (filled + empty) block.
    pub s_cut: f64,
    /// Entropy of the courier block of the rotated state.
    pub s_courier_block: f64,
    pub wannier: Vec<WannierSummary>,
}

#[derive(Clone, Debug)]
pub struct StepRecord {
    pub index: usize,
    pub lattice: Lattice,
    pub lattice_exponent: u32,
    pub epsilon: f64,
    /// Occupations of the reference region, descending.
    pub local_occupations: Vec<f64>,
    pub local_filled: usize,
    pub local_empty: usize,
    pub bands: Option<DistillerBands>,
    /// Filled, courier and empty modes per cell.
    pub counts: BandCounts,
    pub outcome: StepOutcome,
    pub zipper: Option<ZipperRecord>,
    pub bound: Option<BoundReport>,
    pub trace_before: f64,
    pub trace_after: f64,
    /// Filled Wannier functions embedded in the original mode space.
    pub filled_embedding: CMat,
    /// Courier space of this step embedded in the original mode space.
    pub embedding: Arc<CMat>,
    pub blocked: bool,
}

impl StepRecord {
    pub fn is_accepted(&self) -> bool {
        self.outcome == StepOutcome::Accepted
    }

    /// Accepted and removed at least one mode.
    pub fn is_nontrivial(&self) -> bool {
        self.is_accepted() && self.counts.frozen() > 0
    }

    pub fn filled_total(&self) -> usize {
        self.counts.filled * self.lattice.cells
    }

    pub fn empty_total(&self) -> usize {
        self.counts.empty * self.lattice.cells
    }
}

#[derive(Clone, Debug)]
pub struct RGTrace {
    pub config: RGConfig,
    /// The model the input state came from, if any.
    pub model: Option<ModelSpec>,
    pub initial: CorrelationMatrix,
    pub tie_break: Option<FermiTieBreak>,
    pub steps: Vec<StepRecord>,
    pub core: CorrelationMatrix,
    /// Core modes embedded in the original mode space.
    pub core_embedding: Arc<CMat>,
    pub termination: TerminationReason,
}

impl RGTrace {
    pub fn core_modes(&self) -> usize {
        self.core.dim()
    }

    pub fn nontrivial_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.is_nontrivial()).count()
    }

    /// `sum_i (filled_i + empty_i) eps_i`, the particle-number slack allowed
    /// by rounding.
    pub fn rounding_budget(&self) -> f64 {
        self.steps
            .iter()
            .filter(|s| s.is_accepted())
            .map(|s| (s.filled_total() + s.empty_total()) as f64 * s.epsilon)
            .sum()
    }

    /// `trace(C) - sum_i filled_i - trace(C_core)`.
    pub fn particle_ledger_residual(&self) -> f64 {
        let filled: usize = self
            .steps
            .iter()
            .filter(|s| s.is_accepted())
            .map(|s| s.filled_total())
            .sum();
        self.initial.trace() - filled as f64 - self.core.trace()
    }
}

/// Runs the renormalization on the ground state of `spec`.
pub fn run_zer(spec: &ModelSpec, config: &RGConfig) -> Result<RGTrace> {
    config.validate()?;
    let ground = ground_state_correlation_with(spec, config.degeneracy)?;
    let mut trace = run_zer_on(ground.correlation, config)?;
    trace.model = Some(spec.clone());
    trace.tie_break = ground.tie_break;
    Ok(trace)
}

/// Runs the renormalization on a translation-invariant state.
pub fn run_zer_on(initial: CorrelationMatrix, config: &RGConfig) -> Result<RGTrace> {
    config.validate()?;
    if initial.lattice().is_none() {
        return Err(Error::Dimension("the input state needs a lattice".into()));
    }
    let n0 = initial.dim();
    let mut state = initial.clone();
    let mut embedding = Arc::new(Mat::<c64>::identity(n0, n0));
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut stalls = 0usize;
    let mut clock_start = match config.epsilon_clock {
        EpsilonClock::Absolute => Some(0),
        EpsilonClock::FirstDistillation => None,
    };

    let termination = loop {
        let n = state.dim();
        if n == 0 {
            break TerminationReason::FullyDistilled;
        }
        if n <= config.core_size_threshold {
            break TerminationReason::CoreThreshold;
        }
        if steps.len() >= config.max_steps {
            break TerminationReason::MaxSteps;
        }
        if stalls >= 2 {
            break TerminationReason::ConsecutiveRejections;
        }

        let index = steps.len();
        let epsilon = config.epsilon(clock_start.map_or(0, |s| index - s));
        let (mut record, next) = step(&state, config, index, epsilon, &embedding)?;
        if clock_start.is_none() && record.local_filled + record.local_empty > 0 {
            clock_start = Some(index);
        }
        embedding = record.embedding.clone();
        state = next;

        let distilled = record.is_nontrivial();
        let cells = state.lattice().map_or(0, |l| l.cells);
        if state.dim() > 0 && cells % config.blocking_factor == 0 && cells / config.blocking_factor > 0 {
            state = block(&state, config.blocking_factor).map_err(|e| e.at(index, "zipper"))?;
            record.blocked = config.blocking_factor > 1;
        }
        stalls = if distilled || record.blocked { 0 } else { stalls + 1 };
        steps.push(record);
    };

    Ok(RGTrace {
        config: config.clone(),
        model: None,
        initial,
        tie_break: None,
        steps,
        core: state,
        core_embedding: embedding,
        termination,
    })
}

/// One distillation attempt. Returns the record and the rounded (unblocked)
/// courier state.
fn step(
    state: &CorrelationMatrix,
    config: &RGConfig,
    index: usize,
    epsilon: f64,
    embedding: &Arc<CMat>,
) -> Result<(StepRecord, CorrelationMatrix)> {
    let lattice = state.lattice().expect("states carry a lattice");
    let width = config.region_width_cells;
    let n0 = embedding.nrows();
    let mut record = StepRecord {
        index,
        lattice,
        lattice_exponent: state.lattice_exponent(),
        epsilon,
        local_occupations: Vec::new(),
        local_filled: 0,
        local_empty: 0,
        bands: None,
        counts: BandCounts {
            filled: 0,
            courier: lattice.orbitals,
            empty: 0,
        },
        outcome: StepOutcome::Trivial,
        zipper: None,
        bound: None,
        trace_before: state.trace(),
        trace_after: state.trace(),
        filled_embedding: Mat::zeros(n0, 0),
        embedding: embedding.clone(),
        blocked: false,
    };
    let unchanged = |record: StepRecord, outcome: StepOutcome| Ok((StepRecord { outcome, ..record }, state.clone()));

    if 2 * (width - 1) >= lattice.cells || width > lattice.cells {
        return unchanged(record, StepOutcome::Rejected("ring too small for the region".into()));
    }

    let region = region_modes(lattice, 0, width);
    let local = local_distill(state, &region, epsilon).map_err(|e| e.at(index, "distiller"))?;
    record.local_occupations = local.occupations.clone();
    record.local_filled = local.filled_vectors.ncols();
    record.local_empty = local.empty_vectors.ncols();
    if local.is_trivial() {
        return unchanged(record, StepOutcome::Trivial);
    }

    let global = global_distiller(state, &local).map_err(|e| e.at(index, "distiller"))?;
    let bands = classify_bands(&global, config.delta_null, config.gap_min).map_err(|e| e.at(index, "distiller"))?;
    let status = bands.status.clone();
    record.bands = Some(bands);
    match status {
        BandStatus::Trivial => return unchanged(record, StepOutcome::Trivial),
        BandStatus::Rejected(reason) => return unchanged(record, StepOutcome::Rejected(reason)),
        BandStatus::Accepted => {}
    }
    let bands = record.bands.as_ref().unwrap();
    let counts = bands.counts;

    let n = state.dim();
    let mut bases = Vec::with_capacity(3);
    for group in [BandLabel::Filled, BandLabel::Courier, BandLabel::Empty] {
        if bands.group_range(group).is_empty() {
            bases.push(WannierBasis::empty(n));
            continue;
        }
        match wannierize_bands(bands, group) {
            Ok(basis) => bases.push(basis),
            Err(e) => {
                return unchanged(record, StepOutcome::Rejected(format!("{group} Wannierization failed: {e}")))
            }
        }
    }
    let zipper = assemble_zipper(&bases[0], &bases[1], &bases[2]).map_err(|e| e.at(index, "zipper"))?;
    let rotated = rotate(state, &zipper.u).map_err(|e| e.at(index, "zipper"))?;
    let before = linalg::eigvalsh(state.density().as_ref())?;
    let after = linalg::eigvalsh(linalg::hermitize(rotated.density().as_ref()).as_ref())?;
    let spectrum_residual = before
        .iter()
        .zip(&after)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let residual = factorization_residual(&rotated, zipper.sizes)?;
    let rounded = match round_to_factorized(&rotated, zipper.sizes, config.residual_abort_multiplier * epsilon) {
        Ok(r) => r,
        Err(e @ Error::ResidualAbort { .. }) => {
            return unchanged(record, StepOutcome::Rejected(e.to_string()));
        }
        Err(e) => return Err(e.at(index, "zipper")),
    };

    let frozen_cols: Vec<usize> = (0..zipper.sizes.filled)
        .chain(zipper.sizes.filled + zipper.sizes.courier..n)
        .collect();
    let frozen = linalg::select_columns(zipper.u.as_ref(), &frozen_cols);
    let s_cut = subspace_entropy(state, frozen.as_ref())?;
    let s_courier_block = subspace_entropy(state, zipper.psi_courier())?;

    let phi_e = (local.empty_vectors.ncols() > 0)
        .then(|| aggregate_local_modes(&local, lattice, BandLabel::Empty))
        .transpose()
        .map_err(|e| e.at(index, "bounds"))?;
    let phi_f = (local.filled_vectors.ncols() > 0)
        .then(|| aggregate_local_modes(&local, lattice, BandLabel::Filled))
        .transpose()
        .map_err(|e| e.at(index, "bounds"))?;
    let bound = entanglement_bound(state, phi_e.as_ref(), phi_f.as_ref(), epsilon).map_err(|e| e.at(index, "bounds"))?;

    record.filled_embedding = embedding.as_ref() * zipper.psi_filled();
    record.embedding = Arc::new(embedding.as_ref() * zipper.psi_courier());
    record.counts = counts;
    record.outcome = StepOutcome::Accepted;
    record.trace_after = rounded.courier.trace();
    record.bound = Some(bound);
    record.zipper = Some(ZipperRecord {
        unitarity_residual: zipper.unitarity_residual,
        spectrum_residual,
        residual,
        courier_eigen_range: rounded.eigen_range,
        clipped: rounded.clipped,
        s_cut,
        s_courier_block,
        wannier: [BandLabel::Filled, BandLabel::Courier, BandLabel::Empty]
            .into_iter()
            .zip(&bases)
            .map(|(g, b)| WannierSummary::of(g, b))
            .collect(),
    });
    Ok((record, rounded.courier))
}

/// `C_approx^T = sum_i Phi_i Phi_i^dag + V C_core^T V^dag`, returned as `C_approx`.
pub fn reconstruct(trace: &RGTrace) -> CorrelationMatrix {
    let mut density = core_density(trace);
    for s in &trace.steps {
        if s.filled_embedding.ncols() > 0 {
            density += &s.filled_embedding * s.filled_embedding.adjoint();
        }
    }
    with_initial_labels(trace, density)
}

fn core_density(trace: &RGTrace) -> CMat {
    let v = trace.core_embedding.as_ref();
    v * trace.core.density() * v.adjoint()
}

fn with_initial_labels(trace: &RGTrace, density: CMat) -> CorrelationMatrix {
    let l = trace.initial.lattice().expect("initial state has a lattice");
    CorrelationMatrix::from_density(density, l.cells, l.orbitals, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// Filled modes distilled at the given step.
    Step(usize),
    Core,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::Step(i) => write!(f, "{}", i + 1),
            Level::Core => f.write_str("core"),
        }
    }
}

/// Per-level contributions to the reconstruction: one term per step (zero
/// when nothing was filled) followed by the core term.
pub fn level_decomposition(trace: &RGTrace) -> Vec<(Level, CorrelationMatrix)> {
    let n = trace.initial.dim();
    let mut levels: Vec<(Level, CorrelationMatrix)> = trace
        .steps
        .iter()
        .map(|s| {
            let d = if s.filled_embedding.ncols() > 0 {
                &s.filled_embedding * s.filled_embedding.adjoint()
            } else {
                Mat::zeros(n, n)
            };
            (Level::Step(s.index), with_initial_labels(trace, d))
        })
        .collect();
    levels.push((Level::Core, with_initial_labels(trace, core_density(trace))));
    levels
}

/// Unitary DFT over cells, `F[j, x] = exp(-i k_j x) / sqrt(L)`.
fn dft(cells: usize) -> CMat {
    let norm = 1.0 / (cells as f64).sqrt();
    Mat::from_fn(cells, cells, |j, x| linalg::root_of_unity(-((j * x) as i64), cells) * norm)
}

/// `n_k = sum_a <psi_{k,a}| D |psi_{k,a}>` for `D = W M W^dag` (or `W W^dag`
/// when `middle` is `None`), summed over orbitals.
fn occupation(cells: usize, orbitals: usize, w: &CMat, middle: Option<&CMat>) -> Vec<f64> {
    let f = dft(cells);
    let mut n_k = vec![0.0; cells];
    if w.ncols() == 0 {
        return n_k;
    }
    for a in 0..orbitals {
        let rows = Mat::<c64>::from_fn(cells, w.ncols(), |x, c| w[(x * orbitals + a, c)]);
        let fw = &f * &rows;
        let weighted = match middle {
            Some(m) => &fw * m,
            None => fw.clone(),
        };
        for (j, nk) in n_k.iter_mut().enumerate() {
            let mut acc = 0.0;
            for c in 0..fw.ncols() {
                acc += (weighted[(j, c)] * fw[(j, c)].conj()).re;
            }
            *nk += acc;
        }
    }
    n_k
}

/// Momentum occupation of every level (same order as [`level_decomposition`]).
pub fn momentum_occupation(trace: &RGTrace) -> Vec<(Level, Vec<f64>)> {
    let l = trace.initial.lattice().expect("initial state has a lattice");
    let mut out: Vec<(Level, Vec<f64>)> = trace
        .steps
        .iter()
        .map(|s| (Level::Step(s.index), occupation(l.cells, l.orbitals, &s.filled_embedding, None)))
        .collect();
    let core = trace.core.density();
    out.push((
        Level::Core,
        occupation(l.cells, l.orbitals, trace.core_embedding.as_ref(), Some(&core)),
    ));
    out
}

/// Momentum occupation of a state on a lattice.
pub fn exact_momentum_occupation(c: &CorrelationMatrix) -> Vec<f64> {
    let l = c.lattice().expect("state has a lattice");
    let n = c.dim();
    occupation(l.cells, l.orbitals, &Mat::identity(n, n), Some(&c.density()))
}
