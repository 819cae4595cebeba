//! Run configuration, presets and artifact emission for the `zer` binary.
//!
//! A run is described by a TOML document with a `[model]` table, optional
//! `[rg]` and `[outputs]` tables and a top-level `seed`. Unknown keys are
//! rejected. Tables are written to the output directory as CSV with every
//! real number printed to 12 significant digits; the trace is JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bounds::{BoundReport, GroupBound};
use crate::model::{ground_state_correlation_with, DegeneracyPolicy, GroundState, Hopping, ModelSpec};
use crate::rg::{
    exact_momentum_occupation, level_decomposition, momentum_occupation, reconstruct, run_zer_on, EpsilonClock,
    Level, RGConfig, RGTrace, StepOutcome, StepRecord,
};
use crate::{c64, linalg, CorrelationMatrix};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(#[from] crate::Error),
}

impl CliError {
    /// 2 for configuration and output problems, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Ssh,
    Nn,
    Extended,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Ssh, Preset::Nn, Preset::Extended];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Ssh => "ssh",
            Preset::Nn => "nn",
            Preset::Extended => "extended",
        }
    }

    pub fn source(&self) -> &'static str {
        match self {
            Preset::Ssh => include_str!("../presets/ssh.toml"),
            Preset::Nn => include_str!("../presets/nn.toml"),
            Preset::Extended => include_str!("../presets/extended.toml"),
        }
    }

    pub fn config(&self) -> Result<RunConfig, CliError> {
        parse_config_str(self.source())
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown preset `{s}` (expected ssh, nn or extended)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Trace,
    BandStructure,
    Correlations,
    LevelDecomposition,
    MomentumOccupation,
    Bounds,
    Matrices,
}

impl Artifact {
    pub const ALL: [Artifact; 7] = [
        Artifact::Trace,
        Artifact::BandStructure,
        Artifact::Correlations,
        Artifact::LevelDecomposition,
        Artifact::MomentumOccupation,
        Artifact::Bounds,
        Artifact::Matrices,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Artifact::Trace => "trace",
            Artifact::BandStructure => "band_structure",
            Artifact::Correlations => "correlations",
            Artifact::LevelDecomposition => "level_decomposition",
            Artifact::MomentumOccupation => "momentum_occupation",
            Artifact::Bounds => "bounds",
            Artifact::Matrices => "matrices",
        }
    }
}

impl FromStr for Artifact {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Artifact::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown artifact `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Two-band SSH chain with `t1` (intra-cell) and `t2` (inter-cell).
    Ssh,
    /// One-band chain with `t1` (nearest) and optional `t2` (next-nearest).
    Chain,
    /// Explicit hopping list on `orbitals` orbitals per cell.
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoppingConfig {
    pub delta: i64,
    pub to: usize,
    pub from: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub cells: usize,
    pub filling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbitals: Option<usize>,
    #[serde(default)]
    pub degeneracy: DegeneracyPolicy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hoppings: Vec<HoppingConfig>,
}

impl ModelConfig {
    pub fn spec(&self) -> Result<ModelSpec, CliError> {
        let required = |value: Option<f64>, name: &str| {
            value.ok_or_else(|| CliError::Config(format!("model.{name} is required for kind = \"{}\"", self.kind_name())))
        };
        let forbid = |present: bool, name: &str| {
            if present {
                Err(CliError::Config(format!("model.{name} is not used by kind = \"{}\"", self.kind_name())))
            } else {
                Ok(())
            }
        };
        let model_error = |e: crate::Error| CliError::Config(format!("model: {e}"));
        match self.kind {
            ModelKind::Ssh => {
                forbid(self.orbitals.is_some(), "orbitals")?;
                forbid(!self.hoppings.is_empty(), "hoppings")?;
                let (t1, t2) = (required(self.t1, "t1")?, required(self.t2, "t2")?);
                ModelSpec::ssh(self.cells, t1, t2)
                    .and_then(|s| s.with_filling(self.filling))
                    .map_err(model_error)
            }
            ModelKind::Chain => {
                forbid(self.orbitals.is_some(), "orbitals")?;
                forbid(!self.hoppings.is_empty(), "hoppings")?;
                let t1 = required(self.t1, "t1")?;
                ModelSpec::chain(self.cells, t1, self.t2.unwrap_or(0.0), self.filling).map_err(model_error)
            }
            ModelKind::Custom => {
                forbid(self.t1.is_some(), "t1")?;
                forbid(self.t2.is_some(), "t2")?;
                let orbitals = self
                    .orbitals
                    .ok_or_else(|| CliError::Config("model.orbitals is required for kind = \"custom\"".into()))?;
                let hoppings = self
                    .hoppings
                    .iter()
                    .map(|h| Hopping::new(h.delta, h.to, h.from, c64::new(h.re, h.im)))
                    .collect();
                ModelSpec::new(self.cells, orbitals, hoppings, self.filling).map_err(model_error)
            }
        }
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            ModelKind::Ssh => "ssh",
            ModelKind::Chain => "chain",
            ModelKind::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RgSection {
    pub epsilon_schedule: Vec<f64>,
    pub epsilon_clock: EpsilonClock,
    pub region_width_cells: usize,
    pub blocking_factor: usize,
    pub delta_null: f64,
    pub gap_min: f64,
    pub max_steps: usize,
    pub core_size_threshold: usize,
    pub residual_abort_multiplier: f64,
}

impl Default for RgSection {
    fn default() -> Self {
        let c = RGConfig::default();
        RgSection {
            epsilon_schedule: c.epsilon_schedule,
            epsilon_clock: c.epsilon_clock,
            region_width_cells: c.region_width_cells,
            blocking_factor: c.blocking_factor,
            delta_null: c.delta_null,
            gap_min: c.gap_min,
            max_steps: c.max_steps,
            core_size_threshold: c.core_size_threshold,
            residual_abort_multiplier: c.residual_abort_multiplier,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    pub artifacts: Vec<Artifact>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            dir: PathBuf::from("zer-out"),
            artifacts: Artifact::ALL.into_iter().filter(|a| *a != Artifact::Matrices).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Only used by randomized self-tests; the pipeline is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default)]
    pub rg: RgSection,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        self.model.spec()
    }

    pub fn rg_config(&self) -> Result<RGConfig, CliError> {
        let r = &self.rg;
        let config = RGConfig {
            epsilon_schedule: r.epsilon_schedule.clone(),
            region_width_cells: r.region_width_cells,
            blocking_factor: r.blocking_factor,
            delta_null: r.delta_null,
            gap_min: r.gap_min,
            max_steps: r.max_steps,
            core_size_threshold: r.core_size_threshold,
            residual_abort_multiplier: r.residual_abort_multiplier,
            degeneracy: self.model.degeneracy,
            epsilon_clock: r.epsilon_clock,
        };
        config.validate().map_err(|e| CliError::Config(format!("rg: {e}")))?;
        Ok(config)
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<(), CliError> {
        self.model_spec()?;
        self.rg_config()?;
        if self.outputs.artifacts.is_empty() {
            return Err(CliError::Config("outputs.artifacts is empty".into()));
        }
        Ok(())
    }

    /// The configuration with all defaults filled in, as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("run configurations serialize")
    }

    fn wants(&self, artifact: Artifact) -> bool {
        self.outputs.artifacts.contains(&artifact)
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    parse_config_str(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        e => e,
    })
}

/// Loads a preset, a config file, or a config file layered over a preset.
pub fn load(config: Option<&Path>, preset: Option<Preset>) -> Result<RunConfig, CliError> {
    match (config, preset) {
        (None, None) => Err(CliError::Config("give a config file or --preset".into())),
        (Some(path), None) => parse_config(path),
        (None, Some(p)) => p.config(),
        (Some(path), Some(p)) => {
            let text = fs::read_to_string(path).map_err(io_error(path))?;
            let parse = |s: &str, what: &str| {
                s.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{what}: {e}")))
            };
            let mut base = parse(p.source(), p.name())?;
            merge(&mut base, parse(&text, &path.display().to_string())?);
            let config: RunConfig = toml::Value::Table(base)
                .try_into()
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            config.validate()?;
            Ok(config)
        }
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// What a finished run reports back.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub termination: &'static str,
    pub core_modes: usize,
    pub nontrivial_steps: usize,
    pub max_correlation_error: f64,
    pub files: Vec<PathBuf>,
}

/// Everything a run computes, before anything is written.
pub struct Computation {
    pub ground: GroundState,
    pub trace: RGTrace,
    pub reconstruction: CorrelationMatrix,
    pub levels: Vec<(Level, CorrelationMatrix)>,
}

pub fn compute(config: &RunConfig) -> Result<Computation, CliError> {
    let spec = config.model_spec()?;
    let rg = config.rg_config()?;
    let ground = ground_state_correlation_with(&spec, rg.degeneracy)?;
    let mut trace = run_zer_on(ground.correlation.clone(), &rg)?;
    trace.model = Some(spec);
    trace.tie_break = ground.tie_break.clone();
    let reconstruction = reconstruct(&trace);
    let levels = level_decomposition(&trace);
    Ok(Computation {
        ground,
        trace,
        reconstruction,
        levels,
    })
}

/// Runs the configuration and writes the requested artifacts.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    config.validate()?;
    let dir = &config.outputs.dir;
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let computed = compute(config)?;
    let files = render(config, &computed);
    let written = write_atomically(dir, &files)?;
    Ok(RunSummary {
        termination: computed.trace.termination.as_str(),
        core_modes: computed.trace.core_modes(),
        nontrivial_steps: computed.trace.nontrivial_steps(),
        max_correlation_error: max_correlation_error(&computed),
        files: written,
    })
}

/// Largest `|<c^dag_x c_0>_exact - <c^dag_x c_0>_zer|` over sites `x`.
pub fn max_correlation_error(c: &Computation) -> f64 {
    let exact = c.trace.initial.data();
    let approx = c.reconstruction.data();
    (0..exact.nrows())
        .map(|x| (exact[(x, 0)] - approx[(x, 0)]).norm())
        .fold(0.0, f64::max)
}

/// Renders the requested artifacts as `(file name, contents)`, sorted by name.
pub fn render(config: &RunConfig, c: &Computation) -> Vec<(String, String)> {
    let mut files = Vec::new();
    if config.wants(Artifact::Trace) {
        files.push(("trace.json".to_string(), trace_document(config, c)));
    }
    if config.wants(Artifact::BandStructure) {
        files.push(("band_structure.csv".to_string(), band_table(&c.trace)));
    }
    if config.wants(Artifact::Correlations) {
        files.push(("correlations.csv".to_string(), correlation_table(c)));
    }
    if config.wants(Artifact::LevelDecomposition) {
        files.push(("level_decomposition.csv".to_string(), level_table(c)));
    }
    if config.wants(Artifact::MomentumOccupation) {
        files.push(("momentum_occupation.csv".to_string(), momentum_table(&c.trace)));
    }
    if config.wants(Artifact::Bounds) {
        files.push(("bounds.csv".to_string(), bounds_table(&c.trace)));
    }
    if config.wants(Artifact::Matrices) {
        files.push(("matrix_initial.csv".to_string(), matrix_table(&c.trace.initial)));
        files.push(("matrix_reconstructed.csv".to_string(), matrix_table(&c.reconstruction)));
        files.push(("matrix_core.csv".to_string(), matrix_table(&c.trace.core)));
    }
    files.sort();
    files
}

/// Writes every file under a temporary name first and renames them into
/// place only once all of them were written.
fn write_atomically(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>, CliError> {
    let staged: Vec<(PathBuf, PathBuf)> = files
        .iter()
        .map(|(name, _)| (dir.join(format!(".{name}.tmp")), dir.join(name)))
        .collect();
    let cleanup = |upto: usize| {
        for (tmp, _) in &staged[..upto] {
            let _ = fs::remove_file(tmp);
        }
    };
    for (i, ((tmp, _), (_, body))) in staged.iter().zip(files).enumerate() {
        if let Err(e) = fs::write(tmp, body) {
            cleanup(i + 1);
            return Err(io_error(tmp)(e));
        }
    }
    for (tmp, path) in &staged {
        if let Err(e) = fs::rename(tmp, path) {
            cleanup(staged.len());
            return Err(io_error(path)(e));
        }
    }
    Ok(staged.into_iter().map(|(_, p)| p).collect())
}

/// 12 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        let rounded: f64 = format!("{x:.11e}").parse().expect("formatted floats parse");
        json!(rounded)
    } else {
        json!(format!("{x}"))
    }
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn outcome_name(outcome: &StepOutcome) -> &'static str {
    match outcome {
        StepOutcome::Accepted => "accepted",
        StepOutcome::Trivial => "trivial",
        StepOutcome::Rejected(_) => "rejected",
    }
}

fn group_json(g: &GroupBound) -> Value {
    json!({
        "z": num(g.z),
        "rank": g.rank,
        "min_singular_sq": num(g.min_singular_sq),
        "eps_tight": num(g.eps_tight),
        "bound": opt_num(g.bound),
        "bound_raw": opt_num(g.bound_raw),
    })
}

fn bound_json(b: &BoundReport) -> Value {
    json!({
        "cells": b.cells,
        "epsilon": num(b.epsilon),
        "empty": group_json(&b.empty),
        "filled": group_json(&b.filled),
        "bound_total": opt_num(b.bound_total),
        "bound_total_raw": opt_num(b.bound_total_raw),
        "s_courier_measured": num(b.s_courier_measured),
        "holds": b.holds(),
    })
}

fn step_json(s: &StepRecord) -> Value {
    let mut m = Map::new();
    m.insert("index".into(), json!(s.index));
    m.insert("cells".into(), json!(s.lattice.cells));
    m.insert("orbitals".into(), json!(s.lattice.orbitals));
    m.insert("lattice_exponent".into(), json!(s.lattice_exponent));
    m.insert("epsilon".into(), num(s.epsilon));
    m.insert("outcome".into(), json!(outcome_name(&s.outcome)));
    if let StepOutcome::Rejected(reason) = &s.outcome {
        m.insert("rejection_reason".into(), json!(reason));
    }
    m.insert("local_filled".into(), json!(s.local_filled));
    m.insert("local_empty".into(), json!(s.local_empty));
    m.insert(
        "counts".into(),
        json!({"filled": s.counts.filled, "courier": s.counts.courier, "empty": s.counts.empty}),
    );
    m.insert("gap".into(), s.bands.as_ref().map_or(Value::Null, |b| num(b.gap)));
    m.insert("trace_before".into(), num(s.trace_before));
    m.insert("trace_after".into(), num(s.trace_after));
    m.insert("blocked".into(), json!(s.blocked));
    m.insert(
        "zipper".into(),
        s.zipper.as_ref().map_or(Value::Null, |z| {
            json!({
                "unitarity_residual": num(z.unitarity_residual),
                "spectrum_residual": num(z.spectrum_residual),
                "offblock_residual": num(z.residual.offblock),
                "frozen_residual": num(z.residual.frozen),
                "courier_eigen_range": z.courier_eigen_range.map_or(Value::Null, |(a, b)| json!([num(a), num(b)])),
                "clipped": z.clipped,
                "s_cut": num(z.s_cut),
                "s_courier_block": num(z.s_courier_block),
                "wannier": z.wannier.iter().map(|w| json!({
                    "group": w.group.to_string(),
                    "count": w.count,
                    "decay_rate": num(w.decay_rate),
                    "max_spread": num(w.max_spread),
                    "condition": num(w.condition),
                })).collect::<Vec<_>>(),
            })
        }),
    );
    m.insert("bound".into(), s.bound.as_ref().map_or(Value::Null, bound_json));
    Value::Object(m)
}

fn trace_document(config: &RunConfig, c: &Computation) -> String {
    let t = &c.trace;
    let l = t.initial.lattice().expect("initial state has a lattice");
    let level_sum = c
        .levels
        .iter()
        .fold(faer::Mat::<c64>::zeros(t.initial.dim(), t.initial.dim()), |acc, (_, m)| acc + m.data());
    let doc = json!({
        "config": serde_json::to_value(config).expect("run configurations serialize"),
        "config_toml": config.echo(),
        "model": {
            "cells": l.cells,
            "orbitals": l.orbitals,
            "modes": t.initial.dim(),
            "filled": c.ground.filled,
            "actual_filling": num(c.ground.actual_filling),
            "fermi_energy": num(c.ground.fermi_energy),
        },
        "tie_break": t.tie_break.as_ref().map_or(Value::Null, |tb| json!({
            "degenerate": tb.degenerate,
            "filled": tb.filled,
        })),
        "termination_reason": t.termination.as_str(),
        "core_modes": t.core_modes(),
        "nontrivial_steps": t.nontrivial_steps(),
        "particle_ledger_residual": num(t.particle_ledger_residual()),
        "rounding_budget": num(t.rounding_budget()),
        "max_correlation_error": num(max_correlation_error(c)),
        "max_reconstruction_error": num(linalg::max_abs_diff(t.initial.data().as_ref(), c.reconstruction.data().as_ref())),
        "level_sum_residual": num(linalg::max_abs_diff(level_sum.as_ref(), c.reconstruction.data().as_ref())),
        "steps": t.steps.iter().map(step_json).collect::<Vec<_>>(),
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("json values serialize");
    out.push('\n');
    out
}

fn band_table(t: &RGTrace) -> String {
    let mut out = String::from("step,k_index,k,band,eigenvalue,label\n");
    for s in &t.steps {
        let Some(bands) = &s.bands else { continue };
        for r in bands.records() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.index + 1,
                r.k_index,
                fmt_real(r.k),
                r.band,
                fmt_real(r.eigenvalue),
                r.label
            )
            .unwrap();
        }
    }
    out
}

fn correlation_table(c: &Computation) -> String {
    let mut out = String::from("x,exact_re,exact_im,zer_re,zer_im,abs_diff");
    for (level, _) in &c.levels {
        write!(out, ",level_{level}_re,level_{level}_im").unwrap();
    }
    out.push('\n');
    let exact = c.trace.initial.data();
    let approx = c.reconstruction.data();
    for x in 0..exact.nrows() {
        let (e, a) = (exact[(x, 0)], approx[(x, 0)]);
        write!(
            out,
            "{x},{},{},{},{},{}",
            fmt_real(e.re),
            fmt_real(e.im),
            fmt_real(a.re),
            fmt_real(a.im),
            fmt_real((e - a).norm())
        )
        .unwrap();
        for (_, m) in &c.levels {
            let v = m.data()[(x, 0)];
            write!(out, ",{},{}", fmt_real(v.re), fmt_real(v.im)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn level_table(c: &Computation) -> String {
    let mut out = String::from("level,modes,particles,max_abs_x0\n");
    for (i, (level, m)) in c.levels.iter().enumerate() {
        let modes = match level {
            Level::Step(_) => c.trace.steps[i].filled_embedding.ncols(),
            Level::Core => c.trace.core_modes(),
        };
        let max_x0 = (0..m.dim()).map(|x| m.data()[(x, 0)].norm()).fold(0.0, f64::max);
        writeln!(out, "{level},{modes},{},{}", fmt_real(m.trace()), fmt_real(max_x0)).unwrap();
    }
    out
}

fn momentum_table(t: &RGTrace) -> String {
    let cells = t.initial.lattice().expect("initial state has a lattice").cells;
    let k = |j: usize| 2.0 * std::f64::consts::PI * j as f64 / cells as f64;
    let mut out = String::from("k_index,k,level,n_k\n");
    let mut rows: Vec<(String, Vec<f64>)> = momentum_occupation(t)
        .into_iter()
        .map(|(level, n)| (level.to_string(), n))
        .collect();
    rows.push(("exact".to_string(), exact_momentum_occupation(&t.initial)));
    for (level, n) in &rows {
        for (j, v) in n.iter().enumerate() {
            writeln!(out, "{j},{},{level},{}", fmt_real(k(j)), fmt_real(*v)).unwrap();
        }
    }
    out
}

fn bounds_table(t: &RGTrace) -> String {
    let mut out = String::from("step,cells,epsilon,z_e,z_f,s_per_cell,bound_per_cell,bound_raw_per_cell,holds\n");
    for s in &t.steps {
        let Some(b) = &s.bound else { continue };
        let per_cell = |x: Option<f64>| x.map_or("".to_string(), |v| fmt_real(v / b.cells as f64));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.index + 1,
            b.cells,
            fmt_real(b.epsilon),
            fmt_real(b.z_e()),
            fmt_real(b.z_f()),
            fmt_real(b.s_courier_measured / b.cells as f64),
            per_cell(b.bound_total),
            per_cell(b.bound_total_raw),
            b.holds()
        )
        .unwrap();
    }
    out
}

fn matrix_table(c: &CorrelationMatrix) -> String {
    let d = c.data();
    let mut out = String::from("row,col,re,im\n");
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            let v = d[(i, j)];
            writeln!(out, "{i},{j},{},{}", fmt_real(v.re), fmt_real(v.im)).unwrap();
        }
    }
    out
}
