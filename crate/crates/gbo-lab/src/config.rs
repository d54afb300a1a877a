//! JSON run configurations.
//!
//! Every document has the same envelope: `schema_version`, `name`, an
//! optional `description` and `seed`, and an `experiment` object keyed by
//! the command it belongs to. Unknown keys are rejected everywhere.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use gbo_core::duhamel::CutoffLemma;
use gbo_core::dynamics::Scheme;
use gbo_core::xlab::{GridPolicy, Recipe};
use gbo_core::{RustFft, SpatialGrid, SpectralField};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Simulate,
    Norms,
    Resonance,
    Xfail,
    Picard,
    Cutoffs,
}

impl Verb {
    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Simulate => "simulate",
            Verb::Norms => "norms",
            Verb::Resonance => "resonance",
            Verb::Xfail => "xfail",
            Verb::Picard => "picard",
            Verb::Cutoffs => "cutoffs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Simulate(SimulateConfig),
    Norms(NormsConfig),
    Resonance(ResonanceConfig),
    Xfail(XfailConfig),
    Picard(PicardConfig),
    Cutoffs(CutoffsConfig),
}

impl Experiment {
    pub fn verb(&self) -> Verb {
        match self {
            Experiment::Simulate(_) => Verb::Simulate,
            Experiment::Norms(_) => Verb::Norms,
            Experiment::Resonance(_) => Verb::Resonance,
            Experiment::Xfail(_) => Verb::Xfail,
            Experiment::Picard(_) => Verb::Picard,
            Experiment::Cutoffs(_) => Verb::Cutoffs,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).context("schema error")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.schema_version == SCHEMA_VERSION,
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            self.schema_version
        );
        ensure!(
            !self.name.is_empty()
                && self
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'),
            "name must be a non-empty [A-Za-z0-9_-] string, got {:?}",
            self.name
        );
        match &self.experiment {
            Experiment::Simulate(c) => c.validate(),
            Experiment::Norms(c) => c.validate(),
            Experiment::Resonance(c) => c.validate(),
            Experiment::Xfail(c) => c.validate(),
            Experiment::Picard(c) => c.validate(),
            Experiment::Cutoffs(c) => c.validate(),
        }
    }
}

fn check_a(a: f64) -> Result<()> {
    ensure!(
        (0.0..=1.0).contains(&a),
        "dispersion exponent a = {a} outside [0, 1]"
    );
    Ok(())
}

fn check_positive(what: &str, x: f64) -> Result<()> {
    ensure!(x.is_finite() && x > 0.0, "{what} must be positive, got {x}");
    Ok(())
}

/// Uniform periodic grid `[−L/2, L/2)` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

impl GridConfig {
    pub fn grid(&self) -> Result<SpatialGrid> {
        ensure!(
            self.n >= 8 && self.n % 2 == 0,
            "grid needs an even n >= 8, got {}",
            self.n
        );
        check_positive("grid length", self.length)?;
        Ok(SpatialGrid::new(self.n, self.length)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeTerm {
    pub mode: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Real initial data on the grid; `mode k` means wavenumber `2πk/L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    Sine {
        amplitude: f64,
        mode: u32,
    },
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    Modes {
        terms: Vec<ModeTerm>,
        #[serde(default)]
        mean: f64,
    },
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialData::Gaussian { width, .. } => check_positive("gaussian width", *width),
            InitialData::Modes { terms, .. } => {
                ensure!(!terms.is_empty(), "mode list is empty");
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        let k = |m: u32| 2.0 * PI * m as f64 / length;
        match self {
            InitialData::Zero => 0.0,
            InitialData::Sine { amplitude, mode } => amplitude * (k(*mode) * x).sin(),
            InitialData::Gaussian {
                amplitude,
                width,
                center,
            } => gbo_core::dynamics::gaussian(x - center, *amplitude, *width),
            InitialData::Modes { terms, mean } => {
                mean + terms
                    .iter()
                    .map(|t| t.cos * (k(t.mode) * x).cos() + t.sin * (k(t.mode) * x).sin())
                    .sum::<f64>()
            }
        }
    }

    pub fn field(&self, fft: &RustFft, grid: SpatialGrid) -> SpectralField {
        let l = grid.length();
        SpectralField::from_fn(fft, grid, |x| self.eval(x, l))
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateTolerances {
    /// Absolute drift of `∫u`.
    pub i1: f64,
    /// Relative drift of `∫u²`.
    pub i2: f64,
    /// Relative drift of the Hamiltonian.
    pub hamiltonian: f64,
    /// Slack on the conservation bound for `sup_t ‖u(t)‖_{H^{s*}}`.
    pub energy_margin: f64,
}

impl Default for SimulateTolerances {
    fn default() -> Self {
        Self {
            i1: 1e-10,
            i2: 1e-8,
            hamiltonian: 1e-6,
            energy_margin: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearCheckConfig {
    pub times: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub sigma: f64,
    pub tolerance: f64,
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

fn default_scheme() -> Scheme {
    Scheme::IfRk4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub a_values: Vec<f64>,
    pub grid: GridConfig,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
    pub initial: InitialData,
    /// Rows written to each trajectory CSV: one every this many steps.
    pub snapshot_every: usize,
    #[serde(default)]
    pub tolerances: SimulateTolerances,
    #[serde(default)]
    pub linear_check: Option<LinearCheckConfig>,
    #[serde(default)]
    pub scaling: Option<ScalingConfig>,
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.a_values.is_empty(), "a_values is empty");
        for &a in &self.a_values {
            check_a(a)?;
        }
        self.grid.grid()?;
        check_positive("dt", self.dt)?;
        ensure!(
            self.t_end.is_finite() && self.t_end >= 0.0,
            "t_end must be nonnegative"
        );
        ensure!(
            self.snapshot_every >= 1,
            "snapshot_every must be at least 1"
        );
        self.initial.validate()?;
        if let Some(l) = &self.linear_check {
            ensure!(!l.times.is_empty(), "linear_check.times is empty");
            check_positive("linear_check.tolerance", l.tolerance)?;
        }
        if let Some(s) = &self.scaling {
            check_positive("scaling.sigma", s.sigma)?;
            check_positive("scaling.tolerance", s.tolerance)?;
        }
        Ok(())
    }
}

// ------------------------------------------------------------------- norms

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormGrid {
    pub nx: usize,
    pub length_x: f64,
    pub nt: usize,
    pub length_t: f64,
}

/// Random windowed flows `ψ((t−t₀)/T) W(t)f` with `f` a trigonometric
/// polynomial of degree `max_mode`, `T` drawn from `window` and
/// `|t₀| ≤ max_shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub count: usize,
    pub max_mode: u32,
    pub window: [f64; 2],
    pub max_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub a: f64,
    pub family: FamilyConfig,
    /// Grids the family is sampled on; checks compare consecutive entries.
    pub grids: Vec<NormGrid>,
    /// Largest tolerated `max/median` of the Strichartz ratio.
    pub stability_factor: f64,
    /// Extra norms reported for the first family member on the first grid.
    #[serde(default)]
    pub requests: Vec<gbo_core::bourgain::NormRequest>,
}

impl NormsConfig {
    pub fn validate(&self) -> Result<()> {
        check_a(self.a)?;
        ensure!(self.family.count >= 1, "family.count must be at least 1");
        ensure!(
            self.family.max_mode >= 1,
            "family.max_mode must be at least 1"
        );
        let [lo, hi] = self.family.window;
        ensure!(
            lo > 0.0 && hi >= lo,
            "family.window must satisfy 0 < lo <= hi"
        );
        ensure!(
            self.family.max_shift >= 0.0,
            "family.max_shift must be nonnegative"
        );
        ensure!(!self.grids.is_empty(), "grids is empty");
        ensure!(
            self.grids
                .iter()
                .all(|g| g.length_x == self.grids[0].length_x
                    && g.length_t == self.grids[0].length_t),
            "all grids must share length_x and length_t"
        );
        for g in &self.grids {
            ensure!(
                2.0 * (hi + self.family.max_shift) < g.length_t,
                "window {hi} shifted by {} does not fit a time box of {}",
                self.family.max_shift,
                g.length_t
            );
            ensure!(
                2 * self.family.max_mode as usize + 2 <= g.nx,
                "max_mode {} is not resolved by nx = {}",
                self.family.max_mode,
                g.nx
            );
            GridConfig {
                n: g.nx,
                length: g.length_x,
            }
            .grid()?;
            GridConfig {
                n: g.nt,
                length: g.length_t,
            }
            .grid()?;
        }
        check_positive("stability_factor", self.stability_factor)?;
        Ok(())
    }
}

// --------------------------------------------------------------- resonance

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubicCheck {
    pub points: usize,
    pub extent: f64,
    pub tolerance: f64,
}

/// Expected admissible-`b` window at one `a`; `lo`/`hi` ignored when empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowExpectation {
    pub a: f64,
    pub empty: bool,
    #[serde(default)]
    pub lo: f64,
    #[serde(default)]
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    pub a_values: Vec<f64>,
    /// Random pairs per `a`.
    pub samples: usize,
    /// `log₂|ξ₁|` range of the samples.
    pub log2_range: [f64; 2],
    /// Grid points of the brute-force minimization.
    pub constant_points: usize,
    /// Multiplier applied to the brute-force minima.
    pub safety: f64,
    #[serde(default)]
    pub cubic: Option<CubicCheck>,
    #[serde(default)]
    pub windows: Vec<WindowExpectation>,
    #[serde(default = "default_window_tol")]
    pub window_tolerance: f64,
}

fn default_window_tol() -> f64 {
    1e-12
}

impl ResonanceConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.a_values.is_empty(), "a_values is empty");
        for &a in &self.a_values {
            check_a(a)?;
        }
        ensure!(self.samples >= 1, "samples must be at least 1");
        ensure!(
            self.log2_range[0] <= self.log2_range[1],
            "log2_range must be increasing"
        );
        ensure!(
            self.constant_points >= 2,
            "constant_points must be at least 2"
        );
        ensure!(
            self.safety > 0.0 && self.safety <= 1.0,
            "safety must lie in (0, 1]"
        );
        for w in &self.windows {
            check_a(w.a)?;
        }
        Ok(())
    }
}

// ------------------------------------------------------------------- xfail

/// What a fitted slope is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `lhs / rhs`.
    Ratio,
    /// `ratio / Σ_j 2^{j(1/2−b)}` over the occupied layers.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum XfailExpectation {
    /// `|slope − target| ≤ tolerance` for the power-law fit in `N`.
    Exponent {
        quantity: Quantity,
        target: f64,
        tolerance: f64,
    },
    /// Power-law slope at most `limit`.
    MaxExponent { quantity: Quantity, limit: f64 },
    /// Affine in `log₂ N` with `R² > min_r2` and positive slope.
    LogAffine { quantity: Quantity, min_r2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XfailRun {
    pub a: f64,
    pub recipe: Recipe,
    pub b: f64,
    pub n_exponents: Vec<u32>,
    #[serde(default)]
    pub policy: Option<GridPolicy>,
    #[serde(default)]
    pub expect: Vec<XfailExpectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XfailConfig {
    pub runs: Vec<XfailRun>,
}

impl XfailConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.runs.is_empty(), "runs is empty");
        for r in &self.runs {
            check_a(r.a)?;
            ensure!(
                r.n_exponents.len() >= 4,
                "a fit needs at least 4 frequencies, got {}",
                r.n_exponents.len()
            );
            ensure!(r.b.is_finite(), "b must be finite");
            for &k in &r.n_exponents {
                ensure!(k <= 60, "N = 2^{k} is beyond double precision");
            }
        }
        Ok(())
    }
}

// ------------------------------------------------------------------ picard

/// Largest dyadic `δ` with `C_emp δ^{θ/2} a_ball < 1/2`, `C_emp` measured
/// by a probe run at `calibration`. Reported next to the fixed `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaRule {
    pub theta: f64,
    pub calibration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuityConfig {
    pub sizes: Vec<f64>,
    pub direction: InitialData,
    pub max_spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardTolerances {
    pub max_ratio: f64,
    pub residual: f64,
    pub evolve: f64,
}

impl Default for PicardTolerances {
    fn default() -> Self {
        Self {
            max_ratio: 0.5,
            residual: 1e-4,
            evolve: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    pub a: f64,
    pub grid: GridConfig,
    pub initial: InitialData,
    /// Rescale the data to this `F^{s*}` size when set.
    #[serde(default)]
    pub data_norm: Option<f64>,
    /// Cutoff scale of the run.
    pub delta: f64,
    #[serde(default)]
    pub delta_rule: Option<DeltaRule>,
    pub t_samples: usize,
    pub window_factor: f64,
    pub k_max: usize,
    pub tolerance: f64,
    /// Offsets added to `s*` for extra runs at higher regularity.
    #[serde(default)]
    pub regularity_offsets: Vec<f64>,
    /// Step of the time-stepping comparison run.
    pub evolve_dt: f64,
    #[serde(default)]
    pub continuity: Option<ContinuityConfig>,
    /// Cutoff scales for the contraction-factor sweep.
    #[serde(default)]
    pub delta_sweep: Vec<f64>,
    #[serde(default)]
    pub tolerances: PicardTolerances,
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        check_a(self.a)?;
        self.grid.grid()?;
        self.initial.validate()?;
        if let Some(n) = self.data_norm {
            ensure!(n >= 0.0 && n.is_finite(), "data_norm must be nonnegative");
        }
        ensure!(
            self.delta > 0.0 && self.delta <= 1.0,
            "delta must lie in (0, 1]"
        );
        if let Some(r) = self.delta_rule {
            check_positive("delta_rule.theta", r.theta)?;
            ensure!(
                r.calibration > 0.0 && r.calibration <= 1.0,
                "delta_rule.calibration must lie in (0, 1]"
            );
        }
        ensure!(self.k_max >= 1, "k_max must be at least 1");
        check_positive("tolerance", self.tolerance)?;
        check_positive("evolve_dt", self.evolve_dt)?;
        if let Some(c) = &self.continuity {
            ensure!(!c.sizes.is_empty(), "continuity.sizes is empty");
            c.direction.validate()?;
        }
        if !self.delta_sweep.is_empty() {
            ensure!(
                self.delta_sweep.len() >= 4,
                "delta_sweep needs at least 4 scales"
            );
        }
        Ok(())
    }
}

// ----------------------------------------------------------------- cutoffs

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LemmaExpectation {
    /// Every ratio within `max_spread` of the geometric mean.
    Flat { max_spread: f64 },
    /// Fit over `δ ≤ 1/8` within `tolerance` of `target`.
    TailSlope { target: f64, tolerance: f64 },
    /// Full-range slope strictly above `limit`.
    SlopeAbove { limit: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaSweep {
    pub label: String,
    pub lemma: CutoffLemma,
    /// `δ = 2^{−k}` for `k` in this inclusive range.
    pub delta_exponents: [u32; 2],
    /// Family widths `T = 2^{−k}` for `k` in this inclusive range (may start
    /// below zero).
    pub width_exponents: [i32; 2],
    pub t_samples: usize,
    pub expect: Vec<LemmaExpectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffsConfig {
    pub a: f64,
    pub grid: GridConfig,
    pub initial: InitialData,
    pub t_length: f64,
    pub sweeps: Vec<LemmaSweep>,
}

impl CutoffsConfig {
    pub fn validate(&self) -> Result<()> {
        check_a(self.a)?;
        self.grid.grid()?;
        self.initial.validate()?;
        check_positive("t_length", self.t_length)?;
        ensure!(!self.sweeps.is_empty(), "sweeps is empty");
        for s in &self.sweeps {
            ensure!(
                !s.label.is_empty()
                    && s.label
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'),
                "sweep label must be a non-empty [A-Za-z0-9_-] string, got {:?}",
                s.label
            );
            let [d0, d1] = s.delta_exponents;
            let [w0, w1] = s.width_exponents;
            ensure!(d0 <= d1, "{}: delta_exponents must be increasing", s.label);
            ensure!(w0 <= w1, "{}: width_exponents must be increasing", s.label);
            if d1 - d0 + 1 < 4 {
                bail!("{}: a fit needs at least 4 scales", s.label);
            }
            GridConfig {
                n: s.t_samples,
                length: self.t_length,
            }
            .grid()?;
        }
        Ok(())
    }
}
