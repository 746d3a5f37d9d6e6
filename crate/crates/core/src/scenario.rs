//! Scenario files.
//!
//! A scenario is a TOML document with a fixed set of keys; anything not
//! listed below is rejected.
//!
//! ```toml
//! name = "pulse"
//! t_end = 10.0
//! observer_cadence = 40
//! outputs = ["densities_csv", "residuals_csv", "summary_json"]
//!
//! [grid]
//! n_points = 256
//! length = 100.0
//! x_min = -50.0
//!
//! [params]            # every key optional
//! g = 1.0
//! h = 1.0
//! rho = 1.0
//! omega = 0.0
//! sigma = 0.0
//!
//! [solver]            # every key optional
//! dno_order = 4
//! dt = 2.5e-3
//! dealias = true
//! edge_guard_threshold = 1e-10   # "inf" disables the guard
//! edge_guard_fraction = 0.125
//!
//! [initial.gaussian]  # or [initial.zero_mass_pulse] / [initial.cosine_mode]
//! amplitude = 0.02
//! width = 4.0
//! center = -2.0
//! q_amplitude = 0.01
//!
//! [audit]             # every key optional
//! fit_tol = 1e-13
//! bulk_nz = 32
//! force_vorticity = false
//!
//! [[checks]]
//! id = "T2_conserved"
//! tolerance = 1e-6
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::bulk::PhysicalParams;
use crate::dno::{SolverConfig, SurfaceState, MAX_DNO_ORDER};
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
    pub length: f64,
    pub x_min: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub g: f64,
    pub h: f64,
    pub rho: f64,
    pub omega: f64,
    pub sigma: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        let p = PhysicalParams::default();
        Self {
            g: p.g,
            h: p.h,
            rho: p.rho,
            omega: p.omega,
            sigma: p.sigma,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dno_order: u32,
    pub dt: f64,
    pub dealias: bool,
    pub edge_guard_threshold: f64,
    pub edge_guard_fraction: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let c = SolverConfig::default();
        Self {
            dno_order: c.dno_order,
            dt: c.dt,
            dealias: c.dealias,
            edge_guard_threshold: c.edge_guard_threshold,
            edge_guard_fraction: c.edge_guard_fraction,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseShape {
    pub amplitude: f64,
    pub width: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub q_amplitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosineShape {
    pub amplitude: f64,
    pub mode_index: usize,
}

/// Initial surface and potential.
///
/// With `s = (x - center) / width`:
/// * `gaussian`: `eta = a exp(-s^2)`
/// * `zero_mass_pulse`: `eta = a (1 + s - 2 s^2) exp(-s^2)`, which has zero mean
/// * both: `q = q_amplitude (1 + s) exp(-s^2)`
/// * `cosine_mode`: `eta = a cos(2 pi m (x - x_min) / L)`, `q = 0`
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum InitialData {
    Gaussian(PulseShape),
    ZeroMassPulse(PulseShape),
    CosineMode(CosineShape),
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditOptions {
    pub fit_tol: f64,
    pub fit_max_iter: usize,
    pub bulk_nz: usize,
    pub mean_tolerance: f64,
    pub force_vorticity: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            fit_tol: 1e-13,
            fit_max_iter: 200,
            bulk_nz: 32,
            mean_tolerance: 1e-10,
            force_vorticity: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckEntry {
    pub id: String,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    DensitiesCsv,
    ResidualsCsv,
    SummaryJson,
    BulkCsv,
    FluxesCsv,
}

impl OutputKind {
    pub fn file_name(self) -> &'static str {
        match self {
            OutputKind::DensitiesCsv => "densities.csv",
            OutputKind::ResidualsCsv => "residuals.csv",
            OutputKind::SummaryJson => "summary.json",
            OutputKind::BulkCsv => "bulk.csv",
            OutputKind::FluxesCsv => "fluxes.csv",
        }
    }
}

fn default_outputs() -> Vec<OutputKind> {
    vec![
        OutputKind::DensitiesCsv,
        OutputKind::ResidualsCsv,
        OutputKind::SummaryJson,
    ]
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub t_end: f64,
    pub observer_cadence: usize,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
    pub grid: GridSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub initial: InitialData,
    #[serde(default)]
    pub audit: AuditOptions,
    #[serde(default)]
    pub checks: Vec<CheckEntry>,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::Validation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config {
            path: origin.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self
            .name
            .chars()
            .any(|c| !(c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'))
        {
            return Err(invalid("name", "use letters, digits, '_', '-' or '.'"));
        }
        positive("t_end", self.t_end)?;
        if self.observer_cadence == 0 {
            return Err(invalid("observer_cadence", "must be at least 1"));
        }
        let gs = &self.grid;
        if gs.n_points < 16 || !gs.n_points.is_power_of_two() {
            return Err(invalid(
                "grid.n_points",
                format!("must be a power of two >= 16, got {}", gs.n_points),
            ));
        }
        positive("grid.length", gs.length)?;
        if !gs.x_min.is_finite() {
            return Err(invalid("grid.x_min", "must be finite"));
        }
        let p = &self.params;
        positive("params.g", p.g)?;
        positive("params.h", p.h)?;
        positive("params.rho", p.rho)?;
        if !p.omega.is_finite() {
            return Err(invalid("params.omega", "must be finite"));
        }
        if !(p.sigma >= 0.0 && p.sigma.is_finite()) {
            return Err(invalid("params.sigma", format!("must be >= 0, got {}", p.sigma)));
        }
        let sv = &self.solver;
        if sv.dno_order > MAX_DNO_ORDER {
            return Err(invalid(
                "solver.dno_order",
                format!("must be in 0..={MAX_DNO_ORDER}, got {}", sv.dno_order),
            ));
        }
        positive("solver.dt", sv.dt)?;
        if !(sv.edge_guard_threshold > 0.0) {
            return Err(invalid("solver.edge_guard_threshold", "must be positive"));
        }
        if !(sv.edge_guard_fraction > 0.0 && sv.edge_guard_fraction < 0.5) {
            return Err(invalid("solver.edge_guard_fraction", "must lie in (0, 0.5)"));
        }
        let steps = self.t_end / sv.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(invalid(
                "t_end",
                format!("must be a whole number of steps of {}", sv.dt),
            ));
        }
        match &self.initial {
            InitialData::Gaussian(ps) | InitialData::ZeroMassPulse(ps) => {
                let kind = match self.initial {
                    InitialData::Gaussian(_) => "gaussian",
                    _ => "zero_mass_pulse",
                };
                positive(&format!("initial.{kind}.width"), ps.width)?;
                if !ps.amplitude.is_finite() || ps.amplitude.abs() >= p.h {
                    return Err(invalid(
                        &format!("initial.{kind}.amplitude"),
                        format!("must satisfy |amplitude| < h = {}", p.h),
                    ));
                }
                if !ps.center.is_finite() {
                    return Err(invalid(&format!("initial.{kind}.center"), "must be finite"));
                }
                if !ps.q_amplitude.is_finite() {
                    return Err(invalid(&format!("initial.{kind}.q_amplitude"), "must be finite"));
                }
            }
            InitialData::CosineMode(cs) => {
                if !cs.amplitude.is_finite() || cs.amplitude.abs() >= p.h {
                    return Err(invalid(
                        "initial.cosine_mode.amplitude",
                        format!("must satisfy |amplitude| < h = {}", p.h),
                    ));
                }
                if cs.mode_index == 0 || cs.mode_index > gs.n_points / 3 {
                    return Err(invalid(
                        "initial.cosine_mode.mode_index",
                        format!("must lie in 1..={}", gs.n_points / 3),
                    ));
                }
            }
        }
        let a = &self.audit;
        positive("audit.fit_tol", a.fit_tol)?;
        if a.fit_max_iter == 0 {
            return Err(invalid("audit.fit_max_iter", "must be at least 1"));
        }
        if a.bulk_nz < 8 {
            return Err(invalid("audit.bulk_nz", "must be at least 8"));
        }
        positive("audit.mean_tolerance", a.mean_tolerance)?;
        for (i, c) in self.checks.iter().enumerate() {
            if !crate::harness::is_known_check(&c.id) {
                return Err(invalid(&format!("checks[{i}].id"), format!("unknown check '{}'", c.id)));
            }
            if !(c.tolerance > 0.0) {
                return Err(invalid(
                    &format!("checks[{i}].tolerance"),
                    format!("must be positive, got {}", c.tolerance),
                ));
            }
            if c.id.ends_with("_ratio") && !self.observer_cadence.is_multiple_of(2) {
                return Err(invalid(
                    "observer_cadence",
                    format!("'{}' halves the observer spacing, so the cadence must be even", c.id),
                ));
            }
        }
        Ok(())
    }

    pub fn make_grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.grid.n_points, self.grid.length, self.grid.x_min)
    }

    pub fn physical_params(&self) -> PhysicalParams {
        let p = &self.params;
        PhysicalParams {
            g: p.g,
            h: p.h,
            rho: p.rho,
            omega: p.omega,
            sigma: p.sigma,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            dno_order: s.dno_order,
            dt: s.dt,
            dealias: s.dealias,
            edge_guard_threshold: s.edge_guard_threshold,
            edge_guard_fraction: s.edge_guard_fraction,
            mean_tolerance: self.audit.mean_tolerance,
        }
    }

    pub fn step_count(&self) -> usize {
        (self.t_end / self.solver.dt).round() as usize
    }

    pub fn initial_state(&self, grid: &PeriodicGrid) -> Result<SurfaceState> {
        let (eta, q) = match self.initial {
            InitialData::Gaussian(p) => {
                let s = move |x: f64| (x - p.center) / p.width;
                (
                    grid.from_fn(|x| p.amplitude * (-s(x) * s(x)).exp()),
                    grid.from_fn(|x| p.q_amplitude * (1.0 + s(x)) * (-s(x) * s(x)).exp()),
                )
            }
            InitialData::ZeroMassPulse(p) => {
                let s = move |x: f64| (x - p.center) / p.width;
                (
                    grid.from_fn(|x| {
                        let s = s(x);
                        p.amplitude * (1.0 + s - 2.0 * s * s) * (-s * s).exp()
                    }),
                    grid.from_fn(|x| p.q_amplitude * (1.0 + s(x)) * (-s(x) * s(x)).exp()),
                )
            }
            InitialData::CosineMode(c) => {
                let k = 2.0 * std::f64::consts::PI * c.mode_index as f64 / grid.length();
                let x0 = grid.x_min();
                (grid.from_fn(|x| c.amplitude * (k * (x - x0)).cos()), grid.zeros())
            }
        };
        SurfaceState::new(0.0, eta, q)
    }

    /// Copy with one physical parameter replaced.
    pub fn with_param(&self, axis: SweepAxis, value: f64) -> Scenario {
        let mut s = self.clone();
        match axis {
            SweepAxis::Omega => s.params.omega = value,
            SweepAxis::Sigma => s.params.sigma = value,
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Omega,
    Sigma,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Omega => "omega",
            SweepAxis::Sigma => "sigma",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "omega" => Ok(SweepAxis::Omega),
            "sigma" => Ok(SweepAxis::Sigma),
            other => Err(format!("unknown axis '{other}' (expected omega or sigma)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
t_end = 1.0
observer_cadence = 10

[grid]
n_points = 64
length = 40.0
x_min = -20.0

[initial.gaussian]
amplitude = 0.01
width = 2.0
"#;

    fn parse(text: &str) -> Result<Scenario> {
        Scenario::from_toml_str(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.solver.dno_order, 4);
        assert!(s.solver.dealias);
        assert_eq!(s.params, ParamsSection::default());
        assert_eq!(s.outputs, default_outputs());
        assert_eq!(s.step_count(), 400);
    }

    #[test]
    fn negative_width_names_the_field() {
        let text = MINIMAL.replace("width = 2.0", "width = -2.0");
        match parse(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "initial.gaussian.width"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = MINIMAL.replace("[grid]", "[params]\nvorticty = 0.5\n\n[grid]");
        let err = parse(&text).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config { .. }));
        assert!(msg.contains("vorticty"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn unknown_check_and_bad_tolerance() {
        let text = format!("{MINIMAL}\n[[checks]]\nid = \"T9_conserved\"\ntolerance = 1e-6\n");
        assert!(matches!(parse(&text), Err(Error::Validation { field, .. }) if field == "checks[0].id"));
        let text = format!("{MINIMAL}\n[[checks]]\nid = \"T2_conserved\"\ntolerance = 0.0\n");
        assert!(
            matches!(parse(&text), Err(Error::Validation { field, .. }) if field == "checks[0].tolerance")
        );
    }

    #[test]
    fn amplitude_must_stay_above_bed() {
        let text = MINIMAL.replace("amplitude = 0.01", "amplitude = 1.5");
        assert!(
            matches!(parse(&text), Err(Error::Validation { field, .. }) if field == "initial.gaussian.amplitude")
        );
    }

    #[test]
    fn infinite_guard_threshold_parses() {
        let text = format!("{MINIMAL}\n[solver]\nedge_guard_threshold = inf\n");
        let s = parse(&text).unwrap();
        assert!(s.solver.edge_guard_threshold.is_infinite());
    }

    #[test]
    fn zero_mass_pulse_has_zero_mean() {
        let text = MINIMAL.replace("[initial.gaussian]", "[initial.zero_mass_pulse]");
        let s = parse(&text).unwrap();
        let g = s.make_grid().unwrap();
        let st = s.initial_state(&g).unwrap();
        assert!(st.eta.mean().abs() < 1e-16);
    }
}
